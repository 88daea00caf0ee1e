use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::{read_descriptor_file, write_descriptor_file, DenseDescriptor};
use crate::error::{Error, Result};
use crate::eval::{
    build_cross_protocol, build_fvc_protocol, cmc_csv, cmc_curve, det_csv, det_curve, equal_error_rate, tar_at_far,
    EvalSummary, Pair, Protocol, SampleId, ScoreSet,
};
use crate::image::GrayImage;
use crate::matching::{format_sig9, fuse_scores, match_fused, score_csv_rows, GalleryIndex, SCORE_CSV_HEADER};
use crate::pose::{read_pose_file, write_pose_file, Pose2D, PoseTable};
use crate::synth::{apply_elastic_distortion, generate_synthetic_fingerprint, generate_synthetic_impression};

use super::config::{PoseSource, ProtocolSpec, RunConfig};
use super::pipeline::{baseline_pose, describe_at_pose, prepare, LoadedEnhancement};
use super::store::{read_store, write_store};

/// Impressions after the first are re-rendered within these perturbations
/// and elastically distorted.
const SYNTH_SHIFT: f64 = 20.0;
const SYNTH_ROTATION: f64 = 15.0;
const SYNTH_ELASTIC: f64 = 2.0;

const IMAGE_EXTS: [&str; 3] = ["png", "pgm", "pnm"];
const DESCRIPTOR_EXT: &str = "fdd";

/// What a command did: text for stdout, non-fatal warnings, and per-item
/// failures (any failure makes the process exit nonzero).
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
    pub failures: Vec<(String, Error)>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Files in `dir` with one of `exts`, sorted by name.
fn list_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if matches && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Image id for finger `f`, impression `i`.
pub fn synth_id(f: usize, i: usize) -> String {
    format!("f{f:04}_{i}")
}

/// Generator seed of finger `f` under run seed `seed`.
fn finger_seed(seed: u64, f: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(f as u64);
    rng.gen()
}

fn synth_one(cfg: &RunConfig, f: usize, i: usize) -> Result<(GrayImage, Pose2D)> {
    let seed = finger_seed(cfg.seed, f);
    let first = generate_synthetic_fingerprint(seed, cfg.synth_size)?;
    if i == 0 {
        return Ok((first.image, first.pose));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let pose = first.pose.perturb(
        rng.gen_range(-SYNTH_SHIFT..=SYNTH_SHIFT),
        rng.gen_range(-SYNTH_SHIFT..=SYNTH_SHIFT),
        rng.gen_range(-SYNTH_ROTATION..=SYNTH_ROTATION),
    )?;
    let print = generate_synthetic_impression(seed, cfg.synth_size, &pose)?;
    let image = apply_elastic_distortion(&print.image, rng.gen(), SYNTH_ELASTIC)?;
    Ok((image, pose))
}

/// `n_synth` fingers x `synth_impressions` images plus `poses.txt` and
/// `manifest.csv` under `output_dir`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Outcome> {
    let images = cfg.output_dir.join("images");
    create_dir(&images)?;
    let items: Vec<(usize, usize)> = (0..cfg.n_synth)
        .flat_map(|f| (0..cfg.synth_impressions).map(move |i| (f, i)))
        .collect();
    let results: Vec<Result<Pose2D>> = items
        .par_iter()
        .map(|&(f, i)| {
            let (image, pose) = synth_one(cfg, f, i)?;
            image.save(images.join(format!("{}.png", synth_id(f, i))))?;
            Ok(pose)
        })
        .collect();
    let mut out = Outcome::default();
    let mut table = PoseTable::new();
    let mut manifest = String::from("id,image,cx,cy,theta\n");
    for (&(f, i), r) in items.iter().zip(results) {
        let id = synth_id(f, i);
        match r {
            Ok(p) => {
                let _ = writeln!(manifest, "{id},images/{id}.png,{},{},{}", p.cx(), p.cy(), p.theta());
                table.insert(id, p);
            }
            Err(e) => out.failures.push((id, e)),
        }
    }
    write_pose_file(cfg.output_dir.join("poses.txt"), &table)?;
    write_text(&cfg.output_dir.join("manifest.csv"), &manifest)?;
    let _ = writeln!(out.stdout, "wrote {} images to {}", table.len(), images.display());
    Ok(out)
}

/// Warnings and `(variants, mask fraction)` for one image.
type ExtractResult = (Vec<String>, Result<(usize, f64)>);

/// One descriptor file with every configured variant per input image.
pub fn cmd_extract(cfg: &RunConfig) -> Result<Outcome> {
    let files = list_files(&cfg.input_dir, &IMAGE_EXTS)?;
    let poses = match &cfg.pose_file {
        Some(p) if cfg.variants.iter().any(|v| v.pose == PoseSource::File) => read_pose_file(p)?,
        _ => PoseTable::new(),
    };
    let enhancements = cfg
        .variants
        .iter()
        .map(|v| LoadedEnhancement::load(&v.enhance))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&cfg.output_dir)?;

    let results: Vec<ExtractResult> = files
        .par_iter()
        .map(|path| {
            let id = stem(path);
            let mut warnings = Vec::new();
            let r = (|| {
                let image = prepare(GrayImage::load(path)?)?;
                let mut baseline: Option<Pose2D> = None;
                let mut variants = Vec::with_capacity(cfg.variants.len());
                for (spec, enhance) in cfg.variants.iter().zip(&enhancements) {
                    let pose = match (spec.pose, poses.get(&id)) {
                        (PoseSource::File, Some(p)) => *p,
                        (PoseSource::File, None) if !cfg.pose_fallback => return Err(Error::PoseMissing(id.clone())),
                        _ => {
                            if spec.pose == PoseSource::File {
                                warnings.push(format!("{id}: pose missing from pose file, using baseline estimate"));
                            }
                            match baseline {
                                Some(p) => p,
                                None => *baseline.insert(baseline_pose(&image)?),
                            }
                        }
                    };
                    variants.push(describe_at_pose(&image, &pose, enhance)?);
                }
                write_descriptor_file(cfg.output_dir.join(format!("{id}.{DESCRIPTOR_EXT}")), &variants)?;
                Ok((variants.len(), variants[0].mask_fraction()))
            })();
            (warnings, r)
        })
        .collect();

    let mut out = Outcome::default();
    let mut csv = String::from("id,descriptor,variants,mask_fraction\n");
    let mut written = 0usize;
    for (path, (warnings, r)) in files.iter().zip(results) {
        let id = stem(path);
        out.warnings.extend(warnings);
        match r {
            Ok((k, frac)) => {
                written += 1;
                let _ = writeln!(csv, "{id},{id}.{DESCRIPTOR_EXT},{k},{}", format_sig9(frac));
            }
            Err(e) => out.failures.push((path.display().to_string(), e)),
        }
    }
    write_text(&cfg.output_dir.join("extract.csv"), &csv)?;
    let _ = writeln!(out.stdout, "extracted {written} of {} images", files.len());
    Ok(out)
}

/// Descriptor files in `dir`, sorted by name, checked for a common shape and
/// variant count.
fn load_descriptor_dir(dir: &Path) -> Result<Vec<(String, Vec<DenseDescriptor>)>> {
    let files = list_files(dir, &[DESCRIPTOR_EXT])?;
    let loaded: Vec<Result<Vec<DenseDescriptor>>> = files.par_iter().map(read_descriptor_file).collect();
    let mut entries: Vec<(String, Vec<DenseDescriptor>)> = Vec::with_capacity(files.len());
    for (path, r) in files.iter().zip(loaded) {
        let variants = r?;
        if let Some((_, first)) = entries.first() {
            let same = variants.len() == first.len() && variants.iter().all(|d| d.shape() == first[0].shape());
            if !same {
                return Err(Error::SizeMismatch(format!(
                    "{}: {} variants of shape {:?}, expected {} of shape {:?}",
                    path.display(),
                    variants.len(),
                    variants.first().map(|d| d.shape()),
                    first.len(),
                    first[0].shape()
                )));
            }
        }
        entries.push((stem(path), variants));
    }
    Ok(entries)
}

/// Builds the gallery store from every descriptor file in `input_dir`.
pub fn cmd_enroll(cfg: &RunConfig) -> Result<Outcome> {
    let entries = load_descriptor_dir(&cfg.input_dir)?;
    let index = GalleryIndex::enroll(entries.iter().cloned())?;
    if let Some(parent) = cfg.gallery.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_store(&cfg.gallery, &entries)?;
    Ok(Outcome {
        stdout: format!("enrolled {} ids into {}\n", index.len(), cfg.gallery.display()),
        ..Outcome::default()
    })
}

/// Top-k search of every query descriptor against the gallery store;
/// writes `search.csv` and prints a table.
pub fn cmd_search(cfg: &RunConfig) -> Result<Outcome> {
    let index = GalleryIndex::enroll(read_store(&cfg.gallery)?)?;
    let query_dir = cfg.query_dir.as_deref().unwrap_or(&cfg.input_dir);
    let files = list_files(query_dir, &[DESCRIPTOR_EXT])?;
    let results: Vec<Result<_>> = files
        .par_iter()
        .map(|path| {
            let query = read_descriptor_file(path)?;
            index.search(&query, cfg.top_k).map_err(|e| match e {
                Error::SizeMismatch(m) => Error::SizeMismatch(format!("{}: {m}", path.display())),
                other => other,
            })
        })
        .collect();
    let mut out = Outcome::default();
    let mut csv = format!("{SCORE_CSV_HEADER}\n");
    let _ = writeln!(
        out.stdout,
        "{:<24} {:>4} {:<24} {:>12}",
        "query", "rank", "gallery", "fused"
    );
    for (path, r) in files.iter().zip(results) {
        let id = stem(path);
        match r {
            Ok(hits) => {
                csv.push_str(&score_csv_rows(&id, &hits));
                for (rank, h) in hits.iter().enumerate() {
                    let _ = writeln!(
                        out.stdout,
                        "{:<24} {:>4} {:<24} {:>12}",
                        id,
                        rank + 1,
                        h.gallery_id,
                        format_sig9(h.fused_score)
                    );
                }
            }
            Err(e) => out.failures.push((path.display().to_string(), e)),
        }
    }
    create_dir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join("search.csv"), &csv)?;
    Ok(out)
}

/// Splits `<subject>_<impression>`.
fn parse_sample(id: &str) -> Result<(String, u32)> {
    id.rsplit_once('_')
        .and_then(|(s, i)| Some((s.to_string(), i.parse::<u32>().ok()?)))
        .filter(|(s, _)| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("descriptor id `{id}` is not <subject>_<impression>")))
}

/// Descriptor lookup keyed by subject index (sorted subject names) and
/// impression number.
struct SampleStore {
    subjects: Vec<String>,
    samples: HashMap<(u32, u32), Vec<DenseDescriptor>>,
    max_impressions: u32,
}

impl SampleStore {
    fn load(dir: &Path) -> Result<SampleStore> {
        let mut by_subject: BTreeMap<String, Vec<(u32, Vec<DenseDescriptor>)>> = BTreeMap::new();
        for (id, variants) in load_descriptor_dir(dir)? {
            let (subject, imp) = parse_sample(&id)?;
            by_subject.entry(subject).or_default().push((imp, variants));
        }
        let mut store = SampleStore {
            subjects: Vec::new(),
            samples: HashMap::new(),
            max_impressions: 0,
        };
        for (s, (name, imps)) in by_subject.into_iter().enumerate() {
            for (imp, v) in imps {
                store.max_impressions = store.max_impressions.max(imp + 1);
                store.samples.insert((s as u32, imp), v);
            }
            store.subjects.push(name);
        }
        Ok(store)
    }

    fn name(&self, s: SampleId) -> String {
        match self.subjects.get(s.subject as usize) {
            Some(n) => format!("{n}_{}", s.impression),
            None => format!("subject#{}_{}", s.subject, s.impression),
        }
    }

    fn get(&self, s: SampleId) -> Option<&[DenseDescriptor]> {
        self.samples.get(&(s.subject, s.impression)).map(Vec::as_slice)
    }
}

/// Protocol plus the closed-set identification layout used for the CMC:
/// one gallery impression per subject, every listed query impression.
struct EvalPlan {
    protocol: Protocol,
    gallery_impression: u32,
    query_impressions: Vec<u32>,
    subjects: u32,
}

fn plan(spec: ProtocolSpec, store: &SampleStore) -> Result<EvalPlan> {
    let spec = match spec {
        ProtocolSpec::Auto => ProtocolSpec::Fvc {
            fingers: store.subjects.len() as u32,
            impressions: store.max_impressions,
        },
        other => other,
    };
    Ok(match spec {
        ProtocolSpec::Fvc { fingers, impressions } => EvalPlan {
            protocol: build_fvc_protocol(fingers, impressions)?,
            gallery_impression: 0,
            query_impressions: (1..impressions).collect(),
            subjects: fingers,
        },
        ProtocolSpec::Cross {
            subjects,
            queries,
            gallery,
        } => {
            // Gallery impressions are numbered after the query impressions.
            let mut protocol = build_cross_protocol(subjects, queries, gallery)?;
            protocol
                .genuine
                .iter_mut()
                .chain(protocol.impostor.iter_mut())
                .for_each(|p| {
                    p.gallery.impression += queries;
                });
            EvalPlan {
                protocol,
                gallery_impression: queries,
                query_impressions: (0..queries).collect(),
                subjects,
            }
        }
        ProtocolSpec::Auto => unreachable!("resolved above"),
    })
}

fn score_pairs(store: &SampleStore, pairs: &[Pair]) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|p| {
            let q = store.get(p.query).expect("presence checked");
            let g = store.get(p.gallery).expect("presence checked");
            match_fused(q, g).map(|(f, _, _)| f)
        })
        .collect()
}

/// Protocol scores, DET, CMC and summary CSVs for the descriptors in
/// `input_dir` (named `<subject>_<impression>.fdd`).
pub fn cmd_eval(cfg: &RunConfig) -> Result<Outcome> {
    let store = SampleStore::load(&cfg.input_dir)?;
    let plan = plan(cfg.protocol, &store)?;

    let mut needed: Vec<SampleId> = plan
        .protocol
        .genuine
        .iter()
        .chain(&plan.protocol.impostor)
        .flat_map(|p| [p.query, p.gallery])
        .collect();
    for s in 0..plan.subjects {
        needed.push(SampleId::new(s, plan.gallery_impression));
        needed.extend(plan.query_impressions.iter().map(|&i| SampleId::new(s, i)));
    }
    needed.sort();
    needed.dedup();
    let missing: Vec<String> = needed
        .iter()
        .filter(|s| store.get(**s).is_none())
        .map(|s| store.name(*s))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Protocol(missing));
    }

    let scores = ScoreSet::new(
        score_pairs(&store, &plan.protocol.genuine)?,
        score_pairs(&store, &plan.protocol.impostor)?,
    );

    let gallery: Vec<(String, Vec<DenseDescriptor>)> = (0..plan.subjects)
        .map(|s| {
            let id = SampleId::new(s, plan.gallery_impression);
            (store.name(id), store.get(id).expect("presence checked").to_vec())
        })
        .collect();
    let index = GalleryIndex::enroll(gallery)?;
    let gallery_labels: Vec<u32> = (0..plan.subjects).collect();
    let mut query_labels = Vec::new();
    let mut matrix = Vec::new();
    for s in 0..plan.subjects {
        for &i in &plan.query_impressions {
            let q = store.get(SampleId::new(s, i)).expect("presence checked");
            let row = index
                .score_all(q)?
                .iter()
                .map(|v| fuse_scores(v).map(|(f, _)| f))
                .collect::<Result<Vec<_>>>()?;
            matrix.push(row);
            query_labels.push(s);
        }
    }
    let cmc = cmc_curve(&matrix, &gallery_labels, &query_labels)?;
    let det = det_curve(&scores)?;
    let summary = EvalSummary {
        rank1: cmc.first().copied().unwrap_or(0.0),
        tar_at_1e3: tar_at_far(&scores, 1e-3)?,
        tar_at_1e4: tar_at_far(&scores, 1e-4)?,
        eer: equal_error_rate(&scores)?,
        n_genuine: plan.protocol.n_genuine(),
        n_impostor: plan.protocol.n_impostor(),
    };
    create_dir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join("det.csv"), &det_csv(&det))?;
    write_text(&cfg.output_dir.join("cmc.csv"), &cmc_csv(&cmc))?;
    let summary_csv = summary.to_csv();
    write_text(&cfg.output_dir.join("summary.csv"), &summary_csv)?;
    Ok(Outcome {
        stdout: summary_csv,
        ..Outcome::default()
    })
}
