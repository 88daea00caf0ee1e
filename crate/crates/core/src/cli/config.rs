//! Run configuration: line-based `key = value` text.
//!
//! Relative paths resolve against the directory of the config file (or the
//! working directory when no file is given).

use std::path::{Path, PathBuf};

use crate::descriptor::{DEFAULT_D, GRID};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoseSource {
    /// Centroid and principal axis of the segmented foreground.
    Baseline,
    /// Looked up by image id in `pose_file`.
    File,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Enhancement {
    Clean,
    /// Histogram-match to a reference image.
    HistMatch(PathBuf),
    /// Apply a degradation recipe file.
    Recipe(PathBuf),
}

/// One descriptor variant: `pose/enhancement`, for example `file/clean` or
/// `baseline/recipe:mild.recipe`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariantSpec {
    pub pose: PoseSource,
    pub enhance: Enhancement,
}

impl VariantSpec {
    pub fn parse(text: &str, base: &Path) -> Result<VariantSpec> {
        let bad = || {
            Error::Config(format!(
                "bad variant `{text}`; expected <baseline|file>/<clean|histmatch:PATH|recipe:PATH>"
            ))
        };
        let (pose, enhance) = text.trim().split_once('/').ok_or_else(bad)?;
        let pose = match pose {
            "baseline" => PoseSource::Baseline,
            "file" => PoseSource::File,
            _ => return Err(bad()),
        };
        let enhance = match enhance.split_once(':') {
            None if enhance == "clean" => Enhancement::Clean,
            Some(("histmatch", p)) if !p.is_empty() => Enhancement::HistMatch(base.join(p)),
            Some(("recipe", p)) if !p.is_empty() => Enhancement::Recipe(base.join(p)),
            _ => return Err(bad()),
        };
        Ok(VariantSpec { pose, enhance })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolSpec {
    /// FVC layout inferred from the descriptors present.
    Auto,
    Fvc {
        fingers: u32,
        impressions: u32,
    },
    Cross {
        subjects: u32,
        queries: u32,
        gallery: u32,
    },
}

impl ProtocolSpec {
    /// `auto`, `fvc:FxI` or `cross:SxQxG`.
    pub fn parse(text: &str) -> Result<ProtocolSpec> {
        let bad = || Error::Config(format!("bad protocol `{text}`; expected auto, fvc:FxI or cross:SxQxG"));
        let text = text.trim();
        if text == "auto" {
            return Ok(ProtocolSpec::Auto);
        }
        let (kind, dims) = text.split_once(':').ok_or_else(bad)?;
        let dims = dims
            .split('x')
            .map(|d| d.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        match (kind, dims.as_slice()) {
            ("fvc", &[fingers, impressions]) => Ok(ProtocolSpec::Fvc { fingers, impressions }),
            ("cross", &[subjects, queries, gallery]) => Ok(ProtocolSpec::Cross {
                subjects,
                queries,
                gallery,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Gallery store written by `enroll` and read by `search`.
    pub gallery: PathBuf,
    /// Query descriptors for `search`; defaults to `input_dir`.
    pub query_dir: Option<PathBuf>,
    pub pose_file: Option<PathBuf>,
    /// Use the baseline estimate when `pose_file` lacks an image.
    pub pose_fallback: bool,
    pub variants: Vec<VariantSpec>,
    pub descriptor_d: usize,
    pub grid: usize,
    pub protocol: ProtocolSpec,
    pub top_k: usize,
    pub n_synth: usize,
    pub synth_impressions: usize,
    pub synth_size: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn defaults(base: &Path) -> RunConfig {
        RunConfig {
            input_dir: base.to_path_buf(),
            output_dir: base.join("out"),
            gallery: base.join("gallery.fdg"),
            query_dir: None,
            pose_file: None,
            pose_fallback: false,
            variants: vec![VariantSpec {
                pose: PoseSource::Baseline,
                enhance: Enhancement::Clean,
            }],
            descriptor_d: DEFAULT_D,
            grid: GRID,
            protocol: ProtocolSpec::Auto,
            top_k: 10,
            n_synth: 10,
            synth_impressions: 1,
            synth_size: 512,
            seed: 0,
        }
    }

    pub fn parse(text: &str, base: &Path) -> Result<RunConfig> {
        let mut c = RunConfig::defaults(base);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            c.set(key.trim(), value.trim(), base)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    /// Applies one setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let err = || Error::Config(format!("bad value `{value}` for `{key}`"));
        let int = || value.parse::<usize>().map_err(|_| err());
        match key {
            "input_dir" => self.input_dir = base.join(value),
            "output_dir" => self.output_dir = base.join(value),
            "gallery" => self.gallery = base.join(value),
            "query_dir" => self.query_dir = Some(base.join(value)),
            "pose_file" => self.pose_file = Some(base.join(value)),
            "pose_fallback" => self.pose_fallback = value.parse::<bool>().map_err(|_| err())?,
            "variants" => {
                self.variants = value
                    .split(',')
                    .filter(|v| !v.trim().is_empty())
                    .map(|v| VariantSpec::parse(v, base))
                    .collect::<Result<_>>()?
            }
            "descriptor_d" => self.descriptor_d = int()?,
            "grid" => self.grid = int()?,
            "protocol" => self.protocol = ProtocolSpec::parse(value)?,
            "top_k" => self.top_k = int()?,
            "n_synth" => self.n_synth = int()?,
            "synth_impressions" => self.synth_impressions = int()?,
            "synth_size" => self.synth_size = int()?,
            "seed" => self.seed = value.parse::<u64>().map_err(|_| err())?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if self.descriptor_d == 0 || !self.descriptor_d.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "descriptor_d must be even, got {}",
                self.descriptor_d
            )));
        }
        if self.descriptor_d != DEFAULT_D || self.grid != GRID {
            return Err(Error::Config(format!(
                "the baseline extractor produces D={DEFAULT_D} on a {GRID}x{GRID} grid"
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.synth_impressions == 0 {
            return Err(Error::Config("synth_impressions must be at least 1".into()));
        }
        if self.pose_file.is_none() && self.variants.iter().any(|v| v.pose == PoseSource::File) {
            return Err(Error::Config("a `file` pose variant needs pose_file".into()));
        }
        Ok(())
    }
}
