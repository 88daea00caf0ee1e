//! End-to-end runs of the `densefp` binary on small synthetic sets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use densefp::descriptor::{read_descriptor_file, write_descriptor_file, DenseDescriptor};

fn densefp(dir: &Path, sets: &[&str], cmd: &str) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_densefp"));
    c.current_dir(dir).args(["--jobs", "1"]);
    for s in sets {
        c.args(["--set", s]);
    }
    c.arg(cmd).output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

/// Synthesizes `fingers x 2` prints into `dir/synth` and extracts them into
/// `dir/desc` with `variants`.
fn synth_and_extract(dir: &Path, fingers: usize, variants: &str) -> PathBuf {
    ok(densefp(
        dir,
        &[
            &format!("n_synth={fingers}"),
            "synth_impressions=2",
            "output_dir=synth",
            "seed=3",
        ],
        "synth",
    ));
    ok(densefp(
        dir,
        &[
            "input_dir=synth/images",
            "output_dir=desc",
            "pose_file=synth/poses.txt",
            &format!("variants={variants}"),
        ],
        "extract",
    ));
    dir.join("desc")
}

#[test]
fn synth_with_zero_prints_writes_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(densefp(dir.path(), &["n_synth=0"], "synth"));
    assert_eq!(read(dir.path().join("out/manifest.csv")), "id,image,cx,cy,theta\n");
    assert_eq!(
        read(dir.path().join("out/poses.txt"))
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        0
    );
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "n_synth=2".to_string(),
            "synth_impressions=2".into(),
            format!("output_dir={out}"),
        ]
    };
    let a = args("a");
    let b = args("b");
    ok(densefp(
        dir.path(),
        &a.iter().map(String::as_str).collect::<Vec<_>>(),
        "synth",
    ));
    ok(densefp(
        dir.path(),
        &b.iter().map(String::as_str).collect::<Vec<_>>(),
        "synth",
    ));
    for f in ["manifest.csv", "poses.txt", "images/f0000_0.png", "images/f0001_1.png"] {
        let (x, y) = (
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
        );
        assert!(x == y, "{f} differs between runs");
    }
    assert_eq!(read(dir.path().join("a/manifest.csv")).lines().count(), 5);

    // A different seed gives different prints.
    ok(densefp(dir.path(), &["n_synth=1", "output_dir=c", "seed=1"], "synth"));
    assert_ne!(
        fs::read(dir.path().join("a/images/f0000_0.png")).unwrap(),
        fs::read(dir.path().join("c/images/f0000_0.png")).unwrap()
    );
}

#[test]
fn extract_four_variants() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("mild.recipe"),
        "blur_sigma = 1.0\ndryness = 0.25\nseed = 5\n",
    )
    .unwrap();
    ok(densefp(dir.path(), &["n_synth=1", "output_dir=synth"], "synth"));
    let variants = "file/clean,baseline/clean,file/recipe:mild.recipe,baseline/histmatch:synth/images/f0000_0.png";
    let desc = synth_and_extract(dir.path(), 2, variants);
    let csv = read(desc.join("extract.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "4", "{row}");
        let frac: f64 = cols[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&frac));
    }
    let d = read_descriptor_file(desc.join("f0001_1.fdd")).unwrap();
    assert_eq!(d.len(), 4);
    assert!(d.iter().all(|v| v.shape() == (12, 16, 16)));
    // Clean and degraded variants at the same pose differ.
    assert_ne!(d[0].values(), d[2].values());
}

#[test]
fn enroll_search_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let desc = synth_and_extract(dir.path(), 2, "file/clean");
    let gallery = dir.path().join("gdesc");
    let queries = dir.path().join("qdesc");
    fs::create_dir_all(&gallery).unwrap();
    fs::create_dir_all(&queries).unwrap();
    for f in 0..2 {
        fs::copy(
            desc.join(format!("f000{f}_0.fdd")),
            gallery.join(format!("f000{f}_0.fdd")),
        )
        .unwrap();
        fs::copy(
            desc.join(format!("f000{f}_1.fdd")),
            queries.join(format!("f000{f}_1.fdd")),
        )
        .unwrap();
    }
    ok(densefp(dir.path(), &["input_dir=gdesc", "gallery=g.fdg"], "enroll"));
    let out = ok(densefp(
        dir.path(),
        &["query_dir=qdesc", "gallery=g.fdg", "output_dir=search", "top_k=3"],
        "search",
    ));
    assert!(String::from_utf8_lossy(&out.stdout).contains("f0000_1"));
    let csv = read(dir.path().join("search/search.csv"));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // One variant: one row per hit. top_k larger than the gallery returns
    // every entry once per query.
    assert_eq!(rows.len(), 4);
    for q in ["f0000_1", "f0001_1"] {
        let mine: Vec<_> = rows.iter().filter(|r| r[0] == q).collect();
        assert_eq!(mine.len(), 2);
        assert_eq!(mine[0][1], q.replace("_1", "_0"), "mate not ranked first for {q}");
    }

    ok(densefp(
        dir.path(),
        &["input_dir=desc", "output_dir=eval", "protocol=fvc:2x2"],
        "eval",
    ));
    let summary = read(dir.path().join("eval/summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rank1,tar@1e-3,tar@1e-4,eer,n_genuine,n_impostor"
    );
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(values[0].parse::<f64>().unwrap(), 1.0);
    // FVC 2x2: one genuine pair per finger, one impostor pair.
    assert_eq!((values[4], values[5]), ("2", "1"));
    assert!(read(dir.path().join("eval/det.csv")).starts_with("far,frr\n"));
    assert!(read(dir.path().join("eval/cmc.csv")).starts_with("rank,accuracy\n"));
}

#[test]
fn search_on_empty_gallery_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let desc = synth_and_extract(dir.path(), 1, "file/clean");
    fs::create_dir_all(dir.path().join("empty")).unwrap();
    ok(densefp(dir.path(), &["input_dir=empty", "gallery=g.fdg"], "enroll"));
    ok(densefp(
        dir.path(),
        &[
            &format!("query_dir={}", desc.display()),
            "gallery=g.fdg",
            "output_dir=search",
        ],
        "search",
    ));
    let csv = read(dir.path().join("search/search.csv"));
    assert_eq!(csv.lines().count(), 1, "{csv}");
}

#[test]
fn missing_pose_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    ok(densefp(dir.path(), &["n_synth=2", "output_dir=synth"], "synth"));
    let poses = read(dir.path().join("synth/poses.txt"));
    let kept: String = poses
        .lines()
        .filter(|l| !l.starts_with("f0001"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("partial.txt"), kept).unwrap();

    let base = ["input_dir=synth/images", "pose_file=partial.txt", "variants=file/clean"];
    let out = densefp(dir.path(), &[&base[..], &["output_dir=strict"]].concat(), "extract");
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("f0001_0"), "{err}");
    assert!(dir.path().join("strict/f0000_0.fdd").exists());
    assert!(!dir.path().join("strict/f0001_0.fdd").exists());

    let out = ok(densefp(
        dir.path(),
        &[&base[..], &["output_dir=lenient", "pose_fallback=true"]].concat(),
        "extract",
    ));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: f0001_0"));
    assert!(dir.path().join("lenient/f0001_0.fdd").exists());
}

#[test]
fn shape_mismatch_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let desc = synth_and_extract(dir.path(), 1, "file/clean");
    let odd = DenseDescriptor::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
    write_descriptor_file(desc.join("zz_odd.fdd"), &[odd]).unwrap();
    let out = densefp(dir.path(), &["input_dir=desc", "gallery=g.fdg"], "enroll");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz_odd.fdd"));

    // A query of the wrong shape against a good gallery.
    fs::remove_file(desc.join("zz_odd.fdd")).unwrap();
    ok(densefp(dir.path(), &["input_dir=desc", "gallery=g.fdg"], "enroll"));
    let qdir = dir.path().join("q");
    fs::create_dir_all(&qdir).unwrap();
    let odd = DenseDescriptor::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
    write_descriptor_file(qdir.join("bad_0.fdd"), &[odd]).unwrap();
    let out = densefp(dir.path(), &["query_dir=q", "gallery=g.fdg", "output_dir=s"], "search");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad_0.fdd"));
}

#[test]
fn bad_settings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for set in ["colour=red", "top_k=0", "descriptor_d=5", "variants=file/clean"] {
        let out = densefp(dir.path(), &[set], "synth");
        assert!(!out.status.success(), "{set} accepted");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"), "{set}");
    }
}
