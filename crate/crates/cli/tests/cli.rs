use std::path::Path;
use std::process::{Command, Output};

use clbp_core::synth::{write_dataset, SynthConfig};

fn clbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clbp"))
        .args(args)
        .env_remove("CLBP_CONFIG")
        .output()
        .expect("spawn clbp")
}

fn ok(args: &[&str]) -> String {
    let out = clbp(args);
    assert!(
        out.status.success(),
        "clbp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn dataset(dir: &Path, subjects: usize, samples: usize) {
    let cfg = SynthConfig {
        subjects,
        samples,
        width: 96,
        height: 96,
        seed: 3,
    };
    write_dataset(&cfg, dir).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn enroll_then_identify_ranks_true_subject_first() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 3, 3);
    std::fs::write(data.join("README.txt"), "not an image").unwrap();
    let gallery = tmp.path().join("g.gallery");

    let summary = ok(&["enroll", s(&data), "--gallery", s(&gallery), "--bins", "32"]);
    assert!(summary.contains("9 sample(s) of 3 subject(s)"), "{summary}");
    assert!(gallery.exists());

    let probe = data.join("s01").join("02.png");
    let ranking = ok(&[
        "identify",
        s(&probe),
        "--gallery",
        s(&gallery),
        "--top",
        "2",
    ]);
    let lines: Vec<&str> = ranking.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("1\ts01\t"), "{ranking}");

    let mv = ok(&[
        "identify",
        s(&probe),
        "--gallery",
        s(&gallery),
        "--fusion",
        "mv",
    ]);
    assert!(mv.starts_with("1\ts01\t"), "{mv}");
}

#[test]
fn detect_writes_crop_and_mask() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path(), 1, 1);
    let img = tmp.path().join("s00").join("00.png");
    let crop = tmp.path().join("crop.png");
    let mask = tmp.path().join("mask.png");
    let bbox = ok(&["detect", s(&img), "--crop", s(&crop), "--mask", s(&mask)]);
    let v: Vec<usize> = bbox
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(v.len(), 4);
    assert!(v[0] + v[2] <= 96 && v[1] + v[3] <= 96 && v[2] < 96);
    let c = image::image_dimensions(&crop).unwrap();
    assert_eq!(c, (v[2] as u32, v[3] as u32));
    assert_eq!(image::image_dimensions(&mask).unwrap(), c);
}

#[test]
fn enhance_reports_zeta_and_writes_png() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path(), 1, 1);
    let img = tmp.path().join("s00").join("00.png");
    let out = tmp.path().join("e.png");
    let text = ok(&["enhance", s(&img), s(&out), "--method", "svd"]);
    let zeta: f64 = text.trim().strip_prefix("zeta ").unwrap().parse().unwrap();
    assert!(zeta.is_finite() && zeta > 0.0);
    assert!(out.exists());

    let rgb = tmp.path().join("rgb.png");
    ok(&["enhance", s(&img), s(&rgb), "--space", "rgb"]);
    assert_eq!(image::image_dimensions(&rgb).unwrap(), (96, 96));
}

#[test]
fn evaluate_prints_table_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 3, 4);
    let csv = tmp.path().join("rates.csv");
    let table = ok(&[
        "evaluate",
        s(&data),
        "--train-counts",
        "1,2",
        "--trials",
        "2",
        "--seed",
        "4",
        "--bin-counts",
        "16",
        "--csv",
        s(&csv),
    ]);
    assert!(table.contains("FVF"), "{table}");
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("train_count,rule,bins,rate"));
    assert_eq!(lines.count(), 2 * 4);
}

#[test]
fn analyze_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 3, 3);

    let theta = ok(&["analyze", s(&data), "--report", "theta", "--bins", "16"]);
    assert_eq!(theta.lines().count(), 1 + 3, "{theta}");

    let mi = ok(&["analyze", s(&data), "--report", "mi"]);
    let rows: Vec<&str> = mi.lines().collect();
    assert_eq!(rows.len(), 7);
    // Diagonal is a channel against itself.
    assert_eq!(rows[1].split('\t').nth(1), Some("100.00"));

    let prefix = tmp.path().join("curve");
    let roc = ok(&[
        "analyze",
        s(&data),
        "--report",
        "roc",
        "--bins",
        "16",
        "--out",
        s(&prefix),
    ]);
    assert!(roc.contains("genuine 9 impostor 27"), "{roc}");
    let far = std::fs::read_to_string(tmp.path().join("curve_far.tsv")).unwrap();
    assert!(far.lines().all(|l| l.split('\t').count() == 2));
}

#[test]
fn config_file_and_flag_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 2, 2);
    let conf = tmp.path().join("clbp.conf");
    std::fs::write(
        &conf,
        "# coarse\nbins = 8\nchannels = Cb,Y\nspace = ycbcr\n",
    )
    .unwrap();
    let gallery = tmp.path().join("g.gallery");
    ok(&[
        "--config",
        s(&conf),
        "enroll",
        s(&data),
        "--gallery",
        s(&gallery),
    ]);
    let text = std::fs::read_to_string(&gallery).unwrap();
    assert!(text.contains("bins=8"));
    assert!(text.contains("channels=Y,Cb"));

    for flags in [["--bins", "1"], ["--channels", "H,Cb"]] {
        let bad = clbp(&[
            "enroll",
            s(&data),
            "--gallery",
            s(&gallery),
            flags[0],
            flags[1],
        ]);
        assert!(!bad.status.success());
        let err = String::from_utf8(bad.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("clbp: error:"));
    }

    let missing = clbp(&[
        "identify",
        s(&data.join("nope.png")),
        "--gallery",
        s(&gallery),
    ]);
    assert!(!missing.status.success());
}
