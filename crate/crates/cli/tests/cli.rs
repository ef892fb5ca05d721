use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn imgts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imgts"))
        .args(args)
        .env_remove("IMGTS_OUT_DIR")
        .env_remove("IMGTS_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = imgts(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str]) -> String {
    let out = imgts(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".resolved.ini"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn values(csv: &Path) -> Vec<Option<f64>> {
    fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let cell = l.split(',').nth(1).unwrap();
            (!cell.is_empty()).then(|| cell.parse().unwrap())
        })
        .collect()
}

fn write_series(path: &Path, xs: &[f64]) {
    let mut text = String::from("t,ch0\n");
    for (i, x) in xs.iter().enumerate() {
        text.push_str(&format!("{i},{x}\n"));
    }
    fs::write(path, text).unwrap();
}

/// Parses a P5 file written by the encoder (no comments).
fn pgm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let header = String::from_utf8_lossy(&bytes[..32]).into_owned();
    let mut it = header.split_ascii_whitespace();
    assert_eq!(it.next(), Some("P5"));
    let w: usize = it.next().unwrap().parse().unwrap();
    let h: usize = it.next().unwrap().parse().unwrap();
    let px = bytes[bytes.len() - w * h..].to_vec();
    (w, h, px)
}

#[test]
fn generate_counts_and_determinism() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        ok(&["generate", "-n", "3", "--seed", "7", "--length", "200", "--out-dir", s(d.path())]);
    }
    let fa = files(a.path());
    assert_eq!(fa.len(), 4);
    assert_eq!(fa, files(b.path()));
    let manifest = fs::read_to_string(a.path().join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 4);
    assert!(!manifest.contains('\r'));
}

#[test]
fn snapshot_replays_auto_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(&["generate", "-n", "2", "--length", "128", "--out-dir", s(a.path())]);
    let snap = a.path().join("generate.resolved.ini");
    let text = fs::read_to_string(&snap).unwrap();
    assert!(text.contains("; auto\nseed = "), "{text}");
    ok(&["--config", s(&snap), "generate", "--out-dir", s(b.path())]);
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn config_file_precedence() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("settings.ini");
    fs::write(&cfg, "[run]\nseed = 3\n\n[generate]\nn = 2\nlength = 64\n").unwrap();
    ok(&["--config", s(&cfg), "generate", "--length", "80", "--out-dir", s(d.path())]);
    let snap = fs::read_to_string(d.path().join("generate.resolved.ini")).unwrap();
    assert!(snap.contains("; file\nseed = 3\n"));
    assert!(snap.contains("; file\nn = 2\n"));
    assert!(snap.contains("; flag\nlength = 80\n"));
    assert_eq!(values(&d.path().join("series_000001.csv")).len(), 80);
}

#[test]
fn out_dir_from_environment() {
    let d = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_imgts"))
        .args(["solve-ms", "--h", "64", "--k", "1"])
        .env("IMGTS_OUT_DIR", d.path())
        .env("IMGTS_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.path().join("optimal_ms.csv").exists());
    let snap = fs::read_to_string(d.path().join("solve-ms.resolved.ini")).unwrap();
    assert!(snap.contains("threads = 1"));
}

#[test]
fn encode_decode_roundtrip_within_bin() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    ok(&["generate", "-n", "1", "--seed", "11", "--length", "300", "--out-dir", s(dir)]);
    let input = dir.join("series_000000.csv");
    ok(&["encode", "--input", s(&input), "--h", "128", "--ms", "3.5", "--out-dir", s(dir)]);
    ok(&["decode", "--input", s(&dir.join("series_000000.meta")), "--out-dir", s(dir)]);
    let orig = values(&input);
    let back = values(&dir.join("series_000000.decoded.csv"));
    assert_eq!(orig.len(), back.len());
    let mut checked = 0;
    for (a, b) in orig.iter().zip(&back) {
        let (a, b) = (a.unwrap(), b.unwrap());
        if a.abs() < 3.5 {
            // CSV values carry 9 significant digits
            assert!((a - b).abs() <= 3.5 / 128.0 + 1e-8, "{a} vs {b}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn normalized_interpolated_roundtrip() {
    let d = TempDir::new().unwrap();
    let dir = d.path();
    let xs: Vec<f64> = (0..200).map(|t| 10.0 + 2.0 * (t as f64 / 9.0).sin()).collect();
    let input = dir.join("wave.csv");
    write_series(&input, &xs);
    ok(&["encode", "--input", s(&input), "--normalize", "--interpolate", "--out-dir", s(dir)]);
    let (w, h, _) = pgm(&dir.join("wave.ch0.pgm"));
    assert_eq!((w, h), (400, 128));
    ok(&["decode", "--input", s(&dir.join("wave")), "--out-dir", s(dir)]);
    let back = values(&dir.join("wave.decoded.csv"));
    assert_eq!(back.len(), 200);
    // one bin in z units is 3.5/128 std; the std here is sqrt(2)
    for (a, b) in xs.iter().zip(&back) {
        assert!((a - b.unwrap()).abs() < 2.0 * 1.42 * 3.5 / 128.0);
    }
}

#[test]
fn constant_series_single_row() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("zero.csv");
    write_series(&input, &[0.0; 50]);
    ok(&["encode", "--input", s(&input), "--h", "16", "--ms", "2", "--out-dir", s(d.path())]);
    let (w, h, px) = pgm(&d.path().join("zero.ch0.pgm"));
    assert_eq!((w, h), (50, 16));
    let mut rows = Vec::new();
    for col in 0..w {
        let active: Vec<usize> = (0..h).filter(|r| px[r * w + col] == 255).collect();
        assert_eq!(active.len(), 1);
        assert!((0..h).all(|r| px[r * w + col] == 0 || px[r * w + col] == 255));
        rows.push(active[0]);
    }
    assert!(rows.iter().all(|r| *r == rows[0]));
}

#[test]
fn missing_values_survive_roundtrip() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("gaps.csv");
    fs::write(&input, "t,ch0\n0,0.5\n1,\n2,-1\n3,\n").unwrap();
    ok(&["encode", "--input", s(&input), "--out-dir", s(d.path())]);
    let meta = fs::read_to_string(d.path().join("gaps.meta")).unwrap();
    assert!(meta.contains("missing_marker = zero-column"));
    ok(&["decode", "--input", s(&d.path().join("gaps")), "--out-dir", s(d.path())]);
    let back = values(&d.path().join("gaps.decoded.csv"));
    assert!(back[0].is_some() && back[1].is_none() && back[2].is_some() && back[3].is_none());
    let err = fail(&["encode", "--input", s(&input), "--blur", "--out-dir", s(d.path())]);
    assert!(err.contains("missing values"));
}

#[test]
fn decode_rejects_non_one_hot() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("x.csv");
    write_series(&input, &[0.0, 1.0, -1.0]);
    ok(&["encode", "--input", s(&input), "--h", "8", "--out-dir", s(d.path())]);
    let pgm_path = d.path().join("x.ch0.pgm");
    let mut bytes = fs::read(&pgm_path).unwrap();
    let n = bytes.len();
    // light every pixel of the bottom raster row: two active rows per column
    for b in &mut bytes[n - 3..] {
        *b = 255;
    }
    fs::write(&pgm_path, &bytes).unwrap();
    let err = fail(&["decode", "--input", s(&d.path().join("x")), "--out-dir", s(d.path())]);
    assert!(err.contains("structural"), "{err}");

    let missing = d.path().join("absent");
    let err = fail(&["decode", "--input", s(&missing), "--out-dir", s(d.path())]);
    assert!(err.contains("absent.meta"), "{err}");
}

#[test]
fn decode_names_malformed_file() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("y.csv");
    write_series(&input, &[0.0, 1.0]);
    ok(&["encode", "--input", s(&input), "--out-dir", s(d.path())]);
    fs::write(d.path().join("y.ch0.pgm"), b"P2\n2 128\n255\n").unwrap();
    let err = fail(&["decode", "--input", s(&d.path().join("y")), "--out-dir", s(d.path())]);
    assert!(err.contains("y.ch0.pgm"), "{err}");
}

#[test]
fn solve_ms_rows() {
    let d = TempDir::new().unwrap();
    let out = ok(&["solve-ms", "--h", "128", "--k", "1", "--out-dir", s(d.path())]);
    assert!(out.lines().nth(1).unwrap().starts_with("128,1,2.64"), "{out}");
    let out = ok(&["solve-ms", "--h", "32", "--k", "2", "--scaling", "mixed", "--out-dir", s(d.path())]);
    let ms: f64 = out.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((ms - 3.03).abs() <= 0.01, "{ms}");
    let out = ok(&["solve-ms", "--h", "", "--out-dir", s(d.path())]);
    assert_eq!(out, "h,k,ms_star,residual\n");
    assert_eq!(fs::read_to_string(d.path().join("optimal_ms.csv")).unwrap(), out);
}

fn dataset(dir: &Path) -> PathBuf {
    ok(&["generate", "-n", "1", "--seed", "5", "--length", "1024", "--out-dir", s(dir)]);
    dir.join("series_000000.csv")
}

const SMALL: [&str; 4] = ["--lookback", "96", "--horizons", "24,48"];

#[test]
fn evaluate_oracle_scores_zero() {
    let d = TempDir::new().unwrap();
    let data = dataset(d.path());
    let mut args = vec!["evaluate", "--dataset", s(&data), "--model", "oracle", "--out-dir", s(d.path())];
    args.extend(SMALL);
    let out = ok(&args);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r.split_whitespace().filter(|c| *c == "0.000000").count(), 2, "{r}");
    }
    assert!(d.path().join("series_000000.oracle.report.csv").exists());
}

#[test]
fn evaluate_unknown_model_lists_ids() {
    let d = TempDir::new().unwrap();
    let data = dataset(d.path());
    let err = fail(&["evaluate", "--dataset", s(&data), "--model", "prophet", "--out-dir", s(d.path())]);
    assert!(err.contains("persistence") && err.contains("seasonal-naive-img") && err.contains("oracle"), "{err}");
}

fn aggregates(report: &Path) -> Vec<(usize, String, f64)> {
    let text = fs::read_to_string(report).unwrap();
    let block = text.split("# aggregate\n").nth(1).unwrap();
    block
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].to_string(), f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn noise_does_not_improve_persistence() {
    let d = TempDir::new().unwrap();
    let data = dataset(d.path());
    let mut args = vec![
        "evaluate", "--dataset", s(&data), "--model", "persistence", "--perturb", "none,gn:0.1", "--seed", "3",
        "--out-dir", s(d.path()),
    ];
    args.extend(SMALL);
    ok(&args);
    let agg = aggregates(&d.path().join("series_000000.persistence.report.csv"));
    for hz in [24, 48] {
        let clean = agg.iter().find(|a| a.0 == hz && a.1 == "none").unwrap().2;
        let noisy = agg.iter().find(|a| a.0 == hz && a.1 == "gn:0.1").unwrap().2;
        assert!(noisy >= clean, "h={hz}: {noisy} < {clean}");
    }
}

#[test]
fn evaluate_is_deterministic_across_threads() {
    let d = TempDir::new().unwrap();
    let data = dataset(d.path());
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let out = d.path().join(format!("t{threads}"));
        let mut args = vec![
            "evaluate", "--dataset", s(&data), "--model", "seasonal-naive-img", "--perturb", "gn:0.2,dm:0.1",
            "--seed", "9", "--threads", threads, "--out-dir", s(&out),
        ];
        args.extend(SMALL);
        ok(&args);
        reports.push(fs::read(out.join("series_000000.seasonal-naive-img.report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn perturb_full_missingness() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("p.csv");
    write_series(&input, &[1.0, 2.0, 3.0]);
    ok(&["perturb", "--input", s(&input), "--spec", "dm:1", "--seed", "1", "--out-dir", s(d.path())]);
    let back = values(&d.path().join("p.dm_1.csv"));
    assert!(back.iter().all(Option::is_none));
    ok(&["perturb", "--input", s(&input), "--spec", "gn:0", "--seed", "1", "--out-dir", s(d.path())]);
    assert_eq!(values(&d.path().join("p.gn_0.csv")), vec![Some(1.0), Some(2.0), Some(3.0)]);
    let err = fail(&["perturb", "--input", s(&input), "--spec", "blur:3", "--out-dir", s(d.path())]);
    assert!(err.contains("unknown perturbation"), "{err}");
}

#[test]
fn list_models_table() {
    let d = TempDir::new().unwrap();
    let out = ok(&["list-models", "--out-dir", s(d.path())]);
    assert!(out.starts_with("id"));
    assert_eq!(out.lines().count(), 8);
    assert!(out.contains("seasonal-naive-img") && out.contains("512"));
}

#[test]
fn missing_required_input() {
    let d = TempDir::new().unwrap();
    let err = fail(&["encode", "--out-dir", s(d.path())]);
    assert!(err.contains("--input"), "{err}");
}

#[test]
fn large_generation_hypothesis_split() {
    let d = TempDir::new().unwrap();
    ok(&["generate", "-n", "20000", "--seed", "21", "--length", "32", "--out-dir", s(d.path())]);
    let manifest = fs::read_to_string(d.path().join("manifest.csv")).unwrap();
    let rows: Vec<&str> = manifest.lines().skip(1).collect();
    assert_eq!(rows.len(), 20000);
    let periodic = rows.iter().filter(|r| r.split(',').nth(3) == Some("periodic")).count();
    let frac = periodic as f64 / 20000.0;
    let sigma = (0.25f64 / 20000.0).sqrt();
    assert!((frac - 0.5).abs() <= 3.0 * sigma, "{frac}");
}
