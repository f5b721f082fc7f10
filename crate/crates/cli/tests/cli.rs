use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use qlra::io::{load_qmat, load_sketch, save_qmat};
use qlra::synthetic::{planted_matrix, SpectrumKind, SpectrumSpec};
use qlra::{make_sketch_with, EmbeddingConfig, QMatrix, SketchSizes, TestMatrixKind, TestMatrixSpec};

fn qlra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlra")).args(args).output().expect("spawn qlra")
}

fn ok(args: &[&str]) -> String {
    let out = qlra(args);
    assert!(out.status.success(), "qlra {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Rows of a CSV report keyed by column name.
fn records(text: &str) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let head: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| head.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, k: &str) -> f64 {
    row[k].parse().unwrap_or_else(|_| panic!("column {k} = '{}'", row[k]))
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

#[test]
fn approx_header_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qmat");
    ok(&["--seed", "1", "--out", p(&a), "synth", "-m", "60", "-n", "40", "--big-r", "5"]);
    let csv = ok(&["-r", "5", "approx", "--input", p(&a)]);
    assert_eq!(first_line(&csv), first_line(&golden("approx_header.csv")));
    assert_eq!(first_line(&csv), qlra_cli::APPROX_CSV_HEADER.join(","));
}

#[test]
fn verify_and_image_headers_match_golden() {
    let csv = ok(&["--trials", "5", "verify", "--suite", "extreme"]);
    assert_eq!(first_line(&csv), first_line(&golden("verify_header.csv")));
    let csv = ok(&["-r", "1", "compress-image", "--rank-one", "16x12"]);
    assert_eq!(first_line(&csv), first_line(&golden("compress_image_header.csv")));
    assert_eq!(first_line(&csv), qlra_cli::IMAGE_CSV_HEADER.join(","));
}

#[test]
fn synth_records_sigma_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.qmat"), dir.path().join("b.qmat"));
    let args = |out: &Path| -> Vec<String> {
        ["--seed", "7", "--out", p(out), "synth", "--spectrum", "pds", "--param", "2", "-m", "400", "-n", "320", "--big-r", "40"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let aa = args(&a);
    ok(&aa.iter().map(String::as_str).collect::<Vec<_>>());
    let bb = args(&b);
    ok(&bb.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let truth: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.with_extension("json")).unwrap()).unwrap();
    let sigma: Vec<f64> = serde_json::from_value(truth["sigma"].clone()).unwrap();
    // Oracle: 40 unit values, then (i - 38)^-2 for 0-based i >= 40.
    assert_eq!(sigma.len(), 320);
    for (i, s) in sigma.iter().enumerate() {
        let want = if i < 40 { 1.0 } else { 1.0 / ((i - 38) as f64).powi(2) };
        assert!((s - want).abs() <= 1e-15 * want, "sigma[{i}] = {s}, want {want}");
    }
    let m = load_qmat(&a).unwrap();
    assert_eq!(m.shape(), (400, 320));
    let fro: f64 = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    assert!((m.fro_norm() - fro).abs() < 1e-10 * fro);
}

#[test]
fn synth_rejects_rank_above_n() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qmat");
    let out = qlra(&["--out", p(&a), "synth", "-m", "30", "-n", "20", "--big-r", "25"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("R <= n"));
    assert!(!a.exists());
}

#[test]
fn exact_rank_input_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qmat");
    let (m, _) = planted_matrix(80, 60, &[3.0, 2.0, 1.5, 1.0, 0.5], 11).unwrap();
    save_qmat(&a, &m).unwrap();
    let csv = ok(&["-r", "5", "--rangefinder", "pseudo-qr,pseudo-svd", "approx", "--input", p(&a)]);
    let rows = records(&csv);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(num(r, "relative_error") <= 1e-7, "{r:?}");
    }
}

#[test]
fn eds_error_nonincreasing_over_rank_grid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qmat");
    ok(&["--seed", "2", "--out", p(&a), "synth", "--spectrum", "eds", "--param", "0.25", "-m", "200", "-n", "160", "--big-r", "10"]);
    let csv = ok(&["-r", "10,20,40", "--trials", "3", "approx", "--input", p(&a)]);
    let rows = records(&csv);
    assert_eq!(rows.len(), 9);
    let mean = |r: usize| -> f64 {
        let v: Vec<f64> = rows.iter().filter(|x| x["rank"] == r.to_string()).map(|x| num(x, "relative_error")).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (e10, e20, e40) = (mean(10), mean(20), mean(40));
    assert!(e10 >= e20 && e20 >= e40, "{e10} {e20} {e40}");
}

#[test]
fn checkpoint_path_never_needs_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let (a, ck) = (dir.path().join("a.qmat"), dir.path().join("a.qskt"));
    ok(&["--seed", "4", "--out", p(&a), "synth", "-m", "90", "-n", "70", "--big-r", "6"]);
    ok(&["-r", "6", "--seed", "9", "--out", p(&ck), "sketch", "--input", p(&a), "--block-rows", "16"]);
    std::fs::remove_file(&a).unwrap();
    let csv = ok(&["-r", "6", "approx", "--sketch", p(&ck)]);
    let rows = records(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["source"], "checkpoint");
    assert_eq!(rows[0]["relative_error"], "");
    assert!(num(&rows[0], "kappa_h") >= 1.0);
}

#[test]
fn streamed_checkpoint_matches_in_memory_sketch() {
    let dir = tempfile::tempdir().unwrap();
    let (a, ck) = (dir.path().join("a.qmat"), dir.path().join("a.qskt"));
    let m = TestMatrixSpec::gaussian(50, 40, 3).generate();
    save_qmat(&a, &m).unwrap();
    ok(&["--serial", "-r", "4", "--embedding", "rademacher", "--seed", "5", "--out", p(&ck), "sketch", "--input", p(&a), "--block-rows", "13"]);
    let st = load_sketch(&ck).unwrap();
    let emb = EmbeddingConfig::from_seed(TestMatrixKind::Rademacher, 5);
    let want = make_sketch_with(&m, SketchSizes::new(4, 9, 18).unwrap(), &emb).unwrap();
    assert_eq!(st.sizes, want.sizes);
    assert!(st.y.sub(&want.y).unwrap().fro_norm() <= 1e-12 * want.y.fro_norm());
    assert!(st.w.sub(&want.w).unwrap().fro_norm() <= 1e-12 * want.w.fro_norm());
}

#[test]
fn update_row_block_and_additive() {
    let dir = tempfile::tempdir().unwrap();
    let (a, ck, d) = (dir.path().join("a.qmat"), dir.path().join("a.qskt"), dir.path().join("d.qmat"));
    let m = TestMatrixSpec::gaussian(40, 30, 8).generate();
    save_qmat(&a, &m).unwrap();
    ok(&["-r", "3", "--seed", "2", "--out", p(&ck), "sketch", "--input", p(&a)]);

    let block = TestMatrixSpec::gaussian(5, 30, 9).generate();
    save_qmat(&d, &block).unwrap();
    ok(&["update", "--sketch", p(&ck), "--delta", p(&d), "--row0", "10"]);
    let mut m2 = m.clone();
    let mut rows = m2.row_block(10, 15);
    rows = rows.add(&block).unwrap();
    m2.set_row_block(10, &rows).unwrap();

    let full = TestMatrixSpec::gaussian(40, 30, 10).generate();
    save_qmat(&d, &full).unwrap();
    let ck2 = dir.path().join("b.qskt");
    ok(&["--out", p(&ck2), "update", "--sketch", p(&ck), "--delta", p(&d)]);
    let m3 = m2.add(&full).unwrap();

    let emb = EmbeddingConfig::from_seed(TestMatrixKind::Gaussian, 2);
    let sizes = SketchSizes::new(3, 8, 16).unwrap();
    for (path, want) in [(&ck, &m2), (&ck2, &m3)] {
        let got = load_sketch(path).unwrap();
        let exp = make_sketch_with(want, sizes, &emb).unwrap();
        assert!(got.y.sub(&exp.y).unwrap().fro_norm() <= 1e-12 * exp.y.fro_norm());
        assert!(got.w.sub(&exp.w).unwrap().fro_norm() <= 1e-12 * exp.w.fro_norm());
    }

    // A row block that overruns the matrix is rejected.
    save_qmat(&d, &block).unwrap();
    assert!(!qlra(&["update", "--sketch", p(&ck), "--delta", p(&d), "--row0", "38"]).status.success());
}

#[test]
fn serial_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qmat");
    ok(&["--seed", "3", "--out", p(&a), "synth", "--spectrum", "lowrank-noise", "--param", "0.1", "-m", "70", "-n", "50", "--big-r", "5"]);
    let strip = |s: String| -> Vec<Vec<String>> {
        records(&s)
            .into_iter()
            .map(|r| {
                let mut v: Vec<(String, String)> = r.into_iter().filter(|(k, _)| !k.starts_with("t_")).collect();
                v.sort();
                v.into_iter().map(|(_, x)| x).collect()
            })
            .collect()
    };
    let args = ["--serial", "--seed", "12", "-r", "5", "--rangefinder", "pseudo-qr,pseudo-svd", "approx", "--input", p(&a)];
    assert_eq!(strip(ok(&args)), strip(ok(&args)));
}

#[test]
fn verify_gaussian_bounds_passes_at_default_trials() {
    let csv = ok(&["verify", "--suite", "gaussian-bounds"]);
    let rows = records(&csv);
    assert!(rows.iter().all(|r| r["pass"] == "true"));
    assert!(rows.iter().any(|r| r["trials"] == "300"));
}

#[test]
fn verify_rangefinder_passes_at_kappa_1e6() {
    let rows = records(&ok(&["verify", "--suite", "rangefinder", "--kappa", "1e6"]));
    assert!(rows.len() >= 4);
    assert!(rows.iter().all(|r| r["pass"] == "true"), "{rows:?}");
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let out = qlra(&["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));
}

#[test]
fn verify_writes_csv_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("checks.csv");
    let out = qlra(&["--trials", "5", "--out", p(&f), "verify", "--suite", "extreme"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(first_line(&std::fs::read_to_string(&f).unwrap()), first_line(&golden("verify_header.csv")));
}

#[test]
fn rank_one_image_is_near_exact() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("r1.png");
    let csv = ok(&["-r", "1", "--out", p(&png), "compress-image", "--rank-one", "48x64"]);
    let row = &records(&csv)[0];
    assert!(num(row, "psnr_db") > 80.0, "{row:?}");
    assert!(num(row, "relative_error") <= 1e-8);
    let ratio = num(row, "compression_ratio");
    // 3mn reals over 4r(m+n) + r.
    assert!((ratio - 3.0 * 48.0 * 64.0 / (4.0 * 112.0 + 1.0)).abs() < 1e-12);
    let img = image::open(&png).unwrap();
    assert_eq!((img.width(), img.height()), (64, 48));
}

/// Smooth image plus a hashed texture, so the spectrum decays slowly and the
/// error keeps dropping across the rank grid.
fn textured_png(path: &Path, rows: u32, cols: u32) {
    let img = image::RgbImage::from_fn(cols, rows, |x, y| {
        let (u, v) = (x as f64 / cols as f64, y as f64 / rows as f64);
        let h = |c: u32| ((x.wrapping_mul(73856093) ^ y.wrapping_mul(19349663) ^ c.wrapping_mul(83492791)) % 97) as f64 / 97.0;
        let f = |a: f64, c: u32| ((0.35 * a.sin() + 0.45 + 0.2 * h(c)) * 255.0).round() as u8;
        image::Rgb([f(7.0 * u * v + 3.0 * v, 1), f(5.0 * (u - v) * (u + 0.3), 2), f(9.0 * u * u + 2.0 * v * v * v, 3)])
    });
    img.save(path).unwrap();
}

#[test]
fn image_error_decreases_with_rank() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("in.png");
    textured_png(&png, 60, 72);
    let out = dir.path().join("rec.png");
    let csv = ok(&["-r", "2,6,12", "--seed", "4", "--out", p(&out), "compress-image", "--input", p(&png), "--block-rows", "7"]);
    let rows = records(&csv);
    let errs: Vec<f64> = rows.iter().map(|r| num(r, "relative_error")).collect();
    assert!(errs.windows(2).all(|w| w[0] >= w[1]), "{errs:?}");
    for r in &rows {
        assert!(num(r, "kappa_h") >= 1.0);
        assert!(num(r, "t_rangefinder") >= 0.0 && num(r, "t_sketch") >= 0.0);
    }
    for r in [2, 6, 12] {
        assert!(dir.path().join(format!("rec_r{r}.png")).exists());
    }
}

#[test]
fn parsed_run_matches_library_calls() {
    use clap::Parser;
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qmat");
    let cli = qlra_cli::Cli::try_parse_from(["qlra", "--seed", "6", "--out", p(&a), "synth", "-m", "30", "-n", "20", "--big-r", "3"]).unwrap();
    assert!(qlra_cli::run(cli).unwrap());
    let spec = SpectrumSpec::new(SpectrumKind::PolyDecay(2.0), 30, 20, 3, 6);
    let (want, _) = qlra::synthetic::synth_matrix(&spec).unwrap();
    let got: QMatrix = load_qmat(&a).unwrap();
    assert_eq!(got, want);
}
