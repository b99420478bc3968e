use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use eraser_core::fringe::peak_positions;
use tempfile::TempDir;

fn eraser(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_eraser"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn ti_d1_fringe_spacing() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = ti\nchannels = d1\ngrid.points = 6001\noutput.path = ti.csv\n",
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("ti_d1.csv"));
    assert_eq!(header, ["x_m", "value"]);
    assert_eq!(rows.len(), 6001);

    // The sinc envelope drags raw maxima toward the center, so spacing is
    // read off D1/D3, which carries the fringe alone.
    let out = eraser(
        dir.path(),
        "mode = ti\nchannels = d1, d3\ngrid.points = 6001\noutput.wide = true\n",
        &["--out", "w.csv"],
    );
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("w.csv"));
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r[1] / r[2]).collect();
    let peaks: Vec<f64> = peak_positions(&xs, &ratio)
        .into_iter()
        .filter(|x| x.abs() < 2.2e-3)
        .collect();
    assert!(peaks.len() >= 4, "{peaks:?}");
    for w in peaks.windows(2) {
        let spacing_mm = (w[1] - w[0]) * 1e3;
        assert!((spacing_mm - 1.003).abs() < 1e-3, "{spacing_mm}");
    }
}

#[test]
fn wide_output_has_one_column_per_channel() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = ti\nchannels = d2, d4\ngrid.points = 11\noutput.wide = true\n",
        &["--out", "w.csv"],
    );
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("w.csv"));
    assert_eq!(header, ["x_m", "d2", "d4"]);
    assert_eq!(rows.len(), 11);
}

#[test]
fn crosscheck_within_tolerance() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = crosscheck\ngrid.points = 201\noutput.path = cc.csv\n",
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("cc_report.txt")).unwrap();
    let dev: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max_deviation = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-9, "{report}");
    assert!(report.contains("result = pass"));
}

#[test]
fn crosscheck_main_text_convention() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = crosscheck\ngrid.points = 101\noracle.phase_convention = main_text\n",
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn wavepacket_suppress_advanced() {
    let dir = TempDir::new().unwrap();
    let full = eraser(
        dir.path(),
        "mode = wavepacket\ngrid.points = 51\n",
        &["--out", "full.csv"],
    );
    assert!(full.status.success());
    let (header, rows) = read_csv(&dir.path().join("full.csv"));
    assert_eq!(header, ["x_m", "line1", "line2", "line3", "line4", "total"]);
    for r in &rows {
        let parts = r[1] + r[2] + r[3] + r[4];
        assert!((parts - r[5]).abs() <= 1e-12 * r[1].max(1e-300) * 4.0);
    }

    let cut = eraser(
        dir.path(),
        "mode = wavepacket\ngrid.points = 51\n",
        &["--out", "cut.csv", "--suppress-advanced"],
    );
    assert!(cut.status.success());
    let (header, cut_rows) = read_csv(&dir.path().join("cut.csv"));
    assert_eq!(header, ["x_m", "line1", "line2", "total"]);
    for (c, f) in cut_rows.iter().zip(&rows) {
        assert_eq!((c[1], c[2]), (f[1], f[2]));
        assert_eq!(c[3], c[1] + c[2]);
    }
}

#[test]
fn mc_reproducible_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = "mode = mc\nmc.trials = 200000\nmc.bins = 60\n";
    for name in ["a.csv", "b.csv"] {
        assert!(eraser(dir.path(), cfg, &["--out", name, "--seed", "77"])
            .status
            .success());
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("x_center_m,d1,d2,d3,d4\n"));
    let report = fs::read_to_string(dir.path().join("a_report.txt")).unwrap();
    assert!(report.contains("generator = ChaCha8Rng"));
    assert!(report.contains("seed = 77"));
    assert!(report.contains("d1.p_value"));

    assert!(eraser(dir.path(), cfg, &["--out", "c.csv", "--seed", "78"])
        .status
        .success());
    assert_ne!(
        fs::read(dir.path().join("c.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = eraser(dir.path(), "mode = ti\neta_d1 = 1.5\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("eta_d1"), "{err}");

    assert_eq!(eraser(dir.path(), "", &[]).status.code(), Some(2));
    assert_eq!(
        eraser(dir.path(), "mode = ti\n", &["--mode", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(eraser(dir.path(), "mode = ti\n", &["--bogus"]).status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_eraser"))
        .args(["--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn mode_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = mc\ngrid.points = 5\nchannels = d3\n",
        &["--mode", "ti", "--out", "m.csv"],
    );
    assert!(out.status.success());
    assert!(dir.path().join("m_d3.csv").exists());
}

#[test]
fn unwritable_output_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = ti\ngrid.points = 5\n",
        &["--out", "no/such/dir/x.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_zero_gain_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = eraser(
        dir.path(),
        "mode = oracle\ngrid.points = 5\npump.omega_p_per_s = 0\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
}
