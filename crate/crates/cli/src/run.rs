//! Mode dispatch and file output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use eraser_core::fringe::{max_abs_deviation, normalize_to_peak};
use eraser_core::mc::{self, compare, GENERATOR};
use eraser_core::pdc::{joint_rate, oracle_pattern};
use eraser_core::ti::{bandwidth_average, pattern_values};
use eraser_core::wavepacket::intensity;
use eraser_core::{Detector, DetectorChannel};
use thiserror::Error;

use crate::config::{Mode, RunConfig};

/// Largest normalized TI-versus-oracle deviation accepted by `crosscheck`.
pub const CROSSCHECK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Compute(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Crosscheck only.
    pub max_deviation: Option<f64>,
}

fn compute<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Compute(e.to_string())
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `base` with `suffix` inserted before the extension: `out.csv` → `out_d1.csv`.
pub fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = base
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    base.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn report_path(base: &Path) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    base.with_file_name(format!("{stem}_report.txt"))
}

/// Header line plus one row per `x`, every number in `{:.16e}`.
pub fn csv(header: &[&str], xs: &[f64], columns: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for (i, x) in xs.iter().enumerate() {
        let _ = write!(out, "{x:.16e}");
        for c in columns {
            let _ = write!(out, ",{:.16e}", c[i]);
        }
        out.push('\n');
    }
    out
}

fn check_probabilities(d: Detector, values: &[f64]) -> Result<(), RunError> {
    match values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(v) => Err(RunError::Validation(format!(
            "{d} pattern has invalid probability {v:e}"
        ))),
        None => Ok(()),
    }
}

fn write_patterns(cfg: &RunConfig, xs: &[f64], patterns: &[(Detector, Vec<f64>)]) -> Result<Vec<PathBuf>, RunError> {
    let base = &cfg.output.path;
    if cfg.output.wide {
        let mut header = vec!["x_m"];
        header.extend(patterns.iter().map(|(d, _)| d.name()));
        let cols: Vec<Vec<f64>> = patterns.iter().map(|(_, v)| v.clone()).collect();
        write(base, &csv(&header, xs, &cols))?;
        return Ok(vec![base.clone()]);
    }
    let mut files = Vec::new();
    for (d, values) in patterns {
        let path = suffixed(base, d.name());
        write(&path, &csv(&["x_m", "value"], xs, std::slice::from_ref(values)))?;
        files.push(path);
    }
    Ok(files)
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    match cfg.mode {
        Mode::Ti => run_ti(cfg),
        Mode::Oracle => run_oracle(cfg),
        Mode::Wavepacket => run_wavepacket(cfg),
        Mode::Mc => run_mc(cfg),
        Mode::Crosscheck => run_crosscheck(cfg),
    }
}

fn run_ti(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let xs = cfg.grid.xs();
    let mut patterns = Vec::new();
    for &d in &cfg.channels {
        let v = bandwidth_average(&cfg.channel(d), &cfg.geometry, &xs, cfg.delta_lambda).map_err(compute)?;
        check_probabilities(d, &v)?;
        patterns.push((d, v));
    }
    Ok(RunOutcome {
        files: write_patterns(cfg, &xs, &patterns)?,
        max_deviation: None,
    })
}

fn oracle_values(cfg: &RunConfig, d: Detector, xs: &[f64]) -> Result<Vec<f64>, RunError> {
    let o = &cfg.oracle;
    if o.average {
        oracle_pattern(d, &cfg.geometry, xs, &o.pump, o.convention).map_err(compute)
    } else {
        xs.iter()
            .map(|&x| joint_rate(d, &cfg.geometry, x, &o.pump, (o.t0, o.ti), o.convention).map_err(compute))
            .collect()
    }
}

fn run_oracle(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let xs = cfg.grid.xs();
    let mut patterns = Vec::new();
    for &d in &cfg.channels {
        let v = oracle_values(cfg, d, &xs)?;
        check_probabilities(d, &v)?;
        patterns.push((d, v));
    }
    Ok(RunOutcome {
        files: write_patterns(cfg, &xs, &patterns)?,
        max_deviation: None,
    })
}

fn run_wavepacket(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let xs = cfg.grid.xs();
    let (p, arms, t) = (cfg.wavepacket_params(), cfg.arms(), cfg.wavepacket_time());
    let rows: Vec<_> = xs.iter().map(|&x| intensity(&p, &arms, &cfg.geometry, x, t)).collect();
    let col =
        |f: &dyn Fn(&eraser_core::wavepacket::IntensityBreakdown) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let text = if cfg.wavepacket.suppress_advanced {
        csv(
            &["x_m", "line1", "line2", "total"],
            &xs,
            &[
                col(&|b| b.envelope),
                col(&|b| b.path_interference),
                col(&|b| b.without_advanced_cross_terms()),
            ],
        )
    } else {
        csv(
            &["x_m", "line1", "line2", "line3", "line4", "total"],
            &xs,
            &[
                col(&|b| b.envelope),
                col(&|b| b.path_interference),
                col(&|b| b.cross_region),
                col(&|b| b.same_region),
                col(&|b| b.total),
            ],
        )
    };
    write(&cfg.output.path, &text)?;
    Ok(RunOutcome {
        files: vec![cfg.output.path.clone()],
        max_deviation: None,
    })
}

fn run_mc(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let mc_cfg = cfg.mc_config();
    let hist = mc::run(&mc_cfg).map_err(compute)?;
    let base = &cfg.output.path;
    write(base, &hist.to_csv(mc_cfg.x_min, mc_cfg.x_max))?;

    let centers = mc_cfg.bin_centers();
    let mut report = String::new();
    let _ = writeln!(report, "generator = {GENERATOR}");
    let _ = writeln!(report, "seed = {}", hist.seed);
    let _ = writeln!(report, "trials = {}", hist.trials);
    let _ = writeln!(report, "accepted = {}", hist.accepted);
    let _ = writeln!(report, "underflow = {}", hist.underflow);
    let _ = writeln!(report, "overflow = {}", hist.overflow);
    for d in Detector::ALL {
        let analytic =
            bandwidth_average(&cfg.channel(d), &cfg.geometry, &centers, cfg.delta_lambda).map_err(compute)?;
        let n = d.name();
        match compare(&hist, d, &analytic) {
            Ok(r) => {
                let _ = writeln!(report, "{n}.chi2 = {:.6}", r.chi2);
                let _ = writeln!(report, "{n}.dof = {}", r.dof);
                let _ = writeln!(report, "{n}.p_value = {:.6e}", r.p_value);
                let _ = writeln!(report, "{n}.max_sigma_deviation = {:.4}", r.max_sigma_deviation);
            }
            Err(e) => {
                let _ = writeln!(report, "{n}.error = {e}");
            }
        }
    }
    let rp = report_path(base);
    write(&rp, &report)?;
    Ok(RunOutcome {
        files: vec![base.clone(), rp],
        max_deviation: None,
    })
}

/// Normalized TI and oracle patterns per channel. The TI side uses `η = 1`,
/// no bandwidth, and the phase that maps the oracle's beamsplitter
/// bookkeeping onto the amplitude route.
fn run_crosscheck(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let xs = cfg.grid.xs();
    let mut header = vec!["x_m".to_string()];
    let mut cols = Vec::new();
    let mut report = String::new();
    let mut worst: f64 = 0.0;
    for &d in &cfg.channels {
        let phase = cfg.oracle.convention.bridge_phase(d);
        let channel = DetectorChannel::new(d, 1.0, phase).map_err(compute)?;
        let ti = normalize_to_peak(&pattern_values(&channel, &cfg.geometry, &xs).map_err(compute)?);
        let oracle = normalize_to_peak(&oracle_values(cfg, d, &xs)?);
        let dev = max_abs_deviation(&ti, &oracle);
        worst = worst.max(dev);
        let _ = writeln!(report, "{}.max_deviation = {dev:.6e}", d.name());
        header.push(format!("ti_{}", d.name()));
        header.push(format!("oracle_{}", d.name()));
        cols.push(ti);
        cols.push(oracle);
    }
    let _ = writeln!(report, "phase_convention = {}", cfg.oracle.convention.name());
    let _ = writeln!(report, "max_deviation = {worst:.6e}");
    let _ = writeln!(report, "tolerance = {CROSSCHECK_TOL:e}");
    let pass = worst <= CROSSCHECK_TOL;
    let _ = writeln!(report, "result = {}", if pass { "pass" } else { "fail" });

    let base = &cfg.output.path;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write(base, &csv(&header, &xs, &cols))?;
    let rp = report_path(base);
    write(&rp, &report)?;
    if !pass {
        return Err(RunError::Validation(format!(
            "crosscheck deviation {worst:e} exceeds {CROSSCHECK_TOL:e}"
        )));
    }
    Ok(RunOutcome {
        files: vec![base.clone(), rp],
        max_deviation: Some(worst),
    })
}
