//! Measurements on fringe patterns: extrema, local visibility, phase fits.

use nalgebra::{Matrix3, Vector3};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, x_tol: f64) -> f64 {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Position of the maximum of a unimodal `f` on `[lo, hi]`, by bisection on
/// the sign of a central-difference slope. Unlike [`golden_max`], which stalls
/// at about √ε relative in x on a flat crest, this resolves the crest to a few
/// ulp of the bracket width.
pub fn locate_peak<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let h = (b - a) * 1e-4;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m + h) > f(m - h) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn golden_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, x_tol: f64) -> f64 {
    golden_max(&|x| -f(x), lo, hi, x_tol)
}

/// Global maximum and minimum of `f` on `[lo, hi]`: a grid scan followed by
/// golden-section refinement around the best grid points.
pub fn extrema<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
    let samples = samples.max(3);
    let step = (hi - lo) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples).map(|i| lo + step * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let imax = argmax(&ys);
    let imin = argmax(&ys.iter().map(|y| -y).collect::<Vec<_>>());
    let bracket = |i: usize| {
        let a = if i == 0 { xs[0] } else { xs[i - 1] };
        let b = if i + 1 == samples { xs[samples - 1] } else { xs[i + 1] };
        (a, b)
    };
    let tol = step * 1e-10;
    let (a, b) = bracket(imax);
    let xmax = golden_max(f, a, b, tol);
    let (a, b) = bracket(imin);
    let xmin = golden_min(f, a, b, tol);
    (f(xmax).max(ys[imax]), f(xmin).min(ys[imin]))
}

fn argmax(ys: &[f64]) -> usize {
    ys.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
        )
        .0
}

/// `(max − min)/(max + min)` of `f` over `[lo, hi]`.
pub fn visibility<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, samples: usize) -> f64 {
    let (max, min) = extrema(f, lo, hi, samples);
    (max - min) / (max + min)
}

/// Local maxima of sampled data, refined by a three-point parabola.
pub fn peak_positions(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    (1..ys.len().saturating_sub(1))
        .filter(|&i| ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
        .map(|i| {
            let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            let shift = if denom == 0.0 { 0.0 } else { 0.5 * (y0 - y2) / denom };
            // Uniform grids only; the shift is in units of the local spacing.
            xs[i] + shift * 0.5 * (xs[i + 1] - xs[i - 1])
        })
        .collect()
}

/// Scale so the largest value is 1. A pattern that is identically zero is
/// returned unchanged.
pub fn normalize_to_peak(values: &[f64]) -> Vec<f64> {
    let peak = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak > 0.0 {
        values.iter().map(|v| v / peak).collect()
    } else {
        values.to_vec()
    }
}

pub fn max_abs_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Least-squares fit `y ≈ offset + amplitude·cos(θ + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicFit {
    pub offset: f64,
    pub amplitude: f64,
    /// In `(−π, π]`.
    pub phase: f64,
}

/// Fits `y_j ≈ c + A cos θ_j + B sin θ_j`, then reports `A cos θ + B sin θ`
/// as `amplitude·cos(θ + phase)`.
pub fn fit_harmonic(thetas: &[f64], ys: &[f64]) -> Option<HarmonicFit> {
    assert_eq!(thetas.len(), ys.len());
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&th, &y) in thetas.iter().zip(ys) {
        let row = Vector3::new(1.0, th.cos(), th.sin());
        ata += row * row.transpose();
        aty += row * y;
    }
    let sol = ata.lu().solve(&aty)?;
    let (c, a, b) = (sol[0], sol[1], sol[2]);
    Some(HarmonicFit {
        offset: c,
        amplitude: a.hypot(b),
        phase: (-b).atan2(a),
    })
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
