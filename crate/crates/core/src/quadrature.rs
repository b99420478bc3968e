//! Globally adaptive Gauss–Kronrod (7/15) quadrature in one and two dimensions.
//!
//! The acceptance test is purely relative, `err <= rel_tol·|I|`, backed by a
//! floor proportional to `∫|f|` for integrands that cancel to zero. Both sides
//! scale with `f`, so multiplying the integrand by a constant selects the same
//! subdivision.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {intervals} intervals")]
    NoConvergence { value: f64, error: f64, intervals: usize },
    #[error("integrand is not finite at t = {0:e}")]
    NotFinite(f64),
    #[error("invalid interval [{0:e}, {1:e}]")]
    Interval(f64, f64),
}

pub const DEFAULT_MAX_INTERVALS: usize = 2000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |t: f64| -> Result<f64, QuadratureError> {
        let y = f(t)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NotFinite(t))
        }
    };
    let fc = eval(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (eval(c - dx)?, eval(c + dx)?);
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
        abs: abs * h.abs(),
    })
}

/// `∫_a^b f` to relative tolerance `rel_tol`. Fallible integrands let errors
/// from nested integrals propagate.
pub fn integrate_with<F>(f: &F, a: f64, b: f64, rel_tol: f64, max_intervals: usize) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::Interval(a, b));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![gk15(f, a, b)?];
    loop {
        // Summed in interval order so the result does not depend on the
        // order in which panels were split.
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let abs: f64 = panels.iter().map(|p| p.abs).sum();
        if error <= (rel_tol * value.abs()).max(50.0 * f64::EPSILON * abs) {
            return Ok(value);
        }
        if panels.len() >= max_intervals {
            return Err(QuadratureError::NoConvergence {
                value,
                error,
                intervals: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.error.total_cmp(&q.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        panels.push(gk15(f, p.a, m)?);
        panels.push(gk15(f, m, p.b)?);
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    integrate_with(&|t| Ok(f(t)), a, b, rel_tol, DEFAULT_MAX_INTERVALS)
}

/// `∫_{a0}^{b0} ∫_{a1}^{b1} f(u, v) dv du`, inner integrals held to a tenth of
/// the outer tolerance.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a0, b0): (f64, f64),
    (a1, b1): (f64, f64),
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    let inner = |u: f64| integrate_with(&|v| Ok(f(u, v)), a1, b1, rel_tol / 10.0, DEFAULT_MAX_INTERVALS);
    integrate_with(&inner, a0, b0, rel_tol, DEFAULT_MAX_INTERVALS)
}

/// `(1/T) ∫_0^T f`.
pub fn mean_over_window<F: Fn(f64) -> f64>(f: F, window: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    Ok(integrate(f, 0.0, window, rel_tol)? / window)
}

/// `(1/T²) ∫_0^T ∫_0^T f`.
pub fn mean_over_window_2d<F: Fn(f64, f64) -> f64>(f: F, window: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    Ok(integrate_2d(f, (0.0, window), (0.0, window), rel_tol)? / (window * window))
}
