//! Correlation-function oracle for the joint rates `R₀₁ … R₀₄`.
//!
//! The pump is classical and undepleted, so signal and idler operators
//! evolve by the two-mode Bogoliubov map
//!
//! ```text
//! a_s(t) = cosh(Ω t) a_s(0) − i e^{−iθ} sinh(Ω t) a_i†(0)
//! a_i(t) = cosh(Ω t) a_i(0) − i e^{−iθ} sinh(Ω t) a_s†(0)
//! ```
//!
//! The detector fields are linear in the ladder operators, and the normally
//! ordered fourth-order moment splits into three products of second-order
//! vacuum expectations.

pub mod ladder;

use std::cell::RefCell;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::ExperimentGeometry;
use crate::optics::{eraser_network, route_amplitude, ComplexAmplitude, Detector, DetectorPath, OpticsError, Region};
use crate::quadrature::{integrate_with, QuadratureError, DEFAULT_MAX_INTERVALS};

pub use ladder::{vacuum_expectation, vacuum_expectation_bound, LadderExpression, LadderKind, LadderSymbol, Mode};

/// Pump coupling `Ω_p = κ α_p`, 1/s. Never given numerically; any positive
/// value gives the same normalized patterns.
pub const DEFAULT_OMEGA_P: f64 = 1e6;
/// Signal flight time to D0.
pub const DEFAULT_SIGNAL_TIME: f64 = 8.33e-9;
/// Idler flight time, 8 ns behind the signal.
pub const DEFAULT_IDLER_TIME: f64 = 16.33e-9;
/// Averaging window `T`, long enough to contain both flight times.
pub const DEFAULT_WINDOW: f64 = 20e-9;
/// Relative tolerance of the time average.
pub const TIME_AVERAGE_TOL: f64 = 1e-8;
/// Largest imaginary part or negative excursion tolerated in a rate, relative
/// to [`CorrelationTerms::bound`].
pub const RATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("pump coupling must be finite and non-negative (got {0})")]
    Coupling(f64),
    #[error("pump phase must be finite (got {0})")]
    PumpPhase(f64),
    #[error("averaging window must be finite and positive (got {0})")]
    Window(f64),
    #[error("time average needs Ω_p·T > 0")]
    NoGain,
    #[error("detection time must be finite and non-negative (got {0})")]
    Time(f64),
    #[error("network has no route to detector {0}")]
    Unreachable(Detector),
    #[error("joint rate has imaginary part {0:e}")]
    NotReal(f64),
    #[error("joint rate is negative ({0:e})")]
    Negative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpParams {
    omega_p: f64,
    theta: f64,
    window: f64,
}

impl PumpParams {
    pub fn new(omega_p: f64, theta: f64, window: f64) -> Result<Self, OracleError> {
        if !(omega_p.is_finite() && omega_p >= 0.0) {
            return Err(OracleError::Coupling(omega_p));
        }
        if !theta.is_finite() {
            return Err(OracleError::PumpPhase(theta));
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(OracleError::Window(window));
        }
        Ok(Self { omega_p, theta, window })
    }

    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `−i e^{−iθ}`, the phase carried by every sinh term.
    fn squeeze_phase(&self) -> ComplexAmplitude {
        ComplexAmplitude::new(0.0, -1.0) * ComplexAmplitude::from_polar(1.0, -self.theta)
    }
}

impl Default for PumpParams {
    fn default() -> Self {
        Self {
            omega_p: DEFAULT_OMEGA_P,
            theta: 0.0,
            window: DEFAULT_WINDOW,
        }
    }
}

fn check_time(t: f64) -> Result<f64, OracleError> {
    if t.is_finite() && t >= 0.0 {
        Ok(t)
    } else {
        Err(OracleError::Time(t))
    }
}

/// `a_s(t)` in terms of `a_s(0)` and the idler creator at `idler`.
pub fn evolve_signal(p: &PumpParams, idler: Detector, t: f64) -> Result<LadderExpression, OracleError> {
    let u = p.omega_p * check_time(t)?;
    Ok(LadderExpression::new()
        .with(u.cosh().into(), LadderSymbol::annihilate(Mode::Signal))
        .with(p.squeeze_phase() * u.sinh(), LadderSymbol::create(Mode::Idler(idler))))
}

/// `a_i(t)` in terms of `a_i(0)` and the signal creator.
pub fn evolve_idler(p: &PumpParams, idler: Detector, t: f64) -> Result<LadderExpression, OracleError> {
    let u = p.omega_p * check_time(t)?;
    Ok(LadderExpression::new()
        .with(u.cosh().into(), LadderSymbol::annihilate(Mode::Idler(idler)))
        .with(p.squeeze_phase() * u.sinh(), LadderSymbol::create(Mode::Signal)))
}

/// `|cosh²(Ω t) − sinh²(Ω t) − 1|`, the residual of `[a(t), a†(t)] = 1`.
///
/// Rounding of cosh and sinh alone leaves a residual of order
/// `ε·cosh²(Ω t)`, so this grows past 1e−12 once `Ω t` exceeds about 4.3.
pub fn bogoliubov_check(p: &PumpParams, t: f64) -> f64 {
    let u = p.omega_p * t;
    let (c, s) = (u.cosh(), u.sinh());
    (c.mul_add(c, -s * s) - 1.0).abs()
}

/// Which phase bookkeeping the beamsplitters get in the field assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// Route amplitudes enter the idler terms only, as in the appendix
    /// assembly. The D1 and D2 rates both carry `1 + cos(k_x d)`.
    #[default]
    Appendix,
    /// The route phase is also attached to the signal-side terms of each
    /// region, which reproduces the `±π/2` offsets of the amplitude route.
    MainText,
}

impl PhaseConvention {
    /// Overlap phase `φ` that makes the amplitude-route pattern for `detector`
    /// coincide with the oracle under this convention.
    pub fn bridge_phase(self, detector: Detector) -> f64 {
        match (self, detector) {
            (PhaseConvention::Appendix, Detector::D1) => -FRAC_PI_2,
            (PhaseConvention::Appendix, Detector::D2) => FRAC_PI_2,
            _ => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseConvention::Appendix => "appendix",
            PhaseConvention::MainText => "main_text",
        }
    }
}

impl fmt::Display for PhaseConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhaseConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "appendix" => Ok(PhaseConvention::Appendix),
            "main_text" => Ok(PhaseConvention::MainText),
            _ => Err(format!(
                "unknown phase convention '{s}' (expected appendix or main_text)"
            )),
        }
    }
}

/// Positive-frequency signal and idler fields for one idler detector.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub detector: Detector,
    pub e_plus_s: LadderExpression,
    pub e_plus_i: LadderExpression,
    /// `(t₀, tᵢ)`.
    pub times: (f64, f64),
}

impl FieldPair {
    pub fn e_minus_s(&self) -> LadderExpression {
        self.e_plus_s.conjugate()
    }

    pub fn e_minus_i(&self) -> LadderExpression {
        self.e_plus_i.conjugate()
    }
}

/// Builds `E_s^{(+)}` and `E_i^{(+)}` for `detector`, one group of terms per
/// region that can reach it.
///
/// Each region contributes `√(|α|/2)` times
///
/// ```text
/// E_s:  e^{ik_x d_R} cosh(Ω t₀) a_s − i e^{−iθ} B_R* sinh(Ω tᵢ) a_i†
/// E_i:  B_R cosh(Ω tᵢ) a_i − i e^{−iθ} e^{−ik_x d_R} sinh(Ω t₀) a_s†
/// ```
///
/// with `B_R` the route amplitude from region R, `d_A = d`, `d_B = 0`. The
/// idler path phases `e^{±ik x_R}` are equal for both regions and dropped.
pub fn assemble_fields(
    detector: Detector,
    g: &ExperimentGeometry,
    x: f64,
    p: &PumpParams,
    (t0, ti): (f64, f64),
    network: &[DetectorPath],
    convention: PhaseConvention,
) -> Result<FieldPair, OracleError> {
    let u0 = p.omega_p * check_time(t0)?;
    let ui = p.omega_p * check_time(ti)?;
    let (c0, s0, ci, si) = (u0.cosh(), u0.sinh(), ui.cosh(), ui.sinh());
    let amp = (g.slit_envelope(x).abs() / 2.0).sqrt();
    let sq = p.squeeze_phase();
    let signal = Mode::Signal;
    let idler = Mode::Idler(detector);

    let mut e_s = LadderExpression::new();
    let mut e_i = LadderExpression::new();
    for region in [Region::A, Region::B] {
        let Some(b) = route_amplitude(network, detector, region)? else {
            continue;
        };
        let d_r = match region {
            Region::A => g.two_path_phase(x),
            Region::B => 0.0,
        };
        let unit = match convention {
            PhaseConvention::Appendix => ComplexAmplitude::new(1.0, 0.0),
            PhaseConvention::MainText => b / b.norm(),
        };
        let path = ComplexAmplitude::from_polar(1.0, d_r);
        e_s.push(path * unit * (amp * c0), LadderSymbol::annihilate(signal));
        e_s.push(sq * b.conj() * (amp * si), LadderSymbol::create(idler));
        e_i.push(b * (amp * ci), LadderSymbol::annihilate(idler));
        e_i.push(
            sq * path.conj() * unit.conj() * (amp * s0),
            LadderSymbol::create(signal),
        );
    }
    if e_s.is_empty() {
        return Err(OracleError::Unreachable(detector));
    }
    Ok(FieldPair {
        detector,
        e_plus_s: e_s,
        e_plus_i: e_i,
        times: (t0, ti),
    })
}

/// The three products of the fourth-order moment expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTerms {
    /// `⟨E_s^− E_i^+⟩⟨E_i^− E_s^+⟩`
    pub first: ComplexAmplitude,
    /// `⟨E_s^− E_i^−⟩⟨E_s^+ E_i^+⟩`
    pub second: ComplexAmplitude,
    /// `⟨E_s^− E_s^+⟩⟨E_i^− E_i^+⟩`
    pub third: ComplexAmplitude,
    /// Sum of the three products with every contribution taken in absolute
    /// value. Near a dark fringe the products cancel inside each factor, so
    /// this, not `|sum|`, is the scale of the rounding error.
    pub bound: f64,
}

impl CorrelationTerms {
    pub fn sum(&self) -> ComplexAmplitude {
        self.first + self.second + self.third
    }
}

pub fn correlation_expand(fp: &FieldPair) -> CorrelationTerms {
    let (sp, ip) = (&fp.e_plus_s, &fp.e_plus_i);
    let (sm, im) = (fp.e_minus_s(), fp.e_minus_i());
    let b = vacuum_expectation_bound;
    CorrelationTerms {
        first: vacuum_expectation(&sm, ip) * vacuum_expectation(&im, sp),
        second: vacuum_expectation(&sm, &im) * vacuum_expectation(sp, ip),
        third: vacuum_expectation(&sm, sp) * vacuum_expectation(&im, ip),
        bound: b(&sm, ip) * b(&im, sp) + b(&sm, &im) * b(sp, ip) + b(&sm, sp) * b(&im, ip),
    }
}

/// The same products with every factor evaluated through its adjoint,
/// `⟨X Y⟩ = ⟨Y† X†⟩*`.
pub fn correlation_expand_adjoint(fp: &FieldPair) -> CorrelationTerms {
    let adj = |x: &LadderExpression, y: &LadderExpression| vacuum_expectation(&y.conjugate(), &x.conjugate()).conj();
    let (sp, ip) = (&fp.e_plus_s, &fp.e_plus_i);
    let (sm, im) = (fp.e_minus_s(), fp.e_minus_i());
    let bound = correlation_expand(fp).bound;
    CorrelationTerms {
        first: adj(&sm, ip) * adj(&im, sp),
        second: adj(&sm, &im) * adj(sp, ip),
        third: adj(&sm, sp) * adj(&im, ip),
        bound,
    }
}

fn real_rate(terms: &CorrelationTerms) -> Result<f64, OracleError> {
    let total = terms.sum();
    let scale = terms.bound;
    if total.im.abs() > RATE_TOL * scale {
        return Err(OracleError::NotReal(total.im));
    }
    if total.re < -RATE_TOL * scale {
        return Err(OracleError::Negative(total.re));
    }
    Ok(total.re.max(0.0))
}

/// Point joint rate at detection times `(t₀, tᵢ)`.
pub fn joint_rate(
    detector: Detector,
    g: &ExperimentGeometry,
    x: f64,
    p: &PumpParams,
    times: (f64, f64),
    convention: PhaseConvention,
) -> Result<f64, OracleError> {
    let fp = assemble_fields(detector, g, x, p, times, &eraser_network(), convention)?;
    real_rate(&correlation_expand(&fp))
}

/// `(1/T²) ∫₀ᵀ∫₀ᵀ rate(t₀, tᵢ) dt₀ dtᵢ`, adaptive to [`TIME_AVERAGE_TOL`].
pub fn time_average<F>(rate: F, p: &PumpParams) -> Result<f64, OracleError>
where
    F: Fn(f64, f64) -> Result<f64, OracleError>,
{
    if p.omega_p * p.window <= 0.0 {
        return Err(OracleError::NoGain);
    }
    // The quadrature only knows its own errors; a failing rate is parked here
    // and surfaces through a NaN sample.
    let failure: RefCell<Option<OracleError>> = RefCell::new(None);
    let sample = |t0: f64, ti: f64| match rate(t0, ti) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let t = p.window;
    let inner = |t0: f64| {
        integrate_with(
            &|ti| Ok(sample(t0, ti)),
            0.0,
            t,
            TIME_AVERAGE_TOL / 10.0,
            DEFAULT_MAX_INTERVALS,
        )
    };
    match integrate_with(&inner, 0.0, t, TIME_AVERAGE_TOL, DEFAULT_MAX_INTERVALS) {
        Ok(v) => Ok(v / (t * t)),
        Err(e) => Err(failure.into_inner().unwrap_or(OracleError::Quadrature(e))),
    }
}

/// Time-averaged joint rate at one screen position.
pub fn averaged_rate(
    detector: Detector,
    g: &ExperimentGeometry,
    x: f64,
    p: &PumpParams,
    convention: PhaseConvention,
) -> Result<f64, OracleError> {
    let network = eraser_network();
    time_average(
        |t0, ti| {
            let fp = assemble_fields(detector, g, x, p, (t0, ti), &network, convention)?;
            real_rate(&correlation_expand(&fp))
        },
        p,
    )
}

/// Time-averaged joint rate over a grid of screen positions.
pub fn oracle_pattern(
    detector: Detector,
    g: &ExperimentGeometry,
    x_grid: &[f64],
    p: &PumpParams,
    convention: PhaseConvention,
) -> Result<Vec<f64>, OracleError> {
    x_grid
        .par_iter()
        .map(|&x| averaged_rate(detector, g, x, p, convention))
        .collect()
}
