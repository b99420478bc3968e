//! Idler wave packets with retarded and advanced parts, superposed over the
//! two crystal regions at D1.
//!
//! A single packet at distance `Δr` is
//!
//! ```text
//! ε₀ [e^{(−iω−γ/2)(t−Δr/c)} θ(t−Δr/c) − e^{(−iω−γ/2)(t+Δr/c)} θ(t+Δr/c)]
//! ```
//!
//! and the D1 wavefunction carries one such packet per region with weight
//! `α/√2` and the relative phase `e^{ik_x d}`. Beamsplitter factors are left
//! out here; the amplitude route carries them.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::ExperimentGeometry;
use crate::optics::ComplexAmplitude;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Below this `|δt|` both arms are treated as exactly `L`.
pub const DELTA_T_THRESHOLD: f64 = 1e-18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavePacketError {
    #[error("angular frequency must be finite and positive (got {0})")]
    Omega(f64),
    #[error("decay rate must be finite and non-negative (got {0})")]
    Gamma(f64),
    #[error("{name} must be finite (got {value})")]
    NotFinite { name: &'static str, value: f64 },
    #[error("arm length must be finite and positive (got {0})")]
    Length(f64),
    #[error("frequency spread must lie in [0, 2) with at least one sample (got {spread}, {samples} samples)")]
    Spread { spread: f64, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parts {
    Retarded,
    Advanced,
    #[default]
    Both,
}

impl Parts {
    fn retarded(self) -> bool {
        matches!(self, Parts::Retarded | Parts::Both)
    }

    fn advanced(self) -> bool {
        matches!(self, Parts::Advanced | Parts::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacketParams {
    omega: f64,
    gamma: f64,
    eps0_const: f64,
    dipole_angle: f64,
}

impl WavePacketParams {
    pub fn new(omega: f64, gamma: f64, eps0_const: f64, dipole_angle: f64) -> Result<Self, WavePacketError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(WavePacketError::Omega(omega));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(WavePacketError::Gamma(gamma));
        }
        if !eps0_const.is_finite() {
            return Err(WavePacketError::NotFinite {
                name: "amplitude constant",
                value: eps0_const,
            });
        }
        if !dipole_angle.is_finite() {
            return Err(WavePacketError::NotFinite {
                name: "dipole angle",
                value: dipole_angle,
            });
        }
        Ok(Self {
            omega,
            gamma,
            eps0_const,
            dipole_angle,
        })
    }

    /// `ω = 2πc/λ`.
    pub fn from_wavelength(wavelength: f64, gamma: f64) -> Result<Self, WavePacketError> {
        Self::new(2.0 * PI * SPEED_OF_LIGHT / wavelength, gamma, 1.0, PI / 2.0)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eps0_const(&self) -> f64 {
        self.eps0_const
    }

    pub fn dipole_angle(&self) -> f64 {
        self.dipole_angle
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self, WavePacketError> {
        Self::new(omega, self.gamma, self.eps0_const, self.dipole_angle)
    }

    /// `ε₀`, the constant bundle times the sine of the dipole angle.
    pub fn epsilon0(&self) -> f64 {
        self.eps0_const * self.dipole_angle.sin()
    }

    /// `e^{(−iω−γ/2) s} θ(s)` with `θ(0) = 1`.
    fn branch(&self, s: f64) -> ComplexAmplitude {
        if s >= 0.0 {
            ComplexAmplitude::from_polar((-0.5 * self.gamma * s).exp(), -self.omega * s)
        } else {
            ComplexAmplitude::new(0.0, 0.0)
        }
    }
}

impl Default for WavePacketParams {
    /// Idler at 702.2 nm, `γ = 10⁸ s⁻¹`, `ε₀ = 1`.
    fn default() -> Self {
        Self::from_wavelength(crate::geometry::DEFAULT_WAVELENGTH_M, 1e8).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmLengths {
    l1a: f64,
    l1b: f64,
}

impl ArmLengths {
    pub fn new(l1a: f64, l1b: f64) -> Result<Self, WavePacketError> {
        for l in [l1a, l1b] {
            if !(l.is_finite() && l > 0.0) {
                return Err(WavePacketError::Length(l));
            }
        }
        Ok(Self { l1a, l1b })
    }

    pub fn equal(l: f64) -> Result<Self, WavePacketError> {
        Self::new(l, l)
    }

    pub fn l1a(&self) -> f64 {
        self.l1a
    }

    pub fn l1b(&self) -> f64 {
        self.l1b
    }

    /// `L`, the mean arm length.
    pub fn common(&self) -> f64 {
        0.5 * (self.l1a + self.l1b)
    }

    /// `δt = (L1A − L1B)/c`.
    pub fn delta_t(&self) -> f64 {
        (self.l1a - self.l1b) / SPEED_OF_LIGHT
    }

    /// Lengths actually used for the two arms: both `L` when `|δt|` is below
    /// [`DELTA_T_THRESHOLD`].
    pub fn effective(&self) -> (f64, f64) {
        if self.delta_t().abs() < DELTA_T_THRESHOLD {
            (self.common(), self.common())
        } else {
            (self.l1a, self.l1b)
        }
    }
}

impl Default for ArmLengths {
    fn default() -> Self {
        Self { l1a: 1.0, l1b: 1.0 }
    }
}

/// One packet at distance `delta_r`, restricted to `parts`.
pub fn photon_amplitude(p: &WavePacketParams, t: f64, delta_r: f64, parts: Parts) -> ComplexAmplitude {
    let tau = delta_r / SPEED_OF_LIGHT;
    let mut z = ComplexAmplitude::new(0.0, 0.0);
    if parts.retarded() {
        z += p.branch(t - tau);
    }
    if parts.advanced() {
        z -= p.branch(t + tau);
    }
    z * p.epsilon0()
}

/// The four terms of the D1 wavefunction, in order: region A retarded,
/// region A advanced, region B retarded, region B advanced. Signs and the
/// `αε₀/√2` weight are included.
pub fn d1_terms(
    p: &WavePacketParams,
    arms: &ArmLengths,
    g: &ExperimentGeometry,
    x: f64,
    t: f64,
) -> [ComplexAmplitude; 4] {
    let (la, lb) = arms.effective();
    let k = g.slit_envelope(x) * p.epsilon0() * FRAC_1_SQRT_2;
    let phase_a = ComplexAmplitude::from_polar(k, g.two_path_phase(x));
    let phase_b = ComplexAmplitude::new(k, 0.0);
    let c = SPEED_OF_LIGHT;
    [
        phase_a * p.branch(t - la / c),
        -phase_a * p.branch(t + la / c),
        phase_b * p.branch(t - lb / c),
        -phase_b * p.branch(t + lb / c),
    ]
}

/// `ψ₁` at screen position `x` and time `t`.
pub fn d1_wavefunction(
    p: &WavePacketParams,
    arms: &ArmLengths,
    g: &ExperimentGeometry,
    x: f64,
    t: f64,
    parts: Parts,
) -> ComplexAmplitude {
    let [ra, aa, rb, ab] = d1_terms(p, arms, g, x, t);
    let mut z = ComplexAmplitude::new(0.0, 0.0);
    if parts.retarded() {
        z += ra + rb;
    }
    if parts.advanced() {
        z += aa + ab;
    }
    z
}

/// `|ψ₁|²` split into its four groups of terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntensityBreakdown {
    /// `Σ |a_j|²`, the single-path envelopes.
    pub envelope: f64,
    /// Retarded–retarded and advanced–advanced interference between regions,
    /// `∝ cos(ωδt ± k_x d)`.
    pub path_interference: f64,
    /// Retarded–advanced interference between regions, `∝ cos(2Lω/c ± k_x d)`.
    pub cross_region: f64,
    /// Retarded–advanced interference within one region, `∝ cos(2Lω/c)`.
    pub same_region: f64,
    /// `|ψ₁|²` evaluated directly.
    pub total: f64,
    /// `(Σ |a_j|)²`, the largest `|ψ₁|²` could be; the rounding scale.
    pub scale: f64,
}

impl IntensityBreakdown {
    pub fn sum_of_parts(&self) -> f64 {
        self.envelope + self.path_interference + self.cross_region + self.same_region
    }

    /// Intensity without any retarded–advanced interference.
    pub fn without_advanced_cross_terms(&self) -> f64 {
        self.envelope + self.path_interference
    }

    pub fn lines(&self) -> [f64; 4] {
        [
            self.envelope,
            self.path_interference,
            self.cross_region,
            self.same_region,
        ]
    }
}

pub fn intensity(
    p: &WavePacketParams,
    arms: &ArmLengths,
    g: &ExperimentGeometry,
    x: f64,
    t: f64,
) -> IntensityBreakdown {
    let a = d1_terms(p, arms, g, x, t);
    let cross = |i: usize, j: usize| 2.0 * (a[i] * a[j].conj()).re;
    IntensityBreakdown {
        envelope: a.iter().map(|z| z.norm_sqr()).sum(),
        path_interference: cross(0, 2) + cross(1, 3),
        cross_region: cross(0, 3) + cross(1, 2),
        same_region: cross(0, 1) + cross(2, 3),
        total: a.iter().sum::<ComplexAmplitude>().norm_sqr(),
        scale: a.iter().map(|z| z.norm()).sum::<f64>().powi(2),
    }
}

/// `|ψ₁|²` with only the selected parts of each packet.
pub fn intensity_of(
    p: &WavePacketParams,
    arms: &ArmLengths,
    g: &ExperimentGeometry,
    x: f64,
    t: f64,
    parts: Parts,
) -> f64 {
    d1_wavefunction(p, arms, g, x, t, parts).norm_sqr()
}

/// `2Lω/c`, the phase of the retarded–advanced cross terms.
pub fn retarded_advanced_phase(p: &WavePacketParams, arms: &ArmLengths) -> f64 {
    2.0 * arms.common() * p.omega / SPEED_OF_LIGHT
}

/// The four lines of the closed-form expansion in the `L1A ≈ L1B = L` limit,
/// with the prefactor `|α|²ε₀²`:
///
/// ```text
/// e^{−γ(t−L/c)}θ + e^{−γ(t+L/c)}θ
/// cos(ωδt + k_x d) e^{−γ(t−L/c)}θ + cos(ωδt − k_x d) e^{−γ(t+L/c)}θ
/// cos(2Lω/c + k_x d)[e^{−γ(t−δt/2)} + e^{−γ(t+δt/2)}] θθ
/// −2 e^{−γt} cos(2ωL/c) θθ
/// ```
///
/// The direct expansion agrees on lines one, two and four. Its third line is
/// `−e^{−γt}[cos(2Lω/c + k_x d) + cos(2Lω/c − k_x d)]` at `δt = 0`: same
/// frequencies and decay, different sign and pairing.
pub fn closed_form_lines(p: &WavePacketParams, arms: &ArmLengths, g: &ExperimentGeometry, x: f64, t: f64) -> [f64; 4] {
    let l = arms.common();
    let c = SPEED_OF_LIGHT;
    let dt = arms.delta_t();
    let kd = g.two_path_phase(x);
    let step = |s: f64| if s >= 0.0 { 1.0 } else { 0.0 };
    let (ret, adv) = (step(t - l / c), step(t + l / c));
    let pre = g.slit_envelope(x).powi(2) * p.epsilon0().powi(2);
    let phi = retarded_advanced_phase(p, arms);
    let gm = p.gamma;
    [
        pre * ((-gm * (t - l / c)).exp() * ret + (-gm * (t + l / c)).exp() * adv),
        pre * ((p.omega * dt + kd).cos() * (-gm * (t - l / c)).exp() * ret
            + (p.omega * dt - kd).cos() * (-gm * (t + l / c)).exp() * adv),
        pre * (phi + kd).cos() * ((-gm * (t - dt / 2.0)).exp() + (-gm * (t + dt / 2.0)).exp()) * ret * adv,
        -2.0 * pre * (-gm * t).exp() * phi.cos() * ret * adv,
    ]
}

/// Each group averaged over `samples` frequencies spread uniformly across
/// `ω(1 ± spread/2)` (midpoint rule).
pub fn average_over_omega(
    p: &WavePacketParams,
    arms: &ArmLengths,
    g: &ExperimentGeometry,
    x: f64,
    t: f64,
    spread: f64,
    samples: usize,
) -> Result<IntensityBreakdown, WavePacketError> {
    if !(spread.is_finite() && (0.0..2.0).contains(&spread)) || samples == 0 {
        return Err(WavePacketError::Spread { spread, samples });
    }
    let lo = p.omega * (1.0 - spread / 2.0);
    let step = p.omega * spread / samples as f64;
    let sum = (0..samples)
        .into_par_iter()
        .map(|j| {
            let w = lo + step * (j as f64 + 0.5);
            intensity(
                &p.with_omega(w).expect("ω stays positive for spread < 2"),
                arms,
                g,
                x,
                t,
            )
        })
        .reduce(IntensityBreakdown::default, |a, b| IntensityBreakdown {
            envelope: a.envelope + b.envelope,
            path_interference: a.path_interference + b.path_interference,
            cross_region: a.cross_region + b.cross_region,
            same_region: a.same_region + b.same_region,
            total: a.total + b.total,
            scale: a.scale.max(b.scale),
        });
    let n = samples as f64;
    Ok(IntensityBreakdown {
        envelope: sum.envelope / n,
        path_interference: sum.path_interference / n,
        cross_region: sum.cross_region / n,
        same_region: sum.same_region / n,
        total: sum.total / n,
        scale: sum.scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fringe::locate_peak;
    use crate::geometry::linspace;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g() -> ExperimentGeometry {
        ExperimentGeometry::default()
    }

    fn wp(gamma: f64) -> WavePacketParams {
        WavePacketParams::from_wavelength(702.2e-9, gamma).unwrap()
    }

    const C: f64 = SPEED_OF_LIGHT;

    #[test]
    fn photon_amplitude_examples() {
        let p = wp(1e8);
        let dr = 0.9;
        assert_eq!(
            photon_amplitude(&p, -dr / C - 1e-12, dr, Parts::Both),
            ComplexAmplitude::new(0.0, 0.0)
        );
        let front = photon_amplitude(&p, dr / C, dr, Parts::Retarded);
        assert_eq!(front.norm(), p.epsilon0().abs());
        let flat = wp(0.0);
        for t in [dr / C, dr / C + 1e-9, dr / C + 3.3e-7] {
            let z = photon_amplitude(&flat, t, dr, Parts::Retarded);
            assert!((z.norm() - flat.epsilon0()).abs() < 1e-15);
        }
        assert_eq!(
            photon_amplitude(&p, 0.5 * dr / C, dr, Parts::Retarded),
            ComplexAmplitude::new(0.0, 0.0)
        );
    }

    #[test]
    fn swapping_retarded_and_advanced() {
        // Δr → −Δr exchanges the two branches and flips the sign.
        let p = wp(3e7);
        for t in linspace(-5e-9, 5e-9, 101) {
            for dr in [0.2, 1.0, 1.3] {
                let a = photon_amplitude(&p, t, dr, Parts::Both);
                let b = photon_amplitude(&p, t, -dr, Parts::Both);
                assert_eq!(a, -b);
                assert_eq!(a.norm_sqr(), b.norm_sqr());
            }
        }
    }

    #[test]
    fn dipole_angle_scales_amplitude() {
        let p = WavePacketParams::new(1e15, 0.0, 2.0, PI / 6.0).unwrap();
        assert!((p.epsilon0() - 1.0).abs() < 1e-15);
        assert!(WavePacketParams::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(WavePacketParams::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(ArmLengths::new(1.0, 0.0).is_err());
    }

    #[test]
    fn d1_examples() {
        let p = wp(2e8);
        let arms = ArmLengths::default();
        let l = arms.common();
        assert_eq!(
            d1_wavefunction(&p, &arms, &g(), 1e-4, -l / C - 1e-10, Parts::Both).norm(),
            0.0
        );
        for t in [l / C, l / C + 1e-9, l / C + 7e-9] {
            let z = d1_wavefunction(&p, &arms, &g(), 0.0, t, Parts::Retarded);
            let expect = 2f64.sqrt() * p.epsilon0() * (-p.gamma() * (t - l / C) / 2.0).exp();
            assert!((z.norm() - expect).abs() < 1e-14 * expect);
        }
    }

    #[test]
    fn d1_terms_match_single_packets() {
        // Each term is ±(α/√2) e^{ik_x d_R} times a one-branch packet.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let p = wp(rng.random_range(0.0..1e9));
            let arms = ArmLengths::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)).unwrap();
            let x = rng.random_range(-3e-3..3e-3);
            let t = rng.random_range(-1e-8..1e-8);
            let w = g().slit_envelope(x) * FRAC_1_SQRT_2;
            let pa = ComplexAmplitude::from_polar(w, g().two_path_phase(x));
            let pb = ComplexAmplitude::new(w, 0.0);
            let a = d1_terms(&p, &arms, &g(), x, t);
            let close = |u: ComplexAmplitude, v: ComplexAmplitude| (u - v).norm() <= 1e-15 * (1.0 + v.norm());
            assert!(close(a[0], pa * photon_amplitude(&p, t, arms.l1a(), Parts::Retarded)));
            assert!(close(a[1], pa * photon_amplitude(&p, t, arms.l1a(), Parts::Advanced)));
            assert!(close(a[2], pb * photon_amplitude(&p, t, arms.l1b(), Parts::Retarded)));
            assert!(close(a[3], pb * photon_amplitude(&p, t, arms.l1b(), Parts::Advanced)));
        }
    }

    #[test]
    fn arm_threshold() {
        let arms = ArmLengths::new(1.0, 1.0 + 1e-12).unwrap();
        assert!(arms.delta_t().abs() < DELTA_T_THRESHOLD * 10.0);
        assert_eq!(arms.effective(), (arms.common(), arms.common()));
        let arms = ArmLengths::new(1.0, 1.0 + 3e-9).unwrap();
        assert_eq!(arms.effective(), (1.0, 1.0 + 3e-9));
        assert!((arms.delta_t() + 3e-9 / C).abs() < 1e-15);
    }

    #[test]
    fn phase_2l_omega_over_c() {
        let phi = retarded_advanced_phase(&WavePacketParams::default(), &ArmLengths::default());
        assert!((phi - 1.789_571_434_685_157e7).abs() / phi < 1e-12);
    }

    #[test]
    fn causal_support_of_retarded_part() {
        let p = wp(1e8);
        let arms = ArmLengths::new(1.0, 1.2).unwrap();
        for t in linspace(-1e-8, 1.0 / C - 1e-13, 200) {
            for x in [0.0, 4e-4, -1.1e-3] {
                assert_eq!(intensity_of(&p, &arms, &g(), x, t, Parts::Retarded), 0.0);
            }
        }
    }

    #[test]
    fn matches_closed_form_lines() {
        let p = wp(1e8);
        let arms = ArmLengths::default();
        let l = arms.common();
        for t in [l / C, l / C + 2e-9, -l / C + 1e-9] {
            for x in linspace(-2e-3, 2e-3, 21) {
                let ours = intensity(&p, &arms, &g(), x, t);
                let closed = closed_form_lines(&p, &arms, &g(), x, t);
                let tol = 1e-9 * ours.scale.max(1e-300);
                assert!((ours.envelope - closed[0]).abs() <= tol);
                assert!((ours.path_interference - closed[1]).abs() <= tol);
                assert!((ours.same_region - closed[3]).abs() <= tol);
                // Third line: same frequencies and decay, opposite pairing.
                let pre = g().slit_envelope(x).powi(2) * p.epsilon0().powi(2);
                let phi = retarded_advanced_phase(&p, &arms);
                let kd = g().two_path_phase(x);
                let both = if t >= l / C { 1.0 } else { 0.0 };
                let ours3 = -pre * (-p.gamma() * t).exp() * ((phi + kd).cos() + (phi - kd).cos()) * both;
                assert!((ours.cross_region - ours3).abs() <= tol, "{t} {x}");
            }
        }
    }

    #[test]
    fn closure_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = WavePacketParams::new(
                rng.random_range(1e14..5e15),
                rng.random_range(0.0..1e9),
                rng.random_range(0.1..3.0),
                rng.random_range(0.0..PI),
            )
            .unwrap();
            let arms = ArmLengths::new(rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)).unwrap();
            let x = rng.random_range(-3e-3..3e-3);
            let t = rng.random_range(-1.2e-8..1.2e-8);
            let b = intensity(&p, &arms, &g(), x, t);
            assert!((b.sum_of_parts() - b.total).abs() <= 1e-12 * b.scale.max(1e-300));
        }
    }

    #[test]
    fn line_two_fringe_period() {
        let p = wp(1e8);
        let arms = ArmLengths::default();
        let t = arms.common() / C;
        let f = |x: f64| intensity(&p, &arms, &g(), x, t).path_interference / g().slit_envelope(x).powi(2);
        let period = g().fringe_period();
        let m0 = locate_peak(&f, -0.3 * period, 0.3 * period);
        let m1 = locate_peak(&f, 0.7 * period, 1.3 * period);
        assert!(((m1 - m0) - period).abs() / period < 1e-9);
    }

    #[test]
    fn frequency_spread_washes_out_cross_terms() {
        let p = wp(1e8);
        let arms = ArmLengths::default();
        let t = arms.common() / C + 1e-9;
        let x = 1.3e-4;
        let avg = average_over_omega(&p, &arms, &g(), x, t, 0.01, 1 << 21).unwrap();
        let kd = g().two_path_phase(x);
        let line2_amplitude = intensity(&p, &arms, &g(), x, t).path_interference.abs() / kd.cos().abs();
        assert!((avg.cross_region + avg.same_region).abs() < 1e-2 * line2_amplitude);
        assert!(average_over_omega(&p, &arms, &g(), x, t, 2.5, 10).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_in_retarded_and_advanced(x in -3e-3f64..3e-3, t in -1e-8f64..1e-8,
                                              la in 0.2f64..2.0, lb in 0.2f64..2.0) {
            // Negating the arm lengths swaps the branches of every packet;
            // |ψ₁|² is unchanged.
            let p = wp(5e7);
            let k = g().slit_envelope(x) * FRAC_1_SQRT_2;
            let pa = ComplexAmplitude::from_polar(k, g().two_path_phase(x));
            let pb = ComplexAmplitude::new(k, 0.0);
            let psi = |la: f64, lb: f64| {
                pa * photon_amplitude(&p, t, la, Parts::Both) + pb * photon_amplitude(&p, t, lb, Parts::Both)
            };
            prop_assert_eq!(psi(la, lb).norm_sqr(), psi(-la, -lb).norm_sqr());
            let arms = ArmLengths::new(la, lb).unwrap();
            let b = intensity(&p, &arms, &g(), x, t);
            prop_assert!((psi(la, lb).norm_sqr() - b.total).abs() <= 1e-13 * b.scale + 1e-300);
        }
    }
}
