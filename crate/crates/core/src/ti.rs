//! Offer and counter waves for the two-photon state, and the resulting
//! coincidence probabilities at D1..D4.
//!
//! After the signal photon is found at `x`, the idler is left in
//! `(α/√2)(e^{ik_x d}|A⟩ + |B⟩)` (the common phase of region B is dropped).
//! Propagating to a detector multiplies each ket by its route amplitude. The
//! detector answers with the complex-conjugate counter wave and the
//! transaction probability is `ψ_cw* ψ_ow`.

use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{ExperimentGeometry, GeometryError};
use crate::optics::{eraser_network, route_amplitude, ComplexAmplitude, Detector, DetectorPath, OpticsError, Region};

/// Largest imaginary residue (relative to the diagonal terms) tolerated in
/// `ψ_cw* ψ_ow`.
pub const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TiError {
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("network has no route to detector {0}")]
    Unreachable(Detector),
    #[error("detector efficiency must lie in [0, 1] (got {0})")]
    Efficiency(f64),
    #[error("overlap phase must be finite (got {0})")]
    Phase(f64),
    #[error("transaction probability has imaginary part {0:e}")]
    NotReal(f64),
    #[error("transaction probability is negative ({0:e})")]
    Negative(f64),
    #[error("bandwidth must satisfy 0 <= Δλ < λ (got Δλ = {delta}, λ = {lambda})")]
    Bandwidth { delta: f64, lambda: f64 },
}

/// Idler state after signal detection: coefficients of `|A_i⟩` and `|B_i⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonOfferWave {
    pub coeff_a: ComplexAmplitude,
    pub coeff_b: ComplexAmplitude,
}

/// Bra coefficients of `⟨A_i|` and `⟨B_i|` sent back by the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterWave {
    pub bra_a: ComplexAmplitude,
    pub bra_b: ComplexAmplitude,
}

impl TwoPhotonOfferWave {
    pub fn counter_wave(&self) -> CounterWave {
        CounterWave {
            bra_a: self.coeff_a.conj(),
            bra_b: self.coeff_b.conj(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeff_a.is_finite() && self.coeff_b.is_finite()
    }
}

impl CounterWave {
    /// The offer wave this counter wave confirms.
    pub fn conjugate(&self) -> TwoPhotonOfferWave {
        TwoPhotonOfferWave {
            coeff_a: self.bra_a.conj(),
            coeff_b: self.bra_b.conj(),
        }
    }
}

/// A detector together with its efficiency `η` and overlap phase `φ`.
///
/// The two idler kets overlap as `⟨A_i|B_i⟩ = η e^{−iφ}`, so `η` is the fringe
/// visibility at that detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorChannel {
    detector: Detector,
    efficiency: f64,
    overlap_phase: f64,
}

impl DetectorChannel {
    pub fn new(detector: Detector, efficiency: f64, overlap_phase: f64) -> Result<Self, TiError> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(TiError::Efficiency(efficiency));
        }
        if !overlap_phase.is_finite() {
            return Err(TiError::Phase(overlap_phase));
        }
        Ok(Self {
            detector,
            efficiency,
            overlap_phase,
        })
    }

    /// Perfect detector, `η = 1`, `φ = 0`.
    pub fn ideal(detector: Detector) -> Self {
        Self {
            detector,
            efficiency: 1.0,
            overlap_phase: 0.0,
        }
    }

    pub fn detector(&self) -> Detector {
        self.detector
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn overlap_phase(&self) -> f64 {
        self.overlap_phase
    }

    /// `⟨A_i|B_i⟩`.
    pub fn overlap(&self) -> ComplexAmplitude {
        ComplexAmplitude::from_polar(self.efficiency, -self.overlap_phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransactionResult {
    pub probability_density: f64,
    pub detector: Detector,
    pub x: f64,
}

/// Offer wave after signal detection at `x`.
pub fn offer_wave(g: &ExperimentGeometry, x: f64) -> TwoPhotonOfferWave {
    let amp = g.slit_envelope(x) * FRAC_1_SQRT_2;
    TwoPhotonOfferWave {
        coeff_a: ComplexAmplitude::from_polar(amp, g.two_path_phase(x)),
        coeff_b: ComplexAmplitude::new(amp, 0.0),
    }
}

/// Multiplies each coefficient by its route amplitude to `detector`; a region
/// with no route contributes zero.
pub fn propagate(
    ow: &TwoPhotonOfferWave,
    detector: Detector,
    network: &[DetectorPath],
) -> Result<TwoPhotonOfferWave, TiError> {
    let a = route_amplitude(network, detector, Region::A)?;
    let b = route_amplitude(network, detector, Region::B)?;
    if a.is_none() && b.is_none() {
        return Err(TiError::Unreachable(detector));
    }
    let zero = ComplexAmplitude::new(0.0, 0.0);
    Ok(TwoPhotonOfferWave {
        coeff_a: a.map_or(zero, |r| ow.coeff_a * r),
        coeff_b: b.map_or(zero, |r| ow.coeff_b * r),
    })
}

/// `ψ_cw* ψ_ow` for an offer wave already propagated to `channel`.
pub fn transaction_probability(
    ow: &TwoPhotonOfferWave,
    channel: &DetectorChannel,
    x: f64,
) -> Result<TransactionResult, TiError> {
    let cw = ow.counter_wave();
    let ab = channel.overlap();
    let value =
        cw.bra_a * ow.coeff_a + cw.bra_b * ow.coeff_b + cw.bra_a * ow.coeff_b * ab + cw.bra_b * ow.coeff_a * ab.conj();
    let scale = ow.coeff_a.norm_sqr() + ow.coeff_b.norm_sqr();
    if value.im.abs() > REAL_TOL * scale {
        return Err(TiError::NotReal(value.im));
    }
    if value.re < -REAL_TOL * scale {
        return Err(TiError::Negative(value.re));
    }
    Ok(TransactionResult {
        probability_density: value.re.max(0.0),
        detector: channel.detector,
        x,
    })
}

/// Offer wave, propagation and transaction in one step.
pub fn channel_probability(
    g: &ExperimentGeometry,
    channel: &DetectorChannel,
    network: &[DetectorPath],
    x: f64,
) -> Result<TransactionResult, TiError> {
    let ow = propagate(&offer_wave(g, x), channel.detector, network)?;
    transaction_probability(&ow, channel, x)
}

/// Transaction probabilities over a grid of screen positions.
pub fn pattern(
    channel: &DetectorChannel,
    g: &ExperimentGeometry,
    x_grid: &[f64],
) -> Result<Vec<TransactionResult>, TiError> {
    let network = eraser_network();
    x_grid
        .par_iter()
        .map(|&x| channel_probability(g, channel, &network, x))
        .collect()
}

/// Densities only.
pub fn pattern_values(channel: &DetectorChannel, g: &ExperimentGeometry, x_grid: &[f64]) -> Result<Vec<f64>, TiError> {
    Ok(pattern(channel, g, x_grid)?
        .into_iter()
        .map(|r| r.probability_density)
        .collect())
}

/// The seven wavelengths `λ, λ ± Δλ, λ ± Δλ/2, λ ± Δλ/4`.
pub fn bandwidth_samples(lambda: f64, delta: f64) -> Result<[f64; 7], TiError> {
    if !(delta.is_finite() && delta >= 0.0 && delta < lambda) {
        return Err(TiError::Bandwidth { delta, lambda });
    }
    Ok([
        lambda,
        lambda + delta,
        lambda - delta,
        lambda + delta / 2.0,
        lambda - delta / 2.0,
        lambda + delta / 4.0,
        lambda - delta / 4.0,
    ])
}

/// Uniform mean of the patterns at the seven bandwidth sample wavelengths.
pub fn bandwidth_average(
    channel: &DetectorChannel,
    g: &ExperimentGeometry,
    x_grid: &[f64],
    delta_lambda: f64,
) -> Result<Vec<f64>, TiError> {
    let lambdas = bandwidth_samples(g.wavelength(), delta_lambda)?;
    if delta_lambda == 0.0 {
        return pattern_values(channel, g, x_grid);
    }
    let mut sum = vec![0.0; x_grid.len()];
    for lambda in lambdas {
        let gl = g.with_wavelength(lambda)?;
        for (acc, v) in sum.iter_mut().zip(pattern_values(channel, &gl, x_grid)?) {
            *acc += v;
        }
    }
    Ok(sum.into_iter().map(|s| s / lambdas.len() as f64).collect())
}
