//! Lossless optical elements and the idler beamsplitter network.
//!
//! Every beamsplitter uses the phase convention `r` purely imaginary and `t`
//! purely real. With that convention the unitarity constraints
//! `|r|² + |t|² = 1` and `r*t + rt* = 0` fix a 50:50 splitter to
//! `r = i/√2`, `t = 1/√2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Complex probability amplitude. `norm()` is the magnitude, `arg()` the phase.
pub type ComplexAmplitude = Complex64;

/// Tolerance for the beamsplitter unitarity constraints.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("beamsplitter is not lossless: |r|²+|t|² = {0}")]
    NotLossless(f64),
    #[error("beamsplitter violates r*t + rt* = 0 (residue {0:e})")]
    PhaseConstraint(f64),
    #[error("beamsplitter convention requires r purely imaginary and t purely real")]
    Convention,
    #[error("detector path has no elements")]
    EmptyPath,
    #[error("no path from region {region} reaches detector {detector}")]
    Topology { detector: Detector, region: Region },
    #[error("network has more than one route from region {region} to detector {detector}")]
    DuplicateRoute { detector: Detector, region: Region },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    r: ComplexAmplitude,
    t: ComplexAmplitude,
}

impl BeamSplitter {
    /// Validates the lossless constraints and the phase convention.
    pub fn new(r: ComplexAmplitude, t: ComplexAmplitude) -> Result<Self, OpticsError> {
        if r.re.abs() > UNITARITY_TOL || t.im.abs() > UNITARITY_TOL {
            return Err(OpticsError::Convention);
        }
        let power = r.norm_sqr() + t.norm_sqr();
        if (power - 1.0).abs() > UNITARITY_TOL {
            return Err(OpticsError::NotLossless(power));
        }
        let cross = r.conj() * t + r * t.conj();
        if cross.norm() > UNITARITY_TOL {
            return Err(OpticsError::PhaseConstraint(cross.norm()));
        }
        Ok(Self { r, t })
    }

    /// Splitter with `r = i sin θ`, `t = cos θ`.
    pub fn with_angle(theta: f64) -> Result<Self, OpticsError> {
        Self::new(
            ComplexAmplitude::new(0.0, theta.sin()),
            ComplexAmplitude::new(theta.cos(), 0.0),
        )
    }

    /// The 50:50 splitter, `r = i/√2`, `t = 1/√2`.
    pub fn standard() -> Self {
        Self {
            r: ComplexAmplitude::new(0.0, FRAC_1_SQRT_2),
            t: ComplexAmplitude::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    pub fn r(&self) -> ComplexAmplitude {
        self.r
    }

    pub fn t(&self) -> ComplexAmplitude {
        self.t
    }

    /// `|r|² + |t|²`.
    pub fn power(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr()
    }

    /// `r*t + rt*`, zero for a lossless splitter.
    pub fn phase_residue(&self) -> ComplexAmplitude {
        self.r.conj() * self.t + self.r * self.t.conj()
    }
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathElement {
    Reflect(BeamSplitter),
    Transmit(BeamSplitter),
    /// Mirror phase shifts are taken as compensated.
    Mirror,
    FreePhase(f64),
}

impl PathElement {
    pub fn factor(&self) -> ComplexAmplitude {
        match self {
            PathElement::Reflect(bs) => bs.r,
            PathElement::Transmit(bs) => bs.t,
            PathElement::Mirror => ComplexAmplitude::new(1.0, 0.0),
            PathElement::FreePhase(phase) => ComplexAmplitude::from_polar(1.0, *phase),
        }
    }
}

/// Idler detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    D1,
    D2,
    D3,
    D4,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1, Detector::D2, Detector::D3, Detector::D4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Detector> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::D1 => "d1",
            Detector::D2 => "d2",
            Detector::D3 => "d3",
            Detector::D4 => "d4",
        }
    }

    pub fn parse(s: &str) -> Option<Detector> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d1" => Some(Detector::D1),
            "d2" => Some(Detector::D2),
            "d3" => Some(Detector::D3),
            "d4" => Some(Detector::D4),
            _ => None,
        }
    }

    /// D1 and D2 sit behind the final mixing beamsplitter and erase the
    /// which-path record.
    pub fn erases_which_path(self) -> bool {
        matches!(self, Detector::D1 | Detector::D2)
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_ascii_uppercase())
    }
}

/// Crystal region that emitted the photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    A,
    B,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::A => f.write_str("A"),
            Region::B => f.write_str("B"),
        }
    }
}

/// An idler route from one crystal region to one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorPath {
    detector: Detector,
    from_region: Region,
    elements: Vec<PathElement>,
}

impl DetectorPath {
    /// Rejects empty paths and routes the four-detector layout does not have
    /// (region B cannot reach D3, region A cannot reach D4).
    pub fn new(detector: Detector, from_region: Region, elements: Vec<PathElement>) -> Result<Self, OpticsError> {
        if elements.is_empty() {
            return Err(OpticsError::EmptyPath);
        }
        match (detector, from_region) {
            (Detector::D3, Region::B) | (Detector::D4, Region::A) => Err(OpticsError::Topology {
                detector,
                region: from_region,
            }),
            _ => Ok(Self {
                detector,
                from_region,
                elements,
            }),
        }
    }

    pub fn detector(&self) -> Detector {
        self.detector
    }

    pub fn from_region(&self) -> Region {
        self.from_region
    }

    pub fn elements(&self) -> &[PathElement] {
        &self.elements
    }

    pub fn amplitude(&self) -> ComplexAmplitude {
        elements_amplitude(&self.elements)
    }
}

/// Ordered product of element factors, first element applied first.
pub fn elements_amplitude(elements: &[PathElement]) -> ComplexAmplitude {
    elements
        .iter()
        .fold(ComplexAmplitude::new(1.0, 0.0), |acc, e| acc * e.factor())
}

pub fn path_amplitude(path: &DetectorPath) -> ComplexAmplitude {
    path.amplitude()
}

/// The six idler routes of the four-detector layout, all splitters 50:50.
///
/// Region A reaches D3 by reflecting at BSA; otherwise it transmits, hits a
/// mirror and meets region B's light at BS. Region B is the mirror image,
/// with D4 behind BSB.
pub fn eraser_network() -> Vec<DetectorPath> {
    eraser_network_with(
        BeamSplitter::standard(),
        BeamSplitter::standard(),
        BeamSplitter::standard(),
    )
}

/// Four-detector layout with explicit splitters for BSA, BSB and the mixing BS.
pub fn eraser_network_with(bsa: BeamSplitter, bsb: BeamSplitter, bs: BeamSplitter) -> Vec<DetectorPath> {
    use PathElement::*;
    let route = |detector, region, elements: Vec<PathElement>| DetectorPath {
        detector,
        from_region: region,
        elements,
    };
    vec![
        route(Detector::D1, Region::A, vec![Transmit(bsa), Mirror, Reflect(bs)]),
        route(Detector::D2, Region::A, vec![Transmit(bsa), Mirror, Transmit(bs)]),
        route(Detector::D3, Region::A, vec![Reflect(bsa)]),
        route(Detector::D1, Region::B, vec![Transmit(bsb), Mirror, Transmit(bs)]),
        route(Detector::D2, Region::B, vec![Transmit(bsb), Mirror, Reflect(bs)]),
        route(Detector::D4, Region::B, vec![Reflect(bsb)]),
    ]
}

/// Amplitude of the unique route from `region` to `detector`; `None` when the
/// network has no such route.
pub fn route_amplitude(
    network: &[DetectorPath],
    detector: Detector,
    region: Region,
) -> Result<Option<ComplexAmplitude>, OpticsError> {
    let mut routes = network
        .iter()
        .filter(|p| p.detector == detector && p.from_region == region);
    let Some(first) = routes.next() else {
        return Ok(None);
    };
    if routes.next().is_some() {
        return Err(OpticsError::DuplicateRoute { detector, region });
    }
    Ok(Some(first.amplitude()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-15;

    fn close(a: ComplexAmplitude, b: ComplexAmplitude) -> bool {
        (a - b).norm() < EPS
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn standard_splitter_values() {
        let bs = BeamSplitter::standard();
        assert_eq!(bs.r(), ComplexAmplitude::new(0.0, 0.7071067811865476));
        assert_eq!(bs.t(), ComplexAmplitude::new(0.7071067811865476, 0.0));
        assert!((bs.power() - 1.0).abs() < 1e-15);
        assert_eq!(bs.phase_residue().norm(), 0.0);
    }

    #[test]
    fn rejects_other_conventions() {
        let h = FRAC_1_SQRT_2;
        // Symmetric real convention r = t = 1/√2 breaks r*t + rt* = 0 as well.
        assert_eq!(
            BeamSplitter::new(ComplexAmplitude::new(h, 0.0), ComplexAmplitude::new(0.0, h)),
            Err(OpticsError::Convention)
        );
        assert!(matches!(
            BeamSplitter::new(ComplexAmplitude::new(0.0, 0.5), ComplexAmplitude::new(0.5, 0.0)),
            Err(OpticsError::NotLossless(_))
        ));
    }

    #[test]
    fn four_detector_route_amplitudes() {
        let net = eraser_network();
        assert_eq!(net.len(), 6);
        let amp = |d, r| route_amplitude(&net, d, r).unwrap().unwrap();
        assert!(close(amp(Detector::D1, Region::A), ComplexAmplitude::new(0.0, 0.5)));
        assert!(close(amp(Detector::D1, Region::B), ComplexAmplitude::new(0.5, 0.0)));
        assert!(close(amp(Detector::D2, Region::A), ComplexAmplitude::new(0.5, 0.0)));
        assert!(close(amp(Detector::D2, Region::B), ComplexAmplitude::new(0.0, 0.5)));
        assert!(close(
            amp(Detector::D3, Region::A),
            ComplexAmplitude::new(0.0, FRAC_1_SQRT_2)
        ));
        assert!(close(
            amp(Detector::D4, Region::B),
            ComplexAmplitude::new(0.0, FRAC_1_SQRT_2)
        ));
        assert_eq!(route_amplitude(&net, Detector::D3, Region::B), Ok(None));
        assert_eq!(route_amplitude(&net, Detector::D4, Region::A), Ok(None));

        let mut doubled = net.clone();
        doubled.push(net[0].clone());
        assert!(matches!(
            route_amplitude(&doubled, Detector::D1, Region::A),
            Err(OpticsError::DuplicateRoute { .. })
        ));

        let ending = |d| net.iter().filter(|p| p.detector() == d).count();
        assert_eq!(ending(Detector::D1), 2);
        assert_eq!(ending(Detector::D2), 2);
        assert_eq!(ending(Detector::D3), 1);
        assert_eq!(ending(Detector::D4), 1);
    }

    #[test]
    fn route_magnitudes_are_half_or_inverse_root_two() {
        for p in eraser_network() {
            let m = p.amplitude().norm();
            assert!(
                (m - 0.5).abs() < EPS || (m - FRAC_1_SQRT_2).abs() < EPS,
                "{:?} -> {m}",
                p
            );
        }
    }

    #[test]
    fn topology_violations_rejected() {
        let bs = BeamSplitter::standard();
        assert!(matches!(
            DetectorPath::new(Detector::D3, Region::B, vec![PathElement::Reflect(bs)]),
            Err(OpticsError::Topology { .. })
        ));
        assert!(matches!(
            DetectorPath::new(Detector::D4, Region::A, vec![PathElement::Reflect(bs)]),
            Err(OpticsError::Topology { .. })
        ));
        assert_eq!(
            DetectorPath::new(Detector::D1, Region::A, vec![]),
            Err(OpticsError::EmptyPath)
        );
    }

    #[test]
    fn network_paths_split_exactly() {
        for p in eraser_network() {
            let full = p.amplitude();
            for k in 0..=p.elements().len() {
                let (pre, suf) = p.elements().split_at(k);
                assert_eq!(elements_amplitude(pre) * elements_amplitude(suf), full);
            }
        }
    }

    #[test]
    fn mirror_and_free_phase_are_unimodular() {
        assert_eq!(PathElement::Mirror.factor(), ComplexAmplitude::new(1.0, 0.0));
        for phase in [-3.0, -0.2, 0.0, 1.1, 7.5] {
            assert!((PathElement::FreePhase(phase).factor().norm() - 1.0).abs() < EPS);
        }
    }

    fn element() -> impl Strategy<Value = PathElement> {
        prop_oneof![
            (-3.2f64..3.2).prop_map(|a| PathElement::Reflect(BeamSplitter::with_angle(a).unwrap())),
            (-3.2f64..3.2).prop_map(|a| PathElement::Transmit(BeamSplitter::with_angle(a).unwrap())),
            Just(PathElement::Mirror),
            (-10.0f64..10.0).prop_map(PathElement::FreePhase),
        ]
    }

    proptest! {
        #[test]
        fn angle_family_is_unitary(theta in -10.0f64..10.0) {
            let bs = BeamSplitter::with_angle(theta).unwrap();
            prop_assert!((bs.power() - 1.0).abs() < UNITARITY_TOL);
            prop_assert!(bs.phase_residue().norm() < UNITARITY_TOL);
        }

        #[test]
        fn path_amplitude_is_multiplicative(
            elements in prop::collection::vec(element(), 1..8),
            cut in 0usize..8,
        ) {
            let cut = cut.min(elements.len());
            let full = elements_amplitude(&elements);
            let (pre, suf) = elements.split_at(cut);
            let split = elements_amplitude(pre) * elements_amplitude(suf);
            prop_assert!((split - full).norm() <= 8.0 * f64::EPSILON);
            prop_assert!(full.norm() <= 1.0 + 8.0 * f64::EPSILON);
        }

        #[test]
        fn complex_magnitude_is_multiplicative(
            a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3, d in -1e3f64..1e3,
        ) {
            let z = ComplexAmplitude::new(a, b);
            let w = ComplexAmplitude::new(c, d);
            let lhs = (z * w).norm();
            let rhs = z.norm() * w.norm();
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.max(f64::MIN_POSITIVE));
            prop_assert_eq!(z.conj().conj(), z);
            prop_assert!((z.norm_sqr() - (a * a + b * b)).abs() <= 4.0 * f64::EPSILON * z.norm_sqr());
        }
    }
}
