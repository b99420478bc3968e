//! Fraunhofer geometry of the two-region source imaged onto the D0 screen.
//!
//! The lens maps a screen coordinate `x` to the transverse wavenumber
//! `k_x = 2πx / (λf)`. The single-region envelope is `sinc(k_x a / 2)` and the
//! relative phase between the two regions is `k_x d`.

use std::f64::consts::PI;

use thiserror::Error;

/// Slit (crystal-region) width, 0.3 mm.
pub const DEFAULT_SLIT_WIDTH_M: f64 = 0.3e-3;
/// Region separation, 0.7 mm.
pub const DEFAULT_SEPARATION_M: f64 = 0.7e-3;
/// Signal/idler wavelength, twice the 351.1 nm pump.
pub const DEFAULT_WAVELENGTH_M: f64 = 702.2e-9;
/// Lens focal length. Not reported for the experiment; 1 m is our choice.
pub const DEFAULT_FOCAL_LENGTH_M: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{name} must be finite and strictly positive (got {value})")]
    NotPositive { name: &'static str, value: f64 },
    #[error("separation must be finite and non-negative (got {0})")]
    NegativeSeparation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentGeometry {
    slit_width: f64,
    separation: f64,
    wavelength: f64,
    focal_length: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64, GeometryError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GeometryError::NotPositive { name, value })
    }
}

impl ExperimentGeometry {
    /// All lengths in meters.
    pub fn new(slit_width: f64, separation: f64, wavelength: f64, focal_length: f64) -> Result<Self, GeometryError> {
        if !(separation.is_finite() && separation >= 0.0) {
            return Err(GeometryError::NegativeSeparation(separation));
        }
        Ok(Self {
            slit_width: positive("slit width", slit_width)?,
            separation,
            wavelength: positive("wavelength", wavelength)?,
            focal_length: positive("focal length", focal_length)?,
        })
    }

    pub fn slit_width(&self) -> f64 {
        self.slit_width
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    /// Same geometry at another wavelength.
    pub fn with_wavelength(&self, wavelength: f64) -> Result<Self, GeometryError> {
        Ok(Self {
            wavelength: positive("wavelength", wavelength)?,
            ..*self
        })
    }

    /// Screen distance between adjacent fringe maxima, `λf/d`.
    pub fn fringe_period(&self) -> f64 {
        self.wavelength * self.focal_length / self.separation
    }

    /// Screen position of the first diffraction null, `λf/a`.
    pub fn first_null(&self) -> f64 {
        self.wavelength * self.focal_length / self.slit_width
    }

    pub fn transverse_wavenumber(&self, x: f64) -> f64 {
        transverse_wavenumber(self, x)
    }

    pub fn slit_envelope(&self, x: f64) -> f64 {
        slit_envelope(self, x)
    }

    pub fn two_path_phase(&self, x: f64) -> f64 {
        two_path_phase(self, x)
    }
}

impl Default for ExperimentGeometry {
    fn default() -> Self {
        Self {
            slit_width: DEFAULT_SLIT_WIDTH_M,
            separation: DEFAULT_SEPARATION_M,
            wavelength: DEFAULT_WAVELENGTH_M,
            focal_length: DEFAULT_FOCAL_LENGTH_M,
        }
    }
}

/// Paraxial `k_x = 2πx / (λf)` in rad/m.
pub fn transverse_wavenumber(g: &ExperimentGeometry, x: f64) -> f64 {
    2.0 * PI * x / (g.wavelength * g.focal_length)
}

/// Unnormalized `sin(u)/u` with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        // sin(u)/u = 1 - u²/6 + O(u⁴); the u⁴ term is below 1 ulp here.
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Single-region diffraction amplitude `α = sinc(k_x a / 2)`.
pub fn slit_envelope(g: &ExperimentGeometry, x: f64) -> f64 {
    sinc(transverse_wavenumber(g, x) * g.slit_width / 2.0)
}

/// Relative phase `k_x d` between the region-A and region-B contributions.
pub fn two_path_phase(g: &ExperimentGeometry, x: f64) -> f64 {
    transverse_wavenumber(g, x) * g.separation
}

/// `n` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { max } else { min + step * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default() -> ExperimentGeometry {
        ExperimentGeometry::default()
    }

    #[test]
    fn defaults() {
        let g = default();
        assert_eq!(g.slit_width(), 0.3e-3);
        assert_eq!(g.separation(), 0.7e-3);
        assert_eq!(g.wavelength(), 702.2e-9);
        assert_eq!(g.focal_length(), 1.0);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ExperimentGeometry::new(0.0, 1e-3, 700e-9, 1.0).is_err());
        assert!(ExperimentGeometry::new(1e-4, -1e-3, 700e-9, 1.0).is_err());
        assert!(ExperimentGeometry::new(1e-4, 1e-3, f64::NAN, 1.0).is_err());
        assert!(ExperimentGeometry::new(1e-4, 1e-3, 700e-9, f64::INFINITY).is_err());
        // d = 0 and d < a are both allowed.
        assert!(ExperimentGeometry::new(1e-4, 0.0, 700e-9, 1.0).is_ok());
        assert!(ExperimentGeometry::new(1e-3, 1e-4, 700e-9, 1.0).is_ok());
    }

    #[test]
    fn wavenumber_on_axis_and_first_period() {
        let g = default();
        assert_eq!(g.transverse_wavenumber(0.0), 0.0);
        // k_x d = 2π at x = λf/d = 1.0031428571428571 mm.
        let x = 1.0031428571428571e-3;
        assert!((g.two_path_phase(x) - 2.0 * PI).abs() < 1e-12);
        assert!((g.fringe_period() - x).abs() < 1e-18);
        for x in [1e-5, 3.3e-4, 2.9e-3] {
            assert_eq!(g.transverse_wavenumber(-x), -g.transverse_wavenumber(x));
        }
    }

    #[test]
    fn envelope_values() {
        let g = default();
        assert_eq!(g.slit_envelope(0.0), 1.0);
        // First null at λf/a = 2.340666… mm.
        let null = 2.3406666666666667e-3;
        assert!((g.first_null() - null).abs() < 1e-18);
        assert!(g.slit_envelope(null).abs() < 1e-15);
        for x in [1e-4, 1.7e-3, 4.4e-3] {
            assert_eq!(g.slit_envelope(x), g.slit_envelope(-x));
        }
    }

    #[test]
    fn two_path_phase_values() {
        let g = default();
        assert_eq!(g.two_path_phase(0.0), 0.0);
        let half = g.fringe_period() / 2.0;
        assert!((g.two_path_phase(half) - PI).abs() < 1e-12);
        for x in [2e-4, 1.3e-3] {
            assert!((g.two_path_phase(2.0 * x) - 2.0 * g.two_path_phase(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn fringe_period_from_located_maxima() {
        // Locate adjacent maxima of 1 + cos(k_x d) numerically and compare
        // against λf/d.
        let g = default();
        let f = |x: f64| 1.0 + g.two_path_phase(x).cos();
        let p = g.fringe_period();
        let m0 = crate::fringe::locate_peak(&f, -0.3 * p, 0.3 * p);
        let m1 = crate::fringe::locate_peak(&f, 0.7 * p, 1.3 * p);
        assert!(((m1 - m0) - p).abs() / p < 1e-9);
    }

    #[test]
    fn sinc_small_argument_branch() {
        for u in [0.0, 1e-12, -5e-9, 9.9e-9] {
            let s = sinc(u);
            assert!((s - 1.0).abs() <= 2e-17, "{u}");
        }
        assert!((sinc(1e-8) - (1e-8f64).sin() / 1e-8).abs() < 1e-16);
    }

    #[test]
    fn linspace_endpoints() {
        assert!(linspace(0.0, 1.0, 0).is_empty());
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        let v = linspace(-3e-3, 3e-3, 1000);
        assert_eq!(v.len(), 1000);
        assert_eq!(v[0], -3e-3);
        assert_eq!(v[999], 3e-3);
    }

    proptest! {
        #[test]
        fn envelope_bounded(x in -0.05f64..0.05) {
            let g = default();
            let a = g.slit_envelope(x).abs();
            prop_assert!(a <= 1.0);
            if x != 0.0 {
                prop_assert!(a < 1.0);
            }
        }

        #[test]
        fn invariant_under_lambda_f_rescaling(x in -0.01f64..0.01, c in 0.25f64..4.0) {
            let g = default();
            let h = ExperimentGeometry::new(
                g.slit_width(), g.separation(), g.wavelength() * c, g.focal_length() / c,
            ).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
            prop_assert!(rel(g.transverse_wavenumber(x), h.transverse_wavenumber(x)));
            prop_assert!((g.slit_envelope(x) - h.slit_envelope(x)).abs() < 1e-12);
            prop_assert!(rel(g.two_path_phase(x), h.two_path_phase(x)));
        }
    }
}
