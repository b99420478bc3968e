//! Simulation engine for a delayed-choice quantum eraser: beamsplitter
//! network, slit geometry, transactional and field-theoretic coincidence
//! rates, retarded/advanced wave packets and Monte Carlo counting.

pub mod fringe;
pub mod geometry;
pub mod mc;
pub mod optics;
pub mod pdc;
pub mod quadrature;
pub mod ti;
pub mod wavepacket;

pub use geometry::ExperimentGeometry;
pub use optics::{BeamSplitter, ComplexAmplitude, Detector, DetectorPath, Region};
pub use pdc::{PhaseConvention, PumpParams};
pub use ti::DetectorChannel;
