//! Phase-space model of a matter-wave Talbot interferometer whose grating is
//! the conditional momentum kick of electron Bragg diffraction off a
//! levitated nanocrystal.
//!
//! All quantities are SI. The numerics are deterministic: the adaptive
//! quadrature, the scans and the parallel carpets give bit-identical
//! results for identical inputs.

pub mod constants;
pub mod crystal;
pub mod error;
pub mod grating;
pub mod interference;
pub mod macroscopicity;
pub mod optimize;
pub mod physics;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod systematics;

pub use crystal::{CrystalSpec, MillerIndex};
pub use error::{Error, Result};
pub use grating::{Alignment, GratingCoefficients, MaskSpec, MisalignmentMode};
pub use interference::{EvolutionParams, FringeModel, FringePattern, PatternModel};
pub use macroscopicity::{ExclusionSetup, Kernel, ModificationParams, SearchBounds};
pub use physics::{BeamSpec, GaussianState};
pub use scenario::Scenario;
