//! Majorization-lattice steering criteria.

pub mod bases;
pub mod bounds;
pub mod cem;
pub mod error;
mod field;
pub mod majorization;
pub mod numerics;
pub mod omega;
mod search;
pub mod states;
pub mod thresholds;

pub use bases::{Basis, BasisSet};
pub use bounds::BoundsProfile;
pub use cem::{CEMConfig, CEMResult, CemObjective};
pub use error::{Error, Result};
pub use majorization::{Partition, ProbVector};
pub use numerics::{CMatrix, CVector, HermMatrix, C64};
pub use omega::{OmegaOptions, OmegaResult};
pub use states::{DensityMatrix, Family, GeneratorBasis};
pub use thresholds::{BoundSource, ThresholdReport};
