//! Cantilever–qubit schemes for preparing non-classical mechanical states.

pub mod closedform;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod model;
pub mod ode;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type FockVector64 = hilbert::FockVector<f64>;
pub type CompositeState64 = hilbert::CompositeState<f64>;
pub type Operator64 = hilbert::Operator<f64>;
pub type DensityMatrix64 = hilbert::DensityMatrix<f64>;
pub type DeviceParams64 = model::DeviceParams<f64>;
pub type CouplingSet64 = model::CouplingSet<f64>;
pub type BathParams64 = lindblad::BathParams<f64>;
pub type MomentVector64 = lindblad::MomentVector<f64>;
pub type CatRecord64 = closedform::CatRecord<f64>;
pub type BranchPair64 = closedform::BranchPair<f64>;
