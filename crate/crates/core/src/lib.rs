//! Entropic-cumulant density-matrix SCF for two-electron diatomics, with
//! restricted Hartree-Fock and exact two-electron CI references.
//!
//! The numerical core is generic over the scalar type ([`Real`]); the
//! aliases at the crate root fix it to `f64`, which is what every driver
//! and test uses.

pub mod analysis;
mod diis;
pub mod dump;
pub mod error;
pub mod fci2;
pub mod hf;
pub mod idmft;
pub mod integrals;
pub mod linalg;
pub mod reference;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Molecule = system::Molecule<f64>;
pub type AoBasis = system::AoBasis<f64>;
pub type BasisMap = system::BasisMap<f64>;
pub type IntegralSet = integrals::IntegralSet<f64>;
pub type OrbitalSet = hf::OrbitalSet<f64>;
pub type OneMatrix = hf::OneMatrix<f64>;
pub type CiResult = fci2::CiResult<f64>;
pub type EntropicParams = idmft::EntropicParams<f64>;
pub type IdmftResult = idmft::IdmftResult<f64>;
pub type FrobeniusReport = analysis::FrobeniusReport<f64>;
