//! Intrinsic multipole moments of non-Gaussian charged wave packets.

pub mod analytic;
pub mod error;
pub mod fields;
pub mod grid;
pub mod numeric;
pub mod packets;
pub mod phase;
pub mod quadrature;
pub mod sum;
pub mod units;

pub use analytic::{MomentSet, Provenance};
pub use error::{Error, Result};
pub use packets::{Family, PacketSpec, Parity};
pub use phase::PhaseExpr;
pub use quadrature::QuadratureConfig;
pub use units::{SymTensor3, UnitContext, Vec3};
