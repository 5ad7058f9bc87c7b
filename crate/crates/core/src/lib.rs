//! Matrix-valued Fourier analysis and the subelliptic pseudo-differential
//! calculus on the torus `T^n` and on `SU(2)`.

pub mod error;
pub mod experiments;
pub mod field;
pub mod fit;
pub mod fio;
pub mod fourier;
pub mod funcalc;
pub mod group;
pub mod io;
pub mod linalg;
pub mod par;
pub mod subelliptic;
pub mod symbol;
pub mod traces;

pub use error::{Error, Result};
pub use field::{MatrixField, SpatialSymbol};
pub use group::{Dual, Group, GroupPoint, Irrep, Label, QuadratureGrid};
