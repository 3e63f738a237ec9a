//! Mixed-state topology of non-Hermitian Hamiltonians.
//!
//! Finite-temperature density matrices built on biorthogonal eigenbases are
//! parallel-transported with the Uhlmann connection. From that transport this crate
//! computes:
//!
//! - the Uhlmann phase of loops encircling exceptional rings / hyperspheres,
//! - first and second thermal Uhlmann-Chern numbers (and their unweighted "NT" twins),
//! - the thermal Dixmier-Douady invariant from the Bures metric,
//!
//! for a two-band model on loops and spheres, a three-level model on S³ and a
//! four-band Dirac model on loops and S⁴.
//!
//! Modules, bottom-up: [`linalg`] (biorthogonal eigensystems, ordered exponentials),
//! [`models`], [`thermal`], [`uhlmann`] (connections, holonomy, curvature),
//! [`invariants`] (quadrature), [`sweep`] (parameter sweeps and figure data), and
//! [`checks`] (self-check suites behind `thermotopo check`).

// Guards are written as `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod models;
pub mod sweep;
pub mod thermal;
pub mod uhlmann;

pub use error::{Error, Result};
pub use linalg::{eig_biorthogonal, C64, CMat, EigenSystem};
pub use models::{Embedding, Family, ModelSpec};
pub use thermal::{ThermalState, WeightConvention};
