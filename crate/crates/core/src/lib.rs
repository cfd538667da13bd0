//! Two-qubit states, a Bell-type inequality whose bound depends on the state
//! decomposition at hand, and tools to probe it numerically.
//!
//! The quantity of interest for a mixture ϱ = Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ| and four two-outcome
//! observables (a, d on the first qubit, b, c on the second) is
//!
//! ⟨B⟩ = |⟨ab⟩ − ⟨ac⟩| + Σᵢ pᵢ |⟨db⟩ᵢ + ⟨dc⟩ᵢ|,
//!
//! where ⟨··⟩ is a full-state correlation and ⟨··⟩ᵢ one taken in the i-th pure
//! term. Classical (local realistic) models keep ⟨B⟩ ≤ 2 no matter which
//! decomposition is plugged in, while suitable quantum states push past the
//! bound even when they admit other decompositions that do not.
//!
//! - [`qstate`]: density matrices, pure states, convex decompositions, the
//!   state families used throughout, and the concurrence.
//! - [`bell`]: observables, correlations, inequality evaluation, CHSH.
//! - [`optimize`]: deterministic maximization of ⟨B⟩ over settings.
//! - [`sampler`]: finite-shot correlation estimates.
//! - [`sweep`]: parameter sweeps over the state families, CSV output.

pub mod bell;
pub mod error;
pub mod optimize;
pub mod qstate;
pub mod sampler;
pub mod sweep;

pub use error::{Error, Result};

pub use nalgebra;
pub use num_complex;
