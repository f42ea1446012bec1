//! Lagrangian charts and their affine invariants.
//!
//! A chart is the jet of `λ ↦ x(λ)` at a basepoint. From it come the
//! central-moment tensors `σ_k`, the invariant covector `α₁`, the frame
//! `v₁, …, v_n` and the scalar invariants `σ_k(v_{i₁}, …, v_{i_k})`.
//! Derivatives of invariants along the frame are obtained by running the
//! same pipeline over truncated-series scalars.

mod chart;
mod derivatives;
mod invariants;

pub use chart::{
    chart_from_potential, chart_from_potential_with, random_admissible_potential, ChartJet, ExplicitChart,
    LagrangianFamily, PotentialChart,
};
pub use derivatives::{
    commutator_probe, invariant_derivative, invariant_rank, syzygy_residuals_2d, CommutatorCandidate,
    CommutatorProbe, InvariantJet, RankReport, SyzygyReport,
};
pub use invariants::{
    alpha1, build_frame, frame_at, rel_residual, relation_residuals, scalar_invariants, second_order_invariant,
    sigma_name, sigma_tensors, sorted_tuples, Frame, InvariantTable, RelationReport, Sigma3Relation,
    FRAME_REGULARITY_TOL,
};

use thiserror::Error;

use crate::jets::JetError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("σ₂ is not positive definite")]
    DegenerateSigma2,
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("chart order {found} is too low; need at least {needed}")]
    InsufficientOrder { needed: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown invariant {0:?}")]
    UnknownInvariant(String),
    #[error("this operation is only defined for n = 2")]
    NotTwoDimensional,
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}
