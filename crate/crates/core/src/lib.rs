//! Affine differential invariants of measurements.
//!
//! Measuring a point of an affine space `V` with minimal information gain
//! produces a Lagrangian submanifold `x = -dH(λ)` of `V × V*`. The central
//! moments of the underlying distributions are symmetric forms on it, and
//! together with `α₁ = λ_i dx^i` they yield an invariant frame and all scalar
//! invariants of the affine group. This crate computes them numerically:
//!
//! * [`jets`]: truncated Taylor series (the scalar ring) and expressions.
//! * [`affine`]: the affine action, prolongation to jets, orbit counting.
//! * [`expfam`]: finite exponential families, moments, Monte Carlo oracle.
//! * [`frame`]: charts, central-moment tensors, the invariant frame,
//!   invariants, relations and differential syzygies.
//! * [`thermo`]: the specialization to gases in `(T, p)` coordinates.

pub mod affine;
pub mod expfam;
pub mod frame;
pub mod jets;
pub mod linalg;
pub mod scalar;
pub mod tensor;
pub mod thermo;

pub use affine::{AffineElement, FunctionJetPoint, PolyVectorField};
pub use expfam::FiniteEnsemble;
pub use frame::{ChartJet, Frame, InvariantTable, LagrangianFamily};
pub use jets::{Expr, MultiIndex, SeriesLayout, TruncatedSeries};
pub use scalar::Scalar;
pub use tensor::SymTensor;
pub use thermo::GasChart;
