//! Reduction of completely integrable 2×2 linear systems to scalar equations
//! that do not depend on the deformation parameter.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`catalog`] holds Lax pairs specialised at algebraic Painlevé solutions.
//! 2. [`scalarize`] checks the zero-curvature condition and eliminates one
//!    component, giving a second-order equation in `x` plus a first-order
//!    relation between `x`- and `t`-derivatives.
//! 3. [`reduction`] splits that relation into its `x`- and `t`-dependent
//!    factors and builds the new independent variable `tau` and gauge factor.
//! 4. [`verify`] certifies numerically that the reduced coefficients depend
//!    on `tau` only, identifies the classical equation reached, and cross-checks
//!    against direct numerical solutions of the linear system.

pub mod catalog;
pub mod expr;
pub mod reduction;
pub mod report;
pub mod scalarize;
pub mod verify;

pub use catalog::{lookup, list_entries, CatalogEntry, Component, LaxPair};
pub use expr::{Binding, Expr, ExprError, Path, Var, C64};
pub use verify::{full_report, ClassicalTarget, Config, VerificationReport};
