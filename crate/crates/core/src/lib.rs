//! Abstract interpretation of convergent fixpoint iterations.
//!
//! The crate provides the CH-Zonotope abstract domain ([`chzono`]), a
//! two-phase abstract fixpoint engine ([`engine`]), monotone operator
//! equilibrium models with their concrete and abstract solvers
//! ([`mondeq`]), end-to-end robustness verification with baselines
//! ([`verifier`]), a scalar affine-arithmetic case study on Householder's
//! square-root iteration ([`householder`]) and model/dataset I/O
//! ([`model_io`]).

pub mod chzono;
pub mod engine;
pub mod householder;
pub mod model_io;
pub mod mondeq;
pub mod numerics;
pub mod oracle;
pub mod verifier;
