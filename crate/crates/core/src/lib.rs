//! Exact explanation queries over boolean classifiers.
//!
//! Supports FBDDs (including decision trees), perceptrons and ReLU MLPs, and
//! answers sufficiency, minimum sufficient reason, necessity, redundancy and
//! completion-count queries both locally (for one instance) and globally (for
//! every instance). Each polynomial algorithm is paired with an exhaustive
//! oracle in [`oracle`] for differential testing.

pub mod bench;
pub mod duality;
pub mod error;
pub mod fbdd_solver;
pub mod generic_solver;
pub mod limits;
pub mod linear_solver;
pub mod models;
pub mod oracle;
pub mod query;
pub mod rational;
pub mod reduce;
pub mod selftest;
pub mod types;
pub mod witness;

pub use error::{Error, Result};
pub use limits::Limits;
pub use models::{Fbdd, Mlp, Model, Perceptron};
pub use rational::Rational;
pub use witness::Witness;
pub use types::{compose, complement, parse_instance, BigCount, CompletionCount, FeatureSubset, Instance};
