//! Genetic programming of decision trees with inherited fitness
//! re-evaluation.
//!
//! Trees keep the ids of the training instances that reach each leaf, so an
//! operator only has to re-route instances through the subtree it changed.

pub mod bench;
pub mod costmodel;
pub mod data;
pub mod evolve;
pub mod inherit;
pub mod scalar;
pub mod tree;

pub use scalar::Scalar;

/// Arbitrary-precision rational, used for exact checks.
pub type Exact = num_rational::BigRational;

pub type Individual64 = evolve::Individual<f64>;
pub type ExactIndividual = evolve::Individual<Exact>;
pub type RunReport64 = evolve::RunReport<f64>;
pub type CostTable64 = costmodel::CostTable<f64>;

pub use bench::{run_bench, BenchmarkSpec};
pub use data::{load_csv, Dataset};
pub use evolve::{evolve, Engine, EvolutionConfig};
pub use tree::{DecisionTree, TreeFile};
