//! Built-in problems, dataset loaders and synthetic generators.

pub mod data;
pub mod fairness;
pub mod finite_sum;
pub mod losses;
pub mod neyman_pearson;
pub mod simple;
pub mod synthetic;
pub mod toy;

pub use data::{load_csv, load_libsvm, write_libsvm, Dataset, Features};
pub use fairness::{build_fairness_problem, FairnessSpec};
pub use neyman_pearson::{build_neyman_pearson, NeymanPearsonSpec};
pub use simple::build_simple_example;
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticKind};
pub use toy::build_stochastic_toy;
