//! Weighted graphs `(X, K)`: kernels, windows, path weights, irreducible
//! classes and local isomorphisms.

mod classes;
mod isomorphism;
mod kernel;
mod paths;

pub use classes::{classes_of, irreducible_classes, ClassStructure};
pub use isomorphism::{check_local_isomorphism, IsomorphismCheck, TOL_ISO};
pub use kernel::{
    GeneratorSpec, KernelKind, Row, RowGenerator, SiteVector, SubKernel, WeightedKernel, Window,
};
pub use paths::{
    exit_depths, first_passage_row, first_passage_sequence, kernel_power_row, power_row,
    total_weight, total_weights_all, LogWeight, PathWeights, RowWalk,
};
