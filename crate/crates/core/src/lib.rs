//! Branching random walks on weighted graphs: critical values, extinction and
//! survival probabilities, and the geometric parameters of the underlying kernel.

pub mod error;
pub mod graph;

pub use error::{Error, Result};
pub use graph::{SiteVector, SubKernel, WeightedKernel, Window};
pub mod branching;
pub mod brw;
pub mod corpus;
pub mod critical;
pub mod genfun;
pub mod io;
pub mod sim;
pub mod spectral;
