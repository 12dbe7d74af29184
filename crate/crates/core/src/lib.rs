//! LQ cost of linear consensus on strongly connected networks, with
//! effective-resistance bounds, matrix generators and experiment drivers.

// NaN must fail every range check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod graph_gen;
pub mod io;
mod linalg;
pub mod lqcost;
pub mod resistance;
pub mod stochastic;

pub use error::{Error, Result};
pub use stochastic::ConsensusMatrix;
