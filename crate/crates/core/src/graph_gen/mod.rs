//! Matrix and graph generators: small named examples, Cayley tori, random
//! geometric graphs and random matrix families for property checks.

mod cayley;
mod geometric;
mod random;

pub use cayley::{
    cayley_case1, cayley_case1_with_cap, cayley_case2, cayley_matrix, circle_matrix,
    default_case1_range, CayleyGenerator, DEFAULT_CASE1_ATTEMPTS,
};
pub use geometric::{
    gamma_check, rho_check, sample_geometric, GeometricAudit, GeometricInstance, GeometricMeasured,
    GeometricParams,
};
pub use random::{
    random_circulant, random_consensus, random_reversible, random_reversible_with_conductance,
    random_symmetric,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stochastic::ConsensusMatrix;

/// Entries of the 3-node matrix
///
/// ```text
/// eps  1-eps  0
/// 0    eps    1-eps
/// 1/2  0      1/2
/// ```
///
/// without validation.
pub fn p_epsilon_entries(eps: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[eps, 1.0 - eps, 0.0, 0.0, eps, 1.0 - eps, 0.5, 0.0, 0.5],
    )
}

/// The 3-node family above for `0 < eps <= 1/2`. It commutes with its time
/// reversal only at `eps = 1/2`.
pub fn p_epsilon(eps: f64) -> Result<ConsensusMatrix> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::OutOfRange(format!(
            "epsilon must lie in (0, 1/2], got {eps}"
        )));
    }
    ConsensusMatrix::new(p_epsilon_entries(eps))
}

/// A 4-node matrix that commutes with its time reversal but is neither
/// reversible nor normal.
pub fn commuting_example() -> ConsensusMatrix {
    let s = 10f64.sqrt();
    let a = s - 1.0;
    let b = s + 1.0;
    let raw = DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, 1.0, a, 0.0, //
            1.0, 2.0, 0.0, a, //
            0.0, b, 1.0, 0.0, //
            b, 0.0, 0.0, 1.0,
        ],
    );
    ConsensusMatrix::new(raw / (2.0 + s)).expect("fixed example is a consensus matrix")
}
