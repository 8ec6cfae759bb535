//! Sparse matrix storage, direct LU factorization and a generalized
//! eigenvalue probe for the discrete inf-sup constant.

mod csr;
mod eig;
mod lu;
mod rcm;

pub use csr::CsrMatrix;
pub use eig::smallest_gen_eig;
pub use lu::{factorize, FactorStats, LuFactorization};
pub use rcm::reverse_cuthill_mckee;
