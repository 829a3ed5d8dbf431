//! Complex Hermitian linear-algebra kernel.

mod evd;
mod matrix;

pub(crate) use evd::log2_det_identity_plus;
pub use evd::{hermitian_eigen, hermitian_evd, is_psd, log_det_rate, HermitianEvd, DEFAULT_RANK_TOL};
pub use matrix::ComplexMatrix;

use crate::error::Result;
use crate::scalar::Real;

/// Eigenpairs of the tall Gram matrix `G^H G` (`M x M`) obtained from the
/// small `N x N` matrix `G G^H`.
///
/// If `G G^H = V D V^H` then `G^H G = U D U^H` with `U = G^H V D^{-1/2}`.
pub fn gram_evd<T: Real>(g: &ComplexMatrix<T>, rank_tol: T) -> Result<HermitianEvd<T>> {
    let small = hermitian_evd(&g.gram_rows(), rank_tol)?;
    let gh = g.adjoint();
    let lifted = &gh * &small.vectors;
    let r = small.rank();
    let m = g.cols();
    let mut u = ComplexMatrix::zeros(m, r);
    for j in 0..r {
        // renormalize instead of dividing by sqrt(d) to absorb roundoff
        let col = lifted.column(j);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = z / norm;
        }
    }
    Ok(HermitianEvd {
        vectors: u,
        values: small.values,
    })
}
