//! Hermitian eigendecomposition (cyclic complex Jacobi) and the log-det rate.

use num_complex::Complex;
use num_traits::Zero;

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 60;

/// Default relative rank tolerance for [`hermitian_evd`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Truncated eigendecomposition `A ~ U diag(d) U^H` of a Hermitian PSD matrix.
#[derive(Clone, Debug)]
pub struct HermitianEvd<T: Real> {
    /// Semi-unitary `n x r` eigenvector matrix.
    pub vectors: ComplexMatrix<T>,
    /// Retained eigenvalues, descending.
    pub values: Vec<T>,
}

impl<T: Real> HermitianEvd<T> {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `U diag(d) U^H`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let n = self.vectors.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (m, &d) in self.values.iter().enumerate() {
            let u = self.vectors.column(m);
            for i in 0..n {
                let ui = u[i] * d;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + ui * u[j].conj();
                }
            }
        }
        out
    }
}

/// Full eigendecomposition of a Hermitian matrix: all eigenvalues (descending)
/// with the unitary matrix of eigenvectors in matching column order.
///
/// The input is symmetrized as `(A + A^H) / 2` first.
pub fn hermitian_eigen<T: Real>(a: &ComplexMatrix<T>) -> Result<(Vec<T>, ComplexMatrix<T>)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm_sqr().sqrt();
    if scale == T::zero() || n == 1 {
        return Ok(sort_desc(m.diag_real(), v));
    }
    let tiny = T::epsilon() * T::epsilon() * scale * scale;

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off <= tiny {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    Ok(sort_desc(m.diag_real(), v))
}

/// One Jacobi rotation annihilating `m[p][q]`, accumulated into `v`.
fn rotate<T: Real>(m: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let abs = apq.norm();
    if abs == T::zero() {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // negligible relative to the diagonal: zero it outright
    if abs <= T::epsilon() * T::epsilon() * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex::zero();
        m[(q, p)] = Complex::zero();
        return;
    }
    let phase = apq / abs;
    let two = T::one() + T::one();
    let tau = (aqq - app) / (two * abs);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    // V = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane
    let vpp = Complex::new(c, T::zero());
    let vpq = Complex::new(s, T::zero());
    let vqp = phase.conj() * (-s);
    let vqq = phase.conj() * c;

    let n = m.rows();
    // M <- M V
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * vpp + mkq * vqp;
        m[(k, q)] = mkp * vpq + mkq * vqq;
    }
    // M <- V^H M
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = vpp.conj() * mpk + vqp.conj() * mqk;
        m[(q, k)] = vpq.conj() * mpk + vqq.conj() * mqk;
    }
    m[(p, q)] = Complex::zero();
    m[(q, p)] = Complex::zero();
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

fn sort_desc<T: Real>(values: Vec<T>, vectors: ComplexMatrix<T>) -> (Vec<T>, ComplexMatrix<T>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    let n = vectors.rows();
    let mut sorted = ComplexMatrix::zeros(n, order.len());
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            sorted[(i, dst)] = vectors[(i, src)];
        }
    }
    (order.iter().map(|&i| values[i]).collect(), sorted)
}

/// Truncated eigendecomposition of a Hermitian PSD matrix.
///
/// Keeps the eigenpairs with `d > rank_tol * d_max`; the count is the
/// numerical rank. Fails if some eigenvalue lies below `-rank_tol * d_max`.
pub fn hermitian_evd<T: Real>(a: &ComplexMatrix<T>, rank_tol: T) -> Result<HermitianEvd<T>> {
    let (values, vectors) = hermitian_eigen(a)?;
    let scale = values.iter().fold(T::zero(), |acc, d| acc.max(d.abs()));
    // Jacobi eigenvalues carry an absolute error of a few ulps of the norm
    let floor = rank_tol.max(T::epsilon() * T::of(64.0)) * scale;
    if let Some(&min) = values.last() {
        if min < -floor {
            return Err(Error::NotPsd {
                min_eigenvalue: min.as_f64(),
            });
        }
    }
    let keep = values
        .iter()
        .take_while(|&&d| d > rank_tol * scale && d > T::zero())
        .count();
    let n = vectors.rows();
    let mut u = ComplexMatrix::zeros(n, keep);
    for j in 0..keep {
        for i in 0..n {
            u[(i, j)] = vectors[(i, j)];
        }
    }
    Ok(HermitianEvd {
        vectors: u,
        values: values[..keep].to_vec(),
    })
}

/// `true` iff the smallest eigenvalue is at least `-tol * max(1, max|A|)`.
pub fn is_psd<T: Real>(a: &ComplexMatrix<T>, tol: T) -> Result<bool> {
    let (values, _) = hermitian_eigen(a)?;
    let min = values.last().copied().unwrap_or(T::zero());
    Ok(min >= -tol * T::one().max(a.max_abs()))
}

/// `ln det(A)` of a Hermitian positive definite matrix via Cholesky.
///
/// Returns `None` when a pivot is not strictly positive.
pub(crate) fn ln_det_hpd<T: Real>(a: &ComplexMatrix<T>) -> Option<T> {
    let n = a.rows();
    let mut l = ComplexMatrix::<T>::zeros(n, n);
    let mut acc = T::zero();
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d = d - l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex::new(djj, T::zero());
        acc = acc + d.ln();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(acc)
}

/// `log2 det(I + S)` for a Hermitian PSD `S` (unchecked).
pub(crate) fn log2_det_identity_plus<T: Real>(s: &ComplexMatrix<T>) -> T {
    let mut g = s.hermitian_part();
    for i in 0..g.rows() {
        g[(i, i)] = g[(i, i)] + T::one();
    }
    let ln = match ln_det_hpd(&g) {
        Some(v) => v,
        // roundoff pushed I + S off positive definiteness; fall back to eigenvalues
        None => hermitian_eigen(&g)
            .map(|(vals, _)| vals.iter().map(|&v| v.max(T::min_positive_value()).ln()).sum())
            .unwrap_or(T::zero()),
    };
    (ln / T::LN_2()).max(T::zero())
}

/// Spectral efficiency `log2 |I_N + H Q H^H|` in bit/s/Hz.
pub fn log_det_rate<T: Real>(h: &ComplexMatrix<T>, q: &ComplexMatrix<T>) -> Result<T> {
    if !q.is_square() {
        return Err(Error::NotSquare {
            rows: q.rows(),
            cols: q.cols(),
        });
    }
    if h.cols() != q.rows() {
        return Err(Error::Dimension(format!(
            "channel has {} columns but covariance is {}x{}",
            h.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if !is_psd(q, T::psd_tol())? {
        let (vals, _) = hermitian_eigen(q)?;
        return Err(Error::NotPsd {
            min_eigenvalue: vals.last().copied().unwrap_or(T::zero()).as_f64(),
        });
    }
    let hq = h * q;
    let s = &hq * &h.adjoint();
    Ok(log2_det_identity_plus(&s))
}
