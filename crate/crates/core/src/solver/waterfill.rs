//! Closed-form maximizer of `log2|I + H Q H^H| - tr(B Q)` for diagonal `B`.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{gram_evd, log2_det_identity_plus, ComplexMatrix};
use crate::scalar::Real;

/// Covariance in factored form `Q = W diag(q) W^H`.
#[derive(Clone, Debug)]
pub(crate) struct FactoredCovariance<T: Real> {
    pub directions: ComplexMatrix<T>,
    pub powers: Vec<T>,
}

impl<T: Real> FactoredCovariance<T> {
    pub fn zero(m: usize) -> Self {
        Self {
            directions: ComplexMatrix::zeros(m, 0),
            powers: Vec::new(),
        }
    }

    pub fn dense(&self) -> ComplexMatrix<T> {
        let m = self.directions.rows();
        let mut q = ComplexMatrix::zeros(m, m);
        for (k, &p) in self.powers.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            for i in 0..m {
                let wi = self.directions[(i, k)] * p;
                if wi.is_zero() {
                    continue;
                }
                for j in 0..m {
                    q[(i, j)] = q[(i, j)] + wi * self.directions[(j, k)].conj();
                }
            }
        }
        q.hermitian_part()
    }

    /// `tr(B_i Q)` for every block.
    pub fn block_powers(&self, ranges: impl Iterator<Item = std::ops::Range<usize>>) -> Vec<T> {
        ranges
            .map(|r| {
                r.map(|i| {
                    self.powers
                        .iter()
                        .enumerate()
                        .map(|(k, &p)| p * self.directions[(i, k)].norm_sqr())
                        .sum::<T>()
                })
                .sum()
            })
            .collect()
    }

    /// Scales the rows of each block by `sqrt(factor_i)` (i.e. `D Q D`).
    pub fn scale_blocks(&mut self, ranges: impl Iterator<Item = std::ops::Range<usize>>, factors: &[T]) {
        for (r, &f) in ranges.zip(factors) {
            if f == T::one() {
                continue;
            }
            let s = f.sqrt();
            for i in r {
                for k in 0..self.directions.cols() {
                    self.directions[(i, k)] = self.directions[(i, k)] * s;
                }
            }
        }
    }

    /// `(1 - t) self + t other`.
    pub fn mix(&self, other: &Self, t: T) -> Self {
        let m = self.directions.rows();
        let a = self.powers.len();
        let mut directions = ComplexMatrix::zeros(m, a + other.powers.len());
        for i in 0..m {
            for k in 0..a {
                directions[(i, k)] = self.directions[(i, k)];
            }
            for k in 0..other.powers.len() {
                directions[(i, a + k)] = other.directions[(i, k)];
            }
        }
        let powers = self
            .powers
            .iter()
            .map(|&p| p * (T::one() - t))
            .chain(other.powers.iter().map(|&p| p * t))
            .collect();
        Self { directions, powers }
    }

    /// `log2|I + H Q H^H|`.
    pub fn rate(&self, h: &ComplexMatrix<T>) -> T {
        if self.powers.is_empty() {
            return T::zero();
        }
        let hw = h * &self.directions;
        let n = h.rows();
        let mut k = ComplexMatrix::zeros(n, n);
        for (m, &p) in self.powers.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            for i in 0..n {
                let a = hw[(i, m)] * p;
                for j in 0..n {
                    k[(i, j)] = k[(i, j)] + a * hw[(j, m)].conj();
                }
            }
        }
        log2_det_identity_plus(&k)
    }
}

/// Water level `mu` with `sum_m [mu - 1/g_m]^+ = total` for positive gains.
pub(crate) fn water_level<T: Real>(gains: &[T], total: T) -> Option<T> {
    let mut g: Vec<T> = gains.iter().copied().filter(|&x| x > T::zero()).collect();
    g.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut inv_sum = T::zero();
    let mut level = None;
    for (k, &x) in g.iter().enumerate() {
        inv_sum = inv_sum + T::one() / x;
        let mu = (total + inv_sum) / T::of((k + 1) as f64);
        if mu > T::one() / x {
            level = Some(mu);
        } else {
            break;
        }
    }
    level
}

/// Output of [`inner_waterfill`].
#[derive(Clone, Debug)]
pub struct Waterfill<T: Real> {
    /// The maximizing covariance `Q = B^{-1/2} U Lambda U^H B^{-1/2}`.
    pub covariance: ComplexMatrix<T>,
    /// Eigenvectors `U` of `B^{-1/2} H^H H B^{-1/2}` (`M x r`).
    pub eigenvectors: ComplexMatrix<T>,
    /// Eigenvalues `d_m`, descending.
    pub eigenvalues: Vec<T>,
    /// Mode powers `q_m = [1/ln2 - 1/d_m]^+`.
    pub mode_powers: Vec<T>,
}

pub(crate) struct RawWaterfill<T: Real> {
    pub factored: FactoredCovariance<T>,
    pub eigenvectors: ComplexMatrix<T>,
    pub eigenvalues: Vec<T>,
    /// `sum_m log2(1 + q_m d_m)`, the exact rate of the unscaled solution.
    pub rate: T,
}

pub(crate) fn waterfill_raw<T: Real>(h: &ComplexMatrix<T>, weights: &[T], rank_tol: T) -> Result<RawWaterfill<T>> {
    if weights.len() != h.cols() {
        return Err(Error::Dimension(format!(
            "{} weights for {} channel columns",
            weights.len(),
            h.cols()
        )));
    }
    if let Some(w) = weights.iter().find(|&&w| !(w > T::zero())) {
        return Err(Error::InvalidArgument(format!("weight {w} is not strictly positive")));
    }
    let inv_sqrt: Vec<T> = weights.iter().map(|&w| T::one() / w.sqrt()).collect();
    let g = h.scale_columns(&inv_sqrt);
    let evd = gram_evd(&g, rank_tol)?;
    let level = T::inv_ln2();
    let mode_powers: Vec<T> = evd
        .values
        .iter()
        .map(|&d| (level - T::one() / d).max(T::zero()))
        .collect();
    let rate = evd
        .values
        .iter()
        .zip(&mode_powers)
        .map(|(&d, &q)| (T::one() + q * d).log2())
        .sum();
    let mut directions = evd.vectors.clone();
    for i in 0..directions.rows() {
        for k in 0..directions.cols() {
            directions[(i, k)] = directions[(i, k)] * inv_sqrt[i];
        }
    }
    Ok(RawWaterfill {
        factored: FactoredCovariance {
            directions,
            powers: mode_powers,
        },
        eigenvectors: evd.vectors,
        eigenvalues: evd.values,
        rate,
    })
}

/// Maximizes `log2|I + H Q H^H| - tr(B Q)` over PSD `Q` for `B = diag(weights)`
/// with strictly positive weights, by water-filling over the eigenmodes of
/// `B^{-1/2} H^H H B^{-1/2}`.
pub fn inner_waterfill<T: Real>(h: &ComplexMatrix<T>, weights: &[T], rank_tol: T) -> Result<Waterfill<T>> {
    let raw = waterfill_raw(h, weights, rank_tol)?;
    Ok(Waterfill {
        covariance: raw.factored.dense(),
        eigenvectors: raw.eigenvectors,
        eigenvalues: raw.eigenvalues,
        mode_powers: raw.factored.powers,
    })
}

/// Rank-one maximum ratio transmission covariance
/// `Q = q B^{-1} h^H h B^{-1} / ||B^{-1/2} h^H||^2` for a row channel `h`.
///
/// Satisfies `tr(B Q) = q`.
pub fn miso_mrt_covariance<T: Real>(h: &[Complex<T>], weights: &[T], q: T) -> Result<ComplexMatrix<T>> {
    if h.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} channel entries for {} weights",
            h.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::InvalidArgument("weights must be strictly positive".into()));
    }
    if !(q >= T::zero()) {
        return Err(Error::InvalidArgument("power must be nonnegative".into()));
    }
    let norm: T = h.iter().zip(weights).map(|(z, &w)| z.norm_sqr() / w).sum();
    if norm == T::zero() {
        return Err(Error::InvalidArgument("zero channel vector".into()));
    }
    let v: Vec<Complex<T>> = h.iter().zip(weights).map(|(z, &w)| z.conj() / w).collect();
    Ok(ComplexMatrix::outer(&v, &v).scale(q / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn scalar_channel_matches_closed_form() {
        // maximize log2(1 + |h|^2 q) - b q  =>  q = 1/(b ln2) - 1/|h|^2
        let h = ComplexMatrix::from_rows(&[vec![c(1.5, -0.5)]]).unwrap();
        let b = 0.3;
        let wf = inner_waterfill(&h, &[b], 1e-10).unwrap();
        let g = 2.5;
        let expect = (1.0 / std::f64::consts::LN_2 - b / g) / b;
        assert!((wf.covariance[(0, 0)].re - expect).abs() < 1e-12);

        // dense 1-D grid on the objective
        let obj = |q: f64| (1.0 + g * q).log2() - b * q;
        let best = (0..=200_000)
            .map(|k| k as f64 * 1e-4)
            .fold(
                (0.0, f64::NEG_INFINITY),
                |acc, q| if obj(q) > acc.1 { (q, obj(q)) } else { acc },
            );
        assert!((best.0 - expect).abs() < 2e-4);
    }

    #[test]
    fn water_level_spends_the_budget() {
        let g: [f64; 3] = [4.0, 1.0, 0.05];
        let mu = water_level(&g, 2.0).unwrap();
        let spent: f64 = g.iter().map(|&x| (mu - 1.0 / x).max(0.0)).sum();
        assert!((spent - 2.0).abs() < 1e-12);
        assert!(mu < 1.0 / 0.05);
        assert!(water_level(&[0.0], 1.0).is_none());
    }

    #[test]
    fn weak_modes_get_no_power() {
        let h = ComplexMatrix::from_rows(&[vec![c(0.1, 0.0), c(0.0, 0.2)]]).unwrap();
        let wf = inner_waterfill(&h, &[1.0, 1.0], 1e-10).unwrap();
        assert!(wf.eigenvalues[0] <= std::f64::consts::LN_2);
        assert_eq!(wf.covariance.max_abs(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let h = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!(inner_waterfill(&h, &[1.0, 0.0], 1e-10).is_err());
        assert!(inner_waterfill(&h, &[1.0, -2.0], 1e-10).is_err());
        assert!(inner_waterfill(&h, &[1.0], 1e-10).is_err());
    }

    #[test]
    fn mrt_unit_weights_is_textbook() {
        let h = [c(1.0, 1.0), c(-0.5, 2.0)];
        let q = miso_mrt_covariance(&h, &[1.0, 1.0], 7.0).unwrap();
        let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let hc: Vec<_> = h.iter().map(|z| z.conj()).collect();
        let expect = ComplexMatrix::outer(&hc, &hc).scale(7.0 / n2);
        assert!(q.max_abs_diff(&expect) < 1e-14);
        assert!((q.trace().re - 7.0).abs() < 1e-14);
    }

    #[test]
    fn mrt_weighted_trace_identity() {
        let h = [c(0.3, -1.0), c(2.0, 0.1), c(0.0, 0.7)];
        let w = [0.5, 2.0, 1.3];
        let q = miso_mrt_covariance(&h, &w, 4.2).unwrap();
        let tr_bq: f64 = (0..3).map(|i| w[i] * q[(i, i)].re).sum();
        assert!((tr_bq - 4.2).abs() < 1e-13);
        assert!(miso_mrt_covariance(&[c(0.0, 0.0)], &[1.0], 1.0).is_err());
    }
}
