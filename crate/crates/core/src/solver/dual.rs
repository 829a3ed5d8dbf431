//! Projected subgradient loop on the per-RAU power prices.
//!
//! Solves `max_Q log2|I + H Q H^H| - price * tr(Q)` subject to
//! `tr(B_i Q) <= P_i`, `Q >= 0` through its Lagrangian dual. Each iteration
//! water-fills with weights `price + lambda_i` on block `i`, then moves the
//! prices along the subgradient `s_i = P_i - tr(B_i Q)`.

use super::types::{PowerModel, SolverConfig};
use super::waterfill::{water_level, waterfill_raw, FactoredCovariance};
use crate::error::Result;
use crate::numerics::{gram_evd, ComplexMatrix};
use crate::scalar::Real;

/// Largest factor by which one dual step may shrink a price that has no
/// `price * I` term backing it. Keeps the weights positive definite.
const MAX_SHRINK: f64 = 0.5;

/// Coordinate sweeps and per-coordinate bisection steps that polish the
/// prices when the subgradient loop hits its cap at a positive price.
const POLISH_SWEEPS: usize = 6;
const POLISH_BISECTIONS: usize = 40;

#[derive(Clone, Debug)]
pub(crate) struct DualOutcome<T: Real> {
    pub factored: FactoredCovariance<T>,
    pub rate: T,
    pub block_powers: Vec<T>,
    pub transmit_power: T,
    pub iters: usize,
    pub converged: bool,
    /// Prices after the last update.
    pub lambda: Vec<T>,
}

impl<T: Real> DualOutcome<T> {
    pub fn objective(&self, price: T) -> T {
        self.rate - price * self.transmit_power
    }
}

/// Runs the dual loop; returns the best feasible iterate seen.
///
/// `warm` overrides the starting prices. `trace`, when given, receives the
/// best objective after every iteration.
pub(crate) fn dual_loop<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    price: T,
    cfg: &SolverConfig<T>,
    warm: Option<&[T]>,
    mut trace: Option<&mut Vec<T>>,
) -> Result<DualOutcome<T>> {
    let ranges: Vec<_> = power.block_ranges().collect();
    let limits = &power.per_rau_limits_w;
    let mut lambda = match warm {
        Some(w) if w.len() == limits.len() && (price > T::zero() || w.iter().all(|&l| l > T::zero())) => w.to_vec(),
        // with a positive price B is already positive definite at lambda = 0
        _ if price > T::zero() => vec![T::zero(); limits.len()],
        _ => initial_prices(h, limits, &ranges, cfg.rank_tol)?,
    };
    let mut probe = Probe {
        h,
        limits,
        ranges: &ranges,
        price,
        rank_tol: cfg.rank_tol,
        weights: vec![T::zero(); power.antenna_count()],
    };
    let tol = cfg.tolerance * power.max_limit();
    let shrink = T::of(MAX_SHRINK);

    let mut best: Option<DualOutcome<T>> = None;
    let keep = |best: &mut Option<DualOutcome<T>>, c: DualOutcome<T>| {
        if best.as_ref().is_none_or(|b| c.objective(price) > b.objective(price)) {
            *best = Some(c);
        }
    };
    let mut converged = false;
    let mut iters = 0;
    for k in 1..=cfg.max_subgradient_iters {
        iters = k;
        let (slack, candidate) = probe.eval(&lambda, true)?;
        let residual = slack
            .iter()
            .zip(&lambda)
            .map(|(&s, &l)| (s * l).abs())
            .fold(T::zero(), T::max)
            + slack.iter().map(|&s| (-s).max(T::zero())).fold(T::zero(), T::max);
        keep(&mut best, candidate.expect("candidate requested"));
        if let Some(t) = trace.as_deref_mut() {
            t.push(best.as_ref().map_or(T::zero(), |b| b.objective(price)));
        }
        if residual <= tol {
            converged = true;
            break;
        }

        let step = T::one() / (cfg.subgradient_step_scale * T::of(k as f64));
        for (l, &s) in lambda.iter_mut().zip(&slack) {
            let floor = if price > T::zero() { T::zero() } else { *l * shrink };
            *l = (*l - step * s).max(floor);
        }
    }
    if !converged && price > T::zero() {
        for _ in 0..POLISH_SWEEPS {
            let before = lambda.clone();
            for i in 0..lambda.len() {
                lambda[i] = probe.price_root(&mut lambda.clone(), i, tol)?;
            }
            let (_, candidate) = probe.eval(&lambda, true)?;
            keep(&mut best, candidate.expect("candidate requested"));
            let moved = lambda
                .iter()
                .zip(&before)
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max);
            if moved <= cfg.tolerance * lambda.iter().copied().fold(T::zero(), T::max) {
                break;
            }
        }
    }
    let mut out = best.unwrap_or_else(|| DualOutcome {
        factored: FactoredCovariance::zero(h.cols()),
        rate: T::zero(),
        block_powers: vec![T::zero(); limits.len()],
        transmit_power: T::zero(),
        iters: 0,
        converged: false,
        lambda: Vec::new(),
    });
    out.iters = iters;
    out.converged = converged;
    out.lambda = lambda;
    Ok(out)
}

/// Water-fills at given prices and recovers a feasible candidate.
struct Probe<'a, T: Real> {
    h: &'a ComplexMatrix<T>,
    limits: &'a [T],
    ranges: &'a [std::ops::Range<usize>],
    price: T,
    rank_tol: T,
    weights: Vec<T>,
}

impl<T: Real> Probe<'_, T> {
    /// Per-block slack `P_i - tr(B_i Q)` and, when asked, the best of the
    /// recovered feasible candidates.
    fn eval(&mut self, lambda: &[T], recover: bool) -> Result<(Vec<T>, Option<DualOutcome<T>>)> {
        let (h, limits, ranges, price) = (self.h, self.limits, self.ranges, self.price);
        for (r, &l) in ranges.iter().zip(lambda) {
            self.weights[r.clone()].fill(price + l);
        }
        let raw = waterfill_raw(h, &self.weights, self.rank_tol)?;
        let block_powers = raw.factored.block_powers(ranges.iter().cloned());
        let slack: Vec<T> = limits.iter().zip(&block_powers).map(|(&p, &b)| p - b).collect();
        if !recover {
            return Ok((slack, None));
        }
        let candidate = if price > T::zero() {
            let active = snap(raw.factored.clone(), &block_powers, lambda, limits, ranges, h);
            let repaired = repair(raw.factored, raw.rate, block_powers, limits, ranges, h);
            match active {
                Some(a) if a.objective(price) > repaired.objective(price) => a,
                _ => repaired,
            }
        } else {
            let filled = fill(raw.factored.clone(), &block_powers, limits, ranges, h);
            let repaired = repair(raw.factored, raw.rate, block_powers, limits, ranges, h);
            match filled {
                Some(f) if f.rate > repaired.rate => f,
                _ => repaired,
            }
        };
        Ok((slack, Some(candidate)))
    }

    /// Exact minimizer of the dual over `lambda[i]` with the others held:
    /// the price at which block `i` meets its limit, or 0 if it has slack
    /// there. Block power is nonincreasing in its own price.
    fn price_root(&mut self, lambda: &mut [T], i: usize, tol: T) -> Result<T> {
        let slack_at = |l: T, lambda: &mut [T], probe: &mut Self| -> Result<T> {
            lambda[i] = l;
            Ok(probe.eval(lambda, false)?.0[i])
        };
        let two = T::one() + T::one();
        let mut lo = T::zero();
        if slack_at(lo, lambda, self)? >= T::zero() {
            return Ok(lo);
        }
        let mut hi = lambda[i].max(T::of(1e-3));
        let mut grow = 0;
        while slack_at(hi, lambda, self)? < T::zero() {
            lo = hi;
            hi = hi * two;
            grow += 1;
            if grow > 60 {
                return Ok(hi);
            }
        }
        for _ in 0..POLISH_BISECTIONS {
            let mid = (lo + hi) / two;
            let s = slack_at(mid, lambda, self)?;
            if s.abs() <= tol {
                return Ok(mid);
            }
            if s < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Starting prices: each RAU's price is the one at which water-filling over
/// its own channel block alone spends exactly its limit.
fn initial_prices<T: Real>(
    h: &ComplexMatrix<T>,
    limits: &[T],
    ranges: &[std::ops::Range<usize>],
    rank_tol: T,
) -> Result<Vec<T>> {
    ranges
        .iter()
        .zip(limits)
        .map(|(r, &p)| {
            let data = (0..h.rows())
                .flat_map(|i| h.row(i)[r.clone()].iter().copied())
                .collect();
            let block = ComplexMatrix::from_vec(h.rows(), r.len(), data)?;
            let evd = gram_evd(&block, rank_tol)?;
            Ok(match water_level(&evd.values, p) {
                Some(mu) => T::one() / (mu * T::of(std::f64::consts::LN_2)),
                None => T::one(),
            })
        })
        .collect()
}

/// Scales every block that carries power onto its limit.
fn fill<T: Real>(
    mut factored: FactoredCovariance<T>,
    block_powers: &[T],
    limits: &[T],
    ranges: &[std::ops::Range<usize>],
    h: &ComplexMatrix<T>,
) -> Option<DualOutcome<T>> {
    if block_powers.iter().all(|&b| b <= T::zero()) {
        return None;
    }
    let factors: Vec<T> = block_powers
        .iter()
        .zip(limits)
        .map(|(&b, &p)| if b > T::zero() { p / b } else { T::one() })
        .collect();
    factored.scale_blocks(ranges.iter().cloned(), &factors);
    let bp: Vec<T> = block_powers
        .iter()
        .zip(limits)
        .map(|(&b, &p)| if b > T::zero() { p } else { b })
        .collect();
    Some(DualOutcome {
        rate: factored.rate(h),
        factored,
        transmit_power: bp.iter().copied().sum(),
        block_powers: bp,
        iters: 0,
        converged: false,
        lambda: Vec::new(),
    })
}

/// Scales blocks with a positive price onto their limit and over-budget
/// blocks down onto it; `None` when that changes nothing.
fn snap<T: Real>(
    mut factored: FactoredCovariance<T>,
    block_powers: &[T],
    lambda: &[T],
    limits: &[T],
    ranges: &[std::ops::Range<usize>],
    h: &ComplexMatrix<T>,
) -> Option<DualOutcome<T>> {
    let target = |b: T, l: T, p: T| {
        if (l > T::zero() && b > T::zero()) || b > p {
            p
        } else {
            b
        }
    };
    let bp: Vec<T> = block_powers
        .iter()
        .zip(lambda)
        .zip(limits)
        .map(|((&b, &l), &p)| target(b, l, p))
        .collect();
    if bp.iter().zip(block_powers).all(|(&n, &b)| n == b || b > n) {
        return None;
    }
    let factors: Vec<T> = bp
        .iter()
        .zip(block_powers)
        .map(|(&n, &b)| if b > T::zero() { n / b } else { T::one() })
        .collect();
    factored.scale_blocks(ranges.iter().cloned(), &factors);
    Some(DualOutcome {
        rate: factored.rate(h),
        factored,
        transmit_power: bp.iter().copied().sum(),
        block_powers: bp,
        iters: 0,
        converged: false,
        lambda: Vec::new(),
    })
}

/// Scales every over-budget block down onto its power limit.
fn repair<T: Real>(
    mut factored: FactoredCovariance<T>,
    rate: T,
    block_powers: Vec<T>,
    limits: &[T],
    ranges: &[std::ops::Range<usize>],
    h: &ComplexMatrix<T>,
) -> DualOutcome<T> {
    let factors: Vec<T> = block_powers
        .iter()
        .zip(limits)
        .map(|(&b, &p)| if b > p { p / b } else { T::one() })
        .collect();
    let (rate, block_powers) = if factors.iter().any(|&f| f < T::one()) {
        factored.scale_blocks(ranges.iter().cloned(), &factors);
        let bp: Vec<T> = block_powers.iter().zip(limits).map(|(&b, &p)| b.min(p)).collect();
        (factored.rate(h), bp)
    } else {
        (rate, block_powers)
    };
    DualOutcome {
        factored,
        rate,
        transmit_power: block_powers.iter().copied().sum(),
        block_powers,
        iters: 0,
        converged: false,
        lambda: Vec::new(),
    }
}
