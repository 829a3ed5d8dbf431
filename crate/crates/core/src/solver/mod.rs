//! Transmit covariance optimization for a fixed set of active RAUs.
//!
//! Three subproblems share one dual water-filling engine:
//!
//! * rate maximization under per-RAU power limits ([`solve_p1`]),
//! * energy-efficiency maximization without a rate floor, by Dinkelbach
//!   iterations on `G(eta) = max R(Q) - eta (tr Q + P_C)` ([`solve_p2`]),
//! * transmit power minimization subject to a rate floor, by bisection on
//!   the power price `mu` below the Dinkelbach ratio ([`solve_p3`]).
//!
//! [`solve_ee_fixed_set`] chains them into the EE problem with a rate floor.
//! All rates are in bit/s/Hz.

mod dual;
mod types;
mod waterfill;

pub use types::{CovarianceSolution, PowerModel, SolveStats, SolveStatus, SolveTrace, SolverConfig};
pub use waterfill::{inner_waterfill, miso_mrt_covariance, Waterfill};

use std::cell::OnceCell;

use dual::{dual_loop, DualOutcome};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::scalar::Real;

fn check_inputs<T: Real>(h: &ComplexMatrix<T>, power: &PowerModel<T>, cfg: &SolverConfig<T>) -> Result<()> {
    power.validate()?;
    cfg.validate()?;
    if h.cols() != power.antenna_count() {
        return Err(Error::Dimension(format!(
            "channel has {} columns, power model covers {} antennas",
            h.cols(),
            power.antenna_count()
        )));
    }
    if h.rows() == 0 || h.max_abs() == T::zero() {
        return Err(Error::InvalidArgument("channel matrix is zero".into()));
    }
    Ok(())
}

fn solution<T: Real>(
    power: &PowerModel<T>,
    out: DualOutcome<T>,
    status: SolveStatus,
    stats: SolveStats,
) -> CovarianceSolution<T> {
    CovarianceSolution {
        covariance: out.factored.dense(),
        rate_bps_hz: out.rate,
        transmit_power_w: out.transmit_power,
        energy_efficiency: power.energy_efficiency(out.rate, out.transmit_power),
        per_rau_power_w: out.block_powers,
        circuit_power_w: power.circuit_power_w,
        bandwidth_hz: power.bandwidth_hz,
        status,
        dual_eta: None,
        bisection_mu: None,
        stats,
    }
}

fn loop_stats<T: Real>(out: &DualOutcome<T>) -> SolveStats {
    SolveStats {
        subgradient_iters: out.iters,
        dual_loops: 1,
        converged: out.converged,
        ..SolveStats::default()
    }
}

/// Maximizes `log2|I + H Q H^H|` subject to `tr(B_i Q) <= P_i`.
pub fn solve_p1<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<CovarianceSolution<T>> {
    solve_p1_traced(h, power, cfg).map(|(s, _)| s)
}

/// [`solve_p1`] plus the best-rate-so-far series of the dual loop.
pub fn solve_p1_traced<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<(CovarianceSolution<T>, SolveTrace<T>)> {
    check_inputs(h, power, cfg)?;
    let mut trace = SolveTrace::default();
    let out = dual_loop(h, power, T::zero(), cfg, None, Some(&mut trace.subgradient))?;
    let stats = loop_stats(&out);
    Ok((solution(power, out, SolveStatus::Optimal, stats), trace))
}

struct Dinkelbach<T: Real> {
    out: DualOutcome<T>,
    eta: T,
    stats: SolveStats,
}

fn dinkelbach<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    cfg: &SolverConfig<T>,
    rate_max: Option<&DualOutcome<T>>,
    trace: &mut SolveTrace<T>,
) -> Result<Dinkelbach<T>> {
    let pc = power.circuit_power_w;
    let mut stats = SolveStats {
        converged: true,
        ..SolveStats::default()
    };
    // eta^(0) = 0 makes the first subproblem the rate maximization
    let mut eta = T::zero();
    let mut current = match rate_max {
        Some(out) => out.clone(),
        None => {
            let out = dual_loop(h, power, eta, cfg, None, None)?;
            stats.absorb(&loop_stats(&out));
            out
        }
    };
    let mut converged = false;
    for n in 0..cfg.max_dinkelbach_iters {
        let gap = current.rate - eta * (current.transmit_power + pc);
        trace.dinkelbach_eta.push(eta);
        trace.dinkelbach_gap.push(gap);
        stats.dinkelbach_iters = n + 1;
        if gap.abs() <= cfg.tolerance {
            converged = true;
            break;
        }
        let denom = current.transmit_power + pc;
        if !(denom > T::zero()) {
            break;
        }
        let next_eta = (current.rate / denom).max(eta);
        let warm = (eta > T::zero()).then_some(current.lambda.as_slice());
        let next = dual_loop(h, power, next_eta, cfg, warm, None)?;
        stats.absorb(&loop_stats(&next));
        // the previous covariance attains G(next_eta) = 0; an inexact inner
        // solve must not fall below it
        if next.objective(next_eta) - next_eta * pc >= T::zero() {
            current = next;
        }
        eta = next_eta;
    }
    stats.converged &= converged;
    Ok(Dinkelbach {
        out: current,
        eta,
        stats,
    })
}

/// Maximizes `log2|I + H Q H^H| / (tr Q + P_C)` over the per-RAU power region.
pub fn solve_p2<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<CovarianceSolution<T>> {
    solve_p2_traced(h, power, cfg).map(|(s, _)| s)
}

/// [`solve_p2`] plus the `eta^(n)` and `G(eta^(n))` series.
pub fn solve_p2_traced<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<(CovarianceSolution<T>, SolveTrace<T>)> {
    check_inputs(h, power, cfg)?;
    let mut trace = SolveTrace::default();
    let d = dinkelbach(h, power, cfg, None, &mut trace)?;
    let mut sol = solution(power, d.out, SolveStatus::Optimal, d.stats);
    sol.dual_eta = Some(d.eta);
    Ok((sol, trace))
}

struct Bisection<T: Real> {
    out: Option<DualOutcome<T>>,
    mu: T,
    stats: SolveStats,
}

#[allow(clippy::too_many_arguments)]
fn bisection<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    rate_floor: T,
    eta_star: T,
    warm: &[T],
    ceiling: Option<&DualOutcome<T>>,
    cfg: &SolverConfig<T>,
    trace: &mut SolveTrace<T>,
) -> Result<Bisection<T>> {
    let eps = cfg.tolerance;
    let mut stats = SolveStats {
        converged: true,
        ..SolveStats::default()
    };
    let mut lo = eps * eta_star;
    let mut hi = eta_star;
    let mut best: Option<(T, DualOutcome<T>)> = None;
    let mut below: Option<DualOutcome<T>> = None;
    let mut converged = false;
    let mut hit = false;
    let mut warm = warm.to_vec();
    for it in 1..=cfg.max_bisection_iters {
        stats.bisection_iters = it;
        let mid = (lo + hi) / (T::one() + T::one());
        let out = dual_loop(h, power, mid, cfg, Some(&warm), None)?;
        warm.clone_from(&out.lambda);
        stats.absorb(&loop_stats(&out));
        trace.bisection.push((mid, out.rate));
        hit = (out.rate - rate_floor).abs() <= eps * rate_floor;
        if hit || out.rate >= rate_floor {
            lo = mid;
            best = Some((mid, out));
        } else {
            hi = mid;
            below = Some(out);
        }
        if hit || hi - lo <= eps * eta_star {
            converged = true;
            break;
        }
    }
    stats.converged &= converged;
    if best.is_none() {
        // R(mu) is nonincreasing, so the lower end is the last resort
        let out = dual_loop(h, power, lo, cfg, Some(&warm), None)?;
        stats.absorb(&loop_stats(&out));
        if out.rate >= rate_floor * (T::one() - eps) {
            best = Some((lo, out));
        } else if let Some(c) = ceiling {
            best = Some((lo, c.clone()));
        }
    }
    if !hit {
        if let (Some((_, above)), Some(below)) = (best.as_mut(), below.as_ref()) {
            if above.rate > rate_floor * (T::one() + eps) {
                *above = blend_to_floor(h, power, above, below, rate_floor, eps);
            }
        }
    }
    Ok(match best {
        Some((mu, out)) => Bisection {
            out: Some(out),
            mu,
            stats,
        },
        None => Bisection {
            out: None,
            mu: lo,
            stats,
        },
    })
}

/// Moves from `above` towards `below` along the segment between the two
/// covariances until the rate drops onto `floor`. The segment stays inside
/// the per-RAU power region and the rate is concave along it.
fn blend_to_floor<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    above: &DualOutcome<T>,
    below: &DualOutcome<T>,
    floor: T,
    eps: T,
) -> DualOutcome<T> {
    let ranges: Vec<_> = power.block_ranges().collect();
    let mix = |t: T| {
        let f = above.factored.mix(&below.factored, t);
        let block_powers = f.block_powers(ranges.iter().cloned());
        DualOutcome {
            rate: f.rate(h),
            transmit_power: block_powers.iter().copied().sum(),
            block_powers,
            factored: f,
            iters: above.iters,
            converged: above.converged,
            lambda: above.lambda.clone(),
        }
    };
    // t is the weight on `below`; rate(t) >= floor on [0, lo]
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut keep = above.clone();
    for _ in 0..60 {
        let t = (lo + hi) / (T::one() + T::one());
        let cand = mix(t);
        if cand.rate >= floor {
            lo = t;
            let done = cand.rate <= floor * (T::one() + eps);
            keep = cand;
            if done {
                break;
            }
        } else {
            hi = t;
        }
    }
    keep
}

/// Minimizes `tr Q` subject to `log2|I + H Q H^H| >= rate_floor` and the
/// per-RAU limits, by bisection on `mu` in `(eps * eta_star, eta_star]`.
///
/// `eta_star` is the converged ratio of [`solve_p2`]. Returns an
/// `Infeasible` solution if the floor cannot be reached inside the bracket.
pub fn solve_p3<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    rate_floor: T,
    eta_star: T,
    cfg: &SolverConfig<T>,
) -> Result<CovarianceSolution<T>> {
    solve_p3_traced(h, power, rate_floor, eta_star, cfg).map(|(s, _)| s)
}

/// [`solve_p3`] plus the `(mu, rate)` bisection series.
pub fn solve_p3_traced<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    rate_floor: T,
    eta_star: T,
    cfg: &SolverConfig<T>,
) -> Result<(CovarianceSolution<T>, SolveTrace<T>)> {
    check_inputs(h, power, cfg)?;
    if !(eta_star > T::zero()) {
        return Err(Error::InvalidArgument("eta_star must be positive".into()));
    }
    let mut trace = SolveTrace::default();
    if !(rate_floor > T::zero()) {
        let out = dual_loop(h, power, eta_star, cfg, None, None)?;
        let stats = loop_stats(&out);
        let mut sol = solution(power, out, SolveStatus::Optimal, stats);
        sol.dual_eta = Some(eta_star);
        sol.bisection_mu = Some(eta_star);
        return Ok((sol, trace));
    }
    let b = bisection(h, power, rate_floor, eta_star, &[], None, cfg, &mut trace)?;
    let sol = match b.out {
        Some(out) => solution(power, out, SolveStatus::Optimal, b.stats),
        None => {
            let mut stats = b.stats;
            stats.converged = false;
            let out = dual_loop(h, power, b.mu, cfg, None, None)?;
            solution(power, out, SolveStatus::Infeasible, stats)
        }
    };
    let mut sol = sol;
    sol.dual_eta = Some(eta_star);
    sol.bisection_mu = Some(b.mu);
    Ok((sol, trace))
}

/// Energy-efficiency maximization with a rate floor for a fixed active set.
///
/// 1. Maximize the rate; if it misses `rate_min` the set is infeasible.
/// 2. Maximize EE without the floor; done if that rate meets `rate_min`.
/// 3. Otherwise minimize transmit power at rate `rate_min`, bracketing the
///    power price by the converged EE ratio.
pub fn solve_ee_fixed_set<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    rate_min: T,
    cfg: &SolverConfig<T>,
) -> Result<CovarianceSolution<T>> {
    solve_ee_fixed_set_traced(h, power, rate_min, cfg).map(|(s, _)| s)
}

/// [`solve_ee_fixed_set`] plus the traces of every stage it ran.
pub fn solve_ee_fixed_set_traced<T: Real>(
    h: &ComplexMatrix<T>,
    power: &PowerModel<T>,
    rate_min: T,
    cfg: &SolverConfig<T>,
) -> Result<(CovarianceSolution<T>, SolveTrace<T>)> {
    let mut trace = SolveTrace::default();
    let cache = FixedSetCache::build(h, power, cfg, Some(&mut trace))?;
    let sol = cache.solve_traced(h, power, rate_min, cfg, &mut trace)?;
    Ok((sol, trace))
}

struct EeStage<T: Real> {
    out: DualOutcome<T>,
    eta: T,
    stats: SolveStats,
}

/// Rate-maximization and EE-maximization stages of one active set.
///
/// Neither depends on the rate floor, so sweeps over `rate_min` reuse them.
/// The EE stage is computed on first use.
pub struct FixedSetCache<T: Real> {
    p1: DualOutcome<T>,
    p1_stats: SolveStats,
    ee: OnceCell<EeStage<T>>,
}

impl<T: Real> FixedSetCache<T> {
    pub fn new(h: &ComplexMatrix<T>, power: &PowerModel<T>, cfg: &SolverConfig<T>) -> Result<Self> {
        Self::build(h, power, cfg, None)
    }

    fn build(
        h: &ComplexMatrix<T>,
        power: &PowerModel<T>,
        cfg: &SolverConfig<T>,
        trace: Option<&mut SolveTrace<T>>,
    ) -> Result<Self> {
        check_inputs(h, power, cfg)?;
        let p1 = dual_loop(h, power, T::zero(), cfg, None, trace.map(|t| &mut t.subgradient))?;
        Ok(Self {
            p1_stats: loop_stats(&p1),
            p1,
            ee: OnceCell::new(),
        })
    }

    /// Rate of the rate-maximizing covariance.
    pub fn rate_max(&self) -> T {
        self.p1.rate
    }

    /// The rate-maximizing solution.
    pub fn p1_solution(&self, power: &PowerModel<T>) -> CovarianceSolution<T> {
        solution(power, self.p1.clone(), SolveStatus::Optimal, self.p1_stats)
    }

    fn ee_stage(
        &self,
        h: &ComplexMatrix<T>,
        power: &PowerModel<T>,
        cfg: &SolverConfig<T>,
        trace: &mut SolveTrace<T>,
    ) -> Result<&EeStage<T>> {
        if self.ee.get().is_none() {
            let d = dinkelbach(h, power, cfg, Some(&self.p1), trace)?;
            let _ = self.ee.set(EeStage {
                out: d.out,
                eta: d.eta,
                stats: d.stats,
            });
        }
        Ok(self.ee.get().expect("EE stage initialized"))
    }

    /// Same result as [`solve_ee_fixed_set`], reusing the cached stages.
    pub fn solve(
        &self,
        h: &ComplexMatrix<T>,
        power: &PowerModel<T>,
        rate_min: T,
        cfg: &SolverConfig<T>,
    ) -> Result<CovarianceSolution<T>> {
        self.solve_traced(h, power, rate_min, cfg, &mut SolveTrace::default())
    }

    fn solve_traced(
        &self,
        h: &ComplexMatrix<T>,
        power: &PowerModel<T>,
        rate_min: T,
        cfg: &SolverConfig<T>,
        trace: &mut SolveTrace<T>,
    ) -> Result<CovarianceSolution<T>> {
        let mut stats = self.p1_stats;
        if self.p1.rate < rate_min {
            return Ok(solution(power, self.p1.clone(), SolveStatus::Infeasible, stats));
        }
        let ee = self.ee_stage(h, power, cfg, trace)?;
        stats.absorb(&ee.stats);
        if ee.out.rate >= rate_min {
            let mut sol = solution(power, ee.out.clone(), SolveStatus::Optimal, stats);
            sol.dual_eta = Some(ee.eta);
            return Ok(sol);
        }
        let b = bisection(h, power, rate_min, ee.eta, &ee.out.lambda, Some(&self.p1), cfg, trace)?;
        stats.absorb(&b.stats);
        let mut sol = match b.out {
            Some(out) => solution(power, out, SolveStatus::Optimal, stats),
            // the rate maximizer meets the floor even if the bracket missed it
            None => solution(power, self.p1.clone(), SolveStatus::Optimal, stats),
        };
        sol.dual_eta = Some(ee.eta);
        sol.bisection_mu = Some(b.mu);
        Ok(sol)
    }
}
