use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::scalar::Real;

/// Iteration limits and tolerances shared by the solver stack.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T: Real> {
    /// Convergence tolerance `epsilon`.
    pub tolerance: T,
    /// The dual step at iteration `k` is `1 / (scale * k)`.
    pub subgradient_step_scale: T,
    pub max_subgradient_iters: usize,
    pub max_dinkelbach_iters: usize,
    pub max_bisection_iters: usize,
    /// Relative eigenvalue cutoff defining the numerical rank.
    pub rank_tol: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(1e-5),
            subgradient_step_scale: T::of(30.0),
            max_subgradient_iters: 500,
            max_dinkelbach_iters: 30,
            max_bisection_iters: 60,
            rank_tol: T::of(1e-10),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tolerance, self.subgradient_step_scale, self.rank_tol];
        if positive.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::InvalidArgument(
                "tolerance, step scale and rank_tol must be positive".into(),
            ));
        }
        if self.max_subgradient_iters == 0 || self.max_dinkelbach_iters == 0 || self.max_bisection_iters == 0 {
            return Err(Error::InvalidArgument("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-RAU power budgets of one active set plus its circuit power.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerModel<T: Real> {
    /// `P_{s_i}` for each active RAU, in column-block order.
    pub per_rau_limits_w: Vec<T>,
    /// Antenna count `M_{s_i}` of each block.
    pub block_sizes: Vec<usize>,
    /// `P_C = M_A p_c + A p_0`.
    pub circuit_power_w: T,
    /// Bandwidth used to report energy efficiency in bit/J; 1 reports
    /// bit/s/Hz per watt.
    pub bandwidth_hz: T,
}

impl<T: Real> PowerModel<T> {
    pub fn new(per_rau_limits_w: Vec<T>, block_sizes: Vec<usize>, circuit_power_w: T) -> Result<Self> {
        let pm = Self {
            per_rau_limits_w,
            block_sizes,
            circuit_power_w,
            bandwidth_hz: T::one(),
        };
        pm.validate()?;
        Ok(pm)
    }

    pub fn with_bandwidth(mut self, bandwidth_hz: T) -> Self {
        self.bandwidth_hz = bandwidth_hz;
        self
    }

    pub fn with_circuit_power(mut self, circuit_power_w: T) -> Self {
        self.circuit_power_w = circuit_power_w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_rau_limits_w.is_empty() || self.per_rau_limits_w.len() != self.block_sizes.len() {
            return Err(Error::Dimension(format!(
                "{} power limits for {} blocks",
                self.per_rau_limits_w.len(),
                self.block_sizes.len()
            )));
        }
        if self.per_rau_limits_w.iter().any(|&p| !(p > T::zero())) {
            return Err(Error::InvalidArgument("power limits must be positive".into()));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::InvalidArgument("empty antenna block".into()));
        }
        if !(self.circuit_power_w >= T::zero()) || !(self.bandwidth_hz > T::zero()) {
            return Err(Error::InvalidArgument(
                "circuit power must be nonnegative and bandwidth positive".into(),
            ));
        }
        Ok(())
    }

    pub fn rau_count(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn antenna_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub(crate) fn max_limit(&self) -> T {
        self.per_rau_limits_w.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Column ranges of the blocks.
    pub(crate) fn block_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.block_sizes.iter().scan(0, |start, &m| {
            let r = *start..*start + m;
            *start += m;
            Some(r)
        })
    }

    /// `W R / (P_tx + P_C)`.
    pub fn energy_efficiency(&self, rate_bps_hz: T, transmit_power_w: T) -> T {
        let total = transmit_power_w + self.circuit_power_w;
        if total > T::zero() {
            self.bandwidth_hz * rate_bps_hz / total
        } else {
            T::zero()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

/// Iteration counters accumulated over every dual loop of one solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub subgradient_iters: usize,
    pub dual_loops: usize,
    pub dinkelbach_iters: usize,
    pub bisection_iters: usize,
    /// `false` if some loop stopped at its iteration cap.
    pub converged: bool,
}

impl SolveStats {
    pub(crate) fn absorb(&mut self, other: &SolveStats) {
        self.subgradient_iters += other.subgradient_iters;
        self.dual_loops += other.dual_loops;
        self.dinkelbach_iters += other.dinkelbach_iters;
        self.bisection_iters += other.bisection_iters;
        self.converged &= other.converged;
    }
}

/// Transmit covariance with its rate, power and energy efficiency.
#[derive(Clone, Debug)]
pub struct CovarianceSolution<T: Real> {
    /// `M_A x M_A` Hermitian PSD covariance `Q`.
    pub covariance: ComplexMatrix<T>,
    pub rate_bps_hz: T,
    /// `tr Q`.
    pub transmit_power_w: T,
    /// `tr(B_i Q)` per active RAU.
    pub per_rau_power_w: Vec<T>,
    pub circuit_power_w: T,
    pub bandwidth_hz: T,
    /// `W R / (tr Q + P_C)` in bit/J (or per-Hz units when `W = 1`).
    pub energy_efficiency: T,
    pub status: SolveStatus,
    /// Converged Dinkelbach ratio when the EE subproblem was solved.
    pub dual_eta: Option<T>,
    /// Converged power price of the power-minimization bisection.
    pub bisection_mu: Option<T>,
    pub stats: SolveStats,
}

impl<T: Real> CovarianceSolution<T> {
    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub(crate) fn infeasible_from(mut self) -> Self {
        self.status = SolveStatus::Infeasible;
        self
    }
}

/// Per-iteration objective series recorded during a solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace<T: Real> {
    /// Best feasible objective after each dual iteration of the rate
    /// maximization loop.
    pub subgradient: Vec<T>,
    /// `eta^(n)` for each Dinkelbach iteration, starting at `eta^(0) = 0`.
    pub dinkelbach_eta: Vec<T>,
    /// `G(eta^(n))` for each Dinkelbach iteration.
    pub dinkelbach_gap: Vec<T>,
    /// `(mu, rate)` for each bisection step.
    pub bisection: Vec<(T, T)>,
}
