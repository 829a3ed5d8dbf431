//! Active-RAU set search.
//!
//! The greedy searches add RAUs one at a time in a fixed order (ascending
//! distance, or descending channel norm) and stop as soon as the energy
//! efficiency drops below the best seen. Infeasible sets score an EE of
//! exactly zero; if no set is feasible every RAU is switched on and the
//! rate-maximizing covariance is returned.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use crate::channel::{ChannelRealization, DasTopology};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::scalar::Real;
use crate::solver::{CovarianceSolution, FixedSetCache, PowerModel, SolverConfig};

/// Largest RAU count accepted by [`select_exhaustive`].
pub const MAX_EXHAUSTIVE_RAUS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Greedy prefixes by ascending RAU distance.
    Distance,
    /// Greedy prefixes by descending channel norm.
    Norm,
    Exhaustive,
    /// EE maximization with every RAU on.
    AllOnEe,
    /// Rate maximization with every RAU on.
    AllOnSe,
    /// Colocated antennas at the cell center.
    Cas,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Distance,
        Strategy::Norm,
        Strategy::Exhaustive,
        Strategy::AllOnEe,
        Strategy::AllOnSe,
        Strategy::Cas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Distance => "distance",
            Strategy::Norm => "norm",
            Strategy::Exhaustive => "exhaustive",
            Strategy::AllOnEe => "all-on-ee",
            Strategy::AllOnSe => "all-on-se",
            Strategy::Cas => "cas",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy '{s}'")))
    }
}

/// Circuit power charged to the colocated baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CasCircuitPower {
    /// `I p_c + I M p_0`.
    #[default]
    Literal,
    /// `I M p_c + p_0`, the per-antenna/per-site convention of the DAS.
    PerAntenna,
}

impl CasCircuitPower {
    pub fn watts(self, topology: &DasTopology) -> f64 {
        let sites = topology.rau_count() as f64;
        let antennas = topology.antennas_per_rau.iter().sum::<usize>() as f64;
        match self {
            CasCircuitPower::Literal => sites * topology.rf_chain_power_w + antennas * topology.static_power_w,
            CasCircuitPower::PerAntenna => antennas * topology.rf_chain_power_w + topology.static_power_w,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelectionResult<T: Real> {
    /// Active RAU indices, ascending.
    pub active_set: Vec<usize>,
    pub solution: CovarianceSolution<T>,
    /// Number of fixed-set EE problems solved.
    pub sets_evaluated: usize,
    pub strategy: Strategy,
    /// `false` when no candidate set met the rate floor.
    pub feasible: bool,
}

impl<T: Real> SelectionResult<T> {
    pub fn energy_efficiency(&self) -> T {
        self.solution.energy_efficiency
    }
}

struct SetEntry<T: Real> {
    h: ComplexMatrix<T>,
    power: PowerModel<T>,
    cache: FixedSetCache<T>,
}

/// Solves fixed-set EE problems on one channel draw, memoizing the
/// floor-independent stages per active set.
pub struct SetEvaluator<'a, T: Real> {
    channel: &'a ChannelRealization<T>,
    topology: &'a DasTopology,
    cfg: &'a SolverConfig<T>,
    entries: RefCell<HashMap<Vec<usize>, Rc<SetEntry<T>>>>,
}

impl<'a, T: Real> SetEvaluator<'a, T> {
    pub fn new(
        channel: &'a ChannelRealization<T>,
        topology: &'a DasTopology,
        cfg: &'a SolverConfig<T>,
    ) -> Result<Self> {
        if channel.rau_count() != topology.rau_count() {
            return Err(Error::Dimension(format!(
                "channel has {} RAU blocks, topology {} RAUs",
                channel.rau_count(),
                topology.rau_count()
            )));
        }
        Ok(Self {
            channel,
            topology,
            cfg,
            entries: RefCell::new(HashMap::new()),
        })
    }

    pub fn rau_count(&self) -> usize {
        self.topology.rau_count()
    }

    /// Power model of an active set: per-RAU limits, `M_A p_c + A p_0`, `W`.
    pub fn power_model(&self, set: &[usize]) -> Result<PowerModel<T>> {
        let pm = PowerModel::new(
            set.iter().map(|&i| T::of(self.topology.power_limit_w[i])).collect(),
            set.iter().map(|&i| self.topology.antennas_per_rau[i]).collect(),
            T::of(self.topology.circuit_power_w(set)),
        )?;
        Ok(pm.with_bandwidth(T::of(self.topology.bandwidth_hz)))
    }

    fn entry(&self, set: &[usize]) -> Result<Rc<SetEntry<T>>> {
        if let Some(e) = self.entries.borrow().get(set) {
            return Ok(Rc::clone(e));
        }
        let h = self.channel.assemble(set)?;
        let power = self.power_model(set)?;
        let cache = FixedSetCache::new(&h, &power, self.cfg)?;
        let entry = Rc::new(SetEntry { h, power, cache });
        self.entries.borrow_mut().insert(set.to_vec(), Rc::clone(&entry));
        Ok(entry)
    }

    /// EE-optimal covariance of a fixed set under the rate floor (bit/s/Hz).
    pub fn evaluate(&self, set: &[usize], rate_min: T) -> Result<CovarianceSolution<T>> {
        let e = self.entry(set)?;
        e.cache.solve(&e.h, &e.power, rate_min, self.cfg)
    }

    /// Rate-maximizing covariance of a fixed set.
    pub fn rate_max(&self, set: &[usize]) -> Result<CovarianceSolution<T>> {
        let e = self.entry(set)?;
        Ok(e.cache.p1_solution(&e.power))
    }

    fn all_on_fallback(&self, strategy: Strategy, sets_evaluated: usize) -> Result<SelectionResult<T>> {
        let all: Vec<usize> = (0..self.rau_count()).collect();
        let solution = self.rate_max(&all)?.infeasible_from();
        Ok(SelectionResult {
            active_set: all,
            solution,
            sets_evaluated,
            strategy,
            feasible: false,
        })
    }

    /// Greedy prefix search over `order` with early termination.
    pub fn greedy(&self, order: &[usize], rate_min: T, strategy: Strategy) -> Result<SelectionResult<T>> {
        let mut best: Option<(Vec<usize>, CovarianceSolution<T>)> = None;
        let mut best_ee = T::zero();
        let mut any_feasible = false;
        let mut evaluated = 0;
        for a in 1..=order.len() {
            let mut set = order[..a].to_vec();
            set.sort_unstable();
            let sol = self.evaluate(&set, rate_min)?;
            evaluated += 1;
            let ee = if sol.is_feasible() {
                any_feasible = true;
                sol.energy_efficiency
            } else {
                T::zero()
            };
            if best_ee <= ee {
                best_ee = ee;
                best = Some((set, sol));
            } else {
                break;
            }
        }
        match best {
            Some((active_set, solution)) if any_feasible => Ok(SelectionResult {
                active_set,
                solution,
                sets_evaluated: evaluated,
                strategy,
                feasible: true,
            }),
            _ => self.all_on_fallback(strategy, evaluated),
        }
    }

    pub fn select_distance(&self, rate_min: T) -> Result<SelectionResult<T>> {
        let order = distance_order(&self.channel.distances_m);
        self.greedy(&order, rate_min, Strategy::Distance)
    }

    pub fn select_norm_based(&self, rate_min: T) -> Result<SelectionResult<T>> {
        let norms: Vec<f64> = self.channel.block_norms().into_iter().map(Real::as_f64).collect();
        let order = norm_order(&norms);
        self.greedy(&order, rate_min, Strategy::Norm)
    }

    pub fn select_exhaustive(&self, rate_min: T) -> Result<SelectionResult<T>> {
        let n = self.rau_count();
        if n > MAX_EXHAUSTIVE_RAUS {
            return Err(Error::InvalidArgument(format!(
                "exhaustive search over {n} RAUs exceeds the limit of {MAX_EXHAUSTIVE_RAUS}"
            )));
        }
        let mut best: Option<(Vec<usize>, CovarianceSolution<T>, T)> = None;
        let mut evaluated = 0;
        for mask in 1u32..(1u32 << n) {
            let set: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let sol = self.evaluate(&set, rate_min)?;
            evaluated += 1;
            if !sol.is_feasible() {
                continue;
            }
            let ee = sol.energy_efficiency;
            if best.as_ref().is_none_or(|(_, _, b)| ee > *b) {
                best = Some((set, sol, ee));
            }
        }
        match best {
            Some((active_set, solution, _)) => Ok(SelectionResult {
                active_set,
                solution,
                sets_evaluated: evaluated,
                strategy: Strategy::Exhaustive,
                feasible: true,
            }),
            None => self.all_on_fallback(Strategy::Exhaustive, evaluated),
        }
    }

    /// `(EE maximization, rate maximization)` with every RAU on.
    pub fn all_on_baselines(&self, rate_min: T) -> Result<(SelectionResult<T>, SelectionResult<T>)> {
        let all: Vec<usize> = (0..self.rau_count()).collect();
        let ee = self.evaluate(&all, rate_min)?;
        let se = self.rate_max(&all)?;
        let se_feasible = se.rate_bps_hz >= rate_min;
        let se = if se_feasible { se } else { se.infeasible_from() };
        Ok((
            SelectionResult {
                active_set: all.clone(),
                feasible: ee.is_feasible(),
                solution: ee,
                sets_evaluated: 1,
                strategy: Strategy::AllOnEe,
            },
            SelectionResult {
                active_set: all,
                solution: se,
                sets_evaluated: 1,
                strategy: Strategy::AllOnSe,
                feasible: se_feasible,
            },
        ))
    }
}

/// RAU indices by ascending distance, ties by ascending index.
pub fn distance_order(distances: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    order
}

/// RAU indices by descending norm, ties by ascending index.
pub fn norm_order(norms: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
}

/// Distance-ordered greedy selection with early termination.
pub fn select_distance<T: Real>(
    channel: &ChannelRealization<T>,
    topology: &DasTopology,
    rate_min: T,
    cfg: &SolverConfig<T>,
) -> Result<SelectionResult<T>> {
    SetEvaluator::new(channel, topology, cfg)?.select_distance(rate_min)
}

/// Norm-ordered greedy selection with early termination.
pub fn select_norm_based<T: Real>(
    channel: &ChannelRealization<T>,
    topology: &DasTopology,
    rate_min: T,
    cfg: &SolverConfig<T>,
) -> Result<SelectionResult<T>> {
    SetEvaluator::new(channel, topology, cfg)?.select_norm_based(rate_min)
}

/// Best of all `2^I - 1` nonempty sets.
pub fn select_exhaustive<T: Real>(
    channel: &ChannelRealization<T>,
    topology: &DasTopology,
    rate_min: T,
    cfg: &SolverConfig<T>,
) -> Result<SelectionResult<T>> {
    SetEvaluator::new(channel, topology, cfg)?.select_exhaustive(rate_min)
}

/// `(EE maximization, rate maximization)` with every RAU on.
pub fn all_on_baselines<T: Real>(
    channel: &ChannelRealization<T>,
    topology: &DasTopology,
    rate_min: T,
    cfg: &SolverConfig<T>,
) -> Result<(SelectionResult<T>, SelectionResult<T>)> {
    SetEvaluator::new(channel, topology, cfg)?.all_on_baselines(rate_min)
}

/// Colocated baseline on a channel drawn for `topology.colocated()`: a
/// single site with every antenna, the summed power budget and the given
/// circuit-power convention.
pub fn cas_baseline<T: Real>(
    cas_channel: &ChannelRealization<T>,
    topology: &DasTopology,
    rate_min: T,
    cfg: &SolverConfig<T>,
    circuit: CasCircuitPower,
) -> Result<SelectionResult<T>> {
    if cas_channel.rau_count() != 1 {
        return Err(Error::Dimension(format!(
            "colocated channel must have one block, got {}",
            cas_channel.rau_count()
        )));
    }
    let h = cas_channel.blocks[0].clone();
    let antennas: usize = topology.antennas_per_rau.iter().sum();
    if h.cols() != antennas {
        return Err(Error::Dimension(format!(
            "colocated channel has {} antennas, topology {}",
            h.cols(),
            antennas
        )));
    }
    let power = PowerModel::new(
        vec![T::of(topology.power_limit_w.iter().sum())],
        vec![antennas],
        T::of(circuit.watts(topology)),
    )?
    .with_bandwidth(T::of(topology.bandwidth_hz));
    let cache = FixedSetCache::new(&h, &power, cfg)?;
    let sol = cache.solve(&h, &power, rate_min, cfg)?;
    let feasible = sol.is_feasible();
    Ok(SelectionResult {
        active_set: vec![0],
        solution: sol,
        sets_evaluated: 1,
        strategy: Strategy::Cas,
        feasible,
    })
}
