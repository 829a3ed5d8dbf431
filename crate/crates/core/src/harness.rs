//! Seeded Monte-Carlo experiments and CSV output.
//!
//! Every draw gets its own ChaCha8 stream derived from `(seed, I, draw)`, so
//! draws can run in parallel and every strategy on a draw sees the same
//! channel. Rate floors are configured in bit/s and divided by the bandwidth
//! before they reach the solver.
//!
//! # Config file
//!
//! Flat `key = value` lines; `#` starts a comment. Lists are comma
//! separated and numeric lists also accept `start:step:stop`.
//!
//! | key | default |
//! |-----|---------|
//! | `rau_count` | 4 |
//! | `antennas_per_rau` | 4 |
//! | `receive_antennas` | 4 |
//! | `cell_radius_m` | 1000 |
//! | `power_limit_w` | 10 |
//! | `rf_chain_power_w` | 1 |
//! | `static_power_w` | 1 |
//! | `bandwidth_hz` | 20e6 |
//! | `noise_psd_dbm_hz` | -174 |
//! | `shadowing_std_db` | 8 |
//! | `rate_min_bps` | 0 |
//! | `rau_counts` | 2:1:7 |
//! | `trace_rau_counts` | 2,6,10 |
//! | `num_draws` | 500 |
//! | `seed` | 0 |
//! | `strategies` | all six |
//! | `cas_circuit_literal` | true |
//! | `tolerance`, `subgradient_step_scale`, `max_subgradient_iters`, `max_dinkelbach_iters`, `max_bisection_iters`, `rank_tol` | solver defaults |

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_channel, draw_user_position, place_raus, ChannelRealization, DasTopology, PathLossModel};
use crate::error::{Error, Result};
use crate::selection::{cas_baseline, CasCircuitPower, SelectionResult, SetEvaluator, Strategy};
use crate::solver::{solve_p1_traced, solve_p2_traced, solve_p3_traced, PowerModel, SolverConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub rau_count: usize,
    pub antennas_per_rau: usize,
    pub receive_antennas: usize,
    pub cell_radius_m: f64,
    pub power_limit_w: f64,
    pub rf_chain_power_w: f64,
    pub static_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub shadowing_std_db: f64,
    /// Rate floors in bit/s.
    pub rate_min_bps: Vec<f64>,
    pub rau_counts: Vec<usize>,
    pub trace_rau_counts: Vec<usize>,
    pub num_draws: usize,
    pub seed: u64,
    pub solver: SolverConfig<f64>,
    pub strategies: Vec<Strategy>,
    pub cas_circuit_literal: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rau_count: 4,
            antennas_per_rau: 4,
            receive_antennas: 4,
            cell_radius_m: 1000.0,
            power_limit_w: 10.0,
            rf_chain_power_w: 1.0,
            static_power_w: 1.0,
            bandwidth_hz: 20e6,
            noise_psd_dbm_hz: -174.0,
            shadowing_std_db: 8.0,
            rate_min_bps: vec![0.0],
            rau_counts: (2..=7).collect(),
            trace_rau_counts: vec![2, 6, 10],
            num_draws: 500,
            seed: 0,
            solver: SolverConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            cas_circuit_literal: true,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config {
        line,
        message: format!("invalid value '{}' for {key}", v.trim()),
    })
}

fn parse_f64_list(key: &str, v: &str, line: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_num(key, x, line)?),
            [a, s, b] => {
                let (a, s, b): (f64, f64, f64) = (
                    parse_num(key, a, line)?,
                    parse_num(key, s, line)?,
                    parse_num(key, b, line)?,
                );
                if !(s > 0.0) || b < a {
                    return Err(Error::Config {
                        line,
                        message: format!("bad range '{item}' for {key}"),
                    });
                }
                let n = ((b - a) / s + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| a + k as f64 * s));
            }
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("bad list item '{item}' for {key}"),
                })
            }
        }
    }
    Ok(out)
}

fn parse_count_list(key: &str, v: &str, line: usize) -> Result<Vec<usize>> {
    parse_f64_list(key, v, line)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Config {
                    line,
                    message: format!("{key} entries must be nonnegative integers"),
                })
            }
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.num_draws == 0 {
            return bad("num_draws must be at least 1");
        }
        if self.rate_min_bps.is_empty() || self.rau_counts.is_empty() || self.trace_rau_counts.is_empty() {
            return bad("sweeps must be nonempty");
        }
        if self.rate_min_bps.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return bad("rate floors must be finite and nonnegative");
        }
        if self.strategies.is_empty() {
            return bad("at least one strategy is required");
        }
        if self.receive_antennas == 0 {
            return bad("receive_antennas must be positive");
        }
        if self.rau_counts.iter().chain(&self.trace_rau_counts).any(|&i| i == 0) {
            return bad("RAU counts must be positive");
        }
        self.solver.validate()?;
        self.topology(self.rau_count)?;
        Ok(())
    }

    /// Topology with `rau_count` RAUs and the configured radio parameters.
    pub fn topology(&self, rau_count: usize) -> Result<DasTopology> {
        let t = DasTopology {
            cell_radius_m: self.cell_radius_m,
            rau_positions: place_raus(rau_count, self.cell_radius_m)?,
            antennas_per_rau: vec![self.antennas_per_rau; rau_count],
            power_limit_w: vec![self.power_limit_w; rau_count],
            rf_chain_power_w: self.rf_chain_power_w,
            static_power_w: self.static_power_w,
            bandwidth_hz: self.bandwidth_hz,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            shadowing_std_db: self.shadowing_std_db,
            path_loss: PathLossModel::default(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn cas_circuit(&self) -> CasCircuitPower {
        if self.cas_circuit_literal {
            CasCircuitPower::Literal
        } else {
            CasCircuitPower::PerAntenna
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected key = value, got '{body}'"),
            })?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "rau_count" => c.rau_count = parse_num(key, v, line)?,
                "antennas_per_rau" => c.antennas_per_rau = parse_num(key, v, line)?,
                "receive_antennas" => c.receive_antennas = parse_num(key, v, line)?,
                "cell_radius_m" => c.cell_radius_m = parse_num(key, v, line)?,
                "power_limit_w" => c.power_limit_w = parse_num(key, v, line)?,
                "rf_chain_power_w" => c.rf_chain_power_w = parse_num(key, v, line)?,
                "static_power_w" => c.static_power_w = parse_num(key, v, line)?,
                "bandwidth_hz" => c.bandwidth_hz = parse_num(key, v, line)?,
                "noise_psd_dbm_hz" => c.noise_psd_dbm_hz = parse_num(key, v, line)?,
                "shadowing_std_db" => c.shadowing_std_db = parse_num(key, v, line)?,
                "rate_min_bps" => c.rate_min_bps = parse_f64_list(key, v, line)?,
                "rau_counts" => c.rau_counts = parse_count_list(key, v, line)?,
                "trace_rau_counts" => c.trace_rau_counts = parse_count_list(key, v, line)?,
                "num_draws" => c.num_draws = parse_num(key, v, line)?,
                "seed" => c.seed = parse_num(key, v, line)?,
                "cas_circuit_literal" => c.cas_circuit_literal = parse_num(key, v, line)?,
                "strategies" => {
                    c.strategies = parse_strategies(v).map_err(|e| Error::Config {
                        line,
                        message: e.to_string(),
                    })?
                }
                "tolerance" => c.solver.tolerance = parse_num(key, v, line)?,
                "subgradient_step_scale" => c.solver.subgradient_step_scale = parse_num(key, v, line)?,
                "max_subgradient_iters" => c.solver.max_subgradient_iters = parse_num(key, v, line)?,
                "max_dinkelbach_iters" => c.solver.max_dinkelbach_iters = parse_num(key, v, line)?,
                "max_bisection_iters" => c.solver.max_bisection_iters = parse_num(key, v, line)?,
                "rank_tol" => c.solver.rank_tol = parse_num(key, v, line)?,
                _ => {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown key '{key}'"),
                    })
                }
            }
        }
        Ok(c)
    }
}

/// Parses a comma separated strategy list, dropping duplicates.
pub fn parse_strategies(list: &str) -> Result<Vec<Strategy>> {
    let mut out: Vec<Strategy> = Vec::new();
    for s in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let st: Strategy = s.parse()?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty strategy list".into()));
    }
    Ok(out)
}

/// Rounds to the 12 significant digits written to CSV.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub draw: usize,
    pub strategy: Strategy,
    pub rate_min_bps: f64,
    pub rau_count: usize,
    pub rate_bps: f64,
    pub ee_bits_per_joule: f64,
    pub active_raus: usize,
    pub feasible: bool,
    pub tx_power_w: f64,
    pub circuit_power_w: f64,
    pub subgradient_iters: usize,
    pub dinkelbach_iters: usize,
    pub bisection_iters: usize,
    /// Not part of the default CSV so output bytes stay reproducible.
    pub wall_time_s: f64,
}

impl ExperimentRecord {
    fn from_selection(
        draw: usize,
        rau_count: usize,
        rate_min_bps: f64,
        sel: &SelectionResult<f64>,
        wall_time_s: f64,
    ) -> Self {
        let s = &sel.solution;
        Self {
            draw,
            strategy: sel.strategy,
            rate_min_bps: round_sig(rate_min_bps),
            rau_count,
            rate_bps: round_sig(s.rate_bps_hz * s.bandwidth_hz),
            ee_bits_per_joule: round_sig(s.energy_efficiency),
            active_raus: sel.active_set.len(),
            feasible: sel.feasible,
            tx_power_w: round_sig(s.transmit_power_w),
            circuit_power_w: round_sig(s.circuit_power_w),
            subgradient_iters: s.stats.subgradient_iters,
            dinkelbach_iters: s.stats.dinkelbach_iters,
            bisection_iters: s.stats.bisection_iters,
            wall_time_s,
        }
    }

    /// Checks `EE = rate / (P_tx + P_C)` up to CSV rounding.
    pub fn check_consistency(&self) -> Result<()> {
        let denom = self.tx_power_w + self.circuit_power_w;
        let expect = if denom > 0.0 { self.rate_bps / denom } else { 0.0 };
        let scale = expect.abs().max(self.ee_bits_per_joule.abs()).max(f64::MIN_POSITIVE);
        if (expect - self.ee_bits_per_joule).abs() > 1e-9 * scale {
            return Err(Error::InvalidArgument(format!(
                "record {} / {}: EE {} disagrees with rate/power {}",
                self.draw, self.strategy, self.ee_bits_per_joule, expect
            )));
        }
        Ok(())
    }
}

const RECORD_HEADER: [&str; 13] = [
    "draw",
    "strategy",
    "rate_min_bps",
    "rau_count",
    "rate_bps",
    "ee_bits_per_joule",
    "active_raus",
    "feasible",
    "tx_power_w",
    "circuit_power_w",
    "subgradient_iters",
    "dinkelbach_iters",
    "bisection_iters",
];

/// Writes records as CSV; `wall_time` appends a `wall_time_s` column.
pub fn write_records<W: Write>(out: W, records: &[ExperimentRecord], wall_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = RECORD_HEADER.to_vec();
    if wall_time {
        header.push("wall_time_s");
    }
    w.write_record(&header)?;
    for r in records {
        r.check_consistency()?;
        let mut row = vec![
            r.draw.to_string(),
            r.strategy.to_string(),
            fmt_sig(r.rate_min_bps),
            r.rau_count.to_string(),
            fmt_sig(r.rate_bps),
            fmt_sig(r.ee_bits_per_joule),
            r.active_raus.to_string(),
            r.feasible.to_string(),
            fmt_sig(r.tx_power_w),
            fmt_sig(r.circuit_power_w),
            r.subgradient_iters.to_string(),
            r.dinkelbach_iters.to_string(),
            r.bisection_iters.to_string(),
        ];
        if wall_time {
            row.push(format!("{:.6}", r.wall_time_s));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_records`].
pub fn read_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let fixed = headers
        .iter()
        .take(RECORD_HEADER.len())
        .eq(RECORD_HEADER.iter().copied());
    let extra: Vec<&str> = headers.iter().skip(RECORD_HEADER.len()).collect();
    if !fixed || !(extra.is_empty() || extra == ["wall_time_s"]) {
        return Err(Error::InvalidArgument("unexpected CSV header".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let f = |k: usize| row.get(k).unwrap_or("");
        out.push(ExperimentRecord {
            draw: parse_num("draw", f(0), line)?,
            strategy: f(1).parse()?,
            rate_min_bps: parse_num("rate_min_bps", f(2), line)?,
            rau_count: parse_num("rau_count", f(3), line)?,
            rate_bps: parse_num("rate_bps", f(4), line)?,
            ee_bits_per_joule: parse_num("ee_bits_per_joule", f(5), line)?,
            active_raus: parse_num("active_raus", f(6), line)?,
            feasible: parse_num("feasible", f(7), line)?,
            tx_power_w: parse_num("tx_power_w", f(8), line)?,
            circuit_power_w: parse_num("circuit_power_w", f(9), line)?,
            subgradient_iters: parse_num("subgradient_iters", f(10), line)?,
            dinkelbach_iters: parse_num("dinkelbach_iters", f(11), line)?,
            bisection_iters: parse_num("bisection_iters", f(12), line)?,
            wall_time_s: if extra.is_empty() {
                0.0
            } else {
                parse_num("wall_time_s", f(13), line)?
            },
        });
    }
    Ok(out)
}

/// RNG stream of one draw.
pub fn draw_rng(seed: u64, rau_count: usize, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (rau_count as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(draw as u64);
    rng
}

/// Channels of one draw: the DAS realization and the colocated one.
#[derive(Clone, Debug)]
pub struct DrawChannels {
    pub das: ChannelRealization<f64>,
    pub cas: ChannelRealization<f64>,
}

/// Draws the user position, then the DAS channel, then the colocated channel.
pub fn draw_channels(config: &ExperimentConfig, topology: &DasTopology, draw: usize) -> Result<DrawChannels> {
    let mut rng = draw_rng(config.seed, topology.rau_count(), draw);
    let user = draw_user_position(topology.cell_radius_m, &mut rng);
    let das = draw_channel(topology, user, config.receive_antennas, &mut rng)?;
    let cas = draw_channel(&topology.colocated(), user, config.receive_antennas, &mut rng)?;
    Ok(DrawChannels { das, cas })
}

fn run_draw(
    config: &ExperimentConfig,
    topology: &DasTopology,
    draw: usize,
    rate_mins: &[f64],
) -> Result<Vec<ExperimentRecord>> {
    let ch = draw_channels(config, topology, draw)?;
    let cfg = &config.solver;
    let eval = SetEvaluator::new(&ch.das, topology, cfg)?;
    let i = topology.rau_count();
    let mut out = Vec::new();
    for &rmin in rate_mins {
        let floor = rmin / topology.bandwidth_hz;
        for &st in &config.strategies {
            let t0 = Instant::now();
            let sel = match st {
                Strategy::Distance => eval.select_distance(floor)?,
                Strategy::Norm => eval.select_norm_based(floor)?,
                Strategy::Exhaustive => eval.select_exhaustive(floor)?,
                Strategy::AllOnEe => eval.all_on_baselines(floor)?.0,
                Strategy::AllOnSe => eval.all_on_baselines(floor)?.1,
                Strategy::Cas => cas_baseline(&ch.cas, topology, floor, cfg, config.cas_circuit())?,
            };
            let dt = t0.elapsed().as_secs_f64();
            out.push(ExperimentRecord::from_selection(draw, i, rmin, &sel, dt));
        }
    }
    Ok(out)
}

fn sweep(config: &ExperimentConfig, topology: &DasTopology) -> Result<Vec<ExperimentRecord>> {
    let per_draw: Vec<Result<Vec<ExperimentRecord>>> = (0..config.num_draws)
        .into_par_iter()
        .map(|d| run_draw(config, topology, d, &config.rate_min_bps))
        .collect();
    let mut out = Vec::new();
    for r in per_draw {
        out.extend(r?);
    }
    Ok(out)
}

/// Every strategy on every draw at every configured rate floor, with
/// `rau_count` RAUs. Records are ordered by draw, floor, strategy.
pub fn run_rate_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    sweep(config, &config.topology(config.rau_count)?)
}

/// [`run_rate_sweep`] repeated for every RAU count in `rau_counts`.
pub fn run_rau_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let mut out = Vec::new();
    for &i in &config.rau_counts {
        out.extend(sweep(config, &config.topology(i)?)?);
    }
    Ok(out)
}

/// Per-strategy means over draws.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub rau_count: usize,
    pub rate_min_bps: f64,
    pub draws: usize,
    pub mean_rate_bps: f64,
    pub mean_ee_bits_per_joule: f64,
    pub mean_active_raus: f64,
    pub feasible_fraction: f64,
}

/// Groups records by `(I, rate_min, strategy)` in first-seen order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in records {
        let row = match rows
            .iter_mut()
            .find(|s| s.strategy == r.strategy && s.rau_count == r.rau_count && s.rate_min_bps == r.rate_min_bps)
        {
            Some(row) => row,
            None => {
                rows.push(SummaryRow {
                    strategy: r.strategy,
                    rau_count: r.rau_count,
                    rate_min_bps: r.rate_min_bps,
                    draws: 0,
                    mean_rate_bps: 0.0,
                    mean_ee_bits_per_joule: 0.0,
                    mean_active_raus: 0.0,
                    feasible_fraction: 0.0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.draws += 1;
        row.mean_rate_bps += r.rate_bps;
        row.mean_ee_bits_per_joule += r.ee_bits_per_joule;
        row.mean_active_raus += r.active_raus as f64;
        row.feasible_fraction += if r.feasible { 1.0 } else { 0.0 };
    }
    for row in &mut rows {
        let n = row.draws as f64;
        row.mean_rate_bps /= n;
        row.mean_ee_bits_per_joule /= n;
        row.mean_active_raus /= n;
        row.feasible_fraction /= n;
    }
    rows
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "strategy",
        "rau_count",
        "rate_min_bps",
        "draws",
        "mean_rate_bps",
        "mean_ee_bits_per_joule",
        "mean_active_raus",
        "feasible_fraction",
    ])?;
    for r in rows {
        w.write_record([
            r.strategy.to_string(),
            r.rau_count.to_string(),
            fmt_sig(r.rate_min_bps),
            r.draws.to_string(),
            fmt_sig(r.mean_rate_bps),
            fmt_sig(r.mean_ee_bits_per_joule),
            fmt_sig(r.mean_active_raus),
            fmt_sig(r.feasible_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// Rate maximization; trace is the best rate per subgradient step.
    P1,
    /// EE maximization; trace is the Dinkelbach ratio per iteration.
    P2,
    /// Power minimization; trace is the rate per bisection step.
    P3,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::P1 => "p1",
            Problem::P2 => "p2",
            Problem::P3 => "p3",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" => Ok(Problem::P1),
            "p2" => Ok(Problem::P2),
            "p3" => Ok(Problem::P3),
            _ => Err(Error::InvalidArgument(format!("unknown problem '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub problem: Problem,
    pub rau_count: usize,
    pub iteration: usize,
    /// Rate in bit/s for P1 and P3, EE in bit/J for P2.
    pub value: f64,
}

fn full_set_problem(config: &ExperimentConfig, rau_count: usize) -> Result<(DasTopology, DrawChannels)> {
    let topo = config.topology(rau_count)?;
    let ch = draw_channels(config, &topo, 0)?;
    Ok((topo, ch))
}

/// Convergence series with every RAU on, one per entry of
/// `trace_rau_counts`, each on draw 0 of that RAU count. The P3 floor is
/// the midpoint of the P1 and P2 rates.
pub fn run_convergence_trace(config: &ExperimentConfig, problem: Problem) -> Result<Vec<TracePoint>> {
    config.validate()?;
    let cfg = &config.solver;
    let mut out = Vec::new();
    for &i in &config.trace_rau_counts {
        let (topo, ch) = full_set_problem(config, i)?;
        let all: Vec<usize> = (0..i).collect();
        let h = ch.das.assemble(&all)?;
        let eval = SetEvaluator::new(&ch.das, &topo, cfg)?;
        let power: PowerModel<f64> = eval.power_model(&all)?;
        let w = power.bandwidth_hz;
        let series: Vec<f64> = match problem {
            Problem::P1 => solve_p1_traced(&h, &power, cfg)?
                .1
                .subgradient
                .iter()
                .map(|r| r * w)
                .collect(),
            Problem::P2 => solve_p2_traced(&h, &power, cfg)?
                .1
                .dinkelbach_eta
                .iter()
                .map(|e| e * w)
                .collect(),
            Problem::P3 => {
                let (p1, _) = solve_p1_traced(&h, &power, cfg)?;
                let (p2, _) = solve_p2_traced(&h, &power, cfg)?;
                let floor = 0.5 * (p1.rate_bps_hz + p2.rate_bps_hz);
                let eta = p2.dual_eta.unwrap_or(0.0);
                if eta > 0.0 && p2.rate_bps_hz < floor {
                    let (_, t) = solve_p3_traced(&h, &power, floor, eta, cfg)?;
                    t.bisection.iter().map(|(_, r)| r * w).collect()
                } else {
                    Vec::new()
                }
            }
        };
        out.extend(series.into_iter().enumerate().map(|(k, value)| TracePoint {
            problem,
            rau_count: i,
            iteration: k + 1,
            value: round_sig(value),
        }));
    }
    Ok(out)
}

pub fn write_trace<W: Write>(out: W, points: &[TracePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem", "rau_count", "iteration", "value"])?;
    for p in points {
        w.write_record([
            p.problem.to_string(),
            p.rau_count.to_string(),
            p.iteration.to_string(),
            fmt_sig(p.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}
