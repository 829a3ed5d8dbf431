//! DAS geometry and stochastic channel generation.
//!
//! Channels combine distance path loss, i.i.d. log-normal shadowing per RAU
//! and i.i.d. Rayleigh fading per antenna pair. Every block is divided by the
//! receiver noise power so the receiver noise is `CN(0, I)`.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::scalar::Real;

/// A point in the plane, meters.
pub type Point = [f64; 2];

/// Distances below this are clamped before evaluating the path-loss model.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// `intercept + slope * log10(d)` in dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db_per_decade: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            intercept_db: 38.46,
            slope_db_per_decade: 35.0,
        }
    }
}

impl PathLossModel {
    pub fn loss_db(&self, distance_m: f64) -> Result<f64> {
        if !(distance_m > 0.0) {
            return Err(Error::InvalidArgument(format!("nonpositive distance {distance_m}")));
        }
        Ok(self.intercept_db + self.slope_db_per_decade * distance_m.log10())
    }
}

/// Path loss `38.46 + 35 log10(d)` dB.
pub fn path_loss_db(distance_m: f64) -> Result<f64> {
    PathLossModel::default().loss_db(distance_m)
}

/// RAU layout, per-RAU radio resources and the power-consumption constants.
#[derive(Clone, Debug, PartialEq)]
pub struct DasTopology {
    pub cell_radius_m: f64,
    pub rau_positions: Vec<Point>,
    pub antennas_per_rau: Vec<usize>,
    pub power_limit_w: Vec<f64>,
    /// Per-antenna RF chain power `p_c`.
    pub rf_chain_power_w: f64,
    /// Per-RAU static power `p_0`.
    pub static_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub shadowing_std_db: f64,
    pub path_loss: PathLossModel,
}

impl DasTopology {
    /// Topology with the reference simulation constants (W = 20 MHz,
    /// -174 dBm/Hz, p_c = p_0 = 1 W, 8 dB shadowing) around the given RAUs.
    pub fn new(
        cell_radius_m: f64,
        rau_positions: Vec<Point>,
        antennas_per_rau: Vec<usize>,
        power_limit_w: Vec<f64>,
    ) -> Result<Self> {
        let topo = Self {
            cell_radius_m,
            rau_positions,
            antennas_per_rau,
            power_limit_w,
            rf_chain_power_w: 1.0,
            static_power_w: 1.0,
            bandwidth_hz: 20e6,
            noise_psd_dbm_hz: -174.0,
            shadowing_std_db: 8.0,
            path_loss: PathLossModel::default(),
        };
        topo.validate()?;
        Ok(topo)
    }

    /// `rau_count` RAUs with 4 antennas and 10 W each in a 1000 m cell,
    /// placed by [`place_raus`].
    pub fn reference(rau_count: usize) -> Result<Self> {
        Self::uniform(rau_count, 1000.0, 4, 10.0)
    }

    /// Identical RAUs placed by [`place_raus`].
    pub fn uniform(rau_count: usize, cell_radius_m: f64, antennas: usize, power_limit_w: f64) -> Result<Self> {
        Self::new(
            cell_radius_m,
            place_raus(rau_count, cell_radius_m)?,
            vec![antennas; rau_count],
            vec![power_limit_w; rau_count],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rau_positions.len();
        if n == 0 {
            return Err(Error::InvalidArgument("topology has no RAUs".into()));
        }
        if self.antennas_per_rau.len() != n || self.power_limit_w.len() != n {
            return Err(Error::Dimension(format!(
                "{} positions, {} antenna counts, {} power limits",
                n,
                self.antennas_per_rau.len(),
                self.power_limit_w.len()
            )));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(Error::InvalidArgument("cell radius must be positive".into()));
        }
        let slack = self.cell_radius_m * (1.0 + 1e-9);
        if let Some(p) = self.rau_positions.iter().find(|p| norm(p) > slack) {
            return Err(Error::InvalidArgument(format!("RAU at {p:?} lies outside the cell")));
        }
        if self.antennas_per_rau.contains(&0) {
            return Err(Error::InvalidArgument("RAU with zero antennas".into()));
        }
        if self.power_limit_w.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidArgument("power limits must be positive".into()));
        }
        if !(self.rf_chain_power_w > 0.0 && self.static_power_w > 0.0 && self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidArgument("p_c, p_0 and bandwidth must be positive".into()));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::InvalidArgument("shadowing std must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn rau_count(&self) -> usize {
        self.rau_positions.len()
    }

    /// Receiver noise power `N0 * W` in watts.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_hz - 30.0) / 10.0) * self.bandwidth_hz
    }

    /// Total antennas of the given RAUs.
    pub fn antenna_count(&self, set: &[usize]) -> usize {
        set.iter().map(|&i| self.antennas_per_rau[i]).sum()
    }

    /// `M_A p_c + A p_0` for an active set.
    pub fn circuit_power_w(&self, set: &[usize]) -> f64 {
        self.antenna_count(set) as f64 * self.rf_chain_power_w + set.len() as f64 * self.static_power_w
    }

    /// The colocated baseline: one site at the origin holding every antenna
    /// with the summed power budget.
    pub fn colocated(&self) -> Self {
        Self {
            rau_positions: vec![[0.0, 0.0]],
            antennas_per_rau: vec![self.antennas_per_rau.iter().sum()],
            power_limit_w: vec![self.power_limit_w.iter().sum()],
            ..self.clone()
        }
    }
}

fn norm(p: &Point) -> f64 {
    p[0].hypot(p[1])
}

fn distance(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Deterministic RAU layout.
///
/// Fewer than six RAUs sit on a ring of radius `2R sin(pi/I) / (3 pi / I)`;
/// from six on, the first RAU sits at the center and the rest on the ring
/// computed for `I - 1`.
pub fn place_raus(rau_count: usize, cell_radius_m: f64) -> Result<Vec<Point>> {
    if rau_count == 0 {
        return Err(Error::InvalidArgument("rau_count must be at least 1".into()));
    }
    if !(cell_radius_m > 0.0) {
        return Err(Error::InvalidArgument("cell radius must be positive".into()));
    }
    let ring = |count: usize| -> Vec<Point> {
        let k = count as f64;
        let r = 2.0 * cell_radius_m * (PI / k).sin() / (3.0 * PI / k);
        (0..count)
            .map(|j| {
                let angle = 2.0 * PI * j as f64 / k;
                [r * angle.cos(), r * angle.sin()]
            })
            .collect()
    };
    if rau_count < 6 {
        Ok(ring(rau_count))
    } else {
        let mut pts = vec![[0.0, 0.0]];
        pts.extend(ring(rau_count - 1));
        Ok(pts)
    }
}

/// Uniform point in the disk of the given radius.
pub fn draw_user_position<R: Rng + ?Sized>(cell_radius_m: f64, rng: &mut R) -> Point {
    let r = cell_radius_m * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    [r * theta.cos(), r * theta.sin()]
}

/// Noise-normalized channel blocks of one fading draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<T: Real> {
    /// `N x M_i` block per RAU.
    pub blocks: Vec<ComplexMatrix<T>>,
    pub distances_m: Vec<f64>,
    pub user_position: Point,
    /// Large-scale gain `g_i` (path loss, shadowing, noise) per RAU.
    pub large_scale_gain: Vec<f64>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn rau_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn receive_antennas(&self) -> usize {
        self.blocks.first().map_or(0, ComplexMatrix::rows)
    }

    pub fn block_norms(&self) -> Vec<T> {
        self.blocks.iter().map(|b| b.frobenius_norm_sqr().sqrt()).collect()
    }

    /// `[H_{s1}, ..., H_{sA}]` for a strictly increasing index list.
    pub fn assemble(&self, active_set: &[usize]) -> Result<ComplexMatrix<T>> {
        check_active_set(active_set, self.rau_count())?;
        let blocks: Vec<&ComplexMatrix<T>> = active_set.iter().map(|&i| &self.blocks[i]).collect();
        ComplexMatrix::hconcat(&blocks)
    }
}

/// Validates a nonempty, strictly increasing, in-range RAU index list.
pub fn check_active_set(active_set: &[usize], rau_count: usize) -> Result<()> {
    if active_set.is_empty() {
        return Err(Error::InvalidSet("empty active set".into()));
    }
    if let Some(&i) = active_set.iter().find(|&&i| i >= rau_count) {
        return Err(Error::InvalidSet(format!(
            "index {i} out of range for {rau_count} RAUs"
        )));
    }
    if active_set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSet(format!("{active_set:?} is not strictly increasing")));
    }
    Ok(())
}

/// Draws one realization: block `i` is `sqrt(g_i) G_i` with `G_i` i.i.d.
/// `CN(0, 1)` and `g_i = 10^((-PL(d_i) + X_i) / 10) / (N0 W)`.
pub fn draw_channel<T: Real, R: Rng + ?Sized>(
    topology: &DasTopology,
    user_position: Point,
    receive_antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    topology.validate()?;
    if receive_antennas == 0 {
        return Err(Error::InvalidArgument("receive_antennas must be positive".into()));
    }
    if norm(&user_position) > topology.cell_radius_m * (1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "user at {user_position:?} lies outside the cell"
        )));
    }
    let shadowing =
        Normal::new(0.0, topology.shadowing_std_db).map_err(|e| Error::InvalidArgument(format!("shadowing: {e}")))?;
    let noise = topology.noise_power_w();
    let half = std::f64::consts::FRAC_1_SQRT_2;

    let mut blocks = Vec::with_capacity(topology.rau_count());
    let mut distances = Vec::with_capacity(topology.rau_count());
    let mut gains = Vec::with_capacity(topology.rau_count());
    for (pos, &m) in topology.rau_positions.iter().zip(&topology.antennas_per_rau) {
        let d = distance(pos, &user_position);
        let loss = topology.path_loss.loss_db(d.max(MIN_DISTANCE_M))?;
        let shadow = shadowing.sample(rng);
        let g = 10f64.powf((-loss + shadow) / 10.0) / noise;
        let amp = g.sqrt() * half;
        let entries = (0..receive_antennas * m)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex::new(T::of(amp * re), T::of(amp * im))
            })
            .collect();
        blocks.push(ComplexMatrix::from_vec(receive_antennas, m, entries)?);
        distances.push(d);
        gains.push(g);
    }
    Ok(ChannelRealization {
        blocks,
        distances_m: distances,
        user_position,
        large_scale_gain: gains,
    })
}
