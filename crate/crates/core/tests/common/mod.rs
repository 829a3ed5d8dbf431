#![allow(dead_code)]

use dasee::numerics::ComplexMatrix;
use dasee::solver::PowerModel;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn cn<R: Rng>(rng: &mut R, var: f64) -> Complex<f64> {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Channel with i.i.d. `CN(0, g_i)` entries on block `i`.
pub fn block_channel<R: Rng>(rng: &mut R, n: usize, blocks: &[usize], gains: &[f64]) -> ComplexMatrix<f64> {
    let m: usize = blocks.iter().sum();
    let mut h = ComplexMatrix::zeros(n, m);
    let mut col = 0;
    for (&b, &g) in blocks.iter().zip(gains) {
        for c in col..col + b {
            for r in 0..n {
                h[(r, c)] = cn(rng, g);
            }
        }
        col += b;
    }
    h
}

pub struct Instance {
    pub h: ComplexMatrix<f64>,
    pub power: PowerModel<f64>,
}

/// `I` in 1..=4 RAUs with 1..=4 antennas each, 1..=4 receive antennas,
/// block gains log-uniform in [0.01, 100], limits in [1, 10] W and
/// circuit power in [1, 20] W.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let i = rng.random_range(1..=4);
    let n = rng.random_range(1..=4);
    let blocks: Vec<usize> = (0..i).map(|_| rng.random_range(1..=4)).collect();
    let gains: Vec<f64> = (0..i).map(|_| log_uniform(rng, 0.01, 100.0)).collect();
    let limits: Vec<f64> = (0..i).map(|_| rng.random_range(1.0..10.0)).collect();
    let pc = rng.random_range(1.0..20.0);
    Instance {
        h: block_channel(rng, n, &blocks, &gains),
        power: PowerModel::new(limits, blocks, pc).unwrap(),
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
