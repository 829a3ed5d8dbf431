//! Energy-efficiency-optimal transmit covariance design and remote access
//! unit (RAU) selection for single-user MIMO distributed antenna systems.
//!
//! The crate is generic over the real scalar (`f32`/`f64`) through
//! [`Real`]; the harness and the CLI work in `f64` through the aliases below.
//!
//! ```
//! use dasee::channel::{draw_channel, draw_user_position, DasTopology};
//! use dasee::selection::SetEvaluator;
//! use dasee::solver::SolverConfig;
//! use rand::SeedableRng;
//!
//! let topo = DasTopology::reference(4)?;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let user = draw_user_position(topo.cell_radius_m, &mut rng);
//! let channel = draw_channel::<f64, _>(&topo, user, 4, &mut rng)?;
//!
//! let cfg = SolverConfig::default();
//! let eval = SetEvaluator::new(&channel, &topo, &cfg)?;
//! let floor = 100e6 / topo.bandwidth_hz; // bit/s/Hz
//! let pick = eval.select_distance(floor)?;
//! assert!(pick.feasible);
//! # Ok::<(), dasee::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod channel;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod scalar;
pub mod selection;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision complex matrix.
pub type CMatrix = numerics::ComplexMatrix<f64>;
/// Double-precision channel realization.
pub type Channel = channel::ChannelRealization<f64>;
/// Double-precision solver output.
pub type Solution = solver::CovarianceSolution<f64>;
/// Double-precision solver settings.
pub type Config = solver::SolverConfig<f64>;
/// Double-precision power model.
pub type Power = solver::PowerModel<f64>;
/// Double-precision selection output.
pub type Selection = selection::SelectionResult<f64>;
