//! Semiclassical theory of a single incoherently pumped two-level atom moving
//! in a high-Q standing-wave cavity.
//!
//! The crate computes lasing steady states in the factorized c-number model
//! ([`lamb`]) and in the second-order moment model ([`moments`]), the light
//! force, friction and momentum diffusion acting on the atom ([`motion`]),
//! the good-cavity temperature formulas ([`goodcavity`]) and stochastic
//! trajectories of the atomic motion ([`stochsim`]).
//!
//! Units: `ħ = κ = k = 1` unless a [`SystemParams`] sets a different κ;
//! positions are phases `kx` (so `λ = 2π`), energies and temperatures are in
//! `ħκ`.

pub mod error;
pub mod goodcavity;
pub mod lamb;
pub mod moments;
pub mod motion;
pub mod numerics;
pub mod params;
pub mod selftest;
pub mod stochsim;
pub mod trajectory;

pub use error::{Error, Result};
pub use goodcavity::{GoodCavityFamily, OperatingPoint};

pub use lamb::{LambState, LambSteady};
pub use moments::{MomentSolution, MomentVector};
pub use motion::{EquilibriumSummary, ForceModel, MotionCoefficients};
pub use params::{SystemParams, WAVELENGTH};
pub use stochsim::{EnsembleStats, ForceField, GridField, SimOptions};

pub use trajectory::{Sample, Trajectory, TrajectoryMode};
