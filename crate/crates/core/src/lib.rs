//! Simulation of online acquisition-trajectory optimization for cone-beam
//! X-ray CT with a robotic sample holder.
//!
//! A scout scan on a coarse equal-area sphere grid locates highly absorbing
//! regions of the sample; poses are then drawn one at a time from an
//! inverse-power weighting of their projected high-absorber area, with the
//! coarse reconstruction, segmentation and scores refreshed after every
//! acquisition. Whole-sphere and random trajectories serve as baselines, and
//! line-profile sharpness compares the final reconstructions.
//!
//! Module map:
//!
//! - [`sphere`]: pixelization, disc queries, score/state map
//! - [`volume`], [`phantom`]: voxel grids and the two test samples
//! - [`geometry`], [`projector`]: cone-beam poses and the Joseph projector pair
//! - [`recon`]: CG on the Tikhonov-regularized weighted least-squares problem
//! - [`segmentation`], [`scoring`], [`sampler`], [`robot`]: loop components
//! - [`pipeline`]: scout scan, score initialization, optimization loop, baselines
//! - [`metrics`]: line profiles and gradient-magnitude sharpness

pub mod config;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod projector;
pub mod recon;
pub mod robot;
pub mod sampler;
pub mod scoring;
pub mod segmentation;
pub mod sphere;
pub mod volume;

pub use error::{Error, Result};
