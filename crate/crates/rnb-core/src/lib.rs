//! Functional simulator and analytic cost model for weight-shared
//! microring-resonator (MRR) optical neural-network accelerators.
//!
//! The crate models the full reuse-and-blend pipeline at desk scale:
//!
//! - [`numerics`]: dense tensors, symmetric 8-bit quantization, float oracle
//!   arithmetic, and the RNBW weights container.
//! - [`tile`]: one MRR crossbar tile: offset decomposition for signed
//!   weights, voltage encoding, the C-iteration write loop, tile MVM with
//!   ADC readout.
//! - [`obu`]: blend transforms between reuses: seeded shuffles in the
//!   electrical domain, transposes in the optical domain.
//! - [`prm`]: reuse scheduling, matrix tiling, the physical tile pool, and
//!   deterministic programming traces.
//! - [`cost`]: component constants, the four-architecture analytic
//!   comparison, trace-driven energy/latency accounting, area and aging
//!   reports, and the affine tile-sweep fit.
//! - [`netgraph`]: network descriptions, float-reference and photonic
//!   inference, im2col convolution lowering, and toy training with
//!   shared-weight gradient accumulation.

pub mod cost;
pub mod error;
pub mod netgraph;
pub mod numerics;
pub mod obu;
pub mod prm;
pub mod rng;
pub mod tile;

pub use error::{Error, Result};
