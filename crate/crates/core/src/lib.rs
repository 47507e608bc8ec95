//! Data-driven synthesis and independent verification of k-inductive control
//! barrier certificates (k-CBCs) for unknown discrete-time systems.
//!
//! The pipeline: excite an unknown plant and record a single input-state
//! trajectory, build a data-based closed-loop representation (with
//! nonlinearity cancellation for dictionary-lifted nonlinear systems),
//! compile the certificate conditions into a small dense SDP via
//! sum-of-squares relaxations, solve, and re-verify every certificate with
//! independent oracles and Monte Carlo rollouts.

pub mod datarep;
pub mod matcore;
pub mod plant;
pub mod poly;
pub mod report;
pub mod scenario;
pub mod sdp;
pub mod synth;
pub mod verify;
