//! Entanglement purification with single and double selection.
//!
//! Bipartite protocols act on Bell-diagonal probability vectors through
//! transition tensors ([`tensor`]), checked against an exact density-matrix
//! simulation ([`oracle`]). [`dynamics`] iterates the maps for fixed points,
//! working ranges, yields and bounds. [`graphmc`] runs the multipartite
//! protocol on two-colorable graph states by Monte Carlo label tracking, with
//! an exact distribution recurrence for small graphs.

// Tensor contractions read closest to their index notation as range loops.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod bell;
pub mod dynamics;
pub mod error;
pub mod graphmc;
pub mod oracle;
pub mod tensor;

pub use bell::{
    channel_initial_vector, make_noise, normalize, pauli_action, BellVector, ChannelParams,
    NoiseKind, NoiseParams, Pauli, PauliPermutation,
};
pub use dynamics::{
    apply_map, fixed_points, iterate, upper_bound_first_order, yield_for_target, BoundVariant,
    Engine, FixedPointReport, NoiseFamily, PurificationMap, Scheme, YieldReport,
};
pub use error::{Error, Result};
pub use graphmc::{mc_purification, LabelState, MCConfig, MCResult, Sampling, TwoColorableGraph};
pub use tensor::{
    build_double_tensor, build_single_tensor, DoubleTensor, ElementaryTensors, SingleTensor,
};
