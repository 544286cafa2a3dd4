//! Multipartite purification of two-colorable graph states.

pub mod exact;
pub mod graph;
pub mod mc;

pub use exact::{channel_distribution, exact_recurrence, ExactGraphMap, ExactRound};
pub use graph::{pauli_label_flips, validate_graph, Color, GraphFile, TwoColorableGraph};
pub use mc::{
    mc_purification, mc_round, multi_upper_bound, physical_flips, role_for_round, sample_channel,
    ErrorSource, LabelState, MCConfig, MCResult, RoundStats, Sampling,
};
