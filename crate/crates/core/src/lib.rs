//! Channel capacity toolkit for spiking-neuron models.
//!
//! The crate provides:
//!
//! - classic Shannon primitives on finite alphabets ([`info`], [`pmf`]) and a
//!   certified Blahut–Arimoto capacity iteration ([`blahut`]);
//! - the gamma inter-spike-interval channel family ([`channel`]): conditional
//!   ISI densities for temporal coding and windowed spike counts for rate
//!   coding;
//! - capacity solvers over the bounded input interval returning discrete
//!   capacity-achieving ensembles with verifiable optimality certificates
//!   ([`solver`]), plus MAP hard-decoding comparisons ([`decode`]);
//! - conversion of a capacity-achieving ensemble into an optimal monotone
//!   step tuning curve for an arbitrary stimulus distribution ([`tuning`]);
//! - file formats and helpers shared with the `neurocap` CLI ([`io`]).

// Validation sites use `!(x > 0.0)` style comparisons on purpose: unlike
// `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blahut;
pub mod channel;
pub mod decode;
pub mod ensemble;
pub mod error;
pub mod info;
pub mod io;
pub mod pmf;
pub mod quad;
pub mod solver;
pub mod special;
pub mod tuning;

pub use blahut::{blahut_arimoto, blahut_arimoto_trace, BlahutArimotoTrace};
pub use channel::{CountChannelConfig, GammaChannel, TruncatedCountPmf};
pub use decode::{hard_decoder, DecoderPartition};
pub use ensemble::InputEnsemble;
pub use error::{Error, Result};
pub use info::{
    binary_entropy, bsc_capacity, bsc_mutual_information, channel_mutual_information,
    conditional_entropy, entropy, expected_code_length, kl_divergence, mutual_information,
    parity_detect, parity_extend,
};
pub use pmf::{ChannelMatrix, CodeLengthAssignment, DiscretePmf, JointPmf};
pub use solver::{
    capacity_bps, ensemble_mi, grid_capacity, kkt_verify, marginal_info_density, monte_carlo_mi,
    particle_capacity, CapacitySolution, Coding, KktReport, NeuronChannel, SolverOptions,
};
pub use tuning::{
    build_tuning_curve, build_tuning_curve_directed, mean_response, quantile_partition,
    verify_tuning_mi, MonotoneDirection, StimulusDistribution, TuningCurve,
};
