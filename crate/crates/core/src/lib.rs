//! Lower bounds on the conditional entropy of sparse-graph code ensembles
//! under bit-MAP decoding over binary-input output-symmetric channels.
//!
//! The bound is the trial entropy of a pair of symmetric message densities,
//! evaluated at density-evolution fixed points. Exact small-instance oracles
//! (GF(2) rank on the erasure channel, codeword enumeration elsewhere) are
//! provided to check the bound on concrete graphs.

pub mod channels;
pub mod density_evolution;
pub mod ensembles;
pub mod error;
pub mod graph_decoding;
pub mod info;
pub mod llr;
pub mod rng;
pub mod stats;
pub mod trial_entropy;

pub use error::{Error, Result};
pub use llr::Llr;
