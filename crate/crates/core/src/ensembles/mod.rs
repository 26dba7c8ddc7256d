//! Degree distributions, ensemble specifications and Tanner-graph samplers.

mod graph;
mod pair;
mod poly;
mod profile;
mod sample;

pub use graph::{empirical_degree_profile, tv_distance, DegreeProfile, TannerGraph};
pub use pair::{parse_terms, DegreePair};
pub use poly::{CountSampler, DegreeDist, DegreeLaw, SparsePoly};
pub use profile::{multi_poisson_profile, multi_poisson_rounds};
pub use sample::{
    sample_multi_poisson, sample_poisson, sample_standard, CodeModel, EnsembleKind, EnsembleSpec, Family,
};

/// `(lambda(x), rho(x))` of a degree pair.
pub fn edge_perspective(pair: &DegreePair) -> (SparsePoly, SparsePoly) {
    pair.edge_perspective()
}

/// Design rate of an ensemble specification.
pub fn design_rate(spec: &EnsembleSpec) -> f64 {
    spec.design_rate()
}
