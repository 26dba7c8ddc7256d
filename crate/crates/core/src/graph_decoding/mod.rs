//! Decoding and exact analysis of concrete sampled graphs.

mod bethe;
mod bp;
mod gf2;
mod oracle;

pub use bethe::bethe_free_energy;
pub use bp::{bp_decode, update_checks, update_variables, BpOutcome, Decision, EdgeIndex, MessageSet};
pub use gf2::Gf2Matrix;
pub use oracle::{
    conditional_entropy_enum, exact_bitmap_error, exact_entropy_bec, exact_entropy_enum, exact_oracle,
    posterior_llrs, sample_erasures, CodeEnumerator, FactorObservations, OracleReport, MAX_ENUM_BITS,
    MAX_ENUM_DIMENSION,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::ChannelModel;
use crate::ensembles::{EnsembleSpec, Family, TannerGraph};
use crate::error::{Error, Result};
use crate::rng::{derive, tag};
use crate::stats::{mean_and_se, std_dev, Estimate};
use crate::trial_entropy::{bec_stationary_points, probe_bound, MapBoundConfig};

/// Spread of the exact per-graph entropy at one block length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub graphs: usize,
    pub mean: f64,
    pub std: f64,
}

fn erasure_probability(channel: &ChannelModel) -> Result<f64> {
    match channel {
        ChannelModel::Bec { epsilon } => Ok(*epsilon),
        other => Err(Error::InvalidChannel(format!("the rank oracle needs an erasure channel, got {}", other.label()))),
    }
}

fn channel_factor_count(graph: &TannerGraph, family: Family) -> usize {
    match family {
        Family::Ldpc => graph.n_var,
        Family::Ldgm => graph.n_checks(),
    }
}

/// Exact entropy per bit of each sampled graph under one random erasure pattern.
fn rank_oracle_samples(spec: &EnsembleSpec, eps: f64, graphs: usize, seed: u64) -> Result<Vec<f64>> {
    (0..graphs as u64)
        .into_par_iter()
        .map(|g| {
            let graph = spec.sample(derive(seed, &[tag::GRAPH_LAYOUT, spec.n as u64, g]))?;
            let len = channel_factor_count(&graph, spec.family);
            let erased = sample_erasures(len, eps, seed, &[tag::ORACLE, spec.n as u64, g]);
            Ok(exact_entropy_bec(&graph, spec.family, &erased) / spec.n as f64)
        })
        .collect()
}

/// Mean and standard deviation of the per-graph conditional entropy per bit
/// for each block length in `n_list`.
pub fn concentration_probe(
    spec: &EnsembleSpec,
    channel: &ChannelModel,
    n_list: &[usize],
    graphs_per_n: usize,
    seed: u64,
) -> Result<Vec<ConcentrationRow>> {
    let eps = erasure_probability(channel)?;
    n_list
        .iter()
        .map(|&n| {
            let spec_n = EnsembleSpec { n, ..spec.clone() };
            let values = rank_oracle_samples(&spec_n, eps, graphs_per_n, seed)?;
            Ok(ConcentrationRow {
                n,
                graphs: graphs_per_n,
                mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
                std: std_dev(&values),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub graphs: usize,
    /// Channel realizations per graph (enumeration oracle only).
    pub samples: usize,
    pub seed: u64,
    /// Density-evolution settings for the bound on non-erasure channels.
    pub bound: MapBoundConfig,
    pub sigmas: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { graphs: 200, samples: 20, seed: 0, bound: MapBoundConfig::default(), sigmas: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Rank,
    Enumeration,
}

/// Comparison of an exact oracle with the trial-entropy bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub oracle_kind: OracleKind,
    pub oracle: OracleReport,
    pub bound: Estimate,
    /// `oracle - bound`.
    pub margin: f64,
    /// Combined standard error of the margin.
    pub sigma: f64,
    /// True when the oracle falls below the bound by more than `sigmas` combined errors.
    pub violation: bool,
}

fn compare(kind: OracleKind, oracle: OracleReport, bound: Estimate, sigmas: f64) -> VerifyReport {
    let margin = oracle.entropy_per_bit.mean - bound.mean;
    let sigma = oracle.entropy_per_bit.std_error.hypot(bound.std_error);
    VerifyReport { oracle_kind: kind, oracle, bound, margin, sigma, violation: margin < -sigmas * sigma }
}

/// Largest closed-form trial entropy over the fixed points of the erasure recursion.
pub fn bec_bound(spec: &EnsembleSpec, eps: f64) -> Result<f64> {
    let model = spec.code_model()?;
    Ok(bec_stationary_points(eps, &model).iter().map(|p| p.psi).fold(f64::NEG_INFINITY, f64::max))
}

/// Check the ensemble-average entropy against the trial-entropy bound. The
/// erasure channel uses the rank oracle and the closed-form bound; other
/// channels use enumeration and the density-evolution bound.
pub fn verify_bound(spec: &EnsembleSpec, channel: &ChannelModel, cfg: &VerifyConfig) -> Result<VerifyReport> {
    if let ChannelModel::Bec { epsilon } = channel {
        let values = rank_oracle_samples(spec, *epsilon, cfg.graphs, cfg.seed)?;
        let oracle = OracleReport {
            entropy_per_bit: mean_and_se(&values),
            bit_error_rate: None,
            samples: 1,
            graphs: cfg.graphs,
            per_graph: values,
        };
        let bound = Estimate::new(bec_bound(spec, *epsilon)?, 0.0);
        return Ok(compare(OracleKind::Rank, oracle, bound, cfg.sigmas));
    }
    let per_graph: Vec<f64> = (0..cfg.graphs as u64)
        .into_par_iter()
        .map(|g| {
            let graph = spec.sample(derive(cfg.seed, &[tag::GRAPH_LAYOUT, spec.n as u64, g]))?;
            let r = exact_entropy_enum(&graph, spec.family, channel, cfg.samples, derive(cfg.seed, &[tag::ORACLE, g]))?;
            Ok(r.entropy_per_bit.mean)
        })
        .collect::<Result<_>>()?;
    let oracle = OracleReport {
        entropy_per_bit: mean_and_se(&per_graph),
        bit_error_rate: None,
        samples: cfg.samples,
        graphs: cfg.graphs,
        per_graph,
    };
    let probe = probe_bound(channel, &spec.code_model()?, &cfg.bound)?;
    let bound = Estimate::new(probe.phi, probe.std_error);
    Ok(compare(OracleKind::Enumeration, oracle, bound, cfg.sigmas))
}

/// Capacity bound of a single code: the rate-based value reached by the
/// trial entropy with uninformative messages.
pub fn capacity_bound(graph: &TannerGraph, family: Family, channel: &ChannelModel) -> f64 {
    let ratio = graph.n_checks() as f64 / graph.n_var as f64;
    match family {
        Family::Ldpc => 1.0 - ratio - channel.capacity(),
        Family::Ldgm => 1.0 - ratio * channel.capacity(),
    }
}

/// Check one concrete graph against its capacity bound.
pub fn verify_graph(graph: &TannerGraph, family: Family, channel: &ChannelModel, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let (kind, oracle) = if let ChannelModel::Bec { epsilon } = channel {
        let values: Vec<f64> = (0..cfg.samples.max(1) as u64)
            .map(|s| {
                let erased = sample_erasures(channel_factor_count(graph, family), *epsilon, cfg.seed, &[tag::ORACLE, s]);
                exact_entropy_bec(graph, family, &erased) / graph.n_var as f64
            })
            .collect();
        let est = mean_and_se(&values);
        let report = OracleReport {
            entropy_per_bit: est,
            bit_error_rate: None,
            samples: values.len(),
            graphs: 1,
            per_graph: vec![est.mean],
        };
        (OracleKind::Rank, report)
    } else {
        (OracleKind::Enumeration, exact_oracle(graph, family, channel, cfg.samples, cfg.seed)?)
    };
    let bound = Estimate::new(capacity_bound(graph, family, channel), 0.0);
    Ok(compare(kind, oracle, bound, cfg.sigmas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::DegreePair;
    use crate::llr::Llr;
    use crate::rng::substream;
    use rand::Rng;

    /// Random tree: each new variable joins one check that touches an older variable.
    fn random_tree(n: usize, seed: u64, leaf_checks: bool) -> TannerGraph {
        let mut rng = substream(seed, &[99]);
        let mut checks: Vec<Vec<u32>> = Vec::new();
        let mut check_of: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 1..n {
            let p = rng.random_range(0..v);
            if !check_of[p].is_empty() && rng.random_bool(0.5) {
                let a = check_of[p][rng.random_range(0..check_of[p].len())];
                checks[a].push(v as u32);
                check_of[v].push(a);
            } else {
                checks.push(vec![p as u32, v as u32]);
                check_of[p].push(checks.len() - 1);
                check_of[v].push(checks.len() - 1);
            }
        }
        if leaf_checks {
            for v in 0..n {
                if rng.random_bool(0.5) {
                    checks.push(vec![v as u32]);
                }
            }
        }
        TannerGraph::new(n, checks).unwrap()
    }

    #[test]
    fn bp_is_exact_on_trees() {
        for seed in 0..8 {
            for (family, channel) in [
                (Family::Ldpc, ChannelModel::bsc(0.2).unwrap()),
                (Family::Ldpc, ChannelModel::biawgn(0.8).unwrap()),
                (Family::Ldgm, ChannelModel::bsc(0.15).unwrap()),
            ] {
                let g = random_tree(12, seed, family == Family::Ldgm);
                let obs = FactorObservations::sample(&g, family, &channel, seed, &[1]);
                let bp = bp_decode(&g, &obs, 30);
                let exact = posterior_llrs(&g, family, &obs).unwrap();
                for (m, e) in bp.marginals.iter().zip(&exact) {
                    assert!((m.value() - e).abs() < 1e-9 * e.abs().max(1.0), "{m} vs {e}");
                }
            }
        }
    }

    #[test]
    fn noiseless_channel_decodes_in_one_round() {
        let g = DegreePair::regular(3, 6).and_then(|p| EnsembleSpec::standard(60, p, Family::Ldpc)).unwrap();
        let graph = g.sample(1).unwrap();
        let obs = FactorObservations::from_llrs(&graph, Family::Ldpc, &vec![Llr::INFINITY; 60]);
        let out = bp_decode(&graph, &obs, 1);
        assert!(out.decisions.iter().all(|&d| d == Decision::Zero));
    }

    #[test]
    fn bp_below_threshold_clears_erasures() {
        let spec = EnsembleSpec::standard(20_000, DegreePair::regular(3, 6).unwrap(), Family::Ldpc).unwrap();
        let graph = spec.sample(3).unwrap();
        let erased = sample_erasures(graph.n_var, 0.40, 4, &[0]);
        let out = bp_decode(&graph, &FactorObservations::from_erasures(&graph, Family::Ldpc, &erased), 100);
        assert!(out.erased_fraction() < 0.005, "{}", out.erased_fraction());
        assert!(out.decisions.iter().all(|&d| d != Decision::One));
    }

    #[test]
    fn rank_oracle_endpoints() {
        let spec = EnsembleSpec::standard(40, DegreePair::regular(3, 6).unwrap(), Family::Ldpc).unwrap();
        let g = spec.sample(5).unwrap();
        assert_eq!(exact_entropy_bec(&g, Family::Ldpc, &[false; 40]), 0.0);
        let rank = Gf2Matrix::from_graph(&g).rank();
        assert_eq!(exact_entropy_bec(&g, Family::Ldpc, &[true; 40]), (40 - rank) as f64);
        let m = g.n_checks();
        assert_eq!(exact_entropy_bec(&g, Family::Ldgm, &vec![true; m]), 40.0);
    }

    #[test]
    fn enumeration_matches_rank_per_pattern() {
        for seed in 0..20u64 {
            let spec = EnsembleSpec::poisson(16, 3.0, crate::ensembles::DegreeDist::regular(6), Family::Ldpc).unwrap();
            let g = spec.sample(seed).unwrap();
            let erased = sample_erasures(16, 0.5, seed, &[1]);
            let obs = FactorObservations::from_erasures(&g, Family::Ldpc, &erased);
            assert_eq!(conditional_entropy_enum(&g, Family::Ldpc, &obs).unwrap(), exact_entropy_bec(&g, Family::Ldpc, &erased));
            let gm = EnsembleSpec::poisson(12, 4.0, crate::ensembles::DegreeDist::regular(4), Family::Ldgm).unwrap();
            let g = gm.sample(seed).unwrap();
            let erased = sample_erasures(g.n_checks(), 0.5, seed, &[2]);
            let obs = FactorObservations::from_erasures(&g, Family::Ldgm, &erased);
            assert_eq!(conditional_entropy_enum(&g, Family::Ldgm, &obs).unwrap(), exact_entropy_bec(&g, Family::Ldgm, &erased));
        }
    }

    #[test]
    fn uncoded_bits_have_channel_entropy() {
        let g = TannerGraph::new(10, vec![]).unwrap();
        let ch = ChannelModel::bsc(0.11).unwrap();
        let r = exact_entropy_enum(&g, Family::Ldpc, &ch, 400, 1).unwrap();
        let want = 1.0 - ch.capacity();
        assert!((r.entropy_per_bit.mean - want).abs() < 3.0 * r.entropy_per_bit.std_error, "{r:?}");
    }

    #[test]
    fn enumeration_budget() {
        let g = TannerGraph::new(30, vec![vec![0, 1]]).unwrap();
        let ch = ChannelModel::bsc(0.1).unwrap();
        assert!(matches!(exact_entropy_enum(&g, Family::Ldgm, &ch, 1, 1), Err(Error::BudgetExceeded(_))));
        assert!(matches!(exact_entropy_enum(&g, Family::Ldpc, &ch, 1, 1), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn bit_map_examples() {
        let spec = EnsembleSpec::standard(24, DegreePair::regular(3, 6).unwrap(), Family::Ldpc).unwrap();
        let g = spec.sample(2).unwrap();
        let pb = exact_bitmap_error(&g, Family::Ldpc, &ChannelModel::bsc(0.0).unwrap(), 5, 1).unwrap();
        assert_eq!(pb.mean, 0.0);
        // full erasure: bits that are not identically zero on the code are coin flips
        let basis = Gf2Matrix::from_graph(&g).null_space();
        let free = (0..24).filter(|&i| basis.iter().any(|v| v[0] >> i & 1 == 1)).count();
        let pb = exact_bitmap_error(&g, Family::Ldpc, &ChannelModel::bec(1.0).unwrap(), 3, 1).unwrap();
        assert_eq!(pb.mean, 0.5 * free as f64 / 24.0);
    }

    #[test]
    fn fano_holds_on_instances() {
        for seed in 0..5 {
            let spec = EnsembleSpec::poisson(16, 3.0, crate::ensembles::DegreeDist::regular(6), Family::Ldpc).unwrap();
            let g = spec.sample(seed).unwrap();
            let r = exact_oracle(&g, Family::Ldpc, &ChannelModel::bsc(0.08).unwrap(), 200, seed).unwrap();
            let pb = r.bit_error_rate.unwrap();
            let h2 = crate::channels::binary_entropy(pb.mean).unwrap();
            assert!(h2 >= r.entropy_per_bit.mean - 5.0 * r.entropy_per_bit.std_error, "{r:?}");
        }
    }

    #[test]
    fn bethe_is_exact_on_trees() {
        for seed in 0..6 {
            for (family, channel) in
                [(Family::Ldpc, ChannelModel::bsc(0.2).unwrap()), (Family::Ldgm, ChannelModel::bsc(0.1).unwrap())]
            {
                let g = random_tree(10, seed, family == Family::Ldgm);
                let obs = FactorObservations::sample(&g, family, &channel, seed, &[2]);
                let bp = bp_decode(&g, &obs, 30);
                let f = bethe_free_energy(&g, &bp.messages, &obs).unwrap();
                let log2_q0: f64 = obs.variables.iter().chain(&obs.checks).map(|o| o.log2_q0).sum();
                let log2_z = log2_q0 + conditional_entropy_enum(&g, family, &obs).unwrap();
                assert!((f + log2_z).abs() < 1e-9, "{f} vs {}", -log2_z);
            }
        }
    }

    #[test]
    fn bethe_at_zero_messages() {
        let spec = EnsembleSpec::poisson(30, 4.0, crate::ensembles::DegreeDist::regular(4), Family::Ldgm).unwrap();
        let g = spec.sample(1).unwrap();
        for ch in [ChannelModel::bsc(0.2).unwrap(), ChannelModel::biawgn(1.0).unwrap()] {
            let obs = FactorObservations::sample(&g, Family::Ldgm, &ch, 1, &[3]);
            let f = bethe_free_energy(&g, &MessageSet::zeros(g.n_edges()), &obs).unwrap();
            // each check contributes log2(Q(y|0) + Q(y|1)) - 1
            let checks: f64 = obs.checks.iter().map(|o| o.log2_q0 + o.llr.neg_log2_p0() - 1.0).sum();
            let want = -(g.n_var as f64) + g.n_edges() as f64 - g.n_edges() as f64 - checks;
            assert!((f - want).abs() < 1e-9, "{f} vs {want}");
        }
    }

    #[test]
    fn impossible_observation_is_rejected() {
        let g = TannerGraph::new(2, vec![vec![0, 1]]).unwrap();
        let mut obs = FactorObservations::from_llrs(&g, Family::Ldpc, &[Llr::ZERO, Llr::ZERO]);
        obs.variables[0].log2_q0 = f64::NEG_INFINITY;
        assert!(matches!(bethe_free_energy(&g, &MessageSet::zeros(2), &obs), Err(Error::InconsistentInfinity)));
    }

    #[test]
    fn concentration_needs_erasures() {
        let spec = EnsembleSpec::poisson(100, 3.0, crate::ensembles::DegreeDist::regular(6), Family::Ldpc).unwrap();
        assert!(concentration_probe(&spec, &ChannelModel::bsc(0.1).unwrap(), &[100], 2, 1).is_err());
        let rows = concentration_probe(&spec, &ChannelModel::bec(0.45).unwrap(), &[100, 400], 40, 1).unwrap();
        assert!(rows[1].std < rows[0].std);
    }

    #[test]
    fn trivial_code_verifies_at_capacity() {
        let g = TannerGraph::new(12, vec![]).unwrap();
        let cfg = VerifyConfig { samples: 300, seed: 4, ..VerifyConfig::default() };
        let r = verify_graph(&g, Family::Ldpc, &ChannelModel::bsc(0.11).unwrap(), &cfg).unwrap();
        assert!(r.margin.abs() < 3.0 * r.sigma, "{r:?}");
        assert!(!r.violation);
    }
}
