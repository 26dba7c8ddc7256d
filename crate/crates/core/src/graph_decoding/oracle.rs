//! Exact conditional entropies and bit-MAP error rates of small codes.

use std::f64::consts::LOG2_E;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::gf2::Gf2Matrix;
use crate::channels::{ChannelModel, Observation};
use crate::ensembles::{Family, TannerGraph};
use crate::error::{Error, Result};
use crate::llr::Llr;
use crate::rng::{substream, tag};
use crate::stats::{jackknife_mean, Estimate};

/// Largest code dimension enumerated for LDPC codes.
pub const MAX_ENUM_DIMENSION: usize = 24;
/// Largest number of information bits enumerated for LDGM codes.
pub const MAX_ENUM_BITS: usize = 20;

/// Channel observations attached to the factors of a Tanner graph: one per
/// variable (`h`) and one per check (`J`). LDPC checks observe a noiseless
/// zero and LDGM variables observe nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorObservations {
    pub variables: Vec<Observation>,
    pub checks: Vec<Observation>,
}

const SILENT: Observation = Observation { llr: Llr::ZERO, log2_q0: 0.0 };
const PARITY: Observation = Observation { llr: Llr::INFINITY, log2_q0: 0.0 };

impl FactorObservations {
    /// Outputs drawn conditional on the all-zero codeword.
    pub fn sample(graph: &TannerGraph, family: Family, channel: &ChannelModel, seed: u64, labels: &[u64]) -> Self {
        let mut rng = substream(seed, labels);
        match family {
            Family::Ldpc => FactorObservations {
                variables: (0..graph.n_var).map(|_| channel.sample_observation(&mut rng)).collect(),
                checks: vec![PARITY; graph.n_checks()],
            },
            Family::Ldgm => FactorObservations {
                variables: vec![SILENT; graph.n_var],
                checks: (0..graph.n_checks()).map(|_| channel.sample_observation(&mut rng)).collect(),
            },
        }
    }

    /// Observations given directly as LLRs on the channel-bearing factors.
    pub fn from_llrs(graph: &TannerGraph, family: Family, llrs: &[Llr]) -> Self {
        let obs = |l: &Llr| Observation { llr: *l, log2_q0: 0.0 };
        match family {
            Family::Ldpc => {
                debug_assert_eq!(llrs.len(), graph.n_var);
                FactorObservations { variables: llrs.iter().map(obs).collect(), checks: vec![PARITY; graph.n_checks()] }
            }
            Family::Ldgm => {
                debug_assert_eq!(llrs.len(), graph.n_checks());
                FactorObservations { variables: vec![SILENT; graph.n_var], checks: llrs.iter().map(obs).collect() }
            }
        }
    }

    /// Erasure pattern on the channel-bearing factors (`true` = erased).
    pub fn from_erasures(graph: &TannerGraph, family: Family, erased: &[bool]) -> Self {
        let llrs: Vec<Llr> = erased.iter().map(|&e| if e { Llr::ZERO } else { Llr::INFINITY }).collect();
        Self::from_llrs(graph, family, &llrs)
    }

    pub fn variable_llrs(&self) -> Vec<Llr> {
        self.variables.iter().map(|o| o.llr).collect()
    }

    pub fn check_llrs(&self) -> Vec<Llr> {
        self.checks.iter().map(|o| o.llr).collect()
    }
}

/// Erasure pattern with i.i.d. erasures of probability `eps`.
pub fn sample_erasures(len: usize, eps: f64, seed: u64, labels: &[u64]) -> Vec<bool> {
    let mut rng = substream(seed, labels);
    (0..len).map(|_| rng.random::<f64>() < eps).collect()
}

/// Exact conditional entropy (bits) of the transmitted word given an erasure
/// pattern, by GF(2) rank. `erased` indexes variables (LDPC) or checks (LDGM).
pub fn exact_entropy_bec(graph: &TannerGraph, family: Family, erased: &[bool]) -> f64 {
    let h = Gf2Matrix::from_graph(graph);
    match family {
        Family::Ldpc => {
            let cols: Vec<usize> = (0..graph.n_var).filter(|&i| erased[i]).collect();
            (cols.len() - h.select_columns(&cols).rank()) as f64
        }
        Family::Ldgm => {
            let rows: Vec<usize> = (0..graph.n_checks()).filter(|&a| !erased[a]).collect();
            (graph.n_var - h.select_rows(&rows).rank()) as f64
        }
    }
}

/// Gray-code walk over a code. Each generator toggles a set of variables and
/// a set of channel-bearing factors; the weight of a word is
/// `prod_{active factors} e^{-2 l}`.
pub struct CodeEnumerator {
    n_var: usize,
    n_factors: usize,
    gen_factors: Vec<Vec<usize>>,
    gen_vars: Vec<Vec<usize>>,
}

impl CodeEnumerator {
    pub fn new(graph: &TannerGraph, family: Family) -> Result<Self> {
        let h = Gf2Matrix::from_graph(graph);
        match family {
            Family::Ldpc => {
                let basis = h.null_space();
                if basis.len() > MAX_ENUM_DIMENSION {
                    return Err(Error::BudgetExceeded(format!(
                        "code dimension {} exceeds the enumeration limit {MAX_ENUM_DIMENSION}",
                        basis.len()
                    )));
                }
                let support = |v: &Vec<u64>| -> Vec<usize> {
                    (0..graph.n_var).filter(|&i| v[i / 64] >> (i % 64) & 1 == 1).collect()
                };
                let gen_vars: Vec<Vec<usize>> = basis.iter().map(support).collect();
                Ok(CodeEnumerator { n_var: graph.n_var, n_factors: graph.n_var, gen_factors: gen_vars.clone(), gen_vars })
            }
            Family::Ldgm => {
                if graph.n_var > MAX_ENUM_BITS {
                    return Err(Error::BudgetExceeded(format!(
                        "{} information bits exceed the enumeration limit {MAX_ENUM_BITS}",
                        graph.n_var
                    )));
                }
                let gen_factors = (0..graph.n_var)
                    .map(|i| (0..graph.n_checks()).filter(|&a| h.get(a, i)).collect())
                    .collect();
                Ok(CodeEnumerator {
                    n_var: graph.n_var,
                    n_factors: graph.n_checks(),
                    gen_factors,
                    gen_vars: (0..graph.n_var).map(|i| vec![i]).collect(),
                })
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.gen_vars.len()
    }

    /// Visit every word as `(log2 weight, blocked, variable bits)`, where
    /// `blocked` counts active factors with infinite LLR (weight zero).
    fn walk<F: FnMut(f64, usize, &[bool])>(&self, llrs: &[Llr], mut visit: F) {
        let cost: Vec<f64> = llrs
            .iter()
            .map(|l| if l.is_infinite() { 0.0 } else { -2.0 * l.value() * LOG2_E })
            .collect();
        let mut active = vec![false; self.n_factors];
        let mut bits = vec![false; self.n_var];
        let (mut t, mut blocked) = (0.0f64, 0usize);
        visit(t, blocked, &bits);
        let total = 1u64 << self.dimension();
        for step in 1..total {
            let g = step.trailing_zeros() as usize;
            for &f in &self.gen_factors[g] {
                active[f] = !active[f];
                let sign = if active[f] { 1.0 } else { -1.0 };
                if llrs[f].is_infinite() {
                    if active[f] {
                        blocked += 1;
                    } else {
                        blocked -= 1;
                    }
                } else {
                    t += sign * cost[f];
                }
            }
            for &i in &self.gen_vars[g] {
                bits[i] = !bits[i];
            }
            if step & 0x3ff == 0 {
                // refresh the running sum to keep rounding from accumulating
                t = active.iter().zip(&cost).filter(|(a, _)| **a).map(|(_, c)| c).sum();
            }
            visit(t, blocked, &bits);
        }
    }

    /// `log2 sum_x prod_f e^{-2 l_f [x active at f]}` over the code.
    pub fn log2_partition(&self, llrs: &[Llr]) -> f64 {
        let (mut m, mut s) = (f64::NEG_INFINITY, 0.0f64);
        self.walk(llrs, |t, blocked, _| {
            if blocked > 0 {
                return;
            }
            if t > m {
                s = s * (m - t).exp2() + 1.0;
                m = t;
            } else {
                s += (t - m).exp2();
            }
        });
        m + s.log2()
    }

    /// Per-variable `(sum of weights with x_i = 1, total weight)`, both
    /// scaled by a common factor.
    pub fn marginal_weights(&self, llrs: &[Llr]) -> (Vec<f64>, f64) {
        let mut m = f64::NEG_INFINITY;
        self.walk(llrs, |t, blocked, _| {
            if blocked == 0 && t > m {
                m = t;
            }
        });
        let mut ones = vec![0.0; self.n_var];
        let mut total = 0.0;
        self.walk(llrs, |t, blocked, bits| {
            if blocked > 0 {
                return;
            }
            let w = (t - m).exp2();
            total += w;
            for (o, &b) in ones.iter_mut().zip(bits) {
                if b {
                    *o += w;
                }
            }
        });
        (ones, total)
    }
}

fn channel_llrs(obs: &FactorObservations, family: Family) -> Vec<Llr> {
    match family {
        Family::Ldpc => obs.variable_llrs(),
        Family::Ldgm => obs.check_llrs(),
    }
}

/// Exact posterior LLRs `1/2 ln P(x_i = 0 | y) / P(x_i = 1 | y)` by enumeration.
pub fn posterior_llrs(graph: &TannerGraph, family: Family, obs: &FactorObservations) -> Result<Vec<f64>> {
    let e = CodeEnumerator::new(graph, family)?;
    let (ones, total) = e.marginal_weights(&channel_llrs(obs, family));
    Ok(ones.iter().map(|&o| 0.5 * ((total - o) / o).ln()).collect())
}

/// Conditional entropy of the codeword given the observations, in bits.
pub fn conditional_entropy_enum(graph: &TannerGraph, family: Family, obs: &FactorObservations) -> Result<f64> {
    Ok(CodeEnumerator::new(graph, family)?.log2_partition(&channel_llrs(obs, family)))
}

/// Exact oracle results for one or more graphs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// Conditional entropy per bit.
    pub entropy_per_bit: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_error_rate: Option<Estimate>,
    /// Channel realizations per graph.
    pub samples: usize,
    pub graphs: usize,
    /// Mean entropy per bit of each graph.
    pub per_graph: Vec<f64>,
}

fn bit_errors(ones: &[f64], total: f64) -> f64 {
    let s: f64 = ones
        .iter()
        .map(|&o| {
            let zero = total - o;
            if (o - zero).abs() <= 1e-12 * total {
                0.5
            } else if o > zero {
                1.0
            } else {
                0.0
            }
        })
        .sum();
    s / ones.len().max(1) as f64
}

/// Conditional entropy per bit of one graph averaged over `samples` channel
/// realizations, by exhaustive enumeration of the code.
pub fn exact_entropy_enum(
    graph: &TannerGraph,
    family: Family,
    channel: &ChannelModel,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    let e = CodeEnumerator::new(graph, family)?;
    let n = graph.n_var as f64;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let obs = FactorObservations::sample(graph, family, channel, seed, &[tag::ORACLE, s]);
            e.log2_partition(&channel_llrs(&obs, family)) / n
        })
        .collect();
    let est = jackknife_mean(&values);
    Ok(OracleReport { entropy_per_bit: est, bit_error_rate: None, samples, graphs: 1, per_graph: vec![est.mean] })
}

/// Bit error rate of exact bit-MAP decoding, ties counting one half.
pub fn exact_bitmap_error(
    graph: &TannerGraph,
    family: Family,
    channel: &ChannelModel,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(exact_oracle(graph, family, channel, samples, seed)?.bit_error_rate.expect("computed"))
}

/// Entropy and bit-MAP error rate on the same channel realizations.
pub fn exact_oracle(
    graph: &TannerGraph,
    family: Family,
    channel: &ChannelModel,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    let e = CodeEnumerator::new(graph, family)?;
    let n = graph.n_var as f64;
    let pairs: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let obs = FactorObservations::sample(graph, family, channel, seed, &[tag::ORACLE, s]);
            let llrs = channel_llrs(&obs, family);
            let (ones, total) = e.marginal_weights(&llrs);
            (e.log2_partition(&llrs) / n, bit_errors(&ones, total))
        })
        .collect();
    let h: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let pb: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let est = jackknife_mean(&h);
    Ok(OracleReport {
        entropy_per_bit: est,
        bit_error_rate: Some(jackknife_mean(&pb)),
        samples,
        graphs: 1,
        per_graph: vec![est.mean],
    })
}
