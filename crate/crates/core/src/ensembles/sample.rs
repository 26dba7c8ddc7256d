use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::graph::TannerGraph;
use super::pair::DegreePair;
use super::poly::{DegreeDist, DegreeLaw};
use super::profile::{multi_poisson_profile, multi_poisson_rounds};
use crate::error::{Error, Result};
use crate::rng::{substream, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ldpc,
    Ldgm,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ldpc" => Ok(Family::Ldpc),
            "ldgm" => Ok(Family::Ldgm),
            _ => Err(Error::Parse { column: 1, message: format!("unknown code family '{s}'") }),
        }
    }
}

/// Asymptotic description of an ensemble: left degree law, right degree
/// distribution and code family. This is what density evolution and the
/// trial entropy consume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeModel {
    pub left: DegreeLaw,
    pub right: DegreeDist,
    pub family: Family,
}

impl CodeModel {
    pub fn from_pair(pair: &DegreePair, family: Family) -> Self {
        CodeModel { left: DegreeLaw::Finite(pair.lambda().clone()), right: pair.rho().clone(), family }
    }

    pub fn poisson(gamma: f64, rho: DegreeDist, family: Family) -> Self {
        CodeModel { left: DegreeLaw::Poisson(gamma), right: rho, family }
    }

    /// Checks per variable node, `Lambda'(1) / P'(1)`.
    pub fn check_ratio(&self) -> f64 {
        self.left.mean() / self.right.mean()
    }

    pub fn design_rate(&self) -> f64 {
        match self.family {
            Family::Ldpc => 1.0 - self.check_ratio(),
            Family::Ldgm => 1.0 / self.check_ratio(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnsembleKind {
    Standard(DegreePair),
    Poisson { gamma: f64, rho: DegreeDist },
    MultiPoisson { gamma: f64, pair: DegreePair },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub kind: EnsembleKind,
    pub family: Family,
}

fn near_integer(x: f64) -> Option<usize> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0) && r >= 0.0).then_some(r as usize)
}

struct StandardCounts {
    var_counts: Vec<(usize, usize)>,
    check_counts: Vec<(usize, usize)>,
}

fn standard_counts(n: usize, pair: &DegreePair) -> Result<StandardCounts> {
    let mut var_counts = Vec::new();
    for (l, f) in pair.lambda().terms() {
        let c = near_integer(n as f64 * f)
            .ok_or_else(|| Error::Integrality(format!("n * Lambda_{l} = {} is not an integer", n as f64 * f)))?;
        var_counts.push((l as usize, c));
    }
    let m_real = n as f64 * pair.lambda_prime_one() / pair.rho_prime_one();
    let m = near_integer(m_real)
        .ok_or_else(|| Error::Integrality(format!("number of checks {m_real} is not an integer")))?;
    let mut check_counts = Vec::new();
    for (k, f) in pair.rho().terms() {
        let c = near_integer(m as f64 * f)
            .ok_or_else(|| Error::Integrality(format!("m * P_{k} = {} is not an integer", m as f64 * f)))?;
        check_counts.push((k as usize, c));
    }
    Ok(StandardCounts { var_counts, check_counts })
}

impl EnsembleSpec {
    pub fn standard(n: usize, pair: DegreePair, family: Family) -> Result<Self> {
        standard_counts(n, &pair)?;
        Ok(EnsembleSpec { n, kind: EnsembleKind::Standard(pair), family })
    }

    pub fn poisson(n: usize, gamma: f64, rho: DegreeDist, family: Family) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidEnsemble(format!("gamma must be positive, got {gamma}")));
        }
        if rho.min_degree() < 2 {
            return Err(Error::InvalidDegrees("check degrees must be at least 2".into()));
        }
        Ok(EnsembleSpec { n, kind: EnsembleKind::Poisson { gamma, rho }, family })
    }

    pub fn multi_poisson(n: usize, gamma: f64, pair: DegreePair, family: Family) -> Result<Self> {
        multi_poisson_rounds(gamma, &pair)?;
        Ok(EnsembleSpec { n, kind: EnsembleKind::MultiPoisson { gamma, pair }, family })
    }

    pub fn rho(&self) -> &DegreeDist {
        match &self.kind {
            EnsembleKind::Standard(p) | EnsembleKind::MultiPoisson { pair: p, .. } => p.rho(),
            EnsembleKind::Poisson { rho, .. } => rho,
        }
    }

    /// Number of multi-Poisson construction rounds, if applicable.
    pub fn t_max(&self) -> Option<usize> {
        match &self.kind {
            EnsembleKind::MultiPoisson { gamma, pair } => multi_poisson_rounds(*gamma, pair).ok(),
            _ => None,
        }
    }

    pub fn design_rate(&self) -> f64 {
        let left_mean = match &self.kind {
            EnsembleKind::Standard(p) | EnsembleKind::MultiPoisson { pair: p, .. } => p.lambda_prime_one(),
            EnsembleKind::Poisson { gamma, .. } => *gamma,
        };
        let r = self.rho().mean();
        match self.family {
            Family::Ldpc => 1.0 - left_mean / r,
            Family::Ldgm => r / left_mean,
        }
    }

    /// Large-n description used by density evolution. Multi-Poisson
    /// ensembles use their asymptotic left profile.
    pub fn code_model(&self) -> Result<CodeModel> {
        Ok(match &self.kind {
            EnsembleKind::Standard(p) => CodeModel::from_pair(p, self.family),
            EnsembleKind::Poisson { gamma, rho } => CodeModel::poisson(*gamma, rho.clone(), self.family),
            EnsembleKind::MultiPoisson { gamma, pair } => {
                let prof = multi_poisson_profile(*gamma, pair)?;
                CodeModel {
                    left: DegreeLaw::Finite(DegreeDist::normalized(prof.lambda_hat)?),
                    right: pair.rho().clone(),
                    family: self.family,
                }
            }
        })
    }

    pub fn sample(&self, seed: u64) -> Result<TannerGraph> {
        match &self.kind {
            EnsembleKind::Standard(p) => sample_standard(self.n, p, seed),
            EnsembleKind::Poisson { gamma, rho } => Ok(sample_poisson(self.n, *gamma, rho, seed)),
            EnsembleKind::MultiPoisson { gamma, pair } => sample_multi_poisson(self.n, *gamma, pair, seed),
        }
    }
}

/// Assign degrees to nodes: shuffle the labels, then give the first block of
/// shuffled labels the smallest degree, the next block the next degree, etc.
fn assign_degrees(count: usize, blocks: &[(usize, usize)], seed: u64, side: u64) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..count).collect();
    labels.shuffle(&mut substream(seed, &[tag::GRAPH_LAYOUT, side]));
    let mut deg = vec![0usize; count];
    let mut pos = 0;
    for &(d, c) in blocks {
        for &node in &labels[pos..pos + c] {
            deg[node] = d;
        }
        pos += c;
    }
    deg
}

/// Uniform sample from the standard (configuration-model) ensemble.
pub fn sample_standard(n: usize, pair: &DegreePair, seed: u64) -> Result<TannerGraph> {
    let counts = standard_counts(n, pair)?;
    let var_deg = assign_degrees(n, &counts.var_counts, seed, 0);
    let m = counts.check_counts.iter().map(|&(_, c)| c).sum();
    let check_deg = assign_degrees(m, &counts.check_counts, seed, 1);

    let mut sockets: Vec<u32> = Vec::with_capacity(var_deg.iter().sum());
    for (i, &d) in var_deg.iter().enumerate() {
        sockets.extend(std::iter::repeat_n(i as u32, d));
    }
    sockets.shuffle(&mut substream(seed, &[tag::GRAPH_LAYOUT, 2]));
    debug_assert_eq!(sockets.len(), check_deg.iter().sum::<usize>());

    let mut checks = Vec::with_capacity(m);
    let mut pos = 0;
    for &k in &check_deg {
        checks.push(sockets[pos..pos + k].to_vec());
        pos += k;
    }
    Ok(TannerGraph { n_var: n, checks })
}

fn poisson_count(seed: u64, round: u64, k: u32, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let mut rng = substream(seed, &[tag::GRAPH_COUNTS, round, k as u64]);
    Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize
}

/// Poisson ensemble: `Poisson(n gamma P_k / P'(1))` checks of each degree `k`,
/// every socket attached to a uniformly random variable.
pub fn sample_poisson(n: usize, gamma: f64, rho: &DegreeDist, seed: u64) -> TannerGraph {
    let pp = rho.mean();
    let mut checks = Vec::new();
    for (k, f) in rho.terms() {
        let mk = poisson_count(seed, 0, k, n as f64 * gamma * f / pp);
        for _ in 0..mk {
            let c = checks.len() as u64;
            let mut rng = substream(seed, &[tag::GRAPH_CHECK, 0, c]);
            checks.push((0..k).map(|_| rng.random_range(0..n as u32)).collect());
        }
    }
    TannerGraph { n_var: n, checks }
}

/// Multi-Poisson ensemble: `t_max` rounds, each adding Poisson numbers of
/// checks whose sockets pick variables with probability proportional to their
/// remaining free sockets, frozen at the start of the round.
pub fn sample_multi_poisson(n: usize, gamma: f64, pair: &DegreePair, seed: u64) -> Result<TannerGraph> {
    let t_max = multi_poisson_rounds(gamma, pair)?;
    let blocks = largest_remainder(n, pair.lambda());
    let mut free: Vec<i64> = assign_degrees(n, &blocks, seed, 0).into_iter().map(|d| d as i64).collect();
    let pp = pair.rho_prime_one();
    let mut checks = Vec::new();
    for t in 0..t_max {
        let nodes: Vec<u32> = (0..n as u32).filter(|&i| free[i as usize] > 0).collect();
        if nodes.is_empty() {
            return Err(Error::SocketExhaustion { round: t });
        }
        let weights: Vec<f64> = nodes.iter().map(|&i| free[i as usize] as f64).collect();
        let alias = WeightedAliasIndex::new(weights).expect("positive weights");
        let round_start = checks.len();
        for (k, f) in pair.rho().terms() {
            let mk = poisson_count(seed, t as u64 + 1, k, n as f64 * gamma * f / pp);
            for _ in 0..mk {
                let c = (checks.len() - round_start) as u64;
                let mut rng = substream(seed, &[tag::GRAPH_CHECK, t as u64 + 1, c]);
                checks.push((0..k).map(|_| nodes[alias.sample(&mut rng)]).collect::<Vec<u32>>());
            }
        }
        for c in &checks[round_start..] {
            for &i in c {
                free[i as usize] -= 1;
            }
        }
    }
    Ok(TannerGraph { n_var: n, checks })
}

/// Integer node counts per degree summing to `n`, rounding `n * Lambda_l` by largest remainder.
fn largest_remainder(n: usize, dist: &DegreeDist) -> Vec<(usize, usize)> {
    let raw: Vec<(usize, f64)> = dist.terms().map(|(d, f)| (d as usize, n as f64 * f)).collect();
    let mut counts: Vec<(usize, usize)> = raw.iter().map(|&(d, x)| (d, x.floor() as usize)).collect();
    let assigned: usize = counts.iter().map(|&(_, c)| c).sum();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a].1 - raw[a].1.floor();
        let fb = raw[b].1 - raw[b].1.floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &j in order.iter().take(n.saturating_sub(assigned)) {
        counts[j].1 += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::graph::{empirical_degree_profile, tv_distance};
    use std::collections::BTreeMap;

    #[test]
    fn standard_small_forced_shape() {
        let p = DegreePair::regular(3, 6).unwrap();
        let g = sample_standard(6, &p, 11).unwrap();
        assert_eq!(g.n_checks(), 3);
        assert_eq!(g.n_edges(), 18);
        assert!(g.variable_degrees().iter().all(|&d| d == 3));
        assert_eq!(g, sample_standard(6, &p, 11).unwrap());
    }

    #[test]
    fn standard_rejects_non_integral() {
        let p = DegreePair::regular(3, 5).unwrap();
        assert!(matches!(sample_standard(6, &p, 0), Err(Error::Integrality(_))));
        assert!(EnsembleSpec::standard(6, p, Family::Ldpc).is_err());
    }

    #[test]
    fn standard_irregular_profile_is_exact() {
        let p = DegreePair::parse("L: 0.5@2 0.5@4 ; R: 0.5@3 0.5@6").unwrap();
        // n = 12: edges 36, m = 36 / 4.5 = 8
        let g = sample_standard(12, &p, 5).unwrap();
        let prof = empirical_degree_profile(&g);
        assert_eq!(prof.lambda_hat, p.lambda().as_map());
        assert_eq!(prof.rho_hat, p.rho().as_map());
    }

    #[test]
    fn poisson_single_variable() {
        let g = sample_poisson(1, 1.0, &DegreeDist::regular(2), 3);
        assert!(g.checks.iter().all(|c| c == &vec![0, 0]));
    }

    #[test]
    fn design_rates() {
        let p = DegreePair::regular(3, 6).unwrap();
        assert_eq!(EnsembleSpec::standard(6, p.clone(), Family::Ldpc).unwrap().design_rate(), 0.5);
        let s = EnsembleSpec::poisson(10, 3.0, DegreeDist::regular(6), Family::Ldpc).unwrap();
        assert_eq!(s.design_rate(), 0.5);
        let s = EnsembleSpec::poisson(10, 8.0, DegreeDist::regular(4), Family::Ldgm).unwrap();
        assert_eq!(s.design_rate(), 0.5);
        let p = DegreePair::regular(8, 4).unwrap();
        assert_eq!(EnsembleSpec::standard(4, p, Family::Ldgm).unwrap().design_rate(), 0.5);
    }

    #[test]
    fn multi_poisson_is_deterministic_and_in_range() {
        let p = DegreePair::regular(3, 6).unwrap();
        let a = sample_multi_poisson(500, 0.5, &p, 9).unwrap();
        let b = sample_multi_poisson(500, 0.5, &p, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.checks.iter().flatten().all(|&i| (i as usize) < 500));
        assert!(EnsembleSpec::multi_poisson(10, 3.0, p, Family::Ldpc).is_err());
    }

    #[test]
    fn poisson_profile_is_poisson() {
        let g = sample_poisson(100_000, 3.0, &DegreeDist::regular(6), 1);
        let prof = empirical_degree_profile(&g);
        let mut target = BTreeMap::new();
        let mut p = (-3.0f64).exp();
        for l in 0..40u32 {
            target.insert(l, p);
            p *= 3.0 / (l + 1) as f64;
        }
        assert!(tv_distance(&prof.lambda_hat, &target) < 0.01);
        assert_eq!(prof.rho_hat[&6], 1.0);
    }

    #[test]
    fn largest_remainder_sums_to_n() {
        let d = DegreeDist::new([(2, 1.0 / 3.0), (3, 1.0 / 3.0), (4, 1.0 / 3.0)]).unwrap();
        let c = largest_remainder(10, &d);
        assert_eq!(c.iter().map(|x| x.1).sum::<usize>(), 10);
    }
}
