use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::llr::Llr;
use crate::rng::{substream, BLOCK};
use rand_chacha::ChaCha8Rng;

/// Empirical sample of a symmetric LLR density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlrPopulation {
    samples: Vec<Llr>,
    provenance: String,
}

impl LlrPopulation {
    pub fn new(samples: Vec<Llr>, provenance: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("population must have at least one sample".into()));
        }
        Ok(LlrPopulation { samples, provenance: provenance.into() })
    }

    pub fn constant(value: Llr, n: usize, provenance: impl Into<String>) -> Self {
        assert!(n > 0);
        LlrPopulation { samples: vec![value; n], provenance: provenance.into() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[Llr] {
        &self.samples
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn into_samples(self) -> Vec<Llr> {
        self.samples
    }

    /// Fraction of samples exactly equal to zero (erasures).
    pub fn zero_fraction(&self) -> f64 {
        self.samples.iter().filter(|l| l.is_zero()).count() as f64 / self.len() as f64
    }

    pub fn infinite_fraction(&self) -> f64 {
        self.samples.iter().filter(|l| l.is_infinite()).count() as f64 / self.len() as f64
    }

    /// Sample mean of `tanh^p`.
    pub fn tanh_moment(&self, p: i32) -> f64 {
        self.samples.iter().map(|l| l.tanh().powi(p)).sum::<f64>() / self.len() as f64
    }

    /// Moments `E tanh^{2k}` for `k = 1..=k_max`.
    pub fn even_moments(&self, k_max: usize) -> Vec<f64> {
        let mut acc = vec![0.0; k_max];
        for l in &self.samples {
            let t2 = l.tanh() * l.tanh();
            let mut p = 1.0;
            for a in acc.iter_mut() {
                p *= t2;
                *a += p;
            }
        }
        acc.iter().map(|a| a / self.len() as f64).collect()
    }
}

/// Fill `out` block by block, each block from its own substream keyed by
/// `labels ++ [block index]`.
pub(crate) fn fill_blocks<T, F>(out: &mut [T], seed: u64, labels: &[u64], f: F)
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, &mut [T]) + Sync,
{
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        let mut key = labels.to_vec();
        key.push(b as u64);
        let mut rng = substream(seed, &key);
        f(&mut rng, chunk);
    });
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub k: u32,
    /// `mean(tanh^{2k-1}) - mean(tanh^{2k})`
    pub discrepancy: f64,
    pub std_error: f64,
    pub sigmas: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub checks: Vec<MomentCheck>,
    pub threshold_sigmas: f64,
}

impl SymmetryReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> Option<&MomentCheck> {
        self.checks.iter().max_by(|a, b| a.sigmas.total_cmp(&b.sigmas))
    }

    pub fn into_result(self) -> Result<Self> {
        match self.checks.iter().find(|c| !c.pass) {
            Some(c) => Err(Error::NonSymmetricInput { k: c.k, sigmas: c.sigmas }),
            None => Ok(self),
        }
    }
}

/// Check `E tanh^{2k-1} X = E tanh^{2k} X` for `k = 1..=k_max`, flagging a
/// moment whose sample discrepancy exceeds 4 standard errors.
pub fn symmetry_test(pop: &LlrPopulation, k_max: u32) -> SymmetryReport {
    symmetry_test_at(pop, k_max, 4.0)
}

pub fn symmetry_test_at(pop: &LlrPopulation, k_max: u32, threshold_sigmas: f64) -> SymmetryReport {
    let n = pop.len() as f64;
    let mut checks = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let (mut s, mut s2) = (0.0, 0.0);
        for l in pop.samples() {
            let t = l.tanh();
            let odd = t.powi(2 * k as i32 - 1);
            let d = odd - odd * t;
            s += d;
            s2 += d * d;
        }
        let mean = s / n;
        let var = if n > 1.0 { ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        let se = (var / n).sqrt();
        let sigmas = if mean == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            mean.abs() / se
        };
        let pass = mean.abs() <= threshold_sigmas * se + 1e-14;
        checks.push(MomentCheck { k, discrepancy: mean, std_error: se, sigmas, pass });
    }
    SymmetryReport { checks, threshold_sigmas }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_negative_fails_at_first_moment() {
        let pop = LlrPopulation::constant(Llr::new(-1.0), 1000, "const");
        let r = symmetry_test(&pop, 4);
        assert!(!r.checks[0].pass);
        assert!((r.checks[0].discrepancy - (-0.7616 - 0.5800)).abs() < 1e-3);
        assert!(matches!(r.into_result(), Err(Error::NonSymmetricInput { k: 1, .. })));
    }

    #[test]
    fn all_infinite_passes() {
        let pop = LlrPopulation::constant(Llr::INFINITY, 500, "inf");
        assert!(symmetry_test(&pop, 6).pass());
    }

    #[test]
    fn all_zero_passes() {
        let pop = LlrPopulation::constant(Llr::ZERO, 500, "zero");
        assert!(symmetry_test(&pop, 6).pass());
    }

    #[test]
    fn empty_population_rejected() {
        assert!(LlrPopulation::new(vec![], "x").is_err());
    }
}
