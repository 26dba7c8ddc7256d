use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson, weighted::WeightedAliasIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Polynomial with non-negative coefficients stored by exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePoly {
    terms: BTreeMap<u32, f64>,
}

impl SparsePoly {
    pub fn new<I: IntoIterator<Item = (u32, f64)>>(terms: I) -> Self {
        let mut map = BTreeMap::new();
        for (d, c) in terms {
            if c != 0.0 {
                *map.entry(d).or_insert(0.0) += c;
            }
        }
        SparsePoly { terms: map }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.terms.iter().map(|(&d, &c)| (d, c))
    }

    pub fn coefficient(&self, d: u32) -> f64 {
        self.terms.get(&d).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|(&d, &c)| c * x.powi(d as i32)).sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .filter(|(&d, _)| d > 0)
            .map(|(&d, &c)| c * d as f64 * x.powi(d as i32 - 1))
            .sum()
    }

    pub fn sum(&self) -> f64 {
        self.terms.values().sum()
    }

    /// `sum_d c_d (1 - (1 - z)^d)`, which equals `p(1) - p(1 - z)` and is
    /// exactly zero at `z = 0`.
    pub fn eval_complement(&self, z: f64) -> f64 {
        let l = (-z).ln_1p();
        self.terms.iter().map(|(&d, &c)| -c * (d as f64 * l).exp_m1()).sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn min_exponent(&self) -> u32 {
        self.terms.keys().next().copied().unwrap_or(0)
    }
}

/// Node-perspective degree distribution: fractions that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDist {
    poly: SparsePoly,
}

impl DegreeDist {
    pub fn new<I: IntoIterator<Item = (u32, f64)>>(terms: I) -> Result<Self> {
        let terms: Vec<(u32, f64)> = terms.into_iter().collect();
        for &(d, c) in &terms {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidDegrees(format!("coefficient {c} of degree {d}")));
            }
        }
        let poly = SparsePoly::new(terms);
        let s = poly.sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDegrees(format!("fractions sum to {s}, not 1")));
        }
        Ok(DegreeDist { poly })
    }

    /// Build from unnormalized non-negative weights, rescaling them to sum to one.
    pub fn normalized<I: IntoIterator<Item = (u32, f64)>>(weights: I) -> Result<Self> {
        let poly = SparsePoly::new(weights);
        let s = poly.sum();
        if !(s > 0.0) {
            return Err(Error::InvalidDegrees("all weights are zero".into()));
        }
        let scaled: Vec<(u32, f64)> = poly.terms().map(|(d, c)| (d, c / s)).collect();
        Ok(DegreeDist { poly: SparsePoly::new(scaled) })
    }

    pub fn regular(d: u32) -> Self {
        DegreeDist { poly: SparsePoly::new([(d, 1.0)]) }
    }

    pub fn poly(&self) -> &SparsePoly {
        &self.poly
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.poly.terms()
    }

    pub fn fraction(&self, d: u32) -> f64 {
        self.poly.coefficient(d)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    /// Average degree, the derivative at one.
    pub fn mean(&self) -> f64 {
        self.poly.derivative(1.0)
    }

    pub fn max_degree(&self) -> u32 {
        self.poly.max_exponent()
    }

    pub fn min_degree(&self) -> u32 {
        self.poly.min_exponent()
    }

    /// Edge-perspective polynomial: the coefficient of `x^(d-1)` is `d * f_d / mean`.
    /// A distribution with no edges maps to the constant polynomial 1.
    pub fn edge_perspective(&self) -> SparsePoly {
        let m = self.mean();
        if m == 0.0 {
            return SparsePoly::new([(0, 1.0)]);
        }
        SparsePoly::new(
            self.poly
                .terms()
                .filter(|&(d, _)| d > 0)
                .map(|(d, c)| (d - 1, d as f64 * c / m)),
        )
    }

    pub fn as_map(&self) -> BTreeMap<u32, f64> {
        self.poly.terms().collect()
    }
}

/// Left degree law of an ensemble: a finite distribution or the Poisson law of
/// Poisson ensembles (whose node and edge perspectives coincide).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DegreeLaw {
    Finite(DegreeDist),
    Poisson(f64),
}

impl DegreeLaw {
    pub fn mean(&self) -> f64 {
        match self {
            DegreeLaw::Finite(d) => d.mean(),
            DegreeLaw::Poisson(g) => *g,
        }
    }

    /// Node-perspective generating function.
    pub fn node_eval(&self, x: f64) -> f64 {
        match self {
            DegreeLaw::Finite(d) => d.eval(x),
            DegreeLaw::Poisson(g) => (g * (x - 1.0)).exp(),
        }
    }

    /// Edge-perspective generating function (residual degree).
    pub fn edge_eval(&self, x: f64) -> f64 {
        match self {
            DegreeLaw::Finite(d) => d.edge_perspective().eval(x),
            DegreeLaw::Poisson(g) => (g * (x - 1.0)).exp(),
        }
    }

    pub fn edge_derivative(&self, x: f64) -> f64 {
        match self {
            DegreeLaw::Finite(d) => d.edge_perspective().derivative(x),
            DegreeLaw::Poisson(g) => g * (g * (x - 1.0)).exp(),
        }
    }

    /// Probability of degree zero.
    pub fn zero_fraction(&self) -> f64 {
        self.node_eval(0.0)
    }

    pub fn min_degree(&self) -> u32 {
        match self {
            DegreeLaw::Finite(d) => d.min_degree(),
            DegreeLaw::Poisson(_) => 0,
        }
    }

    /// Sampler for the full node degree.
    pub fn node_sampler(&self) -> CountSampler {
        match self {
            DegreeLaw::Finite(d) => CountSampler::from_poly(d.poly()),
            DegreeLaw::Poisson(g) => CountSampler::poisson(*g),
        }
    }

    /// Sampler for the residual degree seen along a random edge.
    pub fn residual_sampler(&self) -> CountSampler {
        match self {
            DegreeLaw::Finite(d) => CountSampler::from_poly(&d.edge_perspective()),
            DegreeLaw::Poisson(g) => CountSampler::poisson(*g),
        }
    }
}

/// Draws non-negative integer counts from a fixed law.
#[derive(Debug, Clone)]
pub enum CountSampler {
    Constant(usize),
    Table { degrees: Vec<usize>, alias: WeightedAliasIndex<f64> },
    Poisson(Poisson<f64>),
    Zero,
}

impl CountSampler {
    pub fn from_poly(p: &SparsePoly) -> Self {
        let terms: Vec<(u32, f64)> = p.terms().filter(|&(_, c)| c > 0.0).collect();
        match terms.len() {
            0 => CountSampler::Zero,
            1 => CountSampler::Constant(terms[0].0 as usize),
            _ => CountSampler::Table {
                degrees: terms.iter().map(|&(d, _)| d as usize).collect(),
                alias: WeightedAliasIndex::new(terms.iter().map(|&(_, c)| c).collect())
                    .expect("positive weights"),
            },
        }
    }

    pub fn poisson(mean: f64) -> Self {
        if mean > 0.0 {
            CountSampler::Poisson(Poisson::new(mean).expect("positive mean"))
        } else {
            CountSampler::Zero
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            CountSampler::Constant(d) => *d,
            CountSampler::Table { degrees, alias } => degrees[alias.sample(rng)],
            CountSampler::Poisson(p) => p.sample(rng) as usize,
            CountSampler::Zero => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_perspective_mixed() {
        let d = DegreeDist::new([(2, 0.5), (3, 0.5)]).unwrap();
        let e = d.edge_perspective();
        assert!((e.coefficient(1) - 0.4).abs() < 1e-15);
        assert!((e.coefficient(2) - 0.6).abs() < 1e-15);
        assert!((e.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regular_edge_perspective() {
        let e = DegreeDist::regular(3).edge_perspective();
        assert_eq!(e.coefficient(2), 1.0);
        let e = DegreeDist::regular(2).edge_perspective();
        assert_eq!(e.coefficient(1), 1.0);
    }

    #[test]
    fn rejects_bad_fractions() {
        assert!(DegreeDist::new([(3, 0.7)]).is_err());
        assert!(DegreeDist::new([(3, 1.5), (4, -0.5)]).is_err());
    }

    #[test]
    fn poisson_law_generating_functions() {
        let l = DegreeLaw::Poisson(3.0);
        assert!((l.node_eval(1.0) - 1.0).abs() < 1e-15);
        assert!((l.zero_fraction() - (-3.0f64).exp()).abs() < 1e-15);
        assert_eq!(l.mean(), 3.0);
    }
}
