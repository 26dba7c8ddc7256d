//! Sampled (population) density evolution and the scalar erasure recursion.

mod bec;

pub use bec::{
    bec_bp_threshold, bec_de_step, bec_fixed_point, check_erasure, BecMap, BecState, MAX_SCALAR_ITERATIONS,
    SCALAR_TOLERANCE,
};

use rand::Rng;
use serde::Serialize;

use crate::channels::{fill_blocks, fill_channel_llrs, symmetry_test, ChannelModel, LlrPopulation};
use crate::ensembles::{CodeModel, CountSampler, Family, SparsePoly};
use crate::error::{Error, Result};
use crate::llr::{abs_of_g, Llr};
use crate::rng::tag;

/// Law of the number of incoming messages combined at a node.
#[derive(Debug, Clone, PartialEq)]
pub enum CountLaw {
    /// `P(count = d)` is the coefficient of `x^d`.
    Poly(SparsePoly),
    Poisson(f64),
}

impl CountLaw {
    pub fn sampler(&self) -> CountSampler {
        match self {
            CountLaw::Poly(p) => CountSampler::from_poly(p),
            CountLaw::Poisson(g) => CountSampler::poisson(*g),
        }
    }
}

/// Residual degree law at variable nodes (one less than the degree seen along an edge).
pub fn variable_residual_law(model: &CodeModel) -> CountLaw {
    match &model.left {
        crate::ensembles::DegreeLaw::Finite(d) => CountLaw::Poly(d.edge_perspective()),
        crate::ensembles::DegreeLaw::Poisson(g) => CountLaw::Poisson(*g),
    }
}

/// Full node degree law at variable nodes.
pub fn variable_degree_law(model: &CodeModel) -> CountLaw {
    match &model.left {
        crate::ensembles::DegreeLaw::Finite(d) => CountLaw::Poly(d.poly().clone()),
        crate::ensembles::DegreeLaw::Poisson(g) => CountLaw::Poisson(*g),
    }
}

/// Sign-carrying `-ln tanh|l|` of every sample: the magnitude is the G value,
/// the sign bit is the sign of the LLR.
pub(crate) fn signed_g(pop: &[Llr]) -> Vec<f64> {
    pop.iter()
        .map(|l| {
            let g = l.g();
            if l.value() < 0.0 {
                -g
            } else {
                g
            }
        })
        .collect()
}

/// Source of check-node channel LLRs `J`.
#[derive(Debug, Clone, Copy)]
pub enum JSource<'a> {
    /// Parity checks of LDPC codes: `J = +inf`.
    Infinite,
    Population(&'a [Llr]),
}

#[inline]
fn combine_check<R: Rng>(rng: &mut R, j: JSource<'_>, j_g: &[f64], v_g: &[f64], count: usize) -> Llr {
    let (mut g, mut neg) = (0.0, false);
    if let JSource::Population(js) = j {
        let s = j_g[rng.random_range(0..js.len())];
        g += s.abs();
        neg ^= s.is_sign_negative();
    }
    let n = v_g.len();
    for _ in 0..count {
        let s = v_g[rng.random_range(0..n)];
        g += s.abs();
        neg ^= s.is_sign_negative();
    }
    let a = abs_of_g(g);
    if neg && a.is_finite() {
        Llr::new(-a)
    } else {
        Llr::new(a)
    }
}

fn check_update_into(out: &mut [Llr], j: JSource<'_>, v: &[Llr], rho_edge: &CountSampler, seed: u64, labels: &[u64]) {
    let v_g = signed_g(v);
    let j_g = match j {
        JSource::Population(js) => signed_g(js),
        JSource::Infinite => Vec::new(),
    };
    fill_blocks(out, seed, labels, |rng, chunk| {
        for slot in chunk {
            let count = rho_edge.sample(rng);
            *slot = combine_check(rng, j, &j_g, &v_g, count);
        }
    });
}

fn variable_update_into(out: &mut [Llr], h: &[Llr], u: &[Llr], law: &CountSampler, seed: u64, labels: &[u64]) {
    fill_blocks(out, seed, labels, |rng, chunk| {
        for slot in chunk {
            let count = law.sample(rng);
            let mut acc = h[rng.random_range(0..h.len())];
            for _ in 0..count {
                acc = acc + u[rng.random_range(0..u.len())];
            }
            *slot = acc;
        }
    });
}

/// `N` samples of `arctanh(tanh J prod_{i<k} tanh V_i)` with `k ~ rho`
/// (`rho_edge` gives the number `k - 1` of variable inputs as its exponent).
pub fn check_update(j_pop: &LlrPopulation, v_pop: &LlrPopulation, rho_edge: &SparsePoly, n: usize, seed: u64) -> LlrPopulation {
    let mut out = vec![Llr::ZERO; n];
    let j = if j_pop.samples().iter().all(|l| l.is_infinite()) {
        JSource::Infinite
    } else {
        JSource::Population(j_pop.samples())
    };
    check_update_into(&mut out, j, v_pop.samples(), &CountSampler::from_poly(rho_edge), seed, &[tag::CHECK_UPDATE]);
    LlrPopulation::new(out, "check update").expect("n > 0")
}

/// `N` samples of `h + sum_{i<count} U_i`.
pub fn variable_update(h_pop: &LlrPopulation, u_pop: &LlrPopulation, law: &CountLaw, n: usize, seed: u64) -> LlrPopulation {
    let mut out = vec![Llr::ZERO; n];
    variable_update_into(&mut out, h_pop.samples(), u_pop.samples(), &law.sampler(), seed, &[tag::VAR_UPDATE]);
    LlrPopulation::new(out, "variable update").expect("n > 0")
}

/// Initial variable-to-check population.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    Zero,
    Infinity,
    Custom(LlrPopulation),
}

#[derive(Debug, Clone, Serialize)]
pub struct DeConfig {
    /// Population size `N`.
    pub population: usize,
    /// Maximum number of iterations `T`.
    pub max_iterations: usize,
    pub early_stop: bool,
    /// Early stopping fires when consecutive window means of the first four
    /// even tanh moments differ by less than this.
    pub tolerance: f64,
    pub window: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig { population: 100_000, max_iterations: 20_000, early_stop: true, tolerance: 1e-4, window: 100 }
    }
}

impl DeConfig {
    pub fn fixed(population: usize, iterations: usize) -> Self {
        DeConfig { population, max_iterations: iterations, early_stop: false, ..DeConfig::default() }
    }
}

/// Message populations after some number of iterations. `u_pop` is always
/// the check update of `v_pop`, so the pair is admissible.
#[derive(Debug, Clone, Serialize)]
pub struct DeState {
    pub u_pop: LlrPopulation,
    pub v_pop: LlrPopulation,
    pub iterations: usize,
    pub converged: bool,
}

/// Generation-by-generation population dynamics.
pub struct DensityEvolution<'a> {
    channel: &'a ChannelModel,
    family: Family,
    n: usize,
    seed: u64,
    generation: u64,
    rho_edge: CountSampler,
    residual: CountSampler,
    v: Vec<Llr>,
    u: Vec<Llr>,
    scratch: Vec<Llr>,
}

const CHANNEL_H: u64 = 0;
const CHANNEL_J: u64 = 1;

impl<'a> DensityEvolution<'a> {
    pub fn new(channel: &'a ChannelModel, model: &CodeModel, n: usize, init: InitMode, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("population size must be positive".into()));
        }
        let v = match init {
            InitMode::Zero => vec![Llr::ZERO; n],
            InitMode::Infinity => vec![Llr::INFINITY; n],
            InitMode::Custom(pop) => {
                symmetry_test(&pop, 4).into_result()?;
                pop.into_samples()
            }
        };
        let mut de = DensityEvolution {
            channel,
            family: model.family,
            n,
            seed,
            generation: 0,
            rho_edge: CountSampler::from_poly(&model.right.edge_perspective()),
            residual: variable_residual_law(model).sampler(),
            v,
            u: vec![Llr::ZERO; n],
            scratch: vec![Llr::ZERO; n],
        };
        de.refresh_checks();
        Ok(de)
    }

    fn refresh_checks(&mut self) {
        let t = self.generation;
        match self.family {
            Family::Ldpc => {
                check_update_into(&mut self.u, JSource::Infinite, &self.v, &self.rho_edge, self.seed, &[tag::CHECK_UPDATE, t])
            }
            Family::Ldgm => {
                fill_channel_llrs(self.channel, &mut self.scratch, self.seed, &[tag::DE, CHANNEL_J, t]);
                let js = std::mem::take(&mut self.scratch);
                check_update_into(
                    &mut self.u,
                    JSource::Population(&js),
                    &self.v,
                    &self.rho_edge,
                    self.seed,
                    &[tag::CHECK_UPDATE, t],
                );
                self.scratch = js;
            }
        }
    }

    /// One generation: `V <- h + sum U`, then `U <- check(V)`.
    pub fn step(&mut self) {
        self.generation += 1;
        let t = self.generation;
        match self.family {
            Family::Ldpc => fill_channel_llrs(self.channel, &mut self.scratch, self.seed, &[tag::DE, CHANNEL_H, t]),
            Family::Ldgm => self.scratch.iter_mut().for_each(|x| *x = Llr::ZERO),
        }
        variable_update_into(&mut self.v, &self.scratch, &self.u, &self.residual, self.seed, &[tag::VAR_UPDATE, t]);
        self.refresh_checks();
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn v(&self) -> &[Llr] {
        &self.v
    }

    pub fn u(&self) -> &[Llr] {
        &self.u
    }

    pub fn population_size(&self) -> usize {
        self.n
    }

    pub fn state(&self, converged: bool) -> DeState {
        DeState {
            u_pop: LlrPopulation::new(self.u.clone(), format!("U after {} iterations", self.generation)).unwrap(),
            v_pop: LlrPopulation::new(self.v.clone(), format!("V after {} iterations", self.generation)).unwrap(),
            iterations: self.generation as usize,
            converged,
        }
    }

    /// Run until `max_iterations` or, with early stopping, until the moment
    /// window means settle. Returns whether early stopping fired.
    pub fn run(&mut self, cfg: &DeConfig) -> bool {
        let mut monitor = MomentMonitor::new(cfg.window.max(1), cfg.tolerance);
        while (self.generation as usize) < cfg.max_iterations {
            self.step();
            if cfg.early_stop && monitor.push(&self.v) {
                return true;
            }
        }
        false
    }
}

/// Tracks window means of `E tanh^{2k} V`, `k = 1..=4`.
struct MomentMonitor {
    window: usize,
    tolerance: f64,
    acc: [f64; 4],
    filled: usize,
    previous: Option<[f64; 4]>,
}

impl MomentMonitor {
    fn new(window: usize, tolerance: f64) -> Self {
        MomentMonitor { window, tolerance, acc: [0.0; 4], filled: 0, previous: None }
    }

    fn push(&mut self, v: &[Llr]) -> bool {
        let mut m = [0.0; 4];
        for l in v {
            let t2 = l.tanh() * l.tanh();
            let mut p = t2;
            for x in m.iter_mut() {
                *x += p;
                p *= t2;
            }
        }
        for (a, x) in self.acc.iter_mut().zip(m) {
            *a += x / v.len() as f64;
        }
        self.filled += 1;
        if self.filled < self.window {
            return false;
        }
        let mean = self.acc.map(|a| a / self.window as f64);
        self.acc = [0.0; 4];
        self.filled = 0;
        let settled = self
            .previous
            .is_some_and(|p| p.iter().zip(&mean).all(|(a, b)| (a - b).abs() < self.tolerance));
        self.previous = Some(mean);
        settled
    }
}

/// Run density evolution from the given initialization.
pub fn de_iterate(channel: &ChannelModel, model: &CodeModel, cfg: &DeConfig, init: InitMode, seed: u64) -> Result<DeState> {
    let mut de = DensityEvolution::new(channel, model, cfg.population, init, seed)?;
    let converged = de.run(cfg);
    Ok(de.state(converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::sample_llr_population;
    use crate::ensembles::{DegreeDist, DegreePair};
    use crate::trial_entropy::bec_stationary_points;

    fn regular(l: u32, k: u32) -> CodeModel {
        CodeModel::from_pair(&DegreePair::regular(l, k).unwrap(), Family::Ldpc)
    }

    #[test]
    fn infinite_inputs_pass_j_through() {
        let ch = ChannelModel::bsc(0.1).unwrap();
        let j = sample_llr_population(&ch, 5000, 1).unwrap();
        let v = LlrPopulation::constant(Llr::INFINITY, 100, "inf");
        let rho = DegreeDist::regular(6).edge_perspective();
        let u = check_update(&j, &v, &rho, 5000, 2);
        let m = 0.5 * (0.9f64 / 0.1).ln();
        assert!(u.samples().iter().all(|l| (l.value().abs() - m).abs() < 1e-9));
    }

    #[test]
    fn zero_inputs_give_zero() {
        let j = LlrPopulation::constant(Llr::INFINITY, 10, "J");
        let v = LlrPopulation::constant(Llr::ZERO, 10, "V");
        let u = check_update(&j, &v, &DegreeDist::regular(3).edge_perspective(), 1000, 3);
        assert!(u.samples().iter().all(|l| l.is_zero()));
    }

    #[test]
    fn erasure_check_fraction() {
        let eps_j = 0.2;
        let z = 0.3;
        let j = sample_llr_population(&ChannelModel::bec(eps_j).unwrap(), 100_000, 5).unwrap();
        let v = sample_llr_population(&ChannelModel::bec(z).unwrap(), 100_000, 6).unwrap();
        let rho = DegreeDist::regular(4).edge_perspective();
        let u = check_update(&j, &v, &rho, 100_000, 7);
        let want = 1.0 - (1.0 - eps_j) * (1.0 - z).powi(3);
        // the realized input fractions carry their own sampling error
        let se = (want * (1.0 - want) / 1e5).sqrt() * 2.0;
        assert!((u.zero_fraction() - want).abs() < 3.0 * se, "{} vs {want}", u.zero_fraction());
    }

    #[test]
    fn variable_update_identities() {
        let h = sample_llr_population(&ChannelModel::bsc(0.1).unwrap(), 1000, 1).unwrap();
        let zero = LlrPopulation::constant(Llr::ZERO, 10, "U");
        let law = CountLaw::Poly(DegreeDist::regular(3).edge_perspective());
        let v = variable_update(&h, &zero, &law, 1000, 2);
        assert!(v.samples().iter().all(|l| h.samples().contains(l)));
        let inf = LlrPopulation::constant(Llr::INFINITY, 10, "h");
        let v = variable_update(&inf, &zero, &law, 1000, 2);
        assert_eq!(v.infinite_fraction(), 1.0);
    }

    #[test]
    fn variable_erasure_fraction() {
        let eps = 0.45;
        let zh = 0.6;
        let h = sample_llr_population(&ChannelModel::bec(eps).unwrap(), 100_000, 10).unwrap();
        let u = sample_llr_population(&ChannelModel::bec(zh).unwrap(), 100_000, 11).unwrap();
        let law = CountLaw::Poly(DegreeDist::regular(3).edge_perspective());
        let v = variable_update(&h, &u, &law, 100_000, 12);
        let want = eps * zh * zh;
        let se = (want * (1.0 - want) / 1e5).sqrt() * 2.0;
        assert!((v.zero_fraction() - want).abs() < 3.0 * se);
    }

    #[test]
    fn infinity_init_is_fixed_for_standard_ldpc() {
        let ch = ChannelModel::bsc(0.2).unwrap();
        let s = de_iterate(&ch, &regular(3, 6), &DeConfig::fixed(2000, 20), InitMode::Infinity, 1).unwrap();
        assert_eq!(s.v_pop.infinite_fraction(), 1.0);
        assert_eq!(s.u_pop.infinite_fraction(), 1.0);
    }

    #[test]
    fn below_threshold_erasures_vanish() {
        let ch = ChannelModel::bec(0.40).unwrap();
        let s = de_iterate(&ch, &regular(3, 6), &DeConfig::fixed(20_000, 500), InitMode::Zero, 2).unwrap();
        assert!(s.v_pop.zero_fraction() < 0.01);
    }

    #[test]
    fn above_threshold_matches_bad_fixed_point() {
        let ch = ChannelModel::bec(0.45).unwrap();
        let m = regular(3, 6);
        let s = de_iterate(&ch, &m, &DeConfig::fixed(20_000, 500), InitMode::Zero, 3).unwrap();
        let z_bad = bec_stationary_points(0.45, &m).iter().map(|p| p.z).fold(0.0, f64::max);
        assert!((s.v_pop.zero_fraction() - z_bad).abs() < 0.02);
    }

    #[test]
    fn deterministic_given_seed() {
        let ch = ChannelModel::biawgn(0.9).unwrap();
        let a = de_iterate(&ch, &regular(3, 6), &DeConfig::fixed(5000, 5), InitMode::Zero, 9).unwrap();
        let b = de_iterate(&ch, &regular(3, 6), &DeConfig::fixed(5000, 5), InitMode::Zero, 9).unwrap();
        assert_eq!(a.v_pop, b.v_pop);
        assert_eq!(a.u_pop, b.u_pop);
    }

    #[test]
    fn custom_init_must_be_symmetric() {
        let ch = ChannelModel::bsc(0.1).unwrap();
        let bad = LlrPopulation::constant(Llr::new(-1.0), 1000, "bad");
        let r = de_iterate(&ch, &regular(3, 6), &DeConfig::fixed(1000, 1), InitMode::Custom(bad), 1);
        assert!(matches!(r, Err(Error::NonSymmetricInput { .. })));
    }

    #[test]
    fn early_stop_fires_at_fixed_point() {
        let ch = ChannelModel::bsc(0.03).unwrap();
        let cfg = DeConfig { population: 5000, max_iterations: 5000, ..DeConfig::default() };
        let s = de_iterate(&ch, &regular(3, 6), &cfg, InitMode::Zero, 4).unwrap();
        assert!(s.converged);
        assert!(s.iterations < 5000);
    }
}
