//! Trial entropy of admissible message pairs, its closed form on the erasure
//! channel, and the thresholds and bounds built on top of it.

use std::f64::consts::LN_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{
    binary_entropy_inverse, fill_blocks, symmetry_test_at, ChannelFamily, ChannelModel, LlrPopulation,
    SymmetryReport,
};
use crate::density_evolution::{
    bec_bp_threshold, check_update, BecMap, BecState, DeConfig, DensityEvolution, InitMode,
};
use crate::ensembles::{CodeModel, CountSampler, Family};
use crate::error::{Error, Result};
use crate::llr::{BoxPlus, Llr};
use crate::rng::{derive, tag};
use crate::stats::{jackknife_mean, Estimate};

/// Smallest Monte Carlo sample count accepted by [`phi_v_mc`].
pub const MIN_SAMPLES: usize = 1000;

/// How the per-sample information terms are evaluated.
///
/// `Direct` uses `log2(1 + e^{-2x})`; `Symmetrized` replaces it by the binary
/// entropy of `|x|`, which has the same mean on symmetric inputs and a much
/// smaller variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Direct,
    #[default]
    Symmetrized,
}

impl Estimator {
    #[inline]
    fn info(self, x: Llr) -> f64 {
        match self {
            Estimator::Direct => x.neg_log2_p0(),
            Estimator::Symmetrized => x.bit_entropy(),
        }
    }
}

/// Weighted contributions of the three expectations; they add up to `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermBreakdown {
    pub edge: f64,
    pub var: f64,
    pub check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialEntropyReport {
    /// Bits per variable node.
    pub phi: f64,
    #[serde(rename = "stderr")]
    pub std_error: f64,
    pub terms: TermBreakdown,
    #[serde(rename = "M")]
    pub samples: usize,
    /// Symmetry check of the check-side population used in the estimate.
    pub admissible_check: SymmetryReport,
}

impl TrialEntropyReport {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.phi, self.std_error)
    }
}

/// Monte Carlo trial entropy of `(U, V)` where `U` is the check update of
/// `v_pop`.
pub fn phi_v_mc(
    v_pop: &LlrPopulation,
    model: &CodeModel,
    channel: &ChannelModel,
    samples: usize,
    seed: u64,
) -> Result<TrialEntropyReport> {
    phi_v_mc_with(v_pop, model, channel, samples, seed, Estimator::default())
}

pub fn phi_v_mc_with(
    v_pop: &LlrPopulation,
    model: &CodeModel,
    channel: &ChannelModel,
    samples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<TrialEntropyReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::Domain(format!("at least {MIN_SAMPLES} samples are required, got {samples}")));
    }
    symmetry_test_at(v_pop, 4, 6.0).into_result()?;
    let n = v_pop.len();
    let j_pop = match model.family {
        Family::Ldpc => LlrPopulation::constant(Llr::INFINITY, 1, "parity checks"),
        Family::Ldgm => crate::channels::sample_llr_population(channel, n, derive(seed, &[tag::PHI, 0]))?,
    };
    let rho = model.right.edge_perspective();
    let u_pop = check_update(&j_pop, v_pop, &rho, n, derive(seed, &[tag::PHI, 1]));
    let admissible_check = symmetry_test_at(&u_pop, 4, 6.0);
    let mut report = phi_of_pair(u_pop.samples(), v_pop.samples(), model, channel, samples, seed, estimator);
    report.admissible_check = admissible_check;
    Ok(report)
}

/// Trial entropy of an admissible pair given as raw samples. `u` must be
/// distributed as the check update of `v`.
pub(crate) fn phi_of_pair(
    u: &[Llr],
    v: &[Llr],
    model: &CodeModel,
    channel: &ChannelModel,
    samples: usize,
    seed: u64,
    estimator: Estimator,
) -> TrialEntropyReport {
    let left = model.left.node_sampler();
    let right = CountSampler::from_poly(model.right.poly());
    let family = model.family;
    let mut raw = vec![[0.0f64; 3]; samples];
    fill_blocks(&mut raw, seed, &[tag::PHI, 2], |rng, chunk| {
        for slot in chunk {
            *slot = sample_terms(rng, u, v, &left, &right, family, channel, estimator);
        }
    });
    let lp = model.left.mean();
    let ratio = model.check_ratio();
    let combined: Vec<f64> = raw.iter().map(|t| -lp * t[0] + t[1] + ratio * t[2]).collect();
    let est = jackknife_mean(&combined);
    let mean = |i: usize| raw.iter().map(|t| t[i]).sum::<f64>() / samples as f64;
    let terms = TermBreakdown { edge: -lp * mean(0), var: mean(1), check: ratio * mean(2) };
    TrialEntropyReport {
        phi: terms.edge + terms.var + terms.check,
        std_error: est.std_error,
        terms,
        samples,
        admissible_check: SymmetryReport { checks: Vec::new(), threshold_sigmas: 6.0 },
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn sample_terms<R: Rng>(
    rng: &mut R,
    u: &[Llr],
    v: &[Llr],
    left: &CountSampler,
    right: &CountSampler,
    family: Family,
    channel: &ChannelModel,
    est: Estimator,
) -> [f64; 3] {
    let pick = |rng: &mut R, pop: &[Llr]| pop[rng.random_range(0..pop.len())];

    let (a, b) = (pick(rng, u), pick(rng, v));
    let edge = est.info(a + b) - est.info(a) - est.info(b);

    let l = left.sample(rng);
    let h = match family {
        Family::Ldpc => channel.sample_llr(rng),
        Family::Ldgm => Llr::ZERO,
    };
    let mut total = h;
    let mut parts = 0.0;
    for _ in 0..l {
        let x = pick(rng, u);
        total = total + x;
        parts += est.info(x);
    }
    let var = est.info(total) - parts;

    let k = right.sample(rng);
    let mut acc = BoxPlus::default();
    let j = match family {
        Family::Ldpc => Llr::INFINITY,
        Family::Ldgm => channel.sample_llr(rng),
    };
    acc.push(j);
    for _ in 0..k {
        acc.push(pick(rng, v));
    }
    let check = match est {
        Estimator::Direct => acc.ln_even_probability() / LN_2 + j.neg_log2_p0(),
        Estimator::Symmetrized => j.bit_entropy() - acc.finish().bit_entropy(),
    };
    [edge, var, check]
}

fn psi(map: &BecMap, z: f64, eps: f64) -> f64 {
    let model = map.model();
    let zh = map.z_hat(z, eps);
    let lp = model.left.mean();
    let ratio = model.check_ratio();
    let comp = model.right.poly().eval_complement(z);
    let lam = model.left.node_eval(zh);
    match model.family {
        Family::Ldpc => lp * z * (1.0 - zh) - ratio * comp + eps * lam,
        Family::Ldgm => lp * z * (1.0 - zh) - ratio * (1.0 - eps) * comp + lam,
    }
}

/// Closed-form trial entropy on the erasure channel for `V` erased with
/// probability `z` (and infinite otherwise).
pub fn bec_trial_entropy(z: f64, eps: f64, model: &CodeModel) -> f64 {
    psi(&BecMap::new(model), z, eps)
}

/// Solution of `z = f(z)` on the erasure channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub z: f64,
    pub psi: f64,
    /// `f'(z)`.
    pub slope: f64,
    pub stable: bool,
}

const SCAN_STEP: f64 = 1e-5;

/// All fixed points of the erasure recursion on `[0, 1]`, in increasing order.
pub fn bec_stationary_points(eps: f64, model: &CodeModel) -> Vec<StationaryPoint> {
    let map = BecMap::new(model);
    let g = |z: f64| map.f(z, eps) - z;
    let n = (1.0 / SCAN_STEP).round() as usize;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev = (0.0, g(0.0));
    if prev.1 == 0.0 {
        roots.push(0.0);
    }
    for i in 1..=n {
        let z = i as f64 / n as f64;
        let gz = g(z);
        if gz == 0.0 {
            roots.push(z);
        } else if prev.1 != 0.0 && (gz > 0.0) != (prev.1 > 0.0) {
            let (mut lo, mut hi) = (prev.0, z);
            let glo_pos = prev.1 > 0.0;
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) > 0.0) == glo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (z, gz);
    }
    match model.family {
        Family::Ldpc if g(0.0).abs() < 1e-12 && roots.first() != Some(&0.0) => roots.insert(0, 0.0),
        Family::Ldgm if g(1.0).abs() < 1e-12 && roots.last() != Some(&1.0) => roots.push(1.0),
        _ => {}
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
        .into_iter()
        .map(|z| {
            let slope = map.derivative(z, eps);
            StationaryPoint { z, psi: psi(&map, z, eps), slope, stable: slope.abs() < 1.0 }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    AnalyticBec,
    McBisection,
}

/// One evaluation of the bound at a fixed noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub noise: f64,
    /// Value of the bound (the larger of the branches evaluated).
    pub phi: f64,
    pub std_error: f64,
    pub positive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_init: Option<ProbeBranch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infinity_init: Option<ProbeBranch>,
}

/// Trial entropy along one density-evolution branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeBranch {
    pub phi: f64,
    pub std_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub bracket: (f64, f64),
    pub method: ThresholdMethod,
    pub probes: Vec<Probe>,
}

const MAP_TOLERANCE: f64 = 1e-10;
/// Offset from the BP threshold at which the competing branch is first examined.
const BRANCH_OFFSET: f64 = 1e-7;

fn analytic_probe(noise: f64, value: f64) -> Probe {
    Probe { noise, phi: value, std_error: 0.0, positive: value > 1e-12, zero_init: None, infinity_init: None }
}

/// MAP threshold on the erasure channel: the noise at which the fixed point
/// reached from full erasure overtakes the one reached from no erasure (LDPC),
/// or at which the low-erasure branch stops being the global maximum (LDGM).
pub fn bec_map_threshold(model: &CodeModel) -> Result<ThresholdResult> {
    let map = BecMap::new(model);
    let eps_bp = bec_bp_threshold(model);
    let mut probes = Vec::new();
    match model.family {
        Family::Ldpc => {
            let gap = |eps: f64| {
                let bad = map.iterate(1.0, eps).0;
                let good = map.iterate(0.0, eps).0;
                (bad, good, psi(&map, bad, eps) - psi(&map, good, eps))
            };
            let mut lo = eps_bp + BRANCH_OFFSET;
            let mut hi = 1.0;
            if lo >= hi {
                return Err(Error::NoBadBranch);
            }
            let (bad, good, s) = gap(lo);
            if bad - good < 1e-3 {
                return Err(Error::NoBadBranch);
            }
            probes.push(analytic_probe(lo, s));
            if s > 0.0 {
                return Ok(ThresholdResult {
                    threshold: eps_bp,
                    bracket: (eps_bp, lo),
                    method: ThresholdMethod::AnalyticBec,
                    probes,
                });
            }
            while hi - lo > MAP_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                let s = gap(mid).2;
                probes.push(analytic_probe(mid, s));
                if s > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(ThresholdResult {
                threshold: 0.5 * (lo + hi),
                bracket: (lo, hi),
                method: ThresholdMethod::AnalyticBec,
                probes,
            })
        }
        Family::Ldgm => {
            if eps_bp <= BRANCH_OFFSET {
                return Err(Error::NoBadBranch);
            }
            // positive while the low-erasure branch dominates the trivial one at z = 1
            let gap = |eps: f64| {
                let good = map.iterate(0.0, eps).0;
                psi(&map, good, eps) - psi(&map, 1.0, eps)
            };
            let (mut lo, mut hi) = (0.0, eps_bp - BRANCH_OFFSET);
            let s_hi = gap(hi);
            probes.push(analytic_probe(hi, -s_hi));
            if s_hi > 0.0 {
                return Ok(ThresholdResult {
                    threshold: eps_bp,
                    bracket: (hi, eps_bp),
                    method: ThresholdMethod::AnalyticBec,
                    probes,
                });
            }
            while hi - lo > MAP_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                let s = gap(mid);
                probes.push(analytic_probe(mid, -s));
                if s > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(ThresholdResult {
                threshold: 0.5 * (lo + hi),
                bracket: (lo, hi),
                method: ThresholdMethod::AnalyticBec,
                probes,
            })
        }
    }
}

/// BP and MAP thresholds on the erasure channel. When the transition is
/// continuous there is no competing branch and the two coincide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BecThresholds {
    pub eps_bp: f64,
    pub eps_map: f64,
    pub continuous: bool,
    pub map: Option<ThresholdResult>,
}

pub fn bec_thresholds(model: &CodeModel) -> Result<BecThresholds> {
    let eps_bp = bec_bp_threshold(model);
    match bec_map_threshold(model) {
        Ok(r) => Ok(BecThresholds { eps_bp, eps_map: r.threshold, continuous: false, map: Some(r) }),
        Err(Error::NoBadBranch) => Ok(BecThresholds { eps_bp, eps_map: eps_bp, continuous: true, map: None }),
        Err(e) => Err(e),
    }
}

/// Settings for the Monte Carlo threshold search.
#[derive(Debug, Clone, Serialize)]
pub struct MapBoundConfig {
    /// Population size and equilibration schedule.
    pub de: DeConfig,
    /// Generations averaged after equilibration.
    pub averaging: usize,
    /// Trial-entropy samples per averaged generation.
    pub samples: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub tolerance: f64,
    /// Noise interval to search; defaults to the channel domain capped at the
    /// Shannon limit of the design rate.
    pub bracket: Option<(f64, f64)>,
    /// A probe is positive when the bound exceeds this many standard errors.
    pub sigmas: f64,
    pub estimator: Estimator,
    pub seed: u64,
}

impl Default for MapBoundConfig {
    fn default() -> Self {
        MapBoundConfig {
            de: DeConfig { max_iterations: 500, ..DeConfig::default() },
            averaging: 200,
            samples: 20_000,
            tolerance: 2e-4,
            bracket: None,
            sigmas: 3.0,
            estimator: Estimator::default(),
            seed: 0,
        }
    }
}

/// Default search interval for a channel family and ensemble.
pub fn default_bracket(family: ChannelFamily, model: &CodeModel) -> Result<(f64, f64)> {
    let (lo, hi) = family.domain();
    let rate = model.design_rate();
    if rate > 0.0 && rate < 1.0 {
        Ok((lo, family.shannon_limit(rate)?.min(hi)))
    } else {
        Ok((lo, hi))
    }
}

/// Whether the all-infinite initialization is a fixed point with zero trial entropy.
fn infinity_branch_is_trivial(model: &CodeModel) -> bool {
    model.family == Family::Ldpc && model.left.min_degree() >= 1
}

fn run_branch(
    channel: &ChannelModel,
    model: &CodeModel,
    cfg: &MapBoundConfig,
    init: InitMode,
    seed: u64,
) -> Result<ProbeBranch> {
    let mut de = DensityEvolution::new(channel, model, cfg.de.population, init, derive(seed, &[0]))?;
    let converged = de.run(&cfg.de);
    let generations = cfg.averaging.max(1);
    let mut values = Vec::with_capacity(generations);
    for g in 0..generations {
        if g > 0 {
            de.step();
        }
        let r = phi_of_pair(de.u(), de.v(), model, channel, cfg.samples, derive(seed, &[1, g as u64]), cfg.estimator);
        values.push(r.phi);
    }
    let est = jackknife_mean(&values);
    Ok(ProbeBranch { phi: est.mean, std_error: est.std_error, iterations: de.generation() as usize, converged })
}

/// Evaluate the bound at one noise level: density evolution from both
/// canonical initializations followed by the trial entropy of the result.
pub fn probe_bound(channel: &ChannelModel, model: &CodeModel, cfg: &MapBoundConfig) -> Result<Probe> {
    let noise = channel_noise(channel);
    let seed = derive(cfg.seed, &[tag::PROBE, noise.to_bits()]);
    let zero = run_branch(channel, model, cfg, InitMode::Zero, derive(seed, &[0]))?;
    let inf = if infinity_branch_is_trivial(model) {
        ProbeBranch { phi: 0.0, std_error: 0.0, iterations: 0, converged: true }
    } else {
        run_branch(channel, model, cfg, InitMode::Infinity, derive(seed, &[1]))?
    };
    let best = if zero.phi >= inf.phi { zero } else { inf };
    Ok(Probe {
        noise,
        phi: best.phi,
        std_error: best.std_error,
        positive: best.phi > cfg.sigmas * best.std_error,
        zero_init: Some(zero),
        infinity_init: Some(inf),
    })
}

fn channel_noise(channel: &ChannelModel) -> f64 {
    match channel {
        ChannelModel::Bec { epsilon } => *epsilon,
        ChannelModel::Bsc { p } => *p,
        ChannelModel::Biawgn { sigma } => *sigma,
        ChannelModel::Table(_) => f64::NAN,
    }
}

/// Monte Carlo MAP-bound threshold: the smallest noise level at which the
/// bound is positive, located by bisection.
pub fn map_bound_general(family: ChannelFamily, model: &CodeModel, cfg: &MapBoundConfig) -> Result<ThresholdResult> {
    map_bound_resumable(family, model, cfg, &[], |_| Ok(()))
}

/// As [`map_bound_general`], reusing `known` probes (matched by exact noise
/// value) and reporting every new probe to `on_probe` as soon as it finishes.
pub fn map_bound_resumable<F>(
    family: ChannelFamily,
    model: &CodeModel,
    cfg: &MapBoundConfig,
    known: &[Probe],
    mut on_probe: F,
) -> Result<ThresholdResult>
where
    F: FnMut(&Probe) -> Result<()>,
{
    let (mut lo, mut hi) = match cfg.bracket {
        Some(b) => b,
        None => default_bracket(family, model)?,
    };
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty search bracket [{lo}, {hi}]")));
    }
    let mut probes = Vec::new();
    while hi - lo > cfg.tolerance {
        let mid = 0.5 * (lo + hi);
        let probe = match known.iter().find(|p| p.noise == mid) {
            Some(p) => p.clone(),
            None => {
                let p = probe_bound(&family.at(mid)?, model, cfg)?;
                on_probe(&p)?;
                p
            }
        };
        if probe.positive {
            hi = mid;
        } else {
            lo = mid;
        }
        probes.push(probe);
    }
    Ok(ThresholdResult {
        threshold: 0.5 * (lo + hi),
        bracket: (lo, hi),
        method: ThresholdMethod::McBisection,
        probes,
    })
}

/// Two-point-mass bound for a general channel: the erasure closed form with
/// the erasure probability replaced by `1 - C`.
pub fn simple_ansatz_bound(model: &CodeModel, channel: &ChannelModel) -> impl Fn(f64) -> f64 {
    let map = BecMap::new(model);
    let eps = 1.0 - channel.capacity();
    move |z| psi(&map, z, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanoBounds {
    /// Lower bound on the bit error rate.
    pub bit_error_lower: f64,
    /// Asymptotic block-error coefficient `h / rate`.
    pub block_error_coefficient: f64,
}

/// Error-rate lower bounds implied by a conditional-entropy lower bound `h`
/// (bits per bit) for a code of rate `rate`.
pub fn fano_bounds(h: f64, rate: f64) -> Result<FanoBounds> {
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {rate}")));
    }
    let h = h.clamp(0.0, 1.0);
    Ok(FanoBounds { bit_error_lower: binary_entropy_inverse(h)?, block_error_coefficient: h / rate })
}

/// Conjectured bit error rate at an erasure fixed point: the bit is lost when
/// its own observation and every incoming check message are erased, and a lost
/// bit is guessed correctly half of the time.
pub fn conjectured_pb_bec(state: BecState, eps: f64, model: &CodeModel) -> f64 {
    let lost = model.left.node_eval(state.z_hat);
    match model.family {
        Family::Ldpc => 0.5 * eps * lost,
        Family::Ldgm => 0.5 * lost,
    }
}

/// Conjectured bit error rate from a density-evolution state: the weight of
/// negative values (ties counting one half) of `h + sum_{i<l} U_i` with `l`
/// drawn from the node degree law.
pub fn conjectured_pb(u_pop: &LlrPopulation, channel: &ChannelModel, model: &CodeModel, samples: usize, seed: u64) -> Estimate {
    let left = model.left.node_sampler();
    let u = u_pop.samples();
    let mut out = vec![0.0f64; samples.max(1)];
    fill_blocks(&mut out, seed, &[tag::POSTERIOR], |rng, chunk| {
        for slot in chunk {
            let mut total = match model.family {
                Family::Ldpc => channel.sample_llr(rng),
                Family::Ldgm => Llr::ZERO,
            };
            for _ in 0..left.sample(rng) {
                total = total + u[rng.random_range(0..u.len())];
            }
            *slot = if total.value() < 0.0 {
                1.0
            } else if total.is_zero() {
                0.5
            } else {
                0.0
            };
        }
    });
    jackknife_mean(&out)
}
