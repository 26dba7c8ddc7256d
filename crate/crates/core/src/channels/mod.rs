//! Binary-input output-symmetric channels and LLR populations.
//!
//! Conventions: input 0 is sent, LLRs are `1/2 ln Q(y|0)/Q(y|1)` in nats,
//! and the Gaussian channel maps bit `x` to `1 - 2x` with noise variance
//! `sigma^2`, so its LLR is `y / sigma^2`.

mod population;
mod quadrature;

use std::f64::consts::{LN_2, PI};
use std::path::Path;

use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use population::{symmetry_test, symmetry_test_at, LlrPopulation, MomentCheck, SymmetryReport};
pub(crate) use population::fill_blocks;

use crate::error::{Error, Result};
use crate::info::h2;
use crate::llr::{softplus, Llr};
use crate::rng::tag;

pub use crate::info::{binary_entropy, binary_entropy_inverse};

/// One row of a discrete channel table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub y: serde_json::Value,
    pub q0: f64,
    pub q1: f64,
}

/// Discrete BIOS channel given by its transition table.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteTable {
    rows: Vec<TableRow>,
    #[serde(skip)]
    alias: Option<WeightedAliasIndex<f64>>,
}

impl DiscreteTable {
    pub fn new(rows: Vec<TableRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidChannel("empty channel table".into()));
        }
        for r in &rows {
            if !(r.q0 >= 0.0 && r.q1 >= 0.0 && r.q0.is_finite() && r.q1.is_finite()) {
                return Err(Error::InvalidChannel(format!("row {} has invalid probabilities", r.y)));
            }
        }
        let s0: f64 = rows.iter().map(|r| r.q0).sum();
        let s1: f64 = rows.iter().map(|r| r.q1).sum();
        if (s0 - 1.0).abs() > 1e-9 || (s1 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidChannel(format!("rows sum to {s0} and {s1}, not 1")));
        }
        // output involution: each row (a, b) must be matched by a row (b, a)
        let mut used = vec![false; rows.len()];
        for i in 0..rows.len() {
            if used[i] {
                continue;
            }
            let (a, b) = (rows[i].q0, rows[i].q1);
            if (a - b).abs() <= 1e-12 {
                used[i] = true;
                continue;
            }
            let partner = (0..rows.len()).find(|&j| {
                j != i && !used[j] && (rows[j].q0 - b).abs() <= 1e-12 && (rows[j].q1 - a).abs() <= 1e-12
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => {
                    return Err(Error::InvalidChannel(format!(
                        "table is not output-symmetric: row {} has no mirror",
                        rows[i].y
                    )))
                }
            }
        }
        let alias = WeightedAliasIndex::new(rows.iter().map(|r| r.q0).collect()).ok();
        Ok(DiscreteTable { rows, alias })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let rows: Vec<TableRow> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        DiscreteTable::new(rows)
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }
}

impl PartialEq for DiscreteTable {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ChannelModel {
    Bec { epsilon: f64 },
    Bsc { p: f64 },
    Biawgn { sigma: f64 },
    Table(DiscreteTable),
}

/// A channel output symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output {
    Bit(u8),
    Erasure,
    Real(f64),
    Row(usize),
}

/// LLR of a received symbol together with `log2 Q(y|0)` (a density for the
/// Gaussian channel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub llr: Llr,
    pub log2_q0: f64,
}

/// Channel families indexed by a scalar noise parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    Bec,
    Bsc,
    Biawgn,
}

impl ChannelFamily {
    pub fn at(self, param: f64) -> Result<ChannelModel> {
        match self {
            ChannelFamily::Bec => ChannelModel::bec(param),
            ChannelFamily::Bsc => ChannelModel::bsc(param),
            ChannelFamily::Biawgn => ChannelModel::biawgn(param),
        }
    }

    /// Range of meaningful noise values.
    pub fn domain(self) -> (f64, f64) {
        match self {
            ChannelFamily::Bec => (0.0, 1.0),
            ChannelFamily::Bsc => (0.0, 0.5),
            ChannelFamily::Biawgn => (1e-3, 20.0),
        }
    }

    /// Noise level at which capacity equals `c`.
    pub fn shannon_limit(self, c: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.domain();
        if self == ChannelFamily::Bsc {
            hi = 0.5 - 1e-15;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.at(mid)?.capacity() > c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bec" => Ok(ChannelFamily::Bec),
            "bsc" => Ok(ChannelFamily::Bsc),
            "biawgn" => Ok(ChannelFamily::Biawgn),
            _ => Err(Error::Parse { column: 1, message: format!("unknown channel family '{s}'") }),
        }
    }
}

impl ChannelModel {
    pub fn bec(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidChannel(format!("erasure probability {epsilon} not in [0,1]")));
        }
        Ok(ChannelModel::Bec { epsilon })
    }

    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::InvalidChannel(format!("crossover probability {p} not in [0,1/2)")));
        }
        Ok(ChannelModel::Bsc { p })
    }

    pub fn biawgn(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidChannel(format!("noise level {sigma} must be positive")));
        }
        Ok(ChannelModel::Biawgn { sigma })
    }

    /// Parse `bec:0.45`, `bsc:0.11`, `biawgn:0.8` or `table:<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| Error::Parse {
            column: s.len() + 1,
            message: format!("channel '{s}' must look like kind:parameter"),
        })?;
        let col = kind.len() + 2;
        if kind.eq_ignore_ascii_case("table") {
            return Ok(ChannelModel::Table(DiscreteTable::load(Path::new(arg))?));
        }
        let family: ChannelFamily = kind.parse()?;
        let v: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Parse { column: col, message: format!("bad channel parameter '{arg}'") })?;
        family.at(v)
    }

    pub fn family(&self) -> Option<ChannelFamily> {
        match self {
            ChannelModel::Bec { .. } => Some(ChannelFamily::Bec),
            ChannelModel::Bsc { .. } => Some(ChannelFamily::Bsc),
            ChannelModel::Biawgn { .. } => Some(ChannelFamily::Biawgn),
            ChannelModel::Table(_) => None,
        }
    }

    pub fn is_erasure(&self) -> bool {
        matches!(self, ChannelModel::Bec { .. })
    }

    pub fn label(&self) -> String {
        match self {
            ChannelModel::Bec { epsilon } => format!("bec:{epsilon}"),
            ChannelModel::Bsc { p } => format!("bsc:{p}"),
            ChannelModel::Biawgn { sigma } => format!("biawgn:{sigma}"),
            ChannelModel::Table(t) => format!("table[{} rows]", t.rows.len()),
        }
    }

    /// Probabilities `(Q(y|0), Q(y|1))` of a discrete output; densities for `Real`.
    fn likelihoods(&self, y: Output) -> Result<(f64, f64)> {
        Ok(match (self, y) {
            (ChannelModel::Bec { epsilon }, Output::Erasure) => (*epsilon, *epsilon),
            (ChannelModel::Bec { epsilon }, Output::Bit(0)) => (1.0 - epsilon, 0.0),
            (ChannelModel::Bec { epsilon }, Output::Bit(1)) => (0.0, 1.0 - epsilon),
            (ChannelModel::Bsc { p }, Output::Bit(0)) => (1.0 - p, *p),
            (ChannelModel::Bsc { p }, Output::Bit(1)) => (*p, 1.0 - p),
            (ChannelModel::Biawgn { sigma }, Output::Real(v)) => {
                let s2 = sigma * sigma;
                let norm = (2.0 * PI * s2).sqrt();
                ((-(v - 1.0).powi(2) / (2.0 * s2)).exp() / norm, (-(v + 1.0).powi(2) / (2.0 * s2)).exp() / norm)
            }
            (ChannelModel::Table(t), Output::Row(i)) if i < t.rows.len() => (t.rows[i].q0, t.rows[i].q1),
            _ => return Err(Error::InvalidChannel(format!("output {y:?} does not belong to {}", self.label()))),
        })
    }

    /// `1/2 ln Q(y|0)/Q(y|1)`; `+inf` when `Q(y|1) = 0`.
    pub fn llr_of_output(&self, y: Output) -> Result<Llr> {
        if let (ChannelModel::Biawgn { sigma }, Output::Real(v)) = (self, y) {
            return Ok(Llr::new(v / (sigma * sigma)));
        }
        let (q0, q1) = self.likelihoods(y)?;
        if q0 == 0.0 {
            return Err(Error::ImpossibleOutput);
        }
        if q1 == 0.0 {
            return Ok(Llr::INFINITY);
        }
        Ok(Llr::new(0.5 * (q0 / q1).ln()))
    }

    /// Draw one output conditional on input 0.
    pub fn sample_output<R: Rng + ?Sized>(&self, rng: &mut R) -> Output {
        match self {
            ChannelModel::Bec { epsilon } => {
                if rng.random::<f64>() < *epsilon {
                    Output::Erasure
                } else {
                    Output::Bit(0)
                }
            }
            ChannelModel::Bsc { p } => Output::Bit((rng.random::<f64>() < *p) as u8),
            ChannelModel::Biawgn { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                Output::Real(1.0 + sigma * z)
            }
            ChannelModel::Table(t) => Output::Row(t.alias.as_ref().expect("q0 has mass").sample(rng)),
        }
    }

    /// One LLR drawn conditional on input 0.
    #[inline]
    pub fn sample_llr<R: Rng + ?Sized>(&self, rng: &mut R) -> Llr {
        match self {
            ChannelModel::Bec { epsilon } => {
                if rng.random::<f64>() < *epsilon {
                    Llr::ZERO
                } else {
                    Llr::INFINITY
                }
            }
            ChannelModel::Bsc { p } => {
                let mag = if *p == 0.0 { f64::INFINITY } else { 0.5 * ((1.0 - p) / p).ln() };
                if rng.random::<f64>() < *p {
                    Llr::new(-mag)
                } else {
                    Llr::new(mag)
                }
            }
            _ => self.llr_of_output(self.sample_output(rng)).expect("sampled outputs are possible"),
        }
    }

    /// One output drawn conditional on input 0, as LLR plus `log2 Q(y|0)`.
    pub fn sample_observation<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        let y = self.sample_output(rng);
        let llr = self.llr_of_output(y).expect("sampled outputs are possible");
        let log2_q0 = match (self, y) {
            (ChannelModel::Biawgn { sigma }, Output::Real(v)) => {
                let s2 = sigma * sigma;
                (-(v - 1.0).powi(2) / (2.0 * s2) - 0.5 * (2.0 * PI * s2).ln()) / LN_2
            }
            _ => self.likelihoods(y).expect("valid output").0.log2(),
        };
        Observation { llr, log2_q0 }
    }

    /// `sum_y Q(y|0) log2 Q(y|0)` (negative differential entropy for the Gaussian channel).
    pub fn mean_log2_q0(&self) -> f64 {
        let xlogx = |p: f64| if p > 0.0 { p * p.log2() } else { 0.0 };
        match self {
            ChannelModel::Bec { epsilon } => xlogx(*epsilon) + xlogx(1.0 - epsilon),
            ChannelModel::Bsc { p } => xlogx(*p) + xlogx(1.0 - p),
            ChannelModel::Biawgn { sigma } => -0.5 * (2.0 * PI * std::f64::consts::E * sigma * sigma).log2(),
            ChannelModel::Table(t) => t.rows.iter().map(|r| xlogx(r.q0)).sum(),
        }
    }

    /// Capacity in bits, `1 - E log2[(Q(y|0) + Q(y|1)) / Q(y|0)]`.
    pub fn capacity(&self) -> f64 {
        match self {
            ChannelModel::Bec { epsilon } => 1.0 - epsilon,
            ChannelModel::Bsc { p } => 1.0 - h2(*p),
            ChannelModel::Biawgn { sigma } => {
                let s2 = sigma * sigma;
                let f = |y: f64| softplus(-2.0 * y / s2) / LN_2;
                1.0 - quadrature::gauss_hermite_expectation(1.0, *sigma, f)
            }
            ChannelModel::Table(t) => {
                1.0 - t
                    .rows
                    .iter()
                    .filter(|r| r.q0 > 0.0)
                    .map(|r| r.q0 * ((r.q0 + r.q1) / r.q0).log2())
                    .sum::<f64>()
            }
        }
    }

    /// `1 - C`, the conditional entropy of the input given one output.
    pub fn conditional_entropy(&self) -> f64 {
        1.0 - self.capacity()
    }
}

/// Capacity of a channel in bits.
pub fn capacity(channel: &ChannelModel) -> f64 {
    channel.capacity()
}

pub fn llr_of_output(channel: &ChannelModel, y: Output) -> Result<Llr> {
    channel.llr_of_output(y)
}

/// `n` i.i.d. LLRs of the channel output given input 0.
pub fn sample_llr_population(channel: &ChannelModel, n: usize, seed: u64) -> Result<LlrPopulation> {
    let mut out = vec![Llr::ZERO; n];
    fill_channel_llrs(channel, &mut out, seed, &[tag::CHANNEL]);
    LlrPopulation::new(out, channel.label())
}

pub(crate) fn fill_channel_llrs(channel: &ChannelModel, out: &mut [Llr], seed: u64, labels: &[u64]) {
    fill_blocks(out, seed, labels, |rng, chunk| {
        for slot in chunk {
            *slot = channel.sample_llr(rng);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llr_definitions() {
        let bec = ChannelModel::bec(0.3).unwrap();
        assert_eq!(bec.llr_of_output(Output::Erasure).unwrap(), Llr::ZERO);
        assert!(bec.llr_of_output(Output::Bit(0)).unwrap().is_infinite());
        assert_eq!(bec.llr_of_output(Output::Bit(1)), Err(Error::ImpossibleOutput));

        let bsc = ChannelModel::bsc(0.1).unwrap();
        let m = 0.5 * (0.9f64 / 0.1).ln();
        assert!((bsc.llr_of_output(Output::Bit(0)).unwrap().value() - m).abs() < 1e-15);
        assert!((bsc.llr_of_output(Output::Bit(1)).unwrap().value() + m).abs() < 1e-15);

        let g = ChannelModel::biawgn(0.8).unwrap();
        assert!((g.llr_of_output(Output::Real(0.5)).unwrap().value() - 0.5 / 0.64).abs() < 1e-15);
    }

    #[test]
    fn gaussian_llr_matches_density_ratio() {
        let g = ChannelModel::biawgn(0.7).unwrap();
        let (q0, q1) = g.likelihoods(Output::Real(0.3)).unwrap();
        let direct = 0.5 * (q0 / q1).ln();
        assert!((g.llr_of_output(Output::Real(0.3)).unwrap().value() - direct).abs() < 1e-12);
    }

    #[test]
    fn capacity_values() {
        assert!((ChannelModel::bec(0.3).unwrap().capacity() - 0.7).abs() < 1e-15);
        assert!((ChannelModel::bsc(0.2145018).unwrap().capacity() - 0.25).abs() < 1e-6);
        assert!((ChannelModel::bsc(0.1100279).unwrap().capacity() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn gaussian_capacity_against_simpson() {
        for sigma in [0.4, 0.8, 1.0, 2.0] {
            let ch = ChannelModel::biawgn(sigma).unwrap();
            let s2: f64 = sigma * sigma;
            let f = |y: f64| {
                let dens = (-(y - 1.0).powi(2) / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt();
                dens * softplus(-2.0 * y / s2) / LN_2
            };
            let oracle = 1.0 - quadrature::adaptive_simpson(&f, 1.0 - 14.0 * sigma, 1.0 + 14.0 * sigma, 1e-13);
            assert!((ch.capacity() - oracle).abs() < 1e-9, "sigma {sigma}: {} vs {oracle}", ch.capacity());
        }
    }

    #[test]
    fn capacity_is_monotone() {
        let mut last = 2.0;
        for i in 1..50 {
            let c = ChannelModel::bsc(i as f64 / 100.0).unwrap().capacity();
            assert!(c < last);
            last = c;
        }
        let mut last = 2.0;
        for i in 1..40 {
            let c = ChannelModel::biawgn(i as f64 / 10.0).unwrap().capacity();
            assert!(c < last);
            last = c;
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(ChannelModel::parse("bec:0.45").unwrap(), ChannelModel::Bec { epsilon: 0.45 });
        assert_eq!(ChannelModel::parse("BSC:0.11").unwrap(), ChannelModel::Bsc { p: 0.11 });
        assert!(ChannelModel::parse("bsc:0.7").is_err());
        assert!(matches!(ChannelModel::parse("bsc:x"), Err(Error::Parse { column: 5, .. })));
        assert!(ChannelModel::parse("foo").is_err());
    }

    #[test]
    fn table_validation() {
        let row = |y: i64, q0: f64, q1: f64| TableRow { y: y.into(), q0, q1 };
        let t = DiscreteTable::new(vec![row(0, 0.7, 0.1), row(1, 0.2, 0.2), row(2, 0.1, 0.7)]).unwrap();
        let ch = ChannelModel::Table(t);
        assert!(ch.llr_of_output(Output::Row(0)).unwrap().value() > 0.0);
        assert_eq!(ch.llr_of_output(Output::Row(1)).unwrap(), Llr::ZERO);
        assert!(DiscreteTable::new(vec![row(0, 0.7, 0.2), row(1, 0.3, 0.8)]).is_err());
        assert!(DiscreteTable::new(vec![row(0, 0.7, 0.3)]).is_err());
        // a BSC written as a table has the BSC capacity
        let t = DiscreteTable::new(vec![row(0, 0.89, 0.11), row(1, 0.11, 0.89)]).unwrap();
        let c = ChannelModel::Table(t).capacity();
        assert!((c - ChannelModel::bsc(0.11).unwrap().capacity()).abs() < 1e-12);
    }

    #[test]
    fn bec_population_statistics() {
        let pop = sample_llr_population(&ChannelModel::bec(0.5).unwrap(), 100_000, 4).unwrap();
        let z = pop.zero_fraction();
        assert!((z - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt());
        assert!((pop.infinite_fraction() + z - 1.0).abs() < 1e-15);
        let pop = sample_llr_population(&ChannelModel::bsc(0.0).unwrap(), 1000, 4).unwrap();
        assert_eq!(pop.infinite_fraction(), 1.0);
    }

    #[test]
    fn bsc_tanh_mean() {
        let p = 0.11;
        let pop = sample_llr_population(&ChannelModel::bsc(p).unwrap(), 100_000, 8).unwrap();
        let t: Vec<f64> = pop.samples().iter().map(|l| l.tanh()).collect();
        let m = t.iter().sum::<f64>() / t.len() as f64;
        let sd = (t.iter().map(|x| (x - m).powi(2)).sum::<f64>() / t.len() as f64).sqrt();
        assert!((m - (1.0 - 2.0 * p) * (1.0 - 2.0 * p)).abs() < 3.0 * sd / (t.len() as f64).sqrt());
    }

    #[test]
    fn population_is_block_deterministic() {
        let ch = ChannelModel::biawgn(0.9).unwrap();
        let a = sample_llr_population(&ch, 10_000, 5).unwrap();
        let b = sample_llr_population(&ch, 10_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn built_in_channels_are_symmetric() {
        for ch in [
            ChannelModel::bec(0.4).unwrap(),
            ChannelModel::bsc(0.11).unwrap(),
            ChannelModel::biawgn(1.0).unwrap(),
        ] {
            let pop = sample_llr_population(&ch, 100_000, 17).unwrap();
            let r = symmetry_test(&pop, 6);
            assert!(r.pass(), "{}: {:?}", ch.label(), r.worst());
        }
    }

    #[test]
    fn log_identity_series() {
        // E ln(1 + tanh X) = sum_k (1/(2k-1) - 1/(2k)) E tanh^{2k} X for symmetric X
        for ch in [ChannelModel::bsc(0.11).unwrap(), ChannelModel::biawgn(1.0).unwrap()] {
            let pop = sample_llr_population(&ch, 100_000, 23).unwrap();
            let vals: Vec<f64> = pop.samples().iter().map(|l| (1.0 + l.tanh()).ln()).collect();
            let est = crate::stats::mean_and_se(&vals);
            let moments = pop.even_moments(50);
            let series: f64 = moments
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let k = (i + 1) as f64;
                    (1.0 / (2.0 * k - 1.0) - 1.0 / (2.0 * k)) * m
                })
                .sum();
            // tail bound: terms decay like m_k / (4k^2) with m_k <= E tanh^2
            let tail = moments[49] / (4.0 * 50.0);
            assert!((est.mean - series).abs() < tail + 4.0 * est.std_error, "{}", ch.label());
        }
    }
}
