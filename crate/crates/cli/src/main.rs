mod commands;
mod output;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mapbound::ensembles::{CodeModel, DegreeDist, DegreePair, EnsembleSpec, Family};
use mapbound::ensembles::parse_terms;

use crate::output::CliError;

#[derive(Parser, Debug)]
#[command(name = "mapbound", version, about = "Trial-entropy MAP bounds for sparse-graph code ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BP and MAP thresholds on the erasure channel (closed form).
    BecAnalytic(BecAnalyticArgs),
    /// Monte Carlo bound: threshold search over a channel family, or one noise level.
    MapBound(MapBoundArgs),
    /// Sampled density evolution at one channel.
    DeRun(DeRunArgs),
    /// Draw a Tanner graph from an ensemble.
    SampleGraph(SampleGraphArgs),
    /// Compare exact conditional entropies of sampled graphs with the bound.
    Verify(VerifyArgs),
    /// Recompute the reference threshold tables.
    Table(TableArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Seed for every random draw; drawn from the OS when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for result files and checkpoints.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Require --seed and omit the timestamp, so reruns are byte-identical.
    #[arg(long, global = true)]
    pub reproducible: bool,
    /// Emit CSV instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    /// Variable-node degree distribution, e.g. `1@3` or `0.5@2,0.5@4`.
    #[arg(long = "L")]
    pub left: Option<String>,
    /// Check-node degree distribution, e.g. `1@6`.
    #[arg(long = "R")]
    pub right: Option<String>,
    /// Poisson left degrees with this mean (replaces --L).
    #[arg(long)]
    pub poisson_gamma: Option<f64>,
    /// Multi-Poisson construction with this round density (needs --L).
    #[arg(long)]
    pub multi_poisson_gamma: Option<f64>,
    #[arg(long, default_value = "ldpc")]
    pub family: Family,
}

impl EnsembleArgs {
    fn right(&self) -> Result<DegreeDist, CliError> {
        let r = self.right.as_deref().ok_or_else(|| CliError::Usage("--R is required".into()))?;
        Ok(parse_terms(r, 0)?)
    }

    fn pair(&self) -> Result<DegreePair, CliError> {
        let l = self.left.as_deref().ok_or_else(|| CliError::Usage("--L is required".into()))?;
        Ok(DegreePair::new(parse_terms(l, 0)?, self.right()?)?)
    }

    pub fn spec(&self, n: usize) -> Result<EnsembleSpec, CliError> {
        match (self.poisson_gamma, self.multi_poisson_gamma) {
            (Some(_), Some(_)) => Err(CliError::Usage("--poisson-gamma and --multi-poisson-gamma are exclusive".into())),
            (Some(g), None) => {
                if self.left.is_some() {
                    return Err(CliError::Usage("--L cannot be combined with --poisson-gamma".into()));
                }
                Ok(EnsembleSpec::poisson(n, g, self.right()?, self.family)?)
            }
            (None, Some(g)) => Ok(EnsembleSpec::multi_poisson(n, g, self.pair()?, self.family)?),
            (None, None) => Ok(EnsembleSpec::standard(n, self.pair()?, self.family)?),
        }
    }

    /// Large-n description; block-length integrality is not required.
    pub fn model(&self) -> Result<CodeModel, CliError> {
        match (self.poisson_gamma, self.multi_poisson_gamma) {
            (None, None) => Ok(CodeModel::from_pair(&self.pair()?, self.family)),
            _ => Ok(self.spec(0)?.code_model()?),
        }
    }

    pub fn describe(&self) -> String {
        let mut parts = vec![format!("{:?}", self.family).to_lowercase()];
        if let Some(g) = self.poisson_gamma {
            parts.push(format!("poisson({g})"));
        }
        if let Some(g) = self.multi_poisson_gamma {
            parts.push(format!("multi-poisson({g})"));
        }
        if let Some(l) = &self.left {
            parts.push(format!("L={l}"));
        }
        if let Some(r) = &self.right {
            parts.push(format!("R={r}"));
        }
        parts.join(" ")
    }
}

#[derive(Args, Debug, Clone)]
pub struct BecAnalyticArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Fail (exit 1) when the transition is continuous and no MAP branch exists.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    /// Population size.
    #[arg(long = "N", default_value_t = 100_000)]
    pub population: usize,
    /// Maximum equilibration iterations.
    #[arg(long = "T", default_value_t = 500)]
    pub iterations: usize,
    /// Trial-entropy samples per averaged generation.
    #[arg(long = "M", default_value_t = 20_000)]
    pub trial_samples: usize,
    /// Generations averaged after equilibration.
    #[arg(long, default_value_t = 200)]
    pub averaging: usize,
    /// Run all T iterations instead of stopping once the moments settle.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Standard errors required for a positive bound.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Symmetrized)]
    pub estimator: EstimatorArg,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum EstimatorArg {
    Direct,
    Symmetrized,
}

#[derive(Args, Debug, Clone)]
pub struct MapBoundArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Channel family (`bsc`) for a threshold search, or `family:noise` for one point.
    #[arg(long)]
    pub channel: String,
    #[command(flatten)]
    pub mc: McArgs,
    /// Only report the trial entropy at the fixed point reached from zero messages.
    #[arg(long)]
    pub phi_only: bool,
    /// Bisection stops when the bracket is narrower than this.
    #[arg(long, default_value_t = 2e-4)]
    pub tol: f64,
    /// Search interval `lo,hi`.
    #[arg(long, value_parser = parse_bracket)]
    pub bracket: Option<(f64, f64)>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum InitArg {
    Zero,
    Infinity,
}

#[derive(Args, Debug, Clone)]
pub struct DeRunArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Channel as `family:noise`, e.g. `bec:0.45`.
    #[arg(long)]
    pub channel: String,
    #[arg(long = "N", default_value_t = 100_000)]
    pub population: usize,
    #[arg(long = "T", default_value_t = 20_000)]
    pub iterations: usize,
    #[arg(long)]
    pub no_early_stop: bool,
    #[arg(long, value_enum, default_value_t = InitArg::Zero)]
    pub init: InitArg,
    /// Also evaluate the trial entropy with this many samples.
    #[arg(long = "M")]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleGraphArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Block length.
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Channel as `family:noise`.
    #[arg(long)]
    pub channel: String,
    /// Block length of the sampled graphs.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub graphs: usize,
    /// Channel realizations per graph.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Check one stored graph (JSON from sample-graph) instead of an ensemble.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableName {
    Table1,
    Table2,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    #[arg(value_enum)]
    pub which: TableName,
    #[command(flatten)]
    pub mc: McArgs,
}

fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = a.trim().parse::<f64>().map_err(|e| format!("lo: {e}"))?;
    let hi = b.trim().parse::<f64>().map_err(|e| format!("hi: {e}"))?;
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.run.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::BecAnalytic(a) => commands::bec_analytic(a, &cli.run),
        Command::MapBound(a) => commands::map_bound(a, &cli.run),
        Command::DeRun(a) => commands::de_run(a, &cli.run),
        Command::SampleGraph(a) => commands::sample_graph(a, &cli.run),
        Command::Verify(a) => commands::verify(a, &cli.run),
        Command::Table(a) => tables::table(a, &cli.run),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bracket_parsing() {
        assert_eq!(parse_bracket("0.05, 0.2"), Ok((0.05, 0.2)));
        assert!(parse_bracket("0.05").is_err());
    }
}
