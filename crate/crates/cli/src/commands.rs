use std::fs::{self, OpenOptions};
use std::io::Write;

use mapbound::channels::{symmetry_test, ChannelFamily, ChannelModel, LlrPopulation};
use mapbound::density_evolution::{de_iterate, DeConfig, InitMode};
use mapbound::ensembles::{empirical_degree_profile, TannerGraph};
use mapbound::graph_decoding::{verify_bound, verify_graph, VerifyConfig};
use mapbound::trial_entropy::{
    bec_stationary_points, bec_thresholds, map_bound_resumable, phi_v_mc_with, probe_bound, Estimator,
    MapBoundConfig, Probe,
};
use mapbound::Error;
use serde_json::{json, Value};

use crate::output::{emit, object, resolve_seed, write_file, CliError, CliResult};
use crate::{BecAnalyticArgs, DeRunArgs, EstimatorArg, InitArg, MapBoundArgs, McArgs, RunArgs, SampleGraphArgs, VerifyArgs};

const CHECKPOINT: &str = "map-bound.checkpoint.jsonl";
const MULTI_POISSON_ATTEMPTS: u64 = 10;

pub fn bound_config(mc: &McArgs, seed: u64) -> MapBoundConfig {
    MapBoundConfig {
        de: DeConfig {
            population: mc.population,
            max_iterations: mc.iterations,
            early_stop: !mc.no_early_stop,
            ..DeConfig::default()
        },
        averaging: mc.averaging,
        samples: mc.trial_samples,
        sigmas: mc.sigmas,
        estimator: match mc.estimator {
            EstimatorArg::Direct => Estimator::Direct,
            EstimatorArg::Symmetrized => Estimator::Symmetrized,
        },
        seed,
        ..MapBoundConfig::default()
    }
}

/// A channel family alone, or a fully specified channel.
enum ChannelArg {
    Family(ChannelFamily),
    Model(ChannelModel),
}

fn parse_channel(s: &str) -> CliResult<ChannelArg> {
    if s.contains(':') {
        Ok(ChannelArg::Model(ChannelModel::parse(s)?))
    } else {
        Ok(ChannelArg::Family(s.parse()?))
    }
}

fn channel_model(s: &str) -> CliResult<ChannelModel> {
    match parse_channel(s)? {
        ChannelArg::Model(c) => Ok(c),
        ChannelArg::Family(_) => Err(CliError::Usage(format!("channel '{s}' needs a noise level, e.g. {s}:0.1"))),
    }
}

pub fn bec_analytic(args: &BecAnalyticArgs, run: &RunArgs) -> CliResult<u8> {
    let model = args.ensemble.model()?;
    let t = bec_thresholds(&model)?;
    let trace = bec_stationary_points(t.eps_map, &model);
    let value = object(vec![
        ("ensemble", json!(args.ensemble.describe())),
        ("eps_bp", json!(t.eps_bp)),
        ("eps_map", json!(t.eps_map)),
        ("continuous", json!(t.continuous)),
        ("stationary_points", serde_json::to_value(&trace)?),
        ("map_search", serde_json::to_value(&t.map)?),
    ]);
    emit(run, "bec-analytic", value)?;
    if args.strict && t.continuous {
        eprintln!("error: {}", Error::NoBadBranch);
        return Ok(1);
    }
    Ok(0)
}

pub fn map_bound(args: &MapBoundArgs, run: &RunArgs) -> CliResult<u8> {
    let model = args.ensemble.model()?;
    let seed = resolve_seed(run)?;
    let mut cfg = bound_config(&args.mc, seed);
    cfg.tolerance = args.tol;
    cfg.bracket = args.bracket;
    let ensemble = args.ensemble.describe();
    match parse_channel(&args.channel)? {
        ChannelArg::Model(channel) if args.phi_only => {
            let state = de_iterate(&channel, &model, &cfg.de, InitMode::Zero, seed)?;
            let report = phi_v_mc_with(&state.v_pop, &model, &channel, cfg.samples, seed ^ 1, cfg.estimator)?;
            let value = object(vec![
                ("ensemble", json!(ensemble)),
                ("channel", json!(channel.label())),
                ("seed", json!(seed)),
                ("de_iterations", json!(state.iterations)),
                ("de_converged", json!(state.converged)),
                ("trial_entropy", serde_json::to_value(&report)?),
            ]);
            emit(run, "map-bound", value)?;
        }
        ChannelArg::Model(channel) => {
            let probe = probe_bound(&channel, &model, &cfg)?;
            let value = object(vec![
                ("ensemble", json!(ensemble)),
                ("channel", json!(channel.label())),
                ("seed", json!(seed)),
                ("probe", serde_json::to_value(&probe)?),
            ]);
            emit(run, "map-bound", value)?;
        }
        ChannelArg::Family(_) if args.phi_only => {
            return Err(CliError::Usage("--phi-only needs a channel with a noise level".into()));
        }
        ChannelArg::Family(family) => {
            let settings = json!({ "ensemble": ensemble, "family": family, "config": cfg }).to_string();
            let known = match &run.out {
                Some(dir) => load_checkpoint(&dir.join(CHECKPOINT), &settings)?,
                None => Vec::new(),
            };
            if !known.is_empty() {
                eprintln!("resuming with {} stored probes", known.len());
            }
            let result = map_bound_resumable(family, &model, &cfg, &known, |p| {
                eprintln!("probe noise={:.6} phi={:.6} se={:.6} positive={}", p.noise, p.phi, p.std_error, p.positive);
                if let Some(dir) = &run.out {
                    append_checkpoint(&dir.join(CHECKPOINT), &settings, p)?;
                }
                Ok(())
            })?;
            let value = object(vec![
                ("ensemble", json!(ensemble)),
                ("family", serde_json::to_value(family)?),
                ("seed", json!(seed)),
                ("config", serde_json::to_value(&cfg)?),
                ("result", serde_json::to_value(&result)?),
            ]);
            emit(run, "map-bound", value)?;
        }
    }
    Ok(0)
}

/// Probes stored by an earlier run with identical settings.
fn load_checkpoint(path: &std::path::Path, settings: &str) -> CliResult<Vec<Probe>> {
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(Vec::new());
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(first) if first == settings => {}
        Some(_) => {
            return Err(CliError::Usage(format!(
                "{} was written with different settings; remove it or pick another --out",
                path.display()
            )))
        }
        None => return Ok(Vec::new()),
    }
    lines.filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

fn append_checkpoint(path: &std::path::Path, settings: &str, probe: &Probe) -> mapbound::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{settings}")?;
    }
    writeln!(f, "{}", serde_json::to_string(probe)?)?;
    Ok(())
}

fn population_summary(pop: &LlrPopulation) -> Value {
    json!({
        "size": pop.len(),
        "zero_fraction": pop.zero_fraction(),
        "infinite_fraction": pop.infinite_fraction(),
        "tanh_even_moments": pop.even_moments(4),
        "symmetry": symmetry_test(pop, 4),
    })
}

pub fn de_run(args: &DeRunArgs, run: &RunArgs) -> CliResult<u8> {
    let model = args.ensemble.model()?;
    let channel = channel_model(&args.channel)?;
    let seed = resolve_seed(run)?;
    let cfg = DeConfig {
        population: args.population,
        max_iterations: args.iterations,
        early_stop: !args.no_early_stop,
        ..DeConfig::default()
    };
    let init = match args.init {
        InitArg::Zero => InitMode::Zero,
        InitArg::Infinity => InitMode::Infinity,
    };
    let state = de_iterate(&channel, &model, &cfg, init, seed)?;
    let mut fields = vec![
        ("ensemble", json!(args.ensemble.describe())),
        ("channel", json!(channel.label())),
        ("seed", json!(seed)),
        ("iterations", json!(state.iterations)),
        ("converged", json!(state.converged)),
        ("v", population_summary(&state.v_pop)),
        ("u", population_summary(&state.u_pop)),
    ];
    if let Some(m) = args.samples {
        let report = phi_v_mc_with(&state.v_pop, &model, &channel, m, seed ^ 1, Estimator::default())?;
        fields.push(("trial_entropy", serde_json::to_value(&report)?));
    }
    emit(run, "de-run", object(fields))?;
    Ok(0)
}

pub fn sample_graph(args: &SampleGraphArgs, run: &RunArgs) -> CliResult<u8> {
    let spec = args.ensemble.spec(args.n)?;
    let seed = resolve_seed(run)?;
    let mut used = seed;
    let graph = loop {
        match spec.sample(used) {
            Ok(g) => break g,
            Err(Error::SocketExhaustion { round }) if used - seed + 1 < MULTI_POISSON_ATTEMPTS => {
                eprintln!("socket exhaustion in round {round} with seed {used}; retrying");
                used += 1;
            }
            Err(e) => return Err(e.into()),
        }
    };
    let mut fields = vec![
        ("ensemble", json!(args.ensemble.describe())),
        ("seed", json!(seed)),
        ("seed_used", json!(used)),
        ("n", json!(graph.n_var)),
        ("checks", json!(graph.n_checks())),
        ("edges", json!(graph.n_edges())),
        ("design_rate", json!(spec.design_rate())),
        ("degree_profile", serde_json::to_value(empirical_degree_profile(&graph))?),
    ];
    match &run.out {
        Some(dir) => write_file(dir, "graph.json", &graph.to_json())?,
        None => fields.push(("graph", serde_json::to_value(&graph)?)),
    }
    emit(run, "sample-graph", object(fields))?;
    Ok(0)
}

pub fn verify(args: &VerifyArgs, run: &RunArgs) -> CliResult<u8> {
    let channel = channel_model(&args.channel)?;
    let seed = resolve_seed(run)?;
    let cfg = VerifyConfig {
        graphs: args.graphs,
        samples: args.samples,
        seed,
        bound: bound_config(&args.mc, seed),
        sigmas: args.mc.sigmas,
    };
    let (subject, report) = match &args.graph {
        Some(path) => {
            let graph = TannerGraph::load(path)?;
            (path.display().to_string(), verify_graph(&graph, args.ensemble.family, &channel, &cfg)?)
        }
        None => {
            let n = args.n.ok_or_else(|| CliError::Usage("verify needs --n or --graph".into()))?;
            let spec = args.ensemble.spec(n)?;
            (args.ensemble.describe(), verify_bound(&spec, &channel, &cfg)?)
        }
    };
    eprintln!(
        "oracle {:.6} +- {:.6}, bound {:.6} +- {:.6}, margin {:.6}",
        report.oracle.entropy_per_bit.mean,
        report.oracle.entropy_per_bit.std_error,
        report.bound.mean,
        report.bound.std_error,
        report.margin
    );
    let violation = report.violation;
    let value = object(vec![
        ("subject", json!(subject)),
        ("channel", json!(channel.label())),
        ("seed", json!(seed)),
        ("report", serde_json::to_value(&report)?),
    ]);
    emit(run, "verify", value)?;
    Ok(if violation { 1 } else { 0 })
}
