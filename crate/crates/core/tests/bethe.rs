use mapbound::channels::{ChannelModel, LlrPopulation};
use mapbound::density_evolution::{de_iterate, DeConfig, InitMode};
use mapbound::ensembles::{DegreeDist, EnsembleSpec, Family};
use mapbound::graph_decoding::{bethe_free_energy, EdgeIndex, FactorObservations, MessageSet};
use mapbound::rng::{derive, substream};
use mapbound::stats::mean_and_se;
use mapbound::trial_entropy::phi_v_mc;
use mapbound::Llr;
use rand::Rng;

/// With i.i.d. messages from a density-evolution fixed point, the Bethe free
/// energy per variable averages to `-phi - sum_y Q(y|0) log2 Q(y|0)`.
#[test]
fn iid_messages_average_to_minus_trial_entropy_plus_channel_entropy() {
    let n = 10_000;
    let spec = EnsembleSpec::poisson(n, 3.0, DegreeDist::regular(6), Family::Ldpc).unwrap();
    let model = spec.code_model().unwrap();
    let channel = ChannelModel::bsc(0.08).unwrap();
    let state = de_iterate(&channel, &model, &DeConfig::fixed(50_000, 150), InitMode::Zero, 3).unwrap();
    let phi = phi_v_mc(&state.v_pop, &model, &channel, 1_000_000, 4).unwrap();
    let per_graph: Vec<f64> = (0..20u64)
        .map(|g| {
            let graph = spec.sample(derive(5, &[g])).unwrap();
            let obs = FactorObservations::sample(&graph, Family::Ldpc, &channel, 6, &[g]);
            let edges = EdgeIndex::new(&graph).n_edges();
            let mut rng = substream(7, &[g]);
            let mut draw = |pop: &LlrPopulation| -> Llr { pop.samples()[rng.random_range(0..pop.len())] };
            let messages = MessageSet {
                u: (0..edges).map(|_| draw(&state.u_pop)).collect(),
                v: (0..edges).map(|_| draw(&state.v_pop)).collect(),
            };
            bethe_free_energy(&graph, &messages, &obs).unwrap() / n as f64
        })
        .collect();
    let f = mean_and_se(&per_graph);
    let expected = -phi.phi - channel.mean_log2_q0();
    let sigma = f.std_error.hypot(phi.std_error);
    assert!((f.mean - expected).abs() <= 3.0 * sigma, "F/n {} vs {expected} (sigma {sigma})", f.mean);
}
