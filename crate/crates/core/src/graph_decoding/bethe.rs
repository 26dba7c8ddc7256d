//! Bethe free energy as a function of BP messages.

use std::f64::consts::LN_2;

use super::bp::{EdgeIndex, MessageSet};
use super::FactorObservations;
use crate::ensembles::TannerGraph;
use crate::error::{Error, Result};
use crate::llr::{BoxPlus, Llr};

/// `log2 sum_x P_u(x) P_v(x)`.
#[inline]
fn edge_term(u: Llr, v: Llr) -> f64 {
    (u + v).neg_log2_p0() - u.neg_log2_p0() - v.neg_log2_p0()
}

/// Bethe free energy (bits) of the beliefs parameterized by `messages`:
/// edge terms minus variable-node and check-node normalizations.
pub fn bethe_free_energy(graph: &TannerGraph, messages: &MessageSet, obs: &FactorObservations) -> Result<f64> {
    let index = EdgeIndex::new(graph);
    if messages.u.len() != index.n_edges() || messages.v.len() != index.n_edges() {
        return Err(Error::Domain("message set does not match the graph".into()));
    }
    let inconsistent = obs.variables.iter().chain(&obs.checks).any(|o| o.log2_q0 == f64::NEG_INFINITY);
    if inconsistent {
        return Err(Error::InconsistentInfinity);
    }
    let edges: f64 = messages.u.iter().zip(&messages.v).map(|(&u, &v)| edge_term(u, v)).sum();
    let mut variables = 0.0;
    for (i, o) in obs.variables.iter().enumerate() {
        let mut total = o.llr;
        let mut parts = 0.0;
        for &e in index.variable_edges(i) {
            total = total + messages.u[e];
            parts += messages.u[e].neg_log2_p0();
        }
        variables += o.log2_q0 + total.neg_log2_p0() - parts;
    }
    let mut checks = 0.0;
    for (a, o) in obs.checks.iter().enumerate() {
        let mut acc = BoxPlus::default();
        acc.push(o.llr);
        for e in index.check_edges(a) {
            acc.push(messages.v[e]);
        }
        let even = acc.ln_even_probability();
        if even == f64::NEG_INFINITY {
            return Err(Error::InconsistentInfinity);
        }
        checks += o.log2_q0 + even / LN_2 + o.llr.neg_log2_p0();
    }
    let f = edges - variables - checks;
    if f.is_nan() {
        return Err(Error::InconsistentInfinity);
    }
    Ok(f)
}
