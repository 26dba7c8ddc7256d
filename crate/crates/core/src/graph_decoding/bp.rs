//! Flooding belief propagation on a concrete Tanner graph.

use serde::Serialize;

use super::FactorObservations;
use crate::ensembles::TannerGraph;
use crate::llr::{BoxPlus, Llr};

/// Edge numbering in check order: edge `offsets[a] + p` is the `p`-th edge of check `a`.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    offsets: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

impl EdgeIndex {
    pub fn new(graph: &TannerGraph) -> Self {
        let mut offsets = Vec::with_capacity(graph.n_checks() + 1);
        let mut var_edges = vec![Vec::new(); graph.n_var];
        let mut e = 0;
        for c in &graph.checks {
            offsets.push(e);
            for &i in c {
                var_edges[i as usize].push(e);
                e += 1;
            }
        }
        offsets.push(e);
        EdgeIndex { offsets, var_edges }
    }

    pub fn n_edges(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn check_edges(&self, a: usize) -> std::ops::Range<usize> {
        self.offsets[a]..self.offsets[a + 1]
    }

    pub fn variable_edges(&self, i: usize) -> &[usize] {
        &self.var_edges[i]
    }
}

/// Check-to-variable (`u`) and variable-to-check (`v`) messages, one per edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageSet {
    pub u: Vec<Llr>,
    pub v: Vec<Llr>,
}

impl MessageSet {
    pub fn zeros(n_edges: usize) -> Self {
        MessageSet { u: vec![Llr::ZERO; n_edges], v: vec![Llr::ZERO; n_edges] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Zero,
    One,
    Erased,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BpOutcome {
    pub marginals: Vec<Llr>,
    pub decisions: Vec<Decision>,
    pub messages: MessageSet,
}

impl BpOutcome {
    pub fn erased_fraction(&self) -> f64 {
        self.decisions.iter().filter(|&&d| d == Decision::Erased).count() as f64 / self.decisions.len().max(1) as f64
    }

    /// Fraction of wrong decisions against the all-zero word, erasures counting one half.
    pub fn error_rate(&self) -> f64 {
        let s: f64 = self
            .decisions
            .iter()
            .map(|d| match d {
                Decision::Zero => 0.0,
                Decision::One => 1.0,
                Decision::Erased => 0.5,
            })
            .sum();
        s / self.decisions.len().max(1) as f64
    }
}

/// Recompute every variable-to-check message from the current check messages.
pub fn update_variables(graph: &TannerGraph, index: &EdgeIndex, h: &[Llr], msgs: &mut MessageSet) {
    for i in 0..graph.n_var {
        let edges = index.variable_edges(i);
        for &e in edges {
            let mut acc = h[i];
            for &f in edges {
                if f != e {
                    acc = acc + msgs.u[f];
                }
            }
            msgs.v[e] = acc;
        }
    }
}

/// Recompute every check-to-variable message from the current variable messages.
pub fn update_checks(graph: &TannerGraph, index: &EdgeIndex, j: &[Llr], msgs: &mut MessageSet) {
    for a in 0..graph.n_checks() {
        let range = index.check_edges(a);
        for e in range.clone() {
            let mut acc = BoxPlus::default();
            acc.push(j[a]);
            for f in range.clone() {
                if f != e {
                    acc.push(msgs.v[f]);
                }
            }
            msgs.u[e] = acc.finish();
        }
    }
}

/// Run `iterations` flooding rounds from all-zero messages and return the
/// marginals `h_i + sum u` with hard decisions (ties reported as erasures).
pub fn bp_decode(graph: &TannerGraph, obs: &FactorObservations, iterations: usize) -> BpOutcome {
    let index = EdgeIndex::new(graph);
    let h = obs.variable_llrs();
    let j = obs.check_llrs();
    let mut msgs = MessageSet::zeros(index.n_edges());
    for _ in 0..iterations {
        update_variables(graph, &index, &h, &mut msgs);
        update_checks(graph, &index, &j, &mut msgs);
    }
    let marginals: Vec<Llr> = (0..graph.n_var)
        .map(|i| index.variable_edges(i).iter().fold(h[i], |acc, &e| acc + msgs.u[e]))
        .collect();
    let decisions = marginals
        .iter()
        .map(|m| {
            if m.value() > 0.0 {
                Decision::Zero
            } else if m.value() < 0.0 {
                Decision::One
            } else {
                Decision::Erased
            }
        })
        .collect();
    BpOutcome { marginals, decisions, messages: msgs }
}
