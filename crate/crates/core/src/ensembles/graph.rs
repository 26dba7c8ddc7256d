use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bipartite multigraph: `checks[a]` lists the variable endpoints of check `a`,
/// one entry per edge (repeats are parallel edges).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TannerGraph {
    #[serde(rename = "n")]
    pub n_var: usize,
    pub checks: Vec<Vec<u32>>,
}

impl TannerGraph {
    pub fn new(n_var: usize, checks: Vec<Vec<u32>>) -> Result<Self> {
        for (a, c) in checks.iter().enumerate() {
            if let Some(&i) = c.iter().find(|&&i| i as usize >= n_var) {
                return Err(Error::InvalidEnsemble(format!("check {a} touches variable {i} >= n = {n_var}")));
            }
        }
        Ok(TannerGraph { n_var, checks })
    }

    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn n_edges(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    /// Variable degrees, counting parallel edges with multiplicity.
    pub fn variable_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_var];
        for c in &self.checks {
            for &i in c {
                deg[i as usize] += 1;
            }
        }
        deg
    }

    /// For each variable, the `(check, position)` pairs of its edges.
    pub fn variable_adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.n_var];
        for (a, c) in self.checks.iter().enumerate() {
            for (p, &i) in c.iter().enumerate() {
                adj[i as usize].push((a as u32, p as u32));
            }
        }
        adj
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: TannerGraph = serde_json::from_str(s)?;
        TannerGraph::new(g.n_var, g.checks)
    }

    pub fn load(path: &Path) -> Result<Self> {
        TannerGraph::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Node-degree histograms normalized to fractions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeProfile {
    pub lambda_hat: BTreeMap<u32, f64>,
    pub rho_hat: BTreeMap<u32, f64>,
}

impl DegreeProfile {
    pub fn lambda_mean(&self) -> f64 {
        self.lambda_hat.iter().map(|(&d, &f)| d as f64 * f).sum()
    }
}

/// Exact degree histograms of a graph (multi-edges counted with multiplicity).
pub fn empirical_degree_profile(graph: &TannerGraph) -> DegreeProfile {
    let mut lambda_hat = BTreeMap::new();
    for d in graph.variable_degrees() {
        *lambda_hat.entry(d as u32).or_insert(0.0) += 1.0;
    }
    normalize(&mut lambda_hat);
    let mut rho_hat = BTreeMap::new();
    for c in &graph.checks {
        *rho_hat.entry(c.len() as u32).or_insert(0.0) += 1.0;
    }
    normalize(&mut rho_hat);
    DegreeProfile { lambda_hat, rho_hat }
}

fn normalize(m: &mut BTreeMap<u32, f64>) {
    let s: f64 = m.values().sum();
    if s > 0.0 {
        m.values_mut().for_each(|v| *v /= s);
    }
}

/// Total-variation distance between two distributions on degrees.
pub fn tv_distance(a: &BTreeMap<u32, f64>, b: &BTreeMap<u32, f64>) -> f64 {
    let mut keys: Vec<u32> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_of_small_graph() {
        let g = TannerGraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let p = empirical_degree_profile(&g);
        assert!((p.lambda_hat[&1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.lambda_hat[&2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.rho_hat[&2], 1.0);
    }

    #[test]
    fn empty_graph_has_degree_zero_nodes() {
        let g = TannerGraph::new(4, vec![]).unwrap();
        let p = empirical_degree_profile(&g);
        assert_eq!(p.lambda_hat[&0], 1.0);
        assert!(p.rho_hat.is_empty());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = TannerGraph::new(3, vec![vec![0, 0, 2]]).unwrap();
        let s = g.to_json();
        assert_eq!(s, r#"{"n":3,"checks":[[0,0,2]]}"#);
        assert_eq!(TannerGraph::from_json(&s).unwrap(), g);
        assert!(TannerGraph::from_json(r#"{"n":2,"checks":[[0,2]]}"#).is_err());
    }
}
