use std::collections::BTreeMap;

use super::graph::DegreeProfile;
use super::pair::DegreePair;
use crate::error::{Error, Result};

/// Number of construction rounds of the multi-Poisson ensemble.
pub fn multi_poisson_rounds(gamma: f64, pair: &DegreePair) -> Result<usize> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidEnsemble(format!("gamma must be positive, got {gamma}")));
    }
    let ratio = pair.lambda_prime_one() / gamma;
    let t = (ratio + 1e-12).floor() as i64 - 1;
    if t < 1 {
        return Err(Error::InvalidEnsemble(format!(
            "gamma = {gamma} leaves {t} construction rounds for mean left degree {}",
            pair.lambda_prime_one()
        )));
    }
    Ok(t as usize)
}

/// Asymptotic left degree profile of the multi-Poisson ensemble.
///
/// Tracks the joint law of (design degree, remaining sockets) across rounds:
/// a node with `d > 0` remaining sockets receives a Poisson number of new
/// edges with mean `gamma * d / E[d]_+` per round. Remaining-socket values
/// below `-D`, `D = l_max + ceil(10 gamma)`, are lumped into `-D`.
pub fn multi_poisson_profile(gamma: f64, pair: &DegreePair) -> Result<DegreeProfile> {
    let t_max = multi_poisson_rounds(gamma, pair)?;
    let l_max = pair.l_max() as i64;
    let depth = l_max + (10.0 * gamma).ceil() as i64;
    let width = (depth + l_max + 1) as usize;
    let idx = |d: i64| (d + depth) as usize;

    let degrees: Vec<(u32, f64)> = pair.lambda().terms().collect();
    let mut omega: Vec<Vec<f64>> = degrees
        .iter()
        .map(|&(l, f)| {
            let mut row = vec![0.0; width];
            row[idx(l as i64)] = f;
            row
        })
        .collect();

    for _ in 0..t_max {
        let free: f64 = omega
            .iter()
            .map(|row| (1..=l_max).map(|d| d as f64 * row[idx(d)]).sum::<f64>())
            .sum();
        if free <= 0.0 {
            break;
        }
        for row in omega.iter_mut() {
            let mut next = vec![0.0; width];
            for d in -depth..=l_max {
                let w = row[idx(d)];
                if w == 0.0 {
                    continue;
                }
                if d <= 0 {
                    next[idx(d)] += w;
                    continue;
                }
                let mu = gamma * d as f64 / free;
                let mut p = (-mu).exp();
                let mut placed = 0.0;
                let mut j = 0i64;
                while d - j > -depth {
                    next[idx(d - j)] += w * p;
                    placed += p;
                    j += 1;
                    p *= mu / j as f64;
                }
                next[idx(-depth)] += w * (1.0 - placed).max(0.0);
            }
            *row = next;
        }
    }

    let mut lambda_hat = BTreeMap::new();
    for (&(l, _), row) in degrees.iter().zip(&omega) {
        for d in -depth..=l as i64 {
            let w = row[idx(d)];
            if w > 0.0 {
                *lambda_hat.entry((l as i64 - d) as u32).or_insert(0.0) += w;
            }
        }
    }
    let total: f64 = lambda_hat.values().sum();
    lambda_hat.values_mut().for_each(|v| *v /= total);
    Ok(DegreeProfile { lambda_hat, rho_hat: pair.rho().as_map() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::graph::tv_distance;

    #[test]
    fn rounds_and_rejection() {
        let p = DegreePair::regular(3, 6).unwrap();
        assert_eq!(multi_poisson_rounds(0.5, &p).unwrap(), 5);
        assert!(multi_poisson_rounds(3.0, &p).is_err());
        assert!(multi_poisson_rounds(2.0, &p).is_err());
        assert!(multi_poisson_rounds(0.0, &p).is_err());
    }

    #[test]
    fn output_is_a_distribution() {
        let p = DegreePair::parse("L: 0.5@2 0.5@5 ; R: 1@6").unwrap();
        let prof = multi_poisson_profile(0.3, &p).unwrap();
        let s: f64 = prof.lambda_hat.values().sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert!(prof.lambda_hat.values().all(|&v| v >= 0.0));
    }

    #[test]
    fn small_gamma_approaches_design_profile() {
        let p = DegreePair::regular(3, 6).unwrap();
        let prof = multi_poisson_profile(0.01, &p).unwrap();
        assert!(tv_distance(&prof.lambda_hat, &p.lambda().as_map()) < 0.05);
    }

    #[test]
    fn mean_degree_matches_rounds() {
        // each round adds gamma edges per node on average
        let p = DegreePair::regular(3, 6).unwrap();
        let prof = multi_poisson_profile(0.5, &p).unwrap();
        assert!((prof.lambda_mean() - 2.5).abs() < 1e-6, "{}", prof.lambda_mean());
    }
}
