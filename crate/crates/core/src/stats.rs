//! Block-jackknife error bars for Monte Carlo averages.

use serde::Serialize;

/// Number of jackknife blocks used for every Monte Carlo standard error.
pub const JACKKNIFE_BLOCKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(mean: f64, std_error: f64) -> Self {
        Estimate { mean, std_error }
    }
}

/// Delete-one-block jackknife estimate of the mean of `values`.
///
/// With fewer samples than blocks every sample is its own block.
pub fn jackknife_mean(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    if n == 1 {
        return Estimate::new(values[0], 0.0);
    }
    let blocks = JACKKNIFE_BLOCKS.min(n);
    let total: f64 = values.iter().sum();
    let mean = total / n as f64;
    let mut leave_out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let start = b * n / blocks;
        let end = (b + 1) * n / blocks;
        let s: f64 = values[start..end].iter().sum();
        leave_out.push((total - s) / (n - (end - start)) as f64);
    }
    let bar = leave_out.iter().sum::<f64>() / blocks as f64;
    let var = leave_out.iter().map(|x| (x - bar).powi(2)).sum::<f64>() * (blocks - 1) as f64
        / blocks as f64;
    Estimate::new(mean, var.sqrt())
}

/// Sample mean and plain standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    if values.is_empty() {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Estimate::new(mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate::new(mean, (var / n).sqrt())
}

/// Sample standard deviation (n - 1 normalization).
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_agrees_with_plain_se_for_iid_data() {
        use rand::Rng;
        let mut rng = crate::rng::substream(3, &[0]);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let jk = jackknife_mean(&xs);
        let plain = mean_and_se(&xs);
        assert!((jk.mean - plain.mean).abs() < 1e-12);
        assert!((jk.std_error / plain.std_error - 1.0).abs() < 0.25);
    }

    #[test]
    fn constant_data_has_zero_error() {
        let e = jackknife_mean(&[2.0; 500]);
        assert_eq!(e.mean, 2.0);
        assert!(e.std_error < 1e-12);
    }
}
