//! Gauss-Hermite quadrature for Gaussian expectations.

use std::f64::consts::PI;
use std::sync::OnceLock;

const NODES: usize = 200;

/// Nodes and weights for `int e^{-x^2} f(x) dx`. Roots of the orthonormal
/// Hermite polynomial are bracketed on a fine grid and polished by bisection.
fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        // (p_n(z), p_{n-1}(z)) for the orthonormal family
        let eval = |z: f64| {
            let mut p1 = PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            (p1, p2)
        };
        let mut pos = Vec::new();
        let step = 1e-3;
        let upper = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
        // n even: no root at zero; start just right of it
        let mut a = 0.5 * step;
        let mut fa = eval(a).0;
        while a < upper {
            let b = a + step;
            let fb = eval(b).0;
            if fa.signum() != fb.signum() {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = eval(mid).0;
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                pos.push(0.5 * (lo + hi));
            }
            a = b;
            fa = fb;
        }
        assert_eq!(pos.len(), n / 2, "Hermite root bracketing missed a root");
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for &z in pos.iter().rev() {
            x.push(-z);
        }
        x.extend(pos.iter().copied());
        for &z in &x {
            let pp = (2.0 * n as f64).sqrt() * eval(z).1;
            w.push(2.0 / (pp * pp));
        }
        (x, w)
    })
}

/// `E f(Y)` for `Y ~ N(mean, sd^2)`.
pub fn gauss_hermite_expectation<F: Fn(f64) -> f64>(mean: f64, sd: f64, f: F) -> f64 {
    let (x, w) = hermite_rule();
    let s = std::f64::consts::SQRT_2 * sd;
    x.iter().zip(w).map(|(&xi, &wi)| wi * f(mean + s * xi)).sum::<f64>() / PI.sqrt()
}

#[cfg(test)]
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
