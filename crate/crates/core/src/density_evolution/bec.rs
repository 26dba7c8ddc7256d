//! Scalar density evolution on the erasure channel.

use serde::Serialize;

use crate::ensembles::{CodeModel, DegreeLaw, Family, SparsePoly};

/// Erasure probabilities of variable-to-check (`z`) and check-to-variable
/// (`z_hat`) messages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecState {
    pub z: f64,
    pub z_hat: f64,
}

/// Iteration cap for scalar fixed-point searches.
pub const MAX_SCALAR_ITERATIONS: usize = 100_000;
/// Successive iterates closer than this are considered converged.
pub const SCALAR_TOLERANCE: f64 = 1e-13;

/// Erasure probability of a check-to-variable message given `z`.
#[inline]
pub fn check_erasure(z: f64, eps: f64, model: &CodeModel) -> f64 {
    BecMap::new(model).z_hat(z, eps)
}

/// One round of the erasure recursion.
pub fn bec_de_step(state: BecState, eps: f64, model: &CodeModel) -> BecState {
    let map = BecMap::new(model);
    let z_hat = map.z_hat(state.z, eps);
    BecState { z: map.z_from_hat(z_hat, eps), z_hat }
}

#[derive(Debug, Clone)]
enum LeftEdge {
    Poly(SparsePoly),
    Poisson(f64),
}

/// Cached polynomial form of the recursion `z -> f(z)` for repeated evaluation.
#[derive(Debug, Clone)]
pub struct BecMap {
    model: CodeModel,
    rho: SparsePoly,
    lambda: LeftEdge,
}

impl BecMap {
    pub fn new(model: &CodeModel) -> Self {
        let lambda = match &model.left {
            DegreeLaw::Finite(d) => LeftEdge::Poly(d.edge_perspective()),
            DegreeLaw::Poisson(g) => LeftEdge::Poisson(*g),
        };
        BecMap { model: model.clone(), rho: model.right.edge_perspective(), lambda }
    }

    pub fn model(&self) -> &CodeModel {
        &self.model
    }

    /// Edge-perspective left generating function.
    #[inline]
    pub fn lambda(&self, x: f64) -> f64 {
        match &self.lambda {
            LeftEdge::Poly(p) => p.eval(x),
            LeftEdge::Poisson(g) => (g * (x - 1.0)).exp(),
        }
    }

    #[inline]
    pub fn lambda_derivative(&self, x: f64) -> f64 {
        match &self.lambda {
            LeftEdge::Poly(p) => p.derivative(x),
            LeftEdge::Poisson(g) => g * (g * (x - 1.0)).exp(),
        }
    }

    /// Edge-perspective right generating function.
    #[inline]
    pub fn rho(&self, x: f64) -> f64 {
        self.rho.eval(x)
    }

    #[inline]
    pub fn rho_derivative(&self, x: f64) -> f64 {
        self.rho.derivative(x)
    }

    #[inline]
    pub fn z_hat(&self, z: f64, eps: f64) -> f64 {
        let c = self.rho.eval_complement(z);
        match self.model.family {
            Family::Ldpc => c,
            Family::Ldgm => eps + (1.0 - eps) * c,
        }
    }

    #[inline]
    fn z_from_hat(&self, z_hat: f64, eps: f64) -> f64 {
        match self.model.family {
            Family::Ldpc => eps * self.lambda(z_hat),
            Family::Ldgm => self.lambda(z_hat),
        }
    }

    #[inline]
    pub fn f(&self, z: f64, eps: f64) -> f64 {
        self.z_from_hat(self.z_hat(z, eps), eps)
    }

    /// Iterate from `z0` until successive values agree to 1e-13 or the cap is hit.
    pub fn iterate(&self, z0: f64, eps: f64) -> (f64, usize) {
        let mut z = z0;
        for it in 1..=MAX_SCALAR_ITERATIONS {
            let next = self.f(z, eps);
            if (next - z).abs() < SCALAR_TOLERANCE {
                return (next, it);
            }
            z = next;
        }
        (z, MAX_SCALAR_ITERATIONS)
    }

    /// `f'(z)` by central differences (one-sided at the ends of [0,1]).
    pub fn derivative(&self, z: f64, eps: f64) -> f64 {
        let h = 1e-7;
        let (a, b) = ((z - h).max(0.0), (z + h).min(1.0));
        (self.f(b, eps) - self.f(a, eps)) / (b - a)
    }
}

/// Iterate the recursion from `z0` to convergence.
pub fn bec_fixed_point(z0: f64, eps: f64, model: &CodeModel) -> BecState {
    let map = BecMap::new(model);
    let (z, _) = map.iterate(z0, eps);
    BecState { z, z_hat: map.z_hat(z, eps) }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimize `f` over a uniform grid of `[lo, hi]` and polish with golden section.
pub(crate) fn grid_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + (hi - lo) * best_i.saturating_sub(1) as f64 / n as f64;
    let b = lo + (hi - lo) * (best_i + 1).min(n) as f64 / n as f64;
    let polished = golden_min(&f, a, b);
    if polished.1 < best.1 {
        polished
    } else {
        best
    }
}

/// Belief-propagation threshold on the erasure channel.
///
/// LDPC: the largest `eps` for which `z = 0` is the only fixed point, i.e.
/// `min_z z / lambda(1 - rho(1 - z))`, including its `z -> 0` limit.
/// LDGM: the largest `eps` at which a fixed point below `z = 1` exists,
/// `max_z 1 - (1 - lambda^{-1}(z)) / rho(1 - z)`.
pub fn bec_bp_threshold(model: &CodeModel) -> f64 {
    let map = BecMap::new(model);
    match model.family {
        Family::Ldpc => {
            let ratio = |z: f64| {
                let d = map.lambda(map.rho.eval_complement(z));
                if d <= 0.0 {
                    f64::INFINITY
                } else {
                    z / d
                }
            };
            let (_, grid) = grid_min(ratio, 1e-5, 1.0, 1e-5);
            let slope = map.lambda(0.0);
            let limit = if slope > 0.0 {
                0.0
            } else {
                let d = map.lambda_derivative(0.0) * map.rho_derivative(1.0);
                if d > 0.0 {
                    1.0 / d
                } else {
                    f64::INFINITY
                }
            };
            grid.min(limit).min(1.0)
        }
        Family::Ldgm => {
            let neg = |z: f64| {
                let r = map.rho(1.0 - z);
                if r <= 0.0 {
                    return f64::INFINITY;
                }
                let x = inverse_increasing(|x| map.lambda(x), z);
                match x {
                    Some(x) => (1.0 - x) / r - 1.0,
                    None => f64::INFINITY,
                }
            };
            let (_, best) = grid_min(neg, 0.0, 1.0 - 1e-4, 1e-4);
            (-best).clamp(0.0, 1.0)
        }
    }
}

/// Solve `g(x) = y` on `[0, 1]` for non-decreasing `g`; `None` when `y < g(0)`.
fn inverse_increasing<G: Fn(f64) -> f64>(g: G, y: f64) -> Option<f64> {
    if y < g(0.0) {
        return None;
    }
    if y >= g(1.0) {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
