//! Binary entropy and its inverse.

use crate::error::{Error, Result};

/// `h2(x) = -x log2 x - (1-x) log2 (1-x)`, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} not in [0,1]")));
    }
    Ok(h2(x))
}

pub(crate) fn h2(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// The unique `x` in `[0, 1/2]` with `h2(x) = h`, by bisection to 1e-12.
pub fn binary_entropy_inverse(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Domain(format!("entropy {h} not in [0,1]")));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy_inverse(-0.1).is_err());
        assert!(binary_entropy_inverse(0.0).unwrap() < 1e-12);
        assert!((binary_entropy_inverse(1.0).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn inverse_at_one_half() {
        let x = binary_entropy_inverse(0.5).unwrap();
        assert!((x - 0.110028).abs() < 1e-5, "{x}");
    }

    proptest! {
        #[test]
        fn round_trip(x in 1e-6f64..0.5) {
            let back = binary_entropy_inverse(h2(x)).unwrap();
            prop_assert!((back - x).abs() < 1e-10);
        }
    }
}
