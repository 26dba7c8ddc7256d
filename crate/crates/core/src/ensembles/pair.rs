use std::fmt;

use serde::Serialize;

use super::poly::{DegreeDist, SparsePoly};
use crate::error::{Error, Result};

/// Design degree sequences `(Lambda, P)` of a code ensemble, node perspective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreePair {
    lambda: DegreeDist,
    rho: DegreeDist,
}

impl DegreePair {
    pub fn new(lambda: DegreeDist, rho: DegreeDist) -> Result<Self> {
        for (side, d) in [("left", &lambda), ("right", &rho)] {
            if d.min_degree() < 2 {
                return Err(Error::InvalidDegrees(format!(
                    "{side} degrees must be at least 2, found {}",
                    d.min_degree()
                )));
            }
        }
        Ok(DegreePair { lambda, rho })
    }

    /// `Lambda = x^l`, `P = x^k`.
    pub fn regular(l: u32, k: u32) -> Result<Self> {
        DegreePair::new(DegreeDist::regular(l), DegreeDist::regular(k))
    }

    /// Parse the two-sided form `L: 1.0@3 ; R: 1.0@6`.
    pub fn parse(s: &str) -> Result<Self> {
        let Some(semi) = s.find(';') else {
            return Err(Error::Parse { column: s.len() + 1, message: "expected ';' between L and R".into() });
        };
        let lambda = parse_side(&s[..semi], 0, 'L')?;
        let rho = parse_side(&s[semi + 1..], semi + 1, 'R')?;
        DegreePair::new(lambda, rho)
    }

    /// Parse the two sides given separately, e.g. `1@3` and `1@6`.
    pub fn from_sides(left: &str, right: &str) -> Result<Self> {
        DegreePair::new(parse_terms(left, 0)?, parse_terms(right, 0)?)
    }

    pub fn lambda(&self) -> &DegreeDist {
        &self.lambda
    }

    pub fn rho(&self) -> &DegreeDist {
        &self.rho
    }

    /// `(lambda(x), rho(x))`, the edge-perspective polynomials.
    pub fn edge_perspective(&self) -> (SparsePoly, SparsePoly) {
        (self.lambda.edge_perspective(), self.rho.edge_perspective())
    }

    pub fn lambda_prime_one(&self) -> f64 {
        self.lambda.mean()
    }

    pub fn rho_prime_one(&self) -> f64 {
        self.rho.mean()
    }

    pub fn l_max(&self) -> u32 {
        self.lambda.max_degree()
    }

    pub fn k_max(&self) -> u32 {
        self.rho.max_degree()
    }
}

impl fmt::Display for DegreePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L: {} ; R: {}", format_terms(&self.lambda), format_terms(&self.rho))
    }
}

pub fn format_terms(d: &DegreeDist) -> String {
    d.terms().map(|(deg, c)| format!("{c}@{deg}")).collect::<Vec<_>>().join(" + ")
}

fn parse_side(s: &str, offset: usize, label: char) -> Result<DegreeDist> {
    let trimmed = s.trim_start();
    let lead = s.len() - trimmed.len();
    let mut chars = trimmed.char_indices();
    match chars.next() {
        Some((_, c)) if c.eq_ignore_ascii_case(&label) => {}
        _ => {
            return Err(Error::Parse {
                column: offset + lead + 1,
                message: format!("expected '{label}:'"),
            })
        }
    }
    let rest = &trimmed[1..].trim_start();
    let colon_at = offset + lead + 1 + (trimmed[1..].len() - rest.len());
    let Some(body) = rest.strip_prefix(':') else {
        return Err(Error::Parse { column: colon_at + 1, message: "expected ':'".into() });
    };
    parse_terms(body, colon_at + 1)
}

/// Parse terms `coef@degree` separated by commas, plus signs or whitespace.
/// Columns in errors are 1-based and shifted by `offset`.
pub fn parse_terms(s: &str, offset: usize) -> Result<DegreeDist> {
    let mut terms = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() || c == b',' || c == b'+' {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !(bytes[i].is_ascii_whitespace() || bytes[i] == b',' || bytes[i] == b'+') {
            i += 1;
        }
        let tok = &s[start..i];
        let col = offset + start + 1;
        let Some(at) = tok.find('@') else {
            return Err(Error::Parse { column: col, message: format!("term '{tok}' is not of the form coef@degree") });
        };
        let coef: f64 = tok[..at].parse().map_err(|_| Error::Parse {
            column: col,
            message: format!("bad coefficient '{}'", &tok[..at]),
        })?;
        let deg: u32 = tok[at + 1..].parse().map_err(|_| Error::Parse {
            column: col + at + 1,
            message: format!("bad degree '{}'", &tok[at + 1..]),
        })?;
        terms.push((deg, coef));
    }
    if terms.is_empty() {
        return Err(Error::Parse { column: offset + s.len() + 1, message: "no degree terms".into() });
    }
    DegreeDist::new(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_regular_pair() {
        let p = DegreePair::parse("L: 1.0@3 ; R: 1.0@6").unwrap();
        assert_eq!(p, DegreePair::regular(3, 6).unwrap());
        assert_eq!(p.lambda_prime_one(), 3.0);
        assert_eq!(p.rho_prime_one(), 6.0);
        let (l, r) = p.edge_perspective();
        assert_eq!(l.coefficient(2), 1.0);
        assert_eq!(r.coefficient(5), 1.0);
    }

    #[test]
    fn parses_irregular_and_whitespace() {
        let p = DegreePair::parse("l:0.5@2,0.5@3;r:1@6").unwrap();
        assert_eq!(p.lambda().fraction(2), 0.5);
        let q = DegreePair::from_sides("0.5@2 + 0.5@3", "1@6").unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn reports_columns() {
        match DegreePair::parse("L: 1.0@x ; R: 1@6") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 8),
            other => panic!("{other:?}"),
        }
        match DegreePair::parse("L: 1.0@3 R: 1@6") {
            Err(Error::Parse { .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(DegreePair::parse("L: 1@1 ; R: 1@6"), Err(Error::InvalidDegrees(_))));
    }

    #[test]
    fn display_round_trip() {
        let p = DegreePair::parse("L: 0.25@2 0.75@4 ; R: 1@7").unwrap();
        assert_eq!(DegreePair::parse(&p.to_string()).unwrap(), p);
    }
}
