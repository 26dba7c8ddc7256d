//! Dense bit-packed matrices over GF(2).

use crate::ensembles::TannerGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: Vec<Vec<u64>>,
    cols: usize,
}

#[inline]
fn words(cols: usize) -> usize {
    cols.div_ceil(64)
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Gf2Matrix { rows: vec![vec![0; words(cols)]; rows], cols }
    }

    /// Parity-check matrix of a graph: entry `(a, i)` is the parity of the
    /// number of edges between check `a` and variable `i`.
    pub fn from_graph(graph: &TannerGraph) -> Self {
        let mut m = Gf2Matrix::zeros(graph.n_checks(), graph.n_var);
        for (a, c) in graph.checks.iter().enumerate() {
            for &i in c {
                m.toggle(a, i as usize);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>, cols: usize) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == words(cols)));
        Gf2Matrix { rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.rows[r]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r][c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn toggle(&mut self, r: usize, c: usize) {
        self.rows[r][c / 64] ^= 1 << (c % 64);
    }

    pub fn push_row(&mut self, row: Vec<u64>) {
        debug_assert_eq!(row.len(), words(self.cols));
        self.rows.push(row);
    }

    /// Unit row `e_c`.
    pub fn unit_row(&self, c: usize) -> Vec<u64> {
        let mut r = vec![0; words(self.cols)];
        r[c / 64] |= 1 << (c % 64);
        r
    }

    /// Submatrix on the given columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Gf2Matrix {
        let mut out = Gf2Matrix::zeros(self.n_rows(), cols.len());
        for (r, row) in self.rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                if row[c / 64] >> (c % 64) & 1 == 1 {
                    out.rows[r][j / 64] |= 1 << (j % 64);
                }
            }
        }
        out
    }

    /// Submatrix on the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Gf2Matrix {
        Gf2Matrix { rows: rows.iter().map(|&r| self.rows[r].clone()).collect(), cols: self.cols }
    }

    /// Reduce in place to reduced row echelon form; returns the pivot columns.
    pub fn reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows.len() {
                break;
            }
            let (w, b) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (r..self.rows.len()).find(|&i| self.rows[i][w] & b != 0) else {
                continue;
            };
            self.rows.swap(r, p);
            let pivot = std::mem::take(&mut self.rows[r]);
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != r && row[w] & b != 0 {
                    for (x, y) in row[w..].iter_mut().zip(&pivot[w..]) {
                        *x ^= y;
                    }
                }
            }
            self.rows[r] = pivot;
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce().len()
    }

    /// Basis of `{x : M x = 0}`, each vector bit-packed over the columns.
    pub fn null_space(&self) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let pivots = m.reduce();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for f in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u64; words(self.cols)];
            v[f / 64] |= 1 << (f % 64);
            for (r, &p) in pivots.iter().enumerate() {
                if m.get(r, f) {
                    v[p / 64] |= 1 << (p % 64);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// `M x` for a bit-packed `x`.
    pub fn mul_vec(&self, x: &[u64]) -> Vec<bool> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn random(rows: usize, cols: usize, seed: u64) -> Gf2Matrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = Gf2Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.random_bool(0.3) {
                    m.toggle(r, c);
                }
            }
        }
        m
    }

    /// Rank by brute force: the log of the number of distinct row combinations.
    fn rank_by_span(m: &Gf2Matrix) -> usize {
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..1 << m.n_rows() {
            let mut v = vec![0u64; words(m.n_cols())];
            for r in 0..m.n_rows() {
                if mask >> r & 1 == 1 {
                    for (x, y) in v.iter_mut().zip(m.row(r)) {
                        *x ^= y;
                    }
                }
            }
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn double_edges_cancel() {
        let g = TannerGraph::new(3, vec![vec![0, 0, 1], vec![2, 2]]).unwrap();
        let h = Gf2Matrix::from_graph(&g);
        assert!(!h.get(0, 0) && h.get(0, 1) && !h.get(0, 2));
        assert_eq!(h.rank(), 1);
    }

    #[test]
    fn rank_matches_span_oracle() {
        for seed in 0..30 {
            let m = random(8, 70, seed);
            assert_eq!(m.rank(), rank_by_span(&m));
        }
    }

    #[test]
    fn null_space_is_annihilated() {
        let m = random(20, 130, 7);
        let basis = m.null_space();
        assert_eq!(basis.len(), 130 - m.rank());
        for v in &basis {
            assert!(m.mul_vec(v).iter().all(|&b| !b));
        }
    }

    proptest! {
        #[test]
        fn rank_invariant_under_row_shuffle(seed in 0u64..1000, rows in 1usize..40, cols in 1usize..150) {
            let m = random(rows, cols, seed);
            let mut order: Vec<usize> = (0..rows).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1));
            prop_assert_eq!(m.rank(), m.select_rows(&order).rank());
            prop_assert!(m.rank() <= rows.min(cols));
        }
    }
}
