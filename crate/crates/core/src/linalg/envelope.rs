//! Envelope (profile) Cholesky factorization of sparse symmetric positive
//! definite matrices, with a reverse Cuthill–McKee ordering to shrink the
//! profile.
//!
//! Row `i` of the permuted lower triangle is stored densely from its first
//! structural nonzero column `first[i]` through the diagonal. Fill in a
//! Cholesky factor never leaves the envelope, so the factor reuses the storage.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EnvelopeStructure {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
}

impl EnvelopeStructure {
    /// Builds the structure for a symmetric pattern given as adjacency lists
    /// (diagonal implied, self loops ignored).
    pub fn from_adjacency(adj: &[Vec<usize>]) -> Self {
        let perm = reverse_cuthill_mckee(adj);
        Self::with_ordering(adj, perm)
    }

    /// Same as [`from_adjacency`](Self::from_adjacency) but keeps the given order.
    pub fn with_ordering(adj: &[Vec<usize>], perm: Vec<usize>) -> Self {
        let n = adj.len();
        assert_eq!(perm.len(), n);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, nbrs) in adj.iter().enumerate() {
            let i = iperm[old];
            for &o in nbrs {
                let j = iperm[o];
                if j < i && j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        start.push(0);
        for i in 0..n {
            acc += i - first[i] + 1;
            start.push(acc);
        }
        EnvelopeStructure {
            n,
            perm,
            iperm,
            first,
            start,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries of the lower triangle (the profile).
    pub fn profile(&self) -> usize {
        self.start[self.n]
    }

    /// Largest distance from a row's first stored column to its diagonal.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).map(|i| i - self.first[i]).max().unwrap_or(0)
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.profile()]
    }

    /// Storage slot of entry `(row, col)` in original numbering, if inside the envelope.
    #[inline]
    pub fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let (mut i, mut j) = (self.iperm[row], self.iperm[col]);
        if j > i {
            core::mem::swap(&mut i, &mut j);
        }
        (j >= self.first[i]).then(|| self.start[i] + j - self.first[i])
    }

    /// Adds `value` at `(row, col)`; callers add each off-diagonal pair once.
    #[inline]
    pub fn add(&self, values: &mut [f64], row: usize, col: usize, value: f64) {
        let k = self
            .slot(row, col)
            .expect("entry outside the symmetric envelope");
        values[k] += value;
    }

    /// `y = A x` for a matrix stored in this envelope (original numbering).
    pub fn mul(&self, values: &[f64], x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let oi = self.perm[i];
            let row = &values[self.start[i]..self.start[i + 1]];
            let fi = self.first[i];
            for (off, &a) in row.iter().enumerate() {
                let j = fi + off;
                let oj = self.perm[j];
                if j == i {
                    y[oi] += a * x[oi];
                } else {
                    y[oi] += a * x[oj];
                    y[oj] += a * x[oi];
                }
            }
        }
    }

    pub fn diagonal_max(&self, values: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| values[self.start[i + 1] - 1].abs())
            .fold(0.0, f64::max)
    }
}

/// Cholesky factor `P A P^T = L L^T` held in envelope storage.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    structure: Arc<EnvelopeStructure>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors in place. On a nonpositive pivot the diagonal is shifted by
    /// `1e-12 · max|diag|` and the factorization retried once.
    pub fn factor(structure: Arc<EnvelopeStructure>, values: Vec<f64>) -> Result<Self> {
        let shift = 1e-12 * structure.diagonal_max(&values);
        let mut work = values.clone();
        match factor_in_place(&structure, &mut work) {
            Ok(()) => Ok(EnvelopeCholesky {
                structure,
                values: work,
            }),
            Err(_) => {
                let mut work = values;
                for i in 0..structure.n {
                    work[structure.start[i + 1] - 1] += shift;
                }
                factor_in_place(&structure, &mut work)?;
                Ok(EnvelopeCholesky {
                    structure,
                    values: work,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.structure.n
    }

    /// Solves `A x = b` in place (original numbering).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.structure.n;
        let mut y: Vec<f64> = self.structure.perm.iter().map(|&o| b[o]).collect();
        self.forward(&mut y);
        self.backward(&mut y);
        for i in 0..n {
            b[self.structure.perm[i]] = y[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `‖L^{-1} P b‖²`, i.e. `b^T A^{-1} b` through a single triangular solve.
    pub fn half_solve_norm_sq(&self, b: &[f64]) -> f64 {
        let mut y: Vec<f64> = self.structure.perm.iter().map(|&o| b[o]).collect();
        self.forward(&mut y);
        y.iter().map(|v| v * v).sum()
    }

    fn forward(&self, y: &mut [f64]) {
        let s = &self.structure;
        for i in 0..s.n {
            let row = &self.values[s.start[i]..s.start[i + 1]];
            let fi = s.first[i];
            let len = row.len() - 1;
            let acc: f64 = row[..len].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - acc) / row[len];
        }
    }

    fn backward(&self, y: &mut [f64]) {
        let s = &self.structure;
        for i in (0..s.n).rev() {
            let row = &self.values[s.start[i]..s.start[i + 1]];
            let fi = s.first[i];
            let len = row.len() - 1;
            let xi = y[i] / row[len];
            y[i] = xi;
            for (l, v) in row[..len].iter().zip(&mut y[fi..i]) {
                *v -= l * xi;
            }
        }
    }
}

fn factor_in_place(s: &EnvelopeStructure, values: &mut [f64]) -> Result<()> {
    for i in 0..s.n {
        let fi = s.first[i];
        let si = s.start[i];
        for j in fi..i {
            let fj = s.first[j];
            let sj = s.start[j];
            let k0 = fi.max(fj);
            let mut acc = 0.0;
            for k in k0..j {
                acc += values[si + k - fi] * values[sj + k - fj];
            }
            let ljj = values[s.start[j + 1] - 1];
            values[si + j - fi] = (values[si + j - fi] - acc) / ljj;
        }
        let diag_slot = s.start[i + 1] - 1;
        let row = &values[si..diag_slot];
        let acc: f64 = row.iter().map(|v| v * v).sum();
        let d = values[diag_slot] - acc;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Factorization {
                pivot: s.perm[i],
                value: d,
            });
        }
        values[diag_slot] = d.sqrt();
    }
    Ok(())
}

/// Reverse Cuthill–McKee ordering; returns `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut scratch: Vec<usize> = Vec::new();

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .unwrap();
        let root = pseudo_peripheral(adj, &degree, seed, &visited);
        visited[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            scratch.clear();
            scratch.extend(adj[v].iter().copied().filter(|&w| w != v && !visited[w]));
            scratch.sort_by_key(|&w| (degree[w], w));
            scratch.dedup();
            for &w in &scratch {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize, blocked: &[bool]) -> usize {
    let mut root = seed;
    let mut best_ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(adj, root, blocked);
        let ecc = levels.iter().filter_map(|&l| l).max().unwrap_or(0);
        if ecc <= best_ecc && best_ecc > 0 {
            break;
        }
        best_ecc = ecc;
        let next = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(ecc))
            .map(|(v, _)| v)
            .min_by_key(|&v| (degree[v], v))
            .unwrap();
        if next == root {
            break;
        }
        root = next;
    }
    root
}

fn bfs_levels(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    level[root] = Some(0);
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap();
        for &w in &adj[v] {
            if !blocked[w] && level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type Triplets = Vec<(usize, usize, f64)>;

    fn grid_laplacian(k: usize) -> (Vec<Vec<usize>>, Triplets) {
        let n = k * k;
        let mut adj = vec![Vec::new(); n];
        let mut entries = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let v = i * k + j;
                entries.push((v, v, 4.0));
                if j + 1 < k {
                    adj[v].push(v + 1);
                    adj[v + 1].push(v);
                    entries.push((v, v + 1, -1.0));
                }
                if i + 1 < k {
                    adj[v].push(v + k);
                    adj[v + k].push(v);
                    entries.push((v, v + k, -1.0));
                }
            }
        }
        (adj, entries)
    }

    #[test]
    fn solves_grid_laplacian() {
        let (adj, entries) = grid_laplacian(7);
        let s = Arc::new(EnvelopeStructure::from_adjacency(&adj));
        let mut vals = s.zeros();
        for &(i, j, v) in &entries {
            s.add(&mut vals, i, j, v);
        }
        let b: Vec<f64> = (0..49).map(|i| (i as f64 * 0.37).sin()).collect();
        let chol = EnvelopeCholesky::factor(s.clone(), vals.clone()).unwrap();
        let x = chol.solve(&b);
        let mut r = vec![0.0; 49];
        s.mul(&vals, &x, &mut r);
        for i in 0..49 {
            assert_relative_eq!(r[i], b[i], epsilon = 1e-12);
        }
        let q: f64 = x.iter().zip(&b).map(|(a, c)| a * c).sum();
        assert_relative_eq!(chol.half_solve_norm_sq(&b), q, max_relative = 1e-12);
    }

    #[test]
    fn rcm_is_a_permutation_and_keeps_grid_band() {
        let (adj, _) = grid_laplacian(10);
        let perm = reverse_cuthill_mckee(&adj);
        let mut seen = perm.clone();
        seen.sort();
        assert_eq!(seen, (0..100).collect::<Vec<_>>());
        let s = EnvelopeStructure::from_adjacency(&adj);
        assert!(s.bandwidth() <= 11, "bandwidth {}", s.bandwidth());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let adj = vec![vec![1], vec![0]];
        let s = Arc::new(EnvelopeStructure::from_adjacency(&adj));
        let mut vals = s.zeros();
        s.add(&mut vals, 0, 0, 1.0);
        s.add(&mut vals, 1, 1, 1.0);
        s.add(&mut vals, 0, 1, 2.0);
        assert!(matches!(
            EnvelopeCholesky::factor(s, vals),
            Err(Error::Factorization { .. })
        ));
    }
}
