//! Symmetric sparse storage and a profile (skyline) LDLᵀ factorization.
//!
//! Matrices are held in compressed-row form with both triangles stored.
//! The factorization works on the lower profile after a reverse
//! Cuthill-McKee renumbering and does not pivot, so it also handles
//! indefinite matrices with nonzero leading minors and reports their inertia.

use std::collections::VecDeque;

use crate::error::{PlateError, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix by summing duplicate entries. Entries are summed in
    /// the order they appear in `triplets` so the result is reproducible.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(PlateError::Internal(format!("entry ({r}, {c}) outside a {n}x{n} matrix")));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        // bucket by row, keeping input order within each row
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (k, &(r, _, _)) in triplets.iter().enumerate() {
            order[next[r]] = k;
            next[r] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            row.clear();
            row.extend(order[counts[r]..counts[r + 1]].iter().map(|&k| (triplets[k].1, triplets[k].2)));
            // stable sort keeps the summation order of duplicates
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = 0.0;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr[r + 1] = col_idx.len();
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *out = s;
        }
    }

    /// `self + f * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, f: f64) -> Result<CsrMatrix> {
        if self.n != other.n {
            return Err(PlateError::Internal("dimension mismatch in sparse sum".into()));
        }
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, f * v)));
        CsrMatrix::from_triplets(self.n, &t)
    }

    pub fn scaled(&self, f: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= f);
        out
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                t.push((r, c, v));
            }
        }
        t
    }

    /// Keeps the rows and columns listed in `keep` (ascending, renumbered 0..).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = vec![0usize; keep.len() + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            for (c, v) in self.row(old_r) {
                let nc = map[c];
                if nc != usize::MAX {
                    col_idx.push(nc);
                    values.push(v);
                }
            }
            row_ptr[new_r + 1] = col_idx.len();
        }
        CsrMatrix { n: keep.len(), row_ptr, col_idx, values }
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph. `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|r| a.row_ptr[r + 1] - a.row_ptr[r]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut neighbours = Vec::new();
    while order.len() < n {
        // start each component from a pseudo-peripheral node
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        let start = pseudo_peripheral(a, seed, &visited);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(a.row(v).map(|(c, _)| c).filter(|&c| !visited[c]));
            neighbours.sort_by_key(|&c| (degree[c], c));
            for &c in &neighbours {
                if !visited[c] {
                    visited[c] = true;
                    queue.push_back(c);
                }
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, blocked: &[bool]) -> usize {
    let mut node = seed;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (far, depth) = farthest(a, node, blocked);
        if depth <= best_depth {
            break;
        }
        best_depth = depth;
        node = far;
    }
    node
}

fn farthest(a: &CsrMatrix, start: usize, blocked: &[bool]) -> (usize, usize) {
    let mut level = vec![usize::MAX; a.n];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        for (c, _) in a.row(v) {
            if level[c] == usize::MAX && !blocked[c] {
                level[c] = level[v] + 1;
                queue.push_back(c);
            }
        }
    }
    // among the deepest level prefer the lowest degree, then index
    let depth = level[last];
    let pick = (0..a.n)
        .filter(|&i| level[i] == depth)
        .min_by_key(|&i| (a.row_ptr[i + 1] - a.row_ptr[i], i))
        .unwrap_or(last);
    (pick, depth)
}

/// `A = P' L D L' P` on the lower profile of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SkylineLdlt {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// first stored column of each row of L (in the permuted numbering)
    first: Vec<usize>,
    /// start of each row in `data`; row i holds columns first[i]..=i
    start: Vec<usize>,
    data: Vec<f64>,
    negative_pivots: usize,
}

impl SkylineLdlt {
    /// Factorizes with an RCM renumbering.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_permutation(a, perm)
    }

    pub fn factor_with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let mut inverse = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_r in 0..n {
            let r = inverse[old_r];
            for (old_c, _) in a.row(old_r) {
                let c = inverse[old_c];
                if c < r && c < first[r] {
                    first[r] = c;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for old_r in 0..n {
            let r = inverse[old_r];
            for (old_c, v) in a.row(old_r) {
                let c = inverse[old_c];
                if c <= r {
                    data[start[r] + (c - first[r])] += v;
                }
            }
        }
        let scale = (0..n).map(|i| data[start[i + 1] - 1].abs()).fold(0.0, f64::max);
        let mut negative_pivots = 0;
        let mut work = vec![0.0; n];
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            // L[i,j] D[j] for j < i via the row-oriented Doolittle update
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = start[j];
                let mut s = data[row_i + (j - fi)];
                for k in lo..j {
                    s -= data[row_i + (k - fi)] * data[row_j + (k - fj)];
                }
                data[row_i + (j - fi)] = s;
            }
            let mut diag = data[row_i + (i - fi)];
            for j in fi..i {
                let dj = data[start[j + 1] - 1];
                let lij_dj = data[row_i + (j - fi)];
                let lij = lij_dj / dj;
                work[j] = lij;
                diag -= lij * lij_dj;
            }
            for j in fi..i {
                data[row_i + (j - fi)] = work[j];
            }
            if !(diag.abs() > 1e-14 * scale) || !diag.is_finite() {
                return Err(PlateError::Singular(format!(
                    "zero pivot {diag:e} at equation {} of {n}",
                    perm[i]
                )));
            }
            if diag < 0.0 {
                negative_pivots += 1;
            }
            data[row_i + (i - fi)] = diag;
        }
        Ok(Self { n, perm, first, start, data, negative_pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of negative eigenvalues of the factorized matrix.
    pub fn negative_pivots(&self) -> usize {
        self.negative_pivots
    }

    pub fn profile_len(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.start[i];
            let mut s = y[i];
            for j in fi..i {
                s -= self.data[row + (j - fi)] * y[j];
            }
            y[i] = s;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi /= self.data[self.start[i + 1] - 1];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.start[i];
            let yi = y[i];
            for j in fi..i {
                y[j] -= self.data[row + (j - fi)] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &old) in self.perm.iter().enumerate() {
            x[old] = y[i];
        }
        x
    }
}
