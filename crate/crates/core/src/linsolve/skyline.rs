//! Envelope (skyline) Cholesky factorization under a reverse Cuthill–McKee ordering.
//!
//! FE stiffness matrices from structured meshes have a narrow profile once
//! renumbered, so the envelope stores `O(n · bandwidth)` entries and factors in
//! `O(n · bandwidth²)`.

use std::collections::VecDeque;

use super::csr::CsrMatrix;
use super::LinSolveError;

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adjacency: Vec<Vec<usize>> = (0..n).map(|r| a.row(r).map(|(c, _)| c).filter(|&c| c != r).collect()).collect();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adjacency, &degree);
        let start = if visited[start] { seed } else { start };
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// George–Liu heuristic: repeatedly jump to a minimum-degree node of the last BFS level.
fn pseudo_peripheral(seed: usize, adjacency: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let mut eccentricity = 0;
    for _ in 0..8 {
        let levels = bfs_levels(root, adjacency);
        let depth = levels.len();
        let last = levels.last().expect("bfs yields at least the root level");
        let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).expect("non-empty level");
        if depth <= eccentricity {
            break;
        }
        eccentricity = depth;
        root = candidate;
    }
    root
}

fn bfs_levels(root: usize, adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::new();
    seen.insert(root);
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adjacency[v] {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

/// Lower-triangular envelope factor `P A Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

/// Pivots below this fraction of the original diagonal are treated as zero.
const PIVOT_RELATIVE_FLOOR: f64 = 1e-12;

impl SkylineCholesky {
    pub fn factorize(a: &CsrMatrix) -> Result<Self, LinSolveError> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for old_r in 0..n {
            let r = inv[old_r];
            for (old_c, _) in a.row(old_r) {
                let c = inv[old_c];
                if c < r {
                    first[r] = first[r].min(c);
                } else if r < c {
                    first[c] = first[c].min(r);
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offsets[n]];
        let mut diag = vec![0.0; n];
        for old_r in 0..n {
            let r = inv[old_r];
            for (old_c, v) in a.row(old_r) {
                let c = inv[old_c];
                if c <= r {
                    values[offsets[r] + (c - first[r])] += v;
                }
                if c == r {
                    diag[r] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = offsets[j];
                let mut s = values[row_i + (j - fi)];
                let li = &values[row_i + (start - fi)..row_i + (j - fi)];
                let lj = &values[row_j + (start - fj)..row_j + (j - fj)];
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                values[row_i + (j - fi)] = s / values[row_j + (j - fj)];
            }
            let li = &values[row_i..row_i + (i - fi)];
            let pivot = values[row_i + (i - fi)] - li.iter().map(|x| x * x).sum::<f64>();
            let floor = PIVOT_RELATIVE_FLOOR * diag[i].abs();
            if !(pivot > floor) || !pivot.is_finite() {
                return Err(LinSolveError::NotPositiveDefinite { pivot_index: perm[i], pivot });
            }
            values[row_i + (i - fi)] = pivot.sqrt();
        }
        Ok(Self { perm, first, offsets, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries (envelope size).
    pub fn envelope_len(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = Pb
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        // Lᵀ x = y, column-oriented sweep over rows of L
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
