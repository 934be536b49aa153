//! Symmetric positive definite sparse solves: a reverse Cuthill-McKee ordered skyline
//! Cholesky factorization and a Jacobi-preconditioned conjugate gradient fallback.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual every solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Direct factorization is used up to this many unknowns.
pub const DIRECT_LIMIT: usize = 200_000;

/// Largest skyline (stored entries of the factor) the automatic mode accepts.
const PROFILE_LIMIT: usize = 40_000_000;

/// Largest flop estimate `Σ w_i²` the automatic mode accepts for a direct solve.
const WORK_LIMIT: f64 = 4e9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    #[default]
    Auto,
    Direct,
    Cg,
}

/// Symmetric sparse matrix in compressed rows; both triangles are stored.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymMatrix {
    /// Builds from rows given as `(column, value)` lists covering both triangles.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        SymMatrix {
            n,
            offsets,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `‖Ax - b‖_∞ / max(‖b‖_∞, ‖A‖_∞ ‖x‖_∞)`; infinite when `x` is not finite.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        let r = ax
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let norm_a = (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let norm_x = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let norm_b = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let scale = norm_b.max(norm_a * norm_x);
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    }
}

/// Reverse Cuthill-McKee ordering; `perm[new] = old`.
pub fn rcm_order(a: &SymMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(c, _)| c != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral(a, seed, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(x) = queue.pop_front() {
            order.push(x);
            let mut next: Vec<usize> = a
                .row(x)
                .map(|(c, _)| c)
                .filter(|&c| c != x && !visited[c])
                .collect();
            next.sort_by_key(|&c| (degree[c], c));
            for c in next {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral vertex of the component of `seed` (George-Liu).
fn peripheral(a: &SymMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut start = seed;
    let mut depth = 0;
    for _ in 0..8 {
        let (levels, last) = bfs_levels(a, start);
        if levels <= depth {
            break;
        }
        depth = levels;
        let candidate = last.into_iter().min_by_key(|&v| (degree[v], v)).unwrap();
        if candidate == start {
            break;
        }
        start = candidate;
    }
    start
}

fn bfs_levels(a: &SymMatrix, start: usize) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; a.n];
    level[start] = 0;
    let mut frontier = vec![start];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &x in &frontier {
            for (c, _) in a.row(x) {
                if level[c] == usize::MAX {
                    level[c] = depth + 1;
                    next.push(c);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Skyline Cholesky factor `P A Pᵀ = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    perm: Vec<usize>,
    // first stored column of each row of L (permuted numbering)
    first: Vec<usize>,
    // start of each row inside `data`; the row holds columns first..=i
    start: Vec<usize>,
    data: Vec<f64>,
    pub condition_estimate: f64,
}

/// Profile statistics of `A` under an ordering: stored entries and flop estimate.
fn profile(a: &SymMatrix, perm: &[usize]) -> (Vec<usize>, usize, f64) {
    let n = a.n;
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first = vec![0; n];
    let mut size = 0usize;
    let mut work = 0.0;
    for i in 0..n {
        let f = a.row(perm[i]).map(|(c, _)| inv[c]).filter(|&c| c <= i).min().unwrap_or(i);
        first[i] = f;
        let w = i - f + 1;
        size += w;
        work += (w * w) as f64;
    }
    (first, size, work)
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Cholesky> {
        let perm = rcm_order(a);
        let (first, size, _) = profile(a, &perm);
        Self::factor_with(a, perm, first, size)
    }

    fn factor_with(a: &SymMatrix, perm: Vec<usize>, first: Vec<usize>, size: usize) -> Result<Cholesky> {
        let n = a.n;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for i in 0..n {
            start.push(acc);
            acc += i - first[i] + 1;
        }
        start.push(acc);
        debug_assert_eq!(acc, size);
        let mut data = vec![0.0; size];
        for i in 0..n {
            for (c, v) in a.row(perm[i]) {
                let j = inv[c];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        let diag_a: Vec<f64> = (0..n).map(|i| data[start[i] + i - first[i]]).collect();
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let ri = &data[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &data[start[j] + k0 - fj..start[j] + j - fj];
                let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                let ljj = data[start[j] + j - fj];
                let idx = start[i] + j - fi;
                data[idx] = (data[idx] - dot) / ljj;
            }
            let row = &data[start[i]..start[i] + i - fi];
            let sq: f64 = row.iter().map(|x| x * x).sum();
            let idx = start[i] + i - fi;
            let pivot = data[idx] - sq;
            let scale = diag_a[i].abs().max(f64::MIN_POSITIVE);
            if !(pivot > 1e-14 * scale) {
                return Err(Error::Singular {
                    row: perm[i],
                    pivot,
                    condition: if pivot > 0.0 { scale / pivot } else { f64::INFINITY },
                });
            }
            let l = pivot.sqrt();
            data[idx] = l;
            dmin = dmin.min(pivot);
            dmax = dmax.max(pivot);
        }
        Ok(Cholesky {
            perm,
            first,
            start,
            data,
            condition_estimate: if n == 0 { 1.0 } else { dmax / dmin },
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // L y = Pb
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i] + i - fi];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - dot) / self.data[self.start[i] + i - fi];
        }
        // Lᵀ x = y, column sweep
        for i in (0..n).rev() {
            let fi = self.first[i];
            let d = self.data[self.start[i] + i - fi];
            y[i] /= d;
            let xi = y[i];
            let row = &self.data[self.start[i]..self.start[i] + i - fi];
            for (k, l) in row.iter().enumerate() {
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

/// Outcome of a CG run.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradient on `A x = b`, stopping when
/// `‖r‖₂ ≤ tol · ‖b‖₂`.
pub fn pcg(a: &SymMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.n;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: res,
            });
        }
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Singular {
                row: it,
                pivot: pap,
                condition: f64::INFINITY,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
    }
    if res <= tol {
        return Ok(CgOutcome {
            x,
            iterations: max_iter,
            residual: res,
        });
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// A factored (or CG-backed) SPD system reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct LinearSolver {
    matrix: SymMatrix,
    factor: Option<Cholesky>,
}

impl LinearSolver {
    pub fn new(matrix: SymMatrix, mode: SolverMode) -> Result<Self> {
        let factor = match mode {
            SolverMode::Cg => None,
            SolverMode::Direct => Some(Cholesky::factor(&matrix)?),
            SolverMode::Auto => {
                if matrix.n > DIRECT_LIMIT {
                    None
                } else {
                    let perm = rcm_order(&matrix);
                    let (first, size, work) = profile(&matrix, &perm);
                    if size <= PROFILE_LIMIT && work <= WORK_LIMIT {
                        Some(Cholesky::factor_with(&matrix, perm, first, size)?)
                    } else {
                        None
                    }
                }
            }
        };
        Ok(LinearSolver { matrix, factor })
    }

    pub fn is_direct(&self) -> bool {
        self.factor.is_some()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    /// Solves `A x = b` and returns `x` with its relative residual, which is at most
    /// [`RESIDUAL_TOL`].
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.matrix.n;
        let mut x = match &self.factor {
            Some(f) => f.solve(b),
            None => pcg(&self.matrix, b, None, 1e-13, (20 * n).max(2000))?.x,
        };
        let mut res = self.matrix.relative_residual(&x, b);
        if res > RESIDUAL_TOL {
            // one round of iterative refinement
            let mut ax = vec![0.0; n];
            self.matrix.mul_vec(&x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = match &self.factor {
                Some(f) => f.solve(&r),
                None => pcg(&self.matrix, &r, None, 1e-13, (20 * n).max(2000))?.x,
            };
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
            res = self.matrix.relative_residual(&x, b);
        }
        if res > RESIDUAL_TOL {
            return Err(Error::Residual {
                residual: res,
                tolerance: RESIDUAL_TOL,
            });
        }
        Ok((x, res))
    }
}
