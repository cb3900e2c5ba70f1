//! Compressed sparse column matrices and a direct solver for them.
//!
//! The solver is a left-looking LU factorization (Gilbert–Peierls) with
//! threshold partial pivoting, applied after a minimum-degree column ordering
//! computed on the symmetrized pattern. The ordering is computed once per
//! pattern and reused for every numerical factorization, which is the
//! access pattern of frequency sweeps and Krylov iterations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Field types the solver works over (`f64` and `Complex64`).
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {}

impl<T: ComplexField<RealField = f64> + Copy + Send + Sync> Scalar for T {}

/// Sparse matrix in compressed sparse column layout with sorted row indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix<T = f64> {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CscMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and entries that end up exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, T)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Shape(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|a| (a.1, a.0));

        let mut colptr = vec![0usize; ncols + 1];
        let mut rowind = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != T::zero() {
                rowind.push(i);
                values.push(v);
                colptr[j + 1] += 1;
            }
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Ok(Self {
            nrows,
            ncols,
            colptr,
            rowind,
            values,
        })
    }

    pub fn from_dense(dense: &DMatrix<T>) -> Self {
        let mut triplets = Vec::new();
        for j in 0..dense.ncols() {
            for i in 0..dense.nrows() {
                let v = dense[(i, j)];
                if v != T::zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dense.nrows(), dense.ncols(), &triplets).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowind(&self) -> &[usize] {
        &self.rowind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let col = &self.rowind[self.colptr[j]..self.colptr[j + 1]];
        match col.binary_search(&i) {
            Ok(pos) => self.values[self.colptr[j] + pos],
            Err(_) => T::zero(),
        }
    }

    /// Iterates stored entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowind[p], j, self.values[p]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut out = DMatrix::from_element(self.nrows, self.ncols, T::zero());
        for (i, j, v) in self.triplets() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<(usize, usize, T)> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices in range")
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in sparse mat-vec");
        let mut y = vec![T::zero(); self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == T::zero() {
                continue;
            }
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowind[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// `self * dense`.
    pub fn mul_dense(&self, dense: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(dense.nrows(), self.ncols, "dimension mismatch in sparse mat-mat");
        let mut out = DMatrix::from_element(self.nrows, dense.ncols(), T::zero());
        for c in 0..dense.ncols() {
            for j in 0..self.ncols {
                let xj = dense[(j, c)];
                if xj == T::zero() {
                    continue;
                }
                for p in self.colptr[j]..self.colptr[j + 1] {
                    out[(self.rowind[p], c)] += self.values[p] * xj;
                }
            }
        }
        out
    }

    /// Submatrix formed by the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut row_map = vec![usize::MAX; self.nrows];
        for (new, &old) in rows.iter().enumerate() {
            row_map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_j, &j) in cols.iter().enumerate() {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let r = row_map[self.rowind[p]];
                if r != usize::MAX {
                    triplets.push((r, new_j, self.values[p]));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &triplets).expect("indices in range")
    }

    /// Copy of the matrix with the listed rows set to zero (structure removed).
    pub fn zero_rows(&self, zero: &[bool]) -> Self {
        let t: Vec<(usize, usize, T)> = self.triplets().filter(|(i, _, _)| !zero[*i]).collect();
        Self::from_triplets(self.nrows, self.ncols, &t).expect("indices in range")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }
}

impl CscMatrix<f64> {
    pub fn to_complex(&self) -> CscMatrix<Complex64> {
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            colptr: self.colptr.clone(),
            rowind: self.rowind.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// `y = self * x` for a vector over any scalar field.
    pub fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in sparse mat-vec");
        let mut y = vec![T::zero(); self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowind[p]] += xj.scale(self.values[p]);
            }
        }
        y
    }

    /// `y = selfᵀ * x` for a vector over any scalar field.
    pub fn apply_transpose<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows, "dimension mismatch in sparse mat-vec");
        (0..self.ncols)
            .map(|j| {
                let mut acc = T::zero();
                for p in self.colptr[j]..self.colptr[j + 1] {
                    acc += x[self.rowind[p]].scale(self.values[p]);
                }
                acc
            })
            .collect()
    }

    /// Column `j` as a dense vector over any scalar field.
    pub fn column<T: Scalar>(&self, j: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.nrows];
        for p in self.colptr[j]..self.colptr[j + 1] {
            out[self.rowind[p]] = T::from_real(self.values[p]);
        }
        out
    }

    /// Kronecker product `left ⊗ right`.
    pub fn kron(left: &CscMatrix<f64>, right: &CscMatrix<f64>) -> CscMatrix<f64> {
        let mut triplets = Vec::with_capacity(left.nnz() * right.nnz());
        for (i, j, a) in left.triplets() {
            for (r, c, b) in right.triplets() {
                triplets.push((i * right.nrows + r, j * right.ncols + c, a * b));
            }
        }
        CscMatrix::from_triplets(left.nrows * right.nrows, left.ncols * right.ncols, &triplets)
            .expect("indices in range")
    }

    pub fn add(&self, other: &CscMatrix<f64>) -> Result<CscMatrix<f64>> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Shape("sparse addition with mismatched shapes".into()));
        }
        let t: Vec<_> = self.triplets().chain(other.triplets()).collect();
        CscMatrix::from_triplets(self.nrows, self.ncols, &t)
    }
}

/// Two matrices `E` and `A` stored on their union pattern so that `s E - A`
/// can be formed without re-sorting, plus a fill-reducing column order.
#[derive(Debug, Clone)]
pub struct ShiftedPattern {
    n: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    e_vals: Vec<f64>,
    a_vals: Vec<f64>,
    order: Vec<usize>,
}

impl ShiftedPattern {
    pub fn new(e: &CscMatrix<f64>, a: &CscMatrix<f64>) -> Result<Self> {
        let n = e.nrows();
        if e.ncols() != n || a.nrows() != n || a.ncols() != n {
            return Err(Error::Shape("E and A must be square of equal size".into()));
        }
        let mut colptr = vec![0usize; n + 1];
        let mut rowind = Vec::with_capacity(e.nnz() + a.nnz());
        let mut e_vals = Vec::with_capacity(e.nnz() + a.nnz());
        let mut a_vals = Vec::with_capacity(e.nnz() + a.nnz());
        for j in 0..n {
            let (mut pe, pe_end) = (e.colptr[j], e.colptr[j + 1]);
            let (mut pa, pa_end) = (a.colptr[j], a.colptr[j + 1]);
            while pe < pe_end || pa < pa_end {
                let re = if pe < pe_end { e.rowind[pe] } else { usize::MAX };
                let ra = if pa < pa_end { a.rowind[pa] } else { usize::MAX };
                let row = re.min(ra);
                rowind.push(row);
                if re == row {
                    e_vals.push(e.values[pe]);
                    pe += 1;
                } else {
                    e_vals.push(0.0);
                }
                if ra == row {
                    a_vals.push(a.values[pa]);
                    pa += 1;
                } else {
                    a_vals.push(0.0);
                }
            }
            colptr[j + 1] = rowind.len();
        }
        let order = minimum_degree(n, &colptr, &rowind);
        Ok(Self {
            n,
            colptr,
            rowind,
            e_vals,
            a_vals,
            order,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Factorizes `s E - A`.
    pub fn factor<T: Scalar>(&self, s: T) -> Result<SparseLu<T>> {
        let values: Vec<T> = self
            .e_vals
            .iter()
            .zip(&self.a_vals)
            .map(|(&e, &a)| s * T::from_real(e) - T::from_real(a))
            .collect();
        SparseLu::factor(self.n, &self.colptr, &self.rowind, &values, &self.order, 0.1)
    }
}

/// Minimum-degree ordering of the pattern of `M + Mᵀ` (diagonal ignored),
/// computed on the explicit elimination graph. Ties go to the lowest index,
/// so the result is deterministic.
pub fn minimum_degree(n: usize, colptr: &[usize], rowind: &[usize]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for &i in &rowind[colptr[j]..colptr[j + 1]] {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();

    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        let clique = std::mem::take(&mut adj[v]);
        for &u in &clique {
            // adj[u] <- (adj[u] ∪ clique) \ {u, v}
            merged.clear();
            let old = &adj[u];
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < clique.len() {
                let x = if a < old.len() { old[a] } else { usize::MAX };
                let y = if b < clique.len() { clique[b] } else { usize::MAX };
                let next = x.min(y);
                if x == next {
                    a += 1;
                }
                if y == next {
                    b += 1;
                }
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    order
}

/// LU factors `P A Q = L U` of a sparse square matrix.
#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    l_colptr: Vec<usize>,
    l_rowind: Vec<usize>,
    l_values: Vec<T>,
    u_colptr: Vec<usize>,
    u_rowind: Vec<usize>,
    u_values: Vec<T>,
    /// Row permutation: original row `i` becomes pivot row `pinv[i]`.
    pinv: Vec<usize>,
    /// Column order.
    q: Vec<usize>,
    pivot_ratio: f64,
}

const UNSET: usize = usize::MAX;

impl<T: Scalar> SparseLu<T> {
    /// Factorizes the `n×n` CSC matrix given by raw arrays using column
    /// order `q`. A diagonal entry is preferred as pivot when its magnitude is
    /// at least `tol` times the column maximum.
    pub fn factor(
        n: usize,
        colptr: &[usize],
        rowind: &[usize],
        values: &[T],
        q: &[usize],
        tol: f64,
    ) -> Result<Self> {
        let cap = 4 * values.len() + n;
        let mut l_colptr = vec![0usize; n + 1];
        let mut l_rowind: Vec<usize> = Vec::with_capacity(cap);
        let mut l_values: Vec<T> = Vec::with_capacity(cap);
        let mut u_colptr = vec![0usize; n + 1];
        let mut u_rowind: Vec<usize> = Vec::with_capacity(cap);
        let mut u_values: Vec<T> = Vec::with_capacity(cap);
        let mut pinv = vec![UNSET; n];
        let mut x = vec![T::zero(); n];
        let mut xi = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut marked = vec![false; n];
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;

        for k in 0..n {
            l_colptr[k] = l_rowind.len();
            u_colptr[k] = u_rowind.len();
            let col = q[k];

            // Reach of column `col` in the graph of L.
            let mut top = n;
            for p in colptr[col]..colptr[col + 1] {
                let start = rowind[p];
                if marked[start] {
                    continue;
                }
                let mut head = 0usize;
                xi[0] = start;
                // `xi[0..=head]` is the DFS stack, `xi[top..]` the output.
                while head != UNSET {
                    let j = xi[head];
                    let jnew = pinv[j];
                    if !marked[j] {
                        marked[j] = true;
                        pstack[head] = if jnew == UNSET { 0 } else { l_colptr[jnew] };
                    }
                    let end = if jnew == UNSET { 0 } else { l_colptr[jnew + 1] };
                    let mut done = true;
                    let mut pp = pstack[head];
                    while pp < end {
                        let i = l_rowind[pp];
                        if !marked[i] {
                            pstack[head] = pp;
                            head += 1;
                            xi[head] = i;
                            done = false;
                            break;
                        }
                        pp += 1;
                    }
                    if done {
                        head = head.wrapping_sub(1);
                        top -= 1;
                        xi[top] = j;
                    }
                }
            }
            for &j in &xi[top..n] {
                marked[j] = false;
            }

            // Sparse triangular solve x = L \ A(:, col).
            for &j in &xi[top..n] {
                x[j] = T::zero();
            }
            for p in colptr[col]..colptr[col + 1] {
                x[rowind[p]] = values[p];
            }
            for idx in top..n {
                let j = xi[idx];
                let jcol = pinv[j];
                if jcol == UNSET {
                    continue;
                }
                let xj = x[j];
                for p in l_colptr[jcol] + 1..l_colptr[jcol + 1] {
                    let r = l_rowind[p];
                    x[r] -= l_values[p] * xj;
                }
            }

            // Pivot search.
            let mut ipiv = UNSET;
            let mut amax = -1.0f64;
            for &i in &xi[top..n] {
                if pinv[i] == UNSET {
                    let t = x[i].modulus();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u_rowind.push(pinv[i]);
                    u_values.push(x[i]);
                }
            }
            if ipiv == UNSET || !(amax > 0.0) || !amax.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix is structurally or numerically singular at pivot {k}"
                )));
            }
            if pinv[col] == UNSET && x[col].modulus() >= amax * tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            let pmod = pivot.modulus();
            max_piv = max_piv.max(pmod);
            min_piv = min_piv.min(pmod);
            u_rowind.push(k);
            u_values.push(pivot);
            pinv[ipiv] = k;
            l_rowind.push(ipiv);
            l_values.push(T::one());
            for &i in &xi[top..n] {
                if pinv[i] == UNSET {
                    l_rowind.push(i);
                    l_values.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
        }
        l_colptr[n] = l_rowind.len();
        u_colptr[n] = u_rowind.len();
        for r in &mut l_rowind {
            *r = pinv[*r];
        }
        Ok(Self {
            n,
            l_colptr,
            l_rowind,
            l_values,
            u_colptr,
            u_rowind,
            u_values,
            pinv,
            q: q.to_vec(),
            pivot_ratio: max_piv / min_piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap lower-bound
    /// style indicator of the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_values.len() + self.u_values.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            for p in self.l_colptr[j] + 1..self.l_colptr[j + 1] {
                y[self.l_rowind[p]] -= self.l_values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let diag = self.u_colptr[j + 1] - 1;
            y[j] /= self.u_values[diag];
            let yj = y[j];
            for p in self.u_colptr[j]..diag {
                y[self.u_rowind[p]] -= self.u_values[p] * yj;
            }
        }
        for k in 0..n {
            b[self.q[k]] = y[k];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn random_sparse(n: usize, density: f64, seed: &mut u64) -> CscMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 0.2 * lcg(seed)));
            for j in 0..n {
                if i != j && lcg(seed) + 0.5 < density {
                    t.push((i, j, lcg(seed)));
                }
            }
        }
        CscMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (1, 0, -1.0)])
            .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn out_of_range_triplet_is_shape_error() {
        assert!(matches!(
            CscMatrix::<f64>::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn lu_solves_random_systems_with_weak_diagonal() {
        let mut seed = 7u64;
        for n in [1usize, 2, 5, 17, 60] {
            let a = random_sparse(n, 0.15, &mut seed);
            let pattern = ShiftedPattern::new(&CscMatrix::zeros(n, n), &a.scale(-1.0)).unwrap();
            let Ok(lu) = pattern.factor(0.0f64) else {
                continue;
            };
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
            let b = a.mul_vec(&x_true);
            let x = lu.solve(&b);
            let dense = a.to_dense();
            let scale = dense.norm() * x_true.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r: f64 = (dense * nalgebra::DVector::from_vec(x.clone())
                - nalgebra::DVector::from_vec(b))
            .norm();
            assert!(r <= 1e-10 * scale.max(1.0), "n={n} residual {r}");
        }
    }

    #[test]
    fn complex_shift_matches_dense_solve() {
        let mut seed = 99u64;
        let n = 30;
        let e = random_sparse(n, 0.05, &mut seed);
        let a = random_sparse(n, 0.1, &mut seed);
        let pattern = ShiftedPattern::new(&e, &a).unwrap();
        let s = Complex64::new(0.3, 2.0);
        let lu = pattern.factor(s).unwrap();
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = lu.solve(&b);
        let m = e.to_complex().to_dense() * s - a.to_complex().to_dense();
        let xd = m.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).norm() < 1e-9 * (1.0 + xd[i].norm()));
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let pattern = ShiftedPattern::new(&CscMatrix::zeros(2, 2), &a).unwrap();
        assert!(pattern.factor(0.0f64).is_err());
    }

    #[test]
    fn minimum_degree_is_a_permutation() {
        let mut seed = 3u64;
        let a = random_sparse(40, 0.1, &mut seed);
        let mut order = minimum_degree(40, a.colptr(), a.rowind());
        order.sort_unstable();
        assert_eq!(order, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn select_and_kron() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let k = CscMatrix::kron(&CscMatrix::identity(2), &a);
        assert_eq!(k.get(3, 2), 2.0);
        assert_eq!(k.get(1, 2), 0.0);
        let s = k.select(&[2, 3], &[2, 3]);
        assert_eq!(s.to_dense(), a.to_dense());
    }
}
