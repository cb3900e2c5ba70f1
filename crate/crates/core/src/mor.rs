//! One-sided Krylov reduction of Galerkin systems and the orthonormal basis
//! it induces on the parameter space.
//!
//! A reduced system with output matrix `C̄` (m × r) represents the random
//! output as `Σ_j v̄_j(t) Ψ_j(p)` with `Ψ_j = Σ_i c̄_ij Φ_i`. The thin SVD
//! `C̄ = U S Q` turns the `Ψ_j` into an orthonormal family `Ψ*_ℓ = Σ_i u_iℓ Φ_i`
//! whose coefficients are `s_ℓ (Q v̄)_ℓ`; dropping the smallest singular
//! values deflates the representation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{eval_basis, BasisSpec};
use crate::descriptor::{trapezoid_l2, DescriptorSystem, ShiftedFactor, Storage};
use crate::error::{Error, Result};
use crate::galerkin::GalerkinSystem;
use crate::sparse::CscMatrix;

/// Relative norm below which a new Krylov direction counts as dependent.
pub const BREAKDOWN_TOL: f64 = 1e-14;
/// Singular value thresholds used for deflation sweeps by default.
pub const DEFAULT_DEFLATION_THRESHOLDS: [f64; 3] = [1e-4, 1e-8, 1e-12];

fn factor_shift(sys: &DescriptorSystem, s0: f64) -> Result<ShiftedFactor<f64>> {
    if !s0.is_finite() {
        return Err(Error::Parameter(format!("expansion point must be finite, got {s0}")));
    }
    sys.factor_shifted(s0).map_err(|e| match e {
        Error::PoleProximity { condition, .. } => Error::Shift { s0, condition },
        other => other,
    })
}

/// Orthonormal Krylov basis of `span{b, Kb, …}` with
/// `K = (s0 E − A)⁻¹ E` and `b = (s0 E − A)⁻¹ B`, together with the projected
/// matrices of the largest subspace; reduced systems of any smaller order
/// are leading sub-blocks.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub s0: f64,
    /// `N × r_max` with orthonormal columns.
    pub t: DMatrix<f64>,
    /// Set when the space stopped growing before the requested size.
    pub breakdown: bool,
    pub requested: usize,
    e_r: DMatrix<f64>,
    a_r: DMatrix<f64>,
    b_r: DMatrix<f64>,
    c_r: DMatrix<f64>,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Builds the Krylov basis up to dimension `r_max` (modified Gram–Schmidt
/// with a second full pass) using one factorization of `s0 E − A`.
pub fn krylov_basis(gsys: &GalerkinSystem, s0: f64, r_max: usize) -> Result<KrylovBasis> {
    let sys = gsys.system();
    sys.require_siso()?;
    let big_n = sys.n();
    if r_max == 0 || r_max > big_n {
        return Err(Error::Parameter(format!("reduced order must lie in 1..={big_n}, got {r_max}")));
    }
    let lu = factor_shift(sys, s0)?;
    let b = lu.solve(&sys.b().column::<f64>(0));
    let nb = norm(&b);
    if nb == 0.0 {
        return Err(Error::Parameter("input matrix is zero; the Krylov space is empty".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![b.iter().map(|x| x / nb).collect()];
    let mut breakdown = false;
    while columns.len() < r_max {
        let last = columns.last().expect("nonempty");
        let mut w = lu.solve(&sys.e().apply(last));
        let before = norm(&w);
        for _ in 0..2 {
            for v in &columns {
                let h = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= h * y);
            }
        }
        let after = norm(&w);
        if !(after > BREAKDOWN_TOL * before) || after == 0.0 {
            breakdown = true;
            break;
        }
        w.iter_mut().for_each(|x| *x /= after);
        columns.push(w);
    }
    let r = columns.len();
    let t = DMatrix::from_fn(big_n, r, |i, j| columns[j][i]);
    let apply_cols = |m: &CscMatrix<f64>| {
        let rows = m.nrows();
        let cols: Vec<Vec<f64>> = columns.iter().map(|c| m.apply(c)).collect();
        DMatrix::from_fn(rows, r, |i, j| cols[j][i])
    };
    let tt = t.transpose();
    let e_r = &tt * apply_cols(sys.e());
    let a_r = &tt * apply_cols(sys.a());
    let b_r = &tt * sys.b().to_dense();
    let c_r = apply_cols(sys.c());
    Ok(KrylovBasis {
        s0,
        t,
        breakdown,
        requested: r_max,
        e_r,
        a_r,
        b_r,
        c_r,
    })
}

impl KrylovBasis {
    pub fn dim(&self) -> usize {
        self.t.ncols()
    }

    /// Reduced system of order `r` (at most the achieved dimension).
    pub fn project(&self, r: usize) -> Result<ReducedSystem> {
        if r == 0 || r > self.dim() {
            return Err(Error::Parameter(format!(
                "reduced order must lie in 1..={}, got {r}",
                self.dim()
            )));
        }
        let e = self.e_r.view((0, 0), (r, r)).into_owned();
        let a = self.a_r.view((0, 0), (r, r)).into_owned();
        let b = self.b_r.rows(0, r).into_owned();
        let c = self.c_r.columns(0, r).into_owned();
        let system = DescriptorSystem::new(
            CscMatrix::from_dense(&e),
            CscMatrix::from_dense(&a),
            CscMatrix::from_dense(&b),
            CscMatrix::from_dense(&c),
        )?
        .with_storage(Storage::Dense);
        Ok(ReducedSystem {
            system,
            t: self.t.columns(0, r).into_owned(),
            s0: self.s0,
            breakdown: self.breakdown && r == self.dim(),
            c_bar: c,
        })
    }
}

/// Reduced system `(TᵀÊT, TᵀÂT, TᵀB̂, ĈT)` with `m` outputs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub system: DescriptorSystem,
    /// Projection matrix (left and right).
    pub t: DMatrix<f64>,
    pub s0: f64,
    pub breakdown: bool,
    c_bar: DMatrix<f64>,
}

impl ReducedSystem {
    pub fn r(&self) -> usize {
        self.t.ncols()
    }

    /// `C̄` as a dense `m × r` matrix.
    pub fn c_bar(&self) -> &DMatrix<f64> {
        &self.c_bar
    }
}

/// One-sided Arnoldi reduction to order `r` at the real point `s0`.
pub fn arnoldi_reduce(gsys: &GalerkinSystem, s0: f64, r: usize) -> Result<ReducedSystem> {
    let basis = krylov_basis(gsys, s0, r)?;
    let achieved = basis.dim();
    basis.project(achieved)
}

/// Taylor coefficients of `H` at `s0`: `H(s0 + σ) = Σ_k σᵏ M_k` with
/// `M_k = (−1)ᵏ C Kᵏ b`. Column `k` holds `M_k` for every output.
pub fn moment_oracle(sys: &DescriptorSystem, s0: f64, k: usize) -> Result<DMatrix<f64>> {
    sys.require_siso()?;
    let lu = factor_shift(sys, s0)?;
    let mut x = lu.solve(&sys.b().column::<f64>(0));
    let mut out = DMatrix::zeros(sys.n_out(), k);
    for j in 0..k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let y = sys.c().apply(&x);
        for (i, v) in y.iter().enumerate() {
            out[(i, j)] = sign * v;
        }
        x = lu.solve(&sys.e().apply(&x));
    }
    Ok(out)
}

/// `Σ_j v̄_j Ψ_j(p) = Φ(p)ᵀ C̄ v̄`.
pub fn reduced_output_surrogate(rsys: &ReducedSystem, vbar: &[f64], spec: &BasisSpec, p: &[f64]) -> Result<f64> {
    let c = rsys.c_bar();
    if vbar.len() != c.ncols() || c.nrows() != spec.len() {
        return Err(Error::Shape(format!(
            "C̄ is {}x{}, got {} coefficients and a basis of size {}",
            c.nrows(),
            c.ncols(),
            vbar.len(),
            spec.len()
        )));
    }
    let phi = eval_basis(spec, p)?;
    let w = c * DVector::from_column_slice(vbar);
    Ok(phi.dot(&w))
}

/// Thin SVD factors of `C̄`, restricted to its numerical rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalizedBasis {
    /// `m × k` with orthonormal columns.
    pub u: DMatrix<f64>,
    /// `k` singular values, descending and positive.
    pub singular_values: Vec<f64>,
    /// `k × r` with orthonormal rows.
    pub q: DMatrix<f64>,
    /// Columns of `C̄`.
    pub r: usize,
    /// Set when fewer than `r` singular values are numerically nonzero.
    pub rank_truncated: bool,
    /// Row norms of `u`.
    pub kappa: Vec<f64>,
}

impl OrthonormalizedBasis {
    /// Number of retained singular values.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `Ψ*(p) = Uᵀ Φ(p)`.
    pub fn psi_star(&self, spec: &BasisSpec, p: &[f64]) -> Result<DVector<f64>> {
        if spec.len() != self.u.nrows() {
            return Err(Error::Shape("basis size differs from the rows of U".into()));
        }
        Ok(self.u.transpose() * eval_basis(spec, p)?)
    }

    /// Singular values and κ as CSV.
    pub fn to_csv(&self) -> (String, String) {
        let mut sv = String::from("l,singular_value\n");
        for (l, s) in self.singular_values.iter().enumerate() {
            let _ = writeln!(sv, "{},{:.16e}", l + 1, s);
        }
        let mut kappa = String::from("i,kappa\n");
        for (i, k) in self.kappa.iter().enumerate() {
            let _ = writeln!(kappa, "{},{:.16e}", i, k);
        }
        (sv, kappa)
    }
}

pub fn svd_basis(rsys: &ReducedSystem) -> Result<OrthonormalizedBasis> {
    svd_of(rsys.c_bar())
}

/// Thin SVD of an output matrix with descending singular values; values
/// below `max(m, r)·ε·s_1` are discarded.
pub fn svd_of(c: &DMatrix<f64>) -> Result<OrthonormalizedBasis> {
    let (m, r) = c.shape();
    if r == 0 || m == 0 {
        return Err(Error::Shape("output matrix is empty".into()));
    }
    let svd = c.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return Vᵀ".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s1 = svd.singular_values[order[0]];
    let tol = m.max(r) as f64 * f64::EPSILON * s1;
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&k| svd.singular_values[k] > tol && svd.singular_values[k] > 0.0)
        .collect();
    if keep.is_empty() {
        return Err(Error::Numerical("output matrix is numerically zero".into()));
    }
    let u = DMatrix::from_fn(m, keep.len(), |i, l| u[(i, keep[l])]);
    let q = DMatrix::from_fn(keep.len(), r, |l, j| v_t[(keep[l], j)]);
    let singular_values: Vec<f64> = keep.iter().map(|&k| svd.singular_values[k]).collect();
    let kappa = (0..m).map(|i| u.row(i).norm()).collect();
    Ok(OrthonormalizedBasis {
        rank_truncated: keep.len() < r,
        u,
        singular_values,
        q,
        r,
        kappa,
    })
}

/// `v̄*_ℓ = s_ℓ (Q v̄)_ℓ`.
pub fn transform_coefficients(basis: &OrthonormalizedBasis, vbar: &[f64]) -> Result<Vec<f64>> {
    if vbar.len() != basis.r {
        return Err(Error::Shape(format!(
            "expected {} coefficients, got {}",
            basis.r,
            vbar.len()
        )));
    }
    let qv = &basis.q * DVector::from_column_slice(vbar);
    Ok(basis.singular_values.iter().zip(qv.iter()).map(|(s, x)| s * x).collect())
}

/// Truncation of the orthonormalized representation and its error bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deflation {
    pub threshold: f64,
    /// Retained singular values (`≥ threshold`).
    pub r_prime: usize,
    /// Singular values before truncation.
    pub r: usize,
    /// Largest discarded singular value, zero when nothing is discarded.
    pub s_next: f64,
    /// Pointwise-in-time bound at every trajectory sample.
    pub pointwise: Vec<f64>,
    /// Bound on the space-time norm of the truncation error.
    pub aggregate: f64,
}

impl Deflation {
    pub fn factor(&self) -> f64 {
        ((self.r - self.r_prime) as f64).sqrt() * self.s_next
    }
}

/// Keeps singular values `≥ threshold` and bounds the error for the
/// coefficient trajectory `vbar[k]` sampled with uniform `step`.
pub fn deflate(basis: &OrthonormalizedBasis, threshold: f64, vbar: &[Vec<f64>], step: f64) -> Result<Deflation> {
    let s = &basis.singular_values;
    if !(threshold > 0.0) {
        return Err(Error::Parameter(format!("threshold must be positive, got {threshold}")));
    }
    if threshold > s[0] {
        return Err(Error::Parameter(format!(
            "threshold {threshold:e} exceeds the largest singular value {:e}; nothing would remain",
            s[0]
        )));
    }
    if vbar.iter().any(|v| v.len() != basis.r) {
        return Err(Error::Shape(format!("trajectory entries must have length {}", basis.r)));
    }
    let rank = s.len();
    let r_prime = s.iter().filter(|&&x| x >= threshold).count();
    let s_next = if r_prime < rank { s[r_prime] } else { 0.0 };
    let factor = ((rank - r_prime) as f64).sqrt() * s_next;
    let pointwise = vbar.iter().map(|v| factor * norm(v)).collect();
    let coefficient_l2_sq: f64 = (0..basis.r)
        .map(|j| trapezoid_l2(vbar.iter().map(|v| v[j]), step).powi(2))
        .sum();
    Ok(Deflation {
        threshold,
        r_prime,
        r: rank,
        s_next,
        pointwise,
        aggregate: factor * coefficient_l2_sq.sqrt(),
    })
}

/// `Σ_{ℓ ≤ r′} v̄*_ℓ Ψ*_ℓ(p)`.
pub fn deflated_surrogate(basis: &OrthonormalizedBasis, r_prime: usize, vbar: &[f64], spec: &BasisSpec, p: &[f64]) -> Result<f64> {
    let star = transform_coefficients(basis, vbar)?;
    let psi = basis.psi_star(spec, p)?;
    Ok(star.iter().zip(psi.iter()).take(r_prime).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn scalar() -> DescriptorSystem {
        DescriptorSystem::from_dense(
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn scalar_moments() {
        let m = moment_oracle(&scalar(), 0.0, 2).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((m[(0, 1)] + 1.0).abs() < 1e-15);
        // Finite-difference check of the first derivative of H at 0.
        let h = |s: f64| scalar().transfer_eval(Complex64::new(s, 0.0)).unwrap()[0].re;
        let fd = (h(1e-6) - h(-1e-6)) / 2e-6;
        assert!((fd - m[(0, 1)]).abs() < 1e-8);
    }

    #[test]
    fn zero_input_has_zero_moments() {
        let sys = DescriptorSystem::from_dense(
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, 0.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert_eq!(moment_oracle(&sys, 0.5, 3).unwrap(), DMatrix::zeros(1, 3));
    }

    #[test]
    fn shift_on_a_pole_is_rejected() {
        assert!(matches!(moment_oracle(&scalar(), -1.0, 1), Err(Error::Shift { .. })));
    }

    #[test]
    fn hand_svd() {
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let b = svd_of(&c).unwrap();
        assert!((b.singular_values[0] - 2.0).abs() < 1e-15);
        assert!((b.singular_values[1] - 1.0).abs() < 1e-15);
        assert!((b.kappa[0] - 1.0).abs() < 1e-15);
        assert!((b.kappa[1] - 1.0).abs() < 1e-15);
        assert!(b.kappa[2].abs() < 1e-15);
        let back = &b.u * DMatrix::from_diagonal(&DVector::from_vec(b.singular_values.clone())) * &b.q;
        assert!((back - c).amax() < 1e-14);
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = svd_of(&c).unwrap();
        assert_eq!(b.rank(), 1);
        assert!(b.rank_truncated);
    }

    #[test]
    fn identity_columns_leave_coefficients_alone() {
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = svd_of(&c).unwrap();
        let v = [0.3, -1.2];
        let star = transform_coefficients(&b, &v).unwrap();
        // Equal up to the sign convention of the singular vectors.
        let lhs = &b.u * DVector::from_vec(star);
        assert!((lhs - &c * DVector::from_row_slice(&v)).amax() < 1e-15);
        assert_eq!(transform_coefficients(&b, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn deflation_by_formula() {
        let basis = OrthonormalizedBasis {
            u: DMatrix::identity(3, 3),
            singular_values: vec![2.0, 1.0, 1e-9],
            q: DMatrix::identity(3, 3),
            r: 3,
            rank_truncated: false,
            kappa: vec![1.0; 3],
        };
        let traj = vec![vec![0.0, 0.0, 0.0], vec![3.0, 4.0, 0.0]];
        let d = deflate(&basis, 1e-4, &traj, 0.1).unwrap();
        assert_eq!(d.r_prime, 2);
        assert!((d.pointwise[1] - 5e-9).abs() < 1e-22);
        let none = deflate(&basis, 1e-10, &traj, 0.1).unwrap();
        assert_eq!(none.r_prime, 3);
        assert_eq!(none.pointwise, vec![0.0, 0.0]);
        assert!(matches!(deflate(&basis, 3.0, &traj, 0.1), Err(Error::Parameter(_))));
    }
}
