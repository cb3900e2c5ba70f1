//! Linear time-invariant descriptor systems `E ẋ = A x + B u`, `y = C x`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mtx;
use crate::sparse::{CscMatrix, Scalar, ShiftedPattern, SparseLu};

/// Pivot ratio above which a shifted pencil counts as numerically singular.
pub const CONDITION_LIMIT: f64 = 1e14;
/// Systems up to this dimension default to dense storage.
pub const DENSE_DIM_LIMIT: usize = 64;
/// Default cap for the dense generalized eigensolver.
pub const DEFAULT_DIM_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Storage {
    Dense,
    Sparse,
}

/// The quadruple `(E, A, B, C)`. Immutable once built; factorization
/// metadata is computed lazily and cached.
#[derive(Debug, Clone)]
pub struct DescriptorSystem {
    e: CscMatrix<f64>,
    a: CscMatrix<f64>,
    b: CscMatrix<f64>,
    c: CscMatrix<f64>,
    storage: Storage,
    pattern: OnceLock<ShiftedPattern>,
    dense: OnceLock<(DMatrix<f64>, DMatrix<f64>)>,
}

impl DescriptorSystem {
    pub fn new(
        e: CscMatrix<f64>,
        a: CscMatrix<f64>,
        b: CscMatrix<f64>,
        c: CscMatrix<f64>,
    ) -> Result<Self> {
        let n = e.nrows();
        if e.ncols() != n || a.nrows() != n || a.ncols() != n {
            return Err(Error::Shape(format!(
                "E is {}x{}, A is {}x{}; both must be n x n",
                e.nrows(),
                e.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::Shape(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Shape(format!("C has {} columns, expected {n}", c.ncols())));
        }
        let storage = if n <= DENSE_DIM_LIMIT {
            Storage::Dense
        } else {
            Storage::Sparse
        };
        Ok(Self {
            e,
            a,
            b,
            c,
            storage,
            pattern: OnceLock::new(),
            dense: OnceLock::new(),
        })
    }

    pub fn from_dense(
        e: &DMatrix<f64>,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
    ) -> Result<Self> {
        Self::new(
            CscMatrix::from_dense(e),
            CscMatrix::from_dense(a),
            CscMatrix::from_dense(b),
            CscMatrix::from_dense(c),
        )
    }

    pub fn with_storage(mut self, storage: Storage) -> Self {
        self.storage = storage;
        self
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn n_in(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.c.nrows()
    }

    pub fn storage(&self) -> Storage {
        self.storage
    }

    pub fn e(&self) -> &CscMatrix<f64> {
        &self.e
    }

    pub fn a(&self) -> &CscMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &CscMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &CscMatrix<f64> {
        &self.c
    }

    fn dense_pair(&self) -> &(DMatrix<f64>, DMatrix<f64>) {
        self.dense.get_or_init(|| (self.e.to_dense(), self.a.to_dense()))
    }

    fn pattern(&self) -> Result<&ShiftedPattern> {
        if let Some(p) = self.pattern.get() {
            return Ok(p);
        }
        let p = ShiftedPattern::new(&self.e, &self.a)?;
        Ok(self.pattern.get_or_init(|| p))
    }

    /// Factorizes `sE − A`. Failure or a pivot ratio above
    /// [`CONDITION_LIMIT`] is reported as pole proximity at `s`.
    pub fn factor_shifted<T: Scalar>(&self, s: T) -> Result<ShiftedFactor<T>> {
        let proximity = |condition: f64| Error::PoleProximity {
            re: s.real(),
            im: s.imaginary(),
            condition,
        };
        let factor = match self.storage {
            Storage::Dense => {
                let (e, a) = self.dense_pair();
                let n = self.n();
                let m = DMatrix::from_fn(n, n, |i, j| s.scale(e[(i, j)]) - T::from_real(a[(i, j)]));
                let lu = m.lu();
                let u = lu.u();
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for k in 0..n {
                    let d = u[(k, k)].modulus();
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                let ratio = if n == 0 { 1.0 } else { hi / lo };
                ShiftedFactor::Dense { lu, ratio }
            }
            Storage::Sparse => match self.pattern()?.factor(s) {
                Ok(lu) => ShiftedFactor::Sparse(lu),
                Err(Error::Numerical(_)) => return Err(proximity(f64::INFINITY)),
                Err(other) => return Err(other),
            },
        };
        let ratio = factor.condition();
        if !ratio.is_finite() || ratio > CONDITION_LIMIT {
            return Err(proximity(ratio));
        }
        Ok(factor)
    }

    /// `C (sE − A)⁻¹ B` for a single-input system.
    pub fn transfer_eval(&self, s: Complex64) -> Result<DVector<Complex64>> {
        self.require_siso()?;
        let lu = self.factor_shifted(s)?;
        let x = lu.solve(&self.b.column::<Complex64>(0));
        Ok(DVector::from_vec(self.c.apply(&x)))
    }

    pub(crate) fn require_siso(&self) -> Result<()> {
        if self.n_in() != 1 {
            return Err(Error::Shape(format!(
                "single-input path needs n_in = 1, system has {}",
                self.n_in()
            )));
        }
        Ok(())
    }

    /// Writes `E.mtx`, `A.mtx`, `B.mtx`, `C.mtx` with the given file prefix.
    pub fn write_mtx(&self, dir: &Path, prefix: &str) -> Result<()> {
        for (name, m) in [("E", &self.e), ("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            mtx::write(&dir.join(format!("{prefix}{name}.mtx")), m)?;
        }
        Ok(())
    }

    pub fn read_mtx(dir: &Path, prefix: &str) -> Result<Self> {
        let read = |name: &str| mtx::read(&dir.join(format!("{prefix}{name}.mtx")));
        Self::new(read("E")?, read("A")?, read("B")?, read("C")?)
    }
}

/// `C (sE − A)⁻¹ B`, one solve with right-hand side `B` and one product.
pub fn transfer_eval(sys: &DescriptorSystem, s: Complex64) -> Result<DVector<Complex64>> {
    sys.transfer_eval(s)
}

/// LU factors of a shifted pencil `sE − A`.
pub enum ShiftedFactor<T: Scalar> {
    Dense { lu: LU<T, Dyn, Dyn>, ratio: f64 },
    Sparse(SparseLu<T>),
}

impl<T: Scalar> ShiftedFactor<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        match self {
            ShiftedFactor::Dense { lu, .. } => {
                let rhs = DVector::from_column_slice(b);
                lu.solve(&rhs).map(|x| x.as_slice().to_vec()).unwrap_or_else(|| vec![T::zero(); b.len()])
            }
            ShiftedFactor::Sparse(lu) => lu.solve(b),
        }
    }

    /// Ratio of extreme pivot magnitudes.
    pub fn condition(&self) -> f64 {
        match self {
            ShiftedFactor::Dense { ratio, .. } => *ratio,
            ShiftedFactor::Sparse(lu) => lu.pivot_ratio(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    DenseEig,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperVerdict {
    pub strictly_proper: bool,
    pub confidence: Confidence,
    /// Log-log slope of `|H(iω)|` between the two probe frequencies.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilReport {
    pub finite_eigenvalues: Vec<Complex64>,
    /// Number of infinite eigenvalues; unknown for the sampled method.
    pub infinite_count: Option<usize>,
    pub stable: bool,
    /// False when stability rests on sampled Ritz values only.
    pub verified: bool,
    pub index_at_most_one: Option<bool>,
    pub strictly_proper: ProperVerdict,
    pub method: SpectrumMethod,
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Finite spectrum, stability and properness of `λE − A`.
///
/// Up to `dim_cap` the spectrum comes from a dense eigensolver applied to
/// `(σE − A)⁻¹E`; larger systems get shift-invert Arnoldi Ritz values at
/// points along the imaginary axis and are flagged unverified.
pub fn pencil_spectrum(sys: &DescriptorSystem, dim_cap: usize) -> Result<PencilReport> {
    let n = sys.n();
    let scale_e = sys.e.max_abs();
    let scale_a = sys.a.max_abs();
    let scale = if scale_e > 0.0 && scale_a > 0.0 {
        scale_a / scale_e
    } else {
        1.0
    };

    if n > dim_cap {
        let ritz = sampled_ritz_values(sys, scale)?;
        let stable = ritz.iter().all(|l| l.re < 0.0);
        let omega_scale = ritz.iter().map(|l| l.norm()).fold(1.0, f64::max);
        return Ok(PencilReport {
            strictly_proper: properness(sys, omega_scale),
            finite_eigenvalues: ritz,
            infinite_count: None,
            stable,
            verified: false,
            index_at_most_one: None,
            method: SpectrumMethod::Sampled,
        });
    }

    let (e, a) = sys.dense_pair().clone();
    let mut chosen = None;
    for factor in [0.7316, -1.2345, 3.0417, -0.1732, 11.27, -27.9] {
        let sigma = factor * scale;
        let shifted = &e * sigma - &a;
        let lu = shifted.clone().lu();
        if !lu.is_invertible() {
            continue;
        }
        let sv = singular_values(&shifted);
        if sv.last().copied().unwrap_or(0.0) > 1e-12 * sv[0] {
            chosen = Some((sigma, lu));
            break;
        }
    }
    let (sigma, lu) = chosen.ok_or_else(|| {
        Error::Regularity("λE − A is singular at every trial shift; the pencil is not regular".into())
    })?;
    let k = lu.solve(&e).ok_or_else(|| Error::Numerical("shifted pencil solve failed".into()))?;
    let mut mu: Vec<Complex64> = k.complex_eigenvalues().iter().copied().collect();
    mu.sort_by(|x, y| y.norm().total_cmp(&x.norm()));

    // Rank of E and the index-one test: E − A·Q0 nonsingular, Q0 the
    // orthogonal projector onto ker E.
    let svd = e.clone().svd(false, true);
    let s_max = svd.singular_values.max();
    let tol = 1e-12 * s_max.max(f64::MIN_POSITIVE) * n as f64;
    let v_t = svd.v_t.as_ref().expect("requested V");
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let mut q0 = DMatrix::zeros(n, n);
    for (row, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            let v = v_t.row(row).transpose();
            q0 += &v * v.transpose();
        }
    }
    let g1 = &e - &a * &q0;
    let g_sv = singular_values(&g1);
    let index_one = n == 0 || g_sv.last().copied().unwrap_or(0.0) > 1e-12 * g_sv[0];

    let finite_count = if index_one {
        rank
    } else {
        let top = mu.first().map_or(0.0, |m| m.norm());
        mu.iter().filter(|m| m.norm() > 1e-10 * top).count()
    };
    let finite: Vec<Complex64> = mu[..finite_count]
        .iter()
        .map(|&m| Complex64::new(sigma, 0.0) - m.inv())
        .collect();
    let stable = finite.iter().all(|l| l.re < 0.0);
    let omega_scale = finite.iter().map(|l| l.norm()).fold(1.0, f64::max);
    Ok(PencilReport {
        strictly_proper: properness(sys, omega_scale),
        infinite_count: Some(n - finite_count),
        finite_eigenvalues: finite,
        stable,
        verified: true,
        index_at_most_one: Some(index_one),
        method: SpectrumMethod::DenseEig,
    })
}

// Two-point decay test of |H(iω)| at 1e8 and 1e10 times the spectral scale.
fn properness(sys: &DescriptorSystem, omega_scale: f64) -> ProperVerdict {
    let low = ProperVerdict {
        strictly_proper: false,
        confidence: Confidence::Low,
        slope: f64::NAN,
    };
    if sys.require_siso().is_err() {
        return low;
    }
    let (w1, w2) = (1e8 * omega_scale, 1e10 * omega_scale);
    let h = |w: f64| sys.transfer_eval(Complex64::new(0.0, w)).map(|v| v.norm());
    let (h0, h1, h2) = match (h(0.0).or_else(|_| h(1.0)), h(w1), h(w2)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ => return low,
    };
    let negligible = 1e-13 * h0.max(f64::MIN_POSITIVE);
    if h2 <= negligible {
        return ProperVerdict {
            strictly_proper: true,
            confidence: Confidence::High,
            slope: if h1 > 0.0 && h2 > 0.0 { (h2 / h1).log10() / 2.0 } else { f64::NEG_INFINITY },
        };
    }
    let slope = (h2 / h1).log10() / (w2 / w1).log10();
    ProperVerdict {
        strictly_proper: slope <= -0.5,
        confidence: if slope <= -0.9 || slope >= -0.1 {
            Confidence::High
        } else {
            Confidence::Low
        },
        slope,
    }
}

// Ritz values of shift-invert Arnoldi at points iω along the imaginary axis.
fn sampled_ritz_values(sys: &DescriptorSystem, scale: f64) -> Result<Vec<Complex64>> {
    const STEPS: usize = 24;
    let n = sys.n();
    let mut out = Vec::new();
    let mut any_shift = false;
    for k in -2..=2 {
        let sigma = Complex64::new(0.0, scale * 10f64.powi(k));
        let lu = match sys.factor_shifted(sigma) {
            Ok(lu) => lu,
            Err(Error::PoleProximity { .. }) => continue,
            Err(e) => return Err(e),
        };
        any_shift = true;
        let mut start: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + ((i * 7919) % 97) as f64 / 97.0, 0.0))
            .collect();
        let norm = start.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        start.iter_mut().for_each(|z| *z /= norm);
        let mut basis = vec![start];
        let mut h = DMatrix::<Complex64>::zeros(STEPS + 1, STEPS);
        let mut steps = 0;
        for j in 0..STEPS.min(n) {
            let mut w = lu.solve(&sys.e.apply(&basis[j]));
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    h[(i, j)] += c;
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            steps = j + 1;
            h[(j + 1, j)] = Complex64::new(nw, 0.0);
            if nw < 1e-12 {
                break;
            }
            w.iter_mut().for_each(|z| *z /= nw);
            basis.push(w);
        }
        let hk = h.view((0, 0), (steps, steps)).into_owned();
        let mu = hk
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("Ritz eigenvalues did not converge".into()))?;
        let top = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        out.extend(
            mu.iter()
                .filter(|m| m.norm() > 1e-10 * top)
                .map(|m| sigma - m.inv()),
        );
    }
    if !any_shift {
        return Err(Error::Regularity(
            "every sampled shift was numerically singular".into(),
        ));
    }
    Ok(out)
}

/// Sampled output trajectory of a transient simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `values[k]` holds the output vector at `times[k]`.
    pub values: Vec<Vec<f64>>,
    pub inputs: Vec<f64>,
    /// Trapezoidal L² norm of the input over the horizon.
    pub input_l2: f64,
    pub step: f64,
    pub scheme: String,
    /// States per step, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub states: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn n_out(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Trapezoidal L² norm of output `i`.
    pub fn output_l2(&self, i: usize) -> f64 {
        trapezoid_l2(self.values.iter().map(|v| v[i]), self.step)
    }

    pub fn output_sup(&self, i: usize) -> f64 {
        self.values.iter().map(|v| v[i].abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t, y_1, …`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.n_out() {
            let _ = write!(out, ",y_{}", i + 1);
        }
        out.push('\n');
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = write!(out, "{t:.16e}");
            for y in v {
                let _ = write!(out, ",{y:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Composite trapezoidal approximation of `sqrt(∫ f² dt)` on a uniform grid.
pub fn trapezoid_l2(samples: impl IntoIterator<Item = f64>, step: f64) -> f64 {
    let v: Vec<f64> = samples.into_iter().collect();
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().map(|x| x * x).sum();
    let ends = 0.5 * (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]);
    (step * (inner + ends)).sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationOptions {
    pub record_states: bool,
}

/// Trapezoidal integration of `E ẋ = A x + B u` from `x(0) = 0` with
/// `u(0) = 0`. Stability of the system is assumed, not checked.
pub fn simulate_transient(
    sys: &DescriptorSystem,
    input: impl Fn(f64) -> f64,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    simulate_transient_with(sys, input, horizon, step, SimulationOptions::default())
}

pub fn simulate_transient_with(
    sys: &DescriptorSystem,
    input: impl Fn(f64) -> f64,
    horizon: f64,
    step: f64,
    options: SimulationOptions,
) -> Result<Trajectory> {
    sys.require_siso()?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::StepSize(format!("step must be positive, got {step}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    let u0 = input(0.0);
    if u0.abs() > 1e-12 {
        return Err(Error::Consistency(format!(
            "zero initial state needs u(0) = 0, got {u0}"
        )));
    }
    let steps = (horizon / step).round() as usize;
    // E − (h/2) A = (h/2) (sE − A) with s = 2/h.
    let s = 2.0 / step;
    let lu = sys.factor_shifted(s).map_err(|e| {
        Error::StepSize(format!("cannot factor E - (h/2) A for h = {step}: {e}"))
    })?;
    let n = sys.n();
    let b = sys.b.column::<f64>(0);
    let mut x = vec![0.0; n];
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let mut states = options.record_states.then(|| Vec::with_capacity(steps + 1));
    times.push(0.0);
    values.push(vec![0.0; sys.n_out()]);
    inputs.push(u0);
    if let Some(st) = states.as_mut() {
        st.push(x.clone());
    }
    let mut u_prev = u0;
    for k in 1..=steps {
        let t = k as f64 * step;
        let u = input(t);
        // (sE − A) x_{k+1} = (sE + A) x_k + B (u_k + u_{k+1}).
        let ex = sys.e.apply(&x);
        let ax = sys.a.apply(&x);
        let rhs: Vec<f64> = (0..n)
            .map(|i| s * ex[i] + ax[i] + b[i] * (u_prev + u))
            .collect();
        x = lu.solve(&rhs);
        times.push(t);
        values.push(sys.c.apply(&x));
        inputs.push(u);
        if let Some(st) = states.as_mut() {
            st.push(x.clone());
        }
        u_prev = u;
    }
    let input_l2 = trapezoid_l2(inputs.iter().copied(), step);
    Ok(Trajectory {
        times,
        values,
        inputs,
        input_l2,
        step,
        scheme: "trapezoidal".into(),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(e: f64, a: f64) -> DescriptorSystem {
        DescriptorSystem::from_dense(
            &DMatrix::from_element(1, 1, e),
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    fn semi_explicit() -> DescriptorSystem {
        DescriptorSystem::from_dense(
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            &DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
            &DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn scalar_transfer() {
        let h = scalar(1.0, -1.0).transfer_eval(Complex64::new(0.0, 0.0)).unwrap();
        assert!((h[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn semi_explicit_transfer() {
        let h = semi_explicit().transfer_eval(Complex64::new(1.0, 0.0)).unwrap();
        assert!((h[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pole_is_reported_with_condition() {
        let err = scalar(1.0, -1.0).transfer_eval(Complex64::new(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { re, .. } if re == -1.0));
    }

    #[test]
    fn sparse_and_dense_storage_agree() {
        let sys = semi_explicit();
        let sparse = sys.clone().with_storage(Storage::Sparse);
        let s = Complex64::new(0.3, 2.0);
        let a = sys.transfer_eval(s).unwrap();
        let b = sparse.transfer_eval(s).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn scalar_pencils() {
        let r = pencil_spectrum(&scalar(1.0, -1.0), DEFAULT_DIM_CAP).unwrap();
        assert_eq!(r.finite_eigenvalues.len(), 1);
        assert!((r.finite_eigenvalues[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!(r.stable);
        assert!(r.strictly_proper.strictly_proper);
        assert!(!pencil_spectrum(&scalar(1.0, 1.0), DEFAULT_DIM_CAP).unwrap().stable);
    }

    #[test]
    fn semi_explicit_pencil() {
        let r = pencil_spectrum(&semi_explicit(), DEFAULT_DIM_CAP).unwrap();
        assert_eq!(r.finite_eigenvalues.len(), 1);
        assert_eq!(r.infinite_count, Some(1));
        assert_eq!(r.index_at_most_one, Some(true));
        assert!((r.finite_eigenvalues[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!(r.stable);
    }

    #[test]
    fn singular_pencil_is_rejected() {
        let sys = DescriptorSystem::from_dense(
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            &DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(pencil_spectrum(&sys, 10), Err(Error::Regularity(_))));
    }

    #[test]
    fn proper_but_not_strictly() {
        // H(s) = 1/(s+1) + 1 through an algebraic feed-through state.
        let sys = DescriptorSystem::from_dense(
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            &DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            &DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        )
        .unwrap();
        let r = pencil_spectrum(&sys, 10).unwrap();
        assert!(!r.strictly_proper.strictly_proper);
        assert_eq!(r.strictly_proper.confidence, Confidence::High);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let tr = simulate_transient(&scalar(1.0, -1.0), |_| 0.0, 1.0, 0.01).unwrap();
        assert!(tr.values.iter().all(|v| v[0] == 0.0));
        assert_eq!(tr.times.len(), 101);
    }

    #[test]
    fn nonzero_initial_input_is_inconsistent() {
        let err = simulate_transient(&scalar(1.0, -1.0), |_| 1.0, 1.0, 0.01).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn singular_step_matrix_is_step_size_error() {
        // E − (h/2)A = 1 − (h/2)·2 vanishes at h = 1.
        let err = simulate_transient(&scalar(1.0, 2.0), |t| t, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::StepSize(_)));
    }

    #[test]
    fn trapezoid_l2_of_linear_ramp() {
        // ∫_0^1 t² dt = 1/3; the trapezoid error is h²/6 · ... → small.
        let h = 1e-3;
        let v = (0..=1000).map(|k| k as f64 * h);
        assert!((trapezoid_l2(v, h).powi(2) - 1.0 / 3.0).abs() < 1e-6);
    }
}
