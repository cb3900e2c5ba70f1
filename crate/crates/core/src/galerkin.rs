//! Stochastic Galerkin projection of a parametric descriptor system.
//!
//! Blocks are ordered basis-major: block `i` of the state holds the `n`
//! states belonging to basis function `Φ_i`. Output row `i` of the Galerkin
//! system is the coefficient of `Φ_i` in the expansion of the random output.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{eval_basis_with, parameter_tensor, BasisSpec, DomainPolicy, Distribution1D, MultiIndex, MultiIndexSet, QuadratureGrid, QuadratureMode};
use crate::descriptor::DescriptorSystem;
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// Default cap on the Galerkin dimension `m·n`.
pub const DEFAULT_MAX_DIM: u128 = 20_000_000;

/// `(E, A, B, C)` at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub e: CscMatrix<f64>,
    pub a: CscMatrix<f64>,
    pub b: CscMatrix<f64>,
    pub c: CscMatrix<f64>,
}

impl SystemMatrices {
    pub fn zeros(n: usize) -> Self {
        Self {
            e: CscMatrix::zeros(n, n),
            a: CscMatrix::zeros(n, n),
            b: CscMatrix::zeros(n, 1),
            c: CscMatrix::zeros(1, n),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let ok = self.e.nrows() == n
            && self.e.ncols() == n
            && self.a.nrows() == n
            && self.a.ncols() == n
            && self.b.nrows() == n
            && self.b.ncols() == 1
            && self.c.nrows() == 1
            && self.c.ncols() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "parametric system matrices must be n x n, n x 1 and 1 x n with n = {n}"
            )))
        }
    }

    /// Largest entrywise difference to `other`.
    pub fn max_difference(&self, other: &SystemMatrices) -> f64 {
        let diff = |x: &CscMatrix<f64>, y: &CscMatrix<f64>| {
            x.add(&y.scale(-1.0)).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
        };
        diff(&self.e, &other.e)
            .max(diff(&self.a, &other.a))
            .max(diff(&self.b, &other.b))
            .max(diff(&self.c, &other.c))
    }

    pub fn into_system(self) -> Result<DescriptorSystem> {
        DescriptorSystem::new(self.e, self.a, self.b, self.c)
    }
}

/// `M(p) = M₀ + Σ_ℓ p_ℓ M_ℓ` for each of the four matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDecomposition {
    pub constant: SystemMatrices,
    pub terms: Vec<SystemMatrices>,
}

impl AffineDecomposition {
    pub fn evaluate(&self, p: &[f64]) -> Result<SystemMatrices> {
        if p.len() != self.terms.len() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, decomposition has {} terms",
                p.len(),
                self.terms.len()
            )));
        }
        let combine = |pick: fn(&SystemMatrices) -> &CscMatrix<f64>| -> Result<CscMatrix<f64>> {
            let base = pick(&self.constant);
            let mut t: Vec<(usize, usize, f64)> = base.triplets().collect();
            for (term, &pl) in self.terms.iter().zip(p) {
                t.extend(pick(term).triplets().map(|(i, j, v)| (i, j, pl * v)));
            }
            CscMatrix::from_triplets(base.nrows(), base.ncols(), &t)
        };
        Ok(SystemMatrices {
            e: combine(|m| &m.e)?,
            a: combine(|m| &m.a)?,
            b: combine(|m| &m.b)?,
            c: combine(|m| &m.c)?,
        })
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Result<SystemMatrices> + Send + Sync>;

/// A single-input single-output descriptor system depending on `q` random
/// parameters with independent laws.
#[derive(Clone)]
pub struct ParametricSystem {
    n: usize,
    distributions: Vec<Distribution1D>,
    evaluator: Evaluator,
    affine: Option<AffineDecomposition>,
}

impl std::fmt::Debug for ParametricSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametricSystem")
            .field("n", &self.n)
            .field("q", &self.distributions.len())
            .field("affine", &self.affine.is_some())
            .finish()
    }
}

impl ParametricSystem {
    pub fn new(n: usize, distributions: Vec<Distribution1D>, evaluator: Evaluator) -> Self {
        Self {
            n,
            distributions,
            evaluator,
            affine: None,
        }
    }

    /// A system defined entirely by its affine decomposition.
    pub fn from_affine(distributions: Vec<Distribution1D>, affine: AffineDecomposition) -> Result<Self> {
        let n = affine.constant.e.nrows();
        affine.constant.check(n)?;
        if affine.terms.len() != distributions.len() {
            return Err(Error::Shape(format!(
                "{} affine terms for {} parameters",
                affine.terms.len(),
                distributions.len()
            )));
        }
        for t in &affine.terms {
            t.check(n)?;
        }
        let shared = Arc::new(affine.clone());
        let evaluator: Evaluator = Arc::new(move |p: &[f64]| shared.evaluate(p));
        Ok(Self {
            n,
            distributions,
            evaluator,
            affine: Some(affine),
        })
    }

    /// Attaches an affine decomposition that the evaluator is claimed to
    /// follow; the claim is checked at the domain centre and two corners.
    pub fn with_affine(mut self, affine: AffineDecomposition) -> Result<Self> {
        affine.constant.check(self.n)?;
        if affine.terms.len() != self.q() {
            return Err(Error::Shape("affine term count differs from q".into()));
        }
        self.affine = Some(affine);
        let probes: [Vec<f64>; 3] = [
            self.distributions.iter().map(|d| d.mean()).collect(),
            self.distributions.iter().map(|d| d.lower()).collect(),
            self.distributions.iter().map(|d| d.upper()).collect(),
        ];
        for p in &probes {
            let mismatch = self.affine_mismatch(p)?;
            if mismatch > 1e-12 * (1.0 + self.scale_at(p)?) {
                return Err(Error::Modelling(format!(
                    "affine decomposition deviates from the evaluator by {mismatch:e}"
                )));
            }
        }
        Ok(self)
    }

    fn scale_at(&self, p: &[f64]) -> Result<f64> {
        let m = self.evaluate(p)?;
        Ok(m.e.max_abs().max(m.a.max_abs()).max(m.b.max_abs()).max(m.c.max_abs()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.distributions.len()
    }

    pub fn distributions(&self) -> &[Distribution1D] {
        &self.distributions
    }

    pub fn affine(&self) -> Option<&AffineDecomposition> {
        self.affine.as_ref()
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<SystemMatrices> {
        if p.len() != self.q() {
            return Err(Error::Shape(format!("point has {} coordinates, q = {}", p.len(), self.q())));
        }
        let m = (self.evaluator)(p)?;
        m.check(self.n)?;
        Ok(m)
    }

    /// System at the parameter means.
    pub fn nominal(&self) -> Result<DescriptorSystem> {
        let p: Vec<f64> = self.distributions.iter().map(|d| d.mean()).collect();
        self.evaluate(&p)?.into_system()
    }

    /// Largest entrywise gap between evaluator and affine reconstruction.
    pub fn affine_mismatch(&self, p: &[f64]) -> Result<f64> {
        let affine = self
            .affine
            .as_ref()
            .ok_or_else(|| Error::Parameter("system has no affine decomposition".into()))?;
        Ok(self.evaluate(p)?.max_difference(&affine.evaluate(p)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssemblyMethod {
    /// Exact moments from the recurrence (affine systems).
    Affine,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyInfo {
    pub method: AssemblyMethod,
    pub quadrature_mode: Option<QuadratureMode>,
    pub quadrature_level: Option<usize>,
    pub quadrature_nodes: Option<usize>,
    pub quadrature_exactness: Option<u32>,
    pub warnings: Vec<String>,
}

/// A Galerkin system: a descriptor system of dimension `|present|·n` with
/// one output per basis function of the original basis.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    system: DescriptorSystem,
    block_dim: usize,
    basis: MultiIndexSet,
    present: Vec<usize>,
    info: AssemblyInfo,
}

/// Sidecar metadata for exported Galerkin systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinSidecar {
    pub block_dim: usize,
    pub dimension: usize,
    pub outputs: usize,
    pub basis: MultiIndexSet,
    /// Original basis indices of the blocks present, in block order.
    pub present: Vec<usize>,
    pub info: AssemblyInfo,
}

impl GalerkinSystem {
    pub fn system(&self) -> &DescriptorSystem {
        &self.system
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn dim(&self) -> usize {
        self.system.n()
    }

    /// Number of outputs, always the size of the original basis.
    pub fn m(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    /// Multi-index attached to output row `i`.
    pub fn output_index(&self, i: usize) -> &MultiIndex {
        self.basis.get(i)
    }

    pub fn present(&self) -> &[usize] {
        &self.present
    }

    pub fn info(&self) -> &AssemblyInfo {
        &self.info
    }

    pub fn sidecar(&self) -> GalerkinSidecar {
        GalerkinSidecar {
            block_dim: self.block_dim,
            dimension: self.dim(),
            outputs: self.m(),
            basis: self.basis.clone(),
            present: self.present.clone(),
            info: self.info.clone(),
        }
    }

    /// Matrix Market files plus `galerkin.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.system.write_mtx(dir, "galerkin_")?;
        let json = serde_json::to_string_pretty(&self.sidecar()).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("galerkin.json"), json)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("galerkin.json"))?;
        let side: GalerkinSidecar = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
        let system = DescriptorSystem::read_mtx(dir, "galerkin_")?;
        if system.n() != side.block_dim * side.present.len() || system.n_out() != side.basis.len() {
            return Err(Error::Shape("Galerkin sidecar does not match the matrices".into()));
        }
        Ok(Self {
            system,
            block_dim: side.block_dim,
            basis: side.basis,
            present: side.present,
            info: side.info,
        })
    }
}

fn check_dimension(m: usize, n: usize, limit: u128) -> Result<()> {
    let dim = m as u128 * n as u128;
    if dim > limit {
        return Err(Error::Sizing {
            what: "Galerkin dimension m*n",
            value: dim,
            limit,
        });
    }
    Ok(())
}

/// Galerkin projection of `psys` onto the basis `spec`.
///
/// Affine systems are assembled exactly from the recurrence coefficients and
/// `quad` is only recorded; other systems are integrated with `quad`.
pub fn assemble(psys: &ParametricSystem, spec: &BasisSpec, quad: &QuadratureGrid) -> Result<GalerkinSystem> {
    assemble_with_limit(psys, spec, quad, DEFAULT_MAX_DIM)
}

pub fn assemble_with_limit(
    psys: &ParametricSystem,
    spec: &BasisSpec,
    quad: &QuadratureGrid,
    max_dim: u128,
) -> Result<GalerkinSystem> {
    if psys.q() != spec.q() {
        return Err(Error::Shape(format!(
            "parametric system has q = {}, basis has q = {}",
            psys.q(),
            spec.q()
        )));
    }
    check_dimension(spec.len(), psys.n(), max_dim)?;
    let mut info = AssemblyInfo {
        method: AssemblyMethod::Affine,
        quadrature_mode: Some(quad.construction),
        quadrature_level: Some(quad.level),
        quadrature_nodes: Some(quad.len()),
        quadrature_exactness: Some(quad.exactness),
        warnings: Vec::new(),
    };
    let matrices = match psys.affine() {
        Some(affine) => assemble_affine(affine, spec)?,
        None => {
            info.method = AssemblyMethod::Quadrature;
            let needed = 2 * spec.index_set().max_degree() + 1;
            if quad.exactness < needed {
                info.warnings.push(format!(
                    "quadrature exact to degree {} but affine parameter dependence needs {}",
                    quad.exactness, needed
                ));
            }
            assemble_quadrature(psys, spec, quad)?
        }
    };
    Ok(GalerkinSystem {
        system: matrices.into_system()?,
        block_dim: psys.n(),
        basis: spec.index_set().clone(),
        present: (0..spec.len()).collect(),
        info,
    })
}

fn assemble_affine(affine: &AffineDecomposition, spec: &BasisSpec) -> Result<SystemMatrices> {
    let m = spec.len();
    let n = affine.constant.e.nrows();
    let tensors: Vec<CscMatrix<f64>> = (0..spec.q()).map(|l| parameter_tensor(spec, l)).collect::<Result<_>>()?;
    let identity = CscMatrix::identity(m);

    let lift = |pick: fn(&SystemMatrices) -> &CscMatrix<f64>| -> Result<CscMatrix<f64>> {
        let mut acc = CscMatrix::kron(&identity, pick(&affine.constant));
        for (t, term) in tensors.iter().zip(&affine.terms) {
            let mat = pick(term);
            if mat.nnz() > 0 {
                acc = acc.add(&CscMatrix::kron(t, mat))?;
            }
        }
        Ok(acc)
    };
    let e = lift(|s| &s.e)?;
    let a = lift(|s| &s.a)?;
    let c = lift(|s| &s.c)?;

    // B̂ block i = δ_{i0} B₀ + Σ_ℓ E[Φ_i p_ℓ] B_ℓ, and E[Φ_i p_ℓ] is column 0 of T_ℓ.
    let mut bt: Vec<(usize, usize, f64)> = affine.constant.b.triplets().collect();
    for (t, term) in tensors.iter().zip(&affine.terms) {
        if term.b.nnz() == 0 {
            continue;
        }
        let col0 = t.column::<f64>(0);
        for (i, &w) in col0.iter().enumerate() {
            if w != 0.0 {
                bt.extend(term.b.triplets().map(|(r, _, v)| (i * n + r, 0, w * v)));
            }
        }
    }
    let b = CscMatrix::from_triplets(m * n, 1, &bt)?;
    Ok(SystemMatrices { e, a, b, c })
}

type Accum = [HashMap<(usize, usize), f64>; 4];

fn assemble_quadrature(psys: &ParametricSystem, spec: &BasisSpec, quad: &QuadratureGrid) -> Result<SystemMatrices> {
    let m = spec.len();
    let n = psys.n();
    let accumulate = |mut acc: Accum, (p, &w): (&Vec<f64>, &f64)| -> Result<Accum> {
        let phi = eval_basis_with(spec, p, DomainPolicy::WarnAndExtrapolate)?.values;
        let mats = psys.evaluate(p)?;
        for i in 0..m {
            let wi = w * phi[i];
            if wi == 0.0 {
                continue;
            }
            for (r, _, v) in mats.b.triplets() {
                *acc[2].entry((i * n + r, 0)).or_default() += wi * v;
            }
            for j in 0..m {
                let wij = wi * phi[j];
                if wij == 0.0 {
                    continue;
                }
                for (r, c, v) in mats.e.triplets() {
                    *acc[0].entry((i * n + r, j * n + c)).or_default() += wij * v;
                }
                for (r, c, v) in mats.a.triplets() {
                    *acc[1].entry((i * n + r, j * n + c)).or_default() += wij * v;
                }
                for (_, c, v) in mats.c.triplets() {
                    *acc[3].entry((i, j * n + c)).or_default() += wij * v;
                }
            }
        }
        Ok(acc)
    };
    let merge = |mut a: Accum, b: Accum| -> Accum {
        for (x, y) in a.iter_mut().zip(b) {
            for (k, v) in y {
                *x.entry(k).or_default() += v;
            }
        }
        a
    };
    let acc = quad
        .nodes
        .par_iter()
        .zip(quad.weights.par_iter())
        .try_fold(Accum::default, accumulate)
        .try_reduce(Accum::default, |a, b| Ok(merge(a, b)))?;
    let finish = |map: &HashMap<(usize, usize), f64>, rows: usize, cols: usize| {
        let scale = map.values().fold(0.0f64, |s, v| s.max(v.abs()));
        let mut t: Vec<(usize, usize, f64)> = map
            .iter()
            .filter(|(_, v)| v.abs() > 1e-15 * scale)
            .map(|(&(i, j), &v)| (i, j, v))
            .collect();
        t.sort_by_key(|&(i, j, _)| (j, i));
        CscMatrix::from_triplets(rows, cols, &t)
    };
    Ok(SystemMatrices {
        e: finish(&acc[0], m * n, m * n)?,
        a: finish(&acc[1], m * n, m * n)?,
        b: finish(&acc[2], m * n, 1)?,
        c: finish(&acc[3], m, m * n)?,
    })
}

/// A subset `I′` of the basis (by original index) with its complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    m: usize,
    kept: Vec<usize>,
    dropped: Vec<usize>,
}

impl Selection {
    /// The constant basis function (index 0) is always added.
    pub fn new(m: usize, kept: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut flags = vec![false; m];
        let mut any = false;
        for i in kept {
            if i >= m {
                return Err(Error::Selection(format!("index {i} outside basis of size {m}")));
            }
            flags[i] = true;
            any = true;
        }
        if !any {
            return Err(Error::Selection("the kept set is empty".into()));
        }
        flags[0] = true;
        Ok(Self::from_flags(flags))
    }

    pub fn full(m: usize) -> Self {
        Self::from_flags(vec![true; m])
    }

    fn from_flags(flags: Vec<bool>) -> Self {
        let kept = (0..flags.len()).filter(|&i| flags[i]).collect();
        let dropped = (0..flags.len()).filter(|&i| !flags[i]).collect();
        Self {
            m: flags.len(),
            kept,
            dropped,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn is_kept(&self, i: usize) -> bool {
        self.kept.binary_search(&i).is_ok()
    }

    /// `true` for output rows that are zeroed.
    pub fn zero_rows(&self) -> Vec<bool> {
        let mut z = vec![true; self.m];
        for &i in &self.kept {
            z[i] = false;
        }
        z
    }
}

/// Keeps the blocks of `sel.kept` and zeroes the output rows of dropped
/// basis functions; the output count stays `m`.
pub fn downsize(gsys: &GalerkinSystem, sel: &Selection) -> Result<GalerkinSystem> {
    if sel.m() != gsys.m() {
        return Err(Error::Selection(format!(
            "selection over {} basis functions, system has {}",
            sel.m(),
            gsys.m()
        )));
    }
    if sel.kept().is_empty() {
        return Err(Error::Selection("the kept set is empty".into()));
    }
    let n = gsys.block_dim;
    let position: HashMap<usize, usize> = gsys.present.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut states = Vec::with_capacity(sel.kept().len() * n);
    for &i in sel.kept() {
        let pos = *position.get(&i).ok_or_else(|| {
            Error::Selection(format!("basis index {i} is not present in the system"))
        })?;
        states.extend(pos * n..(pos + 1) * n);
    }
    let sys = &gsys.system;
    let all_rows: Vec<usize> = (0..gsys.m()).collect();
    let e = sys.e().select(&states, &states);
    let a = sys.a().select(&states, &states);
    let b = sys.b().select(&states, &[0]);
    let c = sys.c().select(&all_rows, &states).zero_rows(&sel.zero_rows());
    Ok(GalerkinSystem {
        system: DescriptorSystem::new(e, a, b, c)?,
        block_dim: n,
        basis: gsys.basis.clone(),
        present: sel.kept().to_vec(),
        info: gsys.info.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_quadrature, Distribution1D};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn scalar_matrices(e: f64, a: f64) -> SystemMatrices {
        let one = |v: f64, r, c| CscMatrix::from_triplets(r, c, &[(0, 0, v)]).unwrap();
        SystemMatrices {
            e: one(e, 1, 1),
            a: one(a, 1, 1),
            b: one(1.0, 1, 1),
            c: one(1.0, 1, 1),
        }
    }

    // E = 1, A = −(2 + p), B = C = 1 with p uniform on [−1, 1].
    fn scalar_example() -> ParametricSystem {
        let mut term = SystemMatrices::zeros(1);
        term.a = CscMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]).unwrap();
        let affine = AffineDecomposition {
            constant: {
                let mut c = scalar_matrices(1.0, -2.0);
                c.b = CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
                c
            },
            terms: vec![term],
        };
        ParametricSystem::from_affine(vec![Distribution1D::uniform(-1.0, 1.0).unwrap()], affine).unwrap()
    }

    #[test]
    fn scalar_example_blocks() {
        let psys = scalar_example();
        let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 1).unwrap();
        let quad = build_quadrature(&spec, QuadratureMode::Tensor, 2).unwrap();
        let g = assemble(&psys, &spec, &quad).unwrap();
        let r = 1.0 / 3f64.sqrt();
        let a = g.system().a().to_dense();
        let want = DMatrix::from_row_slice(2, 2, &[-2.0, -r, -r, -2.0]);
        assert!((a - want).amax() < 1e-15);
        assert_eq!(g.system().e().to_dense(), DMatrix::identity(2, 2));
        assert_eq!(g.system().b().to_dense(), DMatrix::from_row_slice(2, 1, &[1.0, 0.0]));
        assert_eq!(g.system().c().to_dense(), DMatrix::identity(2, 2));
    }

    #[test]
    fn generic_path_matches_affine_path() {
        let psys = scalar_example();
        let generic = ParametricSystem::new(1, psys.distributions().to_vec(), {
            let p2 = psys.clone();
            Arc::new(move |p: &[f64]| p2.evaluate(p))
        });
        let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 2).unwrap();
        let quad = build_quadrature(&spec, QuadratureMode::Tensor, 4).unwrap();
        let g1 = assemble(&psys, &spec, &quad).unwrap();
        let g2 = assemble(&generic, &spec, &quad).unwrap();
        assert_eq!(g2.info().method, AssemblyMethod::Quadrature);
        assert!(g2.info().warnings.is_empty());
        assert!((g1.system().a().to_dense() - g2.system().a().to_dense()).amax() < 1e-14);
        assert!((g1.system().b().to_dense() - g2.system().b().to_dense()).amax() < 1e-14);
    }

    #[test]
    fn low_exactness_is_recorded() {
        let psys = scalar_example();
        let generic = ParametricSystem::new(1, psys.distributions().to_vec(), {
            let p2 = psys.clone();
            Arc::new(move |p: &[f64]| p2.evaluate(p))
        });
        let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 2).unwrap();
        let quad = build_quadrature(&spec, QuadratureMode::Tensor, 2).unwrap();
        let g = assemble(&generic, &spec, &quad).unwrap();
        assert_eq!(g.info().warnings.len(), 1);
    }

    #[test]
    fn downsize_to_mean_block() {
        let psys = scalar_example();
        let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 1).unwrap();
        let quad = build_quadrature(&spec, QuadratureMode::Tensor, 2).unwrap();
        let g = assemble(&psys, &spec, &quad).unwrap();
        let small = downsize(&g, &Selection::new(2, [0]).unwrap()).unwrap();
        assert_eq!(small.dim(), 1);
        assert_eq!(small.system().a().get(0, 0), -2.0);
        assert_eq!(small.system().e().get(0, 0), 1.0);
        assert_eq!(small.system().b().get(0, 0), 1.0);
        let h = small.system().transfer_eval(Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(h[1], Complex64::new(0.0, 0.0));
        assert_eq!(small.m(), 2);
    }

    #[test]
    fn selection_rules() {
        assert!(matches!(Selection::new(3, []), Err(Error::Selection(_))));
        assert!(matches!(Selection::new(3, [5]), Err(Error::Selection(_))));
        let s = Selection::new(4, [2]).unwrap();
        assert_eq!(s.kept(), &[0, 2]);
        assert_eq!(s.dropped(), &[1, 3]);
    }

    #[test]
    fn dimension_limit() {
        let psys = scalar_example();
        let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 3).unwrap();
        let quad = build_quadrature(&spec, QuadratureMode::Tensor, 4).unwrap();
        assert!(matches!(
            assemble_with_limit(&psys, &spec, &quad, 3),
            Err(Error::Sizing { value: 4, .. })
        ));
    }

    #[test]
    fn write_and_read_back() {
        let psys = scalar_example();
        let spec = BasisSpec::total_degree(psys.distributions().to_vec(), 2).unwrap();
        let quad = build_quadrature(&spec, QuadratureMode::Tensor, 3).unwrap();
        let g = assemble(&psys, &spec, &quad).unwrap();
        let dir = tempfile::tempdir().unwrap();
        g.write(dir.path()).unwrap();
        let back = GalerkinSystem::read(dir.path()).unwrap();
        assert_eq!(back.system().a(), g.system().a());
        assert_eq!(back.basis(), g.basis());
        assert_eq!(back.present(), g.present());
    }
}
