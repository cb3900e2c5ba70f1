//! Orthonormal polynomial bases on products of independent random parameters.
//!
//! A basis is a [`MultiIndexSet`] together with one univariate orthonormal
//! family per parameter; basis function `i` is the product of the univariate
//! polynomials selected by multi-index `i`. Expected values are taken with
//! respect to the product density, so the constant function has unit norm
//! and every `Φ_i` has unit second moment.
//!
//! Quadrature rules here integrate against the probability density (weights
//! sum to one), never against Lebesgue measure.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// Default cap on basis cardinality.
pub const DEFAULT_MAX_BASIS: u128 = 5_000_000;
/// Default cap on quadrature node count.
pub const DEFAULT_MAX_NODES: u128 = 2_000_000;

/// Law of a single random parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution1D {
    /// Uniform density `1/(upper - lower)` on `[lower, upper]`.
    Uniform { lower: f64, upper: f64 },
}

impl Distribution1D {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Parameter(format!(
                "uniform distribution needs finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Distribution1D::Uniform { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        match *self {
            Distribution1D::Uniform { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            Distribution1D::Uniform { upper, .. } => upper,
        }
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lower() + self.upper())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper() - self.lower())
    }

    pub fn density(&self, p: f64) -> f64 {
        if p < self.lower() || p > self.upper() {
            0.0
        } else {
            1.0 / (self.upper() - self.lower())
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        let slack = 1e-12 * self.half_width().max(self.mean().abs());
        p >= self.lower() - slack && p <= self.upper() + slack
    }

    /// Maps a reference coordinate in `[-1, 1]` to the parameter range.
    pub fn from_reference(&self, xi: f64) -> f64 {
        self.mean() + self.half_width() * xi
    }

    /// Three-term recurrence of the orthonormal family up to `degree`.
    pub fn recurrence(&self, degree: usize) -> Recurrence {
        // Orthonormal Legendre for the uniform probability measure on [-1, 1]:
        // ξ φ_k = b_{k+1} φ_{k+1} + b_k φ_{k-1}, b_k = k / sqrt(4k² - 1).
        let (mid, half) = (self.mean(), self.half_width());
        let alpha = vec![mid; degree + 1];
        let mut beta = vec![0.0; degree + 2];
        for (k, b) in beta.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *b = half * kf / (4.0 * kf * kf - 1.0).sqrt();
        }
        Recurrence { alpha, beta }
    }
}

/// Recurrence `p φ_k = β_{k+1} φ_{k+1} + α_k φ_k + β_k φ_{k-1}` of an
/// orthonormal family with `φ_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Recurrence {
    pub fn max_degree(&self) -> usize {
        self.alpha.len() - 1
    }

    /// Values `φ_0(p), …, φ_degree(p)`.
    pub fn eval_all(&self, p: f64, degree: usize, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        if degree == 0 {
            return;
        }
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..degree {
            let next = ((p - self.alpha[k]) * cur - self.beta[k] * prev) / self.beta[k + 1];
            out.push(next);
            prev = cur;
            cur = next;
        }
    }
}

/// Degrees `(j_1, …, j_q)` of a product polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(q: usize) -> Self {
        MultiIndex(vec![0; q])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str(")")
    }
}

/// Ordered set of multi-indices; the first element is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiIndexSetRepr", into = "MultiIndexSetRepr")]
pub struct MultiIndexSet {
    q: usize,
    indices: Vec<MultiIndex>,
    degree_bound: Option<u32>,
    lookup: HashMap<MultiIndex, usize>,
}

#[derive(Serialize, Deserialize)]
struct MultiIndexSetRepr {
    q: usize,
    degree_bound: Option<u32>,
    indices: Vec<MultiIndex>,
}

impl TryFrom<MultiIndexSetRepr> for MultiIndexSet {
    type Error = Error;
    fn try_from(r: MultiIndexSetRepr) -> Result<Self> {
        let mut set = MultiIndexSet::custom(r.q, r.indices)?;
        set.degree_bound = r.degree_bound;
        Ok(set)
    }
}

impl From<MultiIndexSet> for MultiIndexSetRepr {
    fn from(s: MultiIndexSet) -> Self {
        MultiIndexSetRepr {
            q: s.q,
            degree_bound: s.degree_bound,
            indices: s.indices,
        }
    }
}

impl MultiIndexSet {
    /// A user-supplied index set. It must start with the zero index and
    /// contain no duplicates.
    pub fn custom(q: usize, indices: Vec<MultiIndex>) -> Result<Self> {
        if q == 0 {
            return Err(Error::Parameter("index sets need q >= 1".into()));
        }
        if indices.first() != Some(&MultiIndex::zero(q)) {
            return Err(Error::Parameter(
                "the first multi-index must be the zero index".into(),
            ));
        }
        let mut lookup = HashMap::with_capacity(indices.len());
        for (pos, idx) in indices.iter().enumerate() {
            if idx.dim() != q {
                return Err(Error::Shape(format!(
                    "multi-index {idx} has {} entries, expected {q}",
                    idx.dim()
                )));
            }
            if lookup.insert(idx.clone(), pos).is_some() {
                return Err(Error::Parameter(format!("duplicate multi-index {idx}")));
            }
        }
        Ok(Self {
            q,
            indices,
            degree_bound: None,
            lookup,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn degree_bound(&self) -> Option<u32> {
        self.degree_bound
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn position(&self, idx: &MultiIndex) -> Option<usize> {
        self.lookup.get(idx).copied()
    }

    pub fn max_degree(&self) -> u32 {
        self.indices.iter().map(MultiIndex::total_degree).max().unwrap_or(0)
    }

    /// Largest degree used in any single coordinate.
    pub fn max_coordinate_degree(&self) -> u32 {
        self.indices
            .iter()
            .flat_map(|i| i.0.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

/// `binomial(q + d, d)` or `None` on overflow.
pub fn total_degree_cardinality(q: usize, d: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for k in 1..=d as u128 {
        acc = acc.checked_mul(q as u128 + k)? / k;
    }
    Some(acc)
}

/// All multi-indices of total degree at most `d` in `q` variables, graded
/// lexicographically with the zero index first.
pub fn build_index_set(q: usize, d: usize) -> Result<MultiIndexSet> {
    build_index_set_with_limit(q, d, DEFAULT_MAX_BASIS)
}

pub fn build_index_set_with_limit(q: usize, d: usize, limit: u128) -> Result<MultiIndexSet> {
    if q == 0 {
        return Err(Error::Parameter("index sets need q >= 1".into()));
    }
    let m = total_degree_cardinality(q, d).unwrap_or(u128::MAX);
    if m > limit {
        return Err(Error::Sizing {
            what: "basis cardinality m",
            value: m,
            limit,
        });
    }
    let mut indices = Vec::with_capacity(m as usize);
    let mut current = vec![0u32; q];
    for t in 0..=d as u32 {
        compositions(t, 0, &mut current, &mut indices);
    }
    let mut set = MultiIndexSet::custom(q, indices)?;
    set.degree_bound = Some(d as u32);
    Ok(set)
}

// Emits all tuples with `sum(current[pos..]) == remaining`, first coordinate
// descending.
fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let q = current.len();
    if pos == q - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        current[pos] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Distributions, index set and recurrences of a polynomial chaos basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    distributions: Vec<Distribution1D>,
    index_set: MultiIndexSet,
    recurrences: Vec<Recurrence>,
}

impl BasisSpec {
    pub fn new(distributions: Vec<Distribution1D>, index_set: MultiIndexSet) -> Result<Self> {
        if distributions.len() != index_set.q() {
            return Err(Error::Shape(format!(
                "{} distributions for an index set in {} variables",
                distributions.len(),
                index_set.q()
            )));
        }
        let degree = index_set.max_coordinate_degree() as usize;
        let recurrences = distributions.iter().map(|d| d.recurrence(degree)).collect();
        Ok(Self {
            distributions,
            index_set,
            recurrences,
        })
    }

    /// Total-degree basis of degree `d`.
    pub fn total_degree(distributions: Vec<Distribution1D>, d: usize) -> Result<Self> {
        let set = build_index_set(distributions.len(), d)?;
        Self::new(distributions, set)
    }

    pub fn q(&self) -> usize {
        self.distributions.len()
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    pub fn distributions(&self) -> &[Distribution1D] {
        &self.distributions
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn recurrences(&self) -> &[Recurrence] {
        &self.recurrences
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.q() && self.distributions.iter().zip(p).all(|(d, &x)| d.contains(x))
    }
}

/// What to do when a basis is evaluated outside the parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DomainPolicy {
    #[default]
    Strict,
    WarnAndExtrapolate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub values: DVector<f64>,
    pub extrapolated: bool,
}

/// `(Φ_1(p), …, Φ_m(p))`.
pub fn eval_basis(spec: &BasisSpec, p: &[f64]) -> Result<DVector<f64>> {
    eval_basis_with(spec, p, DomainPolicy::Strict).map(|v| v.values)
}

pub fn eval_basis_with(spec: &BasisSpec, p: &[f64], policy: DomainPolicy) -> Result<BasisValues> {
    if p.len() != spec.q() {
        return Err(Error::Shape(format!(
            "point has {} coordinates, basis has {} parameters",
            p.len(),
            spec.q()
        )));
    }
    let inside = spec.contains(p);
    if !inside && policy == DomainPolicy::Strict {
        return Err(Error::Domain(format!("point {p:?} lies outside the parameter domain")));
    }
    let degree = spec.index_set.max_coordinate_degree() as usize;
    let mut table = Vec::with_capacity(spec.q());
    let mut buf = Vec::with_capacity(degree + 1);
    for (rec, &x) in spec.recurrences.iter().zip(p) {
        rec.eval_all(x, degree, &mut buf);
        table.push(buf.clone());
    }
    let values = DVector::from_iterator(
        spec.len(),
        spec.index_set.indices().iter().map(|idx| {
            idx.0
                .iter()
                .enumerate()
                .filter(|(_, &j)| j > 0)
                .map(|(l, &j)| table[l][j as usize])
                .product::<f64>()
        }),
    );
    Ok(BasisValues {
        values,
        extrapolated: !inside,
    })
}

/// One-dimensional quadrature rule against a probability density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and probability weights on `[-1, 1]`.
fn reference_gauss(order: usize) -> Result<Rule1D> {
    let n = order;
    let b = |k: usize| {
        if k == 0 {
            return 0.0;
        }
        let kf = k as f64;
        kf / (4.0 * kf * kf - 1.0).sqrt()
    };
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    for i in 0..half {
        // Descending initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            // φ and φ' by the orthonormal recurrence.
            let (mut p0, mut p1) = (0.0, 1.0);
            let (mut d0, mut d1) = (0.0, 0.0);
            for k in 0..n {
                let p2 = (x * p1 - b(k) * p0) / b(k + 1);
                let d2 = (p1 + x * d1 - b(k) * d0) / b(k + 1);
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            let dx = p1 / d1;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !x.is_finite() {
            return Err(Error::Numerical(format!(
                "Gauss rule of order {order}: Newton iteration did not converge"
            )));
        }
        // Christoffel weight at the converged node.
        let mut s = 0.0;
        let (mut p0, mut p1) = (0.0, 1.0);
        for k in 0..n {
            s += p1 * p1;
            let p2 = (x * p1 - b(k) * p0) / b(k + 1);
            p0 = p1;
            p1 = p2;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = 1.0 / s;
        weights[n - 1 - i] = 1.0 / s;
    }
    if n % 2 == 1 {
        let mut s = 0.0;
        let (mut p0, mut p1) = (0.0, 1.0);
        for k in 0..n {
            s += p1 * p1;
            let p2 = (-b(k) * p0) / b(k + 1);
            p0 = p1;
            p1 = p2;
        }
        nodes[half] = 0.0;
        weights[half] = 1.0 / s;
    }
    Ok(Rule1D { nodes, weights })
}

/// Gauss rule with `order` nodes for `dist`, exact up to degree `2·order − 1`.
pub fn univariate_rule(dist: &Distribution1D, order: usize) -> Result<Rule1D> {
    if order == 0 {
        return Err(Error::Parameter("quadrature order must be >= 1".into()));
    }
    let reference = reference_gauss(order)?;
    Ok(Rule1D {
        nodes: reference.nodes.iter().map(|&x| dist.from_reference(x)).collect(),
        weights: reference.weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureMode {
    Tensor,
    Smolyak,
}

/// Cubature nodes in the parameter domain with probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub exactness: u32,
    pub construction: QuadratureMode,
    pub level: usize,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// CSV with one row per node: coordinates then weight.
    pub fn to_csv(&self) -> String {
        let q = self.nodes.first().map_or(0, Vec::len);
        let mut out = String::new();
        for l in 0..q {
            let _ = write!(out, "p{},", l + 1);
        }
        out.push_str("weight\n");
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            for x in p {
                let _ = write!(out, "{x:.16e},");
            }
            let _ = writeln!(out, "{w:.16e}");
        }
        out
    }
}

pub fn build_quadrature(spec: &BasisSpec, mode: QuadratureMode, level: usize) -> Result<QuadratureGrid> {
    build_quadrature_with_limit(spec, mode, level, DEFAULT_MAX_NODES)
}

pub fn build_quadrature_with_limit(
    spec: &BasisSpec,
    mode: QuadratureMode,
    level: usize,
    max_nodes: u128,
) -> Result<QuadratureGrid> {
    if level == 0 {
        return Err(Error::Parameter("quadrature level must be >= 1".into()));
    }
    let q = spec.q();
    let dists = spec.distributions();
    let rules: Vec<Rule1D> = (1..=level).map(reference_gauss).collect::<Result<_>>()?;
    let exactness = (2 * level - 1) as u32;

    match mode {
        QuadratureMode::Tensor => {
            let count = (level as u128).checked_pow(q as u32).unwrap_or(u128::MAX);
            if count > max_nodes {
                return Err(Error::Sizing {
                    what: "quadrature node count",
                    value: count,
                    limit: max_nodes,
                });
            }
            let levels = vec![level; q];
            let mut acc = NodeAccumulator::default();
            add_tensor_rule(&rules, &levels, dists, 1.0, &mut acc);
            Ok(acc.finish(exactness, mode, level))
        }
        QuadratureMode::Smolyak => {
            let combos = smolyak_levels(q, level);
            let count: u128 = combos
                .iter()
                .map(|(ls, _)| {
                    ls.iter()
                        .try_fold(1u128, |a, &l| a.checked_mul(l as u128))
                        .unwrap_or(u128::MAX)
                })
                .fold(0u128, |a, b| a.saturating_add(b));
            if count > max_nodes {
                return Err(Error::Sizing {
                    what: "quadrature node count",
                    value: count,
                    limit: max_nodes,
                });
            }
            let mut acc = NodeAccumulator::default();
            for (levels, coeff) in &combos {
                add_tensor_rule(&rules, levels, dists, *coeff, &mut acc);
            }
            Ok(acc.finish(exactness, mode, level))
        }
    }
}

/// Quadrature used when none is configured: tensor Gauss for `q <= 4`,
/// Smolyak otherwise, with level `d + 1`.
pub fn default_quadrature(spec: &BasisSpec) -> Result<QuadratureGrid> {
    let level = spec.index_set().max_degree() as usize + 1;
    let mode = if spec.q() <= 4 {
        QuadratureMode::Tensor
    } else {
        QuadratureMode::Smolyak
    };
    build_quadrature(spec, mode, level)
}

// Level tuples `l` (entries >= 1) with `L <= |l| <= L + q - 1` and their
// combination coefficients `(-1)^{L+q-1-|l|} C(q-1, L+q-1-|l|)`.
fn smolyak_levels(q: usize, level: usize) -> Vec<(Vec<usize>, f64)> {
    let top = level + q - 1;
    let mut out = Vec::new();
    let mut current = vec![1usize; q];
    fn rec(pos: usize, sum: usize, top: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let q = cur.len();
        if pos == q {
            out.push(cur.clone());
            return;
        }
        let remaining = q - pos - 1;
        let mut l = 1;
        while sum + l + remaining <= top {
            cur[pos] = l;
            rec(pos + 1, sum + l, top, cur, out);
            l += 1;
        }
        cur[pos] = 1;
    }
    let mut all = Vec::new();
    rec(0, 0, top, &mut current, &mut all);
    for ls in all {
        let s: usize = ls.iter().sum();
        if s < level {
            continue;
        }
        let k = top - s;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        out.push((ls, sign * binomial_f64(q - 1, k)));
    }
    out
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

#[derive(Default)]
struct NodeAccumulator {
    index: HashMap<Vec<u64>, usize>,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl NodeAccumulator {
    fn add(&mut self, node: Vec<f64>, weight: f64) {
        let key: Vec<u64> = node.iter().map(|x| x.to_bits()).collect();
        match self.index.get(&key) {
            Some(&pos) => self.weights[pos] += weight,
            None => {
                self.index.insert(key, self.nodes.len());
                self.nodes.push(node);
                self.weights.push(weight);
            }
        }
    }

    fn finish(self, exactness: u32, construction: QuadratureMode, level: usize) -> QuadratureGrid {
        QuadratureGrid {
            nodes: self.nodes,
            weights: self.weights,
            exactness,
            construction,
            level,
        }
    }
}

fn add_tensor_rule(
    rules: &[Rule1D],
    levels: &[usize],
    dists: &[Distribution1D],
    coeff: f64,
    acc: &mut NodeAccumulator,
) {
    let q = levels.len();
    let mut counter = vec![0usize; q];
    loop {
        let mut w = coeff;
        let mut node = Vec::with_capacity(q);
        for l in 0..q {
            let rule = &rules[levels[l] - 1];
            w *= rule.weights[counter[l]];
            node.push(dists[l].from_reference(rule.nodes[counter[l]]));
        }
        acc.add(node, w);
        let mut l = 0;
        loop {
            if l == q {
                return;
            }
            counter[l] += 1;
            if counter[l] < levels[l] {
                break;
            }
            counter[l] = 0;
            l += 1;
        }
    }
}

/// `E[Φ_i Φ_j w(p)]` with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTensor {
    pub matrix: DMatrix<f64>,
    pub warnings: Vec<String>,
}

/// Matrix of `E[Φ_i Φ_j · weight(p)]` by quadrature. When `weight_degree` is
/// known, a rule that is not exact for the integrand records a warning.
pub fn expectation_tensors(
    spec: &BasisSpec,
    quad: &QuadratureGrid,
    weight: impl Fn(&[f64]) -> f64,
    weight_degree: Option<u32>,
) -> Result<ExpectationTensor> {
    let m = spec.len();
    let mut warnings = Vec::new();
    let needed = 2 * spec.index_set().max_degree() + weight_degree.unwrap_or(0);
    if quad.exactness < needed {
        warnings.push(format!(
            "quadrature exact to degree {} but integrand has degree {}{}",
            quad.exactness,
            needed,
            if weight_degree.is_none() { " or more" } else { "" }
        ));
    }
    let mut matrix = DMatrix::zeros(m, m);
    for (p, &w) in quad.nodes.iter().zip(&quad.weights) {
        let phi = eval_basis_with(spec, p, DomainPolicy::WarnAndExtrapolate)?.values;
        let scale = w * weight(p);
        if scale == 0.0 {
            continue;
        }
        matrix.ger(scale, &phi, &phi, 1.0);
    }
    // Exact symmetry.
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Ok(ExpectationTensor { matrix, warnings })
}

/// `E[Φ_i Φ_j p_ℓ]` from the recurrence coefficients, exactly and sparsely.
/// Nonzero only where the multi-indices agree outside coordinate `ℓ` and
/// differ by at most one in it.
pub fn parameter_tensor(spec: &BasisSpec, ell: usize) -> Result<CscMatrix<f64>> {
    if ell >= spec.q() {
        return Err(Error::Shape(format!("parameter {ell} out of range for q = {}", spec.q())));
    }
    let set = spec.index_set();
    let rec = &spec.recurrences()[ell];
    let mut triplets = Vec::new();
    let mut probe = MultiIndex::zero(spec.q());
    for (i, idx) in set.indices().iter().enumerate() {
        let k = idx.0[ell] as usize;
        triplets.push((i, i, rec.alpha[k]));
        probe.0.clone_from(&idx.0);
        probe.0[ell] += 1;
        if let Some(j) = set.position(&probe) {
            let v = rec.beta[k + 1];
            triplets.push((i, j, v));
            triplets.push((j, i, v));
        }
    }
    CscMatrix::from_triplets(set.len(), set.len(), &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_uniform(q: usize) -> Vec<Distribution1D> {
        vec![Distribution1D::uniform(-1.0, 1.0).unwrap(); q]
    }

    // Oracle: every tuple in {0..=d}^q with sum <= d.
    fn brute_force_count(q: usize, d: usize) -> usize {
        let mut count = 0;
        let total = (d + 1).pow(q as u32);
        for code in 0..total {
            let mut c = code;
            let mut s = 0;
            for _ in 0..q {
                s += c % (d + 1);
                c /= d + 1;
            }
            if s <= d {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn low_order_enumeration() {
        let set = build_index_set(2, 1).unwrap();
        let got: Vec<Vec<u32>> = set.indices().iter().map(|i| i.0.clone()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn cardinalities() {
        assert_eq!(build_index_set(21, 3).unwrap().len(), 2024);
        assert_eq!(brute_force_count(3, 2), 10);
        assert_eq!(build_index_set(3, 2).unwrap().len(), 10);
        assert_eq!(build_index_set(4, 0).unwrap().len(), 1);
    }

    #[test]
    fn cardinality_limit_names_would_be_size() {
        let err = build_index_set_with_limit(21, 3, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::Sizing {
                what: "basis cardinality m",
                value: 2024,
                limit: 1000
            }
        );
    }

    #[test]
    fn custom_set_rejects_bad_input() {
        assert!(MultiIndexSet::custom(1, vec![MultiIndex(vec![1])]).is_err());
        assert!(MultiIndexSet::custom(1, vec![MultiIndex(vec![0]), MultiIndex(vec![0])]).is_err());
        assert!(MultiIndexSet::custom(2, vec![MultiIndex(vec![0])]).is_err());
    }

    #[test]
    fn gauss_two_points() {
        let rule = univariate_rule(&Distribution1D::uniform(-1.0, 1.0).unwrap(), 2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((rule.nodes[0] + r).abs() < 1e-15 && (rule.nodes[1] - r).abs() < 1e-15);
        assert!((rule.weights[0] - 0.5).abs() < 1e-15 && (rule.weights[1] - 0.5).abs() < 1e-15);
        let second: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x * x).sum();
        assert!((second - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_one_point_is_midpoint() {
        let rule = univariate_rule(&Distribution1D::uniform(-1.0, 1.0).unwrap(), 1).unwrap();
        assert_eq!(rule.nodes, vec![0.0]);
        assert!((rule.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_three_points_integrate_fourth_moment() {
        let (a, b) = (0.9, 1.1);
        let rule = univariate_rule(&Distribution1D::uniform(a, b).unwrap(), 3).unwrap();
        let exact = (b.powi(5) - a.powi(5)) / (5.0 * (b - a));
        let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((got - exact).abs() < 1e-14, "{got} vs {exact}");
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn high_order_rules_converge() {
        let d = Distribution1D::uniform(-1.0, 1.0).unwrap();
        for order in [5, 20, 40, 64] {
            let rule = univariate_rule(&d, order).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let m = 2 * order - 2;
            let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(m as i32)).sum();
            assert!((got - 1.0 / (m as f64 + 1.0)).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn grid_sizes() {
        let s1 = BasisSpec::total_degree(unit_uniform(1), 2).unwrap();
        let g = build_quadrature(&s1, QuadratureMode::Tensor, 3).unwrap();
        assert_eq!(g.len(), 3);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let s2 = BasisSpec::total_degree(unit_uniform(2), 1).unwrap();
        assert_eq!(build_quadrature(&s2, QuadratureMode::Tensor, 2).unwrap().len(), 4);
    }

    #[test]
    fn smolyak_is_smaller_than_tensor() {
        // Oracle: enumerate the combination technique and count distinct nodes.
        let spec = BasisSpec::total_degree(unit_uniform(4), 2).unwrap();
        let g = build_quadrature(&spec, QuadratureMode::Smolyak, 3).unwrap();
        assert!(g.len() < 81, "{} nodes", g.len());
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn node_limit_is_enforced() {
        let spec = BasisSpec::total_degree(unit_uniform(10), 1).unwrap();
        assert!(matches!(
            build_quadrature_with_limit(&spec, QuadratureMode::Tensor, 4, 1000),
            Err(Error::Sizing { .. })
        ));
    }

    #[test]
    fn basis_values() {
        let s1 = BasisSpec::total_degree(unit_uniform(1), 1).unwrap();
        let v = eval_basis(&s1, &[1.0]).unwrap();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 3f64.sqrt()).abs() < 1e-15);

        let set = MultiIndexSet::custom(2, vec![MultiIndex(vec![0, 0]), MultiIndex(vec![1, 1])]).unwrap();
        let s2 = BasisSpec::new(unit_uniform(2), set).unwrap();
        let v = eval_basis(&s2, &[1.0, 1.0]).unwrap();
        assert!((v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_domain_policies() {
        let s = BasisSpec::total_degree(unit_uniform(1), 2).unwrap();
        assert!(matches!(eval_basis(&s, &[1.5]), Err(Error::Domain(_))));
        let v = eval_basis_with(&s, &[1.5], DomainPolicy::WarnAndExtrapolate).unwrap();
        assert!(v.extrapolated);
        assert!((v.values[1] - 1.5 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn expectation_examples() {
        let s = BasisSpec::total_degree(unit_uniform(1), 1).unwrap();
        let g = build_quadrature(&s, QuadratureMode::Tensor, 2).unwrap();
        let gram = expectation_tensors(&s, &g, |_| 1.0, Some(0)).unwrap();
        assert!((gram.matrix.clone() - DMatrix::identity(2, 2)).amax() < 1e-15);
        assert!(gram.warnings.is_empty());
        let t = expectation_tensors(&s, &g, |p| p[0], Some(1)).unwrap();
        // ∫ √3 p² / 2 dp over [-1, 1] = 1/√3.
        assert!((t.matrix[(0, 1)] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(t.matrix[(1, 1)].abs() < 1e-16);
    }

    #[test]
    fn exactness_shortfall_is_recorded() {
        let s = BasisSpec::total_degree(unit_uniform(1), 3).unwrap();
        let g = build_quadrature(&s, QuadratureMode::Tensor, 2).unwrap();
        let t = expectation_tensors(&s, &g, |_| 1.0, Some(0)).unwrap();
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn parameter_tensor_matches_quadrature() {
        let dists = vec![
            Distribution1D::uniform(0.9, 1.1).unwrap(),
            Distribution1D::uniform(-2.0, 3.0).unwrap(),
            Distribution1D::uniform(4.0, 4.5).unwrap(),
        ];
        let s = BasisSpec::total_degree(dists, 3).unwrap();
        let g = build_quadrature(&s, QuadratureMode::Tensor, 4).unwrap();
        for ell in 0..3 {
            let exact = parameter_tensor(&s, ell).unwrap().to_dense();
            let quad = expectation_tensors(&s, &g, |p| p[ell], Some(1)).unwrap().matrix;
            assert!((exact - quad).amax() < 1e-12);
        }
    }
}
