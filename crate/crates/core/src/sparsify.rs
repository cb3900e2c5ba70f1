//! Pruning of the polynomial basis by the Hardy norms of the Galerkin
//! output components, and the error certificates that go with it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::basis::{eval_basis, BasisSpec};
use crate::error::{Error, Result};
use crate::galerkin::Selection;
use crate::hardy::{HardyNormReport, NormKind};

/// Outputs ordered by decreasing norm with the cumulative ratios `θ_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRanking {
    pub kind: NormKind,
    /// Output indices by decreasing norm; ties go to the lower index.
    pub order: Vec<usize>,
    /// Norm of every output, indexed by output.
    pub norms: Vec<f64>,
    /// `theta[r - 1]` is the captured fraction with the `r` largest norms.
    pub theta: Vec<f64>,
    /// `sqrt(Σ norms²)`.
    pub total: f64,
}

impl NormRanking {
    pub fn m(&self) -> usize {
        self.norms.len()
    }

    /// `θ_r` curve as CSV.
    pub fn theta_csv(&self) -> String {
        let mut out = String::from("r,output,norm,theta\n");
        for (r, (&i, &t)) in self.order.iter().zip(&self.theta).enumerate() {
            let _ = writeln!(out, "{},{},{:.16e},{:.16e}", r + 1, i, self.norms[i], t);
        }
        out
    }

    /// Smallest `r` with `θ_r ≥ 1 − δ`.
    pub fn minimal_r(&self, delta: f64) -> Result<usize> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("threshold must be positive, got {delta}")));
        }
        let target = 1.0 - delta;
        Ok(self.theta.iter().position(|&t| t >= target).map_or(self.m(), |p| p + 1))
    }

    pub fn table_row(&self, delta: f64) -> Result<TableRow> {
        let r = self.minimal_r(delta)?;
        Ok(TableRow {
            kind: self.kind,
            delta,
            r,
            m: self.m(),
            percent: 100.0 * r as f64 / self.m() as f64,
        })
    }
}

/// Minimal cardinality reaching `θ_r ≥ 1 − δ` and its share of `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub kind: NormKind,
    pub delta: f64,
    pub r: usize,
    pub m: usize,
    pub percent: f64,
}

pub fn rank_and_theta(report: &HardyNormReport, kind: NormKind) -> Result<NormRanking> {
    rank_norms(report.values(kind), kind)
}

pub fn rank_norms(norms: Vec<f64>, kind: NormKind) -> Result<NormRanking> {
    if norms.is_empty() || norms.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateRanking);
    }
    if norms.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Parameter("norms must be finite and nonnegative".into()));
    }
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut cumulative = Vec::with_capacity(norms.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += norms[i] * norms[i];
        cumulative.push(acc);
    }
    let total_sq = acc;
    let theta = cumulative.iter().map(|c| (c / total_sq).sqrt().min(1.0)).collect();
    Ok(NormRanking {
        kind,
        order,
        norms,
        theta,
        total: total_sq.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SelectionMode {
    /// The `k` largest norms.
    TopK { k: usize },
    /// The smallest set whose dropped squared norms sum below `δ²`.
    Threshold { delta: f64 },
}

/// Selection from a ranking; the constant basis function is always kept.
pub fn select_indices(ranking: &NormRanking, mode: SelectionMode) -> Result<Selection> {
    let m = ranking.m();
    match mode {
        SelectionMode::TopK { k } => {
            if k == 0 || k > m {
                return Err(Error::Parameter(format!("k must lie in 1..={m}, got {k}")));
            }
            Selection::new(m, ranking.order[..k].iter().copied())
        }
        SelectionMode::Threshold { delta } => {
            if !(delta > 0.0) {
                return Err(Error::Parameter(format!("threshold must be positive, got {delta}")));
            }
            let d2 = delta * delta;
            // tail[r] = Σ of squared norms outside the r largest, summed small-first.
            let mut tail = vec![0.0; m + 1];
            for r in (0..m).rev() {
                let v = ranking.norms[ranking.order[r]];
                tail[r] = tail[r + 1] + v * v;
            }
            if d2 >= tail[0] {
                return Selection::new(m, [0]);
            }
            let r = (0..=m).find(|&r| tail[r] < d2).unwrap_or(m);
            Selection::new(m, ranking.order[..r].iter().copied())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Dropping outputs of the Galerkin system.
    Pruning,
    /// Comparing the Galerkin system with a reduced system.
    Reduction,
}

/// Frequency grid the certificate's norm estimates came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub lower_decade: i32,
    pub upper_decade: i32,
    pub points_per_decade: usize,
    pub points: usize,
    pub includes_zero: bool,
    /// Largest tail share of any H2 estimate used.
    pub max_tail_ratio: f64,
}

impl GridSummary {
    fn of(report: &HardyNormReport) -> Self {
        let g = &report.grid;
        GridSummary {
            lower_decade: g.lower_decade,
            upper_decade: g.upper_decade,
            points_per_decade: g.points_per_decade,
            points: g.len(),
            includes_zero: g.includes_zero,
            max_tail_ratio: report
                .outputs
                .iter()
                .filter(|o| o.h2 > 0.0)
                .map(|o| o.tail / o.h2)
                .fold(0.0, f64::max),
        }
    }
}

/// Upper bounds for the output error under an input of norm `input_l2`:
/// `bound_sup` bounds `sup_t ‖error(t)‖` (from H2 norms), `bound_l2` bounds
/// the space-time norm (from H∞ norms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub bound_sup: f64,
    pub bound_l2: f64,
    pub input_l2: f64,
    pub provenance: Provenance,
    /// Root-sum-square of the dropped outputs' H2 norms, scaled by the input.
    pub lower_floor_sup: Option<f64>,
    /// Same with H∞ norms.
    pub lower_floor_l2: Option<f64>,
    /// Non-empty when an assumption behind the bounds is not met.
    pub conditions: Vec<String>,
    pub grid: GridSummary,
}

impl BoundCertificate {
    pub fn conditional(&self) -> bool {
        !self.conditions.is_empty()
    }
}

fn rss(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

fn check_input(input_l2: f64) -> Result<()> {
    if !(input_l2 >= 0.0) || !input_l2.is_finite() {
        return Err(Error::Parameter(format!("input norm must be finite and nonnegative, got {input_l2}")));
    }
    Ok(())
}

/// Bounds for dropping the outputs outside `sel` from the Galerkin output.
pub fn pruning_certificate(report: &HardyNormReport, sel: &Selection, input_l2: f64) -> Result<BoundCertificate> {
    check_input(input_l2)?;
    if report.len() != sel.m() {
        return Err(Error::Shape(format!(
            "report has {} outputs, selection covers {}",
            report.len(),
            sel.m()
        )));
    }
    let dropped = || sel.dropped().iter().map(|&i| &report.outputs[i]);
    let mut conditions = Vec::new();
    let invalid = dropped().filter(|o| !o.h2_valid).count();
    if invalid > 0 {
        conditions.push(format!(
            "{invalid} dropped outputs do not decay at high frequency; the H2-based bound assumes strict properness"
        ));
    }
    Ok(BoundCertificate {
        bound_sup: rss(dropped().map(|o| o.h2)) * input_l2,
        bound_l2: rss(dropped().map(|o| o.hinf)) * input_l2,
        input_l2,
        provenance: Provenance::Pruning,
        lower_floor_sup: None,
        lower_floor_l2: None,
        conditions,
        grid: GridSummary::of(report),
    })
}

/// Bounds from the per-output norms of `Ĥ_i − H̄_i`. When the reduced
/// system came from dropping basis functions, pass the norms of the full
/// system and the selection to attach the floor set by the dropped outputs.
pub fn reduction_certificate(
    diff_report: &HardyNormReport,
    input_l2: f64,
    floor: Option<(&HardyNormReport, &Selection)>,
) -> Result<BoundCertificate> {
    check_input(input_l2)?;
    let mut conditions = Vec::new();
    let invalid = diff_report.outputs.iter().filter(|o| !o.h2_valid).count();
    if invalid > 0 {
        conditions.push(format!(
            "{invalid} error components do not decay at high frequency; the H2-based bound assumes strict properness"
        ));
    }
    let (lower_floor_sup, lower_floor_l2) = match floor {
        Some((full, sel)) => {
            if full.len() != sel.m() || full.len() != diff_report.len() {
                return Err(Error::Shape("floor report and selection sizes differ".into()));
            }
            let dropped = || sel.dropped().iter().map(|&i| &full.outputs[i]);
            (
                Some(rss(dropped().map(|o| o.h2)) * input_l2),
                Some(rss(dropped().map(|o| o.hinf)) * input_l2),
            )
        }
        None => (None, None),
    };
    Ok(BoundCertificate {
        bound_sup: rss(diff_report.outputs.iter().map(|o| o.h2)) * input_l2,
        bound_l2: rss(diff_report.outputs.iter().map(|o| o.hinf)) * input_l2,
        input_l2,
        provenance: Provenance::Reduction,
        lower_floor_sup,
        lower_floor_l2,
        conditions,
        grid: GridSummary::of(diff_report),
    })
}

/// `Σ_{i ∈ I′} ŵ_i Φ_i(p)` for the coefficient values `ŵ` (indexed by
/// basis function) at one time instant.
pub fn sparse_output_eval(coeffs: &[f64], spec: &BasisSpec, sel: &Selection, p: &[f64]) -> Result<f64> {
    if coeffs.len() != spec.len() || sel.m() != spec.len() {
        return Err(Error::Shape(format!(
            "{} coefficients and a selection over {} for a basis of size {}",
            coeffs.len(),
            sel.m(),
            spec.len()
        )));
    }
    let phi = eval_basis(spec, p)?;
    Ok(sel.kept().iter().map(|&i| coeffs[i] * phi[i]).sum())
}
