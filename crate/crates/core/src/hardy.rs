//! Hardy norms estimated from samples of the transfer function on the
//! imaginary axis.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::MultiIndexSet;
use crate::descriptor::DescriptorSystem;
use crate::error::{Error, Result};

/// Logarithmically spaced frequencies, optionally with `ω = 0` in front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub omegas: Vec<f64>,
    pub lower_decade: i32,
    pub upper_decade: i32,
    pub points_per_decade: usize,
    pub includes_zero: bool,
}

impl FrequencyGrid {
    pub fn logarithmic(lower_decade: i32, upper_decade: i32, points_per_decade: usize, include_zero: bool) -> Result<Self> {
        if upper_decade <= lower_decade || points_per_decade == 0 {
            return Err(Error::Parameter(format!(
                "frequency grid needs lower < upper decade and at least one point per decade, got {lower_decade}..{upper_decade} at {points_per_decade}"
            )));
        }
        let count = (upper_decade - lower_decade) as usize * points_per_decade;
        let mut omegas = Vec::with_capacity(count + 2);
        if include_zero {
            omegas.push(0.0);
        }
        for k in 0..=count {
            omegas.push(10f64.powf(lower_decade as f64 + k as f64 / points_per_decade as f64));
        }
        Ok(Self {
            omegas,
            lower_decade,
            upper_decade,
            points_per_decade,
            includes_zero: include_zero,
        })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

impl Default for FrequencyGrid {
    /// `10⁻²` to `10¹⁰` rad/s, 60 points per decade, plus `ω = 0`.
    fn default() -> Self {
        Self::logarithmic(-2, 10, 60, true).expect("valid default grid")
    }
}

/// `H(iω_j)` for every output (rows) and grid frequency (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSamples {
    pub grid: FrequencyGrid,
    pub values: DMatrix<Complex64>,
}

impl TransferSamples {
    pub fn n_out(&self) -> usize {
        self.values.nrows()
    }

    /// Largest magnitude over all outputs and frequencies.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pointwise difference `self − other` on the shared grid.
    pub fn difference(&self, other: &TransferSamples) -> Result<TransferSamples> {
        if self.values.shape() != other.values.shape() || self.grid.omegas != other.grid.omegas {
            return Err(Error::Shape(format!(
                "cannot subtract samples of shape {:?} and {:?}",
                self.values.shape(),
                other.values.shape()
            )));
        }
        Ok(TransferSamples {
            grid: self.grid.clone(),
            values: &self.values - &other.values,
        })
    }

    pub fn scaled(&self, alpha: f64) -> TransferSamples {
        TransferSamples {
            grid: self.grid.clone(),
            values: self.values.map(|z| z * alpha),
        }
    }
}

/// Samples `H(iω)` on the grid, one factorization per frequency.
pub fn sample_transfer(sys: &DescriptorSystem, grid: &FrequencyGrid) -> Result<TransferSamples> {
    let columns: Vec<Vec<Complex64>> = grid
        .omegas
        .par_iter()
        .map(|&w| sys.transfer_eval(Complex64::new(0.0, w)).map(|h| h.as_slice().to_vec()))
        .collect::<Result<_>>()?;
    let n_out = sys.n_out();
    let values = DMatrix::from_fn(n_out, grid.len(), |i, j| columns[j][i]);
    Ok(TransferSamples {
        grid: grid.clone(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HardyOptions {
    /// Refine the H∞ estimate by a parabola through the discrete maximum and
    /// its neighbours (in `ln ω`).
    pub refine_peak: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputNorms {
    pub h2: f64,
    pub hinf: f64,
    pub argmax_omega: f64,
    /// H2 contribution of `(ω_k, ∞)` under a `c/ω` decay model.
    pub tail: f64,
    /// False when the samples do not decay over the top decade.
    pub h2_valid: bool,
    /// Top-decade log-log slope of `|H|`.
    pub top_slope: f64,
    /// The tail exceeds one percent of the H2 estimate.
    pub tail_dominant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyNormReport {
    pub grid: FrequencyGrid,
    pub outputs: Vec<OutputNorms>,
    pub options: HardyOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    H2,
    Hinf,
}

impl HardyNormReport {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn values(&self, kind: NormKind) -> Vec<f64> {
        self.outputs
            .iter()
            .map(|o| match kind {
                NormKind::H2 => o.h2,
                NormKind::Hinf => o.hinf,
            })
            .collect()
    }

    pub fn all_h2_valid(&self) -> bool {
        self.outputs.iter().all(|o| o.h2_valid)
    }

    /// CSV with one row per output.
    pub fn to_csv(&self, basis: Option<&MultiIndexSet>) -> String {
        let mut out = String::from("output,multi_index,h2,hinf,argmax_omega,tail,h2_valid\n");
        for (i, o) in self.outputs.iter().enumerate() {
            let idx = basis.map(|b| b.get(i).to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                i, idx, o.h2, o.hinf, o.argmax_omega, o.tail, o.h2_valid
            );
        }
        out
    }
}

/// Per-output H2 and H∞ estimates.
pub fn hardy_norms(samples: &TransferSamples) -> HardyNormReport {
    hardy_norms_with(samples, HardyOptions::default(), samples.max_abs())
}

/// As [`hardy_norms`]; `scale` sets the magnitude below which a sample
/// counts as numerically zero (relative factor `1e-13`).
pub fn hardy_norms_with(samples: &TransferSamples, options: HardyOptions, scale: f64) -> HardyNormReport {
    let grid = &samples.grid;
    let w = &grid.omegas;
    let k = w.len();
    let floor = 1e-13 * scale;
    let decade_start = {
        let top = w[k - 1];
        w.iter().position(|&x| x >= top / 10.0 * (1.0 - 1e-12)).unwrap_or(0)
    };
    let outputs = (0..samples.n_out())
        .map(|i| {
            let mag: Vec<f64> = (0..k).map(|j| samples.values[(i, j)].norm()).collect();
            let (mut jmax, mut hinf) = (0, mag[0]);
            for (j, &v) in mag.iter().enumerate() {
                if v > hinf {
                    hinf = v;
                    jmax = j;
                }
            }
            let mut argmax_omega = w[jmax];
            if options.refine_peak && jmax > 0 && jmax + 1 < k && w[jmax - 1] > 0.0 {
                let (x0, x1, x2) = (w[jmax - 1].ln(), w[jmax].ln(), w[jmax + 1].ln());
                let (y0, y1, y2) = (mag[jmax - 1], mag[jmax], mag[jmax + 1]);
                let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
                let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
                let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
                if a < 0.0 {
                    let xv = -b / (2.0 * a);
                    if xv > x0 && xv < x2 {
                        let c = y1 - a * x1 * x1 - b * x1;
                        let yv = a * xv * xv + b * xv + c;
                        if yv > hinf {
                            hinf = yv;
                            argmax_omega = xv.exp();
                        }
                    }
                }
            }

            let mut integral = 0.0;
            for j in 1..k {
                integral += 0.5 * (w[j] - w[j - 1]) * (mag[j] * mag[j] + mag[j - 1] * mag[j - 1]);
            }
            let top = mag[k - 1];
            let tail = (top * top * w[k - 1] / std::f64::consts::PI).sqrt();
            let h2 = (integral / std::f64::consts::PI + tail * tail).sqrt();
            let below = mag[decade_start];
            let top_slope = if top > 0.0 && below > 0.0 {
                (top / below).log10() / (w[k - 1] / w[decade_start]).log10()
            } else {
                f64::NEG_INFINITY
            };
            let h2_valid = top <= floor || top_slope <= -0.5;
            OutputNorms {
                h2,
                hinf,
                argmax_omega,
                tail,
                h2_valid,
                top_slope,
                tail_dominant: tail > 0.01 * h2,
            }
        })
        .collect();
    HardyNormReport {
        grid: grid.clone(),
        outputs,
        options,
    }
}

/// Per-output norms of `H_A − H_B` on the shared grid.
pub fn difference_norms(sys_a: &DescriptorSystem, sys_b: &DescriptorSystem, grid: &FrequencyGrid) -> Result<HardyNormReport> {
    if sys_a.n_out() != sys_b.n_out() {
        return Err(Error::Shape(format!(
            "output counts differ: {} vs {}",
            sys_a.n_out(),
            sys_b.n_out()
        )));
    }
    let a = sample_transfer(sys_a, grid)?;
    let b = sample_transfer(sys_b, grid)?;
    difference_norms_from_samples(&a, &b)
}

/// As [`difference_norms`] with the samples of `H_A` already available.
pub fn difference_norms_from_samples(a: &TransferSamples, b: &TransferSamples) -> Result<HardyNormReport> {
    let diff = a.difference(b)?;
    Ok(hardy_norms_with(&diff, HardyOptions::default(), a.max_abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> DescriptorSystem {
        DescriptorSystem::from_dense(
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 722);
        assert_eq!(g.omegas[0], 0.0);
        assert!((g.omegas[1] - 1e-2).abs() < 1e-17);
        assert!((g.omegas[721] / 1e10 - 1.0).abs() < 1e-14);
        assert!(g.omegas.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn samples_of_first_order_system() {
        let grid = FrequencyGrid {
            omegas: vec![0.0, 1.0],
            lower_decade: 0,
            upper_decade: 0,
            points_per_decade: 1,
            includes_zero: true,
        };
        let s = sample_transfer(&first_order(), &grid).unwrap();
        assert!((s.values[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((s.values[(0, 1)].norm() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn analytic_norms() {
        let grid = FrequencyGrid::logarithmic(-3, 4, 100, true).unwrap();
        let r = hardy_norms(&sample_transfer(&first_order(), &grid).unwrap());
        let o = r.outputs[0];
        assert!((o.h2 - 0.5f64.sqrt()).abs() < 1e-4, "{}", o.h2);
        assert!((o.hinf - 1.0).abs() < 1e-6);
        assert!(o.h2_valid);
    }

    #[test]
    fn zero_and_scaled_transfer() {
        let grid = FrequencyGrid::logarithmic(-2, 3, 20, true).unwrap();
        let s = sample_transfer(&first_order(), &grid).unwrap();
        let zero = hardy_norms(&s.scaled(0.0));
        assert_eq!(zero.outputs[0].h2, 0.0);
        assert_eq!(zero.outputs[0].hinf, 0.0);
        let base = hardy_norms(&s).outputs[0];
        let scaled = hardy_norms(&s.scaled(-3.0)).outputs[0];
        assert!((scaled.h2 - 3.0 * base.h2).abs() < 1e-14);
        assert!((scaled.hinf - 3.0 * base.hinf).abs() < 1e-14);
    }

    #[test]
    fn nondecaying_samples_invalidate_h2() {
        let grid = FrequencyGrid::logarithmic(-2, 3, 20, true).unwrap();
        let values = DMatrix::from_element(1, grid.len(), Complex64::new(1.0, 0.0));
        let r = hardy_norms(&TransferSamples { grid, values });
        assert!(!r.outputs[0].h2_valid);
        assert_eq!(r.outputs[0].hinf, 1.0);
    }

    #[test]
    fn identical_systems_have_zero_difference() {
        let grid = FrequencyGrid::logarithmic(-2, 3, 10, true).unwrap();
        let r = difference_norms(&first_order(), &first_order(), &grid).unwrap();
        assert_eq!(r.outputs[0].h2, 0.0);
        assert!(r.outputs[0].h2_valid);
    }

    #[test]
    fn peak_refinement_never_lowers_hinf() {
        // Lightly damped second-order system with a peak between grid points.
        let sys = DescriptorSystem::from_dense(
            &DMatrix::identity(2, 2),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.05]),
            &DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        let grid = FrequencyGrid::logarithmic(-2, 2, 7, true).unwrap();
        let s = sample_transfer(&sys, &grid).unwrap();
        let plain = hardy_norms(&s).outputs[0].hinf;
        let refined = hardy_norms_with(&s, HardyOptions { refine_peak: true }, s.max_abs()).outputs[0].hinf;
        assert!(refined >= plain);
    }
}
