//! Pipeline configuration (TOML) and its resolution.
//!
//! ```toml
//! seed = 1
//! output = "out"
//!
//! [circuit]
//! benchmark = "lowpass"        # or "desk"; alternatively netlist = "filter.net"
//!
//! [basis]
//! degree = 2                   # total degree; or indices = [[0, 0], [1, 0], ...]
//!
//! [quadrature]                 # optional; tensor for q <= 4, else Smolyak
//! mode = "smolyak"
//! level = 3
//!
//! [frequency]
//! lower_decade = -2
//! upper_decade = 10
//! points_per_decade = 60
//! include_zero = true
//! refine_peak = false
//!
//! [sparsify]
//! norm = "h2"                  # or "hinf"
//! selection = { mode = "threshold", delta = 1e-2 }   # or { mode = "top_k", k = 20 }
//! table_deltas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
//! downsize_sweep = []          # kept-set sizes; empty = the table rows
//!
//! [mor]
//! s0 = 1e5                     # default: median modulus of the nominal poles
//! r_min = 10
//! r_max = 60
//! r_step = 5
//! deflation_thresholds = [1e-4, 1e-8, 1e-12]
//! system = "full"              # or "sparse" (the downsized system)
//!
//! [transient]
//! enabled = true
//! input = { kind = "windowed_sine", omega = 5e4, window = 2e-4 }
//! horizon = 1e-3
//! step = 2e-7
//! mc_samples = 200
//! ```
//!
//! Missing values are filled in by [`resolve`]; the resolved configuration
//! is what gets hashed and echoed next to every artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sgmor::basis::{BasisSpec, MultiIndex, MultiIndexSet, QuadratureMode};
use sgmor::circuits::{desk_netlist, lowpass_benchmark, mna_assemble, parse_netlist, CircuitNetlist};
use sgmor::descriptor::{pencil_spectrum, DEFAULT_DIM_CAP};
use sgmor::galerkin::ParametricSystem;
use sgmor::hardy::NormKind;
use sgmor::sparsify::SelectionMode;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub frequency: FrequencyConfig,
    #[serde(default)]
    pub sparsify: SparsifyConfig,
    #[serde(default)]
    pub mor: MorConfig,
    #[serde(default)]
    pub transient: TransientConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("sgmor-out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Lowpass,
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<Benchmark>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netlist: Option<PathBuf>,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            benchmark: Some(Benchmark::Lowpass),
            netlist: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Custom index set; overrides `degree`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<Vec<u32>>>,
}

fn default_degree() -> usize {
    2
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            degree: default_degree(),
            indices: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<QuadratureMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyConfig {
    pub lower_decade: i32,
    pub upper_decade: i32,
    pub points_per_decade: usize,
    pub include_zero: bool,
    pub refine_peak: bool,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        Self {
            lower_decade: -2,
            upper_decade: 10,
            points_per_decade: 60,
            include_zero: true,
            refine_peak: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparsifyConfig {
    pub norm: NormKind,
    pub selection: SelectionMode,
    pub table_deltas: Vec<f64>,
    pub downsize_sweep: Vec<usize>,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        Self {
            norm: NormKind::H2,
            selection: SelectionMode::Threshold { delta: 1e-2 },
            table_deltas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            downsize_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorTarget {
    Full,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    pub r_min: usize,
    pub r_max: usize,
    pub r_step: usize,
    pub deflation_thresholds: Vec<f64>,
    pub system: MorTarget,
}

impl Default for MorConfig {
    fn default() -> Self {
        Self {
            s0: None,
            r_min: 10,
            r_max: 60,
            r_step: 5,
            deflation_thresholds: sgmor::mor::DEFAULT_DEFLATION_THRESHOLDS.to_vec(),
            system: MorTarget::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    /// `sin²(πt/window)·sin(ωt)` on `[0, window]`, zero afterwards, scaled to
    /// unit L² norm.
    WindowedSine {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<f64>,
    },
}

impl InputSpec {
    /// Unnormalized input signal.
    pub fn shape(&self) -> impl Fn(f64) -> f64 {
        let InputSpec::WindowedSine { omega, window } = *self;
        let (omega, window) = (omega.unwrap_or(1.0), window.unwrap_or(1.0));
        move |t: f64| {
            if !(0.0..window).contains(&t) {
                return 0.0;
            }
            let env = (std::f64::consts::PI * t / window).sin();
            env * env * (omega * t).sin()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransientConfig {
    pub enabled: bool,
    pub input: InputSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub mc_samples: usize,
}

impl Default for TransientConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            input: InputSpec::WindowedSine { omega: None, window: None },
            horizon: None,
            step: None,
            mc_samples: 200,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative netlist paths are taken relative to the config file.
        if let (Some(net), Some(dir)) = (&cfg.circuit.netlist, path.parent()) {
            if net.is_relative() {
                cfg.circuit.netlist = Some(dir.join(net));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match (&self.circuit.benchmark, &self.circuit.netlist) {
            (Some(_), Some(_)) => return bad("circuit: give either `benchmark` or `netlist`, not both".into()),
            (None, None) => return bad("circuit: one of `benchmark` or `netlist` is required".into()),
            _ => {}
        }
        let f = &self.frequency;
        if f.upper_decade <= f.lower_decade || f.points_per_decade == 0 {
            return bad("frequency: need lower_decade < upper_decade and points_per_decade > 0".into());
        }
        if self.quadrature.level == Some(0) {
            return bad("quadrature: level must be at least 1".into());
        }
        let s = &self.sparsify;
        if s.table_deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return bad("sparsify: table_deltas must lie in (0, 1)".into());
        }
        match s.selection {
            SelectionMode::TopK { k: 0 } => return bad("sparsify: k must be positive".into()),
            SelectionMode::Threshold { delta } if !(delta > 0.0) => {
                return bad("sparsify: delta must be positive".into())
            }
            _ => {}
        }
        let m = &self.mor;
        if m.r_min == 0 || m.r_min > m.r_max || m.r_step == 0 {
            return bad("mor: need 1 <= r_min <= r_max and r_step > 0".into());
        }
        if m.deflation_thresholds.iter().any(|&t| !(t > 0.0)) {
            return bad("mor: deflation thresholds must be positive".into());
        }
        if let Some(s0) = m.s0 {
            if !(s0.is_finite() && s0 > 0.0) {
                return bad("mor: s0 must be a positive real number".into());
            }
        }
        let t = &self.transient;
        for (name, v) in [("horizon", t.horizon), ("step", t.step)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("transient: {name} must be positive"));
                }
            }
        }
        let InputSpec::WindowedSine { omega, window } = t.input;
        if omega.is_some_and(|w| !(w.is_finite() && w > 0.0)) || window.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
            return bad("transient: omega and window must be positive".into());
        }
        Ok(())
    }
}

/// A configuration with every default made explicit, plus what was built
/// while resolving it.
pub struct Resolved {
    pub config: PipelineConfig,
    pub hash: String,
    pub netlist: CircuitNetlist,
    pub psys: ParametricSystem,
    pub spec: BasisSpec,
}

fn load_netlist(c: &CircuitConfig) -> Result<CircuitNetlist, CliError> {
    match (&c.benchmark, &c.netlist) {
        (Some(Benchmark::Lowpass), _) => Ok(lowpass_benchmark()),
        (Some(Benchmark::Desk), _) => Ok(desk_netlist()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read netlist {}: {e}", path.display())))?;
            parse_netlist(&text).map_err(|e| CliError::stage("config", e))
        }
        (None, None) => Err(CliError::Config("no circuit given".into())),
    }
}

/// Median modulus of the nominal finite poles.
fn spectral_scale(psys: &ParametricSystem) -> Result<f64, CliError> {
    let sys = psys.nominal().map_err(|e| CliError::stage("config", e))?;
    let rep = pencil_spectrum(&sys, DEFAULT_DIM_CAP).map_err(|e| CliError::stage("config", e))?;
    let mut moduli: Vec<f64> = rep.finite_eigenvalues.iter().map(|z| z.norm()).filter(|&v| v > 0.0).collect();
    if moduli.is_empty() {
        return Ok(1.0);
    }
    moduli.sort_by(f64::total_cmp);
    Ok(moduli[moduli.len() / 2])
}

/// Validates `config`, builds the circuit and fills in derived defaults.
pub fn resolve(mut config: PipelineConfig) -> Result<Resolved, CliError> {
    config.validate()?;
    let netlist = load_netlist(&config.circuit)?;
    let psys = mna_assemble(&netlist).map_err(|e| CliError::stage("config", e))?;
    let dists = psys.distributions().to_vec();
    let spec = match &config.basis.indices {
        Some(list) => {
            let set = MultiIndexSet::custom(psys.q(), list.iter().map(|v| MultiIndex(v.clone())).collect())
                .map_err(|e| CliError::stage("config", e))?;
            BasisSpec::new(dists, set)
        }
        None => BasisSpec::total_degree(dists, config.basis.degree),
    }
    .map_err(|e| CliError::stage("config", e))?;

    let q = &mut config.quadrature;
    q.level.get_or_insert(spec.index_set().max_degree() as usize + 1);
    q.mode.get_or_insert(if spec.q() <= 4 {
        QuadratureMode::Tensor
    } else {
        QuadratureMode::Smolyak
    });

    let s0 = match config.mor.s0 {
        Some(s) => s,
        None => spectral_scale(&psys)?,
    };
    config.mor.s0 = Some(s0);
    let t = &mut config.transient;
    let InputSpec::WindowedSine { omega, window } = t.input;
    t.input = InputSpec::WindowedSine {
        omega: Some(omega.unwrap_or(0.5 * s0)),
        window: Some(window.unwrap_or(20.0 / s0)),
    };
    let horizon = *t.horizon.get_or_insert(100.0 / s0);
    t.step.get_or_insert(horizon / 5000.0);
    let hash = config_hash(&config);
    Ok(Resolved {
        config,
        hash,
        netlist,
        psys,
        spec,
    })
}

/// SHA-256 of the resolved configuration without the output directory.
pub fn config_hash(config: &PipelineConfig) -> String {
    let mut c = config.clone();
    c.output = PathBuf::new();
    let mut h = Sha256::new();
    h.update(c.to_toml().as_bytes());
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = PipelineConfig::from_toml("").unwrap();
        assert_eq!(cfg.circuit.benchmark, Some(Benchmark::Lowpass));
        assert_eq!(cfg.basis.degree, 2);
        assert_eq!(cfg.frequency.points_per_decade, 60);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(PipelineConfig::from_toml("[basis]\ndegre = 3"), Err(CliError::Config(_))));
    }

    #[test]
    fn selection_modes_parse() {
        let cfg = PipelineConfig::from_toml("[sparsify]\nselection = { mode = \"top_k\", k = 7 }").unwrap();
        assert_eq!(cfg.sparsify.selection, SelectionMode::TopK { k: 7 });
    }

    #[test]
    fn resolution_fills_transient_defaults() {
        let cfg = PipelineConfig::from_toml("[circuit]\nbenchmark = \"desk\"").unwrap();
        let r = resolve(cfg).unwrap();
        let s0 = r.config.mor.s0.unwrap();
        assert!(s0 > 0.0);
        assert_eq!(r.config.transient.horizon, Some(100.0 / s0));
        // Hash is stable and independent of the output directory.
        let mut other = r.config.clone();
        other.output = PathBuf::from("elsewhere");
        assert_eq!(config_hash(&other), r.hash);
        let again = resolve(PipelineConfig::from_toml(&r.config.to_toml()).unwrap()).unwrap();
        assert_eq!(again.hash, r.hash);
    }

    #[test]
    fn conflicting_circuit_is_rejected() {
        let cfg = PipelineConfig::from_toml("[circuit]\nbenchmark = \"desk\"\nnetlist = \"x.net\"").unwrap();
        assert!(matches!(resolve(cfg), Err(CliError::Config(_))));
    }
}
