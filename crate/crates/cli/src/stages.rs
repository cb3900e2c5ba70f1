use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sgmor::basis::{build_quadrature, eval_basis, QuadratureMode};
use sgmor::descriptor::{
    pencil_spectrum, simulate_transient, simulate_transient_with, trapezoid_l2, SimulationOptions, Trajectory,
    DEFAULT_DIM_CAP,
};
use sgmor::galerkin::{assemble, downsize, GalerkinSystem, Selection};
use sgmor::hardy::{
    difference_norms_from_samples, hardy_norms_with, sample_transfer, FrequencyGrid, HardyNormReport, HardyOptions,
    NormKind, TransferSamples,
};
use sgmor::mor::{deflate, krylov_basis, svd_basis};
use sgmor::sparsify::{pruning_certificate, rank_and_theta, reduction_certificate, select_indices, SelectionMode};

use crate::artifacts::{field, num, OutputDir};
use crate::config::{MorTarget, Resolved};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Assemble,
    Norms,
    Sparsify,
    Reduce,
    Simulate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Assemble,
        Stage::Norms,
        Stage::Sparsify,
        Stage::Reduce,
        Stage::Simulate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Assemble => "assemble",
            Stage::Norms => "norms",
            Stage::Sparsify => "sparsify",
            Stage::Reduce => "reduce",
            Stage::Simulate => "simulate",
            Stage::Report => "report",
        }
    }

    fn artifact(self) -> &'static str {
        match self {
            Stage::Assemble => "assembly.json",
            Stage::Norms => "norms.json",
            Stage::Sparsify => "sparsify.json",
            Stage::Reduce => "reduce.json",
            Stage::Simulate => "validation.json",
            Stage::Report => "report.json",
        }
    }
}

pub struct Pipeline {
    pub resolved: Resolved,
    pub out: OutputDir,
}

impl Pipeline {
    /// Prepares the output directory and echoes the resolved configuration.
    pub fn new(resolved: Resolved) -> Result<Self, CliError> {
        let out = OutputDir::create(&resolved.config.output, &resolved.hash)?;
        let echo = format!("# config_hash={}\n{}", resolved.hash, resolved.config.to_toml());
        out.write_raw("setup", "resolved.toml", &echo)?;
        Ok(Self { resolved, out })
    }

    /// Hash of the configuration sections `stage` depends on, so that
    /// changing e.g. the reduction orders does not invalidate the assembly.
    pub fn stage_key(&self, stage: Stage) -> String {
        let cfg = &self.resolved.config;
        let mut sections = vec!["basis", "quadrature"];
        match stage {
            Stage::Assemble => {}
            Stage::Norms => sections.push("frequency"),
            Stage::Sparsify => sections.extend(["frequency", "sparsify"]),
            Stage::Reduce => {
                sections.extend(["frequency", "mor", "transient"]);
                if cfg.mor.system == MorTarget::Sparse {
                    sections.push("sparsify");
                }
            }
            Stage::Simulate => sections.extend(["frequency", "sparsify", "transient", "seed"]),
            Stage::Report => return self.resolved.hash.clone(),
        }
        let full = toml::Table::try_from(cfg).expect("configuration serializes");
        let mut subset = toml::Table::new();
        for s in sections {
            if let Some(v) = full.get(s) {
                subset.insert(s.into(), v.clone());
            }
        }
        subset.insert("netlist".into(), toml::Value::String(self.resolved.netlist.to_text()));
        let mut h = Sha256::new();
        h.update(toml::to_string(&subset).expect("table serializes").as_bytes());
        hex::encode(h.finalize())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<String, CliError> {
        match stage {
            Stage::Assemble => self.assemble(),
            Stage::Norms => self.norms(),
            Stage::Sparsify => self.sparsify(),
            Stage::Reduce => self.reduce(),
            Stage::Simulate => self.simulate(),
            Stage::Report => self.report(),
        }
    }

    /// All stages in order; stops at the first failure, leaving the
    /// artifacts written so far in place.
    pub fn run_all(&self, mut log: impl FnMut(Stage, &str)) -> Result<(), CliError> {
        for stage in Stage::ALL {
            let summary = self.run_stage(stage)?;
            log(stage, &summary);
        }
        Ok(())
    }

    fn write_json(&self, stage: Stage, fields: Value) -> Result<(), CliError> {
        self.out
            .write_json(stage.name(), stage.artifact(), &self.stage_key(stage), fields)
    }

    fn upstream(&self, consumer: Stage, producer: Stage) -> Result<Value, CliError> {
        self.out.read_upstream(
            consumer.name(),
            producer.name(),
            producer.artifact(),
            &self.stage_key(producer),
        )
    }

    fn grid(&self) -> Result<FrequencyGrid, CliError> {
        let f = &self.resolved.config.frequency;
        FrequencyGrid::logarithmic(f.lower_decade, f.upper_decade, f.points_per_decade, f.include_zero)
            .map_err(|e| CliError::stage("norms", e))
    }

    fn hardy(&self, samples: &TransferSamples) -> HardyNormReport {
        let options = HardyOptions {
            refine_peak: self.resolved.config.frequency.refine_peak,
        };
        hardy_norms_with(samples, options, samples.max_abs())
    }

    fn load_galerkin(&self, consumer: Stage) -> Result<GalerkinSystem, CliError> {
        self.upstream(consumer, Stage::Assemble)?;
        let stage = consumer.name();
        let g = GalerkinSystem::read(&self.out.path("galerkin"))
            .map_err(|e| CliError::dependency(stage, format!("cannot read the Galerkin system: {e}")))?;
        if g.basis() != self.resolved.spec.index_set() {
            return Err(CliError::dependency(stage, "stored Galerkin basis differs from the configured basis"));
        }
        Ok(g)
    }

    fn load_norms(&self, consumer: Stage) -> Result<HardyNormReport, CliError> {
        let v = self.upstream(consumer, Stage::Norms)?;
        field(consumer.name(), &v, "report")
    }

    fn load_selection(&self, consumer: Stage) -> Result<Selection, CliError> {
        let v = self.upstream(consumer, Stage::Sparsify)?;
        let m: usize = field(consumer.name(), &v, "m")?;
        let kept: Vec<usize> = field(consumer.name(), &v, "kept")?;
        Selection::new(m, kept).map_err(|e| CliError::dependency(consumer.name(), e.to_string()))
    }

    /// Unit-L² windowed sine on the configured time grid.
    fn input(&self, stage: &'static str) -> Result<(impl Fn(f64) -> f64, f64, f64), CliError> {
        let t = &self.resolved.config.transient;
        let (horizon, step) = (t.horizon.expect("resolved"), t.step.expect("resolved"));
        let shape = t.input.shape();
        let steps = (horizon / step).round() as usize;
        let l2 = trapezoid_l2((0..=steps).map(|k| shape(k as f64 * step)), step);
        if !(l2 > 0.0) {
            return Err(CliError::Config(format!(
                "{stage}: the input vanishes on the time grid; widen the window or refine the step"
            )));
        }
        Ok((move |x: f64| shape(x) / l2, horizon, step))
    }

    fn assemble(&self) -> Result<String, CliError> {
        const S: &str = "assemble";
        let r = &self.resolved;
        let err = |e| CliError::stage(S, e);
        let nominal = r.psys.nominal().map_err(err)?;
        let spectrum = pencil_spectrum(&nominal, DEFAULT_DIM_CAP).map_err(err)?;
        let q = &r.config.quadrature;
        let quad = build_quadrature(
            &r.spec,
            q.mode.unwrap_or(QuadratureMode::Smolyak),
            q.level.expect("resolved"),
        )
        .map_err(err)?;
        let g = assemble(&r.psys, &r.spec, &quad).map_err(err)?;

        let out = &self.out;
        out.write_raw(S, "netlist.txt", &format!("# config_hash={}\n{}", out.hash(), r.netlist.to_text()))?;
        nominal.write_mtx(out.root(), "nominal_").map_err(err)?;
        let gdir = out.path("galerkin");
        std::fs::create_dir_all(&gdir).map_err(|e| CliError::io(S, e))?;
        g.write(&gdir).map_err(err)?;
        for name in ["E", "A", "B", "C"] {
            out.stamp_mtx(S, &out.path(&format!("nominal_{name}.mtx")))?;
            out.stamp_mtx(S, &gdir.join(format!("galerkin_{name}.mtx")))?;
        }
        out.stamp_json(S, &gdir.join("galerkin.json"))?;

        let max_re = spectrum
            .finite_eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let parameters: Vec<Value> = r
            .netlist
            .parameters()
            .iter()
            .map(|e| json!({"name": e.name, "nominal": e.nominal, "tolerance": e.tolerance}))
            .collect();
        self.write_json(
            Stage::Assemble,
            json!({
                "q": r.psys.q(),
                "n": r.psys.n(),
                "m": g.m(),
                "dimension": g.dim(),
                "max_degree": r.spec.index_set().max_degree(),
                "assembly": g.info(),
                "quadrature_nodes": quad.len(),
                "nominal": {
                    "stable": spectrum.stable,
                    "index_at_most_one": spectrum.index_at_most_one,
                    "finite_poles": spectrum.finite_eigenvalues.len(),
                    "max_real_part": max_re,
                    "spectrum_method": format!("{:?}", spectrum.method),
                },
                "parameters": parameters,
            }),
        )?;
        Ok(format!("q={}, n={}, m={}, dimension {}", r.psys.q(), r.psys.n(), g.m(), g.dim()))
    }

    fn norms(&self) -> Result<String, CliError> {
        const S: &str = "norms";
        let g = self.load_galerkin(Stage::Norms)?;
        let samples = sample_transfer(g.system(), &self.grid()?).map_err(|e| CliError::stage(S, e))?;
        let report = self.hardy(&samples);
        self.out.write_csv(S, "norms.csv", &report.to_csv(Some(g.basis())))?;

        let max_deg = g.basis().max_degree();
        let mut by_degree = String::from("degree,count,median_h2,median_hinf,max_h2,max_hinf\n");
        let mut medians = Vec::new();
        for d in 0..=max_deg {
            let members: Vec<usize> = (0..g.m()).filter(|&i| g.output_index(i).total_degree() == d).collect();
            if members.is_empty() {
                continue;
            }
            let h2: Vec<f64> = members.iter().map(|&i| report.outputs[i].h2).collect();
            let hinf: Vec<f64> = members.iter().map(|&i| report.outputs[i].hinf).collect();
            let (mh2, mhinf) = (median(&h2), median(&hinf));
            medians.push(json!({"degree": d, "count": members.len(), "median_h2": mh2, "median_hinf": mhinf}));
            let _ = writeln!(
                by_degree,
                "{d},{},{},{},{},{}",
                members.len(),
                num(mh2),
                num(mhinf),
                num(h2.iter().copied().fold(0.0, f64::max)),
                num(hinf.iter().copied().fold(0.0, f64::max)),
            );
        }
        self.out.write_csv(S, "norms_by_degree.csv", &by_degree)?;
        let invalid = report.outputs.iter().filter(|o| !o.h2_valid).count();
        self.write_json(
            Stage::Norms,
            json!({
                "points": report.grid.len(),
                "outputs_without_decay": invalid,
                "by_degree": medians,
                "report": report,
            }),
        )?;
        Ok(format!("{} outputs on {} frequencies", report.len(), report.grid.len()))
    }

    fn sparsify(&self) -> Result<String, CliError> {
        const S: &str = "sparsify";
        let err = |e| CliError::stage(S, e);
        let g = self.load_galerkin(Stage::Sparsify)?;
        let report = self.load_norms(Stage::Sparsify)?;
        let cfg = &self.resolved.config.sparsify;

        let mut table = String::from("norm,delta,r,m,percent\n");
        let mut rows = Vec::new();
        let mut ranking = None;
        for (kind, file) in [(NormKind::H2, "theta_h2.csv"), (NormKind::Hinf, "theta_hinf.csv")] {
            let rk = rank_and_theta(&report, kind).map_err(err)?;
            self.out.write_csv(S, file, &rk.theta_csv())?;
            for &delta in &cfg.table_deltas {
                let row = rk.table_row(delta).map_err(err)?;
                let _ = writeln!(
                    table,
                    "{},{},{},{},{}",
                    kind_name(kind),
                    num(delta),
                    row.r,
                    row.m,
                    num(row.percent)
                );
                rows.push(row);
            }
            if kind == cfg.norm {
                ranking = Some(rk);
            }
        }
        self.out.write_csv(S, "table.csv", &table)?;
        let ranking = ranking.expect("configured norm is ranked");

        let sel = select_indices(&ranking, cfg.selection).map_err(err)?;
        let pruning = pruning_certificate(&report, &sel, 1.0).map_err(err)?;

        let grid = self.grid()?;
        let full = sample_transfer(g.system(), &grid).map_err(err)?;
        let downsize_cert = |sel: &Selection| {
            let down = downsize(&g, sel)?;
            let diff = difference_norms_from_samples(&full, &sample_transfer(down.system(), &grid)?)?;
            reduction_certificate(&diff, 1.0, Some((&report, sel)))
        };
        let selected_downsize = downsize_cert(&sel).map_err(err)?;

        let mut sizes: Vec<usize> = if cfg.downsize_sweep.is_empty() {
            rows.iter().filter(|row| row.kind == cfg.norm).map(|row| row.r).collect()
        } else {
            cfg.downsize_sweep.iter().map(|&k| k.clamp(1, g.m())).collect()
        };
        sizes.sort_unstable();
        sizes.dedup();
        let mut sweep_csv =
            String::from("k,kept,dimension,bound_sup,bound_l2,floor_sup,floor_l2,pruning_sup,pruning_l2\n");
        let mut sweep = Vec::new();
        for k in sizes {
            let sel_k = select_indices(&ranking, SelectionMode::TopK { k }).map_err(err)?;
            let cert = downsize_cert(&sel_k).map_err(err)?;
            let prune = pruning_certificate(&report, &sel_k, 1.0).map_err(err)?;
            let _ = writeln!(
                sweep_csv,
                "{k},{},{},{},{},{},{},{},{}",
                sel_k.kept().len(),
                sel_k.kept().len() * g.block_dim(),
                num(cert.bound_sup),
                num(cert.bound_l2),
                num(cert.lower_floor_sup.unwrap_or(f64::NAN)),
                num(cert.lower_floor_l2.unwrap_or(f64::NAN)),
                num(prune.bound_sup),
                num(prune.bound_l2),
            );
            sweep.push(json!({"k": k, "kept": sel_k.kept().len(), "certificate": cert, "pruning": prune}));
        }
        self.out.write_csv(S, "downsize_bounds.csv", &sweep_csv)?;

        let kept_labels: Vec<String> = sel.kept().iter().map(|&i| g.output_index(i).to_string()).collect();
        self.out.write_json(
            S,
            "selection.json",
            &self.stage_key(Stage::Sparsify),
            json!({"m": g.m(), "mode": cfg.selection, "norm": cfg.norm, "kept": sel.kept(), "kept_indices": kept_labels}),
        )?;
        self.write_json(
            Stage::Sparsify,
            json!({
                "m": g.m(),
                "norm": cfg.norm,
                "mode": cfg.selection,
                "kept": sel.kept(),
                "dropped": sel.dropped().len(),
                "table": rows,
                "pruning": pruning,
                "downsize": selected_downsize,
                "downsize_sweep": sweep,
            }),
        )?;
        Ok(format!(
            "kept {} of {} outputs; pruning bound {:.3e} (sup), {:.3e} (L2) per unit input",
            sel.kept().len(),
            g.m(),
            pruning.bound_sup,
            pruning.bound_l2
        ))
    }

    fn reduce(&self) -> Result<String, CliError> {
        const S: &str = "reduce";
        let err = |e| CliError::stage(S, e);
        let cfg = &self.resolved.config;
        let mor = &cfg.mor;
        let s0 = mor.s0.expect("resolved");
        let g = self.load_galerkin(Stage::Reduce)?;
        let grid = self.grid()?;
        let full = sample_transfer(g.system(), &grid).map_err(err)?;

        let (target, floor) = match mor.system {
            MorTarget::Full => (None, None),
            MorTarget::Sparse => {
                let sel = self.load_selection(Stage::Reduce)?;
                let report = self.load_norms(Stage::Reduce)?;
                (Some(downsize(&g, &sel).map_err(err)?), Some((report, sel)))
            }
        };
        let source = target.as_ref().unwrap_or(&g);
        let kb = krylov_basis(source, s0, mor.r_max.min(source.dim())).map_err(err)?;
        let orders: Vec<usize> = (mor.r_min..=mor.r_max).step_by(mor.r_step).collect();
        let (mut usable, skipped): (Vec<usize>, Vec<usize>) = orders.iter().partition(|&&r| r <= kb.dim());
        if usable.is_empty() {
            // The whole Krylov space is smaller than every requested order.
            usable.push(kb.dim());
        }

        let transient = if cfg.transient.enabled {
            Some(self.input(S)?)
        } else {
            None
        };
        let mut bounds_csv = String::from("r,stable,bound_sup,bound_l2,floor_sup,floor_l2\n");
        let mut svals_csv = String::from("r,l,singular_value\n");
        let mut kappa_csv = String::from("r,i,kappa\n");
        let mut defl_csv = String::from("r,threshold,r_prime,ratio,s_next,factor,aggregate,max_pointwise\n");
        let (mut entries, mut deflations, mut defl_skipped) = (Vec::new(), Vec::new(), Vec::new());
        for &r in &usable {
            let red = kb.project(r).map_err(err)?;
            let stable = pencil_spectrum(&red.system, DEFAULT_DIM_CAP).map_err(err)?.stable;
            let cert = sample_transfer(&red.system, &grid)
                .and_then(|s| difference_norms_from_samples(&full, &s))
                .and_then(|diff| reduction_certificate(&diff, 1.0, floor.as_ref().map(|(rep, sel)| (rep, sel))));
            let (sup, l2, fsup, fl2) = match &cert {
                Ok(c) => (
                    c.bound_sup,
                    c.bound_l2,
                    c.lower_floor_sup.unwrap_or(f64::NAN),
                    c.lower_floor_l2.unwrap_or(f64::NAN),
                ),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            };
            let _ = writeln!(bounds_csv, "{r},{stable},{},{},{},{}", num(sup), num(l2), num(fsup), num(fl2));
            entries.push(match cert {
                Ok(c) => json!({"r": r, "stable": stable, "certificate": c}),
                Err(e) => json!({"r": r, "stable": stable, "error": e.to_string()}),
            });

            let basis = svd_basis(&red).map_err(err)?;
            for (l, s) in basis.singular_values.iter().enumerate() {
                let _ = writeln!(svals_csv, "{r},{},{}", l + 1, num(*s));
            }
            for (i, k) in basis.kappa.iter().enumerate() {
                let _ = writeln!(kappa_csv, "{r},{i},{}", num(*k));
            }
            let Some((input, horizon, step)) = &transient else {
                continue;
            };
            let traj = simulate_transient_with(
                &red.system,
                input,
                *horizon,
                *step,
                SimulationOptions { record_states: true },
            )
            .map_err(err)?;
            let states = traj.states.as_deref().unwrap_or_default();
            for &threshold in &mor.deflation_thresholds {
                match deflate(&basis, threshold, states, *step) {
                    Ok(d) => {
                        let max_pw = d.pointwise.iter().copied().fold(0.0, f64::max);
                        let ratio = d.r_prime as f64 / d.r as f64;
                        let _ = writeln!(
                            defl_csv,
                            "{r},{},{},{},{},{},{},{}",
                            num(threshold),
                            d.r_prime,
                            num(ratio),
                            num(d.s_next),
                            num(d.factor()),
                            num(d.aggregate),
                            num(max_pw)
                        );
                        deflations.push(json!({
                            "r": r, "rank": d.r, "threshold": threshold, "r_prime": d.r_prime,
                            "s_next": d.s_next, "factor": d.factor(), "aggregate": d.aggregate,
                            "max_pointwise": max_pw,
                        }));
                    }
                    Err(sgmor::Error::Parameter(msg)) => {
                        defl_skipped.push(json!({"r": r, "threshold": threshold, "reason": msg}))
                    }
                    Err(e) => return Err(err(e)),
                }
            }
        }
        let out = &self.out;
        out.write_csv(S, "mor_bounds.csv", &bounds_csv)?;
        out.write_csv(S, "singular_values.csv", &svals_csv)?;
        out.write_csv(S, "kappa.csv", &kappa_csv)?;
        out.write_csv(S, "deflation.csv", &defl_csv)?;
        self.write_json(
            Stage::Reduce,
            json!({
                "s0": s0,
                "system": mor.system,
                "krylov_dimension": kb.dim(),
                "breakdown": kb.breakdown,
                "orders": entries,
                "skipped_orders": skipped,
                "deflation": deflations,
                "deflation_skipped": defl_skipped,
            }),
        )?;
        Ok(format!(
            "{} orders from r={} to r={} at s0={s0:e}",
            usable.len(),
            usable[0],
            usable[usable.len() - 1]
        ))
    }

    fn simulate(&self) -> Result<String, CliError> {
        const S: &str = "simulate";
        let err = |e| CliError::stage(S, e);
        let cfg = &self.resolved.config;
        if !cfg.transient.enabled {
            self.write_json(Stage::Simulate, json!({"enabled": false}))?;
            return Ok("transient validation disabled".into());
        }
        let g = self.load_galerkin(Stage::Simulate)?;
        let report = self.load_norms(Stage::Simulate)?;
        let sel = self.load_selection(Stage::Simulate)?;
        let sparsify = self.upstream(Stage::Simulate, Stage::Sparsify)?;
        let (input, horizon, step) = self.input(S)?;

        let y = simulate_transient(g.system(), &input, horizon, step).map_err(err)?;
        let down = downsize(&g, &sel).map_err(err)?;
        let yd = simulate_transient(down.system(), &input, horizon, step).map_err(err)?;

        // The basis is orthonormal, so the mean-square error over p is the
        // plain sum of squared coefficient errors.
        let prune_err: Vec<f64> = y.values.iter().map(|v| rss(sel.dropped().iter().map(|&i| v[i]))).collect();
        let down_err: Vec<f64> = y
            .values
            .iter()
            .zip(&yd.values)
            .map(|(a, b)| rss(a.iter().zip(b).map(|(x, z)| x - z)))
            .collect();
        let mut csv = String::from("t,u,mean,std,sparse_mean,sparse_std,pruning_error,downsize_error\n");
        for k in 0..y.times.len() {
            let (v, w) = (&y.values[k], &yd.values[k]);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                num(y.times[k]),
                num(y.inputs[k]),
                num(v[0]),
                num(rss(v[1..].iter().copied())),
                num(w[0]),
                num(rss(sel.kept().iter().filter(|&&i| i != 0).map(|&i| w[i]))),
                num(prune_err[k]),
                num(down_err[k]),
            );
        }
        self.out.write_csv(S, "transient.csv", &csv)?;

        let input_l2 = y.input_l2;
        let pruning = pruning_certificate(&report, &sel, input_l2).map_err(err)?;
        let downsize_unit: sgmor::sparsify::BoundCertificate = field(S, &sparsify, "downsize")?;
        let check = |errors: &[f64], bound_sup: f64, bound_l2: f64| {
            let sup = errors.iter().copied().fold(0.0, f64::max);
            let l2 = trapezoid_l2(errors.iter().copied(), step);
            json!({
                "measured_sup": sup, "bound_sup": bound_sup,
                "measured_l2": l2, "bound_l2": bound_l2,
                "within": sup <= bound_sup && l2 <= bound_l2,
            })
        };
        let exact_pruning = check(&prune_err, pruning.bound_sup, pruning.bound_l2);
        let exact_downsize = check(
            &down_err,
            downsize_unit.bound_sup * input_l2,
            downsize_unit.bound_l2 * input_l2,
        );

        let mc = self.monte_carlo(&y, &yd, &sel, &input, horizon, step)?;
        self.write_json(
            Stage::Simulate,
            json!({
                "enabled": true,
                "input": cfg.transient.input,
                "horizon": horizon,
                "step": step,
                "input_l2": input_l2,
                "pruning": exact_pruning,
                "downsize": exact_downsize,
                "monte_carlo": mc,
            }),
        )?;
        Ok(format!(
            "{} steps; pruning error {:.3e} (sup) against bound {:.3e}",
            y.times.len() - 1,
            exact_pruning["measured_sup"].as_f64().unwrap_or(f64::NAN),
            pruning.bound_sup
        ))
    }

    /// Seeded comparison of the parametric output with the Galerkin,
    /// pruned and downsized surrogates at random parameter samples.
    fn monte_carlo(
        &self,
        y: &Trajectory,
        yd: &Trajectory,
        sel: &Selection,
        input: &impl Fn(f64) -> f64,
        horizon: f64,
        step: f64,
    ) -> Result<Value, CliError> {
        const S: &str = "simulate";
        let err = |e| CliError::stage(S, e);
        let r = &self.resolved;
        let samples = r.config.transient.mc_samples;
        let mut rng = ChaCha8Rng::seed_from_u64(r.config.seed);
        let nt = y.times.len();
        // Per time step: Σ_p of squared true output and squared errors.
        let mut acc = vec![[0.0f64; 4]; nt];
        let mut p = vec![0.0; r.spec.q()];
        for _ in 0..samples {
            for (x, d) in p.iter_mut().zip(r.spec.distributions()) {
                *x = rng.gen_range(d.lower()..d.upper());
            }
            let sys = r.psys.evaluate(&p).and_then(|m| m.into_system()).map_err(err)?;
            let truth = simulate_transient(&sys, input, horizon, step).map_err(err)?;
            let phi = eval_basis(&r.spec, &p).map_err(err)?;
            for k in 0..nt {
                let exact = truth.values[k][0];
                let gal: f64 = y.values[k].iter().zip(phi.iter()).map(|(a, b)| a * b).sum();
                let pruned: f64 = sel.kept().iter().map(|&i| y.values[k][i] * phi[i]).sum();
                let downsized: f64 = sel.kept().iter().map(|&i| yd.values[k][i] * phi[i]).sum();
                let a = &mut acc[k];
                a[0] += exact * exact;
                a[1] += (exact - gal).powi(2);
                a[2] += (exact - pruned).powi(2);
                a[3] += (exact - downsized).powi(2);
            }
        }
        let n = samples.max(1) as f64;
        let summary = |j: usize| {
            let sup = acc.iter().map(|a| a[j] / n).fold(0.0, f64::max).sqrt();
            let l2 = trapezoid_l2(acc.iter().map(|a| (a[j] / n).sqrt()), step);
            json!({"rms_sup": sup, "rms_l2": l2})
        };
        Ok(json!({
            "seed": r.config.seed,
            "samples": samples,
            "output": summary(0),
            "galerkin_error": summary(1),
            "pruned_error": summary(2),
            "downsized_error": summary(3),
        }))
    }

    fn report(&self) -> Result<String, CliError> {
        let me = Stage::Report;
        let assembly = self.upstream(me, Stage::Assemble)?;
        let norms = self.upstream(me, Stage::Norms)?;
        let sparsify = self.upstream(me, Stage::Sparsify)?;
        let reduce = self.upstream(me, Stage::Reduce)?;
        let validation = self.upstream(me, Stage::Simulate)?;

        let mut certificates = vec![
            json!({"source": "sparsify.selection", "certificate": sparsify["pruning"]}),
            json!({"source": "sparsify.downsize", "kept": sparsify["kept"].as_array().map_or(0, Vec::len), "certificate": sparsify["downsize"]}),
        ];
        for entry in sparsify["downsize_sweep"].as_array().into_iter().flatten() {
            certificates.push(json!({"source": "sparsify.downsize_sweep", "k": entry["k"], "certificate": entry["certificate"]}));
        }
        for entry in reduce["orders"].as_array().into_iter().flatten() {
            if entry.get("certificate").is_some() {
                certificates.push(json!({
                    "source": "reduce",
                    "r": entry["r"],
                    "stable": entry["stable"],
                    "certificate": entry["certificate"],
                }));
            }
        }
        let count = certificates.len();
        self.write_json(
            me,
            json!({
                "input_norm": "certificates are per unit input L2 norm unless stated otherwise",
                "system": {
                    "q": assembly["q"], "n": assembly["n"], "m": assembly["m"],
                    "dimension": assembly["dimension"], "nominal": assembly["nominal"],
                },
                "norms_by_degree": norms["by_degree"],
                "table": sparsify["table"],
                "selection": {"mode": sparsify["mode"], "norm": sparsify["norm"], "kept": sparsify["kept"]},
                "certificates": certificates,
                "reduction": {
                    "s0": reduce["s0"], "system": reduce["system"],
                    "krylov_dimension": reduce["krylov_dimension"],
                    "breakdown": reduce["breakdown"],
                },
                "deflation": reduce["deflation"],
                "validation": validation,
                "stage_keys": {
                    "assemble": assembly["stage_key"], "norms": norms["stage_key"],
                    "sparsify": sparsify["stage_key"], "reduce": reduce["stage_key"],
                    "simulate": validation["stage_key"],
                },
            }),
        )?;
        Ok(format!("{count} certificates bundled"))
    }
}

fn kind_name(kind: NormKind) -> &'static str {
    match kind {
        NormKind::H2 => "h2",
        NormKind::Hinf => "hinf",
    }
}

fn rss(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
