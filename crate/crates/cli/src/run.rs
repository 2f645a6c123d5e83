//! Task dispatch and run reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use zeno_core::ensemble::{ginibre, seeded_rng};
use zeno_core::fit::linspace;
use zeno_core::gibbs::{gibbs_state, kms_report, reduced_kms_residual};
use zeno_core::spectral::{
    classify_regime, default_x_grid, first_abs_moment, modulus_decay_n, spectral_measure_of_state, zeno_modulus_table,
};
use zeno_core::survival::{
    decay_fit, default_fit_window, effective_rate, effective_rate_curve, find_crossing_with, zeno_time, DecayProfile,
    StateSpectrum,
};
use zeno_core::zeno::{azc_fit, default_tau_grid, zeno_convergence_report, AzcFit, ZenoConvergenceReport};
use zeno_core::{CMatrix, Error, ProductOrdering, Regime, ZenoSchedule};

use crate::config::{ScenarioConfig, Task};
use crate::error::{CliError, CliResult};
use crate::scenario::{build_distribution, build_scenario, perturbed_invariance_check, Scenario};
use crate::table::{emit_csv, Table};

pub const KMS_PAIRS: usize = 100;
const PAIR_STREAM: u64 = 30;
const SWEEP_STREAM: u64 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WarningKind {
    /// No exponential regime could be fitted.
    NonExponential,
    /// `γ_eff` never reaches the fitted natural rate on the sampled range.
    NoCrossing,
    /// The tail functional fits no regime.
    Indeterminate,
    /// A KMS residual exceeded its tolerance.
    KmsViolation,
    /// The perturbed model broke the Dyson bound or its AZC allowance.
    InvarianceViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub kind: WarningKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metric {
    Bool(bool),
    Int(u64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub headline: BTreeMap<String, Metric>,
    pub warnings: Vec<Warning>,
    pub csv_paths: Vec<PathBuf>,
    /// Column names of every CSV written, keyed by file name.
    pub schemas: BTreeMap<String, Vec<String>>,
    pub config: ScenarioConfig,
}

impl RunReport {
    pub fn has_warnings(&self) -> bool {
        !self.warnings.is_empty()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is serializable")
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.headline.get(key)? {
            Metric::Float(v) => Some(*v),
            Metric::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.headline.get(key)? {
            Metric::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn warned(&self, kind: WarningKind) -> bool {
        self.warnings.iter().any(|w| w.kind == kind)
    }
}

struct Run {
    dir: PathBuf,
    report: RunReport,
}

impl Run {
    fn float(&mut self, key: &str, v: f64) {
        self.report.headline.insert(key.into(), Metric::Float(v));
    }

    fn int(&mut self, key: &str, v: u64) {
        self.report.headline.insert(key.into(), Metric::Int(v));
    }

    fn flag(&mut self, key: &str, v: bool) {
        self.report.headline.insert(key.into(), Metric::Bool(v));
    }

    fn text(&mut self, key: &str, v: impl Into<String>) {
        self.report.headline.insert(key.into(), Metric::Text(v.into()));
    }

    fn warn(&mut self, kind: WarningKind, detail: impl Into<String>) {
        self.report.warnings.push(Warning { kind, detail: detail.into() });
    }

    fn write(&mut self, name: &str, table: &Table) -> CliResult<()> {
        let path = self.dir.join(name);
        emit_csv(table, &path)?;
        self.report.schemas.insert(name.into(), table.columns().to_vec());
        self.report.csv_paths.push(path);
        Ok(())
    }
}

/// Executes the configured task, writes its CSVs under `output_path` and
/// returns the report.
pub fn run_scenario(config: &ScenarioConfig) -> CliResult<RunReport> {
    config.validate()?;
    let dir = config.output_path.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut run = Run {
        dir,
        report: RunReport {
            headline: BTreeMap::new(),
            warnings: Vec::new(),
            csv_paths: Vec::new(),
            schemas: BTreeMap::new(),
            config: config.clone(),
        },
    };
    run.text("task", config.task.name());
    match config.task {
        Task::Converge => converge(config, &mut run)?,
        Task::Survival => survival(config, &mut run)?,
        Task::Classify => classify(config, &mut run)?,
        Task::Gibbs => gibbs(config, &mut run)?,
        Task::Sweep => sweep(config, &mut run)?,
    }
    Ok(run.report)
}

fn schedule(config: &ScenarioConfig) -> CliResult<ZenoSchedule> {
    let t = config.t.unwrap_or(1.0);
    Ok(match &config.n_schedule {
        Some(ns) => ZenoSchedule::new(ns.clone(), t, ProductOrdering::Eue)?,
        None => ZenoSchedule::default_at(t),
    })
}

fn convergence_table(report: &ZenoConvergenceReport) -> CliResult<Table> {
    let mut table = Table::new(&["n", "distance_to_limit", "cauchy_delta"]);
    for s in &report.per_n {
        table.push(vec![s.n.into(), s.distance_to_limit.into(), s.cauchy_delta.into()])?;
    }
    Ok(table)
}

fn converge(config: &ScenarioConfig, run: &mut Run) -> CliResult<()> {
    let s = build_scenario(&config.model)?;
    let report = zeno_convergence_report(&s.h, &s.e, &schedule(config)?)?;
    run.write("convergence.csv", &convergence_table(&report)?)?;
    run.flag("exact", report.is_exact());
    if let (Some(exponent), Some(constant)) = (report.fitted_rate_exponent(), report.fitted_rate_constant()) {
        run.float("rate_exponent", exponent);
        run.float("rate_constant", constant);
    }
    run.float("target_residual", report.target_residual);
    match azc_fit(&s.h, &s.e, &default_tau_grid())? {
        AzcFit::ExactlyZeno => run.flag("azc_exactly_zeno", true),
        AzcFit::Fitted { constant, exponent } => {
            run.flag("azc_exactly_zeno", false);
            run.float("azc_constant", constant);
            run.float("azc_exponent", exponent);
        }
    }
    if s.perturbation.is_some() {
        let inv = perturbed_invariance_check(&config.model)?;
        let mut table = Table::new(&["t", "leakage", "dyson_bound"]);
        for r in &inv.rows {
            table.push(vec![r.t.into(), r.leakage.into(), r.bound.into()])?;
        }
        run.write("invariance.csv", &table)?;
        run.flag("invariance_holds", inv.holds());
        if !inv.holds() {
            run.warn(
                WarningKind::InvarianceViolation,
                format!(
                    "bound holds: {}, azc within allowance: {}, limit leakage {:e}",
                    inv.bound_holds(),
                    inv.azc_within_bound(),
                    inv.limit_leakage
                ),
            );
        }
    }
    Ok(())
}

fn survival(config: &ScenarioConfig, run: &mut Run) -> CliResult<()> {
    let s = build_scenario(&config.model)?;
    let grid = config.t_grid.clone().unwrap_or_else(|| s.survival_grid.clone());
    let profile = DecayProfile::sample(&s.h, &s.psi, &grid)?;
    let curve = effective_rate_curve(&profile)?;
    let mut table = Table::new(&["t", "probability", "gamma_eff"]);
    for ((t, g), p) in curve.iter().zip(profile.probabilities()) {
        table.push(vec![(*t).into(), (*p).into(), (*g).into()])?;
    }
    run.write("survival.csv", &table)?;
    if let Some(tz) = zeno_time(&s.h, &s.psi)?.finite() {
        run.float("zeno_time", tz);
    }
    if let Some(g) = s.gamma_golden {
        run.float("gamma_golden", g);
    }
    let fit = default_fit_window(&profile).and_then(|w| decay_fit(&profile, w));
    let fit = match fit {
        Ok(fit) => fit,
        Err(e) => {
            run.warn(WarningKind::NonExponential, e.to_string());
            return Ok(());
        }
    };
    run.float("gamma0", fit.gamma0);
    run.float("z", fit.z);
    run.float("window_start", fit.window.0);
    run.float("window_end", fit.window.1);
    run.float("fit_residual", fit.residual);
    let spectrum = StateSpectrum::new(&s.h, &s.psi)?;
    let rate = |tau: f64| effective_rate(&spectrum, tau);
    match find_crossing_with(&curve, fit.gamma0, rate) {
        Ok(c) => {
            run.float("tau_star", c.tau_star);
            run.float("gamma_eff_at_half_tau_star", rate(0.5 * c.tau_star)?);
            run.float("gamma_eff_past_tau_star", rate((2.0 * c.tau_star).min(fit.window.1))?);
        }
        Err(Error::NoCrossing { min, max }) => {
            run.warn(WarningKind::NoCrossing, format!("gamma_eff stays in [{min:e}, {max:e}]"));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Zeno => "zeno",
        Regime::AntiZeno => "anti_zeno",
        Regime::Borderline => "borderline",
        Regime::Indeterminate => "indeterminate",
    }
}

/// Modulus threshold and largest `n` searched for the anti-Zeno headline.
const DECAY_THRESHOLD: f64 = 1e-3;
const DECAY_N_MAX: u64 = 1 << 40;

fn classify(config: &ScenarioConfig, run: &mut Run) -> CliResult<()> {
    let measure = match &config.distribution {
        Some(d) => build_distribution(d)?,
        None => {
            let s = build_scenario(&config.model)?;
            spectral_measure_of_state(&s.h, &s.psi)?
        }
    };
    let report = classify_regime(&measure, &default_x_grid())?;
    let mut table = Table::new(&["x", "delta"]);
    for (x, d) in report.x_grid.iter().zip(&report.delta_values) {
        table.push(vec![(*x).into(), (*d).into()])?;
    }
    run.write("tail.csv", &table)?;
    let regime = report.classification.unwrap_or(Regime::Indeterminate);
    run.text("regime", regime_name(regime));
    if let Some(trend) = report.trend {
        run.float("trend_slope", trend.slope);
        run.float("trend_residual", trend.residual);
    }
    if regime == Regime::Indeterminate {
        run.warn(WarningKind::Indeterminate, "tail functional fits no regime on the default grid");
    }
    if let Some(m) = first_abs_moment(&measure)?.finite() {
        run.float("first_abs_moment", m);
    }
    let t = config.t.unwrap_or(1.0);
    let ns = config.n_schedule.clone().unwrap_or_else(|| (0..=6).map(|k| 10u64.pow(k)).collect());
    let mut table = Table::new(&["n", "modulus"]);
    for (n, v) in zeno_modulus_table(&measure, t, &ns)? {
        table.push(vec![n.into(), v.into()])?;
    }
    run.write("modulus.csv", &table)?;
    if regime == Regime::AntiZeno {
        if let Some(n) = modulus_decay_n(&measure, t, DECAY_THRESHOLD, DECAY_N_MAX)? {
            run.int("modulus_decay_n", n);
        }
    }
    Ok(())
}

fn probe_pairs(dim: usize, count: usize, seed: u64) -> Vec<(CMatrix, CMatrix)> {
    let mut rng = seeded_rng(seed, PAIR_STREAM);
    (0..count).map(|_| (ginibre(dim, &mut rng), ginibre(dim, &mut rng))).collect()
}

fn gibbs(config: &ScenarioConfig, run: &mut Run) -> CliResult<()> {
    let beta = config.beta.expect("validated");
    let s = build_scenario(&config.model)?;
    let times = config.t_grid.clone().unwrap_or_else(|| linspace(-2.0, 2.0, 9));
    let pairs = probe_pairs(s.h.dim(), KMS_PAIRS, config.effective_seed());
    let compressed: Vec<_> = pairs.iter().map(|(a, b)| (s.e.compress(a), s.e.compress(b))).collect();
    let state = gibbs_state(&s.h, beta)?;
    let mut table = Table::new(&["t", "max_residual", "max_scaled_residual", "reduced_max_residual", "reduced_max_scaled_residual"]);
    let (mut worst, mut worst_reduced) = (0.0f64, 0.0f64);
    let (mut scaled, mut scaled_reduced) = (0.0f64, 0.0f64);
    for &t in &times {
        let full = kms_report(&state, &s.h, &pairs, &[t], beta)?;
        let reduced = reduced_kms_residual(&s.h, &s.e, beta, &compressed, &[t])?;
        table.push(vec![
            t.into(),
            full.max_residual.into(),
            full.max_scaled_residual.into(),
            reduced.max_residual.into(),
            reduced.max_scaled_residual.into(),
        ])?;
        worst = worst.max(full.max_residual);
        worst_reduced = worst_reduced.max(reduced.max_residual);
        scaled = scaled.max(full.max_scaled_residual);
        scaled_reduced = scaled_reduced.max(reduced.max_scaled_residual);
    }
    run.write("kms.csv", &table)?;
    run.int("pairs", KMS_PAIRS as u64);
    run.float("max_kms_residual", worst);
    run.float("max_scaled_kms_residual", scaled);
    run.float("max_reduced_kms_residual", worst_reduced);
    run.float("max_scaled_reduced_kms_residual", scaled_reduced);
    if scaled > 1.0 || scaled_reduced > 1.0 {
        run.warn(WarningKind::KmsViolation, format!("scaled residuals {scaled:e} (full), {scaled_reduced:e} (reduced)"));
    }
    Ok(())
}

/// Seeds of the sweep replicas, drawn from the config's effective seed.
pub fn sweep_seeds(base: u64, replicas: usize) -> Vec<u64> {
    let mut rng = seeded_rng(base, SWEEP_STREAM);
    (0..replicas).map(|_| rng.random()).collect()
}

struct SweepRow {
    seed: u64,
    exponent: Option<f64>,
    final_distance: f64,
    target_residual: f64,
    table: Table,
}

fn sweep(config: &ScenarioConfig, run: &mut Run) -> CliResult<()> {
    let replicas = config.replicas.expect("validated");
    let sched = schedule(config)?;
    let seeds = sweep_seeds(config.effective_seed(), replicas);
    let rows: Vec<SweepRow> = seeds
        .par_iter()
        .map(|&seed| {
            let s: Scenario = build_scenario(&config.model.with_seed(seed))?;
            let report = zeno_convergence_report(&s.h, &s.e, &sched)?;
            Ok(SweepRow {
                seed,
                exponent: report.fitted_rate_exponent(),
                final_distance: report.per_n.last().map_or(0.0, |p| p.distance_to_limit),
                target_residual: report.target_residual,
                table: convergence_table(&report)?,
            })
        })
        .collect::<CliResult<_>>()?;
    let mut summary = Table::new(&["replica", "seed", "rate_exponent", "final_distance", "target_residual"]);
    let mut worst = f64::NEG_INFINITY;
    for (i, row) in rows.iter().enumerate() {
        run.write(&format!("replica_{i:04}.csv"), &row.table)?;
        let exponent = row.exponent.unwrap_or(f64::NAN);
        worst = worst.max(exponent);
        summary.push(vec![i.into(), row.seed.into(), exponent.into(), row.final_distance.into(), row.target_residual.into()])?;
    }
    run.write("sweep.csv", &summary)?;
    run.int("replicas", replicas as u64);
    if worst.is_finite() {
        run.float("max_rate_exponent", worst);
    }
    Ok(())
}

/// Resolves where a run writes: `--out` wins over the config.
pub fn with_output(config: &ScenarioConfig, out: Option<&Path>) -> ScenarioConfig {
    let mut c = config.clone();
    if let Some(dir) = out {
        c.output_path = dir.to_path_buf();
    }
    c
}
