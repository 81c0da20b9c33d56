//! Run orchestration: config loading, theory and simulation per grid point,
//! output files and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use sparse_lms::algorithms::{AlgoParams, Variant};
use sparse_lms::simulation::{simulate, ExperimentSpec, ResolvedPoint, SystemSource, Trajectory};
use sparse_lms::theory::{
    convergence_model, l0_steady_msd, moment_recursion, za_steady_msd, SystemProfile,
};
use sparse_lms::Error;

use crate::error::{CliError, Result};
use crate::manifest::{Mode, ResolvedRecord, RunManifest, RunOptions, TOOL, VERSION};
use crate::presets;
use crate::table::{curve_table, num, opt, Table, SWEEP_VALUES};

/// Theory and simulation results for one grid point.
#[derive(Debug, Clone)]
pub struct PointOutput {
    pub point: ResolvedPoint,
    pub steady_theory: Option<f64>,
    pub curve_theory: Option<Vec<f64>>,
    pub trajectory: Option<Trajectory>,
}

impl PointOutput {
    pub fn variant(&self) -> Variant {
        self.point.params.variant
    }

    pub fn steady_sim(&self) -> Option<f64> {
        self.trajectory
            .as_ref()
            .map(|t| t.steady_estimate)
            .filter(|v| v.is_finite())
    }

    pub fn steady_ci(&self) -> Option<f64> {
        self.trajectory
            .as_ref()
            .map(|t| t.steady_ci)
            .filter(|v| v.is_finite())
    }

    /// `(msd_theory, msd_sim, msd_sim_ci)` cells.
    pub fn steady_cells(&self) -> Vec<String> {
        vec![
            opt(self.steady_theory),
            opt(self.steady_sim()),
            opt(self.steady_ci()),
        ]
    }

    pub fn curve(&self) -> Option<Table> {
        let sim = self.trajectory.as_ref().map(|t| t.msd.as_slice());
        if self.curve_theory.is_none() && sim.is_none() {
            return None;
        }
        Some(curve_table(self.curve_theory.as_deref(), sim))
    }
}

/// Result of a finished run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// One line per grid point where any trial diverged.
    pub diverged: Vec<String>,
}

pub fn snr_tag(snr_db: f64) -> String {
    format!("{snr_db}")
}

pub fn variant_tag(v: Variant) -> &'static str {
    match v {
        Variant::Lms => "lms",
        Variant::L0Lms => "l0lms",
        Variant::ZaLms => "zalms",
        Variant::RzaLms => "rzalms",
    }
}

fn describe(p: &ResolvedPoint) -> String {
    let a = &p.params;
    match a.variant {
        Variant::Lms => format!("LMS mu={:e}", a.mu),
        Variant::L0Lms => format!(
            "L0LMS mu={:e} alpha={:e} kappa={:e}",
            a.mu, a.alpha, a.kappa
        ),
        Variant::ZaLms => format!("ZALMS mu={:e} rho={:e}", a.mu, a.rho),
        Variant::RzaLms => format!(
            "RZALMS mu={:e} rho={:e} epsilon={:e}",
            a.mu, a.rho, a.epsilon
        ),
    }
}

fn scaled(n: usize, scale: f64) -> usize {
    if n == 0 {
        0
    } else {
        ((n as f64 * scale).round() as usize).max(1)
    }
}

/// Accumulates the specs, grid points and files of one run.
pub struct Session<'a> {
    pub mode: Mode,
    pub opts: &'a RunOptions,
    pub label: String,
    out: &'a Path,
    specs: Vec<ExperimentSpec>,
    resolved: Vec<ResolvedRecord>,
    outputs: Vec<String>,
    diverged: Vec<String>,
}

impl<'a> Session<'a> {
    pub fn new(mode: Mode, opts: &'a RunOptions, out: &'a Path, label: impl Into<String>) -> Self {
        Self {
            mode,
            opts,
            label: label.into(),
            out,
            specs: Vec::new(),
            resolved: Vec::new(),
            outputs: Vec::new(),
            diverged: Vec::new(),
        }
    }

    /// Applies the seed, trial and convention overrides and `scale`.
    pub fn prepare_at(&self, mut spec: ExperimentSpec, scale: f64) -> Result<ExperimentSpec> {
        if scale != 1.0 {
            spec.len = scaled(spec.len, scale);
            spec.support = scaled(spec.support, scale).min(spec.len);
        }
        spec.trials = self
            .opts
            .trials
            .unwrap_or_else(|| scaled(spec.trials, scale));
        if let Some(seed) = self.opts.seed {
            spec.seed = seed;
        }
        if let Some(c) = self.opts.snr_convention {
            spec.snr_convention = c;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// [`Session::prepare_at`] with the run's scale.
    pub fn prepare(&self, spec: ExperimentSpec) -> Result<ExperimentSpec> {
        self.prepare_at(spec, self.opts.scale)
    }

    /// Theoretical optimum of the first l0-LMS point of `spec`.
    pub fn kappa_opt(spec: &ExperimentSpec) -> Result<f64> {
        spec.points()?
            .iter()
            .find_map(|p| p.kappa_opt)
            .ok_or_else(|| CliError::Validation("spec has no l0-LMS point".into()))
    }

    /// Evaluates every grid point of an already prepared spec.
    pub fn evaluate(&mut self, spec: ExperimentSpec, curves: bool) -> Result<Vec<PointOutput>> {
        let points = spec.points()?;
        let source = spec.source()?;
        let index = self.specs.len();
        self.specs.push(spec.clone());
        let first_alpha = spec.alpha.values()[0];
        let total = points.len();
        let mut out = Vec::with_capacity(total);
        for (i, point) in points.into_iter().enumerate() {
            let desc = describe(&point);
            let alpha = match point.params.variant {
                Variant::L0Lms => point.params.alpha,
                _ => first_alpha,
            };
            let (steady_theory, curve_theory) = if self.mode.theory() {
                let profile = match &source {
                    SystemSource::Fixed(sys) => SystemProfile::exact(sys, alpha),
                    SystemSource::PerTrial { .. } => {
                        SystemProfile::expected(spec.len, spec.support, spec.sigma_s, alpha)?
                    }
                };
                let steady = steady_theory(&spec, &point, &profile, alpha, &desc);
                let curve = if curves {
                    curve_theory(&point, &profile, alpha, &desc)
                } else {
                    None
                };
                (steady, curve)
            } else {
                (None, None)
            };
            let trajectory = if self.mode.simulation() {
                info!(
                    "{} [{}/{}] {desc}: {} trials x {} iterations",
                    self.label,
                    i + 1,
                    total,
                    spec.trials,
                    point.iterations
                );
                let cfg = point.trial_config(spec.seed);
                match simulate(&source, &cfg, spec.trials, point.steady_window) {
                    Ok(t) => {
                        if t.diverged {
                            self.diverged.push(format!(
                                "{desc}: {} of {} trials diverged",
                                t.diverged_trials, spec.trials
                            ));
                        } else if let Err(e) = t.converged_steady() {
                            warn!("{desc}: {e}");
                        }
                        Some(t)
                    }
                    Err(e @ Error::Diverged { .. }) => {
                        self.diverged.push(format!("{desc}: {e}"));
                        None
                    }
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            };
            let po = PointOutput {
                point,
                steady_theory,
                curve_theory,
                trajectory,
            };
            self.resolved.push(ResolvedRecord {
                spec: index,
                point: po.point.clone(),
                steady_theory: po.steady_theory,
                steady_sim: po.steady_sim(),
                steady_sim_ci: po.steady_ci(),
                diverged_trials: match &po.trajectory {
                    Some(t) => t.diverged_trials,
                    None if self.mode.simulation() => spec.trials,
                    None => 0,
                },
            });
            out.push(po);
        }
        Ok(out)
    }

    pub fn file_name(&self, snr_db: f64, quantity: &str) -> String {
        format!("{}_{}dB_{}.csv", self.label, snr_tag(snr_db), quantity)
    }

    pub fn write(&mut self, snr_db: f64, quantity: &str, table: &Table) -> Result<()> {
        let name = self.file_name(snr_db, quantity);
        table.write(&self.out.join(&name))?;
        info!("wrote {name} ({} rows)", table.rows.len());
        self.outputs.push(name);
        Ok(())
    }

    /// Writes the manifest and closes the run.
    pub fn finish(self) -> Result<Outcome> {
        let manifest = RunManifest {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            mode: self.mode,
            label: self.label.clone(),
            options: self.opts.clone(),
            specs: self.specs,
            resolved: self.resolved,
            outputs: self.outputs,
        };
        let manifest_path = self.out.join(RunManifest::file_name(&self.label));
        manifest.save(&manifest_path)?;
        Ok(Outcome {
            manifest,
            manifest_path,
            diverged: self.diverged,
        })
    }
}

fn steady_theory(
    spec: &ExperimentSpec,
    point: &ResolvedPoint,
    profile: &SystemProfile,
    alpha: f64,
    desc: &str,
) -> Option<f64> {
    let p = &point.params;
    let s = &point.signal;
    let r = match p.variant {
        Variant::Lms | Variant::L0Lms => {
            l0_steady_msd(profile, &AlgoParams { alpha, ..*p }, s).map(|r| r.d_inf)
        }
        Variant::ZaLms => {
            za_steady_msd(spec.len, spec.support, p.mu, p.rho, s.px, s.pv).map(|r| r.d_inf_za)
        }
        Variant::RzaLms => return None,
    };
    r.map_err(|e| warn!("{desc}: no steady-state theory: {e}"))
        .ok()
}

fn curve_theory(
    point: &ResolvedPoint,
    profile: &SystemProfile,
    alpha: f64,
    desc: &str,
) -> Option<Vec<f64>> {
    let p = AlgoParams {
        alpha,
        ..point.params
    };
    if !matches!(p.variant, Variant::Lms | Variant::L0Lms) {
        return None;
    }
    let n = point.iterations + 1;
    match convergence_model(profile, &p, &point.signal) {
        Ok(m) => Some(m.curve(n)),
        Err(Error::DegenerateSpectrum(_) | Error::IllConditioned(_)) => {
            moment_recursion(profile, &p, &point.signal, point.iterations)
                .map(|v| v.into_iter().map(|(d, _)| d).collect())
                .map_err(|e| warn!("{desc}: no transient theory: {e}"))
                .ok()
        }
        Err(e) => {
            warn!("{desc}: no transient theory: {e}");
            None
        }
    }
}

/// Parsed `--config` document.
#[derive(Debug, Clone)]
pub enum Config {
    Spec(ExperimentSpec),
    /// A previous run's manifest, to be repeated.
    Manifest(RunManifest),
}

fn json_error(path: &Path, e: &serde_json::Error) -> CliError {
    let text = e.to_string();
    let msg = text
        .rsplit_once(" at line ")
        .map_or(text.as_str(), |(m, _)| m);
    CliError::Validation(format!(
        "{}: line {}, column {}: {msg}",
        path.display(),
        e.line(),
        e.column()
    ))
}

/// Reads an experiment spec or a run manifest. Syntax and schema errors
/// carry the line and column.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
    let is_manifest = value.get("outputs").is_some() && value.get("specs").is_some();
    if is_manifest {
        let m = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
        return Ok(Config::Manifest(m));
    }
    let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
    spec.validate()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(Config::Spec(spec))
}

type Field = fn(&AlgoParams) -> f64;

const PARAM_COLUMNS: [(&str, Field); 5] = [
    ("mu", |p| p.mu),
    ("alpha", |p| p.alpha),
    ("kappa", |p| p.kappa),
    ("rho", |p| p.rho),
    ("epsilon", |p| p.epsilon),
];

/// Parameter that varies across the points of one variant, `mu` first.
fn sweep_axis(v: Variant, group: &[&PointOutput]) -> (&'static str, Field) {
    let varies = |f: Field| {
        group
            .iter()
            .any(|p| f(&p.point.params) != f(&group[0].point.params))
    };
    let mu: (&'static str, Field) = ("mu", |p| p.mu);
    let candidates: &[(&'static str, Field)] = match v {
        Variant::L0Lms => &[mu, ("kappa", |p| p.kappa), ("alpha", |p| p.alpha)],
        Variant::RzaLms => &[mu, ("epsilon", |p| p.epsilon)],
        Variant::Lms | Variant::ZaLms => &[mu],
    };
    candidates
        .iter()
        .copied()
        .find(|(_, f)| varies(*f))
        .unwrap_or(mu)
}

/// Steady-state table per variant and a learning curve per grid point.
pub fn run_spec(session: &mut Session, spec: ExperimentSpec) -> Result<()> {
    let spec = session.prepare(spec)?;
    let snr = spec.snr_db;
    let outs = session.evaluate(spec, true)?;
    let mut variants: Vec<Variant> = Vec::new();
    for o in &outs {
        if !variants.contains(&o.variant()) {
            variants.push(o.variant());
        }
    }
    for v in variants {
        let group: Vec<&PointOutput> = outs.iter().filter(|o| o.variant() == v).collect();
        let (axis, value) = sweep_axis(v, &group);
        let params: Vec<(&str, Field)> = PARAM_COLUMNS
            .iter()
            .copied()
            .filter(|(name, _)| *name != axis)
            .collect();
        let mut header = vec![axis];
        header.extend(SWEEP_VALUES);
        header.extend(params.iter().map(|(name, _)| *name));
        header.push("kappa_opt");
        let mut table = Table::new(&header);
        for o in &group {
            let p = &o.point.params;
            let mut row = vec![num(value(p))];
            row.extend(o.steady_cells());
            row.extend(params.iter().map(|(_, f)| num(f(p))));
            row.push(opt(o.point.kappa_opt));
            table.push(row);
        }
        let tag = variant_tag(v);
        session.write(snr, &format!("steady_{tag}"), &table)?;
        for (i, o) in group.iter().enumerate() {
            if let Some(curve) = o.curve() {
                session.write(snr, &format!("curve_{tag}_{i}"), &curve)?;
            }
        }
    }
    Ok(())
}

fn probe_writable(out: &Path) -> Result<()> {
    let fail = |e: std::io::Error| {
        CliError::Validation(format!(
            "output directory {} is not writable: {e}",
            out.display()
        ))
    };
    fs::create_dir_all(out).map_err(fail)?;
    let probe = out.join(".l0lms-write-probe");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

fn check_options(opts: &RunOptions) -> Result<()> {
    if !(opts.scale.is_finite() && opts.scale > 0.0) {
        return Err(CliError::Validation(format!(
            "scale must be > 0, got {}",
            opts.scale
        )));
    }
    if opts.trials == Some(0) {
        return Err(CliError::Validation("trials must be >= 1".into()));
    }
    match (&opts.preset, &opts.config) {
        (Some(_), Some(_)) => Err(CliError::Validation(
            "give either a preset or a config, not both".into(),
        )),
        (None, None) => Err(CliError::Validation(
            "a preset or a config is required".into(),
        )),
        (Some(name), None) => presets::check(name),
        (None, Some(_)) => Ok(()),
    }
}

/// Runs a preset or a config file and writes CSVs plus the manifest into
/// `out`.
pub fn run(mode: Mode, opts: &RunOptions, out: &Path) -> Result<Outcome> {
    check_options(opts)?;
    let config = match &opts.config {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    probe_writable(out)?;
    match (config, &opts.preset) {
        (Some(Config::Manifest(m)), _) => replay(mode, &m, out),
        (Some(Config::Spec(spec)), _) => {
            let path = opts.config.as_deref().expect("config path");
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            let mut session = Session::new(mode, opts, out, label);
            run_spec(&mut session, spec)?;
            session.finish()
        }
        (None, Some(name)) => {
            let mut session = Session::new(mode, opts, out, name.clone());
            presets::run(name, &mut session)?;
            session.finish()
        }
        (None, None) => unreachable!("checked above"),
    }
}

/// Repeats the run recorded in a manifest.
pub fn replay(mode: Mode, m: &RunManifest, out: &Path) -> Result<Outcome> {
    if m.options.preset.is_some() {
        return run(mode, &m.options, out);
    }
    let opts = RunOptions {
        config: m.options.config.clone(),
        ..RunOptions::default()
    };
    let mut session = Session::new(mode, &opts, out, m.label.clone());
    for spec in &m.specs {
        run_spec(&mut session, spec.clone())?;
    }
    session.finish()
}
