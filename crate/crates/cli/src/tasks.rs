//! The four task kinds and the shared context they run against.

use std::time::Instant;

use blowup_core::bounds::{kaplan_ode, KaplanConfig, OdeStatus, SupersolutionConfig, SupersolutionPath, Z0};
use blowup_core::criterion::{
    auxiliary_criteria, classify_divergence, closed_form_class, label_matches, AuxReport, ConditionResult,
    CriterionConfig, Mode,
};
use blowup_core::nonlinearity::{
    verify_properties, CheckStatus, Kind, NonlinearityProfile, Potential, PropertyConfig, ScalarFunction,
};
use blowup_core::semigroup::{sup_norm_trace, uniform_times, DecayTrace, HeatConfig};
use blowup_core::simulator::{comparison_check, find_global_amplitude, simulate, FrameMode, SimConfig, SimStatus};
use blowup_core::spectral::{principal_eigenpair, DomainGrid, EigenPair};
use blowup_core::verdict::default_time_horizons;
use blowup_core::Exec;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_mode, AnalyzeTask, ClassifyTask, Config, SimulateTask, VerifyTask};
use crate::error::HarnessError;
use crate::output::{Artifact, Cell, Format, Table};

/// Grid, eigenpair and resolved functions for one configuration.
pub struct Context {
    pub grid: DomainGrid,
    pub eigen: EigenPair,
    pub psi: Option<ScalarFunction>,
    pub f: Option<ScalarFunction>,
    pub profile: Option<NonlinearityProfile>,
}

impl Context {
    pub fn build(cfg: &Config) -> Result<Self, HarnessError> {
        let grid = cfg.domain.grid()?;
        let eigen = principal_eigenpair(&grid).map_err(|e| HarnessError::config("domain", e.to_string()))?;
        let lambda0 = eigen.lambda0;
        let psi = match &cfg.psi {
            Some(spec) => {
                let psi = spec.resolve("psi", lambda0)?;
                psi.validate_weight(100.0).map_err(|e| HarnessError::config("psi", e.to_string()))?;
                Some(psi)
            }
            None => None,
        };
        let (f, profile) = match &cfg.f {
            Some(spec) => {
                let f = spec.resolve("f", lambda0)?;
                f.validate_reaction(1e6).map_err(|e| HarnessError::config("f", e.to_string()))?;
                let profile = NonlinearityProfile::new(f.clone()).map_err(|e| HarnessError::config("f", e.to_string()))?;
                (Some(f), Some(profile))
            }
            None => (None, None),
        };
        Ok(Context { grid, eigen, psi, f, profile })
    }

    pub fn lambda0(&self) -> f64 {
        self.eigen.lambda0
    }

    fn psi(&self) -> Result<&ScalarFunction, HarnessError> {
        self.psi.as_ref().ok_or_else(|| HarnessError::config("psi", "missing section"))
    }

    fn f(&self) -> Result<&ScalarFunction, HarnessError> {
        self.f.as_ref().ok_or_else(|| HarnessError::config("f", "missing section"))
    }

    fn profile(&self) -> Result<&NonlinearityProfile, HarnessError> {
        self.profile.as_ref().ok_or_else(|| HarnessError::config("f", "missing section"))
    }

    /// Initial data with maximum 1: `phi0` is the sup-normalized eigenfunction,
    /// `bump` the product of `s(1−s)⁴·3125/256` over the axes.
    pub fn initial_data(&self, name: &str) -> Vec<f64> {
        match name {
            "bump" => {
                let axes = self.grid.axes.clone();
                self.grid.sample(|x| {
                    axes.iter()
                        .zip(x)
                        .map(|(a, xi)| {
                            let s = (xi - a.lo) / a.length();
                            s * (1.0 - s).powi(4) * 3125.0 / 256.0
                        })
                        .product()
                })
            }
            _ => self.eigen.phi0_sup.clone(),
        }
    }

    fn node_coords(&self) -> Vec<Vec<f64>> {
        (0..self.grid.len()).map(|k| self.grid.coords(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub name: String,
    pub status: TaskStatus,
    pub error: Option<String>,
    pub seconds: f64,
    pub artifacts: Vec<Artifact>,
    pub normalization: Vec<String>,
}

pub(crate) struct Produced {
    pub artifacts: Vec<Artifact>,
    /// Set when the task ran to the end but found a failing check.
    pub failure: Option<String>,
}

impl Produced {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Produced { artifacts, failure: None }
    }
}

pub(crate) fn timed(name: &str, normalization: &[&str], run: impl FnOnce() -> Result<Produced, HarnessError>) -> TaskOutcome {
    let start = Instant::now();
    let result = run();
    let seconds = start.elapsed().as_secs_f64();
    let normalization = normalization.iter().map(|s| s.to_string()).collect();
    match result {
        Ok(p) => TaskOutcome {
            name: name.into(),
            status: if p.failure.is_some() { TaskStatus::Failed } else { TaskStatus::Ok },
            error: p.failure,
            seconds,
            artifacts: p.artifacts,
            normalization,
        },
        Err(e) => TaskOutcome {
            name: name.into(),
            status: TaskStatus::Failed,
            error: Some(e.to_string()),
            seconds,
            artifacts: Vec::new(),
            normalization,
        },
    }
}

pub const ANALYZE_NOTES: &[&str] = &["no eigenfunction involved"];
pub const CLASSIFY_NOTES: &[&str] = &[
    "theorem-eps uses the discrete lambda0 only",
    "semigroup-norm traces start from u0 with max 1 (phi0 = phi0_sup)",
];
pub const SIMULATE_NOTES: &[&str] = &[
    "u0 = amplitude * phi0_sup (max 1), or amplitude * bump (max 1)",
    "Kaplan y0 is the mass against phi0_mass (integral 1)",
    "supersolution field is z(t) * exp(-lambda0 t) * phi0_sup",
];
pub const VERIFY_NOTES: &[&str] = &["no eigenfunction involved"];

fn opt_f(r: Result<f64, blowup_core::Error>) -> Cell {
    r.ok().filter(|v| !v.is_nan()).map_or(Cell::Empty, Cell::Num)
}

pub(crate) fn analyze(ctx: &Context, _task: &AnalyzeTask, format: Format) -> Result<Produced, HarnessError> {
    let profile = ctx.profile()?;
    let f = ctx.f()?;
    let mut env = Table::new(&["u", "f", "f_m", "f_M", "alpha_m", "alpha_M", "saturated", "F", "F_m", "F_M"]);
    for &u in &profile.u_grid {
        let m = profile.minorant_detail(u);
        let mj = profile.majorant_detail(u);
        env.push(vec![
            u.into(),
            f.eval(u).into(),
            m.ln_value.exp().into(),
            mj.ln_value.exp().into(),
            m.alpha.into(),
            mj.alpha.into(),
            (m.saturated || mj.saturated).into(),
            opt_f(profile.potential(Potential::F, u)),
            opt_f(profile.potential(Potential::Fm, u)),
            opt_f(profile.potential(Potential::FM, u)),
        ]);
    }
    let report = json!({
        "lambda0": ctx.lambda0(),
        "psi": ctx.psi.as_ref().map(|p| p.describe()),
        "profile": profile.summary(),
        "quasi_mult": profile.quasi_mult_constants(),
        "shape": f.detect_shape(1e6),
    });
    Ok(Produced::ok(vec![Artifact::json("analyze.json", &report)?, Artifact::table("envelopes", &env, format)?]))
}

pub const CLASSIFY_COLUMNS: &[&str] = &[
    "psi",
    "f",
    "lambda0",
    "mode",
    "u0",
    "eps_min",
    "eps_max",
    "label",
    "value",
    "closed_form",
    "closed_form_match",
    "notes",
];

fn criterion_config(task: &ClassifyTask) -> CriterionConfig {
    let mut cfg = CriterionConfig { exec: Exec::Parallel, ..Default::default() };
    if let Some(eps) = &task.eps {
        cfg.eps_schedule = eps.clone();
    }
    if let Some(n) = task.horizon_doublings {
        cfg.horizons = (0..=n).map(|j| 2f64.powi(j as i32)).collect();
    } else {
        cfg.horizons = default_time_horizons();
    }
    cfg
}

fn decay_trace(ctx: &Context, u0: &[f64], t_end: f64) -> Result<DecayTrace, blowup_core::Error> {
    let cfg = HeatConfig { exec: Exec::Parallel, ..Default::default() };
    sup_norm_trace(&ctx.grid, u0, &uniform_times(t_end, 200), &cfg)?.with_envelope(ctx.lambda0())
}

/// Verdict rows plus the auxiliary report when requested.
pub fn classify_table(ctx: &Context, task: &ClassifyTask) -> Result<(Table, Option<AuxReport>), HarnessError> {
    let psi = ctx.psi()?;
    let f = ctx.f()?;
    let l = ctx.lambda0();
    let cfg = criterion_config(task);
    let closed = match (&psi.kind, f.power_exponent()) {
        (Kind::TimeWeight { sigma, k }, Some(p)) if p > 1.0 => Some(closed_form_class(*sigma, *k, p, l)),
        _ => None,
    };
    let eps_min = cfg.eps_schedule.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps_max = cfg.eps_schedule.iter().cloned().fold(0.0, f64::max);
    let mut table = Table::new(CLASSIFY_COLUMNS);
    let mut phi0_trace = None;
    for (i, m) in task.modes.iter().enumerate() {
        let mode = parse_mode(m, &format!("task.classify.modes[{i}]"))?;
        let runs: Vec<(String, Result<Option<DecayTrace>, String>)> = match mode {
            Mode::TheoremEps => vec![(String::new(), Ok(None))],
            Mode::SemigroupNorm => task
                .u0
                .iter()
                .map(|name| {
                    let tr = decay_trace(ctx, &ctx.initial_data(name), task.trace_end).map_err(|e| e.to_string());
                    if name == "phi0" {
                        phi0_trace = tr.as_ref().ok().cloned();
                    }
                    (name.clone(), tr.map(Some))
                })
                .collect(),
        };
        for (u0, trace) in runs {
            let (label, value, notes) = match trace {
                Ok(tr) => {
                    let v = classify_divergence(mode, psi, f, l, tr.as_ref(), &cfg);
                    (v.label, v.value, v.evidence.notes.join("; "))
                }
                Err(e) => (blowup_core::Label::Inconclusive, None, e),
            };
            let eps_cells = match mode {
                Mode::TheoremEps => (Cell::Num(eps_min), Cell::Num(eps_max)),
                Mode::SemigroupNorm => (Cell::Empty, Cell::Empty),
            };
            table.push(vec![
                psi.describe().into(),
                f.describe().into(),
                l.into(),
                mode.as_str().into(),
                u0.into(),
                eps_cells.0,
                eps_cells.1,
                label.as_str().into(),
                Cell::opt(value),
                closed.map_or(Cell::Empty, |c| c.as_str().into()),
                closed.map_or(Cell::Empty, |c| label_matches(label, c).into()),
                notes.into(),
            ]);
        }
    }
    let aux = if task.auxiliary {
        let trace = match phi0_trace {
            Some(t) => Some(t),
            None => decay_trace(ctx, &ctx.eigen.phi0_sup, task.trace_end).ok(),
        };
        Some(auxiliary_criteria(psi, ctx.profile()?, l, trace.as_ref(), &cfg))
    } else {
        None
    };
    Ok((table, aux))
}

fn condition_row(t: &mut Table, name: &str, c: &ConditionResult) {
    t.push(vec![
        name.into(),
        c.holds.map_or(Cell::Empty, Cell::Bool),
        c.verdict.as_ref().map_or(Cell::Empty, |v| v.label.as_str().into()),
        Cell::opt(c.verdict.as_ref().and_then(|v| v.value)),
        c.notes.join("; ").into(),
    ]);
}

fn auxiliary_table(aux: &AuxReport) -> Table {
    let mut t = Table::new(&["condition", "holds", "label", "value", "notes"]);
    if let Some(c) = &aux.c1 {
        condition_row(&mut t, "C1", c);
    }
    if let Some(c) = &aux.c2 {
        condition_row(&mut t, "C2", c);
    }
    if let Some(v) = &aux.corollary_f {
        t.push(vec!["corollaryF".into(), Cell::Empty, v.label.as_str().into(), Cell::opt(v.value), v.evidence.notes.join("; ").into()]);
    }
    if let Some(r) = &aux.lp1 {
        let note = format!("tau = {:?}, min ln gap = {}", r.tau, r.min_ln_gap);
        t.push(vec!["LP1".into(), r.holds.into(), Cell::Empty, Cell::Empty, note.into()]);
    }
    if let Some(c) = &aux.lp2 {
        condition_row(&mut t, "LP2", c);
    }
    for (name, reason) in &aux.skipped {
        t.push(vec![name.as_str().into(), Cell::Empty, Cell::Empty, Cell::Empty, format!("skipped: {reason}").into()]);
    }
    t
}

pub(crate) fn classify(ctx: &Context, task: &ClassifyTask, format: Format) -> Result<Produced, HarnessError> {
    let (table, aux) = classify_table(ctx, task)?;
    let mut out = vec![Artifact::table("classify", &table, format)?];
    if let Some(aux) = aux {
        out.push(Artifact::table("auxiliary", &auxiliary_table(&aux), format)?);
        out.push(Artifact::json("auxiliary.json", &aux)?);
    }
    Ok(Produced::ok(out))
}

pub const SIMULATE_COLUMNS: &[&str] = &[
    "u0",
    "amplitude",
    "status",
    "t_star",
    "final_sup_norm",
    "max_sup_norm",
    "tail_decay_rate",
    "horizon",
    "steps",
    "rejected",
    "dt_min",
    "dt_max",
];

fn sim_config(frames: FrameMode) -> SimConfig {
    SimConfig { frames, exec: Exec::Parallel, ..Default::default() }
}

/// One row per amplitude, with the runs themselves for trace output.
pub fn simulate_table(
    ctx: &Context,
    task: &SimulateTask,
) -> Result<(Table, Vec<blowup_core::simulator::SimOutcome>), HarnessError> {
    let psi = ctx.psi()?;
    let f = ctx.f()?;
    let base = ctx.initial_data(&task.u0);
    let frames = if task.snapshots.is_empty() { FrameMode::None } else { FrameMode::At(task.snapshots.clone()) };
    let cfg = sim_config(frames);
    let runs: Vec<Result<_, blowup_core::Error>> = Exec::Parallel.map(&task.amplitudes, |a| {
        let u0: Vec<f64> = base.iter().map(|v| a * v).collect();
        simulate(&ctx.grid, &ctx.eigen, psi, f, &u0, task.horizon, &cfg)
    });
    let mut table = Table::new(SIMULATE_COLUMNS);
    let mut outs = Vec::new();
    for (a, run) in task.amplitudes.iter().zip(runs) {
        let out = run?;
        let (t_star, max_sup, rate) = match out.status {
            SimStatus::BlownUp { t_star, .. } => (Some(t_star), None, None),
            SimStatus::GlobalEvidence { max_sup_norm, tail_decay_rate, .. } => (None, Some(max_sup_norm), Some(tail_decay_rate)),
            SimStatus::Undetermined => (None, None, None),
        };
        let m = &out.grid_meta;
        table.push(vec![
            task.u0.as_str().into(),
            (*a).into(),
            out.status.as_str().into(),
            Cell::opt(t_star),
            out.final_sup_norm().into(),
            Cell::opt(max_sup),
            Cell::opt(rate),
            task.horizon.into(),
            m.steps.into(),
            m.rejected.into(),
            m.dt_min.into(),
            m.dt_max.into(),
        ]);
        outs.push(out);
    }
    Ok((table, outs))
}

fn ode_table(rows: &[[f64; 3]], columns: &[&str]) -> Table {
    let mut t = Table::new(columns);
    for r in rows {
        t.push(r.iter().map(|x| Cell::Num(*x)).collect());
    }
    t
}

pub(crate) fn simulate_task(ctx: &Context, task: &SimulateTask, format: Format) -> Result<Produced, HarnessError> {
    let psi = ctx.psi()?;
    let f = ctx.f()?;
    let l = ctx.lambda0();
    let (table, runs) = simulate_table(ctx, task)?;
    let mut out = vec![Artifact::table("simulate", &table, format)?];
    let nodes = ctx.node_coords();
    for (i, run) in runs.iter().enumerate() {
        out.push(Artifact::table(&format!("trace_{i}"), &ode_table(&run.trace.rows(), &["t", "sup_norm", "dt"]), format)?);
        let requested = run.frames.iter().filter(|fr| task.snapshots.iter().any(|t| (fr.t - t).abs() <= 1e-12 * t.max(1.0)));
        for (j, frame) in requested.enumerate() {
            let header = format!("t = {}, amplitude = {}", frame.t, task.amplitudes[i]);
            out.push(Artifact::plot_data(format!("snapshot_{i}_{j}.dat"), &header, &nodes, &frame.u()));
        }
    }

    let mut report = serde_json::Map::new();
    let mut failure = None;
    if let Some(ode) = &task.ode {
        let traj = kaplan_ode(psi, f, l, ode.y0, ode.horizon, &KaplanConfig::default())?;
        out.push(Artifact::table("ode", &ode_table(&traj.rows(), &["t", "value", "step"]), format)?);
        let t_star = match traj.status {
            OdeStatus::BlewUp { t_star } => Some(t_star),
            _ => None,
        };
        report.insert(
            "ode".into(),
            json!({ "y0": ode.y0, "horizon": ode.horizon, "status": traj.status, "t_star": t_star,
                    "step_stats": traj.step_stats, "diagnostics": traj.diagnostics }),
        );
    }
    if let Some(s) = &task.supersolution {
        let profile = ctx.profile()?;
        let cfg = SupersolutionConfig { z0: s.z0.map_or(Z0::Auto, Z0::Value), ..Default::default() };
        match SupersolutionPath::new(profile, psi, l, s.eps, &cfg) {
            Ok(path) => {
                let z = path.trajectory(&uniform_times(s.horizon, s.samples.max(1)))?;
                out.push(Artifact::table("supersolution", &ode_table(&z.rows(), &["t", "z", "step"]), format)?);
                let mut entry = json!({ "eps": s.eps, "z0": path.z0, "bound": path.bound, "j_total": path.j_total,
                                        "status": z.status, "diagnostics": path.diagnostics });
                if let Some(a) = s.compare_amplitude {
                    let u0: Vec<f64> = ctx.eigen.phi0_sup.iter().map(|p| a * p).collect();
                    let sim = simulate(&ctx.grid, &ctx.eigen, psi, f, &u0, s.horizon, &sim_config(FrameMode::EveryStep))?;
                    let zf = path.trajectory(&sim.frame_times())?;
                    let rep = comparison_check(&sim, &zf, &ctx.eigen, 1e-8)?;
                    if !rep.dominated {
                        failure = Some(format!("supersolution does not dominate (violation {})", rep.max_violation));
                    }
                    entry["comparison"] = json!({ "amplitude": a, "pde_status": sim.status, "report": rep });
                }
                report.insert("supersolution".into(), entry);
            }
            Err(e) => {
                failure = Some(format!("supersolution: {e}"));
                report.insert("supersolution".into(), json!({ "eps": s.eps, "error": e.to_string() }));
            }
        }
    }
    if task.amplitude_search {
        let found = find_global_amplitude(&ctx.grid, &ctx.eigen, psi, f, task.horizon, 12, &sim_config(FrameMode::None))?;
        let mut t = Table::new(&["amplitude", "status"]);
        for (a, st) in &found.tried {
            t.push(vec![(*a).into(), st.as_str().into()]);
        }
        out.push(Artifact::table("amplitude_search", &t, format)?);
        report.insert("amplitude_search".into(), json!({ "amplitude": found.amplitude }));
    }
    if !report.is_empty() {
        out.push(Artifact::json("simulate_report.json", &report)?);
    }
    Ok(Produced { artifacts: out, failure })
}

pub(crate) fn verify(ctx: Option<&Context>, cfg: &Config, task: &VerifyTask, format: Format) -> Result<Produced, HarnessError> {
    let mut fs = Vec::new();
    if let Some(f) = ctx.and_then(|c| c.f.clone()) {
        fs.push(f);
    } else if let Some(spec) = &cfg.f {
        fs.push(spec.resolve("f", f64::NAN)?);
    }
    for (i, text) in task.f.iter().enumerate() {
        fs.push(
            ScalarFunction::parse(text)
                .map_err(|e| HarnessError::config(format!("task.verify-properties.f[{i}]"), e.to_string()))?,
        );
    }
    if fs.is_empty() {
        return Err(HarnessError::config("task.verify-properties.f", "no reaction terms declared"));
    }
    let reports: Vec<Result<_, blowup_core::Error>> =
        Exec::Parallel.map(&fs, |f| NonlinearityProfile::new(f.clone()).map(|p| verify_properties(&p, &PropertyConfig::default())));
    let mut t = Table::new(&["f", "property", "status", "worst", "detail"]);
    let mut failed = Vec::new();
    for (f, r) in fs.iter().zip(reports) {
        let r = r?;
        for c in &r.checks {
            if c.status == CheckStatus::Fail {
                failed.push(format!("{}: {}", f.describe(), c.name));
            }
            t.push(vec![f.describe().into(), c.name.as_str().into(), c.status.as_str().into(), c.worst.into(), c.detail.as_str().into()]);
        }
    }
    let failure = (!failed.is_empty()).then(|| format!("failed properties: {}", failed.join(", ")));
    Ok(Produced { artifacts: vec![Artifact::table("properties", &t, format)?], failure })
}
