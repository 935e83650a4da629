//! Command-line front end. Every run writes CSV/JSON artifacts and a
//! `manifest.json` into the output directory; `replay` reruns a manifest.

mod config;

pub use config::{
    ExperimentConfig, GridConfig, IntegrandSpec, InitialCondition, McTarget, OutputConfig, ProblemConfig,
    TruncationConfig,
};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand as ClapSubcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chaos::ChaosProcess;
use crate::error::Error;
use crate::field::{FieldModel, KernelSpec};
use crate::montecarlo::{validate_covariance, validate_heat_solution, validate_wick_exponential, Estimate};
use crate::skorokhod::{associated_process, skorokhod_running, stratonovich_integral};
use crate::sode::{residual, solve_propagator, PropagatorOptions, SodeProblem};
use crate::spde::{
    check_parabolicity, check_parabolicity_general, energy_report, heat_second_moment, solve_evolution_chaos,
    solve_heat_closed, EvolutionOptions, EvolutionProblem, HeatInput, HeatProblem, ModeSelection,
};

/// Failure of a run, mapped to the process exit status.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    InspectField,
    Integrate,
    SolveSode,
    SolveHeat,
    SolveEvolution,
    CheckParabolicity,
    McValidate,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::InspectField => "inspect-field",
            Subcommand::Integrate => "integrate",
            Subcommand::SolveSode => "solve-sode",
            Subcommand::SolveHeat => "solve-heat",
            Subcommand::SolveEvolution => "solve-evolution",
            Subcommand::CheckParabolicity => "check-parabolicity",
            Subcommand::McValidate => "mc-validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chaoskit", version, about = "Wiener chaos experiments for Gaussian-field driven equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, ClapSubcommand)]
pub enum Command {
    /// Kernel samples, covariance and operator-norm estimates.
    InspectField(Overrides),
    /// Skorokhod integral of the configured integrand.
    Integrate(Overrides),
    /// Propagator solution of `du = a u dt + σ u ⋄ dX`.
    SolveSode(Overrides),
    /// Closed-form stochastic heat equation.
    SolveHeat(Overrides),
    /// Chaos solver for the heat equation with transport noise.
    SolveEvolution(Overrides),
    /// Non-explosion condition of the heat equation.
    CheckParabolicity(Overrides),
    /// Monte Carlo check of chaos predictions.
    McValidate(Overrides),
    /// Rerun the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write into this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags override values read from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// wiener, fbm, ou-stable or ou-unstable.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long = "H")]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    /// Time cells.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Spatial points.
    #[arg(long)]
    pub xgrid: Option<usize>,
    #[arg(long)]
    pub xlength: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub drift: Option<f64>,
    #[arg(long)]
    pub u0: Option<f64>,
    #[arg(long)]
    pub mode: Option<usize>,
    /// 0 disables pruning.
    #[arg(long)]
    pub prune_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub target: Option<McTarget>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every chaos coefficient as JSON.
    #[arg(long)]
    pub full: bool,
}

fn kernel_from_flags(cur: KernelSpec, o: &Overrides) -> Result<KernelSpec, CliError> {
    let mut k = match o.kernel.as_deref().map(|s| s.to_ascii_lowercase().replace('_', "-")) {
        None => cur,
        Some(name) => match name.as_str() {
            "wiener" | "brownian" => KernelSpec::Wiener,
            "fbm" => KernelSpec::Fbm { hurst: if let KernelSpec::Fbm { hurst } = cur { hurst } else { 0.75 } },
            "ou-stable" | "ou" => {
                KernelSpec::OuStable { b: if let KernelSpec::OuStable { b } = cur { b } else { 1.0 } }
            }
            "ou-unstable" => {
                KernelSpec::OuUnstable { b: if let KernelSpec::OuUnstable { b } = cur { b } else { 1.0 } }
            }
            other => return Err(CliError::Config(format!("unknown kernel '{other}'"))),
        },
    };
    if let Some(h) = o.hurst {
        match &mut k {
            KernelSpec::Fbm { hurst } => *hurst = h,
            _ => return Err(CliError::Config("--H needs the fbm kernel".into())),
        }
    }
    if let Some(rate) = o.b {
        match &mut k {
            KernelSpec::OuStable { b } | KernelSpec::OuUnstable { b } => *b = rate,
            _ => return Err(CliError::Config("--b needs an OU kernel".into())),
        }
    }
    k.validate()?;
    Ok(k)
}

impl Overrides {
    /// The config file, if any, with the flags applied on top.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                ExperimentConfig::from_json(&text).map_err(CliError::Config)?
            }
            None => ExperimentConfig::default(),
        };
        c.kernel = kernel_from_flags(c.kernel, self)?;
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    c.$($field)+ = v;
                }
            };
        }
        set!(t_end => grid.t_end);
        set!(grid => grid.n);
        set!(xgrid => problem.x_n);
        set!(xlength => problem.x_length);
        set!(order => truncation.order);
        set!(dim => truncation.dim);
        set!(a => problem.a);
        set!(sigma => problem.sigma);
        set!(drift => problem.drift);
        set!(u0 => problem.u0);
        set!(target => target);
        set!(n_paths => n_paths);
        set!(seed => seed);
        set!(out => output.dir);
        if self.mode.is_some() {
            c.problem.mode = self.mode;
        }
        if let Some(tol) = self.prune_tol {
            c.problem.prune_tol = (tol > 0.0).then_some(tol);
        }
        c.output.full |= self.full;
        Ok(c)
    }
}

/// Caps rayon at `CHAOSKIT_THREADS` workers when set.
pub fn init_threads() -> Result<Option<usize>, CliError> {
    let Ok(v) = std::env::var("CHAOSKIT_THREADS") else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("CHAOSKIT_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(Some(n))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Subcommand,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub status: String,
    pub timings_s: Value,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad manifest: {e}")))
    }
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        self.write(name, &(serde_json::to_string_pretty(v).expect("json serializes") + "\n"))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<(), CliError> {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::F(v) => write!(s, "{v:?}").unwrap(),
                    Cell::I(v) => write!(s, "{v}").unwrap(),
                    Cell::S(v) => s.push_str(v),
                    Cell::Empty => {}
                }
            }
            s.push('\n');
        }
        self.write(name, &s)
    }
}

enum Cell {
    F(f64),
    I(usize),
    S(String),
    Empty,
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::Empty, Cell::F)
}

/// Runs one subcommand and returns the artifact names. A manifest is written
/// even when the numerics fail.
pub fn run(command: Subcommand, cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let start = Instant::now();
    let mut out = Artifacts::new(&cfg.output.dir)?;
    let result = match command {
        Subcommand::InspectField => inspect_field(cfg, &mut out),
        Subcommand::Integrate => integrate(cfg, &mut out),
        Subcommand::SolveSode => solve_sode(cfg, &mut out),
        Subcommand::SolveHeat => solve_heat(cfg, &mut out),
        Subcommand::SolveEvolution => solve_evolution(cfg, &mut out),
        Subcommand::CheckParabolicity => parabolicity(cfg, &mut out),
        Subcommand::McValidate => mc_validate(cfg, &mut out),
    };
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    let mut artifacts = out.written.clone();
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        tool: "chaoskit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        config: cfg.clone(),
        threads: rayon::current_num_threads(),
        status,
        timings_s: json!({ "total": start.elapsed().as_secs_f64() }),
        artifacts,
    };
    out.json("manifest.json", &serde_json::to_value(&manifest).expect("manifest serializes"))?;
    result.map(|()| out.written)
}

/// Reruns a manifest, optionally into another directory.
pub fn replay(manifest: &Path, out: Option<&Path>) -> Result<Vec<String>, CliError> {
    let m = Manifest::read(manifest)?;
    let mut cfg = m.config;
    if let Some(dir) = out {
        cfg.output.dir = dir.to_path_buf();
    }
    run(m.command, &cfg)
}

fn build_model(cfg: &ExperimentConfig) -> Result<FieldModel, CliError> {
    Ok(FieldModel::build(cfg.kernel, cfg.time_grid()?, cfg.truncation.dim)?)
}

fn inspect_field(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let grid = model.grid();
    let kernel = model.kernel();
    let stride = grid.n().div_ceil(64).max(1);
    let sample: Vec<usize> = (0..grid.n_nodes()).step_by(stride).collect();
    let mut rows = Vec::new();
    for &j in &sample {
        for &i in sample.iter().filter(|&&i| i <= j) {
            let (t, s) = (grid.node(j), grid.node(i));
            rows.push(vec![Cell::F(t), Cell::F(s), Cell::F(kernel.eval(t, s)), opt(kernel.dt(t, s).ok())]);
        }
    }
    out.csv("kernel.csv", &["t", "s", "K", "dK/dt"], rows)?;
    let var = model.variance();
    let trunc = model.truncated_variance();
    out.csv(
        "variance.csv",
        &["t", "R", "R_truncated", "R_exact"],
        (0..grid.n_nodes()).map(|j| {
            let t = grid.node(j);
            vec![Cell::F(t), Cell::F(var[j]), Cell::F(trunc[j]), opt(kernel.exact_covariance(t, t))]
        }),
    )?;
    let bound = model.norm_bound();
    out.json(
        "field.json",
        &json!({
            "kernel": kernel,
            "name": kernel.name(),
            "semimartingale": kernel.is_semimartingale(),
            "norm_bound": bound.as_ref().ok(),
            "norm_bound_error": bound.as_ref().err().map(ToString::to_string),
            "galerkin_norm": model.galerkin_norm(),
            "spectral_norm": model.spectral_norm(),
            "sup_mtilde": model.sup_mtilde(),
        }),
    )
}

fn moments_csv(out: &mut Artifacts, name: &str, p: &ChaosProcess, times: &[f64]) -> Result<(), CliError> {
    let (mean, second) = (p.mean(), p.second_moment());
    out.csv(
        name,
        &["t", "mean", "second_moment"],
        (0..times.len()).map(|j| vec![Cell::F(times[j]), Cell::F(mean[j]), Cell::F(second[j])]),
    )
}

fn integrate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let trunc = cfg.truncation_spec()?;
    let eta = match &cfg.problem.integrand {
        IntegrandSpec::AssociatedProcess => associated_process(&model, trunc),
        IntegrandSpec::Samples { values } => {
            if values.len() != model.grid().n_nodes() {
                return Err(Error::GridMismatch { expected: model.grid().n_nodes(), got: values.len() }.into());
            }
            ChaosProcess::deterministic(trunc, values)
        }
    };
    let running = skorokhod_running(&eta, &model)?;
    let last = model.grid().n();
    moments_csv(out, "moments.csv", &running, &model.grid().nodes())?;
    out.json("result.json", &running.at_node(last).to_json())?;
    let strat = stratonovich_integral(&eta, &model)?;
    out.json(
        "summary.json",
        &json!({
            "t": model.grid().t_end(),
            "skorokhod_mean": running.at_node(last).mean(),
            "skorokhod_second_moment": running.at_node(last).second_moment(),
            "stratonovich_mean": strat.value.mean(),
            "trace_mean": strat.trace.mean(),
            "overflow_mass": strat.overflow_mass,
        }),
    )?;
    if cfg.output.full {
        out.json("running.json", &running.to_json())?;
    }
    Ok(())
}

fn solve_sode(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let times = model.grid().nodes();
    let n1 = times.len();
    let mut p = SodeProblem::new(model, cfg.truncation_spec()?).with_drift(vec![cfg.problem.drift; n1]).with_u0(cfg.problem.u0);
    p.sigma = vec![vec![cfg.problem.sigma; n1]];
    let sol = solve_propagator(&p, PropagatorOptions { prune_tol: cfg.problem.prune_tol })?;
    moments_csv(out, "moments.csv", &sol.process, &times)?;
    out.json(
        "summary.json",
        &json!({
            "indices": sol.process.len(),
            "pruned": sol.pruned,
            "residual": residual(&p, &sol.process)?,
            "mean_end": sol.process.mean()[n1 - 1],
            "second_moment_end": sol.process.second_moment()[n1 - 1],
        }),
    )?;
    if cfg.output.full {
        out.json("solution.json", &sol.process.to_json())?;
    }
    Ok(())
}

fn heat_problem(cfg: &ExperimentConfig) -> Result<HeatProblem, CliError> {
    let space = cfg.space()?;
    let u0 = cfg.initial_values(&space)?;
    Ok(HeatProblem::constant(build_model(cfg)?, space, cfg.problem.a, cfg.problem.sigma, u0)?)
}

/// Writes `margin.csv` and returns the parabolicity summary.
fn margin_artifacts(p: &HeatProblem, out: &mut Artifacts) -> Result<Value, CliError> {
    let rep = check_parabolicity(p);
    out.csv(
        "margin.csv",
        &["t", "margin", "energy"],
        rep.times.iter().zip(&rep.margin).enumerate().map(|(j, (&t, &m))| {
            let e = (m >= 0.0).then(|| heat_second_moment(p, j));
            vec![Cell::F(t), Cell::F(m), opt(e)]
        }),
    )?;
    let ep = EvolutionProblem::heat(
        p.model().clone(),
        *p.space(),
        p.a()[0],
        p.sigma()[0],
        p.u0().to_vec(),
    );
    let general = check_parabolicity_general(&ep)?;
    Ok(json!({
        "holds": rep.holds,
        "first_violation_t": rep.first_violation_t,
        "crossing_t": rep.crossing_t,
        "condition": rep.condition,
        "delta0": general.delta0,
        "c0": general.c0,
        "general_holds": general.holds,
        "kappa_squared": general.kappa_squared,
    }))
}

fn parabolicity(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let p = heat_problem(cfg)?;
    let summary = margin_artifacts(&p, out)?;
    out.json("summary.json", &summary)
}

fn solve_heat(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let p = heat_problem(cfg)?;
    let summary = margin_artifacts(&p, out)?;
    out.json("summary.json", &summary)?;
    let last = p.model().grid().n();
    let mean = solve_heat_closed(&p, HeatInput::Moment, &[last])?.remove(0);
    let space = p.space();
    out.csv(
        "mean.csv",
        &["x", "u0", "mean"],
        space.nodes().iter().enumerate().map(|(i, &x)| vec![Cell::F(x), Cell::F(p.u0()[i]), Cell::F(mean[i])]),
    )
}

fn solve_evolution(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let space = cfg.space()?;
    let u0 = cfg.initial_values(&space)?;
    let p = EvolutionProblem::heat(build_model(cfg)?, space, cfg.problem.a, cfg.problem.sigma, u0);
    let general = check_parabolicity_general(&p)?;
    let opts = EvolutionOptions {
        modes: cfg.problem.mode.map_or(ModeSelection::All, |m| ModeSelection::Only(vec![m])),
        keep_coefficients: false,
    };
    let sol = solve_evolution_chaos(&p, cfg.truncation_spec()?, &opts)?;
    let rep = energy_report(&sol, &p, general.delta0.max(0.0))?;
    let (e, ex) = (sol.energy(), sol.energy_x());
    out.csv(
        "energy.csv",
        &["t", "energy", "energy_x"],
        sol.times.iter().enumerate().map(|(j, &t)| vec![Cell::F(t), Cell::F(e[j]), Cell::F(ex[j])]),
    )?;
    out.csv(
        "grades.csv",
        &["order", "energy_end", "partial_sum_end", "growth"],
        rep.grade_energy_end.iter().enumerate().map(|(n, &g)| {
            vec![Cell::I(n), Cell::F(g), Cell::F(rep.partial_sums_end[n]), opt(n.checked_sub(1).map(|k| rep.growth[k]))]
        }),
    )?;
    let last = sol.times.len() - 1;
    out.csv(
        "mean.csv",
        &["x", "mean"],
        space.nodes().iter().zip(&sol.mean[last]).map(|(&x, &m)| vec![Cell::F(x), Cell::F(m)]),
    )?;
    out.json("summary.json", &json!({ "parabolicity": general, "energy": rep }))
}

fn estimate_row(name: &str, t: f64, s: Option<f64>, e: &Estimate) -> Vec<Cell> {
    vec![
        Cell::S(name.into()),
        Cell::F(t),
        opt(s),
        Cell::F(e.estimate),
        Cell::F(e.reference),
        Cell::F(e.se),
        Cell::F(e.z()),
        Cell::S(e.passes(3.0).to_string()),
    ]
}

const MC_HEADER: [&str; 8] = ["quantity", "t", "s", "estimate", "reference", "se", "z", "pass"];

fn mc_validate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (n_paths, seed) = (cfg.n_paths, cfg.seed);
    if n_paths < 2 {
        return Err(CliError::Config("n_paths must be at least 2".into()));
    }
    let summary = match cfg.target {
        McTarget::WickExp => {
            let model = build_model(cfg)?;
            let node = model.grid().n();
            let r = validate_wick_exponential(&model, node, cfg.truncation.order, n_paths, seed)?;
            out.csv(
                "mc.csv",
                &MC_HEADER,
                [estimate_row("mean", r.t, None, &r.mean), estimate_row("second_moment", r.t, None, &r.second_moment)],
            )?;
            serde_json::to_value(&r).expect("report serializes")
        }
        McTarget::Heat => {
            let p = heat_problem(cfg)?;
            let node = p.model().grid().n();
            let r = validate_heat_solution(&p, node, n_paths, seed)?;
            let e = Estimate { estimate: r.max_discrepancy, se: r.max_se, reference: 0.0 };
            out.csv("mc.csv", &MC_HEADER, [estimate_row("sup_mean_discrepancy", r.t, None, &e)])?;
            serde_json::to_value(&r).expect("report serializes")
        }
        McTarget::Covariance => {
            let model = build_model(cfg)?;
            let n = model.grid().n();
            let mut pairs: Vec<(usize, usize)> = [n, n / 4, n / 2, 3 * n / 4].iter().map(|&j| (j, j)).collect();
            pairs.retain(|p| p.0 > 0);
            pairs.dedup();
            pairs.push((n, n / 2));
            let r = validate_covariance(&model, &pairs, n_paths, seed)?;
            let t = model.grid().t_end();
            let mut rows: Vec<_> = r.rows.iter().map(|row| estimate_row("covariance", row.t, Some(row.s), &row.value)).collect();
            rows.push(estimate_row("skewness", t, None, &r.normality.skewness));
            rows.push(estimate_row("excess_kurtosis", t, None, &r.normality.excess_kurtosis));
            out.csv("mc.csv", &MC_HEADER, rows)?;
            serde_json::to_value(&r).expect("report serializes")
        }
    };
    out.json("summary.json", &json!({ "target": cfg.target, "n_paths": n_paths, "seed": seed, "report": summary }))
}

/// Parses arguments, runs, and returns the exit status.
pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Replay { manifest, out } => replay(manifest, out.as_deref()),
        Command::InspectField(o) => o.resolve().and_then(|c| run(Subcommand::InspectField, &c)),
        Command::Integrate(o) => o.resolve().and_then(|c| run(Subcommand::Integrate, &c)),
        Command::SolveSode(o) => o.resolve().and_then(|c| run(Subcommand::SolveSode, &c)),
        Command::SolveHeat(o) => o.resolve().and_then(|c| run(Subcommand::SolveHeat, &c)),
        Command::SolveEvolution(o) => o.resolve().and_then(|c| run(Subcommand::SolveEvolution, &c)),
        Command::CheckParabolicity(o) => o.resolve().and_then(|c| run(Subcommand::CheckParabolicity, &c)),
        Command::McValidate(o) => o.resolve().and_then(|c| run(Subcommand::McValidate, &c)),
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            0
        }
        Err(e) => {
            eprintln!("chaoskit: {e}");
            e.exit_code()
        }
    }
}
