use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use sdde_core::conditions::{self, SegmentPairSampler, Status, Verdict, VerdictSet, Witness};
use sdde_core::engine::{simulate, simulate_coupled, SimConfig};
use sdde_core::ergodics::{self, Functional, MixingParams};
use sdde_core::models::{ModelClass, ModelSpec};
use sdde_core::noise::NoiseStream;
use sdde_core::paths::{skorohod_distance, SearchParams, Segment};
use sdde_core::rates::{self, halanay_rate, mixing_rate_estimate, neutral_mixing_exponent, razumikhin_gamma};

use crate::config::{config_error, parse_segment, require, ExperimentConfig, Radius, SimSection};
use crate::error::{LabError, LabResult};
use crate::formats::{self, jnum, num, opt, write_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Task {
    Simulate,
    Couple,
    Mixing,
    Invariant,
    Moments,
    Tightness,
    Kurtz,
    Halanay,
    Razumikhin,
    Check,
    Skorohod,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Couple => "couple",
            Self::Mixing => "mixing",
            Self::Invariant => "invariant",
            Self::Moments => "moments",
            Self::Tightness => "tightness",
            Self::Kurtz => "kurtz",
            Self::Halanay => "halanay",
            Self::Razumikhin => "razumikhin",
            Self::Check => "check",
            Self::Skorohod => "skorohod",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub task: Task,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub strict: bool,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub artifacts: Vec<String>,
    /// Human-readable result lines for stdout.
    pub summary: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    base: &'a Path,
    artifacts: Vec<String>,
    summary: Vec<String>,
    /// Set by `check` when any verdict fails.
    failed: Option<String>,
    /// Set when a run finished but hit a numerical failure after writing.
    numerical: Option<String>,
}

impl Ctx<'_> {
    fn file(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn wants(&self, format: &str) -> bool {
        self.cfg.output.wants(format)
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> LabResult<()> {
        if self.wants("json") {
            let p = self.file(name);
            fs::write(p, serde_json::to_string_pretty(value).expect("json values serialise") + "\n")?;
        }
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> LabResult<()> {
        if self.wants("txt") {
            let p = self.file(name);
            fs::write(p, text)?;
        }
        Ok(())
    }

    fn model_and_sim(&self) -> LabResult<(ModelSpec, SimConfig)> {
        Ok((self.cfg.build_model()?, self.cfg.sim_config()?))
    }

    fn segment(&self, spec: &str, model: &ModelSpec, points: usize) -> LabResult<Segment> {
        parse_segment(spec, model.tau(), model.dim(), points, self.base)
    }

    fn xi(&self, model: &ModelSpec, sim: &SimConfig) -> LabResult<Segment> {
        self.segment(&self.cfg.initial.xi, model, sim.segment_points)
    }

    fn eta(&self, model: &ModelSpec, sim: &SimConfig) -> LabResult<Segment> {
        self.segment(&self.cfg.initial.eta, model, sim.segment_points)
    }

    fn functional(&self) -> LabResult<Functional> {
        let name = self.cfg.task.functional.as_deref().unwrap_or("tanh_phi0");
        Functional::by_name(name).ok_or_else(|| config_error(format!("unknown functional {name:?}")))
    }
}

pub fn run(opts: &RunOptions) -> LabResult<Outcome> {
    let started = Instant::now();
    let text = fs::read_to_string(&opts.config)
        .map_err(|e| config_error(format!("cannot read {}: {e}", opts.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(name) = &cfg.task.name {
        if name != opts.task.name() {
            return Err(config_error(format!("config is for task {name:?}, not {:?}", opts.task.name())));
        }
    }
    if let Some(seed) = opts.seed {
        match &mut cfg.sim {
            Some(s) => s.seed = seed,
            None => {
                cfg.sim = Some(SimSection {
                    seed,
                    step: None,
                    horizon: None,
                    segment_points: None,
                    ensemble: None,
                    threads: None,
                    divergence_guard: None,
                    fixed_point_tol: None,
                    fixed_point_max_iter: None,
                })
            }
        }
    }
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir)?;
    let base = opts.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut ctx = Ctx {
        cfg: &cfg,
        dir: &dir,
        base: &base,
        artifacts: Vec::new(),
        summary: Vec::new(),
        failed: None,
        numerical: None,
    };
    match opts.task {
        Task::Simulate => task_simulate(&mut ctx)?,
        Task::Couple => task_couple(&mut ctx)?,
        Task::Mixing => task_mixing(&mut ctx)?,
        Task::Invariant => task_invariant(&mut ctx)?,
        Task::Moments => task_moments(&mut ctx)?,
        Task::Tightness => task_tightness(&mut ctx)?,
        Task::Kurtz => task_kurtz(&mut ctx)?,
        Task::Halanay => task_halanay(&mut ctx)?,
        Task::Razumikhin => task_razumikhin(&mut ctx)?,
        Task::Check => task_check(&mut ctx)?,
        Task::Skorohod => task_skorohod(&mut ctx)?,
    }

    let Ctx {
        mut artifacts,
        summary,
        failed,
        numerical,
        ..
    } = ctx;
    fs::write(dir.join("config.toml"), &text)?;
    artifacts.push("config.toml".into());
    let seed = cfg.seed();
    let mut command = format!("sdde {} --config config.toml", opts.task.name());
    if let Some(s) = seed {
        command.push_str(&format!(" --seed {s}"));
    }
    if opts.strict {
        command.push_str(" --strict");
    }
    let manifest = json!({
        "task": opts.task.name(),
        "config_sha256": format!("{:x}", Sha256::digest(text.as_bytes())),
        "config_copy": "config.toml",
        "seed": seed,
        "library_version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "artifacts": artifacts,
        "rerun": command,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("json") + "\n")?;

    if let Some(reason) = numerical {
        return Err(LabError::Numerical(reason));
    }
    if let (true, Some(reason)) = (opts.strict, failed) {
        return Err(LabError::StrictFail(reason));
    }
    Ok(Outcome { dir, artifacts, summary })
}

fn task_simulate(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let xi = ctx.xi(&model, &sim)?;
    let path = ctx.cfg.task.path.unwrap_or(0);
    let traj = simulate(&model, &xi, &sim, &NoiseStream::new(sim.master_seed, path))?;
    let p = ctx.file("trajectory.csv");
    formats::write_trajectory_csv(&p, &traj)?;
    let end = traj.state(traj.len() - 1).iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
    ctx.summary.push(format!("X({}) = [{end}]", num(traj.end_time())));
    if let Some(t) = traj.diverged_at() {
        ctx.numerical = Some(format!("path crossed the divergence guard at t = {t}"));
    }
    Ok(())
}

fn task_couple(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let (xi, eta) = (ctx.xi(&model, &sim)?, ctx.eta(&model, &sim)?);
    let [w0, w1] = ctx.cfg.task.window.unwrap_or([model.tau(), sim.horizon]);
    let report = mixing_rate_estimate(&model, &xi, &eta, &sim, (w0, w1))?;
    let files = formats::write_rate_report(ctx.dir, &report, ctx.wants("txt"))?;
    ctx.artifacts.extend(files);

    // One coupled pair for inspection.
    let (a, b) = simulate_coupled(&model, &xi, &eta, &sim, &NoiseStream::new(sim.master_seed, 0))?;
    let p = ctx.file("pair_xi.csv");
    formats::write_trajectory_csv(&p, &a)?;
    let p = ctx.file("pair_eta.csv");
    formats::write_trajectory_csv(&p, &b)?;

    ctx.summary.push(format!(
        "fitted_rate = {} (r^2 = {}, power {}), analytic_rate = {}",
        num(report.fitted_rate),
        num(report.r_squared),
        report.power,
        opt(report.analytic_rate)
    ));
    ctx.summary.extend(report.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(())
}

fn task_mixing(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let (xi, eta) = (ctx.xi(&model, &sim)?, ctx.eta(&model, &sim)?);
    let f = ctx.functional()?;
    let defaults = MixingParams::default();
    let t = &ctx.cfg.task;
    let params = MixingParams {
        stationary_horizon: t.stationary_horizon.unwrap_or(defaults.stationary_horizon),
        burn_in: t.burn_in.unwrap_or(defaults.burn_in),
        stationary_paths: t.stationary_paths.unwrap_or(defaults.stationary_paths),
    };
    let r = ergodics::mixing_check(&model, &xi, &eta, &f, &sim, &params)?;
    let rows: Vec<Vec<String>> = r
        .gaps
        .iter()
        .zip(&r.transient_se)
        .map(|((t, g), se)| vec![num(*t), num(*g), num(*se), opt(r.smoothed_gap_at(*t))])
        .collect();
    let p = ctx.file("mixing_gaps.csv");
    write_rows(&p, &["t".into(), "gap".into(), "se".into(), "smoothed_gap".into()], &rows)?;
    let p = ctx.file("mixing.csv");
    write_rows(
        &p,
        &["functional", "pi_estimate", "pi_se", "pi_run_a", "pi_run_a_se", "pi_run_b", "pi_run_b_se", "pi_agree", "fitted_rate", "fit_points", "analytic_rate"]
            .map(String::from),
        &[vec![
            r.functional.clone(),
            num(r.pi_estimate),
            num(r.pi_standard_error),
            num(r.pi_runs[0].0),
            num(r.pi_runs[0].1),
            num(r.pi_runs[1].0),
            num(r.pi_runs[1].1),
            r.pi_agree.to_string(),
            num(r.fitted_rate),
            r.fit_points.to_string(),
            opt(r.analytic_rate),
        ]],
    )?;
    let value = json!({
        "functional": r.functional,
        "pi_estimate": jnum(r.pi_estimate),
        "pi_standard_error": jnum(r.pi_standard_error),
        "pi_runs": r.pi_runs.iter().map(|(v, s)| json!({"estimate": jnum(*v), "se": jnum(*s)})).collect::<Vec<_>>(),
        "pi_agree": r.pi_agree,
        "fitted_rate": jnum(r.fitted_rate),
        "fit_points": r.fit_points,
        "analytic_rate": r.analytic_rate.map(jnum),
        "gaps_csv": "mixing_gaps.csv",
    });
    ctx.write_json("mixing.json", &value)?;
    ctx.summary.push(format!(
        "pi({}) = {} +- {}; runs agree: {}; gap rate = {}",
        r.functional,
        num(r.pi_estimate),
        num(r.pi_standard_error),
        r.pi_agree,
        num(r.fitted_rate)
    ));
    Ok(())
}

fn task_invariant(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let xi = ctx.xi(&model, &sim)?;
    let f = ctx.functional()?;
    let burn_in = ctx.cfg.task.burn_in.unwrap_or(0.1 * sim.horizon);
    let a = ergodics::time_average(&model, &xi, &f, &sim, burn_in)?;
    let p = ctx.file("invariant.csv");
    write_rows(
        &p,
        &["functional", "estimate", "standard_error", "paths", "diverged", "burn_in"].map(String::from),
        &[vec![
            f.name().to_string(),
            num(a.estimate),
            num(a.standard_error),
            a.paths.to_string(),
            a.diverged.to_string(),
            num(burn_in),
        ]],
    )?;
    ctx.summary.push(format!("pi({}) ~ {} +- {}", f.name(), num(a.estimate), num(a.standard_error)));
    Ok(())
}

fn task_moments(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let xi = ctx.xi(&model, &sim)?;
    let kappa_exp = ctx.cfg.task.kappa_exp.unwrap_or(0.0);
    let burn_in = ctx.cfg.task.burn_in.unwrap_or(0.5 * sim.horizon);
    let r = ergodics::moment_bound_check(&model, &xi, &sim, kappa_exp, burn_in)?;
    let rows: Vec<Vec<String>> = r.times.iter().zip(&r.moments).map(|(t, m)| vec![num(*t), num(*m)]).collect();
    let p = ctx.file("moments.csv");
    write_rows(&p, &["t".into(), "moment".into()], &rows)?;
    let p = ctx.file("moments_summary.csv");
    write_rows(
        &p,
        &["exponent", "max", "slope", "slope_ci_low", "slope_ci_high", "bounded", "diverged"].map(String::from),
        &[vec![
            num(r.exponent),
            num(r.max),
            num(r.slope),
            num(r.slope_ci.0),
            num(r.slope_ci.1),
            r.bounded.to_string(),
            r.diverged.to_string(),
        ]],
    )?;
    ctx.summary.push(format!(
        "E|X_t|^{} slope {} in [{}, {}]; bounded: {}",
        num(r.exponent),
        num(r.slope),
        num(r.slope_ci.0),
        num(r.slope_ci.1),
        r.bounded
    ));
    Ok(())
}

fn task_tightness(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let xi = ctx.xi(&model, &sim)?;
    let deltas = ctx.cfg.task.deltas.clone().unwrap_or_else(|| vec![0.5, 0.2, 0.1, 0.05, 0.02]);
    let epsilon = ctx.cfg.task.epsilon.unwrap_or(0.5);
    let t = ergodics::tightness_diagnostic(&model, &xi, &sim, &deltas, epsilon)?;
    let rows: Vec<Vec<String>> = t.deltas.iter().zip(&t.fractions).map(|(d, f)| vec![num(*d), num(*f)]).collect();
    let p = ctx.file("tightness.csv");
    write_rows(&p, &["delta".into(), "fraction_above_epsilon".into()], &rows)?;
    ctx.summary.push(format!("{} segments, epsilon = {}", t.segments, num(t.epsilon)));
    Ok(())
}

fn task_kurtz(ctx: &mut Ctx) -> LabResult<()> {
    let (model, sim) = ctx.model_and_sim()?;
    let xi = ctx.xi(&model, &sim)?;
    let epsilons = ctx.cfg.task.epsilons.clone().unwrap_or_else(|| vec![0.5, 0.2, 0.1, 0.05]);
    let tail_start = ctx.cfg.task.tail_start.unwrap_or(0.5 * sim.horizon);
    let k = ergodics::kurtz_diagnostic(&model, &xi, &sim, &epsilons, tail_start)?;
    let mut rows = Vec::new();
    for (i, t) in k.times.iter().enumerate() {
        for (j, e) in k.epsilons.iter().enumerate() {
            rows.push(vec![num(*t), num(*e), num(k.sup_theta[i][j]), num(k.mean_theta[i][j])]);
        }
    }
    let p = ctx.file("kurtz.csv");
    write_rows(&p, &["t", "epsilon", "sup_theta", "mean_theta"].map(String::from), &rows)?;
    let tail: Vec<Vec<String>> = k
        .epsilons
        .iter()
        .enumerate()
        .map(|(j, e)| vec![num(*e), num(k.sup_tail[j]), num(k.mean_tail[j]), num(k.integrand_mean * e)])
        .collect();
    let p = ctx.file("kurtz_tail.csv");
    write_rows(&p, &["epsilon", "sup_tail", "mean_tail", "linear_prediction"].map(String::from), &tail)?;
    ctx.summary.push(format!("stationary integrand mean = {}", num(k.integrand_mean)));
    Ok(())
}

fn task_halanay(ctx: &mut Ctx) -> LabResult<()> {
    let t = &ctx.cfg.task;
    let (a, b, tau) = (require(t.a, "task.a")?, require(t.b, "task.b")?, require(t.tau, "task.tau")?);
    let lambda = halanay_rate(a, b, tau)?;
    let p = ctx.file("halanay.csv");
    write_rows(&p, &["a", "b", "tau", "lambda"].map(String::from), &[vec![num(a), num(b), num(tau), num(lambda)]])?;
    ctx.summary.push(format!("lambda = {lambda:.5}"));
    Ok(())
}

fn task_razumikhin(ctx: &mut Ctx) -> LabResult<()> {
    let t = &ctx.cfg.task;
    let kappa = require(t.kappa, "task.kappa")?;
    let lambda = require(t.lambda, "task.lambda")?;
    let tau = require(t.tau, "task.tau")?;
    let q = require(t.q, "task.q")?;
    let gamma = razumikhin_gamma(kappa, lambda, tau, q)?;
    let exponent = if kappa > 0.0 && kappa < 0.5 {
        neutral_mixing_exponent(kappa, gamma, tau).ok()
    } else {
        None
    };
    let p = ctx.file("razumikhin.csv");
    write_rows(
        &p,
        &["kappa", "lambda", "tau", "q", "gamma", "mixing_exponent"].map(String::from),
        &[vec![num(kappa), num(lambda), num(tau), num(q), num(gamma), opt(exponent)]],
    )?;
    if let Some(times) = t.times.clone() {
        let delta = t.delta.unwrap_or(0.0);
        let xi_norm = t.xi_norm.unwrap_or(1.0);
        let curve = rates::razumikhin_bound_curve(delta, lambda, kappa, gamma, tau, xi_norm, &times)?;
        let rows: Vec<Vec<String>> = times.iter().zip(&curve).map(|(t, c)| vec![num(*t), num(*c)]).collect();
        let p = ctx.file("razumikhin_curve.csv");
        write_rows(&p, &["t".into(), "bound".into()], &rows)?;
    }
    ctx.summary.push(format!("gamma = {gamma:.6}"));
    Ok(())
}

fn sampler_radius(r: &Option<Radius>) -> LabResult<conditions::Radius> {
    match r {
        None => Ok(conditions::Radius::Unbounded),
        Some(Radius::Bounded(x)) => Ok(conditions::Radius::Bounded(*x)),
        Some(Radius::Named(s)) if s == "unbounded" => Ok(conditions::Radius::Unbounded),
        Some(Radius::Named(s)) => Err(config_error(format!("radius must be a number or \"unbounded\", got {s:?}"))),
    }
}

fn task_check(ctx: &mut Ctx) -> LabResult<()> {
    let model = ctx.cfg.build_model()?;
    let seed = ctx.cfg.seed().ok_or_else(|| config_error("check needs sim.seed for the segment sampler"))?;
    let t = &ctx.cfg.task;
    let trials = t.trials.unwrap_or(2000);
    let mut sampler = SegmentPairSampler::new(model.tau(), model.dim(), sampler_radius(&t.radius)?, seed)?;
    if let Some(p) = ctx.cfg.sim.as_ref().and_then(|s| s.segment_points) {
        sampler.points = p;
    }
    let p_exp = t.p_exp.unwrap_or(0.0);
    let set = match model.class() {
        ModelClass::Retarded => VerdictSet {
            verdicts: vec![
                conditions::check_h1(&model, &sampler, p_exp, trials)?,
                conditions::check_h2(&model, &sampler, p_exp, trials)?,
            ],
        },
        ModelClass::Neutral => conditions::check_neutral(&model, &sampler, trials)?,
        ModelClass::Jump => conditions::check_jump(&model, &sampler, trials, t.mark_samples.unwrap_or(64))?,
    };
    write_verdicts(ctx, &model, &set)?;
    if set.status() == Status::FailWithWitness {
        let failed: Vec<&str> = set
            .verdicts
            .iter()
            .filter(|v| v.status == Status::FailWithWitness)
            .map(|v| v.assumption.id())
            .collect();
        ctx.failed = Some(format!("assumption check failed: {}", failed.join(",")));
    }
    Ok(())
}

fn write_verdicts(ctx: &mut Ctx, model: &ModelSpec, set: &VerdictSet) -> LabResult<()> {
    let mut json_items = Vec::new();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for v in &set.verdicts {
        let replayed = conditions::replay(model, v)?;
        let files = write_witness(ctx, v)?;
        json_items.push(formats::verdict_json(v, replayed, &files));
        rows.push(vec![
            v.assumption.id().to_string(),
            formats::status_name(v.status).to_string(),
            opt(v.constants.alpha1),
            opt(v.constants.alpha2),
            opt(v.constants.alpha3),
            opt(v.constants.kappa),
            num(v.margin),
            v.trials.to_string(),
            v.local_only.to_string(),
            opt(replayed),
        ]);
        lines.push(formats::verdict_line(v));
    }
    let p = ctx.file("verdicts.csv");
    write_rows(
        &p,
        &["assumption", "status", "alpha1", "alpha2", "alpha3", "kappa", "margin", "trials", "local_only", "replayed_margin"]
            .map(String::from),
        &rows,
    )?;
    let overall = formats::status_name(set.status());
    ctx.write_json("verdicts.json", &json!({ "status": overall, "verdicts": json_items }))?;
    let mut text = lines.join("\n");
    text.push_str(&format!("\noverall {overall}\n"));
    ctx.write_text("verdicts.txt", &text)?;
    ctx.summary.extend(lines);
    ctx.summary.push(format!("overall {overall}"));
    Ok(())
}

fn write_witness(ctx: &mut Ctx, v: &Verdict) -> LabResult<Vec<String>> {
    let Some(Witness::Triple { phi, psi, .. }) = &v.witness else {
        return Ok(Vec::new());
    };
    let id = v.assumption.id();
    let mut names = Vec::new();
    for (tag, seg) in [("phi", phi), ("psi", psi)] {
        let name = format!("witness_{id}_{tag}.csv");
        let p = ctx.file(&name);
        formats::write_segment_csv(&p, seg)?;
        names.push(name);
    }
    Ok(names)
}

fn task_skorohod(ctx: &mut Ctx) -> LabResult<()> {
    let tau = ctx
        .cfg
        .task
        .tau
        .or_else(|| ctx.cfg.model.as_ref().map(|m| m.tau()))
        .unwrap_or(1.0);
    let points = ctx.cfg.segment_points();
    let xi = parse_segment(&ctx.cfg.initial.xi, tau, 1, points, ctx.base)?;
    let eta = parse_segment(&ctx.cfg.initial.eta, tau, 1, points, ctx.base)?;
    let mut search = SearchParams::default();
    let t = &ctx.cfg.task;
    if let Some(r) = t.resolution {
        search.resolution = r;
    }
    if let Some(r) = t.refine_rounds {
        search.refine_rounds = r;
    }
    if let Some(m) = t.max_jumps {
        search.max_jumps = m;
    }
    let d = skorohod_distance(&xi, &eta, search)?;
    let sup = xi.sup_distance(&eta)?;
    let p = ctx.file("skorohod.csv");
    write_rows(
        &p,
        &["upper", "lower", "time_distortion", "matched_sup", "sup_distance"].map(String::from),
        &[vec![num(d.upper), num(d.lower), num(d.time_distortion), num(d.matched_sup), num(sup)]],
    )?;
    let rows: Vec<Vec<String>> = d
        .time_change
        .breakpoints()
        .iter()
        .zip(d.time_change.images())
        .map(|(b, i)| vec![num(*b), num(*i)])
        .collect();
    let p = ctx.file("time_change.csv");
    write_rows(&p, &["breakpoint".into(), "image".into()], &rows)?;
    ctx.summary.push(format!("d_S in [{}, {}]; sup distance {}", num(d.lower), num(d.upper), num(sup)));
    Ok(())
}
