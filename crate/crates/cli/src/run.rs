//! Subcommand implementations. Every command writes its artifacts under the
//! output directory and a JSON summary with one entry per assertion.

use std::path::{Path, PathBuf};

use parabolic_delay::analysis::{
    coefficient_convergence_experiment, delay_convergence_experiment, delta_series, gronwall_check,
    ic_continuity_experiment, stability_constant, sup_distance, Assertion, ExperimentReport, GrowthConstants,
};
use parabolic_delay::delay_solver::{march_with, picard_with, PicardOptions, PicardSolution};
use parabolic_delay::discretization::discrete_norm;
use parabolic_delay::io::{write_file, write_json, write_report_csv, write_trajectory_csv, TrajectoryMetadata};
use parabolic_delay::propagator::positivity_expected;
use parabolic_delay::scenario::{random_history, random_scenario, Scenario};
use parabolic_delay::{Error, HistorySegment, Propagator, State, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, Method, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Smoothing,
    Gronwall,
    ConvergeIc,
    ConvergeCoeff,
    ConvergeDelay,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Smoothing => "smoothing",
            Command::Gronwall => "gronwall",
            Command::ConvergeIc => "converge-ic",
            Command::ConvergeCoeff => "converge-coeff",
            Command::ConvergeDelay => "converge-delay",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Invariant { tag: &'static str, message: String },
    Failure(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant { tag, message } => RunError::Invariant { tag, message },
            other => RunError::Failure(other.to_string()),
        }
    }
}

pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_file(&path, &bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut buf = Vec::new();
        write_json(value, &mut buf)?;
        self.put(name, buf)
    }
}

fn check(name: &str, value: f64, threshold: f64, pass: bool) -> Assertion {
    Assertion {
        name: name.into(),
        pass,
        value,
        threshold,
    }
}

fn summary(cmd: Command, cfg: &ScenarioConfig, assertions: &[Assertion], details: Value) -> (bool, Value) {
    let pass = assertions.iter().all(|a| a.pass);
    let value = json!({
        "command": cmd.name(),
        "scenario": cfg.id,
        "schema_version": cfg.schema_version,
        "seed": cfg.seed,
        "pass": pass,
        "assertions": assertions,
        "details": details,
    });
    (pass, value)
}

pub fn run(cmd: Command, cfg: &ScenarioConfig, out: &Path, threads: Option<usize>) -> Result<Outcome, RunError> {
    let scenario = cfg.scenario()?;
    let mut art = Artifacts {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let (assertions, details) = match cmd {
        Command::Solve => solve(cfg, &scenario, &mut art)?,
        Command::Verify => verify(cfg, &scenario)?,
        Command::Smoothing => smoothing(cfg, &scenario, &mut art)?,
        Command::Gronwall => gronwall(cfg, &scenario, &mut art)?,
        Command::ConvergeIc => {
            let p = cfg.exact_p()?;
            let prop = scenario.propagator()?;
            let growth = GrowthConstants::estimate(&prop, scenario.coefficients.sup_bound_k(), p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1);
            let raw = random_history(&mut rng, &scenario.grid, 40)?;
            let offsets = scenario.history.offsets();
            let states = offsets.iter().map(|&th| raw.eval(th)).collect::<Result<Vec<_>, _>>()?;
            let direction = HistorySegment::new(offsets, states)?;
            let report =
                ic_continuity_experiment(&scenario, &direction, &cfg.experiments.converge_ic.epsilons, &growth, p)?;
            experiment(&report, "converge_ic", &mut art)?
        }
        Command::ConvergeCoeff => {
            let spec = &cfg.experiments.converge_coeff;
            let t1 = spec.t1.unwrap_or(0.25 * cfg.horizon);
            let report = coefficient_convergence_experiment(&scenario, t1, &spec.ms, spec.amplitude, cfg.exact_p()?)
                .map_err(|e| match e {
                    Error::Precondition(m) => RunError::Config(format!("experiments.converge_coeff: {m}")),
                    other => other.into(),
                })?;
            experiment(&report, "converge_coeff", &mut art)?
        }
        Command::ConvergeDelay => {
            let report = delay_convergence_experiment(&scenario, &cfg.experiments.converge_delay.ms, cfg.exact_p()?)?;
            experiment(&report, "converge_delay", &mut art)?
        }
        Command::Sweep => sweep(cfg, &mut art, threads)?,
    };
    let (passed, value) = summary(cmd, cfg, &assertions, details);
    art.json(&format!("{}.summary.json", cmd.name()), &value)?;
    Ok(Outcome {
        passed,
        files: art.files,
    })
}

enum Solved {
    March(Trajectory),
    Picard(PicardSolution),
}

impl Solved {
    fn trajectory(&self) -> &Trajectory {
        match self {
            Solved::March(t) => t,
            Solved::Picard(s) => &s.trajectory,
        }
    }
}

fn solve_with(cfg: &ScenarioConfig, scenario: &Scenario, prop: &Propagator) -> Result<Solved, RunError> {
    let horizon = (0.0, scenario.horizon());
    Ok(match cfg.solver.method {
        Method::March => Solved::March(march_with(
            prop,
            &scenario.coefficients,
            &scenario.history,
            &scenario.delay,
            horizon,
        )?),
        Method::Picard => {
            let p = if cfg.exact_p().is_ok() { cfg.p } else { 2.0 };
            let opts = PicardOptions {
                tol: cfg.solver.picard_tol,
                p,
                growth: None,
            };
            Solved::Picard(picard_with(
                prop,
                &scenario.coefficients,
                &scenario.history,
                &scenario.delay,
                horizon,
                &opts,
            )?)
        }
    })
}

fn solve(cfg: &ScenarioConfig, scenario: &Scenario, art: &mut Artifacts) -> Result<(Vec<Assertion>, Value), RunError> {
    let prop = scenario.propagator()?;
    let solved = solve_with(cfg, scenario, &prop)?;
    let traj = solved.trajectory();
    let mut meta = TrajectoryMetadata::for_trajectory(traj, &format!("{:?}", cfg.solver.method).to_lowercase());
    meta.seed = Some(cfg.seed);
    if let Solved::Picard(sol) = &solved {
        meta.growth = Some(GrowthConstants::new(sol.m, sol.gamma, sol.k, scenario.horizon()));
        meta.theta0 = Some(sol.theta0);
        meta.picard_iterations = Some(sol.iterations.clone());
    }
    let mut csv = Vec::new();
    write_trajectory_csv(traj, &mut csv)?;
    art.put("trajectory.csv", csv)?;
    art.json("trajectory.meta.json", &meta)?;

    let mut sup: f64 = 0.0;
    for u in traj.states() {
        sup = sup.max(discrete_norm(u, &scenario.grid, cfg.p)?);
    }
    let seam = traj.seam_is_continuous();
    let assertions = vec![check("seam_continuity", f64::from(u8::from(seam)), 1.0, seam)];
    let details = json!({
        "nodes": traj.times().len(),
        "end": traj.end(),
        "p": norm_label(cfg.p),
        "sup_norm": sup,
    });
    Ok((assertions, details))
}

fn norm_label(p: f64) -> Value {
    if p.is_infinite() {
        json!("inf")
    } else {
        json!(p)
    }
}

fn verify(cfg: &ScenarioConfig, scenario: &Scenario) -> Result<(Vec<Assertion>, Value), RunError> {
    let prop = scenario.propagator()?;
    let n = scenario.grid.node_count();
    let total = prop.steps_total();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random_state = |rng: &mut ChaCha8Rng| State((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());

    let mut cocycle: f64 = 0.0;
    let mut duality: f64 = 0.0;
    for _ in 0..cfg.experiments.verify.cases {
        let mut k = [
            rng.gen_range(0..=total),
            rng.gen_range(0..=total),
            rng.gen_range(0..=total),
        ];
        k.sort_unstable();
        let u = random_state(&mut rng);
        let v = random_state(&mut rng);
        let [s, t1, t2] = k.map(|j| prop.time_of(j));
        cocycle = cocycle.max(prop.verify_cocycle(s, t1, t2, &u)?);
        duality = duality.max(prop.duality_residual(s, t2, &u, &v)?);
    }
    let mut assertions = vec![
        check("cocycle_exact", cocycle, 0.0, cocycle == 0.0),
        check("duality", duality, 1e-10, duality <= 1e-10),
    ];
    let ellipticity = scenario
        .coefficients
        .ellipticity_constant(&scenario.coefficients.verification_samples(9, 9))?;
    assertions.push(check("ellipticity_positive", ellipticity, 0.0, ellipticity > 0.0));

    let mut kernel_min_ratio = Value::Null;
    if positivity_expected(&prop) {
        let steps = cfg.experiments.verify.kernel_steps.clamp(1, total.max(1));
        let kernel = prop.propagate_kernel(0.0, prop.time_of(steps))?;
        let ratio = kernel.min_entry() / kernel.max_entry().max(f64::MIN_POSITIVE);
        assertions.push(check("kernel_nonnegative", ratio, -1e-12, ratio >= -1e-12));
        kernel_min_ratio = json!(ratio);
    }
    let details = json!({
        "cases": cfg.experiments.verify.cases,
        "cocycle_residual": cocycle,
        "duality_residual": duality,
        "ellipticity": ellipticity,
        "kernel_min_ratio": kernel_min_ratio,
    });
    Ok((assertions, details))
}

fn smoothing(
    cfg: &ScenarioConfig,
    scenario: &Scenario,
    art: &mut Artifacts,
) -> Result<(Vec<Assertion>, Value), RunError> {
    let prop = scenario.propagator()?;
    let fit = prop
        .smoothing_exponent_fit(&cfg.experiments.smoothing.times)
        .map_err(|e| match e {
            Error::Misaligned { t, dt } => RunError::Config(format!(
                "experiments.smoothing.times: {t} is not a multiple of solver.dt = {dt}"
            )),
            other => other.into(),
        })?;
    let dim = scenario.grid.dim() as f64;
    let target = -0.5 * dim;
    let tolerance = if dim == 1.0 { 0.075 } else { 0.15 };
    let deviation = (fit.slope - target).abs();
    let mut csv = String::from("t,norm\n");
    for (t, v) in fit.times.iter().zip(&fit.norms) {
        csv.push_str(&format!("{t},{v}\n"));
    }
    art.put("smoothing.csv", csv.into_bytes())?;
    let assertions = vec![check(
        "slope_within_tolerance",
        deviation,
        tolerance,
        deviation <= tolerance,
    )];
    Ok((assertions, json!({ "fit": fit, "target": target })))
}

fn gronwall(
    cfg: &ScenarioConfig,
    scenario: &Scenario,
    art: &mut Artifacts,
) -> Result<(Vec<Assertion>, Value), RunError> {
    let p = cfg.exact_p()?;
    let prop = scenario.propagator()?;
    let growth = GrowthConstants::estimate(&prop, scenario.coefficients.sup_bound_k(), p)?;
    let solved = solve_with(cfg, scenario, &prop)?;
    let traj = solved.trajectory();
    let result = gronwall_check(traj, growth.m1, growth.m2, p)?;
    let deltas = delta_series(traj, p)?;
    let mut csv = String::from("t,delta,bound,ratio\n");
    let s = traj.start();
    for (t, d) in traj.times().iter().zip(&deltas) {
        let bound = growth.m1 * deltas[0] * (growth.m2 * (t - s)).exp();
        let ratio = if bound > 0.0 { d / bound } else { 0.0 };
        csv.push_str(&format!("{t},{d},{bound},{ratio}\n"));
    }
    art.put("gronwall.csv", csv.into_bytes())?;
    let stability = stability_constant(std::slice::from_ref(traj), p)?;
    let assertions = vec![
        check("gronwall_ratio", result.max_ratio, 1.0, result.passed),
        check("stability_constant", stability, growth.m_bar, stability <= growth.m_bar),
    ];
    Ok((
        assertions,
        json!({ "growth": growth, "max_ratio": result.max_ratio, "stability": stability }),
    ))
}

fn experiment(report: &ExperimentReport, name: &str, art: &mut Artifacts) -> Result<(Vec<Assertion>, Value), RunError> {
    let mut csv = Vec::new();
    write_report_csv(report, &mut csv)?;
    art.put(&format!("{name}.csv"), csv)?;
    art.json(&format!("{name}.json"), report)?;
    let mut assertions = report.assertions.clone();
    let rows_ok = report.rows.iter().all(|r| r.pass);
    assertions.push(check("rows_pass", f64::from(u8::from(rows_ok)), 1.0, rows_ok));
    Ok((assertions, json!({ "rows": report.rows.len() })))
}

#[derive(Serialize)]
struct SweepItem {
    index: usize,
    id: String,
    max_iterations: usize,
    agreement: f64,
    envelope: f64,
    gronwall_ratio: f64,
    pass: bool,
}

fn sweep_item(cfg: &ScenarioConfig, index: usize) -> Result<SweepItem, RunError> {
    let spec = &cfg.experiments.sweep;
    let scenario = random_scenario(cfg.seed, index as u64, &spec.random_options(cfg.horizon))?;
    let prop = scenario.propagator()?;
    let march = scenario.solve_march_with(&prop)?;
    let picard = picard_with(
        &prop,
        &scenario.coefficients,
        &scenario.history,
        &scenario.delay,
        (0.0, scenario.horizon()),
        &PicardOptions::default(),
    )?;
    let grid = &scenario.grid;
    let agreement = sup_distance(&picard.trajectory, &march, 0.0, scenario.horizon(), 2.0)?;
    let u0 = scenario
        .history
        .sup_norm(|u| discrete_norm(u, grid, 2.0).unwrap_or(f64::INFINITY));
    let k = scenario.coefficients.sup_bound_k();
    let envelope = 5.0 * scenario.options.dt * (1.0 + k) * u0;
    let growth = GrowthConstants::estimate(&prop, k, 2.0)?;
    let ratio = gronwall_check(&march, growth.m1, growth.m2, 2.0)?.max_ratio;
    let max_iterations = picard.iterations.iter().copied().max().unwrap_or(0);
    Ok(SweepItem {
        index,
        id: scenario.id,
        max_iterations,
        agreement,
        envelope,
        gronwall_ratio: ratio,
        pass: agreement <= envelope && ratio <= 1.0 && max_iterations <= 8,
    })
}

fn sweep(
    cfg: &ScenarioConfig,
    art: &mut Artifacts,
    threads: Option<usize>,
) -> Result<(Vec<Assertion>, Value), RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Failure(e.to_string()))?;
    let count = cfg.experiments.sweep.count;
    let dir = art.dir.join("sweep");
    let items: Vec<SweepItem> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let item = sweep_item(cfg, i)?;
                let mut buf = Vec::new();
                write_json(&item, &mut buf)?;
                write_file(&dir.join(format!("scenario_{i:03}.json")), &buf)?;
                Ok(item)
            })
            .collect::<Result<Vec<_>, RunError>>()
    })?;
    art.files
        .extend((0..count).map(|i| dir.join(format!("scenario_{i:03}.json"))));
    let mut csv = String::from("index,id,max_iterations,agreement,envelope,gronwall_ratio,pass\n");
    for it in &items {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            it.index, it.id, it.max_iterations, it.agreement, it.envelope, it.gronwall_ratio, it.pass
        ));
    }
    art.put("sweep.csv", csv.into_bytes())?;
    let worst_ratio = items.iter().map(|i| i.gronwall_ratio).fold(0.0, f64::max);
    let worst_iter = items.iter().map(|i| i.max_iterations).max().unwrap_or(0);
    let all_agree = items.iter().all(|i| i.agreement <= i.envelope);
    let assertions = vec![
        check("gronwall_ratio", worst_ratio, 1.0, worst_ratio <= 1.0),
        check("picard_iterations", worst_iter as f64, 8.0, worst_iter <= 8),
        check("picard_march_envelope", f64::from(u8::from(all_agree)), 1.0, all_agree),
    ];
    Ok((assertions, json!({ "scenarios": items })))
}
