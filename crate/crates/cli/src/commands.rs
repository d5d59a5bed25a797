use std::path::PathBuf;

use nehari_core::model::CheckStatus;
use nehari_core::multiplicity::find_distinct;
use nehari_core::nehari::{ground_state, project_nehari, Fiber, SolveStatus};
use nehari_core::sobolev::{minimize_quotient_multistart, sobolev_constant, sobolev_quotient, QuotientOptions};
use nehari_core::space::lq_norm;
use nehari_core::verify::run_suite;
use nehari_core::{Boundary, Domain, GridFunction, Nonlinearity, Potential, Problem, SolveResult, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Loaded, ProblemSpec, RunConfig, SweepAxis};
use crate::output::{csv, fiber_script, float, function_script, sweep_script, trace_script, write_atomic, write_json};
use crate::{core_error, CliError, Outcome, RunArgs};

/// A parsed run: configuration with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct Context {
    pub loaded: Loaded,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn new(args: &RunArgs) -> Result<Self, CliError> {
        let mut loaded = Loaded::read(&args.config)?;
        if args.override_hypotheses {
            loaded.config.solver.override_hypotheses = true;
        }
        let seed = args.seed.unwrap_or(loaded.config.seed);
        loaded.config.seed = seed;
        let out = args
            .out
            .clone()
            .or_else(|| loaded.config.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { loaded, out, seed })
    }

    fn config(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn problem(&self) -> Result<Problem, CliError> {
        self.loaded.problem(&self.config().problem)
    }

    fn solver(&self, pr: &Problem) -> Result<SolverConfig, CliError> {
        self.loaded.solver(&self.config().solver, pr.domain(), self.seed)
    }
}

fn ok(message: String) -> Result<Outcome, CliError> {
    Ok(Outcome { exit_code: 0, message })
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    seed: u64,
    p: f64,
    q: f64,
    dim: usize,
    side: usize,
    boundary: Boundary,
    energy: f64,
    residual_norm: f64,
    residual_tol: f64,
    fiber_scale: f64,
    iterations: usize,
    converged: bool,
    status: SolveStatus,
    /// `‖u*‖`
    e_norm: f64,
    /// `max |u*|`
    sup_norm: f64,
}

fn summarize(pr: &Problem, seed: u64, r: &SolveResult) -> Result<SolveSummary, CliError> {
    let d = pr.domain();
    Ok(SolveSummary {
        seed,
        p: pr.p(),
        q: pr.nonlinearity().exponent(),
        dim: d.dim(),
        side: d.side(),
        boundary: d.boundary(),
        energy: r.energy,
        residual_norm: r.residual_norm,
        residual_tol: r.residual_tol,
        fiber_scale: r.fiber_scale,
        iterations: r.iterations,
        converged: r.converged,
        status: r.status,
        e_norm: pr.e_norm(&r.u).map_err(core_error)?,
        sup_norm: lq_norm(&r.u, f64::INFINITY).map_err(core_error)?,
    })
}

fn trace_csv(r: &SolveResult) -> String {
    csv(
        &["iteration", "energy", "residual", "fiber_scale", "step"],
        r.trace.iter().map(|row| {
            vec![
                row.iteration.to_string(),
                float(row.energy),
                float(row.residual),
                float(row.fiber_scale),
                float(row.step),
            ]
        }),
    )
}

fn convergence(r: &SolveResult, what: &str) -> Outcome {
    if r.converged {
        Outcome {
            exit_code: 0,
            message: format!(
                "{what}: converged in {} iterations, energy {}",
                r.iterations,
                float(r.energy)
            ),
        }
    } else {
        Outcome {
            exit_code: 2,
            message: format!(
                "{what}: no convergence ({:?} after {} iterations, residual {:e} > {:e})",
                r.status, r.iterations, r.residual_norm, r.residual_tol
            ),
        }
    }
}

pub fn solve(ctx: &Context) -> Result<Outcome, CliError> {
    let pr = ctx.problem()?;
    let cfg = ctx.solver(&pr)?;
    let r = ground_state(&pr, &cfg).map_err(core_error)?;
    let d = pr.domain();
    write_json(&ctx.out, "result.json", &summarize(&pr, ctx.seed, &r)?)?;
    write_atomic(&ctx.out, "u.csv", r.u.to_csv(d).as_bytes())?;
    write_atomic(&ctx.out, "trace.csv", trace_csv(&r).as_bytes())?;
    write_atomic(&ctx.out, "u.gp", function_script("u.csv", d.dim()).as_bytes())?;
    write_atomic(&ctx.out, "trace.gp", trace_script().as_bytes())?;
    Ok(convergence(&r, "solve"))
}

#[derive(Debug, Serialize)]
struct NehariRoute {
    s: f64,
    /// Quotient evaluated directly at the computed ground state.
    quotient: f64,
    iterations: usize,
    converged: bool,
    residual_norm: f64,
}

#[derive(Debug, Serialize)]
struct DirectRoute {
    s: f64,
    starts: usize,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
}

#[derive(Debug, Serialize)]
struct SobolevReport {
    seed: u64,
    p: f64,
    q: f64,
    dim: usize,
    side: usize,
    boundary: Boundary,
    in_theory_range: bool,
    nehari: NehariRoute,
    direct: DirectRoute,
    /// `|S_nehari − S_direct| / S_nehari`
    relative_gap: f64,
    /// Quotient of a unit mass at the centre, an upper bound for both.
    delta_quotient: f64,
}

pub fn sobolev(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config();
    let pr = ctx.problem()?;
    let solver = ctx.solver(&pr)?;
    let d = pr.domain();
    let (p, q) = (pr.p(), cfg.sobolev.q.unwrap_or_else(|| pr.nonlinearity().exponent()));
    if cfg.sobolev.starts == 0 {
        return Err(ctx.loaded.error_at("starts", "need at least one start"));
    }
    let opts = QuotientOptions {
        max_iterations: cfg.sobolev.max_iterations,
        gradient_tol: cfg.sobolev.gradient_tol,
        ..QuotientOptions::default()
    };
    let (est, direct) = rayon::join(
        || sobolev_constant(p, q, d, &solver),
        || minimize_quotient_multistart(d, p, q, cfg.sobolev.starts, ctx.seed, &opts),
    );
    let (est, direct) = (est.map_err(core_error)?, direct.map_err(core_error)?);
    let mut delta = GridFunction::zeros(d.vertex_count());
    delta.values_mut()[d.index(&vec![d.side() / 2; d.dim()])] = 1.0;
    let report = SobolevReport {
        seed: ctx.seed,
        p,
        q,
        dim: d.dim(),
        side: d.side(),
        boundary: d.boundary(),
        in_theory_range: est.in_theory_range,
        nehari: NehariRoute {
            s: est.s,
            quotient: est.quotient,
            iterations: est.solve.iterations,
            converged: est.solve.converged,
            residual_norm: est.solve.residual_norm,
        },
        direct: DirectRoute {
            s: direct.quotient,
            starts: cfg.sobolev.starts,
            iterations: direct.iterations,
            converged: direct.converged,
            gradient_norm: direct.gradient_norm,
        },
        relative_gap: (est.s - direct.quotient).abs() / est.s,
        delta_quotient: sobolev_quotient(d, &delta, p, q).map_err(core_error)?,
    };
    write_json(&ctx.out, "sobolev.json", &report)?;
    write_atomic(&ctx.out, "extremal.csv", est.extremal.to_csv(d).as_bytes())?;
    write_atomic(
        &ctx.out,
        "extremal.gp",
        function_script("extremal.csv", d.dim()).as_bytes(),
    )?;
    let mut outcome = convergence(&est.solve, "sobolev (ground-state route)");
    if outcome.exit_code == 0 {
        outcome.message = format!(
            "S = {} (ground state), {} (direct), relative gap {:e}",
            float(report.nehari.s),
            float(report.direct.s),
            report.relative_gap
        );
    }
    Ok(outcome)
}

#[derive(Debug, Serialize)]
struct FiberReport {
    /// Maximiser of the profile; absent when the projection fails.
    t_u: Option<f64>,
    psi_at_t_u: Option<f64>,
    projection_error: Option<String>,
    /// Sign changes of the slope column.
    slope_sign_changes: usize,
}

pub fn fiber(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config();
    let spec = cfg
        .fiber
        .as_ref()
        .ok_or_else(|| ctx.loaded.error_at("fiber", "missing \"fiber\" section"))?;
    let pr = ctx.problem()?;
    let solver = ctx.solver(&pr)?;
    let initial = match &spec.u {
        Some(u) => ctx.loaded.initial_guess(u, pr.domain())?,
        None => solver.initial.clone(),
    };
    let u = initial.realize(&pr, ctx.seed).map_err(core_error)?;
    let fib = Fiber::new(&pr, &u).map_err(core_error)?;
    let mut ts = spec.t.points().map_err(|e| ctx.loaded.error_at("t", e))?;
    let (t_u, projection_error) = match project_nehari(&pr, &u, solver.fiber_tol) {
        Ok((t, _)) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let is_t_u = |t: f64| t_u.is_some_and(|tu| (t - tu).abs() <= 1e-12 * tu);
    if let Some(tu) = t_u {
        if !ts.iter().any(|&t| is_t_u(t)) {
            let pos = ts.iter().position(|&t| t > tu).unwrap_or(ts.len());
            ts.insert(pos, tu);
        }
    }
    let rows: Vec<(f64, f64, f64)> = ts.iter().map(|&t| (t, fib.value(t), fib.slope(t))).collect();
    let mut changes = 0;
    let mut last = 0.0f64;
    for &(_, _, s) in &rows {
        if s != 0.0 {
            if last != 0.0 && s.signum() != last {
                changes += 1;
            }
            last = s.signum();
        }
    }
    let text = csv(
        &["t", "psi", "slope", "t_u"],
        rows.iter()
            .map(|&(t, psi, s)| vec![float(t), float(psi), float(s), if is_t_u(t) { "1" } else { "0" }.into()]),
    );
    let report = FiberReport {
        t_u,
        psi_at_t_u: t_u.map(|t| fib.value(t)),
        projection_error,
        slope_sign_changes: changes,
    };
    write_atomic(&ctx.out, "fiber.csv", text.as_bytes())?;
    write_json(&ctx.out, "fiber.json", &report)?;
    write_atomic(&ctx.out, "fiber.gp", fiber_script().as_bytes())?;
    ok(match t_u {
        Some(t) => format!("fiber: {} points, t_u = {}", rows.len(), float(t)),
        None => format!(
            "fiber: {} points, no maximiser ({})",
            rows.len(),
            report.projection_error.unwrap_or_default()
        ),
    })
}

pub fn distinct(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config();
    let spec = cfg
        .distinct
        .as_ref()
        .ok_or_else(|| ctx.loaded.error_at("distinct", "missing \"distinct\" section"))?;
    let pr = ctx.problem()?;
    let solver = ctx.solver(&pr)?;
    let set = find_distinct(&pr, &solver, &spec.options()).map_err(core_error)?;
    write_json(&ctx.out, "orbits.json", &set)?;
    for (k, orbit) in set.representatives.iter().enumerate() {
        write_atomic(
            &ctx.out,
            &format!("orbit_{k}.csv"),
            orbit.u.to_csv(pr.domain()).as_bytes(),
        )?;
    }
    if set.is_empty() {
        return Ok(Outcome {
            exit_code: 2,
            message: format!("distinct: no start converged; {}", set.diagnostics.join("; ")),
        });
    }
    ok(format!(
        "distinct: {} orbit(s) from {} start(s)",
        set.len(),
        spec.starts
    ))
}

pub fn verify(ctx: &Context) -> Result<Outcome, CliError> {
    let pr = ctx.problem()?;
    let solver = ctx.solver(&pr)?;
    let report = run_suite(&pr, &solver, ctx.seed, &ctx.config().verify);
    let table = report.to_table();
    write_json(&ctx.out, "verify.json", &report)?;
    write_atomic(&ctx.out, "verify.txt", table.as_bytes())?;
    let failed = report.failures().len();
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    let skipped = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Skipped)
        .count();
    ok(format!(
        "verify: {} checks passed, {skipped} skipped\n{table}",
        report.checks.len() - skipped
    ))
}

fn sweep_problem(base: &ProblemSpec, axis: SweepAxis, value: f64) -> Result<Problem, String> {
    let mut spec = base.clone();
    match axis {
        SweepAxis::Side => spec.domain.side = value as usize,
        SweepAxis::Q => {
            let Nonlinearity::Power { weight, .. } = spec.nonlinearity;
            spec.nonlinearity = Nonlinearity::Power { q: value, weight };
        }
        SweepAxis::Potential => match &mut spec.potential {
            Potential::Constant { value: v } => *v = value,
            Potential::Decaying { limit, .. } => *limit = value,
            Potential::Periodic { .. } => return Err("periodic potential has no sweep parameter".into()),
        },
    }
    let d = &spec.domain;
    let domain = Domain::new(d.dim, d.side, d.boundary, d.generators.clone()).map_err(|e| e.to_string())?;
    Problem::new(domain, spec.potential, spec.nonlinearity, spec.p).map_err(|e| e.to_string())
}

struct SweepRow {
    parameter: f64,
    b: Option<f64>,
    s: Option<f64>,
    iterations: Option<usize>,
    status: String,
    error: String,
}

impl SweepRow {
    fn fields(&self) -> Vec<String> {
        vec![
            float(self.parameter),
            self.b.map(float).unwrap_or_default(),
            self.s.map(float).unwrap_or_default(),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            self.status.clone(),
            self.error.clone(),
        ]
    }
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::IterationCap => "iteration_cap",
        SolveStatus::Stalled => "stalled",
    }
}

/// One row per grid point, run concurrently with seeds `seed + index`.
/// Failed runs are recorded in their row; the exit code is 2 when any row did
/// not converge.
pub fn sweep(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config();
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| ctx.loaded.error_at("sweep", "missing \"sweep\" section"))?;
    if spec.values.is_empty() {
        return Err(ctx.loaded.error_at("values", "sweep axis is empty"));
    }
    if spec.axis == SweepAxis::Side && spec.values.iter().any(|v| !(v.fract() == 0.0 && *v >= 1.0)) {
        return Err(ctx.loaded.error_at("values", "side values must be positive integers"));
    }
    if spec.axis == SweepAxis::Potential && matches!(cfg.problem.potential, Potential::Periodic { .. }) {
        return Err(ctx.loaded.error_at("axis", "cannot sweep a periodic potential"));
    }
    let base = ctx.problem()?;
    ctx.solver(&base)?;

    let rows: Vec<SweepRow> = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let seed = ctx.seed.wrapping_add(i as u64);
            let mut row = SweepRow {
                parameter: value,
                b: None,
                s: None,
                iterations: None,
                status: "error".into(),
                error: String::new(),
            };
            let pr = match sweep_problem(&cfg.problem, spec.axis, value) {
                Ok(pr) => pr,
                Err(e) => {
                    row.error = e;
                    return row;
                }
            };
            let solver = match ctx.loaded.solver(&cfg.solver, pr.domain(), seed) {
                Ok(s) => s,
                Err(e) => {
                    row.error = e.to_string();
                    return row;
                }
            };
            match ground_state(&pr, &solver) {
                Ok(r) => {
                    row.b = Some(r.energy);
                    row.iterations = Some(r.iterations);
                    row.status = status_name(r.status).into();
                }
                Err(e) => row.error = e.to_string(),
            }
            if spec.sobolev {
                let q = cfg.sobolev.q.unwrap_or_else(|| pr.nonlinearity().exponent());
                match sobolev_constant(pr.p(), q, pr.domain(), &solver) {
                    Ok(est) if est.solve.converged => row.s = Some(est.s),
                    Ok(est) => {
                        row.s = Some(est.s);
                        if row.error.is_empty() {
                            row.error = format!("Sobolev solve: {:?}", est.solve.status);
                        }
                    }
                    Err(e) if row.error.is_empty() => row.error = format!("Sobolev solve: {e}"),
                    Err(_) => {}
                }
            }
            row
        })
        .collect();

    let text = csv(
        &["parameter", "b", "S", "iterations", "status", "error"],
        rows.iter().map(SweepRow::fields),
    );
    write_atomic(&ctx.out, "sweep.csv", text.as_bytes())?;
    let axis = match spec.axis {
        SweepAxis::Side => "side",
        SweepAxis::Q => "q",
        SweepAxis::Potential => "potential",
    };
    write_atomic(&ctx.out, "sweep.gp", sweep_script(axis).as_bytes())?;
    let failed = rows.iter().filter(|r| r.status != "converged").count();
    Ok(Outcome {
        exit_code: if failed > 0 { 2 } else { 0 },
        message: format!("sweep: {} rows, {failed} without convergence", rows.len()),
    })
}
