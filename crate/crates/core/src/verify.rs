//! Executable property suite.
//!
//! Each check is a falsification attempt: a batch of seeded random samples is
//! run against an inequality or identity, and the worst sample is kept as the
//! witness. Every sampled check draws from its own ChaCha stream (stream index
//! = position in the suite), so checks can run concurrently and still
//! reproduce bit-for-bit.
//!
//! Distributions: grid values uniform on `[−10, 10]`; ray scales `t`
//! log-uniform on `[1e−3, 1e3]`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, energy_difference, pairing, residual, Problem};
use crate::error::Result;
use crate::model::{signed_pow, CheckStatus};
use crate::nehari::{check_hypotheses, ground_state, HypothesisReport, SolveResult, SolverConfig};
use crate::space::{lq_norm, GridFunction};

pub const LQ_MONOTONICITY: &str = "lq_monotonicity";
pub const P_INEQUALITY: &str = "p_inequality";
pub const SUPERLINEARITY: &str = "superlinearity";
pub const FIBERING_INEQUALITY: &str = "fibering_inequality";
pub const GRADIENT_FINITE_DIFFERENCE: &str = "gradient_finite_difference";
pub const PAIRING_RESIDUAL: &str = "pairing_residual";
pub const GROUND_STATE_SIGN: &str = "ground_state_sign";
pub const NEHARI_ENERGY_IDENTITY: &str = "nehari_energy_identity";
pub const ENERGY_LOWER_BOUND: &str = "energy_lower_bound";

/// Suite order.
pub const CHECK_NAMES: [&str; 9] = [
    LQ_MONOTONICITY,
    P_INEQUALITY,
    SUPERLINEARITY,
    FIBERING_INEQUALITY,
    GRADIENT_FINITE_DIFFERENCE,
    PAIRING_RESIDUAL,
    GROUND_STATE_SIGN,
    NEHARI_ENERGY_IDENTITY,
    ENERGY_LOWER_BOUND,
];

pub const LQ_SAMPLES: usize = 200;
pub const P_INEQUALITY_SAMPLES: usize = 10_000;
pub const SUPERLINEARITY_SAMPLES: usize = 10_000;
pub const FIBERING_SAMPLES: usize = 1_000;
pub const GRADIENT_SAMPLES: usize = 100;
pub const PAIRING_RESIDUAL_SAMPLES: usize = 100;

const VALUE_RANGE: f64 = 10.0;
const T_RANGE: (f64, f64) = (1e-3, 1e3);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative excess allowed in `‖u‖_r ≤ ‖u‖_q`.
    pub lq: f64,
    /// Relative excess allowed in the `p`-inequality.
    pub p_inequality: f64,
    /// Relative deficit allowed in `f(x,s)s ≥ pF(x,s)`.
    pub superlinearity: f64,
    /// Most negative admissible fibering slack, relative to the size of the
    /// terms.
    pub fibering_slack: f64,
    /// Normalised slack below which a fibering sample counts as an equality.
    pub fibering_equality: f64,
    /// `|ln t|` below which `t` counts as 1.
    pub fibering_unit: f64,
    /// Relative error of the derivative pairing against central differences.
    pub gradient: f64,
    /// Relative mismatch between the pairing and `Σ residual · v`.
    pub pairing_residual: f64,
    /// Relative error of the Nehari energy identity.
    pub energy_identity: f64,
    /// Absolute slack in `‖u*‖ ≥ (pΦ*)^{1/p}`.
    pub lower_bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lq: 1e-12,
            p_inequality: 1e-12,
            superlinearity: 1e-12,
            fibering_slack: 1e-12,
            fibering_equality: 1e-12,
            fibering_unit: 1e-4,
            gradient: 1e-6,
            pairing_residual: 1e-12,
            energy_identity: 1e-10,
            lower_bound: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub statement: &'static str,
    pub status: CheckStatus,
    pub samples: usize,
    pub tolerance: f64,
    /// Seed and stream of the generator that drew the samples.
    pub seed: u64,
    pub stream: u64,
    /// Worst value of the checked quantity (its meaning is in `detail`).
    pub worst: Option<f64>,
    /// The sample realising `worst`, when the check failed.
    pub witness: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub p: f64,
    pub exponent: f64,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckOutcome>,
    /// Reported for information; these do not decide the outcome.
    pub hypotheses: Option<HypothesisReport>,
    pub hypotheses_error: Option<String>,
    pub ground_state: Option<SolveResult>,
}

impl VerifyReport {
    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect()
    }

    pub fn skipped(&self) -> Vec<&CheckOutcome> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Skipped)
            .collect()
    }

    /// No non-skipped check failed.
    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:<8} {:>8} {:>12} {:>14}  detail",
            "check", "status", "samples", "tolerance", "worst"
        );
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skipped",
            };
            let worst = c.worst.map_or_else(|| "-".to_string(), |w| format!("{w:.6e}"));
            let _ = writeln!(
                out,
                "{:<28} {:<8} {:>8} {:>12.1e} {:>14}  {}",
                c.name, status, c.samples, c.tolerance, worst, c.detail
            );
            if let Some(w) = &c.witness {
                let _ = writeln!(out, "{:<28} witness: {w}", "");
            }
        }
        if let Some(h) = &self.hypotheses {
            for c in &h.growth.checks {
                let _ = writeln!(out, "hypothesis {:<17} {:?}  {}", c.name, c.status, c.detail);
            }
            if let Some(np) = &h.negative_part {
                let _ = writeln!(
                    out,
                    "hypothesis negative_part    {}  ||V_-||_{} = {:e} vs S^p = {:e}",
                    if np.pass { "Pass" } else { "Fail" },
                    np.exponent,
                    np.norm,
                    np.threshold
                );
            }
        }
        if let Some(e) = &self.hypotheses_error {
            let _ = writeln!(out, "hypotheses not evaluated: {e}");
        }
        let _ = writeln!(
            out,
            "{} checks, {} failed, {} skipped",
            self.checks.len(),
            self.failures().len(),
            self.skipped().len()
        );
        out
    }
}

struct Sampler {
    name: &'static str,
    statement: &'static str,
    tolerance: f64,
    seed: u64,
    stream: u64,
}

impl Sampler {
    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    fn outcome(
        &self,
        status: CheckStatus,
        samples: usize,
        worst: Option<f64>,
        witness: Option<String>,
        detail: String,
    ) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            statement: self.statement,
            status,
            samples,
            tolerance: self.tolerance,
            seed: self.seed,
            stream: self.stream,
            worst,
            witness,
            detail,
        }
    }
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    GridFunction::new((0..n).map(|_| rng.gen_range(-VALUE_RANGE..=VALUE_RANGE)).collect())
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Keeps the sample with the largest `score` (the most violating one).
struct Worst {
    score: f64,
    witness: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Self {
            score: f64::NEG_INFINITY,
            witness: None,
        }
    }

    fn offer(&mut self, score: f64, witness: impl FnOnce() -> String) {
        if score > self.score || score.is_nan() && !self.score.is_nan() {
            self.score = score;
            self.witness = Some(witness());
        }
    }
}

/// `‖u‖_r ≤ ‖u‖_q` for `r ≥ q ≥ 1`. Exponents: `q` uniform on `[1, 8]`, `r`
/// uniform on `[q, 16]`, every fourth sample `r = ∞`.
pub fn check_lq_monotonicity(pr: &Problem, seed: u64, tol: f64) -> CheckOutcome {
    let s = Sampler {
        name: LQ_MONOTONICITY,
        statement: "||u||_r <= ||u||_q for r >= q >= 1",
        tolerance: tol,
        seed,
        stream: 0,
    };
    let mut rng = s.rng();
    let n = pr.domain().vertex_count();
    let mut worst = Worst::new();
    for i in 0..LQ_SAMPLES {
        let u = random_values(&mut rng, n);
        let q = rng.gen_range(1.0..=8.0);
        let r = if i % 4 == 3 {
            f64::INFINITY
        } else {
            rng.gen_range(q..=16.0)
        };
        let (nr, nq) = match (lq_norm(&u, r), lq_norm(&u, q)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => (f64::NAN, f64::NAN),
        };
        let excess = (nr - nq) / nq;
        worst.offer(excess, || {
            format!("sample {i}: q = {q}, r = {r}, ||u||_r = {nr:e}, ||u||_q = {nq:e}")
        });
    }
    let ok = worst.score <= tol;
    s.outcome(
        status(ok),
        LQ_SAMPLES,
        Some(worst.score),
        (!ok).then_some(worst.witness).flatten(),
        "worst relative excess (||u||_r - ||u||_q)/||u||_q".into(),
    )
}

/// `|a−b|^p ≤ 2^{p−1}(φ(a)−φ(b))(a−b)` with `φ(s) = |s|^{p−2}s`; needs `p ≥ 2`.
pub fn check_p_inequality(p: f64, seed: u64, tol: f64) -> CheckOutcome {
    let s = Sampler {
        name: P_INEQUALITY,
        statement: "|a-b|^p <= 2^(p-1) (|a|^(p-2)a - |b|^(p-2)b)(a-b) for p >= 2",
        tolerance: tol,
        seed,
        stream: 1,
    };
    if p < 2.0 {
        return s.outcome(CheckStatus::Skipped, 0, None, None, "skipped: requires p >= 2".into());
    }
    let mut rng = s.rng();
    let mut worst = Worst::new();
    let c = 2f64.powf(p - 1.0);
    for i in 0..P_INEQUALITY_SAMPLES {
        let a = rng.gen_range(-VALUE_RANGE..=VALUE_RANGE);
        let b = rng.gen_range(-VALUE_RANGE..=VALUE_RANGE);
        let lhs = (a - b).abs().powf(p);
        let rhs = c * (signed_pow(a, p - 1.0) - signed_pow(b, p - 1.0)) * (a - b);
        let excess = if lhs == 0.0 && rhs == 0.0 {
            0.0
        } else {
            (lhs - rhs) / rhs.abs().max(lhs)
        };
        worst.offer(excess, || {
            format!("sample {i}: a = {a:?}, b = {b:?}, lhs = {lhs:e}, rhs = {rhs:e}")
        });
    }
    let ok = worst.score <= tol;
    s.outcome(
        status(ok),
        P_INEQUALITY_SAMPLES,
        Some(worst.score),
        (!ok).then_some(worst.witness).flatten(),
        "worst relative excess (lhs - rhs)/rhs".into(),
    )
}

/// `f(x,s)s ≥ pF(x,s)` at uniformly drawn vertices and values.
pub fn check_superlinearity(pr: &Problem, seed: u64, tol: f64) -> CheckOutcome {
    let s = Sampler {
        name: SUPERLINEARITY,
        statement: "f(x,s)s >= p F(x,s)",
        tolerance: tol,
        seed,
        stream: 2,
    };
    let mut rng = s.rng();
    let n = pr.domain().vertex_count();
    let p = pr.p();
    let mut worst = Worst::new();
    for i in 0..SUPERLINEARITY_SAMPLES {
        let x = rng.gen_range(0..n);
        let t = rng.gen_range(-VALUE_RANGE..=VALUE_RANGE);
        let fs = pr.f(x, t) * t;
        let pf = p * pr.primitive(x, t);
        let deficit = if fs == 0.0 && pf == 0.0 {
            0.0
        } else {
            (pf - fs) / fs.abs().max(pf.abs())
        };
        worst.offer(deficit, || {
            format!("sample {i}: x = {x}, s = {t:?}, f s = {fs:e}, p F = {pf:e}")
        });
    }
    let ok = worst.score <= tol;
    s.outcome(
        status(ok),
        SUPERLINEARITY_SAMPLES,
        Some(worst.score),
        (!ok).then_some(worst.witness).flatten(),
        "worst relative deficit (pF - f s)/|f s|".into(),
    )
}

/// `Φ(u) ≥ Φ(tu) + ((1−t^p)/p)⟨Φ′(u),u⟩`, with equality only at `t = 1`.
///
/// The slack is divided by the sum of the absolute values of the three terms.
/// A sample with `|ln t| > fibering_unit` whose normalised slack is at most
/// `fibering_equality` counts as a spurious equality. Every tenth sample uses
/// `t = 1` exactly, where equality must hold. Each `u` is also projected onto
/// the Nehari set; a failing projection (e.g. a diverging fiber) fails the
/// check.
pub fn check_fibering_inequality(pr: &Problem, seed: u64, tol: &Tolerances, fiber_tol: f64) -> CheckOutcome {
    let s = Sampler {
        name: FIBERING_INEQUALITY,
        statement: "Phi(u) >= Phi(tu) + (1 - t^p)/p <Phi'(u), u>, equality iff t = 1",
        tolerance: tol.fibering_slack,
        seed,
        stream: 3,
    };
    let mut rng = s.rng();
    let n = pr.domain().vertex_count();
    let p = pr.p();
    let mut worst = Worst::new();
    let mut spurious: Option<String> = None;
    let mut missed: Option<String> = None;
    let mut projection: Option<String> = None;
    let mut error: Option<String> = None;
    for i in 0..FIBERING_SAMPLES {
        let u = random_values(&mut rng, n);
        let t = if i % 10 == 9 {
            1.0
        } else {
            log_uniform(&mut rng, T_RANGE.0, T_RANGE.1)
        };
        let terms = (|| -> Result<(f64, f64, f64)> {
            let phi_u = energy(pr, &u)?;
            let phi_tu = energy(pr, &u.scaled(t))?;
            let j = (1.0 - t.powf(p)) / p * pairing(pr, &u, &u)?;
            Ok((phi_u, phi_tu, j))
        })();
        let (phi_u, phi_tu, j) = match terms {
            Ok(v) => v,
            Err(e) => {
                error.get_or_insert_with(|| format!("sample {i}: {e}"));
                continue;
            }
        };
        let scale = phi_u.abs() + phi_tu.abs() + j.abs();
        let slack = if scale == 0.0 {
            0.0
        } else {
            (phi_u - phi_tu - j) / scale
        };
        if t != 1.0 {
            worst.offer(-slack, || {
                format!("sample {i}: t = {t:?}, normalised slack = {slack:e}")
            });
        }
        if t.ln().abs() > tol.fibering_unit && slack <= tol.fibering_equality {
            spurious.get_or_insert_with(|| format!("sample {i}: equality at t = {t:?} (normalised slack {slack:e})"));
        }
        if t == 1.0 && slack.abs() > tol.fibering_equality {
            missed.get_or_insert_with(|| format!("sample {i}: no equality at t = 1 (normalised slack {slack:e})"));
        }
        if projection.is_none() {
            if let Err(e) = crate::nehari::project_nehari(pr, &u, fiber_tol) {
                projection = Some(format!("sample {i}: Nehari projection failed: {e}"));
            }
        }
    }
    let min_slack = -worst.score;
    let inequality_ok = min_slack >= -tol.fibering_slack;
    let mut problems: Vec<String> = Vec::new();
    if !inequality_ok {
        problems.push(worst.witness.clone().unwrap_or_default());
    }
    problems.extend([error, spurious, missed, projection].into_iter().flatten());
    let ok = problems.is_empty();
    s.outcome(
        status(ok),
        FIBERING_SAMPLES,
        Some(min_slack),
        (!ok).then(|| problems.join("; ")),
        "smallest normalised slack over t != 1".into(),
    )
}

/// `⟨Φ′(u),v⟩` against the central difference `(Φ(u+hv) − Φ(u−hv))/2h` with
/// `h = 1e−5`; the energy difference is evaluated term by term to avoid
/// cancellation.
pub fn check_gradient(pr: &Problem, seed: u64, tol: f64) -> CheckOutcome {
    let s = Sampler {
        name: GRADIENT_FINITE_DIFFERENCE,
        statement: "<Phi'(u), v> = d/dh Phi(u + h v) at h = 0",
        tolerance: tol,
        seed,
        stream: 4,
    };
    let mut rng = s.rng();
    let n = pr.domain().vertex_count();
    let h = 1e-5;
    let mut worst = Worst::new();
    for i in 0..GRADIENT_SAMPLES {
        let u = random_values(&mut rng, n);
        let v = random_values(&mut rng, n);
        let err = (|| -> Result<(f64, f64)> {
            let exact = pairing(pr, &u, &v)?;
            let fd = energy_difference(pr, &u.axpy(h, &v), &u.axpy(-h, &v))? / (2.0 * h);
            Ok((exact, fd))
        })();
        let (exact, fd) = err.unwrap_or((f64::NAN, f64::NAN));
        let rel = (exact - fd).abs() / exact.abs();
        worst.offer(rel, || {
            format!("sample {i}: pairing = {exact:e}, central difference = {fd:e}")
        });
    }
    let ok = worst.score <= tol;
    s.outcome(
        status(ok),
        GRADIENT_SAMPLES,
        Some(worst.score),
        (!ok).then_some(worst.witness).flatten(),
        "worst relative error".into(),
    )
}

/// `⟨Φ′(u),v⟩ = Σ_x g(x)v(x)` for the residual `g`.
pub fn check_pairing_residual(pr: &Problem, seed: u64, tol: f64) -> CheckOutcome {
    let s = Sampler {
        name: PAIRING_RESIDUAL,
        statement: "<Phi'(u), v> = sum_x residual(u)(x) v(x)",
        tolerance: tol,
        seed,
        stream: 5,
    };
    let mut rng = s.rng();
    let n = pr.domain().vertex_count();
    let mut worst = Worst::new();
    for i in 0..PAIRING_RESIDUAL_SAMPLES {
        let u = random_values(&mut rng, n);
        let v = random_values(&mut rng, n);
        let (a, b) = match (pairing(pr, &u, &v), residual(pr, &u)) {
            (Ok(a), Ok(g)) => (a, g.dot(&v)),
            _ => (f64::NAN, f64::NAN),
        };
        let rel = (a - b).abs() / a.abs().max(b.abs());
        worst.offer(rel, || format!("sample {i}: pairing = {a:e}, residual sum = {b:e}"));
    }
    let ok = worst.score <= tol;
    s.outcome(
        status(ok),
        PAIRING_RESIDUAL_SAMPLES,
        Some(worst.score),
        (!ok).then_some(worst.witness).flatten(),
        "worst relative mismatch".into(),
    )
}

fn solution_check(
    name: &'static str,
    statement: &'static str,
    tolerance: f64,
    seed: u64,
    solve: &std::result::Result<SolveResult, String>,
    body: impl FnOnce(&SolveResult) -> (bool, f64, String, String),
) -> CheckOutcome {
    let s = Sampler {
        name,
        statement,
        tolerance,
        seed,
        stream: 0,
    };
    match solve {
        Err(e) => s.outcome(
            CheckStatus::Fail,
            0,
            None,
            None,
            format!("ground-state solve failed: {e}"),
        ),
        Ok(r) if !r.converged => s.outcome(
            CheckStatus::Fail,
            0,
            None,
            None,
            format!(
                "ground-state solve did not converge ({:?}, residual {:e})",
                r.status, r.residual_norm
            ),
        ),
        Ok(r) => {
            let (ok, worst, detail, witness) = body(r);
            s.outcome(status(ok), 1, Some(worst), (!ok).then_some(witness), detail)
        }
    }
}

/// Strictly one-signed on every vertex of the domain.
pub fn check_sign(r: &SolveResult) -> (bool, f64, String, String) {
    let v = r.u.values();
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ok = min > 0.0 || max < 0.0;
    let margin = if max <= 0.0 { -max } else { min };
    (
        ok,
        margin,
        "smallest |u*(x)| on the sign of u*".into(),
        format!("min u* = {min:e}, max u* = {max:e}"),
    )
}

/// `|Φ(u*) − [(1/p)Σ f u* − Σ F]| / |Φ(u*)|`
pub fn energy_identity_error(pr: &Problem, r: &SolveResult) -> Result<f64> {
    let phi = energy(pr, &r.u)?;
    let other = pr.f_dot_u(&r.u) / pr.p() - pr.primitive_sum(&r.u);
    Ok((phi - other).abs() / phi.abs())
}

/// `Φ* > 0` and `‖u*‖ − (pΦ*)^{1/p}`.
pub fn lower_bound_margin(pr: &Problem, r: &SolveResult) -> Result<(bool, f64)> {
    let norm = pr.e_norm(&r.u)?;
    Ok((r.energy > 0.0, norm - (pr.p() * r.energy.max(0.0)).powf(1.0 / pr.p())))
}

/// Runs the whole suite. The ground state is computed once with
/// `override_hypotheses` set (the growth conditions are reported separately
/// and are informational) and shared by the last three checks.
pub fn run_suite(pr: &Problem, cfg: &SolverConfig, seed: u64, tol: &Tolerances) -> VerifyReport {
    let solve_cfg = SolverConfig {
        override_hypotheses: true,
        seed,
        ..cfg.clone()
    };
    let (solve, mut sampled) = rayon::join(
        || ground_state(pr, &solve_cfg).map_err(|e| e.to_string()),
        || {
            (0..6)
                .into_par_iter()
                .map(|k| match k {
                    0 => check_lq_monotonicity(pr, seed, tol.lq),
                    1 => check_p_inequality(pr.p(), seed, tol.p_inequality),
                    2 => check_superlinearity(pr, seed, tol.superlinearity),
                    3 => check_fibering_inequality(pr, seed, tol, cfg.fiber_tol),
                    4 => check_gradient(pr, seed, tol.gradient),
                    _ => check_pairing_residual(pr, seed, tol.pairing_residual),
                })
                .collect::<Vec<_>>()
        },
    );

    sampled.push(solution_check(
        GROUND_STATE_SIGN,
        "ground state is strictly positive or strictly negative",
        0.0,
        seed,
        &solve,
        check_sign,
    ));
    sampled.push(solution_check(
        NEHARI_ENERGY_IDENTITY,
        "Phi(u*) = (1/p) sum f u* - sum F",
        tol.energy_identity,
        seed,
        &solve,
        |r| match energy_identity_error(pr, r) {
            Ok(e) => (
                e <= tol.energy_identity,
                e,
                "relative error".into(),
                format!("relative error {e:e}"),
            ),
            Err(e) => (false, f64::NAN, "relative error".into(), e.to_string()),
        },
    ));
    sampled.push(solution_check(
        ENERGY_LOWER_BOUND,
        "Phi* > 0 and ||u*|| >= (p Phi*)^(1/p)",
        tol.lower_bound,
        seed,
        &solve,
        |r| match lower_bound_margin(pr, r) {
            Ok((positive, margin)) => (
                positive && margin >= -tol.lower_bound,
                margin,
                "||u*|| - (p Phi*)^(1/p)".into(),
                format!("Phi* = {:e}, margin = {margin:e}", r.energy),
            ),
            Err(e) => (false, f64::NAN, "||u*|| - (p Phi*)^(1/p)".into(), e.to_string()),
        },
    ));

    let (hypotheses, hypotheses_error) = match check_hypotheses(pr, cfg) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };
    VerifyReport {
        seed,
        p: pr.p(),
        exponent: pr.nonlinearity().exponent(),
        tolerances: *tol,
        checks: sampled,
        hypotheses,
        hypotheses_error,
        ground_state: solve.ok(),
    }
}
