//! Nehari-manifold ground states.
//!
//! For `u ≠ 0` the fibering map `ψ_u(t) = Φ(tu)` rises and then falls on
//! `t > 0`; its unique maximiser `t_u` puts `t_u u` on the Nehari set
//! `{u ≠ 0 : ⟨Φ′(u), u⟩ = 0}`. Minimising `Φ` over that set is the same as
//! minimising `Ψ(w) = Φ(t_w w)` over the unit sphere of the energy norm, which
//! is what [`ground_state`] does: projected steepest descent on the sphere,
//! with the tangent space `{z : ⟨J(w), z⟩ = 0}` given by the derivative `J` of
//! `‖·‖^p/p`, a normalising retraction and Armijo backtracking on `Ψ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{energy, energy_difference, residual, Problem};
use crate::error::{Error, Result};
use crate::model::{check_growth_conditions, negative_part_check, GrowthReport, NegativePartCheck, Nonlinearity};
use crate::space::{lq_norm, GridFunction};

/// Bracket expansion gives up beyond this fibering scalar.
pub const FIBER_BOUND: f64 = 1e18;

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub initial: f64,
    pub backtrack: f64,
    pub armijo: f64,
    /// Backtracking stops below this step.
    pub min_step: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            min_step: 1e-20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// Discrete Gaussian `height · exp(−|x − c|²/(2 width²))`, distances taken
    /// periodically on a torus. Defaults: centre `⌊side/2⌋` on every axis,
    /// width `side/8`.
    Bump {
        center: Option<Vec<usize>>,
        width: Option<f64>,
        height: f64,
    },
    /// Independent uniform values on `[−1, 1]` from the configured seed.
    Random,
    Values(GridFunction),
}

impl Default for InitialGuess {
    fn default() -> Self {
        InitialGuess::Bump {
            center: None,
            width: None,
            height: 1.0,
        }
    }
}

impl InitialGuess {
    pub fn realize(&self, pr: &Problem, seed: u64) -> Result<GridFunction> {
        let d = pr.domain();
        match self {
            InitialGuess::Bump { center, width, height } => {
                let side = d.side();
                let center = center.clone().unwrap_or_else(|| vec![side / 2; d.dim()]);
                if center.len() != d.dim() || center.iter().any(|&c| c >= side) {
                    return Err(Error::InvalidConfig(format!(
                        "bump centre {center:?} outside the domain"
                    )));
                }
                let width = width.unwrap_or(side as f64 / 8.0);
                if !(width > 0.0) {
                    return Err(Error::InvalidConfig("bump width must be positive".into()));
                }
                let values = (0..d.vertex_count())
                    .map(|x| {
                        let r2: f64 = d
                            .coords(x)
                            .iter()
                            .zip(&center)
                            .map(|(&a, &b)| {
                                let mut diff = a.abs_diff(b);
                                if d.is_torus() {
                                    diff = diff.min(side - diff);
                                }
                                (diff * diff) as f64
                            })
                            .sum();
                        height * (-r2 / (2.0 * width * width)).exp()
                    })
                    .collect();
                Ok(GridFunction::new(values))
            }
            InitialGuess::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(GridFunction::new(
                    (0..d.vertex_count()).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
                ))
            }
            InitialGuess::Values(u) => {
                pr.domain().check_len(u)?;
                Ok(u.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// `None` selects `1e−8 · max(1, ‖u‖^{p−1})` at the current iterate.
    pub residual_tol: Option<f64>,
    pub fiber_tol: f64,
    pub initial: InitialGuess,
    pub step: StepRule,
    pub seed: u64,
    /// Solve even when the sampled growth checks or the negative-part check fail.
    pub override_hypotheses: bool,
    /// Exponent `r` for the negative-part check; defaults to `p*` (or `q`
    /// when `p ≥ N`).
    pub negative_part_exponent: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            residual_tol: None,
            fiber_tol: 1e-12,
            initial: InitialGuess::default(),
            step: StepRule::default(),
            seed: 0,
            override_hypotheses: false,
            negative_part_exponent: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.step;
        if !(self.fiber_tol > 0.0) || self.residual_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(s.backtrack > 0.0 && s.backtrack < 1.0) {
            return Err(Error::InvalidConfig("backtracking factor must lie in (0, 1)".into()));
        }
        if !(s.initial > 0.0 && s.armijo > 0.0 && s.armijo < 1.0 && s.min_step > 0.0) {
            return Err(Error::InvalidConfig("step rule parameters out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationCap,
    /// Backtracking fell below the minimum step without sufficient decrease.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// `Ψ` at the start of the iteration: the initial energy plus the sum of
    /// accepted decreases, each computed without cancellation.
    pub energy: f64,
    pub residual: f64,
    pub fiber_scale: f64,
    /// Accepted step, 0 on the final row.
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    /// The Nehari point `t_w w`.
    #[serde(skip)]
    pub u: GridFunction,
    /// The sphere point it was projected from.
    #[serde(skip)]
    pub w: GridFunction,
    pub energy: f64,
    pub residual_norm: f64,
    pub residual_tol: f64,
    pub fiber_scale: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    pub t_history: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// `Φ(tu)` and `d/dt Φ(tu) = ⟨Φ′(tu), u⟩` along a fixed ray.
///
/// Both parts of `Φ` are homogeneous for the power family, so the ray is
/// summarised by two numbers and each evaluation is O(1).
#[derive(Debug, Clone, Copy)]
pub struct Fiber {
    p: f64,
    q: f64,
    /// `‖u‖^p`
    quadratic: f64,
    /// `Σ a(x)|u(x)|^q`
    nonlinear: f64,
}

impl Fiber {
    pub fn new(pr: &Problem, u: &GridFunction) -> Result<Self> {
        pr.domain().check_len(u)?;
        if u.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let Nonlinearity::Power { q, .. } = pr.nonlinearity();
        let nonlinear = u
            .values()
            .iter()
            .zip(pr.weights())
            .map(|(t, a)| a * t.abs().powf(*q))
            .sum();
        let fiber = Self {
            p: pr.p(),
            q: *q,
            quadratic: pr.norm_pow(u),
            nonlinear,
        };
        if !(fiber.quadratic.is_finite() && fiber.nonlinear.is_finite()) {
            return Err(Error::NonFinite("fibering coefficients".into()));
        }
        Ok(fiber)
    }

    pub fn value(&self, t: f64) -> f64 {
        t.powf(self.p) * self.quadratic / self.p - t.powf(self.q) * self.nonlinear / self.q
    }

    pub fn slope(&self, t: f64) -> f64 {
        t.powf(self.p - 1.0) * self.quadratic - t.powf(self.q - 1.0) * self.nonlinear
    }

    /// `‖tu‖^p`
    pub fn norm_pow(&self, t: f64) -> f64 {
        t.powf(self.p) * self.quadratic
    }

    /// `⟨Φ′(tu), tu⟩ = t · slope(t)`
    pub fn nehari_defect(&self, t: f64) -> f64 {
        t * self.slope(t)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "fibering scalar must be positive, got {t}"
        )));
    }
    Ok(())
}

/// `ψ_u(t) = Φ(tu)`
pub fn fiber(pr: &Problem, u: &GridFunction, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(Fiber::new(pr, u)?.value(t))
}

/// `ψ_u′(t) = ⟨Φ′(tu), u⟩`
pub fn fiber_slope(pr: &Problem, u: &GridFunction, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(Fiber::new(pr, u)?.slope(t))
}

/// The unique `t_u > 0` with `t_u u` on the Nehari set, and `t_u u` itself.
///
/// Brackets the sign change of `ψ_u′` by doubling or halving from `t = 1`,
/// then bisects until `|⟨Φ′(tu), tu⟩| ≤ tol · |‖tu‖^p|` or the bracket
/// collapses to adjacent floats.
pub fn project_nehari(pr: &Problem, u: &GridFunction, tol: f64) -> Result<(f64, GridFunction)> {
    let t = nehari_scale(&Fiber::new(pr, u)?, tol)?;
    Ok((t, u.scaled(t)))
}

pub(crate) fn nehari_scale(fib: &Fiber, tol: f64) -> Result<f64> {
    let done = |t: f64| fib.nehari_defect(t).abs() <= tol * fib.norm_pow(t).abs();
    if done(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi);
    if fib.slope(1.0) > 0.0 {
        lo = 1.0;
        hi = 2.0;
        while fib.slope(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > FIBER_BOUND {
                return Err(Error::DivergingFiber { bound: FIBER_BOUND });
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while !(fib.slope(lo) > 0.0) {
            hi = lo;
            lo *= 0.5;
            if lo < 1.0 / FIBER_BOUND {
                return Err(Error::DivergingFiber { bound: FIBER_BOUND });
            }
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if done(mid) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if fib.slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Growth checks and, for potentials with a negative part, the smallness
/// check against a Sobolev constant estimate.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub growth: GrowthReport,
    pub negative_part: Option<NegativePartCheck>,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.growth.all_pass() && self.negative_part.is_none_or(|c| c.pass)
    }

    pub fn describe_failures(&self) -> String {
        let mut parts: Vec<String> = self
            .growth
            .failures()
            .iter()
            .map(|c| match c.witness {
                Some(w) => format!("{} failed ({}; witness t = {w:e})", c.name, c.statement),
                None => format!("{} failed ({})", c.name, c.statement),
            })
            .collect();
        if let Some(np) = self.negative_part.filter(|c| !c.pass) {
            parts.push(format!(
                "negative part too large: ||V_-||_{} = {} >= S^p = {}",
                np.exponent, np.norm, np.threshold
            ));
        }
        parts.join("; ")
    }
}

pub fn check_hypotheses(pr: &Problem, cfg: &SolverConfig) -> Result<HypothesisReport> {
    let growth = check_growth_conditions(pr.nonlinearity(), pr.p(), pr.domain().dim());
    let negative_part = if pr.has_negative_potential() {
        let r = cfg
            .negative_part_exponent
            .unwrap_or_else(|| growth.critical_exponent.unwrap_or_else(|| pr.nonlinearity().exponent()));
        let mut sub = SolverConfig {
            override_hypotheses: true,
            ..SolverConfig::default()
        };
        sub.max_iterations = cfg.max_iterations;
        let est = crate::sobolev::sobolev_constant(pr.p(), r, pr.domain(), &sub)?;
        Some(negative_part_check(pr.potential_values(), pr.p(), r, est.s)?)
    } else {
        None
    };
    Ok(HypothesisReport { growth, negative_part })
}

struct Iterate {
    w: GridFunction,
    u: GridFunction,
    t: f64,
    energy: f64,
}

fn evaluate(pr: &Problem, w: GridFunction, tol: f64) -> Result<Iterate> {
    let (t, u) = project_nehari(pr, &w, tol)?;
    let energy = energy(pr, &u)?;
    if !energy.is_finite() {
        return Err(Error::NonFinite(format!("energy at fibering scale {t:e}")));
    }
    Ok(Iterate { w, u, t, energy })
}

fn to_sphere(pr: &Problem, v: &GridFunction) -> Result<GridFunction> {
    let n = pr.e_norm(v)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::NonFinite(format!("sphere normalisation by {n}")));
    }
    Ok(v.scaled(1.0 / n))
}

fn default_tol(pr: &Problem, u: &GridFunction) -> f64 {
    1e-8 * pr.norm_pow(u).abs().powf((pr.p() - 1.0) / pr.p()).max(1.0)
}

/// Sphere-constrained steepest descent for a ground state.
///
/// Errors before iterating when the hypotheses fail (unless overridden), when
/// the initial guess vanishes, or when an energy evaluation is not finite.
/// Running out of iterations is not an error: the result carries
/// `converged = false` and the full trace.
pub fn ground_state(pr: &Problem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if !cfg.override_hypotheses {
        let report = check_hypotheses(pr, cfg)?;
        if !report.passes() {
            return Err(Error::Hypotheses(report.describe_failures()));
        }
    }
    let start = cfg.initial.realize(pr, cfg.seed)?;
    if start.is_zero() {
        return Err(Error::ZeroFunction);
    }
    if !start.is_finite() {
        return Err(Error::NonFinite("initial guess".into()));
    }
    descend(pr, cfg, start)
}

fn descend(pr: &Problem, cfg: &SolverConfig, start: GridFunction) -> Result<SolveResult> {
    let dual = pr.p() / (pr.p() - 1.0);
    let rule = cfg.step;
    let mut it = evaluate(pr, to_sphere(pr, &start)?, cfg.fiber_tol)?;
    let mut trace = Vec::new();
    let mut t_history = Vec::new();
    let mut status = SolveStatus::IterationCap;
    let mut last = None;

    for k in 0..cfg.max_iterations {
        let g = residual(pr, &it.u)?;
        let rn = lq_norm(&g, dual)?;
        let tol = cfg.residual_tol.unwrap_or_else(|| default_tol(pr, &it.u));
        t_history.push(it.t);
        if rn <= tol {
            trace.push(TraceRow {
                iteration: k,
                energy: it.energy,
                residual: rn,
                fiber_scale: it.t,
                step: 0.0,
            });
            status = SolveStatus::Converged;
            last = Some((rn, tol));
            break;
        }

        // Tangent component of the residual with respect to ⟨J(w), ·⟩.
        let along = pr.j_pairing(&it.w, &g) / pr.j_pairing(&it.w, &it.w);
        let direction = g.axpy(-along, &it.w);
        let slope = it.t * g.dot(&direction);

        let mut sigma = rule.initial;
        let accepted = loop {
            let moved = it.w.axpy(-sigma, &direction);
            let candidate = to_sphere(pr, &moved).and_then(|w| evaluate(pr, w, cfg.fiber_tol));
            match candidate {
                Ok(mut c) => {
                    let change = energy_difference(pr, &c.u, &it.u)?;
                    if change <= -rule.armijo * sigma * slope {
                        c.energy = it.energy + change;
                        break Some(c);
                    }
                }
                Err(e @ Error::NonFinite(_)) => return Err(e),
                Err(_) => {}
            }
            sigma *= rule.backtrack;
            if sigma < rule.min_step {
                break None;
            }
        };
        trace.push(TraceRow {
            iteration: k,
            energy: it.energy,
            residual: rn,
            fiber_scale: it.t,
            step: if accepted.is_some() { sigma } else { 0.0 },
        });
        match accepted {
            Some(next) => it = next,
            None => {
                status = SolveStatus::Stalled;
                last = Some((rn, tol));
                break;
            }
        }
    }

    let (residual_norm, residual_tol) = match last {
        Some(v) => v,
        None => {
            let rn = lq_norm(&residual(pr, &it.u)?, dual)?;
            (rn, cfg.residual_tol.unwrap_or_else(|| default_tol(pr, &it.u)))
        }
    };
    Ok(SolveResult {
        energy: energy(pr, &it.u)?,
        fiber_scale: it.t,
        u: it.u,
        w: it.w,
        residual_norm,
        residual_tol,
        iterations: trace.len(),
        converged: status == SolveStatus::Converged,
        status,
        t_history,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Boundary, Domain};
    use crate::energy::pairing;
    use crate::model::Potential;

    fn tiny(q: f64) -> Problem {
        let d = Domain::new(1, 1, Boundary::Dirichlet, None).unwrap();
        Problem::new(d, Potential::default(), Nonlinearity::power(q), 2.0).unwrap()
    }

    #[test]
    fn tiny_fibering_profile() {
        let pr = tiny(4.0);
        let u = GridFunction::new(vec![1.0]);
        let r2 = 2f64.sqrt();
        assert!((fiber(&pr, &u, r2).unwrap() - 1.0).abs() < 1e-14);
        assert!(fiber_slope(&pr, &u, r2).unwrap().abs() < 1e-14);
        assert_eq!(fiber(&pr, &u, 1.0).unwrap(), energy(&pr, &u).unwrap());
        for t in [0.5f64, 1.0, 2.0] {
            let expect = t * t - t.powi(4) / 4.0;
            assert!((fiber(&pr, &u, t).unwrap() - expect).abs() < 1e-14);
        }
        assert_eq!(
            fiber(&pr, &GridFunction::zeros(1), 1.0).unwrap_err(),
            Error::ZeroFunction
        );
    }

    #[test]
    fn fiber_slope_matches_pairing() {
        let d = Domain::new(2, 4, Boundary::Dirichlet, None).unwrap();
        let pr = Problem::new(d, Potential::Constant { value: 0.3 }, Nonlinearity::power(3.5), 2.5).unwrap();
        let u = GridFunction::new((0..16).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.4).collect());
        for t in [0.3, 1.0, 2.7] {
            let direct = pairing(&pr, &u.scaled(t), &u).unwrap();
            let fast = fiber_slope(&pr, &u, t).unwrap();
            assert!((direct - fast).abs() <= 1e-12 * direct.abs().max(1.0));
            let e = energy(&pr, &u.scaled(t)).unwrap();
            assert!((e - fiber(&pr, &u, t).unwrap()).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn projection_of_tiny_instance() {
        let pr = tiny(4.0);
        let (t, w) = project_nehari(&pr, &GridFunction::new(vec![1.0]), 1e-12).unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-11);
        assert!((w[0] - 2f64.sqrt()).abs() < 1e-11);
        let (t1, _) = project_nehari(&pr, &GridFunction::new(vec![2f64.sqrt()]), 1e-12).unwrap();
        assert!((t1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_diverges_when_not_superlinear() {
        let pr = tiny(2.0);
        let err = project_nehari(&pr, &GridFunction::new(vec![1.0]), 1e-12).unwrap_err();
        assert!(matches!(err, Error::DivergingFiber { .. }));
    }

    #[test]
    fn projection_is_ray_invariant() {
        let d = Domain::new(1, 5, Boundary::Dirichlet, None).unwrap();
        let pr = Problem::new(d, Potential::default(), Nonlinearity::power(5.0), 2.0).unwrap();
        let u = GridFunction::new(vec![0.2, 0.9, -0.4, 1.3, 0.1]);
        let (t, w) = project_nehari(&pr, &u, 1e-13).unwrap();
        for c in [1e-3, 0.37, 5.0, 2.5e4] {
            let (tc, wc) = project_nehari(&pr, &u.scaled(c), 1e-13).unwrap();
            assert!((tc * c - t).abs() <= 1e-11 * t);
            for (a, b) in w.values().iter().zip(wc.values()) {
                assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn projection_reaches_nehari_tolerance() {
        let d = Domain::new(2, 5, Boundary::Dirichlet, None).unwrap();
        let pr = Problem::new(d, Potential::Constant { value: 1.0 }, Nonlinearity::power(3.0), 2.0).unwrap();
        let u = InitialGuess::Random.realize(&pr, 9).unwrap();
        let (_, w) = project_nehari(&pr, &u, 1e-12).unwrap();
        let defect = pairing(&pr, &w, &w).unwrap();
        assert!(defect.abs() <= 1e-12 * pr.norm_pow(&w));
    }

    #[test]
    fn tiny_ground_state() {
        let pr = tiny(4.0);
        let res = ground_state(&pr, &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert!((res.u[0] - 2f64.sqrt()).abs() < 1e-8);
        assert!((res.energy - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hypothesis_gate_rejects_linear_growth() {
        let pr = tiny(2.0);
        let err = ground_state(&pr, &SolverConfig::default()).unwrap_err();
        match err {
            Error::Hypotheses(msg) => assert!(msg.contains("monotone_quotient"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_start_fails_fast() {
        let pr = tiny(4.0);
        let cfg = SolverConfig {
            initial: InitialGuess::Values(GridFunction::zeros(1)),
            ..SolverConfig::default()
        };
        assert_eq!(ground_state(&pr, &cfg).unwrap_err(), Error::ZeroFunction);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let d = Domain::new(2, 9, Boundary::Dirichlet, None).unwrap();
        let pr = Problem::new(d, Potential::default(), Nonlinearity::power(4.0), 2.0).unwrap();
        let cfg = SolverConfig {
            max_iterations: 1,
            ..SolverConfig::default()
        };
        let res = ground_state(&pr, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.status, SolveStatus::IterationCap);
        assert_eq!(res.trace.len(), 1);
    }

    #[test]
    fn descent_is_monotone() {
        let d = Domain::new(2, 7, Boundary::Dirichlet, None).unwrap();
        let pr = Problem::new(d, Potential::Constant { value: 0.5 }, Nonlinearity::power(3.0), 2.0).unwrap();
        let res = ground_state(&pr, &SolverConfig::default()).unwrap();
        assert!(res.converged, "{:?}", res.status);
        for w in res.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
    }

    #[test]
    fn invalid_step_rule_rejected() {
        let mut cfg = SolverConfig::default();
        cfg.step.backtrack = 1.0;
        assert!(cfg.validate().is_err());
    }
}
