//! Estimates of the best Sobolev constant
//!
//! ```text
//! S_{p,q} = inf_{u ≠ 0} ‖u‖_{D^{1,p}} / ‖u‖_q
//! ```
//!
//! on a finite domain, by two independent routes:
//!
//! * through the ground state `w` of `−Δ_p u = |u|^{q−2}u`: on the Nehari set
//!   `‖w‖^p = ‖w‖_q^q`, so the quotient at `w` equals `‖w‖^{(q−p)/q}`;
//! * by direct gradient descent on the (scale-invariant) log-quotient.
//!
//! On a Dirichlet box the feasible set grows with the side, so the estimate is
//! non-increasing in the side.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Domain;
use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::model::{critical_exponent, signed_pow, Nonlinearity, Potential};
use crate::nehari::{ground_state, SolveResult, SolverConfig};
use crate::space::{check_p, dirichlet_energy, dirichlet_norm, lq_norm, GridFunction};

#[derive(Debug, Clone, Serialize)]
pub struct SobolevEstimate {
    /// `‖w‖^{(q−p)/q}` at the computed ground state.
    pub s: f64,
    /// `‖w‖ / ‖w‖_q` evaluated directly; equals `s` up to the Nehari tolerance.
    pub quotient: f64,
    /// `1 < p < N` and `q > p*`.
    pub in_theory_range: bool,
    #[serde(skip)]
    pub extremal: GridFunction,
    pub solve: SolveResult,
}

/// `‖u‖_{D^{1,p}} / ‖u‖_q`
pub fn sobolev_quotient(domain: &Domain, u: &GridFunction, p: f64, q: f64) -> Result<f64> {
    let num = dirichlet_norm(domain, u, p)?;
    let den = lq_norm(u, q)?;
    if den == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(num / den)
}

pub fn in_theory_range(p: f64, q: f64, dim: usize) -> bool {
    critical_exponent(p, dim).is_some_and(|ps| q > ps)
}

/// Ground-state route. Runs outside the theory range as well; the returned
/// estimate flags it.
pub fn sobolev_constant(p: f64, q: f64, domain: &Domain, cfg: &SolverConfig) -> Result<SobolevEstimate> {
    if !(q > p) {
        return Err(Error::InvalidExponent(format!("need q > p, got q = {q}, p = {p}")));
    }
    let pr = Problem::new(domain.clone(), Potential::default(), Nonlinearity::power(q), p)?;
    let cfg = SolverConfig {
        override_hypotheses: true,
        ..cfg.clone()
    };
    let solve = ground_state(&pr, &cfg)?;
    let norm = pr.e_norm(&solve.u)?;
    let s = norm.powf((q - p) / q);
    let quotient = sobolev_quotient(domain, &solve.u, p, q)?;
    let extremal = solve.u.scaled(1.0 / lq_norm(&solve.u, q)?);
    Ok(SobolevEstimate {
        s,
        quotient,
        in_theory_range: in_theory_range(p, q, domain.dim()),
        extremal,
        solve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientOptions {
    pub max_iterations: usize,
    /// Stop when the Euclidean norm of the log-quotient gradient (at
    /// `‖u‖_q = 1`) drops below this.
    pub gradient_tol: f64,
    /// Number of correction pairs kept by the quasi-Newton update.
    pub memory: usize,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for QuotientOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gradient_tol: 1e-6,
            memory: 10,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuotientResult {
    pub quotient: f64,
    /// Normalised to `‖u‖_q = 1`.
    pub minimizer: GridFunction,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Gradient tolerance reached; otherwise the line search ran out of
    /// representable decrease or the iteration cap was hit.
    pub converged: bool,
}

struct LogQuotient<'a> {
    domain: &'a Domain,
    p: f64,
    q: f64,
}

impl LogQuotient<'_> {
    /// `(1/p) ln Σ|∇u|^p − (1/q) ln Σ|u|^q`
    fn value(&self, u: &GridFunction) -> f64 {
        let d = dirichlet_energy(self.domain, u, self.p);
        let l: f64 = u.values().iter().map(|v| v.abs().powf(self.q)).sum();
        d.ln() / self.p - l.ln() / self.q
    }

    fn gradient(&self, u: &GridFunction) -> GridFunction {
        let d = dirichlet_energy(self.domain, u, self.p);
        let l: f64 = u.values().iter().map(|v| v.abs().powf(self.q)).sum();
        let mut g: Vec<f64> = u.values().iter().map(|&v| -signed_pow(v, self.q - 1.0) / l).collect();
        for e in self.domain.edges() {
            let flux = signed_pow(u.difference(e), self.p - 1.0) / d;
            if let Some(h) = e.head {
                g[h] += flux;
            }
            if let Some(t) = e.tail {
                g[t] -= flux;
            }
        }
        GridFunction::new(g)
    }
}

/// Limited-memory BFGS with Armijo backtracking on the log-quotient. The
/// quotient is scale invariant; iterates are rescaled to `‖u‖_q = 1` (and the
/// memory cleared) whenever the norm drifts out of `[1/2, 2]`.
pub fn minimize_quotient(
    domain: &Domain,
    p: f64,
    q: f64,
    start: &GridFunction,
    opts: &QuotientOptions,
) -> Result<QuotientResult> {
    domain.check_len(start)?;
    check_p(p)?;
    if !(q > p) {
        return Err(Error::InvalidExponent(format!("need q > p, got q = {q}, p = {p}")));
    }
    let f = LogQuotient { domain, p, q };
    let normalize = |u: &GridFunction| -> Result<GridFunction> {
        let n = lq_norm(u, q)?;
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroFunction);
        }
        Ok(u.scaled(1.0 / n))
    };
    let mut u = normalize(start)?;
    let mut value = f.value(&u);
    if !value.is_finite() {
        return Err(Error::NonFinite("log-quotient at start".into()));
    }
    let mut g = f.gradient(&u);
    let mut pairs: VecDeque<(GridFunction, GridFunction, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        if g.dot(&g).sqrt() <= opts.gradient_tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Two-loop recursion for the quasi-Newton direction.
        let mut r = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * s.dot(&r);
            r = r.axpy(-a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            r = r.scaled(s.dot(y) / y.dot(y));
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * y.dot(&r);
            r = r.axpy(a - b, s);
        }
        let mut direction = r.scaled(-1.0);
        let mut slope = g.dot(&direction);
        if !(slope < 0.0) {
            pairs.clear();
            direction = g.scaled(-1.0);
            slope = -g.dot(&g);
        }

        let mut sigma = 1.0;
        let step = loop {
            let trial = u.axpy(sigma, &direction);
            let tv = f.value(&trial);
            if tv <= value + opts.armijo * sigma * slope {
                break Some((trial, tv));
            }
            sigma *= opts.backtrack;
            if sigma < 1e-20 {
                break None;
            }
        };
        let Some((mut next, next_value)) = step else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        let mut next_g = f.gradient(&next);
        let n = lq_norm(&next, q)?;
        if !(0.5..=2.0).contains(&n) {
            next = next.scaled(1.0 / n);
            next_g = f.gradient(&next);
            pairs.clear();
        } else {
            let s = next.axpy(-1.0, &u);
            let y = next_g.axpy(-1.0, &g);
            let sy = s.dot(&y);
            if sy > 1e-300 {
                if pairs.len() == opts.memory {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, 1.0 / sy));
            }
        }
        u = next;
        value = next_value;
        g = next_g;
    }
    let minimizer = normalize(&u)?;
    let gradient_norm = f.gradient(&minimizer).dot(&f.gradient(&minimizer)).sqrt();
    Ok(QuotientResult {
        quotient: value.exp(),
        minimizer,
        iterations,
        gradient_norm,
        converged,
    })
}

/// A random positive start: on a Dirichlet box the product of `sin(π(x_i+1)/(L+1))`
/// envelopes times independent uniform `[1/2, 3/2]` factors; on a torus the
/// uniform factors alone.
pub fn random_start(domain: &Domain, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = domain.side() as f64;
    let values = (0..domain.vertex_count())
        .map(|x| {
            let envelope: f64 = if domain.is_torus() {
                1.0
            } else {
                domain
                    .coords(x)
                    .iter()
                    .map(|&c| (std::f64::consts::PI * (c as f64 + 1.0) / (l + 1.0)).sin())
                    .product()
            };
            envelope * rng.gen_range(0.5..1.5)
        })
        .collect();
    GridFunction::new(values)
}

/// Best of `starts` runs from [`random_start`] fields with seeds `seed + i`,
/// executed in parallel.
pub fn minimize_quotient_multistart(
    domain: &Domain,
    p: f64,
    q: f64,
    starts: usize,
    seed: u64,
    opts: &QuotientOptions,
) -> Result<QuotientResult> {
    if starts == 0 {
        return Err(Error::InvalidConfig("need at least one start".into()));
    }
    let runs: Vec<Result<QuotientResult>> = (0..starts)
        .into_par_iter()
        .map(|i| minimize_quotient(domain, p, q, &random_start(domain, seed.wrapping_add(i as u64)), opts))
        .collect();
    let mut best: Option<QuotientResult> = None;
    for r in runs {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.quotient < b.quotient) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}
