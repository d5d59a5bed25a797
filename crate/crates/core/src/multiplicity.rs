//! Multi-start search for geometrically distinct solutions on a torus.
//!
//! Two solutions are identified when one is (numerically) a translate of the
//! other by a multiple of the period `T`. The shift group of a torus with side
//! `L` has `(L/T)^N` elements, and deduplication scans all of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::nehari::{ground_state, InitialGuess, SolveResult, SolverConfig};
use crate::space::GridFunction;

fn check_period(pr: &Problem, period: usize) -> Result<()> {
    let d = pr.domain();
    if !d.is_torus() {
        return Err(Error::NotTorus);
    }
    if period == 0 || !d.side().is_multiple_of(period) {
        return Err(Error::PeriodMismatch { period, side: d.side() });
    }
    Ok(())
}

/// All shifts `kT` with `k ∈ {0, …, L/T − 1}^N`, first axis slowest.
fn period_shifts(dim: usize, side: usize, period: usize) -> Vec<Vec<i64>> {
    let m = side / period;
    let total = m.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut k = vec![0i64; dim];
            for axis in (0..dim).rev() {
                k[axis] = ((idx % m) * period) as i64;
                idx /= m;
            }
            k
        })
        .collect()
}

/// `min_k ‖u(· − kT) − v‖` over the whole shift group.
pub fn orbit_distance(pr: &Problem, u: &GridFunction, v: &GridFunction, period: usize) -> Result<f64> {
    check_period(pr, period)?;
    let d = pr.domain();
    let mut best = f64::INFINITY;
    for k in period_shifts(d.dim(), d.side(), period) {
        let shifted = d.translate(u, &k)?;
        best = best.min(pr.e_norm(&shifted.axpy(-1.0, v))?);
    }
    Ok(best)
}

/// Whether potential and weight are invariant under shifts by `period`.
pub fn is_periodic(pr: &Problem, period: usize) -> Result<bool> {
    check_period(pr, period)?;
    let d = pr.domain();
    let v = GridFunction::new(pr.potential_values().to_vec());
    let a = GridFunction::new(pr.weights().to_vec());
    for axis in 0..d.dim() {
        let mut k = vec![0i64; d.dim()];
        k[axis] = period as i64;
        if d.translate(&v, &k)? != v || d.translate(&a, &k)? != a {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPlan {
    /// Default bumps recentred at `c + i·T·(1, …, 1)`.
    Translated,
    /// Cycles through bumps at random cells, random fields, and negated bumps.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinctOptions {
    pub period: usize,
    pub n_starts: usize,
    /// `None` selects `1e−4 · ‖u*‖` for the lowest-energy result `u*`.
    pub orbit_tol: Option<f64>,
    pub sign_companions: bool,
    pub plan: StartPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Origin {
    Start(usize),
    /// Negation of the representative with this index.
    SignCompanion(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct Orbit {
    pub origin: Origin,
    pub energy: f64,
    /// Number of converged starts merged into this orbit.
    pub merged: usize,
    #[serde(skip)]
    pub u: GridFunction,
    #[serde(skip)]
    pub result: Option<SolveResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSet {
    pub period: usize,
    pub orbit_tol: f64,
    pub representatives: Vec<Orbit>,
    /// Pairwise orbit distances between representatives.
    pub distances: Vec<Vec<f64>>,
    /// One line per start that did not contribute (error or no convergence).
    pub diagnostics: Vec<String>,
}

impl OrbitSet {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Smallest off-diagonal entry of the distance matrix.
    pub fn min_separation(&self) -> Option<f64> {
        let n = self.distances.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.distances[i][j])
            .reduce(f64::min)
    }
}

fn start_guesses(pr: &Problem, cfg: &SolverConfig, opts: &DistinctOptions) -> Vec<InitialGuess> {
    let d = pr.domain();
    let side = d.side();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..opts.n_starts)
        .map(|i| match opts.plan {
            StartPlan::Translated => {
                let center = vec![(side / 2 + i * opts.period) % side; d.dim()];
                InitialGuess::Bump {
                    center: Some(center),
                    width: None,
                    height: 1.0,
                }
            }
            StartPlan::Mixed => {
                let center: Vec<usize> = (0..d.dim()).map(|_| rng.gen_range(0..side)).collect();
                match i % 3 {
                    0 => InitialGuess::Bump {
                        center: Some(center),
                        width: None,
                        height: 1.0,
                    },
                    1 => InitialGuess::Random,
                    _ => InitialGuess::Bump {
                        center: Some(center),
                        width: None,
                        height: -1.0,
                    },
                }
            }
        })
        .collect()
}

/// Multi-start ground-state search with orbit deduplication.
///
/// Starts run in parallel, each with seed `cfg.seed + i`; deduplication is a
/// sequential pass over converged results in order of increasing energy.
pub fn find_distinct(pr: &Problem, cfg: &SolverConfig, opts: &DistinctOptions) -> Result<OrbitSet> {
    check_period(pr, opts.period)?;
    if !is_periodic(pr, opts.period)? {
        return Err(Error::InvalidModel(format!(
            "potential or weight is not {}-periodic on this torus",
            opts.period
        )));
    }
    if opts.sign_companions && !pr.nonlinearity().is_odd() {
        return Err(Error::InvalidModel("sign companions need an odd nonlinearity".into()));
    }
    let guesses = start_guesses(pr, cfg, opts);
    let runs: Vec<Result<SolveResult>> = guesses
        .into_par_iter()
        .enumerate()
        .map(|(i, initial)| {
            let run_cfg = SolverConfig {
                initial,
                seed: cfg.seed.wrapping_add(i as u64),
                ..cfg.clone()
            };
            ground_state(pr, &run_cfg)
        })
        .collect();

    let mut diagnostics = Vec::new();
    let mut converged: Vec<(usize, SolveResult)> = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(r) if r.converged => converged.push((i, r)),
            Ok(r) => diagnostics.push(format!(
                "start {i}: no convergence ({:?}, residual {:e})",
                r.status, r.residual_norm
            )),
            Err(e) => diagnostics.push(format!("start {i}: {e}")),
        }
    }
    converged.sort_by(|a, b| a.1.energy.total_cmp(&b.1.energy).then(a.0.cmp(&b.0)));

    let orbit_tol = match (opts.orbit_tol, converged.first()) {
        (Some(t), _) => t,
        (None, Some((_, best))) => 1e-4 * pr.e_norm(&best.u)?,
        (None, None) => 0.0,
    };
    if let Some(t) = opts.orbit_tol {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidConfig("orbit tolerance must be >= 0".into()));
        }
    }

    let mut reps: Vec<Orbit> = Vec::new();
    for (i, r) in converged {
        let mut home = None;
        for (j, rep) in reps.iter().enumerate() {
            if orbit_distance(pr, &rep.u, &r.u, opts.period)? <= orbit_tol {
                home = Some(j);
                break;
            }
        }
        match home {
            Some(j) => reps[j].merged += 1,
            None => reps.push(Orbit {
                origin: Origin::Start(i),
                energy: r.energy,
                merged: 1,
                u: r.u.clone(),
                result: Some(r),
            }),
        }
    }

    if opts.sign_companions {
        let originals = reps.len();
        for j in 0..originals {
            let neg = reps[j].u.scaled(-1.0);
            let mut distinct = true;
            for rep in &reps {
                if orbit_distance(pr, &rep.u, &neg, opts.period)? <= orbit_tol {
                    distinct = false;
                    break;
                }
            }
            if distinct {
                reps.push(Orbit {
                    origin: Origin::SignCompanion(j),
                    energy: reps[j].energy,
                    merged: 0,
                    u: neg,
                    result: None,
                });
            }
        }
        // Companions land right after their originals at equal energy.
        let key = |o: &Orbit| match o.origin {
            Origin::Start(_) => 0,
            Origin::SignCompanion(_) => 1,
        };
        let order: Vec<usize> = {
            let mut idx: Vec<usize> = (0..reps.len()).collect();
            idx.sort_by(|&a, &b| {
                reps[a]
                    .energy
                    .total_cmp(&reps[b].energy)
                    .then(key(&reps[a]).cmp(&key(&reps[b])))
                    .then(a.cmp(&b))
            });
            idx
        };
        let mut taken: Vec<Option<Orbit>> = reps.into_iter().map(Some).collect();
        reps = order
            .into_iter()
            .map(|i| taken[i].take().expect("each index once"))
            .collect();
    }

    let n = reps.len();
    let mut distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                distances[i][j] = orbit_distance(pr, &reps[i].u, &reps[j].u, opts.period)?;
            }
        }
    }

    Ok(OrbitSet {
        period: opts.period,
        orbit_tol,
        representatives: reps,
        distances,
        diagnostics,
    })
}
