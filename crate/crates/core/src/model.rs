//! Potentials `V`, nonlinearities `f` with closed-form primitives `F`, and
//! sampled checks of the growth hypotheses the Nehari method relies on.

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::space::{check_p, lq_norm, GridFunction};

/// `|s|^{e−1} s` with the value 0 at `s = 0` (no `0^{negative}` evaluation).
#[inline]
pub fn signed_pow(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(e)
    }
}

/// Index into a row-major `T^N` cell table for the vertex `x`.
fn cell_index(domain: &Domain, x: usize, period: usize) -> usize {
    domain.coords(x).iter().fold(0, |acc, &c| acc * period + c % period)
}

fn check_cell_table(domain: &Domain, period: usize, len: usize, what: &str) -> Result<()> {
    if period == 0 {
        return Err(Error::InvalidModel(format!("{what}: period must be positive")));
    }
    let expected = period.pow(domain.dim() as u32);
    if len != expected {
        return Err(Error::InvalidModel(format!(
            "{what}: cell table has {len} entries, expected period^dim = {expected}"
        )));
    }
    if domain.is_torus() && !domain.side().is_multiple_of(period) {
        return Err(Error::PeriodMismatch {
            period,
            side: domain.side(),
        });
    }
    Ok(())
}

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deviation {
    /// Vertex coordinates inside the box.
    pub at: Vec<usize>,
    pub value: f64,
}

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum Potential {
    Constant {
        value: f64,
    },
    /// `V(x) = cells[x mod period]`, cells in row-major order.
    Periodic {
        period: usize,
        cells: Vec<f64>,
    },
    /// `V(x) = limit + deviation(x)` with finitely many nonpositive deviations.
    Decaying {
        limit: f64,
        #[serde(default)]
        deviations: Vec<Deviation>,
    },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Constant { value: 0.0 }
    }
}

impl Potential {
    /// Vertex-wise table of `V` on the domain.
    pub fn values(&self, domain: &Domain) -> Result<Vec<f64>> {
        let n = domain.vertex_count();
        let out = match self {
            Potential::Constant { value } => vec![*value; n],
            Potential::Periodic { period, cells } => {
                check_cell_table(domain, *period, cells.len(), "potential")?;
                (0..n).map(|x| cells[cell_index(domain, x, *period)]).collect()
            }
            Potential::Decaying { limit, deviations } => {
                if *limit < 0.0 {
                    return Err(Error::InvalidModel("decaying potential needs limit >= 0".into()));
                }
                let mut v = vec![*limit; n];
                for dev in deviations {
                    if dev.at.len() != domain.dim() || dev.at.iter().any(|&c| c >= domain.side()) {
                        return Err(Error::InvalidModel(format!(
                            "deviation at {:?} lies outside the domain",
                            dev.at
                        )));
                    }
                    if dev.value > 0.0 {
                        return Err(Error::InvalidModel(
                            "decaying potential must stay below its limit".into(),
                        ));
                    }
                    v[domain.index(&dev.at)] += dev.value;
                }
                v
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential".into()));
        }
        Ok(out)
    }

    pub fn eval(&self, domain: &Domain, x: usize) -> Result<f64> {
        Ok(self.values(domain)?[x])
    }

    /// The limit `V_∞` for decaying potentials, the sup otherwise.
    pub fn limit(&self) -> f64 {
        match self {
            Potential::Constant { value } => *value,
            Potential::Periodic { cells, .. } => cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Potential::Decaying { limit, .. } => *limit,
        }
    }
}

/// Weight `a(x) > 0` of the power nonlinearity.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Constant(f64),
    Periodic { period: usize, cells: Vec<f64> },
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Constant(1.0)
    }
}

impl Weight {
    pub fn values(&self, domain: &Domain) -> Result<Vec<f64>> {
        let out: Vec<f64> = match self {
            Weight::Constant(a) => vec![*a; domain.vertex_count()],
            Weight::Periodic { period, cells } => {
                check_cell_table(domain, *period, cells.len(), "weight")?;
                (0..domain.vertex_count())
                    .map(|x| cells[cell_index(domain, x, *period)])
                    .collect()
            }
        };
        if out.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidModel("weights must be finite and positive".into()));
        }
        Ok(out)
    }

    /// The distinct weight values, in first-appearance order.
    pub fn distinct(&self) -> Vec<f64> {
        let all = match self {
            Weight::Constant(a) => vec![*a],
            Weight::Periodic { cells, .. } => cells.clone(),
        };
        let mut out: Vec<f64> = Vec::new();
        for a in all {
            if !out.contains(&a) {
                out.push(a);
            }
        }
        out
    }
}

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Nonlinearity {
    /// `f(x,t) = a(x)|t|^{q−2}t`, `F(x,t) = a(x)|t|^q/q`.
    Power {
        q: f64,
        #[serde(default)]
        weight: Weight,
    },
}

impl Nonlinearity {
    pub fn power(q: f64) -> Self {
        Nonlinearity::Power {
            q,
            weight: Weight::Constant(1.0),
        }
    }

    pub fn exponent(&self) -> f64 {
        match self {
            Nonlinearity::Power { q, .. } => *q,
        }
    }

    pub fn weight(&self) -> &Weight {
        match self {
            Nonlinearity::Power { weight, .. } => weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.exponent();
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidModel(format!("power exponent must be > 1, got {q}")));
        }
        Ok(())
    }

    pub fn is_odd(&self) -> bool {
        true
    }

    /// `f` for a given weight value.
    #[inline]
    pub fn f_with(&self, a: f64, t: f64) -> f64 {
        match self {
            Nonlinearity::Power { q, .. } => a * signed_pow(t, q - 1.0),
        }
    }

    /// `F` for a given weight value.
    #[inline]
    pub fn primitive_with(&self, a: f64, t: f64) -> f64 {
        match self {
            Nonlinearity::Power { q, .. } => a * t.abs().powf(*q) / q,
        }
    }

    /// `F(t + δ) − F(t)` for a given weight value, free of cancellation.
    #[inline]
    pub fn primitive_increment(&self, a: f64, t: f64, delta: f64) -> f64 {
        match self {
            Nonlinearity::Power { q, .. } => a * crate::energy::pow_increment(t, delta, *q) / q,
        }
    }

    pub fn f_eval(&self, domain: &Domain, x: usize, t: f64) -> Result<f64> {
        Ok(self.f_with(self.weight().values(domain)?[x], t))
    }

    pub fn primitive_eval(&self, domain: &Domain, x: usize, t: f64) -> Result<f64> {
        Ok(self.primitive_with(self.weight().values(domain)?[x], t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub status: CheckStatus,
    pub detail: String,
    /// Sample point where the check failed, when it did.
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub p: f64,
    pub dim: usize,
    /// `p* = Np/(N−p)`, present when `p < N`.
    pub critical_exponent: Option<f64>,
    pub checks: Vec<ConditionCheck>,
}

impl GrowthReport {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }
}

pub const GROWTH_BOUND: &str = "growth_bound";
pub const VANISHING_AT_ZERO: &str = "vanishing_at_zero";
pub const MONOTONE_QUOTIENT: &str = "monotone_quotient";
pub const SUPERLINEAR_PRIMITIVE: &str = "superlinear_primitive";

/// 121 log-spaced points on `[1e−6, 1e6]`, ten per decade.
pub fn sample_grid() -> Vec<f64> {
    (0..=120).map(|i| 10f64.powf(-6.0 + i as f64 / 10.0)).collect()
}

pub fn critical_exponent(p: f64, dim: usize) -> Option<f64> {
    let n = dim as f64;
    (p < n).then(|| n * p / (n - p))
}

fn strictly_increasing(values: &[f64]) -> Option<usize> {
    values.windows(2).position(|w| !(w[1] > w[0])).map(|i| i + 1)
}

/// Samples the growth hypotheses on a log-spaced grid for every distinct
/// weight value. Checks that need `p* = Np/(N−p)` are skipped when `p ≥ N`.
pub fn check_growth_conditions(nl: &Nonlinearity, p: f64, dim: usize) -> GrowthReport {
    let grid = sample_grid();
    let pstar = critical_exponent(p, dim);
    let q = nl.exponent();
    let weights = nl.weight().distinct();
    let mut checks = Vec::new();

    // Both signs of t, each scanned in the direction the condition names.
    let signed = |t: f64, s: f64| s * t;

    match pstar {
        None => {
            let notice = format!("skipped: requires p < N (p = {p}, N = {dim})");
            checks.push(ConditionCheck {
                name: GROWTH_BOUND,
                statement: "f(x,t) <= a(1 + |t|^(r-1)) for some r > p*",
                status: CheckStatus::Skipped,
                detail: notice.clone(),
                witness: None,
            });
            checks.push(ConditionCheck {
                name: VANISHING_AT_ZERO,
                statement: "f(x,t)/|t|^(p*-1) -> 0 as t -> 0",
                status: CheckStatus::Skipped,
                detail: notice,
                witness: None,
            });
        }
        Some(ps) => {
            let r = q.max(ps + 1.0);
            let a_max = weights.iter().cloned().fold(0.0f64, f64::max);
            let mut witness = None;
            'outer: for &a in &weights {
                for &t in &grid {
                    for s in [1.0, -1.0] {
                        let tt = signed(t, s);
                        if nl.f_with(a, tt) > a_max * (1.0 + tt.abs().powf(r - 1.0)) {
                            witness = Some(tt);
                            break 'outer;
                        }
                    }
                }
            }
            checks.push(ConditionCheck {
                name: GROWTH_BOUND,
                statement: "f(x,t) <= a(1 + |t|^(r-1)) for some r > p*",
                status: if witness.is_none() {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                detail: format!("bound exponent r = {r}, a = {a_max}"),
                witness,
            });

            // Descending toward zero the ratio must strictly decrease.
            let small: Vec<f64> = grid.iter().cloned().filter(|&t| t <= 1.0).collect();
            let mut witness = None;
            let mut last_ratio = 0.0;
            'outer3: for &a in &weights {
                for s in [1.0, -1.0] {
                    let ratios: Vec<f64> = small
                        .iter()
                        .map(|&t| (nl.f_with(a, signed(t, s)) / t.powf(ps - 1.0)).abs())
                        .collect();
                    last_ratio = ratios[0];
                    if let Some(i) = strictly_increasing(&ratios) {
                        witness = Some(signed(small[i], s));
                        break 'outer3;
                    }
                }
            }
            checks.push(ConditionCheck {
                name: VANISHING_AT_ZERO,
                statement: "f(x,t)/|t|^(p*-1) -> 0 as t -> 0",
                status: if witness.is_none() {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                detail: format!("p* = {ps}; |ratio| at t = 1e-6 is {last_ratio:e}"),
                witness,
            });
        }
    }

    let mut witness = None;
    'outer4: for &a in &weights {
        // Positive branch: t ascending; negative branch: t ascending toward 0.
        let pos: Vec<f64> = grid.iter().map(|&t| nl.f_with(a, t) / t.powf(p - 1.0)).collect();
        if let Some(i) = strictly_increasing(&pos) {
            witness = Some(grid[i]);
            break 'outer4;
        }
        let neg_ts: Vec<f64> = grid.iter().rev().map(|&t| -t).collect();
        let neg: Vec<f64> = neg_ts
            .iter()
            .map(|&t| nl.f_with(a, t) / t.abs().powf(p - 1.0))
            .collect();
        if let Some(i) = strictly_increasing(&neg) {
            witness = Some(neg_ts[i]);
            break 'outer4;
        }
    }
    checks.push(ConditionCheck {
        name: MONOTONE_QUOTIENT,
        statement: "t -> f(x,t)/|t|^(p-1) strictly increasing on each half-line",
        status: if witness.is_none() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!("{} sample points per half-line", grid.len()),
        witness,
    });

    let mut witness = None;
    'outer5: for &a in &weights {
        for s in [1.0, -1.0] {
            let ratios: Vec<f64> = grid
                .iter()
                .map(|&t| nl.primitive_with(a, signed(t, s)) / t.powf(p))
                .collect();
            let grows = ratios.last().unwrap() > &(1e6 * ratios[0]);
            match strictly_increasing(&ratios) {
                Some(i) => {
                    witness = Some(signed(grid[i], s));
                    break 'outer5;
                }
                None if !grows => {
                    witness = Some(signed(*grid.last().unwrap(), s));
                    break 'outer5;
                }
                None => {}
            }
        }
    }
    checks.push(ConditionCheck {
        name: SUPERLINEAR_PRIMITIVE,
        statement: "F(x,t)/|t|^p -> infinity as |t| -> infinity",
        status: if witness.is_none() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: "ratio must increase strictly and grow by more than 1e6 over the grid".into(),
        witness,
    });

    GrowthReport {
        p,
        dim,
        critical_exponent: pstar,
        checks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativePartCheck {
    /// `‖V_−‖_{r/(r−p)}` over the domain.
    pub norm: f64,
    /// `S^p` for the supplied Sobolev estimate `S`.
    pub threshold: f64,
    pub exponent: f64,
    pub pass: bool,
}

/// Compares the negative part `V_− = (|V| − V)/2` in `ℓ^{r/(r−p)}` with `S^p`.
pub fn negative_part_check(potential: &[f64], p: f64, r: f64, s_estimate: f64) -> Result<NegativePartCheck> {
    check_p(p)?;
    if !(r > p) {
        return Err(Error::InvalidExponent(format!("need r > p, got r = {r}, p = {p}")));
    }
    if !(s_estimate > 0.0) {
        return Err(Error::InvalidModel("Sobolev estimate must be positive".into()));
    }
    let negative = GridFunction::new(potential.iter().map(|v| (v.abs() - v) / 2.0).collect());
    let exponent = r / (r - p);
    let norm = lq_norm(&negative, exponent)?;
    let threshold = s_estimate.powf(p);
    Ok(NegativePartCheck {
        norm,
        threshold,
        exponent,
        pass: norm < threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Boundary;

    #[test]
    fn power_values_and_oddness() {
        let nl = Nonlinearity::power(4.0);
        assert_eq!(nl.f_with(1.0, 2.0), 8.0);
        assert_eq!(nl.primitive_with(1.0, 2.0), 4.0);
        assert_eq!(nl.f_with(1.0, -2.0), -8.0);
        assert_eq!(nl.f_with(1.0, 0.0), 0.0);
    }

    #[test]
    fn primitive_matches_central_difference() {
        let nl = Nonlinearity::power(4.0);
        let (t, h) = (1.3, 1e-6);
        let fd = (nl.primitive_with(1.0, t + h) - nl.primitive_with(1.0, t - h)) / (2.0 * h);
        let exact = nl.f_with(1.0, t);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs());
    }

    #[test]
    fn critical_exponent_boundary_fails_vanishing() {
        let at_boundary = check_growth_conditions(&Nonlinearity::power(6.0), 1.5, 2);
        assert_eq!(at_boundary.critical_exponent, Some(6.0));
        assert_eq!(at_boundary.get(VANISHING_AT_ZERO).unwrap().status, CheckStatus::Fail);
        let above = check_growth_conditions(&Nonlinearity::power(6.5), 1.5, 2);
        assert!(above.all_pass(), "{above:?}");
    }

    #[test]
    fn linear_growth_fails_monotone_quotient() {
        let r = check_growth_conditions(&Nonlinearity::power(2.0), 2.0, 3);
        assert_eq!(r.get(MONOTONE_QUOTIENT).unwrap().status, CheckStatus::Fail);
        assert_eq!(r.get(SUPERLINEAR_PRIMITIVE).unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn subcritical_quartic_in_three_dimensions() {
        let r = check_growth_conditions(&Nonlinearity::power(4.0), 2.0, 3);
        assert_eq!(r.critical_exponent, Some(6.0));
        for name in [GROWTH_BOUND, MONOTONE_QUOTIENT, SUPERLINEAR_PRIMITIVE] {
            assert_eq!(r.get(name).unwrap().status, CheckStatus::Pass, "{name}");
        }
        // q = 4 < p* = 6: f(t)/|t|^5 = |t|^{-2} blows up at the origin.
        let vanishing = r.get(VANISHING_AT_ZERO).unwrap();
        assert_eq!(vanishing.status, CheckStatus::Fail);
        let above = check_growth_conditions(&Nonlinearity::power(7.0), 2.0, 3);
        assert!(above.all_pass());
    }

    #[test]
    fn critical_checks_skipped_when_p_at_least_dim() {
        let r = check_growth_conditions(&Nonlinearity::power(6.0), 2.0, 2);
        assert_eq!(r.get(VANISHING_AT_ZERO).unwrap().status, CheckStatus::Skipped);
        assert_eq!(r.get(GROWTH_BOUND).unwrap().status, CheckStatus::Skipped);
        assert!(r.all_pass());
    }

    #[test]
    fn negative_part_norms() {
        let ok = negative_part_check(&[0.0, 1.0, 2.0], 2.0, 4.0, 1.0).unwrap();
        assert_eq!(ok.norm, 0.0);
        assert!(ok.pass);
        let one = negative_part_check(&[-0.5, 1.0], 2.0, 4.0, 1.0).unwrap();
        assert_eq!(one.exponent, 2.0);
        assert!((one.norm - 0.5).abs() < 1e-15);
        assert!(one.pass);
        assert!(!negative_part_check(&[-0.5], 2.0, 4.0, 0.7).unwrap().pass);
        let two = negative_part_check(&[-0.3, -0.4], 2.0, 4.0, 1.0).unwrap();
        assert!((two.norm - 0.5).abs() < 1e-15);
        assert!(negative_part_check(&[0.0], 2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn periodic_potential_is_periodic_on_torus() {
        let d = Domain::new(2, 6, Boundary::Torus, None).unwrap();
        let v = Potential::Periodic {
            period: 2,
            cells: vec![1.0, 2.0, 3.0, 4.0],
        };
        let vals = v.values(&d).unwrap();
        for x in 0..d.vertex_count() {
            let c = d.coords(x);
            for axis in 0..2 {
                let mut shift = vec![0i64; 2];
                shift[axis] = 2;
                let y = d.neighbor(&c, &shift).unwrap();
                assert_eq!(vals[x], vals[y]);
            }
        }
        let bad = Domain::new(2, 5, Boundary::Torus, None).unwrap();
        assert!(matches!(v.values(&bad), Err(Error::PeriodMismatch { .. })));
    }

    #[test]
    fn decaying_potential_stays_below_limit() {
        let d = Domain::new(1, 5, Boundary::Dirichlet, None).unwrap();
        let v = Potential::Decaying {
            limit: 1.0,
            deviations: vec![Deviation {
                at: vec![2],
                value: -0.5,
            }],
        };
        assert_eq!(v.values(&d).unwrap(), vec![1.0, 1.0, 0.5, 1.0, 1.0]);
        let up = Potential::Decaying {
            limit: 1.0,
            deviations: vec![Deviation {
                at: vec![2],
                value: 0.5,
            }],
        };
        assert!(up.values(&d).is_err());
    }
}
