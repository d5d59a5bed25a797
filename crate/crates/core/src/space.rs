//! Grid functions and the norms used throughout: `ℓ^q`, the Dirichlet
//! `p`-seminorm over edges, and the potential-weighted energy norm
//!
//! ```text
//! ‖u‖^p = Σ_{edges} |u(y) − u(x)|^p + Σ_x V(x) |u(x)|^p
//! ```
//!
//! Each undirected edge enters the sum once; ghost endpoints contribute the
//! value zero. Sums run in edge-list order so results are reproducible.

use std::ops::Index;

use crate::domain::{Domain, Edge};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Value at an edge endpoint; the ghost vertex reads as zero.
    #[inline]
    pub fn at(&self, node: Option<usize>) -> f64 {
        node.map_or(0.0, |i| self.values[i])
    }

    #[inline]
    pub fn difference(&self, edge: &Edge) -> f64 {
        self.at(edge.head) - self.at(edge.tail)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c · other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// One row per vertex: coordinates followed by the value, with a header.
    /// Floats are printed in shortest round-trip form.
    pub fn to_csv(&self, domain: &Domain) -> String {
        let mut out = String::new();
        for axis in 0..domain.dim() {
            out.push_str(&format!("x{axis},"));
        }
        out.push_str("value\n");
        for (i, v) in self.values.iter().enumerate() {
            for c in domain.coords(i) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    /// Parses the layout written by [`GridFunction::to_csv`]. Rows may come in
    /// any order; every vertex must appear exactly once.
    pub fn from_csv(domain: &Domain, text: &str) -> Result<Self> {
        let mut values = vec![f64::NAN; domain.vertex_count()];
        let mut seen = vec![false; domain.vertex_count()];
        let bad = |line: usize, msg: &str| Error::InvalidModel(format!("csv line {line}: {msg}"));
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != domain.dim() + 1 {
                return Err(bad(lineno + 1, "wrong number of columns"));
            }
            let coords = fields[..domain.dim()]
                .iter()
                .map(|f| f.parse::<usize>().ok().filter(|&c| c < domain.side()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad(lineno + 1, "coordinate out of range"))?;
            let value: f64 = fields[domain.dim()]
                .parse()
                .map_err(|_| bad(lineno + 1, "unparsable value"))?;
            if !value.is_finite() {
                return Err(bad(lineno + 1, "non-finite value"));
            }
            let idx = domain.index(&coords);
            if seen[idx] {
                return Err(bad(lineno + 1, "duplicate vertex"));
            }
            seen[idx] = true;
            values[idx] = value;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidModel("csv does not cover every vertex".into()));
        }
        Ok(Self { values })
    }
}

impl Index<usize> for GridFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl From<Vec<f64>> for GridFunction {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(format!("p must be a finite real > 1, got {p}")));
    }
    Ok(())
}

/// `(Σ|u|^q)^{1/q}`, or `max |u|` for `q = ∞`.
pub fn lq_norm(u: &GridFunction, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidExponent(format!("q must be >= 1, got {q}")));
    }
    if q == f64::INFINITY {
        return Ok(u.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    Ok(u.values.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q))
}

/// `Σ_edges |∇u|^p`
pub fn dirichlet_energy(domain: &Domain, u: &GridFunction, p: f64) -> f64 {
    domain.edges().iter().map(|e| u.difference(e).abs().powf(p)).sum()
}

pub fn dirichlet_norm(domain: &Domain, u: &GridFunction, p: f64) -> Result<f64> {
    check_p(p)?;
    domain.check_len(u)?;
    Ok(dirichlet_energy(domain, u, p).powf(1.0 / p))
}

/// `Σ_edges |∇u|^p + Σ V|u|^p`; may be negative when `V` is.
pub fn e_norm_pow(domain: &Domain, u: &GridFunction, potential: &[f64], p: f64) -> f64 {
    let potential_part: f64 = potential.iter().zip(&u.values).map(|(v, x)| v * x.abs().powf(p)).sum();
    dirichlet_energy(domain, u, p) + potential_part
}

/// Energy norm with a vertex-wise potential table (see `Potential::values`).
pub fn e_norm(domain: &Domain, u: &GridFunction, potential: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    domain.check_len(u)?;
    if potential.len() != u.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: potential.len(),
        });
    }
    let s = e_norm_pow(domain, u, potential, p);
    if s < 0.0 {
        return Err(Error::IndefiniteNorm(s));
    }
    Ok(s.powf(1.0 / p))
}
