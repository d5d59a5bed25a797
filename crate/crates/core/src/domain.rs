//! Finite lattice truncations of ℤ^N.
//!
//! A [`Domain`] is a box `{0, …, L−1}^N` whose adjacency is generated by a
//! symmetric set of integer offsets `S`. Two boundary modes are supported:
//!
//! * [`Boundary::Dirichlet`]: offsets leaving the box land on a ghost vertex
//!   whose value is identically zero. This is the zero extension of a finitely
//!   supported function on the infinite lattice.
//! * [`Boundary::Torus`]: coordinates wrap modulo `L`, so every vertex has
//!   degree exactly `|S|` and translations act exactly.
//!
//! Vertices are indexed row-major: the vertex with coordinates
//! `(c_0, …, c_{N−1})` has index `Σ c_i · L^{N−1−i}`, so the first axis varies
//! slowest. CSV output follows this order.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::GridFunction;

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Torus,
}

/// One undirected edge. `None` marks the ghost endpoint of a Dirichlet box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub tail: Option<usize>,
    pub head: Option<usize>,
}

impl Edge {
    pub fn is_ghost(&self) -> bool {
        self.tail.is_none() || self.head.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dim: usize,
    side: usize,
    boundary: Boundary,
    generators: Vec<Vec<i64>>,
    vertex_count: usize,
    edges: Vec<Edge>,
}

/// `±e_i` for `i = 1..dim`, in the order `e_1, −e_1, e_2, −e_2, …`.
pub fn unit_generators(dim: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let mut e = vec![0i64; dim];
        e[i] = 1;
        out.push(e.clone());
        e[i] = -1;
        out.push(e);
    }
    out
}

/// The first nonzero component is positive.
fn is_forward(s: &[i64]) -> bool {
    s.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

impl Domain {
    /// Builds a domain; `generators = None` selects the unit offsets `±e_i`.
    pub fn new(dim: usize, side: usize, boundary: Boundary, generators: Option<Vec<Vec<i64>>>) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidDomain("dim must be at least 1".into()));
        }
        if side < 1 {
            return Err(Error::InvalidDomain("side must be at least 1".into()));
        }
        let vertex_count = side
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidDomain("side^dim overflows".into()))?;
        let generators = generators.unwrap_or_else(|| unit_generators(dim));
        validate_generators(dim, &generators)?;

        let mut domain = Domain {
            dim,
            side,
            boundary,
            generators,
            vertex_count,
            edges: Vec::new(),
        };
        domain.edges = domain.build_edges();
        if !domain.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(domain)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn generators(&self) -> &[Vec<i64>] {
        &self.generators
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Every undirected edge exactly once, in canonical order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_torus(&self) -> bool {
        self.boundary == Boundary::Torus
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        let mut rem = index;
        for axis in (0..self.dim).rev() {
            c[axis] = rem % self.side;
            rem /= self.side;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Index of `coords + offset`, or `None` when it leaves a Dirichlet box.
    pub fn neighbor(&self, coords: &[usize], offset: &[i64]) -> Option<usize> {
        let l = self.side as i64;
        let mut idx = 0usize;
        for (&c, &s) in coords.iter().zip(offset) {
            let mut y = c as i64 + s;
            match self.boundary {
                Boundary::Torus => y = y.rem_euclid(l),
                Boundary::Dirichlet => {
                    if y < 0 || y >= l {
                        return None;
                    }
                }
            }
            idx = idx * self.side + y as usize;
        }
        Some(idx)
    }

    /// Number of edge endpoints at `vertex`; always `|S|` by construction.
    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.tail == Some(vertex)) as usize + (e.head == Some(vertex)) as usize)
            .sum()
    }

    fn build_edges(&self) -> Vec<Edge> {
        let forward: Vec<&Vec<i64>> = self.generators.iter().filter(|s| is_forward(s)).collect();
        let mut edges = Vec::with_capacity(self.vertex_count * forward.len());
        for x in 0..self.vertex_count {
            let c = self.coords(x);
            for s in &forward {
                if self.boundary == Boundary::Dirichlet {
                    let back: Vec<i64> = s.iter().map(|v| -v).collect();
                    if self.neighbor(&c, &back).is_none() {
                        edges.push(Edge {
                            tail: None,
                            head: Some(x),
                        });
                    }
                }
                edges.push(Edge {
                    tail: Some(x),
                    head: self.neighbor(&c, s),
                });
            }
        }
        edges
    }

    fn is_connected(&self) -> bool {
        // The ghost vertex, when present, takes index `vertex_count`.
        let n = self.vertex_count + 1;
        let mut adj = vec![Vec::new(); n];
        let id = |v: Option<usize>| v.unwrap_or(self.vertex_count);
        for e in &self.edges {
            let (a, b) = (id(e.tail), id(e.head));
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen[..self.vertex_count].iter().all(|&s| s)
    }

    /// `v(x) = u(x − k)` with coordinates taken modulo the side.
    pub fn translate(&self, u: &GridFunction, shift: &[i64]) -> Result<GridFunction> {
        if !self.is_torus() {
            return Err(Error::NotTorus);
        }
        self.check_len(u)?;
        if shift.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let back: Vec<i64> = shift.iter().map(|k| -k).collect();
        let values = (0..self.vertex_count)
            .map(|x| {
                let src = self.neighbor(&self.coords(x), &back).expect("torus neighbor");
                u[src]
            })
            .collect();
        Ok(GridFunction::new(values))
    }

    pub(crate) fn check_len(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.vertex_count {
            return Err(Error::LengthMismatch {
                expected: self.vertex_count,
                got: u.len(),
            });
        }
        Ok(())
    }
}

fn validate_generators(dim: usize, generators: &[Vec<i64>]) -> Result<()> {
    if generators.is_empty() {
        return Err(Error::InvalidDomain("generator set is empty".into()));
    }
    for (i, s) in generators.iter().enumerate() {
        if s.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "generator {s:?} has {} components, expected {dim}",
                s.len()
            )));
        }
        if s.iter().all(|&c| c == 0) {
            return Err(Error::ZeroGenerator);
        }
        if generators[..i].contains(s) {
            return Err(Error::DuplicateGenerator(s.clone()));
        }
        let neg: Vec<i64> = s.iter().map(|c| -c).collect();
        if !generators.contains(&neg) {
            return Err(Error::AsymmetricGenerators(s.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_of_three_has_ghost_edges_at_both_ends() {
        let d = Domain::new(1, 3, Boundary::Dirichlet, None).unwrap();
        assert_eq!(d.vertex_count(), 3);
        let expected = [
            Edge {
                tail: None,
                head: Some(0),
            },
            Edge {
                tail: Some(0),
                head: Some(1),
            },
            Edge {
                tail: Some(1),
                head: Some(2),
            },
            Edge {
                tail: Some(2),
                head: None,
            },
        ];
        assert_eq!(d.edges(), &expected);
    }

    #[test]
    fn planar_torus_is_four_regular() {
        let d = Domain::new(2, 4, Boundary::Torus, None).unwrap();
        assert_eq!(d.vertex_count(), 16);
        assert_eq!(d.edges().len(), 32);
        assert!((0..16).all(|x| d.degree(x) == 4));
    }

    #[test]
    fn cyclic_cayley_graph_with_two_generators() {
        let gens = vec![vec![1], vec![-1], vec![2], vec![-2]];
        let d = Domain::new(1, 5, Boundary::Torus, Some(gens)).unwrap();
        assert_eq!(d.vertex_count(), 5);
        assert_eq!(d.edges().len(), 10);
        assert!((0..5).all(|x| d.degree(x) == 4));
    }

    #[test]
    fn rejects_bad_generator_sets() {
        let asym = Domain::new(1, 4, Boundary::Torus, Some(vec![vec![1]]));
        assert_eq!(asym.unwrap_err(), Error::AsymmetricGenerators(vec![1]));
        let zero = Domain::new(1, 4, Boundary::Torus, Some(vec![vec![0], vec![1], vec![-1]]));
        assert_eq!(zero.unwrap_err(), Error::ZeroGenerator);
        let dup = Domain::new(1, 4, Boundary::Torus, Some(vec![vec![1], vec![-1], vec![1]]));
        assert_eq!(dup.unwrap_err(), Error::DuplicateGenerator(vec![1]));
        assert!(Domain::new(1, 0, Boundary::Torus, None).is_err());
        assert!(Domain::new(0, 3, Boundary::Torus, None).is_err());
    }

    #[test]
    fn even_steps_on_even_cycle_are_disconnected() {
        let gens = vec![vec![2], vec![-2]];
        let d = Domain::new(1, 4, Boundary::Torus, Some(gens.clone()));
        assert_eq!(d.unwrap_err(), Error::Disconnected);
        // The ghost vertex ties the two parity classes together in a box.
        assert!(Domain::new(1, 4, Boundary::Dirichlet, Some(gens)).is_ok());
    }

    #[test]
    fn default_generators_connect_every_side() {
        for side in 1..7 {
            for dim in 1..4 {
                assert!(Domain::new(dim, side, Boundary::Torus, None).is_ok());
                assert!(Domain::new(dim, side, Boundary::Dirichlet, None).is_ok());
            }
        }
    }

    #[test]
    fn row_major_indexing() {
        let d = Domain::new(2, 3, Boundary::Dirichlet, None).unwrap();
        assert_eq!(d.index(&[1, 2]), 5);
        assert_eq!(d.coords(5), vec![1, 2]);
    }

    #[test]
    fn cyclic_shift() {
        let d = Domain::new(1, 4, Boundary::Torus, None).unwrap();
        let u = GridFunction::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.translate(&u, &[1]).unwrap().values(), &[4.0, 1.0, 2.0, 3.0]);
        assert_eq!(d.translate(&u, &[0]).unwrap(), u);
        assert_eq!(d.translate(&u, &[4]).unwrap(), u);
    }

    #[test]
    fn translate_requires_torus() {
        let d = Domain::new(1, 4, Boundary::Dirichlet, None).unwrap();
        let u = GridFunction::zeros(4);
        assert_eq!(d.translate(&u, &[1]).unwrap_err(), Error::NotTorus);
    }

    #[test]
    fn degree_sum_counts_ghost_edges_once() {
        for (dim, side) in [(1, 5), (2, 4), (3, 3)] {
            let d = Domain::new(dim, side, Boundary::Dirichlet, None).unwrap();
            let ghost = d.edges().iter().filter(|e| e.is_ghost()).count();
            let interior = d.edges().len() - ghost;
            let degree_sum: usize = (0..d.vertex_count()).map(|x| d.degree(x)).sum();
            assert_eq!(degree_sum, d.vertex_count() * 2 * dim);
            assert_eq!(2 * interior + ghost, degree_sum);
            // The ghost vertex carries one endpoint per ghost edge.
            assert_eq!(d.edges().len(), (degree_sum + ghost) / 2);
        }
    }
}
