//! Finite ordered simplicial complexes used as nerves of open covers.
//!
//! Simplices are strictly increasing vertex tuples and every degree is kept
//! as a lexicographically sorted list, so the position of a simplex in
//! [`Nerve::simplices`] is its cochain coordinate.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Largest simplex dimension a nerve may carry.
pub const MAX_DIM: usize = 4;

/// Strictly increasing vertex tuple.
pub type Simplex = Vec<usize>;

#[derive(Debug, Clone)]
pub struct Nerve {
    vertex_count: usize,
    simplices: Vec<Vec<Simplex>>,
    index: Vec<HashMap<Simplex, usize>>,
}

impl PartialEq for Nerve {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count == other.vertex_count && self.simplices == other.simplices
    }
}

impl Eq for Nerve {}

impl Nerve {
    /// Downward closure of the given maximal simplices on `vertex_count`
    /// vertices. Every vertex is a 0-simplex whether or not it is listed.
    pub fn build(vertex_count: usize, maximal: &[Vec<usize>]) -> Result<Self> {
        let mut levels: Vec<BTreeSet<Simplex>> = vec![BTreeSet::new(); MAX_DIM + 1];
        for v in 0..vertex_count {
            levels[0].insert(vec![v]);
        }
        for raw in maximal {
            if raw.is_empty() {
                continue;
            }
            if let Some(&v) = raw.iter().find(|&&v| v >= vertex_count) {
                return Err(Error::VertexOutOfRange { vertex: v, vertex_count });
            }
            let mut s = raw.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DegenerateSimplex(raw.clone()));
            }
            if s.len() > MAX_DIM + 1 {
                return Err(Error::DimensionTooLarge(raw.clone()));
            }
            // all nonempty subsets
            let n = s.len();
            for mask in 1u32..(1 << n) {
                let face: Simplex = (0..n).filter(|&b| mask & (1 << b) != 0).map(|b| s[b]).collect();
                levels[face.len() - 1].insert(face);
            }
        }
        let simplices: Vec<Vec<Simplex>> = levels.into_iter().map(|l| l.into_iter().collect()).collect();
        let index = simplices
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(Nerve { vertex_count, simplices, index })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Canonical sorted list of `k`-simplices (empty above the cap).
    pub fn simplices(&self, k: usize) -> &[Simplex] {
        self.simplices.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices(k).len()
    }

    /// Cochain coordinate of a strictly increasing simplex.
    pub fn index_of(&self, simplex: &[usize]) -> Option<usize> {
        self.index.get(simplex.len().checked_sub(1)?)?.get(simplex).copied()
    }

    /// Coordinate of the ordered edge `(min(i,j), max(i,j))`.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.index_of(&[a, b])
    }

    pub fn dimension(&self) -> usize {
        (0..=MAX_DIM).rev().find(|&k| !self.simplices[k].is_empty()).unwrap_or(0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=MAX_DIM)
            .map(|k| if k % 2 == 0 { self.count(k) as i64 } else { -(self.count(k) as i64) })
            .sum()
    }

    /// Maximal simplices (those that are not a face of anything listed).
    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        let mut out = Vec::new();
        for k in 0..=MAX_DIM {
            for s in self.simplices(k) {
                let covered = self.simplices(k + 1).iter().any(|t| s.iter().all(|v| t.contains(v)));
                if !covered {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    /// Triangulated circle on three vertices.
    pub fn circle() -> Self {
        Self::build(3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).expect("valid circle")
    }

    /// The full simplex on `n + 1` vertices.
    pub fn simplex(n: usize) -> Result<Self> {
        Self::build(n + 1, &[(0..=n).collect()])
    }

    /// Boundary of the `n`-simplex, a triangulated `(n-1)`-sphere.
    pub fn boundary_of_simplex(n: usize) -> Result<Self> {
        let faces: Vec<Vec<usize>> =
            (0..=n).map(|skip| (0..=n).filter(|&v| v != skip).collect()).collect();
        Self::build(n + 1, &faces)
    }

    /// Minimal six-vertex triangulation of the real projective plane.
    pub fn rp2_six() -> Self {
        let tris = [
            [0, 1, 3],
            [0, 1, 4],
            [0, 2, 3],
            [0, 2, 5],
            [0, 4, 5],
            [1, 2, 4],
            [1, 2, 5],
            [1, 3, 5],
            [2, 3, 4],
            [3, 4, 5],
        ];
        let maximal: Vec<Vec<usize>> = tris.iter().map(|t| t.to_vec()).collect();
        Self::build(6, &maximal).expect("valid RP2 triangulation")
    }

    /// Staircase triangulation of the product of two ordered complexes.
    ///
    /// Vertex `(a, b)` gets index `a * other.vertex_count() + b`; simplices
    /// are chains that are weakly increasing in both coordinates.
    pub fn product(&self, other: &Nerve) -> Result<Self> {
        let m = other.vertex_count;
        let mut maximal = Vec::new();
        for s in self.maximal_simplices() {
            for t in other.maximal_simplices() {
                staircases(&s, &t, &mut Vec::new(), 0, 0, &mut |path| {
                    maximal.push(path.iter().map(|&(a, b)| s[a] * m + t[b]).collect());
                });
            }
        }
        Self::build(self.vertex_count * m, &maximal)
    }
}

fn staircases(
    s: &[usize],
    t: &[usize],
    path: &mut Vec<(usize, usize)>,
    a: usize,
    b: usize,
    emit: &mut dyn FnMut(&[(usize, usize)]),
) {
    path.push((a, b));
    if a + 1 == s.len() && b + 1 == t.len() {
        emit(path);
    } else {
        if a + 1 < s.len() {
            staircases(s, t, path, a + 1, b, emit);
        }
        if b + 1 < t.len() {
            staircases(s, t, path, a, b + 1, emit);
        }
    }
    path.pop();
}

/// Sign-ordered facets `(r, face)` of a simplex: `face` drops vertex `r`.
pub fn facets(simplex: &[usize]) -> impl Iterator<Item = (usize, Simplex)> + '_ {
    (0..simplex.len()).map(move |r| {
        let face = simplex.iter().enumerate().filter(|&(i, _)| i != r).map(|(_, &v)| v).collect();
        (r, face)
    })
}
