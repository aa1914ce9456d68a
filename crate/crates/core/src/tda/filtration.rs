use std::cmp::Ordering;

use super::embed::DistanceMatrix;

/// A vertex, edge or triangle with its filtration value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    verts: [usize; 3],
    dim: usize,
    pub value: f64,
}

impl Simplex {
    /// `vertices` must be strictly increasing and hold 1 to 3 entries.
    pub fn new(vertices: &[usize], value: f64) -> Self {
        assert!(
            (1..=3).contains(&vertices.len()),
            "only vertices, edges and triangles are supported"
        );
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let mut verts = [0; 3];
        verts[..vertices.len()].copy_from_slice(vertices);
        Self { verts, dim: vertices.len() - 1, value }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts[..=self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Codimension-one faces, in lexicographic order.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let v = self.vertices();
        if self.dim == 0 {
            return Vec::new();
        }
        (0..v.len())
            .rev()
            .map(|skip| v.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x).collect())
            .collect()
    }

    fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.dim.cmp(&other.dim))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

/// Simplices ordered by (value, dimension, vertex lexicographic order).
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
    pub max_dim: usize,
    pub max_eps: f64,
}

impl Filtration {
    /// Sorts arbitrary simplices into filtration order. Face closure is checked at reduction time.
    pub fn from_simplices(mut simplices: Vec<Simplex>, max_eps: f64) -> Self {
        simplices.sort_by(Simplex::filtration_cmp);
        Self { simplices, max_dim: 2, max_eps }
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_dim(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim == dim).count()
    }
}

/// Vietoris-Rips filtration up to triangles, truncated at `max_eps`.
pub fn build_rips_filtration(d: &DistanceMatrix, max_eps: f64) -> Filtration {
    let n = d.len();
    let mut simplices: Vec<Simplex> = (0..n).map(|v| Simplex::new(&[v], 0.0)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            if dij > max_eps {
                continue;
            }
            simplices.push(Simplex::new(&[i, j], dij));
            for k in (j + 1)..n {
                let (dik, djk) = (d.get(i, k), d.get(j, k));
                if dik <= max_eps && djk <= max_eps {
                    simplices.push(Simplex::new(&[i, j, k], dij.max(dik).max(djk)));
                }
            }
        }
    }
    Filtration::from_simplices(simplices, max_eps)
}
