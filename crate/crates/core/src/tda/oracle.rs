//! Brute-force Betti numbers of Rips complexes by explicit Z/2 rank computation.
//!
//! Independent of the filtration/reduction path and meant for checking it on
//! small clouds (at most 12 points, so every chain fits in a `u128`).

use super::embed::DistanceMatrix;

pub const MAX_ORACLE_POINTS: usize = 12;

struct Complex {
    /// all edges of the complete graph, indexed globally
    edges: Vec<(usize, usize, f64)>,
    /// all triangles with their boundary as an edge bitset
    triangles: Vec<(u128, f64)>,
    n: usize,
}

impl Complex {
    #[allow(clippy::needless_range_loop)]
    fn new(d: &DistanceMatrix) -> Self {
        let n = d.len();
        assert!(n <= MAX_ORACLE_POINTS, "betti oracle supports at most {MAX_ORACLE_POINTS} points");
        let mut edge_id = vec![vec![usize::MAX; n]; n];
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edge_id[i][j] = edges.len();
                edges.push((i, j, d.get(i, j)));
            }
        }
        let mut triangles = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let boundary = (1u128 << edge_id[i][j]) | (1u128 << edge_id[i][k]) | (1u128 << edge_id[j][k]);
                    let value = d.get(i, j).max(d.get(i, k)).max(d.get(j, k));
                    triangles.push((boundary, value));
                }
            }
        }
        Self { edges, triangles, n }
    }

    /// Basis of the p-cycles present at scale `eps`.
    fn cycles(&self, eps: f64, p: usize) -> Vec<u128> {
        match p {
            0 => (0..self.n).map(|v| 1u128 << v).collect(),
            1 => {
                // Gaussian elimination on the edge boundaries, tracking which edges were combined.
                let mut reduced: Vec<(u128, u128)> = Vec::new();
                let mut kernel = Vec::new();
                for (id, &(a, b, value)) in self.edges.iter().enumerate() {
                    if value > eps {
                        continue;
                    }
                    let mut boundary = (1u128 << a) | (1u128 << b);
                    let mut combo = 1u128 << id;
                    for &(rb, rc) in &reduced {
                        if boundary & lowest_bit(rb) != 0 {
                            boundary ^= rb;
                            combo ^= rc;
                        }
                    }
                    if boundary == 0 {
                        kernel.push(combo);
                    } else {
                        reduced.push((boundary, combo));
                    }
                }
                kernel
            }
            _ => panic!("oracle computes H0 and H1 only"),
        }
    }

    /// Spanning set of the p-boundaries present at scale `eps`.
    fn boundaries(&self, eps: f64, p: usize) -> Vec<u128> {
        match p {
            0 => self
                .edges
                .iter()
                .filter(|e| e.2 <= eps)
                .map(|&(a, b, _)| (1u128 << a) | (1u128 << b))
                .collect(),
            1 => self.triangles.iter().filter(|t| t.1 <= eps).map(|t| t.0).collect(),
            _ => panic!("oracle computes H0 and H1 only"),
        }
    }
}

fn lowest_bit(x: u128) -> u128 {
    x & x.wrapping_neg()
}

fn rank(vectors: impl IntoIterator<Item = u128>) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for mut v in vectors {
        for &b in &basis {
            if v & lowest_bit(b) != 0 {
                v ^= b;
            }
        }
        if v != 0 {
            // keep the basis fully reduced on pivot bits
            let pivot = lowest_bit(v);
            for b in basis.iter_mut() {
                if *b & pivot != 0 {
                    *b ^= v;
                }
            }
            basis.push(v);
        }
    }
    basis.len()
}

/// Rank of the map H_p(VR(eps_i)) -> H_p(VR(eps_j)), for `eps_i <= eps_j`.
///
/// Computed as dim(Z_p(i) + B_p(j)) - dim B_p(j).
pub fn persistent_betti(d: &DistanceMatrix, eps_i: f64, eps_j: f64, p: usize) -> usize {
    assert!(eps_i <= eps_j);
    let complex = Complex::new(d);
    persistent_betti_in(&complex, eps_i, eps_j, p)
}

fn persistent_betti_in(complex: &Complex, eps_i: f64, eps_j: f64, p: usize) -> usize {
    let boundaries = complex.boundaries(eps_j, p);
    let rank_b = rank(boundaries.iter().copied());
    rank(complex.cycles(eps_i, p).into_iter().chain(boundaries)) - rank_b
}

/// Betti number of the Rips complex at scale `eps`.
pub fn betti_at(d: &DistanceMatrix, eps: f64, p: usize) -> usize {
    persistent_betti(d, eps, eps, p)
}

/// Diagram reconstructed from persistent Betti numbers over all critical values.
///
/// Multiplicity of `(v_i, v_j)` is
/// `(b[i][j-1] - b[i][j]) - (b[i-1][j-1] - b[i-1][j])`; essential points at `v_i`
/// get `b[i][k] - b[i-1][k]` where `k` is the last critical value. Zero-persistence
/// points are invisible to this formula and never appear.
pub fn diagram_from_betti(d: &DistanceMatrix, p: usize) -> Vec<(f64, f64)> {
    let complex = Complex::new(d);
    let values = d.critical_values();
    let k = values.len();
    // b[i][j] with 1-based scale indices; row/column 0 stands for the empty complex.
    let mut b = vec![vec![0i64; k + 1]; k + 1];
    for i in 1..=k {
        for j in i..=k {
            b[i][j] = persistent_betti_in(&complex, values[i - 1], values[j - 1], p) as i64;
        }
    }
    let mut points = Vec::new();
    for i in 1..=k {
        for j in (i + 1)..=k {
            let mu = (b[i][j - 1] - b[i][j]) - (b[i - 1][j - 1] - b[i - 1][j]);
            assert!(mu >= 0, "negative multiplicity");
            for _ in 0..mu {
                points.push((values[i - 1], values[j - 1]));
            }
        }
        let essential = b[i][k] - b[i - 1][k];
        for _ in 0..essential {
            points.push((values[i - 1], f64::INFINITY));
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tda::embed::{pairwise_distances, PointCloud};

    fn square() -> DistanceMatrix {
        let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        pairwise_distances(&PointCloud { points, dim: 2, delay: 1 })
    }

    #[test]
    fn square_betti_numbers() {
        let d = square();
        assert_eq!(betti_at(&d, 0.5, 0), 4);
        assert_eq!(betti_at(&d, 1.0, 0), 1);
        assert_eq!(betti_at(&d, 1.2, 1), 1);
        assert_eq!(betti_at(&d, 1.5, 1), 0);
    }

    #[test]
    fn square_diagram() {
        let d = square();
        let mut h0 = diagram_from_betti(&d, 0);
        h0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(h0, vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, f64::INFINITY)]);
        assert_eq!(diagram_from_betti(&d, 1), vec![(1.0, 2f64.sqrt())]);
    }

    #[test]
    fn persistent_betti_tracks_survival() {
        let d = square();
        // the 4-cycle born at 1 does not survive to sqrt(2)
        assert_eq!(persistent_betti(&d, 1.0, 1.2, 1), 1);
        assert_eq!(persistent_betti(&d, 1.0, 2f64.sqrt(), 1), 0);
    }

    #[test]
    fn rank_over_z2() {
        assert_eq!(rank([0b011, 0b110, 0b101]), 2);
        assert_eq!(rank([0b1, 0b10, 0b100]), 3);
        assert_eq!(rank([0u128]), 0);
    }
}
