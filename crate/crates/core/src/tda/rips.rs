//! Rips persistence in H0 and H1 straight from a distance matrix.
//!
//! H0 comes from union-find over edges in filtration order. H1 reduces the
//! coboundary columns of the edges from the last edge backwards, skipping the
//! edges that already killed a component, since their columns reduce to zero.
//! The pairing equals that of [`super::reduce_boundary`] on the same filtration.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::embed::DistanceMatrix;
use super::reduction::PersistencePair;

#[derive(Debug, Clone, Copy)]
struct Edge {
    value: f64,
    a: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tri {
    value: f64,
    verts: [usize; 3],
}

fn tri_cmp(x: &Tri, y: &Tri) -> Ordering {
    x.value.total_cmp(&y.value).then_with(|| x.verts.cmp(&y.verts))
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn coboundary(d: &DistanceMatrix, e: &Edge, max_eps: f64) -> Vec<Tri> {
    let mut col: Vec<Tri> = (0..d.len())
        .filter(|&k| k != e.a && k != e.b)
        .filter_map(|k| {
            let mut v = [e.a, e.b, k];
            v.sort_unstable();
            let value = d.get(v[0], v[1]).max(d.get(v[0], v[2])).max(d.get(v[1], v[2]));
            (value <= max_eps).then_some(Tri { value, verts: v })
        })
        .collect();
    col.sort_unstable_by(tri_cmp);
    col
}

fn xor_sorted(a: &[Tri], b: &[Tri]) -> Vec<Tri> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match tri_cmp(&a[i], &b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// H0 and H1 pairs of the Rips filtration of `d` truncated at `max_eps`.
/// Essential classes carry `death = INFINITY`; zero-persistence pairs are kept.
pub fn rips_persistence(d: &DistanceMatrix, max_eps: f64) -> Vec<PersistencePair> {
    let n = d.len();
    let mut edges: Vec<Edge> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .map(|(a, b)| Edge { value: d.get(a, b), a, b })
        .filter(|e| e.value <= max_eps)
        .collect();
    edges.sort_unstable_by(|x, y| x.value.total_cmp(&y.value).then((x.a, x.b).cmp(&(y.a, y.b))));

    let mut pairs = Vec::new();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut negative = vec![false; edges.len()];
    for (i, e) in edges.iter().enumerate() {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            negative[i] = true;
            pairs.push(PersistencePair { dim: 0, birth: 0.0, death: e.value });
        }
    }
    let components = (0..n).filter(|&v| find(&mut parent, v) == v).count();
    pairs.extend((0..components).map(|_| PersistencePair { dim: 0, birth: 0.0, death: f64::INFINITY }));

    let mut owner: HashMap<[usize; 3], Vec<Tri>> = HashMap::new();
    for (i, e) in edges.iter().enumerate().rev() {
        if negative[i] {
            continue;
        }
        let mut col = coboundary(d, e, max_eps);
        while let Some(pivot) = col.first() {
            match owner.get(&pivot.verts) {
                Some(other) => col = xor_sorted(&col, other),
                None => break,
            }
        }
        match col.first() {
            Some(pivot) => {
                pairs.push(PersistencePair { dim: 1, birth: e.value, death: pivot.value });
                owner.insert(pivot.verts, col);
            }
            None => pairs.push(PersistencePair { dim: 1, birth: e.value, death: f64::INFINITY }),
        }
    }
    pairs
}
