use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::filtration::Filtration;
use crate::error::{Error, Result};

/// A birth/death pair. Essential classes carry `death = f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

type FaceKey = [usize; 3];

fn key(vertices: &[usize]) -> FaceKey {
    let mut k = [usize::MAX; 3];
    k[..vertices.len()].copy_from_slice(vertices);
    k
}

/// Standard left-to-right column reduction of the Z/2 boundary matrix.
///
/// Columns are reduced in filtration order; a column whose lowest nonzero entry
/// ends up at row `i` pairs simplex `i` (birth) with the column's simplex (death).
/// Unpaired vertices and edges become essential classes. Zero-persistence pairs
/// are kept. Once every edge has been seen and every cycle-creating edge has been
/// killed, the remaining triangle columns are skipped: each of them must reduce to
/// zero because every candidate pivot row is already taken.
pub fn reduce_boundary(f: &Filtration) -> Result<Vec<PersistencePair>> {
    let n = f.simplices.len();
    let index: HashMap<FaceKey, usize> =
        f.simplices.iter().enumerate().map(|(i, s)| (key(s.vertices()), i)).collect();
    if index.len() != n {
        return Err(Error::MalformedFiltration("duplicate simplex".into()));
    }

    let mut edges_left = f.count_dim(1);
    let mut unkilled_cycles = 0usize;
    // pivot_owner[row] = column whose reduced low is `row`
    let mut pivot_owner: Vec<Option<usize>> = vec![None; n];
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut paired = vec![false; n];
    let mut pairs = Vec::new();

    for (j, simplex) in f.simplices.iter().enumerate() {
        if simplex.dim() > 2 {
            return Err(Error::MalformedFiltration(format!("simplex {j} has dimension > 2")));
        }
        if simplex.dim() == 2 && edges_left == 0 && unkilled_cycles == 0 {
            continue;
        }
        let mut column = Vec::with_capacity(simplex.dim() + 1);
        for face in simplex.faces() {
            match index.get(&key(&face)) {
                Some(&i) if i < j => column.push(i),
                _ => {
                    return Err(Error::MalformedFiltration(format!(
                        "face {face:?} of simplex {:?} does not precede it",
                        simplex.vertices()
                    )))
                }
            }
        }
        column.sort_unstable();

        while let Some(&low) = column.last() {
            match pivot_owner[low] {
                Some(other) => column = xor_sorted(&column, &columns[other]),
                None => break,
            }
        }

        if simplex.dim() == 1 {
            edges_left -= 1;
        }
        match column.last() {
            Some(&low) => {
                pivot_owner[low] = Some(j);
                paired[low] = true;
                paired[j] = true;
                let born = &f.simplices[low];
                pairs.push(PersistencePair { dim: born.dim(), birth: born.value, death: simplex.value });
                if born.dim() == 1 {
                    unkilled_cycles -= 1;
                }
            }
            None if simplex.dim() == 1 => unkilled_cycles += 1,
            None => {}
        }
        columns[j] = column;
    }

    for (i, s) in f.simplices.iter().enumerate() {
        if !paired[i] && s.dim() < 2 {
            pairs.push(PersistencePair { dim: s.dim(), birth: s.value, death: f64::INFINITY });
        }
    }
    Ok(pairs)
}

fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
