use crate::error::{Error, Result};

/// Delay-coordinate point cloud of a single channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub dim: usize,
    pub delay: usize,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds the cloud of lagged vectors `(x[k], x[k + delay], ..., x[k + (dim - 1) * delay])`.
pub fn delay_embed(series: &[f64], dim: usize, delay: usize) -> Result<PointCloud> {
    if dim == 0 || delay == 0 {
        return Err(Error::Config(format!(
            "delay embedding needs dim >= 1 and delay >= 1 (got dim={dim}, delay={delay})"
        )));
    }
    let span = (dim - 1) * delay;
    if series.len() < span + 1 {
        return Err(Error::SeriesTooShort { len: series.len(), required: span + 1 });
    }
    let points = (0..series.len() - span)
        .map(|k| (0..dim).map(|j| series[k + j * delay]).collect())
        .collect();
    Ok(PointCloud { points, dim, delay })
}

/// Dense symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a row-major `n x n` buffer, checking symmetry and a zero diagonal.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::ShapeMismatch {
                op: "DistanceMatrix::from_rows",
                detail: format!("expected {} entries, got {}", n * n, data.len()),
            });
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidData(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] || data[i * n + j].is_nan() {
                    return Err(Error::InvalidData(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Distinct entries in increasing order, always including 0.
    pub fn critical_values(&self) -> Vec<f64> {
        let mut values = self.data.clone();
        values.push(0.0);
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }
}

/// Euclidean distances between all pairs of points.
pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    let n = cloud.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&cloud.points[i], &cloud.points[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeds_with_unit_delay() {
        let cloud = delay_embed(&[0.0, 1.0, 2.0, 3.0], 2, 1).unwrap();
        assert_eq!(cloud.points, vec![vec![0.0, 1.0], vec![1.0, 2.0], vec![2.0, 3.0]]);
    }

    #[test]
    fn dim_one_is_identity() {
        let cloud = delay_embed(&[5.0, 7.0], 1, 1).unwrap();
        assert_eq!(cloud.points, vec![vec![5.0], vec![7.0]]);
    }

    #[test]
    fn count_follows_span() {
        let cloud = delay_embed(&[0.0, 1.0, 2.0, 3.0, 4.0], 3, 2).unwrap();
        assert_eq!(cloud.points, vec![vec![0.0, 2.0, 4.0]]);
    }

    #[test]
    fn too_short_is_an_error() {
        let err = delay_embed(&[0.0, 1.0, 2.0, 3.0], 3, 2).unwrap_err();
        assert!(matches!(err, Error::SeriesTooShort { len: 4, required: 5 }));
    }

    #[test]
    fn distances() {
        let pc = |pts: Vec<Vec<f64>>| PointCloud { dim: pts[0].len(), points: pts, delay: 1 };
        let d = pairwise_distances(&pc(vec![vec![0.0, 0.0], vec![3.0, 4.0]]));
        assert_eq!(d.get(0, 1), 5.0);

        let d = pairwise_distances(&pc(vec![vec![1.5]]));
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(0, 0), 0.0);

        let d = pairwise_distances(&pc(vec![vec![0.0], vec![1.0], vec![3.0]]));
        let expected = [[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(d.get(i, j), v);
            }
        }
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        assert!(DistanceMatrix::from_rows(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_rows(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }
}
