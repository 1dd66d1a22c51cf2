use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::series::TimeSeries;

/// Delay vectors `y(n) = [s(n), s(n+T), ..., s(n+T(d-1))]`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayVectors {
    pub dim: usize,
    pub delay: usize,
    data: Vec<f64>,
}

impl DelayVectors {
    pub fn from_rows(dim: usize, delay: usize, rows: &[Vec<f64>]) -> Self {
        assert!(rows.iter().all(|r| r.len() == dim));
        DelayVectors {
            dim,
            delay,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

pub(crate) fn embed_values(values: &[f64], dim: usize, delay: usize) -> Result<DelayVectors, DynamicsError> {
    if dim == 0 || delay == 0 {
        return Err(DynamicsError::InvalidParameter(
            "embedding dimension and delay must be positive".into(),
        ));
    }
    let span = delay * (dim - 1);
    let needed = span + 1;
    if values.len() < needed {
        return Err(DynamicsError::InsufficientData {
            what: "samples",
            needed,
            available: values.len(),
        });
    }
    let count = values.len() - span;
    let mut data = Vec::with_capacity(count * dim);
    for n in 0..count {
        data.extend((0..dim).map(|k| values[n + k * delay]));
    }
    Ok(DelayVectors { dim, delay, data })
}

pub fn embed(series: &TimeSeries, dim: usize, delay: usize) -> Result<DelayVectors, DynamicsError> {
    embed_values(&series.values, dim, delay)
}

/// Selects coordinates `axes` (2 or 3 of them) from every vector.
pub fn project(vectors: &DelayVectors, axes: &[usize]) -> Result<Vec<Vec<f64>>, DynamicsError> {
    if !(2..=3).contains(&axes.len()) {
        return Err(DynamicsError::BadAxisCount(axes.len()));
    }
    if let Some(&axis) = axes.iter().find(|&&a| a >= vectors.dim) {
        return Err(DynamicsError::AxisOutOfRange {
            axis,
            dim: vectors.dim,
        });
    }
    Ok(vectors
        .iter()
        .map(|p| axes.iter().map(|&a| p[a]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::from_values(v.to_vec(), 1.0)
    }

    #[test]
    fn unit_delay() {
        let v = embed(&ts(&[1., 2., 3., 4., 5., 6.]), 3, 1).unwrap();
        assert_eq!(
            v.to_rows(),
            vec![vec![1., 2., 3.], vec![2., 3., 4.], vec![3., 4., 5.], vec![4., 5., 6.]]
        );
    }

    #[test]
    fn delay_two() {
        let v = embed(&ts(&[1., 2., 3., 4., 5., 6.]), 2, 2).unwrap();
        assert_eq!(v.to_rows(), vec![vec![1., 3.], vec![2., 4.], vec![3., 5.], vec![4., 6.]]);
    }

    #[test]
    fn too_short() {
        assert_eq!(
            embed(&ts(&[1., 2., 3.]), 3, 2),
            Err(DynamicsError::InsufficientData {
                what: "samples",
                needed: 5,
                available: 3
            })
        );
    }

    #[test]
    fn projections() {
        let v = DelayVectors::from_rows(3, 1, &[vec![1., 2., 3.], vec![4., 5., 6.]]);
        assert_eq!(project(&v, &[0, 2]).unwrap(), vec![vec![1., 3.], vec![4., 6.]]);
        assert_eq!(project(&v, &[0, 1, 2]).unwrap(), v.to_rows());
        assert_eq!(
            project(&v, &[0, 3]),
            Err(DynamicsError::AxisOutOfRange { axis: 3, dim: 3 })
        );
        assert_eq!(project(&v, &[0]), Err(DynamicsError::BadAxisCount(1)));
    }
}
