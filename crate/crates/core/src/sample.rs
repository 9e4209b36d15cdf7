//! Labeled samples of binary feature vectors.

use crate::error::{Error, Result};

/// `m` instances over `n` binary features with labels in `{-1, +1}`. Each
/// instance is stored as the sorted list of features equal to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    n: usize,
    instances: Vec<Vec<u32>>,
    labels: Vec<i8>,
}

impl Sample {
    pub fn new(n: usize, instances: Vec<Vec<u32>>, labels: Vec<i8>) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidParameter(format!(
                "label of instance {i} is {}, expected -1 or +1",
                labels[i]
            )));
        }
        let mut instances = instances;
        for (i, x) in instances.iter_mut().enumerate() {
            x.sort_unstable();
            x.dedup();
            if let Some(&j) = x.last() {
                if j as usize >= n {
                    return Err(Error::ElementOutOfRange {
                        set: i,
                        element: j,
                        ground_size: n,
                    });
                }
            }
        }
        Ok(Sample {
            n,
            instances,
            labels,
        })
    }

    /// Builds a sample from dense 0/1 rows.
    pub fn from_dense(rows: &[(Vec<u8>, i8)]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.0.len());
        if rows.iter().any(|r| r.0.len() != n) {
            return Err(Error::DimensionMismatch("rows of different lengths".into()));
        }
        let instances = rows
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        Sample::new(n, instances, rows.iter().map(|r| r.1).collect())
    }

    /// Number of features.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of instances.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn instance(&self, i: usize) -> &[u32] {
        &self.instances[i]
    }

    pub fn instances(&self) -> &[Vec<u32>] {
        &self.instances
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn dense(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for &j in &self.instances[i] {
            x[j as usize] = 1.0;
        }
        x
    }

    /// Sum of instance sizes, counting the constant bias feature.
    pub fn total_size(&self) -> usize {
        self.instances.iter().map(|x| x.len() + 1).sum()
    }
}
