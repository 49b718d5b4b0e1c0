//! Seeded synthetic datasets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::som::Stimulus;

/// Isotropic Gaussian cluster with a label.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub label: String,
    pub center: Vec<f64>,
    pub std_dev: f64,
    pub count: usize,
}

/// Draws every cluster's points in order; ids are `"{label}{k}"` with `k`
/// counting from 0 within the cluster.
pub fn gaussian_clusters<T: Scalar>(clusters: &[Cluster], seed: u64) -> Result<Vec<Stimulus<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = clusters.first().map_or(0, |c| c.center.len());
    let mut out = Vec::new();
    for c in clusters {
        if c.center.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.center.len(),
            });
        }
        if !(c.std_dev >= 0.0 && c.std_dev.is_finite()) {
            return Err(Error::Config(format!(
                "cluster `{}`: std_dev must be >= 0",
                c.label
            )));
        }
        let noise = Normal::new(0.0, c.std_dev)
            .map_err(|e| Error::Config(format!("cluster `{}`: {e}", c.label)))?;
        for k in 0..c.count {
            let features = c
                .center
                .iter()
                .map(|&m| T::from_f64_lossy(m + noise.sample(&mut rng)))
                .collect();
            out.push(Stimulus::new(
                format!("{}{k}", c.label),
                features,
                c.label.clone(),
            ));
        }
    }
    Ok(out)
}

/// 60 points in the plane: 20 each around (0, 0), (5, 5) and (0, 5) with
/// standard deviation 0.5, labelled `A`, `B`, `C`.
pub fn three_clusters<T: Scalar>(seed: u64) -> Vec<Stimulus<T>> {
    let cluster = |label: &str, x: f64, y: f64| Cluster {
        label: label.into(),
        center: vec![x, y],
        std_dev: 0.5,
        count: 20,
    };
    gaussian_clusters(
        &[
            cluster("A", 0.0, 0.0),
            cluster("B", 5.0, 5.0),
            cluster("C", 0.0, 5.0),
        ],
        seed,
    )
    .expect("fixed clusters are valid")
}
