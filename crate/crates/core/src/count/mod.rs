//! Preimage counts `d(p)`, their average over the sphere, islands over
//! disks, and ramification.

mod islands;
mod roots;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::HoloMap;
use crate::metric::{draw_sphere_point, MetricError, SpherePoint};

pub use islands::{find_islands, island_degree, islands_to_csv, total_ramification, IslandRecord, IslandSearch};
pub use roots::{count_preimages, find_roots, Preimage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CountError {
    #[error("a preimage lies on the circle |z| = {r} (at {z}); perturb the radius")]
    RootOnCircle { r: f64, z: Complex64 },
    #[error("winding number did not settle to an integer near {near}")]
    WindingUnresolved { near: Complex64 },
    #[error("map is singular on an integration contour at {z}")]
    Singular { z: Complex64 },
    #[error("root isolation exceeded its budget of {cells} cells")]
    Budget { cells: usize },
    #[error("{failures} samples failed; resample budget exhausted")]
    ResampleExhausted { failures: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Monte-Carlo estimate of the mean of `d(p)` over the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDegree {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Samples that hit an error case and were redrawn.
    pub resampled: usize,
}

/// Averages `count_preimages` over `n_samples` points drawn uniformly for
/// the area measure. Failing samples are redrawn from the same stream.
pub fn mean_degree(hm: &HoloMap, r: f64, n_samples: usize, seed: u64) -> Result<MeanDegree, CountError> {
    if n_samples < 100 {
        return Err(CountError::InvalidArgument(format!(
            "mean degree needs at least 100 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = n_samples / 10 + 10;
    let mut counts: Vec<Option<usize>> = vec![None; n_samples];
    let mut points: Vec<SpherePoint> = (0..n_samples).map(|_| draw_sphere_point(&mut rng)).collect();
    let mut pending: Vec<usize> = (0..n_samples).collect();
    let mut resampled = 0;
    while !pending.is_empty() {
        let results: Vec<Option<usize>> = pending
            .par_iter()
            .map(|&k| count_preimages(hm, points[k], r).ok())
            .collect();
        let mut failed = Vec::new();
        for (&k, res) in pending.iter().zip(results) {
            match res {
                Some(c) => counts[k] = Some(c),
                None => failed.push(k),
            }
        }
        resampled += failed.len();
        if resampled > budget {
            return Err(CountError::ResampleExhausted { failures: resampled });
        }
        for &k in &failed {
            points[k] = draw_sphere_point(&mut rng);
        }
        pending = failed;
    }
    let n = n_samples as f64;
    let values: Vec<f64> = counts.into_iter().map(|c| c.unwrap() as f64).collect();
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(MeanDegree {
        mean,
        stderr: (var / n).sqrt(),
        samples: n_samples,
        resampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mean_is_half() {
        let hm = HoloMap::parse("z").unwrap();
        let m = mean_degree(&hm, 1.0, 2000, 7).unwrap();
        assert!((m.mean - 0.5).abs() < 3.0 * m.stderr + 1e-9, "{m:?}");
    }

    #[test]
    fn deterministic() {
        let hm = HoloMap::parse("z^2").unwrap();
        assert_eq!(mean_degree(&hm, 2.0, 200, 1).unwrap(), mean_degree(&hm, 2.0, 200, 1).unwrap());
    }

    #[test]
    fn too_few_samples() {
        let hm = HoloMap::parse("z").unwrap();
        assert!(mean_degree(&hm, 1.0, 10, 0).is_err());
    }
}
