//! Small seeded datasets for quick experiments.

use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Dataset, Sample};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Four points, two classes.
    Xor,
    /// Forty points in four Gaussian clusters.
    GaussianBlobs,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xor" => Ok(Self::Xor),
            "gaussian_blobs" => Ok(Self::GaussianBlobs),
            other => Err(Error::Argument(format!(
                "unknown synthetic dataset `{other}` (expected xor or gaussian_blobs)"
            ))),
        }
    }
}

impl std::fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Xor => "xor",
            Self::GaussianBlobs => "gaussian_blobs",
        })
    }
}

pub const BLOB_SAMPLES_PER_CLASS: usize = 10;
pub const BLOB_STD_DEV: f64 = 0.08;
/// Cluster centres at the corners of the unit square; class `k` sits at
/// `BLOB_CENTRES[k]` and samples are clamped back into `[0, 1]`.
pub const BLOB_CENTRES: [[f64; 2]; 4] = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];

/// Builds the named dataset. `seed` only affects `GaussianBlobs`.
pub fn make_synthetic(kind: SyntheticKind, seed: u64) -> Dataset {
    let samples = match kind {
        SyntheticKind::Xor => [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)]
            .into_iter()
            .map(|(x, c)| Sample::with_label(x.to_vec(), c, 2))
            .collect::<Result<Vec<_>>>(),
        SyntheticKind::GaussianBlobs => {
            let mut rng = seeded(seed);
            let noise = Normal::new(0.0, BLOB_STD_DEV).expect("valid std dev");
            let mut samples = Vec::with_capacity(BLOB_CENTRES.len() * BLOB_SAMPLES_PER_CLASS);
            for (class, centre) in BLOB_CENTRES.iter().enumerate() {
                for _ in 0..BLOB_SAMPLES_PER_CLASS {
                    let x = centre
                        .iter()
                        .map(|c| (c + noise.sample(&mut rng)).clamp(0.0, 1.0))
                        .collect();
                    samples.push(Sample::with_label(x, class, BLOB_CENTRES.len()));
                }
            }
            samples.into_iter().collect::<Result<Vec<_>>>()
        }
    };
    Dataset::new(samples.expect("synthetic samples are well-formed")).expect("synthetic dataset is non-empty")
}
