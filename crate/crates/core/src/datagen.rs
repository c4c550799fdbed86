//! Synthetic datasets, query workloads and seed streams.
//!
//! Every generator is a pure function of its configuration and seed. Each
//! kind of output draws from its own ChaCha stream of the master seed, so
//! training queries, test queries and data never share random numbers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::rtree::ObjectRecord;

/// Stream ids for [`rng_for`].
pub mod streams {
    pub const DATA: u64 = 1;
    pub const TEST_QUERIES: u64 = 2;
    pub const KNN_POINTS: u64 = 3;
    pub const TRAINING: u64 = 4;
    pub const NETWORK_INIT: u64 = 5;
    pub const NETWORK_INIT_SPLIT: u64 = 6;
    pub const TRAINING_QUERIES: u64 = 7;
}

/// Deterministic generator for one purpose derived from a master seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Lowest and highest accepted length-to-width ratio of a query window.
pub const ASPECT_RATIO_RANGE: (f64, f64) = (0.1, 10.0);

/// Query sizes of the standard test workload, as fractions of the unit
/// region.
pub const TEST_QUERY_FRACTIONS: [f64; 7] = [0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.02];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uniform,
    Gaussian,
    Skew,
}

impl Distribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Gaussian => "gaussian",
            Distribution::Skew => "skew",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "uni" => Ok(Distribution::Uniform),
            "gaussian" | "gau" => Ok(Distribution::Gaussian),
            "skew" | "ske" => Ok(Distribution::Skew),
            other => Err(format!("unknown distribution `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataGenConfig {
    pub distribution: Distribution,
    pub n: usize,
    /// Side length of every generated square or cube.
    pub object_side: f64,
    pub skew_c: f64,
    pub gauss_mu: f64,
    pub gauss_sigma: f64,
    pub seed: u64,
}

impl DataGenConfig {
    pub fn new(distribution: Distribution, n: usize, seed: u64) -> Self {
        Self {
            distribution,
            n,
            object_side: 1e-4,
            skew_c: 9.0,
            gauss_mu: 0.5,
            gauss_sigma: 0.2,
            seed,
        }
    }
}

/// Object centers, before they become boxes.
pub fn gen_centers<const D: usize>(cfg: &DataGenConfig) -> Result<Vec<[f64; D]>> {
    if cfg.n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let mut rng = rng_for(cfg.seed, streams::DATA);
    let mut centers = Vec::with_capacity(cfg.n);
    match cfg.distribution {
        Distribution::Uniform => {
            for _ in 0..cfg.n {
                centers.push(std::array::from_fn(|_| rng.random::<f64>()));
            }
        }
        Distribution::Skew => {
            if D != 2 {
                return Err(Error::InvalidConfig(format!(
                    "skew data is 2-dimensional, requested {D}"
                )));
            }
            for _ in 0..cfg.n {
                let mut c: [f64; D] = std::array::from_fn(|_| rng.random::<f64>());
                c[1] = c[1].powf(cfg.skew_c);
                centers.push(c);
            }
        }
        Distribution::Gaussian => {
            let normal = Normal::new(cfg.gauss_mu, cfg.gauss_sigma)
                .map_err(|e| Error::InvalidConfig(format!("gaussian: {e}")))?;
            for _ in 0..cfg.n {
                centers.push(std::array::from_fn(|_| loop {
                    let v = normal.sample(&mut rng);
                    if (0.0..=1.0).contains(&v) {
                        break v;
                    }
                }));
            }
        }
    }
    Ok(centers)
}

/// Squares (cubes) of side `object_side` around generated centers, ids
/// `0..n`.
pub fn gen_dataset<const D: usize>(cfg: &DataGenConfig) -> Result<Vec<ObjectRecord<D>>> {
    let side = [cfg.object_side; D];
    Ok(gen_centers::<D>(cfg)?
        .into_iter()
        .enumerate()
        .map(|(id, c)| ObjectRecord::new(id as u64, Rect::centered(c, side)))
        .collect())
}

/// Window of volume `area_fraction` (of the unit region) centered at
/// `center`, with axis 0 / axis 1 side ratio `ratio`. Further axes get the
/// plain `area_fraction^(1/D)` side. Not clipped to the region.
pub fn window_with_ratio<const D: usize>(center: [f64; D], area_fraction: f64, ratio: f64) -> Rect<D> {
    let base = area_fraction.powf(1.0 / D as f64);
    let mut sides = [base; D];
    if D >= 2 {
        let r = ratio.sqrt();
        if D == 2 {
            sides[0] = (area_fraction * ratio).sqrt();
            sides[1] = (area_fraction / ratio).sqrt();
        } else {
            sides[0] = base * r;
            sides[1] = base / r;
        }
    }
    Rect::centered(center, sides)
}

/// Window of a random aspect ratio drawn from `rng`.
pub fn random_window<const D: usize, R: Rng + ?Sized>(
    center: [f64; D],
    area_fraction: f64,
    rng: &mut R,
) -> Rect<D> {
    let ratio = rng.random_range(ASPECT_RATIO_RANGE.0..=ASPECT_RATIO_RANGE.1);
    window_with_ratio(center, area_fraction, ratio)
}

/// Test range queries with uniform centers in the unit region.
pub fn gen_test_queries<const D: usize>(count: usize, size_fraction: f64, seed: u64) -> Vec<Rect<D>> {
    // Each size gets its own sub-stream so adding sizes never shifts others.
    let mut rng = rng_for(seed ^ size_fraction.to_bits(), streams::TEST_QUERIES);
    (0..count)
        .map(|_| {
            let c: [f64; D] = std::array::from_fn(|_| rng.random::<f64>());
            random_window(c, size_fraction, &mut rng)
        })
        .collect()
}

/// Uniform KNN query points in the unit region.
pub fn gen_knn_workload<const D: usize>(count: usize, seed: u64) -> Vec<[f64; D]> {
    let mut rng = rng_for(seed, streams::KNN_POINTS);
    (0..count)
        .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
        .collect()
}
