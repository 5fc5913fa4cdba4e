//! Seeded random sources and the travel-time distributions.
//!
//! Travel legs follow an Epanechnikov law centred on the mean travel time
//! with a support half-width of `mean / 3`. Samples are drawn by inverting
//! the CDF in closed form, one uniform draw per sample, so a `(seed, stream)`
//! pair fixes every travel time of a trial.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio between the mean travel time and the spread parameter.
pub const SCALE_FACTOR: f64 = 3.0;

/// How the spread parameter `mean / SCALE_FACTOR` maps onto the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadConvention {
    /// Spread is the support half-width `b`; true std is `b / sqrt(5)`.
    #[default]
    HalfWidth,
    /// Spread is the true standard deviation; `b = spread * sqrt(5)`.
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpanechnikovDist {
    mean: f64,
    half_width: f64,
}

impl EpanechnikovDist {
    pub fn new(mean: f64, half_width: f64) -> Result<Self> {
        if !mean.is_finite() || !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epanechnikov needs finite mean and positive half-width, got mean={mean}, half_width={half_width}"
            )));
        }
        Ok(Self { mean, half_width })
    }

    /// Distribution for a leg with the given mean travel time, half-width `mean / 3`.
    pub fn from_mean(mean: f64) -> Result<Self> {
        Self::from_mean_with(mean, SpreadConvention::HalfWidth)
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn from_mean_with(mean: f64, convention: SpreadConvention) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean travel time must be positive, got {mean}"
            )));
        }
        let spread = mean / SCALE_FACTOR;
        let half_width = match convention {
            SpreadConvention::HalfWidth => spread,
            SpreadConvention::StdDev => spread * 5f64.sqrt(),
        };
        Self::new(mean, half_width)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn std_dev(&self) -> f64 {
        self.half_width / 5f64.sqrt()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.mean - self.half_width, self.mean + self.half_width)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let u = (x - self.mean) / self.half_width;
        if u.abs() >= 1.0 {
            0.0
        } else {
            0.75 * (1.0 - u * u) / self.half_width
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            0.0
        } else if x >= hi {
            1.0
        } else {
            let u = (x - self.mean) / self.half_width;
            0.25 * (2.0 + 3.0 * u - u * u * u)
        }
    }

    /// Inverse CDF. Solves `u^3 - 3u + (4p - 2) = 0` on `[-1, 1]` via the
    /// trigonometric root `u = 2 sin(asin(2p - 1) / 3)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let u = 2.0 * ((2.0 * p - 1.0).asin() / 3.0).sin();
        self.mean + self.half_width * u.clamp(-1.0, 1.0)
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        self.quantile(rng.next_f64())
    }
}

/// Travel-time law for one hub/location pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TravelDist {
    /// Deterministic travel; also used for zero-distance legs.
    Point(f64),
    Epanechnikov(EpanechnikovDist),
}

impl TravelDist {
    pub fn mean(&self) -> f64 {
        match self {
            TravelDist::Point(v) => *v,
            TravelDist::Epanechnikov(d) => d.mean(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            TravelDist::Point(v) => (*v, *v),
            TravelDist::Epanechnikov(d) => d.support(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            TravelDist::Point(v) => {
                if x >= *v {
                    1.0
                } else {
                    0.0
                }
            }
            TravelDist::Epanechnikov(d) => d.cdf(x),
        }
    }

    /// Point masses consume no randomness, so deterministic runs do not
    /// shift the stream.
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match self {
            TravelDist::Point(v) => *v,
            TravelDist::Epanechnikov(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TravelModel {
    #[default]
    Epanechnikov,
    Deterministic,
}

impl TravelModel {
    pub fn distribution(&self, mean: f64, convention: SpreadConvention) -> TravelDist {
        match self {
            TravelModel::Deterministic => TravelDist::Point(mean.max(0.0)),
            TravelModel::Epanechnikov => match EpanechnikovDist::from_mean_with(mean, convention) {
                Ok(d) => TravelDist::Epanechnikov(d),
                Err(_) => TravelDist::Point(mean.max(0.0)),
            },
        }
    }
}

/// Independent substreams derived from one trial seed.
/// Discriminants are part of the reproducibility contract; only append.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Tasks = 1,
    Travel = 2,
    Policy = 3,
}

/// ChaCha8 generator keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn for_purpose(seed: u64, purpose: StreamPurpose) -> Self {
        Self::new(seed, purpose as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn uniform_int(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        self.inner.random_range(lo..=hi)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}
