//! Synthetic rating workloads with known ground truth.
//!
//! Every object gets an intrinsic quality `Q` and every user a noise
//! magnitude `zeta ~ U(0, 5)`. Each user-object pair is rated independently
//! with probability `rho`, and a rating is `Q + psi * zeta` with
//! `psi ~ U(-1, 1)`, clipped to the rating bounds.
//!
//! Randomness comes from ChaCha8 streams keyed by the configuration seed:
//! stream 0 draws the ground truth and stream `1 + i` draws user `i`'s
//! ratings, so users can be generated in parallel without changing a bit of
//! the output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{GroundTruth, Rating, RatingBounds, RatingTable};

/// Upper end of the uniform noise-magnitude distribution.
pub const ZETA_MAX: f64 = 5.0;
pub const DEFAULT_Q_MIN: f64 = 0.1;
pub const DEFAULT_POWER_LAW_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("rating density must lie in (0, 1], got {0}")]
    InvalidDensity(f64),
    #[error("power-law support must satisfy 0 < q_min < q_max, got [{q_min}, {q_max}]")]
    InvalidSupport { q_min: f64, q_max: f64 },
    #[error("power-law exponent must be finite and positive, got {0}")]
    InvalidExponent(f64),
    #[error("generator needs at least one user and one object")]
    EmptyShape,
    #[error("ground truth has {found_objects} objects and {found_users} users, config expects {objects} and {users}")]
    ShapeMismatch {
        objects: usize,
        users: usize,
        found_objects: usize,
        found_users: usize,
    },
}

/// Distribution of intrinsic object qualities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualityDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density proportional to `Q^-exponent` on `[q_min, q_max]`.
    PowerLaw {
        exponent: f64,
        q_min: f64,
        q_max: f64,
    },
}

impl QualityDistribution {
    pub fn uniform() -> Self {
        Self::Uniform { lo: 0.0, hi: 5.0 }
    }

    pub fn power_law(q_min: f64) -> Self {
        Self::PowerLaw {
            exponent: DEFAULT_POWER_LAW_EXPONENT,
            q_min,
            q_max: 5.0,
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        match *self {
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(GeneratorError::InvalidSupport {
                        q_min: lo,
                        q_max: hi,
                    });
                }
            }
            Self::PowerLaw {
                exponent,
                q_min,
                q_max,
            } => {
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(GeneratorError::InvalidExponent(exponent));
                }
                if !(q_min > 0.0 && q_min < q_max && q_max.is_finite()) {
                    return Err(GeneratorError::InvalidSupport { q_min, q_max });
                }
            }
        }
        Ok(())
    }

    /// Maps a uniform variate `u` in `[0, 1)` to a quality by inverting the
    /// distribution's CDF.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => lo + u * (hi - lo),
            Self::PowerLaw {
                exponent,
                q_min,
                q_max,
            } => {
                let q = if (exponent - 1.0).abs() < 1e-12 {
                    q_min * (q_max / q_min).powf(u)
                } else {
                    let e = 1.0 - exponent;
                    let (a, b) = (q_min.powf(e), q_max.powf(e));
                    (a + u * (b - a)).powf(e.recip())
                };
                q.clamp(q_min, q_max)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_cdf(rng.random::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub num_users: usize,
    pub num_objects: usize,
    /// Probability that any given user-object pair is rated.
    pub density: f64,
    pub quality: QualityDistribution,
    pub bounds: RatingBounds,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_users: 2000,
            num_objects: 1000,
            density: 0.05,
            quality: QualityDistribution::uniform(),
            bounds: RatingBounds::default(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GeneratorError::InvalidDensity(self.density));
        }
        if self.num_users == 0 || self.num_objects == 0 {
            return Err(GeneratorError::EmptyShape);
        }
        self.quality.validate()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws intrinsic qualities and user noise magnitudes.
pub fn draw_ground_truth(cfg: &GeneratorConfig) -> Result<GroundTruth, GeneratorError> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, 0);
    let quality = (0..cfg.num_objects)
        .map(|_| cfg.quality.sample(&mut rng))
        .collect();
    let zeta = (0..cfg.num_users)
        .map(|_| rng.random_range(0.0..=ZETA_MAX))
        .collect();
    Ok(GroundTruth::new(quality, zeta))
}

/// Draws the rating table for `truth`.
pub fn generate_ratings(
    truth: &GroundTruth,
    cfg: &GeneratorConfig,
) -> Result<RatingTable, GeneratorError> {
    cfg.validate()?;
    if truth.quality.len() != cfg.num_objects || truth.zeta.len() != cfg.num_users {
        return Err(GeneratorError::ShapeMismatch {
            objects: cfg.num_objects,
            users: cfg.num_users,
            found_objects: truth.quality.len(),
            found_users: truth.zeta.len(),
        });
    }
    let bounds = cfg.bounds;
    let per_user: Vec<Vec<Rating>> = (0..cfg.num_users)
        .into_par_iter()
        .map(|user| {
            let mut rng = stream(cfg.seed, 1 + user as u64);
            let zeta = truth.zeta[user];
            let mut out = Vec::new();
            for (object, &q) in truth.quality.iter().enumerate() {
                if rng.random::<f64>() < cfg.density {
                    let psi: f64 = rng.random_range(-1.0..=1.0);
                    out.push(Rating::new(user, object, bounds.clamp(q + psi * zeta)));
                }
            }
            out
        })
        .collect();
    Ok(RatingTable::build(
        per_user.into_iter().flatten(),
        cfg.num_users,
        cfg.num_objects,
        bounds,
    )
    .expect("generated ratings are in range and clipped to bounds"))
}

/// Ground truth plus ratings for one seed.
pub fn generate(cfg: &GeneratorConfig) -> Result<(GroundTruth, RatingTable), GeneratorError> {
    let truth = draw_ground_truth(cfg)?;
    let table = generate_ratings(&truth, cfg)?;
    Ok((truth, table))
}
