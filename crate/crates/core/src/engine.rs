//! Iterative refinement of object qualities and user deviations.
//!
//! Each round first recomputes every object's quality as the average of its
//! ratings weighted by `xi^-alpha`, then recomputes every user's mean-square
//! deviation from those qualities. Rounds repeat from `xi = 1` until both the
//! largest quality change and the largest deviation change drop below the
//! convergence threshold.
//!
//! Both phases read a single snapshot of the other vector, so objects (and
//! users) are evaluated independently and in parallel. Every per-object and
//! per-user sum runs in ascending index order, which makes results bitwise
//! independent of the number of worker threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{is_rated, RatingTable, ReputationState, UNRATED};

pub const DEFAULT_DELTA_C: f64 = 1e-5;
pub const DEFAULT_XI_FLOOR: f64 = 1e-5;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_ALPHA_CAP: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("alpha must be finite and non-negative, got {0}")]
    NegativeAlpha(f64),
    #[error("alpha {alpha} exceeds the configured cap {cap}")]
    AlphaAboveCap { alpha: f64, cap: f64 },
    #[error("convergence threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("deviation floor must be positive, got {0}")]
    InvalidFloor(f64),
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error("rating table holds no ratings")]
    EmptyTable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Reputation exponent; 0 reduces the engine to plain averaging.
    pub alpha: f64,
    /// Convergence threshold on the per-round maximal changes.
    pub delta_c: f64,
    /// Lower bound applied to every user deviation.
    pub xi_floor: f64,
    pub max_iterations: usize,
    /// Upper bound accepted for `alpha`.
    pub alpha_cap: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            delta_c: DEFAULT_DELTA_C,
            xi_floor: DEFAULT_XI_FLOOR,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            alpha_cap: DEFAULT_ALPHA_CAP,
        }
    }
}

impl EngineConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(EngineError::NegativeAlpha(self.alpha));
        }
        if self.alpha > self.alpha_cap {
            return Err(EngineError::AlphaAboveCap {
                alpha: self.alpha,
                cap: self.alpha_cap,
            });
        }
        if self.delta_c.is_nan() || self.delta_c <= 0.0 {
            return Err(EngineError::InvalidThreshold(self.delta_c));
        }
        if self.xi_floor.is_nan() || self.xi_floor <= 0.0 {
            return Err(EngineError::InvalidFloor(self.xi_floor));
        }
        if self.max_iterations == 0 {
            return Err(EngineError::ZeroIterations);
        }
        Ok(())
    }
}

/// Reputation-weighted quality of every object under the deviations `xi`.
///
/// Objects nobody rated get [`UNRATED`]. Weights are `xi_i^-alpha`, rescaled
/// per object by the largest weight among its raters so that tiny floored
/// deviations combined with large exponents cannot overflow.
pub fn update_qualities(table: &RatingTable, xi: &[f64], alpha: f64) -> Vec<f64> {
    assert_eq!(
        xi.len(),
        table.num_users(),
        "xi length must equal user count"
    );
    let bounds = table.bounds();
    (0..table.num_objects())
        .into_par_iter()
        .map(|k| {
            let edges = table.object_ratings(k);
            if edges.is_empty() {
                return UNRATED;
            }
            let xi_min = edges
                .iter()
                .map(|e| xi[e.peer])
                .fold(f64::INFINITY, f64::min);
            let (mut num, mut den) = (0.0, 0.0);
            for e in edges {
                // (xi_min / xi)^alpha == xi^-alpha / max_j xi_j^-alpha
                let w = (xi_min / xi[e.peer]).powf(alpha);
                num += e.value * w;
                den += w;
            }
            bounds.clamp(num / den)
        })
        .collect()
}

/// Mean-square deviation of every user's ratings from the qualities `q`,
/// floored at `xi_floor`. Users without ratings keep the neutral value 1.
pub fn update_deviations(table: &RatingTable, q: &[f64], xi_floor: f64) -> Vec<f64> {
    assert_eq!(
        q.len(),
        table.num_objects(),
        "q length must equal object count"
    );
    (0..table.num_users())
        .into_par_iter()
        .map(|i| {
            let edges = table.user_ratings(i);
            if edges.is_empty() {
                return 1.0;
            }
            let sum: f64 = edges
                .iter()
                .map(|e| {
                    let d = e.value - q[e.peer];
                    d * d
                })
                .sum();
            (sum / edges.len() as f64).max(xi_floor)
        })
        .collect()
}

fn max_abs_change(next: &[f64], prev: &[f64]) -> f64 {
    next.iter()
        .zip(prev)
        .filter(|(a, _)| is_rated(**a))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Runs rounds from `xi = 1` until both maximal changes fall below
/// `cfg.delta_c` or `cfg.max_iterations` rounds have run.
///
/// The quality vector before the first round is the one implied by the
/// initial `xi = 1`, so the first quality change is always zero. Running out
/// of iterations is not an error: the returned state has `converged = false`.
pub fn run_to_fixed_point(
    table: &RatingTable,
    cfg: &EngineConfig,
) -> Result<ReputationState, EngineError> {
    cfg.validate()?;
    if table.is_empty() {
        return Err(EngineError::EmptyTable);
    }

    let xi = vec![1.0; table.num_users()];
    let q = update_qualities(table, &xi, cfg.alpha);
    let mut state = ReputationState {
        q,
        xi,
        iterations: 0,
        delta_q: f64::INFINITY,
        delta_xi: f64::INFINITY,
        converged: false,
    };
    while state.iterations < cfg.max_iterations {
        state = refine(table, &state, cfg);
        if state.converged {
            break;
        }
    }
    Ok(state)
}

/// One further round on top of `state`, with changes measured against it.
pub fn refine(table: &RatingTable, state: &ReputationState, cfg: &EngineConfig) -> ReputationState {
    let q = update_qualities(table, &state.xi, cfg.alpha);
    let xi = update_deviations(table, &q, cfg.xi_floor);
    let delta_q = max_abs_change(&q, &state.q);
    let delta_xi = max_abs_change(&xi, &state.xi);
    ReputationState {
        q,
        xi,
        iterations: state.iterations + 1,
        delta_q,
        delta_xi,
        converged: delta_q < cfg.delta_c && delta_xi < cfg.delta_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_table, RatingBounds};
    use proptest::prelude::*;

    fn table(triples: &[(usize, usize, f64)], n: usize, m: usize) -> RatingTable {
        build_table(triples.iter().copied(), n, m, RatingBounds::default()).unwrap()
    }

    #[test]
    fn alpha_zero_is_plain_mean() {
        let t = table(&[(0, 0, 4.0), (1, 0, 2.0)], 2, 1);
        assert_eq!(update_qualities(&t, &[1.0, 1.0], 0.0), vec![3.0]);
        assert_eq!(update_qualities(&t, &[0.3, 7.0], 0.0), vec![3.0]);
    }

    #[test]
    fn alpha_one_hand_evaluation() {
        let t = table(&[(0, 0, 4.0), (1, 0, 2.0)], 2, 1);
        let q = update_qualities(&t, &[1.0, 4.0], 1.0);
        // (4 * 1 + 2 * 0.25) / 1.25
        assert!((q[0] - 3.6).abs() < 1e-15);
    }

    #[test]
    fn single_rating_fixes_quality() {
        let t = table(&[(0, 0, 5.0)], 1, 1);
        for alpha in [0.0, 0.5, 1.0, 3.0, 8.0] {
            assert_eq!(update_qualities(&t, &[2.0], alpha), vec![5.0]);
        }
    }

    #[test]
    fn unrated_object_gets_sentinel() {
        let t = table(&[(0, 0, 5.0)], 1, 2);
        let q = update_qualities(&t, &[1.0], 1.0);
        assert!(q[1].is_nan());
    }

    #[test]
    fn deviation_examples() {
        let exact = table(&[(0, 0, 3.0)], 1, 1);
        assert_eq!(update_deviations(&exact, &[3.0], 1e-5), vec![1e-5]);

        let two = table(&[(0, 0, 4.0), (0, 1, 2.0)], 1, 2);
        assert_eq!(update_deviations(&two, &[3.0, 3.0], 1e-5), vec![1.0]);

        let far = table(&[(0, 0, 5.0)], 1, 1);
        assert_eq!(update_deviations(&far, &[1.0], 1e-5), vec![16.0]);
    }

    #[test]
    fn unrated_user_stays_neutral() {
        let t = table(&[(0, 0, 5.0)], 2, 1);
        assert_eq!(update_deviations(&t, &[4.0], 1e-5), vec![1.0, 1.0]);
    }

    #[test]
    fn extreme_alpha_does_not_overflow() {
        let t = table(&[(0, 0, 5.0), (1, 0, 1.0)], 2, 1);
        let q = update_qualities(&t, &[1e-5, 25.0], 8.0);
        assert!(q[0].is_finite());
        assert!((q[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_rating_converges_to_floor() {
        let t = table(&[(0, 0, 4.0)], 1, 1);
        let s = run_to_fixed_point(&t, &EngineConfig::with_alpha(1.0)).unwrap();
        assert!(s.converged);
        assert_eq!(s.q, vec![4.0]);
        assert_eq!(s.xi, vec![1e-5]);
        assert!(s.iterations <= 2);
    }

    #[test]
    fn alpha_zero_converges_within_two_rounds() {
        let t = table(
            &[
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 2.0),
                (2, 1, 5.0),
                (2, 2, 3.0),
            ],
            3,
            3,
        );
        let s = run_to_fixed_point(&t, &EngineConfig::with_alpha(0.0)).unwrap();
        assert!(s.converged);
        assert!(s.iterations <= 2);
        assert_eq!(s.q, vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn non_convergence_is_reported() {
        let t = table(&[(0, 0, 4.0), (1, 0, 1.0), (1, 1, 3.0)], 2, 2);
        let cfg = EngineConfig {
            max_iterations: 1,
            ..EngineConfig::with_alpha(1.0)
        };
        let s = run_to_fixed_point(&t, &cfg).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::with_alpha(-0.1).validate().is_err());
        assert!(EngineConfig::with_alpha(f64::NAN).validate().is_err());
        assert!(matches!(
            EngineConfig::with_alpha(8.5).validate(),
            Err(EngineError::AlphaAboveCap { .. })
        ));
        let cfg = EngineConfig {
            alpha_cap: 10.0,
            ..EngineConfig::with_alpha(8.5)
        };
        assert!(cfg.validate().is_ok());
        let cfg = EngineConfig {
            delta_c: 0.0,
            ..EngineConfig::default()
        };
        assert_eq!(cfg.validate(), Err(EngineError::InvalidThreshold(0.0)));
        let cfg = EngineConfig {
            max_iterations: 0,
            ..EngineConfig::default()
        };
        assert_eq!(cfg.validate(), Err(EngineError::ZeroIterations));
    }

    #[test]
    fn empty_table_is_rejected() {
        let t = table(&[], 2, 2);
        assert_eq!(
            run_to_fixed_point(&t, &EngineConfig::default()),
            Err(EngineError::EmptyTable)
        );
    }

    fn arb_table() -> impl Strategy<Value = RatingTable> {
        (2usize..15, 2usize..10).prop_flat_map(|(n, m)| {
            prop::collection::vec((0..n, 0..m, 0.0f64..=5.0), 1..80)
                .prop_map(move |raw| build_table(raw, n, m, RatingBounds::default()).unwrap())
        })
    }

    fn permuted(t: &RatingTable, users: &[usize], objects: &[usize]) -> RatingTable {
        let triples = t
            .triples()
            .iter()
            .map(|r| (users[r.user], objects[r.object], r.value));
        build_table(triples, t.num_users(), t.num_objects(), t.bounds()).unwrap()
    }

    proptest! {
        #[test]
        fn iterates_stay_bounded(t in arb_table(), alpha in 0.0f64..3.0) {
            let cfg = EngineConfig { max_iterations: 30, ..EngineConfig::with_alpha(alpha) };
            let mut state = run_to_fixed_point(&t, &EngineConfig { max_iterations: 1, ..cfg }).unwrap();
            let cap = t.bounds().max_square_deviation();
            for _ in 0..30 {
                for (k, &q) in state.q.iter().enumerate() {
                    if t.object_degree(k) > 0 {
                        prop_assert!((0.0..=5.0).contains(&q));
                    }
                }
                for &x in &state.xi {
                    prop_assert!(x >= cfg.xi_floor && x <= cap);
                }
                state = refine(&t, &state, &cfg);
            }
        }

        #[test]
        fn weight_scale_invariance(t in arb_table(), alpha in 0.1f64..4.0, scale in 0.01f64..100.0) {
            let xi: Vec<f64> = (0..t.num_users()).map(|i| 0.01 + (i as f64 * 0.37) % 3.0).collect();
            let scaled: Vec<f64> = xi.iter().map(|x| x * scale).collect();
            let a = update_qualities(&t, &xi, alpha);
            let b = update_qualities(&t, &scaled, alpha);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(x.is_nan() && y.is_nan() || (x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn relabelling_permutes_results(
            t in arb_table(),
            alpha in 0.0f64..2.0,
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut users: Vec<usize> = (0..t.num_users()).collect();
            let mut objects: Vec<usize> = (0..t.num_objects()).collect();
            users.shuffle(&mut rng);
            objects.shuffle(&mut rng);
            let p = permuted(&t, &users, &objects);

            let cfg = EngineConfig::with_alpha(alpha);
            let a = run_to_fixed_point(&t, &cfg).unwrap();
            let b = run_to_fixed_point(&p, &cfg).unwrap();
            for (k, &q) in a.q.iter().enumerate() {
                let other = b.q[objects[k]];
                prop_assert!(q.is_nan() && other.is_nan() || (q - other).abs() <= 1e-9);
            }
            for (i, &x) in a.xi.iter().enumerate() {
                prop_assert!((x - b.xi[users[i]]).abs() <= 1e-9 * x.max(1.0));
            }
        }
    }
}
