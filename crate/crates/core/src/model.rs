//! Sparse bipartite rating storage and the state vectors shared by the
//! engine, the generator and the metrics.
//!
//! A [`RatingTable`] holds `(user, object, rating)` triples together with two
//! compressed adjacency indexes: one grouped by user, one grouped by object.
//! Both indexes list their neighbours in ascending index order, which is the
//! canonical summation order used everywhere else in the crate.

use std::fmt;

use thiserror::Error;

/// Errors raised while assembling a [`RatingTable`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("triple #{position} ({user}, {object}, {rating}) is out of range for {num_users} users and {num_objects} objects")]
    IndexOutOfRange {
        position: usize,
        user: usize,
        object: usize,
        rating: f64,
        num_users: usize,
        num_objects: usize,
    },
    #[error("triple #{position} ({user}, {object}, {rating}) lies outside rating bounds {bounds}")]
    RatingOutOfBounds {
        position: usize,
        user: usize,
        object: usize,
        rating: f64,
        bounds: RatingBounds,
    },
    #[error("invalid rating bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
}

/// Closed interval of admissible rating values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingBounds {
    pub lo: f64,
    pub hi: f64,
}

impl RatingBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, TableError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(TableError::InvalidBounds { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.lo, self.hi)
    }

    /// Largest possible squared deviation between two in-bounds values.
    pub fn max_square_deviation(&self) -> f64 {
        let span = self.hi - self.lo;
        span * span
    }
}

impl Default for RatingBounds {
    fn default() -> Self {
        Self { lo: 0.0, hi: 5.0 }
    }
}

impl fmt::Display for RatingBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// One user's rating of one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub object: usize,
    pub value: f64,
}

impl Rating {
    pub fn new(user: usize, object: usize, value: f64) -> Self {
        Self {
            user,
            object,
            value,
        }
    }
}

impl From<(usize, usize, f64)> for Rating {
    fn from((user, object, value): (usize, usize, f64)) -> Self {
        Self::new(user, object, value)
    }
}

/// Adjacency entry: the index on the other side of the graph and the rating
/// carried by the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub peer: usize,
    pub value: f64,
}

/// Immutable sparse user-object rating store.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    num_users: usize,
    num_objects: usize,
    bounds: RatingBounds,
    // sorted by (user, object)
    triples: Vec<Rating>,
    user_offsets: Vec<usize>,
    user_edges: Vec<Edge>,
    object_offsets: Vec<usize>,
    object_edges: Vec<Edge>,
    duplicates: usize,
}

impl RatingTable {
    /// Builds a table from raw triples.
    ///
    /// Repeated `(user, object)` pairs keep the last occurrence in input
    /// order; the number of discarded earlier occurrences is available from
    /// [`RatingTable::duplicates`].
    pub fn build<I, T>(
        triples: I,
        num_users: usize,
        num_objects: usize,
        bounds: RatingBounds,
    ) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = T>,
        T: Into<Rating>,
    {
        let mut staged: Vec<Rating> = Vec::new();
        for (position, triple) in triples.into_iter().enumerate() {
            let r: Rating = triple.into();
            if r.user >= num_users || r.object >= num_objects {
                return Err(TableError::IndexOutOfRange {
                    position,
                    user: r.user,
                    object: r.object,
                    rating: r.value,
                    num_users,
                    num_objects,
                });
            }
            if !bounds.contains(r.value) {
                return Err(TableError::RatingOutOfBounds {
                    position,
                    user: r.user,
                    object: r.object,
                    rating: r.value,
                    bounds,
                });
            }
            staged.push(r);
        }

        // Stable sort keeps input order inside each (user, object) run, so the
        // last element of a run is the most recent rating.
        staged.sort_by_key(|r| (r.user, r.object));
        let mut triples: Vec<Rating> = Vec::with_capacity(staged.len());
        let mut duplicates = 0;
        for r in staged {
            match triples.last_mut() {
                Some(prev) if prev.user == r.user && prev.object == r.object => {
                    *prev = r;
                    duplicates += 1;
                }
                _ => triples.push(r),
            }
        }

        Ok(Self::from_sorted_unique(
            triples,
            num_users,
            num_objects,
            bounds,
            duplicates,
        ))
    }

    fn from_sorted_unique(
        triples: Vec<Rating>,
        num_users: usize,
        num_objects: usize,
        bounds: RatingBounds,
        duplicates: usize,
    ) -> Self {
        let mut user_offsets = vec![0usize; num_users + 1];
        let mut object_offsets = vec![0usize; num_objects + 1];
        for r in &triples {
            user_offsets[r.user + 1] += 1;
            object_offsets[r.object + 1] += 1;
        }
        for i in 0..num_users {
            user_offsets[i + 1] += user_offsets[i];
        }
        for k in 0..num_objects {
            object_offsets[k + 1] += object_offsets[k];
        }

        let user_edges = triples
            .iter()
            .map(|r| Edge {
                peer: r.object,
                value: r.value,
            })
            .collect();

        // Triples are user-major, so filling object buckets in triple order
        // leaves each bucket sorted by user.
        let mut cursor = object_offsets.clone();
        let mut object_edges = vec![
            Edge {
                peer: 0,
                value: 0.0
            };
            triples.len()
        ];
        for r in &triples {
            object_edges[cursor[r.object]] = Edge {
                peer: r.user,
                value: r.value,
            };
            cursor[r.object] += 1;
        }

        Self {
            num_users,
            num_objects,
            bounds,
            triples,
            user_offsets,
            user_edges,
            object_offsets,
            object_edges,
            duplicates,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn bounds(&self) -> RatingBounds {
        self.bounds
    }

    /// Number of stored ratings.
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Ratings sorted by `(user, object)`.
    pub fn triples(&self) -> &[Rating] {
        &self.triples
    }

    /// Number of input triples dropped by the keep-last rule.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Objects rated by `user`, ascending by object index.
    pub fn user_ratings(&self, user: usize) -> &[Edge] {
        &self.user_edges[self.user_offsets[user]..self.user_offsets[user + 1]]
    }

    /// Users who rated `object`, ascending by user index.
    pub fn object_ratings(&self, object: usize) -> &[Edge] {
        &self.object_edges[self.object_offsets[object]..self.object_offsets[object + 1]]
    }

    /// `M_i`, the number of objects rated by `user`.
    pub fn user_degree(&self, user: usize) -> usize {
        self.user_offsets[user + 1] - self.user_offsets[user]
    }

    /// `N_k`, the number of users who rated `object`.
    pub fn object_degree(&self, object: usize) -> usize {
        self.object_offsets[object + 1] - self.object_offsets[object]
    }

    /// Users without a single rating.
    pub fn unrated_users(&self) -> Vec<usize> {
        (0..self.num_users)
            .filter(|&i| self.user_degree(i) == 0)
            .collect()
    }

    /// Objects nobody rated. They carry no quality estimate and are left out
    /// of rankings.
    pub fn unrated_objects(&self) -> Vec<usize> {
        (0..self.num_objects)
            .filter(|&k| self.object_degree(k) == 0)
            .collect()
    }

    /// Fraction of the `N * M` user-object pairs that carry a rating.
    ///
    /// Returns `NaN` when either side of the graph is empty.
    pub fn density(&self) -> f64 {
        self.triples.len() as f64 / (self.num_users as f64 * self.num_objects as f64)
    }
}

/// Free-function form of [`RatingTable::build`].
pub fn build_table<I, T>(
    triples: I,
    num_users: usize,
    num_objects: usize,
    bounds: RatingBounds,
) -> Result<RatingTable, TableError>
where
    I: IntoIterator<Item = T>,
    T: Into<Rating>,
{
    RatingTable::build(triples, num_users, num_objects, bounds)
}

/// Output of the iterative refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationState {
    /// Estimated object qualities. Unrated objects hold [`UNRATED`].
    pub q: Vec<f64>,
    /// Estimated user mean-square deviations; the reputation of user `i` is
    /// `1 / xi[i]`.
    pub xi: Vec<f64>,
    pub iterations: usize,
    pub delta_q: f64,
    pub delta_xi: f64,
    pub converged: bool,
}

impl ReputationState {
    /// Reputation `1 / xi` per user.
    pub fn reputations(&self) -> Vec<f64> {
        self.xi.iter().map(|x| x.recip()).collect()
    }
}

/// Quality sentinel for objects without ratings.
pub const UNRATED: f64 = f64::NAN;

pub fn is_rated(quality: f64) -> bool {
    !quality.is_nan()
}

/// Hidden parameters of a synthetic workload.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Intrinsic object qualities `Q`.
    pub quality: Vec<f64>,
    /// User noise magnitudes `zeta`.
    pub zeta: Vec<f64>,
}

impl GroundTruth {
    pub fn new(quality: Vec<f64>, zeta: Vec<f64>) -> Self {
        Self { quality, zeta }
    }

    /// `zeta^2`, the statistical stand-in for each user's true mean-square
    /// deviation.
    pub fn sigma_proxy(&self) -> Vec<f64> {
        self.zeta.iter().map(|z| z * z).collect()
    }

    /// Realized mean-square deviation of each user's ratings from the
    /// intrinsic qualities. Users without ratings get `NaN`.
    pub fn realized_sigma(&self, table: &RatingTable) -> Vec<f64> {
        (0..table.num_users())
            .map(|i| {
                let edges = table.user_ratings(i);
                if edges.is_empty() {
                    return f64::NAN;
                }
                let sum: f64 = edges
                    .iter()
                    .map(|e| {
                        let d = e.value - self.quality[e.peer];
                        d * d
                    })
                    .sum();
                sum / edges.len() as f64
            })
            .collect()
    }
}
