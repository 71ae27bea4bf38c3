//! Accuracy measures for estimated qualities and reputations.
//!
//! * [`quality_rmse`]: root-mean-square distance between estimated and
//!   intrinsic qualities.
//! * [`kendall_tau`]: pairwise-concordance rank correlation in which tied
//!   pairs contribute zero, computed in `O(L log L)`.
//! * [`auc`] and [`auc_pairwise`]: how highly a set of benchmark objects is
//!   ranked. `auc` evaluates `(1/S) * sum (M - R_i) / (M - S)` literally; it
//!   exceeds 1 when several benchmarks share the top ranks. `auc_pairwise`
//!   counts benchmark/non-benchmark pairs in the right order and always lies
//!   in `[0, 1]`. The two agree exactly when `S = 1`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{is_rated, GroundTruth, RatingTable, ReputationState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} != {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 entries, got {0}")]
    TooShort(usize),
    #[error("entry {0} is not a finite number")]
    NonFinite(usize),
    #[error("benchmark set is empty")]
    EmptyBenchmark,
    #[error("benchmark object {object} is outside 0..{num_objects}")]
    BenchmarkOutOfRange { object: usize, num_objects: usize },
    #[error("benchmark object {0} is missing from the ranking")]
    MissingBenchmark(usize),
    #[error("benchmark set of size {size} leaves no non-benchmark among {ranked} ranked objects")]
    BenchmarkTooLarge { size: usize, ranked: usize },
}

/// `sqrt(mean((q - Q)^2))`.
pub fn quality_rmse(estimated: &[f64], intrinsic: &[f64]) -> Result<f64, MetricError> {
    if estimated.len() != intrinsic.len() {
        return Err(MetricError::LengthMismatch {
            left: estimated.len(),
            right: intrinsic.len(),
        });
    }
    if estimated.is_empty() {
        return Err(MetricError::TooShort(0));
    }
    let mut sum = 0.0;
    for (i, (q, t)) in estimated.iter().zip(intrinsic).enumerate() {
        if !(q.is_finite() && t.is_finite()) {
            return Err(MetricError::NonFinite(i));
        }
        sum += (q - t) * (q - t);
    }
    Ok((sum / estimated.len() as f64).sqrt())
}

/// [`quality_rmse`] restricted to objects that carry an estimate.
pub fn quality_rmse_rated(estimated: &[f64], intrinsic: &[f64]) -> Result<f64, MetricError> {
    if estimated.len() != intrinsic.len() {
        return Err(MetricError::LengthMismatch {
            left: estimated.len(),
            right: intrinsic.len(),
        });
    }
    let (q, t): (Vec<f64>, Vec<f64>) = estimated
        .iter()
        .zip(intrinsic)
        .filter(|(q, _)| is_rated(**q))
        .map(|(q, t)| (*q, *t))
        .unzip();
    quality_rmse(&q, &t)
}

/// Sum over `i < j` of `sgn(y_i - y_j) * sgn(z_i - z_j)`.
///
/// Knight's method: sort by `(y, z)`, count discordant pairs as merge-sort
/// inversions of the `z` sequence, and remove ties in `y`, ties in `z` and
/// joint ties from the pair total.
pub fn concordance_score(y: &[f64], z: &[f64]) -> Result<i64, MetricError> {
    check_pair(y, z)?;
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Inputs are finite, so partial_cmp is total here. It also treats -0.0
    // and 0.0 as the tie that subtraction sees.
    let cmp = |a: f64, b: f64| a.partial_cmp(&b).unwrap_or(Ordering::Equal);
    order.sort_by(|&a, &b| cmp(y[a], y[b]).then(cmp(z[a], z[b])));

    let total = pairs(n);
    let mut tied_y = 0;
    let mut tied_joint = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && y[order[end]] == y[order[start]] {
            end += 1;
        }
        tied_y += pairs(end - start);
        let mut js = start;
        while js < end {
            let mut je = js + 1;
            while je < end && z[order[je]] == z[order[js]] {
                je += 1;
            }
            tied_joint += pairs(je - js);
            js = je;
        }
        start = end;
    }

    let mut seq: Vec<f64> = order.iter().map(|&i| z[i]).collect();
    let mut buf = seq.clone();
    let discordant = count_inversions(&mut seq, &mut buf);

    let mut tied_z = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && seq[end] == seq[start] {
            end += 1;
        }
        tied_z += pairs(end - start);
        start = end;
    }

    Ok(total - tied_y - tied_z + tied_joint - 2 * discordant)
}

fn pairs(n: usize) -> i64 {
    let n = n as i64;
    n * (n - 1) / 2
}

/// Sorts `seq` ascending and returns the number of strictly inverted pairs.
fn count_inversions(seq: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (lbuf, rbuf) = buf.split_at_mut(mid);
        count_inversions(left, lbuf) + count_inversions(right, rbuf)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[j] < seq[i] {
            buf[k] = seq[j];
            count += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = seq[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..].copy_from_slice(&seq[j..]);
    seq.copy_from_slice(buf);
    count
}

fn check_pair(y: &[f64], z: &[f64]) -> Result<(), MetricError> {
    if y.len() != z.len() {
        return Err(MetricError::LengthMismatch {
            left: y.len(),
            right: z.len(),
        });
    }
    if y.len() < 2 {
        return Err(MetricError::TooShort(y.len()));
    }
    if let Some(i) = y.iter().chain(z).position(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite(i % y.len()));
    }
    Ok(())
}

/// Kendall's tau, `2 / (L (L - 1)) * sum_{i<j} sgn((y_i - y_j)(z_i - z_j))`.
pub fn kendall_tau(y: &[f64], z: &[f64]) -> Result<f64, MetricError> {
    let score = concordance_score(y, z)?;
    Ok(tau_from_score(score, y.len()))
}

/// Normalises a concordance score over `len` items to `[-1, 1]`.
pub fn tau_from_score(score: i64, len: usize) -> f64 {
    2.0 / (len * (len - 1)) as f64 * score as f64
}

/// Which per-user list the estimated deviations are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauReference {
    /// `zeta^2`; rank-equivalent to `zeta` itself.
    #[default]
    ZetaSquared,
    /// Each user's realized mean-square deviation from the intrinsic
    /// qualities over the objects they actually rated.
    RealizedSigma,
}

/// Kendall's tau between estimated deviations and the true noise levels,
/// over users who rated at least one object. `+1` means the reputation order
/// was recovered exactly.
pub fn reputation_tau(
    state: &ReputationState,
    truth: &GroundTruth,
    table: &RatingTable,
    reference: TauReference,
) -> Result<f64, MetricError> {
    if state.xi.len() != truth.zeta.len() {
        return Err(MetricError::LengthMismatch {
            left: state.xi.len(),
            right: truth.zeta.len(),
        });
    }
    if table.num_users() != truth.zeta.len() {
        return Err(MetricError::LengthMismatch {
            left: table.num_users(),
            right: truth.zeta.len(),
        });
    }
    let reference = match reference {
        TauReference::ZetaSquared => truth.sigma_proxy(),
        TauReference::RealizedSigma => truth.realized_sigma(table),
    };
    let (est, refs): (Vec<f64>, Vec<f64>) = (0..table.num_users())
        .filter(|&i| table.user_degree(i) > 0)
        .map(|i| (state.xi[i], reference[i]))
        .unzip();
    kendall_tau(&est, &refs)
}

/// Objects known to be of high quality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSet {
    ids: BTreeSet<usize>,
}

impl BenchmarkSet {
    pub fn new<I>(ids: I, num_objects: usize) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = usize>,
    {
        let ids: BTreeSet<usize> = ids.into_iter().collect();
        if ids.is_empty() {
            return Err(MetricError::EmptyBenchmark);
        }
        if let Some(&object) = ids.iter().find(|&&k| k >= num_objects) {
            return Err(MetricError::BenchmarkOutOfRange {
                object,
                num_objects,
            });
        }
        Ok(Self { ids })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, object: usize) -> bool {
        self.ids.contains(&object)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().copied()
    }
}

/// Objects ordered best first, with 1-based ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    order: Vec<usize>,
    rank_of: Vec<Option<usize>>,
}

impl Ranking {
    /// Builds a ranking from an explicit best-first order over a universe of
    /// `num_objects` objects.
    ///
    /// # Panics
    ///
    /// If `order` repeats an object or names one outside the universe.
    pub fn from_order(order: Vec<usize>, num_objects: usize) -> Self {
        let mut rank_of = vec![None; num_objects];
        for (pos, &k) in order.iter().enumerate() {
            assert!(rank_of[k].is_none(), "object {k} ranked twice");
            rank_of[k] = Some(pos + 1);
        }
        Self { order, rank_of }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank, `None` for objects left out of the ranking.
    pub fn rank(&self, object: usize) -> Option<usize> {
        self.rank_of.get(object).copied().flatten()
    }

    /// Number of ranked objects.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Orders rated objects by descending quality. Objects with equal quality
/// are placed in a uniformly random order drawn from `rng`; unrated objects
/// are left out.
pub fn rank_objects<R: Rng + ?Sized>(q: &[f64], rng: &mut R) -> Ranking {
    let mut order: Vec<usize> = (0..q.len()).filter(|&k| is_rated(q[k])).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    Ranking::from_order(order, q.len())
}

fn benchmark_ranks(ranking: &Ranking, bench: &BenchmarkSet) -> Result<Vec<usize>, MetricError> {
    if bench.is_empty() {
        return Err(MetricError::EmptyBenchmark);
    }
    if bench.len() >= ranking.len() {
        return Err(MetricError::BenchmarkTooLarge {
            size: bench.len(),
            ranked: ranking.len(),
        });
    }
    bench
        .iter()
        .map(|k| ranking.rank(k).ok_or(MetricError::MissingBenchmark(k)))
        .collect()
}

/// `(1/S) * sum_i (M - R_i) / (M - S)` with `M` the number of ranked objects.
pub fn auc(ranking: &Ranking, bench: &BenchmarkSet) -> Result<f64, MetricError> {
    let ranks = benchmark_ranks(ranking, bench)?;
    let m = ranking.len() as u64;
    let s = ranks.len() as u64;
    let numerator: u64 = ranks.iter().map(|&r| m - r as u64).sum();
    Ok(numerator as f64 / (s * (m - s)) as f64)
}

/// Fraction of (benchmark, non-benchmark) pairs in which the benchmark object
/// is ranked higher.
pub fn auc_pairwise(ranking: &Ranking, bench: &BenchmarkSet) -> Result<f64, MetricError> {
    let mut ranks = benchmark_ranks(ranking, bench)?;
    ranks.sort_unstable();
    let m = ranking.len() as u64;
    let s = ranks.len() as u64;
    // the j-th best benchmark has (m - r) objects below it, s - j of which
    // are benchmarks
    let wins: u64 = ranks
        .iter()
        .enumerate()
        .map(|(j, &r)| (m - r as u64) - (s - 1 - j as u64))
        .sum();
    Ok(wins as f64 / (s * (m - s)) as f64)
}
