//! Reputation-weighted ranking for bipartite rating data.
//!
//! Users rate objects; the [`engine`] alternately estimates each object's
//! quality as a reputation-weighted average of its ratings and each user's
//! mean-square deviation from those qualities, until both settle. Users who
//! agree with the consensus earn more weight.
//!
//! Around the engine sit a sparse rating store ([`model`]), a synthetic
//! workload generator with known ground truth ([`synth`]), accuracy metrics
//! ([`metrics`]), dataset loaders ([`ingest`]) and the alpha-sweep harness
//! ([`experiments`]).
//!
//! ```
//! use reprank::{build_table, run_to_fixed_point, EngineConfig, RatingBounds};
//!
//! let table = build_table(
//!     [(0, 0, 4.0), (1, 0, 2.0), (0, 1, 5.0), (1, 1, 1.0), (2, 1, 5.0)],
//!     3,
//!     2,
//!     RatingBounds::default(),
//! )
//! .unwrap();
//! let state = run_to_fixed_point(&table, &EngineConfig::with_alpha(1.0)).unwrap();
//! assert!(state.converged);
//! // user 1 disagrees with the majority on object 1 and loses weight
//! assert!(state.xi[1] > state.xi[0]);
//! ```

pub mod engine;
pub mod experiments;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod synth;

pub use engine::{
    refine, run_to_fixed_point, update_deviations, update_qualities, EngineConfig, EngineError,
};
pub use experiments::{
    run_dataset_sweep, run_sweep, run_synthetic_sweep, write_report, Metric, SweepError, SweepRow,
    SweepSpec, Workload,
};
pub use ingest::{
    export_table, load_benchmarks, load_ratings, Dataset, DatasetFormat, DatasetManifest,
    IngestError,
};
pub use metrics::{
    auc, auc_pairwise, kendall_tau, quality_rmse, rank_objects, reputation_tau, BenchmarkSet,
    MetricError, Ranking, TauReference,
};
pub use model::{
    build_table, GroundTruth, Rating, RatingBounds, RatingTable, ReputationState, TableError,
};
pub use synth::{
    draw_ground_truth, generate, generate_ratings, GeneratorConfig, QualityDistribution,
};
