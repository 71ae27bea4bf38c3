use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use reprank::experiments::{default_alphas, format_report};
use reprank::{
    export_table, generate, load_benchmarks, load_ratings, run_dataset_sweep, run_synthetic_sweep,
    run_to_fixed_point, DatasetFormat, DatasetManifest, EngineConfig, GeneratorConfig,
    QualityDistribution, RatingBounds, SweepRow, SweepSpec, TauReference, Workload,
};

#[derive(Parser)]
#[command(
    name = "reprank",
    version,
    about = "Reputation-weighted ranking of rated objects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep alpha over synthetic workloads and report delta and tau
    SweepSynth {
        #[command(flatten)]
        generator: GeneratorArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Use each user's realized deviation as the tau reference instead of zeta^2
        #[arg(long)]
        realized_sigma: bool,
    },
    /// Sweep alpha over a real dataset and report both AUC variants
    SweepData {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Generate one synthetic rating table and write it with its ground truth
    Gen {
        #[command(flatten)]
        generator: GeneratorArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the objects of a dataset at a single alpha
    Rank {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Number of objects to print
        #[arg(long, default_value_t = 20)]
        top: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quality {
    Uniform,
    PowerLaw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    MovielensDat,
    CsvTriples,
}

#[derive(Args)]
struct GeneratorArgs {
    /// Number of users
    #[arg(short = 'n', long, default_value_t = 2000)]
    users: usize,
    /// Number of objects
    #[arg(short = 'm', long, default_value_t = 1000)]
    objects: usize,
    /// Probability that a given user rates a given object
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    #[arg(long, value_enum, default_value_t = Quality::Uniform)]
    quality: Quality,
    /// Lower cut-off of the power-law quality distribution
    #[arg(long, default_value_t = reprank::synth::DEFAULT_Q_MIN)]
    q_min: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GeneratorArgs {
    fn config(&self) -> GeneratorConfig {
        let quality = match self.quality {
            Quality::Uniform => QualityDistribution::uniform(),
            Quality::PowerLaw => QualityDistribution::power_law(self.q_min),
        };
        GeneratorConfig {
            num_users: self.users,
            num_objects: self.objects,
            density: self.rho,
            quality,
            seed: self.seed,
            ..GeneratorConfig::default()
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Convergence threshold on the per-round changes
    #[arg(long, default_value_t = reprank::engine::DEFAULT_DELTA_C)]
    delta_c: f64,
    /// Lower bound on user deviations
    #[arg(long, default_value_t = reprank::engine::DEFAULT_XI_FLOOR)]
    xi_floor: f64,
    #[arg(long, default_value_t = reprank::engine::DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Largest alpha accepted
    #[arg(long, default_value_t = reprank::engine::DEFAULT_ALPHA_CAP)]
    alpha_cap: f64,
}

impl EngineArgs {
    fn config(&self, alpha: f64) -> EngineConfig {
        EngineConfig {
            alpha,
            delta_c: self.delta_c,
            xi_floor: self.xi_floor,
            max_iterations: self.max_iterations,
            alpha_cap: self.alpha_cap,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated alpha values; defaults to 0, 0.1, ..., 2
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Independent realizations per alpha
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    /// Base seed for the sweep
    #[arg(long, default_value_t = 0)]
    sweep_seed: u64,
    /// Worker threads; defaults to all cores
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the CSV report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn spec(&self, workload: Workload) -> SweepSpec {
        SweepSpec {
            alphas: self.alphas.clone().unwrap_or_else(default_alphas),
            realizations: self.realizations,
            base_seed: self.sweep_seed,
            engine: self.engine.config(1.0),
            threads: self.threads,
            ..SweepSpec::new(workload)
        }
    }

    fn emit(&self, rows: &[SweepRow]) -> Result<()> {
        let text = format_report(rows);
        match &self.out {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => io::stdout()
                .write_all(text.as_bytes())
                .context("writing report"),
        }
    }
}

#[derive(Args)]
struct SourceArgs {
    /// Dataset manifest (TOML)
    #[arg(long, conflicts_with_all = ["ratings", "benchmarks"])]
    config: Option<PathBuf>,
    /// Ratings file, used when no manifest is given
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::MovielensDat)]
    format: Format,
    /// Benchmark id list, one external object id per line
    #[arg(long)]
    benchmarks: Option<PathBuf>,
    /// Rating scale as LO,HI
    #[arg(long, value_delimiter = ',', num_args = 2)]
    scale: Option<Vec<f64>>,
}

impl SourceArgs {
    fn manifest(&self) -> Result<DatasetManifest> {
        if let Some(path) = &self.config {
            return DatasetManifest::from_file(path)
                .with_context(|| format!("reading manifest {}", path.display()));
        }
        let Some(ratings) = &self.ratings else {
            bail!("either --config or --ratings is required");
        };
        let format = match self.format {
            Format::MovielensDat => DatasetFormat::MovielensDat,
            Format::CsvTriples => DatasetFormat::CsvTriples,
        };
        let mut manifest = DatasetManifest::new(ratings, format);
        if let Some(path) = &self.benchmarks {
            manifest = manifest.with_benchmarks(path);
        }
        if let Some(scale) = &self.scale {
            manifest.rating_scale = RatingBounds::new(scale[0], scale[1])?;
        }
        Ok(manifest)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SweepSynth {
            generator,
            sweep,
            realized_sigma,
        } => {
            let mut spec = sweep.spec(Workload::Synthetic(generator.config()));
            if realized_sigma {
                spec.tau_reference = TauReference::RealizedSigma;
            }
            let rows = run_synthetic_sweep(&spec)?;
            sweep.emit(&rows)
        }
        Command::SweepData { source, sweep } => {
            let spec = sweep.spec(Workload::Dataset(source.manifest()?));
            let rows = run_dataset_sweep(&spec)?;
            sweep.emit(&rows)
        }
        Command::Gen { generator, out } => {
            let (truth, table) = generate(&generator.config())?;
            export_table(&table, Some(&truth), &out)?;
            eprintln!(
                "wrote {} ratings ({} users, {} objects) to {}",
                table.len(),
                table.num_users(),
                table.num_objects(),
                out.display()
            );
            Ok(())
        }
        Command::Rank {
            source,
            alpha,
            top,
            engine,
        } => {
            let manifest = source.manifest()?;
            let data = load_ratings(&manifest)?;
            let state = run_to_fixed_point(&data.table, &engine.config(alpha))?;
            if !state.converged {
                eprintln!(
                    "warning: stopped after {} iterations without converging",
                    state.iterations
                );
            }
            let benchmarks = match manifest.benchmark_path {
                Some(_) => Some(load_benchmarks(&manifest, &data)?.set),
                None => None,
            };
            let mut order: Vec<usize> = (0..data.table.num_objects())
                .filter(|&k| state.q[k].is_finite())
                .collect();
            order.sort_by(|&a, &b| state.q[b].total_cmp(&state.q[a]).then(a.cmp(&b)));

            let mut out = io::stdout().lock();
            writeln!(out, "rank,object,quality,raters,benchmark")?;
            for (pos, &k) in order.iter().take(top).enumerate() {
                let marked = benchmarks.as_ref().is_some_and(|b| b.contains(k));
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    pos + 1,
                    data.objects.external(k).unwrap_or("?"),
                    state.q[k],
                    data.table.object_degree(k),
                    marked
                )?;
            }
            Ok(())
        }
    }
}
