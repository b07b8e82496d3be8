use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cgp_smbo::DistanceKind;
use cgp_smbo_harness::config::{ConfigValues, DistanceTag, Method};
use cgp_smbo_harness::experiment::{run_experiment, write_outputs};
use cgp_smbo_harness::genome_io::read_genome;
use cgp_smbo_harness::samples::{generate_pd_samples, PdSource};
use cgp_smbo_harness::summary::{read_runs_dir, summarize, write_summary_csv};
use cgp_smbo_harness::load_iris;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "cgp-smbo", version, about = "Surrogate-assisted CGPANN experiments on IRIS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of one method and write trace and run CSVs.
    Run(RunArgs),
    /// Summarize every *_runs.csv in a directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the distance between two genome files.
    Distances {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        distance: DistanceTag,
        #[arg(long, default_value = "full")]
        pd_samples: PdSource,
        /// Seed of the RSM design.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data/iris.csv")]
        data: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    distance: Option<DistanceTag>,
    #[arg(long)]
    pd_samples: Option<PdSource>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => ConfigValues::from_file(path)?,
        None => ConfigValues::default(),
    };
    let cli = ConfigValues {
        method: args.method,
        distance: args.distance,
        pd_samples: args.pd_samples,
        mutation_rate: args.mutation_rate,
        budget: args.budget,
        replications: args.reps,
        seed: args.seed,
        data: args.data,
        out: args.out,
        ..Default::default()
    };
    let config = file.overlay(cli).resolve()?;
    let data = load_iris(&config.data)?;
    let records = run_experiment(&config, &data);
    let files = write_outputs(&config, &records, &config.out)
        .with_context(|| format!("writing results to {}", config.out.display()))?;
    let failed: Vec<_> = records.iter().filter(|r| r.outcome.is_err()).collect();
    for r in &failed {
        eprintln!("replication seed {} failed: {}", r.seed, r.outcome.as_ref().unwrap_err());
    }
    println!("{}", files.trace.display());
    println!("{}", files.runs.display());
    anyhow::ensure!(failed.is_empty(), "{} of {} replications failed", failed.len(), records.len());
    Ok(())
}

fn distances(a: PathBuf, b: PathBuf, tag: DistanceTag, pd_samples: PdSource, seed: u64, data: PathBuf) -> Result<()> {
    let a = read_genome(&a)?;
    let b = read_genome(&b)?;
    let kind = match tag {
        DistanceTag::Gd => DistanceKind::Genotypic,
        DistanceTag::Gidd => DistanceKind::GenotypicId,
        DistanceTag::Pd => {
            let data = load_iris(&data)?;
            let samples = generate_pd_samples(pd_samples, &data, &mut ChaCha8Rng::seed_from_u64(seed));
            DistanceKind::phenotypic(samples.features)?
        }
    };
    println!("{}", kind.between(&a, &b)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Summarize { input, out } => (|| {
            let rows = summarize(&read_runs_dir(&input)?)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_summary_csv(&rows, file)?;
            Ok(())
        })(),
        Command::Distances {
            a,
            b,
            distance,
            pd_samples,
            seed,
            data,
        } => distances(a, b, distance, pd_samples, seed, data),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
