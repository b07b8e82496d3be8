//! Replicated runs of one configured method and their CSV outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cgp_smbo::evolution::{evolve_one_plus_four, random_search};
use cgp_smbo::smbo::{run_smbo, IterationRecord};
use cgp_smbo::task::{adjusted_accuracy, Dataset};
use cgp_smbo::{DistanceKind, EvalTrace, Genome, TracePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{DistanceTag, ExperimentConfig, Method};
use crate::samples::generate_pd_samples;

/// Header of the per-evaluation trace CSV.
pub const TRACE_HEADER: &str = "method,distance,pd_samples,seed,eval_index,best_fitness";
/// Header of the per-replication outcome CSV.
pub const RUNS_HEADER: &str = "method,distance,pd_samples,seed,evaluations,final_fitness,wall_seconds,status";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<TracePoint>,
    pub final_fitness: f64,
    pub best_genome: Genome,
    /// Per-iteration diagnostics of SMBO runs; empty for other methods.
    pub iterations: Vec<IterationRecord>,
    pub wall_seconds: f64,
}

impl RunOutcome {
    pub fn evaluations(&self) -> usize {
        self.trace.len()
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub method: String,
    pub distance: String,
    pub pd_samples: String,
    pub replication: usize,
    pub seed: u64,
    /// The failure message of a replication that did not complete.
    pub outcome: Result<RunOutcome, String>,
}

/// Runs one replication with its own RNG stream.
pub fn run_replication(config: &ExperimentConfig, data: &Dataset, replication: usize) -> Result<RunOutcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.replication_seed(replication));
    let fitness = |g: &Genome| adjusted_accuracy(g, data);
    let start = Instant::now();
    let (trace, iterations): (EvalTrace, _) = match config.method {
        Method::Random => (
            random_search(&config.genome, fitness, config.budget, &mut rng),
            Vec::new(),
        ),
        Method::Cgpann => {
            let parent = Genome::random(&config.genome, &mut rng);
            let rate = config.mutation_rate.expect("cgpann has a mutation rate");
            let generations = config.cgpann_generations();
            (evolve_one_plus_four(parent, fitness, generations, rate, &mut rng), Vec::new())
        }
        Method::Smbo => {
            let distance = match config.distance.expect("smbo has a distance") {
                DistanceTag::Gd => DistanceKind::Genotypic,
                DistanceTag::Gidd => DistanceKind::GenotypicId,
                DistanceTag::Pd => {
                    let source = config.pd_samples.expect("pd has a sample set");
                    let samples = generate_pd_samples(source, data, &mut rng);
                    DistanceKind::phenotypic(samples.features).map_err(|e| e.to_string())?
                }
            };
            let mut smbo = config.smbo.clone();
            smbo.distance = distance;
            let run = run_smbo(&smbo, fitness, &mut rng).map_err(|e| e.to_string())?;
            (run.trace, run.iterations)
        }
    };
    Ok(RunOutcome {
        final_fitness: trace.best_value,
        trace: trace.entries,
        best_genome: trace.best_genome,
        iterations,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every replication concurrently. Records come back in replication
/// order; a failed replication does not affect the others.
pub fn run_experiment(config: &ExperimentConfig, data: &Dataset) -> Vec<RunRecord> {
    (0..config.replications)
        .into_par_iter()
        .map(|r| RunRecord {
            method: config.method_label(),
            distance: config.distance_label(),
            pd_samples: config.pd_label().to_owned(),
            replication: r,
            seed: config.replication_seed(r),
            outcome: run_replication(config, data, r),
        })
        .collect()
}

pub fn write_trace_csv(records: &[RunRecord], writer: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{TRACE_HEADER}")?;
    for record in records {
        let Ok(outcome) = &record.outcome else { continue };
        for point in &outcome.trace {
            writeln!(
                w,
                "{},{},{},{},{},{:.12}",
                record.method, record.distance, record.pd_samples, record.seed, point.evaluation, point.best
            )?;
        }
    }
    w.flush()
}

pub fn write_runs_csv(records: &[RunRecord], writer: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{RUNS_HEADER}")?;
    for record in records {
        let prefix = format!("{},{},{},{}", record.method, record.distance, record.pd_samples, record.seed);
        match &record.outcome {
            Ok(o) => writeln!(w, "{prefix},{},{:.12},{:.3},ok", o.evaluations(), o.final_fitness, o.wall_seconds)?,
            Err(e) => writeln!(w, "{prefix},0,,,{}", csv_field(&format!("failed: {e}")))?,
        }
    }
    w.flush()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub trace: PathBuf,
    pub runs: PathBuf,
}

/// Writes `<stem>_trace.csv` and `<stem>_runs.csv` into `dir`.
pub fn write_outputs(config: &ExperimentConfig, records: &[RunRecord], dir: &Path) -> std::io::Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let stem = config.file_stem();
    let files = OutputFiles {
        trace: dir.join(format!("{stem}_trace.csv")),
        runs: dir.join(format!("{stem}_runs.csv")),
    };
    write_trace_csv(records, File::create(&files.trace)?)?;
    write_runs_csv(records, File::create(&files.runs)?)?;
    Ok(files)
}
