//! Point mutation, the (1+4) evolution strategy and random search.
//!
//! All searches maximize an arbitrary objective over genomes, so the same
//! code drives both true-fitness runs and acquisition searches on a
//! surrogate.

use alloc::vec::Vec;

use rand::Rng;

use crate::genome::{Genome, GenomeConfig};

/// Offspring per generation of the (1+λ) strategy.
pub const OFFSPRING: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// 1-based objective evaluation index.
    pub evaluation: usize,
    /// Best objective value seen up to and including this evaluation.
    pub best: f64,
}

/// Best-so-far record of a search.
#[derive(Debug, Clone)]
pub struct EvalTrace {
    pub entries: Vec<TracePoint>,
    pub best_genome: Genome,
    pub best_value: f64,
}

impl EvalTrace {
    pub fn evaluations(&self) -> usize {
        self.entries.len()
    }
}

pub(crate) struct TraceRecorder {
    pub(crate) entries: Vec<TracePoint>,
    pub(crate) best: f64,
}

impl TraceRecorder {
    pub(crate) fn new(capacity: usize) -> Self {
        TraceRecorder {
            entries: Vec::with_capacity(capacity),
            best: f64::NEG_INFINITY,
        }
    }

    fn seeded(best: f64) -> Self {
        TraceRecorder {
            entries: Vec::new(),
            best,
        }
    }

    /// Returns true when `value` strictly improves on the running best.
    pub(crate) fn record(&mut self, value: f64) -> bool {
        let improved = value > self.best;
        if improved {
            self.best = value;
        }
        self.entries.push(TracePoint {
            evaluation: self.entries.len() + 1,
            best: self.best,
        });
        improved
    }
}

/// Resamples each gene uniformly from its legal range with probability
/// `rate`. Activity is derived, so it follows automatically.
pub fn mutate<R: Rng + ?Sized>(genome: &Genome, rate: f64, rng: &mut R) -> Genome {
    debug_assert!((0.0..=1.0).contains(&rate));
    let mut child = genome.clone();
    let config = genome.config().clone();
    let arity = config.arity();
    // Draw the coin for every gene, even at rate 0 or 1, so the stream
    // consumption does not depend on the rate.
    let hit = |rng: &mut R| rng.random::<f64>() < rate;
    for j in 0..config.n_nodes() {
        for k in j * arity..(j + 1) * arity {
            if hit(rng) {
                child.connections[k] = config.sample_connection(j, rng);
            }
        }
        for k in j * arity..(j + 1) * arity {
            if hit(rng) {
                child.weights[k] = config.sample_weight(rng);
            }
        }
        if hit(rng) {
            child.functions[j] = config.sample_function(rng);
        }
    }
    for o in 0..config.n_outputs() {
        if hit(rng) {
            child.outputs[o] = config.sample_output(rng);
        }
    }
    child
}

/// Resamples every gene of every inactive node. The result has the same
/// active graph and computes the same function as `genome`.
pub fn randomize_inactive<R: Rng + ?Sized>(genome: &Genome, rng: &mut R) -> Genome {
    let mut child = genome.clone();
    let config = genome.config().clone();
    let arity = config.arity();
    let graph = genome.active_graph();
    for j in (0..config.n_nodes()).filter(|&j| !graph.is_active(j)) {
        for k in j * arity..(j + 1) * arity {
            child.connections[k] = config.sample_connection(j, rng);
            child.weights[k] = config.sample_weight(rng);
        }
        child.functions[j] = config.sample_function(rng);
    }
    child
}

/// (1+4)-ES starting from an unevaluated parent. Uses exactly
/// `1 + 4 * generations` objective evaluations.
pub fn evolve_one_plus_four<F, R>(
    parent: Genome,
    mut objective: F,
    generations: usize,
    rate: f64,
    rng: &mut R,
) -> EvalTrace
where
    F: FnMut(&Genome) -> f64,
    R: Rng + ?Sized,
{
    let mut recorder = TraceRecorder::new(1 + OFFSPRING * generations);
    let value = objective(&parent);
    recorder.record(value);
    run_generations(parent, value, recorder, objective, generations, rate, rng)
}

/// (1+4)-ES from a parent whose objective value is already known. Only the
/// `4 * generations` offspring evaluations are performed and traced.
pub fn evolve_seeded<F, R>(
    parent: Genome,
    parent_value: f64,
    objective: F,
    generations: usize,
    rate: f64,
    rng: &mut R,
) -> EvalTrace
where
    F: FnMut(&Genome) -> f64,
    R: Rng + ?Sized,
{
    let recorder = TraceRecorder::seeded(parent_value);
    run_generations(parent, parent_value, recorder, objective, generations, rate, rng)
}

fn run_generations<F, R>(
    mut parent: Genome,
    mut parent_value: f64,
    mut recorder: TraceRecorder,
    mut objective: F,
    generations: usize,
    rate: f64,
    rng: &mut R,
) -> EvalTrace
where
    F: FnMut(&Genome) -> f64,
    R: Rng + ?Sized,
{
    for _ in 0..generations {
        let mut best: Option<(Genome, f64)> = None;
        for _ in 0..OFFSPRING {
            let child = mutate(&parent, rate, rng);
            let value = objective(&child);
            recorder.record(value);
            if best.as_ref().is_none_or(|(_, b)| value > *b) {
                best = Some((child, value));
            }
        }
        let (child, value) = best.expect("at least one offspring");
        // Ties go to the offspring (neutral drift).
        if value >= parent_value {
            parent = child;
            parent_value = value;
        }
    }
    EvalTrace {
        entries: recorder.entries,
        best_genome: parent,
        best_value: parent_value,
    }
}

/// Evaluates `budget` independent random genomes.
///
/// Panics if `budget` is zero.
pub fn random_search<F, R>(config: &GenomeConfig, mut objective: F, budget: usize, rng: &mut R) -> EvalTrace
where
    F: FnMut(&Genome) -> f64,
    R: Rng + ?Sized,
{
    assert!(budget >= 1, "random search needs a positive budget");
    let mut recorder = TraceRecorder::new(budget);
    let mut best: Option<Genome> = None;
    for _ in 0..budget {
        let genome = Genome::random(config, rng);
        if recorder.record(objective(&genome)) || best.is_none() {
            best = Some(genome);
        }
    }
    EvalTrace {
        entries: recorder.entries,
        best_genome: best.expect("budget is positive"),
        best_value: recorder.best,
    }
}
