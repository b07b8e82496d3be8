//! Surrogate-model-based optimization of CGPANN genomes.
//!
//! After a random initial design, every iteration refits a Kriging model on
//! the whole archive (observations are negated fitness), proposes one
//! candidate by maximizing expected improvement and evaluates it with the
//! true fitness. Proposals alternate between a local search around the
//! incumbent and a global search from random genomes:
//!
//! | mode   | seeding pool                                   | mutation rate |
//! |--------|------------------------------------------------|---------------|
//! | local  | incumbent plus `local_starts - 1` mutants of it | `local_rate`  |
//! | global | `global_starts` random genomes                  | `global_rate` |
//!
//! The pool member with the highest EI seeds a (1+4)-ES that spends
//! `es_budget` further EI evaluations.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use thiserror::Error;

use crate::distance::{DistanceError, DistanceKind, DistanceMatrix, Prepared};
use crate::evolution::{evolve_seeded, mutate, EvalTrace, TraceRecorder, OFFSPRING};
use crate::genome::{Genome, GenomeConfig};
use crate::surrogate::{fit_cached, FitCache, KrigingModel, SurrogateError, ThetaBounds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmboError {
    #[error("invalid optimizer configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("surrogate model failed: {0}")]
    Surrogate(#[from] SurrogateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchMode {
    Local,
    Global,
}

impl SearchMode {
    pub fn other(self) -> SearchMode {
        match self {
            SearchMode::Local => SearchMode::Global,
            SearchMode::Global => SearchMode::Local,
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Local => "L",
            SearchMode::Global => "G",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SmboConfig {
    pub genome: GenomeConfig,
    pub distance: DistanceKind,
    pub initial_size: usize,
    pub iterations: usize,
    pub local_rate: f64,
    pub global_rate: f64,
    pub local_starts: usize,
    pub global_starts: usize,
    /// EI evaluations of the acquisition ES; a multiple of 4.
    pub es_budget: usize,
    pub theta_bounds: ThetaBounds,
    /// Mode of the first iteration; modes alternate afterwards.
    pub first_mode: SearchMode,
    /// Forced mutations applied to a proposal that duplicates an archive
    /// member before giving up and accepting it.
    pub duplicate_retries: usize,
}

impl SmboConfig {
    /// Defaults: 50 initial genomes, 200 iterations, local 5% with 10 starts,
    /// global 15% with 1000 starts, 400 ES evaluations per proposal.
    pub fn new(genome: GenomeConfig, distance: DistanceKind) -> Self {
        SmboConfig {
            genome,
            distance,
            initial_size: 50,
            iterations: 200,
            local_rate: 0.05,
            global_rate: 0.15,
            local_starts: 10,
            global_starts: 1000,
            es_budget: 400,
            theta_bounds: ThetaBounds::default(),
            first_mode: SearchMode::Local,
            duplicate_retries: 10,
        }
    }

    pub fn validate(&self) -> Result<(), SmboError> {
        if self.initial_size < 2 {
            return Err(SmboError::Config("initial_size must be at least 2 to fit a model"));
        }
        if self.iterations == 0 {
            return Err(SmboError::Config("iterations must be at least 1"));
        }
        if self.local_starts == 0 || self.global_starts == 0 {
            return Err(SmboError::Config("seeding pools must be non-empty"));
        }
        if self.es_budget == 0 || self.es_budget % OFFSPRING != 0 {
            return Err(SmboError::Config("es_budget must be a positive multiple of 4"));
        }
        for rate in [self.local_rate, self.global_rate] {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(SmboError::Config("mutation rates must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn rate(&self, mode: SearchMode) -> f64 {
        match mode {
            SearchMode::Local => self.local_rate,
            SearchMode::Global => self.global_rate,
        }
    }

    pub fn starts(&self, mode: SearchMode) -> usize {
        match mode {
            SearchMode::Local => self.local_starts,
            SearchMode::Global => self.global_starts,
        }
    }

    /// Total true fitness evaluations of a run.
    pub fn budget(&self) -> usize {
        self.initial_size + self.iterations
    }

    /// EI evaluations spent on one proposal in `mode`.
    pub fn surrogate_evaluations(&self, mode: SearchMode) -> usize {
        self.starts(mode) + self.es_budget
    }
}

/// Evaluated genomes with their distance features and pairwise distances.
#[derive(Debug, Clone)]
pub struct Archive {
    kind: DistanceKind,
    entries: Vec<Prepared>,
    fitness: Vec<f64>,
    distances: DistanceMatrix,
    cache: FitCache,
}

impl Archive {
    pub fn new(kind: DistanceKind) -> Self {
        Archive {
            kind,
            entries: Vec::new(),
            fitness: Vec::new(),
            distances: DistanceMatrix::empty(),
            cache: FitCache::new(),
        }
    }

    pub fn kind(&self) -> &DistanceKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn genomes(&self) -> impl ExactSizeIterator<Item = &Genome> + '_ {
        self.entries.iter().map(Prepared::genome)
    }

    pub fn genome(&self, i: usize) -> &Genome {
        self.entries[i].genome()
    }

    /// Fitness values on the maximization scale.
    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    /// Index of the highest fitness; the earliest wins ties.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &f) in self.fitness.iter().enumerate() {
            if best.is_none_or(|b| f > self.fitness[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn distances_to(&self, candidate: &Prepared) -> Result<Vec<f64>, DistanceError> {
        self.entries
            .iter()
            .map(|e| self.kind.distance(candidate, e))
            .collect()
    }

    pub fn push(&mut self, genome: &Genome, fitness: f64) -> Result<(), DistanceError> {
        let prepared = self.kind.prepare(genome);
        let row = self.distances_to(&prepared)?;
        self.push_prepared(prepared, fitness, &row);
        Ok(())
    }

    fn push_prepared(&mut self, prepared: Prepared, fitness: f64, distances: &[f64]) {
        self.distances.push(distances);
        self.entries.push(prepared);
        self.fitness.push(fitness);
    }

    /// Fits a Kriging model on negated fitness. Factorizations are reused
    /// across calls as the archive grows.
    pub fn fit(&mut self, bounds: ThetaBounds) -> Result<KrigingModel, SurrogateError> {
        let y: Vec<f64> = self.fitness.iter().map(|f| -f).collect();
        fit_cached(&self.distances, &y, bounds, &mut self.cache)
    }

    /// Expected improvement of `genome` under `model`.
    pub fn acquisition(&self, model: &KrigingModel, genome: &Genome) -> Result<f64, SmboError> {
        let prepared = self.kind.prepare(genome);
        let d = self.distances_to(&prepared)?;
        Ok(model.expected_improvement(&d)?)
    }
}

#[derive(Debug, Clone)]
pub struct Proposal {
    pub genome: Genome,
    /// EI of the acquisition-ES winner (before any duplicate repair).
    pub acquisition: f64,
    /// Highest EI within the seeding pool.
    pub best_seed_acquisition: f64,
    pub ei_evaluations: usize,
    pub duplicate_retries: usize,
    /// The proposal still has distance 0 to an archive member.
    pub duplicate_unresolved: bool,
}

/// Proposes the next genome to evaluate by maximizing expected improvement.
pub fn propose_candidate<R: Rng + ?Sized>(
    archive: &Archive,
    model: &KrigingModel,
    mode: SearchMode,
    config: &SmboConfig,
    rng: &mut R,
) -> Result<Proposal, SmboError> {
    let rate = config.rate(mode);
    let pool: Vec<Genome> = match mode {
        SearchMode::Local => {
            let incumbent = archive
                .best_index()
                .map(|i| archive.genome(i).clone())
                .ok_or(SmboError::Config("archive is empty"))?;
            let mut pool = Vec::with_capacity(config.local_starts);
            for _ in 1..config.local_starts {
                pool.push(mutate(&incumbent, rate, rng));
            }
            pool.insert(0, incumbent);
            pool
        }
        SearchMode::Global => (0..config.global_starts)
            .map(|_| Genome::random(&config.genome, rng))
            .collect(),
    };

    let mut evaluations = 0usize;
    let mut failure: Option<SmboError> = None;
    let mut objective = |g: &Genome| {
        evaluations += 1;
        match archive.acquisition(model, g) {
            Ok(ei) => ei,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };

    let mut seed: Option<(usize, f64)> = None;
    for (i, g) in pool.iter().enumerate() {
        let ei = objective(g);
        if seed.is_none_or(|(_, best)| ei > best) {
            seed = Some((i, ei));
        }
    }
    let (seed_index, seed_value) = seed.expect("pool is non-empty");
    let seed_genome = pool.into_iter().nth(seed_index).expect("index from pool");
    let EvalTrace {
        best_genome,
        best_value,
        ..
    } = evolve_seeded(
        seed_genome,
        seed_value,
        &mut objective,
        config.es_budget / OFFSPRING,
        rate,
        rng,
    );
    if let Some(e) = failure {
        return Err(e);
    }

    let mut genome = best_genome;
    let mut retries = 0;
    let mut duplicate = is_duplicate(archive, &genome)?;
    while duplicate && retries < config.duplicate_retries {
        genome = mutate(&genome, rate, rng);
        retries += 1;
        duplicate = is_duplicate(archive, &genome)?;
    }
    Ok(Proposal {
        genome,
        acquisition: best_value,
        best_seed_acquisition: seed_value,
        ei_evaluations: evaluations,
        duplicate_retries: retries,
        duplicate_unresolved: duplicate,
    })
}

fn is_duplicate(archive: &Archive, genome: &Genome) -> Result<bool, DistanceError> {
    let prepared = archive.kind.prepare(genome);
    Ok(archive.distances_to(&prepared)?.contains(&0.0))
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub mode: SearchMode,
    pub ei_evaluations: usize,
    pub theta: f64,
    pub nugget: f64,
    pub acquisition: f64,
    pub fitness: f64,
    pub duplicate_unresolved: bool,
}

#[derive(Debug, Clone)]
pub struct SmboRun {
    /// Best-so-far true fitness per true evaluation.
    pub trace: EvalTrace,
    pub iterations: Vec<IterationRecord>,
    pub archive: Archive,
}

impl SmboRun {
    pub fn true_evaluations(&self) -> usize {
        self.trace.evaluations()
    }
}

/// Runs the optimizer, maximizing `fitness`.
pub fn run_smbo<F, R>(config: &SmboConfig, mut fitness: F, rng: &mut R) -> Result<SmboRun, SmboError>
where
    F: FnMut(&Genome) -> f64,
    R: Rng + ?Sized,
{
    config.validate()?;
    let mut archive = Archive::new(config.distance.clone());
    let mut recorder = TraceRecorder::new(config.budget());
    for _ in 0..config.initial_size {
        let genome = Genome::random(&config.genome, rng);
        let value = fitness(&genome);
        recorder.record(value);
        archive.push(&genome, value)?;
    }

    let mut mode = config.first_mode;
    let mut iterations = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let model = archive.fit(config.theta_bounds)?;
        let proposal = propose_candidate(&archive, &model, mode, config, rng)?;
        let value = fitness(&proposal.genome);
        recorder.record(value);
        archive.push(&proposal.genome, value)?;
        iterations.push(IterationRecord {
            mode,
            ei_evaluations: proposal.ei_evaluations,
            theta: model.theta(),
            nugget: model.nugget(),
            acquisition: proposal.acquisition,
            fitness: value,
            duplicate_unresolved: proposal.duplicate_unresolved,
        });
        mode = mode.other();
    }

    let best = archive.best_index().expect("archive is non-empty");
    let trace = EvalTrace {
        entries: recorder.entries,
        best_genome: archive.genome(best).clone(),
        best_value: archive.fitness()[best],
    };
    Ok(SmboRun {
        trace,
        iterations,
        archive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::FeatureMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn active_fraction(g: &Genome) -> f64 {
        g.active_graph().active_count() as f64 / g.config().n_nodes() as f64
    }

    fn small(distance: DistanceKind) -> SmboConfig {
        SmboConfig {
            initial_size: 8,
            iterations: 6,
            global_starts: 50,
            es_budget: 40,
            ..SmboConfig::new(GenomeConfig::iris(), distance)
        }
    }

    #[test]
    fn validation() {
        let ok = SmboConfig::new(GenomeConfig::iris(), DistanceKind::Genotypic);
        ok.validate().unwrap();
        assert_eq!(ok.budget(), 250);
        assert_eq!(ok.surrogate_evaluations(SearchMode::Local), 410);
        assert_eq!(ok.surrogate_evaluations(SearchMode::Global), 1400);
        for bad in [
            SmboConfig { es_budget: 402, ..ok.clone() },
            SmboConfig { initial_size: 1, ..ok.clone() },
            SmboConfig { local_rate: 0.0, ..ok.clone() },
            SmboConfig { global_starts: 0, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(SmboError::Config(_))));
        }
    }

    #[test]
    fn archive_tracks_distances_incrementally() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let config = GenomeConfig::iris();
        let mut archive = Archive::new(DistanceKind::GenotypicId);
        let genomes: Vec<Genome> = (0..5).map(|_| Genome::random(&config, &mut rng)).collect();
        for (i, g) in genomes.iter().enumerate() {
            archive.push(g, i as f64).unwrap();
        }
        let full = crate::distance::distance_matrix(&genomes, &DistanceKind::GenotypicId).unwrap();
        assert_eq!(archive.distances(), &full);
        assert_eq!(archive.best_index(), Some(4));
    }

    #[test]
    fn proposals_spend_the_configured_budgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let config = SmboConfig::new(GenomeConfig::iris(), DistanceKind::Genotypic);
        let mut archive = Archive::new(DistanceKind::Genotypic);
        for _ in 0..2 {
            let g = Genome::random(&config.genome, &mut rng);
            archive.push(&g, active_fraction(&g)).unwrap();
        }
        let model = archive.fit(config.theta_bounds).unwrap();
        for (mode, expected) in [(SearchMode::Local, 410), (SearchMode::Global, 1400)] {
            let p = propose_candidate(&archive, &model, mode, &config, &mut rng).unwrap();
            assert_eq!(p.ei_evaluations, expected);
            assert!(p.acquisition >= p.best_seed_acquisition);
            p.genome.validate().unwrap();
        }
    }

    #[test]
    fn run_counts_and_monotone_trace() {
        let samples = FeatureMatrix::from_rows(4, [[0.1, 0.9, 0.3, 0.5], [0.7, 0.2, 0.8, 0.4]]);
        for kind in [
            DistanceKind::Genotypic,
            DistanceKind::GenotypicId,
            DistanceKind::phenotypic(samples.clone()).unwrap(),
        ] {
            let config = small(kind);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let run = run_smbo(&config, active_fraction, &mut rng).unwrap();
            assert_eq!(run.true_evaluations(), 14);
            assert_eq!(run.archive.len(), 14);
            assert!(run.trace.entries.windows(2).all(|w| w[0].best <= w[1].best));
            let modes: Vec<SearchMode> = run.iterations.iter().map(|r| r.mode).collect();
            assert_eq!(modes[..3], [SearchMode::Local, SearchMode::Global, SearchMode::Local]);
            for r in &run.iterations {
                assert_eq!(r.ei_evaluations, config.surrogate_evaluations(r.mode));
            }
        }
    }

    #[test]
    fn run_is_deterministic_per_seed() {
        let config = small(DistanceKind::Genotypic);
        let go = || run_smbo(&config, active_fraction, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let (a, b) = (go(), go());
        assert_eq!(a.trace.entries, b.trace.entries);
        assert_eq!(a.iterations, b.iterations);
        assert!(a.archive.genomes().eq(b.archive.genomes()));
    }
}
