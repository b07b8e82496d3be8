//! Surrogate-model-based neuroevolution for Cartesian Genetic Programming
//! neural networks (CGPANN).
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece of the optimizer:
//!
//! - [`genome`]: the fixed-length CGPANN genotype, active-graph decoding and
//!   forward evaluation to class probabilities.
//! - [`evolution`]: per-gene probabilistic mutation, the (1+4) evolution
//!   strategy and random search.
//! - [`distance`]: genotypic (GD), genotypic-ID (GIDD) and phenotypic (PD)
//!   distances between networks, each scaled to `[0, 1]`.
//! - [`surrogate`]: Kriging over a precomputed distance matrix with an
//!   exponential kernel, maximum-likelihood fitting of the kernel width and
//!   the expected-improvement criterion.
//! - [`smbo`]: the outer loop alternating local and global acquisition
//!   searches.
//! - [`task`] and [`design`]: the adjusted-accuracy classification fitness and
//!   space-filling sample designs for the phenotypic distance.
//!
//! File formats, dataset ingestion and the command-line driver live in the
//! `cgp-smbo-harness` crate.
//!
//! ```
//! use cgp_smbo::genome::{Genome, GenomeConfig};
//! use cgp_smbo::evolution::evolve_one_plus_four;
//! use rand::SeedableRng;
//!
//! let config = GenomeConfig::iris();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let parent = Genome::random(&config, &mut rng);
//! // Maximize the number of active nodes.
//! let trace = evolve_one_plus_four(
//!     parent,
//!     |g| g.active_graph().active_count() as f64,
//!     10,
//!     0.05,
//!     &mut rng,
//! );
//! assert_eq!(trace.evaluations(), 41);
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod design;
pub mod distance;
pub mod evolution;
pub mod genome;
mod linalg;
pub mod smbo;
pub mod surrogate;
pub mod task;

pub use distance::{DistanceError, DistanceKind, DistanceMatrix};
pub use evolution::{EvalTrace, TracePoint};
pub use genome::{FeatureMatrix, Genome, GenomeConfig, GenomeError, TransferFunction};
pub use smbo::{run_smbo, SmboConfig, SmboError, SmboRun};
pub use surrogate::{KrigingModel, SurrogateError};
pub use task::{adjusted_accuracy, Dataset};
