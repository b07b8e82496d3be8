//! JSON genome files: the genome configuration plus the flat gene array.
//!
//! ```json
//! {"config": {"n_inputs": 4, "n_outputs": 3, "n_nodes": 40, "arity": 5,
//!             "weight_low": -1.0, "weight_high": 1.0,
//!             "function_set": ["tanh", "softsign", "step", "sigmoid", "gauss"]},
//!  "genes": [0, 3, ...]}
//! ```
//!
//! Genes follow [`Genome::to_genes`]: per node its connections, weights and
//! function index, then the output addresses. Weights are reals; all other
//! genes are integers.

use std::fs;
use std::path::Path;

use cgp_smbo::genome::{GenomeError, GenomeParams};
use cgp_smbo::Genome;
use serde::{Deserialize, Serialize};
use serde_json::Number;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenomeJsonError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

#[derive(Debug, Error)]
pub enum GenomeIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: GenomeJsonError,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenomeFile {
    config: GenomeParams,
    genes: Vec<Number>,
}

pub fn genome_to_json(genome: &Genome) -> String {
    let params = genome.config().params();
    let period = 2 * params.arity + 1;
    let node_genes = params.n_nodes * period;
    let genes = genome
        .to_genes()
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let is_weight = i < node_genes && (params.arity..2 * params.arity).contains(&(i % period));
            if is_weight {
                Number::from_f64(g).expect("weights are finite")
            } else {
                Number::from(g as u64)
            }
        })
        .collect();
    let file = GenomeFile {
        config: params.clone(),
        genes,
    };
    serde_json::to_string_pretty(&file).expect("genome serializes")
}

pub fn genome_from_json(text: &str) -> Result<Genome, GenomeJsonError> {
    let file: GenomeFile = serde_json::from_str(text)?;
    let config = file.config.build()?;
    // Non-representable numbers become NaN and fail validation.
    let genes: Vec<f64> = file.genes.iter().map(|n| n.as_f64().unwrap_or(f64::NAN)).collect();
    Ok(Genome::from_genes(&config, &genes)?)
}

pub fn write_genome(path: &Path, genome: &Genome) -> Result<(), GenomeIoError> {
    fs::write(path, genome_to_json(genome) + "\n").map_err(|source| GenomeIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_genome(path: &Path) -> Result<Genome, GenomeIoError> {
    let p = || path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| GenomeIoError::Io { path: p(), source })?;
    genome_from_json(&text).map_err(|source| GenomeIoError::Parse { path: p(), source })
}
