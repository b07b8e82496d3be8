//! Experiment configuration: a flat JSON object whose keys mirror
//! [`ExperimentConfig`], merged under command-line overrides.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cgp_smbo::genome::{GenomeParams, TransferFunction};
use cgp_smbo::smbo::{SearchMode, SmboConfig};
use cgp_smbo::surrogate::ThetaBounds;
use cgp_smbo::{DistanceKind, GenomeConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::samples::PdSource;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Cgpann,
    Smbo,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Method::Random),
            "cgpann" => Ok(Method::Cgpann),
            "smbo" => Ok(Method::Smbo),
            _ => Err(format!("unknown method {s:?} (expected random, cgpann or smbo)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Random => "random",
            Method::Cgpann => "cgpann",
            Method::Smbo => "smbo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceTag {
    Gd,
    Gidd,
    Pd,
}

impl FromStr for DistanceTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(DistanceTag::Gd),
            "gidd" => Ok(DistanceTag::Gidd),
            "pd" => Ok(DistanceTag::Pd),
            _ => Err(format!("unknown distance {s:?} (expected gd, gidd or pd)")),
        }
    }
}

impl fmt::Display for DistanceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceTag::Gd => "gd",
            DistanceTag::Gidd => "gidd",
            DistanceTag::Pd => "pd",
        })
    }
}

/// Every configurable key; absent keys fall back to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigValues {
    pub method: Option<Method>,
    pub distance: Option<DistanceTag>,
    pub pd_samples: Option<PdSource>,
    pub mutation_rate: Option<f64>,
    pub budget: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub n_nodes: Option<usize>,
    pub arity: Option<usize>,
    pub weight_low: Option<f64>,
    pub weight_high: Option<f64>,
    pub function_set: Option<Vec<TransferFunction>>,
    pub initial_size: Option<usize>,
    pub local_rate: Option<f64>,
    pub global_rate: Option<f64>,
    pub local_starts: Option<usize>,
    pub global_starts: Option<usize>,
    pub es_budget: Option<usize>,
    pub theta_low: Option<f64>,
    pub theta_high: Option<f64>,
    pub duplicate_retries: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigValues {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Values of `top` replace those of `self` where present.
    pub fn overlay(mut self, top: ConfigValues) -> Self {
        overlay!(self, top;
            method, distance, pd_samples, mutation_rate, budget, replications, seed, data, out,
            n_nodes, arity, weight_low, weight_high, function_set,
            initial_size, local_rate, global_rate, local_starts, global_starts, es_budget,
            theta_low, theta_high, duplicate_retries,
        );
        self
    }

    pub fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        let method = self.method.ok_or_else(|| invalid("method is required"))?;
        match (method, self.distance) {
            (Method::Smbo, None) => return Err(invalid("method smbo requires a distance")),
            (Method::Random | Method::Cgpann, Some(_)) => {
                return Err(invalid(format!("distance applies only to smbo, not {method}")))
            }
            _ => {}
        }
        let pd_samples = match (self.distance, self.pd_samples) {
            (Some(DistanceTag::Pd), samples) => Some(samples.unwrap_or(PdSource::Full)),
            (_, Some(_)) => return Err(invalid("pd_samples applies only to the pd distance")),
            (_, None) => None,
        };
        let mutation_rate = match (method, self.mutation_rate) {
            (Method::Cgpann, rate) => Some(rate.unwrap_or(0.05)),
            (_, Some(_)) => return Err(invalid("mutation_rate applies only to cgpann")),
            (_, None) => None,
        };
        if let Some(rate) = mutation_rate {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(invalid("mutation_rate must lie in (0, 1]"));
            }
        }

        let defaults = GenomeParams::default();
        let genome = GenomeParams {
            n_nodes: self.n_nodes.unwrap_or(defaults.n_nodes),
            arity: self.arity.unwrap_or(defaults.arity),
            weight_low: self.weight_low.unwrap_or(defaults.weight_low),
            weight_high: self.weight_high.unwrap_or(defaults.weight_high),
            function_set: self.function_set.unwrap_or(defaults.function_set),
            ..defaults
        }
        .build()
        .map_err(|e| invalid(e.to_string()))?;

        let mut smbo = SmboConfig::new(genome.clone(), DistanceKind::Genotypic);
        let theta = ThetaBounds::default();
        smbo.initial_size = self.initial_size.unwrap_or(smbo.initial_size);
        smbo.local_rate = self.local_rate.unwrap_or(smbo.local_rate);
        smbo.global_rate = self.global_rate.unwrap_or(smbo.global_rate);
        smbo.local_starts = self.local_starts.unwrap_or(smbo.local_starts);
        smbo.global_starts = self.global_starts.unwrap_or(smbo.global_starts);
        smbo.es_budget = self.es_budget.unwrap_or(smbo.es_budget);
        smbo.duplicate_retries = self.duplicate_retries.unwrap_or(smbo.duplicate_retries);
        smbo.theta_bounds = ThetaBounds::new(
            self.theta_low.unwrap_or(theta.low()),
            self.theta_high.unwrap_or(theta.high()),
        )
        .map_err(|e| invalid(e.to_string()))?;
        smbo.first_mode = SearchMode::Local;

        let budget = self.budget.unwrap_or(250);
        if budget == 0 {
            return Err(invalid("budget must be at least 1"));
        }
        if method == Method::Smbo {
            if budget <= smbo.initial_size {
                return Err(invalid("smbo budget must exceed initial_size"));
            }
            smbo.iterations = budget - smbo.initial_size;
            smbo.validate().map_err(|e| invalid(e.to_string()))?;
        }
        let replications = self.replications.unwrap_or(30);
        if replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }

        Ok(ExperimentConfig {
            method,
            distance: self.distance,
            pd_samples,
            mutation_rate,
            budget,
            replications,
            seed: self.seed.unwrap_or(0),
            genome,
            smbo,
            data: self.data.unwrap_or_else(|| PathBuf::from("data/iris.csv")),
            out: self.out.unwrap_or_else(|| PathBuf::from("results")),
        })
    }
}

/// A validated experiment. Method-specific fields are `Some` exactly when the
/// method uses them.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub method: Method,
    pub distance: Option<DistanceTag>,
    pub pd_samples: Option<PdSource>,
    pub mutation_rate: Option<f64>,
    /// True fitness evaluations per replication (CGPANN rounds up to whole
    /// generations).
    pub budget: usize,
    pub replications: usize,
    /// Replication `r` uses seed `seed + r`.
    pub seed: u64,
    pub genome: GenomeConfig,
    /// SMBO settings; its `distance` is replaced per replication.
    pub smbo: SmboConfig,
    pub data: PathBuf,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Method column of the output files. CGPANN carries its mutation rate.
    pub fn method_label(&self) -> String {
        match self.mutation_rate {
            Some(rate) => format!("{}_{rate}", self.method),
            None => self.method.to_string(),
        }
    }

    pub fn distance_label(&self) -> String {
        self.distance.map_or_else(|| "none".to_owned(), |d| d.to_string())
    }

    pub fn pd_label(&self) -> &'static str {
        self.pd_samples.map_or("none", PdSource::tag)
    }

    /// File-name stem shared by this experiment's outputs.
    pub fn file_stem(&self) -> String {
        let mut parts = vec![self.method_label()];
        parts.extend(self.distance.map(|d| d.to_string()));
        parts.extend(self.pd_samples.map(|p| p.tag().to_owned()));
        parts.join("_")
    }

    pub fn replication_seed(&self, replication: usize) -> u64 {
        self.seed.wrapping_add(replication as u64)
    }

    /// (1+4)-ES generations that fit the budget, rounding up.
    pub fn cgpann_generations(&self) -> usize {
        (self.budget - 1).div_ceil(4)
    }
}
