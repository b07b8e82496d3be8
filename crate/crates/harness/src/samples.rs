//! Sample sets on which phenotypic distances are measured.

use std::fmt;
use std::str::FromStr;

use cgp_smbo::design::maximin_latin_hypercube;
use cgp_smbo::genome::FeatureMatrix;
use cgp_smbo::task::Dataset;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Random Latin hypercubes drawn per maximin design.
pub const MAXIMIN_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdSource {
    /// The scaled dataset features themselves.
    Full,
    Rsm15,
    Rsm60,
}

impl PdSource {
    pub fn tag(self) -> &'static str {
        match self {
            PdSource::Full => "full",
            PdSource::Rsm15 => "rsm15",
            PdSource::Rsm60 => "rsm60",
        }
    }

    /// Design size, or `None` for the full dataset.
    pub fn design_size(self) -> Option<usize> {
        match self {
            PdSource::Full => None,
            PdSource::Rsm15 => Some(15),
            PdSource::Rsm60 => Some(60),
        }
    }
}

impl fmt::Display for PdSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PdSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(PdSource::Full),
            "rsm15" => Ok(PdSource::Rsm15),
            "rsm60" => Ok(PdSource::Rsm60),
            _ => Err(format!("unknown PD sample set {s:?} (expected full, rsm15 or rsm60)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdSampleSet {
    pub source: PdSource,
    pub features: FeatureMatrix,
}

/// Builds the sample set for `source`. Designs cover the scaled unit box.
pub fn generate_pd_samples<R: Rng + ?Sized>(source: PdSource, data: &Dataset, rng: &mut R) -> PdSampleSet {
    let features = match source.design_size() {
        None => data.features().clone(),
        Some(n) => maximin_latin_hypercube(n, data.features().n_cols(), MAXIMIN_DRAWS, rng),
    };
    PdSampleSet { source, features }
}
