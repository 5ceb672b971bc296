use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamic::DnmfModel;
use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, StochasticMatrix};

pub const FORMAT_VERSION: u32 = 1;

/// Column sums further than this from one are rejected on load.
pub const LOAD_REJECT_TOL: f64 = 1e-6;
/// Column sums further than this from one are renormalized on load.
pub const LOAD_RENORMALIZE_TOL: f64 = 1e-9;

/// JSON persistence format for a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    #[serde(rename = "K")]
    pub bins: usize,
    #[serde(rename = "I")]
    pub rank: usize,
    #[serde(rename = "J")]
    pub order: usize,
    /// `K × I`, row-major.
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    /// `J` matrices of size `I × I`, row-major.
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub train_q: f64,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// A loaded model plus any non-fatal issues found while loading it.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: DnmfModel,
    pub train_q: f64,
    pub metadata: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl ModelFile {
    pub fn from_model(model: &DnmfModel, train_q: f64, metadata: BTreeMap<String, String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            bins: model.bins(),
            rank: model.rank(),
            order: model.order(),
            w: model.basis().as_slice().to_vec(),
            a: model.lags().iter().map(|a| a.as_slice().to_vec()).collect(),
            train_q,
            metadata,
        }
    }

    /// Validates the file and rebuilds the model.
    ///
    /// Basis columns within [`LOAD_REJECT_TOL`] of summing to one are accepted; those off by
    /// more than [`LOAD_RENORMALIZE_TOL`] are renormalized and reported in the warnings.
    pub fn into_model(self) -> Result<LoadedModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.w.len() != self.bins * self.rank {
            return Err(Error::Parse(format!(
                "W has {} entries, expected K*I = {}",
                self.w.len(),
                self.bins * self.rank
            )));
        }
        if self.a.len() != self.order {
            return Err(Error::Parse(format!("{} lag matrices for J = {}", self.a.len(), self.order)));
        }
        let w = NonnegMatrix::new(self.bins, self.rank, self.w)?;
        let mut warnings = Vec::new();
        let sums = w.column_sums();
        let worst = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        let w = if worst > LOAD_REJECT_TOL {
            let col = sums.iter().position(|s| (s - 1.0).abs() == worst).unwrap_or(0);
            return Err(Error::NotStochastic { col, sum: sums[col] });
        } else if worst > LOAD_RENORMALIZE_TOL {
            warnings.push(format!("basis columns deviate from unit sum by up to {worst:e}; renormalized"));
            w.normalize_columns()?
        } else {
            StochasticMatrix::new(w)?
        };
        let lags = self
            .a
            .into_iter()
            .enumerate()
            .map(|(j, a)| {
                if a.len() != self.rank * self.rank {
                    return Err(Error::Parse(format!("A[{j}] has {} entries, expected I*I", a.len())));
                }
                NonnegMatrix::new(self.rank, self.rank, a)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadedModel {
            model: DnmfModel::new(w, lags)?,
            train_q: self.train_q,
            metadata: self.metadata,
            warnings,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
