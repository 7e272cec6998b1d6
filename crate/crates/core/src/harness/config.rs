//! JSON inputs shared by the CLI subcommands.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DensitySpec, DiscreteMeasure, Seed};
use crate::potentials::{GridSpec, PotentialClass};

/// A potential class; `λ` and the certified radius come from the enclosing
/// configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSpec {
    QuadShift {
        a_max: f64,
        b_max: f64,
    },
    MaxQuad {
        a_max: f64,
        b_max: f64,
        #[serde(default = "default_pieces")]
        pieces: usize,
        #[serde(default)]
        conj_nodes: Option<usize>,
    },
    Grid {
        #[serde(rename = "box")]
        grid_box: [f64; 2],
        shape: Vec<usize>,
        lower: f64,
        m: [f64; 3],
    },
}

fn default_pieces() -> usize {
    crate::potentials::DEFAULT_PIECES
}

impl ClassSpec {
    pub fn build(&self, dim: usize, lambda: f64, radius: f64) -> Result<PotentialClass> {
        match self {
            ClassSpec::QuadShift { a_max, b_max } => PotentialClass::quad_shift(dim, lambda, *a_max, *b_max, radius),
            ClassSpec::MaxQuad {
                a_max,
                b_max,
                pieces,
                conj_nodes,
            } => {
                let c = PotentialClass::max_quad(dim, lambda, *pieces, *a_max, *b_max, radius)?;
                Ok(match conj_nodes {
                    Some(n) => c.with_conj_nodes(*n),
                    None => c,
                })
            }
            ClassSpec::Grid {
                grid_box,
                shape,
                lower,
                m,
            } => {
                if shape.len() != dim {
                    return Err(Error::InvalidArgument(format!(
                        "grid shape has {} axes but the problem has dimension {dim}",
                        shape.len()
                    )));
                }
                let grid = GridSpec {
                    lo: grid_box[0],
                    hi: grid_box[1],
                    shape: shape.clone(),
                };
                PotentialClass::grid(grid, lambda, *lower, *m, radius)
            }
        }
    }
}

/// A discrete measure given inline, read from CSV, or sampled from a density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureInput {
    Inline {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Csv {
        csv: PathBuf,
    },
    Sample {
        density: DensitySpec,
        n: usize,
    },
}

impl MeasureInput {
    /// `base` resolves relative CSV paths; `seed` drives sampling.
    pub fn load(&self, base: &Path, seed: Seed) -> Result<DiscreteMeasure> {
        match self {
            MeasureInput::Inline { points, weights } => DiscreteMeasure::new(points, weights.clone()),
            MeasureInput::Csv { csv } => DiscreteMeasure::load_csv(&base.join(csv)),
            MeasureInput::Sample { density, n } => density.sample(*n, seed),
        }
    }
}

/// Configuration failures that should be reported as usage errors.
#[derive(Debug)]
pub enum ConfigError {
    Read(PathBuf, std::io::Error),
    Parse(PathBuf, serde_json::Error),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ConfigError::Parse(p, e) => write!(
                f,
                "malformed config {} at line {}, column {}: {e}",
                p.display(),
                e.line(),
                e.column()
            ),
        }
    }
}

pub fn read_config<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e))
}
