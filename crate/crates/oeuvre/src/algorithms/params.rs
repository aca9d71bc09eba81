//! Algorithm selection and parameter files.
//!
//! A params file is TOML with an `algorithm` key and one section per
//! algorithm; fitted results are written in the same format, including
//! per-block overrides, so `fit` output feeds straight back into
//! `disambiguate`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    run_backes, run_baseline, run_caron_with_threshold, run_cota, run_schulz, AlgoError,
    BackesParams, BlockRun, CaronParams, CotaParams, SchulzParams,
};
use crate::blocking::Block;
use crate::corpus::Corpus;
use crate::features::{GeneralNameList, RuleScoreTable};

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("unknown algorithm {0:?} (expected baseline, cota, schulz, caron, or backes)")]
    UnknownAlgorithm(String),
    #[error("params file: {0}")]
    Toml(String),
    #[error("params file has no section for algorithm {0:?}")]
    MissingSection(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Baseline,
    Cota,
    Schulz,
    Caron,
    Backes,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Baseline,
        AlgorithmKind::Cota,
        AlgorithmKind::Schulz,
        AlgorithmKind::Caron,
        AlgorithmKind::Backes,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Baseline => "baseline",
            AlgorithmKind::Cota => "cota",
            AlgorithmKind::Schulz => "schulz",
            AlgorithmKind::Caron => "caron",
            AlgorithmKind::Backes => "backes",
        }
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, ParamsError> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(AlgorithmKind::Baseline),
            "cota" => Ok(AlgorithmKind::Cota),
            "schulz" => Ok(AlgorithmKind::Schulz),
            "caron" => Ok(AlgorithmKind::Caron),
            "backes" => Ok(AlgorithmKind::Backes),
            other => Err(ParamsError::UnknownAlgorithm(other.to_string())),
        }
    }
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-block absolute threshold override for the rule-based strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaronOverride {
    pub threshold: i32,
}

/// Per-block absolute quality-limit override for the specificity strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackesOverride {
    pub limit: f64,
}

/// A fully resolved algorithm choice with global parameters and optional
/// per-block overrides (written by flexible fitting).
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    Baseline,
    Cota {
        global: CotaParams,
        per_block: BTreeMap<String, CotaParams>,
    },
    Schulz {
        global: SchulzParams,
        per_block: BTreeMap<String, SchulzParams>,
    },
    Caron {
        global: CaronParams,
        per_block: BTreeMap<String, CaronOverride>,
    },
    Backes {
        global: BackesParams,
        per_block: BTreeMap<String, BackesOverride>,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ParamsFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cota: Option<Section<CotaParams, CotaParams>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schulz: Option<Section<SchulzParams, SchulzParams>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    caron: Option<Section<CaronParams, CaronOverride>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    backes: Option<Section<BackesParams, BackesOverride>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Section<G, P> {
    #[serde(flatten)]
    global: G,
    #[serde(default = "BTreeMap::new", skip_serializing_if = "BTreeMap::is_empty")]
    per_block: BTreeMap<String, P>,
}

impl AlgorithmConfig {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            AlgorithmConfig::Baseline => AlgorithmKind::Baseline,
            AlgorithmConfig::Cota { .. } => AlgorithmKind::Cota,
            AlgorithmConfig::Schulz { .. } => AlgorithmKind::Schulz,
            AlgorithmConfig::Caron { .. } => AlgorithmKind::Caron,
            AlgorithmConfig::Backes { .. } => AlgorithmKind::Backes,
        }
    }

    pub fn default_for(kind: AlgorithmKind) -> Self {
        match kind {
            AlgorithmKind::Baseline => AlgorithmConfig::Baseline,
            AlgorithmKind::Cota => AlgorithmConfig::Cota {
                global: CotaParams::default(),
                per_block: BTreeMap::new(),
            },
            AlgorithmKind::Schulz => AlgorithmConfig::Schulz {
                global: SchulzParams::default(),
                per_block: BTreeMap::new(),
            },
            AlgorithmKind::Caron => AlgorithmConfig::Caron {
                global: CaronParams::default(),
                per_block: BTreeMap::new(),
            },
            AlgorithmKind::Backes => AlgorithmConfig::Backes {
                global: BackesParams::default(),
                per_block: BTreeMap::new(),
            },
        }
    }

    /// Parses a params file. `kind` must be given either here (the CLI
    /// flag) or as the file's `algorithm` key; the flag wins.
    pub fn from_toml(text: &str, kind: Option<AlgorithmKind>) -> Result<Self, ParamsError> {
        let file: ParamsFile = toml::from_str(text).map_err(|e| ParamsError::Toml(e.to_string()))?;
        let kind = match (kind, &file.algorithm) {
            (Some(kind), _) => kind,
            (None, Some(name)) => name.parse()?,
            (None, None) => {
                return Err(ParamsError::Toml(
                    "no algorithm given on the command line or in the file".into(),
                ))
            }
        };
        Ok(match kind {
            AlgorithmKind::Baseline => AlgorithmConfig::Baseline,
            AlgorithmKind::Cota => {
                let s = file.cota.ok_or(ParamsError::MissingSection("cota"))?;
                AlgorithmConfig::Cota {
                    global: s.global,
                    per_block: s.per_block,
                }
            }
            AlgorithmKind::Schulz => {
                let s = file.schulz.ok_or(ParamsError::MissingSection("schulz"))?;
                AlgorithmConfig::Schulz {
                    global: s.global,
                    per_block: s.per_block,
                }
            }
            AlgorithmKind::Caron => {
                let s = file.caron.ok_or(ParamsError::MissingSection("caron"))?;
                AlgorithmConfig::Caron {
                    global: s.global,
                    per_block: s.per_block,
                }
            }
            AlgorithmKind::Backes => {
                let s = file.backes.ok_or(ParamsError::MissingSection("backes"))?;
                AlgorithmConfig::Backes {
                    global: s.global,
                    per_block: s.per_block,
                }
            }
        })
    }

    pub fn to_toml(&self) -> String {
        let mut file = ParamsFile {
            algorithm: Some(self.kind().as_str().to_string()),
            ..Default::default()
        };
        match self {
            AlgorithmConfig::Baseline => {}
            AlgorithmConfig::Cota { global, per_block } => {
                file.cota = Some(Section {
                    global: *global,
                    per_block: per_block.clone(),
                });
            }
            AlgorithmConfig::Schulz { global, per_block } => {
                file.schulz = Some(Section {
                    global: *global,
                    per_block: per_block.clone(),
                });
            }
            AlgorithmConfig::Caron { global, per_block } => {
                file.caron = Some(Section {
                    global: global.clone(),
                    per_block: per_block.clone(),
                });
            }
            AlgorithmConfig::Backes { global, per_block } => {
                file.backes = Some(Section {
                    global: *global,
                    per_block: per_block.clone(),
                });
            }
        }
        toml::to_string(&file).expect("params serialize")
    }

    /// Runs the configured algorithm on one block, honoring any per-block
    /// override for it.
    pub fn run_block(
        &self,
        block: &Block,
        corpus: &Corpus,
        table: &RuleScoreTable,
        names: &GeneralNameList,
    ) -> Result<BlockRun, AlgoError> {
        let key = block.key.key();
        match self {
            AlgorithmConfig::Baseline => Ok(BlockRun {
                clustering: run_baseline(block),
                trace: None,
            }),
            AlgorithmConfig::Cota { global, per_block } => {
                let params = per_block.get(key).unwrap_or(global);
                Ok(BlockRun {
                    clustering: run_cota(block, corpus, params)?,
                    trace: None,
                })
            }
            AlgorithmConfig::Schulz { global, per_block } => {
                let params = per_block.get(key).unwrap_or(global);
                Ok(BlockRun {
                    clustering: run_schulz(block, corpus, params)?,
                    trace: None,
                })
            }
            AlgorithmConfig::Caron { global, per_block } => {
                let clustering = match per_block.get(key) {
                    Some(over) => run_caron_with_threshold(block, corpus, over.threshold, table, names),
                    None => {
                        global.validate()?;
                        run_caron_with_threshold(
                            block,
                            corpus,
                            global.threshold_for(block.mention_ids.len()),
                            table,
                            names,
                        )
                    }
                };
                Ok(BlockRun {
                    clustering,
                    trace: None,
                })
            }
            AlgorithmConfig::Backes { global, per_block } => {
                let params = match per_block.get(key) {
                    Some(over) => BackesParams {
                        lambda: global.lambda,
                        limit: Some(over.limit),
                    },
                    None => *global,
                };
                let (clustering, trace) = run_backes(block, corpus, &params)?;
                Ok(BlockRun {
                    clustering,
                    trace: Some(trace),
                })
            }
        }
    }
}
