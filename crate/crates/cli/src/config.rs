//! Run configuration: explicit flags over a JSON config file over defaults.

use std::fs;
use std::path::{Path, PathBuf};

use loomtex::draft::WeavingDraft;
use loomtex::params::FabricParams;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_RES: u32 = 1024;

/// Draft given inline as a matrix or as a path to a draft file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DraftSource {
    Inline(WeavingDraft),
    File(PathBuf),
}

/// Parameters given inline or as a path to a parameter document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSource {
    Inline(Box<FabricParams>),
    File(PathBuf),
}

/// Keys accepted in a `--config` file. The `config` object of a run manifest
/// has the same shape, so it can be fed back to reproduce the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft: Option<DraftSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub res: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sliding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flyaway: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersample: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub albedo: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub albedo_solid: Option<String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        // a whole manifest is accepted as well as its config object
        let v = match v.get("config") {
            Some(c) if v.get("files").is_some() => c.clone(),
            _ => v,
        };
        serde_json::from_value(v).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}
