//! Scenario files: a configuration, named functions, and a list of
//! experiments, stored as JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigSpec, ExtensionConfig};
use crate::error::{Error, Result};
use crate::forms::{builtin, Anchoring, PiecewiseFn, Segment, BUILTINS};
use crate::presets;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionDef {
    Builtin { name: String },
    Piecewise { segments: Vec<Segment>, anchoring: Anchoring },
}

impl FunctionDef {
    pub fn build(&self, config: &ExtensionConfig) -> Result<PiecewiseFn> {
        match self {
            FunctionDef::Builtin { name } => builtin(config, name),
            FunctionDef::Piecewise { segments, anchoring } => Ok(PiecewiseFn::new(segments.clone(), anchoring.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Energy,
    Decompose,
    Darn,
    Trace,
    Simulate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub config: ConfigSpec,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionDef>,
    #[serde(default)]
    pub experiments: Vec<Experiment>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.check_schema()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ScenarioFile::from_json(&text)
    }

    /// A scenario holding a preset configuration and no functions.
    pub fn from_preset(name: &str, depth: u32) -> Result<Self> {
        Ok(ScenarioFile {
            schema_version: SCHEMA_VERSION,
            config: presets::preset_spec(name, depth)?,
            functions: BTreeMap::new(),
            experiments: Vec::new(),
        })
    }

    fn check_schema(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (name, def) in &self.functions {
            if let FunctionDef::Builtin { name: b } = def {
                if !BUILTINS.contains(&b.as_str()) {
                    return Err(Error::Parse(format!("function {name:?} refers to unknown builtin {b:?}")));
                }
            }
        }
        for (i, e) in self.experiments.iter().enumerate() {
            if let Some(f) = &e.function {
                if !self.functions.contains_key(f) && !BUILTINS.contains(&f.as_str()) {
                    return Err(Error::Parse(format!("experiment {i} refers to unknown function {f:?}")));
                }
            }
        }
        Ok(())
    }

    /// Named function from the file, falling back to the builtins.
    pub fn function(&self, config: &ExtensionConfig, name: &str) -> Result<PiecewiseFn> {
        match self.functions.get(name) {
            Some(def) => def.build(config),
            None => builtin(config, name),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact JSON serialisation, in hex.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}
