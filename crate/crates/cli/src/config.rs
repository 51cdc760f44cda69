//! JSON run configuration: a tree, a value space, and per-command sections.

use std::path::Path;

use serde::Deserialize;

use htlab_core::field::FieldSpec;
use htlab_core::space::{SpaceConfig, ValueSpaceSpec};
use htlab_core::tree::{TreeConfig, WeightedTree, DEFAULT_MAX_VERTICES};
use htlab_core::universal::dense_harmonic;
use htlab_core::harmonic::TreeFunction;
use htlab_core::{Error, Result};

use crate::CmdError;

#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    pub tree: TreeConfig,
    pub space: SpaceConfig,
    /// Seed function: a dense harmonic anchor truncated to a level.
    #[serde(default)]
    pub phi: Option<PhiConfig>,
    /// RNG seed for Monte Carlo cross-checks; `--seed` overrides.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub universal: Option<UniversalParams>,
    #[serde(default)]
    pub frequent: Option<FrequentParams>,
    #[serde(default)]
    pub genericity: Option<GenericityParams>,
    #[serde(default)]
    pub x: Option<XParams>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PhiConfig {
    pub dense_index: u64,
    pub level: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct UniversalParams {
    /// Number of dense targets J; target j carries bound 1/j.
    pub targets: u64,
    #[serde(default)]
    pub tau: TauSpec,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(untagged)]
pub enum TauSpec {
    #[default]
    #[serde(skip)]
    All,
    Named(String),
    Levels(Vec<usize>),
}

impl TauSpec {
    pub fn resolve(&self, depth: usize) -> Result<Option<Vec<usize>>> {
        match self {
            TauSpec::All => Ok(None),
            TauSpec::Named(s) if s == "all" => Ok(None),
            TauSpec::Named(s) if s == "even" => {
                Ok(Some((1..=depth).filter(|l| l % 2 == 0).collect()))
            }
            TauSpec::Named(other) => Err(Error::InvalidConfig(format!(
                "unknown tau spec {other:?} (use \"all\", \"even\", or a level list)"
            ))),
            TauSpec::Levels(levels) => Ok(Some(levels.clone())),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct FrequentParams {
    /// Number of distinct dense targets M.
    pub targets: u64,
    /// Deepest scheduled level.
    pub horizon: u64,
    /// Restrict the schedule to a collapsed level set.
    #[serde(default)]
    pub tau: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GenericityParams {
    pub members: usize,
    pub targets_per_member: usize,
    /// Coefficient tuples (field-element strings), last entry nonzero.
    pub coefficients: Vec<Vec<String>>,
    /// Witness tolerance; defaults to 1/4.
    #[serde(default = "default_eps")]
    pub eps: String,
}

fn default_eps() -> String {
    "1/4".to_string()
}

#[derive(Debug, Clone, Deserialize)]
pub struct XParams {
    /// Number of basis balls; centers come from the dense target sequence.
    pub balls: usize,
    /// Shared ball radius as a rational string.
    #[serde(default = "default_radius")]
    pub radius: String,
    /// Deepest hold level; may exceed the materialized depth when the tree
    /// declares a uniform tail.
    pub horizon: usize,
}

fn default_radius() -> String {
    "1/2".to_string()
}

pub struct LoadedRun {
    pub config: RunConfig,
    pub raw_bytes: Vec<u8>,
    pub tree: WeightedTree,
    pub space: ValueSpaceSpec,
}

pub fn vertex_cap() -> usize {
    std::env::var("HTLAB_MAX_VERTICES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_VERTICES)
}

pub fn load(path: &Path) -> std::result::Result<LoadedRun, CmdError> {
    let raw_bytes = std::fs::read(path)
        .map_err(|e| CmdError::io(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_slice(&raw_bytes)
        .map_err(|e| CmdError::io(format!("malformed config {}: {e}", path.display())))?;
    let tree = config.tree.build_with_cap(vertex_cap())?;
    let space = config.space.bind(tree.field())?;
    Ok(LoadedRun { config, raw_bytes, tree, space })
}

/// The seed function: a truncated dense harmonic anchor, or the zero
/// function at the root if the config names none.
pub fn seed_function(run: &LoadedRun) -> Result<TreeFunction> {
    match &run.config.phi {
        Some(p) => dense_harmonic(&run.tree, run.space, p.dense_index)?.truncate(p.level),
        None => TreeFunction::zero(run.space, &run.tree, 0),
    }
}

/// Field spec of the loaded tree, for parsing scalar strings from config.
pub fn field_of(run: &LoadedRun) -> FieldSpec {
    run.tree.field()
}
