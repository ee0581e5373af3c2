//! Pipeline, caching and reporting behind the `wcu-planner` binary.

use std::path::Path;

use anyhow::{Context, Result};
use wcu_core::model::{generate_grid_network, GridDefaults};

pub mod cache;
pub mod pipeline;
pub mod report;

/// Bad command-line input; the binary exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("missing artifact {path}: {source}")]
    Missing {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupted artifact {path}: {source}")]
    Corrupt {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Writes a generated grid network, taking overrides from the scenario's
/// `grid` section when one is given.
pub fn generate_network(rows: usize, cols: usize, scenario: Option<&Path>, out: &Path) -> Result<()> {
    let defaults = match scenario {
        Some(p) => pipeline::load_scenario(Some(p), None)?.grid.unwrap_or_default(),
        None => GridDefaults::default(),
    };
    let net = generate_grid_network(rows, cols, &defaults)?;
    net.save(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
