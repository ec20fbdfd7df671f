//! Import supply chains as data, their LP formulation, and solution metrics.

pub mod catalog;
pub mod cost;
pub mod formulate;
pub mod graph;
pub mod metrics;
pub mod pathway;
pub mod weather;

use std::path::Path;

use thiserror::Error;

pub use catalog::{TechnologyCatalog, TechnologyParams};
pub use cost::{annualized_cost, annuity};
pub use formulate::{to_lp, PathwayModel};
pub use graph::{build_pathway, mga_unit, SupplyChainGraph, MGA_TAGS};
pub use metrics::{cost_breakdown, energy_consumption, lcoe, lcoh, PathwayMetrics};
pub use pathway::{parse_pathway_name, pathway_name, Carrier, PathwayConfig, PathwayDefs, Transport};
pub use weather::{TimeSeries, Weather};

use crate::lp::LpError;

/// Bundled input files, verbatim.
pub const BUNDLED_CATALOG: &str = include_str!("../../data/catalog.default.toml");
pub const BUNDLED_PATHWAYS: &str = include_str!("../../data/pathways.toml");
pub const BUNDLED_WEATHER: &str = include_str!("../../data/weather.csv");

/// Seed that regenerates `data/weather.csv`.
pub const BUNDLED_WEATHER_SEED: u64 = 20_240_917;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("catalog has no entry for technology {0}")]
    MissingTechnology(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Catalog, pathway definitions and weather needed to build any pathway.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub catalog: TechnologyCatalog,
    pub defs: PathwayDefs,
    pub weather: Weather,
}

impl ModelInputs {
    pub fn bundled() -> Self {
        Self {
            catalog: TechnologyCatalog::bundled(),
            defs: PathwayDefs::bundled(),
            weather: Weather::bundled(),
        }
    }

    /// Bundled data with any of the three inputs replaced from files.
    pub fn load(catalog: Option<&Path>, defs: Option<&Path>, weather: Option<&Path>) -> Result<Self, ModelError> {
        Ok(Self {
            catalog: catalog.map_or_else(|| Ok(TechnologyCatalog::bundled()), TechnologyCatalog::load)?,
            defs: defs.map_or_else(|| Ok(PathwayDefs::bundled()), PathwayDefs::load)?,
            weather: weather.map_or_else(|| Ok(Weather::bundled()), Weather::load)?,
        })
    }

    pub fn build(&self, config: &PathwayConfig) -> Result<PathwayModel, ModelError> {
        let graph = build_pathway(config, &self.defs, &self.catalog, &self.weather)?;
        to_lp(&graph)
    }
}
