use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Hydrogen,
    Ammonia,
    Methane,
    Methanol,
}

impl Carrier {
    pub const ALL: [Carrier; 4] = [
        Carrier::Hydrogen,
        Carrier::Ammonia,
        Carrier::Methane,
        Carrier::Methanol,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Carrier::Hydrogen => "hydrogen",
            Carrier::Ammonia => "ammonia",
            Carrier::Methane => "methane",
            Carrier::Methanol => "methanol",
        }
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Carrier {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Carrier::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                ModelError::Config(format!(
                    "unknown carrier `{s}`; valid carriers: hydrogen, ammonia, methane, methanol"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    Shipping,
    Pipeline,
}

impl Transport {
    pub const ALL: [Transport; 2] = [Transport::Shipping, Transport::Pipeline];

    pub fn as_str(self) -> &'static str {
        match self {
            Transport::Shipping => "shipping",
            Transport::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Transport {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Transport::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                ModelError::Config(format!(
                    "unknown transport `{s}`; valid transports: shipping, pipeline"
                ))
            })
    }
}

/// Scenario parameters of one import pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwayConfig {
    pub carrier: Carrier,
    pub transport: Transport,
    /// Delivered hydrogen per year, MWh (LHV).
    pub annual_demand: f64,
    pub distance_km: f64,
    /// Hours per model step.
    pub temporal_resolution: usize,
    #[serde(default = "default_epsilon")]
    pub slack_epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

impl PathwayConfig {
    /// The reference case: 20 TWh/yr over a 2517 km route.
    pub fn reference(carrier: Carrier, transport: Transport, temporal_resolution: usize) -> Self {
        Self {
            carrier,
            transport,
            annual_demand: 2.0e7,
            distance_km: 2517.0,
            temporal_resolution,
            slack_epsilon: 0.1,
        }
    }

    pub fn name(&self) -> String {
        pathway_name(self.carrier, self.transport)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.annual_demand > 0.0 && self.annual_demand.is_finite()) {
            return Err(ModelError::Parameter("annual_demand must be positive".into()));
        }
        if !(self.distance_km > 0.0 && self.distance_km.is_finite()) {
            return Err(ModelError::Parameter("distance_km must be positive".into()));
        }
        if self.temporal_resolution < 1 {
            return Err(ModelError::Parameter("temporal_resolution must be at least 1".into()));
        }
        super::weather::check_resolution(self.temporal_resolution)?;
        Ok(())
    }
}

pub fn pathway_name(carrier: Carrier, transport: Transport) -> String {
    format!("{carrier}-{transport}")
}

/// Parses `carrier-transport`.
pub fn parse_pathway_name(name: &str) -> Result<(Carrier, Transport), ModelError> {
    let (c, t) = name.split_once('-').ok_or_else(|| {
        ModelError::Config(format!(
            "pathway `{name}` must look like `<carrier>-<transport>`, e.g. hydrogen-shipping"
        ))
    })?;
    Ok((c.parse()?, t.parse()?))
}

/// How a component is wired into the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ComponentDef {
    Generator {
        bus: String,
        profile: String,
        #[serde(default)]
        tech: Option<String>,
        #[serde(default)]
        mga: Option<String>,
    },
    Converter {
        /// First input carries the capacity and dispatch variable.
        inputs: Vec<String>,
        output: String,
        #[serde(default)]
        tech: Option<String>,
        #[serde(default)]
        mga: Option<String>,
        /// Import-side conversion back to hydrogen.
        #[serde(default)]
        reconversion: bool,
    },
    Store {
        bus: String,
        #[serde(default)]
        tech: Option<String>,
        #[serde(default)]
        mga: Option<String>,
    },
    Transport {
        from: String,
        to: String,
        #[serde(default)]
        tech: Option<String>,
    },
}

impl ComponentDef {
    pub fn tech<'a>(&'a self, name: &'a str) -> &'a str {
        let t = match self {
            ComponentDef::Generator { tech, .. }
            | ComponentDef::Converter { tech, .. }
            | ComponentDef::Store { tech, .. }
            | ComponentDef::Transport { tech, .. } => tech,
        };
        t.as_deref().unwrap_or(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwayDef {
    pub carrier: Carrier,
    pub transport: Transport,
    pub components: Vec<String>,
}

/// Component wiring and the per-pathway component lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwayDefs {
    /// Bus receiving the hydrogen load.
    pub load_bus: String,
    pub components: BTreeMap<String, ComponentDef>,
    pub pathway: Vec<PathwayDef>,
}

impl PathwayDefs {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let defs: PathwayDefs =
            toml::from_str(text).map_err(|e| ModelError::Parse(format!("pathways: {e}")))?;
        for p in &defs.pathway {
            for c in &p.components {
                if !defs.components.contains_key(c) {
                    return Err(ModelError::Config(format!(
                        "pathway {} lists undefined component `{c}`",
                        pathway_name(p.carrier, p.transport)
                    )));
                }
            }
        }
        Ok(defs)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn bundled() -> Self {
        Self::from_toml_str(super::BUNDLED_PATHWAYS).expect("bundled pathways are valid")
    }

    pub fn find(&self, carrier: Carrier, transport: Transport) -> Result<&PathwayDef, ModelError> {
        self.pathway
            .iter()
            .find(|p| p.carrier == carrier && p.transport == transport)
            .ok_or_else(|| {
                ModelError::Config(format!(
                    "no definition for pathway {}",
                    pathway_name(carrier, transport)
                ))
            })
    }
}
