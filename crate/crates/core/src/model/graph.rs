use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::catalog::{TechnologyCatalog, TechnologyParams};
use super::pathway::{ComponentDef, PathwayConfig, PathwayDefs};
use super::weather::{TimeSeries, Weather};
use super::ModelError;

/// The capacity variables explored by default.
pub const MGA_TAGS: [&str; 5] = ["pv", "wind", "electrolyzer", "battery", "h2_storage"];

/// Unit of an MGA capacity: GWh for stores, GW otherwise.
pub fn mga_unit(tag: &str) -> &'static str {
    match tag {
        "battery" | "h2_storage" => "GWh",
        _ => "GW",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub name: String,
    pub bus: String,
    pub params: TechnologyParams,
    #[serde(skip)]
    pub profile: TimeSeries,
    pub mga: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverterInput {
    pub bus: String,
    /// Input drawn per unit of primary input flow.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Converter {
    pub name: String,
    pub params: TechnologyParams,
    /// `inputs[0]` is the primary input (ratio 1); capacity is sized on it.
    pub inputs: Vec<ConverterInput>,
    pub output: String,
    /// Output per unit of primary input.
    pub yield_: f64,
    pub reconversion: bool,
    pub mga: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Store {
    pub name: String,
    pub bus: String,
    pub params: TechnologyParams,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    pub mga: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportLink {
    pub name: String,
    pub from: String,
    pub to: String,
    pub params: TechnologyParams,
    /// Fraction of the flow lost over the whole route.
    pub loss: f64,
    /// Capacity cost multiplier (route length in thousands of km).
    pub cost_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Load {
    pub bus: String,
    /// Constant offtake, GW.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplyChainGraph {
    pub name: String,
    pub config: PathwayConfig,
    pub buses: BTreeSet<String>,
    pub generators: Vec<Generator>,
    pub converters: Vec<Converter>,
    pub stores: Vec<Store>,
    pub transport: Vec<TransportLink>,
    pub load: Load,
}

/// Carrier part of a `carrier@location` bus name.
pub fn bus_carrier(bus: &str) -> &str {
    bus.split('@').next().unwrap_or(bus)
}

impl SupplyChainGraph {
    /// Empty graph with a constant load derived from `config.annual_demand`.
    pub fn new(name: impl Into<String>, config: PathwayConfig, load_bus: &str) -> Self {
        let mut buses = BTreeSet::new();
        buses.insert(load_bus.to_string());
        Self {
            name: name.into(),
            load: Load {
                bus: load_bus.to_string(),
                power: config.annual_demand / super::weather::HOURS_PER_YEAR as f64 / 1000.0,
            },
            config,
            buses,
            generators: Vec::new(),
            converters: Vec::new(),
            stores: Vec::new(),
            transport: Vec::new(),
        }
    }

    pub fn add_generator(&mut self, name: &str, bus: &str, params: TechnologyParams, profile: TimeSeries, mga: Option<String>) {
        self.buses.insert(bus.to_string());
        self.generators.push(Generator {
            name: name.to_string(),
            bus: bus.to_string(),
            params,
            profile,
            mga,
        });
    }

    pub fn add_converter(
        &mut self,
        name: &str,
        inputs: &[String],
        output: &str,
        params: TechnologyParams,
        reconversion: bool,
        mga: Option<String>,
    ) -> Result<(), ModelError> {
        let primary = inputs
            .first()
            .ok_or_else(|| ModelError::Config(format!("converter `{name}` has no inputs")))?;
        let yield_ = params.efficiency_for(bus_carrier(primary))?;
        let mut wired = Vec::with_capacity(inputs.len());
        for bus in inputs {
            let eff = params.efficiency_for(bus_carrier(bus))?;
            wired.push(ConverterInput {
                bus: bus.clone(),
                ratio: yield_ / eff,
            });
            self.buses.insert(bus.clone());
        }
        self.buses.insert(output.to_string());
        self.converters.push(Converter {
            name: name.to_string(),
            params,
            inputs: wired,
            output: output.to_string(),
            yield_,
            reconversion,
            mga,
        });
        Ok(())
    }

    pub fn add_store(&mut self, name: &str, bus: &str, params: TechnologyParams, mga: Option<String>) -> Result<(), ModelError> {
        let roundtrip = params.efficiency_for(bus_carrier(bus))?;
        if roundtrip > 1.0 {
            return Err(ModelError::Config(format!(
                "store `{name}` has round-trip efficiency above one"
            )));
        }
        self.buses.insert(bus.to_string());
        self.stores.push(Store {
            name: name.to_string(),
            bus: bus.to_string(),
            params,
            charge_efficiency: roundtrip.sqrt(),
            discharge_efficiency: roundtrip.sqrt(),
            mga,
        });
        Ok(())
    }

    pub fn add_transport(&mut self, name: &str, from: &str, to: &str, params: TechnologyParams) -> Result<(), ModelError> {
        let thousands_km = self.config.distance_km / 1000.0;
        let loss = params.loss_rate * thousands_km;
        if loss >= 1.0 {
            return Err(ModelError::Config(format!(
                "transport `{name}` loses everything over {} km",
                self.config.distance_km
            )));
        }
        self.buses.insert(from.to_string());
        self.buses.insert(to.to_string());
        self.transport.push(TransportLink {
            name: name.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            params,
            loss,
            cost_factor: thousands_km,
        });
        Ok(())
    }

    /// Names of converter technologies, sorted.
    pub fn converter_techs(&self) -> BTreeSet<String> {
        self.converters.iter().map(|c| c.params.name.clone()).collect()
    }

    pub fn component_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = Vec::new();
        v.extend(self.generators.iter().map(|g| g.name.as_str()));
        v.extend(self.converters.iter().map(|c| c.name.as_str()));
        v.extend(self.stores.iter().map(|s| s.name.as_str()));
        v.extend(self.transport.iter().map(|t| t.name.as_str()));
        v
    }

    /// MGA tag → component name.
    pub fn mga_components(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for g in &self.generators {
            if let Some(t) = &g.mga {
                m.insert(t.clone(), g.name.clone());
            }
        }
        for c in &self.converters {
            if let Some(t) = &c.mga {
                m.insert(t.clone(), c.name.clone());
            }
        }
        for s in &self.stores {
            if let Some(t) = &s.mga {
                m.insert(t.clone(), s.name.clone());
            }
        }
        m
    }

    /// Structural checks: wiring, connectivity from generation to the load,
    /// and presence of the `required` MGA tags.
    pub fn validate(&self, required: &[&str]) -> Result<(), ModelError> {
        let names = self.component_names();
        let unique: BTreeSet<&str> = names.iter().copied().collect();
        if unique.len() != names.len() {
            return Err(ModelError::Config(format!("graph `{}` has duplicate component names", self.name)));
        }
        let tags = self.mga_components();
        for t in required {
            if !tags.contains_key(*t) {
                return Err(ModelError::Config(format!(
                    "graph `{}` lacks the MGA component `{t}`",
                    self.name
                )));
            }
        }
        if self.generators.is_empty() {
            return Err(ModelError::Config(format!("graph `{}` has no generators", self.name)));
        }
        // Every bus a converter reads must be fed by something, and the load
        // must be reachable from the generators.
        let mut fed: BTreeSet<&str> = self.generators.iter().map(|g| g.bus.as_str()).collect();
        loop {
            let before = fed.len();
            for c in &self.converters {
                if c.inputs.iter().all(|i| fed.contains(i.bus.as_str())) {
                    fed.insert(&c.output);
                }
            }
            for t in &self.transport {
                if fed.contains(t.from.as_str()) {
                    fed.insert(&t.to);
                }
            }
            if fed.len() == before {
                break;
            }
        }
        if let Some(c) = self.converters.iter().find(|c| c.inputs.iter().any(|i| !fed.contains(i.bus.as_str()))) {
            return Err(ModelError::Config(format!(
                "converter `{}` in graph `{}` has an input nothing supplies",
                c.name, self.name
            )));
        }
        if !fed.contains(self.load.bus.as_str()) {
            return Err(ModelError::Config(format!(
                "load bus `{}` is not reachable from generation in graph `{}`",
                self.load.bus, self.name
            )));
        }
        Ok(())
    }
}

/// Assembles the supply chain of one pathway from its definition.
pub fn build_pathway(
    config: &PathwayConfig,
    defs: &PathwayDefs,
    catalog: &TechnologyCatalog,
    weather: &Weather,
) -> Result<SupplyChainGraph, ModelError> {
    config.validate()?;
    let def = defs.find(config.carrier, config.transport)?;
    let mut g = SupplyChainGraph::new(config.name(), config.clone(), &defs.load_bus);
    for name in &def.components {
        let comp = &defs.components[name];
        let params = catalog
            .get(comp.tech(name))
            .map_err(|_| ModelError::MissingTechnology(format!("{} (component `{name}`)", comp.tech(name))))?
            .clone();
        match comp {
            ComponentDef::Generator { bus, profile, mga, .. } => {
                g.add_generator(name, bus, params, weather.profile(profile)?.clone(), mga.clone());
            }
            ComponentDef::Converter {
                inputs,
                output,
                mga,
                reconversion,
                ..
            } => g.add_converter(name, inputs, output, params, *reconversion, mga.clone())?,
            ComponentDef::Store { bus, mga, .. } => g.add_store(name, bus, params, mga.clone())?,
            ComponentDef::Transport { from, to, .. } => g.add_transport(name, from, to, params)?,
        }
    }
    g.validate(&MGA_TAGS)?;
    Ok(g)
}
