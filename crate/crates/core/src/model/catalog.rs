use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Techno-economic parameters of one technology.
///
/// Units follow the model: capacities in GW (or GWh for stores, kt/h for
/// material flows), so `capex` in €/kW (= M€/GW) or €/kWh, `fixed_om` in the
/// same unit per year. `efficiency` maps each input carrier to the ratio of
/// output per unit of that input; for stores the single entry is the
/// round-trip efficiency. `loss_rate` is per hour for stores and per 1000 km
/// for transport links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyParams {
    #[serde(default)]
    pub name: String,
    pub capex: f64,
    pub fixed_om: f64,
    pub lifetime_years: u32,
    pub interest_rate: f64,
    #[serde(default)]
    pub efficiency: BTreeMap<String, f64>,
    #[serde(default)]
    pub min_part_load: f64,
    #[serde(default)]
    pub loss_rate: f64,
    /// Capacity unit, informational only.
    #[serde(default)]
    pub unit: String,
}

impl TechnologyParams {
    /// Zero-cost placeholder, mostly for tests and struct-update syntax.
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            capex: 0.0,
            fixed_om: 0.0,
            lifetime_years: 1,
            interest_rate: 0.05,
            efficiency: BTreeMap::new(),
            min_part_load: 0.0,
            loss_rate: 0.0,
            unit: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| {
            Err(ModelError::Config(format!(
                "technology `{}`: {what}",
                self.name
            )))
        };
        if !(self.capex >= 0.0 && self.capex.is_finite()) {
            return bad("capex must be a finite non-negative number");
        }
        if !(self.fixed_om >= 0.0 && self.fixed_om.is_finite()) {
            return bad("fixed_om must be a finite non-negative number");
        }
        if self.lifetime_years < 1 {
            return bad("lifetime_years must be at least 1");
        }
        if !(self.interest_rate > 0.0 && self.interest_rate < 1.0) {
            return bad("interest_rate must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.min_part_load) {
            return bad("min_part_load must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.loss_rate) {
            return bad("loss_rate must lie in [0, 1)");
        }
        if let Some((k, v)) = self.efficiency.iter().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return bad(&format!("efficiency for `{k}` must be positive, got {v}"));
        }
        Ok(())
    }

    pub fn efficiency_for(&self, carrier: &str) -> Result<f64, ModelError> {
        self.efficiency.get(carrier).copied().ok_or_else(|| {
            ModelError::Config(format!(
                "technology `{}` has no efficiency for input `{carrier}`",
                self.name
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologyCatalog {
    #[serde(default)]
    pub version: String,
    pub technology: BTreeMap<String, TechnologyParams>,
}

impl TechnologyCatalog {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let mut cat: TechnologyCatalog =
            toml::from_str(text).map_err(|e| ModelError::Parse(format!("catalog: {e}")))?;
        for (key, params) in cat.technology.iter_mut() {
            params.name = key.clone();
            params.validate()?;
        }
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The catalog shipped with the crate (synthetic, non-authoritative values).
    pub fn bundled() -> Self {
        Self::from_toml_str(super::BUNDLED_CATALOG)
            .expect("bundled catalog is valid")
    }

    pub fn get(&self, tech: &str) -> Result<&TechnologyParams, ModelError> {
        self.technology
            .get(tech)
            .ok_or_else(|| ModelError::MissingTechnology(tech.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_names_entries() {
        let cat = TechnologyCatalog::from_toml_str(
            r#"
            version = "t"
            [technology.pv]
            capex = 450.0
            fixed_om = 9.0
            lifetime_years = 25
            interest_rate = 0.07
            "#,
        )
        .unwrap();
        assert_eq!(cat.get("pv").unwrap().name, "pv");
        assert!(matches!(cat.get("wind"), Err(ModelError::MissingTechnology(t)) if t == "wind"));
    }

    #[test]
    fn rejects_invalid_values() {
        let text = r#"
            [technology.x]
            capex = 1.0
            fixed_om = 0.0
            lifetime_years = 10
            interest_rate = 0.05
            min_part_load = 1.5
        "#;
        assert!(TechnologyCatalog::from_toml_str(text).is_err());
        let text = r#"
            [technology.x]
            capex = 1.0
            fixed_om = 0.0
            lifetime_years = 10
            interest_rate = 0.05
            efficiency = { electricity = 0.0 }
        "#;
        assert!(TechnologyCatalog::from_toml_str(text).is_err());
    }

    #[test]
    fn bundled_catalog_loads() {
        let cat = TechnologyCatalog::bundled();
        assert!(cat.technology.len() > 10);
    }
}
