use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::formulate::PathwayModel;
use super::ModelError;
use crate::lp::LpSolution;

/// Objective in €/yr over delivered hydrogen in MWh/yr, in €/MWh.
pub fn levelized(objective_eur: f64, delivered_mwh: f64) -> Result<f64, ModelError> {
    if !(delivered_mwh > 0.0) {
        return Err(ModelError::Arithmetic("delivered energy must be positive".into()));
    }
    Ok(objective_eur / delivered_mwh)
}

fn require_optimal(solution: &LpSolution) -> Result<(), ModelError> {
    if solution.is_optimal() {
        Ok(())
    } else {
        Err(ModelError::State(format!(
            "metrics need an optimal solution, got {:?}",
            solution.status
        )))
    }
}

/// Levelized cost of delivered hydrogen, €/MWh.
pub fn lcoh(solution: &LpSolution, model: &PathwayModel) -> Result<f64, ModelError> {
    require_optimal(solution)?;
    let total = model.lp.cost_at(&solution.x) * 1e6;
    levelized(total, model.graph.config.annual_demand)
}

/// Generated electricity per unit of delivered hydrogen (MWh/MWh).
pub fn energy_consumption(solution: &LpSolution, model: &PathwayModel) -> Result<f64, ModelError> {
    require_optimal(solution)?;
    let mut generated_gwh = 0.0;
    for g in &model.graph.generators {
        generated_gwh += model.flows[&g.name].iter().map(|&c| solution.x[c]).sum::<f64>() * model.step_hours;
    }
    let delivered_gwh = model.graph.config.annual_demand / 1000.0;
    if !(delivered_gwh > 0.0) {
        return Err(ModelError::Arithmetic("no hydrogen delivered".into()));
    }
    Ok(generated_gwh / delivered_gwh)
}

/// Per-component annualized cost divided by delivered hydrogen, €/MWh.
pub fn cost_breakdown(solution: &LpSolution, model: &PathwayModel) -> Result<BTreeMap<String, f64>, ModelError> {
    require_optimal(solution)?;
    let demand = model.graph.config.annual_demand;
    let cost = model.lp.cost();
    Ok(model
        .capacity
        .iter()
        .map(|(name, &col)| (name.clone(), cost[col] * solution.x[col] * 1e6 / demand))
        .collect())
}

/// Levelized cost of the carrier as it enters import-side reconversion,
/// €/MWh of carrier. Equals the LCOH for pathways without reconversion.
pub fn lcoe(solution: &LpSolution, model: &PathwayModel) -> Result<f64, ModelError> {
    require_optimal(solution)?;
    let recon: Vec<_> = model.graph.converters.iter().filter(|c| c.reconversion).collect();
    if recon.is_empty() {
        return lcoh(solution, model);
    }
    let cost = model.lp.cost();
    let mut upstream = model.lp.cost_at(&solution.x);
    let mut carrier_gwh = 0.0;
    for c in recon {
        let col = model.capacity[&c.name];
        upstream -= cost[col] * solution.x[col];
        carrier_gwh += model.flows[&c.name].iter().map(|&k| solution.x[k]).sum::<f64>() * model.step_hours;
    }
    levelized(upstream * 1e6, carrier_gwh * 1000.0)
}

/// Headline numbers of one optimized pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayMetrics {
    pub pathway: String,
    pub objective_meur: f64,
    pub lcoh_eur_per_mwh: f64,
    pub lcoe_eur_per_mwh: f64,
    pub energy_consumption: f64,
    pub capacities: BTreeMap<String, f64>,
    pub cost_breakdown_eur_per_mwh: BTreeMap<String, f64>,
    pub mga: BTreeMap<String, f64>,
    pub iterations: usize,
}

impl PathwayMetrics {
    pub fn compute(solution: &LpSolution, model: &PathwayModel) -> Result<Self, ModelError> {
        Ok(Self {
            pathway: model.graph.name.clone(),
            objective_meur: model.lp.cost_at(&solution.x),
            lcoh_eur_per_mwh: lcoh(solution, model)?,
            lcoe_eur_per_mwh: lcoe(solution, model)?,
            energy_consumption: energy_consumption(solution, model)?,
            capacities: model.capacities(&solution.x),
            cost_breakdown_eur_per_mwh: cost_breakdown(solution, model)?,
            mga: model
                .lp
                .mga_tags()
                .iter()
                .map(|(t, &c)| (t.clone(), solution.x[c]))
                .collect(),
            iterations: solution.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levelized_reference_arithmetic() {
        assert!((levelized(1.82e9, 2.0e7).unwrap() - 91.0).abs() < 1e-12);
        assert_eq!(levelized(0.0, 2.0e7).unwrap(), 0.0);
        assert!(levelized(1.0, 0.0).is_err());
    }
}
