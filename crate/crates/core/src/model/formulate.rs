use std::collections::BTreeMap;

use serde::Serialize;

use super::cost::annualized_cost;
use super::graph::SupplyChainGraph;
use super::weather::check_resolution;
use super::ModelError;
use crate::lp::{LpBuilder, RowSense, SparseLp};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreColumns {
    pub charge: Vec<usize>,
    pub discharge: Vec<usize>,
    /// Energy held at the end of each step.
    pub state: Vec<usize>,
    /// Fraction of the stored energy kept over one step.
    pub keep: f64,
}

/// A supply-chain graph together with its LP and the column bookkeeping
/// needed to read solutions back.
///
/// Capacities are in GW (GWh for stores), flows are step-average powers in
/// GW, and the objective is in M€ per year.
#[derive(Debug, Clone)]
pub struct PathwayModel {
    pub graph: SupplyChainGraph,
    pub lp: SparseLp,
    pub steps: usize,
    pub step_hours: f64,
    /// Component → capacity column.
    pub capacity: BTreeMap<String, usize>,
    /// Generator, converter and transport dispatch columns (primary input flow).
    pub flows: BTreeMap<String, Vec<usize>>,
    pub stores: BTreeMap<String, StoreColumns>,
}

struct BusBalance {
    terms: Vec<Vec<(usize, f64)>>,
}

/// Emits the LP of `graph` at its configured temporal resolution.
pub fn to_lp(graph: &SupplyChainGraph) -> Result<PathwayModel, ModelError> {
    to_lp_with_resolution(graph, graph.config.temporal_resolution)
}

pub fn to_lp_with_resolution(graph: &SupplyChainGraph, resolution: usize) -> Result<PathwayModel, ModelError> {
    let steps = check_resolution(resolution)?;
    let dt = resolution as f64;
    let mut b = LpBuilder::new();
    let mut capacity = BTreeMap::new();
    let mut flows = BTreeMap::new();
    let mut stores = BTreeMap::new();
    let mut balance: BTreeMap<&str, BusBalance> = graph
        .buses
        .iter()
        .map(|bus| {
            (
                bus.as_str(),
                BusBalance {
                    terms: vec![Vec::new(); steps],
                },
            )
        })
        .collect();
    let mut add_term = |bus: &str, t: usize, col: usize, coef: f64| {
        balance
            .get_mut(bus)
            .expect("bus registered by graph construction")
            .terms[t]
            .push((col, coef));
    };
    let mut rows: Vec<(String, RowSense, f64, Vec<(usize, f64)>)> = Vec::new();

    for g in &graph.generators {
        let cap = b.add_column(format!("{}.capacity", g.name), annualized_cost(&g.params)?, 0.0, f64::INFINITY);
        if let Some(tag) = &g.mga {
            b.tag_mga(cap, tag.clone());
        }
        let cf = g.profile.resample(resolution)?;
        let mut cols = Vec::with_capacity(steps);
        for (t, &f) in cf.iter().enumerate() {
            let p = b.add_column(format!("{}.p[{t}]", g.name), 0.0, 0.0, f64::INFINITY);
            add_term(&g.bus, t, p, 1.0);
            rows.push((format!("{}.avail[{t}]", g.name), RowSense::Le, 0.0, vec![(p, 1.0), (cap, -f)]));
            cols.push(p);
        }
        capacity.insert(g.name.clone(), cap);
        flows.insert(g.name.clone(), cols);
    }

    for c in &graph.converters {
        let cap = b.add_column(format!("{}.capacity", c.name), annualized_cost(&c.params)?, 0.0, f64::INFINITY);
        if let Some(tag) = &c.mga {
            b.tag_mga(cap, tag.clone());
        }
        let mut cols = Vec::with_capacity(steps);
        for t in 0..steps {
            let p = b.add_column(format!("{}.p[{t}]", c.name), 0.0, 0.0, f64::INFINITY);
            for input in &c.inputs {
                add_term(&input.bus, t, p, -input.ratio);
            }
            add_term(&c.output, t, p, c.yield_);
            rows.push((format!("{}.cap[{t}]", c.name), RowSense::Le, 0.0, vec![(p, 1.0), (cap, -1.0)]));
            if c.params.min_part_load > 0.0 {
                rows.push((
                    format!("{}.must_run[{t}]", c.name),
                    RowSense::Ge,
                    0.0,
                    vec![(p, 1.0), (cap, -c.params.min_part_load)],
                ));
            }
            cols.push(p);
        }
        capacity.insert(c.name.clone(), cap);
        flows.insert(c.name.clone(), cols);
    }

    for l in &graph.transport {
        let cost = annualized_cost(&l.params)? * l.cost_factor;
        let cap = b.add_column(format!("{}.capacity", l.name), cost, 0.0, f64::INFINITY);
        let mut cols = Vec::with_capacity(steps);
        for t in 0..steps {
            let p = b.add_column(format!("{}.p[{t}]", l.name), 0.0, 0.0, f64::INFINITY);
            add_term(&l.from, t, p, -1.0);
            add_term(&l.to, t, p, 1.0 - l.loss);
            rows.push((format!("{}.cap[{t}]", l.name), RowSense::Le, 0.0, vec![(p, 1.0), (cap, -1.0)]));
            cols.push(p);
        }
        capacity.insert(l.name.clone(), cap);
        flows.insert(l.name.clone(), cols);
    }

    for s in &graph.stores {
        let cap = b.add_column(format!("{}.capacity", s.name), annualized_cost(&s.params)?, 0.0, f64::INFINITY);
        if let Some(tag) = &s.mga {
            b.tag_mga(cap, tag.clone());
        }
        let keep = (1.0 - s.params.loss_rate).powf(dt);
        let mut sc = StoreColumns {
            charge: Vec::with_capacity(steps),
            discharge: Vec::with_capacity(steps),
            state: Vec::with_capacity(steps),
            keep,
        };
        for t in 0..steps {
            let ch = b.add_column(format!("{}.charge[{t}]", s.name), 0.0, 0.0, f64::INFINITY);
            let dis = b.add_column(format!("{}.discharge[{t}]", s.name), 0.0, 0.0, f64::INFINITY);
            let e = b.add_column(format!("{}.state[{t}]", s.name), 0.0, 0.0, f64::INFINITY);
            add_term(&s.bus, t, ch, -1.0);
            add_term(&s.bus, t, dis, 1.0);
            rows.push((format!("{}.level[{t}]", s.name), RowSense::Le, 0.0, vec![(e, 1.0), (cap, -1.0)]));
            sc.charge.push(ch);
            sc.discharge.push(dis);
            sc.state.push(e);
        }
        // Cyclic dynamics: the step before the first is the last.
        for t in 0..steps {
            let prev = sc.state[(t + steps - 1) % steps];
            let mut coeffs = vec![
                (sc.state[t], 1.0),
                (sc.charge[t], -dt * s.charge_efficiency),
                (sc.discharge[t], dt / s.discharge_efficiency),
            ];
            if steps > 1 {
                coeffs.push((prev, -keep));
            } else {
                coeffs[0].1 = 1.0 - keep;
            }
            rows.push((format!("{}.dynamics[{t}]", s.name), RowSense::Eq, 0.0, coeffs));
        }
        capacity.insert(s.name.clone(), cap);
        stores.insert(s.name.clone(), sc);
    }

    for (bus, bal) in &balance {
        let rhs = if *bus == graph.load.bus { graph.load.power } else { 0.0 };
        for (t, terms) in bal.terms.iter().enumerate() {
            if terms.is_empty() && rhs == 0.0 {
                continue;
            }
            rows.push((format!("{bus}.balance[{t}]"), RowSense::Eq, rhs, terms.clone()));
        }
    }
    for (label, sense, rhs, coeffs) in rows {
        b.add_row(label, sense, rhs, &coeffs);
    }
    let lp = b.build()?;
    Ok(PathwayModel {
        graph: graph.clone(),
        lp,
        steps,
        step_hours: dt,
        capacity,
        flows,
        stores,
    })
}

impl PathwayModel {
    pub fn capacities(&self, x: &[f64]) -> BTreeMap<String, f64> {
        self.capacity.iter().map(|(k, &c)| (k.clone(), x[c])).collect()
    }

    /// MGA tags of the LP, in tag order.
    pub fn mga_tags(&self) -> Vec<String> {
        self.lp.mga_tags().keys().cloned().collect()
    }

    /// Store levels from the first step's end state through one full year:
    /// `steps + 1` values, the last of which should equal the first.
    pub fn state_trajectory(&self, store: &str, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        let sc = self
            .stores
            .get(store)
            .ok_or_else(|| ModelError::Parameter(format!("no store named `{store}`")))?;
        let s = self
            .graph
            .stores
            .iter()
            .find(|s| s.name == store)
            .expect("store columns come from the graph");
        let mut level = x[sc.state[0]];
        let mut out = vec![level];
        for t in 1..=self.steps {
            let k = t % self.steps;
            level = level * sc.keep
                + self.step_hours * (s.charge_efficiency * x[sc.charge[k]] - x[sc.discharge[k]] / s.discharge_efficiency);
            out.push(level);
        }
        Ok(out)
    }
}
