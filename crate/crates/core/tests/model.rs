use std::collections::{BTreeMap, BTreeSet};

use nearopt::lp::{solve, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL};
use nearopt::model::formulate::to_lp_with_resolution;
use nearopt::model::*;
use proptest::prelude::*;

fn constant_profile(v: f64) -> TimeSeries {
    TimeSeries::new(vec![v; 8760]).unwrap()
}

fn toy_config() -> PathwayConfig {
    PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 4380)
}

fn priced(name: &str, capex: f64) -> TechnologyParams {
    TechnologyParams {
        capex,
        lifetime_years: 20,
        interest_rate: 0.07,
        ..TechnologyParams::named(name)
    }
}

#[test]
fn converter_sets_per_pathway() {
    let inputs = ModelInputs::bundled();
    let base = ["desalination", "electrolysis"];
    let expected: BTreeMap<&str, Vec<&str>> = [
        ("hydrogen-shipping", vec!["h2_liquefaction", "lh2_regasification"]),
        ("hydrogen-pipeline", vec!["h2_compression"]),
        ("ammonia-shipping", vec!["asu", "haber_bosch", "ammonia_cracking"]),
        ("ammonia-pipeline", vec!["asu", "haber_bosch", "ammonia_cracking"]),
        ("methane-shipping", vec!["dac", "methanation", "ch4_liquefaction", "lng_reforming"]),
        ("methane-pipeline", vec!["dac", "methanation", "methane_reforming"]),
        ("methanol-shipping", vec!["dac", "methanolization", "methanol_reforming"]),
        ("methanol-pipeline", vec!["dac", "methanolization", "methanol_reforming"]),
    ]
    .into_iter()
    .collect();
    for c in Carrier::ALL {
        for t in Transport::ALL {
            let cfg = PathwayConfig::reference(c, t, 24);
            let g = build_pathway(&cfg, &inputs.defs, &inputs.catalog, &inputs.weather).unwrap();
            let mut want: BTreeSet<String> = base.iter().map(|s| s.to_string()).collect();
            want.extend(expected[cfg.name().as_str()].iter().map(|s| s.to_string()));
            assert_eq!(g.converter_techs(), want, "{}", cfg.name());

            let techs = g.converter_techs();
            match c {
                Carrier::Hydrogen => {
                    assert!(!techs.contains("dac") && !techs.contains("asu"));
                }
                Carrier::Ammonia => assert!(techs.contains("asu") && !techs.contains("dac")),
                Carrier::Methane | Carrier::Methanol => assert!(techs.contains("dac")),
            }
            if c == Carrier::Hydrogen && t == Transport::Pipeline {
                assert!(g.stores.iter().all(|s| !s.name.contains("buffer")));
                assert!(g.converters.iter().all(|c| !c.reconversion));
            }
            if c != Carrier::Hydrogen {
                let ports: Vec<_> = g.stores.iter().filter(|s| s.name.contains("buffer")).collect();
                assert_eq!(ports.len(), 2, "{}: one buffer per port", cfg.name());
            }
            assert_eq!(g.mga_components().len(), MGA_TAGS.len());
        }
    }
}

#[test]
fn methanol_synthesis_has_a_must_run_floor() {
    let inputs = ModelInputs::bundled();
    let cfg = PathwayConfig::reference(Carrier::Methanol, Transport::Shipping, 24);
    let g = build_pathway(&cfg, &inputs.defs, &inputs.catalog, &inputs.weather).unwrap();
    let unit = g.converters.iter().find(|c| c.params.name == "methanolization").unwrap();
    assert!(unit.params.min_part_load > 0.0);
    let m = to_lp(&g).unwrap();
    assert!(m.lp.rows().iter().any(|r| r.label.starts_with("methanolization.must_run")));
}

#[test]
fn missing_catalog_entry_names_the_component() {
    let mut inputs = ModelInputs::bundled();
    inputs.catalog.technology.remove("haber_bosch");
    let cfg = PathwayConfig::reference(Carrier::Ammonia, Transport::Shipping, 24);
    let err = inputs.build(&cfg).unwrap_err();
    assert!(matches!(err, ModelError::MissingTechnology(_)));
    assert!(err.to_string().contains("haber_bosch"), "{err}");
}

#[test]
fn non_divisor_resolution_is_rejected() {
    let inputs = ModelInputs::bundled();
    let cfg = PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 7);
    assert!(matches!(inputs.build(&cfg), Err(ModelError::Parameter(_))));
}

#[test]
fn single_generator_toy_has_expected_shape() {
    let mut g = SupplyChainGraph::new("toy", toy_config(), "electricity@import");
    g.add_generator("pv", "electricity@import", priced("pv", 400.0), constant_profile(0.5), None);
    let m = to_lp_with_resolution(&g, 4380).unwrap();
    assert_eq!(m.steps, 2);
    assert_eq!(m.lp.n_vars(), 3);
    let labels: Vec<&str> = m.lp.rows().iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels.iter().filter(|l| l.contains(".balance[")).count(), 2);
    assert_eq!(labels.iter().filter(|l| l.contains(".avail[")).count(), 2);
    assert_eq!(m.lp.n_rows(), 4);
    let sol = solve(&m.lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    assert!(sol.is_optimal());
    // Constant load at capacity factor 0.5 needs twice the load as capacity.
    assert!((sol.x[m.capacity["pv"]] - 2.0 * g.load.power).abs() < 1e-9);
}

#[test]
fn zero_demand_store_admits_the_zero_vector() {
    let mut cfg = toy_config();
    cfg.annual_demand = 0.0;
    let mut g = SupplyChainGraph::new("empty", cfg, "electricity@site");
    g.add_generator("pv", "electricity@site", priced("pv", 400.0), constant_profile(0.3), None);
    let mut battery = priced("battery", 150.0);
    battery.efficiency.insert("electricity".into(), 0.9);
    battery.loss_rate = 1e-4;
    g.add_store("battery", "electricity@site", battery, None).unwrap();
    let m = to_lp_with_resolution(&g, 24).unwrap();
    let zero = vec![0.0; m.lp.n_vars()];
    assert_eq!(m.lp.max_violation(&zero), 0.0);
    let sol = solve(&m.lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    assert!(sol.is_optimal());
    assert!(sol.objective_value.abs() < 1e-12);
}

#[test]
fn lossless_converter_sets_energy_ratio() {
    let cfg = toy_config();
    let mut g = SupplyChainGraph::new("chain", cfg, "hydrogen@import");
    g.add_generator("wind", "electricity@import", priced("wind", 700.0), constant_profile(1.0), None);
    let mut el = priced("electrolysis", 500.0);
    el.efficiency.insert("electricity".into(), 0.7);
    g.add_converter("electrolysis", &["electricity@import".to_string()], "hydrogen@import", el, false, None)
        .unwrap();
    let m = to_lp_with_resolution(&g, 24).unwrap();
    let sol = solve(&m.lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    let ec = energy_consumption(&sol, &m).unwrap();
    assert!((ec - 1.0 / 0.7).abs() < 1e-9, "{ec}");
}

#[test]
fn hydrogen_pipeline_desk_instance_solves() {
    let inputs = ModelInputs::bundled();
    let cfg = PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 146);
    let m = inputs.build(&cfg).unwrap();
    let sol = solve(&m.lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    assert!(sol.is_optimal());
    assert!(sol.objective_value > 0.0);
    assert!(m.lp.max_violation(&sol.x) < 1e-6);

    let total = lcoh(&sol, &m).unwrap();
    let parts: f64 = cost_breakdown(&sol, &m).unwrap().values().sum();
    assert!((parts - total).abs() <= 1e-9 * total);
    assert_eq!(lcoe(&sol, &m).unwrap(), total);

    for (name, sc) in &m.stores {
        let traj = m.state_trajectory(name, &sol.x).unwrap();
        let cap = sol.x[m.capacity[name]];
        assert_eq!(traj.len(), m.steps + 1);
        assert!(
            (traj[0] - traj[m.steps]).abs() <= 1e-6 * cap.max(1.0),
            "{name}: {} vs {}",
            traj[0],
            traj[m.steps]
        );
        for (t, &c) in sc.state.iter().enumerate() {
            assert!((traj[t] - sol.x[c]).abs() < 1e-6 * cap.max(1.0), "{name} step {t}");
        }
    }
}

#[test]
fn zero_capacity_component_has_zero_share() {
    let inputs = ModelInputs::bundled();
    let cfg = PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 146);
    let m = inputs.build(&cfg).unwrap();
    let sol = solve(&m.lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    let bd = cost_breakdown(&sol, &m).unwrap();
    for (name, &col) in &m.capacity {
        if sol.x[col] == 0.0 {
            assert_eq!(bd[name], 0.0);
        }
    }
}

#[test]
fn metrics_reject_non_optimal_solutions() {
    let inputs = ModelInputs::bundled();
    let cfg = PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 876);
    let m = inputs.build(&cfg).unwrap();
    let capped = m.lp.add_cost_cap(0.0);
    let sol = solve(&capped, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    assert!(!sol.is_optimal());
    assert!(matches!(lcoh(&sol, &m), Err(ModelError::State(_))));
}

proptest! {
    #[test]
    fn annuity_identity(r in 0.001f64..0.5, n in 1u32..80) {
        let a = annuity(r, n).unwrap();
        let lhs = a * (1.0 - (1.0 + r).powi(-(n as i32)));
        prop_assert!((lhs - r).abs() <= 1e-12);
        prop_assert!(a > r);
        if n > 1 {
            prop_assert!(annuity(r, n - 1).unwrap() > a);
        }
    }
}
