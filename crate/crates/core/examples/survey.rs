use nearopt::lp::{solve, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL};
use nearopt::model::*;
fn main() {
    let res: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(24);
    let inputs = ModelInputs::bundled();
    for c in Carrier::ALL { for t in Transport::ALL {
        let cfg = PathwayConfig::reference(c, t, res);
        if let Some(f) = std::env::args().nth(2) { if !cfg.name().contains(&f) { continue; } }
        let m = inputs.build(&cfg).unwrap();
        let t0 = std::time::Instant::now();
        let sol = solve(&m.lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        let el = t0.elapsed();
        let met = PathwayMetrics::compute(&sol, &m).unwrap();
        println!("{:20} vars {:6} rows {:6} it {:6} {:7.2}s LCOH {:7.2} EC {:5.3} viol {:.1e}", cfg.name(), m.lp.n_vars(), m.lp.n_rows(), sol.iterations, el.as_secs_f64(), met.lcoh_eur_per_mwh, met.energy_consumption, m.lp.max_violation(&sol.x));
        println!("    mga {:?}", met.mga.iter().map(|(k,v)| format!("{k}={v:.3}")).collect::<Vec<_>>());
        println!("    cost {:?}", met.cost_breakdown_eur_per_mwh.iter().filter(|(_,v)| **v>0.05).map(|(k,v)| format!("{k}={v:.1}")).collect::<Vec<_>>());
    }}
}
