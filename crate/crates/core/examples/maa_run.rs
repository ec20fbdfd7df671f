//! Runs MAA on one pathway and prints per-axis extents.
//! Usage: `maa_run <pathway> [resolution_hours]`
use std::time::Instant;

use nearopt::maa::{run_maa, MaaConfig};
use nearopt::model::{parse_pathway_name, ModelInputs, PathwayConfig};

fn main() {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "hydrogen-shipping".into());
    let res: usize = args.next().map_or(73, |s| s.parse().expect("resolution"));
    let (carrier, transport) = parse_pathway_name(&name).expect("pathway name");
    let cfg = PathwayConfig::reference(carrier, transport, res);
    let lp = ModelInputs::bundled().build(&cfg).unwrap().lp;
    let config = MaaConfig::default();
    let t = Instant::now();
    let r = run_maa(&lp, &config).unwrap();
    println!("{name} @{res}h: {} iterations, converged {}, {:?}", r.iterations.len(), r.converged, t.elapsed());
    println!("trace {:?}", r.volume_trace);
    for (a, tag) in config.mga_variables.iter().enumerate() {
        let (lo, hi) = r.hull.bounds()[a];
        println!("{tag:>14}: opt {:10.4} min {:10.4} max {:10.4} min/max {:.4}", r.optimum[a], lo, hi, lo / hi);
    }
}
