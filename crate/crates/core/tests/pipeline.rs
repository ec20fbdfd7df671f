use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nearopt::pipeline::*;
use nearopt::sampler::read_samples;

fn toy_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        r#"output_dir = "out"
pathways = ["hydrogen-pipeline", "ammonia-shipping"]
resolution_hours = 730
seed = 11

[sample]
n = 4000
verify_fraction = 0.01
{extra}
"#
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn nearopt(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nearopt"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn unknown_carrier_is_a_config_error_listing_carriers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "output_dir = \"out\"\npathways = [\"kerosene-shipping\"]\n").unwrap();
    let (code, err) = nearopt(&["optimize", "--config", "bad.toml"], dir.path());
    assert_eq!(code, 2, "{err}");
    for c in ["hydrogen", "ammonia", "methane", "methanol"] {
        assert!(err.contains(c), "{err}");
    }
}

#[test]
fn configuration_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(nearopt(&["optimize", "--config", "missing.toml"], dir.path()).0, 2);
    assert_eq!(nearopt(&["optimize", "--config", cfg, "--pathway", "methanol-pipeline"], dir.path()).0, 2);
    assert_eq!(nearopt(&["optimize", "--config", cfg, "--seed", "abc"], dir.path()).0, 2);
    assert_eq!(nearopt(&["bogus"], dir.path()).0, 2);

    std::fs::write(dir.path().join("typo.toml"), "output_dir = \"out\"\nresolution = 24\n").unwrap();
    let (code, err) = nearopt(&["optimize", "--config", "typo.toml"], dir.path());
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("resolution"), "{err}");

    std::fs::write(dir.path().join("mga.toml"), "output_dir = \"out\"\n[maa]\nmga_variables = [\"pv\", \"hydro\"]\n").unwrap();
    let (code, err) = nearopt(&["maa", "--config", "mga.toml"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("hydro") && err.contains("h2_storage"), "{err}");

    std::fs::write(dir.path().join("res.toml"), "output_dir = \"out\"\nresolution_hours = 7\n").unwrap();
    assert_eq!(nearopt(&["optimize", "--config", "res.toml"], dir.path()).0, 2);

    let out = Command::new(env!("CARGO_BIN_EXE_nearopt"))
        .args(["optimize", "--config", cfg])
        .env("NEAROPT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_pathway_exits_1_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let calm = "pv_cf,wind_cf\n".to_string() + &"0.0,0.0\n".repeat(8760);
    std::fs::write(dir.path().join("calm.csv"), calm).unwrap();
    std::fs::write(
        dir.path().join("calm.toml"),
        "output_dir = \"out\"\npathways = [\"hydrogen-pipeline\"]\nresolution_hours = 730\n[data]\nweather = \"calm.csv\"\n",
    )
    .unwrap();
    let (code, err) = nearopt(&["optimize", "--config", "calm.toml"], dir.path());
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("hydrogen-pipeline is infeasible"), "{err}");
    assert!(err.contains("constraint belongs to `"), "{err}");
}

#[test]
fn downstream_stage_refuses_stale_or_missing_upstream() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let cfg_s = cfg.to_str().unwrap();
    let (code, err) = nearopt(&["maa", "--config", cfg_s], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("run `nearopt optimize"), "{err}");

    assert_eq!(nearopt(&["optimize", "--config", cfg_s], dir.path()).0, 0);
    assert_eq!(nearopt(&["maa", "--config", cfg_s, "--pathway", "hydrogen-pipeline"], dir.path()).0, 0);
    // The other pathway never ran its MAA stage.
    let (code, err) = nearopt(&["sample", "--config", cfg_s], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("maa:ammonia-shipping"), "{err}");
    assert_eq!(nearopt(&["sample", "--config", cfg_s, "--pathway", "hydrogen-pipeline"], dir.path()).0, 0);

    // Changing the slack invalidates the hulls.
    let cfg2 = toy_config(dir.path(), "[maa]\nepsilon = 0.2\n");
    let (code, err) = nearopt(&["sample", "--config", cfg2.to_str().unwrap(), "--pathway", "hydrogen-pipeline"], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("changed"), "{err}");

    // So does editing an output by hand.
    let cfg = toy_config(dir.path(), "");
    let p = Pipeline::from_path(&cfg, Some("hydrogen-pipeline"), None).unwrap();
    let hull = p.output_path(&hull_path("hydrogen-pipeline"));
    let mut text = std::fs::read_to_string(&hull).unwrap();
    text.push(' ');
    std::fs::write(&hull, text).unwrap();
    match p.sample() {
        Err(e @ PipelineError::Stale { .. }) => {
            assert_eq!(e.exit_code(), 1);
            assert!(e.to_string().contains("was modified"), "{e}");
        }
        other => panic!("expected a stale error, got {other:?}"),
    }
}

#[test]
fn toy_run_is_complete_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let pa = Pipeline::from_path(&toy_config(a.path(), ""), None, None).unwrap();
    let bundle = pa.run_all().unwrap();
    assert!(t.elapsed().as_secs() < 300);
    let pb = Pipeline::from_path(&toy_config(b.path(), ""), None, None).unwrap();
    pb.run_all().unwrap();

    let names = pa.config.pathway_names();
    let mut files: Vec<String> = names
        .iter()
        .flat_map(|n| [optimum_path(n), hull_path(n), samples_path(n), format!("{}.json", samples_path(n)), report_path(n)])
        .collect();
    files.extend(
        [CLUSTERS_JSON, LABELED_SAMPLES, TREE_JSON, TREE_DOT, REASSIGNED_JSON, BUNDLE_JSON, "optimize/summary.csv"].map(String::from),
    );
    for f in &files {
        assert!(read(pa.output_dir(), f) == read(pb.output_dir(), f), "{f} differs between runs");
    }

    let manifest: RunManifest = serde_json::from_slice(&read(pa.output_dir(), MANIFEST_FILE)).unwrap();
    manifest.verify_all(pa.output_dir()).unwrap();
    for key in ["optimize:hydrogen-pipeline", "maa:ammonia-shipping", "sample:hydrogen-pipeline", "cluster", "tree", "report"] {
        assert!(manifest.stages.contains_key(key), "{key}");
    }

    assert_eq!(bundle.pathways.len(), 2);
    assert!(bundle.clusters.is_some() && bundle.tree.is_some());
    for r in &bundle.pathways {
        assert_eq!(r.n_samples, 4000);
        assert_eq!(r.histograms.len(), 5);
        for (h, range) in r.histograms.iter().zip(&r.ranges) {
            assert_eq!(h.total(), r.n_samples, "{}", h.variable);
            assert_eq!(h.counts.len(), 50);
            assert_eq!(h.edges[0], range.min);
            assert_eq!(h.edges[50], range.max);
            let opt = h.optimum.unwrap();
            assert!(opt >= range.min - 1e-9 && opt <= range.max + 1e-9);
        }
        let cost = r.cost.as_ref().unwrap();
        assert_eq!(cost.checked, 40);
        assert_eq!(cost.verified, 40);
        assert!(cost.min >= r.f_star * (1.0 - 1e-9) && cost.max <= r.f_star * 1.1 * (1.0 + 1e-6));
    }
    let hydrogen = &bundle.pathways[0];
    assert!(hydrogen.lcoh_eur_per_mwh < bundle.pathways[1].lcoh_eur_per_mwh);

    let tree = bundle.tree.unwrap();
    assert_eq!(tree.n_samples(), 8000);
    let labeled = read_samples(&pa.output_path(LABELED_SAMPLES)).unwrap();
    assert_eq!(labeled.labels.as_ref().unwrap().len(), 8000);
    assert_eq!(labeled.carrier_runs, vec![("hydrogen".into(), 4000), ("ammonia".into(), 4000)]);

    let summary = String::from_utf8(read(pa.output_dir(), "optimize/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("pathway,objective_meur,lcoh_eur_per_mwh"));
}

#[test]
fn pathway_outputs_do_not_depend_on_the_other_pathways() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = Pipeline::from_path(&toy_config(a.path(), ""), None, None).unwrap();
    let pb = Pipeline::from_path(&toy_config(b.path(), ""), Some("hydrogen-pipeline"), None).unwrap();
    for p in [&pa, &pb] {
        p.optimize().unwrap();
        p.maa().unwrap();
        p.sample().unwrap();
    }
    let rel = samples_path("hydrogen-pipeline");
    assert!(read(pa.output_dir(), &rel) == read(pb.output_dir(), &rel));

    let pc = Pipeline::from_path(&toy_config(b.path(), ""), Some("hydrogen-pipeline"), Some(12)).unwrap();
    pc.optimize().unwrap();
    pc.maa().unwrap();
    pc.sample().unwrap();
    assert!(read(pa.output_dir(), &rel) != read(pc.output_dir(), &rel));
}

#[test]
fn carrier_labelled_tree() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::from_path(&toy_config(dir.path(), "[tree]\nlabels = \"carrier\"\nmax_depth = 2\n"), None, None).unwrap();
    p.optimize().unwrap();
    p.maa().unwrap();
    p.sample().unwrap();
    let tree = p.tree().unwrap();
    assert_eq!(tree.class_names, vec!["ammonia", "hydrogen"]);
    assert!(tree.depth() <= 2);
    assert!(tree.accuracy > 0.5);
}

#[test]
fn config_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let c = RunConfig::load(&cfg).unwrap();
    assert_eq!(c.output_dir, dir.path().join("out"));
    assert_eq!(c.pathway_names(), vec!["hydrogen-pipeline", "ammonia-shipping"]);
    let all = RunConfig::from_toml_str("output_dir = \"x\"\n").unwrap();
    assert_eq!(all.pathway_names().len(), 8);
    assert!(matches!(RunConfig::from_toml_str("output_dir = \"x\"\npathways = [\"hydrogen-pipeline\", \"hydrogen-pipeline\"]\n"), Err(PipelineError::Config(_))));
}

#[test]
fn pathway_seeds_are_stable_and_distinct() {
    assert_eq!(pathway_seed(1, "hydrogen-shipping"), pathway_seed(1, "hydrogen-shipping"));
    assert_ne!(pathway_seed(1, "hydrogen-shipping"), pathway_seed(1, "hydrogen-pipeline"));
    assert_ne!(pathway_seed(1, "hydrogen-shipping"), pathway_seed(2, "hydrogen-shipping"));
}
