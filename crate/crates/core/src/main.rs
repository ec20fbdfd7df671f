use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nearopt::pipeline::{Pipeline, PipelineError};
use nearopt::service::{serve, ServiceData};

/// Near-optimal design space exploration for e-molecule import pathways.
#[derive(Parser)]
#[command(name = "nearopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Restrict to one pathway, e.g. hydrogen-shipping.
    #[arg(long)]
    pathway: Option<String>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Cost-optimal solution and metrics per pathway.
    Optimize(Common),
    /// Near-optimal hull per pathway.
    Maa(Common),
    /// Uniform samples from each hull, with a verified subsample.
    Sample(Common),
    /// Cluster the pooled samples.
    Cluster(Common),
    /// Decision tree over the clusters or carriers.
    Tree(Common),
    /// Plot-ready report bundle.
    Report(Common),
    /// Every stage in order.
    Run(Common),
    /// HTTP API over a finished run.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Overrides `service.port`.
        #[arg(long)]
        port: Option<u16>,
    },
}

fn init_threads() -> Result<(), PipelineError> {
    let Ok(v) = std::env::var("NEAROPT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| PipelineError::Config(format!("NEAROPT_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| PipelineError::Runtime(e.to_string()))
}

fn load(c: &Common) -> Result<Pipeline, PipelineError> {
    Pipeline::from_path(&c.config, c.pathway.as_deref(), c.seed)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    init_threads()?;
    match cli.command {
        Command::Optimize(c) => {
            for r in load(&c)?.optimize()? {
                println!(
                    "{:<20} LCOH {:>8.2} EUR/MWh  EC {:.3}",
                    r.pathway, r.metrics.lcoh_eur_per_mwh, r.metrics.energy_consumption
                );
            }
        }
        Command::Maa(c) => {
            for h in load(&c)?.maa()? {
                println!(
                    "volume {:.6e}  iterations {}  converged {}",
                    h.volume(),
                    h.iterations.len(),
                    h.converged
                );
            }
        }
        Command::Sample(c) => {
            for (set, report) in load(&c)?.sample()? {
                println!(
                    "{:<10} {} samples, {}/{} verified",
                    set.carrier_runs.first().map_or("", |r| r.0.as_str()),
                    set.len(),
                    report.verified,
                    report.checked.len()
                );
            }
        }
        Command::Cluster(c) => {
            let export = load(&c)?.cluster()?;
            println!("k = {}, sizes {:?}, inertia {:.6}", export.k, export.sizes, export.inertia);
        }
        Command::Tree(c) => {
            let tree = load(&c)?.tree()?;
            println!("depth {}, {} nodes, accuracy {:.4}", tree.depth(), tree.nodes.len(), tree.accuracy);
        }
        Command::Report(c) => {
            let p = load(&c)?;
            let bundle = p.report()?;
            println!("{} pathways -> {}", bundle.pathways.len(), p.output_path(nearopt::pipeline::BUNDLE_JSON).display());
        }
        Command::Run(c) => {
            let p = load(&c)?;
            let bundle = p.run_all()?;
            println!("{} pathways -> {}", bundle.pathways.len(), p.output_path(nearopt::pipeline::BUNDLE_JSON).display());
        }
        Command::Serve { common, port } => {
            let p = load(&common)?;
            let port = port.unwrap_or(p.config.service.port);
            let data = ServiceData::load(p)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Runtime(e.to_string()))?;
            rt.block_on(serve(data, port))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
