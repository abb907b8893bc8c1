use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use netes::harness::output::{self, write_atomic};
use netes::harness::{self, apply_preset, ConfigOutcome, ExperimentConfig, ScatterConfig, SweepConfig};
use netes::metrics;
use netes::topology::{self, Family, TopologySpec, DEFAULT_WS_BETA};

#[derive(Parser)]
#[command(name = "netes", version, about = "Networked evolution strategies experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on one or more experiment configs and write CSVs, curves and a summary.
    Run(RunArgs),
    /// Reachability/homogeneity scatter over the four generated families.
    Scatter(OutArgs),
    /// Random-instance check of the update-variance bound.
    BoundSweep(OutArgs),
    /// Generate or inspect graphs.
    #[command(subcommand)]
    Graph(GraphCommand),
}

#[derive(Args)]
struct RunArgs {
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ablation preset; repeat to compare several on the same config.
    #[arg(long = "preset")]
    presets: Vec<String>,
}

#[derive(Args)]
struct OutArgs {
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Write a connected graph as an edge list.
    Gen(GenArgs),
    /// Print degree statistics and metrics for an edge list.
    Stats { path: PathBuf },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Target density used when the family parameter is not given.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_attempts: u32,
    /// Destination file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run(args) => run(args),
        Command::Scatter(args) => scatter(args),
        Command::BoundSweep(args) => bound_sweep(args),
        Command::Graph(GraphCommand::Gen(args)) => graph_gen(args),
        Command::Graph(GraphCommand::Stats { path }) => graph_stats(&path),
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut outcomes = Vec::new();
    let mut outdir = args.out.clone();
    for path in &args.configs {
        let base = harness::load_config(path).with_context(|| format!("loading {}", path.display()))?;
        let mut config = base.config;
        if let Some(seeds) = &args.seeds {
            config.seeds = seeds.clone();
        }
        outdir.get_or_insert_with(|| config.output_dir.clone());
        let variants: Vec<ExperimentConfig> = if args.presets.is_empty() {
            vec![config]
        } else {
            args.presets
                .iter()
                .map(|p| apply_preset(config.clone(), p))
                .collect::<netes::Result<_>>()?
        };
        for config in variants {
            let exp = config.resolve()?;
            eprintln!("running {} ({} seeds)", exp.config.name, exp.config.seeds.len());
            let seeds = harness::run_experiment(&exp);
            outcomes.push(ConfigOutcome {
                config: exp.config,
                seeds,
            });
        }
    }
    let outdir = outdir.expect("at least one config");
    harness::emit_outputs(&outcomes, &outdir)?;
    print!("{}", output::summary_csv(&outcomes));
    let failed = outcomes
        .iter()
        .flat_map(|o| &o.seeds)
        .filter(|s| s.result.is_err())
        .count();
    if failed > 0 {
        eprintln!("{failed} seed(s) failed; see errors.txt in the output directory");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn scatter(args: OutArgs) -> Result<ExitCode> {
    let c = ScatterConfig::load(&args.config)?;
    let points = metrics::family_scatter(c.n, c.density, c.samples_per_family, c.seed, c.max_connect_attempts)?;
    let path = args.out.unwrap_or(c.output_dir).join("scatter.csv");
    write_atomic(&path, output::scatter_csv(&points).as_bytes())?;
    for family in Family::GENERATED {
        let (r, h): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.family == family)
            .map(|p| (p.reachability, p.homogeneity))
            .unzip();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "{:<16} reachability {:>8.4}  homogeneity {:>6.4}",
            family.as_str(),
            mean(&r),
            mean(&h)
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn bound_sweep(args: OutArgs) -> Result<ExitCode> {
    let c = SweepConfig::load(&args.config)?;
    let rows = netes::diagnostics::bound_sweep(&c.options())?;
    let path = args.out.unwrap_or(c.output_dir).join("sweep.csv");
    write_atomic(&path, output::sweep_csv(&rows).as_bytes())?;
    let holds = rows.iter().filter(|r| r.report.holds).count();
    println!("bound holds on {holds}/{} instances", rows.len());
    eprintln!("wrote {}", path.display());
    Ok(if holds == rows.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn graph_gen(a: GenArgs) -> Result<ExitCode> {
    let spec = match a.family {
        Family::Complete => TopologySpec::Complete,
        Family::Edgeless => TopologySpec::Edgeless,
        Family::ErdosRenyi => TopologySpec::ErdosRenyi { p: a.p.unwrap_or(a.density) },
        Family::SmallWorld => match a.k {
            Some(k) => TopologySpec::WattsStrogatz {
                k,
                beta: a.beta.unwrap_or(DEFAULT_WS_BETA),
            },
            None => match TopologySpec::matched(a.family, a.n, a.density)? {
                TopologySpec::WattsStrogatz { k, .. } => TopologySpec::WattsStrogatz {
                    k,
                    beta: a.beta.unwrap_or(DEFAULT_WS_BETA),
                },
                other => other,
            },
        },
        Family::ScaleFree => match a.m {
            Some(m) => TopologySpec::BarabasiAlbert { m },
            None => TopologySpec::matched(a.family, a.n, a.density)?,
        },
        Family::Custom => bail!("family `custom` cannot be generated; pass an edge list to `graph stats`"),
    };
    let g = if spec == TopologySpec::Edgeless {
        topology::generate_edgeless(a.n)?
    } else {
        topology::sample_connected(spec, a.n, a.seed, a.max_attempts)?
    };
    let text = topology::to_edge_list(&g);
    match a.out {
        Some(path) => {
            write_atomic(&path, text.as_bytes())?;
            eprintln!("wrote {} ({} edges, seed {})", path.display(), g.edge_count(), g.seed());
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn graph_stats(path: &Path) -> Result<ExitCode> {
    let g = topology::read_edge_list(path)?;
    let stats = topology::degree_stats(&g);
    println!("nodes         {}", g.n());
    println!("edges         {}", g.edge_count());
    println!("density       {:.6}", metrics::density(&g));
    println!("connected     {}", topology::is_connected(&g));
    println!("degree min    {}", stats.min_degree);
    println!("degree max    {}", stats.max_degree);
    println!("degree mean   {:.4}", stats.mean_degree);
    match metrics::topology_metrics(&g) {
        Ok(m) => {
            println!("reachability  {:.6}", m.reachability);
            println!("homogeneity   {:.6}", m.homogeneity);
        }
        Err(e) => println!("metrics       undefined ({e})"),
    }
    Ok(ExitCode::SUCCESS)
}
