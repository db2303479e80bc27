use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chemcons::config::{ScenarioConfig, TopologySpec};
use chemcons::io::{write_edge_list, write_run};
use chemcons::run::{run_oracle, run_scenario, sweep};
use chemcons::RunError;
use chemcons_core::crn::{analyze, equivalent_unicast_form};
use chemcons_core::topology::algebraic_connectivity;
use clap::{Parser, Subcommand};

/// Chemical average consensus simulator.
#[derive(Debug, Parser)]
#[command(name = "chemcons", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write states.csv, metrics.csv and record.json.
    Run {
        config: PathBuf,
        /// Output directory (default: $CHEMCONS_OUT/<config name> or runs/<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Print the deficiency analysis of the unicast-equivalent network and lambda_2.
    Analyze { config: PathBuf },
    /// Write an edge list.
    Topology {
        /// ring, complete, lattice or small_world.
        kind: String,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        edges: Option<usize>,
        #[arg(long)]
        rewire_p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario per parameter value, in parallel.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the mean-field ODE trajectory (events are not replayed).
    Oracle {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_out(config: &Path, out: Option<PathBuf>, suffix: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let base = std::env::var_os("CHEMCONS_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
        let stem = config
            .file_stem()
            .map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
        base.join(format!("{stem}{suffix}"))
    })
}

fn execute(cmd: Command) -> Result<(), RunError> {
    match cmd {
        Command::Run {
            config,
            out,
            seed,
            duration,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = duration {
                cfg.duration = d;
            }
            let rec = run_scenario(&cfg)?;
            let dir = default_out(&config, out, "");
            write_run(&dir, &rec)?;
            println!(
                "{}: {} samples, convergence_time={}, final_mean={}",
                dir.display(),
                rec.samples.len(),
                rec.metrics
                    .convergence_time
                    .map_or_else(|| "none".to_string(), |t| t.to_string()),
                rec.metrics.final_mean
            );
        }
        Command::Analyze { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let g = cfg.topology.build()?;
            let report = analyze(&equivalent_unicast_form(&g));
            let out = serde_json::json!({
                "analysis": report,
                "lambda2": algebraic_connectivity(&g)?,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
        }
        Command::Topology {
            kind,
            nodes,
            k,
            edges,
            rewire_p,
            seed,
            out,
        } => {
            let spec = TopologySpec {
                kind,
                m: nodes,
                k,
                edges,
                rewire_p,
                seed,
                edge_list: None,
            };
            if spec.kind == "edge_list" {
                return Err(RunError::UnknownTopology(spec.kind));
            }
            write_edge_list(&out, &spec.build()?)?;
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let base = default_out(&config, out, "_sweep");
            for (v, rec) in sweep(&cfg, &param, &values)? {
                let dir = base.join(format!("{param}_{v}"));
                write_run(&dir, &rec)?;
                println!(
                    "{param}={v}: final_nmse={} -> {}",
                    rec.metrics.nmse.last().copied().unwrap_or(f64::NAN),
                    dir.display()
                );
            }
        }
        Command::Oracle { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let rec = run_oracle(&cfg)?;
            let dir = default_out(&config, out, "_ode");
            write_run(&dir, &rec)?;
            println!("{}: {} samples", dir.display(), rec.samples.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => e.exit(),
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
