use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grsparse::approx::{optimize_approx, ApproxOptions, DEFAULT_INTERVALS};
use grsparse::bound::lower_bound_of;
use grsparse::exact::optimize_exact;
use grsparse::experiment::{run_experiment, ExperimentConfig, ExperimentId};
use grsparse::simulator::{overlap, simulate};
use grsparse::{Circuit, CostReport, Error, PreparationTree, SparseState};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "grsparse")]
#[command(about = "Sparse Grover-Rudolph state preparation with exact and approximate gate merging")]
#[command(version)]
struct Cli {
    /// Include the per-merge log in JSON reports
    #[arg(long, global = true)]
    emit_log: bool,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Build the unoptimized circuit for a state file
    Prepare {
        /// State file (text `n=<int>` format or JSON)
        state: PathBuf,
        /// Write the circuit JSON here instead of embedding it in the report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the exact merge and strip optimization
    OptimizeExact {
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the fidelity-budgeted approximate optimization
    OptimizeApprox {
        state: PathBuf,
        /// Minimum allowed overlap estimate
        #[arg(long)]
        fmin: f64,
        /// Number of threshold intervals
        #[arg(long, default_value_t = DEFAULT_INTERVALS)]
        intervals: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a circuit and print the prepared state
    Simulate {
        /// Circuit JSON file
        circuit: PathBuf,
        /// Also report the overlap with this target state
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Run one of the CSV experiments
    Experiment {
        /// merge_ratio | cost_comparison | estimator_gap | approx_vs_exact | m_sweep
        id: String,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated sparsity values D = d / 2^n
        #[arg(long, value_delimiter = ',')]
        sparsity: Option<Vec<f64>>,
        /// Comma-separated minimum overlaps
        #[arg(long, value_delimiter = ',')]
        fmin: Option<Vec<f64>>,
        /// Comma-separated interval counts
        #[arg(long, value_delimiter = ',')]
        intervals: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(category: &str) -> u8 {
    match category {
        "parse" => 3,
        "invalid-state" => 4,
        "invalid-pattern" => 5,
        "invalid-circuit" => 6,
        "invalid-config" => 7,
        "dimension-mismatch" => 8,
        _ => 9,
    }
}

fn circuit_value(circuit: &Circuit) -> Value {
    serde_json::from_str(&circuit.to_json()).expect("circuit JSON is valid")
}

/// Writes the circuit to `out` or embeds it in `report` under `circuit`.
fn place_circuit(report: &mut Value, circuit: &Circuit, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            fs::write(path, circuit.to_json() + "\n")?;
            report["circuit_file"] = json!(path.display().to_string());
        }
        None => report["circuit"] = circuit_value(circuit),
    }
    Ok(())
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Commands::Prepare { state, out } => {
            let psi = SparseState::read(&state)?;
            let circuit = PreparationTree::build(&psi).baseline_angles().to_circuit();
            let mut report = json!({
                "n": psi.n(),
                "d": psi.support_size(),
                "gates": circuit.gate_count(),
                "cost": CostReport::of(&circuit),
            });
            place_circuit(&mut report, &circuit, out.as_deref())?;
            print_json(&report);
        }
        Commands::OptimizeExact { state, out } => {
            let psi = SparseState::read(&state)?;
            let tree = PreparationTree::build(&psi);
            let result = optimize_exact(&tree.baseline_angles(), &tree);
            let mut report = json!({
                "n": psi.n(),
                "d": psi.support_size(),
                "gates": result.optimized.gate_count(),
                "cost": result.cost,
            });
            if cli.emit_log {
                report["merge_log"] = json!(result.merge_log);
            }
            place_circuit(&mut report, &result.optimized, out.as_deref())?;
            print_json(&report);
        }
        Commands::OptimizeApprox {
            state,
            fmin,
            intervals,
            out,
        } => {
            let psi = SparseState::read(&state)?;
            let tree = PreparationTree::build(&psi);
            let baseline = tree.baseline_angles();
            let result = optimize_approx(&baseline, &tree, &ApproxOptions::new(fmin, intervals))?;
            let f_lb = lower_bound_of(&result.clusters, &tree, &baseline, &result.optimized);
            let f_true = overlap(&psi, &simulate(&result.optimized))?;
            let mut report = json!({
                "n": psi.n(),
                "d": psi.support_size(),
                "fmin": fmin,
                "intervals": intervals,
                "gates": result.optimized.gate_count(),
                "cost": result.cost,
                "exact_cost": result.exact.cost,
                "f_est": result.f_est,
                "f_lb": f_lb,
                "f_true": f_true,
                "passes": result.passes,
            });
            if cli.emit_log {
                report["exact_merge_log"] = json!(result.exact.merge_log);
                report["accepted_merges"] = json!(result.accepted_merges);
            }
            place_circuit(&mut report, &result.optimized, out.as_deref())?;
            print_json(&report);
        }
        Commands::Simulate { circuit, target } => {
            let circuit = Circuit::read(&circuit)?;
            let prepared = simulate(&circuit);
            if let Some(target) = target {
                let psi = SparseState::read(&target)?;
                println!("# overlap={}", overlap(&psi, &prepared)?);
            }
            print!("{}", prepared.to_text());
        }
        Commands::Experiment {
            id,
            n,
            sparsity,
            fmin,
            intervals,
            reps,
            seed,
            out,
        } => {
            let id: ExperimentId = id.parse().map_err(Error::Config)?;
            let mut config = ExperimentConfig::defaults(id);
            config.seed = seed;
            if let Some(n) = n {
                config.n = n;
            }
            if let Some(s) = sparsity {
                config.sparsities = s;
            }
            if let Some(f) = fmin {
                config.f_mins = f;
            }
            if let Some(m) = intervals {
                config.intervals = m;
            }
            if let Some(r) = reps {
                config.repetitions = r;
            }
            let csv = run_experiment(&config)?;
            match out {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            let report = json!({ "error": { "category": category, "message": e.to_string() } });
            eprintln!("{report}");
            ExitCode::from(exit_code(category))
        }
    }
}
