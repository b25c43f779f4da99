use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inls_core::classify::classify_run;
use inls_core::groundstate::compute_constants;
use inls_core::harness::{
    emit_plotdata, init_threads, load_config, read_records, run_experiment, sweep_amplitude, virial_check,
    virial_refinement, ConstantsCache,
};
use inls_core::model::Number;
use inls_core::InlsError;

#[derive(Parser)]
#[command(name = "inls", version, about = "Energy-critical inhomogeneous NLS simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print c, C1 and E(W) as CSV for every (N, b) pair given.
    Groundstate {
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<Number>,
    },
    /// Run one experiment and print its record.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Also write gnuplot files next to the record.
        #[arg(long)]
        plot: bool,
    },
    /// Re-derive verdicts from stored records and their diagnostics.
    Classify {
        #[arg(long)]
        record: PathBuf,
    },
    /// Run the configured experiment once per amplitude.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        amplitudes: Vec<f64>,
    },
    /// Compare dM_a/dt with the virial right side along the configured run.
    VirialCheck {
        #[arg(long)]
        config: PathBuf,
        /// Repeat with dt and h halved and report the residual ratio.
        #[arg(long)]
        refine: bool,
    },
}

fn exit_for(e: &InlsError) -> u8 {
    match e {
        InlsError::Config(_) | InlsError::Range { .. } | InlsError::DimensionUnsupported(..) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<u8, InlsError> {
    init_threads()?;
    let cache = ConstantsCache::new();
    match cli.command {
        Command::Groundstate { n, b } => {
            println!("N,b,alpha,c,C1,E_W,quadrature_error");
            for &dim in &n {
                for &bb in &b {
                    let k = compute_constants(dim, bb)?;
                    println!(
                        "{dim},{bb},{},{},{},{},{:e}",
                        k.alpha, k.c, k.c1, k.e_w, k.quadrature_error
                    );
                }
            }
            Ok(0)
        }
        Command::Evolve { config, plot } => {
            let cfg = load_config(&config)?;
            let rec = run_experiment(&cfg, &cache)?;
            println!("{}", rec.to_json_line()?);
            if plot {
                emit_plotdata(std::slice::from_ref(&rec), &cfg.output_dir)?;
            }
            Ok(rec.exit_code() as u8)
        }
        Command::Classify { record } => {
            for rec in read_records(&record)? {
                let series = rec.load_series()?;
                let halt = rec
                    .halt
                    .as_ref()
                    .ok_or_else(|| InlsError::InsufficientData(format!("record {} never ran", rec.config_hash)))?;
                let verdict = classify_run(&series, halt, rec.resolved.evolve.t_end, &rec.thresholds)?;
                println!(
                    "{}",
                    serde_json::json!({
                        "config_hash": rec.config_hash,
                        "verdict": verdict,
                        "matches_record": verdict == rec.verdict,
                    })
                );
            }
            Ok(0)
        }
        Command::Sweep { config, amplitudes } => {
            let cfg = load_config(&config)?;
            let summary = sweep_amplitude(&cfg, &amplitudes, &cache)?;
            print!("{}", summary.csv());
            let fmt = |b: Option<(f64, f64)>| b.map_or("none".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"));
            eprintln!("verdict transition bracket: {}", fmt(summary.verdict_bracket));
            eprintln!("threshold crossing bracket: {}", fmt(summary.threshold_bracket));
            emit_plotdata(&summary.records, &cfg.output_dir)?;
            let failed = summary.records.iter().any(|r| r.error.is_some());
            Ok(if failed { 3 } else { 0 })
        }
        Command::VirialCheck { config, refine } => {
            let cfg = load_config(&config)?;
            if refine {
                let r = virial_refinement(&cfg, &cache)?;
                println!("coarse_residual,fine_residual,ratio");
                println!("{},{},{}", r.coarse, r.fine, r.ratio);
            } else {
                let check = virial_check(&cfg, &cache)?;
                println!("t,dMa_dt,virial_rhs,residual");
                for row in &check.rows {
                    println!("{},{},{},{}", row.t, row.dma_dt, row.virial_rhs, row.residual);
                }
                eprintln!("max residual {:e}", check.max_residual);
                eprintln!("four-term vs shortcut at t0 {:e}", check.shortcut_rel_diff);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
