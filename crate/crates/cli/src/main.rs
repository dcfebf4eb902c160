//! Command-line front end: run programs, lint them, replay the built-in
//! measurement corpus, report dependence-tracking area, and sweep
//! configuration axes.

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use warpsim_core::bench;
use warpsim_core::deps::{area_report, Mechanism};
use warpsim_core::isa::Severity;
use warpsim_core::sim::apply_axis;
use warpsim_core::{
    encode_program, parse_program, run, validate_program, DepsMechanism, Program, SmConfig,
};

#[derive(Parser)]
#[command(name = "warpsim", version, about = "Cycle-level SM sub-core model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a program and emit the run record as JSON.
    Run {
        program: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dependence mechanism override: control_bits, scoreboard, hybrid.
        #[arg(long)]
        deps: Option<String>,
        /// Write the JSON run record here (defaults to stdout summary only).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the wall-clock timestamp out of the JSON record.
        #[arg(long)]
        no_timestamp: bool,
        #[arg(long)]
        cycle_cap: Option<u64>,
    },
    /// Lint a program's control bits against the hazard rules.
    Validate { program: PathBuf },
    /// Replay built-in microbenchmarks (`all` for the whole corpus).
    Bench {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report dependence-tracking state relative to the register file.
    Area {
        #[arg(long, default_value_t = 48)]
        warps: u64,
        #[arg(long, default_value_t = 262144)]
        rf_bytes: u64,
        #[arg(long, default_value = "control_bits")]
        mechanism: String,
        #[arg(long, default_value = "63")]
        max_consumers: String,
    },
    /// Run one config axis over several values and tabulate the stats.
    Sweep {
        program: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent simulations.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Parse a program and re-emit it in canonical form.
    Asm {
        program: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: u8, kind: &str, message: impl std::fmt::Display) -> ExitCode {
    let err = json!({ "error": { "kind": kind, "message": message.to_string() } });
    println!("{err}");
    ExitCode::from(code)
}

fn load_program(path: &PathBuf) -> Result<Program, ExitCode> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(2, "io", format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| fail(2, "parse", e))
}

fn load_config(path: &Option<PathBuf>) -> Result<SmConfig, ExitCode> {
    match path {
        None => Ok(SmConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| fail(2, "io", format!("{}: {e}", p.display())))?;
            SmConfig::from_ini(&text).map_err(|e| fail(2, "config", e))
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> Result<(), ExitCode> {
    match out {
        Some(p) => std::fs::write(p, content).map_err(|e| fail(2, "io", e)),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Run { program, config, deps, out, no_timestamp, cycle_cap } => {
            let prog = load_program(&program)?;
            let mut cfg = load_config(&config)?;
            if let Some(d) = deps {
                cfg.deps_mechanism = match d.as_str() {
                    "control_bits" => DepsMechanism::ControlBits,
                    "scoreboard" => DepsMechanism::Scoreboard,
                    "hybrid" => DepsMechanism::Hybrid,
                    other => return Err(fail(2, "usage", format!("unknown mechanism `{other}`"))),
                };
            }
            if let Some(cap) = cycle_cap {
                cfg.cycle_cap = cap;
            }
            let diags = validate_program(&prog, &cfg.latency_table);
            let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
            if !errors.is_empty() {
                for d in &errors {
                    eprintln!("error at pc 0x{:x}: {} ({})", d.pc, d.message, d.kind);
                }
                return Err(fail(1, "validation", format!("{} hazard error(s)", errors.len())));
            }
            let result = run(&prog, &cfg).map_err(|e| fail(1, "fault", e))?;

            println!("cycles: {}", result.stats.total_cycles);
            println!("instructions: {}", result.stats.instructions_issued);
            for (i, sc) in result.stats.per_subcore.iter().enumerate() {
                let ipc = sc.issued as f64 / result.stats.total_cycles.max(1) as f64;
                println!("sub-core {i}: issued {} (ipc {ipc:.3})", sc.issued);
            }
            if !result.stats.bubbles.is_empty() {
                println!("bubbles:");
                for (reason, count) in &result.stats.bubbles {
                    println!("  {reason}: {count}");
                }
            }
            for w in 0..cfg.warps {
                let caps: Vec<_> = result.clocks.iter().filter(|c| c.warp == w).collect();
                if caps.len() >= 2 {
                    let delta = caps.last().unwrap().value as i64 - caps[0].value as i64;
                    println!("clock delta (warp {w}): {delta}");
                }
            }
            for d in &result.diagnostics {
                println!("hazard diagnostic at pc 0x{:x}: {}", d.pc, d.message);
            }

            if let Some(path) = out {
                let mut record = serde_json::to_value(&result).map_err(|e| fail(1, "json", e))?;
                if !no_timestamp {
                    let now = std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0);
                    record["timestamp"] = json!(now);
                }
                let text = serde_json::to_string_pretty(&record).map_err(|e| fail(1, "json", e))?;
                std::fs::write(&path, text).map_err(|e| fail(2, "io", e))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Validate { program } => {
            let prog = load_program(&program)?;
            let diags = validate_program(&prog, &SmConfig::default().latency_table);
            let mut errors = 0;
            for d in &diags {
                let sev = match d.severity {
                    Severity::Error => {
                        errors += 1;
                        "error"
                    }
                    Severity::Warning => "warning",
                    Severity::Info => "info",
                };
                println!(
                    "{}",
                    json!({ "severity": sev, "pc": d.pc, "kind": d.kind, "message": d.message })
                );
            }
            if errors == 0 {
                eprintln!("clean: {} diagnostic(s), no errors", diags.len());
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{errors} error(s)");
                Ok(ExitCode::from(1))
            }
        }

        Command::Bench { name, out } => {
            let outcomes = if name == "all" {
                bench::run_all()
            } else {
                vec![bench::run_bench(&name).map_err(|e| fail(2, "usage", e))?]
            };
            let mut failed = 0;
            for o in &outcomes {
                for c in &o.checks {
                    let status = if c.pass { "PASS" } else { "FAIL" };
                    if !c.pass {
                        failed += 1;
                    }
                    let detail = if c.detail.is_empty() || c.pass {
                        String::new()
                    } else {
                        format!("  ({})", c.detail)
                    };
                    println!("{status} [{}] {}{detail}", o.bench, c.name);
                }
            }
            let total: usize = outcomes.iter().map(|o| o.checks.len()).sum();
            println!("{} checks, {} failed", total, failed);
            if let Some(path) = out {
                let report: Vec<_> = outcomes
                    .iter()
                    .map(|o| {
                        json!({
                            "bench": o.bench,
                            "source": o.source,
                            "checks": o.checks.iter().map(|c| json!({
                                "name": c.name, "pass": c.pass, "detail": c.detail
                            })).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let text = serde_json::to_string_pretty(&report).map_err(|e| fail(1, "json", e))?;
                std::fs::write(&path, text).map_err(|e| fail(2, "io", e))?;
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }

        Command::Area { warps, rf_bytes, mechanism, max_consumers } => {
            if warps == 0 || rf_bytes == 0 {
                return Err(fail(2, "usage", "warps and rf-bytes must be positive"));
            }
            let mech = match mechanism.as_str() {
                "control_bits" => Mechanism::ControlBits,
                "scoreboard" => {
                    let max = match max_consumers.as_str() {
                        "unlimited" => None,
                        n => Some(
                            n.parse::<u32>().map_err(|_| fail(2, "usage", "bad max-consumers"))?,
                        ),
                    };
                    Mechanism::Scoreboard { max_consumers: max }
                }
                other => return Err(fail(2, "usage", format!("unknown mechanism `{other}`"))),
            };
            let report = area_report(mech, warps, rf_bytes);
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(ExitCode::SUCCESS)
        }

        Command::Sweep { program, axis, values, config, out, jobs } => {
            let prog = load_program(&program)?;
            let cfg = load_config(&config)?;
            let values: Vec<String> =
                values.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if values.is_empty() {
                return Err(fail(2, "usage", "sweep needs at least one value"));
            }
            // Validate the axis up front so bad keys fail before any run.
            for v in &values {
                let mut probe = cfg.clone();
                apply_axis(&mut probe, &axis, v).map_err(|e| fail(2, "usage", e))?;
            }
            let jobs = jobs.max(1);
            let mut rows: Vec<(String, warpsim_core::RunStats)> = Vec::new();
            for chunk in values.chunks(jobs) {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|v| {
                        let mut c = cfg.clone();
                        apply_axis(&mut c, &axis, v).expect("validated axis");
                        let p = prog.clone();
                        let v = v.clone();
                        std::thread::spawn(move || (v, run(&p, &c)))
                    })
                    .collect();
                for h in handles {
                    let (v, r) = h.join().expect("worker");
                    let stats = r.map_err(|e| fail(1, "fault", e))?.stats;
                    rows.push((v, stats));
                }
            }
            let mut csv = String::from(
                "value,total_cycles,instructions,allocate_hold,lsu_block,rfc_hits,rfc_misses,demand_misses,prefetch_fills\n",
            );
            for (v, s) in &rows {
                csv.push_str(&format!(
                    "{v},{},{},{},{},{},{},{},{}\n",
                    s.total_cycles,
                    s.instructions_issued,
                    s.allocate_hold_cycles,
                    s.lsu_block_cycles,
                    s.rfc_hits,
                    s.rfc_misses,
                    s.icache_demand_misses,
                    s.prefetch_fills
                ));
            }
            write_or_print(&out, csv.trim_end())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Asm { program, out } => {
            let prog = load_program(&program)?;
            let text = encode_program(&prog);
            write_or_print(&out, text.trim_end())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
