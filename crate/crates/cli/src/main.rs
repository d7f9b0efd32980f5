use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use symdeffix_core::driver::{emit_report, instrumented_path, stem_of};
use symdeffix_core::solver::sexpr;
use symdeffix_core::{repair_source, ErrorClasses, ExecBounds, RepairOptions, SatResult, Solver, SolverConfig, SynthConfig, WpMode};

#[derive(Parser)]
#[command(name = "symdeffix", version, about = "Find and repair heap overflows and divisions by zero in Mini-C programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the repair pipeline on a source file.
    Repair(RepairArgs),
    /// Check satisfiability of a constraint given as an s-expression.
    Solve {
        formula: String,
        #[arg(long, default_value_t = 2000)]
        solver_timeout_ms: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorClass {
    HeapOverflow,
    DivideByZero,
    All,
}

#[derive(clap::Args)]
struct RepairArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 64)]
    unroll_bound: u32,
    #[arg(long, default_value_t = 4096)]
    max_paths: usize,
    #[arg(long, value_enum, default_value_t = ErrorClass::All)]
    error_class: ErrorClass,
    /// Derive the repair from one failing path only.
    #[arg(long)]
    single_trace: bool,
    #[arg(long, default_value_t = 9)]
    max_expr_size: usize,
    #[arg(long, default_value_t = 5)]
    max_patches: usize,
    #[arg(long, default_value_t = 2000)]
    solver_timeout_ms: u64,
    #[arg(long, default_value = "./tmp/")]
    out_dir: PathBuf,
    /// Include per-stage wall-clock times in the report.
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Repair(args) => repair(args),
        Cmd::Solve { formula, solver_timeout_ms } => solve(&formula, solver_timeout_ms),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn repair(args: RepairArgs) -> Result<u8> {
    let src = fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let classes = match args.error_class {
        ErrorClass::HeapOverflow => ErrorClasses { heap_overflow: true, divide_by_zero: false },
        ErrorClass::DivideByZero => ErrorClasses { heap_overflow: false, divide_by_zero: true },
        ErrorClass::All => ErrorClasses::ALL,
    };
    let opts = RepairOptions {
        bounds: ExecBounds { unroll: args.unroll_bound, max_paths: args.max_paths },
        classes,
        mode: if args.single_trace { WpMode::SingleTrace } else { WpMode::AllPaths },
        synth: SynthConfig { max_expr_size: args.max_expr_size, max_patches: args.max_patches, ..SynthConfig::default() },
        solver_timeout: Duration::from_millis(args.solver_timeout_ms),
        out_dir: args.out_dir.clone(),
        timings: args.timings,
        ..RepairOptions::default()
    };
    let out = match repair_source(&src, &args.file, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}: {e}", args.file.display());
            return Ok(3);
        }
    };
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let stem = stem_of(&args.file);
    fs::write(instrumented_path(&opts, &args.file), &out.instrumented_text)?;
    fs::write(args.out_dir.join(format!("{stem}.report.json")), emit_report(&out.report))?;
    let diff_path = args.out_dir.join(format!("{stem}.patch.diff"));
    match &out.diff {
        Some(d) => fs::write(&diff_path, d)?,
        None if diff_path.exists() => fs::remove_file(&diff_path)?,
        None => {}
    }

    let r = &out.report;
    for c in &r.crash_reports {
        println!("CFC: {}", c.cfc);
        let trace: Vec<String> = c.trace.iter().map(|(a, b)| format!("[{a:?}, {b:?}]")).collect();
        println!("Trace: [{}]", trace.join(", "));
        println!("Line: {}", c.crash_line);
    }
    println!("Path: {}", r.instrumented_path);
    for p in r.patches.iter().filter(|p| p.verified) {
        println!("Patch at line {}: {}", p.line, p.expr);
    }
    if let Some(x) = &r.cross_mode_check {
        println!("All-paths check of the single-trace patch: {}", if x.passed { "passed" } else { "FAILED" });
    }
    println!("Verdict: {:?}", r.verdict);
    Ok(r.exit_code as u8)
}

fn solve(formula: &str, timeout_ms: u64) -> Result<u8> {
    let c = sexpr::parse_constraint(formula).context("parsing formula")?;
    let solver = Solver::new(SolverConfig { timeout: Duration::from_millis(timeout_ms), ..SolverConfig::default() });
    match solver.check_sat(&c) {
        SatResult::Sat(m) => {
            println!("sat");
            for (k, v) in m {
                println!("{k} = {v}");
            }
            Ok(0)
        }
        SatResult::Unsat => {
            println!("unsat");
            Ok(1)
        }
        SatResult::Unknown(why) => {
            println!("unknown: {why}");
            Ok(4)
        }
    }
}
