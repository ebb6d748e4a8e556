use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsi_core::bench::run_benchmark;
use fsi_core::config::RunConfig;
use fsi_core::FsiError;

#[derive(Parser)]
#[command(name = "fsisolve", version, about = "Monolithic FSI benchmark driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by `run` and `config`; each overrides the file key of the same meaning.
#[derive(clap::Args)]
struct Overrides {
    /// Flat key = value case file; defaults apply when omitted.
    #[arg(long)]
    case: Option<PathBuf>,
    /// as, fs or direct (key `smoother`).
    #[arg(long)]
    smoother: Option<String>,
    /// Mesh levels including the coarse one (key `levels`).
    #[arg(long)]
    levels: Option<usize>,
    /// v, w or f (key `cycle`).
    #[arg(long)]
    cycle: Option<String>,
    /// Time steps per period (key `t_step`).
    #[arg(long)]
    tstep: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    /// Pre-smoothing steps (key `pre`).
    #[arg(long)]
    pre: Option<usize>,
    /// Post-smoothing steps (key `post`).
    #[arg(long)]
    post: Option<usize>,
    /// Second solver for a final-state comparison (key `compare`).
    #[arg(long)]
    compare: Option<String>,
    /// Output directory (key `out`).
    #[arg(long)]
    out: Option<String>,
    /// Any further key, as key=value; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the time loop and write report.csv, qoi.csv, summary.json and manifest.txt.
    Run(Overrides),
    /// Print the effective configuration as a manifest without running.
    Config(Overrides),
}

fn load(o: &Overrides) -> Result<RunConfig, FsiError> {
    let text = match &o.case {
        Some(p) => std::fs::read_to_string(p).map_err(|e| FsiError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    };
    put("smoother", o.smoother.clone());
    put("levels", o.levels.map(|v| v.to_string()));
    put("cycle", o.cycle.clone());
    put("t_step", o.tstep.map(|v| v.to_string()));
    put("periods", o.periods.map(|v| v.to_string()));
    put("pre", o.pre.map(|v| v.to_string()));
    put("post", o.post.map(|v| v.to_string()));
    put("compare", o.compare.clone());
    put("out", o.out.clone());
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| FsiError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    RunConfig::with_overrides(&text, &pairs)
}

fn exit_code(e: &FsiError) -> ExitCode {
    match e {
        FsiError::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (o, run) = match &cli.command {
        Command::Run(o) => (o, true),
        Command::Config(o) => (o, false),
    };
    let cfg = match load(o) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fsisolve: {e}");
            return exit_code(&e);
        }
    };
    if !run {
        print!("{}", cfg.manifest());
        return ExitCode::SUCCESS;
    }
    let out = PathBuf::from(&cfg.out);
    eprintln!(
        "fsisolve: case {} with {} on {} levels, {} steps of {} s -> {}",
        cfg.case,
        cfg.solver.kind.name(),
        cfg.levels,
        cfg.n_steps(),
        cfg.dt(),
        out.display()
    );
    match run_benchmark(&cfg, &out) {
        Ok(s) => {
            let a = &s.aggregates;
            println!(
                "dofs {}  steps {}  s^max {:.2}  N {:.2}  rho {:.3e}  time {:.1} s",
                s.dofs, s.steps, a.s_max, a.n, a.rho, a.total_seconds
            );
            if let Some(d) = s.final_difference {
                println!("final-state relative difference {d:.3e}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fsisolve: {e}");
            exit_code(&e)
        }
    }
}
