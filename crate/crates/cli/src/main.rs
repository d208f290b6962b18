use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zopd_core::harness::experiment::{gaps_csv, run_baselines, run_experiment, run_replicates, Outcome};
use zopd_core::harness::ExperimentConfig;
use zopd_core::Error;

#[derive(Parser)]
#[command(
    name = "zopd",
    version,
    about = "Zeroth-order primal-dual learning of wireless resource-allocation policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learning experiment and write its trace and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
    },
    /// Run the duality diagnostics suite.
    Diag {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the model-aware baselines only.
    Baselines {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::NumericalAbort { .. } => 3,
        _ => 1,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report(o: &Outcome, dir: Option<&Path>) -> Result<(), Error> {
    let s = &o.summary;
    match &s.learned {
        Some(l) => println!(
            "seed {}: {} of {} iterations, {} probes, ergodic utility {:.6} (tail mean {:.6})",
            s.seed, s.completed, s.n_iters, s.probes, l.utility_final, l.utility_tail
        ),
        None => println!("seed {}: {} of {} iterations", s.seed, s.completed, s.n_iters),
    }
    if let Some(b) = &s.baselines {
        for (name, v) in [
            ("clairvoyant", b.clairvoyant),
            ("uniform", b.uniform),
            ("wmmse", b.wmmse),
        ] {
            if let Some(v) = v {
                println!("  {name}: {:.6} (se {:.2e})", v.value, v.se);
            }
        }
    }
    if let Some(d) = dir {
        println!("  wrote {}", d.display());
    }
    match &o.abort {
        Some(Error::NumericalAbort { iter, detail }) => Err(Error::NumericalAbort {
            iter: *iter,
            detail: detail.clone(),
        }),
        Some(e) => Err(Error::NumericalAbort {
            iter: s.completed,
            detail: e.to_string(),
        }),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            replicates,
        } => cmd_run(&config, seed, out, replicates),
        Command::Diag { config, out } => cmd_diag(&config, out),
        Command::Baselines { config, seed } => cmd_baselines(&config, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, replicates: usize) -> Result<(), Error> {
    let cfg = load(config, seed)?;
    let out = out.or_else(|| cfg.output.as_ref().map(PathBuf::from));
    if replicates <= 1 {
        let o = run_experiment(&cfg, out.as_deref())?;
        return report(&o, out.as_deref());
    }
    let mut first_err = None;
    for (i, r) in run_replicates(&cfg, replicates, out.as_deref()).into_iter().enumerate() {
        let dir = out
            .as_ref()
            .map(|d| d.join(format!("seed-{}", cfg.seed.wrapping_add(i as u64))));
        let res = r.and_then(|o| report(&o, dir.as_deref()));
        if let Err(e) = res {
            eprintln!("replicate {i}: {e}");
            first_err.get_or_insert(e);
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_diag(config: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let mut cfg = load(config, None)?;
    cfg.experiment = zopd_core::harness::ExperimentKind::Diag;
    let o = run_experiment(&cfg, out.as_deref())?;
    let (Some(d), Some(s)) = (&o.diag, &o.summary.diag) else {
        return Ok(());
    };
    println!(
        "sandwich affine: {} ({} points, worst margin {:.3e})",
        if d.affine.ok { "ok" } else { "VIOLATED" },
        d.affine.n_points,
        d.affine.worst_margin
    );
    println!(
        "sandwich quadratic: {} ({} points, worst margin {:.3e})",
        if d.quadratic.ok { "ok" } else { "VIOLATED" },
        d.quadratic.n_points,
        d.quadratic.worst_margin
    );
    print!("{}", gaps_csv(d));
    println!("gap fit: slope {:.6}, r^2 {:.6}", s.gap_slope, s.gap_r_squared);
    for w in &s.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn cmd_baselines(config: &Path, seed: Option<u64>) -> Result<(), Error> {
    let cfg = load(config, seed)?;
    let b = run_baselines(&cfg)?;
    for (name, v) in [
        ("clairvoyant", b.clairvoyant),
        ("uniform", b.uniform),
        ("wmmse", b.wmmse),
    ] {
        if let Some(v) = v {
            println!("{name}: {:.6} (se {:.2e})", v.value, v.se);
        }
    }
    if let Some(l) = b.clairvoyant_lambda {
        println!("clairvoyant price: {l:.6e}");
    }
    if let Some(n) = b.wmmse_unconverged {
        println!("wmmse unconverged draws: {n}");
    }
    Ok(())
}
