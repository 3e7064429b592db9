use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bktf::benchfns;
use bktf::harness::{
    compute_profiles, read_profile_matrix, write_outputs, write_profiles, Experiment, ExperimentConfig, Profiles,
};
use bktf::GridSpace;

#[derive(Parser)]
#[command(name = "bktf", version, about = "Bayesian optimization on grids with a BKTF surrogate")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: `output_dir` from the config, else
        /// `results/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pool result directories and compute performance profiles.
    Profiles {
        #[arg(long = "in", num_args = 1.., required = true)]
        dirs: Vec<PathBuf>,
        /// Where to write profiles.csv and auc.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the grid optimum of a registered benchmark.
    Oracle {
        #[arg(long)]
        function: String,
        /// Points per dimension, e.g. `71,71` (default: the benchmark's grid).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    benchfns::verify_all().context("benchmark registration check failed")?;
    match cli.command {
        Cmd::Run { config, out } => run(config, out),
        Cmd::Profiles { dirs, out } => {
            let p = compute_profiles(&read_profile_matrix(&dirs)?)?;
            print_auc(&p);
            if let Some(out) = out {
                write_profiles(&out, &p)?;
                println!("wrote {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Oracle { function, grid } => {
            let b = benchfns::by_name(&function)?;
            let points = grid.unwrap_or_else(|| b.default_points.clone());
            let space = GridSpace::uniform(&b.bounds, &points)?;
            let (ix, value) = benchfns::grid_optimum(&b, &space, benchfns::GRID_CAP)?;
            println!("function   {}", b.name);
            println!("grid       {points:?} ({} entries)", space.len());
            println!("index      {:?}", ix.as_slice());
            println!("x          {:?}", space.point(&ix)?);
            println!("grid f*    {value}");
            println!("f*         {}", b.optimum);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(config: PathBuf, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(&config)?;
    let out = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results").join(&cfg.name));
    let exp = Experiment::resolve(&cfg)?;
    log::info!(
        "{}: {} methods x {} replications, grid {:?}, n_init {}, budget {}",
        cfg.name,
        cfg.methods.len(),
        cfg.replications,
        exp.problem.grid.shape(),
        exp.problem.n_init,
        exp.problem.budget
    );
    let result = exp.run();
    let profiles = write_outputs(&out, &result).with_context(|| format!("writing {}", out.display()))?;

    println!("{:<12} {:>6} {:>14} {:>8}", "method", "runs", "median error", "solved");
    for &m in &cfg.methods {
        let mut finals: Vec<f64> = result.traces_for(m).filter_map(|t| t.rows.last().and_then(|r| r.abs_err)).collect();
        finals.sort_by(f64::total_cmp);
        let median = match finals.len() {
            0 => "-".to_string(),
            n if n % 2 == 1 => format!("{:.4}", finals[n / 2]),
            n => format!("{:.4}", 0.5 * (finals[n / 2 - 1] + finals[n / 2])),
        };
        let solved = finals.iter().filter(|&&e| e <= cfg.evaluation.tolerance).count();
        println!("{:<12} {:>6} {:>14} {:>8}", m.name(), result.traces_for(m).count(), median, solved);
    }
    if let Some(p) = &profiles {
        print_auc(p);
    }
    println!("wrote {}", out.display());

    let failed: Vec<_> = result.failures().collect();
    for t in &failed {
        eprintln!("{} run {} failed: {}", t.method.name(), t.run, t.failure.as_deref().unwrap_or(""));
    }
    if failed.len() == result.traces.len() && !failed.is_empty() {
        bail!("every run failed");
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn print_auc(p: &Profiles) {
    println!("{:<12} {:>10}", "method", "AUC");
    for (m, a) in p.methods.iter().zip(&p.auc) {
        println!("{m:<12} {a:>10.3}");
    }
}
