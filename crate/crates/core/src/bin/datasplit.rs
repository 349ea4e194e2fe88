use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use datasplit::cmd::{self, Experiment};
use datasplit::config::RunConfig;
use datasplit::Result;

#[derive(Parser)]
#[command(
    version,
    about = "Plan, simulate and chart data placement across heterogeneous devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML config; repeat to layer overlays, later files win
    #[arg(long = "config", global = true)]
    configs: Vec<PathBuf>,
    /// Output directory, overriding `out_dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write charts after sweep or noise
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Allocation report for the configured network (plan.txt, plan.csv)
    Plan,
    /// Planned vs uniform timing over the communication sweep (results.csv)
    Sweep,
    /// Acceleration ratios and variance under timing noise (noise.csv)
    Noise,
    /// Fit iteration constants at the probe allocation (calibration.toml)
    Calibrate,
    /// Charts from the CSV files already in the output directory
    Render,
}

fn config(common: &Common) -> Result<RunConfig> {
    let mut cfg = if common.configs.is_empty() {
        RunConfig::default()
    } else {
        RunConfig::load(&common.configs)?
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(&cli.common)?;
    let out = cfg.out_dir.clone();
    if let Command::Render = cli.command {
        for path in cmd::cmd_render(&out)? {
            println!("wrote {}", path.display());
        }
        return Ok(());
    }
    let exp = Experiment::new(cfg)?;
    match cli.command {
        Command::Plan => print!("{}", cmd::cmd_plan(&exp)?.text()),
        Command::Sweep => {
            let rows = cmd::cmd_sweep(&exp)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            println!(
                "wrote {} ({} rows, {failed} failed)",
                out.join("results.csv").display(),
                rows.len()
            );
        }
        Command::Noise => {
            let rows = cmd::cmd_noise(&exp)?;
            let inside = rows.iter().filter(|r| r.within_ci).count();
            println!(
                "wrote {} ({} rows, theory within CI in {inside})",
                out.join("noise.csv").display(),
                rows.len()
            );
        }
        Command::Calibrate => {
            let cal = cmd::cmd_calibrate(&exp)?;
            println!("c1 = {}\nc2 = {}", cal.c1, cal.c2);
            println!("wrote {}", out.join("calibration.toml").display());
        }
        Command::Render => unreachable!(),
    }
    if cli.common.svg && matches!(cli.command, Command::Sweep | Command::Noise) {
        for path in cmd::cmd_render(&out)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => {
                eprintln!("error: --threads: {e}");
                return ExitCode::from(1);
            }
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
