use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tetherplan_cli::{load_scenario, run, CliError, RunOptions};
use tetherplan_core::planner::RewardMode;

#[derive(Parser)]
#[command(name = "tetherplan", version, about = "Risk-aware viewpoint planning for a tethered aerial visual assistant")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario and write its artifacts.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Accepted for reproducible invocations; planning is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Isovist rays per visibility query.
        #[arg(long)]
        rays: Option<usize>,
        /// Ignore the scenario's inflation radius.
        #[arg(long)]
        no_inflate: bool,
        #[arg(long, value_enum)]
        reward_mode: Option<Mode>,
        /// Record the wall-clock time in the plan document.
        #[arg(long)]
        timestamps: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Terminal,
    Integrated,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run { scenario, out, seed, rays, no_inflate, reward_mode, timestamps } = Cli::parse().command;
    let opts = RunOptions {
        out_dir: out,
        seed,
        rays,
        no_inflate,
        reward_mode: reward_mode.map(|m| match m {
            Mode::Terminal => RewardMode::Terminal,
            Mode::Integrated => RewardMode::Integrated,
        }),
        timestamps,
    };
    match load_scenario(&scenario).and_then(|s| {
        log::info!("resolved scenario:\n{}", s.echo());
        run(&s, &opts)
    }) {
        Ok(out) => {
            let p = &out.plan;
            let g = p.goal();
            println!(
                "goal ({}, {}, {}) risk {:.6} utility {:.6} contacts {} -> {}",
                g.x,
                g.y,
                g.z,
                p.exact_risk,
                p.utility,
                p.final_tether().contact_count(),
                opts.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.category().exit_code() as u8)
}
