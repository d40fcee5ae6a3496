use std::path::PathBuf;
use std::process::ExitCode;

use aclgait::GaitKind;
use aclgait_cli::config::{self, apply_overrides};
use aclgait_cli::{cmd_compare, cmd_generate, cmd_simulate, CliError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::{Table, Value};

/// Pole-climbing gait generation and kinematic motion estimation for modular
/// snake robots.
#[derive(Parser)]
#[command(name = "aclgait", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the joint angle trajectory for one gait.
    Generate(RunArgs),
    /// Run the full pipeline and estimate the displacement.
    Simulate(RunArgs),
    /// Rolling helix against ACL over one or more trials.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GaitArg {
    Acl,
    Rolling,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replace one config key; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Keyframes per cycle.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    gait: Option<GaitArg>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma separated overrides for one trial, e.g. `amp_long=0.03,freq_shape=1.2`;
    /// repeatable. Without any, the base config is the single trial.
    #[arg(long = "trial", value_name = "OVERRIDES")]
    trials: Vec<String>,
}

fn base_table(c: &Common, gait: Option<GaitArg>) -> Result<Table, CliError> {
    let mut table = match &c.config {
        Some(path) => config::load_table(path)?,
        None => Table::new(),
    };
    apply_overrides(&mut table, &c.overrides)?;
    if let Some(g) = gait {
        let kind = match g {
            GaitArg::Acl => GaitKind::Acl,
            GaitArg::Rolling => GaitKind::Rolling,
        };
        table.insert("gait".into(), Value::String(kind.as_str().into()));
    }
    if let Some(n) = c.steps {
        table.insert("n_steps".into(), Value::Integer(n as i64));
    }
    if let Some(n) = c.cycles {
        table.insert("cycles".into(), Value::Integer(n as i64));
    }
    Ok(table)
}

fn split_trial(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => {
            let spec = config::resolve(base_table(&a.common, a.gait)?)?;
            let m = cmd_generate(&spec, &a.common.out)?;
            println!(
                "wrote {} files to {} ({})",
                m.files.len() + 1,
                a.common.out.display(),
                m.content_hash
            );
        }
        Command::Simulate(a) => {
            let spec = config::resolve(base_table(&a.common, a.gait)?)?;
            let (m, report) = cmd_simulate(&spec, &a.common.out)?;
            println!(
                "{} gait, {} cycles: sum dx {:.4} m, roll term {:.4} m/cycle, total {:.4} m",
                spec.gait.as_str(),
                spec.cycles,
                report.sum_dx,
                report.roll_term,
                report.total
            );
            println!(
                "wrote {} files to {} ({})",
                m.files.len() + 1,
                a.common.out.display(),
                m.content_hash
            );
        }
        Command::Compare(a) => {
            let base = base_table(&a.common, None)?;
            let trials: Vec<Vec<String>> = if a.trials.is_empty() {
                vec![Vec::new()]
            } else {
                a.trials.iter().map(|t| split_trial(t)).collect()
            };
            let (_, cmp) = cmd_compare(&base, &trials, &a.common.out)?;
            print!("{}", cmp.to_markdown());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
