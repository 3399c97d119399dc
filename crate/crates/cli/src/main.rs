use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use auvctl::commands::{cmd_compare, cmd_run, cmd_sweep, ScenarioSource};
use auvctl_core::{ControllerKind, Scenario};

/// Trajectory-tracking simulator for a 4-DOF underwater vehicle.
#[derive(Parser)]
#[command(name = "auvctl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// Mirrors the controller names used in config files.
#[derive(Clone, Copy, Debug, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum ControllerArg {
    BsIsmc,
    BsIsmcTde,
    BsIsmcTdeAdaptive,
}

impl From<ControllerArg> for ControllerKind {
    fn from(arg: ControllerArg) -> Self {
        match arg {
            ControllerArg::BsIsmc => ControllerKind::BsIsmc,
            ControllerArg::BsIsmcTde => ControllerKind::BsIsmcTde,
            ControllerArg::BsIsmcTdeAdaptive => ControllerKind::BsIsmcTdeAdaptive,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a config file, or the built-ins `case1`/`case2`)
    /// and write its log and metrics.
    Run {
        /// Config file path, `case1`, or `case2`.
        source: String,
        /// Override the controller selection.
        #[arg(long)]
        controller: Option<ControllerArg>,
        /// Enable the adaptive surrogate-inertia update.
        #[arg(long)]
        adaptive: bool,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run two scenarios on identical grids and disturbances and report
    /// per-metric deltas.
    Compare {
        a: String,
        b: String,
        /// Override the controller of scenario A.
        #[arg(long)]
        controller_a: Option<ControllerArg>,
        /// Override the controller of scenario B.
        #[arg(long)]
        controller_b: Option<ControllerArg>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the base scenario once per value of one parameter and tabulate
    /// the metrics. `AUVCTL_THREADS` caps the worker count.
    Sweep {
        source: String,
        /// Dotted parameter path, e.g. `gains.k3`, `tde.n`, `tde.mbar0.2`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn override_controller(scenario: &mut Scenario, kind: Option<ControllerArg>, adaptive: bool) {
    if let Some(kind) = kind {
        scenario.controller = kind.into();
    }
    if adaptive {
        scenario.controller = ControllerKind::BsIsmcTdeAdaptive;
    }
    scenario.tde.adaptive = scenario.controller == ControllerKind::BsIsmcTdeAdaptive;
}

fn parse_values(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow::anyhow!("invalid sweep value '{s}'"))
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            source,
            controller,
            adaptive,
            out,
        } => {
            let (name, mut scenario) = ScenarioSource::parse(&source).load()?;
            override_controller(&mut scenario, controller, adaptive);
            let report = cmd_run(&name, &scenario, &out)?;
            Ok(report.stable)
        }
        Command::Compare {
            a,
            b,
            controller_a,
            controller_b,
            out,
        } => {
            let (name_a, mut scenario_a) = ScenarioSource::parse(&a).load()?;
            let (name_b, mut scenario_b) = ScenarioSource::parse(&b).load()?;
            override_controller(&mut scenario_a, controller_a, false);
            override_controller(&mut scenario_b, controller_b, false);
            let report = cmd_compare(&name_a, &scenario_a, &name_b, &scenario_b, &out)?;
            Ok(report.stable)
        }
        Command::Sweep {
            source,
            param,
            values,
            out,
        } => {
            let (name, scenario) = ScenarioSource::parse(&source).load()?;
            let values = parse_values(&values)?;
            let report = cmd_sweep(&name, &scenario, &param, &values, &out)?;
            Ok(report.stable)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        // Completed but at least one run diverged.
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
