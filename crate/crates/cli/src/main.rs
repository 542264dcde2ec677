use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdeguard_core::lmi::DesignCertificate;
use pdeguard_core::scenario::{
    calibrate, parse_config, reproduce_fig3, run_design, run_detection, run_fig1, run_fig2, CaseStudyConfig,
    RunOutput, ScenarioKind,
};
use pdeguard_core::Error;

#[derive(Parser)]
#[command(name = "pdeguard", version, about = "Stealthy-attack synthesis and attack detection for the battery heat equation")]
struct Cli {
    /// Worker threads for independent runs (calibration, figure 3 traces).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// Case-study configuration (TOML). Defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Nominal distributed response under constant current (figure 1 data).
    Simulate(Io),
    /// Stealthy pulse attack and the two boundary outputs (figure 2 data).
    Stealth(Io),
    /// Scan the tuning lattice and write `certificate.toml`.
    Design(Io),
    /// Run one detection scenario (`fig3-*`) with a certificate.
    Detect(Io),
    /// Regenerate all data for one figure.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        figure: u8,
        #[command(flatten)]
        io: Io,
    },
}

fn load(io: &Io, fallback: ScenarioKind) -> Result<CaseStudyConfig, Error> {
    let mut config = match &io.config {
        Some(path) => parse_config(path)?,
        None => CaseStudyConfig::new(fallback, "out"),
    };
    if let Some(out) = &io.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn expect_kind(config: &CaseStudyConfig, allowed: &[ScenarioKind], verb: &str) -> Result<(), Error> {
    if allowed.contains(&config.scenario) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "`{verb}` cannot run scenario {}",
            config.scenario
        )))
    }
}

const DETECTION: [ScenarioKind; 3] = [
    ScenarioKind::Fig3Nominal,
    ScenarioKind::Fig3Uncertainty,
    ScenarioKind::Fig3Attack,
];

fn run(cli: Cli) -> Result<RunOutput, Error> {
    match cli.command {
        Command::Simulate(io) => {
            let config = load(&io, ScenarioKind::Fig1)?;
            expect_kind(&config, &[ScenarioKind::Fig1], "simulate")?;
            run_fig1(&config)
        }
        Command::Stealth(io) => {
            let config = load(&io, ScenarioKind::Fig2)?;
            expect_kind(&config, &[ScenarioKind::Fig2], "stealth")?;
            run_fig2(&config)
        }
        Command::Design(io) => {
            let config = load(&io, ScenarioKind::Fig3Attack)?;
            let (cert, summary, path) = run_design(&config)?;
            eprintln!(
                "feasible {}/{} candidates; c = {}, lambda = {}, margin = {:.6e}",
                summary.feasible, summary.candidates, cert.params.c, cert.params.lambda, cert.margin
            );
            Ok(RunOutput { files: vec![path] })
        }
        Command::Detect(io) => {
            let config = load(&io, ScenarioKind::Fig3Attack)?;
            expect_kind(&config, &DETECTION, "detect")?;
            let path = config.detector.certificate.as_ref().ok_or_else(|| {
                Error::Config(format!("scenario {} needs detector.certificate", config.scenario))
            })?;
            let cert = DesignCertificate::read(path)?;
            let calibration = calibrate(&config, &cert)?;
            run_detection(&config, config.scenario, &cert, &calibration)
        }
        Command::Reproduce { figure, io } => {
            let kind = match figure {
                1 => ScenarioKind::Fig1,
                2 => ScenarioKind::Fig2,
                _ => ScenarioKind::Fig3Attack,
            };
            let mut config = load(&io, kind)?;
            config.scenario = kind;
            match figure {
                1 => run_fig1(&config),
                2 => run_fig2(&config),
                _ => reproduce_fig3(&config),
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::GridTooCoarse(_)
        | Error::NotNeumannCompatible(_)
        | Error::IncompatibleTarget { .. } => 2,
        Error::Divergence { .. } => 3,
        Error::Infeasible { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(out) => {
            for f in out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
