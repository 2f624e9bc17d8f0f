use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fdam::beamforming::Beamformer;
use fdam::campaign::{run_campaign, run_papr, Campaign, CampaignError};
use fdam::config::{parse_snr_grid, validate_config, CampaignConfig, ConfigError};
use fdam::dsp::FarrowFilter;
use fdam::report::{
    filter_report, meta_path, write_filter_report_file, write_papr_file, write_results_file,
};
use fdam::tx::Scheme;

#[derive(Parser)]
#[command(
    name = "fdam",
    version,
    about = "Delay alignment modulation link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo SER / SINR / SE / PAPR campaign.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<Scheme>>,
        #[arg(long, value_delimiter = ',')]
        beamformers: Option<Vec<Beamformer>>,
        /// `start:stop:step` in dB, or a comma-separated list.
        #[arg(long)]
        snr: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        integer_delays: bool,
        #[arg(long)]
        noiseless: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Farrow response errors over offset and frequency.
    FilterReport {
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-antenna PAPR samples.
    Papr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the channel realization of one trial.
    Channel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

fn load(path: &PathBuf) -> Result<CampaignConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    CampaignConfig::parse(&text).map_err(|e| e.to_string())
}

fn checked(cfg: CampaignConfig) -> Result<CampaignConfig, String> {
    validate_config(&cfg).map_err(|e: ConfigError| e.to_string())?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), String> {
    let err = |e: CampaignError| e.to_string();
    match cli.command {
        Command::Simulate {
            config,
            schemes,
            beamformers,
            snr,
            trials,
            seed,
            integer_delays,
            noiseless,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(v) = schemes {
                cfg.schemes = v;
            }
            if let Some(v) = beamformers {
                cfg.beamformers = v;
            }
            if let Some(v) = snr {
                cfg.snr_db = parse_snr_grid(&v).map_err(|e| format!("--snr: {e}"))?;
            }
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            cfg.integer_delays |= integer_delays;
            cfg.noiseless |= noiseless;
            if let Some(v) = out {
                cfg.output = v;
            }
            let cfg = checked(cfg)?;
            let results = run_campaign(&cfg).map_err(err)?;
            write_results_file(&results, &cfg.output).map_err(|e| e.to_string())?;
            eprintln!(
                "wrote {} rows to {} (+ {})",
                results.records.len(),
                cfg.output.display(),
                meta_path(&cfg.output).display()
            );
        }
        Command::FilterReport { order, out } => {
            let filter = FarrowFilter::new(order).map_err(|e| e.to_string())?;
            let points = filter_report(&filter).map_err(|e| e.to_string())?;
            write_filter_report_file(&points, &out).map_err(|e| e.to_string())?;
        }
        Command::Papr {
            config,
            trials,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(v) = trials {
                cfg.trials = v;
            }
            let rows = run_papr(&checked(cfg)?).map_err(err)?;
            write_papr_file(&rows, &out).map_err(|e| e.to_string())?;
        }
        Command::Channel { config, trial } => {
            let campaign = Campaign::new(checked(load(&config)?)?).map_err(err)?;
            print!("{}", campaign.channel(trial).map_err(err)?.to_record());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
