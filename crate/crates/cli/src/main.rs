use chaincert_cli::{commands, config, CliError, RunOptions};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "chaincert", about = "Chaining concentration experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and tables
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (reserved; execution is single-threaded)
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Build an admissible net and export it as JSON
    Net(Common),
    /// All-pairs modulus tables and deterministic checks
    Modulus(Common),
    /// Pathwise certificates P1-P4 plus the E Z <= 1 check
    PropVerify(Common),
    /// Square-process bound and Bernstein pair tails
    Empirical(Common),
    /// Restricted isometry constants, order statistics, tail dominance
    Sensing {
        #[command(flatten)]
        common: Common,
        /// Measurement rows N
        #[arg(long)]
        n_rows: Option<usize>,
        /// Signal dimension M
        #[arg(long)]
        m_cols: Option<usize>,
        /// Sparsity m
        #[arg(long)]
        sparsity: Option<usize>,
        /// gaussian | rademacher
        #[arg(long)]
        ensemble: Option<String>,
        /// Monte Carlo trials
        #[arg(long)]
        trials: Option<usize>,
        /// Matrices to sample
        #[arg(long)]
        matrices: Option<usize>,
        /// Calibration file path
        #[arg(long)]
        calibration_file: Option<String>,
        /// delta | tail | order_stat
        #[arg(long)]
        mode: Option<String>,
    },
    /// Regenerate calibration.json
    Calibrate(Common),
}

fn options(c: &Common) -> RunOptions {
    RunOptions {
        config_path: c.config.clone(),
        seed: c.seed,
        out_dir: c.out_dir.clone(),
        threads: c.threads.max(1),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Net(c) => commands::cmd_net(&options(&c)),
        Command::Modulus(c) => commands::cmd_modulus(&options(&c)),
        Command::PropVerify(c) => commands::cmd_prop_verify(&options(&c)),
        Command::Empirical(c) => commands::cmd_empirical(&options(&c)),
        Command::Sensing {
            common,
            n_rows,
            m_cols,
            sparsity,
            ensemble,
            trials,
            matrices,
            calibration_file,
            mode,
        } => {
            let opts = options(&common);
            let (mut cfg, bytes): (config::SensingConfig, Vec<u8>) = match &opts.config_path {
                Some(p) => config::load(p)?,
                None => {
                    let (n, m, s) = match (n_rows, m_cols, sparsity) {
                        (Some(n), Some(m), Some(s)) => (n, m, s),
                        _ => {
                            return Err(CliError::Config(
                                "sensing needs --config or --n-rows/--m-cols/--sparsity".into(),
                            ))
                        }
                    };
                    let cfg = config::SensingConfig {
                        n,
                        m_cols: m,
                        m: s,
                        ensemble: chaincert_core::sensing::Ensemble::Gaussian,
                        matrices: 100,
                        trials: 10_000,
                        seed: 0,
                        calibration_file: None,
                        mode: "delta".into(),
                        export_matrices: false,
                    };
                    let bytes = serde_json::to_vec(&cfg).unwrap();
                    (cfg, bytes)
                }
            };
            if let Some(n) = n_rows {
                cfg.n = n;
            }
            if let Some(m) = m_cols {
                cfg.m_cols = m;
            }
            if let Some(s) = sparsity {
                cfg.m = s;
            }
            if let Some(e) = ensemble {
                cfg.ensemble = match e.as_str() {
                    "gaussian" => chaincert_core::sensing::Ensemble::Gaussian,
                    "rademacher" => chaincert_core::sensing::Ensemble::Rademacher,
                    other => {
                        return Err(CliError::Config(format!("unknown ensemble {other:?}")))
                    }
                };
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(mm) = matrices {
                cfg.matrices = mm;
            }
            if let Some(f) = calibration_file {
                cfg.calibration_file = Some(f);
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(seed) = opts.seed {
                cfg.seed = seed;
            }
            commands::cmd_sensing(&opts, cfg, bytes)
        }
        Command::Calibrate(c) => commands::cmd_calibrate(&options(&c)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chaincert: {e}");
            e.exit_code()
        }
    }
}
