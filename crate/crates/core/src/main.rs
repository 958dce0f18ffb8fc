use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use heatbayes::experiments::{
    write_coverage, write_cross_section, write_eigenvalues, write_posterior, ExperimentConfig, ExperimentError, Study,
    Table1Writer,
};
use heatbayes::fem::EigenBasis;
use heatbayes::mesh::generate_mesh;

#[derive(Parser, Debug)]
#[command(
    name = "heatbayes",
    version,
    about = "Bayesian recovery of initial heat states from noisy point data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Config file with `key = value` lines; built-in study settings when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Replace the seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the inference mesh and write mesh.txt.
    Mesh(Common),
    /// Compute the Dirichlet-Laplacian eigenvalues and write eigenvalues.csv.
    Eigen(Common),
    /// Posterior-mean error for every sample size and seed; writes table1.csv.
    Table1(Common),
    /// Frequentist coverage of the credible interval; writes coverage.csv.
    Coverage {
        #[command(flatten)]
        common: Common,
        /// Number of noise replicates (overrides `replicates`).
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Truth, posterior mean and draws along the principal axes; writes cross_section.csv.
    CrossSection {
        #[command(flatten)]
        common: Common,
        /// Number of posterior draws (overrides `samples`).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Export the posterior mean and covariance; writes posterior.json.
    Posterior(Common),
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), ExperimentError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| ExperimentError::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok((config, dir))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Mesh(common) => {
            let (config, dir) = load(&common)?;
            let mesh = generate_mesh(&config.domain, config.mesh_h)?;
            let path = dir.join("mesh.txt");
            std::fs::write(&path, mesh.to_text()).map_err(|e| ExperimentError::Io {
                path: path.clone(),
                source: e,
            })?;
            announce(&path);
        }
        Command::Eigen(common) => {
            let (config, dir) = load(&common)?;
            let mesh = Arc::new(generate_mesh(&config.domain, config.mesh_h)?);
            let basis = EigenBasis::dirichlet_laplacian(&mesh, config.max_truncation())?;
            let path = dir.join("eigenvalues.csv");
            write_eigenvalues(&path, &config, basis.eigenvalues())?;
            announce(&path);
        }
        Command::Table1(common) => {
            let (config, dir) = load(&common)?;
            let study = Study::new(&config)?;
            let path = dir.join("table1.csv");
            let mut writer = Table1Writer::create(&path, &config)?;
            study.run_table1_with(|row| writer.row(row))?;
            announce(&path);
        }
        Command::Coverage { common, replicates } => {
            let (config, dir) = load(&common)?;
            let replicates = replicates.unwrap_or(config.replicates);
            if replicates < 50 {
                return Err(ExperimentError::InvalidArgument(format!(
                    "coverage needs at least 50 replicates, got {replicates}"
                )));
            }
            let study = Study::new(&config)?;
            let report = study.run_coverage(replicates)?;
            let path = dir.join("coverage.csv");
            write_coverage(&path, &config, &report)?;
            announce(&path);
        }
        Command::CrossSection { common, samples } => {
            let (config, dir) = load(&common)?;
            let m = samples.unwrap_or(config.samples);
            if m == 0 {
                return Err(ExperimentError::InvalidArgument(
                    "at least one sample is required".into(),
                ));
            }
            let study = Study::new(&config)?;
            let cs = study.run_cross_section(m)?;
            let path = dir.join("cross_section.csv");
            write_cross_section(&path, &config, &cs)?;
            announce(&path);
        }
        Command::Posterior(common) => {
            let (config, dir) = load(&common)?;
            let study = Study::new(&config)?;
            let record = study.posterior_record(config.study_n(), config.seeds[0])?;
            let path = dir.join("posterior.json");
            write_posterior(&path, &record)?;
            announce(&path);
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("HEATBAYES_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("HEATBAYES_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
