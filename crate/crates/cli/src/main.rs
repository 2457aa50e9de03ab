use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use risline::experiments::{
    run_experiment, verify_manifest, write_run, ExperimentConfig, ExperimentKind, Manifest, RunOptions,
    MANIFEST_FILE, RESULTS_FILE,
};

#[derive(Parser, Debug)]
#[command(name = "risline", version, about = "Line-controlled RIS phase design experiments")]
struct Cli {
    /// Experiment config (TOML). Built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for results.csv and manifest.txt.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Allow exhaustive line optima up to 26 line variables (slow).
    #[arg(long, global = true)]
    extended: bool,
    /// Record wall-clock time per row. Timed runs do not replay byte-identically.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exhaustive line optimum vs. two-step vs. penalty quadratization.
    Quadcmp,
    /// Received power against the number of RIS elements.
    Scaling,
    /// Received power along the UT ray for designs frozen at the design distance.
    Distance,
    /// Replay a run from its manifest and compare the CSV.
    VerifyManifest {
        /// manifest.txt, or the directory holding it.
        manifest: PathBuf,
        /// Results file to compare against; defaults to results.csv next to the manifest.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let kind = match &cli.command {
        Command::Quadcmp => ExperimentKind::Quadcmp,
        Command::Scaling => ExperimentKind::Scaling,
        Command::Distance => ExperimentKind::Distance,
        Command::VerifyManifest { manifest, csv } => return verify(manifest, csv.as_deref()),
    };

    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default_for(kind, cli.extended),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
    if cli.extended && kind == ExperimentKind::Quadcmp {
        eprintln!("warning: extended mode enumerates up to 2^25 line states per instance; expect hours at the top sizes");
    }

    let opts = RunOptions { extended: cli.extended, timing: cli.timing };
    let output = run_experiment(kind, &cfg, opts)?;
    let files = write_run(&out_dir, kind, &cfg, opts, &output)?;

    println!("{:<20} {:>4} {:>4} {:>6} {:>9} {:>14}", "method", "N_v", "N_h", "seed", "dist_m", "power_dBm");
    for r in &output.rows {
        println!(
            "{:<20} {:>4} {:>4} {:>6} {:>9.2} {:>14.4}",
            r.method, r.n_v, r.n_h, r.seed, r.distance_m, r.received_power_dbm
        );
    }
    println!("wrote {} and {}", files.results.display(), files.manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(path: &Path, csv: Option<&Path>) -> Result<ExitCode> {
    let (manifest_path, dir) = if path.is_dir() {
        (path.join(MANIFEST_FILE), path.to_path_buf())
    } else {
        (path.to_path_buf(), path.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    let manifest = Manifest::load(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let default_csv = dir.join(RESULTS_FILE);
    let csv = csv.map(Path::to_path_buf).or_else(|| default_csv.exists().then_some(default_csv));
    if manifest.timing {
        eprintln!("warning: manifest records a timed run; wall_time_s will differ on replay");
    }

    let v = verify_manifest(&manifest, csv.as_deref())?;
    if !v.version_matches {
        eprintln!("warning: manifest written by version {}, replaying with {}", manifest.version, env!("CARGO_PKG_VERSION"));
    }
    if !v.config_hash_ok {
        println!("config hash: MISMATCH (embedded config does not match config_sha256)");
        return Ok(ExitCode::FAILURE);
    }
    println!("config hash: ok");
    println!("results hash: {}", if v.results_hash_ok { "ok" } else { "MISMATCH" });
    match (v.csv_identical, &csv) {
        (Some(same), Some(p)) => println!("{}: {}", p.display(), if same { "identical" } else { "DIFFERS" }),
        _ => println!("no results file to compare"),
    }
    if v.rows.len() != manifest.rows {
        bail!("replay produced {} rows, manifest records {}", v.rows.len(), manifest.rows);
    }
    Ok(if v.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
