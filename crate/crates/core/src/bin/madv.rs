//! Batch CLI: run seeded experiments from flat key=value configs, or audit
//! a pipeline transcript. All outputs are deterministic functions of
//! (config, seed), independent of worker count.

use clap::{Parser, Subcommand};
use monotone_adversary::config::{parse_config, svg_error_vs_n, ResolvedConfig, RunManifest};
use monotone_adversary::error::Error;
use monotone_adversary::transcript;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "madv",
    about = "Monte Carlo experiments for learning under monotone adversarial corruption"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key=value config file.
    Run {
        config: PathBuf,
        /// Output directory (default: $MADV_OUT, else the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the trial pool (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also emit an SVG chart of mean error vs n (n-sweeps only).
        #[arg(long)]
        svg: bool,
    },
    /// Re-verify the pipeline contract on a serialized transcript.
    Audit { transcript: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            workers,
            svg,
        } => run(&config, out, workers, svg),
        Command::Audit { transcript } => audit(&transcript),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            // single machine-readable line on stderr
            eprintln!("error code={} message={:?}", e.code(), e.to_string());
            ExitCode::from(1)
        }
    }
}

fn run(
    config_path: &Path,
    out: Option<PathBuf>,
    workers: Option<usize>,
    svg: bool,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config_path)?;
    // validate everything before any output file is created
    let cfg: ResolvedConfig = parse_config(&text)?;
    if let Some(w) = workers {
        // worker count only affects wall-clock time, never output bytes
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::InvalidParameters(format!("worker pool: {e}")))?;
    }
    let out_dir = out
        .or_else(|| std::env::var_os("MADV_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let exp = cfg.experiment.name();
    let mut outputs: Vec<String> = cfg
        .ns
        .iter()
        .map(|n| format!("{exp}_n{n}.csv"))
        .collect();
    if svg && cfg.ns.len() > 1 {
        outputs.push(format!("{exp}.svg"));
    }
    let manifest = RunManifest {
        config_path: &config_path.display().to_string(),
        config: &cfg,
        out_dir: &out_dir.display().to_string(),
        outputs,
    };
    std::fs::write(out_dir.join(format!("{exp}.manifest")), manifest.to_text())?;
    let mut all_pass = true;
    let mut curve = Vec::new();
    for &n in &cfg.ns {
        let report = cfg.run_at(n)?;
        std::fs::write(out_dir.join(format!("{exp}_n{n}.csv")), report.to_csv())?;
        let pass = cfg.thresholds_pass(&report);
        all_pass &= pass;
        let est = report.estimate;
        println!(
            "experiment={exp} n={n} trials={} mean={} se={} pass={pass}",
            est.trials, est.mean, est.std_error
        );
        curve.push((n, est.mean, est.ci99_low, est.ci99_high));
    }
    if svg && curve.len() > 1 {
        std::fs::write(
            out_dir.join(format!("{exp}.svg")),
            svg_error_vs_n(exp, &curve),
        )?;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn audit(path: &Path) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(path)?;
    let file = transcript::parse(&text)?;
    let violations = transcript::audit(&file);
    if violations.is_empty() {
        println!("audit ok n={} m={} adversary={}", file.n, file.m, file.adversary_id);
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            println!("violation {v}");
        }
        Ok(ExitCode::from(1))
    }
}
