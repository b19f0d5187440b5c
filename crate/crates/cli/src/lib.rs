//! Command-line front end: configs in, JSON/CSV/SVG reports out.
//!
//! Exit codes: `0` every check passed, `1` a check failed or the numerics
//! broke down, `2` the input was rejected.

pub mod cache;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hodgelab_core::Execution;

use crate::cache::{PeriodCache, CACHE_DIR_ENV};
use crate::config::{ExperimentConfig, Kind, LoadedConfig, NoetherPayload, QuarticFile};
use crate::error::{CliError, CliResult};
use crate::report::{emit_report, RunOutput, RunReport, Verdict};
use crate::runner::RunContext;

#[derive(Debug, Parser)]
#[command(name = "hodgelab", version, about = "Curvature experiments for direct-image bundles")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Worker threads for the parallel executor.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default `reports/<config stem>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plots: bool,
    /// Record the wall-clock time in the provenance block.
    #[arg(long, global = true)]
    pub timestamp: bool,
    /// Period cache directory.
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact multiplication-map certificates.
    Noether {
        #[arg(long)]
        genus: usize,
        /// TOML file with `[[term]]` entries describing a plane quartic.
        #[arg(long)]
        quartic: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Period matrices and Riemann relations for a curve corpus.
    Periods { config: PathBuf },
    /// Curvature against Kodaira-Spencer norms on hyperelliptic families.
    Thm11 { config: PathBuf },
    /// Seeded positivity sweep over random families.
    Sweep { config: PathBuf },
    /// Curvature identity on the twisted torus testbed.
    Thm12 { config: PathBuf },
    /// Upper bound on the twisted torus testbed.
    Bound15 { config: PathBuf },
    /// Print a summary of an existing report.
    Report {
        #[arg(long)]
        inspect: PathBuf,
    },
}

impl Command {
    fn config_kind(&self) -> Option<(Kind, &Path)> {
        match self {
            Command::Periods { config } => Some((Kind::Periods, config)),
            Command::Thm11 { config } => Some((Kind::Thm11, config)),
            Command::Sweep { config } => Some((Kind::Sweep, config)),
            Command::Thm12 { config } => Some((Kind::Thm12, config)),
            Command::Bound15 { config } => Some((Kind::Bound15, config)),
            Command::Noether { .. } | Command::Report { .. } => None,
        }
    }
}

fn context(g: &GlobalArgs, plots: bool) -> RunContext {
    RunContext {
        exec: if g.sequential { Execution::Sequential } else { Execution::Parallel },
        cache: g.cache_dir.clone().map(PeriodCache::new),
        timestamp: g.timestamp,
        plots,
    }
}

#[cfg(feature = "parallel")]
fn install_threads(n: Option<usize>) -> CliResult<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn install_threads(n: Option<usize>) -> CliResult<()> {
    if n.is_some() {
        log::warn!("--threads ignored: built without the parallel feature");
    }
    Ok(())
}

fn finish(out: &RunOutput, dir: &Path, plots: bool) -> CliResult<u8> {
    let written = emit_report(out, dir, plots)?;
    let r = &out.report;
    println!("{}: {}", r.kind, verdict_word(r.verdict));
    if let Some(m) = &r.message {
        println!("  {m}");
    }
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(r.verdict.exit_code())
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Error => "ERROR",
    }
}

fn inspect(path: &Path) -> CliResult<u8> {
    let r = RunReport::from_json(path)?;
    println!("kind: {}", r.kind);
    println!("verdict: {}", verdict_word(r.verdict));
    if let Some(m) = &r.message {
        println!("message: {m}");
    }
    println!("config sha256: {}", r.provenance.config_hash);
    println!("tool version: {}", r.provenance.tool_version);
    for (k, v) in &r.tolerances {
        println!("tol {k} = {v}");
    }
    for (k, v) in &r.metrics {
        println!("{k} = {v}");
    }
    Ok(0)
}

fn run_loaded(loaded: &LoadedConfig, dir: &Path, g: &GlobalArgs) -> u8 {
    let cfg: &ExperimentConfig = &loaded.config;
    let plots = g.plots || cfg.output.plots;
    let ctx = context(g, plots);
    let result = runner::run_config(cfg, &loaded.hash, &ctx).and_then(|out| finish(&out, dir, plots));
    handle(result, cfg.kind, &loaded.hash, cfg.seed, dir, &ctx)
}

fn handle(result: CliResult<u8>, kind: Kind, hash: &str, seed: Option<u64>, dir: &Path, ctx: &RunContext) -> u8 {
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            if code == 1 {
                let out = RunOutput {
                    report: runner::error_report(kind, &e, hash, seed, ctx),
                    rows: None,
                    plots: Vec::new(),
                    extras: Vec::new(),
                };
                if let Err(w) = emit_report(&out, dir, false) {
                    eprintln!("error: {w}");
                }
            }
            code
        }
    }
}

fn default_dir(stem: &str) -> PathBuf {
    Path::new("reports").join(stem)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let g = &cli.global;
    if let Err(e) = install_threads(g.threads) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match &cli.command {
        Command::Report { inspect: path } => match inspect(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Noether { genus, quartic, trials, seed } => {
            let quartic = match quartic.as_deref().map(load_quartic).transpose() {
                Ok(q) => q,
                Err(e) => {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            };
            let payload = NoetherPayload { genus: *genus, trials: *trials, u: Vec::new(), quartic };
            let text = format!("noether genus={genus} trials={trials} seed={seed}");
            let hash = config::sha256_hex(text.as_bytes());
            let dir = g.out.clone().unwrap_or_else(|| default_dir(&format!("noether-g{genus}")));
            let ctx = context(g, g.plots);
            let result = runner::run_noether(&payload, Some(*seed), &hash, &ctx).and_then(|out| finish(&out, &dir, g.plots));
            handle(result, Kind::Noether, &hash, Some(*seed), &dir, &ctx)
        }
        cmd => {
            let (kind, path) = cmd.config_kind().expect("config subcommand");
            let loaded = match config::load(path) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            };
            if loaded.config.kind != kind {
                let e = CliError::Config(format!(
                    "config kind '{}' does not match subcommand '{}'",
                    loaded.config.kind.name(),
                    kind.name()
                ));
                eprintln!("error: {e}");
                return e.exit_code();
            }
            let dir = g
                .out
                .clone()
                .or_else(|| loaded.config.output.dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| default_dir(&stem(path)));
            run_loaded(&loaded, &dir, g)
        }
    }
}

fn load_quartic(path: &Path) -> CliResult<QuarticFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
