//! `wedgetrace` command-line driver.
//!
//! Results go to `--out` only after every file of a command has been
//! computed; each file is written to a temporary sibling and renamed into
//! place. Progress and errors are NDJSON lines on stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use wedgetrace::acceptance::run_suite;
use wedgetrace::config::RunConfig;
use wedgetrace::contour::Strip;
use wedgetrace::error::Error;
use wedgetrace::pipeline::{
    fixture_outputs, frame_outputs, pairing_outputs, spectrum_outputs, symbol_outputs, varorder_outputs, Artifact,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "wedgetrace", version, about = "Boundary spectra, trace frames and variable-order norms for wedge operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named fixture; replaces any operator given in the config.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Number of y grid points.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Contour quadrature nodes.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Weight strip as `gamma,m`.
    #[arg(long, global = true, value_parser = parse_strip, allow_hyphen_values = true)]
    strip: Option<Strip>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, env = "WEDGETRACE_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boundary spectrum over the y grid (`spectrum.csv`).
    Spectrum,
    /// Continued trace frame and x d/dx eigenvalues (`frame.json`, `xdx_eigenvalues.csv`).
    Frame,
    /// Pairing matrices and transition smoothness (`pairing.csv`, `smoothness.json`).
    Pairing,
    /// Admissible decomposition, and the variable-order norm of sampled data.
    Varorder {
        /// CSV of grid samples: `y, re_0, im_0, ...` with `y = 2 pi j / N`.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Symbol estimates of `<eta>^{a(y)}` (`estimates.csv`).
    Symbol,
    /// Files describing the fixture named by `--fixture`.
    Fixture,
    /// Run an acceptance suite.
    Check {
        #[arg(long, default_value = "paper")]
        suite: String,
    },
}

fn parse_strip(s: &str) -> Result<Strip, String> {
    let (g, m) = s.split_once(',').ok_or_else(|| format!("expected gamma,m, got {s:?}"))?;
    let gamma: f64 = g.trim().parse().map_err(|e| format!("gamma: {e}"))?;
    let m: u32 = m.trim().parse().map_err(|e| format!("m: {e}"))?;
    Strip::new(gamma, m).map_err(|e| e.to_string())
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure { code: EXIT_VALIDATION, kind: "validation", message: e.to_string() }
        } else {
            Failure { code: EXIT_NUMERIC, kind: "numerical", message: e.to_string() }
        }
    }
}

fn invalid(message: String) -> Failure {
    Failure { code: EXIT_VALIDATION, kind: "validation", message }
}

fn log(event: Value) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{event}");
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| invalid(format!("reading {}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = &common.fixture {
        cfg.fixture = Some(f.clone());
        cfg.operator = None;
    }
    if let Some(g) = common.grid {
        cfg.grid = g;
    }
    if let Some(n) = common.nodes {
        cfg.nodes = n;
    }
    if let Some(s) = common.strip {
        cfg.strip = Some(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_atomic(dir: &Path, files: &[Artifact]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for a in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(a.contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(&a.name)));
    }
    for (tmp, dest) in staged {
        tmp.persist(dest).map_err(|e| e.error)?;
    }
    Ok(())
}

fn compute(cli: &Cli, cfg: &RunConfig) -> Result<Vec<Artifact>, Failure> {
    Ok(match &cli.command {
        Command::Spectrum => spectrum_outputs(cfg)?,
        Command::Frame => frame_outputs(cfg)?,
        Command::Pairing => pairing_outputs(cfg)?,
        Command::Varorder { samples } => {
            let text = match samples {
                Some(p) => Some(fs::read_to_string(p).map_err(|e| invalid(format!("reading {}: {e}", p.display())))?),
                None => None,
            };
            varorder_outputs(cfg, text.as_deref())?
        }
        Command::Symbol => symbol_outputs(cfg)?,
        Command::Fixture => {
            let name = cfg.fixture.as_deref().ok_or_else(|| invalid("fixture needs --fixture NAME".into()))?;
            fixture_outputs(name, cfg)?
        }
        Command::Check { .. } => unreachable!("handled by check"),
    })
}

fn check(suite: &str) -> Result<(), Failure> {
    if suite != "paper" {
        return Err(invalid(format!("unknown suite {suite:?}; available: paper")));
    }
    let results = run_suite();
    let mut out = std::io::stdout().lock();
    for r in &results {
        let _ = writeln!(out, "{r}");
        log(json!({ "event": "criterion", "id": r.id, "name": r.name, "pass": r.pass, "wall_s": r.seconds, "detail": r.detail }));
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_ACCEPTANCE, kind: "acceptance", message: format!("criteria failed: {failed:?}") })
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads)
        .build()
        .map_err(|e| Failure { code: EXIT_NUMERIC, kind: "numerical", message: format!("thread pool: {e}") })?;
    if let Command::Check { suite } = &cli.command {
        return pool.install(|| check(suite));
    }
    let cfg = load_config(&cli.common)?;
    let stage = format!("{:?}", cli.command).split_whitespace().next().unwrap_or("").to_lowercase();
    let t0 = Instant::now();
    let files = pool.install(|| compute(cli, &cfg))?;
    log(json!({
        "event": "computed",
        "stage": stage,
        "wall_s": t0.elapsed().as_secs_f64(),
        "threads": pool.current_num_threads(),
        "files": files.iter().map(|a| json!({ "name": a.name, "bytes": a.contents.len() })).collect::<Vec<_>>(),
    }));
    write_atomic(&cli.common.out, &files)
        .map_err(|e| Failure { code: EXIT_NUMERIC, kind: "io", message: format!("writing {}: {e}", cli.common.out.display()) })?;
    log(json!({ "event": "written", "stage": stage, "out": cli.common.out.display().to_string() }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            log(json!({ "event": "error", "kind": "validation", "message": e.to_string().trim_end() }));
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log(json!({ "event": "error", "kind": f.kind, "exit_code": f.code, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
