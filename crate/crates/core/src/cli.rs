//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 parse error, 3 validation
//! error, 4 blow-up, 5 invariant violation.
//!
//! A sweep manifest is TOML:
//!
//! ```toml
//! kind = "runs"                  # runs | theta_continuation | n_refinement | mms
//! name = "my-experiment"         # directory under the output root
//! output_dir = "results"         # optional, else $CHDM_OUTPUT_ROOT, else "runs"
//! base = "base.toml"             # base run config (relative to the manifest), optional
//! runs = ["a.toml", "b.toml"]    # kind = "runs"
//! thetas = [0.25, 0.0625]        # kind = "theta_continuation"
//! n_list = [16, 32, 64]          # kind = "n_refinement"
//! case = "decaying"              # kind = "mms": stationary | decaying | zero_crossing
//! dt_list = [0.1, 0.05]          # kind = "mms"; scheme, grid, model and t_end come from base
//! ```

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::config::{load_config, toml_error, RunConfig, OUTPUT_ROOT_ENV};
use crate::error::{Error, Result};
use crate::experiments::{self, MmsCase};
use crate::snapshot;
use crate::spectral::PhysicalField;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "chdm", version, about = "Convective Cahn-Hilliard solver with degenerate mobility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration and write its output directory.
    Run { config: PathBuf },
    /// Run every member of an experiment manifest.
    Sweep {
        manifest: PathBuf,
        /// Maximum number of concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a configuration and check mass, energy and the energy inequality.
    Verify {
        config: PathBuf,
        /// Treat energy and inequality violations as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Convert a run's snapshots into plot-ready text.
    Export {
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
        format: ExportFormat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Txt,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Validation { .. }
        | Error::InvalidParameter { .. }
        | Error::InvalidDomain(_)
        | Error::ShapeMismatch(_)
        | Error::SymmetryViolation { .. }
        | Error::PsiDomain { .. }
        | Error::CostGuard { .. } => EXIT_VALIDATION,
        Error::BlowUp { .. } | Error::Overflow { .. } | Error::NonFinite { .. } => EXIT_BLOWUP,
        Error::InvariantViolation { .. } => EXIT_INVARIANT,
        Error::Io { .. } | Error::Snapshot { .. } => EXIT_IO,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Sweep { manifest, jobs } => cmd_sweep(&manifest, jobs),
        Command::Verify { config, strict } => cmd_verify(&config, strict),
        Command::Export { run_dir, format } => cmd_export(&run_dir, format),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn report_failure(out: &experiments::RunOutput) -> i32 {
    match &out.error {
        None => EXIT_OK,
        Some(e) => {
            eprintln!("run {} failed: {e}", out.config.run_id);
            exit_code(e)
        }
    }
}

pub fn cmd_run(path: &Path) -> Result<i32> {
    let config = load_config(path)?;
    let out = experiments::execute_and_persist(&config)?;
    println!(
        "{}: {} records, {} steps, t = {}",
        config.run_dir().display(),
        out.records.len(),
        out.stats.accepted,
        out.records.last().map_or(0.0, |r| r.t)
    );
    for v in &out.violations {
        eprintln!("warning: {v}");
    }
    Ok(report_failure(&out))
}

pub fn cmd_verify(path: &Path, strict: bool) -> Result<i32> {
    let mut config = load_config(path)?;
    let strict = strict || config.diagnostics.strict;
    // collect every violation, decide afterwards
    config.diagnostics.strict = false;
    let out = experiments::execute(&config)?;
    if out.error.is_some() {
        return Ok(report_failure(&out));
    }
    let report = experiments::verify(&out);
    print!("{}", report.render());
    if !report.mass_ok {
        return Ok(EXIT_INVARIANT);
    }
    if strict && !report.is_clean() {
        return Ok(EXIT_INVARIANT);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
enum ManifestKind {
    Runs { runs: Vec<PathBuf> },
    ThetaContinuation { thetas: Vec<f64> },
    NRefinement { n_list: Vec<usize> },
    Mms { case: MmsCase, dt_list: Vec<f64> },
}

#[derive(Debug, Deserialize)]
struct Manifest {
    name: String,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    base: Option<PathBuf>,
    #[serde(flatten)]
    kind: ManifestKind,
}

fn experiment_root(manifest: &Manifest) -> PathBuf {
    let root = manifest.output_dir.clone().unwrap_or_else(|| {
        std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
    });
    root.join(&manifest.name)
}

pub fn cmd_sweep(path: &Path, jobs: usize) -> Result<i32> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| toml_error(&text, e))?;
    if manifest.name.is_empty() || manifest.name.contains(['/', '\\']) {
        return Err(Error::validation("name", "must be a plain directory name"));
    }
    if jobs == 0 {
        return Err(Error::validation("--jobs", "must be >= 1"));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let base = match &manifest.base {
        Some(b) => load_config(&dir.join(b))?,
        None => RunConfig::default(),
    };
    let root = experiment_root(&manifest);
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    std::fs::write(root.join("manifest.toml"), &text).map_err(|e| Error::io(&root, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::validation("--jobs", e.to_string()))?;
    pool.install(|| -> Result<i32> {
        match &manifest.kind {
            ManifestKind::Runs { runs } => {
                let configs = runs.iter().map(|r| load_config(&dir.join(r))).collect::<Result<Vec<_>>>()?;
                let mut ids: Vec<&str> = configs.iter().map(|c| c.run_id.as_str()).collect();
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::validation("runs", "run_id values must be unique"));
                }
                let outs = experiments::run_ensemble(&configs, Some(&root))?;
                for o in &outs {
                    println!("{}: {}", o.config.run_id, if o.succeeded() { "ok" } else { "failed" });
                }
                Ok(outs.iter().map(report_failure).max().unwrap_or(EXIT_OK))
            }
            ManifestKind::ThetaContinuation { thetas } => {
                let r = experiments::theta_continuation(&base, thetas, Some(&root))?;
                for (i, d) in r.pairwise_l2.iter().enumerate() {
                    println!("d_{} = {d:.6e}", i + 1);
                }
                let failed = r.failures.iter().any(Option::is_some);
                Ok(if failed { EXIT_BLOWUP } else { EXIT_OK })
            }
            ManifestKind::NRefinement { n_list } => {
                let t = experiments::n_refinement(&base, n_list, Some(&root))?;
                for (n, e) in t.n_list.iter().zip(&t.errors) {
                    println!("N = {n}: error {e:.6e}");
                }
                Ok(EXIT_OK)
            }
            ManifestKind::Mms { case, dt_list } => {
                let r = experiments::mms_verify(
                    *case,
                    &base.model,
                    &base.domain,
                    base.stepper.scheme,
                    base.stepper.stabilization,
                    dt_list,
                    base.t_end,
                )?;
                experiments::write_toml(&root.join("mms.toml"), &r)?;
                for (dt, e) in r.dt_list.iter().zip(&r.errors) {
                    println!("dt = {dt:e}: error {e:.6e}");
                }
                if let Some(p) = r.order {
                    println!("order {p:.3}");
                }
                Ok(EXIT_OK)
            }
        }
    })
}

/// Text renderings of one snapshot. `Txt` is a whitespace-separated matrix
/// (one value per line in 1D, `N` rows of `N` values in 2D) after a `# t = …` line.
pub fn render_snapshot(t: f64, field: &PhysicalField, format: ExportFormat) -> String {
    let d = field.domain();
    let n = d.points_per_axis;
    let mut s = String::new();
    match format {
        ExportFormat::Txt => {
            let _ = writeln!(s, "# t = {t:.16e}");
            let cols = if d.dimension == 1 { 1 } else { n };
            for row in field.values().chunks(cols) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        ExportFormat::Csv => {
            s.push_str(if d.dimension == 1 { "t,x,u\n" } else { "t,x,y,u\n" });
            for (p, v) in field.values().iter().enumerate() {
                let x = d.coordinates(p);
                if d.dimension == 1 {
                    let _ = writeln!(s, "{t:.16e},{:.16e},{v:.16e}", x[0]);
                } else {
                    let _ = writeln!(s, "{t:.16e},{:.16e},{:.16e},{v:.16e}", x[0], x[1]);
                }
            }
        }
    }
    s
}

pub fn cmd_export(run_dir: &Path, format: ExportFormat) -> Result<i32> {
    let snap_dir = run_dir.join("snapshots");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&snap_dir)
        .map_err(|e| Error::io(&snap_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    files.sort();
    let out_dir = run_dir.join("export");
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Txt => "txt",
    };
    for f in &files {
        let snap = snapshot::load(f)?;
        let target = out_dir.join(f.with_extension(ext).file_name().expect("file name"));
        std::fs::write(&target, render_snapshot(snap.t, &snap.field, format)).map_err(|e| Error::io(&target, e))?;
        println!("{}", target.display());
    }
    Ok(EXIT_OK)
}
