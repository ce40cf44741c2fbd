//! Command-line front end.
//!
//! Exit codes: 0 when every check passes (flagged records included), 1 when
//! a check fails (the report is still written), 2 for usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::catalog::{resolve, scene_to_toml, load_scene, Scene};
use crate::error::Error;
use crate::report::Report;
use crate::suite::{self, Config, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "acgeom", version, about = "Almost complex geometry verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// number of sample points
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// `VALUE` for every check or `CHECK=VALUE` for one; repeatable
    #[arg(long = "tol", value_name = "T")]
    tol: Vec<String>,
    /// machine-readable report
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// load the scene from a file instead of by name
    #[arg(long, value_name = "PATH")]
    scene_file: Option<PathBuf>,
    /// record wall-clock time (reports stop being byte-reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// built-in scene name or path to a scene file
    scene: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Nijenhuis tensor against the bracket oracle
    Nijenhuis(SceneArgs),
    /// 4d Lee form of a named 2-form (`F` is the fundamental form)
    LeeForm {
        #[command(flatten)]
        args: SceneArgs,
        #[arg(long, default_value = "omega")]
        form: String,
    },
    /// nearly Kaehler identity h(JN(X,Y),Z) = dF(X,Y,Z)/3
    NkCheck(SceneArgs),
    /// pointwise certificates that no compatible symplectic form exists
    Certify(SceneArgs),
    /// jet of a local compatible symplectic form at given points
    Germ {
        #[command(flatten)]
        args: SceneArgs,
        /// comma-separated coordinates; repeatable. Sampled when absent.
        #[arg(long, value_name = "X1,X2,...")]
        point: Vec<String>,
    },
    /// principal symbol rank sweeps
    Symbols(SceneArgs),
    /// acceptance suite
    CheckAll(Common),
    /// print a scene in file format
    ExportScene(SceneArgs),
}

fn config(c: &Common) -> Result<Config, String> {
    let mut tol = Tolerances::default();
    for t in &c.tol {
        tol.parse_arg(t)?;
    }
    Ok(Config {
        points: c.points,
        seed: c.seed,
        tol,
        timing: c.timing,
    })
}

fn scene(a: &SceneArgs) -> Result<Scene, Error> {
    match (&a.common.scene_file, &a.scene) {
        (Some(path), None) => load_scene(path),
        (None, Some(name)) => resolve(name),
        (Some(_), Some(_)) => Err(Error::Missing("give either a scene name or --scene-file, not both".into())),
        (None, None) => Err(Error::Missing("a scene name or --scene-file is required".into())),
    }
}

fn scene_label(a: &SceneArgs) -> String {
    a.common
        .scene_file
        .as_ref()
        .map(|p| p.display().to_string())
        .or_else(|| a.scene.clone())
        .unwrap_or_default()
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{t}` in --point {s}")))
        .collect()
}

/// Runs the tool; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let usage = |err: &mut dyn Write, msg: String| {
        let _ = writeln!(err, "error: {msg}");
        EXIT_USAGE
    };
    let common = match &cli.command {
        Command::Nijenhuis(a) | Command::NkCheck(a) | Command::Certify(a) | Command::Symbols(a) | Command::ExportScene(a) => {
            &a.common
        }
        Command::LeeForm { args, .. } | Command::Germ { args, .. } => &args.common,
        Command::CheckAll(c) => c,
    };
    let cfg = match config(common) {
        Ok(c) => c,
        Err(m) => return usage(err, m),
    };
    let start = Instant::now();
    let report: Result<Report, Error> = match &cli.command {
        Command::CheckAll(_) => Ok(suite::run_check_all(&cfg)),
        Command::ExportScene(a) => {
            return match scene(a) {
                Ok(s) => {
                    let text = scene_to_toml(&s);
                    match &a.common.out {
                        Some(path) => match std::fs::write(path, text) {
                            Ok(()) => EXIT_OK,
                            Err(e) => usage(err, format!("cannot write {}: {e}", path.display())),
                        },
                        None => {
                            let _ = write!(out, "{text}");
                            EXIT_OK
                        }
                    }
                }
                Err(e) => usage(err, format!("{}: {e}", scene_label(a))),
            };
        }
        Command::Germ { args, point } => {
            let pts: Result<Vec<Vec<f64>>, String> = point.iter().map(|p| parse_point(p)).collect();
            let pts = match pts {
                Ok(p) => p,
                Err(m) => return usage(err, m),
            };
            scene(args).and_then(|s| suite::run_germ(&s, if pts.is_empty() { None } else { Some(pts) }, &cfg))
        }
        Command::LeeForm { args, form } => scene(args).and_then(|s| suite::run_lee_form(&s, form, &cfg)),
        Command::Nijenhuis(a) => scene(a).and_then(|s| suite::run_nijenhuis(&s, &cfg)),
        Command::NkCheck(a) => scene(a).and_then(|s| suite::run_nk_check(&s, &cfg)),
        Command::Certify(a) => scene(a).and_then(|s| suite::run_certify(&s, &cfg)),
        Command::Symbols(a) => scene(a).and_then(|s| suite::run_symbols(&s, &cfg)),
    };
    let mut report = match report {
        Ok(r) => r,
        Err(e) => {
            let label = match &cli.command {
                Command::Nijenhuis(a) | Command::NkCheck(a) | Command::Certify(a) | Command::Symbols(a) | Command::ExportScene(a) => {
                    scene_label(a)
                }
                Command::LeeForm { args, .. } | Command::Germ { args, .. } => scene_label(args),
                Command::CheckAll(_) => String::new(),
            };
            return usage(err, format!("{label}: {e}"));
        }
    };
    if cfg.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    let _ = write!(out, "{}", report.summary());
    if let Some(path) = &common.out {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            return usage(err, format!("cannot write {}: {e}", path.display()));
        }
    }
    if report.failed() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}
