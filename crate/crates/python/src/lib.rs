//! Python module `pyacgeom`. Reports come back as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use acgeom::catalog::{self, BUILTIN};
use acgeom::report::Report;
use acgeom::suite::{self, Config};

fn cfg(points: usize, seed: u64) -> Config {
    Config {
        points,
        seed,
        ..Config::default()
    }
}

/// One suite on one scene. `form` only matters for `lee-form`.
pub fn suite_report(command: &str, scene: &str, points: usize, seed: u64, form: &str) -> Result<Report, String> {
    let s = catalog::resolve(scene).map_err(|e| e.to_string())?;
    let c = cfg(points, seed);
    let r = match command {
        "nijenhuis" => suite::run_nijenhuis(&s, &c),
        "lee-form" => suite::run_lee_form(&s, form, &c),
        "nk-check" => suite::run_nk_check(&s, &c),
        "certify" => suite::run_certify(&s, &c),
        "germ" => suite::run_germ(&s, None, &c),
        "symbols" => suite::run_symbols(&s, &c),
        other => return Err(format!("unknown suite `{other}`")),
    };
    r.map_err(|e| e.to_string())
}

/// Runs the command line in-process: `(exit_code, stdout, stderr)`.
pub fn run_args(args: Vec<String>) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let full = std::iter::once("acgeom".to_string()).chain(args);
    let code = acgeom::cli::run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

#[pyfunction]
fn scenes() -> Vec<&'static str> {
    BUILTIN.to_vec()
}

#[pyfunction]
#[pyo3(signature = (command, scene, points = 100, seed = 42, form = "omega"))]
fn report(py: Python<'_>, command: &str, scene: &str, points: usize, seed: u64, form: &str) -> PyResult<String> {
    py.detach(|| suite_report(command, scene, points, seed, form))
        .map(|r| r.to_json())
        .map_err(PyValueError::new_err)
}

#[pyfunction]
#[pyo3(signature = (points = 100, seed = 42))]
fn check_all(py: Python<'_>, points: usize, seed: u64) -> String {
    py.detach(|| suite::run_check_all(&cfg(points, seed)).to_json())
}

#[pyfunction]
fn export_scene(scene: &str) -> PyResult<String> {
    catalog::resolve(scene)
        .map(|s| catalog::scene_to_toml(&s))
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Parses and validates scene text; returns its id.
#[pyfunction]
fn load_scene_text(text: &str) -> PyResult<String> {
    catalog::parse_scene(text)
        .map(|s| s.id.clone())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn run(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    py.detach(|| run_args(args))
}

#[pymodule]
fn pyacgeom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(scenes, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(check_all, m)?)?;
    m.add_function(wrap_pyfunction!(export_scene, m)?)?;
    m.add_function(wrap_pyfunction!(load_scene_text, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_dispatch() {
        let r = suite_report("nk-check", "s6", 4, 1, "omega").unwrap();
        assert!(!r.failed());
        assert!(suite_report("nope", "s6", 4, 1, "omega").is_err());
        assert!(suite_report("certify", "no_such_scene", 4, 1, "omega").is_err());
    }

    #[test]
    fn cli_in_process() {
        let (code, out, _) = run_args(vec!["--version".into()]);
        assert_eq!(code, 0);
        assert!(out.contains("acgeom"));
        assert_eq!(run_args(vec!["frobnicate".into()]).0, 2);
    }
}
