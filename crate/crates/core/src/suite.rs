//! Verification runs behind each CLI subcommand, plus the acceptance criteria.
//!
//! Every run evaluates its sample points on the rayon pool and assembles
//! records in point order, so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{builtin, scene_c3_flat, scene_r4_flat, scene_r4_remark1, scene_r4_twisted, scene_s6, Scene, BUILTIN};
use crate::error::{Error, Result};
use crate::exprlang::Expr;
use crate::fields::{
    d_fundamental_form, exterior_derivative, exterior_derivative_twice, fundamental_form_field, lee_form_4d, nijenhuis,
    ChartDomain, FieldK, JField,
};
use crate::linalg;
use crate::localsymp::{build_infinitesimal_solution, polarized_symbol_matrix, symbol_dminus_matrix, symbol_lh, anti_invariant_frame};
use crate::obstruction::{
    almost_kahler_obstruction, check_nk_identity, complex_volume_from_three_form, factor_nijenhuis,
    no_symplectic_certificate, obstruction_on, synthetic_nijenhuis, Certificate, Verdict,
};
use crate::oracle::{elimination_rank, fd_d_fundamental_form, fd_exterior_derivative, fd_nijenhuis, FD_STEP};
use crate::pointwise::{
    compatible_metric, wedge_all, CVec, Compatibility, ComplexVolumePoint, HermitianFormPoint, UnitaryFrame,
};
use crate::random::{nonzero_covector, random_compatible_pair, random_j, random_metric, uniform_vec};
use crate::report::{CheckRecord, CheckVerdict, Report};

/// Tolerance overrides: a bare value applies to every check, `name=value`
/// to one check.
#[derive(Debug, Clone, Default)]
pub struct Tolerances {
    pub global: Option<f64>,
    pub named: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn get(&self, name: &str, default: f64) -> f64 {
        self.named.get(name).copied().or(self.global).unwrap_or(default)
    }

    pub fn parse_arg(&mut self, arg: &str) -> std::result::Result<(), String> {
        match arg.split_once('=') {
            Some((name, v)) => {
                let v: f64 = v.trim().parse().map_err(|_| format!("bad tolerance value in `{arg}`"))?;
                self.named.insert(name.trim().to_string(), v);
            }
            None => self.global = Some(arg.trim().parse().map_err(|_| format!("bad tolerance `{arg}`"))?),
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub points: usize,
    pub seed: u64,
    pub tol: Tolerances,
    /// include wall-clock checks (non-deterministic)
    pub timing: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            points: 100,
            seed: 42,
            tol: Tolerances::default(),
            timing: false,
        }
    }
}

impl Config {
    fn below(&self, name: &str, points: usize, value: f64, default: f64) -> CheckRecord {
        CheckRecord::below(name, points, value, self.tol.get(name, default))
    }
}

fn fold_max(it: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken evaluation cannot pass
    it.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    fold_max(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

fn par_points<T: Send>(pts: &[Vec<f64>], f: impl Fn(usize, &[f64]) -> T + Sync) -> Vec<T> {
    pts.par_iter().enumerate().map(|(i, p)| f(i, p)).collect()
}

fn errors<T>(rs: &[Result<T>]) -> (usize, String) {
    let first = rs.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()));
    (rs.iter().filter(|r| r.is_err()).count(), first.unwrap_or_default())
}

fn push_errors<T>(report: &mut Report, rs: &[Result<T>]) {
    let (n, first) = errors(rs);
    if n > 0 {
        report.push(CheckRecord::count("evaluation_errors", rs.len(), n).with_note(first));
    }
}

fn is_constant(entries: &[Expr]) -> bool {
    entries.iter().all(|e| e.as_constant().is_some())
}

fn require_metric(scene: &Scene) -> Result<&crate::fields::MetricField> {
    scene.metric()
}

fn require_dim(scene: &Scene, n: usize) -> Result<()> {
    if scene.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: scene.dim() });
    }
    Ok(())
}

#[derive(Serialize)]
struct NijenhuisDetail {
    point: Vec<f64>,
    max_component: f64,
}

pub fn run_nijenhuis(scene: &Scene, cfg: &Config) -> Result<Report> {
    let pts = scene.chart().sample(cfg.seed, cfg.points);
    let rs = par_points(&pts, |_, p| -> Result<(f64, f64, f64)> {
        let ad = nijenhuis(&scene.j, p)?;
        let fd = fd_nijenhuis(&scene.j, p, FD_STEP)?;
        Ok((max_diff(ad.components(), fd.components()), ad.antilinearity_residual(&scene.j.eval(p)?), ad.max_component()))
    });
    let mut r = Report::new("nijenhuis", Some(&scene.id), cfg.seed, cfg.points);
    let ok: Vec<_> = rs.iter().filter_map(|r| r.as_ref().ok()).collect();
    r.push(cfg.below("nijenhuis_vs_bracket_oracle", ok.len(), fold_max(ok.iter().map(|v| v.0)), 1e-6));
    r.push(cfg.below("nijenhuis_antilinearity", ok.len(), fold_max(ok.iter().map(|v| v.1)), 1e-8));
    let nmax = fold_max(ok.iter().map(|v| v.2));
    if is_constant(scene.j.entries()) {
        r.push(cfg.below("nijenhuis_constant_coefficients", ok.len(), nmax, 1e-12));
    } else {
        r.push(CheckRecord::info("nijenhuis_max_component", ok.len(), nmax));
    }
    push_errors(&mut r, &rs);
    r.details = serde_json::to_value(
        pts.iter()
            .zip(&rs)
            .map(|(p, res)| NijenhuisDetail {
                point: p.clone(),
                max_component: res.as_ref().map_or(f64::NAN, |v| v.2),
            })
            .collect::<Vec<_>>(),
    )
    .expect("details serialize");
    Ok(r)
}

#[derive(Serialize)]
struct LeeDetail {
    point: Vec<f64>,
    theta: Option<Vec<f64>>,
    dtheta_max: Option<f64>,
    residual: Option<f64>,
    error: Option<String>,
}

/// `name = "F"` selects the fundamental form of the scene metric.
pub fn scene_form(scene: &Scene, name: &str) -> Result<FieldK> {
    match scene.form(name) {
        Ok(f) => Ok(f.clone()),
        Err(e) if name == "F" => match &scene.h {
            Some(h) => Ok(fundamental_form_field(h, &scene.j)),
            None => Err(e),
        },
        Err(e) => Err(e),
    }
}

pub fn run_lee_form(scene: &Scene, form: &str, cfg: &Config) -> Result<Report> {
    require_dim(scene, 4)?;
    let omega = scene_form(scene, form)?;
    if omega.degree() != 2 {
        return Err(Error::WrongDegree { expected: 2, got: omega.degree() });
    }
    let pts = scene.chart().sample(cfg.seed, cfg.points);
    let rs = par_points(&pts, |_, p| lee_form_4d(&omega, p));
    let mut r = Report::new("lee-form", Some(&scene.id), cfg.seed, cfg.points);
    let ok: Vec<_> = rs.iter().filter_map(|r| r.as_ref().ok()).collect();
    r.push(cfg.below("lee_residual", ok.len(), fold_max(ok.iter().map(|l| l.residual)), 1e-10));
    let dmax = fold_max(ok.iter().map(|l| l.dtheta.max_norm()));
    let closed = dmax < 1e-10;
    r.push(
        CheckRecord::info("lee_dtheta_max", ok.len(), dmax)
            .with_note(if closed { "theta closed at samples: locally conformally symplectic" } else { "theta not closed" }),
    );
    push_errors(&mut r, &rs);
    r.details = serde_json::to_value(
        pts.iter()
            .zip(&rs)
            .map(|(p, res)| match res {
                Ok(l) => LeeDetail {
                    point: p.clone(),
                    theta: Some(l.theta.clone()),
                    dtheta_max: Some(l.dtheta.max_norm()),
                    residual: Some(l.residual),
                    error: None,
                },
                Err(e) => LeeDetail {
                    point: p.clone(),
                    theta: None,
                    dtheta_max: None,
                    residual: None,
                    error: Some(e.to_string()),
                },
            })
            .collect::<Vec<_>>(),
    )
    .expect("details serialize");
    Ok(r)
}

pub fn run_nk_check(scene: &Scene, cfg: &Config) -> Result<Report> {
    let h = require_metric(scene)?;
    let pts = scene.chart().sample(cfg.seed, cfg.points);
    let rs = par_points(&pts, |_, p| -> Result<(f64, f64)> {
        let nk = check_nk_identity(&scene.j, h, p)?;
        let ad = d_fundamental_form(h, &scene.j, p)?;
        let fd = fd_d_fundamental_form(h, &scene.j, p, FD_STEP)?;
        Ok((nk.residual, max_diff(ad.coeffs(), fd.coeffs())))
    });
    let mut r = Report::new("nk-check", Some(&scene.id), cfg.seed, cfg.points);
    let ok: Vec<_> = rs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let nk = cfg.below("nk_identity", ok.len(), fold_max(ok.iter().map(|v| v.0)), 1e-8);
    let nk = if scene.nearly_kahler { nk } else { nk.with_note("scene is not annotated nearly Kaehler") };
    r.push(nk);
    r.push(cfg.below("df_vs_difference_oracle", ok.len(), fold_max(ok.iter().map(|v| v.1)), 1e-6));
    push_errors(&mut r, &rs);
    r.details = serde_json::to_value(
        pts.iter()
            .zip(&rs)
            .map(|(p, res)| (p.clone(), res.as_ref().map_or(f64::NAN, |v| v.0)))
            .collect::<Vec<_>>(),
    )
    .expect("details serialize");
    Ok(r)
}

fn relative_spread(l: &[f64]) -> f64 {
    let hi = l.iter().cloned().fold(f64::MIN, f64::max);
    let lo = l.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / hi.abs().max(f64::MIN_POSITIVE)
}

pub fn run_certify(scene: &Scene, cfg: &Config) -> Result<Report> {
    let h = require_metric(scene)?;
    let pts = scene.chart().sample(cfg.seed, cfg.points);
    let certs: Vec<Certificate> = par_points(&pts, |_, p| no_symplectic_certificate(&scene.id, &scene.j, h, p));
    let mut r = Report::new("certify", Some(&scene.id), cfg.seed, cfg.points);
    let count = |v: Verdict| certs.iter().filter(|c| c.verdict == v).count();
    let (no, inc, na) = (
        count(Verdict::NoCompatibleSymplecticForm),
        count(Verdict::Inconclusive),
        count(Verdict::NotApplicable),
    );
    let failures = if scene.nearly_kahler { na } else { 0 };
    let note = format!("{no} NO_COMPATIBLE_SYMPLECTIC_FORM, {inc} INCONCLUSIVE, {na} NOT_APPLICABLE");
    r.push(CheckRecord::count("certificate_verdicts", certs.len(), failures).with_note(note).flag_if(inc + na > 0));
    let fac: Vec<f64> = certs
        .iter()
        .filter_map(|c| {
            let res = &c.residuals;
            Some(fold_max([res.symmetry?, res.jstar_invariance?, res.type_10?]))
        })
        .collect();
    if !fac.is_empty() {
        r.push(cfg.below("factorization_residuals", fac.len(), fold_max(fac.iter().cloned()), 1e-6));
    }
    let eig: Vec<&Vec<f64>> = certs.iter().filter_map(|c| c.normalized_eigenvalues.as_ref()).collect();
    if scene.nearly_kahler {
        r.push(cfg.below(
            "nk_identity",
            certs.len(),
            fold_max(certs.iter().map(|c| c.residuals.nk_identity.unwrap_or(f64::NAN))),
            1e-8,
        ));
        r.push(cfg.below("eigenvalue_spread", eig.len(), fold_max(eig.iter().map(|l| relative_spread(l))), 1e-8));
    }
    r.details = serde_json::to_value(&certs).expect("certificates serialize");
    Ok(r)
}

#[derive(Serialize)]
#[serde(untagged)]
enum GermDetail {
    Ok(crate::localsymp::GermResult),
    Err { point: Vec<f64>, error: String },
}

pub fn run_germ(scene: &Scene, points: Option<Vec<Vec<f64>>>, cfg: &Config) -> Result<Report> {
    require_dim(scene, 4)?;
    let h = require_metric(scene)?;
    let pts = match points {
        Some(p) => {
            for q in &p {
                scene.chart().check(q)?;
            }
            p
        }
        None => scene.chart().sample(cfg.seed, cfg.points),
    };
    let rs = par_points(&pts, |i, p| build_infinitesimal_solution(&scene.j, h, p, cfg.seed.wrapping_add(i as u64)));
    let mut r = Report::new("germ", Some(&scene.id), cfg.seed, pts.len());
    let ok: Vec<_> = rs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let (nerr, first) = errors(&rs);
    let fails = ok.iter().filter(|g| !g.success).count() + nerr;
    r.push(CheckRecord::count("germ_success", pts.len(), fails).with_note(first));
    r.push(cfg.below("germ_dminus_alpha", ok.len(), fold_max(ok.iter().map(|g| g.dminus_alpha_norm)), 1e-9));
    r.push(cfg.below("germ_volume_identity", ok.len(), fold_max(ok.iter().map(|g| g.identity_error)), 1e-8));
    r.push(CheckRecord::count("germ_positive", ok.len(), ok.iter().filter(|g| !(g.dalpha_squared > 0.0)).count()));
    let radius = ok.iter().map(|g| g.positivity_radius).fold(f64::INFINITY, f64::min);
    r.push(CheckRecord::info("germ_min_positivity_radius", ok.len(), if ok.is_empty() { f64::NAN } else { radius }));
    r.details = serde_json::to_value(
        pts.iter()
            .zip(rs)
            .map(|(p, res)| match res {
                Ok(g) => GermDetail::Ok(g),
                Err(e) => GermDetail::Err { point: p.clone(), error: e.to_string() },
            })
            .collect::<Vec<_>>(),
    )
    .expect("details serialize");
    Ok(r)
}

const COVECTORS_PER_POINT: usize = 10;

pub fn run_symbols(scene: &Scene, cfg: &Config) -> Result<Report> {
    require_dim(scene, 4)?;
    let h = require_metric(scene)?;
    let pts = scene.chart().sample(cfg.seed, cfg.points);
    let rs = par_points(&pts, |i, p| -> Result<(usize, usize, f64)> {
        let jp = scene.j.eval(p)?;
        let hp = h.eval(p)?;
        let np = nijenhuis(&scene.j, p)?;
        let theta = crate::fields::lee_form_of_metric(h, &scene.j, p)?.theta;
        let frame = anti_invariant_frame(&jp, &hp)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64).wrapping_mul(0x9e37_79b9));
        let mut bad_dminus = 0;
        let mut lh: f64 = 0.0;
        for _ in 0..COVECTORS_PER_POINT {
            let xi = nonzero_covector(&mut rng, 4);
            let m = symbol_dminus_matrix(&jp, &xi);
            if linalg::rank(&m, 1e-10) != 2 || elimination_rank(&rows(&m), 1e-10) != 2 {
                bad_dminus += 1;
            }
            for b in &frame {
                lh = lh.max(symbol_lh(&hp, &jp, &np, &theta, &xi, b).abs());
            }
        }
        let pm = polarized_symbol_matrix(&hp, &jp)?;
        let bad_pol = usize::from(linalg::rank(&pm, 1e-10) != 5 || elimination_rank(&rows(&pm), 1e-10) != 5);
        Ok((bad_dminus, bad_pol, lh))
    });
    let mut r = Report::new("symbols", Some(&scene.id), cfg.seed, cfg.points);
    let ok: Vec<_> = rs.iter().filter_map(|r| r.as_ref().ok()).collect();
    r.push(CheckRecord::count("dminus_symbol_rank_2", ok.len() * COVECTORS_PER_POINT, ok.iter().map(|v| v.0).sum()));
    r.push(CheckRecord::count("polarized_ddelta_symbol_rank_5", ok.len(), ok.iter().map(|v| v.1).sum()));
    r.push(CheckRecord::info("lh_symbol_max", ok.len(), fold_max(ok.iter().map(|v| v.2))));
    push_errors(&mut r, &rs);
    Ok(r)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<CheckRecord>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(|c| c.verdict.is_failure())
    }

    pub fn line(&self) -> String {
        let worst = self
            .checks
            .iter()
            .filter(|c| c.verdict.is_failure())
            .map(|c| format!("{} = {:.3e} (tol {:.1e})", c.name, c.max_residual, c.tolerance.unwrap_or(f64::NAN)))
            .collect::<Vec<_>>();
        format!(
            "criterion {}: {} [{}]{}",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            if worst.is_empty() { String::new() } else { format!(": {}", worst.join("; ")) }
        )
    }
}

fn rng_for(cfg: &Config, criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1000).wrapping_add(criterion))
}

pub fn criterion_integrable(cfg: &Config) -> Criterion {
    let s = scene_c3_flat();
    let h = s.h.as_ref().expect("c3_flat has a metric");
    let pts = s.chart().sample(cfg.seed, 100);
    let scene_vals: Vec<Result<(f64, f64)>> = par_points(&pts, |_, p| {
        let n = nijenhuis(&s.j, p)?;
        let w = almost_kahler_obstruction(&h.eval(p)?, &s.j.eval(p)?, &n)?;
        Ok((n.max_component(), w.max_norm()))
    });
    let mut rng = rng_for(cfg, 1);
    let chart = ChartDomain::cube(6, 1.0);
    let mut random_vals = Vec::new();
    let mut incompatible = 0;
    for _ in 0..50 {
        let (omega, j, g) = random_compatible_pair(&mut rng, 6);
        if !matches!(compatible_metric(&omega, &j).map(|c| c.verdict), Ok(Compatibility::Compatible)) {
            incompatible += 1;
        }
        let jf = JField::constant(chart.clone(), &j);
        let p = uniform_vec(&mut rng, 6, 0.9);
        random_vals.push(nijenhuis(&jf, &p).and_then(|n| Ok((n.max_component(), almost_kahler_obstruction(&g, &j, &n)?.max_norm()))));
    }
    let all: Vec<Result<(f64, f64)>> = scene_vals.into_iter().chain(random_vals).collect();
    let (nerr, first) = errors(&all);
    let ok: Vec<_> = all.iter().filter_map(|r| r.as_ref().ok()).collect();
    Criterion {
        id: 1,
        title: "integrable controls",
        checks: vec![
            cfg.below("c1_nijenhuis_max", ok.len(), fold_max(ok.iter().map(|v| v.0)), 1e-12),
            cfg.below("c1_obstruction_max", ok.len(), fold_max(ok.iter().map(|v| v.1)), 1e-12),
            CheckRecord::count("c1_random_pairs_compatible", 50, incompatible),
            CheckRecord::count("c1_evaluation_errors", all.len(), nerr).with_note(first),
        ],
    }
}

pub fn criterion_s6(cfg: &Config) -> Criterion {
    let s = scene_s6();
    let h = s.h.as_ref().expect("s6 has a metric");
    let start = Instant::now();
    let pts = s.chart().sample(cfg.seed, 100);
    let certs: Vec<Certificate> = par_points(&pts, |_, p| no_symplectic_certificate("s6", &s.j, h, p));
    let elapsed = start.elapsed().as_secs_f64();
    let wrong = certs.iter().filter(|c| c.verdict != Verdict::NoCompatibleSymplecticForm).count();
    let res = |f: &dyn Fn(&Certificate) -> Option<f64>| fold_max(certs.iter().map(|c| f(c).unwrap_or(f64::NAN)));
    let lambdas: Vec<Vec<f64>> = certs.iter().map(|c| c.normalized_eigenvalues.clone().unwrap_or_default()).collect();
    let nonpositive = lambdas.iter().filter(|l| l.len() != 3 || l.iter().any(|&v| !(v > 0.0))).count();
    let mut checks = vec![
        CheckRecord::count("c2_verdict_no_compatible", certs.len(), wrong),
        cfg.below("c2_nk_identity", certs.len(), res(&|c| c.residuals.nk_identity), 1e-8),
        cfg.below("c2_symmetry", certs.len(), res(&|c| c.residuals.symmetry), 1e-6),
        cfg.below("c2_jstar_invariance", certs.len(), res(&|c| c.residuals.jstar_invariance), 1e-6),
        cfg.below("c2_type_purity", certs.len(), res(&|c| c.residuals.type_10), 1e-6),
        cfg.below(
            "c2_eigenvalue_spread",
            certs.len(),
            fold_max(lambdas.iter().map(|l| if l.is_empty() { f64::NAN } else { relative_spread(l) })),
            1e-8,
        ),
        CheckRecord::count("c2_eigenvalues_positive", certs.len(), nonpositive),
    ];
    if cfg.timing {
        checks.push(cfg.below("c2_runtime_seconds", certs.len(), elapsed, 10.0));
    }
    Criterion { id: 2, title: "no compatible symplectic form on S^6", checks }
}

/// A random unitary change of frame `Z'_i = Σ_r U_ri Z_r`.
fn rotate_frame(rng: &mut ChaCha8Rng, f: &UnitaryFrame) -> UnitaryFrame {
    let m = f.frame.len();
    let a = DMatrix::from_fn(m, m, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let u = a.qr().q();
    let frame = (0..m)
        .map(|i| (0..f.frame[0].len()).map(|c| (0..m).map(|r| u[(r, i)] * f.frame[r][c]).sum()).collect())
        .collect();
    let coframe = (0..m)
        .map(|i| (0..f.coframe[0].len()).map(|c| (0..m).map(|r| u[(r, i)].conj() * f.coframe[r][c]).sum()).collect())
        .collect();
    UnitaryFrame { coframe, frame }
}

fn conj_all(vs: &[CVec]) -> Vec<CVec> {
    vs.iter().map(|v| v.iter().map(|z| z.conj()).collect()).collect()
}

pub fn criterion_normal_form(cfg: &Config) -> Criterion {
    let mut rng = rng_for(cfg, 3);
    let mut plus_err: f64 = 0.0;
    let mut minus_err: f64 = 0.0;
    let mut shape_err: f64 = 0.0;
    let mut errs = 0;
    for _ in 0..100 {
        let j = random_j(&mut rng, 6);
        let g = random_metric(&mut rng, &j);
        let lambda: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
        let Ok(base) = UnitaryFrame::new(&j, &g) else {
            errs += 1;
            continue;
        };
        let f = rotate_frame(&mut rng, &base);
        let h = HermitianFormPoint::from_diagonal(&lambda, &f.frame);
        let n = synthetic_nijenhuis(&h, &wedge_all(&f.coframe));
        // N(Z_a, Z_b) = λ_c Z̄_c for cyclic (a, b, c)
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let v = n.apply_complex(&f.frame[a], &f.frame[b]);
            for (x, z) in v.iter().zip(&f.frame[c]) {
                shape_err = shape_err.max((x - z.conj() * lambda[c]).norm());
            }
        }
        let Ok(w) = almost_kahler_obstruction(&g, &j, &n) else {
            errs += 1;
            continue;
        };
        let sum: f64 = lambda.iter().sum();
        plus_err = plus_err.max((obstruction_on(&w, &conj_all(&f.frame)) - Complex64::new(0.0, sum)).norm());
        minus_err = minus_err.max((obstruction_on(&w, &f.frame) + Complex64::new(0.0, sum)).norm());
    }
    Criterion {
        id: 3,
        title: "normal form obstruction equals i(l1+l2+l3)",
        checks: vec![
            cfg.below("c3_nijenhuis_normal_form", 100, shape_err, 1e-12),
            cfg.below("c3_obstruction_conjugate_triple", 100, plus_err, 1e-12)
                .with_note("evaluated on (conj Z1, conj Z2, conj Z3); Z_i span the +i eigenspace"),
            cfg.below("c3_obstruction_holomorphic_triple", 100, minus_err, 1e-12).with_note("value -i(l1+l2+l3)"),
            CheckRecord::count("c3_setup_errors", 100, errs),
        ],
    }
}

pub fn criterion_local_jets(cfg: &Config) -> Criterion {
    let mut rng = rng_for(cfg, 4);
    let mut bad_dminus = 0;
    for _ in 0..1000 {
        let j = random_j(&mut rng, 4);
        let xi = nonzero_covector(&mut rng, 4);
        let m = symbol_dminus_matrix(&j, &xi);
        if linalg::rank(&m, 1e-10) != 2 || elimination_rank(&rows(&m), 1e-10) != 2 {
            bad_dminus += 1;
        }
    }
    let mut bad_pol = 0;
    for _ in 0..100 {
        let j = random_j(&mut rng, 4);
        let g = random_metric(&mut rng, &j);
        match polarized_symbol_matrix(&g, &j) {
            Ok(m) if linalg::rank(&m, 1e-10) == 5 && elimination_rank(&rows(&m), 1e-10) == 5 => {}
            _ => bad_pol += 1,
        }
    }
    let mut checks = vec![
        CheckRecord::count("c4_dminus_symbol_rank", 1000, bad_dminus),
        CheckRecord::count("c4_polarized_symbol_rank", 100, bad_pol),
    ];
    for (tag, s) in [("flat", scene_r4_flat()), ("twisted", scene_r4_twisted())] {
        let h = s.h.as_ref().expect("metric");
        let pts = s.chart().sample(cfg.seed, 20);
        let rs = par_points(&pts, |i, p| build_infinitesimal_solution(&s.j, h, p, cfg.seed.wrapping_add(i as u64)));
        let (nerr, first) = errors(&rs);
        let ok: Vec<_> = rs.iter().filter_map(|r| r.as_ref().ok()).collect();
        checks.push(
            CheckRecord::count(&format!("c4_germ_{tag}_success"), 20, nerr + ok.iter().filter(|g| !g.success).count())
                .with_note(first),
        );
        checks.push(cfg.below(
            &format!("c4_germ_{tag}_dminus_alpha"),
            ok.len(),
            fold_max(ok.iter().map(|g| g.dminus_alpha_norm)),
            1e-9,
        ));
        checks.push(cfg.below(
            &format!("c4_germ_{tag}_volume_identity"),
            ok.len(),
            fold_max(ok.iter().map(|g| g.identity_error)),
            1e-8,
        ));
    }
    Criterion { id: 4, title: "local symplectic jet machinery", checks }
}

/// A random nondegenerate, non-closed 2-form near a constant compatible one.
fn random_nonclosed_form(rng: &mut ChaCha8Rng, chart: &ChartDomain) -> FieldK {
    let (omega, _, _) = random_compatible_pair(rng, 4);
    let terms = omega
        .coeffs()
        .iter()
        .zip(crate::pointwise::forms::basis(4, 2))
        .map(|(&c, idx)| {
            let a = rng.random_range(0..4);
            let b = rng.random_range(0..4);
            let e = Expr::constant(c) + Expr::constant(rng.random_range(-0.1..0.1)) * Expr::var(a) * Expr::var(b);
            (idx.clone(), e)
        })
        .collect();
    FieldK::from_terms(chart.clone(), 2, terms).expect("valid terms")
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> Expr {
    let mut e = Expr::zero();
    for a in 0..4 {
        e = e + Expr::constant(rng.random_range(-1.0..1.0)) * Expr::var(a);
        let b = rng.random_range(0..4);
        e = e + Expr::constant(rng.random_range(-0.5..0.5)) * Expr::var(a) * Expr::var(b);
    }
    e
}

pub fn criterion_lee_example(cfg: &Config) -> Criterion {
    let s = scene_r4_remark1();
    let om = s.form("omega").expect("scene has omega").clone();
    let pts = s.chart().sample(cfg.seed, 100);
    let res: Vec<Result<f64>> = par_points(&pts, |_, p| Ok(lee_form_4d(&om, p)?.residual));
    let on_slice: Vec<Result<f64>> = par_points(&pts, |_, p| {
        let mut q = p.to_vec();
        q[0] = 1.0;
        Ok(lee_form_4d(&om, &q)?.dtheta.max_norm())
    });
    let std_form = FieldK::from_terms(
        s.chart().clone(),
        2,
        vec![(vec![0, 1], Expr::constant(1.0)), (vec![2, 3], Expr::constant(1.0))],
    )
    .expect("standard form");
    let std_theta: Vec<Result<f64>> =
        par_points(&pts, |_, p| Ok(fold_max(lee_form_4d(&std_form, p)?.theta.iter().map(|v| v.abs()))));
    let mut rng = rng_for(cfg, 5);
    let chart = ChartDomain::cube(4, 1.0);
    let mut shift: Vec<Result<f64>> = Vec::new();
    for _ in 0..50 {
        let omega = random_nonclosed_form(&mut rng, &chart);
        let f = random_quadratic(&mut rng);
        let p = uniform_vec(&mut rng, 4, 0.5);
        shift.push((|| {
            let t0 = lee_form_4d(&omega, &p)?.theta;
            let t1 = lee_form_4d(&omega.conformal(&f), &p)?.theta;
            let df = f.eval_jet(&p)?.grad;
            Ok(fold_max((0..4).map(|k| (t1[k] - t0[k] - df[k]).abs())))
        })());
    }
    let okmax = |rs: &[Result<f64>]| fold_max(rs.iter().map(|r| *r.as_ref().unwrap_or(&f64::NAN)));
    let min_dtheta = on_slice.iter().map(|r| *r.as_ref().unwrap_or(&f64::NAN)).fold(f64::INFINITY, |m, v| {
        if v.is_nan() { f64::NAN } else { m.min(v) }
    });
    let not_closed = if min_dtheta > 0.5 { 0 } else { on_slice.len() };
    Criterion {
        id: 5,
        title: "Lee form of the counterexample form",
        checks: vec![
            cfg.below("c5_lee_residual", 100, okmax(&res), 1e-10),
            CheckRecord::count("c5_dtheta_above_half_at_x1_1", 100, not_closed)
                .with_note(format!("min |dtheta| = {min_dtheta:.6e}")),
            cfg.below("c5_standard_form_theta", 100, okmax(&std_theta), 1e-12),
            cfg.below("c5_conformal_shift_law", 50, okmax(&shift), 1e-8),
        ],
    }
}

pub fn criterion_oracles(cfg: &Config) -> Criterion {
    let mut checks = Vec::new();
    for name in BUILTIN {
        let s = builtin(name).expect("builtin");
        let pts = s.chart().sample(cfg.seed, 100);
        let mut fields: Vec<FieldK> = s.forms.values().cloned().collect();
        if let Some(h) = &s.h {
            fields.push(fundamental_form_field(h, &s.j));
        }
        let vals: Vec<Result<(f64, f64, f64)>> = par_points(&pts, |_, p| {
            let mut d_err: f64 = 0.0;
            let mut dd: f64 = 0.0;
            for f in &fields {
                let ad = exterior_derivative(f, p)?;
                let fd = fd_exterior_derivative(f, p, FD_STEP)?;
                d_err = d_err.max(max_diff(ad.coeffs(), fd.coeffs()));
                dd = dd.max(exterior_derivative_twice(f, p)?.max_norm());
            }
            let n = nijenhuis(&s.j, p)?;
            let nfd = fd_nijenhuis(&s.j, p, FD_STEP)?;
            Ok((d_err, max_diff(n.components(), nfd.components()), dd))
        });
        let m = |k: usize| {
            fold_max(vals.iter().map(|r| match r {
                Ok(v) => [v.0, v.1, v.2][k],
                Err(_) => f64::NAN,
            }))
        };
        checks.push(cfg.below(&format!("c6_{name}_d_vs_oracle"), 100, m(0), 1e-6));
        checks.push(cfg.below(&format!("c6_{name}_nijenhuis_vs_oracle"), 100, m(1), 1e-6));
        checks.push(cfg.below(&format!("c6_{name}_dd_zero"), 100, m(2), 1e-10));
    }
    Criterion { id: 6, title: "jet calculus matches difference oracles", checks }
}

pub fn criterion_round_trips(cfg: &Config) -> Criterion {
    let mut rng = rng_for(cfg, 7);
    let mut h_err: f64 = 0.0;
    let mut vol_err: f64 = 0.0;
    let mut errs = 0;
    let mut first = String::new();
    for _ in 0..100 {
        let j = random_j(&mut rng, 6);
        let g = random_metric(&mut rng, &j);
        let Ok(base) = UnitaryFrame::new(&j, &g) else {
            errs += 1;
            continue;
        };
        let f = rotate_frame(&mut rng, &base);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let zeros = rng.random_range(0..3);
        let lambda: Vec<f64> = (0..3).map(|i| if i < zeros { 0.0 } else { sign * rng.random_range(0.1..2.0) }).collect();
        let h0 = HermitianFormPoint::from_diagonal(&lambda, &f.frame);
        let c = Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU));
        let psi0 = wedge_all(&f.coframe).scale(c);
        let outcome = (|| -> Result<(f64, f64)> {
            let psi = ComplexVolumePoint::new(psi0.clone(), &j)?;
            let n = synthetic_nijenhuis(&h0, psi.form());
            let fac = factor_nijenhuis(&n, &psi, &j, &g)?;
            let dh = (fac.h.matrix() - h0.matrix()).abs().max();
            let back = complex_volume_from_three_form(&psi0.im(), &j)?;
            Ok((dh, (back.psi.form().clone() - psi0.clone()).max_norm()))
        })();
        match outcome {
            Ok((a, b)) => {
                h_err = h_err.max(a);
                vol_err = vol_err.max(b);
            }
            Err(e) => {
                errs += 1;
                if first.is_empty() {
                    first = e.to_string();
                }
            }
        }
    }
    Criterion {
        id: 7,
        title: "factorization and complex volume round trips",
        checks: vec![
            cfg.below("c7_hermitian_round_trip", 100, h_err, 1e-10),
            cfg.below("c7_complex_volume_round_trip", 100, vol_err, 1e-12),
            CheckRecord::count("c7_errors", 100, errs).with_note(first),
        ],
    }
}

/// Criteria 1 to 7. The CLI criterion is exercised from the test harness.
pub fn run_criteria(cfg: &Config) -> Vec<Criterion> {
    vec![
        criterion_integrable(cfg),
        criterion_s6(cfg),
        criterion_normal_form(cfg),
        criterion_local_jets(cfg),
        criterion_lee_example(cfg),
        criterion_oracles(cfg),
        criterion_round_trips(cfg),
    ]
}

pub fn run_check_all(cfg: &Config) -> Report {
    let criteria = run_criteria(cfg);
    let mut r = Report::new("check-all", None, cfg.seed, cfg.points);
    for c in &criteria {
        for check in &c.checks {
            r.push(check.clone());
        }
    }
    r.details = serde_json::to_value(
        criteria
            .iter()
            .map(|c| (c.id, c.title, if c.passed() { CheckVerdict::Pass } else { CheckVerdict::Fail }))
            .collect::<Vec<_>>(),
    )
    .expect("details serialize");
    r
}
