//! Built-in geometries and scene files.

mod file;
pub mod octonion;

pub use file::{load_scene, parse_scene, scene_to_toml};
pub use octonion::{cross7, epsilon, octonion_multiply, Octonion};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exprlang::Expr;
use crate::fields::{j_invariance_residual, ChartDomain, FieldK, JField, MetricField};
use crate::pointwise::structure::square_residual;
use crate::pointwise::AlmostComplexPoint;

/// A named geometry on one chart.
#[derive(Debug, Clone)]
pub struct Scene {
    pub id: String,
    pub j: JField,
    pub h: Option<MetricField>,
    pub forms: BTreeMap<String, FieldK>,
    pub notes: String,
    pub nearly_kahler: bool,
}

pub const LOAD_SAMPLES: usize = 200;
pub const LOAD_SEED: u64 = 0x5eed;
pub const LOAD_TOL: f64 = 1e-10;

impl Scene {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn chart(&self) -> &ChartDomain {
        self.j.chart()
    }

    pub fn metric(&self) -> Result<&MetricField> {
        self.h
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("scene `{}` has no metric h", self.id)))
    }

    pub fn form(&self, name: &str) -> Result<&FieldK> {
        self.forms.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.forms.keys().map(|s| s.as_str()).collect();
            Error::Missing(format!(
                "scene `{}` has no form `{name}` (available: {})",
                self.id,
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            ))
        })
    }

    /// Load-time checks on seeded samples: `J² = −I` and, if present, `h`
    /// symmetric positive definite and `J`-invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let pts = self.chart().sample(LOAD_SEED, LOAD_SAMPLES);
        let mut worst_sq = (0.0, Vec::new());
        let mut worst_inv = (0.0, Vec::new());
        for p in &pts {
            let jv = self.j.values(p)?;
            let r = square_residual(n, &jv);
            if !(r <= worst_sq.0) {
                worst_sq = (r, p.clone());
            }
            if let Some(h) = &self.h {
                let hv = h.values(p)?;
                let r = j_invariance_residual(n, &hv, &jv);
                if !(r <= worst_inv.0) {
                    worst_inv = (r, p.clone());
                }
                if h.eval(p).is_err() {
                    return Err(Error::SceneInvariant {
                        check: "h positive definite".into(),
                        point: p.clone(),
                        residual: f64::NAN,
                    });
                }
            }
            for (name, f) in &self.forms {
                f.eval(p).map_err(|e| Error::SceneInvariant {
                    check: format!("form `{name}` evaluates ({e})"),
                    point: p.clone(),
                    residual: f64::NAN,
                })?;
            }
        }
        if !(worst_sq.0 <= LOAD_TOL) {
            return Err(Error::SceneInvariant {
                check: "J^2 = -I".into(),
                point: worst_sq.1,
                residual: worst_sq.0,
            });
        }
        if !(worst_inv.0 <= LOAD_TOL) {
            return Err(Error::SceneInvariant {
                check: "h(J.,J.) = h".into(),
                point: worst_inv.1,
                residual: worst_inv.0,
            });
        }
        Ok(())
    }
}

pub const BUILTIN: [&str; 6] = ["s6", "r4_remark1", "r4_twisted", "r4_flat", "c3_flat", "r6_product"];

pub fn builtin(name: &str) -> Option<Scene> {
    match name {
        "s6" | "s6_octonion" => Some(scene_s6()),
        "r4_remark1" => Some(scene_r4_remark1()),
        "r4_twisted" => Some(scene_r4_twisted()),
        "r4_flat" => Some(scene_r4_flat()),
        "c3_flat" => Some(scene_c3_flat()),
        "r6_product" => Some(scene_r6_product()),
        _ => None,
    }
}

/// A built-in name, or otherwise a scene file path.
pub fn resolve(name_or_path: &str) -> Result<Scene> {
    match builtin(name_or_path) {
        Some(s) => Ok(s),
        None => {
            let path = std::path::Path::new(name_or_path);
            if path.exists() {
                load_scene(path)
            } else {
                Err(Error::Missing(format!(
                    "`{name_or_path}` is neither a built-in scene ({}) nor an existing file",
                    BUILTIN.join(", ")
                )))
            }
        }
    }
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn constant_matrix(m: &[f64]) -> Vec<Expr> {
    m.iter().map(|&v| c(v)).collect()
}

fn flat_entries(n: usize) -> Vec<Expr> {
    (0..n * n).map(|k| c(if k / n == k % n { 1.0 } else { 0.0 })).collect()
}

fn standard_j(chart: &ChartDomain) -> JField {
    JField::constant(chart.clone(), &AlmostComplexPoint::standard(chart.dim()))
}

/// Round `S⁶ ⊂ Im 𝕆` near `e₁`. The chart sends `u ∈ ℝ⁶` to `v/|v|` with
/// `v = e₁ + Σ u_k e_{k+1}`; `J_p X = p·X`.
pub fn scene_s6() -> Scene {
    let n = 6;
    let chart = ChartDomain::cube(n, 0.36);
    let v = |i: usize| if i == 1 { c(1.0) } else { x(i - 2) };
    let norm2 = (0..n).fold(c(1.0), |acc, k| acc + x(k).powi(2));
    let r = norm2.clone().sqrt();
    // J ∂_b = p·∂_b φ projected to coordinates; with w = v × e_{b+1},
    // J^a_b = (w_{a+1} − u_a w_1) / r
    let mut j = Vec::with_capacity(n * n);
    for a in 1..=n {
        for b in 1..=n {
            let w = |k: usize| {
                (1..=7).fold(Expr::zero(), |acc, i| {
                    let e = epsilon(i, b + 1, k);
                    if e == 0.0 {
                        acc
                    } else {
                        acc + c(e) * v(i)
                    }
                })
            };
            let num = w(a + 1) - x(a - 1) * w(1);
            j.push(num / r.clone());
        }
    }
    let mut h = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (lo, hi) = (a.min(b), a.max(b));
            let top = if a == b {
                norm2.clone() - x(lo) * x(hi)
            } else {
                -(x(lo) * x(hi))
            };
            h.push(top / norm2.clone().powi(2));
        }
    }
    Scene {
        id: "s6".into(),
        j: JField::new(chart.clone(), j).unwrap(),
        h: Some(MetricField::new(chart, h).unwrap()),
        forms: BTreeMap::new(),
        notes: "Round S^6 in the imaginary octonions near e1, chart u -> (e1 + sum u_k e_(k+1))/|.|, \
                J_p(X) = p.X with the Fano table e1e2=e3, e1e4=e5, e2e4=e6, e3e4=e7; \
                coordinate k corresponds to e_(k+1) at u = 0."
            .into(),
        nearly_kahler: true,
    }
}

pub fn scene_r4_remark1() -> Scene {
    let chart = ChartDomain::cube(4, 2.0);
    let omega = FieldK::from_terms(
        chart.clone(),
        2,
        vec![(vec![0, 1], (x(0) * x(2)).exp()), (vec![2, 3], c(1.0))],
    )
    .unwrap();
    let mut forms = BTreeMap::new();
    forms.insert("omega".to_string(), omega);
    Scene {
        id: "r4_remark1".into(),
        j: standard_j(&chart),
        h: Some(MetricField::new(chart, flat_entries(4)).unwrap()),
        forms,
        notes: "R^4 with the standard J; omega = exp(x1*x3) dx1^dx2 + dx3^dx4 is nondegenerate with a non-closed Lee form."
            .into(),
        nearly_kahler: false,
    }
}

/// `J = A J₀ A⁻¹` with `A = I + x₁ E₃₄`, metric `A^{-T} A^{-1}`.
pub fn scene_r4_twisted() -> Scene {
    let chart = ChartDomain::cube(4, 1.0);
    let z = || c(0.0);
    let one = || c(1.0);
    let j = vec![
        z(), c(-1.0), z(), z(),
        one(), z(), z(), z(),
        z(), z(), x(0), -(one() + x(0).powi(2)),
        z(), z(), one(), -x(0),
    ];
    let h = vec![
        one(), z(), z(), z(),
        z(), one(), z(), z(),
        z(), z(), one(), -x(0),
        z(), z(), -x(0), one() + x(0).powi(2),
    ];
    Scene {
        id: "r4_twisted".into(),
        j: JField::new(chart.clone(), j).unwrap(),
        h: Some(MetricField::new(chart, h).unwrap()),
        forms: BTreeMap::new(),
        notes: "Shear conjugate of the standard structure, A = I + x1 E34; non-integrable."
            .into(),
        nearly_kahler: false,
    }
}

pub fn scene_r4_flat() -> Scene {
    let chart = ChartDomain::cube(4, 1.0);
    Scene {
        id: "r4_flat".into(),
        j: standard_j(&chart),
        h: Some(MetricField::new(chart, flat_entries(4)).unwrap()),
        forms: BTreeMap::new(),
        notes: "Flat R^4 with the standard J.".into(),
        nearly_kahler: false,
    }
}

pub fn scene_c3_flat() -> Scene {
    let chart = ChartDomain::cube(6, 1.0);
    Scene {
        id: "c3_flat".into(),
        j: standard_j(&chart),
        h: Some(MetricField::new(chart, flat_entries(6)).unwrap()),
        forms: BTreeMap::new(),
        notes: "Flat C^3; integrable control.".into(),
        nearly_kahler: false,
    }
}

pub fn scene_r6_product() -> Scene {
    let chart = ChartDomain::cube(6, 1.0);
    let mut h = flat_entries(6);
    h[2 * 6 + 2] = x(0).exp();
    h[3 * 6 + 3] = x(0).exp();
    Scene {
        id: "r6_product".into(),
        j: standard_j(&chart),
        h: Some(MetricField::new(chart, h).unwrap()),
        forms: BTreeMap::new(),
        notes: "Standard J on R^6 with h = diag(1, 1, e^x1, e^x1, 1, 1); almost Hermitian, not nearly Kaehler."
            .into(),
        nearly_kahler: false,
    }
}

/// A validated scene with constant `J` and optional constant `h`.
pub fn constant_scene(id: &str, chart: ChartDomain, j: &[f64], h: Option<&[f64]>) -> Result<Scene> {
    let s = Scene {
        id: id.into(),
        j: JField::new(chart.clone(), constant_matrix(j))?,
        h: match h {
            Some(h) => Some(MetricField::new(chart, constant_matrix(h))?),
            None => None,
        },
        forms: BTreeMap::new(),
        notes: String::new(),
        nearly_kahler: false,
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in BUILTIN {
            builtin(name).unwrap().validate().unwrap();
        }
        assert_eq!(builtin("s6_octonion").unwrap().id, "s6");
    }

    #[test]
    fn s6_j_at_base_point() {
        let s = scene_s6();
        let j = s.j.eval(&[0.0; 6]).unwrap();
        // ∂_{u1} ~ e2, ∂_{u2} ~ e3
        assert_eq!(j.apply(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn s6_j_matches_octonion_product() {
        let s = scene_s6();
        let pts = s.chart().sample(3, 50);
        for u in pts {
            let r = (1.0 + u.iter().map(|t| t * t).sum::<f64>()).sqrt();
            let mut pv = vec![1.0];
            pv.extend_from_slice(&u);
            let p: Vec<f64> = pv.iter().map(|t| t / r).collect();
            let j = s.j.eval(&u).unwrap();
            for b in 0..6 {
                // tangent image of ∂_b: (e_{b+1} − p p_{b+1}) / r
                let tangent = |coords: &[f64]| -> Vec<f64> {
                    let mut t = vec![0.0; 7];
                    for (k, &ck) in coords.iter().enumerate() {
                        t[k + 1] += ck / r;
                        for m in 0..7 {
                            t[m] -= p[m] * p[k + 1] * ck / r;
                        }
                    }
                    t
                };
                let mut eb = vec![0.0; 6];
                eb[b] = 1.0;
                let x = tangent(&eb);
                let px = cross7(&p, &x);
                let dot: f64 = px.iter().zip(&p).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-12);
                let jx = tangent(&j.apply(&eb));
                for m in 0..7 {
                    assert!((jx[m] - px[m]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn twisted_square() {
        let s = scene_r4_twisted();
        for p in s.chart().sample(1, 50) {
            assert!(square_residual(4, &s.j.values(&p).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn missing_metric_is_reported_on_use() {
        let chart = ChartDomain::cube(4, 1.0);
        let s = constant_scene("bare", chart, AlmostComplexPoint::standard(4).matrix(), None).unwrap();
        assert!(matches!(s.metric(), Err(Error::Missing(_))));
    }
}
