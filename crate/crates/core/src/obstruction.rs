//! The six-dimensional obstruction: complex volume from `dF`, factorization
//! of the Nijenhuis tensor through it, and the cyclic-sum quantity that an
//! almost-Kähler structure would have to annihilate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{d_fundamental_form, exterior_derivative, nijenhuis, FieldK, JField, MetricField};
use crate::pointwise::complex::{pair, HYPOTHESIS_TOL};
use crate::pointwise::{
    hermitian_eigenbasis, project_pq, AlmostComplexPoint, CVec, ComplexForm, ComplexVolumePoint, EigenBasis,
    HermitianFormPoint, KForm, MetricPoint, NijenhuisPoint, UnitaryFrame,
};

fn require_dim6(n: usize) -> Result<()> {
    if n != 6 {
        return Err(Error::DimensionMismatch { expected: 6, got: n });
    }
    Ok(())
}

/// `Ψ = 2i·ρ^{(3,0)}` together with the size of the mixed-type part of `ρ`.
#[derive(Debug, Clone)]
pub struct ComplexVolume {
    pub psi: ComplexVolumePoint,
    /// max coefficient of `ρ^{(2,1)} + ρ^{(1,2)}`
    pub rho_purity: f64,
}

pub fn complex_volume_from_three_form(rho: &KForm, j: &AlmostComplexPoint) -> Result<ComplexVolume> {
    require_dim6(j.dim())?;
    if rho.degree() != 3 {
        return Err(Error::WrongDegree { expected: 3, got: rho.degree() });
    }
    let rc = rho.to_complex();
    let p30 = project_pq(&rc, 3, 0, j)?;
    let mixed = project_pq(&rc, 2, 1, j)? + project_pq(&rc, 1, 2, j)?;
    let psi = p30.scale(Complex64::new(0.0, 2.0));
    Ok(ComplexVolume {
        psi: ComplexVolumePoint::new(psi, j)?,
        rho_purity: mixed.max_norm(),
    })
}

/// `H` with `N = H∘ψ`, plus the hypothesis residuals (relative to `max |H|`).
#[derive(Debug, Clone)]
pub struct Factorization {
    pub h: HermitianFormPoint,
    pub symmetry_residual: f64,
    pub jstar_residual: f64,
    /// `(1,0)`-part of `N(Z_j, Z_k)`, relative to its size
    pub type_residual: f64,
    pub applicable: bool,
    pub eigen: Option<EigenBasis>,
}

pub fn factor_nijenhuis(
    n: &NijenhuisPoint,
    psi: &ComplexVolumePoint,
    j: &AlmostComplexPoint,
    h_ref: &MetricPoint,
) -> Result<Factorization> {
    require_dim6(j.dim())?;
    if psi.is_zero() {
        return Err(Error::Degenerate("complex volume form vanishes".into()));
    }
    let dim = j.dim();
    let base = UnitaryFrame::new(j, h_ref)?;
    let c0 = psi.eval(&base.frame);
    if c0.norm() <= 1e-14 * psi.form().max_norm() {
        return Err(Error::Degenerate("complex volume form vanishes on T^{1,0}".into()));
    }
    // ψ(Z_j, Z_k, ·) = c0·α_m for cyclic (j, k, m), so N(Z_j, Z_k)/c0 = H(α_m, ·)
    let mut v: Vec<CVec> = vec![Vec::new(); 3];
    for (a, b, m) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        v[m] = n
            .apply_complex(&base.frame[a], &base.frame[b])
            .into_iter()
            .map(|z| z / c0)
            .collect();
    }
    let raw = nalgebra::DMatrix::from_fn(dim, dim, |r, s| {
        (0..3).map(|m| 2.0 * (base.frame[m][r] * v[m][s]).re).sum::<f64>()
    });
    let h = HermitianFormPoint::new(raw);
    let scale = h.matrix().abs().max().max(f64::MIN_POSITIVE);
    let vmax = v.iter().flatten().fold(0.0f64, |acc, z| acc.max(z.norm())).max(f64::MIN_POSITIVE);
    let mut t10: f64 = 0.0;
    for vm in &v {
        for a in &base.coframe {
            t10 = t10.max(pair(a, vm).norm());
        }
    }
    let symmetry_residual = h.asymmetry() / scale;
    let jstar_residual = h.jstar_residual(j) / scale;
    let type_residual = t10 / vmax;
    let purity = psi.purity_residual() / psi.form().max_norm();
    let applicable = symmetry_residual < HYPOTHESIS_TOL
        && jstar_residual < HYPOTHESIS_TOL
        && type_residual < HYPOTHESIS_TOL
        && purity < HYPOTHESIS_TOL;
    let eigen = if applicable {
        Some(hermitian_eigenbasis(&h, psi, j, h_ref)?)
    } else {
        None
    };
    Ok(Factorization {
        h,
        symmetry_residual,
        jstar_residual,
        type_residual,
        applicable,
        eigen,
    })
}

/// `W(X,Y,Z) = g(JN(Y,Z),X) + g(JN(Z,X),Y) + g(JN(X,Y),Z)` on coordinate vectors.
pub fn obstruction_component(g: &MetricPoint, j: &AlmostComplexPoint, n: &NijenhuisPoint, x: usize, y: usize, z: usize) -> f64 {
    let d = j.dim();
    let e = |i: usize| -> Vec<f64> { (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    let term = |a: usize, b: usize, c: usize| g.inner(&j.apply(&n.apply(&e(a), &e(b))), &e(c));
    term(y, z, x) + term(z, x, y) + term(x, y, z)
}

pub fn almost_kahler_obstruction(g: &MetricPoint, j: &AlmostComplexPoint, n: &NijenhuisPoint) -> Result<KForm> {
    let residual = g.j_invariance_residual(j);
    if residual > 1e-10 * g.matrix().abs().max() {
        return Err(Error::NotJInvariant { residual });
    }
    Ok(KForm::from_fn(j.dim(), 3, |t| obstruction_component(g, j, n, t[0], t[1], t[2])))
}

/// Bilinear extension of `W` to complex vectors.
pub fn obstruction_on(w: &KForm, vs: &[CVec]) -> Complex64 {
    w.to_complex().eval(vs)
}

/// `max |h(JN(X,Y),Z) − ⅓dF(X,Y,Z)|` over coordinate triples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NkResidual {
    pub residual: f64,
    /// max coefficient of `dF`
    pub df_scale: f64,
}

pub fn check_nk_identity(j: &JField, h: &MetricField, p: &[f64]) -> Result<NkResidual> {
    let d = j.dim();
    let jp = j.eval(p)?;
    let hp = h.eval(p)?;
    let np = nijenhuis(j, p)?;
    let df = d_fundamental_form(h, j, p)?;
    let mut worst: f64 = 0.0;
    let e = |i: usize| -> Vec<f64> { (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    for x in 0..d {
        for y in 0..d {
            let jn = jp.apply(&np.apply(&e(x), &e(y)));
            for z in 0..d {
                let lhs = hp.inner(&jn, &e(z));
                let rhs = df.get(&[x, y, z]) / 3.0;
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(NkResidual {
        residual: worst,
        df_scale: df.max_norm(),
    })
}

pub fn d_omega_30_norm(omega: &FieldK, j: &JField, p: &[f64]) -> Result<f64> {
    require_dim6(j.dim())?;
    if omega.degree() != 2 {
        return Err(Error::WrongDegree { expected: 2, got: omega.degree() });
    }
    let dw = exterior_derivative(omega, p)?;
    Ok(project_pq(&dw.to_complex(), 3, 0, &j.eval(p)?)?.max_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NoCompatibleSymplecticForm,
    Inconclusive,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NoCompatibleSymplecticForm => "NO_COMPATIBLE_SYMPLECTIC_FORM",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::NotApplicable => "NOT_APPLICABLE",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub nijenhuis_max: f64,
    pub rho_purity: Option<f64>,
    pub psi_purity: Option<f64>,
    pub symmetry: Option<f64>,
    pub jstar_invariance: Option<f64>,
    pub type_10: Option<f64>,
    pub nk_identity: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub scene: String,
    pub point: Vec<f64>,
    pub verdict: Verdict,
    pub raw_eigenvalues: Option<Vec<f64>>,
    pub normalized_eigenvalues: Option<Vec<f64>>,
    pub quasi_definite: Option<bool>,
    pub rank: Option<usize>,
    /// `W(Z₁, Z₂, Z₃)` for the reference metric in the ψ-normalized frame
    pub obstruction: Option<ComplexValue>,
    pub residuals: Residuals,
    pub hypothesis_tol: f64,
    pub sign_tol: Option<f64>,
    pub reason: String,
}

/// Pointwise certificate from already evaluated data.
pub fn certify_point(
    scene: &str,
    point: &[f64],
    j: &AlmostComplexPoint,
    h: &MetricPoint,
    n: &NijenhuisPoint,
    psi: Option<(&ComplexVolumePoint, f64)>,
) -> Certificate {
    let mut cert = Certificate {
        scene: scene.to_string(),
        point: point.to_vec(),
        verdict: Verdict::NotApplicable,
        raw_eigenvalues: None,
        normalized_eigenvalues: None,
        quasi_definite: None,
        rank: None,
        obstruction: None,
        residuals: Residuals {
            nijenhuis_max: n.max_component(),
            rho_purity: None,
            psi_purity: None,
            symmetry: None,
            jstar_invariance: None,
            type_10: None,
            nk_identity: None,
        },
        hypothesis_tol: HYPOTHESIS_TOL,
        sign_tol: None,
        reason: String::new(),
    };
    let metric_scale = h.matrix().abs().max();
    if n.max_component() < 1e-9 * metric_scale {
        cert.verdict = Verdict::Inconclusive;
        cert.reason = "Nijenhuis tensor vanishes at the point".into();
        return cert;
    }
    let Some((psi, rho_purity)) = psi else {
        cert.reason = "no complex volume form available".into();
        return cert;
    };
    let psi_scale = psi.form().max_norm();
    cert.residuals.rho_purity = Some(rho_purity / psi_scale.max(f64::MIN_POSITIVE));
    cert.residuals.psi_purity = Some(psi.purity_residual() / psi_scale.max(f64::MIN_POSITIVE));
    if psi_scale < 1e-12 * metric_scale {
        cert.reason = "complex volume form vanishes".into();
        return cert;
    }
    if rho_purity > HYPOTHESIS_TOL * psi_scale {
        cert.reason = "three-form is not of type (3,0)+(0,3)".into();
        return cert;
    }
    let fac = match factor_nijenhuis(n, psi, j, h) {
        Ok(f) => f,
        Err(e) => {
            cert.reason = format!("factorization failed: {e}");
            return cert;
        }
    };
    cert.residuals.symmetry = Some(fac.symmetry_residual);
    cert.residuals.jstar_invariance = Some(fac.jstar_residual);
    cert.residuals.type_10 = Some(fac.type_residual);
    let Some(eig) = fac.eigen else {
        cert.reason = "factorization residuals exceed tolerance".into();
        return cert;
    };
    cert.raw_eigenvalues = Some(eig.raw.clone());
    cert.normalized_eigenvalues = Some(eig.normalized.clone());
    cert.quasi_definite = Some(eig.quasi_definite);
    cert.rank = Some(eig.rank);
    cert.sign_tol = Some(eig.sign_tol);
    if let Ok(w) = almost_kahler_obstruction(h, j, n) {
        cert.obstruction = Some(obstruction_on(&w, &eig.frame).into());
    }
    let tol = eig.sign_tol;
    let nonneg = eig.normalized.iter().all(|&l| l >= -tol);
    let positive = eig.normalized.iter().any(|&l| l > tol);
    if nonneg && positive {
        cert.verdict = Verdict::NoCompatibleSymplecticForm;
        cert.reason = "eigenvalues are nonnegative with at least one positive".into();
    } else {
        cert.reason = "eigenvalues are not quasi-definite with a positive value".into();
    }
    cert
}

/// Full pipeline at `p`.
pub fn no_symplectic_certificate(scene: &str, j: &JField, h: &MetricField, p: &[f64]) -> Certificate {
    let fail = |reason: String| Certificate {
        scene: scene.to_string(),
        point: p.to_vec(),
        verdict: Verdict::NotApplicable,
        raw_eigenvalues: None,
        normalized_eigenvalues: None,
        quasi_definite: None,
        rank: None,
        obstruction: None,
        residuals: Residuals {
            nijenhuis_max: f64::NAN,
            rho_purity: None,
            psi_purity: None,
            symmetry: None,
            jstar_invariance: None,
            type_10: None,
            nk_identity: None,
        },
        hypothesis_tol: HYPOTHESIS_TOL,
        sign_tol: None,
        reason,
    };
    if j.dim() != 6 {
        return fail(format!("dimension {} is not 6", j.dim()));
    }
    let eval = || -> Result<(AlmostComplexPoint, MetricPoint, NijenhuisPoint, KForm, f64)> {
        let jp = j.eval(p)?;
        let hp = h.eval(p)?;
        let np = nijenhuis(j, p)?;
        let df = d_fundamental_form(h, j, p)?;
        let nk = check_nk_identity(j, h, p)?.residual;
        Ok((jp, hp, np, df, nk))
    };
    let (jp, hp, np, df, nk) = match eval() {
        Ok(v) => v,
        Err(e) => return fail(format!("evaluation failed: {e}")),
    };
    let vol = complex_volume_from_three_form(&df, &jp);
    let mut cert = match &vol {
        Ok(v) => certify_point(scene, p, &jp, &hp, &np, Some((&v.psi, v.rho_purity))),
        Err(_) => certify_point(scene, p, &jp, &hp, &np, None),
    };
    cert.residuals.nk_identity = Some(nk);
    cert
}

/// `N = H∘ψ` for a synthetic Hermitian form.
pub fn synthetic_nijenhuis(h: &HermitianFormPoint, psi: &ComplexForm) -> NijenhuisPoint {
    NijenhuisPoint::from_hermitian(h, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{scene_c3_flat, scene_r6_product, scene_s6};
    use crate::pointwise::wedge_all;

    fn flat() -> (AlmostComplexPoint, MetricPoint, UnitaryFrame) {
        let j = AlmostComplexPoint::standard(6);
        let g = MetricPoint::flat(6);
        let f = UnitaryFrame::new(&j, &g).unwrap();
        (j, g, f)
    }

    #[test]
    fn zero_three_form() {
        let (j, _, _) = flat();
        let v = complex_volume_from_three_form(&KForm::zero(6, 3), &j).unwrap();
        assert!(v.psi.is_zero());
        assert_eq!(v.rho_purity, 0.0);
    }

    #[test]
    fn volume_round_trip() {
        let (j, _, f) = flat();
        let psi0 = f.volume();
        let v = complex_volume_from_three_form(&psi0.im(), &j).unwrap();
        assert!((v.psi.form().clone() - psi0).max_norm() < 1e-12);
        let mixed = complex_volume_from_three_form(&KForm::monomial(6, &[0, 1, 2]), &j).unwrap();
        assert!(mixed.rho_purity > 0.1);
        assert!(complex_volume_from_three_form(&KForm::zero(4, 3), &AlmostComplexPoint::standard(4)).is_err());
    }

    #[test]
    fn synthetic_factorization() {
        let (j, g, f) = flat();
        let h0 = HermitianFormPoint::from_diagonal(&[1.0, 2.0, 3.0], &f.frame);
        let psi = ComplexVolumePoint::new(f.volume(), &j).unwrap();
        let n = synthetic_nijenhuis(&h0, psi.form());
        let fac = factor_nijenhuis(&n, &psi, &j, &g).unwrap();
        assert!(fac.symmetry_residual < 1e-12 && fac.jstar_residual < 1e-12 && fac.type_residual < 1e-12);
        let e = fac.eigen.unwrap();
        for (l, want) in e.normalized.iter().zip([3.0, 2.0, 1.0]) {
            assert!((l - want).abs() < 1e-12);
        }
        // N = (1/6) h* ∘ Ψ
        let hstar = HermitianFormPoint::new(g.inverse().clone() / 6.0);
        let n = synthetic_nijenhuis(&hstar, psi.form());
        let e = factor_nijenhuis(&n, &psi, &j, &g).unwrap().eigen.unwrap();
        for l in e.normalized {
            assert!((l - 1.0 / 6.0).abs() < 1e-13);
        }
    }

    #[test]
    fn normal_form_obstruction() {
        let (j, g, f) = flat();
        let lambda = [0.7, 0.2, 1.3];
        let h = HermitianFormPoint::from_diagonal(&lambda, &f.frame);
        let n = synthetic_nijenhuis(&h, &wedge_all(&f.coframe));
        let w = almost_kahler_obstruction(&g, &j, &n).unwrap();
        let val = obstruction_on(&w, &f.frame);
        let sum: f64 = lambda.iter().sum();
        assert!((val - Complex64::new(0.0, -sum)).norm() < 1e-12);
        let conj: Vec<CVec> = f.frame.iter().map(|z| z.iter().map(|c| c.conj()).collect()).collect();
        assert!((obstruction_on(&w, &conj) - Complex64::new(0.0, sum)).norm() < 1e-12);
    }

    #[test]
    fn obstruction_is_alternating() {
        let (j, g, f) = flat();
        let h = HermitianFormPoint::from_diagonal(&[0.3, 1.0, 2.0], &f.frame);
        let n = synthetic_nijenhuis(&h, &f.volume());
        for (x, y, z) in [(0, 2, 4), (1, 3, 5), (0, 1, 3)] {
            let w = obstruction_component(&g, &j, &n, x, y, z);
            assert!((w + obstruction_component(&g, &j, &n, y, x, z)).abs() < 1e-14);
            assert!((w - obstruction_component(&g, &j, &n, y, z, x)).abs() < 1e-14);
        }
        assert_eq!(almost_kahler_obstruction(&g, &j, &NijenhuisPoint::zero(6)).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn s6_pipeline() {
        let s = scene_s6();
        let h = s.h.as_ref().unwrap();
        for p in s.chart().sample(11, 10) {
            let nk = check_nk_identity(&s.j, h, &p).unwrap();
            assert!(nk.residual < 1e-8, "{}", nk.residual);
            let c = no_symplectic_certificate("s6", &s.j, h, &p);
            assert_eq!(c.verdict, Verdict::NoCompatibleSymplecticForm, "{}", c.reason);
            let raw = c.raw_eigenvalues.unwrap();
            for l in &raw {
                assert!((l - 1.0 / 6.0).abs() < 1e-9, "{raw:?}");
            }
        }
    }

    #[test]
    fn controls() {
        let s = scene_c3_flat();
        let c = no_symplectic_certificate("c3_flat", &s.j, s.h.as_ref().unwrap(), &[0.1; 6]);
        assert_eq!(c.verdict, Verdict::Inconclusive);
        let s = scene_r6_product();
        let p = [0.3, -0.2, 0.1, 0.5, -0.4, 0.2];
        assert!(check_nk_identity(&s.j, s.h.as_ref().unwrap(), &p).unwrap().residual > 1e-2);
    }

    #[test]
    fn degenerate_synthetic() {
        let (j, g, f) = flat();
        let h = HermitianFormPoint::from_diagonal(&[1.0, 1.0, 0.0], &f.frame);
        let psi = ComplexVolumePoint::new(f.volume(), &j).unwrap();
        let n = synthetic_nijenhuis(&h, psi.form());
        let c = certify_point("synthetic", &[0.0; 6], &j, &g, &n, Some((&psi, 0.0)));
        assert_eq!(c.verdict, Verdict::NoCompatibleSymplecticForm);
        assert_eq!(c.rank, Some(2));
        assert_eq!(c.quasi_definite, Some(true));
    }

    #[test]
    fn d_omega_30() {
        let s = scene_s6();
        let h = s.h.as_ref().unwrap();
        let f = crate::fields::fundamental_form_field(h, &s.j);
        assert!(d_omega_30_norm(&f, &s.j, &[0.05; 6]).unwrap() > 0.1);
        let c = scene_c3_flat();
        let closed = crate::fields::fundamental_form_field(c.h.as_ref().unwrap(), &c.j);
        assert!(d_omega_30_norm(&closed, &c.j, &[0.1; 6]).unwrap() < 1e-15);
    }
}
