//! Four-dimensional jet machinery: symbols of `d⁻`, `P = d⁻δ`, `L_h` and
//! `dδ`, and the construction of a 2-jet whose `dδ` is a positive multiple
//! of the fundamental form at the base point.
//!
//! Jets are realized by polynomials, so `d⁻α` vanishes at the base point
//! only; no neighbourhood-scale correction is attempted.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::{Expr, Jet1, Jet2, Real};
use crate::fields::{
    codifferential_jets, d_values, fundamental_form, lee_form_of_metric, nijenhuis, JField, MetricField,
};
use crate::linalg;
use crate::pointwise::forms::basis;
use crate::pointwise::{one_form, split_two_form, wedge, AlmostComplexPoint, KForm, MetricPoint, NijenhuisPoint};

fn require_dim4(n: usize) -> Result<()> {
    if n != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: n });
    }
    Ok(())
}

/// `σ(d⁻)_ξ(α) = ½(ξ∧α − J*ξ∧J*α)`.
pub fn symbol_dminus(j: &AlmostComplexPoint, xi: &[f64], alpha: &[f64]) -> KForm {
    let a = wedge(&one_form(xi), &one_form(alpha)).expect("1 + 1 <= dim");
    let b = wedge(&one_form(&j.jstar(xi)), &one_form(&j.jstar(alpha))).expect("1 + 1 <= dim");
    (a - b).scale(0.5)
}

/// The 6×4 matrix of `α ↦ σ(d⁻)_ξ(α)` on coordinate covectors.
pub fn symbol_dminus_matrix(j: &AlmostComplexPoint, xi: &[f64]) -> DMatrix<f64> {
    let n = j.dim();
    let cols: Vec<KForm> = (0..n)
        .map(|a| {
            let e: Vec<f64> = (0..n).map(|k| if k == a { 1.0 } else { 0.0 }).collect();
            symbol_dminus(j, xi, &e)
        })
        .collect();
    DMatrix::from_fn(basis(n, 2).len(), n, |r, c| cols[c].coeffs()[r])
}

pub fn symbol_dminus_rank(j: &AlmostComplexPoint, xi: &[f64]) -> Result<usize> {
    require_dim4(j.dim())?;
    if xi.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("ξ = 0".into()));
    }
    Ok(linalg::rank(&symbol_dminus_matrix(j, xi), 1e-10))
}

/// `σ(P)_ξ(Φ) = −|ξ|²Φ`.
pub fn symbol_p(h: &MetricPoint, xi: &[f64], phi: &KForm) -> KForm {
    phi.scale(-h.covector_norm_sq(xi))
}

/// `σ_ξ(L_h)(Φ) = −Φ(ξ♯, Jθ♯) + 2 Σ_i Φ(JN(ξ♯, e_i), e_i)`.
pub fn symbol_lh(
    h: &MetricPoint,
    j: &AlmostComplexPoint,
    n: &NijenhuisPoint,
    theta: &[f64],
    xi: &[f64],
    phi: &KForm,
) -> f64 {
    let xs = h.sharp(xi);
    let jt = j.apply(&h.sharp(theta));
    let mut v = -phi.eval(&[xs.clone(), jt]);
    for i in 0..j.dim() {
        let e = h.onb_vector(i);
        let jn = j.apply(&n.apply(&xs, &e));
        v += 2.0 * phi.eval(&[jn, e]);
    }
    v
}

/// Orthonormal basis of `Λ^{J,−}` (Gram–Schmidt of the projections of
/// `dx1∧dx3`, `dx1∧dx4`, falling back to `dx2∧dx3`).
pub fn anti_invariant_frame(j: &AlmostComplexPoint, h: &MetricPoint) -> Result<[KForm; 2]> {
    require_dim4(j.dim())?;
    let mut out: Vec<KForm> = Vec::new();
    for idx in [[0, 2], [0, 3], [1, 2]] {
        if out.len() == 2 {
            break;
        }
        let (_, mut v) = split_two_form(&KForm::monomial(4, &idx), j)?;
        for b in &out {
            let c = h.form_inner(&v, b);
            v = v - b.scale(c);
        }
        let nv = h.form_inner(&v, &v).sqrt();
        if nv > 1e-8 {
            out.push(v.scale(1.0 / nv));
        }
    }
    match <[KForm; 2]>::try_from(out) {
        Ok(f) => Ok(f),
        Err(_) => Err(Error::Degenerate("no anti-invariant frame".into())),
    }
}

/// Orthonormal basis of the primitive 2-forms, the complement of `F`.
pub fn primitive_basis(h: &MetricPoint, f: &KForm) -> Vec<KForm> {
    let n = h.dim();
    let fnorm = h.form_inner(f, f).sqrt();
    let mut out = vec![f.scale(1.0 / fnorm)];
    for idx in basis(n, 2) {
        let mut v = KForm::monomial(n, idx);
        for _ in 0..2 {
            for b in &out {
                let c = h.form_inner(&v, b);
                v = v - b.scale(c);
            }
        }
        let nv = h.form_inner(&v, &v).sqrt();
        if nv > 1e-8 {
            out.push(v.scale(1.0 / nv));
        }
    }
    out.remove(0);
    out
}

/// Coordinates of the primitive part of `x` in [`primitive_basis`].
pub fn primitive_coords(h: &MetricPoint, prim: &[KForm], x: &KForm) -> Vec<f64> {
    prim.iter().map(|b| h.form_inner(x, b)).collect()
}

/// Symmetric pairs `(a, b)`, `a ≤ b`, in lex order.
pub fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

/// `−½(ξ∧ι_{η♯}Φ + η∧ι_{ξ♯}Φ)`.
fn polarized(h: &MetricPoint, xi: &[f64], eta: &[f64], phi: &KForm) -> KForm {
    let a = wedge(&one_form(xi), &phi.interior(&h.sharp(eta)).unwrap()).unwrap();
    let b = wedge(&one_form(eta), &phi.interior(&h.sharp(xi)).unwrap()).unwrap();
    (a + b).scale(-0.5)
}

/// `a2` as coefficients on `(dx_a ⊙ dx_b) ⊗ E_s` for symmetric pairs and the
/// anti-invariant frame. `dx_a ⊙ dx_b` has entries `S_ab = S_ba = 1`.
pub type SymmetricCoeffs = Vec<[f64; 2]>;

/// Linear extension of `−ξ∧ι_{ξ♯}Φ` over `a2`, before projection.
pub fn symbol_ddelta_full(h: &MetricPoint, frame: &[KForm; 2], a2: &[[f64; 2]]) -> KForm {
    let n = h.dim();
    let mut acc = KForm::zero(n, 2);
    let e = |i: usize| -> Vec<f64> { (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    for (&(a, b), c) in sym_pairs(n).iter().zip(a2) {
        let phi = frame[0].scale(c[0]) + frame[1].scale(c[1]);
        if phi.max_norm() == 0.0 {
            continue;
        }
        let mut term = polarized(h, &e(a), &e(b), &phi);
        if a != b {
            term = term.scale(2.0);
        }
        acc = acc + term;
    }
    acc
}

/// Primitive part of the polarized symbol of `dδ` applied to `a2`.
pub fn polarized_symbol_ddelta(h: &MetricPoint, j: &AlmostComplexPoint, a2: &[[f64; 2]]) -> Result<KForm> {
    require_dim4(j.dim())?;
    let frame = anti_invariant_frame(j, h)?;
    let f = fundamental_form_point(h, j);
    let full = symbol_ddelta_full(h, &frame, a2);
    Ok(primitive_part(h, &f, &full))
}

pub fn primitive_part(h: &MetricPoint, f: &KForm, x: &KForm) -> KForm {
    let c = h.form_inner(x, f) / h.form_inner(f, f);
    x.clone() - f.scale(c)
}

/// `F(X, Y) = h(JX, Y)` at a point.
pub fn fundamental_form_point(h: &MetricPoint, j: &AlmostComplexPoint) -> KForm {
    let n = j.dim();
    let w = j.to_dmatrix().transpose() * h.matrix();
    KForm::from_fn(n, 2, |ab| w[(ab[0], ab[1])])
}

/// The 5×20 matrix of [`polarized_symbol_ddelta`] in an orthonormal primitive basis.
pub fn polarized_symbol_matrix(h: &MetricPoint, j: &AlmostComplexPoint) -> Result<DMatrix<f64>> {
    require_dim4(j.dim())?;
    let frame = anti_invariant_frame(j, h)?;
    let f = fundamental_form_point(h, j);
    let prim = primitive_basis(h, &f);
    let pairs = sym_pairs(4);
    let mut cols = Vec::with_capacity(2 * pairs.len());
    for k in 0..pairs.len() {
        for s in 0..2 {
            let mut a2 = vec![[0.0; 2]; pairs.len()];
            a2[k][s] = 1.0;
            cols.push(primitive_coords(h, &prim, &symbol_ddelta_full(h, &frame, &a2)));
        }
    }
    Ok(DMatrix::from_fn(prim.len(), cols.len(), |r, c| cols[c][r]))
}

/// A 2-jet of a `J`-anti-invariant 2-form at `p`, in the frame chosen at `p`.
#[derive(Debug, Clone, Serialize)]
pub struct Jet2AntiInv {
    pub point: Vec<f64>,
    pub a0: [f64; 2],
    /// `a1[a]` multiplies `(x_a − p_a)`
    pub a1: Vec<[f64; 2]>,
    /// indexed by [`sym_pairs`]
    pub a2: SymmetricCoeffs,
    #[serde(skip)]
    pub frame: [KForm; 2],
}

impl Jet2AntiInv {
    pub fn zero(j: &AlmostComplexPoint, h: &MetricPoint, p: &[f64]) -> Result<Self> {
        Ok(Jet2AntiInv {
            point: p.to_vec(),
            a0: [0.0; 2],
            a1: vec![[0.0; 2]; 4],
            a2: vec![[0.0; 2]; sym_pairs(4).len()],
            frame: anti_invariant_frame(j, h)?,
        })
    }

    /// Frame coefficient `s` as a polynomial jet at `x`.
    fn coefficient(&self, s: usize, x: &[f64]) -> Jet2 {
        let n = x.len();
        let y: Vec<f64> = x.iter().zip(&self.point).map(|(a, b)| a - b).collect();
        let mut hess = vec![0.0; n * n];
        for (&(a, b), c) in sym_pairs(n).iter().zip(&self.a2) {
            hess[a * n + b] = c[s];
            hess[b * n + a] = c[s];
        }
        let mut grad: Vec<f64> = self.a1.iter().map(|c| c[s]).collect();
        let mut value = self.a0[s];
        for a in 0..n {
            value += self.a1[a][s] * y[a];
            for b in 0..n {
                grad[a] += hess[a * n + b] * y[b];
                value += 0.5 * hess[a * n + b] * y[a] * y[b];
            }
        }
        Jet2 { value, grad, hess }
    }

    /// Jets at `x` of `Φ = π⁻_{J(x)}(Σ_s c_s(x) E_s)`.
    pub fn realize(&self, j: &JField, x: &[f64]) -> Result<Vec<Jet2>> {
        let n = j.dim();
        let jj = j.jets(x)?;
        let cs: Vec<Jet2> = (0..2).map(|s| self.coefficient(s, x)).collect();
        let zero = Jet2::constant(n, 0.0);
        Ok(basis(n, 2)
            .iter()
            .map(|ab| {
                let (a, b) = (ab[0], ab[1]);
                let mut acc = zero.clone();
                for s in 0..2 {
                    let e = &self.frame[s];
                    // ½(E_ab − Σ_cd J^c_a J^d_b E_cd)
                    let mut turned = zero.clone();
                    for c in 0..n {
                        for d in 0..n {
                            let ecd = e.get(&[c, d]);
                            if ecd == 0.0 {
                                continue;
                            }
                            turned = turned + (jj[c * n + a].clone() * jj[d * n + b].clone()).scale(ecd);
                        }
                    }
                    let proj = (zero.lift(e.get(&[a, b])) - turned).scale(0.5);
                    acc = acc + cs[s].clone() * proj;
                }
                acc
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct JetOperatorValue {
    pub ddelta: KForm,
    pub p_val: KForm,
    pub l_val: f64,
    /// `δΦ` at the evaluation point
    pub alpha: Vec<f64>,
}

/// `dδΦ`, its anti-invariant part and `h(dδΦ, F)` at `x`.
pub fn evaluate_jet_operator_at(h: &MetricField, j: &JField, e: &Jet2AntiInv, x: &[f64]) -> Result<JetOperatorValue> {
    require_dim4(j.dim())?;
    let n = 4;
    let phi = e.realize(j, x)?;
    let delta: Vec<Jet1> = codifferential_jets(n, &h.jets(x)?, &phi)?;
    let ddelta = d_values(n, 1, &delta);
    let jp = j.eval(x)?;
    let hp = h.eval(x)?;
    let (_, p_val) = split_two_form(&ddelta, &jp)?;
    let f = fundamental_form(h, j, x)?;
    Ok(JetOperatorValue {
        l_val: hp.form_inner(&ddelta, &f),
        p_val,
        alpha: delta.iter().map(|d| d.value).collect(),
        ddelta,
    })
}

pub fn evaluate_jet_operator(h: &MetricField, j: &JField, e: &Jet2AntiInv) -> Result<JetOperatorValue> {
    let jp = j.eval(&e.point)?;
    for b in &e.frame {
        let (plus, _) = split_two_form(b, &jp)?;
        if plus.max_norm() > 1e-10 {
            return Err(Error::Hypothesis(
                "jet frame is not anti-invariant for J at its base point".into(),
            ));
        }
    }
    evaluate_jet_operator_at(h, j, e, &e.point)
}

pub const CONFORMAL_BUDGET: usize = 64;
pub const SAMPLE_BUDGET: usize = 256;
pub const L_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GermResult {
    pub point: Vec<f64>,
    pub jet: Jet2AntiInv,
    /// `α = δΦ` at the base point
    pub alpha: Vec<f64>,
    pub dminus_alpha_norm: f64,
    /// coefficient of `dα∧dα` on the J-oriented coordinate volume
    pub dalpha_squared: f64,
    pub l_value: f64,
    /// `v_h` on the J-oriented coordinate frame
    pub volume: f64,
    /// `|dα∧dα − ½L²v_h| / |dα∧dα|`
    pub identity_error: f64,
    /// `c` with `f = Σ c_i (x_i − p_i)`, if a conformal change was needed
    pub conformal: Option<Vec<f64>>,
    pub conformal_attempts: usize,
    pub samples_used: usize,
    pub positivity_radius: f64,
    pub success: bool,
}

impl GermResult {
    pub fn check(&self) -> bool {
        self.dminus_alpha_norm < 1e-9 && self.dalpha_squared > 0.0 && self.identity_error < 1e-8
    }
}

fn symbol_lh_norm(h: &MetricPoint, j: &AlmostComplexPoint, n: &NijenhuisPoint, theta: &[f64]) -> Result<f64> {
    let frame = anti_invariant_frame(j, h)?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        let xi: Vec<f64> = (0..4).map(|k| if k == a { 1.0 } else { 0.0 }).collect();
        for b in &frame {
            worst = worst.max(symbol_lh(h, j, n, theta, &xi, b).abs());
        }
    }
    Ok(worst)
}

/// A conformal factor usable at `p` needs `f(p) = 0` and `df_p ≠ 0`.
pub fn check_conformal_factor(f: &Expr, p: &[f64]) -> Result<()> {
    let jet = f.eval_jet(p)?;
    if jet.value.abs() > 1e-12 {
        return Err(Error::Hypothesis(format!("f(p) = {:e}, expected 0", jet.value)));
    }
    if jet.grad.iter().all(|g| g.abs() < 1e-12) {
        return Err(Error::Hypothesis("df vanishes at p".into()));
    }
    Ok(())
}

fn linear_form(c: &[f64], p: &[f64]) -> Expr {
    c.iter().zip(p).enumerate().fold(Expr::zero(), |acc, (i, (&ci, &pi))| {
        acc + Expr::constant(ci) * (Expr::var(i) - Expr::constant(pi))
    })
}

pub fn build_infinitesimal_solution(j: &JField, h: &MetricField, p: &[f64], seed: u64) -> Result<GermResult> {
    require_dim4(j.dim())?;
    j.chart().check(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jp = j.eval(p)?;

    // (i) make the first-order part of L_h nonzero
    let theta = lee_form_of_metric(h, j, p)?.theta;
    let np = nijenhuis(j, p)?;
    let mut metric = h.clone();
    let mut conformal = None;
    let mut conformal_attempts = 0;
    if symbol_lh_norm(&h.eval(p)?, &jp, &np, &theta)? < 1e-12 {
        loop {
            if conformal_attempts == CONFORMAL_BUDGET {
                return Err(Error::SearchExhausted(format!(
                    "no conformal direction in {CONFORMAL_BUDGET} attempts makes the L_h symbol nonzero"
                )));
            }
            conformal_attempts += 1;
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            if c.iter().map(|x| x * x).sum::<f64>() < 1e-2 {
                continue;
            }
            let f = linear_form(&c, p);
            check_conformal_factor(&f, p)?;
            let candidate = h.conformal(&f);
            let th = lee_form_of_metric(&candidate, j, p)?.theta;
            if symbol_lh_norm(&candidate.eval(p)?, &jp, &np, &th)? > 1e-6 {
                metric = candidate;
                conformal = Some(c);
                break;
            }
        }
    }
    let hp = metric.eval(p)?;
    let f = fundamental_form_point(&hp, &jp);
    let prim = primitive_basis(&hp, &f);
    let sym = polarized_symbol_matrix(&hp, &jp)?;

    // (ii) lower-order data with L_h(e) ≠ 0
    let mut e = Jet2AntiInv::zero(&jp, &hp, p)?;
    let mut samples_used = 0;
    let base = loop {
        if samples_used == SAMPLE_BUDGET {
            return Err(Error::SearchExhausted(format!(
                "L_h(e) stayed below {L_THRESHOLD:e} for {SAMPLE_BUDGET} samples of (a1, a0)"
            )));
        }
        samples_used += 1;
        e.a0 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        for a1 in e.a1.iter_mut() {
            *a1 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        }
        let v = evaluate_jet_operator(&metric, j, &e)?;
        if v.l_val.abs() > L_THRESHOLD {
            break v;
        }
    };

    // (iii) cancel the primitive part with a2
    let rhs: Vec<f64> = primitive_coords(&hp, &prim, &base.ddelta).iter().map(|v| -v).collect();
    let a2 = linalg::least_squares(&sym, &rhs, 1e-14)
        .ok_or_else(|| Error::Degenerate("polarized symbol solve failed".into()))?;
    for (k, c) in e.a2.iter_mut().enumerate() {
        *c = [a2[2 * k], a2[2 * k + 1]];
    }

    // (iv) verify at p
    let v = evaluate_jet_operator(&metric, j, &e)?;
    let orient = jp.orientation_sign();
    let dalpha_squared = wedge(&v.ddelta, &v.ddelta)?.coeffs()[0] * orient;
    let volume = hp.volume(orient);
    let predicted = 0.5 * v.l_val * v.l_val * volume;
    let identity_error = (dalpha_squared - predicted).abs() / dalpha_squared.abs().max(f64::MIN_POSITIVE);
    let dminus_alpha_norm = v.p_val.max_norm();

    // (v) radius on which dα∧dα stays positive
    let positivity_radius = positivity_radius(&metric, j, &e, &jp)?;

    let mut out = GermResult {
        point: p.to_vec(),
        jet: e,
        alpha: v.alpha,
        dminus_alpha_norm,
        dalpha_squared,
        l_value: v.l_val,
        volume,
        identity_error,
        conformal,
        conformal_attempts,
        samples_used,
        positivity_radius,
        success: false,
    };
    out.success = out.check();
    Ok(out)
}

fn grid_directions() -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for a in 0..4 {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; 4];
            d[a] = s;
            dirs.push(d);
        }
    }
    for mask in 0..16u32 {
        dirs.push((0..4).map(|k| if mask & (1 << k) != 0 { -0.5 } else { 0.5 }).collect());
    }
    dirs
}

fn positivity_radius(h: &MetricField, j: &JField, e: &Jet2AntiInv, jp: &AlmostComplexPoint) -> Result<f64> {
    let p = &e.point;
    let orient = jp.orientation_sign();
    let mut radius = 0.0;
    let mut r = 1e-3;
    let dirs = grid_directions();
    while r < 2.0 {
        for d in &dirs {
            let x: Vec<f64> = p.iter().zip(d).map(|(a, b)| a + r * b).collect();
            if !j.chart().contains(&x) {
                return Ok(radius);
            }
            let v = evaluate_jet_operator_at(h, j, e, &x)?;
            if !(wedge(&v.ddelta, &v.ddelta)?.coeffs()[0] * orient > 0.0) {
                return Ok(radius);
            }
        }
        radius = r;
        r *= 2.0;
    }
    Ok(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{scene_r4_flat, scene_r4_twisted};
    use crate::fields::ChartDomain;
    use crate::random::{nonzero_covector, random_j, random_metric};

    fn j0() -> AlmostComplexPoint {
        AlmostComplexPoint::standard(4)
    }

    fn form(terms: &[(&[usize], f64)]) -> KForm {
        let mut f = KForm::zero(4, 2);
        for (idx, c) in terms {
            f.add_at(idx, *c);
        }
        f
    }

    fn dx(a: usize) -> Vec<f64> {
        (0..4).map(|k| if k == a { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn dminus_examples() {
        let s = symbol_dminus(&j0(), &dx(0), &dx(2));
        assert_eq!(s, form(&[(&[0, 2], 0.5), (&[1, 3], -0.5)]));
        assert_eq!(symbol_dminus(&j0(), &dx(0), &dx(1)).max_norm(), 0.0);
        let xi = [0.3, -0.1, 0.5, 1.0];
        assert_eq!(symbol_dminus(&j0(), &xi, &xi).max_norm(), 0.0);
        assert_eq!(symbol_dminus_rank(&j0(), &dx(0)).unwrap(), 2);
        assert_eq!(symbol_dminus_rank(&j0(), &[1.0, 0.0, 0.0, 1.0]).unwrap(), 2);
        assert!(symbol_dminus_rank(&j0(), &[0.0; 4]).is_err());
    }

    #[test]
    fn p_examples() {
        let h = MetricPoint::flat(4);
        let phi = form(&[(&[0, 2], 1.0), (&[1, 3], -1.0)]);
        assert_eq!(symbol_p(&h, &dx(0), &phi), -phi.clone());
        assert_eq!(symbol_p(&h, &[0.0; 4], &phi).max_norm(), 0.0);
        assert_eq!(symbol_p(&h, &[0.0, 0.0, 2.0, 0.0], &phi), phi.scale(-4.0));
    }

    #[test]
    fn lh_examples() {
        let h = MetricPoint::flat(4);
        let n = NijenhuisPoint::zero(4);
        let phi = form(&[(&[0, 2], 1.0), (&[1, 3], -1.0)]);
        assert_eq!(symbol_lh(&h, &j0(), &n, &[0.0; 4], &dx(3), &phi), 0.0);
        assert_eq!(symbol_lh(&h, &j0(), &n, &dx(0), &dx(3), &phi), -1.0);
        assert_eq!(symbol_lh(&h, &j0(), &n, &dx(0), &dx(2), &phi), 0.0);
    }

    #[test]
    fn polarized_example_and_rank() {
        let h = MetricPoint::flat(4);
        let frame = anti_invariant_frame(&j0(), &h).unwrap();
        // frame[0] = (dx13 − dx24)/√2
        let phi = form(&[(&[0, 2], 1.0), (&[1, 3], -1.0)]);
        assert!((frame[0].clone() - phi.scale(std::f64::consts::FRAC_1_SQRT_2)).max_norm() < 1e-15);
        let mut a2 = vec![[0.0; 2]; 10];
        a2[0] = [std::f64::consts::SQRT_2, 0.0];
        let out = polarized_symbol_ddelta(&h, &j0(), &a2).unwrap();
        assert!((out + KForm::monomial(4, &[0, 2])).max_norm() < 1e-15);
        assert_eq!(polarized_symbol_ddelta(&h, &j0(), &vec![[0.0; 2]; 10]).unwrap().max_norm(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let j = random_j(&mut rng, 4);
            let g = random_metric(&mut rng, &j);
            assert_eq!(linalg::rank(&polarized_symbol_matrix(&g, &j).unwrap(), 1e-10), 5);
            let xi = nonzero_covector(&mut rng, 4);
            assert_eq!(symbol_dminus_rank(&j, &xi).unwrap(), 2);
        }
    }

    #[test]
    fn jet_operator_examples() {
        let s = scene_r4_flat();
        let h = s.h.as_ref().unwrap();
        let jp = j0();
        let hp = MetricPoint::flat(4);
        let mut e = Jet2AntiInv::zero(&jp, &hp, &[0.0; 4]).unwrap();
        let v = evaluate_jet_operator(h, &s.j, &e).unwrap();
        assert_eq!((v.ddelta.max_norm(), v.p_val.max_norm(), v.l_val), (0.0, 0.0, 0.0));
        e.a0 = [0.4, -1.1];
        let v = evaluate_jet_operator(h, &s.j, &e).unwrap();
        assert!(v.ddelta.max_norm() < 1e-15 && v.l_val.abs() < 1e-15);
        e.a0 = [0.0; 2];
        e.a2[0] = [std::f64::consts::SQRT_2, 0.0];
        let v = evaluate_jet_operator(h, &s.j, &e).unwrap();
        assert!((v.ddelta.clone() + KForm::monomial(4, &[0, 2])).max_norm() < 1e-14);
        let want_p = form(&[(&[0, 2], -0.5), (&[1, 3], 0.5)]);
        assert!((v.p_val - want_p).max_norm() < 1e-14);
        assert!(v.l_val.abs() < 1e-14);
    }

    #[test]
    fn germ_on_flat_and_twisted() {
        let s = scene_r4_flat();
        let g = build_infinitesimal_solution(&s.j, s.h.as_ref().unwrap(), &[0.0; 4], 42).unwrap();
        assert!(g.conformal.is_some());
        assert!(g.success, "{g:?}");
        assert!(g.positivity_radius > 0.0);
        let t = scene_r4_twisted();
        for p in t.chart().sample(9, 5) {
            let g = build_infinitesimal_solution(&t.j, t.h.as_ref().unwrap(), &p, 1).unwrap();
            assert!(g.success, "{g:?}");
        }
    }

    #[test]
    fn conformal_factor_hypotheses() {
        let p = [0.0; 4];
        let f = crate::exprlang::parse("x1*x2", 4).unwrap();
        assert!(matches!(check_conformal_factor(&f, &p), Err(Error::Hypothesis(_))));
        let f = crate::exprlang::parse("x1 + 1", 4).unwrap();
        assert!(check_conformal_factor(&f, &p).is_err());
        assert!(check_conformal_factor(&linear_form(&[0.0, 2.0, 0.0, 0.0], &p), &p).is_ok());
    }

    #[test]
    fn germ_rejects_dimension_six() {
        let chart = ChartDomain::cube(6, 1.0);
        let j = JField::constant(chart.clone(), &AlmostComplexPoint::standard(6));
        let h = MetricField::flat(chart);
        assert!(matches!(
            build_infinitesimal_solution(&j, &h, &[0.0; 6], 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
