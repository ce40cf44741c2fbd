//! Exterior calculus on fields, with derivatives taken from coefficient jets.

use crate::error::{Error, Result};
use crate::exprlang::{Expr, Jet1, Jet2, Real};
use crate::linalg;
use crate::pointwise::forms::{basis, sort_with_sign};
use crate::pointwise::{wedge, one_form, KForm, NijenhuisPoint};

use super::{form_from_values, j_invariance_residual, max_abs, FieldK, JField, MetricField, ScalarField, FIELD_TOL};

/// `(dφ)_J = Σ_s (−1)^s ∂_{j_s} φ_{J∖j_s}` over increasing `J`.
/// `partial(pos, a)` is `∂_a` of the coefficient stored at `pos`.
pub fn d_generic<T: Real>(n: usize, k: usize, zero: &T, partial: impl Fn(usize, usize) -> T) -> Vec<T> {
    let src = basis(n, k);
    basis(n, k + 1)
        .iter()
        .map(|target| {
            let mut acc = zero.clone();
            let mut rest = Vec::with_capacity(k);
            for s in 0..=k {
                rest.clear();
                rest.extend(target.iter().enumerate().filter(|(t, _)| *t != s).map(|(_, &v)| v));
                let pos = src.iter().position(|b| *b == rest).expect("sorted subset");
                let term = partial(pos, target[s]);
                acc = if s % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        })
        .collect()
}

/// Coefficients of `dφ` as first-order jets, from second-order jets of `φ`.
pub fn d_jets(n: usize, k: usize, coeffs: &[Jet2]) -> Vec<Jet1> {
    d_generic(n, k, &Jet1::constant(n, 0.0), |pos, a| coeffs[pos].partial(a))
}

/// Value of `dφ` from first-order jets of `φ`.
pub fn d_values(n: usize, k: usize, coeffs: &[Jet1]) -> KForm {
    let v = d_generic(n, k, &0.0, |pos, a| coeffs[pos].grad[a]);
    form_from_values(n, k + 1, v)
}

pub fn exterior_derivative(phi: &FieldK, p: &[f64]) -> Result<KForm> {
    let jets = phi.jets(p)?;
    let v = d_generic(phi.dim(), phi.degree(), &0.0, |pos, a| jets[pos].grad[a]);
    Ok(form_from_values(phi.dim(), phi.degree() + 1, v))
}

/// `d(dφ)` at `p`, computed from exact second derivatives.
pub fn exterior_derivative_twice(phi: &FieldK, p: &[f64]) -> Result<KForm> {
    let n = phi.dim();
    if phi.degree() + 2 > n {
        return Ok(KForm::zero(n, n));
    }
    let jets = phi.jets(p)?;
    let d1 = d_jets(n, phi.degree(), &jets);
    Ok(d_values(n, phi.degree() + 1, &d1))
}

/// `4N^k_ij = J^m_i ∂_m J^k_j − J^m_j ∂_m J^k_i − J^k_m ∂_i J^m_j + J^k_m ∂_j J^m_i`.
/// `jv[k * n + i] = J^k_i`, `dj(k, i, m) = ∂_m J^k_i`.
pub fn nijenhuis_from_parts(n: usize, jv: &[f64], dj: impl Fn(usize, usize, usize) -> f64) -> NijenhuisPoint {
    let half = |k: usize, i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for m in 0..n {
            s += jv[m * n + i] * dj(k, j, m) - jv[k * n + m] * dj(m, j, i);
        }
        s
    };
    NijenhuisPoint::from_upper(n, |k, i, j| 0.25 * (half(k, i, j) - half(k, j, i)))
}

pub fn nijenhuis(j: &JField, p: &[f64]) -> Result<NijenhuisPoint> {
    let n = j.dim();
    let jets = j.jets(p)?;
    let jv: Vec<f64> = jets.iter().map(|e| e.value).collect();
    Ok(nijenhuis_from_parts(n, &jv, |k, i, m| jets[k * n + i].grad[m]))
}

fn check_hermitian(h: &[f64], jv: &[f64], n: usize) -> Result<()> {
    let residual = j_invariance_residual(n, h, jv);
    if residual > FIELD_TOL * max_abs(h).max(1.0) {
        return Err(Error::NotJInvariant { residual });
    }
    Ok(())
}

/// `F_ab = h(J∂_a, ∂_b) = Σ_c J^c_a h_cb` on increasing pairs, generic in the scalar type.
pub fn fundamental_form_generic<T: Real>(n: usize, h: &[T], j: &[T]) -> Vec<T> {
    basis(n, 2)
        .iter()
        .map(|ab| {
            let (a, b) = (ab[0], ab[1]);
            let mut acc = j[0].lift(0.0);
            for c in 0..n {
                acc = acc + j[c * n + a].clone() * h[c * n + b].clone();
            }
            acc
        })
        .collect()
}

pub fn fundamental_form(h: &MetricField, j: &JField, p: &[f64]) -> Result<KForm> {
    let n = j.dim();
    let hv = h.values(p)?;
    let jv = j.values(p)?;
    check_hermitian(&hv, &jv, n)?;
    Ok(form_from_values(n, 2, fundamental_form_generic(n, &hv, &jv)))
}

/// Second-order jets of the coefficients of `F` at `p`.
pub fn fundamental_form_jets(h: &MetricField, j: &JField, p: &[f64]) -> Result<Vec<Jet2>> {
    let n = j.dim();
    let hj = h.jets(p)?;
    let jj = j.jets(p)?;
    let hv: Vec<f64> = hj.iter().map(|e| e.value).collect();
    let jv: Vec<f64> = jj.iter().map(|e| e.value).collect();
    check_hermitian(&hv, &jv, n)?;
    Ok(fundamental_form_generic(n, &hj, &jj))
}

/// `F` as an expression-backed field.
pub fn fundamental_form_field(h: &MetricField, j: &JField) -> FieldK {
    let n = j.dim();
    let coeffs = basis(n, 2)
        .iter()
        .map(|ab| {
            (0..n).fold(Expr::zero(), |acc, c| {
                acc + j.entry(c, ab[0]).clone() * h.entry(c, ab[1]).clone()
            })
        })
        .collect();
    FieldK::from_coeffs(j.chart().clone(), 2, coeffs).expect("basis length")
}

pub fn d_fundamental_form(h: &MetricField, j: &JField, p: &[f64]) -> Result<KForm> {
    let n = j.dim();
    let jets = fundamental_form_jets(h, j, p)?;
    let v = d_generic(n, 2, &0.0, |pos, a| jets[pos].grad[a]);
    Ok(form_from_values(n, 3, v))
}

/// The 4d Lee form at a point, with its exterior derivative.
#[derive(Debug, Clone)]
pub struct LeeForm {
    pub theta: Vec<f64>,
    pub dtheta: KForm,
    /// `max |dΩ − θ∧Ω|`
    pub residual: f64,
    /// the coefficient of `Ω∧Ω` on `dx1∧dx2∧dx3∧dx4`
    pub omega_squared: f64,
}

pub const NONDEGENERACY_TOL: f64 = 1e-10;

/// Solves `dΩ = θ∧Ω` from second-order jets of the coefficients of `Ω`.
pub fn lee_form_from_jets(jets: &[Jet2]) -> Result<LeeForm> {
    let n = 4;
    if jets.len() != basis(n, 2).len() {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: jets.len(),
        });
    }
    let omega_v: Vec<f64> = jets.iter().map(|j| j.value).collect();
    let omega = form_from_values(n, 2, omega_v);
    let sq = wedge(&omega, &omega)?.coeffs()[0];
    let scale = omega.max_norm().powi(2);
    if !(sq.abs() > NONDEGENERACY_TOL * scale) {
        return Err(Error::Degenerate(format!(
            "Ω∧Ω = {sq:.3e} at this point"
        )));
    }
    let om1: Vec<Jet1> = jets.iter().map(|j| j.truncate()).collect();
    let pairs = basis(n, 2);
    let om = |a: usize, b: usize| -> Jet1 {
        let (s, sign) = sort_with_sign(&[a, b]).expect("distinct");
        let pos = pairs.iter().position(|p| *p == s).unwrap();
        om1[pos].scale(sign)
    };
    let zero = Jet1::constant(n, 0.0);
    let triples = basis(n, 3);
    let mut rows = Vec::with_capacity(4);
    for t in triples {
        let (a, b, c) = (t[0], t[1], t[2]);
        let mut row = vec![zero.clone(); 4];
        row[a] = om(b, c);
        row[b] = -om(a, c);
        row[c] = om(a, b);
        rows.push(row);
    }
    let rhs = d_jets(n, 2, jets);
    let theta = linalg::solve(&rows, &rhs, 1e-300).ok_or_else(|| Error::Degenerate("Lee form system is singular".into()))?;
    let theta_v: Vec<f64> = theta.iter().map(|t| t.value).collect();
    let dtheta = d_values(n, 1, &theta);
    let domega = form_from_values(n, 3, rhs.iter().map(|r| r.value).collect());
    let fitted = wedge(&one_form(&theta_v), &omega)?;
    let residual = (domega - fitted).max_norm();
    Ok(LeeForm {
        theta: theta_v,
        dtheta,
        residual,
        omega_squared: sq,
    })
}

pub fn lee_form_4d(omega: &FieldK, p: &[f64]) -> Result<LeeForm> {
    if omega.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: omega.dim(),
        });
    }
    if omega.degree() != 2 {
        return Err(Error::WrongDegree {
            expected: 2,
            got: omega.degree(),
        });
    }
    lee_form_from_jets(&omega.jets(p)?)
}

/// Lee form of the fundamental form of `(h, J)`.
pub fn lee_form_of_metric(h: &MetricField, j: &JField, p: &[f64]) -> Result<LeeForm> {
    if j.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: j.dim(),
        });
    }
    lee_form_from_jets(&fundamental_form_jets(h, j, p)?)
}

/// `(δΦ)_k = −g_kj (1/√g) ∂_i(√g Φ^{ij})`, as first-order jets.
/// `h` holds metric entries row-major, `phi` the coefficients of `Φ`.
pub fn codifferential_jets(n: usize, h: &[Jet2], phi: &[Jet2]) -> Result<Vec<Jet1>> {
    let rows: Vec<Vec<Jet2>> = (0..n).map(|a| h[a * n..(a + 1) * n].to_vec()).collect();
    let ginv = linalg::inverse(&rows, 1e-300).ok_or_else(|| Error::NotPositiveDefinite("singular metric".into()))?;
    let det = linalg::determinant(&rows);
    if !(det.value > 0.0) {
        return Err(Error::NotPositiveDefinite("metric determinant is not positive".into()));
    }
    let sqrt_g = det.sqrt();
    let pairs = basis(n, 2);
    let zero = Jet2::constant(n, 0.0);
    let full = |a: usize, b: usize| -> Jet2 {
        match sort_with_sign(&[a, b]) {
            None => zero.clone(),
            Some((s, sign)) => {
                let pos = pairs.iter().position(|p| *p == s).unwrap();
                phi[pos].scale(sign)
            }
        }
    };
    // Φ^{ij} for i < j; the rest follows by antisymmetry
    let mut half = vec![vec![zero.clone(); n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let f = full(a, b);
            if f.value == 0.0 && f.grad.iter().all(|&g| g == 0.0) && f.hess.iter().all(|&g| g == 0.0) {
                continue;
            }
            for i in 0..n {
                let left = ginv[i][a].clone() * f.clone();
                for j in 0..n {
                    half[i][j] = half[i][j].clone() + left.clone() * ginv[j][b].clone();
                }
            }
        }
    }
    let mut div = vec![Jet1::constant(n, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue;
            }
            let q = sqrt_g.clone() * half[i][j].clone();
            div[j] = div[j].clone() + q.partial(i);
        }
    }
    let sg1 = sqrt_g.truncate();
    Ok((0..n)
        .map(|k| {
            let mut acc = Jet1::constant(n, 0.0);
            for j in 0..n {
                acc = acc + h[k * n + j].truncate() * div[j].clone();
            }
            -(acc / sg1.clone())
        })
        .collect())
}

pub fn codifferential_two_form(h: &MetricField, phi: &FieldK, p: &[f64]) -> Result<Vec<f64>> {
    let d = codifferential_field_jets(h, phi, p)?;
    Ok(d.iter().map(|j| j.value).collect())
}

/// `d(δΦ)` at `p`.
pub fn d_codifferential(h: &MetricField, phi: &FieldK, p: &[f64]) -> Result<KForm> {
    let d = codifferential_field_jets(h, phi, p)?;
    Ok(d_values(h.dim(), 1, &d))
}

fn codifferential_field_jets(h: &MetricField, phi: &FieldK, p: &[f64]) -> Result<Vec<Jet1>> {
    if phi.degree() != 2 {
        return Err(Error::WrongDegree {
            expected: 2,
            got: phi.degree(),
        });
    }
    if phi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: phi.dim(),
        });
    }
    codifferential_jets(h.dim(), &h.jets(p)?, &phi.jets(p)?)
}

/// `e^f h`.
pub fn conformal_rescale(h: &MetricField, f: &ScalarField) -> MetricField {
    h.conformal(&f.coeffs()[0])
}
