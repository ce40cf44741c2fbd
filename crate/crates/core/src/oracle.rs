//! Independent reference computations used only for cross-checks.
//!
//! Everything here uses central finite differences or plain elimination, so
//! it shares no code path with the jet-based calculus it is compared with.

use crate::error::Result;
use crate::exprlang::Expr;
use crate::fields::{d_generic, FieldK, JField, MetricField};
use crate::pointwise::forms::basis;
use crate::pointwise::{KForm, NijenhuisPoint};

pub const FD_STEP: f64 = 1e-5;

fn shifted(p: &[f64], a: usize, t: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[a] += t;
    q
}

/// Central difference of a vector-valued map; `out[a][r] = ∂_a f_r`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Result<Vec<f64>>, p: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    (0..p.len())
        .map(|a| {
            let plus = f(&shifted(p, a, step))?;
            let minus = f(&shifted(p, a, -step))?;
            Ok(plus.iter().zip(&minus).map(|(u, v)| (u - v) / (2.0 * step)).collect())
        })
        .collect()
}

pub fn fd_gradient(e: &Expr, p: &[f64], step: f64) -> Result<Vec<f64>> {
    let g = fd_jacobian(|x| Ok(vec![e.eval(x)?]), p, step)?;
    Ok(g.into_iter().map(|r| r[0]).collect())
}

/// Symmetric second differences.
pub fn fd_hessian(e: &Expr, p: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = p.len();
    let mut out = vec![0.0; n * n];
    let f0 = e.eval(p)?;
    for a in 0..n {
        for b in a..n {
            let v = if a == b {
                (e.eval(&shifted(p, a, step))? - 2.0 * f0 + e.eval(&shifted(p, a, -step))?) / (step * step)
            } else {
                let at = |sa: f64, sb: f64| e.eval(&shifted(&shifted(p, a, sa * step), b, sb * step));
                (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * step * step)
            };
            out[a * n + b] = v;
            out[b * n + a] = v;
        }
    }
    Ok(out)
}

fn values(coeffs: &[Expr], x: &[f64]) -> Result<Vec<f64>> {
    coeffs.iter().map(|c| Ok(c.eval(x)?)).collect()
}

/// `dφ` from central differences of the coefficients.
pub fn fd_exterior_derivative(phi: &FieldK, p: &[f64], step: f64) -> Result<KForm> {
    let n = phi.dim();
    let jac = fd_jacobian(|x| values(phi.coeffs(), x), p, step)?;
    let v = d_generic(n, phi.degree(), &0.0, |pos, a| jac[a][pos]);
    Ok(KForm::from_coeffs(n, phi.degree() + 1, v)?)
}

/// `[X, Y]^k = X^m ∂_m Y^k − Y^m ∂_m X^k` with difference quotients.
pub fn fd_bracket(
    x: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    y: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    p: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    let xv = x(p)?;
    let yv = y(p)?;
    let dx = fd_jacobian(x, p, step)?;
    let dy = fd_jacobian(y, p, step)?;
    let n = p.len();
    Ok((0..n)
        .map(|k| (0..n).map(|m| xv[m] * dy[m][k] - yv[m] * dx[m][k]).sum())
        .collect())
}

/// `¼([JX,JY] − J[JX,Y] − J[X,JY] − [X,Y])` on coordinate fields.
pub fn fd_nijenhuis(j: &JField, p: &[f64], step: f64) -> Result<NijenhuisPoint> {
    let n = j.dim();
    let entries = j.entries();
    let jmat = |x: &[f64]| values(entries, x);
    let jp = jmat(p)?;
    let apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|k| (0..n).map(|i| jp[k * n + i] * v[i]).sum()).collect() };
    let coord = |i: usize| move |_: &[f64]| -> Result<Vec<f64>> { Ok((0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect()) };
    let jcol = |i: usize| move |x: &[f64]| -> Result<Vec<f64>> {
        let m = jmat(x)?;
        Ok((0..n).map(|k| m[k * n + i]).collect())
    };
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in a + 1..n {
            let t1 = fd_bracket(&jcol(a), &jcol(b), p, step)?;
            let t2 = apply(&fd_bracket(&jcol(a), &coord(b), p, step)?);
            let t3 = apply(&fd_bracket(&coord(a), &jcol(b), p, step)?);
            let t4 = fd_bracket(&coord(a), &coord(b), p, step)?;
            for k in 0..n {
                let v = 0.25 * (t1[k] - t2[k] - t3[k] - t4[k]);
                out[(k * n + a) * n + b] = v;
                out[(k * n + b) * n + a] = -v;
            }
        }
    }
    NijenhuisPoint::new(n, out)
}

/// `dF` with `F = h(J·,·)` differenced from pointwise values.
pub fn fd_d_fundamental_form(h: &MetricField, j: &JField, p: &[f64], step: f64) -> Result<KForm> {
    let n = j.dim();
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let hv = values(h.entries(), x)?;
        let jv = values(j.entries(), x)?;
        Ok(basis(n, 2)
            .iter()
            .map(|ab| (0..n).map(|c| jv[c * n + ab[0]] * hv[c * n + ab[1]]).sum())
            .collect())
    };
    let jac = fd_jacobian(f, p, step)?;
    Ok(KForm::from_coeffs(n, 3, d_generic(n, 2, &0.0, |pos, a| jac[a][pos]))?)
}

/// Rank by Gaussian elimination with full pivoting.
pub fn elimination_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let (r, c) = (m.len(), m.first().map_or(0, |x| x.len()));
    let mut rank = 0;
    while rank < r.min(c) {
        let mut best = (0.0, rank, rank);
        for (i, row) in m.iter().enumerate().skip(rank) {
            for (j, &v) in row.iter().enumerate().skip(rank) {
                if v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            break;
        }
        m.swap(rank, best.1);
        for row in m.iter_mut() {
            row.swap(rank, best.2);
        }
        let pivot = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            let f = row[rank] / pivot[rank];
            for (x, &pv) in row.iter_mut().zip(&pivot).skip(rank) {
                *x -= f * pv;
            }
        }
        rank += 1;
    }
    rank
}
