//! Almost complex structures and metrics on a single tangent space.

use nalgebra::DMatrix;

use super::forms::{basis, small_det, wedge, KForm};
use crate::error::{Error, Result};
use crate::linalg;

/// `J` at a point. Stored row-major with `j[k * n + i] = J^k_i`, so that
/// `J ∂_i = Σ_k J^k_i ∂_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostComplexPoint {
    dim: usize,
    j: Vec<f64>,
}

impl AlmostComplexPoint {
    pub const SQUARE_TOL: f64 = 1e-12;

    pub fn new(dim: usize, j: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(dim, j, Self::SQUARE_TOL)
    }

    /// As [`Self::new`] with a caller-chosen bound on `|J² + I|` (relative
    /// to the squared entry scale).
    pub fn with_tolerance(dim: usize, j: Vec<f64>, tol: f64) -> Result<Self> {
        if dim % 2 != 0 || j.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: j.len(),
            });
        }
        let residual = square_residual(dim, &j);
        let scale = linalg::max_abs(j.iter().cloned()).max(1.0);
        if residual > tol * scale * scale {
            return Err(Error::NotAlmostComplex { residual });
        }
        Ok(AlmostComplexPoint { dim, j })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        Self::new(n, rows.iter().flatten().cloned().collect())
    }

    /// The constant structure with `J ∂_{2a} = ∂_{2a+1}` (zero-based).
    pub fn standard(dim: usize) -> Self {
        let mut j = vec![0.0; dim * dim];
        for a in 0..dim / 2 {
            j[(2 * a + 1) * dim + 2 * a] = 1.0;
            j[2 * a * dim + 2 * a + 1] = -1.0;
        }
        AlmostComplexPoint { dim, j }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major components `J^k_i`.
    pub fn matrix(&self) -> &[f64] {
        &self.j
    }

    pub fn entry(&self, k: usize, i: usize) -> f64 {
        self.j[k * self.dim + i]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.j)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|k| (0..n).map(|i| self.j[k * n + i] * v[i]).sum())
            .collect()
    }

    /// `(J*ξ)(X) = −ξ(JX)`.
    pub fn jstar(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|b| -(0..n).map(|a| xi[a] * self.j[a * n + b]).sum::<f64>())
            .collect()
    }

    /// Matrix of `J*` acting on covector columns, `−Jᵀ`.
    pub fn jstar_matrix(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                m[b * n + a] = -self.j[a * n + b];
            }
        }
        m
    }

    /// Sign of the coordinate orientation relative to the one induced by `J`
    /// (bases of the form `v1, Jv1, v2, Jv2, ...` are positive).
    pub fn orientation_sign(&self) -> f64 {
        let n = self.dim;
        let mut cols: Vec<Vec<f64>> = Vec::new();
        // greedy J-adapted basis out of coordinate vectors
        for i in 0..n {
            if cols.len() == n {
                break;
            }
            let e: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
            let je = self.apply(&e);
            let mut trial = cols.clone();
            trial.push(e);
            trial.push(je);
            if linalg::rank(&columns(&trial), 1e-10) == trial.len() {
                cols = trial;
            }
        }
        let det = small_det(&cols);
        if det > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn columns(cols: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r])
}

/// `max |J² + I|`.
pub fn square_residual(n: usize, j: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let s: f64 = (0..n).map(|c| j[a * n + c] * j[c * n + b]).sum();
            let target = if a == b { -1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}

/// A Riemannian metric at a point.
#[derive(Debug, Clone)]
pub struct MetricPoint {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    sqrt_det: f64,
    onb: DMatrix<f64>,
}

impl MetricPoint {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.ncols(),
            });
        }
        let asym = (&g - g.transpose()).abs().max();
        if asym > 1e-12 * g.abs().max().max(1.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "asymmetry {asym:.3e}"
            )));
        }
        let g = (&g + g.transpose()) * 0.5;
        let onb = linalg::orthonormal_frame(&g)
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky failed".into()))?;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("singular".into()))?;
        let sqrt_det = g.determinant().sqrt();
        Ok(MetricPoint {
            g,
            ginv,
            sqrt_det,
            onb,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::to_dmatrix(rows))
    }

    pub fn flat(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is a metric")
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.ginv
    }

    pub fn sqrt_det(&self) -> f64 {
        self.sqrt_det
    }

    /// Columns are `g`-orthonormal.
    pub fn onb(&self) -> &DMatrix<f64> {
        &self.onb
    }

    pub fn onb_vector(&self, i: usize) -> Vec<f64> {
        self.onb.column(i).iter().cloned().collect()
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += x[a] * self.g[(a, b)] * y[b];
            }
        }
        s
    }

    pub fn sharp(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.ginv[(a, b)] * xi[b]).sum())
            .collect()
    }

    pub fn flat_of(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.g[(a, b)] * v[b]).sum())
            .collect()
    }

    pub fn covector_norm_sq(&self, xi: &[f64]) -> f64 {
        let s = self.sharp(xi);
        xi.iter().zip(&s).map(|(a, b)| a * b).sum()
    }

    /// Value of the volume form `v_h` on the coordinate frame, in the
    /// orientation with the given sign relative to the coordinates.
    pub fn volume(&self, orientation: f64) -> f64 {
        orientation * self.sqrt_det
    }

    pub fn volume_form(&self, orientation: f64) -> KForm {
        let n = self.dim();
        let mut v = KForm::zero(n, n);
        let idx: Vec<usize> = (0..n).collect();
        v.add_at(&idx, self.volume(orientation));
        v
    }

    /// Induced inner product on k-forms, `⟨A, B⟩ = Σ A_I B_J det(g⁻¹[I, J])`.
    pub fn form_inner(&self, a: &KForm, b: &KForm) -> f64 {
        let gram = self.form_gram(a.degree());
        let (ca, cb) = (a.coeffs(), b.coeffs());
        let mut s = 0.0;
        for i in 0..ca.len() {
            if ca[i] == 0.0 {
                continue;
            }
            for j in 0..cb.len() {
                s += ca[i] * gram[(i, j)] * cb[j];
            }
        }
        s
    }

    pub fn form_gram(&self, k: usize) -> DMatrix<f64> {
        let n = self.dim();
        let b = basis(n, k);
        DMatrix::from_fn(b.len(), b.len(), |r, c| {
            let m: Vec<Vec<f64>> = b[r]
                .iter()
                .map(|&i| b[c].iter().map(|&j| self.ginv[(i, j)]).collect())
                .collect();
            small_det(&m)
        })
    }

    /// `max |g(J·,J·) − g|`.
    pub fn j_invariance_residual(&self, j: &AlmostComplexPoint) -> f64 {
        let jm = j.to_dmatrix();
        (jm.transpose() * &self.g * &jm - &self.g).abs().max()
    }
}

/// `(ω⁺, ω⁻)` with `ω^± = ½(ω ± ω(J·,J·))`.
pub fn split_two_form(omega: &KForm, j: &AlmostComplexPoint) -> Result<(KForm, KForm)> {
    if omega.degree() != 2 {
        return Err(Error::WrongDegree {
            expected: 2,
            got: omega.degree(),
        });
    }
    if omega.dim() != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: omega.dim(),
        });
    }
    let turned = omega.pullback(j.matrix());
    let plus = (omega.clone() + turned).scale(0.5);
    let minus = omega.clone() - plus.clone();
    Ok((plus, minus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compatibility {
    Compatible,
    SymmetricButIndefinite,
    NotSymmetric,
}

#[derive(Debug, Clone)]
pub struct CompatibleMetric {
    /// `g_ab = ω(∂_a, J∂_b)`
    pub g: DMatrix<f64>,
    pub verdict: Compatibility,
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
}

impl CompatibleMetric {
    pub fn metric(&self) -> Option<MetricPoint> {
        match self.verdict {
            Compatibility::Compatible => MetricPoint::new(self.g.clone()).ok(),
            _ => None,
        }
    }
}

pub fn compatible_metric(omega: &KForm, j: &AlmostComplexPoint) -> Result<CompatibleMetric> {
    if omega.degree() != 2 {
        return Err(Error::WrongDegree {
            expected: 2,
            got: omega.degree(),
        });
    }
    let n = j.dim();
    let w = linalg::to_dmatrix(&omega.to_matrix());
    let scale = w.abs().max();
    let det = w.determinant();
    if scale == 0.0 || det.abs() <= 1e-12 * scale.powi(n as i32) {
        return Err(Error::Degenerate("2-form is degenerate".into()));
    }
    let g = &w * j.to_dmatrix();
    let asymmetry = (&g - g.transpose()).abs().max();
    let sym = (&g + g.transpose()) * 0.5;
    let min_eigenvalue = linalg::symmetric_eigenvalues(&sym)[0];
    let verdict = if asymmetry > 1e-10 * g.abs().max() {
        Compatibility::NotSymmetric
    } else if min_eigenvalue > 0.0 {
        Compatibility::Compatible
    } else {
        Compatibility::SymmetricButIndefinite
    };
    Ok(CompatibleMetric {
        g,
        verdict,
        asymmetry,
        min_eigenvalue,
    })
}

/// `ω^m` evaluated on the coordinate frame, times the J-orientation sign.
pub fn top_power_oriented(omega: &KForm, j: &AlmostComplexPoint) -> Result<f64> {
    let n = omega.dim();
    let mut p = omega.clone();
    for _ in 1..n / 2 {
        p = wedge(&p, omega)?;
    }
    Ok(p.coeffs()[0] * j.orientation_sign())
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn standard_structure() {
        let j = j0();
        assert_eq!(j.apply(&[1.0, 0.0, 0.0, 0.0]), vec![0.0, 1.0, 0.0, 0.0]);
        // J*dx1 = dx2
        assert_eq!(j.jstar(&[1.0, 0.0, 0.0, 0.0]), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(j.orientation_sign(), 1.0);
        assert!(AlmostComplexPoint::new(2, vec![1.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn split_examples() {
        let w0 = form(&[(&[0, 1], 1.0), (&[2, 3], 1.0)]);
        let (p, m) = split_two_form(&w0, &j0()).unwrap();
        assert_eq!(p, w0);
        assert_eq!(m.max_norm(), 0.0);

        let anti = form(&[(&[0, 2], 1.0), (&[1, 3], -1.0)]);
        let (p, m) = split_two_form(&anti, &j0()).unwrap();
        assert_eq!(p.max_norm(), 0.0);
        assert_eq!(m, anti);

        let (p, m) = split_two_form(&form(&[(&[0, 2], 1.0)]), &j0()).unwrap();
        assert_eq!(p, form(&[(&[0, 2], 0.5), (&[1, 3], 0.5)]));
        assert_eq!(m, form(&[(&[0, 2], 0.5), (&[1, 3], -0.5)]));

        assert!(split_two_form(&KForm::monomial(4, &[0]), &j0()).is_err());
    }

    #[test]
    fn compatibility_verdicts() {
        let w0 = form(&[(&[0, 1], 1.0), (&[2, 3], 1.0)]);
        let c = compatible_metric(&w0, &j0()).unwrap();
        assert_eq!(c.verdict, Compatibility::Compatible);
        assert!((c.g.clone() - DMatrix::identity(4, 4)).abs().max() == 0.0);

        let c = compatible_metric(&(-w0), &j0()).unwrap();
        assert_eq!(c.verdict, Compatibility::SymmetricButIndefinite);
        assert!((c.g.clone() + DMatrix::identity(4, 4)).abs().max() == 0.0);

        let anti = form(&[(&[0, 2], 1.0), (&[1, 3], -1.0)]);
        let c = compatible_metric(&anti, &j0()).unwrap();
        assert_eq!(c.verdict, Compatibility::NotSymmetric);

        assert!(compatible_metric(&form(&[(&[0, 1], 1.0)]), &j0()).is_err());
    }

    #[test]
    fn metric_basics() {
        let g = MetricPoint::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let xi = [0.7, -1.2];
        let s = g.sharp(&xi);
        for x in [[1.0, 0.0], [0.0, 1.0]] {
            assert!((g.inner(&s, &x) - (xi[0] * x[0] + xi[1] * x[1])).abs() < 1e-14);
        }
        let flat = MetricPoint::flat(4);
        let a = KForm::monomial(4, &[0, 1]);
        assert_eq!(flat.form_inner(&a, &a), 1.0);
        assert!(MetricPoint::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
    }
}
