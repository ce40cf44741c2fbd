//! Complexified objects: type decomposition, unitary coframes, the
//! Nijenhuis tensor at a point and Hermitian forms on covectors.
//!
//! `T^{1,0}` is the `+i` eigenspace of `J`. A real covector `ξ` gives the
//! (1,0)-form `ξ + i J*ξ`; for the standard structure this is
//! `dx + i dy`, on which `J*` acts by `−i`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::forms::{one_form, wedge, ComplexForm, Form};
use super::structure::{AlmostComplexPoint, MetricPoint};
use crate::error::{Error, Result};
use crate::linalg;

pub type CVec = Vec<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(Dφ)(v_1..v_k) = −Σ_j φ(.., J v_j, ..)`; on a (p,q)-form `D = −i(p−q)`.
fn type_derivation(phi: &ComplexForm, j: &AlmostComplexPoint) -> ComplexForm {
    let n = phi.dim();
    let k = phi.degree();
    let mut slot = vec![0usize; k];
    Form::from_fn(n, k, |idx| {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..k {
            slot.copy_from_slice(idx);
            for cc in 0..n {
                let coef = j.entry(cc, idx[s]);
                if coef == 0.0 {
                    continue;
                }
                slot[s] = cc;
                acc -= c(coef) * phi.get(&slot);
            }
        }
        acc
    })
}

/// The (p,q)-component of a complex form.
pub fn project_pq(
    phi: &ComplexForm,
    p: usize,
    q: usize,
    j: &AlmostComplexPoint,
) -> Result<ComplexForm> {
    let k = phi.degree();
    if p + q != k {
        return Err(Error::TypeMismatch { p, q, degree: k });
    }
    if phi.dim() != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: phi.dim(),
        });
    }
    let m = j.dim() / 2;
    if p > m || q > m {
        return Ok(ComplexForm::zero(phi.dim(), k));
    }
    let eig = |p: usize, q: usize| -I * c(p as f64 - q as f64);
    let target = eig(p, q);
    let mut out = phi.clone();
    for p2 in 0..=k {
        let q2 = k - p2;
        if p2 == p || p2 > m || q2 > m {
            continue;
        }
        let mu = eig(p2, q2);
        let d = type_derivation(&out, j);
        out = (d - out.scale(mu)).scale(Complex64::new(1.0, 0.0) / (target - mu));
    }
    Ok(out)
}

/// Norm of everything except the (p,q) part.
pub fn type_residual(phi: &ComplexForm, p: usize, q: usize, j: &AlmostComplexPoint) -> Result<f64> {
    let pure = project_pq(phi, p, q, j)?;
    Ok((phi.clone() - pure).max_norm())
}

/// A coframe `α_i` of `Λ^{1,0}` with its dual frame `Z_i` of `T^{1,0}`.
#[derive(Debug, Clone)]
pub struct UnitaryFrame {
    pub coframe: Vec<CVec>,
    pub frame: Vec<CVec>,
}

impl UnitaryFrame {
    /// `α_j = (e_j♭ + i(Je_j)♭)/√2`, `Z_j = (e_j − iJe_j)/√2` for a
    /// `g`-orthonormal basis `e_1, Je_1, ...` grown from coordinate vectors.
    pub fn new(j: &AlmostComplexPoint, g: &MetricPoint) -> Result<Self> {
        let n = j.dim();
        if g.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.dim(),
            });
        }
        let residual = g.j_invariance_residual(j);
        if residual > 1e-10 * g.matrix().abs().max() {
            return Err(Error::NotJInvariant { residual });
        }
        let mut basis_vecs: Vec<Vec<f64>> = Vec::new();
        let mut es: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            if es.len() == n / 2 {
                break;
            }
            let mut v: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for b in &basis_vecs {
                    let c = g.inner(&v, b);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nv = g.inner(&v, &v).sqrt();
            if nv < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let jv = j.apply(&v);
            basis_vecs.push(v.clone());
            basis_vecs.push(jv);
            es.push(v);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut coframe = Vec::new();
        let mut frame = Vec::new();
        for e in &es {
            let je = j.apply(e);
            let ef = g.flat_of(e);
            let jef = g.flat_of(&je);
            coframe.push((0..n).map(|a| Complex64::new(ef[a], jef[a]) * s).collect());
            frame.push((0..n).map(|a| Complex64::new(e[a], -je[a]) * s).collect());
        }
        Ok(UnitaryFrame { coframe, frame })
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    /// `α_1 ∧ ... ∧ α_m`.
    pub fn volume(&self) -> ComplexForm {
        wedge_all(&self.coframe)
    }
}

pub fn wedge_all(coframe: &[CVec]) -> ComplexForm {
    let mut acc = one_form(&coframe[0]);
    for a in &coframe[1..] {
        acc = wedge(&acc, &one_form(a)).expect("degree fits");
    }
    acc
}

pub fn pair(xi: &[Complex64], v: &[Complex64]) -> Complex64 {
    xi.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn conj_vec(v: &[Complex64]) -> CVec {
    v.iter().map(|z| z.conj()).collect()
}

/// A complex (m,0)-form with its type-purity residual.
#[derive(Debug, Clone)]
pub struct ComplexVolumePoint {
    psi: ComplexForm,
    purity_residual: f64,
}

impl ComplexVolumePoint {
    pub fn new(psi: ComplexForm, j: &AlmostComplexPoint) -> Result<Self> {
        let m = j.dim() / 2;
        if psi.degree() != m {
            return Err(Error::WrongDegree {
                expected: m,
                got: psi.degree(),
            });
        }
        let purity_residual = type_residual(&psi, m, 0, j)?;
        Ok(ComplexVolumePoint {
            psi,
            purity_residual,
        })
    }

    pub fn form(&self) -> &ComplexForm {
        &self.psi
    }

    pub fn purity_residual(&self) -> f64 {
        self.purity_residual
    }

    pub fn is_zero(&self) -> bool {
        self.psi.max_norm() == 0.0
    }

    pub fn eval(&self, vs: &[CVec]) -> Complex64 {
        self.psi.eval(vs)
    }
}

/// `N^k_{ij}` at a point, `n[(k * dim + i) * dim + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NijenhuisPoint {
    dim: usize,
    n: Vec<f64>,
}

impl NijenhuisPoint {
    /// Components must be exactly antisymmetric in the lower pair.
    pub fn new(dim: usize, n: Vec<f64>) -> Result<Self> {
        if n.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim * dim,
                got: n.len(),
            });
        }
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    if n[(k * dim + i) * dim + j] != -n[(k * dim + j) * dim + i] {
                        return Err(Error::Hypothesis(
                            "Nijenhuis components are not antisymmetric".into(),
                        ));
                    }
                }
            }
        }
        Ok(NijenhuisPoint { dim, n })
    }

    pub fn zero(dim: usize) -> Self {
        NijenhuisPoint {
            dim,
            n: vec![0.0; dim * dim * dim],
        }
    }

    /// From `f(k, i, j)` for `i < j`; the rest follows by antisymmetry.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut n = vec![0.0; dim * dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                for j in i + 1..dim {
                    let v = f(k, i, j);
                    n[(k * dim + i) * dim + j] = v;
                    n[(k * dim + j) * dim + i] = -v;
                }
            }
        }
        NijenhuisPoint { dim, n }
    }

    /// The real tensor `N = H ∘ ψ`, `N^c_{ab} = 2 Re Σ_d ψ_{abd} H^{dc}`.
    pub fn from_hermitian(h: &HermitianFormPoint, psi: &ComplexForm) -> Self {
        let dim = psi.dim();
        let hm = h.matrix();
        Self::from_upper(dim, |c, a, b| {
            let s: Complex64 = (0..dim).map(|d| psi.get(&[a, b, d]) * hm[(d, c)]).sum();
            2.0 * s.re
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.n[(k * self.dim + i) * self.dim + j]
    }

    pub fn max_component(&self) -> f64 {
        linalg::max_abs(self.n.iter().cloned())
    }

    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += self.get(k, i, j) * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn apply_complex(&self, x: &[Complex64], y: &[Complex64]) -> CVec {
        let d = self.dim;
        (0..d)
            .map(|k| {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        let v = self.get(k, i, j);
                        if v != 0.0 {
                            s += c(v) * x[i] * y[j];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `max |N(J∂_i, ∂_j) + J N(∂_i, ∂_j)|`.
    pub fn antilinearity_residual(&self, j: &AlmostComplexPoint) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            let ea: Vec<f64> = (0..d).map(|k| if k == a { 1.0 } else { 0.0 }).collect();
            let jea = j.apply(&ea);
            for b in 0..d {
                let eb: Vec<f64> = (0..d).map(|k| if k == b { 1.0 } else { 0.0 }).collect();
                let lhs = self.apply(&jea, &eb);
                let rhs = j.apply(&self.apply(&ea, &eb));
                for k in 0..d {
                    worst = worst.max((lhs[k] + rhs[k]).abs());
                }
            }
        }
        worst
    }
}

/// A real symmetric bilinear form on covectors, stored as a matrix `H^{ab}`.
#[derive(Debug, Clone)]
pub struct HermitianFormPoint {
    h: DMatrix<f64>,
    asymmetry: f64,
}

impl HermitianFormPoint {
    /// Symmetrizes the input; the discarded asymmetry is kept as a residual.
    pub fn new(h: DMatrix<f64>) -> Self {
        let asymmetry = (&h - h.transpose()).abs().max();
        let h = (&h + h.transpose()) * 0.5;
        HermitianFormPoint { h, asymmetry }
    }

    /// `Σ λ_i (Z_i ⊗ Z̄_i + Z̄_i ⊗ Z_i)`.
    pub fn from_diagonal(lambda: &[f64], frame: &[CVec]) -> Self {
        let n = frame[0].len();
        let h = DMatrix::from_fn(n, n, |a, b| {
            lambda
                .iter()
                .zip(frame)
                .map(|(l, z)| 2.0 * l * (z[a] * z[b].conj()).re)
                .sum()
        });
        Self::new(h)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Bilinear extension to complex covectors.
    pub fn eval(&self, xi: &[Complex64], eta: &[Complex64]) -> Complex64 {
        let n = self.h.nrows();
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                s += xi[a] * c(self.h[(a, b)]) * eta[b];
            }
        }
        s
    }

    /// `max |H(J*·, J*·) − H|`.
    pub fn jstar_residual(&self, j: &AlmostComplexPoint) -> f64 {
        let n = j.dim();
        let m = DMatrix::from_row_slice(n, n, &j.jstar_matrix());
        (m.transpose() * &self.h * &m - &self.h).abs().max()
    }
}

/// Diagonalization of a Hermitian form against a complex volume.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    /// eigenvalues in an `h_ref`-unitary coframe, descending
    pub raw: Vec<f64>,
    /// eigenvalues after rescaling so that `ψ = α_1 ∧ ... ∧ α_m`
    pub normalized: Vec<f64>,
    pub coframe: Vec<CVec>,
    pub frame: Vec<CVec>,
    /// the common factor `s` with `α_i = s · α_i^{raw}`
    pub scale: Complex64,
    pub rank: usize,
    pub quasi_definite: bool,
    pub sign_tol: f64,
}

pub const HYPOTHESIS_TOL: f64 = 1e-6;
pub const SIGN_TOL: f64 = 1e-9;

pub fn hermitian_eigenbasis(
    h: &HermitianFormPoint,
    psi: &ComplexVolumePoint,
    j: &AlmostComplexPoint,
    h_ref: &MetricPoint,
) -> Result<EigenBasis> {
    if psi.is_zero() {
        return Err(Error::Degenerate("complex volume form vanishes".into()));
    }
    let scale = h.matrix().abs().max().max(f64::MIN_POSITIVE);
    if h.asymmetry() > HYPOTHESIS_TOL * scale {
        return Err(Error::Hypothesis(format!(
            "form is not symmetric (residual {:.3e})",
            h.asymmetry()
        )));
    }
    let inv = h.jstar_residual(j);
    if inv > HYPOTHESIS_TOL * scale {
        return Err(Error::Hypothesis(format!(
            "form is not J*-invariant (residual {inv:.3e})"
        )));
    }
    if psi.purity_residual() > HYPOTHESIS_TOL * psi.form().max_norm() {
        return Err(Error::Hypothesis(format!(
            "volume form is not of pure type (residual {:.3e})",
            psi.purity_residual()
        )));
    }
    let base = UnitaryFrame::new(j, h_ref)?;
    let m = base.len();
    let conj_cof: Vec<CVec> = base.coframe.iter().map(|a| conj_vec(a)).collect();
    let mat = DMatrix::from_fn(m, m, |r, s| h.eval(&base.coframe[r], &conj_cof[s]));
    let (raw, u) = linalg::hermitian_eigen(&mat);

    let n = j.dim();
    let mut coframe = Vec::with_capacity(m);
    let mut frame = Vec::with_capacity(m);
    for i in 0..m {
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..m {
            let w = u[(r, i)];
            for k in 0..n {
                a[k] += w.conj() * base.coframe[r][k];
                z[k] += w * base.frame[r][k];
            }
        }
        coframe.push(a);
        frame.push(z);
    }
    let cval = psi.eval(&frame);
    if cval.norm() < 1e-300 {
        return Err(Error::Degenerate("volume form vanishes on the frame".into()));
    }
    let s = cval.powf(1.0 / m as f64);
    let factor = s.norm_sqr();
    let normalized: Vec<f64> = raw.iter().map(|l| l * factor).collect();
    let coframe: Vec<CVec> = coframe
        .into_iter()
        .map(|a| a.into_iter().map(|x| x * s).collect())
        .collect();
    let frame: Vec<CVec> = frame
        .into_iter()
        .map(|z| z.into_iter().map(|x| x / s).collect())
        .collect();

    let top = normalized.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let sign_tol = SIGN_TOL * top;
    let rank = normalized.iter().filter(|l| l.abs() > sign_tol).count();
    let quasi_definite = normalized.iter().all(|&l| l >= -sign_tol)
        || normalized.iter().all(|&l| l <= sign_tol);
    Ok(EigenBasis {
        raw,
        normalized,
        coframe,
        frame,
        scale: s,
        rank,
        quasi_definite,
        sign_tol,
    })
}

impl EigenBasis {
    pub fn reassemble(&self) -> HermitianFormPoint {
        HermitianFormPoint::from_diagonal(&self.normalized, &self.frame)
    }

    pub fn volume(&self) -> ComplexForm {
        wedge_all(&self.coframe)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j6() -> AlmostComplexPoint {
        AlmostComplexPoint::standard(6)
    }

    fn dz(n: usize, a: usize, bar: bool) -> ComplexForm {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[2 * a] = c(1.0);
        v[2 * a + 1] = if bar { -I } else { I };
        one_form(&v)
    }

    fn triple(a: &ComplexForm, b: &ComplexForm, cc: &ComplexForm) -> ComplexForm {
        wedge(&wedge(a, b).unwrap(), cc).unwrap()
    }

    #[test]
    fn dz_is_type_10() {
        let j = j6();
        let f = dz(6, 0, false);
        assert!((project_pq(&f, 1, 0, &j).unwrap() - f.clone()).max_norm() < 1e-15);
        assert!(project_pq(&f, 0, 1, &j).unwrap().max_norm() < 1e-15);
    }

    #[test]
    fn pure_types() {
        let j = j6();
        let vol = triple(&dz(6, 0, false), &dz(6, 1, false), &dz(6, 2, false));
        for p in 0..=3 {
            let pr = project_pq(&vol, p, 3 - p, &j).unwrap();
            if p == 3 {
                assert!((pr - vol.clone()).max_norm() < 1e-14);
            } else {
                assert!(pr.max_norm() < 1e-14);
            }
        }
        let mixed = triple(&dz(6, 0, false), &dz(6, 1, false), &dz(6, 2, true));
        for p in 0..=3 {
            let pr = project_pq(&mixed, p, 3 - p, &j).unwrap();
            assert_eq!(pr.max_norm() > 1e-3, p == 2);
        }
        assert!(project_pq(&vol, 2, 2, &j).is_err());
    }

    #[test]
    fn imaginary_part_projection() {
        let j = j6();
        let vol = triple(&dz(6, 0, false), &dz(6, 1, false), &dz(6, 2, false));
        let rho = vol.im().to_complex();
        let p30 = project_pq(&rho, 3, 0, &j).unwrap();
        let expected = vol.scale(Complex64::new(1.0, 0.0) / (2.0 * I));
        assert!((p30 - expected).max_norm() < 1e-14);
    }

    #[test]
    fn unitary_frame_duality() {
        let j = j6();
        let g = MetricPoint::flat(6);
        let f = UnitaryFrame::new(&j, &g).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let d = pair(&f.coframe[a], &f.frame[b]);
                let e = pair(&f.coframe[a], &conj_vec(&f.frame[b]));
                assert!((d - c(if a == b { 1.0 } else { 0.0 })).norm() < 1e-15);
                assert!(e.norm() < 1e-15);
            }
            // JZ = iZ
            let z = &f.frame[a];
            let re: Vec<f64> = z.iter().map(|x| x.re).collect();
            let im: Vec<f64> = z.iter().map(|x| x.im).collect();
            let (jr, ji) = (j.apply(&re), j.apply(&im));
            for k in 0..6 {
                let jz = Complex64::new(jr[k], ji[k]);
                assert!((jz - I * z[k]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_diagonalizes() {
        let j = j6();
        let g = MetricPoint::flat(6);
        let base = UnitaryFrame::new(&j, &g).unwrap();
        let psi = ComplexVolumePoint::new(base.volume(), &j).unwrap();
        let h = HermitianFormPoint::new(DMatrix::identity(6, 6));
        let e = hermitian_eigenbasis(&h, &psi, &j, &g).unwrap();
        for l in e.raw.iter().chain(&e.normalized) {
            assert!((l - 1.0).abs() < 1e-13);
        }
        assert!((e.volume() - base.volume()).max_norm() < 1e-13);
    }

    #[test]
    fn diagonal_and_degenerate() {
        let j = j6();
        let g = MetricPoint::flat(6);
        let base = UnitaryFrame::new(&j, &g).unwrap();
        let psi = ComplexVolumePoint::new(base.volume(), &j).unwrap();
        let h = HermitianFormPoint::from_diagonal(&[1.0, 3.0, 2.0], &base.frame);
        let e = hermitian_eigenbasis(&h, &psi, &j, &g).unwrap();
        for (l, want) in e.raw.iter().zip([3.0, 2.0, 1.0]) {
            assert!((l - want).abs() < 1e-13);
        }
        assert_eq!(e.rank, 3);

        let h = HermitianFormPoint::from_diagonal(&[1.0, 1.0, 0.0], &base.frame);
        let e = hermitian_eigenbasis(&h, &psi, &j, &g).unwrap();
        assert!((e.raw[0] - 1.0).abs() < 1e-13 && e.raw[2].abs() < 1e-13);
        assert!(e.quasi_definite);
        assert_eq!(e.rank, 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let j = j6();
        let g = MetricPoint::flat(6);
        let zero = ComplexVolumePoint::new(ComplexForm::zero(6, 3), &j).unwrap();
        let h = HermitianFormPoint::new(DMatrix::identity(6, 6));
        assert!(hermitian_eigenbasis(&h, &zero, &j, &g).is_err());
        let base = UnitaryFrame::new(&j, &g).unwrap();
        let psi = ComplexVolumePoint::new(base.volume(), &j).unwrap();
        let mut skewed = DMatrix::identity(6, 6);
        skewed[(0, 0)] = 2.0;
        assert!(hermitian_eigenbasis(&HermitianFormPoint::new(skewed), &psi, &j, &g).is_err());
    }

    #[test]
    fn nijenhuis_point_from_hermitian_is_antilinear() {
        let j = j6();
        let g = MetricPoint::flat(6);
        let base = UnitaryFrame::new(&j, &g).unwrap();
        let h = HermitianFormPoint::from_diagonal(&[0.5, 1.0, 2.0], &base.frame);
        let n = NijenhuisPoint::from_hermitian(&h, &base.volume());
        assert!(n.max_component() > 0.1);
        assert!(n.antilinearity_residual(&j) < 1e-14);
    }
}
