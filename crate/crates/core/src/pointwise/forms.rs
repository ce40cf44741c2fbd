//! Exterior forms at a single point, stored on strictly increasing index
//! tuples in lexicographic order. Antisymmetry is therefore a property of
//! the storage. Evaluation uses the determinant convention, so
//! `(dx1 ∧ dx2)(∂1, ∂2) = 1`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Scalars a form may carry: real or complex.
pub trait Coeff:
    Copy
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + From<f64>
    + Send
    + Sync
{
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
}

impl Coeff for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
}

impl Coeff for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

pub const MAX_DIM: usize = 8;

struct Tables {
    /// combos[n][k]: increasing k-tuples of 0..n in lex order
    combos: Vec<Vec<Vec<Vec<usize>>>>,
    /// rank[n][mask]: position of the tuple with that bitmask in combos[n][popcount]
    rank: Vec<Vec<usize>>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut combos = Vec::new();
        let mut rank = Vec::new();
        for n in 0..=MAX_DIM {
            let mut by_k = Vec::new();
            let mut r = vec![usize::MAX; 1 << n];
            for k in 0..=n {
                let list = lex_combinations(n, k);
                for (pos, c) in list.iter().enumerate() {
                    r[mask_of(c)] = pos;
                }
                by_k.push(list);
            }
            combos.push(by_k);
            rank.push(r);
        }
        Tables { combos, rank }
    })
}

fn lex_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn mask_of(idx: &[usize]) -> usize {
    idx.iter().fold(0, |m, &i| m | (1 << i))
}

/// Increasing `k`-tuples of `0..n`, in storage order.
pub fn basis(n: usize, k: usize) -> &'static [Vec<usize>] {
    assert!(n <= MAX_DIM && k <= n, "unsupported form shape ({n}, {k})");
    &tables().combos[n][k]
}

pub fn basis_len(n: usize, k: usize) -> usize {
    basis(n, k).len()
}

/// Sorts an index tuple, returning the permutation sign, or `None` if an
/// index repeats.
pub fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

fn position(n: usize, sorted: &[usize]) -> usize {
    tables().rank[n][mask_of(sorted)]
}

/// Determinant of a small square matrix by cofactor expansion.
pub fn small_det<T: Coeff>(m: &[Vec<T>]) -> T {
    match m.len() {
        0 => T::one(),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => {
            let mut acc = T::zero();
            for c in 0..n {
                if m[0][c] == T::zero() {
                    continue;
                }
                let minor: Vec<Vec<T>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let term = m[0][c] * small_det(&minor);
                acc = if c % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form<T: Coeff> {
    dim: usize,
    degree: usize,
    coeffs: Vec<T>,
}

pub type KForm = Form<f64>;
pub type ComplexForm = Form<Complex64>;

impl<T: Coeff> Form<T> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form {
            dim,
            degree,
            coeffs: vec![T::zero(); basis_len(dim, degree)],
        }
    }

    /// Builds a form from its values on increasing index tuples.
    pub fn from_fn(dim: usize, degree: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let coeffs = basis(dim, degree).iter().map(|i| f(i)).collect();
        Form { dim, degree, coeffs }
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<T>) -> Result<Self> {
        let want = basis_len(dim, degree);
        if coeffs.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: coeffs.len(),
            });
        }
        Ok(Form { dim, degree, coeffs })
    }

    /// The basis monomial `dx_{i1} ∧ ... ∧ dx_{ik}` (zero-based indices, any order).
    pub fn monomial(dim: usize, idx: &[usize]) -> Self {
        let mut f = Form::zero(dim, idx.len());
        f.add_at(idx, T::one());
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn basis(&self) -> &'static [Vec<usize>] {
        basis(self.dim, self.degree)
    }

    /// Component on an arbitrary index tuple, with antisymmetry applied.
    pub fn get(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.degree);
        match sort_with_sign(idx) {
            None => T::zero(),
            Some((s, sign)) => {
                let v = self.coeffs[position(self.dim, &s)];
                if sign < 0.0 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Adds `v` to the component on `idx` (antisymmetry respected).
    pub fn add_at(&mut self, idx: &[usize], v: T) {
        if let Some((s, sign)) = sort_with_sign(idx) {
            let p = position(self.dim, &s);
            if sign < 0.0 {
                self.coeffs[p] += -v;
            } else {
                self.coeffs[p] += v;
            }
        }
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(T) -> U) -> Form<U> {
        Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|c| c * s)
    }

    pub fn conj(&self) -> Self {
        self.map(Coeff::conj)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.modulus()))
    }

    fn check_shape(&self, other: &Self) {
        assert_eq!(
            (self.dim, self.degree),
            (other.dim, other.degree),
            "form shape mismatch"
        );
    }

    /// Evaluates on `degree` vectors: `Σ_I φ_I det(v_a^{I_b})`.
    pub fn eval(&self, vectors: &[Vec<T>]) -> T {
        assert_eq!(vectors.len(), self.degree);
        let mut acc = T::zero();
        for (idx, &c) in self.basis().iter().zip(&self.coeffs) {
            if c == T::zero() {
                continue;
            }
            let m: Vec<Vec<T>> = vectors
                .iter()
                .map(|v| idx.iter().map(|&i| v[i]).collect())
                .collect();
            acc += c * small_det(&m);
        }
        acc
    }

    /// Pullback by a linear map given row-major, `(A*φ)(v, ..) = φ(Av, ..)`.
    pub fn pullback(&self, a: &[f64]) -> Self {
        let n = self.dim;
        let columns: Vec<Vec<T>> = (0..n)
            .map(|j| (0..n).map(|i| T::from(a[i * n + j])).collect())
            .collect();
        Form::from_fn(n, self.degree, |idx| {
            let vs: Vec<Vec<T>> = idx.iter().map(|&j| columns[j].clone()).collect();
            self.eval(&vs)
        })
    }

    /// Interior product `ι_v φ`.
    pub fn interior(&self, v: &[T]) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::WrongDegree {
                expected: 1,
                got: 0,
            });
        }
        Ok(Form::from_fn(self.dim, self.degree - 1, |rest| {
            let mut acc = T::zero();
            let mut idx = Vec::with_capacity(self.degree);
            for (a, &va) in v.iter().enumerate() {
                if va == T::zero() {
                    continue;
                }
                idx.clear();
                idx.push(a);
                idx.extend_from_slice(rest);
                acc += va * self.get(&idx);
            }
            acc
        }))
    }

    /// As an antisymmetric `dim × dim` matrix (degree 2 only).
    pub fn to_matrix(&self) -> Vec<Vec<T>> {
        assert_eq!(self.degree, 2);
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.get(&[i, j])).collect())
            .collect()
    }

    /// Upper triangle of an antisymmetric matrix as a 2-form.
    pub fn from_matrix(m: &[Vec<T>]) -> Self {
        Form::from_fn(m.len(), 2, |ij| m[ij[0]][ij[1]])
    }
}

impl KForm {
    pub fn to_complex(&self) -> ComplexForm {
        self.map(|c| Complex64::new(c, 0.0))
    }
}

impl ComplexForm {
    pub fn re(&self) -> KForm {
        self.map(|c| c.re)
    }

    pub fn im(&self) -> KForm {
        self.map(|c| c.im)
    }
}

impl<T: Coeff> Add for Form<T> {
    type Output = Form<T>;
    fn add(mut self, rhs: Form<T>) -> Form<T> {
        self.check_shape(&rhs);
        self.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, &b)| *a = *a + b);
        self
    }
}

impl<T: Coeff> Sub for Form<T> {
    type Output = Form<T>;
    fn sub(mut self, rhs: Form<T>) -> Form<T> {
        self.check_shape(&rhs);
        self.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, &b)| *a = *a - b);
        self
    }
}

impl<T: Coeff> Neg for Form<T> {
    type Output = Form<T>;
    fn neg(self) -> Form<T> {
        self.map(|c| -c)
    }
}

/// Exterior product; `(a ∧ b)_{I∪J} = sign(I,J) a_I b_J`.
pub fn wedge<T: Coeff>(a: &Form<T>, b: &Form<T>) -> Result<Form<T>> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    if a.degree + b.degree > a.dim {
        return Err(Error::DegreeOverflow {
            left: a.degree,
            right: b.degree,
            dim: a.dim,
        });
    }
    let mut out = Form::zero(a.dim, a.degree + b.degree);
    let mut idx = Vec::with_capacity(out.degree);
    for (i, &ca) in a.basis().iter().zip(&a.coeffs) {
        if ca == T::zero() {
            continue;
        }
        for (j, &cb) in b.basis().iter().zip(&b.coeffs) {
            if cb == T::zero() {
                continue;
            }
            idx.clear();
            idx.extend_from_slice(i);
            idx.extend_from_slice(j);
            out.add_at(&idx, ca * cb);
        }
    }
    Ok(out)
}

/// A covector as a 1-form.
pub fn one_form<T: Coeff>(components: &[T]) -> Form<T> {
    Form {
        dim: components.len(),
        degree: 1,
        coeffs: components.to_vec(),
    }
}
