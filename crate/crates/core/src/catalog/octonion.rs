use std::ops::{Add, Mul, Neg, Sub};

/// Oriented triples `(i, j, k)` with `e_i e_j = e_k` (1-based imaginary units).
pub const TRIPLES: [(usize, usize, usize); 7] = [
    (1, 2, 3),
    (1, 4, 5),
    (1, 7, 6),
    (2, 4, 6),
    (2, 5, 7),
    (3, 4, 7),
    (3, 6, 5),
];

/// Structure constants of the imaginary units: `e_i e_j = ε_ijk e_k − δ_ij`.
pub fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    for &(a, b, c) in &TRIPLES {
        let cyc = [(a, b, c), (b, c, a), (c, a, b)];
        for &(x, y, z) in &cyc {
            if (i, j, k) == (x, y, z) {
                return 1.0;
            }
            if (i, j, k) == (y, x, z) {
                return -1.0;
            }
        }
    }
    0.0
}

/// `x₀ + Σ x_i e_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Octonion(pub [f64; 8]);

impl Octonion {
    pub const ONE: Octonion = Octonion([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    /// `e_i` for `i` in `0..8`, with `e_0 = 1`.
    pub fn unit(i: usize) -> Self {
        let mut c = [0.0; 8];
        c[i] = 1.0;
        Octonion(c)
    }

    /// A purely imaginary octonion from its 7 components.
    pub fn imaginary(v: &[f64]) -> Self {
        let mut c = [0.0; 8];
        c[1..].copy_from_slice(v);
        Octonion(c)
    }

    pub fn re(&self) -> f64 {
        self.0[0]
    }

    pub fn im(&self) -> [f64; 7] {
        let mut v = [0.0; 7];
        v.copy_from_slice(&self.0[1..]);
        v
    }

    pub fn conj(&self) -> Self {
        let mut c = self.0;
        c[1..].iter_mut().for_each(|x| *x = -*x);
        Octonion(c)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Octonion(self.0.map(|x| x * s))
    }
}

pub fn octonion_multiply(a: &Octonion, b: &Octonion) -> Octonion {
    let (x, y) = (&a.0, &b.0);
    let mut out = [0.0; 8];
    out[0] = x[0] * y[0];
    for i in 1..8 {
        out[i] += x[0] * y[i] + x[i] * y[0];
        out[0] -= x[i] * y[i];
    }
    for &(p, q, r) in &TRIPLES {
        for &(i, j, k) in &[(p, q, r), (q, r, p), (r, p, q)] {
            out[k] += x[i] * y[j] - x[j] * y[i];
        }
    }
    Octonion(out)
}

impl Mul for Octonion {
    type Output = Octonion;
    fn mul(self, rhs: Octonion) -> Octonion {
        octonion_multiply(&self, &rhs)
    }
}

impl Add for Octonion {
    type Output = Octonion;
    fn add(self, rhs: Octonion) -> Octonion {
        let mut c = self.0;
        c.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        Octonion(c)
    }
}

impl Sub for Octonion {
    type Output = Octonion;
    fn sub(self, rhs: Octonion) -> Octonion {
        self + (-rhs)
    }
}

impl Neg for Octonion {
    type Output = Octonion;
    fn neg(self) -> Octonion {
        Octonion(self.0.map(|x| -x))
    }
}

/// The 7-dimensional cross product `Im(x y)` of imaginary vectors.
pub fn cross7(x: &[f64], y: &[f64]) -> [f64; 7] {
    (Octonion::imaginary(x) * Octonion::imaginary(y)).im()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng) -> Octonion {
        let mut c = [0.0; 8];
        c.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        Octonion(c)
    }

    #[test]
    fn table_examples() {
        let e = Octonion::unit;
        assert_eq!(e(1) * e(1), -Octonion::ONE);
        assert_eq!(e(1) * e(2), e(3));
        assert_eq!(e(2) * e(1), -e(3));
        assert_eq!(e(1) * e(4), e(5));
        assert_eq!(e(2) * e(4), e(6));
        assert_eq!(e(3) * e(4), e(7));
        let a = Octonion([0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.2, 0.9]);
        assert_eq!(Octonion::ONE * a, a);
        assert_eq!(a * Octonion::ONE, a);
    }

    #[test]
    fn units_square_to_minus_one() {
        for i in 1..8 {
            assert_eq!(Octonion::unit(i) * Octonion::unit(i), -Octonion::ONE);
        }
    }

    #[test]
    fn basis_pairs_compose_and_alternate() {
        for i in 0..8 {
            for j in 0..8 {
                let (a, b) = (Octonion::unit(i), Octonion::unit(j));
                assert_eq!((a * b).norm(), 1.0);
                let s = a + b;
                assert!(((s * s) * b - s * (s * b)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn composition_and_alternativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let (a, b) = (random(&mut rng), random(&mut rng));
            let lhs = (a * b).norm();
            let rhs = a.norm() * b.norm();
            assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1.0));
            assert!(((a * a) * b - a * (a * b)).norm() < 1e-12);
        }
    }
}
