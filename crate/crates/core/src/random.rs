//! Seeded random geometric data for sweeps and property checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::pointwise::{AlmostComplexPoint, KForm, MetricPoint};

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..half_width)).collect()
}

/// A well-conditioned random invertible matrix `I + small`.
pub fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| {
            let v: f64 = rng.random_range(-0.6..0.6);
            if i == j {
                1.0 + v
            } else {
                v
            }
        });
        let sv = a.clone().svd(false, false).singular_values;
        let (lo, hi) = sv.iter().fold((f64::MAX, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
        if lo > 0.2 * hi {
            return a;
        }
    }
}

/// `A J₀ A⁻¹` for a random `A`; any almost complex structure arises this way.
pub fn random_j(rng: &mut ChaCha8Rng, n: usize) -> AlmostComplexPoint {
    let a = random_frame(rng, n);
    let j0 = AlmostComplexPoint::standard(n).to_dmatrix();
    let j = &a * j0 * a.clone().try_inverse().expect("well conditioned");
    let rows: Vec<f64> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| j[(r, c)]).collect();
    AlmostComplexPoint::new(n, rows).expect("conjugate of J0")
}

/// A random `J`-invariant metric, `½(M + JᵀMJ)` for a random positive `M`.
pub fn random_metric(rng: &mut ChaCha8Rng, j: &AlmostComplexPoint) -> MetricPoint {
    let n = j.dim();
    let b = random_frame(rng, n);
    let m = b.transpose() * &b;
    let jm = j.to_dmatrix();
    let h = (&m + jm.transpose() * &m * &jm) * 0.5;
    MetricPoint::new(h).expect("positive definite")
}

pub fn nonzero_covector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = uniform_vec(rng, n, 1.0);
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-4 {
            return v;
        }
    }
}

/// Constant `J`-compatible symplectic form `g(J·,·)` for a random compatible `g`.
pub fn random_compatible_pair(rng: &mut ChaCha8Rng, n: usize) -> (KForm, AlmostComplexPoint, MetricPoint) {
    let j = random_j(rng, n);
    let g = random_metric(rng, &j);
    let jm = j.to_dmatrix();
    // ω(X, Y) = g(JX, Y), so ω_ab = Σ_c J_ca g_cb
    let w = jm.transpose() * g.matrix();
    let omega = KForm::from_fn(n, 2, |ab| w[(ab[0], ab[1])]);
    (omega, j, g)
}
