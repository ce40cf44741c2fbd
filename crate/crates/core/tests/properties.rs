use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use acgeom::exprlang::{parse, Expr, UnaryOp};
use acgeom::obstruction::{factor_nijenhuis, synthetic_nijenhuis};
use acgeom::oracle::{fd_gradient, fd_hessian};
use acgeom::pointwise::forms::basis;
use acgeom::pointwise::{
    compatible_metric, hermitian_eigenbasis, project_pq, split_two_form, wedge, Compatibility, ComplexForm,
    ComplexVolumePoint, HermitianFormPoint, KForm, UnitaryFrame,
};
use acgeom::random::{random_compatible_pair, random_j, random_metric};

const DIM: usize = 3;

/// Expressions that stay in their domain on `[-1, 1]^3`.
fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..DIM).prop_map(Expr::var),
        (-2.0f64..2.0).prop_map(Expr::constant),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| a / (Expr::constant(2.0) + Expr::unary(UnaryOp::Sin, b))),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Sin, a)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Cos, a)),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Sin, a))),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Log, Expr::constant(1.0) + a.clone() * a)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Sqrt, Expr::constant(1.0) + a.clone() * a)),
            (inner, 0i32..4).prop_map(|(a, k)| a.powi(k)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, DIM)
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn jets_match_differences(e in expr(), p in point()) {
        prop_assume!(e.depth() <= 6);
        let jet = e.eval_jet(&p).unwrap();
        let scale = jet.value.abs().max(jet.grad.iter().fold(0.0f64, |m, g| m.max(g.abs())));
        prop_assume!(scale < 1e4);
        let g = fd_gradient(&e, &p, 1e-6).unwrap();
        for (a, b) in jet.grad.iter().zip(&g) {
            prop_assert!(close(*a, *b, scale, 1e-6), "grad {a} vs {b} for {e}");
        }
        let h = fd_hessian(&e, &p, 1e-4).unwrap();
        let hscale = scale.max(jet.hess.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        for (a, b) in jet.hess.iter().zip(&h) {
            prop_assert!(close(*a, *b, hscale, 1e-4), "hess {a} vs {b} for {e}");
        }
    }

    #[test]
    fn print_parse_round_trip(e in expr(), p in point()) {
        let back = parse(&e.to_string(), DIM).unwrap();
        prop_assert_eq!(back.eval(&p).unwrap(), e.eval(&p).unwrap());
        prop_assert_eq!(&back, &e);
    }
}

fn random_form(rng: &mut ChaCha8Rng, n: usize, k: usize) -> KForm {
    use rand::Rng;
    KForm::from_fn(n, k, |_| rng.random_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wedge_is_bilinear_and_graded(seed: u64, s in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, 6, 2);
        let a2 = random_form(&mut rng, 6, 2);
        let b = random_form(&mut rng, 6, 3);
        let lhs = wedge(&(a.clone() + a2.scale(s)), &b).unwrap();
        let rhs = wedge(&a, &b).unwrap() + wedge(&a2, &b).unwrap().scale(s);
        prop_assert!((lhs - rhs).max_norm() < 1e-12);
        let c = random_form(&mut rng, 6, 1);
        let ab = wedge(&b, &c).unwrap();
        let ba = wedge(&c, &b).unwrap();
        // odd times odd anticommutes
        prop_assert!((ab + ba).max_norm() < 1e-14);
    }

    #[test]
    fn two_form_split_round_trip(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in [4, 6] {
            let j = random_j(&mut rng, n);
            let w = random_form(&mut rng, n, 2);
            let (plus, minus) = split_two_form(&w, &j).unwrap();
            prop_assert!((plus.clone() + minus.clone() - w).max_norm() < 1e-12);
            let rows: Vec<f64> = (0..n * n).map(|k| j.entry(k / n, k % n)).collect();
            prop_assert!((plus.pullback(&rows) - plus.clone()).max_norm() < 1e-10);
            prop_assert!((minus.pullback(&rows) + minus.clone()).max_norm() < 1e-10);
        }
    }

    #[test]
    fn type_projections_sum_to_identity(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random_j(&mut rng, 6);
        let w: ComplexForm = random_form(&mut rng, 6, 3).to_complex();
        let mut acc = ComplexForm::zero(6, 3);
        for p in 0..=3 {
            let part = project_pq(&w, p, 3 - p, &j).unwrap();
            prop_assert!((project_pq(&part, p, 3 - p, &j).unwrap() - part.clone()).max_norm() < 1e-9);
            acc = acc + part;
        }
        prop_assert!((acc - w).max_norm() < 1e-9);
    }

    #[test]
    fn compatible_pairs_are_recognized(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (omega, j, g) = random_compatible_pair(&mut rng, 4);
        let c = compatible_metric(&omega, &j).unwrap();
        prop_assert_eq!(c.verdict, Compatibility::Compatible);
        prop_assert!((c.g.clone() - g.matrix().clone()).abs().max() < 1e-10);
        let flipped = compatible_metric(&omega.scale(-1.0), &j).unwrap();
        prop_assert_eq!(flipped.verdict, Compatibility::SymmetricButIndefinite);
    }

    #[test]
    fn eigenbasis_reassembles(seed: u64, l in prop::collection::vec(0.0f64..3.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random_j(&mut rng, 6);
        let g = random_metric(&mut rng, &j);
        let f = UnitaryFrame::new(&j, &g).unwrap();
        prop_assume!(l.iter().any(|&v| v > 0.05));
        let h = HermitianFormPoint::from_diagonal(&l, &f.frame);
        let psi = ComplexVolumePoint::new(f.volume().scale(Complex64::new(0.6, -0.8)), &j).unwrap();
        let e = hermitian_eigenbasis(&h, &psi, &j, &g).unwrap();
        prop_assert!((e.reassemble().matrix() - h.matrix()).abs().max() < 1e-10);
        prop_assert!((e.volume() - psi.form().clone()).max_norm() < 1e-10);
        let n = synthetic_nijenhuis(&h, psi.form());
        let fac = factor_nijenhuis(&n, &psi, &j, &g).unwrap();
        prop_assert!((fac.h.matrix() - h.matrix()).abs().max() < 1e-10);
    }
}

#[test]
fn basis_sizes() {
    for n in [2, 4, 6, 8] {
        for k in 0..=n {
            let expected = (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
            assert_eq!(basis(n, k).len(), expected);
        }
    }
}
