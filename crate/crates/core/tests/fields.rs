use acgeom::catalog::{scene_r4_twisted, scene_s6};
use acgeom::exprlang::{parse, Expr};
use acgeom::fields::{
    codifferential_two_form, conformal_rescale, exterior_derivative, lee_form_of_metric, nijenhuis, ChartDomain, FieldK,
    JField, MetricField, ScalarField,
};
use acgeom::localsymp::check_conformal_factor;
use acgeom::oracle::{fd_nijenhuis, FD_STEP};
use acgeom::pointwise::{AlmostComplexPoint, KForm};

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn e(s: &str) -> Expr {
    parse(s, 4).unwrap()
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    let q = gauss_legendre(6);
    let s: f64 = q.iter().map(|(x, w)| w * x.powi(10)).sum();
    assert!((s - 2.0 / 11.0).abs() < 1e-14);
}

/// `∫⟨dβ, Φ⟩ dv = ∫⟨β, δΦ⟩ dv` for fields vanishing to second order on the boundary.
#[test]
fn codifferential_is_formal_adjoint_of_d() {
    let s = scene_r4_twisted();
    let h = s.h.as_ref().unwrap();
    let chart = s.chart().clone();
    let bump = "((1 - x1^2)*(1 - x2^2)*(1 - x3^2)*(1 - x4^2))^2";
    let beta = FieldK::from_terms(
        chart.clone(),
        1,
        vec![
            (vec![0], e(&format!("x2*{bump}"))),
            (vec![1], e(bump)),
            (vec![3], e(&format!("x1*x3*{bump}"))),
        ],
    )
    .unwrap();
    let phi = FieldK::from_terms(
        chart.clone(),
        2,
        vec![
            (vec![0, 1], e(&format!("x1*{bump}"))),
            (vec![0, 2], e(&format!("x3*x4*{bump}"))),
            (vec![1, 3], e(bump)),
            (vec![2, 3], e(&format!("(x2 - 0.5)*{bump}"))),
        ],
    )
    .unwrap();
    let q = gauss_legendre(10);
    // nodes are strictly inside the open box
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for a in &q {
        for b in &q {
            for c in &q {
                for d in &q {
                    let p = [a.0, b.0, c.0, d.0];
                    let w = a.1 * b.1 * c.1 * d.1;
                    let hp = h.eval(&p).unwrap();
                    let vol = w * hp.sqrt_det();
                    let db = exterior_derivative(&beta, &p).unwrap();
                    lhs += vol * hp.form_inner(&db, &phi.eval(&p).unwrap());
                    let delta = KForm::from_coeffs(4, 1, codifferential_two_form(h, &phi, &p).unwrap()).unwrap();
                    rhs += vol * hp.form_inner(&beta.eval(&p).unwrap(), &delta);
                }
            }
        }
    }
    assert!(lhs.abs() > 1e-4, "degenerate test fields: {lhs}");
    assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn s6_nijenhuis_at_base_point() {
    let s = scene_s6();
    let p = [0.0; 6];
    let n = nijenhuis(&s.j, &p).unwrap();
    assert!(n.max_component() > 1e-3);
    assert!(n.antilinearity_residual(&s.j.eval(&p).unwrap()) < 1e-8);
    let fd = fd_nijenhuis(&s.j, &p, FD_STEP).unwrap();
    for (a, b) in n.components().iter().zip(fd.components()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn constant_structures_are_integrable() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    let chart = ChartDomain::cube(6, 1.0);
    for _ in 0..20 {
        let j = acgeom::random::random_j(&mut rng, 6);
        let jf = JField::constant(chart.clone(), &j);
        for p in chart.sample(1, 5) {
            assert!(nijenhuis(&jf, &p).unwrap().max_component() < 1e-12);
        }
    }
}

#[test]
fn conformal_rules() {
    let chart = ChartDomain::cube(4, 1.0);
    let j = JField::constant(chart.clone(), &AlmostComplexPoint::standard(4));
    let h = MetricField::flat(chart.clone());
    let f = ScalarField::scalar(chart.clone(), e("x1"));
    let p = [0.2, -0.3, 0.4, 0.1];
    let theta = lee_form_of_metric(&conformal_rescale(&h, &f), &j, &p).unwrap().theta;
    assert!((theta[0] - 1.0).abs() < 1e-12 && theta[1..].iter().all(|t| t.abs() < 1e-12));
    let zero = ScalarField::scalar(chart, Expr::zero());
    assert_eq!(conformal_rescale(&h, &zero).eval(&p).unwrap().matrix(), h.eval(&p).unwrap().matrix());
    assert!(check_conformal_factor(&e("x1*x2"), &[0.0; 4]).is_err());
}
