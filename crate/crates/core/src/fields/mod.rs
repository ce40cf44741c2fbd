//! Expression-backed tensor fields on a single coordinate chart.

mod calculus;

pub use calculus::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exprlang::{Expr, Jet2};
use crate::linalg;
use crate::pointwise::forms::basis;
use crate::pointwise::{AlmostComplexPoint, Form, KForm, MetricPoint};

/// A box of open intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    bounds: Vec<(f64, f64)>,
}

impl ChartDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Degenerate("chart has no coordinates".into()));
        }
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Degenerate(format!(
                    "interval {} is empty: ({lo}, {hi})",
                    i + 1
                )));
            }
        }
        Ok(ChartDomain { bounds })
    }

    pub fn cube(n: usize, half_width: f64) -> Self {
        ChartDomain {
            bounds: vec![(-half_width, half_width); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| lo < x && x < hi)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(Error::OutsideChart { point: p.to_vec() });
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn sampler(&self, seed: u64) -> Sampler {
        Sampler {
            bounds: self.bounds.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `count` seeded points strictly inside the box.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut s = self.sampler(seed);
        (0..count).map(|_| s.next_point()).collect()
    }
}

/// Uniform points strictly inside a box.
#[derive(Debug, Clone)]
pub struct Sampler {
    bounds: Vec<(f64, f64)>,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn next_point(&mut self) -> Vec<f64> {
        let bounds = &self.bounds;
        let rng = &mut self.rng;
        bounds
            .iter()
            .map(|&(lo, hi)| loop {
                let x = lo + (hi - lo) * rng.random::<f64>();
                if lo < x && x < hi {
                    break x;
                }
            })
            .collect()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Iterator for Sampler {
    type Item = Vec<f64>;
    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}

fn jets_of(exprs: &[Expr], p: &[f64]) -> Result<Vec<Jet2>> {
    exprs
        .iter()
        .map(|e| e.eval_jet(p).map_err(Error::from))
        .collect()
}

fn values_of(exprs: &[Expr], p: &[f64]) -> Result<Vec<f64>> {
    exprs
        .iter()
        .map(|e| e.eval(p).map_err(Error::from))
        .collect()
}

/// A k-form field: one expression per increasing index tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldK {
    chart: ChartDomain,
    degree: usize,
    coeffs: Vec<Expr>,
}

pub type ScalarField = FieldK;

impl FieldK {
    pub fn zero(chart: ChartDomain, degree: usize) -> Self {
        let len = basis(chart.dim(), degree).len();
        FieldK {
            chart,
            degree,
            coeffs: vec![Expr::zero(); len],
        }
    }

    pub fn scalar(chart: ChartDomain, f: Expr) -> Self {
        FieldK {
            chart,
            degree: 0,
            coeffs: vec![f],
        }
    }

    /// Terms `(indices, coefficient)`; indices are zero-based, in any order.
    pub fn from_terms(chart: ChartDomain, degree: usize, terms: Vec<(Vec<usize>, Expr)>) -> Result<Self> {
        let n = chart.dim();
        let mut f = FieldK::zero(chart, degree);
        for (idx, e) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= n) {
                return Err(Error::Degenerate(format!(
                    "invalid index tuple {idx:?} for a {degree}-form in dimension {n}"
                )));
            }
            let Some((sorted, sign)) = crate::pointwise::forms::sort_with_sign(&idx) else {
                return Err(Error::Degenerate(format!("repeated index in {idx:?}")));
            };
            let pos = basis(n, degree).iter().position(|b| *b == sorted).unwrap();
            let term = if sign < 0.0 { -e } else { e };
            let old = std::mem::replace(&mut f.coeffs[pos], Expr::zero());
            f.coeffs[pos] = old + term;
        }
        Ok(f)
    }

    pub fn from_coeffs(chart: ChartDomain, degree: usize, coeffs: Vec<Expr>) -> Result<Self> {
        let want = basis(chart.dim(), degree).len();
        if coeffs.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: coeffs.len(),
            });
        }
        Ok(FieldK {
            chart,
            degree,
            coeffs,
        })
    }

    pub fn chart(&self) -> &ChartDomain {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// `(index tuple, expression)` for nonzero coefficients.
    pub fn terms(&self) -> Vec<(Vec<usize>, Expr)> {
        basis(self.dim(), self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, e)| (i.clone(), e.clone()))
            .collect()
    }

    pub fn eval(&self, p: &[f64]) -> Result<KForm> {
        self.chart.check(p)?;
        let v = values_of(&self.coeffs, p)?;
        Ok(KForm::from_coeffs(self.dim(), self.degree, v)?)
    }

    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet2>> {
        self.chart.check(p)?;
        jets_of(&self.coeffs, p)
    }

    /// Multiplies every coefficient by `e^f`.
    pub fn conformal(&self, f: &Expr) -> FieldK {
        FieldK {
            chart: self.chart.clone(),
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| f.clone().exp() * c.clone())
                .collect(),
        }
    }
}

/// `J(x)` with an expression per entry `J^k_i`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JField {
    chart: ChartDomain,
    entries: Vec<Expr>,
}

pub const FIELD_TOL: f64 = 1e-10;

impl JField {
    pub fn new(chart: ChartDomain, entries: Vec<Expr>) -> Result<Self> {
        let n = chart.dim();
        if n % 2 != 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(JField { chart, entries })
    }

    pub fn constant(chart: ChartDomain, j: &AlmostComplexPoint) -> Self {
        let entries = j.matrix().iter().map(|&v| Expr::constant(v)).collect();
        JField { chart, entries }
    }

    pub fn chart(&self) -> &ChartDomain {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn entry(&self, k: usize, i: usize) -> &Expr {
        &self.entries[k * self.dim() + i]
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.chart.check(p)?;
        values_of(&self.entries, p)
    }

    pub fn eval(&self, p: &[f64]) -> Result<AlmostComplexPoint> {
        let v = self.values(p)?;
        AlmostComplexPoint::with_tolerance(self.dim(), v, FIELD_TOL)
    }

    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet2>> {
        self.chart.check(p)?;
        jets_of(&self.entries, p)
    }
}

/// `h(x)`, symmetric, with an expression per entry (row-major, full).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    chart: ChartDomain,
    entries: Vec<Expr>,
}

impl MetricField {
    pub fn new(chart: ChartDomain, entries: Vec<Expr>) -> Result<Self> {
        let n = chart.dim();
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        for a in 0..n {
            for b in a + 1..n {
                if entries[a * n + b] != entries[b * n + a] {
                    return Err(Error::NotPositiveDefinite(format!(
                        "entries ({}, {}) and ({}, {}) differ",
                        a + 1,
                        b + 1,
                        b + 1,
                        a + 1
                    )));
                }
            }
        }
        Ok(MetricField { chart, entries })
    }

    pub fn flat(chart: ChartDomain) -> Self {
        let n = chart.dim();
        let entries = (0..n * n)
            .map(|k| Expr::constant(if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        MetricField { chart, entries }
    }

    pub fn chart(&self) -> &ChartDomain {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn entry(&self, a: usize, b: usize) -> &Expr {
        &self.entries[a * self.dim() + b]
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.chart.check(p)?;
        values_of(&self.entries, p)
    }

    pub fn eval(&self, p: &[f64]) -> Result<MetricPoint> {
        let n = self.dim();
        let v = self.values(p)?;
        MetricPoint::new(nalgebra::DMatrix::from_row_slice(n, n, &v))
    }

    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet2>> {
        self.chart.check(p)?;
        jets_of(&self.entries, p)
    }

    /// `e^f h`.
    pub fn conformal(&self, f: &Expr) -> MetricField {
        MetricField {
            chart: self.chart.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| f.clone().exp() * e.clone())
                .collect(),
        }
    }
}

/// `max |h(J·,J·) − h|` from raw matrices.
pub fn j_invariance_residual(n: usize, h: &[f64], j: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for c in 0..n {
                for d in 0..n {
                    s += j[c * n + a] * h[c * n + d] * j[d * n + b];
                }
            }
            worst = worst.max((s - h[a * n + b]).abs());
        }
    }
    worst
}

pub(crate) fn form_from_values(n: usize, k: usize, v: Vec<f64>) -> KForm {
    Form::from_coeffs(n, k, v).expect("coefficient count matches basis")
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    linalg::max_abs(v.iter().cloned())
}
