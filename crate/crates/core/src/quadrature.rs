//! Adaptive Gauss–Kronrod (7/15) quadrature used by the oracle checks.
//!
//! Integrals over `(0, X]` and `(0, ∞)` are taken in the logarithmic
//! variable `x = e^v`, which turns algebraic end-point behaviour into
//! exponential decay and lets the range be truncated by probing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-14, rel: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x)?;
        let f2 = f(center + x)?;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok((value, err))
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    const MAX_SEGMENTS: usize = 2000;
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&mut f, a, b)?;
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut evals = 15;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature(format!(
                "segment budget exhausted: value {total:.6e}, error {total_err:.3e}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        if (mid - worst.a).abs() < 1e-13 * (b - a).abs() {
            break;
        }
    }
    // re-sum to shed accumulated rounding from the running updates
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error, evaluations: evals })
}

/// Walk outward from `start` in steps of `step` until `g` falls below
/// `floor`; returns the last probed abscissa.
fn probe_tail<G>(g: &mut G, start: f64, step: f64, floor: f64, limit: usize) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let mut v = start;
    let mut quiet = 0;
    for _ in 0..limit {
        v += step;
        if g(v)?.abs() < floor {
            quiet += 1;
            if quiet >= 2 {
                return Ok(v);
            }
        } else {
            quiet = 0;
        }
    }
    Ok(v)
}

/// `∫_0^∞ f(x) dx`, computed as `∫ e^v f(e^v) dv` with probed truncation.
/// `scale` is a representative abscissa where `f` carries its mass.
pub fn integrate_positive_axis<F>(mut f: F, scale: f64, tol: Tolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let centre = scale.ln();
    let mut g = |v: f64| -> Result<f64> {
        let x = v.exp();
        if x == 0.0 || !x.is_finite() {
            return Ok(0.0);
        }
        Ok(x * f(x)?)
    };
    let mut peak = 0.0f64;
    for k in -20..=20 {
        peak = peak.max(g(centre + k as f64 * 0.5)?.abs());
    }
    let floor = peak * tol.rel * 1e-3;
    let lo = probe_tail(&mut g, centre, -1.0, floor, 700)?;
    let hi = probe_tail(&mut g, centre, 1.0, floor, 700)?;
    integrate(g, lo, hi, tol)
}

/// `∫_0^X f(x) dx` in the logarithmic variable.
pub fn integrate_to<F>(mut f: F, upper: f64, tol: Tolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if upper <= 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let top = upper.ln();
    let mut g = |v: f64| -> Result<f64> {
        let x = v.exp();
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(x * f(x)?)
    };
    let mut peak = 0.0f64;
    for k in 0..=20 {
        peak = peak.max(g(top - k as f64 * 0.5)?.abs());
    }
    let floor = peak * tol.rel * 1e-3;
    let lo = probe_tail(&mut g, top, -1.0, floor, 700)?;
    integrate(g, lo, top, tol)
}
