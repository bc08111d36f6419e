//! Trapezoid evaluation of single and double Mellin–Barnes integrals along
//! vertical lines.
//!
//! Integrands are supplied in log form. Kernels built from gamma factors
//! whose joint block depends on `s + t` only (every descriptor the identities
//! produce) use a diagonal factorisation: on a common node spacing the joint
//! factor is needed on `4J + 1` diagonal nodes instead of `(2J + 1)²` grid
//! nodes, and the double sum collapses to `Σ_m C_m Σ_{j+k=m} A_j B_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fox_h::BivariateHDescriptor;
use crate::special::ln_gamma;

/// Relative imaginary residue tolerated on real-valued targets.
pub const IMAG_RESIDUE_THRESHOLD: f64 = 1e-6;
/// Default relative agreement between successive refinements.
pub const DEFAULT_REFINE_TOLERANCE: f64 = 1e-10;
/// The feasibility centre is sought inside `[-ABSCISSA_CLAMP, ABSCISSA_CLAMP]`.
pub const ABSCISSA_CLAMP: f64 = 20.0;
/// Optimised abscissae may move out to this bound (large arguments push the
/// saddle point far from the origin).
pub const SEARCH_CLAMP: f64 = 400.0;
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

const MAX_ROUNDS: usize = 12;
const MAX_HALF_NODES: usize = 1 << 14;
const MIN_POLE_MARGIN: f64 = 0.25;

/// `Γ(offset + coef_s·s + coef_t·t)`, in the numerator or the denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGamma {
    pub offset: f64,
    pub coef_s: f64,
    pub coef_t: f64,
    pub numerator: bool,
}

impl LinearGamma {
    pub fn num(offset: f64, coef_s: f64, coef_t: f64) -> Self {
        LinearGamma { offset, coef_s, coef_t, numerator: true }
    }

    pub fn den(offset: f64, coef_s: f64, coef_t: f64) -> Self {
        LinearGamma { offset, coef_s, coef_t, numerator: false }
    }

    /// Real part of the gamma argument at the abscissae; a numerator factor
    /// keeps its poles off the contour iff this is positive.
    pub fn slack(&self, cs: f64, ct: f64) -> f64 {
        self.offset + self.coef_s * cs + self.coef_t * ct
    }

    fn ln_value(&self, s: Complex64, t: Complex64) -> Result<Complex64> {
        let z = self.offset + s * self.coef_s + t * self.coef_t;
        if self.numerator {
            ln_gamma(z)
        } else {
            match ln_gamma(z) {
                Ok(v) => Ok(-v),
                // 1/Γ vanishes at the poles of Γ
                Err(Error::GammaPole { .. }) => Ok(Complex64::new(f64::NEG_INFINITY, 0.0)),
                Err(e) => Err(e),
            }
        }
    }

    /// Exponential decay contribution of this factor along `(u, v)`.
    fn decay(&self, u: f64, v: f64) -> f64 {
        let w = (self.coef_s * u + self.coef_t * v).abs();
        if self.numerator {
            w
        } else {
            -w
        }
    }
}

fn sum_ln(factors: &[LinearGamma], s: Complex64, t: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for f in factors {
        acc += f.ln_value(s, t)?;
    }
    Ok(acc)
}

/// How the joint factor couples the two integration variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointCoupling {
    /// No joint factor; the double integral is a product.
    None,
    /// The joint factor depends on `s + t` only; `ln_joint(w, 0)` is its
    /// value at `s + t = w`.
    Diagonal,
    General,
}

/// Log-form evaluator of a double Mellin–Barnes integrand
/// `A(s)·B(t)·C(s, t)`. A real part of `-∞` denotes an exact zero.
pub trait DoubleKernel: Sync {
    fn ln_s(&self, s: Complex64) -> Result<Complex64>;
    fn ln_t(&self, t: Complex64) -> Result<Complex64>;
    fn coupling(&self) -> JointCoupling;
    fn ln_joint(&self, s: Complex64, t: Complex64) -> Result<Complex64>;
}

/// Log-form evaluator of a single Mellin–Barnes integrand.
pub trait LineKernel: Sync {
    fn ln_kernel(&self, s: Complex64) -> Result<Complex64>;
}

/// Gamma-product kernel `Π Γ(...)^{±1} · x^s · y^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaKernel {
    pub s_factors: Vec<LinearGamma>,
    pub t_factors: Vec<LinearGamma>,
    pub joint: Vec<LinearGamma>,
    pub ln_x: f64,
    pub ln_y: f64,
}

impl GammaKernel {
    fn numerators(&self) -> impl Iterator<Item = &LinearGamma> {
        self.s_factors
            .iter()
            .chain(self.t_factors.iter())
            .chain(self.joint.iter())
            .filter(|f| f.numerator)
    }

    fn all(&self) -> impl Iterator<Item = &LinearGamma> {
        self.s_factors.iter().chain(self.t_factors.iter()).chain(self.joint.iter())
    }

    /// Slowest exponential decay rate of `|kernel|` over all directions of
    /// the `(Im s, Im t)` plane, in units of `π/2`.
    pub fn min_decay_rate(&self) -> f64 {
        if self.t_factors.is_empty() && self.joint.is_empty() {
            return self.s_factors.iter().map(|f| f.decay(1.0, 0.0)).sum();
        }
        let mut dirs: Vec<(f64, f64)> = (0..720)
            .map(|k| {
                let th = k as f64 * PI / 360.0;
                (th.cos(), th.sin())
            })
            .collect();
        // breakpoints of the piecewise-linear rate
        for f in self.all() {
            if f.coef_s != 0.0 || f.coef_t != 0.0 {
                let n = f.coef_s.hypot(f.coef_t);
                dirs.push((-f.coef_t / n, f.coef_s / n));
                dirs.push((f.coef_t / n, -f.coef_s / n));
            }
        }
        dirs.iter()
            .map(|&(u, v)| self.all().map(|f| f.decay(u, v)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn ln_at(&self, s: Complex64, t: Complex64) -> Result<Complex64> {
        Ok(sum_ln(&self.s_factors, s, t)?
            + sum_ln(&self.t_factors, s, t)?
            + sum_ln(&self.joint, s, t)?
            + s * self.ln_x
            + t * self.ln_y)
    }
}

impl DoubleKernel for GammaKernel {
    fn ln_s(&self, s: Complex64) -> Result<Complex64> {
        Ok(sum_ln(&self.s_factors, s, Complex64::new(0.0, 0.0))? + s * self.ln_x)
    }

    fn ln_t(&self, t: Complex64) -> Result<Complex64> {
        Ok(sum_ln(&self.t_factors, Complex64::new(0.0, 0.0), t)? + t * self.ln_y)
    }

    fn coupling(&self) -> JointCoupling {
        if self.joint.is_empty() {
            JointCoupling::None
        } else if self.joint.iter().all(|f| f.coef_s == f.coef_t) {
            JointCoupling::Diagonal
        } else {
            JointCoupling::General
        }
    }

    fn ln_joint(&self, s: Complex64, t: Complex64) -> Result<Complex64> {
        sum_ln(&self.joint, s, t)
    }
}

impl LineKernel for GammaKernel {
    fn ln_kernel(&self, s: Complex64) -> Result<Complex64> {
        DoubleKernel::ln_s(self, s)
    }
}

/// Placement and resolution of the two vertical integration lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub abscissa_s: f64,
    pub abscissa_t: f64,
    pub half_height: f64,
    pub nodes_per_line: usize,
    pub refine_tolerance: f64,
}

impl ContourSpec {
    pub fn step(&self) -> f64 {
        2.0 * self.half_height / (self.nodes_per_line - 1) as f64
    }

    fn half_nodes(&self) -> usize {
        (self.nodes_per_line - 1) / 2
    }

    fn with_grid(mut self, step: f64, half_nodes: usize) -> Self {
        self.nodes_per_line = 2 * half_nodes + 1;
        self.half_height = step * half_nodes as f64;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_height > 0.0) || self.nodes_per_line < 16 || !(self.refine_tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("malformed contour spec {self:?}")));
        }
        Ok(())
    }
}

/// Value of a Mellin–Barnes integral together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbOutcome {
    pub value: f64,
    pub imag_residue: f64,
    pub rounds: usize,
    pub spec: ContourSpec,
}

/// Convex-region description: every numerator factor must keep a positive
/// argument real part on the contour.
struct Feasibility<'a> {
    numerators: Vec<&'a LinearGamma>,
}

impl Feasibility<'_> {
    fn min_slack(&self, cs: f64, ct: f64) -> f64 {
        let mut m = SEARCH_CLAMP - cs.abs();
        m = m.min(SEARCH_CLAMP - ct.abs());
        for f in &self.numerators {
            m = m.min(f.slack(cs, ct));
        }
        m
    }

    /// Largest-margin point, with the margin capped at 1 (pole spacing).
    /// Solved as a 3-variable LP by vertex enumeration.
    fn centre(&self) -> (f64, f64, f64) {
        // rows: a·cs + b·ct - w·r >= -offset
        let mut rows: Vec<[f64; 4]> = Vec::new();
        for f in &self.numerators {
            rows.push([f.coef_s, f.coef_t, 1.0, -f.offset]);
        }
        rows.push([1.0, 0.0, 0.0, -ABSCISSA_CLAMP]);
        rows.push([-1.0, 0.0, 0.0, -ABSCISSA_CLAMP]);
        rows.push([0.0, 1.0, 0.0, -ABSCISSA_CLAMP]);
        rows.push([0.0, -1.0, 0.0, -ABSCISSA_CLAMP]);
        rows.push([0.0, 0.0, -1.0, -1.0]); // r <= 1
        let feasible = |p: &[f64; 3]| {
            rows.iter()
                .all(|r| r[0] * p[0] + r[1] * p[1] - r[2] * p[2] >= r[3] - 1e-9)
        };
        let mut best: Option<[f64; 3]> = None;
        let n = rows.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if let Some(p) = solve3(
                        [rows[i][0], rows[i][1], -rows[i][2]],
                        [rows[j][0], rows[j][1], -rows[j][2]],
                        [rows[k][0], rows[k][1], -rows[k][2]],
                        [rows[i][3], rows[j][3], rows[k][3]],
                    ) {
                        if feasible(&p) {
                            let better = match best {
                                None => true,
                                Some(b) => {
                                    p[2] > b[2] + 1e-12
                                        || ((p[2] - b[2]).abs() <= 1e-12
                                            && p[0].abs() + p[1].abs() < b[0].abs() + b[1].abs())
                                }
                            };
                            if better {
                                best = Some(p);
                            }
                        }
                    }
                }
            }
        }
        match best {
            Some(p) => (p[0], p[1], p[2]),
            None => (0.0, 0.0, f64::NEG_INFINITY),
        }
    }
}

fn solve3(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
    };
    let d = det(r0, r1, r2);
    if d.abs() < 1e-12 {
        return None;
    }
    let col = |i: usize| {
        let mut a = r0;
        let mut b = r1;
        let mut c = r2;
        a[i] = rhs[0];
        b[i] = rhs[1];
        c[i] = rhs[2];
        det(a, b, c) / d
    };
    Some([col(0), col(1), col(2)])
}

/// Nelder–Mead minimisation in two dimensions; `f` returns `+∞` outside the
/// admissible region.
fn nelder_mead<F: Fn(f64, f64) -> f64>(f: &F, start: (f64, f64), size: f64, iters: usize) -> (f64, f64) {
    let mut pts = [
        (start.0, start.1),
        (start.0 + size, start.1),
        (start.0, start.1 + size),
    ];
    let mut vals = pts.map(|p| f(p.0, p.1));
    for _ in 0..iters {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        let spread = (pts[w].0 - pts[b].0).abs().max((pts[w].1 - pts[b].1).abs())
            .max((pts[m].0 - pts[b].0).abs().max((pts[m].1 - pts[b].1).abs()));
        if spread < 1e-3 {
            break;
        }
        let c = ((pts[b].0 + pts[m].0) / 2.0, (pts[b].1 + pts[m].1) / 2.0);
        let at = |k: f64| (c.0 + k * (pts[w].0 - c.0), c.1 + k * (pts[w].1 - c.1));
        let r = at(-1.0);
        let fr = f(r.0, r.1);
        if fr < vals[b] {
            let e = at(-2.0);
            let fe = f(e.0, e.1);
            if fe < fr {
                pts[w] = e;
                vals[w] = fe;
            } else {
                pts[w] = r;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            pts[w] = r;
            vals[w] = fr;
        } else {
            let k = if fr < vals[w] { -0.5 } else { 0.5 };
            let cpt = at(k);
            let fc = f(cpt.0, cpt.1);
            if fc < vals[w].min(fr) {
                pts[w] = cpt;
                vals[w] = fc;
            } else {
                for i in [m, w] {
                    pts[i] = ((pts[i].0 + pts[b].0) / 2.0, (pts[i].1 + pts[b].1) / 2.0);
                    vals[i] = f(pts[i].0, pts[i].1);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    pts[best]
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Abscissae for a gamma kernel: inside the separating region and at the
/// point where the coarse-grid mass `Σ|kernel|` is smallest, which bounds the
/// cancellation the quadrature has to resolve.
pub fn choose_contours_kernel(kernel: &GammaKernel, refine_tolerance: f64) -> Result<ContourSpec> {
    let feas = Feasibility { numerators: kernel.numerators().collect() };
    let (c0s, c0t, r) = feas.centre();
    if !(r > 1e-9) {
        return Err(Error::NoSeparatingStrip(format!(
            "pole families overlap (largest margin {r:.3e})"
        )));
    }
    let margin = MIN_POLE_MARGIN.min(0.5 * r);
    let bivariate = !kernel.t_factors.is_empty() || !kernel.joint.is_empty();
    let offsets: &[f64] = &[0.0, -1.5, 1.5];
    let objective = |cs: f64, ct: f64| -> f64 {
        if feas.min_slack(cs, ct) < margin {
            return f64::INFINITY;
        }
        let mut terms = Vec::with_capacity(25);
        for &u in offsets {
            let s = Complex64::new(cs, u);
            if bivariate {
                for &v in offsets {
                    match kernel.ln_at(s, Complex64::new(ct, v)) {
                        Ok(l) => terms.push(l.re),
                        Err(_) => return f64::INFINITY,
                    }
                }
            } else {
                match kernel.ln_at(s, Complex64::new(0.0, 0.0)) {
                    Ok(l) => terms.push(l.re),
                    Err(_) => return f64::INFINITY,
                }
            }
        }
        let v = log_sum_exp(&terms);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut p = (c0s, c0t);
    if !bivariate {
        p.1 = 0.0;
    }
    let mut size = r.min(1.0).max(margin);
    for _ in 0..2 {
        p = if bivariate {
            nelder_mead(&objective, p, size, 300)
        } else {
            let g = |a: f64, _b: f64| objective(a, 0.0);
            let q = nelder_mead(&g, p, size, 300);
            (q.0, 0.0)
        };
        size = (0.5 * size).max(margin);
    }
    let (cs, ct) = p;

    // nearest singularity seen from each line, in Im-units
    let mut d_min = f64::INFINITY;
    for f in kernel.numerators() {
        let sl = f.slack(cs, ct);
        if f.coef_s != 0.0 {
            d_min = d_min.min(sl / f.coef_s.abs());
        }
        if f.coef_t != 0.0 {
            d_min = d_min.min(sl / f.coef_t.abs());
        }
    }
    let osc = kernel.ln_x.abs().max(if bivariate { kernel.ln_y.abs() } else { 0.0 });
    let mut step = 0.3f64;
    if d_min.is_finite() {
        step = step.min(1.0 / (4.5 / d_min + 4.5 * osc / (2.0 * PI)));
    } else {
        step = step.min(1.0 / (1.0 + 4.5 * osc / (2.0 * PI)));
    }
    let rate = kernel.min_decay_rate().max(1e-3) * PI / 2.0;
    let half_height = ((1.0 / refine_tolerance).ln() + 12.0) / rate;
    let half_height = half_height.clamp(4.0, 400.0);
    let half_nodes = ((half_height / step).ceil() as usize).max(8);
    Ok(ContourSpec {
        abscissa_s: cs,
        abscissa_t: if bivariate { ct } else { 0.0 },
        half_height: step * half_nodes as f64,
        nodes_per_line: 2 * half_nodes + 1,
        refine_tolerance,
    })
}

/// Contours for the bivariate descriptor evaluated at `(x, y)`.
pub fn choose_contours(desc: &BivariateHDescriptor, x: f64, y: f64) -> Result<ContourSpec> {
    let kernel = desc.kernel(x, y)?;
    choose_contours_kernel(&kernel, DEFAULT_REFINE_TOLERANCE)
}

/// Pairwise summation of complex terms.
fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Normalised exponentials of a log-valued line: returns `(ref, values)`
/// with `values[i] = exp(ln[i] - ref)`.
fn normalise(ln: &[Complex64]) -> (f64, Vec<Complex64>) {
    let r = ln.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !r.is_finite() {
        return (0.0, vec![Complex64::new(0.0, 0.0); ln.len()]);
    }
    (r, ln.iter().map(|z| (z - r).exp()).collect())
}

fn line_values<F>(f: F, abscissa: f64, step: f64, half_nodes: usize) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let n = half_nodes as i64;
    (-n..=n)
        .into_par_iter()
        .map(|j| f(Complex64::new(abscissa, j as f64 * step)))
        .collect()
}

struct Estimate {
    sum: Complex64,
    ln_scale: f64,
    ring: f64,
    /// Sum of term magnitudes, which sets the rounding floor of `sum`.
    magnitude: f64,
}

impl Estimate {
    fn value(&self, ln_factor: f64) -> Complex64 {
        self.sum * (self.ln_scale + ln_factor).exp()
    }
}

fn estimate_double(kernel: &dyn DoubleKernel, spec: &ContourSpec) -> Result<Estimate> {
    let h = spec.step();
    let jn = spec.half_nodes();
    let a_ln = line_values(|s| kernel.ln_s(s), spec.abscissa_s, h, jn)?;
    let b_ln = line_values(|t| kernel.ln_t(t), spec.abscissa_t, h, jn)?;
    let (ra, a) = normalise(&a_ln);
    let (rb, b) = normalise(&b_ln);
    let n = a.len();
    match kernel.coupling() {
        JointCoupling::None => {
            let sa = pairwise_sum(&a);
            let sb = pairwise_sum(&b);
            let ring = (a[0].norm() + a[n - 1].norm()) * b.iter().map(|z| z.norm()).sum::<f64>()
                + (b[0].norm() + b[n - 1].norm()) * a.iter().map(|z| z.norm()).sum::<f64>();
            let magnitude = a.iter().map(|z| z.norm()).sum::<f64>() * b.iter().map(|z| z.norm()).sum::<f64>();
            Ok(Estimate { sum: sa * sb, ln_scale: ra + rb, ring, magnitude })
        }
        JointCoupling::Diagonal => {
            let w0 = spec.abscissa_s + spec.abscissa_t;
            let zero = Complex64::new(0.0, 0.0);
            let c_ln = line_values(|w| kernel.ln_joint(w, zero), w0, h, 2 * jn)?;
            let (rc, c) = normalise(&c_ln);
            // D_m = Σ_{j+k=m} A_j B_k, m indexes 0..2n-1 (offset by 2·jn)
            let terms: Vec<Complex64> = (0..(2 * n - 1))
                .into_par_iter()
                .map(|m| {
                    let lo = m.saturating_sub(n - 1);
                    let hi = m.min(n - 1);
                    let mut d = Complex64::new(0.0, 0.0);
                    for j in lo..=hi {
                        d += a[j] * b[m - j];
                    }
                    c[m] * d
                })
                .collect();
            let sum = pairwise_sum(&terms);
            let magnitude = terms.iter().map(|z| z.norm()).sum();
            let mut ring = 0.0f64;
            for j in 0..n {
                for &k in &[0, n - 1] {
                    ring = ring.max((a[j] * b[k] * c[j + k]).norm());
                    ring = ring.max((a[k] * b[j] * c[j + k]).norm());
                }
            }
            Ok(Estimate { sum, ln_scale: ra + rb + rc, ring: ring * (4 * n) as f64, magnitude })
        }
        JointCoupling::General => {
            let rc = kernel
                .ln_joint(
                    Complex64::new(spec.abscissa_s, 0.0),
                    Complex64::new(spec.abscissa_t, 0.0),
                )?
                .re;
            let rc = if rc.is_finite() { rc } else { 0.0 };
            let rows: Vec<(Complex64, f64, f64)> = (0..n)
                .into_par_iter()
                .map(|j| -> Result<(Complex64, f64, f64)> {
                    let s = Complex64::new(spec.abscissa_s, (j as f64 - jn as f64) * h);
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut edge = 0.0f64;
                    let mut mag = 0.0f64;
                    for k in 0..n {
                        let t = Complex64::new(spec.abscissa_t, (k as f64 - jn as f64) * h);
                        let c = (kernel.ln_joint(s, t)? - rc).exp();
                        let term = a[j] * b[k] * c;
                        acc += term;
                        mag += term.norm();
                        if j == 0 || j == n - 1 || k == 0 || k == n - 1 {
                            edge = edge.max(term.norm());
                        }
                    }
                    Ok((acc, edge, mag))
                })
                .collect::<Result<_>>()?;
            let sums: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
            let ring = rows.iter().map(|r| r.1).fold(0.0, f64::max) * (4 * n) as f64;
            let magnitude = rows.iter().map(|r| r.2).sum();
            Ok(Estimate { sum: pairwise_sum(&sums), ln_scale: ra + rb + rc, ring, magnitude })
        }
    }
}

fn estimate_single(kernel: &dyn LineKernel, spec: &ContourSpec) -> Result<Estimate> {
    let h = spec.step();
    let jn = spec.half_nodes();
    let ln = line_values(|s| kernel.ln_kernel(s), spec.abscissa_s, h, jn)?;
    let (r, v) = normalise(&ln);
    let ring = v[0].norm() + v[v.len() - 1].norm();
    let magnitude = v.iter().map(|z| z.norm()).sum();
    Ok(Estimate { sum: pairwise_sum(&v), ln_scale: r, ring, magnitude })
}

/// Shared refinement driver: grows the half-height until the boundary ring
/// is negligible, then compares each grid with its every-other-node subgrid.
/// Trapezoid error decays geometrically in `1/h`, so the error at `h` is
/// roughly the square of the relative error at `2h`; a difference below
/// `√(tol/10)` already certifies `tol`. `dims` is 1 or 2.
fn refine<E>(spec: &ContourSpec, ln_factor: f64, dims: i32, mut estimate: E) -> Result<MbOutcome>
where
    E: FnMut(&ContourSpec) -> Result<Estimate>,
{
    spec.validate()?;
    let tol = spec.refine_tolerance;
    let mut cur = *spec;
    let mut prev: Option<Complex64> = None;
    let mut last_change = f64::INFINITY;
    for round in 1..=MAX_ROUNDS {
        let est = estimate(&cur)?;
        let value = est.value(ln_factor + f64::from(dims) * cur.step().ln());
        // cancellation leaves at best ~ε·magnitude of absolute accuracy
        let floor = ROUNDING_FLOOR * est.magnitude;
        let sum_norm = est.sum.norm().max(floor / tol);
        if est.ring > 0.01 * tol * sum_norm && cur.half_nodes() < MAX_HALF_NODES {
            // truncation dominates: extend the lines at fixed step
            let hn = ((cur.half_nodes() as f64) * 1.5).ceil() as usize;
            cur = cur.with_grid(cur.step(), hn.min(MAX_HALF_NODES));
            prev = None;
            continue;
        }
        let p = match prev {
            Some(p) => p,
            None => {
                let coarse = cur.with_grid(2.0 * cur.step(), cur.half_nodes() / 2);
                estimate(&coarse)?.value(ln_factor + f64::from(dims) * coarse.step().ln())
            }
        };
        let diff = (value - p).norm();
        let floor_value = floor * (value.norm() / est.sum.norm().max(f64::MIN_POSITIVE));
        last_change = diff / value.norm().max(f64::MIN_POSITIVE);
        if last_change <= tol
            || 10.0 * last_change * last_change <= tol
            || diff <= floor_value
            || value.norm() == 0.0 && p.norm() == 0.0
        {
            return finish(value, floor_value.max(diff * diff / value.norm()), round, cur);
        }
        if cur.half_nodes() * 2 > MAX_HALF_NODES {
            break;
        }
        prev = Some(value);
        cur = cur.with_grid(cur.step() / 2.0, cur.half_nodes() * 2);
    }
    Err(Error::NonConvergence { rounds: MAX_ROUNDS, last_change })
}

fn finish(value: Complex64, noise: f64, rounds: usize, spec: ContourSpec) -> Result<MbOutcome> {
    let residue = value.im.abs();
    if residue > IMAG_RESIDUE_THRESHOLD * value.re.abs() && residue > 1e-300 && residue > 8.0 * noise {
        return Err(Error::ImaginaryResidue { value: value.re, residue });
    }
    Ok(MbOutcome { value: value.re, imag_residue: residue, rounds, spec })
}

/// `(1/(2πi))² ∫∫ K(s, t) ds dt` along the lines of `spec`.
pub fn integrate_double(kernel: &dyn DoubleKernel, spec: &ContourSpec) -> Result<MbOutcome> {
    integrate_double_scaled(kernel, spec, 0.0)
}

/// [`integrate_double`] times `exp(ln_factor)`, applied before leaving log
/// form so that a huge kernel and a tiny constant can cancel.
pub fn integrate_double_scaled(kernel: &dyn DoubleKernel, spec: &ContourSpec, ln_factor: f64) -> Result<MbOutcome> {
    refine(spec, ln_factor - (4.0 * PI * PI).ln(), 2, |s| estimate_double(kernel, s))
}

/// `(1/(2πi)) ∫ K(s) ds` along `Re s = spec.abscissa_s`.
pub fn integrate_single(kernel: &dyn LineKernel, spec: &ContourSpec) -> Result<MbOutcome> {
    refine(spec, -(2.0 * PI).ln(), 1, |s| estimate_single(kernel, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Marginal,
    Fail,
}

/// Coefficient-sum discriminants of a descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Decay rate along the `Im s` axis (joint and s-channel coefficients).
    pub s_discriminant: f64,
    /// Decay rate along the `Im t` axis.
    pub t_discriminant: f64,
    /// Net joint-block coefficient sums `(Σ num − Σ den)` per variable.
    pub joint_discriminants: (f64, f64),
    /// Slowest decay over all directions of the `(Im s, Im t)` plane.
    pub min_directional_rate: f64,
    pub verdict: Verdict,
}

pub fn convergence_screen(desc: &BivariateHDescriptor) -> ConvergenceReport {
    let kernel = desc.kernel_factors();
    let along = |u: f64, v: f64| kernel.all().map(|f| f.decay(u, v)).sum::<f64>();
    let joint = kernel.joint.iter().fold((0.0, 0.0), |acc, f| {
        let sgn = if f.numerator { 1.0 } else { -1.0 };
        (acc.0 + sgn * f.coef_s, acc.1 + sgn * f.coef_t)
    });
    let min_rate = kernel.min_decay_rate();
    let verdict = if min_rate > 1e-9 {
        Verdict::Pass
    } else if min_rate >= -1e-9 {
        Verdict::Marginal
    } else {
        Verdict::Fail
    };
    ConvergenceReport {
        s_discriminant: along(1.0, 0.0),
        t_discriminant: along(0.0, 1.0),
        joint_discriminants: joint,
        min_directional_rate: min_rate,
        verdict,
    }
}
