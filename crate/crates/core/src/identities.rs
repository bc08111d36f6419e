//! Integral and derivative identities of the bivariate H-function as
//! descriptor transformations.
//!
//! Every operation takes the function `x ↦ H[a·x, b·x]` and returns a
//! [`ScaledBivariateH`]. Integrals return constants (evaluate with
//! [`ScaledBivariateH::value`]); derivatives return functions of `x`
//! (evaluate with [`ScaledBivariateH::value_at`]). [`apply`] bundles the
//! result with an independent numerical oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fox_h::{
    eval_bivariate_with, BivariateHDescriptor, EvalOptions, GammaPair, GammaTriple,
    ScaledBivariateH,
};
use crate::mellin_barnes::{choose_contours_kernel, Verdict, DEFAULT_REFINE_TOLERANCE};
use crate::quadrature::{integrate_positive_axis, integrate_to, Tolerance};
use crate::special::erfc;

/// Kernels `g(x)` of the weighted integrals `∫₀^∞ g(x) H[ax, bx] dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k")]
pub enum KernelKind {
    /// `exp(−K√x)`
    ExpSqrt(f64),
    /// `√x · exp(−K√x)`
    SqrtExpSqrt(f64),
    /// `erfc(√(Kx))`
    ErfcSqrt(f64),
}

impl KernelKind {
    pub fn k(&self) -> f64 {
        match *self {
            KernelKind::ExpSqrt(k) | KernelKind::SqrtExpSqrt(k) | KernelKind::ErfcSqrt(k) => k,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            KernelKind::ExpSqrt(k) => (-k * x.sqrt()).exp(),
            KernelKind::SqrtExpSqrt(k) => x.sqrt() * (-k * x.sqrt()).exp(),
            KernelKind::ErfcSqrt(k) => erfc((k * x).sqrt()),
        }
    }
}

/// Which integration variable absorbs the shift in [`derivative_x`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftForm {
    TShift,
    SShift,
}

/// Argument scale differentiated by [`derivative_arg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgAxis {
    A,
    B,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn with_joint(
    desc: &BivariateHDescriptor,
    numerators: &[GammaTriple],
    lower_append: &[GammaTriple],
) -> BivariateHDescriptor {
    let mut out = desc.clone();
    let mut upper = numerators.to_vec();
    upper.extend(desc.joint_upper.iter().copied());
    out.joint_upper = upper;
    out.joint_orders.n += numerators.len();
    out.joint_orders.p += numerators.len();
    out.joint_lower.extend(lower_append.iter().copied());
    out.joint_orders.q += lower_append.len();
    out
}

/// Rejects transformed descriptors whose gamma factors admit no contour
/// (the transformed integral diverges) or whose kernel grows.
fn ensure_evaluable(desc: &BivariateHDescriptor) -> Result<()> {
    let report = desc.validate()?;
    if report.convergence.verdict == Verdict::Fail {
        return Err(Error::Divergence(format!(
            "transformed kernel grows along the contour (rate {:.3})",
            report.convergence.min_directional_rate
        )));
    }
    match choose_contours_kernel(&desc.kernel_factors(), DEFAULT_REFINE_TOLERANCE) {
        Ok(_) => Ok(()),
        Err(Error::NoSeparatingStrip(msg)) => Err(Error::Divergence(format!(
            "integral diverges for this descriptor ({msg})"
        ))),
        Err(e) => Err(e),
    }
}

/// `∫₀^X H[ax, bx] dx = X · H'[aX, bX]`.
pub fn definite_integral(desc: &BivariateHDescriptor, a: f64, b: f64, upper: f64) -> Result<ScaledBivariateH> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_positive("X", upper)?;
    desc.validate()?;
    let out = with_joint(desc, &[GammaTriple::new(0.0, 1.0, 1.0)], &[GammaTriple::new(-1.0, 1.0, 1.0)]);
    ensure_evaluable(&out)?;
    Ok(ScaledBivariateH::new(upper, a * upper, b * upper, out))
}

/// `∫₀^∞ e^{−ŝx} H[ax, bx] dx = ŝ⁻¹ · H'[a/ŝ, b/ŝ]`.
pub fn laplace_transform(desc: &BivariateHDescriptor, a: f64, b: f64, s_hat: f64) -> Result<ScaledBivariateH> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    if !(s_hat > 0.0 && s_hat.is_finite()) {
        return Err(Error::Divergence(format!("transform variable must be positive, got {s_hat}")));
    }
    desc.validate()?;
    let out = with_joint(desc, &[GammaTriple::new(0.0, 1.0, 1.0)], &[]);
    ensure_evaluable(&out)?;
    Ok(ScaledBivariateH::new(1.0 / s_hat, a / s_hat, b / s_hat, out))
}

/// `∫₀^∞ g(x) H[ax, bx] dx` for the kernels of [`KernelKind`].
pub fn kernel_integral(desc: &BivariateHDescriptor, a: f64, b: f64, kind: KernelKind) -> Result<ScaledBivariateH> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let k = kind.k();
    check_positive("K", k)?;
    desc.validate()?;
    let (pref, scale, out) = match kind {
        KernelKind::ExpSqrt(_) => (
            2.0 / (k * k),
            1.0 / (k * k),
            with_joint(desc, &[GammaTriple::new(-1.0, 2.0, 2.0)], &[]),
        ),
        KernelKind::SqrtExpSqrt(_) => (
            2.0 / (k * k * k),
            1.0 / (k * k),
            with_joint(desc, &[GammaTriple::new(-2.0, 2.0, 2.0)], &[]),
        ),
        KernelKind::ErfcSqrt(_) => (
            1.0 / (k * std::f64::consts::PI.sqrt()),
            1.0 / k,
            with_joint(
                desc,
                &[GammaTriple::new(0.0, 1.0, 1.0), GammaTriple::new(-0.5, 1.0, 1.0)],
                &[GammaTriple::new(-1.0, 1.0, 1.0)],
            ),
        ),
    };
    ensure_evaluable(&out)?;
    Ok(ScaledBivariateH::new(pref, a * scale, b * scale, out))
}

/// `d/dx H[ax, bx]` as a function of `x`.
pub fn derivative_x(desc: &BivariateHDescriptor, a: f64, b: f64, form: ShiftForm) -> Result<ScaledBivariateH> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    desc.validate()?;
    let mut out = desc.clone();
    let pref = match form {
        ShiftForm::TShift => {
            for g in out.joint_upper.iter_mut() {
                g.param -= g.coef_t;
            }
            for g in out.joint_lower.iter_mut() {
                g.param -= g.coef_t;
            }
            for g in out.t_upper.iter_mut().chain(out.t_lower.iter_mut()) {
                g.param -= g.coef;
            }
            b
        }
        ShiftForm::SShift => {
            for g in out.joint_upper.iter_mut() {
                g.param -= g.coef_s;
            }
            for g in out.joint_lower.iter_mut() {
                g.param -= g.coef_s;
            }
            for g in out.s_upper.iter_mut().chain(out.s_lower.iter_mut()) {
                g.param -= g.coef;
            }
            a
        }
    };
    let out = with_joint(&out, &[GammaTriple::new(-1.0, 1.0, 1.0)], &[GammaTriple::new(0.0, 1.0, 1.0)]);
    ensure_evaluable(&out)?;
    Ok(ScaledBivariateH::new(pref, a, b, out))
}

/// `∂/∂a H[ax, bx]` (or `∂/∂b`) as a function of `x`.
pub fn derivative_arg(desc: &BivariateHDescriptor, a: f64, b: f64, axis: ArgAxis) -> Result<ScaledBivariateH> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    desc.validate()?;
    let mut out = desc.clone();
    // Γ(1 + s)/Γ(s) = s: a numerator upper pair and a denominator lower pair
    let (orders, upper, lower, pref) = match axis {
        ArgAxis::A => (&mut out.s_orders, &mut out.s_upper, &mut out.s_lower, 1.0 / a),
        ArgAxis::B => (&mut out.t_orders, &mut out.t_upper, &mut out.t_lower, 1.0 / b),
    };
    upper.insert(orders.n, GammaPair::new(0.0, 1.0));
    lower.push(GammaPair::new(1.0, 1.0));
    orders.n += 1;
    orders.p += 1;
    orders.q += 1;
    ensure_evaluable(&out)?;
    Ok(ScaledBivariateH::new(pref, a, b, out))
}

/// One identity together with the point it is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "identity", rename_all = "kebab-case")]
pub enum Identity {
    DefiniteIntegral { upper: f64 },
    LaplaceTransform { s_hat: f64 },
    KernelIntegral { kernel: KernelKind },
    DerivativeX { x: f64, form: ShiftForm },
    DerivativeArg { x: f64, axis: ArgAxis },
}

impl Identity {
    pub fn name(&self) -> &'static str {
        match self {
            Identity::DefiniteIntegral { .. } => "definite-integral",
            Identity::LaplaceTransform { .. } => "laplace-transform",
            Identity::KernelIntegral { kernel: KernelKind::ExpSqrt(_) } => "kernel-exp-sqrt",
            Identity::KernelIntegral { kernel: KernelKind::SqrtExpSqrt(_) } => "kernel-sqrt-exp-sqrt",
            Identity::KernelIntegral { kernel: KernelKind::ErfcSqrt(_) } => "kernel-erfc-sqrt",
            Identity::DerivativeX { form: ShiftForm::TShift, .. } => "derivative-x-t-shift",
            Identity::DerivativeX { form: ShiftForm::SShift, .. } => "derivative-x-s-shift",
            Identity::DerivativeArg { axis: ArgAxis::A, .. } => "derivative-arg-a",
            Identity::DerivativeArg { axis: ArgAxis::B, .. } => "derivative-arg-b",
        }
    }

    fn is_derivative(&self) -> bool {
        matches!(self, Identity::DerivativeX { .. } | Identity::DerivativeArg { .. })
    }
}

/// Closed form of an identity applied to `x ↦ prefactor · H[ax, bx]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityApplication {
    pub source: BivariateHDescriptor,
    pub source_prefactor: f64,
    pub a: f64,
    pub b: f64,
    pub identity: Identity,
    pub result: ScaledBivariateH,
}

/// Outcome of comparing a closed form against its numerical oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub identity: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn compare(identity: &str, closed_form: f64, oracle: f64, tolerance: f64) -> Self {
        let relative_error = relative_error(closed_form, oracle);
        OracleReport {
            identity: identity.to_string(),
            closed_form,
            oracle,
            relative_error,
            tolerance,
            passed: relative_error <= tolerance,
        }
    }
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    if value == reference {
        return 0.0;
    }
    let err = (value - reference).abs() / reference.abs();
    if err.is_nan() {
        f64::INFINITY
    } else {
        err
    }
}

/// Applies `identity` to `x ↦ prefactor · H[ax, bx]`.
pub fn apply(
    desc: &BivariateHDescriptor,
    prefactor: f64,
    a: f64,
    b: f64,
    identity: Identity,
) -> Result<IdentityApplication> {
    let result = match identity {
        Identity::DefiniteIntegral { upper } => definite_integral(desc, a, b, upper)?,
        Identity::LaplaceTransform { s_hat } => laplace_transform(desc, a, b, s_hat)?,
        Identity::KernelIntegral { kernel } => kernel_integral(desc, a, b, kernel)?,
        Identity::DerivativeX { form, .. } => derivative_x(desc, a, b, form)?,
        Identity::DerivativeArg { axis, .. } => derivative_arg(desc, a, b, axis)?,
    }
    .times(prefactor);
    Ok(IdentityApplication { source: desc.clone(), source_prefactor: prefactor, a, b, identity, result })
}

/// Precision used for the integrand samples inside the oracles.
const ORACLE_EVAL: EvalOptions = EvalOptions { refine_tolerance: 1e-11 };
/// Finite-difference samples need tighter values than the quadrature ones.
const FD_EVAL: EvalOptions = EvalOptions { refine_tolerance: 1e-13 };

impl IdentityApplication {
    /// Value of the closed form at the identity's evaluation point.
    pub fn closed_form(&self) -> Result<f64> {
        match self.identity {
            Identity::DerivativeX { x, .. } | Identity::DerivativeArg { x, .. } => {
                self.result.value_at_with(x, &ORACLE_EVAL)
            }
            _ => self.result.value_at_with(1.0, &ORACLE_EVAL),
        }
    }

    fn source_at(&self, a: f64, b: f64, x: f64, opts: &EvalOptions) -> Result<f64> {
        Ok(self.source_prefactor * eval_bivariate_with(&self.source, a * x, b * x, opts)?.value)
    }

    /// Independent value: adaptive quadrature for integrals, Richardson
    /// extrapolated central differences for derivatives.
    pub fn oracle(&self) -> Result<f64> {
        let tol = Tolerance { abs: 0.0, rel: 1e-8 };
        let (a, b) = (self.a, self.b);
        let scale = 1.0 / (a + b);
        match self.identity {
            Identity::DefiniteIntegral { upper } => {
                Ok(integrate_to(|x| self.source_at(a, b, x, &ORACLE_EVAL), upper, tol)?.value)
            }
            Identity::LaplaceTransform { s_hat } => Ok(integrate_positive_axis(
                |x| {
                    let w = (-s_hat * x).exp();
                    if w == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(w * self.source_at(a, b, x, &ORACLE_EVAL)?)
                },
                scale.min(1.0 / s_hat),
                tol,
            )?
            .value),
            Identity::KernelIntegral { kernel } => Ok(integrate_positive_axis(
                |x| {
                    let w = kernel.eval(x);
                    if w == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(w * self.source_at(a, b, x, &ORACLE_EVAL)?)
                },
                scale,
                tol,
            )?
            .value),
            Identity::DerivativeX { x, .. } => {
                richardson(|u| self.source_at(a, b, u, &FD_EVAL), x, 1e-4 * x)
            }
            Identity::DerivativeArg { x, axis } => match axis {
                ArgAxis::A => richardson(|u| self.source_at(u, b, x, &FD_EVAL), a, 1e-4 * a),
                ArgAxis::B => richardson(|u| self.source_at(a, u, x, &FD_EVAL), b, 1e-4 * b),
            },
        }
    }

    /// Runs the oracle and compares. Derivatives default to the tighter
    /// tolerance when `tolerance` is `None`.
    pub fn oracle_check(&self, tolerance: Option<f64>) -> Result<OracleReport> {
        let tol = tolerance.unwrap_or(if self.identity.is_derivative() { 1e-5 } else { 1e-4 });
        Ok(OracleReport::compare(self.identity.name(), self.closed_form()?, self.oracle()?, tol))
    }
}

/// Central difference with step `h`, one Richardson step.
pub fn richardson<F: FnMut(f64) -> Result<f64>>(mut f: F, x: f64, h: f64) -> Result<f64> {
    let mut central = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// A named descriptor evaluated along `x ↦ prefactor · H[ax, bx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub descriptor: BivariateHDescriptor,
    pub prefactor: f64,
    pub a: f64,
    pub b: f64,
}

/// `Γ(λ + s + t) Γ(−s) Γ(−t)` kernel: `H[x, y] = Γ(λ) (1 + x + y)^{−λ}`.
pub fn rational_descriptor(lambda: f64) -> BivariateHDescriptor {
    BivariateHDescriptor::from_lists(
        1,
        vec![GammaTriple::new(1.0 - lambda, 1.0, 1.0)],
        vec![],
        (1, 0),
        vec![],
        vec![GammaPair::new(0.0, 1.0)],
        (1, 0),
        vec![],
        vec![GammaPair::new(0.0, 1.0)],
    )
}

/// Evaluable descriptors with distinct joint, channel and denominator
/// structure, used by the oracle suites.
pub fn oracle_corpus() -> Vec<CorpusEntry> {
    use crate::fading::{composite_pdf_descriptor, FadingParams, Format};
    let mut out = vec![
        CorpusEntry {
            name: "separable-exponential".into(),
            descriptor: crate::fox_h::separable_exponential(),
            prefactor: 1.0,
            a: 1.0,
            b: 1.0,
        },
        CorpusEntry {
            name: "rational-1.5".into(),
            descriptor: rational_descriptor(1.5),
            prefactor: crate::special::gamma_real(1.5).map(|g| 1.0 / g).unwrap_or(1.0),
            a: 0.7,
            b: 1.3,
        },
        CorpusEntry {
            name: "rational-3".into(),
            descriptor: rational_descriptor(3.0),
            prefactor: 0.5,
            a: 2.0,
            b: 0.5,
        },
    ];
    // joint denominator and a non-unit channel coefficient
    let mut d = rational_descriptor(2.5);
    d.joint_lower.push(GammaTriple::new(-1.0, 1.0, 1.0));
    d.joint_orders.q = 1;
    d.s_lower[0] = GammaPair::new(0.5, 2.0);
    out.push(CorpusEntry { name: "rational-joint-lower".into(), descriptor: d, prefactor: 1.0, a: 1.1, b: 0.9 });

    // non-separable with a t-channel upper numerator
    let d = BivariateHDescriptor::from_lists(
        1,
        vec![GammaTriple::new(-1.0, 1.0, 1.0)],
        vec![],
        (1, 0),
        vec![],
        vec![GammaPair::new(0.25, 1.0)],
        (1, 1),
        vec![GammaPair::new(0.5, 1.0)],
        vec![GammaPair::new(0.0, 1.0), GammaPair::new(0.3, 1.0)],
    );
    out.push(CorpusEntry { name: "mixed-channel".into(), descriptor: d, prefactor: 1.0, a: 0.8, b: 1.7 });

    let fading_sets = [
        (2.0, 0.5, 1.5, 2.5, Format::I),
        (1.5, 0.3, 1.0, 1.5, Format::I),
        (3.0, 0.5, 3.5, 3.5, Format::I),
        (2.0, 0.3, 1.0, 3.5, Format::I),
        (3.0, 0.3, 1.5, 2.5, Format::I),
        (1.5, 0.5, 3.5, 2.5, Format::II),
    ];
    for (alpha, eta, mu, m_s, format) in fading_sets {
        let p = FadingParams { alpha, eta, mu, m_s, format, mean_snr: 1.0 };
        if let Ok(c) = composite_pdf_descriptor(&p) {
            out.push(CorpusEntry {
                name: format!("composite-a{alpha}-e{eta}-m{mu}-ms{m_s}-{format:?}"),
                prefactor: c.constant(),
                descriptor: c.descriptor,
                a: c.x_scale,
                b: c.y_scale,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fox_h::{eval_bivariate, separable_exponential};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        relative_error(a, b) <= rel
    }

    #[test]
    fn elementary_integrals() {
        let d = separable_exponential();
        let v = definite_integral(&d, 1.0, 1.0, 1.0).unwrap().value().unwrap();
        assert!(close(v, (1.0 - (-2.0f64).exp()) / 2.0, 1e-9), "{v}");
        let v = laplace_transform(&d, 1.0, 1.0, 1.0).unwrap().value().unwrap();
        assert!(close(v, 1.0 / 3.0, 1e-9), "{v}");
        let v = kernel_integral(&d, 1.0, 1.0, KernelKind::ErfcSqrt(1.0)).unwrap().value().unwrap();
        assert!(close(v, 0.5 * (1.0 - (1.0f64 / 3.0).sqrt()), 1e-9), "{v}");
        // ∫ e^{−2√x} e^{−2x} dx = 1/2 − √π e^{1/2} erfc(1/√2)/(2√2)
        let v = kernel_integral(&d, 1.0, 1.0, KernelKind::ExpSqrt(2.0)).unwrap().value().unwrap();
        let exact = 0.5
            - std::f64::consts::PI.sqrt() * 0.5f64.exp() * erfc(0.5f64.sqrt()) / (2.0 * 2.0f64.sqrt());
        assert!(close(v, exact, 1e-9), "{v} vs {exact}");
    }

    #[test]
    fn elementary_derivatives() {
        let d = separable_exponential();
        let e2 = (-2.0f64).exp();
        for form in [ShiftForm::TShift, ShiftForm::SShift] {
            let v = derivative_x(&d, 1.0, 1.0, form).unwrap().value_at(1.0).unwrap();
            assert!(close(v, -2.0 * e2, 1e-9), "{form:?} {v}");
        }
        let da = derivative_arg(&d, 1.0, 1.0, ArgAxis::A).unwrap().value_at(1.0).unwrap();
        let db = derivative_arg(&d, 1.0, 1.0, ArgAxis::B).unwrap().value_at(1.0).unwrap();
        assert!(close(da, -e2, 1e-9) && close(db, -e2, 1e-9));
    }

    #[test]
    fn rational_descriptor_closed_form() {
        let d = rational_descriptor(2.0);
        let v = eval_bivariate(&d, 0.5, 1.5).unwrap();
        // Γ(2) = 1
        assert!(close(v, 1.0 / 9.0, 1e-9), "{v}");
    }

    #[test]
    fn orders_track_list_lengths() {
        let d = separable_exponential();
        let r = definite_integral(&d, 1.0, 1.0, 2.0).unwrap();
        let o = r.descriptor.joint_orders;
        assert_eq!((o.m, o.n, o.p, o.q), (0, 1, 1, 1));
        let r = laplace_transform(&d, 1.0, 1.0, 2.0).unwrap();
        let o = r.descriptor.joint_orders;
        assert_eq!((o.n, o.p, o.q), (1, 1, 0));
        let r = derivative_arg(&d, 1.0, 1.0, ArgAxis::A).unwrap();
        assert_eq!(r.descriptor.s_orders.n, 1);
        assert_eq!(r.descriptor.s_upper[0], GammaPair::new(0.0, 1.0));
    }

    #[test]
    fn divergent_transform_is_reported() {
        // e^{−x} x^{−1.5} · e^{−y}: not integrable at the origin
        let mut d = separable_exponential();
        d.s_lower[0].param = -1.5;
        assert!(matches!(definite_integral(&d, 1.0, 1.0, 1.0), Err(Error::Divergence(_))));
        assert!(matches!(laplace_transform(&d, 1.0, 1.0, 0.0), Err(Error::Divergence(_))));
    }
}
