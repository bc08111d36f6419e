//! α-η-μ multipath fading with inverse-gamma shadowing.
//!
//! The instantaneous SNR conditioned on the shadowing `z` is α-η-μ with
//! scale `γ̄·z`; `z` is inverse-gamma with shape `m_s` and unit `Ω`. Every
//! closed form is a [`ScaledBivariateH`] derived from the composite PDF
//! descriptor through [`crate::identities`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fox_h::{
    eval_univariate, BivariateHDescriptor, GammaPair, GammaTriple, ScaledBivariateH,
    UnivariateHDescriptor,
};
use crate::identities::{definite_integral, kernel_integral, laplace_transform, KernelKind};
use crate::quadrature::{integrate, integrate_positive_axis, integrate_to, Tolerance};
use crate::special::{bessel_i_scaled, erfc, gamma_real, ln_gamma_real};

/// Offset used in place of `η = 1`.
pub const ETA_LIMIT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub alpha: f64,
    pub eta: f64,
    pub mu: f64,
    pub m_s: f64,
    #[serde(default = "default_format")]
    pub format: Format,
    /// `γ̄`, linear scale.
    #[serde(default = "default_mean_snr")]
    pub mean_snr: f64,
}

fn default_format() -> Format {
    Format::I
}

fn default_mean_snr() -> f64 {
    1.0
}

impl FadingParams {
    pub fn new(alpha: f64, eta: f64, mu: f64, m_s: f64, format: Format, mean_snr: f64) -> Result<Self> {
        let p = FadingParams { alpha, eta, mu, m_s, format, mean_snr };
        p.validate()?;
        Ok(p)
    }

    /// Replaces `η = 1` by `1 − ETA_LIMIT_EPS`.
    pub fn with_eta_limit(mut self) -> Self {
        if self.eta == 1.0 {
            self.eta = 1.0 - ETA_LIMIT_EPS;
        }
        self
    }

    pub fn with_mean_snr(mut self, mean_snr: f64) -> Self {
        self.mean_snr = mean_snr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("mu", self.mu), ("m_s", self.m_s), ("mean_snr", self.mean_snr)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.eta == 1.0 {
            return Err(Error::EtaEqualsOne);
        }
        match self.format {
            Format::I if self.eta > 0.0 && self.eta.is_finite() => Ok(()),
            Format::II if self.eta > 0.0 && self.eta < 1.0 => Ok(()),
            Format::I => Err(Error::InvalidArgument(format!("format I requires eta > 0, got {}", self.eta))),
            Format::II => Err(Error::InvalidArgument(format!(
                "format II requires 0 < eta < 1, got {}",
                self.eta
            ))),
        }
    }
}

/// Symbols of the PDF and its Fox-H form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub h: f64,
    pub big_h: f64,
    pub p_hat: f64,
    pub p: f64,
    pub m_const: f64,
    pub q: f64,
    pub q_hat: f64,
    pub t: f64,
    pub t_hat: f64,
    pub r: f64,
    pub r_hat: f64,
    ln_m: f64,
}

pub fn derive_constants(p: &FadingParams) -> Result<DerivedConstants> {
    p.validate()?;
    let (h, big_h) = match p.format {
        Format::I => {
            // η and 1/η describe the same channel with the axes swapped
            let e = if p.eta > 1.0 { 1.0 / p.eta } else { p.eta };
            ((2.0 + 1.0 / e + e) / 4.0, (1.0 / e - e) / 4.0)
        }
        Format::II => {
            let d = 1.0 - p.eta * p.eta;
            (1.0 / d, p.eta / d)
        }
    };
    let mu = p.mu;
    let alpha = p.alpha;
    let p_hat = mu + 0.5;
    let pp = mu - 0.5;
    let ln_m = alpha.ln() + p_hat * mu.ln() + mu * h.ln() - ln_gamma_real(mu)?.0 - pp * big_h.ln();
    let m_const = ln_m.exp();
    let t = 2.0 * mu * (h - big_h);
    let t_hat = 4.0 * mu * big_h;
    let k = 2.0 / alpha;
    let r = (k * k).ln() + ln_m + (k - p_hat) * t.ln();
    let am = alpha * mu;
    let ln_r_hat = 0.5 * PI.ln() + alpha.ln() + 2.0 * mu * mu.ln() + mu * h.ln()
        + ln_gamma_real(p.m_s + am)?.0
        - ln_gamma_real(mu)?.0
        - ln_gamma_real(mu + 0.5)?.0
        - ln_gamma_real(p.m_s)?.0
        - am * p.m_s.ln();
    Ok(DerivedConstants {
        h,
        big_h,
        p_hat,
        p: pp,
        m_const,
        q: 2.0 * mu * h,
        q_hat: 2.0 * mu * big_h,
        t,
        t_hat,
        r: r.exp(),
        r_hat: ln_r_hat.exp(),
        ln_m,
    })
}

/// Conditional (unshadowed) α-η-μ SNR density with scale `γ̄`.
pub fn pdf_direct(gamma: f64, p: &FadingParams) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let c = derive_constants(p)?;
    let half = p.alpha / 2.0;
    let w = (gamma / p.mean_snr).powf(half);
    let scaled = bessel_i_scaled(c.p, c.q_hat * w)?;
    if scaled == 0.0 {
        return Ok(0.0);
    }
    // e^{−𝒬w} I(𝒬̂w) = e^{−𝒯w/…}: 𝒬 − 𝒬̂ = 𝒯
    let ln = 0.5 * PI.ln() + c.ln_m + (half * c.p_hat - 1.0) * gamma.ln()
        - half * c.p_hat * p.mean_snr.ln()
        - c.t * w
        + scaled.ln();
    Ok(ln.exp())
}

/// Power applied to `𝒯̂` in the second H-function argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArgumentExponent {
    /// `𝒯̂^{2/α}`; the form that reproduces the direct density.
    TwoOverAlpha,
    /// `𝒯̂^{α/2}`; kept for adjudication only.
    AlphaOverTwo,
}

impl ArgumentExponent {
    fn apply(self, t_hat: f64, alpha: f64) -> f64 {
        match self {
            ArgumentExponent::TwoOverAlpha => t_hat.powf(2.0 / alpha),
            ArgumentExponent::AlphaOverTwo => t_hat.powf(alpha / 2.0),
        }
    }
}

fn s_block(c: &DerivedConstants, k: f64) -> (Vec<GammaPair>, Vec<GammaPair>) {
    (vec![], vec![GammaPair::new(c.p_hat - k, k)])
}

fn t_block(c: &DerivedConstants, k: f64) -> (Vec<GammaPair>, Vec<GammaPair>) {
    (vec![GammaPair::new(0.5, k)], vec![GammaPair::new(c.p, k), GammaPair::new(-c.p, k)])
}

/// Conditional density as a product of two univariate H-functions.
pub fn pdf_foxh(gamma: f64, p: &FadingParams) -> Result<f64> {
    pdf_foxh_with(gamma, p, ArgumentExponent::TwoOverAlpha)
}

pub fn pdf_foxh_with(gamma: f64, p: &FadingParams, exponent: ArgumentExponent) -> Result<f64> {
    let c = derive_constants(p)?;
    let k = 2.0 / p.alpha;
    let u = gamma / p.mean_snr;
    let (su, sl) = s_block(&c, k);
    let (tu, tl) = t_block(&c, k);
    let h1 = eval_univariate(&UnivariateHDescriptor::new(1, 0, su, sl), c.t.powf(k) * u)?;
    let h2 = eval_univariate(&UnivariateHDescriptor::new(1, 1, tu, tl), exponent.apply(c.t_hat, p.alpha) * u)?;
    Ok(c.r / p.mean_snr * h1 * h2)
}

/// Inverse-gamma density with shape `m_s` and unit scale parameter.
pub fn igamma_pdf(z: f64, m_s: f64) -> Result<f64> {
    if !(z > 0.0) || !(m_s > 0.0) {
        return Err(Error::InvalidArgument(format!("igamma_pdf needs z, m_s > 0 (z = {z}, m_s = {m_s})")));
    }
    let ln = m_s * m_s.ln() - (m_s + 1.0) * z.ln() - m_s / z - ln_gamma_real(m_s)?.0;
    Ok(ln.exp())
}

/// Composite density `γ ↦ prefactor · H[x_scale·γ, y_scale·γ]`.
pub fn composite_pdf_descriptor(p: &FadingParams) -> Result<ScaledBivariateH> {
    composite_pdf_descriptor_with(p, ArgumentExponent::TwoOverAlpha)
}

pub fn composite_pdf_descriptor_with(p: &FadingParams, exponent: ArgumentExponent) -> Result<ScaledBivariateH> {
    let c = derive_constants(p)?;
    let k = 2.0 / p.alpha;
    let (su, sl) = s_block(&c, k);
    let (tu, tl) = t_block(&c, k);
    let desc = BivariateHDescriptor::from_lists(
        1,
        vec![GammaTriple::new(-p.m_s, 1.0, 1.0)],
        vec![],
        (1, 0),
        su,
        sl,
        (1, 1),
        tu,
        tl,
    );
    let g = p.mean_snr * p.m_s;
    Ok(ScaledBivariateH::new(c.r / p.mean_snr, c.t.powf(k) / g, exponent.apply(c.t_hat, p.alpha) / g, desc)
        .times_ln(-ln_gamma_real(p.m_s + 1.0)?.0))
}

pub fn composite_pdf(gamma: f64, p: &FadingParams) -> Result<f64> {
    composite_pdf_descriptor(p)?.value_at(gamma)
}

/// Generalised MGF `E[γⁿ e^{−sγ}]` as a closed form.
pub fn gen_mgf_descriptor(p: &FadingParams, n: u32, s: f64) -> Result<ScaledBivariateH> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Divergence(format!("MGF variable must be positive, got {s}")));
    }
    let base = composite_pdf_descriptor(p)?;
    let mut desc = base.descriptor.clone();
    desc.joint_upper.insert(0, GammaTriple::new(-(n as f64), 1.0, 1.0));
    desc.joint_orders.n += 1;
    desc.joint_orders.p += 1;
    Ok(ScaledBivariateH::new(
        base.prefactor / s.powi(n as i32 + 1),
        base.x_scale / s,
        base.y_scale / s,
        desc,
    )
    .times_ln(base.ln_factor))
}

pub fn gen_mgf(p: &FadingParams, n: u32, s: f64) -> Result<f64> {
    gen_mgf_descriptor(p, n, s)?.value()
}

pub fn outage_descriptor(p: &FadingParams, gamma_th: f64) -> Result<ScaledBivariateH> {
    let base = composite_pdf_descriptor(p)?;
    Ok(definite_integral(&base.descriptor, base.x_scale, base.y_scale, gamma_th)?.times(base.prefactor).times_ln(base.ln_factor))
}

/// `P(γ < γ_th)`.
pub fn outage(p: &FadingParams, gamma_th: f64) -> Result<f64> {
    if gamma_th < 0.0 || gamma_th.is_nan() {
        return Err(Error::InvalidArgument(format!("threshold must be non-negative, got {gamma_th}")));
    }
    if gamma_th == 0.0 {
        return Ok(0.0);
    }
    let v = outage_descriptor(p, gamma_th)?.value()?;
    Ok(v.clamp(0.0, 1.0))
}

/// Summation range of the M-PSK conditional error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpskRange {
    /// `l = 0 … M/4 − 1` (one quadrant of the constellation).
    Quadrant,
    /// `l = 0 … M − 1`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum ModulationSpec {
    /// `P_e(γ) = A_c · erfc(√(B_c γ))`
    Coherent {
        #[serde(rename = "A_c")]
        a_c: f64,
        #[serde(rename = "B_c")]
        b_c: f64,
    },
    /// `P_e(γ) = A_nc · exp(−B_nc γ)`
    NonCoherent {
        #[serde(rename = "A_nc")]
        a_nc: f64,
        #[serde(rename = "B_nc")]
        b_nc: f64,
    },
    LaplacianBpsk,
    LaplacianQpsk,
    LaplacianMpsk {
        #[serde(rename = "M")]
        m: u32,
    },
}

impl ModulationSpec {
    pub const BPSK: ModulationSpec = ModulationSpec::Coherent { a_c: 0.5, b_c: 1.0 };
    pub const DBPSK: ModulationSpec = ModulationSpec::NonCoherent { a_nc: 0.5, b_nc: 1.0 };
    pub const BFSK: ModulationSpec = ModulationSpec::Coherent { a_c: 0.5, b_c: 0.5 };
    pub const NC_BFSK: ModulationSpec = ModulationSpec::NonCoherent { a_nc: 0.5, b_nc: 0.5 };

    /// Named presets: `bpsk`, `dbpsk`, `bfsk`, `ncbfsk`, `lbpsk`, `lqpsk`,
    /// `lmpsk<M>`.
    pub fn preset(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "bpsk" => Self::BPSK,
            "dbpsk" => Self::DBPSK,
            "bfsk" => Self::BFSK,
            "ncbfsk" | "nc-bfsk" => Self::NC_BFSK,
            "lbpsk" | "laplacian-bpsk" => ModulationSpec::LaplacianBpsk,
            "lqpsk" | "laplacian-qpsk" => ModulationSpec::LaplacianQpsk,
            other => {
                let digits = other.strip_prefix("lmpsk").or_else(|| other.strip_prefix("laplacian-mpsk"));
                match digits.and_then(|d| d.trim_start_matches('-').parse::<u32>().ok()) {
                    Some(m) => ModulationSpec::LaplacianMpsk { m },
                    None => {
                        return Err(Error::InvalidArgument(format!("unknown modulation preset '{name}'")))
                    }
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match *self {
            ModulationSpec::Coherent { a_c, b_c } => format!("coherent(A_c={a_c},B_c={b_c})"),
            ModulationSpec::NonCoherent { a_nc, b_nc } => format!("noncoherent(A_nc={a_nc},B_nc={b_nc})"),
            ModulationSpec::LaplacianBpsk => "laplacian-bpsk".into(),
            ModulationSpec::LaplacianQpsk => "laplacian-qpsk".into(),
            ModulationSpec::LaplacianMpsk { m } => format!("laplacian-mpsk{m}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |n: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{n} must be positive, got {v}")))
            }
        };
        match *self {
            ModulationSpec::Coherent { a_c, b_c } => pos("A_c", a_c).and(pos("B_c", b_c)),
            ModulationSpec::NonCoherent { a_nc, b_nc } => pos("A_nc", a_nc).and(pos("B_nc", b_nc)),
            ModulationSpec::LaplacianMpsk { m } if m < 8 || m % 4 != 0 => Err(Error::InvalidConstellation(m)),
            _ => Ok(()),
        }
    }

    /// Conditional error probability at instantaneous SNR `γ`.
    pub fn conditional_error(&self, gamma: f64) -> Result<f64> {
        self.validate()?;
        let g = gamma.max(0.0);
        Ok(match *self {
            ModulationSpec::Coherent { a_c, b_c } => a_c * erfc((b_c * g).sqrt()),
            ModulationSpec::NonCoherent { a_nc, b_nc } => a_nc * (-b_nc * g).exp(),
            _ => laplacian_terms(self, MpskRange::Quadrant)?
                .iter()
                .map(|t| t.conditional(g))
                .sum(),
        })
    }
}

/// `coef · γ^{power/2} · exp(−k√γ)`, `power ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplacianTerm {
    pub coef: f64,
    pub k: f64,
    pub sqrt_power: bool,
}

impl LaplacianTerm {
    pub fn conditional(&self, gamma: f64) -> f64 {
        let r = gamma.sqrt();
        let base = self.coef * (-self.k * r).exp();
        if self.sqrt_power {
            base * r
        } else {
            base
        }
    }

    fn kernel(&self) -> KernelKind {
        if self.sqrt_power {
            KernelKind::SqrtExpSqrt(self.k)
        } else {
            KernelKind::ExpSqrt(self.k)
        }
    }
}

/// Conditional Laplacian-noise error probabilities as sums of
/// [`LaplacianTerm`]s.
pub fn laplacian_terms(m: &ModulationSpec, range: MpskRange) -> Result<Vec<LaplacianTerm>> {
    let t = |coef: f64, k: f64, sqrt_power: bool| LaplacianTerm { coef, k, sqrt_power };
    match *m {
        ModulationSpec::LaplacianBpsk => Ok(vec![t(0.5, 2.0, false)]),
        ModulationSpec::LaplacianQpsk => Ok(vec![t(0.75, 2.0, false), t(1.0, 2.0, true)]),
        ModulationSpec::LaplacianMpsk { m: big_m } => {
            m.validate()?;
            let mf = big_m as f64;
            let s = (PI / mf).sin();
            let count = match range {
                MpskRange::Quadrant => big_m / 4,
                MpskRange::Full => big_m,
            };
            let w = 8.0 / mf;
            let mut out = Vec::new();
            for l in 0..count {
                let lf = l as f64;
                let th = (2.0 * lf + 1.0) * PI / mf;
                let c2 = (2.0 * th).cos();
                if c2.abs() < 1e-9 {
                    // removable singularity at θ = π/4
                    let k = 2.0 * 2.0f64.sqrt() * s;
                    out.push(t(w * 0.5, k, false));
                    out.push(t(w * 0.5 * 2.0f64.sqrt() * s, k, true));
                } else {
                    out.push(t(w * th.cos().powi(2) / (2.0 * c2), 2.0 * s / th.cos(), false));
                    out.push(t(-w * th.sin().powi(2) / (2.0 * c2), 2.0 * s / th.sin(), false));
                }
                let d = 8.0 * ((2.0 * PI / mf).cos() + (4.0 * lf * PI / mf).sin());
                let k4 = 2.0 * 2.0f64.sqrt() * (2.0 * lf * PI / mf - PI / 4.0).cos();
                out.push(t(-w * (2.0 * PI / mf).sin() / d, k4, false));
            }
            let tan2 = (PI / mf).tan().powi(2);
            out.push(t(2.0 * tan2 / (mf * (1.0 - tan2)), 2.0, false));
            Ok(out)
        }
        _ => Err(Error::InvalidArgument(format!("{} is not a Laplacian-noise scheme", m.name()))),
    }
}

fn expectation(p: &FadingParams, term: &LaplacianTerm) -> Result<f64> {
    if !(term.k > 0.0) {
        return Err(Error::Divergence(format!(
            "exp({:.4}·√γ) is not integrable against the SNR density",
            -term.k
        )));
    }
    let base = composite_pdf_descriptor(p)?;
    Ok(term.coef
        * kernel_integral(&base.descriptor, base.x_scale, base.y_scale, term.kernel())?
            .times(base.prefactor).times_ln(base.ln_factor)
            .value()?)
}

pub fn sep_awgn(p: &FadingParams, m: &ModulationSpec) -> Result<f64> {
    m.validate()?;
    match *m {
        ModulationSpec::Coherent { a_c, b_c } => {
            let base = composite_pdf_descriptor(p)?;
            let v = kernel_integral(&base.descriptor, base.x_scale, base.y_scale, KernelKind::ErfcSqrt(b_c))?
                .times(base.prefactor * a_c).times_ln(base.ln_factor)
                .value()?;
            Ok(v)
        }
        ModulationSpec::NonCoherent { a_nc, b_nc } => {
            let base = composite_pdf_descriptor(p)?;
            Ok(a_nc * laplace_transform(&base.descriptor, base.x_scale, base.y_scale, b_nc)?
                .times(base.prefactor).times_ln(base.ln_factor)
                .value()?)
        }
        _ => Err(Error::InvalidArgument(format!("{} is not an AWGN scheme", m.name()))),
    }
}

pub fn sep_laplacian(p: &FadingParams, m: &ModulationSpec) -> Result<f64> {
    sep_laplacian_with(p, m, MpskRange::Quadrant)
}

pub fn sep_laplacian_with(p: &FadingParams, m: &ModulationSpec, range: MpskRange) -> Result<f64> {
    let terms = laplacian_terms(m, range)?;
    let mut total = 0.0;
    for t in &terms {
        total += expectation(p, t)?;
    }
    Ok(total)
}

/// Average symbol error probability for any [`ModulationSpec`].
pub fn sep(p: &FadingParams, m: &ModulationSpec) -> Result<f64> {
    match m {
        ModulationSpec::Coherent { .. } | ModulationSpec::NonCoherent { .. } => sep_awgn(p, m),
        _ => sep_laplacian(p, m),
    }
}

/// Leading small-`γ` term `ℛ̂ γ^{αμ−1}/γ̄^{αμ}` of the composite density.
pub fn origin_pdf(gamma: f64, p: &FadingParams) -> Result<f64> {
    let c = derive_constants(p)?;
    let am = p.alpha * p.mu;
    Ok(c.r_hat * gamma.powf(am - 1.0) / p.mean_snr.powf(am))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "kebab-case")]
pub enum AsymptoticMetric {
    Outage { gamma_th: f64 },
    Sep { modulation: ModulationSpec },
}

/// High-SNR approximations obtained from [`origin_pdf`].
pub fn asymptotic(p: &FadingParams, metric: &AsymptoticMetric) -> Result<f64> {
    let c = derive_constants(p)?;
    let am = p.alpha * p.mu;
    let lead = c.r_hat / p.mean_snr.powf(am);
    match *metric {
        AsymptoticMetric::Outage { gamma_th } => Ok(lead * gamma_th.powf(am) / am),
        AsymptoticMetric::Sep { modulation } => {
            modulation.validate()?;
            match modulation {
                ModulationSpec::Coherent { a_c, b_c } => {
                    Ok(lead * a_c * gamma_real(am + 0.5)? / (PI.sqrt() * am * b_c.powf(am)))
                }
                ModulationSpec::NonCoherent { a_nc, b_nc } => Ok(lead * a_nc * gamma_real(am)? / b_nc.powf(am)),
                _ => {
                    // ∫ γ^{αμ−1+j/2} e^{−k√γ} dγ = 2Γ(2αμ+j)/k^{2αμ+j}
                    let mut total = 0.0;
                    for t in laplacian_terms(&modulation, MpskRange::Quadrant)? {
                        let j = if t.sqrt_power { 1.0 } else { 0.0 };
                        total += t.coef * 2.0 * gamma_real(2.0 * am + j)? / t.k.powf(2.0 * am + j);
                    }
                    Ok(lead * total)
                }
            }
        }
    }
}

/// Quadrature oracles built only from the direct densities.
pub mod oracle {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance { abs: 0.0, rel: 1e-9 }
    }

    /// `∫ f_{Y|Z}(γ | z) f_Z(z) dz`, with the conditional density evaluated
    /// directly at scale `γ̄·z`.
    pub fn composite_pdf_mixing(gamma: f64, p: &FadingParams) -> Result<f64> {
        derive_constants(p)?;
        let f = |z: f64| -> Result<f64> {
            let fz = igamma_pdf(z, p.m_s)?;
            if fz == 0.0 {
                return Ok(0.0);
            }
            Ok(pdf_direct(gamma, &p.with_mean_snr(p.mean_snr * z))? * fz)
        };
        // mass of the integrand sits near the shadowing mode and near the
        // scale where γ̄·z ≈ γ
        let mode = p.m_s / (p.m_s + 1.0);
        let scale = (mode * (gamma / p.mean_snr)).sqrt().max(1e-300);
        Ok(integrate_positive_axis(f, scale, tol())?.value)
    }

    /// `∫₀^∞ g(γ) f_Y(γ) dγ` with the density from [`composite_pdf_mixing`].
    pub fn expectation<G: Fn(f64) -> f64>(p: &FadingParams, g: G) -> Result<f64> {
        let f = |x: f64| -> Result<f64> {
            let w = g(x);
            if w == 0.0 {
                return Ok(0.0);
            }
            Ok(w * composite_pdf_mixing(x, p)?)
        };
        Ok(integrate_positive_axis(f, p.mean_snr, Tolerance { abs: 0.0, rel: 1e-7 })?.value)
    }

    pub fn outage(p: &FadingParams, gamma_th: f64) -> Result<f64> {
        Ok(integrate_to(|x| composite_pdf_mixing(x, p), gamma_th, Tolerance { abs: 0.0, rel: 1e-7 })?.value)
    }

    pub fn sep(p: &FadingParams, m: &ModulationSpec) -> Result<f64> {
        m.validate()?;
        expectation(p, |g| m.conditional_error(g).unwrap_or(f64::NAN))
    }

    /// Rayleigh power density mixed with the inverse-gamma shadowing.
    pub fn rayleigh_shadowed_pdf(gamma: f64, mean_snr: f64, m_s: f64) -> Result<f64> {
        let f = |z: f64| -> Result<f64> {
            let s = mean_snr * z;
            Ok((-gamma / s).exp() / s * igamma_pdf(z, m_s)?)
        };
        // peak of z^{-m_s-2} e^{-(m_s + γ/γ̄)/z}
        let scale = (m_s + gamma / mean_snr) / (m_s + 2.0);
        Ok(integrate_positive_axis(f, scale, tol())?.value)
    }

    /// M-PSK conditional error under per-component Laplacian noise with a
    /// minimum-distance detector, averaged over one quadrant of symbols by
    /// direct integration of the noise density over each decision wedge.
    pub fn mpsk_conditional(m: u32, gamma: f64) -> Result<f64> {
        ModulationSpec::LaplacianMpsk { m }.validate()?;
        let d = 2.0 * gamma.sqrt();
        let half_width = PI / m as f64;
        let lap = |x: f64| 0.5 * (-x.abs()).exp();
        let t = Tolerance { abs: 1e-13, rel: 1e-10 };
        let mut correct = 0.0;
        for k in 0..(m / 4) {
            let phi = 2.0 * PI * k as f64 / m as f64;
            let (cx, cy) = (d * phi.cos(), d * phi.sin());
            let inner = |th: f64| -> Result<f64> {
                let (c, s) = (th.cos(), th.sin());
                let radial = |r: f64| Ok(lap(r * c - cx) * lap(r * s - cy) * r);
                // kinks of |r c − cx| and |r s − cy|
                let mut cuts = vec![0.0];
                for (a, b) in [(c, cx), (s, cy)] {
                    if a.abs() > 1e-12 && b / a > 0.0 {
                        cuts.push(b / a);
                    }
                }
                cuts.sort_by(f64::total_cmp);
                let mut acc = 0.0;
                for w in cuts.windows(2) {
                    acc += integrate(radial, w[0], w[1], t)?.value;
                }
                let last = *cuts.last().unwrap_or(&0.0);
                acc += integrate_positive_axis(|u| radial(last + u), 1.0, t)?.value;
                Ok(acc)
            };
            correct += integrate(inner, phi - half_width, phi + half_width, t)?.value;
        }
        Ok(1.0 - correct / (m / 4) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, eta: f64, mu: f64, m_s: f64) -> FadingParams {
        FadingParams::new(alpha, eta, mu, m_s, Format::I, 1.0).unwrap()
    }

    #[test]
    fn derived_constants_format_one() {
        let c = derive_constants(&params(2.0, 0.3, 1.0, 2.5)).unwrap();
        assert!((c.h - 1.408_333_333_333_333).abs() < 1e-12);
        assert!((c.big_h - 0.758_333_333_333_333).abs() < 1e-12);
        assert!((c.h - c.big_h - 0.65).abs() < 1e-12);
        assert!((c.h + c.big_h - (1.0 + 1.0 / 0.3) / 2.0).abs() < 1e-12);
        let inv = derive_constants(&params(2.0, 1.0 / 0.3, 1.0, 2.5)).unwrap();
        assert!((inv.h - c.h).abs() < 1e-12 && (inv.big_h - c.big_h).abs() < 1e-12);
    }

    #[test]
    fn eta_one_is_rejected() {
        assert_eq!(
            FadingParams::new(2.0, 1.0, 1.0, 1.0, Format::I, 1.0).unwrap_err(),
            Error::EtaEqualsOne
        );
        let p = FadingParams { alpha: 2.0, eta: 1.0, mu: 1.0, m_s: 1.0, format: Format::I, mean_snr: 1.0 };
        assert!(p.with_eta_limit().validate().is_ok());
    }

    #[test]
    fn direct_and_foxh_densities_agree() {
        for alpha in [1.5, 2.0, 3.0] {
            let p = params(alpha, 0.5, 1.5, 2.5);
            for g in [0.05, 0.3, 1.0, 2.5] {
                let a = pdf_direct(g, &p).unwrap();
                let b = pdf_foxh(g, &p).unwrap();
                assert!((a / b - 1.0).abs() < 1e-8, "alpha {alpha} gamma {g}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rayleigh_limit() {
        let p = FadingParams::new(2.0, 1.0 - ETA_LIMIT_EPS, 0.5, 2.0, Format::I, 2.0).unwrap();
        for g in [0.1, 1.0, 4.0] {
            let v = pdf_direct(g, &p).unwrap();
            let exact = (-g / 2.0).exp() / 2.0;
            assert!((v / exact - 1.0).abs() < 1e-3, "{v} vs {exact}");
        }
    }

    #[test]
    fn igamma_moments() {
        let m_s = 3.5;
        let mean = integrate_positive_axis(|z| Ok(z * igamma_pdf(z, m_s)?), 1.0, Tolerance::default())
            .unwrap()
            .value;
        assert!((mean - 1.4).abs() < 1e-8);
    }

    #[test]
    fn mpsk_terms_match_wedge_oracle() {
        for m in [8u32, 12] {
            for g in [0.5, 4.0] {
                let closed = ModulationSpec::LaplacianMpsk { m }.conditional_error(g).unwrap();
                let direct = oracle::mpsk_conditional(m, g).unwrap();
                assert!((closed / direct - 1.0).abs() < 1e-7, "M {m} γ {g}: {closed} vs {direct}");
            }
        }
    }

    #[test]
    fn laplacian_conditionals() {
        assert_eq!(ModulationSpec::LaplacianBpsk.conditional_error(0.0).unwrap(), 0.5);
        let q = ModulationSpec::LaplacianQpsk.conditional_error(1.0).unwrap();
        assert!((q - 1.75 * (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(
            ModulationSpec::LaplacianMpsk { m: 10 }.validate().unwrap_err(),
            Error::InvalidConstellation(10)
        );
    }

    #[test]
    fn presets_parse() {
        assert_eq!(ModulationSpec::preset("BPSK").unwrap(), ModulationSpec::BPSK);
        assert_eq!(ModulationSpec::preset("lmpsk16").unwrap(), ModulationSpec::LaplacianMpsk { m: 16 });
        assert!(ModulationSpec::preset("qam").is_err());
    }

    #[test]
    fn params_json_round_trip() {
        let text = r#"{"alpha":2,"eta":0.5,"mu":1.5,"m_s":2.5,"format":"II","mean_snr":10}"#;
        let p: FadingParams = serde_json::from_str(text).unwrap();
        assert_eq!(p.format, Format::II);
        let m: ModulationSpec = serde_json::from_str(r#"{"scheme":"coherent","A_c":0.5,"B_c":1}"#).unwrap();
        assert_eq!(m, ModulationSpec::BPSK);
        let m: ModulationSpec = serde_json::from_str(r#"{"scheme":"laplacian-mpsk","M":8}"#).unwrap();
        assert_eq!(m, ModulationSpec::LaplacianMpsk { m: 8 });
    }

    #[test]
    fn rayleigh_oracle_matches_closed_form() {
        for (g, mean, m_s) in [(0.01f64, 10.0f64, 3.5f64), (0.5, 1.0, 1.5), (20.0, 0.5, 2.5), (1e-6, 1.0, 1.0)] {
            let exact = (1.0 + g / (m_s * mean)).powf(-(m_s + 1.0)) / mean;
            let v = oracle::rayleigh_shadowed_pdf(g, mean, m_s).unwrap();
            assert!(((v - exact) / exact).abs() < 1e-8, "{g} {mean} {m_s}: {v} vs {exact}");
        }
    }

    #[test]
    fn large_shadowing_parameter_is_representable() {
        let p = FadingParams::new(2.0, 0.5, 1.5, 1e4, Format::I, 1.0).unwrap();
        let v = composite_pdf(0.5, &p).unwrap();
        let d = pdf_direct(0.5, &p).unwrap();
        assert!((v / d - 1.0).abs() < 1e-3);
    }
}
