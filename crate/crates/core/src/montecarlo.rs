//! Monte-Carlo sampling of the composite SNR and empirical metrics.
//!
//! Samples are drawn in independent batches, each from a ChaCha8 stream
//! keyed by `(seed, batch index)`, and concatenated in batch order, so the
//! output depends only on the seed and the configuration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::fading::{derive_constants, laplacian_terms, FadingParams, ModulationSpec, MpskRange};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Smallest sample count accepted by the empirical estimators.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub batch: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_samples: 1_000_000, seed: 0x5eed, batch: 1 << 16 }
    }
}

impl SamplerConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SamplerConfig { n_samples, seed, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.batch == 0 {
            return Err(Error::InvalidArgument("n_samples and batch must be at least 1".into()));
        }
        Ok(())
    }
}

fn gamma_dist(shape: f64, rate: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidArgument(format!("gamma(shape {shape}, rate {rate}): {e}")))
}

/// Runs `draw` over the batches of `cfg` and concatenates the results.
fn batched<F>(cfg: &SamplerConfig, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng, usize, &mut Vec<f64>) + Sync,
{
    cfg.validate()?;
    let batches = cfg.n_samples.div_ceil(cfg.batch);
    let parts: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let len = cfg.batch.min(cfg.n_samples - b * cfg.batch);
            let mut out = Vec::with_capacity(len);
            draw(&mut rng, len, &mut out);
            out
        })
        .collect();
    Ok(parts.concat())
}

/// `W = X + Y` with `X ~ Γ(μ, rate 2μ(h+H))`, `Y ~ Γ(μ, rate 2μ(h−H))`, so
/// that `E[W] = 1`. Both formats go through their own `h, H`.
pub fn sample_eta_mu_power(p: &FadingParams, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    let c = derive_constants(p)?;
    let gx = gamma_dist(p.mu, 2.0 * p.mu * (c.h + c.big_h))?;
    let gy = gamma_dist(p.mu, 2.0 * p.mu * (c.h - c.big_h))?;
    batched(cfg, |rng, len, out| {
        for _ in 0..len {
            out.push(gx.sample(rng) + gy.sample(rng));
        }
    })
}

/// `γ = γ̄·z·W^{2/α}` with `z = m_s / Γ(m_s, 1)`.
///
/// `γ̄` is the scale of the conditional distribution; it is the mean only
/// when `α = 2`.
pub fn sample_composite_snr(p: &FadingParams, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    let c = derive_constants(p)?;
    let gx = gamma_dist(p.mu, 2.0 * p.mu * (c.h + c.big_h))?;
    let gy = gamma_dist(p.mu, 2.0 * p.mu * (c.h - c.big_h))?;
    let gz = gamma_dist(p.m_s, 1.0)?;
    let k = 2.0 / p.alpha;
    let (scale, m_s) = (p.mean_snr, p.m_s);
    batched(cfg, |rng, len, out| {
        for _ in 0..len {
            let w = gx.sample(rng) + gy.sample(rng);
            let z = m_s / gz.sample(rng);
            // Scale applied last so that samples are exactly linear in it.
            out.push(z * w.powf(k) * scale);
        }
    })
}

/// Point estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    /// Kish effective sample size `(Σv)²/Σv²` of the per-sample
    /// contributions; the event count for an indicator.
    pub effective_n: f64,
}

impl McEstimate {
    pub fn contains(&self, v: f64) -> bool {
        self.ci_low <= v && v <= self.ci_high
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {n}"
        )));
    }
    Ok(())
}

/// Two-sided normal quantile for confidence `level`.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if level == 0.95 {
        return Ok(Z95);
    }
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Wilson score 95% interval for `k` successes in `n` trials.
pub fn wilson(k: usize, n: usize) -> McEstimate {
    wilson_z(k, n, Z95)
}

pub fn wilson_z(k: usize, n: usize, z: f64) -> McEstimate {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    McEstimate {
        value: p,
        ci_low: if k == 0 { 0.0 } else { (centre - half).max(0.0) },
        ci_high: if k == n { 1.0 } else { (centre + half).min(1.0) },
        n,
        effective_n: k as f64,
    }
}

/// Fraction of samples below `gamma_th`, with a Wilson 95% interval.
pub fn empirical_outage(samples: &[f64], gamma_th: f64) -> Result<McEstimate> {
    empirical_outage_z(samples, gamma_th, Z95)
}

pub fn empirical_outage_z(samples: &[f64], gamma_th: f64, z: f64) -> Result<McEstimate> {
    check_len(samples.len())?;
    let k = samples.iter().filter(|&&g| g < gamma_th).count();
    Ok(wilson_z(k, samples.len(), z))
}

/// Sample mean and CLT 95% interval of `f` over `samples`.
pub fn mean_with_ci<F: Fn(f64) -> f64 + Sync>(samples: &[f64], f: F) -> Result<McEstimate> {
    mean_with_ci_z(samples, f, Z95)
}

pub fn mean_with_ci_z<F: Fn(f64) -> f64 + Sync>(samples: &[f64], f: F, z: f64) -> Result<McEstimate> {
    check_len(samples.len())?;
    let (sum, sq) = samples
        .par_chunks(1 << 14)
        .map(|chunk| {
            chunk.iter().fold((0.0, 0.0), |(s, q), &g| {
                let v = f(g);
                (s + v, q + v * v)
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = samples.len() as f64;
    let mean = sum / n;
    let var = ((sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let half = z * (var / n).sqrt();
    Ok(McEstimate {
        value: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        n: samples.len(),
        effective_n: if sq > 0.0 { sum * sum / sq } else { 0.0 },
    })
}

/// Average of the conditional error probability over the samples.
pub fn empirical_sep(samples: &[f64], m: &ModulationSpec) -> Result<McEstimate> {
    empirical_sep_z(samples, m, Z95)
}

pub fn empirical_sep_z(samples: &[f64], m: &ModulationSpec, z: f64) -> Result<McEstimate> {
    m.validate()?;
    if let ModulationSpec::LaplacianBpsk
    | ModulationSpec::LaplacianQpsk
    | ModulationSpec::LaplacianMpsk { .. } = m
    {
        let terms = laplacian_terms(m, MpskRange::Quadrant)?;
        return mean_with_ci_z(samples, |g| terms.iter().map(|t| t.conditional(g.max(0.0))).sum(), z);
    }
    mean_with_ci_z(samples, |g| m.conditional_error(g).unwrap_or(f64::NAN), z)
}

/// Goodness-of-fit statistics against an analytic CDF.
pub mod gof {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use crate::error::{Error, Result};

    /// Asymptotic two-sided 1% critical value of `√n·D`.
    pub const KS_CRITICAL_1PCT: f64 = 1.627_6;

    pub fn ks_critical(n: usize) -> f64 {
        KS_CRITICAL_1PCT / (n as f64).sqrt()
    }

    /// `max |F_n(x) − F(x)|` over `grid`, for ascending `sorted` samples.
    /// Both one-sided limits of the empirical CDF are compared.
    pub fn ks_statistic<F>(sorted: &[f64], grid: &[f64], mut cdf: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let n = sorted.len() as f64;
        let mut d = 0.0f64;
        for &x in grid {
            let below = sorted.partition_point(|&v| v < x) as f64 / n;
            let upto = sorted.partition_point(|&v| v <= x) as f64 / n;
            let f = cdf(x)?;
            d = d.max((below - f).abs()).max((upto - f).abs());
        }
        Ok(d)
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct ChiSquareResult {
        pub statistic: f64,
        pub dof: usize,
        pub p_value: f64,
    }

    /// Pearson χ² over `bins` log-spaced bins spanning the sample range plus
    /// the two tails; adjacent bins are merged until each expects ≥ 5.
    pub fn chi_square_log_bins<F>(sorted: &[f64], bins: usize, mut cdf: F) -> Result<ChiSquareResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let n = sorted.len();
        if n < 2 || bins < 2 {
            return Err(Error::InvalidArgument("chi-square needs at least 2 samples and 2 bins".into()));
        }
        let lo = sorted[0].max(f64::MIN_POSITIVE).ln();
        let hi = sorted[n - 1].ln();
        let mut edges = vec![0.0];
        for i in 1..bins {
            edges.push((lo + (hi - lo) * i as f64 / bins as f64).exp());
        }
        edges.push(f64::INFINITY);
        let mut cdfs = Vec::with_capacity(edges.len());
        for &e in &edges {
            cdfs.push(if e == 0.0 {
                0.0
            } else if e.is_infinite() {
                1.0
            } else {
                cdf(e)?
            });
        }
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let (mut obs, mut exp) = (0.0, 0.0);
        for i in 0..bins {
            let count = sorted.partition_point(|&v| v < edges[i + 1]) - sorted.partition_point(|&v| v < edges[i]);
            obs += count as f64;
            exp += n as f64 * (cdfs[i + 1] - cdfs[i]);
            if exp >= 5.0 {
                cells.push((obs, exp));
                obs = 0.0;
                exp = 0.0;
            }
        }
        if obs > 0.0 || exp > 0.0 {
            match cells.last_mut() {
                Some(last) => {
                    last.0 += obs;
                    last.1 += exp;
                }
                None => cells.push((obs, exp)),
            }
        }
        if cells.len() < 2 {
            return Err(Error::InvalidArgument("too few populated chi-square cells".into()));
        }
        let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
        let dof = cells.len() - 1;
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(ChiSquareResult { statistic, dof, p_value: 1.0 - dist.cdf(statistic) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{pdf_direct, Format, ETA_LIMIT_EPS};
    use crate::quadrature::{integrate_to, Tolerance};

    fn params(alpha: f64, eta: f64, mu: f64, m_s: f64) -> FadingParams {
        FadingParams::new(alpha, eta, mu, m_s, Format::I, 1.0).unwrap()
    }

    #[test]
    fn power_has_unit_mean() {
        let cfg = SamplerConfig::new(1_000_000, 7);
        for (eta, mu) in [(0.3, 1.0), (0.5, 3.5), (1.0 - ETA_LIMIT_EPS, 0.5)] {
            let w = sample_eta_mu_power(&params(2.0, eta, mu, 1.0), &cfg).unwrap();
            let est = mean_with_ci(&w, |x| x).unwrap();
            let sigma = est.width() / (2.0 * Z95);
            assert!((est.value - 1.0).abs() < 3.0 * sigma, "eta {eta} mu {mu}: {est:?}");
        }
    }

    #[test]
    fn power_matches_eta_mu_density() {
        for format in [Format::I, Format::II] {
            let p = FadingParams::new(2.0, 0.4, 1.5, 1.0, format, 1.0).unwrap();
            let mut w = sample_eta_mu_power(&p, &SamplerConfig::new(200_000, 3)).unwrap();
            w.sort_by(f64::total_cmp);
            let grid: Vec<f64> = (0..40).map(|i| 0.02 * 1.15f64.powi(i)).collect();
            let tol = Tolerance { abs: 1e-14, rel: 1e-10 };
            let d = gof::ks_statistic(&w, &grid, |x| Ok(integrate_to(|g| pdf_direct(g, &p), x, tol)?.value))
                .unwrap();
            assert!(d < gof::ks_critical(w.len()), "{format:?}: D = {d}");
        }
    }

    #[test]
    fn seeded_determinism_and_scale() {
        let p = params(1.5, 0.3, 1.0, 2.5);
        let cfg = SamplerConfig { n_samples: 5000, seed: 11, batch: 777 };
        let a = sample_composite_snr(&p, &cfg).unwrap();
        let b = sample_composite_snr(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = sample_composite_snr(&p.with_mean_snr(4.0), &cfg).unwrap();
        assert!(a.iter().zip(&c).all(|(x, y)| 4.0 * x == *y));
        let other = sample_composite_snr(&p, &SamplerConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn wilson_edges_and_scaling() {
        let zero = wilson(0, 10_000);
        assert_eq!((zero.value, zero.ci_low), (0.0, 0.0));
        assert!(zero.ci_high > 0.0 && zero.ci_high < 1e-3);
        let w1 = wilson(3_000, 10_000).width();
        let w2 = wilson(6_000, 20_000).width();
        assert!((w1 / w2 - 2f64.sqrt()).abs() < 0.01);
        let samples = vec![1.0; MIN_SAMPLES];
        assert_eq!(empirical_outage(&samples, 0.5).unwrap().value, 0.0);
        assert!(empirical_outage(&samples[..10], 0.5).is_err());
    }

    #[test]
    fn sep_at_zero_snr() {
        let samples = vec![0.0; MIN_SAMPLES];
        let e = empirical_sep(&samples, &ModulationSpec::LaplacianBpsk).unwrap();
        assert_eq!(e.value, 0.5);
        assert_eq!(e.width(), 0.0);
    }
}
