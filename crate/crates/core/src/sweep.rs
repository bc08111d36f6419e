//! Metric sweeps over a grid of average SNRs and their CSV form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{
    asymptotic, composite_pdf, gen_mgf, origin_pdf, outage, sep, AsymptoticMetric, FadingParams,
    ModulationSpec,
};
use crate::montecarlo::{
    empirical_outage, empirical_sep, mean_with_ci, sample_composite_snr, McEstimate, SamplerConfig,
};

pub const SCHEMA_VERSION: u32 = 1;

pub fn csv_header_comment() -> String {
    format!("# foxh-kit v{} schema {SCHEMA_VERSION}", env!("CARGO_PKG_VERSION"))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Asymptotic,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

/// A quantity evaluated at every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "kebab-case")]
pub enum Metric {
    /// Density at a fixed instantaneous SNR (linear).
    Pdf { gamma: f64 },
    /// Outage at a fixed threshold (linear).
    Outage { gamma_th: f64 },
    Sep { modulation: ModulationSpec },
    /// `E[γⁿ e^{−sγ}]`.
    Mgf { n: u32, s: f64 },
}

impl Metric {
    pub fn name(&self) -> String {
        match self {
            Metric::Pdf { gamma } => format!("pdf(gamma={gamma})"),
            Metric::Outage { gamma_th } => format!("outage(gamma_th={gamma_th})"),
            Metric::Sep { modulation } => format!("sep({})", modulation.name()),
            Metric::Mgf { n, s } => format!("mgf(n={n},s={s})"),
        }
    }

    /// Methods that have an implementation for this metric.
    pub fn supports(&self, method: Method) -> bool {
        !matches!(
            (self, method),
            (Metric::Mgf { .. }, Method::Asymptotic) | (Metric::Pdf { .. }, Method::MonteCarlo)
        )
    }

    pub fn exact(&self, p: &FadingParams) -> Result<f64> {
        match *self {
            Metric::Pdf { gamma } => composite_pdf(gamma, p),
            Metric::Outage { gamma_th } => outage(p, gamma_th),
            Metric::Sep { modulation } => sep(p, &modulation),
            Metric::Mgf { n, s } => gen_mgf(p, n, s),
        }
    }

    pub fn asymptotic(&self, p: &FadingParams) -> Result<f64> {
        match *self {
            Metric::Pdf { gamma } => origin_pdf(gamma, p),
            Metric::Outage { gamma_th } => asymptotic(p, &AsymptoticMetric::Outage { gamma_th }),
            Metric::Sep { modulation } => asymptotic(p, &AsymptoticMetric::Sep { modulation }),
            Metric::Mgf { .. } => Err(Error::InvalidArgument("the MGF has no asymptotic form".into())),
        }
    }

    pub fn monte_carlo(&self, samples: &[f64]) -> Result<McEstimate> {
        match *self {
            Metric::Outage { gamma_th } => empirical_outage(samples, gamma_th),
            Metric::Sep { modulation } => empirical_sep(samples, &modulation),
            Metric::Mgf { n, s } => mean_with_ci(samples, |g| g.powi(n as i32) * (-s * g).exp()),
            Metric::Pdf { .. } => Err(Error::InvalidArgument("no Monte-Carlo estimator for a density value".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrGrid {
    pub from_db: f64,
    pub to_db: f64,
    pub step_db: f64,
}

impl SnrGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let ok = self.from_db.is_finite() && self.to_db.is_finite() && self.step_db > 0.0;
        if !ok || self.to_db < self.from_db {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite from <= to and step > 0 (got {} .. {} step {})",
                self.from_db, self.to_db, self.step_db
            )));
        }
        let count = ((self.to_db - self.from_db) / self.step_db + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::InvalidArgument(format!("grid has {count} points")));
        }
        Ok((0..count).map(|i| self.from_db + i as f64 * self.step_db).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma_bar_db: f64,
    pub value: f64,
    pub method: Method,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub metric: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| a.method.cmp(&b.method).then(a.gamma_bar_db.total_cmp(&b.gamma_bar_db)));
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// CSV with the versioned header comment.
    pub fn to_csv(&self) -> Result<String> {
        to_csv(std::slice::from_ref(self))
    }
}

/// Several sweeps in one table, rows sorted by (metric, method, dB).
pub fn to_csv(results: &[SweepResult]) -> Result<String> {
    let mut rows: Vec<(&str, &SweepRow)> =
        results.iter().flat_map(|r| r.rows.iter().map(move |row| (r.metric.as_str(), row))).collect();
    rows.sort_by(|a, b| {
        a.0.cmp(b.0)
            .then(a.1.method.cmp(&b.1.method))
            .then(a.1.gamma_bar_db.total_cmp(&b.1.gamma_bar_db))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["gamma_bar_dB", "metric", "value", "method", "ci_low", "ci_high"]).map_err(ser)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for (metric, row) in rows {
        w.write_record([
            format!("{}", row.gamma_bar_db),
            metric.to_string(),
            format!("{:e}", row.value),
            row.method.as_str().to_string(),
            opt(row.ci_low),
            opt(row.ci_high),
        ])
        .map_err(ser)?;
    }
    let body = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(format!("{}\n{body}", csv_header_comment()))
}

/// Evaluates `metric` on `grid` with each of `methods`.
///
/// Monte-Carlo rows reuse one unit-scale sample set multiplied by `γ̄`, so
/// every grid point sees the same draws.
pub fn sweep(
    p: &FadingParams,
    metric: &Metric,
    grid: &SnrGrid,
    methods: &[Method],
    sampler: &SamplerConfig,
) -> Result<SweepResult> {
    p.validate()?;
    let points = grid.points()?;
    let mut rows = Vec::new();
    for &method in methods {
        if !metric.supports(method) {
            continue;
        }
        let unit = if method == Method::MonteCarlo {
            Some(sample_composite_snr(&p.with_mean_snr(1.0), sampler)?)
        } else {
            None
        };
        let part: Vec<SweepRow> = points
            .par_iter()
            .map(|&db| -> Result<SweepRow> {
                let g = db_to_linear(db);
                let q = p.with_mean_snr(g);
                let (value, ci_low, ci_high) = match method {
                    Method::Exact => (metric.exact(&q)?, None, None),
                    Method::Asymptotic => (metric.asymptotic(&q)?, None, None),
                    Method::MonteCarlo => {
                        let scaled: Vec<f64> = unit.as_deref().unwrap_or(&[]).iter().map(|u| u * g).collect();
                        let e = metric.monte_carlo(&scaled)?;
                        (e.value, Some(e.ci_low), Some(e.ci_high))
                    }
                };
                if !value.is_finite() {
                    return Err(Error::Overflow(format!("{} {} at {db} dB", metric.name(), method.as_str())));
                }
                Ok(SweepRow { gamma_bar_db: db, value, method, ci_low, ci_high })
            })
            .collect::<Result<_>>()?;
        rows.extend(part);
    }
    let mut out = SweepResult { metric: metric.name(), rows };
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::Format;

    #[test]
    fn grid_points_include_end() {
        let g = SnrGrid { from_db: 0.0, to_db: 40.0, step_db: 2.0 }.points().unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(*g.last().unwrap(), 40.0);
        assert!(SnrGrid { from_db: 1.0, to_db: 0.0, step_db: 1.0 }.points().is_err());
    }

    #[test]
    fn csv_layout_and_order() {
        let p = FadingParams::new(2.0, 0.5, 1.5, 2.5, Format::I, 1.0).unwrap();
        let grid = SnrGrid { from_db: 0.0, to_db: 10.0, step_db: 5.0 };
        let cfg = SamplerConfig::new(20_000, 1);
        let metric = Metric::Outage { gamma_th: 1.0 };
        let r = sweep(&p, &metric, &grid, &[Method::MonteCarlo, Method::Exact, Method::Asymptotic], &cfg).unwrap();
        let text = r.to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], csv_header_comment());
        assert_eq!(lines[1], "gamma_bar_dB,metric,value,method,ci_low,ci_high");
        assert_eq!(lines.len(), 2 + 9);
        assert!(lines[2].starts_with("0,outage(gamma_th=1),") && lines[2].ends_with(",exact,,"));
        assert!(lines[10].starts_with("10,") && lines[10].contains(",montecarlo,"));
        assert_eq!(text, sweep(&p, &metric, &grid, &[Method::Exact, Method::Asymptotic, Method::MonteCarlo], &cfg)
            .unwrap()
            .to_csv()
            .unwrap());
    }

    #[test]
    fn coherent_names_are_quoted() {
        let r = SweepResult {
            metric: Metric::Sep { modulation: ModulationSpec::BPSK }.name(),
            rows: vec![SweepRow { gamma_bar_db: 0.0, value: 0.1, method: Method::Exact, ci_low: None, ci_high: None }],
        };
        let text = r.to_csv().unwrap();
        assert!(text.contains("\"sep(coherent(A_c=0.5,B_c=1))\""));
    }
}
