//! Metric decay along an `alpha_n` schedule.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::auxiliary::Decoder;
use super::codebook::sample_codebooks;
use super::plan::{rate_plan, RatePlan, UserSizes};
use super::protocol::protocol_metrics;
use super::rng;
use super::stats::{least_squares, LineFit};
use crate::channel::BinaryMacPair;
use crate::covert::{AlphaSchedule, CovertConfig, Rho};
use crate::error::{Error, Result};

/// Parameters shared by every row of a decay study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySettings {
    pub rho: Rho,
    pub mu: (f64, f64, f64),
    pub trials: u64,
    pub seed: u64,
    pub decoder: Decoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub alpha: f64,
    /// `n * alpha_n`, the fit abscissa.
    pub n_alpha: f64,
    pub sizes: [UserSizes; 2],
    /// False when integer rounding broke a plan constraint; the candidate
    /// sizes were simulated anyway.
    pub plan_feasible: bool,
    pub p_err: f64,
    pub p_err_half_width: f64,
    pub empty_preimage_rate: f64,
    pub secrecy_tv: Option<f64>,
    /// `source_tv_1 + source_tv_2`.
    pub source_tv: f64,
    pub covertness_kl: f64,
}

/// Least-squares fit of `log2(metric)` on `n alpha_n`; zero values are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFit {
    pub metric: String,
    pub fit: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStudy {
    pub settings: DecaySettings,
    pub rows: Vec<DecayRow>,
    pub fits: Vec<MetricFit>,
}

impl DecayStudy {
    pub fn fit(&self, metric: &str) -> Option<&LineFit> {
        self.fits
            .iter()
            .find(|f| f.metric == metric)
            .and_then(|f| f.fit.as_ref())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "alpha",
            "n_alpha",
            "g1",
            "m1",
            "n1",
            "g2",
            "m2",
            "n2",
            "plan_feasible",
            "p_err",
            "p_err_half_width",
            "empty_preimage_rate",
            "secrecy_tv",
            "source_tv",
            "covertness_kl",
        ])?;
        for r in &self.rows {
            let [a, b] = r.sizes;
            w.write_record([
                r.n.to_string(),
                r.alpha.to_string(),
                r.n_alpha.to_string(),
                a.public.to_string(),
                a.key.to_string(),
                a.randomness.to_string(),
                b.public.to_string(),
                b.key.to_string(),
                b.randomness.to_string(),
                r.plan_feasible.to_string(),
                r.p_err.to_string(),
                r.p_err_half_width.to_string(),
                r.empty_preimage_rate.to_string(),
                r.secrecy_tv.map(|v| v.to_string()).unwrap_or_default(),
                r.source_tv.to_string(),
                r.covertness_kl.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Plan, sample and simulate the protocol at every block length in `n_list`.
pub fn decay_study(
    mac: &BinaryMacPair,
    schedule: &dyn AlphaSchedule,
    n_list: &[usize],
    settings: DecaySettings,
) -> Result<DecayStudy> {
    if n_list.is_empty() {
        return Err(Error::DomainError("no block lengths given".into()));
    }
    let (mu1, mu2, mu3) = settings.mu;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let alpha = schedule.alpha(n)?;
        let cfg = CovertConfig::new(settings.rho, alpha)?;
        let (plan, feasible): (RatePlan, bool) = match rate_plan(mac, &cfg, n, mu1, mu2, mu3) {
            Ok(p) => (p, true),
            Err(Error::InfeasiblePlan(p)) => (*p, false),
            Err(e) => return Err(e),
        };
        let cb = sample_codebooks(
            n,
            plan.sizes,
            &cfg,
            rng::derive_seed(settings.seed, rng::ENSEMBLE, n as u64),
        )?;
        let report = protocol_metrics(&cb, mac, &cfg, settings.trials, settings.seed, settings.decoder)?;
        rows.push(DecayRow {
            n,
            alpha,
            n_alpha: n as f64 * alpha,
            sizes: plan.sizes,
            plan_feasible: feasible,
            p_err: report.p_err.value,
            p_err_half_width: report.p_err.half_width,
            empty_preimage_rate: report.empty_preimage_rate,
            secrecy_tv: report.secrecy_tv,
            source_tv: report.source_tv_1 + report.source_tv_2,
            covertness_kl: report.covertness_kl,
        });
    }
    let fits = vec![
        fit_metric("p_err", &rows, |r| Some(r.p_err)),
        fit_metric("source_tv", &rows, |r| Some(r.source_tv)),
        fit_metric("secrecy_tv", &rows, |r| r.secrecy_tv),
        fit_metric("covertness_kl", &rows, |r| Some(r.covertness_kl)),
    ];
    Ok(DecayStudy { settings, rows, fits })
}

fn fit_metric(name: &str, rows: &[DecayRow], get: impl Fn(&DecayRow) -> Option<f64>) -> MetricFit {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| get(r).filter(|v| *v > 0.0).map(|v| (r.n_alpha, v.log2())))
        .unzip();
    MetricFit {
        metric: name.to_string(),
        fit: least_squares(&x, &y).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covert::ConstantAlpha;

    #[test]
    fn zero_alpha_rows_are_trivial() {
        let mac = BinaryMacPair::table1_channel1();
        let settings = DecaySettings {
            rho: Rho::new(0.28, 0.72).unwrap(),
            mu: (0.1, 0.1, 0.1),
            trials: 200,
            seed: 1,
            decoder: Decoder::KeyPosterior,
        };
        let study = decay_study(&mac, &ConstantAlpha(0.0), &[4, 6, 8], settings).unwrap();
        for r in &study.rows {
            assert_eq!(r.sizes, [UserSizes::new(1, 1, 1); 2]);
            assert!(r.plan_feasible);
            assert_eq!(r.p_err, 0.0);
            assert_eq!(r.source_tv, 0.0);
            assert_eq!(r.covertness_kl, 0.0);
        }
        assert!(study.fit("p_err").is_none());
        let mut buf = Vec::new();
        study.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
