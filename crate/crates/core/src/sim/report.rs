//! Simulation reports and their JSON / CSV forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::auxiliary::Decoder;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

/// Which joint law the metrics refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Uniform indices sent through the channel.
    Auxiliary,
    /// Inputs drawn from the covert process, indices recovered by the likelihood encoder.
    Protocol,
}

/// How the reported secrecy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecrecyKind {
    Exact,
    /// Auxiliary secrecy plus both source-simulation distances.
    Bound,
    Unavailable,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "monte_carlo",
        }
    }
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Auxiliary => "auxiliary",
            Scheme::Protocol => "protocol",
        }
    }
}

impl SecrecyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SecrecyKind::Exact => "exact",
            SecrecyKind::Bound => "bound",
            SecrecyKind::Unavailable => "unavailable",
        }
    }
}

/// A probability with a 95% interval. Exact values have zero width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            half_width: 0.0,
            lower: value,
            upper: value,
        }
    }
}

/// Reliability, secrecy, source-simulation and covertness metrics of one code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheme: Scheme,
    pub mode: Mode,
    pub decoder: Decoder,
    pub trials: u64,
    /// Probability that `(K1, K2)` is not recovered. In protocol runs an empty
    /// preimage counts as an error.
    pub p_err: Estimate,
    /// Fraction of protocol trials where some input matched no codeword.
    pub empty_preimage_rate: f64,
    /// Distance of `(W, K1, K2, Z)` from uniform indices times `Q_Z^n`.
    pub secrecy_tv: Option<f64>,
    pub secrecy_kind: SecrecyKind,
    /// KL version of the secrecy metric (bits); absent when the joint has
    /// mass outside the index space.
    pub secrecy_kl: Option<f64>,
    pub source_tv_1: f64,
    pub source_tv_2: f64,
    /// `D(P_Z || Q_0^n)` in bits.
    pub covertness_kl: f64,
}

impl SimReport {
    pub const CSV_HEADER: [&'static str; 14] = [
        "scheme",
        "mode",
        "decoder",
        "trials",
        "p_err",
        "p_err_half_width",
        "p_err_lower",
        "p_err_upper",
        "empty_preimage_rate",
        "secrecy_tv",
        "secrecy_kind",
        "secrecy_kl",
        "source_tv",
        "covertness_kl",
    ];

    /// Plot-ready row matching [`SimReport::CSV_HEADER`]; `source_tv` is the sum of both users.
    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.scheme.as_str().to_string(),
            self.mode.as_str().to_string(),
            self.decoder.as_str().to_string(),
            self.trials.to_string(),
            self.p_err.value.to_string(),
            self.p_err.half_width.to_string(),
            self.p_err.lower.to_string(),
            self.p_err.upper.to_string(),
            self.empty_preimage_rate.to_string(),
            opt(self.secrecy_tv),
            self.secrecy_kind.as_str().to_string(),
            opt(self.secrecy_kl),
            (self.source_tv_1 + self.source_tv_2).to_string(),
            self.covertness_kl.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(reports: &[SimReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in reports {
            w.write_record(r.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }
}
