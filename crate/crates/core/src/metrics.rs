//! Capacity, packet-error modelling and Monte-Carlo rate estimates.

use crate::beamformer::NormalizationG;
use crate::link::TrialStats;
use crate::{CMatrix, Error, Result};
use serde::{Deserialize, Serialize};

/// Two-sided 95% standard-normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// `log2(1 + snr)` in bits/s/Hz.
pub fn capacity(snr_linear: f64) -> Result<f64> {
    if !(snr_linear >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SNR must be non-negative, got {snr_linear}"
        )));
    }
    Ok(snr_linear.ln_1p() / std::f64::consts::LN_2)
}

/// `P * ||H||_F^2 / (G * sigma^2)`.
pub fn effective_snr(
    total_power: f64,
    effective_channel: &CMatrix,
    noise_variance: f64,
    g: &NormalizationG,
) -> Result<f64> {
    if !(noise_variance > 0.0) || !(total_power >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "effective SNR needs power >= 0 and noise variance > 0 (got {total_power}, {noise_variance})"
        )));
    }
    Ok(total_power * effective_channel.norm_squared() / (g.value() * noise_variance))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Which form of the packet-error model to evaluate.
///
/// `Literal` is the printed approximation, which degenerates at the
/// error-free limit (PER -> 1). `Conventional` is the independent-error form
/// `1 - Π (1 - p_e)^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerFormula {
    Literal,
    #[default]
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamErrorParams {
    /// Minimum Euclidean distance of the constellation.
    pub d_min: f64,
    /// Number of bits carried by the stream.
    pub bits: u64,
    pub code_rate: f64,
    /// Length (bits per symbol for uncoded transmission).
    pub length: u64,
    pub ser: f64,
}

impl StreamErrorParams {
    pub fn exponent(&self) -> f64 {
        self.bits as f64 * self.code_rate / self.length as f64
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ser)
            || !(self.d_min > 0.0)
            || self.bits == 0
            || self.length == 0
            || !(self.code_rate > 0.0 && self.code_rate <= 1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "invalid stream parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Per-stream error probability `p_e(z)`.
pub fn stream_error(params: &StreamErrorParams, mode: PerFormula) -> f64 {
    match mode {
        PerFormula::Literal => (1.0 - params.ser / params.d_min).clamp(0.0, 1.0),
        PerFormula::Conventional => params.ser.clamp(0.0, 1.0),
    }
}

pub fn packet_error_rate(streams: &[StreamErrorParams], mode: PerFormula) -> Result<f64> {
    if streams.is_empty() {
        return Err(Error::InvalidParameter(
            "PER needs at least one stream".into(),
        ));
    }
    for s in streams {
        s.validate()?;
    }
    // (1 - p)^x, exact at p = 1
    let survive = |s: &StreamErrorParams| {
        let p = stream_error(s, mode);
        if p >= 1.0 {
            0.0
        } else {
            (s.exponent() * (-p).ln_1p()).exp()
        }
    };
    let per = match mode {
        PerFormula::Literal => 1.0 - streams.iter().map(|s| 1.0 - survive(s)).product::<f64>(),
        PerFormula::Conventional => 1.0 - streams.iter().map(survive).product::<f64>(),
    };
    Ok(per.clamp(0.0, 1.0))
}

/// Point estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "rate estimate with zero trials".into(),
        ));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "{k} events out of {n} trials"
        )));
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let (mut low, mut high) = ((centre - half).max(0.0), (centre + half).min(1.0));
    if k == 0 {
        low = 0.0;
    }
    if k == n {
        high = 1.0;
    }
    Ok(Estimate {
        value: p,
        low: low.min(p),
        high: high.max(p),
    })
}

/// Sample mean with a normal-approximation 95% interval.
pub fn mean_interval(values: &[f64]) -> Result<Estimate> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("mean of an empty sample".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let half = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Z_95 * (var / n).sqrt()
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean,
        low: mean - half,
        high: mean + half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimates {
    pub ber: Estimate,
    pub ser: Estimate,
    pub per: Estimate,
}

pub fn estimate_rates(stats: &TrialStats) -> Result<RateEstimates> {
    Ok(RateEstimates {
        ber: wilson_interval(stats.bit_errors, stats.bits_sent)?,
        ser: wilson_interval(stats.symbol_errors, stats.symbols_sent)?,
        per: wilson_interval(stats.packet_errors, stats.packets_sent)?,
    })
}

/// Metrics at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricPoint {
    pub snr_db: f64,
    pub capacity: Estimate,
    pub ber: Estimate,
    pub ser: Estimate,
    pub per: Estimate,
    /// Analytic packet-error model evaluated at the measured SER.
    pub per_model: Estimate,
    pub erasures: u64,
}

impl MetricPoint {
    /// `(name, estimate)` pairs in ascending name order.
    pub fn named(&self) -> [(&'static str, Estimate); 5] {
        [
            ("ber", self.ber),
            ("capacity", self.capacity),
            ("per", self.per),
            ("per_model", self.per_model),
            ("ser", self.ser),
        ]
    }
}

/// Swept parameter value of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Label(String),
}

impl ParamValue {
    pub fn sort_cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (ParamValue::Number(a), ParamValue::Number(b)) => a.total_cmp(b),
            (ParamValue::Label(a), ParamValue::Label(b)) => a.cmp(b),
            (ParamValue::Number(_), ParamValue::Label(_)) => std::cmp::Ordering::Less,
            (ParamValue::Label(_), ParamValue::Number(_)) => std::cmp::Ordering::Greater,
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v:e}"),
            ParamValue::Label(s) => f.write_str(s),
        }
    }
}

/// One swept curve: metrics per SNR point for a fixed parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub param_name: String,
    pub param_value: ParamValue,
    pub points: Vec<MetricPoint>,
    pub scenario_hash: String,
    pub seed: u64,
    pub trials: u64,
}

impl MetricSeries {
    pub fn point(&self, snr_db: f64) -> Option<&MetricPoint> {
        self.points
            .iter()
            .find(|p| (p.snr_db - snr_db).abs() < 1e-9)
    }
}
