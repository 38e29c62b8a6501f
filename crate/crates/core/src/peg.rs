//! Peg (intrinsic value) models: a DAO portfolio index and a weighted sum of
//! normalized success factors.

use std::io::Read;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PegError {
    #[error("degenerate factor range for {factor_id}: window max {max} must be positive")]
    DegenerateRange { factor_id: String, max: f64 },
    #[error("factor {factor_id} has no sample at or before t={t}")]
    NoSample { factor_id: String, t: i64 },
    #[error("missing factor {0}")]
    MissingFactor(String),
    #[error("weight sum {0} differs from 1 by more than 1e-9")]
    WeightSum(f64),
    #[error("weight for {factor_id} is {weight}, expected a value in [0, 1]")]
    WeightRange { factor_id: String, weight: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("growth rate {0} must be greater than -1")]
    GrowthRate(f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(i64),
    #[error("governance token supply at t={t} is {supply}, expected a positive value")]
    ZeroSupply { t: i64, supply: f64 },
    #[error("timestamps for {factor_id} must be strictly increasing (t={t})")]
    Unordered { factor_id: String, t: i64 },
    #[error("factor csv line {line}: {message}")]
    Csv { line: u64, message: String },
}

/// How a factor value is mapped into `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `(F - Min) / Max`
    #[default]
    Paper,
    /// `(F - Min) / (Max - Min)`
    MinMax,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// `S(x) = (max_price - bias) * x`
    #[default]
    Linear,
}

/// Time-ordered samples of one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSeries {
    pub factor_id: String,
    samples: Vec<(i64, f64)>,
}

impl FactorSeries {
    pub fn new(factor_id: impl Into<String>, samples: Vec<(i64, f64)>) -> Result<Self, PegError> {
        let factor_id = factor_id.into();
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(PegError::Unordered { factor_id, t: w[1].0 });
        }
        Ok(FactorSeries { factor_id, samples })
    }

    pub fn samples(&self) -> &[(i64, f64)] {
        &self.samples
    }

    fn visible(&self, t: i64) -> &[(i64, f64)] {
        let n = self.samples.partition_point(|&(ts, _)| ts <= t);
        &self.samples[..n]
    }

    /// Latest sample value at or before `t`.
    pub fn value_at(&self, t: i64) -> Option<f64> {
        self.visible(t).last().map(|&(_, v)| v)
    }

    /// Running `(Min, Max)` over every sample with timestamp `<= t`.
    pub fn window(&self, t: i64) -> Option<(f64, f64)> {
        self.visible(t).iter().fold(None, |acc, &(_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
        })
    }
}

/// Normalizes the factor's value at `t` against its expanding window.
///
/// In `MinMax` mode a flat window (`Max == Min`) normalizes to 0.
pub fn normalize_factor(series: &FactorSeries, t: i64, mode: NormalizationMode) -> Result<f64, PegError> {
    let no_sample = || PegError::NoSample {
        factor_id: series.factor_id.clone(),
        t,
    };
    let value = series.value_at(t).ok_or_else(no_sample)?;
    let (min, max) = series.window(t).ok_or_else(no_sample)?;
    if max <= 0.0 {
        return Err(PegError::DegenerateRange {
            factor_id: series.factor_id.clone(),
            max,
        });
    }
    let x = match mode {
        NormalizationMode::Paper => (value - min) / max,
        NormalizationMode::MinMax if max == min => 0.0,
        NormalizationMode::MinMax => (value - min) / (max - min),
    };
    Ok(x.clamp(0.0, 1.0))
}

/// Discretely compounded future value `initial_price * (1 + rate)^t`.
pub fn future_value(initial_price: f64, rate: f64, t: i64) -> Result<f64, PegError> {
    if rate <= -1.0 {
        return Err(PegError::GrowthRate(rate));
    }
    if t < 0 {
        return Err(PegError::NegativeTime(t));
    }
    Ok(initial_price * (1.0 + rate).powi(t as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorWeight {
    pub factor_id: String,
    pub weight: f64,
}

/// Raw linear-model parameters, as found in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearPegParams {
    pub weights: Vec<FactorWeight>,
    pub bias: f64,
    pub max_price: f64,
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub scaling: ScalingMode,
}

/// Peg = bias + S(sum of weighted normalized factors) + noise, clamped to
/// `[bias, max_price]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPegModel {
    params: LinearPegParams,
}

impl LinearPegModel {
    pub fn new(params: LinearPegParams) -> Result<Self, PegError> {
        for w in &params.weights {
            if !(0.0..=1.0).contains(&w.weight) {
                return Err(PegError::WeightRange {
                    factor_id: w.factor_id.clone(),
                    weight: w.weight,
                });
            }
        }
        let sum: f64 = params.weights.iter().map(|w| w.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(PegError::WeightSum(sum));
        }
        if !(params.bias >= 0.0) {
            return Err(PegError::InvalidModel(format!("bias {} must be >= 0", params.bias)));
        }
        if !(params.max_price > params.bias) {
            return Err(PegError::InvalidModel(format!(
                "max_price {} must exceed bias {}",
                params.max_price, params.bias
            )));
        }
        if !(params.noise_amplitude >= 0.0 && params.noise_amplitude < params.max_price - params.bias) {
            return Err(PegError::InvalidModel(format!(
                "noise_amplitude {} must lie in [0, max_price - bias)",
                params.noise_amplitude
            )));
        }
        Ok(LinearPegModel { params })
    }

    pub fn params(&self) -> &LinearPegParams {
        &self.params
    }

    fn scale(&self, x: f64) -> f64 {
        match self.params.scaling {
            ScalingMode::Linear => (self.params.max_price - self.params.bias) * x,
        }
    }
}

/// Evaluates the linear peg at `t`. Noise is drawn from `rng` only when the
/// model has a positive noise amplitude.
pub fn compute_peg_linear<R: Rng + ?Sized>(
    model: &LinearPegModel,
    factors: &[FactorSeries],
    t: i64,
    rng: &mut R,
) -> Result<f64, PegError> {
    let p = &model.params;
    let mut weighted = 0.0;
    for w in &p.weights {
        let series = factors
            .iter()
            .find(|s| s.factor_id == w.factor_id)
            .ok_or_else(|| PegError::MissingFactor(w.factor_id.clone()))?;
        weighted += w.weight * normalize_factor(series, t, p.normalization)?;
    }
    let noise = if p.noise_amplitude > 0.0 {
        rng.gen_range(-p.noise_amplitude..=p.noise_amplitude)
    } else {
        0.0
    };
    Ok((p.bias + model.scale(weighted) + noise).clamp(p.bias, p.max_price))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioHolding {
    pub asset_id: String,
    pub amount: f64,
    pub initial_price: f64,
    #[serde(default)]
    pub growth_rate: f64,
}

/// Governance token supply as a function of the step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupplySchedule {
    Constant { supply: f64 },
    Compound { initial: f64, rate: f64 },
}

impl SupplySchedule {
    pub fn at(&self, t: i64) -> f64 {
        match *self {
            SupplySchedule::Constant { supply } => supply,
            SupplySchedule::Compound { initial, rate } => initial * (1.0 + rate).powi(t.max(0) as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioPegModel {
    pub holdings: Vec<PortfolioHolding>,
    pub supply: SupplySchedule,
}

impl PortfolioPegModel {
    pub fn validate(&self) -> Result<(), PegError> {
        for h in &self.holdings {
            if !(h.amount >= 0.0) {
                return Err(PegError::InvalidModel(format!(
                    "holding {} has negative amount",
                    h.asset_id
                )));
            }
            if h.growth_rate <= -1.0 {
                return Err(PegError::GrowthRate(h.growth_rate));
            }
        }
        if let SupplySchedule::Compound { rate, .. } = self.supply {
            if rate <= -1.0 {
                return Err(PegError::GrowthRate(rate));
            }
        }
        Ok(())
    }
}

/// Portfolio peg: `sum(c_i * FV(t, A_i)) / supply(t)`.
pub fn compute_peg_portfolio(model: &PortfolioPegModel, t: i64) -> Result<f64, PegError> {
    let supply = model.supply.at(t);
    if !(supply > 0.0) {
        return Err(PegError::ZeroSupply { t, supply });
    }
    let mut total = 0.0;
    for h in &model.holdings {
        total += h.amount * future_value(h.initial_price, h.growth_rate, t)?;
    }
    Ok(total / supply)
}

#[derive(Debug, Deserialize)]
struct FactorRow {
    t: i64,
    factor_id: String,
    value: f64,
}

/// Reads `t,factor_id,value` rows into one series per factor, in order of
/// first appearance.
pub fn read_factor_csv<R: Read>(reader: R) -> Result<Vec<FactorSeries>, PegError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| PegError::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if headers != vec!["t", "factor_id", "value"] {
        return Err(PegError::Csv {
            line: 1,
            message: format!(
                "expected header t,factor_id,value, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out: Vec<FactorSeries> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| PegError::Csv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: FactorRow = record.deserialize(None).map_err(|e| PegError::Csv {
            line,
            message: e.to_string(),
        })?;
        if !row.value.is_finite() {
            return Err(PegError::Csv {
                line,
                message: "value is not finite".into(),
            });
        }
        match out.iter_mut().find(|s| s.factor_id == row.factor_id) {
            Some(series) => {
                if series.samples.last().is_some_and(|&(ts, _)| ts >= row.t) {
                    return Err(PegError::Csv {
                        line,
                        message: format!("rows for {} are not sorted by t", row.factor_id),
                    });
                }
                series.samples.push((row.t, row.value));
            }
            None => out.push(FactorSeries {
                factor_id: row.factor_id,
                samples: vec![(row.t, row.value)],
            }),
        }
    }
    Ok(out)
}
