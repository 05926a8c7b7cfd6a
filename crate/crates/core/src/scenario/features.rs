use serde::{Deserialize, Serialize};

use crate::data::HistoricalDay;

/// Moments per signal: mean, population standard deviation, max, min.
pub const MOMENTS: usize = 4;
/// Price, aggregate demand and PV capacity factor.
pub const SIGNALS: usize = 3;
pub const FEATURE_LEN: usize = MOMENTS * SIGNALS;

/// Daily statistics `(price | demand | pv) x (mean, std, max, min)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_LEN]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn moments(xs: &[f64]) -> [f64; MOMENTS] {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    [mean, var.sqrt(), max, min]
}

pub fn extract_features(day: &HistoricalDay) -> FeatureVector {
    let mut out = [0.0; FEATURE_LEN];
    let demand = day.total_demand();
    for (block, signal) in [&day.price, &demand, &day.pv_cf].into_iter().enumerate() {
        out[block * MOMENTS..(block + 1) * MOMENTS].copy_from_slice(&moments(signal));
    }
    FeatureVector(out)
}

/// Per-dimension affine map to zero mean and unit population variance.
/// Dimensions with zero spread are only centred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn fit(rows: &[FeatureVector]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; FEATURE_LEN];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.0) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; FEATURE_LEN];
        for r in rows {
            for ((s, x), m) in scale.iter_mut().zip(r.0).zip(&mean) {
                *s += (x - m).powi(2);
            }
        }
        for s in &mut scale {
            let sd = (*s / n).sqrt();
            *s = if sd > 0.0 { sd } else { 1.0 };
        }
        Standardization { mean, scale }
    }

    pub fn apply(&self, row: &FeatureVector) -> Vec<f64> {
        row.0
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}
