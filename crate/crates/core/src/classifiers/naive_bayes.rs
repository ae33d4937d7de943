//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::{argmax, LabeledDataset, NbConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// `[class][feature]`
    pub means: Vec<Vec<f64>>,
    /// `[class][feature]`, population variance plus the smoothing floor.
    pub variances: Vec<Vec<f64>>,
    pub log_priors: Vec<f64>,
    pub smoothing: f64,
}

pub fn fit(data: &LabeledDataset, cfg: &NbConfig) -> Result<NaiveBayesModel> {
    let (k, d) = (data.n_classes(), data.n_features());
    let counts = data.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::MissingClass(data.class_names[c].clone()));
    }

    let mut means = vec![vec![0.0; d]; k];
    for (row, &y) in data.features.iter().zip(&data.labels) {
        for (m, v) in means[y].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (c, m) in means.iter_mut().enumerate() {
        m.iter_mut().for_each(|v| *v /= counts[c] as f64);
    }
    let mut variances = vec![vec![0.0; d]; k];
    for (row, &y) in data.features.iter().zip(&data.labels) {
        for j in 0..d {
            let dv = row[j] - means[y][j];
            variances[y][j] += dv * dv;
        }
    }

    // floor relative to the largest overall feature variance
    let overall = super::Standardizer::fit(&data.features);
    let max_var = overall.std.iter().map(|s| s * s).fold(0.0, f64::max);
    let smoothing = cfg.var_smoothing * max_var;
    for (c, v) in variances.iter_mut().enumerate() {
        v.iter_mut().for_each(|s| *s = *s / counts[c] as f64 + smoothing);
    }

    let n = data.n_samples() as f64;
    let log_priors = counts.iter().map(|&c| (c as f64 / n).ln()).collect();
    Ok(NaiveBayesModel {
        means,
        variances,
        log_priors,
        smoothing,
    })
}

impl NaiveBayesModel {
    /// `log P(c) + Σⱼ log N(xⱼ; μ_cj, σ²_cj)` for every class.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.log_priors
            .iter()
            .enumerate()
            .map(|(c, lp)| {
                lp + x
                    .iter()
                    .zip(self.means[c].iter().zip(&self.variances[c]))
                    .map(|(v, (m, s2))| {
                        if *s2 <= 0.0 {
                            // zero variance with smoothing disabled: a point mass
                            if v == m {
                                0.0
                            } else {
                                f64::NEG_INFINITY
                            }
                        } else {
                            -0.5 * (ln_2pi + s2.ln() + (v - m) * (v - m) / s2)
                        }
                    })
                    .sum::<f64>()
            })
            .collect()
    }

    /// Winning class (lowest index on ties) and normalized log-posteriors.
    pub fn predict(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let joint = self.log_joint(x);
        let class = argmax(&joint);
        let max = joint[class];
        let lse = if max.is_finite() {
            max + joint.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
        } else {
            0.0
        };
        (class, joint.iter().map(|v| v - lse).collect())
    }
}
