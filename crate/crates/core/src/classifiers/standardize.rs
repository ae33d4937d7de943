use serde::{Deserialize, Serialize};

const MIN_STD: f64 = 1e-12;

/// Per-feature z-scoring fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of each column.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Self { mean, std }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s < MIN_STD { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_maps_to_zero() {
        let s = Standardizer::fit(&[vec![3.0, -1.0]]);
        assert_eq!(s.std, vec![0.0, 0.0]);
        assert_eq!(s.transform(&[3.0, 5.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn two_point_column() {
        let rows = vec![vec![0.0], vec![2.0]];
        let s = Standardizer::fit(&rows);
        assert_eq!((s.mean[0], s.std[0]), (1.0, 1.0));
        assert_eq!(s.transform_all(&rows), vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn refit_on_standardized_data_is_identity() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 * 0.7 - 3.0, ((i * 7) % 5) as f64, 4.0])
            .collect();
        let z = Standardizer::fit(&rows).transform_all(&rows);
        let again = Standardizer::fit(&z);
        for j in 0..2 {
            assert!(again.mean[j].abs() < 1e-9);
            assert!((again.std[j] - 1.0).abs() < 1e-9);
        }
        // constant column stays at zero
        assert_eq!(again.std[2], 0.0);
    }
}
