//! Median/IQR ("robust") feature scaling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Feature, FeatureVector};
use crate::stats::quantile_sorted;

/// Per-feature median and interquartile range. A column whose IQR is 0 is
/// only centred (see [`ScalerParams::is_pass_through`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub features: Vec<Feature>,
    pub median: Vec<f64>,
    pub iqr: Vec<f64>,
}

impl ScalerParams {
    /// Fit on the columns of `x`, which are named by `features`.
    pub fn fit(x: &DMatrix<f64>, features: &[Feature]) -> Result<Self> {
        if x.ncols() != features.len() {
            return Err(Error::Contract(format!(
                "{} columns but {} feature names",
                x.ncols(),
                features.len()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::Argument("robust scaler needs at least 2 rows".into()));
        }
        let mut median = Vec::with_capacity(x.ncols());
        let mut iqr = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mut v: Vec<f64> = col.iter().copied().collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Contract("non-finite value in feature matrix".into()));
            }
            v.sort_by(f64::total_cmp);
            median.push(quantile_sorted(&v, 0.5));
            iqr.push((quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)).max(0.0));
        }
        Ok(ScalerParams {
            features: features.to_vec(),
            median,
            iqr,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.len();
        if self.median.len() != n || self.iqr.len() != n {
            return Err(Error::Contract("scaler vectors differ in length".into()));
        }
        if self.iqr.iter().chain(&self.median).any(|v| !v.is_finite()) {
            return Err(Error::Contract("scaler parameters must be finite".into()));
        }
        if self.iqr.iter().any(|&q| q < 0.0) {
            return Err(Error::Contract("scaler IQR must be non-negative".into()));
        }
        Ok(())
    }

    pub fn is_pass_through(&self, j: usize) -> bool {
        self.iqr[j] == 0.0
    }

    fn scale(&self, j: usize, v: f64) -> f64 {
        let centred = v - self.median[j];
        if self.is_pass_through(j) {
            centred
        } else {
            centred / self.iqr[j]
        }
    }

    /// Scale a row whose values are aligned with `names`.
    pub fn apply(&self, names: &[Feature], row: &[f64]) -> Result<Vec<f64>> {
        if names.len() != row.len() {
            return Err(Error::Contract("row length does not match feature names".into()));
        }
        names
            .iter()
            .zip(row)
            .map(|(f, &v)| {
                let j = self.position(*f)?;
                Ok(self.scale(j, v))
            })
            .collect()
    }

    /// Scale the fitted features of a full vector, in the scaler's order.
    pub fn apply_vector(&self, v: &FeatureVector) -> Vec<f64> {
        self.features
            .iter()
            .enumerate()
            .map(|(j, &f)| self.scale(j, v.get(f)))
            .collect()
    }

    /// Scale a matrix whose columns are named by `names`.
    pub fn apply_matrix(&self, names: &[Feature], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if names.len() != x.ncols() {
            return Err(Error::Contract("matrix width does not match feature names".into()));
        }
        let cols = names
            .iter()
            .map(|&f| self.position(f))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            self.scale(cols[j], x[(i, j)])
        }))
    }

    fn position(&self, f: Feature) -> Result<usize> {
        self.features
            .iter()
            .position(|&g| g == f)
            .ok_or_else(|| Error::Contract(format!("scaler has no parameters for `{f}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_to_five() {
        let x = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let p = ScalerParams::fit(&x, &[Feature::Words]).unwrap();
        assert_eq!(p.median, vec![3.0]);
        assert_eq!(p.iqr, vec![2.0]);
        assert_eq!(p.apply(&[Feature::Words], &[5.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn constant_column_passes_through() {
        let x = DMatrix::from_column_slice(3, 1, &[7.0, 7.0, 7.0]);
        let p = ScalerParams::fit(&x, &[Feature::Urls]).unwrap();
        assert!(p.is_pass_through(0));
        let s = p.apply_matrix(&[Feature::Urls], &x).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn medians_scale_to_zero() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 30.0, 8.0, 20.0, 3.0, 0.0]);
        let names = [Feature::Words, Feature::Flesch];
        let p = ScalerParams::fit(&x, &names).unwrap();
        for v in p.apply(&names, &p.median).unwrap() {
            assert_abs_diff_eq!(v, 0.0);
        }
    }

    #[test]
    fn unknown_feature_is_contract_error() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let p = ScalerParams::fit(&x, &[Feature::Words]).unwrap();
        assert!(matches!(
            p.apply(&[Feature::Smog], &[1.0]),
            Err(Error::Contract(_))
        ));
        assert!(ScalerParams::fit(&DMatrix::zeros(1, 1), &[Feature::Words]).is_err());
    }
}
