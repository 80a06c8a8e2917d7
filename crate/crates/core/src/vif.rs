//! Variance inflation factors and iterative collinearity pruning.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::Feature;

/// R² at or above this is treated as perfect collinearity.
const R2_CEILING: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vif {
    Value(f64),
    /// Column is (numerically) a linear combination of the others.
    Infinite,
    /// Constant column; VIF is undefined and the column is passed through.
    Undefined,
}

impl Vif {
    pub fn value(self) -> Option<f64> {
        match self {
            Vif::Value(v) => Some(v),
            Vif::Infinite => Some(f64::INFINITY),
            Vif::Undefined => None,
        }
    }
}

impl Serialize for Vif {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Vif::Value(v) => s.serialize_f64(*v),
            Vif::Infinite => s.serialize_str("inf"),
            Vif::Undefined => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSelection {
    pub retained: Vec<Feature>,
    /// VIFs of the retained features at termination.
    pub vif: Vec<Vif>,
    /// Removed features, in removal order.
    pub removed: Vec<Feature>,
    pub warnings: Vec<String>,
}

/// VIF of every column of `x`.
///
/// Columns are centred first; each one is regressed on all other
/// non-constant columns by least squares.
pub fn compute_vif(x: &DMatrix<f64>) -> Result<Vec<Vif>> {
    let (n, p) = x.shape();
    if n < p + 2 {
        return Err(Error::Argument(format!(
            "VIF needs at least {} rows for {} features, got {n}",
            p + 2,
            p
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("non-finite value in feature matrix".into()));
    }
    let mut centred = x.clone();
    let mut constant = vec![false; p];
    for (j, mut col) in centred.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        constant[j] = col.iter().all(|&v| v == 0.0);
    }
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        if constant[j] {
            out.push(Vif::Undefined);
            continue;
        }
        let others: Vec<usize> = (0..p).filter(|&k| k != j && !constant[k]).collect();
        if others.is_empty() {
            out.push(Vif::Value(1.0));
            continue;
        }
        let a = DMatrix::from_fn(n, others.len(), |i, c| centred[(i, others[c])]);
        let y: DVector<f64> = centred.column(j).into_owned();
        let svd = a.clone().svd(true, true);
        let tol = svd.singular_values.max() * 1e-12 * n.max(others.len()) as f64;
        let beta = svd
            .solve(&y, tol)
            .map_err(|e| Error::Training(format!("least squares failed: {e}")))?;
        let rss = (&y - &a * beta).norm_squared();
        let tss = y.norm_squared();
        let r2 = 1.0 - rss / tss;
        out.push(if r2 >= R2_CEILING {
            Vif::Infinite
        } else {
            Vif::Value(1.0 / (1.0 - r2.max(0.0)))
        });
    }
    Ok(out)
}

/// Repeatedly drop the single highest-VIF feature until every remaining VIF
/// is at most `threshold`. Ties go to the feature earliest in canonical order.
pub fn prune_by_vif(
    x: &DMatrix<f64>,
    features: &[Feature],
    threshold: f64,
) -> Result<FeatureSelection> {
    if x.ncols() != features.len() {
        return Err(Error::Contract("matrix width does not match feature names".into()));
    }
    let mut keep: Vec<usize> = (0..features.len()).collect();
    let mut removed = Vec::new();
    let mut warnings = Vec::new();
    loop {
        let sub = x.select_columns(&keep);
        let vif = compute_vif(&sub)?;
        let worst = keep
            .iter()
            .zip(&vif)
            .filter_map(|(&c, v)| v.value().map(|v| (c, v)))
            .filter(|&(_, v)| v > threshold)
            .max_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then_with(|| features[b.0].cmp(&features[a.0]))
            });
        match worst {
            Some((c, _)) => {
                removed.push(features[c]);
                keep.retain(|&k| k != c);
            }
            None => {
                for (&c, v) in keep.iter().zip(&vif) {
                    if *v == Vif::Undefined {
                        warnings.push(format!(
                            "`{}` is constant; VIF undefined, kept as pass-through",
                            features[c]
                        ));
                    }
                }
                return Ok(FeatureSelection {
                    retained: keep.iter().map(|&c| features[c]).collect(),
                    vif,
                    removed,
                    warnings,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn orthogonal() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0],
        )
    }

    #[test]
    fn orthogonal_columns_have_unit_vif() {
        for v in compute_vif(&orthogonal()).unwrap() {
            assert_abs_diff_eq!(v.value().unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_duplicate_is_infinite_and_one_is_pruned() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let c = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let x = DMatrix::from_fn(6, 3, |i, j| [a[i], a[i], c[i]][j]);
        let v = compute_vif(&x).unwrap();
        assert_eq!(v[0], Vif::Infinite);
        assert_eq!(v[1], Vif::Infinite);
        let names = [Feature::Words, Feature::Sentences, Feature::Urls];
        let sel = prune_by_vif(&x, &names, 5.0).unwrap();
        assert_eq!(sel.removed, vec![Feature::Words]);
        assert_eq!(sel.retained, vec![Feature::Sentences, Feature::Urls]);
    }

    #[test]
    fn constant_column_is_undefined() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 2.0, 3.0, 2.0, 5.0, 2.0]);
        let v = compute_vif(&x).unwrap();
        assert_eq!(v[1], Vif::Undefined);
        let sel = prune_by_vif(&x, &[Feature::Words, Feature::Urls], 5.0).unwrap();
        assert!(sel.removed.is_empty());
        assert_eq!(sel.warnings.len(), 1);
    }

    #[test]
    fn too_few_rows() {
        assert!(compute_vif(&DMatrix::zeros(3, 2)).is_err());
    }
}
