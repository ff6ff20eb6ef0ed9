use serde::{Deserialize, Serialize};

use super::veronese;
use crate::error::{Error, Result};
use crate::norms::{tensor_distance_upper, NormSelector};
use crate::numerics::{linalg, Settings};

/// A limit point of a convergent cone sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeLimit {
    pub limit: Vec<f64>,
    /// Indices into the input whose bases converge to `limit`.
    pub subsequence: Vec<usize>,
    /// Largest pairwise tensor distance over the tail.
    pub spread: f64,
}

/// Recovers a base-space limit for a sequence whose Veronese images are
/// Cauchy on their second half.
///
/// Returns `Ok(None)` for an empty sequence and [`Error::NotCauchy`] when
/// the tail spread exceeds `tol`. For even `d` the limit is taken with its
/// first nonzero coordinate positive and the subsequence keeps the terms
/// pointing the same way.
pub fn cone_sequence_limit(
    xs: &[Vec<f64>],
    d: usize,
    tol: f64,
    selector: NormSelector,
    settings: &Settings,
) -> Result<Option<ConeLimit>> {
    let Some(first) = xs.first() else {
        return Ok(None);
    };
    let n = first.len();
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::ShapeMismatch("sequence terms of unequal length".into()));
    }
    let start = xs.len() / 2;
    let tail = &xs[start..];
    let tensors = tail.iter().map(|x| veronese(x, d)).collect::<Result<Vec<_>>>()?;
    let mut spread = 0.0f64;
    for i in 0..tensors.len() {
        for j in i + 1..tensors.len() {
            let diff = tensors[i].sub(&tensors[j])?;
            spread = spread.max(tensor_distance_upper(&diff, selector, settings)?);
        }
    }
    if spread > tol {
        return Err(Error::NotCauchy { spread, tol });
    }

    let last = xs.last().expect("non-empty");
    let norm_d = selector.base.norm(last).powi(d as i32);
    if norm_d <= tol {
        return Ok(Some(ConeLimit {
            limit: vec![0.0; n],
            subsequence: (start..xs.len()).collect(),
            spread,
        }));
    }
    let mut limit = last.clone();
    if d.is_multiple_of(2) {
        if let Some(lead) = limit.iter().copied().find(|v| v.abs() > 0.0) {
            if lead < 0.0 {
                limit.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    let subsequence: Vec<usize> = (start..xs.len())
        .filter(|&k| d % 2 == 1 || linalg::dot(&xs[k], &limit) > 0.0)
        .collect();
    Ok(Some(ConeLimit {
        limit,
        subsequence,
        spread,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormKind;
    use crate::numerics::BaseNorm;

    fn selector() -> NormSelector {
        NormSelector::new(NormKind::SymProjective, BaseNorm::L2)
    }

    #[test]
    fn empty_sequence_has_no_limit() {
        assert_eq!(
            cone_sequence_limit(&[], 2, 1e-6, selector(), &Settings::default()).unwrap(),
            None
        );
    }

    #[test]
    fn constant_sequence_is_its_own_limit() {
        let xs = vec![vec![0.6, -0.8]; 10];
        let l = cone_sequence_limit(&xs, 3, 1e-9, selector(), &Settings::default())
            .unwrap()
            .unwrap();
        assert_eq!(l.limit, xs[0]);
        assert_eq!(l.subsequence, (5..10).collect::<Vec<_>>());
        assert!(l.spread <= 1e-12);
    }

    #[test]
    fn even_degree_aligns_sign_and_keeps_matching_terms() {
        let xs: Vec<Vec<f64>> = (0..12)
            .map(|k| if k % 2 == 0 { vec![-1.0, 0.5] } else { vec![1.0, -0.5] })
            .collect();
        let l = cone_sequence_limit(&xs, 2, 1e-9, selector(), &Settings::default())
            .unwrap()
            .unwrap();
        assert_eq!(l.limit, vec![1.0, -0.5]);
        assert_eq!(l.subsequence, vec![7, 9, 11]);
    }

    #[test]
    fn odd_degree_separates_antipodes() {
        let xs: Vec<Vec<f64>> = (0..12)
            .map(|k| if k % 2 == 0 { vec![-1.0, 0.5] } else { vec![1.0, -0.5] })
            .collect();
        let e = cone_sequence_limit(&xs, 3, 1e-3, selector(), &Settings::default()).unwrap_err();
        assert!(matches!(e, Error::NotCauchy { .. }));
    }

    #[test]
    fn vanishing_sequence_converges_to_the_origin() {
        let xs: Vec<Vec<f64>> = (1..=20).map(|k| vec![1.0 / k as f64, -2.0 / k as f64]).collect();
        let l = cone_sequence_limit(&xs, 4, 1e-2, selector(), &Settings::default())
            .unwrap()
            .unwrap();
        assert_eq!(l.limit, vec![0.0, 0.0]);
    }

    #[test]
    fn ragged_terms_rejected() {
        let xs = vec![vec![1.0, 0.0], vec![1.0]];
        let e = cone_sequence_limit(&xs, 2, 1e-3, selector(), &Settings::default()).unwrap_err();
        assert!(matches!(e, Error::ShapeMismatch(_)));
    }
}
