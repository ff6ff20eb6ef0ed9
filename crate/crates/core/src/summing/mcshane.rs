use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::BaseNorm;

/// Distance on anchor coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum Metric {
    Base(BaseNorm),
    /// `ℓ_p` distance for a finite `p ≥ 1`.
    Lp(f64),
}

impl Metric {
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Base(b) => b.distance(x, y),
            Metric::Lp(p) => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs().powf(*p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

/// `x ↦ min_{u ∈ S} f(u) + L·d(x, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McShaneFunction {
    pub anchors: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub lipschitz: f64,
    pub metric: Metric,
}

const LIPSCHITZ_SLACK: f64 = 1e-12;

/// Checks that the anchor values are `L`-Lipschitz, then returns the
/// upper McShane extension.
pub fn mcshane_extend(
    anchors: Vec<Vec<f64>>,
    values: Vec<f64>,
    lipschitz: f64,
    metric: Metric,
) -> Result<McShaneFunction> {
    if anchors.is_empty() || anchors.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} anchors with {} values",
            anchors.len(),
            values.len()
        )));
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidInput(format!("Lipschitz constant {lipschitz}")));
    }
    if let Metric::Lp(p) = metric {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidInput(format!("ℓ_p exponent {p}")));
        }
    }
    for i in 0..anchors.len() {
        for j in i + 1..anchors.len() {
            let d = metric.distance(&anchors[i], &anchors[j]);
            let gap = (values[i] - values[j]).abs();
            let allowed = lipschitz * d;
            if gap > allowed + LIPSCHITZ_SLACK * (allowed + values[i].abs() + values[j].abs()).max(1.0) {
                let ratio = if d > 0.0 { gap / d } else { f64::INFINITY };
                return Err(Error::NotLipschitzOnS { i, j, ratio, lipschitz });
            }
        }
    }
    Ok(McShaneFunction {
        anchors,
        values,
        lipschitz,
        metric,
    })
}

impl McShaneFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.anchors
            .iter()
            .zip(&self.values)
            .map(|(u, f)| f + self.lipschitz * self.metric.distance(x, u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest difference quotient over pairs from `probe`.
    pub fn lipschitz_on(&self, probe: &[Vec<f64>]) -> f64 {
        let vals: Vec<f64> = probe.iter().map(|x| self.eval(x)).collect();
        let mut worst = 0.0f64;
        for i in 0..probe.len() {
            for j in i + 1..probe.len() {
                let d = self.metric.distance(&probe[i], &probe[j]);
                if d > 0.0 {
                    worst = worst.max((vals[i] - vals[j]).abs() / d);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    #[test]
    fn interpolates_on_a_segment() {
        let f = mcshane_extend(
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 1.0],
            1.0,
            Metric::Base(BaseNorm::L2),
        )
        .unwrap();
        assert!((f.eval(&[0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_anchor_is_a_cone() {
        let f = mcshane_extend(vec![vec![0.0, 0.0]], vec![0.0], 2.0, Metric::Base(BaseNorm::L1)).unwrap();
        assert_eq!(f.eval(&[1.0, -2.0]), 6.0);
    }

    #[test]
    fn duplicate_point_with_two_values() {
        let e = mcshane_extend(
            vec![vec![0.0], vec![0.0]],
            vec![0.0, 1.0],
            1.0,
            Metric::Base(BaseNorm::L2),
        )
        .unwrap_err();
        assert!(matches!(e, Error::NotLipschitzOnS { i: 0, j: 1, .. }));
    }

    #[test]
    fn lp_metric_matches_base_norms() {
        let (x, y) = ([1.0, -2.0, 0.5], [0.0, 1.0, 2.0]);
        assert!((Metric::Lp(2.0).distance(&x, &y) - BaseNorm::L2.distance(&x, &y)).abs() < 1e-14);
        assert!((Metric::Lp(1.0).distance(&x, &y) - BaseNorm::L1.distance(&x, &y)).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn extension_agrees_and_stays_lipschitz(
            pts in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 2..7),
            probe in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 2..10),
        ) {
            // values of a 1-Lipschitz function
            let values: Vec<f64> = pts.iter().map(|p| (p[0] - 0.3).abs().min(0.7 + p[1].abs())).collect();
            let f = mcshane_extend(pts.clone(), values.clone(), 1.0, Metric::Base(BaseNorm::Linf)).unwrap();
            for (p, v) in pts.iter().zip(&values) {
                prop_assert!((f.eval(p) - v).abs() < 1e-12);
            }
            prop_assert!(f.lipschitz_on(&probe) <= 1.0 + 1e-12);
        }
    }
}
