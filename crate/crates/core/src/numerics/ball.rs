use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ℓp norm placed on ℝⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseNorm {
    L1,
    L2,
    Linf,
}

impl fmt::Display for BaseNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseNorm::L1 => "l1",
            BaseNorm::L2 => "l2",
            BaseNorm::Linf => "linf",
        })
    }
}

impl std::str::FromStr for BaseNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(BaseNorm::L1),
            "l2" | "2" => Ok(BaseNorm::L2),
            "linf" | "inf" | "l_inf" => Ok(BaseNorm::Linf),
            other => Err(Error::InvalidInput(format!("unknown base norm `{other}`"))),
        }
    }
}

impl BaseNorm {
    pub const ALL: [BaseNorm; 3] = [BaseNorm::L1, BaseNorm::L2, BaseNorm::Linf];

    pub fn dual(self) -> BaseNorm {
        match self {
            BaseNorm::L1 => BaseNorm::Linf,
            BaseNorm::L2 => BaseNorm::L2,
            BaseNorm::Linf => BaseNorm::L1,
        }
    }

    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            BaseNorm::L1 => x.iter().map(|v| v.abs()).sum(),
            BaseNorm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            BaseNorm::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn dual_norm(self, phi: &[f64]) -> f64 {
        self.dual().norm(phi)
    }

    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }

    /// A functional φ with dual norm 1 and φ(x) = ‖x‖. Zero for x = 0.
    pub fn norming_functional(self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if self.norm(x) == 0.0 {
            return vec![0.0; n];
        }
        match self {
            BaseNorm::L1 => x.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect(),
            BaseNorm::L2 => {
                let r = self.norm(x);
                x.iter().map(|v| v / r).collect()
            }
            BaseNorm::Linf => {
                let (idx, _) = x.iter().enumerate().fold(
                    (0, -1.0),
                    |(bi, bv), (i, v)| {
                        if v.abs() > bv {
                            (i, v.abs())
                        } else {
                            (bi, bv)
                        }
                    },
                );
                let mut phi = vec![0.0; n];
                phi[idx] = x[idx].signum();
                phi
            }
        }
    }

    /// Rescales a nonzero vector onto the unit sphere of this norm.
    pub fn normalize(self, x: &[f64]) -> Option<Vec<f64>> {
        let r = self.norm(x);
        (r > 0.0 && r.is_finite()).then(|| x.iter().map(|v| v / r).collect())
    }
}

/// Extreme points of the closed unit ball of ℓ1ⁿ or ℓ∞ⁿ.
pub fn ball_vertices(n: usize, p: BaseNorm) -> Result<Vec<Vec<f64>>> {
    match p {
        BaseNorm::L2 => Err(Error::UnsupportedNorm(p)),
        BaseNorm::L1 => {
            let mut out = Vec::with_capacity(2 * n);
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[i] = s;
                    out.push(v);
                }
            }
            Ok(out)
        }
        BaseNorm::Linf => {
            if n > 14 {
                return Err(Error::DimensionTooLarge {
                    what: "cube vertex enumeration",
                    needed: 1u128 << n.min(127),
                    budget: 1 << 14,
                });
            }
            Ok(sign_vectors(n))
        }
    }
}

/// All 2ⁿ vectors with entries in {−1, 1}.
pub(crate) fn sign_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duals_pair_up() {
        assert_eq!(BaseNorm::L1.dual(), BaseNorm::Linf);
        assert_eq!(BaseNorm::Linf.dual(), BaseNorm::L1);
        assert_eq!(BaseNorm::L2.dual(), BaseNorm::L2);
    }

    #[test]
    fn vertex_sets() {
        let sq = ball_vertices(2, BaseNorm::L1).unwrap();
        assert_eq!(sq.len(), 4);
        assert!(sq.contains(&vec![1.0, 0.0]) && sq.contains(&vec![0.0, -1.0]));

        let cube = ball_vertices(2, BaseNorm::Linf).unwrap();
        assert_eq!(cube.len(), 4);
        assert!(cube.contains(&vec![-1.0, 1.0]));

        let cube3 = ball_vertices(3, BaseNorm::Linf).unwrap();
        assert_eq!(cube3.len(), 8);
        assert!(cube3.iter().all(|v| v.iter().all(|c| c.abs() == 1.0)));
    }

    #[test]
    fn vertex_errors() {
        assert!(matches!(
            ball_vertices(3, BaseNorm::L2),
            Err(Error::UnsupportedNorm(BaseNorm::L2))
        ));
        assert!(matches!(
            ball_vertices(15, BaseNorm::Linf),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn vertices_are_unit_and_distinct() {
        for (n, p) in [(3, BaseNorm::L1), (4, BaseNorm::Linf), (5, BaseNorm::L1)] {
            let vs = ball_vertices(n, p).unwrap();
            for (i, v) in vs.iter().enumerate() {
                assert!((p.norm(v) - 1.0).abs() < 1e-15);
                for w in &vs[i + 1..] {
                    assert_ne!(v, w);
                }
            }
        }
    }

    #[test]
    fn norming_functionals_norm_the_vector() {
        let x = [3.0, -4.0, 1.0];
        for p in BaseNorm::ALL {
            let phi = p.norming_functional(&x);
            let pairing: f64 = phi.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((pairing - p.norm(&x)).abs() < 1e-12, "{p}");
            assert!((p.dual_norm(&phi) - 1.0).abs() < 1e-12, "{p}");
        }
    }
}
