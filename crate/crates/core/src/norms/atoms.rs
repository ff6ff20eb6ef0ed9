use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numerics::{BaseNorm, SeedStream};

/// Unit vectors used as rank-one atoms `v^{⊗d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDictionary {
    pub base: BaseNorm,
    pub atoms: Vec<Vec<f64>>,
}

/// Quasi-uniform directions in ℝⁿ: a half-circle for n = 2, a Fibonacci
/// lattice for n = 3 and seeded Gaussian directions otherwise. For n = 2
/// the grid of size 2N contains the grid of size N, and for n ≥ 4 a longer
/// draw extends a shorter one.
pub fn direction_grid(n: usize, count: usize, seeds: &SeedStream) -> Vec<Vec<f64>> {
    match n {
        0 => vec![],
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = seeds.fork(n as u64);
            (0..count)
                .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect()
        }
    }
}

impl AtomDictionary {
    /// Grid directions plus coordinate vectors and their pairwise sums and
    /// differences, all rescaled to unit base norm.
    pub fn initial(n: usize, base: BaseNorm, count: usize, seeds: &SeedStream) -> Self {
        let mut dict = Self {
            base,
            atoms: Vec::new(),
        };
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            dict.push(&v);
            for j in i + 1..n {
                for s in [1.0, -1.0] {
                    let mut w = v.clone();
                    w[j] = s;
                    dict.push(&w);
                }
            }
        }
        if base == BaseNorm::Linf && n <= 12 {
            for v in crate::numerics::ball_vertices(n, BaseNorm::Linf).unwrap_or_default() {
                if v[0] > 0.0 {
                    dict.push(&v);
                }
            }
        }
        for v in direction_grid(n, count, seeds) {
            dict.push(&v);
        }
        dict
    }

    /// Appends `v / ‖v‖`; ignores zero vectors.
    pub fn push(&mut self, v: &[f64]) {
        if let Some(u) = self.base.normalize(v) {
            self.atoms.push(u);
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}
