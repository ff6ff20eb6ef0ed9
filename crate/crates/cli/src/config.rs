use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use veronese_core::norms::NormKind;
use veronese_core::numerics::{BaseNorm, Settings};

use crate::io::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Metrics,
    Factorization,
    Summing,
    All,
}

/// Every knob of a run. Missing fields take the defaults below, and the
/// complete record is echoed in each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base dimension.
    pub n: usize,
    /// Tensor order and polynomial degree.
    pub d: usize,
    /// Number of polynomial outputs.
    pub m: usize,
    pub base: BaseNorm,
    pub norms: Vec<NormKind>,
    pub q: f64,
    pub samples: usize,
    /// Ratio evaluations for summing-constant searches.
    pub budget: usize,
    /// Acceptance tolerance for Pietsch violations and Cauchy tests.
    pub tol: f64,
    pub seed: u64,
    /// Random instances per check suite.
    pub instances: usize,
    /// Random polynomials in the Pietsch dictionary.
    pub dictionary_size: usize,
    /// Fixed Pietsch constant; estimated when absent.
    pub constant: Option<f64>,
    pub tensor: Option<PathBuf>,
    pub poly: Option<PathBuf>,
    pub family: Option<PathBuf>,
    /// Base points for the distance command.
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub suite: Suite,
    /// Where the pietsch command writes its certificate.
    pub certificate: Option<PathBuf>,
    pub settings: Settings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2,
            d: 2,
            m: 1,
            base: BaseNorm::L2,
            norms: NormKind::ALL.to_vec(),
            q: 1.0,
            samples: 100,
            budget: 120,
            tol: 1e-6,
            seed: 0x5eed,
            instances: 4,
            dictionary_size: 200,
            constant: None,
            tensor: None,
            poly: None,
            family: None,
            x: None,
            y: None,
            suite: Suite::All,
            certificate: None,
            settings: Settings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| InputError::toml(path, e))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Input paths in a config file are relative to that file.
    fn resolve_paths(&mut self, dir: &Path) {
        for p in [
            &mut self.tensor,
            &mut self.poly,
            &mut self.family,
            &mut self.certificate,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn validate(&mut self) -> Result<(), InputError> {
        let positive = [
            ("n", self.n),
            ("d", self.d),
            ("m", self.m),
            ("samples", self.samples),
            ("budget", self.budget),
            ("instances", self.instances),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(InputError::config(format!("`{name}` must be positive")));
        }
        if !(self.q.is_finite() && self.q >= 1.0) {
            return Err(InputError::config(format!("`q` = {} must be finite and ≥ 1", self.q)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(InputError::config(format!("`tol` = {} must be positive", self.tol)));
        }
        if let Some(c) = self.constant {
            if !(c.is_finite() && c > 0.0) {
                return Err(InputError::config(format!("`constant` = {c} must be positive")));
            }
        }
        if self.norms.is_empty() {
            return Err(InputError::config("`norms` must name at least one norm".into()));
        }
        self.settings.seed = self.seed;
        Ok(())
    }
}
