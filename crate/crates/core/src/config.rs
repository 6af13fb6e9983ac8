//! Experiment configuration: a TOML file with dotted keys such as
//! `box.L = 4`. Unknown keys are rejected.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disorder::WeightDistribution;
use crate::error::{Error, Result};
use crate::expansion::SpectralWindow;
use crate::lattice::{BoxSpec, WaveVector};
use crate::profile::Profile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Coeffs,
    Resolvent,
    Dos,
    Verify,
    Crosscheck,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Coeffs => "coeffs",
            Mode::Resolvent => "resolvent",
            Mode::Dos => "dos",
            Mode::Verify => "verify",
            Mode::Crosscheck => "crosscheck",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    #[serde(rename = "L")]
    pub side: f64,
    pub d: usize,
    pub p_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: String,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSection {
    pub kind: String,
    /// Value of the `constant` law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    #[serde(rename = "E")]
    pub e: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub lambda0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersSection {
    /// Truncation order of the partial sums.
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Highest coefficient order tabulated in `coeffs` mode.
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosSection {
    /// Fixed momentum cutoff; chosen from the budget `ε/2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosscheckSection {
    pub configs: u64,
}

impl Default for CrosscheckSection {
    fn default() -> Self {
        CrosscheckSection { configs: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Momentum in physical units; must lie on the dual lattice.
    pub p: Vec<f64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub name: String,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Default mode; the command line selects the mode actually run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(rename = "box")]
    pub box_section: BoxSection,
    pub profile: ProfileSection,
    pub distribution: DistributionSection,
    pub window: WindowSection,
    pub orders: OrdersSection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub dos: DosSection,
    #[serde(default)]
    pub crosscheck: CrosscheckSection,
    /// Test vectors `ψ`; each is used as both `ψ_1` and `ψ_2`.
    #[serde(default, rename = "vector", skip_serializing_if = "Vec::is_empty")]
    pub vectors: Vec<VectorSpec>,
}

/// A named test vector.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedVector {
    pub name: String,
    pub psi: WaveVector,
}

/// The validated physical model described by a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub bx: BoxSpec,
    pub profile: Profile,
    pub dist: WeightDistribution,
    pub window: SpectralWindow,
    pub vectors: Vec<NamedVector>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter { name: "config", reason: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    pub fn model(&self) -> Result<Model> {
        let b = &self.box_section;
        let bx = BoxSpec::new(b.side, b.d, b.p_max)?;
        let profile = match self.profile.kind.as_str() {
            "gaussian" => Profile::gaussian(self.profile.width)?,
            other => {
                return Err(Error::InvalidParameter { name: "profile.kind", reason: format!("unknown profile `{other}`") })
            }
        };
        let dist = match (self.distribution.kind.as_str(), self.distribution.c) {
            ("constant", Some(c)) if c.is_finite() => WeightDistribution::Constant { c },
            ("constant", _) => {
                return Err(Error::InvalidParameter { name: "distribution.c", reason: "constant law needs a finite `c`".into() })
            }
            ("uniform_zero_one", None) => WeightDistribution::UniformZeroOne,
            ("rademacher", None) => WeightDistribution::Rademacher,
            ("uniform_zero_one" | "rademacher", Some(_)) => {
                return Err(Error::InvalidParameter { name: "distribution.c", reason: "only the constant law takes `c`".into() })
            }
            (other, _) => {
                return Err(Error::InvalidParameter {
                    name: "distribution.kind",
                    reason: format!("unknown distribution `{other}`"),
                })
            }
        };
        let w = &self.window;
        let window = SpectralWindow::new(w.e, w.eta, w.epsilon, w.lambda, w.lambda0)?;
        if self.sampling.samples == 0 {
            return Err(Error::InvalidParameter { name: "sampling.samples", reason: "must be at least 1".into() });
        }
        let vectors = if self.vectors.is_empty() {
            default_vectors(&bx)?
        } else {
            self.vectors
                .iter()
                .map(|v| {
                    let mut psi = WaveVector::new();
                    for t in &v.terms {
                        psi.insert(bx.momentum(&t.p)?, Complex64::new(t.re, t.im));
                    }
                    psi.check_in(&bx)?;
                    Ok(NamedVector { name: v.name.clone(), psi })
                })
                .collect::<Result<_>>()?
        };
        Ok(Model { bx, profile, dist, window, vectors })
    }
}

/// `φ_0`, `φ_{1/L}` and `(φ_0 + φ_{2/L})/√2` along the first axis.
pub fn default_vectors(bx: &BoxSpec) -> Result<Vec<NamedVector>> {
    let d = bx.dim();
    let along = |k: f64| {
        let mut v = vec![0.0; d];
        v[0] = k / bx.side();
        bx.momentum(&v)
    };
    let zero = along(0.0)?;
    let one = along(1.0)?;
    let two = along(2.0)?;
    let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(vec![
        NamedVector { name: "phi_0".into(), psi: WaveVector::plane_wave(zero) },
        NamedVector { name: "phi_1".into(), psi: WaveVector::plane_wave(one) },
        NamedVector { name: "phi_0+phi_2".into(), psi: WaveVector::from_pairs([(zero, c), (two, c)]) },
    ])
}
