//! Experiment configuration: schema-validated TOML mapped onto the domain
//! types. Unknown keys are rejected so config drift fails loudly.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::levy_basis::{
    GeneratingQuadruple, LevyMeasureSpec, MixingAtom, MixingMeasureSpec, ScalarDist, SpectralAtom,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Tail index driving the regular-variation checks and scalings.
    pub alpha: f64,
    pub quadruple: QuadrupleConfig,
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub ensemble: EnsembleConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub pointprocess: PointProcessConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrupleConfig {
    pub gamma: Vec<f64>,
    /// row-major
    pub sigma: Vec<Vec<f64>>,
    pub nu: NuConfig,
    pub pi: PiConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuAtomConfig {
    pub x: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub theta: Vec<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NuConfig {
    FiniteDiscrete {
        atoms: Vec<NuAtomConfig>,
    },
    ParetoRadial {
        alpha: f64,
        c: f64,
        #[serde(default)]
        r_min: f64,
        spectral: Vec<SpectralConfig>,
    },
    AlphaStableRadial {
        alpha: f64,
        sigma: f64,
        spectral: Vec<SpectralConfig>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiAtomConfig {
    /// row-major
    pub matrix: Vec<Vec<f64>>,
    pub p: f64,
    pub kappa: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistConfig {
    Gamma { shape: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PiConfig {
    FiniteDiscrete { atoms: Vec<PiAtomConfig> },
    ScalarFamily { dim: usize, dist: DistConfig },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Supou {},
    TwoSidedSupou {},
    IndicatorTest { lo: f64, hi: f64 },
    ExpPoly { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub step: Option<f64>,
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// 0 selects the burn-in automatically from the envelope decay
    #[serde(default)]
    pub s_max: f64,
}

fn default_eps() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_format")]
    pub format: PathFormat,
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFormat {
    Tsv,
    Bin,
}

fn default_format() -> PathFormat {
    PathFormat::Tsv
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    /// 0 selects ceil(n^{2/3})
    #[serde(default)]
    pub hill_k: usize,
    /// harvest threshold; 0 selects the 95% sup-norm quantile
    #[serde(default)]
    pub u: f64,
    #[serde(default = "default_radial_rs")]
    pub radial_rs: Vec<f64>,
    #[serde(default = "default_relcomp_eps")]
    pub relcomp_eps: f64,
    #[serde(default = "default_relcomp_deltas")]
    pub relcomp_deltas: Vec<f64>,
}

fn default_radial_rs() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_relcomp_eps() -> f64 {
    0.5
}
fn default_relcomp_deltas() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            hill_k: 0,
            u: 0.0,
            radial_rs: default_radial_rs(),
            relcomp_eps: default_relcomp_eps(),
            relcomp_deltas: default_relcomp_deltas(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointProcessConfig {
    #[serde(default = "default_pp_u")]
    pub u: f64,
    #[serde(default = "default_shells")]
    pub shells: Vec<(f64, f64)>,
}

fn default_pp_u() -> f64 {
    1.0
}
fn default_shells() -> Vec<(f64, f64)> {
    vec![(1.0, 2.0), (2.0, 4.0)]
}

impl Default for PointProcessConfig {
    fn default() -> Self {
        PointProcessConfig {
            u: default_pp_u(),
            shells: default_shells(),
        }
    }
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != rows[0].len()) {
        return Err(Error::Config(format!("{what}: ragged or empty matrix")));
    }
    let c = rows[0].len();
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_spectral(cfg: &[SpectralConfig]) -> Vec<SpectralAtom> {
    cfg.iter()
        .map(|s| SpectralAtom {
            theta: DVector::from_vec(s.theta.clone()),
            p: s.p,
        })
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        let (quad, kernel) = self.to_domain()?;
        quad.validate()?;
        kernel.validate()?;
        self.grid_times()?;
        if self.ensemble.eps <= 0.0 {
            return Err(Error::Config("ensemble.eps must be positive".into()));
        }
        crate::pointproc::validate_shells(&self.pointprocess.shells)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.estimate.relcomp_eps <= 0.0 {
            return Err(Error::Config("estimate.relcomp_eps must be positive".into()));
        }
        Ok(())
    }

    pub fn to_domain(&self) -> Result<(GeneratingQuadruple, Kernel)> {
        let nu = match &self.quadruple.nu {
            NuConfig::FiniteDiscrete { atoms } => LevyMeasureSpec::FiniteDiscrete {
                atoms: atoms
                    .iter()
                    .map(|a| (DVector::from_vec(a.x.clone()), a.w))
                    .collect(),
            },
            NuConfig::ParetoRadial {
                alpha,
                c,
                r_min,
                spectral,
            } => LevyMeasureSpec::ParetoRadial {
                alpha: *alpha,
                c: *c,
                r_min: *r_min,
                spectral: to_spectral(spectral),
            },
            NuConfig::AlphaStableRadial {
                alpha,
                sigma,
                spectral,
            } => LevyMeasureSpec::AlphaStableRadial {
                alpha: *alpha,
                sigma: *sigma,
                spectral: to_spectral(spectral),
            },
        };
        let pi = match &self.quadruple.pi {
            PiConfig::FiniteDiscrete { atoms } => {
                let mut ms = Vec::new();
                let mut probs = Vec::new();
                for a in atoms {
                    let m = to_matrix(&a.matrix, "pi atom")?;
                    let kr = match (a.kappa, a.rho) {
                        (Some(k), Some(r)) => Some((k, r)),
                        (None, None) => None,
                        _ => {
                            return Err(Error::Config(
                                "pi atom must declare kappa and rho together".into(),
                            ))
                        }
                    };
                    ms.push(MixingAtom::from_matrix(m, kr));
                    probs.push(a.p);
                }
                MixingMeasureSpec::FiniteDiscrete { atoms: ms, probs }
            }
            PiConfig::ScalarFamily { dim, dist } => MixingMeasureSpec::ScalarFamily {
                dim: *dim,
                dist: match dist {
                    DistConfig::Gamma { shape, rate } => ScalarDist::Gamma {
                        shape: *shape,
                        rate: *rate,
                    },
                    DistConfig::Uniform { lo, hi } => ScalarDist::Uniform { lo: *lo, hi: *hi },
                    DistConfig::Fixed { value } => ScalarDist::Fixed { value: *value },
                },
            },
        };
        let gamma = DVector::from_vec(self.quadruple.gamma.clone());
        let sigma = to_matrix(&self.quadruple.sigma, "sigma")?;
        let quad = GeneratingQuadruple {
            gamma,
            sigma,
            nu,
            pi,
        };
        let dim = quad.dim();
        let kernel = match &self.kernel {
            KernelConfig::Supou {} => Kernel::SupOu { dim },
            KernelConfig::TwoSidedSupou {} => Kernel::TwoSidedSupOu { dim },
            KernelConfig::IndicatorTest { lo, hi } => Kernel::IndicatorTest {
                dim,
                lo: *lo,
                hi: *hi,
            },
            KernelConfig::ExpPoly { coeffs } => Kernel::ExpPoly {
                dim,
                coeffs: coeffs.clone(),
            },
        };
        Ok((quad, kernel))
    }

    /// Resolved observation grid on [0, 1].
    pub fn grid_times(&self) -> Result<Vec<f64>> {
        match (&self.grid.step, &self.grid.times) {
            (Some(step), None) => {
                if !(*step > 0.0 && *step <= 1.0) {
                    return Err(Error::Config("grid.step must be in (0, 1]".into()));
                }
                let m = (1.0 / step).round() as usize;
                Ok((0..=m).map(|i| (i as f64 * step).min(1.0)).collect())
            }
            (None, Some(times)) => {
                if times.len() < 2
                    || !times.windows(2).all(|w| w[1] > w[0])
                    || times[0] < 0.0
                    || *times.last().unwrap() > 1.0
                {
                    return Err(Error::Config(
                        "grid.times must be strictly increasing inside [0, 1]".into(),
                    ));
                }
                Ok(times.clone())
            }
            _ => Err(Error::Config(
                "grid needs exactly one of `step` or `times`".into(),
            )),
        }
    }
}
