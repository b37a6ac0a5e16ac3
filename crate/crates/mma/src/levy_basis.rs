//! Lévy bases described by generating quadruples: Lévy-measure and
//! mixing-measure families with exact tail functionals and samplers, and
//! evaluation of the characteristic triplet of the integrated process.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::conditions;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quad::{adaptive_quad_split, QuadResult};
use crate::simulate::{CloudPoint, PoissonCloud};

/// A direction atom of a discrete spectral measure on the unit sphere.
#[derive(Debug, Clone)]
pub struct SpectralAtom {
    pub theta: DVector<f64>,
    pub p: f64,
}

/// Lévy measure families with closed-form tail functionals.
#[derive(Debug, Clone)]
pub enum LevyMeasureSpec {
    /// Finite collection of atoms (x_i, w_i) with rates w_i > 0, ||x_i|| > 0.
    FiniteDiscrete { atoms: Vec<(DVector<f64>, f64)> },
    /// nu(||x|| > r, direction in S) = c r^{-alpha} spectral(S) for r >= r_min.
    ParetoRadial {
        alpha: f64,
        c: f64,
        r_min: f64,
        spectral: Vec<SpectralAtom>,
    },
    /// nu(dr, dtheta) = sigma^alpha alpha r^{-alpha-1} dr spectral(dtheta).
    AlphaStableRadial {
        alpha: f64,
        sigma: f64,
        spectral: Vec<SpectralAtom>,
    },
}

/// One "ray" of a Lévy measure: either a point atom or a radial power law
/// along a fixed direction. Everything downstream integrates ray by ray.
pub enum Ray<'a> {
    Atom { x: &'a DVector<f64>, w: f64 },
    Power {
        c: f64,
        alpha: f64,
        r_min: f64,
        theta: &'a DVector<f64>,
    },
}

/// Integral of r^{-alpha} over [lo, hi] (both > 0).
fn power_int(alpha: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if (alpha - 1.0).abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(1.0 - alpha) - lo.powf(1.0 - alpha)) / (1.0 - alpha)
    }
}

/// Integral of r^{1-alpha} over [lo, hi] with lo >= 0.
fn power_int1(alpha: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if (alpha - 2.0).abs() < 1e-12 {
        (hi / lo.max(f64::MIN_POSITIVE)).ln()
    } else {
        (hi.powf(2.0 - alpha) - lo.powf(2.0 - alpha)) / (2.0 - alpha)
    }
}

impl LevyMeasureSpec {
    pub fn dim(&self) -> usize {
        match self {
            LevyMeasureSpec::FiniteDiscrete { atoms } => atoms[0].0.len(),
            LevyMeasureSpec::ParetoRadial { spectral, .. }
            | LevyMeasureSpec::AlphaStableRadial { spectral, .. } => spectral[0].theta.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LevyMeasureSpec::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Config("finite_discrete: no atoms".into()));
                }
                for (x, w) in atoms {
                    if x.norm() <= 0.0 {
                        return Err(Error::Config("nu must have no atom at the origin".into()));
                    }
                    if *w <= 0.0 {
                        return Err(Error::Config("atom rates must be positive".into()));
                    }
                }
            }
            LevyMeasureSpec::ParetoRadial {
                alpha,
                c,
                r_min,
                spectral,
            } => {
                if *alpha <= 0.0 || *c <= 0.0 || *r_min < 0.0 {
                    return Err(Error::Config("pareto_radial: need alpha>0, c>0, r_min>=0".into()));
                }
                if *r_min == 0.0 && *alpha >= 2.0 {
                    return Err(Error::Config(
                        "pareto_radial with r_min=0 needs alpha<2 for square integrability".into(),
                    ));
                }
                validate_spectral(spectral)?;
            }
            LevyMeasureSpec::AlphaStableRadial {
                alpha,
                sigma,
                spectral,
            } => {
                if *alpha <= 0.0 || *alpha >= 2.0 || *sigma <= 0.0 {
                    return Err(Error::Config(
                        "alpha_stable_radial: need alpha in (0,2), sigma>0".into(),
                    ));
                }
                validate_spectral(spectral)?;
            }
        }
        Ok(())
    }

    pub fn rays(&self) -> Vec<Ray<'_>> {
        match self {
            LevyMeasureSpec::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|(x, w)| Ray::Atom { x, w: *w })
                .collect(),
            LevyMeasureSpec::ParetoRadial {
                alpha,
                c,
                r_min,
                spectral,
            } => spectral
                .iter()
                .map(|s| Ray::Power {
                    c: c * s.p,
                    alpha: *alpha,
                    r_min: *r_min,
                    theta: &s.theta,
                })
                .collect(),
            LevyMeasureSpec::AlphaStableRadial {
                alpha,
                sigma,
                spectral,
            } => spectral
                .iter()
                .map(|s| Ray::Power {
                    c: sigma.powf(*alpha) * s.p,
                    alpha: *alpha,
                    r_min: 0.0,
                    theta: &s.theta,
                })
                .collect(),
        }
    }

    /// Tail index of the measure, when it is regularly varying by family.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            LevyMeasureSpec::FiniteDiscrete { .. } => None,
            LevyMeasureSpec::ParetoRadial { alpha, .. }
            | LevyMeasureSpec::AlphaStableRadial { alpha, .. } => Some(*alpha),
        }
    }

    /// nu({||x|| > r}), exact.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("tail_mass needs r > 0, got {r}")));
        }
        let mut total = 0.0;
        for ray in self.rays() {
            total += match ray {
                Ray::Atom { x, w } => {
                    if x.norm() > r {
                        w
                    } else {
                        0.0
                    }
                }
                Ray::Power { c, alpha, r_min, .. } => c * r.max(r_min).powf(-alpha),
            };
        }
        Ok(total)
    }

    /// int (1 wedge ||x||^2) nu(dx), required finite for every family.
    pub fn one_wedge_sq(&self) -> f64 {
        self.rays()
            .iter()
            .map(|ray| match ray {
                Ray::Atom { x, w } => w * x.norm_squared().min(1.0),
                Ray::Power { c, alpha, r_min, .. } => power_e3(*c, *alpha, *r_min, 1.0),
            })
            .sum()
    }

    /// int_{||x|| <= 1} ||x|| nu(dx); `None` when infinite (infinite variation).
    pub fn small_abs_moment(&self) -> Option<f64> {
        let mut total = 0.0;
        for ray in self.rays() {
            match ray {
                Ray::Atom { x, w } => {
                    let n = x.norm();
                    if n <= 1.0 {
                        total += w * n;
                    }
                }
                Ray::Power { c, alpha, r_min, .. } => {
                    if r_min >= 1.0 {
                        continue;
                    }
                    if r_min == 0.0 && alpha >= 1.0 {
                        return None;
                    }
                    total += alpha * c * power_int(alpha, r_min.max(f64::MIN_POSITIVE), 1.0);
                }
            }
        }
        Some(total)
    }

    /// int_{||x|| <= 1} x nu(dx); `None` when not absolutely convergent.
    pub fn small_mean(&self) -> Option<DVector<f64>> {
        self.small_abs_moment()?;
        let mut total = DVector::zeros(self.dim());
        for ray in self.rays() {
            match ray {
                Ray::Atom { x, w } => {
                    if x.norm() <= 1.0 {
                        total += x * w;
                    }
                }
                Ray::Power { c, alpha, r_min, theta } => {
                    if r_min >= 1.0 {
                        continue;
                    }
                    let m1 = alpha * c * power_int(alpha, r_min.max(f64::MIN_POSITIVE), 1.0);
                    total += theta * m1;
                }
            }
        }
        Some(total)
    }

    /// int_{||x|| > 1} x nu(dx); `None` when infinite (needs alpha > 1).
    pub fn big_mean(&self) -> Option<DVector<f64>> {
        let mut total = DVector::zeros(self.dim());
        for ray in self.rays() {
            match ray {
                Ray::Atom { x, w } => {
                    if x.norm() > 1.0 {
                        total += x * w;
                    }
                }
                Ray::Power { c, alpha, r_min, theta } => {
                    if alpha <= 1.0 {
                        return None;
                    }
                    let lo = r_min.max(1.0);
                    // alpha c int_lo^inf r^{-alpha} dr
                    let m1 = alpha * c * lo.powf(1.0 - alpha) / (alpha - 1.0);
                    total += theta * m1;
                }
            }
        }
        Some(total)
    }

    /// int_{||x|| > 1} ln ||x|| nu(dx), closed form.
    pub fn log_tail(&self) -> f64 {
        self.rays()
            .iter()
            .map(|ray| match ray {
                Ray::Atom { x, w } => {
                    let n = x.norm();
                    if n > 1.0 {
                        w * n.ln()
                    } else {
                        0.0
                    }
                }
                Ray::Power { c, alpha, r_min, .. } => {
                    let lo = r_min.max(1.0);
                    c * lo.powf(-alpha) * (lo.ln() + 1.0 / alpha)
                }
            })
            .sum()
    }

    /// True when the measure is invariant under x -> -x (atoms and spectral
    /// directions pair up with matching weights).
    pub fn is_symmetric(&self) -> bool {
        let paired = |items: Vec<(DVector<f64>, f64)>| -> bool {
            items.iter().all(|(v, w)| {
                items
                    .iter()
                    .any(|(u, q)| (u + v).norm() < 1e-12 && (q - w).abs() < 1e-12)
            })
        };
        match self {
            LevyMeasureSpec::FiniteDiscrete { atoms } => paired(atoms.clone()),
            LevyMeasureSpec::ParetoRadial { spectral, .. }
            | LevyMeasureSpec::AlphaStableRadial { spectral, .. } => paired(
                spectral
                    .iter()
                    .map(|s| (s.theta.clone(), s.p))
                    .collect(),
            ),
        }
    }

    /// Mean of ||x|| under nu restricted to {||x|| > eps}, normalized.
    /// Used only for burn-in bookkeeping; `None` when infinite.
    pub fn mean_norm_above(&self, eps: f64) -> Option<f64> {
        let mass = self.tail_mass(eps).ok()?;
        if mass == 0.0 {
            return Some(0.0);
        }
        let mut total = 0.0;
        for ray in self.rays() {
            match ray {
                Ray::Atom { x, w } => {
                    let n = x.norm();
                    if n > eps {
                        total += w * n;
                    }
                }
                Ray::Power { c, alpha, r_min, .. } => {
                    if alpha <= 1.0 {
                        return None;
                    }
                    let lo = r_min.max(eps);
                    total += alpha * c * lo.powf(1.0 - alpha) / (alpha - 1.0);
                }
            }
        }
        Some(total / mass)
    }
}

fn validate_spectral(spectral: &[SpectralAtom]) -> Result<()> {
    if spectral.is_empty() {
        return Err(Error::Config("spectral measure needs at least one atom".into()));
    }
    let mut psum = 0.0;
    for s in spectral {
        if (s.theta.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("spectral atoms must be unit vectors".into()));
        }
        if s.p <= 0.0 {
            return Err(Error::Config("spectral probabilities must be positive".into()));
        }
        psum += s.p;
    }
    if (psum - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "spectral probabilities sum to {psum}, expected 1"
        )));
    }
    Ok(())
}

/// int_{r_min}^{inf} (1 wedge (r m)^2) alpha c r^{-alpha-1} dr for one power ray.
pub fn power_e3(c: f64, alpha: f64, r_min: f64, m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let r_star = (1.0 / m).max(r_min);
    m * m * alpha * c * power_int1(alpha, r_min, r_star) + c * r_star.powf(-alpha)
}

/// int_{max(1, r_min)}^{inf} (1 wedge r m) alpha c r^{-alpha-1} dr for one power ray.
pub fn power_xt2(c: f64, alpha: f64, r_min: f64, m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let lo = r_min.max(1.0);
    let r_star = (1.0 / m).max(lo);
    m * alpha * c * power_int(alpha, lo, r_star) + c * r_star.powf(-alpha)
}

/// int r (1{r m <= 1} - 1{r <= 1}) alpha c r^{-alpha-1} dr over [r_min, inf),
/// the scalar compensator coefficient along a power ray with m = ||f theta||.
pub fn power_compensator(c: f64, alpha: f64, r_min: f64, m: f64) -> f64 {
    if m <= 0.0 {
        // 1{0 <= 1} - 1{r <= 1} supported on r > 1 with value 0 - ... = 1 - 1{r<=1}
        // i.e. +1 on r > 1; integral alpha c int_{max(1,r_min)}^inf r^{-alpha} dr,
        // finite only for alpha > 1
        if alpha <= 1.0 {
            return f64::INFINITY;
        }
        let lo = r_min.max(1.0);
        return alpha * c * lo.powf(1.0 - alpha) / (alpha - 1.0);
    }
    if (m - 1.0).abs() == 0.0 {
        return 0.0;
    }
    let (lo, hi, sign) = if m < 1.0 {
        // r m <= 1 but r > 1 on (1, 1/m]
        (1.0f64, 1.0 / m, 1.0)
    } else {
        // r m > 1 but r <= 1 on (1/m, 1]
        (1.0 / m, 1.0f64, -1.0)
    };
    let lo = lo.max(r_min);
    if hi <= lo {
        return 0.0;
    }
    sign * alpha * c * power_int(alpha, lo, hi)
}

// ---------------------------------------------------------------------------
// Mixing measures
// ---------------------------------------------------------------------------

/// Positive scalar distributions for the `ScalarFamily` mixing measure.
#[derive(Debug, Clone)]
pub enum ScalarDist {
    Gamma { shape: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Fixed { value: f64 },
}

impl ScalarDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarDist::Gamma { shape, rate } if *shape > 0.0 && *rate > 0.0 => Ok(()),
            ScalarDist::Uniform { lo, hi } if *lo > 0.0 && hi > lo => Ok(()),
            ScalarDist::Fixed { value } if *value > 0.0 => Ok(()),
            _ => Err(Error::Config("invalid scalar mixing distribution".into())),
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self {
            ScalarDist::Gamma { shape, rate } => {
                let ln = shape * rate.ln() + (shape - 1.0) * r.ln() - rate * r - ln_gamma(*shape);
                ln.exp()
            }
            ScalarDist::Uniform { lo, hi } => {
                if r >= *lo && r <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            ScalarDist::Fixed { .. } => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ScalarDist::Gamma { shape, rate } => {
                let g = rand_distr::Gamma::new(*shape, 1.0 / *rate).unwrap();
                g.sample(rng)
            }
            ScalarDist::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            ScalarDist::Fixed { value } => *value,
        }
    }

    /// Upper integration cutoff with density tail below ~1e-16.
    pub fn upper_cutoff(&self) -> f64 {
        match self {
            ScalarDist::Gamma { shape, rate } => {
                let mut hi = (shape / rate).max(1.0);
                while rate * hi - (shape - 1.0) * hi.max(1e-300).ln() < 60.0 {
                    hi *= 2.0;
                }
                hi
            }
            ScalarDist::Uniform { hi, .. } => *hi,
            ScalarDist::Fixed { value } => *value,
        }
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// A single mean-reversion matrix together with its exponential envelope.
#[derive(Debug, Clone)]
pub struct MixingAtom {
    pub matrix: DMatrix<f64>,
    /// Set when the atom is -R I_d for a scalar R.
    pub scalar_rate: Option<f64>,
    /// Declared (kappa, rho) with ||e^{As}|| <= kappa e^{-rho s}.
    pub kappa_rho: Option<(f64, f64)>,
}

impl MixingAtom {
    pub fn from_scalar(rate: f64, dim: usize) -> Self {
        MixingAtom {
            matrix: DMatrix::identity(dim, dim) * (-rate),
            scalar_rate: Some(rate),
            kappa_rho: Some((1.0, rate)),
        }
    }

    pub fn from_matrix(matrix: DMatrix<f64>, kappa_rho: Option<(f64, f64)>) -> Self {
        let scalar_rate = scalar_rate_of(&matrix);
        let kappa_rho = kappa_rho.or_else(|| {
            if let Some(r) = scalar_rate {
                Some((1.0, r))
            } else if is_symmetric(&matrix) {
                let lmax = matrix
                    .clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                (lmax < 0.0).then_some((1.0, -lmax))
            } else {
                None
            }
        });
        MixingAtom {
            matrix,
            scalar_rate,
            kappa_rho,
        }
    }

    /// (kappa, rho) envelope, when known.
    pub fn envelope(&self) -> Option<(f64, f64)> {
        self.kappa_rho
    }

    pub fn is_stable(&self) -> bool {
        self.matrix
            .complex_eigenvalues()
            .iter()
            .all(|ev| ev.re < 0.0)
    }
}

fn scalar_rate_of(m: &DMatrix<f64>) -> Option<f64> {
    let d = m.nrows();
    let r = -m[(0, 0)];
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { -r } else { 0.0 };
            if (m[(i, j)] - want).abs() > 1e-14 {
                return None;
            }
        }
    }
    (r > 0.0).then_some(r)
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm())
}

/// Mixing measure pi on the set of matrices with stable eigenvalues.
#[derive(Debug, Clone)]
pub enum MixingMeasureSpec {
    FiniteDiscrete { atoms: Vec<MixingAtom>, probs: Vec<f64> },
    /// A = -R I_d with R drawn from a positive scalar distribution.
    ScalarFamily { dist: ScalarDist, dim: usize },
}

impl MixingMeasureSpec {
    pub fn dirac(atom: MixingAtom) -> Self {
        MixingMeasureSpec::FiniteDiscrete {
            atoms: vec![atom],
            probs: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MixingMeasureSpec::FiniteDiscrete { atoms, .. } => atoms[0].matrix.nrows(),
            MixingMeasureSpec::ScalarFamily { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MixingMeasureSpec::FiniteDiscrete { atoms, probs } => {
                if atoms.is_empty() || atoms.len() != probs.len() {
                    return Err(Error::Config("mixing atoms/probs mismatch".into()));
                }
                let psum: f64 = probs.iter().sum();
                if (psum - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "mixing probabilities sum to {psum}, expected 1"
                    )));
                }
                for a in atoms {
                    if !a.is_stable() {
                        return Err(Error::Config(
                            "mixing atom has an eigenvalue with nonnegative real part".into(),
                        ));
                    }
                }
                Ok(())
            }
            MixingMeasureSpec::ScalarFamily { dist, dim } => {
                if *dim == 0 {
                    return Err(Error::Config("scalar mixing family needs dim >= 1".into()));
                }
                dist.validate()
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> MixingAtom {
        match self {
            MixingMeasureSpec::FiniteDiscrete { atoms, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (a, p) in atoms.iter().zip(probs) {
                    acc += p;
                    if u <= acc {
                        return a.clone();
                    }
                }
                atoms.last().unwrap().clone()
            }
            MixingMeasureSpec::ScalarFamily { dist, dim } => {
                MixingAtom::from_scalar(dist.sample(rng), *dim)
            }
        }
    }

    /// Integrates `f(A)` against pi. `lower_trunc` cuts the scalar family
    /// below (used by divergence ladders); discrete atoms are unaffected.
    pub fn integrate(
        &self,
        mut f: impl FnMut(&MixingAtom) -> f64,
        lower_trunc: f64,
        tol: f64,
    ) -> QuadResult {
        match self {
            MixingMeasureSpec::FiniteDiscrete { atoms, probs } => {
                let value = atoms
                    .iter()
                    .zip(probs)
                    .map(|(a, p)| p * f(a))
                    .sum();
                QuadResult {
                    value,
                    error_bound: 0.0,
                }
            }
            MixingMeasureSpec::ScalarFamily { dist, dim } => match dist {
                ScalarDist::Fixed { value } => QuadResult {
                    value: f(&MixingAtom::from_scalar(*value, *dim)),
                    error_bound: 0.0,
                },
                _ => {
                    let lo = match dist {
                        ScalarDist::Uniform { lo, .. } => lo.max(lower_trunc),
                        _ => lower_trunc,
                    };
                    let hi = dist.upper_cutoff();
                    // geometric split points tame integrands that blow up
                    // polynomially toward the truncation point
                    let mut splits = vec![1.0];
                    let mut s = 2.0 * lo.max(1e-300);
                    while s < 1.0 {
                        splits.push(s);
                        s *= 2.0;
                    }
                    let mut s = 2.0f64;
                    while s < hi {
                        splits.push(s);
                        s *= 2.0;
                    }
                    adaptive_quad_split(
                        |r| dist.density(r) * f(&MixingAtom::from_scalar(r, *dim)),
                        lo,
                        hi,
                        &splits,
                        tol,
                    )
                }
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Generating quadruple and the integrated triplet
// ---------------------------------------------------------------------------

/// The generating quadruple (gamma, Sigma, nu, pi) of a Lévy basis.
#[derive(Debug, Clone)]
pub struct GeneratingQuadruple {
    pub gamma: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub nu: LevyMeasureSpec,
    pub pi: MixingMeasureSpec,
}

impl GeneratingQuadruple {
    pub fn validate(&self) -> Result<()> {
        self.nu.validate()?;
        self.pi.validate()?;
        let d = self.nu.dim();
        if self.gamma.len() != d || self.sigma.nrows() != d || self.sigma.ncols() != d {
            return Err(Error::Config("quadruple dimension mismatch".into()));
        }
        if self.pi.dim() != d {
            return Err(Error::Config("mixing dimension does not match nu".into()));
        }
        if (&self.sigma - self.sigma.transpose()).norm() > 1e-12 * (1.0 + self.sigma.norm()) {
            return Err(Error::Config("Sigma must be symmetric".into()));
        }
        let evs = self.sigma.clone().symmetric_eigenvalues();
        if evs.iter().any(|&e| e < -1e-12) {
            return Err(Error::Config("Sigma must be positive semidefinite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.nu.dim()
    }

    /// gamma_0 = gamma - int_{||x|| <= 1} x nu(dx), defined when the
    /// small-jump first moment is finite.
    pub fn gamma_0(&self) -> Result<DVector<f64>> {
        let sm = self.nu.small_mean().ok_or_else(|| {
            Error::NotApplicable("gamma_0 requires finite small-jump first moment".into())
        })?;
        Ok(&self.gamma - sm)
    }

    /// True when the underlying Lévy process has finite variation
    /// (Sigma = 0 and small jumps absolutely summable).
    pub fn finite_variation(&self) -> bool {
        self.sigma.norm() == 0.0 && self.nu.small_abs_moment().is_some()
    }

    /// Mean of L_1 = gamma + int_{||x||>1} x nu(dx); `None` when infinite.
    pub fn levy_mean(&self) -> Option<DVector<f64>> {
        Some(&self.gamma + self.nu.big_mean()?)
    }
}

/// Borel query sets supported by the integrated Lévy measure evaluator.
#[derive(Debug, Clone)]
pub enum BorelQuery {
    /// { ||x|| > r }
    RadiusAbove(f64),
    /// Half-open hyper-rectangle: lo_i < x_i <= hi_i for every coordinate.
    Rectangle { lo: Vec<f64>, hi: Vec<f64> },
}

impl BorelQuery {
    fn dim_ok(&self, n: usize) -> bool {
        match self {
            BorelQuery::RadiusAbove(_) => true,
            BorelQuery::Rectangle { lo, hi } => lo.len() == n && hi.len() == n,
        }
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        match self {
            BorelQuery::RadiusAbove(r) => v.norm() > *r,
            BorelQuery::Rectangle { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| *x > *l && *x <= *h),
        }
    }

    /// For a fixed direction vector `v`, the interval of radii r >= 0 with
    /// r v inside the set; `None` when empty.
    pub(crate) fn radial_section(&self, v: &DVector<f64>) -> Option<(f64, f64)> {
        match self {
            BorelQuery::RadiusAbove(r) => {
                let m = v.norm();
                (m > 0.0).then(|| (r / m, f64::INFINITY))
            }
            BorelQuery::Rectangle { lo, hi } => {
                let mut a = 0.0f64;
                let mut b = f64::INFINITY;
                for i in 0..v.len() {
                    let (l, h, vi) = (lo[i], hi[i], v[i]);
                    if vi == 0.0 {
                        // coordinate fixed at 0: need l < 0 <= h
                        if !(l < 0.0 && 0.0 <= h) {
                            return None;
                        }
                    } else if vi > 0.0 {
                        a = a.max(l / vi);
                        b = b.min(h / vi);
                    } else {
                        a = a.max(h / vi);
                        b = b.min(l / vi);
                    }
                    if b <= a {
                        return None;
                    }
                }
                Some((a, b))
            }
        }
    }
}

/// Quadrature settings for triplet evaluation.
#[derive(Debug, Clone)]
pub struct TripletSettings {
    pub tol: f64,
    /// Scan resolution for atom-ray indicator sets in s.
    pub n_scan: usize,
}

impl Default for TripletSettings {
    fn default() -> Self {
        TripletSettings {
            tol: 1e-10,
            n_scan: 4096,
        }
    }
}

/// Characteristic triplet of the stationary marginal, with a queryable
/// integrated Lévy measure.
pub struct TripletInt {
    pub gamma_int: DVector<f64>,
    pub gamma_err: f64,
    pub sigma_int: DMatrix<f64>,
    pub sigma_err: f64,
    /// Declared s-domain truncation bound carried into every evaluation.
    pub truncation_bound: f64,
    nu: LevyMeasureSpec,
    pi: MixingMeasureSpec,
    kernel: Kernel,
    settings: TripletSettings,
}

impl TripletInt {
    /// nu_int(B) with an error bound.
    pub fn nu_int(&self, query: &BorelQuery) -> Result<(f64, f64)> {
        let (n, _) = self.kernel.dims();
        if !query.dim_ok(n) {
            return Err(Error::Domain("query dimension mismatch".into()));
        }
        if let BorelQuery::RadiusAbove(r) = query {
            if *r <= 0.0 {
                return Err(Error::Domain("radial query needs r > 0".into()));
            }
        }
        let tol = self.settings.tol;
        let res = self.pi.integrate(
            |atom| {
                let (s_lo, s_hi) = self.kernel.s_support(atom, 1e-16);
                let mut total = 0.0;
                for ray in self.nu.rays() {
                    match ray {
                        Ray::Atom { x, w } => {
                            total += w
                                * crate::quad::indicator_measure(
                                    |s| query.contains(&(self.kernel.eval(&atom.matrix, s) * x)),
                                    s_lo,
                                    s_hi,
                                    self.settings.n_scan,
                                );
                        }
                        Ray::Power { c, alpha, r_min, theta } => {
                            let q = adaptive_quad_split(
                                |s| {
                                    let v = self.kernel.eval(&atom.matrix, s) * theta;
                                    match query.radial_section(&v) {
                                        None => 0.0,
                                        Some((a, b)) => {
                                            let lo = a.max(r_min);
                                            let hi = b.max(r_min);
                                            if hi <= lo {
                                                0.0
                                            } else {
                                                c * (lo.powf(-alpha)
                                                    - if hi.is_finite() {
                                                        hi.powf(-alpha)
                                                    } else {
                                                        0.0
                                                    })
                                            }
                                        }
                                    }
                                },
                                s_lo,
                                s_hi,
                                &[0.0],
                                tol,
                            );
                            total += q.value;
                        }
                    }
                }
                total
            },
            0.0,
            tol,
        );
        Ok((res.value, res.error_bound + tol + self.truncation_bound))
    }
}

/// Evaluation of the characteristic triplet (gamma_int, Sigma_int, nu_int) of the
/// stationary marginal of the MMA process. Fails with the offending
/// condition ids when the existence conditions do not hold.
pub fn compute_triplet(
    quad: &GeneratingQuadruple,
    kernel: &Kernel,
    settings: &TripletSettings,
) -> Result<TripletInt> {
    quad.validate()?;
    let reports = conditions::check_existence(quad, kernel)?;
    let failing: Vec<String> = reports
        .iter()
        .filter(|r| !matches!(r.verdict, conditions::Verdict::Pass))
        .map(|r| r.id.to_string())
        .collect();
    if !failing.is_empty() {
        return Err(Error::Precondition { ids: failing });
    }

    let (n, d) = kernel.dims();
    let tol = settings.tol;
    let mut gamma_int = DVector::zeros(n);
    let mut gamma_err = 0.0;
    // component-wise s-quadrature, split where indicator levels cross
    for comp in 0..n {
        let q = quad.pi.integrate(
            |atom| {
                let (s_lo, s_hi) = kernel.s_support(atom, 1e-16);
                let splits = gamma_splits(quad, kernel, atom, s_lo, s_hi);
                adaptive_quad_split(
                    |s| gamma_integrand(quad, kernel, atom, s)[comp],
                    s_lo,
                    s_hi,
                    &splits,
                    tol,
                )
                .value
            },
            0.0,
            tol,
        );
        gamma_int[comp] = q.value;
        gamma_err += q.error_bound + tol;
    }

    let mut sigma_int = DMatrix::zeros(n, n);
    let mut sigma_err = 0.0;
    if quad.sigma.norm() > 0.0 {
        for i in 0..n {
            for j in i..n {
                let q = quad.pi.integrate(
                    |atom| {
                        let (s_lo, s_hi) = kernel.s_support(atom, 1e-16);
                        adaptive_quad_split(
                            |s| {
                                let f = kernel.eval(&atom.matrix, s);
                                (&f * &quad.sigma * f.transpose())[(i, j)]
                            },
                            s_lo,
                            s_hi,
                            &[0.0],
                            tol,
                        )
                        .value
                    },
                    0.0,
                    tol,
                );
                sigma_int[(i, j)] = q.value;
                sigma_int[(j, i)] = q.value;
                sigma_err += q.error_bound + tol;
            }
        }
    }
    let _ = d;

    Ok(TripletInt {
        gamma_int,
        gamma_err,
        sigma_int,
        sigma_err,
        truncation_bound: kernel.truncation_bound(&quad.pi, 1e-16),
        nu: quad.nu.clone(),
        pi: quad.pi.clone(),
        kernel: kernel.clone(),
        settings: settings.clone(),
    })
}

/// Integrand of Eq-style drift component: f gamma + compensator correction.
pub(crate) fn gamma_integrand(
    quad: &GeneratingQuadruple,
    kernel: &Kernel,
    atom: &MixingAtom,
    s: f64,
) -> DVector<f64> {
    let f = kernel.eval(&atom.matrix, s);
    let mut v = &f * &quad.gamma;
    for ray in quad.nu.rays() {
        match ray {
            Ray::Atom { x, w } => {
                let fx = &f * x;
                let ind = (fx.norm() <= 1.0) as i32 - (x.norm() <= 1.0) as i32;
                if ind != 0 {
                    v += fx * (w * ind as f64);
                }
            }
            Ray::Power { c, alpha, r_min, theta } => {
                let ftheta = &f * theta;
                let coeff = power_compensator(c, alpha, r_min, ftheta.norm());
                v += ftheta * coeff;
            }
        }
    }
    v
}

/// s-values where an indicator level ||f(A,s)x|| = 1 crosses; quadrature
/// splits so the kinks do not degrade convergence.
pub(crate) fn gamma_splits(
    quad: &GeneratingQuadruple,
    kernel: &Kernel,
    atom: &MixingAtom,
    s_lo: f64,
    s_hi: f64,
) -> Vec<f64> {
    let mut splits = vec![0.0];
    let mut add_crossings = |g: &dyn Fn(f64) -> f64| {
        let n = 512;
        let h = (s_hi - s_lo) / n as f64;
        let mut prev = g(s_lo) - 1.0;
        for i in 1..=n {
            let x = s_lo + i as f64 * h;
            let cur = g(x) - 1.0;
            if prev.signum() != cur.signum() {
                let mut lo = x - h;
                let mut hi = x;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (g(mid) - 1.0).signum() == prev.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                splits.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
    };
    for ray in quad.nu.rays() {
        match ray {
            Ray::Atom { x, .. } => {
                let xv = x.clone();
                let k = kernel.clone();
                let m = atom.matrix.clone();
                add_crossings(&move |s| (k.eval(&m, s) * &xv).norm());
            }
            Ray::Power { theta, .. } => {
                let tv = theta.clone();
                let k = kernel.clone();
                let m = atom.matrix.clone();
                add_crossings(&move |s| (k.eval(&m, s) * &tv).norm());
            }
        }
    }
    splits
}

// ---------------------------------------------------------------------------
// Poisson sampling of the jump measure
// ---------------------------------------------------------------------------

/// Draws the finite Poisson cloud of jumps above `eps` on `window`,
/// with intensity nu x pi x Lebesgue.
pub fn sample_jumps(
    nu: &LevyMeasureSpec,
    pi: &MixingMeasureSpec,
    window: (f64, f64),
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PoissonCloud> {
    let (a, b) = window;
    if b < a {
        return Err(Error::Domain("window must have b >= a".into()));
    }
    if eps <= 0.0 {
        return Err(Error::Domain("truncation level eps must be positive".into()));
    }
    let mass = nu.tail_mass(eps)?;
    if !mass.is_finite() {
        return Err(Error::Domain("infinite jump intensity at this eps".into()));
    }
    let mean = mass * (b - a);
    let mut points = Vec::new();
    if mean > 0.0 {
        let k = rand_distr::Poisson::new(mean)
            .map_err(|e| Error::Domain(format!("poisson: {e}")))?
            .sample(rng) as usize;
        points.reserve(k);
        for _ in 0..k {
            let time = rng.gen_range(a..=b);
            let a_mark = pi.sample(rng);
            let x = sample_jump_size(nu, eps, mass, rng);
            points.push(CloudPoint { x, a: a_mark, time });
        }
        points.sort_by(|p, q| p.time.partial_cmp(&q.time).unwrap());
    }
    Ok(PoissonCloud {
        points,
        window,
        eps,
    })
}

fn sample_jump_size(nu: &LevyMeasureSpec, eps: f64, mass: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let rays = nu.rays();
    let mut u: f64 = rng.gen::<f64>() * mass;
    for ray in &rays {
        let w = match ray {
            Ray::Atom { x, w } => {
                if x.norm() > eps {
                    *w
                } else {
                    0.0
                }
            }
            Ray::Power { c, alpha, r_min, .. } => c * eps.max(*r_min).powf(-alpha),
        };
        if u <= w && w > 0.0 {
            return match ray {
                Ray::Atom { x, .. } => (*x).clone(),
                Ray::Power { alpha, r_min, theta, .. } => {
                    let r_eff = eps.max(*r_min);
                    let v: f64 = rng.gen::<f64>();
                    let r = r_eff * v.powf(-1.0 / alpha);
                    *theta * r
                }
            };
        }
        u -= w;
    }
    // numerical leftover: fall back to the last ray
    match rays.last().unwrap() {
        Ray::Atom { x, .. } => (*x).clone(),
        Ray::Power { alpha, r_min, theta, .. } => {
            let r_eff = eps.max(*r_min);
            let v: f64 = rng.gen::<f64>();
            *theta * (r_eff * v.powf(-1.0 / alpha))
        }
    }
}

/// Public alias kept close to the operation names used elsewhere.
pub fn tail_mass(nu: &LevyMeasureSpec, r: f64) -> Result<f64> {
    nu.tail_mass(r)
}
