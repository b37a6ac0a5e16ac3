//! Empirical regular-variation toolkit: Hill tail-index estimation,
//! spectral samples of exceeding paths, the theoretical limit measure of
//! the stationary marginal, and relative-compactness rate diagnostics.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::levy_basis::{BorelQuery, GeneratingQuadruple, LevyMeasureSpec};
use crate::paths::{modulus_w, modulus_wpp, sup_norm, CadlagPath};
use crate::quad::adaptive_quad_split;

/// Hill estimate of the tail index.
#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    pub k: usize,
    pub n: usize,
    pub stderr: f64,
    /// the (k+1)-th largest sample
    pub threshold: f64,
}

/// Default order-statistic count: ceil(n^{2/3}).
pub fn default_hill_k(n: usize) -> usize {
    (n as f64).powf(2.0 / 3.0).ceil() as usize
}

/// Hill estimator over the top k order statistics.
pub fn hill(samples: &[f64], k: usize) -> Result<TailEstimate> {
    let n = samples.len();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("hill needs 0 < k < n, got k={k}, n={n}")));
    }
    let mut sorted: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > 0.0)
        .collect();
    if sorted.len() <= k {
        return Err(Error::Domain("not enough positive samples".into()));
    }
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let threshold = sorted[k];
    let mean_log: f64 = sorted[..k]
        .iter()
        .map(|x| (x / threshold).ln())
        .sum::<f64>()
        / k as f64;
    if mean_log <= 0.0 {
        return Err(Error::Domain("degenerate sample: top order statistics equal".into()));
    }
    let alpha_hat = 1.0 / mean_log;
    Ok(TailEstimate {
        alpha_hat,
        k,
        n,
        stderr: alpha_hat / (k as f64).sqrt(),
        threshold,
    })
}

/// A path exceeding the harvest threshold, rescaled to sup-norm one.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub normalized_path: CadlagPath,
    pub radius: f64,
    pub argmax_time: f64,
    pub direction_at_max: DVector<f64>,
}

/// Normalizes every path with sup-norm above `u` to the unit sphere of the
/// path space.
pub fn spectral_harvest(paths: &[CadlagPath], u: f64) -> Result<Vec<SpectralSample>> {
    if u <= 0.0 {
        return Err(Error::Domain("harvest threshold must be positive".into()));
    }
    let mut out = Vec::new();
    for p in paths {
        let (radius, argmax_time) = sup_norm(p);
        if radius <= u {
            continue;
        }
        let scale = 1.0 / radius;
        let normalized_path = CadlagPath {
            grid: p.grid.clone(),
            values: p.values.iter().map(|v| v * scale).collect(),
            jumps: p
                .jumps
                .iter()
                .map(|j| crate::paths::PathJump {
                    time: j.time,
                    left: &j.left * scale,
                    right: &j.right * scale,
                })
                .collect(),
        };
        // value attaining the sup: earliest event of maximal norm
        let direction_at_max = p
            .events()
            .into_iter()
            .find(|e| e.time == argmax_time && (e.value.norm() - radius).abs() <= 1e-12 * radius)
            .map(|e| e.value / radius)
            .unwrap_or_else(|| DVector::zeros(p.dim()));
        out.push(SpectralSample {
            normalized_path,
            radius,
            argmax_time,
            direction_at_max,
        });
    }
    Ok(out)
}

/// Set functionals of the limit measure supported by [`mu_x_query`].
#[derive(Debug, Clone)]
pub enum LimitFunctional {
    /// mu({path with marginal at time 0 of norm > r})
    Radial { r: f64 },
    /// finite-dimensional rectangle: at each time t_i the marginal lies in
    /// (lo_i, hi_i] coordinate-wise (stacked over times)
    MarginalRectangle {
        times: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

/// A filled limit-measure query.
#[derive(Debug, Clone)]
pub struct LimitMeasureQuery {
    pub functional: LimitFunctional,
    pub value: f64,
    pub error_bound: f64,
}

/// Normalized spectral rays of the driver tail: mu_nu(||x|| > r) = r^{-alpha}
/// with the direction weights of the family.
fn mu_nu_rays(nu: &LevyMeasureSpec, alpha: f64) -> Vec<(DVector<f64>, f64)> {
    match nu {
        LevyMeasureSpec::ParetoRadial { spectral, .. }
        | LevyMeasureSpec::AlphaStableRadial { spectral, .. } => spectral
            .iter()
            .map(|s| (s.theta.clone(), s.p))
            .collect(),
        // discrete drivers: tail directions declared by the atoms with
        // weights proportional to w ||x||^alpha
        LevyMeasureSpec::FiniteDiscrete { atoms } => {
            let total: f64 = atoms.iter().map(|(x, w)| w * x.norm().powf(alpha)).sum();
            atoms
                .iter()
                .map(|(x, w)| (x / x.norm(), w * x.norm().powf(alpha) / total))
                .collect()
        }
    }
}

/// Evaluates the theoretical limit measure of the stationary marginal:
/// mu(B) = int int int 1_B(f(A, s) x) mu_nu(dx) ds pi(dA) with mu_nu
/// normalized to unit tail constant.
pub fn mu_x_query(
    quad: &GeneratingQuadruple,
    kernel: &Kernel,
    alpha: f64,
    functional: &LimitFunctional,
) -> Result<LimitMeasureQuery> {
    quad.validate()?;
    kernel.validate()?;
    if alpha <= 0.0 {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let (times, query) = match functional {
        LimitFunctional::Radial { r } => {
            if *r <= 0.0 {
                return Err(Error::Domain("radial query needs r > 0".into()));
            }
            (vec![0.0], BorelQuery::RadiusAbove(*r))
        }
        LimitFunctional::MarginalRectangle { times, lo, hi } => {
            let n = kernel.dims().0;
            if times.is_empty() || lo.len() != times.len() * n || hi.len() != lo.len() {
                return Err(Error::Domain("rectangle dimensions do not match times".into()));
            }
            // bounded away from the origin: the stacked rectangle must not
            // contain 0 in its closure
            if lo.iter().zip(hi).all(|(l, h)| *l <= 0.0 && 0.0 <= *h) {
                return Err(Error::Domain("query set must be bounded away from 0".into()));
            }
            (
                times.clone(),
                BorelQuery::Rectangle {
                    lo: lo.clone(),
                    hi: hi.clone(),
                },
            )
        }
    };
    let rays = mu_nu_rays(&quad.nu, alpha);
    let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-10;
    let res = quad.pi.integrate(
        |atom| {
            let (u_lo, u_hi) = kernel.s_support(atom, 1e-16);
            let s_lo = t_min - u_hi;
            let s_hi = t_max - u_lo;
            rays.iter()
                .map(|(theta, p)| {
                    adaptive_quad_split(
                        |s| {
                            // stacked marginal direction across query times
                            let mut v = DVector::zeros(0);
                            for &t in &times {
                                let ft = kernel.eval(&atom.matrix, t - s) * theta;
                                v = stack(&v, &ft);
                            }
                            match query.radial_section(&v) {
                                None => 0.0,
                                Some((a, b)) => {
                                    if a <= 0.0 {
                                        return f64::INFINITY;
                                    }
                                    a.powf(-alpha)
                                        - if b.is_finite() { b.powf(-alpha) } else { 0.0 }
                                }
                            }
                        },
                        s_lo,
                        s_hi,
                        &times,
                        tol,
                    )
                    .value
                        * p
                })
                .sum()
        },
        0.0,
        tol,
    );
    Ok(LimitMeasureQuery {
        functional: functional.clone(),
        value: res.value,
        error_bound: res.error_bound + tol,
    })
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Default scaling sequence a_n = (n c)^{1/alpha} from the driver's tail
/// constant (sigma^alpha for stable; sum of w ||x||^alpha for discrete).
pub fn default_a_n(nu: &LevyMeasureSpec, alpha: f64, n: usize) -> f64 {
    let c = match nu {
        LevyMeasureSpec::ParetoRadial { c, .. } => *c,
        LevyMeasureSpec::AlphaStableRadial { sigma, .. } => sigma.powf(alpha),
        LevyMeasureSpec::FiniteDiscrete { atoms } => {
            atoms.iter().map(|(x, w)| w * x.norm().powf(alpha)).sum()
        }
    };
    (n as f64 * c).powf(1.0 / alpha)
}

/// n * (fraction of marginal samples with a_n^{-1} x in B).
pub fn empirical_tail_measure(
    marginals: &[DVector<f64>],
    a_n: f64,
    query: &BorelQuery,
) -> Result<f64> {
    if a_n <= 0.0 {
        return Err(Error::Domain("a_n must be positive".into()));
    }
    match query {
        BorelQuery::RadiusAbove(r) if *r <= 0.0 => {
            return Err(Error::Domain("query set must be bounded away from 0".into()));
        }
        BorelQuery::Rectangle { lo, hi }
            if lo.iter().zip(hi).all(|(l, h)| *l <= 0.0 && 0.0 <= *h) =>
        {
            return Err(Error::Domain("query set must be bounded away from 0".into()));
        }
        _ => {}
    }
    let count = marginals
        .iter()
        .filter(|x| query.contains(&(*x / a_n)))
        .count();
    Ok(count as f64)
}

/// One empirical exceedance rate n * P-hat with its binomial standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmpiricalRate {
    pub rate: f64,
    pub stderr: f64,
    pub count: usize,
}

fn rate_of(count: usize, n: usize) -> EmpiricalRate {
    let p = count as f64 / n as f64;
    EmpiricalRate {
        rate: n as f64 * p,
        stderr: (n as f64 * p * (1.0 - p)).sqrt(),
        count,
    }
}

/// The three relative-compactness rates at (eps, delta): oscillation near 0,
/// oscillation near 1, and the double-increment modulus.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelcompRates {
    pub delta: f64,
    pub eps: f64,
    pub w_start: EmpiricalRate,
    pub w_end: EmpiricalRate,
    pub wpp: EmpiricalRate,
}

/// Empirical n*P(a_n^{-1} modulus >= eps) for w on [0, delta), w on
/// [1-delta, 1), and w'' at delta.
pub fn relcomp_diagnostics(
    paths: &[CadlagPath],
    a_n: f64,
    eps: f64,
    delta: f64,
) -> Result<RelcompRates> {
    if a_n <= 0.0 || eps <= 0.0 || !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain("need a_n > 0, eps > 0, delta in [0,1]".into()));
    }
    let n = paths.len();
    if n == 0 {
        return Err(Error::Domain("no paths".into()));
    }
    let threshold = a_n * eps;
    let mut c_start = 0usize;
    let mut c_end = 0usize;
    let mut c_wpp = 0usize;
    for p in paths {
        if modulus_w(p, (0.0, delta)) >= threshold {
            c_start += 1;
        }
        if modulus_w(p, (1.0 - delta, 1.0)) >= threshold {
            c_end += 1;
        }
        if modulus_wpp(p, delta) >= threshold {
            c_wpp += 1;
        }
    }
    Ok(RelcompRates {
        delta,
        eps,
        w_start: rate_of(c_start, n),
        w_end: rate_of(c_end, n),
        wpp: rate_of(c_wpp, n),
    })
}
