//! Kernel functions f(A, s) for mixed moving averages: evaluation,
//! derivatives, boundary operators, exponential envelopes, and the
//! increment modulus used by the small-increment vanishing condition.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::levy_basis::{MixingAtom, MixingMeasureSpec, ScalarDist};
use crate::quad::{adaptive_quad_split, QuadResult};

/// Kernel families. All are square (n = d).
#[derive(Debug, Clone)]
pub enum Kernel {
    /// f(A, s) = e^{A s} 1_{[0, inf)}(s)
    SupOu { dim: usize },
    /// f(A, s) = e^{A |s|}
    TwoSidedSupOu { dim: usize },
    /// f(A, s) = 1_{[lo, hi]}(s) I, a discontinuous test kernel
    IndicatorTest { dim: usize, lo: f64, hi: f64 },
    /// f(A, s) = (sum_k c_k s^k) e^{A s} 1_{[0, inf)}(s)
    ExpPoly { dim: usize, coeffs: Vec<f64> },
}

fn poly(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

fn poly_deriv(coeffs: &[f64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
}

/// Matrix exponential with a scalar fast path for 1x1 matrices.
fn mexp(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 1 {
        DMatrix::from_element(1, 1, m[(0, 0)].exp())
    } else {
        m.exp()
    }
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::SupOu { dim } | Kernel::TwoSidedSupOu { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("kernel dimension must be >= 1".into()));
                }
            }
            Kernel::IndicatorTest { dim, lo, hi } => {
                if *dim == 0 {
                    return Err(Error::Config("kernel dimension must be >= 1".into()));
                }
                if !(lo < hi) {
                    return Err(Error::Config("indicator kernel needs lo < hi".into()));
                }
            }
            Kernel::ExpPoly { dim, coeffs } => {
                if *dim == 0 {
                    return Err(Error::Config("kernel dimension must be >= 1".into()));
                }
                if coeffs.is_empty() {
                    return Err(Error::Config("exp_poly kernel needs coefficients".into()));
                }
            }
        }
        Ok(())
    }

    /// (n, d) of the matrix values.
    pub fn dims(&self) -> (usize, usize) {
        let d = match self {
            Kernel::SupOu { dim }
            | Kernel::TwoSidedSupOu { dim }
            | Kernel::IndicatorTest { dim, .. }
            | Kernel::ExpPoly { dim, .. } => *dim,
        };
        (d, d)
    }

    /// f(A, s); at discontinuity points this returns the right limit.
    pub fn eval(&self, a: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
        let d = a.nrows();
        match self {
            Kernel::SupOu { .. } => {
                if s >= 0.0 {
                    mexp(a * s)
                } else {
                    DMatrix::zeros(d, d)
                }
            }
            Kernel::TwoSidedSupOu { .. } => mexp(a * s.abs()),
            Kernel::IndicatorTest { lo, hi, .. } => {
                if s >= *lo && s <= *hi {
                    DMatrix::identity(d, d)
                } else {
                    DMatrix::zeros(d, d)
                }
            }
            Kernel::ExpPoly { coeffs, .. } => {
                if s >= 0.0 {
                    mexp(a * s) * poly(coeffs, s)
                } else {
                    DMatrix::zeros(d, d)
                }
            }
        }
    }

    /// Scalar value for 1-d kernels (and scalar-family atoms): f(-r, s).
    pub fn eval_scalar(&self, rate: f64, s: f64) -> f64 {
        match self {
            Kernel::SupOu { .. } => {
                if s >= 0.0 {
                    (-rate * s).exp()
                } else {
                    0.0
                }
            }
            Kernel::TwoSidedSupOu { .. } => (-rate * s.abs()).exp(),
            Kernel::IndicatorTest { lo, hi, .. } => {
                if s >= *lo && s <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::ExpPoly { coeffs, .. } => {
                if s >= 0.0 {
                    (-rate * s).exp() * poly(coeffs, s)
                } else {
                    0.0
                }
            }
        }
    }

    /// d/ds f(A, s) away from jump points; at s = 0 the right-hand limit.
    /// `None` when the kernel is not piecewise differentiable with
    /// one-sided limits (the indicator test kernel).
    pub fn deriv(&self, a: &DMatrix<f64>, s: f64) -> Option<DMatrix<f64>> {
        let d = a.nrows();
        match self {
            Kernel::SupOu { .. } => Some(if s >= 0.0 {
                a * mexp(a * s)
            } else {
                DMatrix::zeros(d, d)
            }),
            Kernel::TwoSidedSupOu { .. } => Some(if s >= 0.0 {
                a * mexp(a * s)
            } else {
                -(a * mexp(a * (-s)))
            }),
            Kernel::IndicatorTest { .. } => None,
            Kernel::ExpPoly { coeffs, .. } => Some(if s >= 0.0 {
                let e = mexp(a * s);
                &e * poly_deriv(coeffs, s) + a * e * poly(coeffs, s)
            } else {
                DMatrix::zeros(d, d)
            }),
        }
    }

    /// Left limit at 0: C1 = f(A, 0-).
    pub fn c1(&self, d: usize) -> DMatrix<f64> {
        match self {
            Kernel::SupOu { .. } | Kernel::ExpPoly { .. } => DMatrix::zeros(d, d),
            Kernel::TwoSidedSupOu { .. } => DMatrix::identity(d, d),
            Kernel::IndicatorTest { lo, hi, .. } => {
                if *lo < 0.0 && 0.0 <= *hi {
                    DMatrix::identity(d, d)
                } else {
                    DMatrix::zeros(d, d)
                }
            }
        }
    }

    /// Right limit at 0: C2 = f(A, 0+).
    pub fn c2(&self, d: usize) -> DMatrix<f64> {
        match self {
            Kernel::SupOu { .. } | Kernel::TwoSidedSupOu { .. } => DMatrix::identity(d, d),
            Kernel::IndicatorTest { lo, hi, .. } => {
                if *lo <= 0.0 && 0.0 <= *hi {
                    DMatrix::identity(d, d)
                } else {
                    DMatrix::zeros(d, d)
                }
            }
            Kernel::ExpPoly { coeffs, .. } => DMatrix::identity(d, d) * coeffs[0],
        }
    }

    /// True when f(A, s) = 0 for all s < 0.
    pub fn causal(&self) -> bool {
        match self {
            Kernel::SupOu { .. } | Kernel::ExpPoly { .. } => true,
            Kernel::TwoSidedSupOu { .. } => false,
            Kernel::IndicatorTest { lo, .. } => *lo >= 0.0,
        }
    }

    /// Exponential envelope `||f(A, s)|| <= kappa e^{-rho |s|}` valid on the
    /// kernel's support, when one is known for this atom.
    pub fn envelope(&self, atom: &MixingAtom) -> Option<(f64, f64)> {
        match self {
            Kernel::SupOu { .. } | Kernel::TwoSidedSupOu { .. } => atom.envelope(),
            Kernel::IndicatorTest { .. } => None,
            Kernel::ExpPoly { coeffs, .. } => {
                // sup_s p(s) e^{-rho s / 2} <= kappa_p finite; fold the
                // polynomial into kappa and halve rho.
                let (k, rho) = atom.envelope()?;
                let mut kp: f64 = 0.0;
                let mut s = 0.0;
                // coarse log-spaced scan is enough for an upper envelope
                while s < 400.0 / rho.max(1e-3) {
                    kp = kp.max(poly(coeffs, s).abs() * (-0.5 * rho * s).exp());
                    s = (s * 1.05).max(s + 1e-3);
                }
                Some((k * kp.max(poly(coeffs, 0.0).abs()), 0.5 * rho))
            }
        }
    }

    /// s-interval outside of which `||f(A, s)||` stays below `tol`
    /// (exactly, for the indicator kernel).
    pub fn s_support(&self, atom: &MixingAtom, tol: f64) -> (f64, f64) {
        match self {
            Kernel::IndicatorTest { lo, hi, .. } => (*lo, *hi),
            _ => {
                let s_max = match self.envelope(atom) {
                    Some((k, rho)) if rho > 0.0 => ((k / tol).ln() / rho).max(1.0),
                    _ => 400.0,
                };
                if self.causal() {
                    (0.0, s_max)
                } else {
                    (-s_max, s_max)
                }
            }
        }
    }

    /// Upper bound for the kernel-mass ignored outside [`s_support`],
    /// integrated over pi: int_{|s| > S} kappa e^{-rho s} ds <= tol/rho terms.
    pub fn truncation_bound(&self, pi: &MixingMeasureSpec, tol: f64) -> f64 {
        if matches!(self, Kernel::IndicatorTest { .. }) {
            return 0.0;
        }
        pi.integrate(
            |atom| match self.envelope(atom) {
                Some((_, rho)) if rho > 0.0 => tol / rho,
                _ => tol,
            },
            0.0,
            tol,
        )
        .value
    }

    /// sup_s ||f(A, s)|| when finite.
    pub fn global_bound(&self, atom: &MixingAtom) -> Option<f64> {
        match self {
            Kernel::IndicatorTest { .. } => Some(1.0),
            Kernel::SupOu { .. } | Kernel::TwoSidedSupOu { .. } => {
                self.envelope(atom).map(|(k, _)| k)
            }
            Kernel::ExpPoly { .. } => self.envelope(atom).map(|(k, _)| k),
        }
    }
}

// ---------------------------------------------------------------------------
// Increment modulus f_delta
// ---------------------------------------------------------------------------

/// f_delta(A, s) = sup over window pairs t1 in [0, 1], t2 = t1 + h with
/// 0 < h <= delta and s outside (t1, t2], of ||f(A, t2 - s) - f(A, t1 - s)||.
/// Windows straddling s are excluded (they would pick up the kernel jump at
/// the origin rather than an increment); the right endpoint t2 is not
/// clipped at 1.
pub fn f_delta(kernel: &Kernel, delta: f64, a: &DMatrix<f64>, s: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "f_delta needs delta in (0, 1], got {delta}"
        )));
    }
    // closed form for scalar-rate exponentials: the supremum is attained at
    // full width h = delta with t1 = max(s, 0)
    if let Kernel::SupOu { .. } = kernel {
        if let Some(rate) = crate::levy_basis::MixingAtom::from_matrix(a.clone(), None).scalar_rate
        {
            if s > 1.0 {
                return Ok(0.0);
            }
            let d = a.nrows() as f64;
            // Frobenius norm of (1 - e^{-r delta}) e^{r min(s,0)} I
            return Ok(d.sqrt() * (1.0 - (-rate * delta).exp()) * (rate * s.min(0.0)).exp());
        }
    }
    Ok(f_delta_grid(kernel, delta, a, s))
}

fn f_delta_grid(kernel: &Kernel, delta: f64, a: &DMatrix<f64>, s: f64) -> f64 {
    let n1 = 64usize;
    let n2 = 16usize;
    let mut best = 0.0f64;
    let mut best_t1 = 0.0;
    let mut best_h = delta;
    let consider = |t1: f64, h: f64, best: &mut f64, bt1: &mut f64, bh: &mut f64| {
        // admissible windows never straddle s
        if t1 < s && s <= t1 + h {
            return;
        }
        let v = (kernel.eval(a, t1 + h - s) - kernel.eval(a, t1 - s)).norm();
        if v > *best {
            *best = v;
            *bt1 = t1;
            *bh = h;
        }
    };
    for i in 0..=n1 {
        let t1 = i as f64 / n1 as f64;
        for j in 1..=n2 {
            let h = delta * j as f64 / n2 as f64;
            consider(t1, h, &mut best, &mut best_t1, &mut best_h);
        }
    }
    // windows ending exactly at s (t2 < s requires an interior endpoint)
    if s > 0.0 && s <= 1.0 + delta {
        for j in 1..=n2 {
            let h = delta * j as f64 / n2 as f64;
            let t1 = (s - h - 1e-12).max(0.0);
            if t1 <= 1.0 {
                consider(t1, h.min(s - t1 - 1e-13), &mut best, &mut best_t1, &mut best_h);
            }
        }
        // and windows starting exactly at s
        if s <= 1.0 {
            for j in 1..=n2 {
                let h = delta * j as f64 / n2 as f64;
                consider(s, h, &mut best, &mut best_t1, &mut best_h);
            }
        }
    }
    // refine around the best coarse cell
    let dt = 1.0 / n1 as f64;
    let dh = delta / n2 as f64;
    for i in 0..=32 {
        let t1 = (best_t1 - dt + 2.0 * dt * i as f64 / 32.0).clamp(0.0, 1.0);
        for j in 0..=32 {
            let h = (best_h - dh + 2.0 * dh * j as f64 / 32.0).clamp(1e-12 * delta, delta);
            consider(t1, h, &mut best, &mut best_t1, &mut best_h);
        }
    }
    best
}

/// Outcome of an improper integral that may be certified divergent.
#[derive(Debug, Clone)]
pub enum IntegralOutcome {
    Value(QuadResult),
    Divergent { partials: Vec<f64> },
}

/// Truncation ladder used for divergence certification. Growth by at least
/// [`LADDER_GROWTH`] between consecutive levels certifies divergence.
pub const TRUNC_LADDER: [f64; 3] = [1e1, 1e3, 1e5];
pub const LADDER_GROWTH: f64 = 1.5;

/// Classifies ladder partials: divergent when every step grows by the
/// growth factor, otherwise a value with the last-step difference folded
/// into the error bound.
pub fn certify_ladder(partials: &[f64], quad_err: f64) -> IntegralOutcome {
    let n = partials.len();
    let diverging = partials
        .windows(2)
        .all(|w| w[1] > LADDER_GROWTH * w[0].max(f64::MIN_POSITIVE))
        && partials[n - 1] > partials[0];
    if diverging {
        return IntegralOutcome::Divergent {
            partials: partials.to_vec(),
        };
    }
    // Converging ladder: the residual beyond the last truncation level is
    // estimated by geometric extrapolation of the level increments (exact
    // when the truncated tail scales like a power of the cap, as it does
    // for the scalar-family lower truncation) and added back. The error
    // bound keeps the next-order term of that geometric model.
    let value = partials[n - 1];
    if n >= 3 {
        let d2 = partials[n - 2] - partials[n - 3];
        let d3 = value - partials[n - 2];
        if d2.abs() > 0.0 {
            let q = d3 / d2;
            if q.abs() < 0.5 {
                let corr = d3 * q / (1.0 - q);
                return IntegralOutcome::Value(QuadResult {
                    value: value + corr,
                    error_bound: quad_err + (corr * q / (1.0 - q)).abs(),
                });
            }
        }
    }
    IntegralOutcome::Value(QuadResult {
        value,
        error_bound: (value - partials[n - 2]).abs() + quad_err,
    })
}

/// Closed-form int_{-inf}^{1} f_delta(-r, s)^alpha ds for the scalar causal
/// exponential kernel (per unit direction, d = 1 normalization).
pub fn fdelta_alpha_scalar(rate: f64, delta: f64, alpha: f64) -> f64 {
    (1.0 - (-rate * delta).exp()).powf(alpha) * (1.0 + 1.0 / (alpha * rate))
}

/// int_pi int_s f_delta(A, s)^alpha ds pi(dA), with divergence detection
/// through the scalar-family lower truncation ladder.
pub fn fdelta_alpha_integral(
    kernel: &Kernel,
    pi: &MixingMeasureSpec,
    delta: f64,
    alpha: f64,
    tol: f64,
) -> Result<IntegralOutcome> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "fdelta_alpha_integral needs delta in (0, 1], got {delta}"
        )));
    }
    if alpha <= 0.0 {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let d = pi.dim();
    let scalar_supou = matches!(kernel, Kernel::SupOu { .. });
    let mut quad_err = 0.0f64;
    let mut level = |trunc: f64| -> f64 {
        let lower = 1.0 / trunc;
        let q = pi.integrate(
            |atom| match (scalar_supou, atom.scalar_rate) {
                (true, Some(rate)) => {
                    (d as f64).sqrt().powf(alpha) * fdelta_alpha_scalar(rate, delta, alpha)
                }
                _ => {
                    let (s_lo, _) = kernel.s_support(atom, 1e-14);
                    let a = &atom.matrix;
                    adaptive_quad_split(
                        |s| f_delta_grid(kernel, delta, a, s).powf(alpha),
                        s_lo.min(0.0) - 1.0,
                        1.0 + delta,
                        &[0.0, 1.0],
                        tol,
                    )
                    .value
                }
            },
            lower,
            tol,
        );
        quad_err = quad_err.max(q.error_bound);
        q.value
    };
    let needs_ladder = matches!(
        pi,
        MixingMeasureSpec::ScalarFamily {
            dist: ScalarDist::Gamma { .. },
            ..
        }
    );
    if needs_ladder {
        let partials: Vec<f64> = TRUNC_LADDER.iter().map(|&t| level(t)).collect();
        Ok(certify_ladder(&partials, quad_err))
    } else {
        let v = level(TRUNC_LADDER[TRUNC_LADDER.len() - 1]);
        Ok(IntegralOutcome::Value(QuadResult {
            value: v,
            error_bound: quad_err + tol,
        }))
    }
}
