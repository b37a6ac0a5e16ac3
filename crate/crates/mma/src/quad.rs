//! Adaptive 1-D quadrature with error bounds, plus measure-of-set helpers
//! for indicator integrands.

/// Value of an integral together with an a-posteriori error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult {
            value: 0.0,
            error_bound: 0.0,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        QuadResult {
            value: c * self.value,
            error_bound: c.abs() * self.error_bound,
        }
    }
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + rhs.value,
            error_bound: self.error_bound + rhs.error_bound,
        }
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    err_acc: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err_acc += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err_acc)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err_acc)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_quad(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let mut g = |x: f64| f(x);
    let fa = g(a);
    let fb = g(b);
    let fm = g(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut err = 0.0;
    let value = adapt(&mut g, a, b, fa, fm, fb, whole, tol, 48, &mut err);
    QuadResult {
        value,
        error_bound: err.max(f64::EPSILON * value.abs()),
    }
}

/// Like [`adaptive_quad`] but the domain is first split at the interior
/// points in `splits` (breakpoints, kinks, jump locations of the integrand).
pub fn adaptive_quad_split(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    splits: &[f64],
    tol: f64,
) -> QuadResult {
    let mut pts: Vec<f64> = splits.iter().copied().filter(|&s| s > a && s < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts.insert(0, a);
    pts.push(b);
    let per_tol = tol / (pts.len() - 1) as f64;
    let mut total = QuadResult::zero();
    for w in pts.windows(2) {
        total = total + adaptive_quad(&mut f, w[0], w[1], per_tol);
    }
    total
}

/// Lebesgue measure of `{ s in [a, b] : pred(s) }`.
///
/// Scans `n_scan` equal cells and refines each boundary crossing by
/// bisection. Exact up to bisection resolution when the predicate set is a
/// finite union of intervals resolved by the scan grid.
pub fn indicator_measure(pred: impl Fn(f64) -> bool, a: f64, b: f64, n_scan: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n_scan as f64;
    let mut total = 0.0;
    let mut prev_x = a;
    let mut prev_in = pred(a);
    // open interval start for the currently-inside run
    let mut run_start = if prev_in { Some(a) } else { None };
    for i in 1..=n_scan {
        let x = a + i as f64 * h;
        let inside = pred(x);
        if inside != prev_in {
            // refine the crossing in (prev_x, x)
            let mut lo = prev_x;
            let mut hi = x;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if pred(mid) == prev_in {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cross = 0.5 * (lo + hi);
            if prev_in {
                total += cross - run_start.take().unwrap();
            } else {
                run_start = Some(cross);
            }
        }
        prev_x = x;
        prev_in = inside;
    }
    if let Some(start) = run_start {
        total += b - start;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_integral() {
        let r = adaptive_quad(|s: f64| (-2.0 * s).exp() * 2.0, 0.0, 40.0, 1e-12);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
        assert!(r.error_bound < 1e-9);
    }

    #[test]
    fn split_handles_kink() {
        // |s| on [-1, 1] integrates to 1
        let r = adaptive_quad_split(|s: f64| s.abs(), -1.0, 1.0, &[0.0], 1e-12);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn indicator_measure_of_interval() {
        // {s : e^{-s} > b} on [0, 40] has measure -ln b
        let b = (-1.0f64).exp();
        let m = indicator_measure(|s: f64| (-s).exp() > b, 0.0, 40.0, 2048);
        assert_relative_eq!(m, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn indicator_measure_empty_and_full() {
        assert_eq!(indicator_measure(|_| false, 0.0, 1.0, 64), 0.0);
        assert_relative_eq!(indicator_measure(|_| true, 0.0, 1.0, 64), 1.0);
    }
}
