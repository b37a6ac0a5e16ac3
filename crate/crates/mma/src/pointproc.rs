//! Exceedance point process of scaled replicas and fixed-n diagnostics of
//! its Poisson limit: per-shell counts, index of dispersion over block
//! resamples, and a chi-square statistic against a matched Poisson mean.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::{sup_norm, CadlagPath};

/// One exceeding replica with its functional summary.
#[derive(Debug, Clone)]
pub struct ExceedancePoint {
    pub replica: usize,
    /// a_n^{-1} * sup-norm
    pub radius: f64,
    pub argmax_time: f64,
    pub direction: DVector<f64>,
    /// scaled marginal vector at the argmax time
    pub marginal: DVector<f64>,
}

/// N_n restricted to radii above the storage cutoff `u`.
#[derive(Debug, Clone)]
pub struct ExceedancePointSet {
    pub points: Vec<ExceedancePoint>,
    pub n: usize,
    pub a_n: f64,
    pub u: f64,
}

/// Builds the point process of scaled exceedances from an ensemble of iid
/// path replicas.
pub fn build_point_process(
    ensemble: &[CadlagPath],
    a_n: f64,
    u: f64,
) -> Result<ExceedancePointSet> {
    if u <= 0.0 || a_n <= 0.0 {
        return Err(Error::Domain("need u > 0 and a_n > 0".into()));
    }
    let mut points = Vec::new();
    for (replica, p) in ensemble.iter().enumerate() {
        let (s, argmax_time) = sup_norm(p);
        let radius = s / a_n;
        if radius <= u {
            continue;
        }
        let at_max = p
            .events()
            .into_iter()
            .find(|e| e.time == argmax_time && (e.value.norm() - s).abs() <= 1e-12 * s)
            .map(|e| e.value.clone())
            .unwrap_or_else(|| DVector::zeros(p.dim()));
        points.push(ExceedancePoint {
            replica,
            radius,
            argmax_time,
            direction: &at_max / s,
            marginal: at_max / a_n,
        });
    }
    Ok(ExceedancePointSet {
        points,
        n: ensemble.len(),
        a_n,
        u,
    })
}

/// Per-shell Poisson diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ShellReport {
    pub shell: (f64, f64),
    pub count: usize,
    /// Poisson mean estimate per block of replicas
    pub block_mean: f64,
    /// variance / mean of block counts; near 1 under the Poisson limit
    pub dispersion: f64,
    /// sum of (c_b - mean)^2 / mean over blocks
    pub chi_square: f64,
    pub dof: usize,
    pub blocks: usize,
    /// per-block counts, in replica order (for cross-shell statistics)
    pub block_counts: Vec<usize>,
}

pub fn validate_shells(shells: &[(f64, f64)]) -> Result<()> {
    if shells.is_empty() {
        return Err(Error::Domain("no shells given".into()));
    }
    for &(lo, hi) in shells {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain(
                "shells must satisfy 0 < lo < hi (bounded away from 0)".into(),
            ));
        }
    }
    let mut sorted = shells.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::Domain(format!(
                "shells {:?} and {:?} overlap",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Counts per radial shell (lo, hi].
pub fn shell_counts(pp: &ExceedancePointSet, shells: &[(f64, f64)]) -> Result<Vec<usize>> {
    validate_shells(shells)?;
    Ok(shells
        .iter()
        .map(|&(lo, hi)| {
            pp.points
                .iter()
                .filter(|p| p.radius > lo && p.radius <= hi)
                .count()
        })
        .collect())
}

/// Dispersion and goodness-of-fit diagnostics over disjoint radial shells,
/// using blocks of consecutive replica indices as Poisson resamples.
pub fn poisson_limit_diagnostics(
    pp: &ExceedancePointSet,
    shells: &[(f64, f64)],
) -> Result<Vec<ShellReport>> {
    validate_shells(shells)?;
    let blocks = (pp.n / 20).clamp(2, 500);
    if pp.n < 40 {
        return Err(Error::NotApplicable(format!(
            "insufficient data for block diagnostics: n = {}",
            pp.n
        )));
    }
    let block_size = pp.n / blocks;
    let used = blocks * block_size;
    let mut reports = Vec::with_capacity(shells.len());
    for &(lo, hi) in shells {
        let mut block_counts = vec![0usize; blocks];
        let mut count = 0usize;
        for p in &pp.points {
            if p.radius > lo && p.radius <= hi {
                count += 1;
                if p.replica < used {
                    block_counts[p.replica / block_size] += 1;
                }
            }
        }
        let mean: f64 = block_counts.iter().sum::<usize>() as f64 / blocks as f64;
        let var: f64 = block_counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (blocks as f64 - 1.0);
        let (dispersion, chi_square) = if mean > 0.0 {
            (var / mean, (blocks as f64 - 1.0) * var / mean)
        } else {
            (f64::NAN, f64::NAN)
        };
        reports.push(ShellReport {
            shell: (lo, hi),
            count,
            block_mean: mean,
            dispersion,
            chi_square,
            dof: blocks - 1,
            blocks,
            block_counts,
        });
    }
    Ok(reports)
}

/// Pearson correlation of two equal-length count vectors (used to test
/// cross-shell independence across master seeds).
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_path(level: f64) -> CadlagPath {
        CadlagPath::constant(vec![0.0, 0.5, 1.0], DVector::from_element(1, level))
    }

    #[test]
    fn empty_when_u_above_everything() {
        let ensemble: Vec<CadlagPath> = (1..=5).map(|i| flat_path(i as f64)).collect();
        let pp = build_point_process(&ensemble, 1.0, 100.0).unwrap();
        assert!(pp.points.is_empty());
        assert_eq!(pp.n, 5);
    }

    #[test]
    fn points_scaled_and_indexed() {
        let ensemble = vec![flat_path(1.0), flat_path(6.0), flat_path(10.0)];
        let pp = build_point_process(&ensemble, 2.0, 1.0).unwrap();
        let radii: Vec<f64> = pp.points.iter().map(|p| p.radius).collect();
        assert_eq!(radii, vec![3.0, 5.0]);
        assert_eq!(pp.points[0].replica, 1);
        assert_eq!(pp.points[0].direction[(0, 0)], 1.0);
    }

    #[test]
    fn shell_count_additivity() {
        let ensemble: Vec<CadlagPath> = (1..=100).map(|i| flat_path(i as f64 / 10.0)).collect();
        let pp = build_point_process(&ensemble, 1.0, 0.5).unwrap();
        let both = shell_counts(&pp, &[(1.0, 2.0), (2.0, 4.0)]).unwrap();
        let merged = shell_counts(&pp, &[(1.0, 4.0)]).unwrap();
        assert_eq!(both[0] + both[1], merged[0]);
    }

    #[test]
    fn overlapping_shells_rejected() {
        let ensemble = vec![flat_path(1.0); 50];
        let pp = build_point_process(&ensemble, 1.0, 0.5).unwrap();
        assert!(poisson_limit_diagnostics(&pp, &[(1.0, 3.0), (2.0, 4.0)]).is_err());
        assert!(poisson_limit_diagnostics(&pp, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn single_replica_refused() {
        let pp = build_point_process(&[flat_path(5.0)], 1.0, 1.0).unwrap();
        assert!(matches!(
            poisson_limit_diagnostics(&pp, &[(1.0, 2.0)]),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn permutation_equivariance() {
        let mut ensemble: Vec<CadlagPath> = (1..=20).map(|i| flat_path(i as f64)).collect();
        let pp1 = build_point_process(&ensemble, 1.0, 5.0).unwrap();
        ensemble.reverse();
        let pp2 = build_point_process(&ensemble, 1.0, 5.0).unwrap();
        let mut r1: Vec<f64> = pp1.points.iter().map(|p| p.radius).collect();
        let mut r2: Vec<f64> = pp2.points.iter().map(|p| p.radius).collect();
        r1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r2.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r1, r2);
    }
}
