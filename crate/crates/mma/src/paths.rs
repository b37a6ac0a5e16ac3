//! Càdlàg path container on [0, 1]: sup-norm with argmax, and the
//! oscillation moduli w and w'' used by the relative-compactness bounds.
//! The continuous-time suprema are evaluated over the path's event set
//! (grid samples, jump times, and left limits).

use nalgebra::DVector;

use crate::error::{Error, Result};

/// One jump with its exact time and both one-sided limits.
#[derive(Debug, Clone)]
pub struct PathJump {
    pub time: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

/// Piecewise representation of a càdlàg path: right-continuous samples on a
/// strictly increasing grid plus the exact jump list, so no jump is lost
/// between grid points.
#[derive(Debug, Clone)]
pub struct CadlagPath {
    pub grid: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    pub jumps: Vec<PathJump>,
}

/// An observed value of the path: either a grid sample (right-continuous)
/// or a one-sided limit at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Grid,
    JumpLeft,
    JumpRight,
}

#[derive(Debug, Clone)]
pub struct PathEvent<'a> {
    pub time: f64,
    pub value: &'a DVector<f64>,
    pub kind: EventKind,
}

impl CadlagPath {
    pub fn validate(&self) -> Result<()> {
        if self.grid.len() < 2 || self.grid.len() != self.values.len() {
            return Err(Error::Domain("path needs matching grid and values".into()));
        }
        if !self.grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Domain("path grid must be strictly increasing".into()));
        }
        let d = self.values[0].len();
        if self.values.iter().any(|v| v.len() != d) {
            return Err(Error::Domain("path values of mixed dimension".into()));
        }
        let (t0, t1) = (self.grid[0], *self.grid.last().unwrap());
        for j in &self.jumps {
            if j.time <= t0 || j.time > t1 {
                return Err(Error::Domain("jump time outside the grid span".into()));
            }
            if j.left.len() != d || j.right.len() != d {
                return Err(Error::Domain("jump limit of wrong dimension".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn constant(grid: Vec<f64>, value: DVector<f64>) -> Self {
        let values = vec![value; grid.len()];
        CadlagPath {
            grid,
            values,
            jumps: Vec::new(),
        }
    }

    /// Time-ordered event list. At a jump time the left limit precedes the
    /// right limit; grid samples carry the right-continuous value.
    pub fn events(&self) -> Vec<PathEvent<'_>> {
        let mut ev: Vec<PathEvent> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&time, value)| PathEvent {
                time,
                value,
                kind: EventKind::Grid,
            })
            .collect();
        for j in &self.jumps {
            ev.push(PathEvent {
                time: j.time,
                value: &j.left,
                kind: EventKind::JumpLeft,
            });
            ev.push(PathEvent {
                time: j.time,
                value: &j.right,
                kind: EventKind::JumpRight,
            });
        }
        ev.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .unwrap()
                .then_with(|| event_rank(a.kind).cmp(&event_rank(b.kind)))
        });
        ev
    }

    /// Pointwise sum of two paths sharing the same grid.
    pub fn add(&self, other: &CadlagPath) -> Result<CadlagPath> {
        if self.grid != other.grid {
            return Err(Error::Domain("paths on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let mut jumps = self.jumps.clone();
        jumps.extend(other.jumps.iter().cloned());
        jumps.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        Ok(CadlagPath {
            grid: self.grid.clone(),
            values,
            jumps,
        })
    }
}

fn event_rank(kind: EventKind) -> u8 {
    match kind {
        EventKind::JumpLeft => 0,
        EventKind::Grid => 1,
        EventKind::JumpRight => 2,
    }
}

/// Sup-norm over the event set, with the earliest attaining time; at equal
/// norm a left limit beats the right value at the same time.
pub fn sup_norm(p: &CadlagPath) -> (f64, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = p.grid[0];
    for ev in p.events() {
        let n = ev.value.norm();
        if n > best {
            best = n;
            arg = ev.time;
        }
    }
    (best.max(0.0), arg)
}

/// w(p, T0) = sup over t1, t2 in T0 of ||p(t1) - p(t2)||, using all stored
/// values and one-sided limits with times inside T0 = [t_lo, t_hi).
pub fn modulus_w(p: &CadlagPath, t0: (f64, f64)) -> f64 {
    let (lo, hi) = t0;
    let ev: Vec<PathEvent> = p
        .events()
        .into_iter()
        .filter(|e| e.time >= lo && e.time < hi)
        .collect();
    let mut best = 0.0f64;
    for i in 0..ev.len() {
        for j in (i + 1)..ev.len() {
            best = best.max((ev[i].value - ev[j].value).norm());
        }
    }
    best
}

/// w''(p, delta) = sup over t1 <= t <= t2 with t2 - t1 <= delta of
/// min(||p(t) - p(t1)||, ||p(t2) - p(t)||), evaluated over the event set.
pub fn modulus_wpp(p: &CadlagPath, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    let ev = p.events();
    let m = ev.len();
    let mut best = 0.0f64;
    let mut j_hi = 0usize;
    for i in 0..m {
        // advance the window end: times within delta of ev[i]
        if j_hi < i {
            j_hi = i;
        }
        while j_hi + 1 < m && ev[j_hi + 1].time - ev[i].time <= delta {
            j_hi += 1;
        }
        for k in (i + 1)..=j_hi {
            for mid in (i + 1)..k {
                let a = (ev[mid].value - ev[i].value).norm();
                let b = (ev[k].value - ev[mid].value).norm();
                best = best.max(a.min(b));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    /// Pure step path: value v_k on [t_k, t_{k+1}).
    fn step_path(times: &[f64], levels: &[f64]) -> CadlagPath {
        let mut grid = vec![0.0];
        let mut values = vec![vec1(levels[0])];
        let mut jumps = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            grid.push(t);
            values.push(vec1(levels[k + 1]));
            jumps.push(PathJump {
                time: t,
                left: vec1(levels[k]),
                right: vec1(levels[k + 1]),
            });
        }
        if *grid.last().unwrap() < 1.0 {
            grid.push(1.0);
            values.push(vec1(*levels.last().unwrap()));
        }
        CadlagPath {
            grid,
            values,
            jumps,
        }
    }

    #[test]
    fn sup_norm_zero_path() {
        let p = CadlagPath::constant(vec![0.0, 0.5, 1.0], vec1(0.0));
        assert_eq!(sup_norm(&p), (0.0, 0.0));
    }

    #[test]
    fn sup_norm_single_jump() {
        // e^{-(t - 0.5)} after a unit jump at 0.5
        let mut grid = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let values: Vec<_> = grid
            .iter()
            .map(|&t| vec1(if t >= 0.5 { (-(t - 0.5f64)).exp() } else { 0.0 }))
            .collect();
        let jumps = vec![PathJump {
            time: 0.5,
            left: vec1(0.0),
            right: vec1(1.0),
        }];
        let p = CadlagPath {
            grid: std::mem::take(&mut grid),
            values,
            jumps,
        };
        let (v, t) = sup_norm(&p);
        assert_relative_eq!(v, 1.0);
        assert_eq!(t, 0.5);
    }

    #[test]
    fn modulus_w_constant_and_jump() {
        let p = CadlagPath::constant(vec![0.0, 0.5, 1.0], vec1(3.0));
        assert_eq!(modulus_w(&p, (0.0, 1.0)), 0.0);
        let q = step_path(&[0.4], &[0.0, 1.0]);
        assert_relative_eq!(modulus_w(&q, (0.0, 1.0)), 1.0);
        // empty window
        assert_eq!(modulus_w(&q, (0.7, 0.7)), 0.0);
    }

    #[test]
    fn wpp_single_jump_is_zero() {
        let p = step_path(&[0.5], &[0.0, 1.0]);
        for &d in &[0.05, 0.2, 1.0] {
            assert_eq!(modulus_wpp(&p, d), 0.0);
        }
    }

    #[test]
    fn wpp_two_close_jumps() {
        // jumps of sizes 1 then 2 within delta: w'' = min(1, 2) = 1
        let p = step_path(&[0.50, 0.52], &[0.0, 1.0, 3.0]);
        assert_relative_eq!(modulus_wpp(&p, 0.1), 1.0);
        // separated by more than delta: 0
        assert_eq!(modulus_wpp(&p, 0.01), 0.0);
    }

    #[test]
    fn wpp_bounded_by_w() {
        let p = step_path(&[0.2, 0.3, 0.8], &[0.0, 2.0, -1.0, 0.5]);
        for &d in &[0.05, 0.15, 0.5, 1.0] {
            assert!(modulus_wpp(&p, d) <= modulus_w(&p, (0.0, 1.0 + 1e-12)) + 1e-12);
        }
    }

    #[test]
    fn validate_rejects_bad_grid() {
        let p = CadlagPath {
            grid: vec![0.0, 0.5, 0.5],
            values: vec![vec1(0.0); 3],
            jumps: vec![],
        };
        assert!(p.validate().is_err());
    }
}
