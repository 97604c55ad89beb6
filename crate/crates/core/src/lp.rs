//! Exact minimization of `x + y` over an intersection of half-planes
//! `a·x + b·y ≥ c` with `a, b ≥ 0`, inside the quadrant `x, y ≥ 0`.
//!
//! With nonnegative coefficients the feasible region is upward closed and
//! contains no line, so the optimum is attained at a vertex. Vertices are found
//! by intersecting every pair of boundary lines, axes included.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        HalfPlane { a, b, c }
    }

    /// `a·x + b·y - c`; nonnegative when satisfied.
    pub fn slack(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y - self.c
    }

    fn tolerance(&self) -> f64 {
        FEAS_TOL * self.c.abs().max(1.0)
    }

    pub fn is_satisfied(&self, x: f64, y: f64) -> bool {
        self.slack(x, y) >= -self.tolerance()
    }

    pub fn is_tight(&self, x: f64, y: f64) -> bool {
        self.slack(x, y).abs() <= self.tolerance()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    /// Indices of the input constraints that hold with equality.
    pub active: Vec<usize>,
    pub x_bound_active: bool,
    pub y_bound_active: bool,
}

/// Minimizes `x + y`. Among optimal vertices the smallest `x`, then the
/// smallest `y`, is returned.
pub fn solve_lp_2d(constraints: &[HalfPlane]) -> Result<LpSolution> {
    for (index, h) in constraints.iter().enumerate() {
        let finite = h.a.is_finite() && h.b.is_finite() && h.c.is_finite();
        if !finite || h.a < 0.0 || h.b < 0.0 || (h.a == 0.0 && h.b == 0.0) {
            return Err(Error::InvalidConstraint { index });
        }
    }

    let mut lines: Vec<HalfPlane> = constraints.to_vec();
    lines.push(HalfPlane::new(1.0, 0.0, 0.0));
    lines.push(HalfPlane::new(0.0, 1.0, 0.0));

    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (p, q) = (lines[i], lines[j]);
            let det = p.a * q.b - q.a * p.b;
            let scale = (p.a.abs() + p.b.abs()) * (q.a.abs() + q.b.abs());
            if det.abs() <= 1e-14 * scale {
                continue;
            }
            let x = (p.c * q.b - q.c * p.b) / det;
            let y = (p.a * q.c - q.a * p.c) / det;
            if !lines.iter().all(|h| h.is_satisfied(x, y)) {
                continue;
            }
            let value = x + y;
            let better = match best {
                None => true,
                Some((bx, by, bv)) => {
                    let tie = 1e-12 * bv.abs().max(1.0);
                    value < bv - tie || (value <= bv + tie && (x, y) < (bx, by))
                }
            };
            if better {
                best = Some((x, y, value));
            }
        }
    }

    let (x, y, _) = best.ok_or(Error::Infeasible)?;
    // Clear rounding noise such as -0.0 or -1e-17 on an axis.
    let (x, y) = (x.max(0.0), y.max(0.0));
    let active = constraints
        .iter()
        .enumerate()
        .filter(|(_, h)| h.is_tight(x, y))
        .map(|(i, _)| i)
        .collect();
    Ok(LpSolution {
        x,
        y,
        value: x + y,
        active,
        x_bound_active: x <= FEAS_TOL,
        y_bound_active: y <= FEAS_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    /// Oracle: scan x on a grid and take the smallest feasible grid y.
    fn grid_min(cons: &[HalfPlane], upper: f64, step: f64) -> f64 {
        let n = (upper / step).ceil() as usize;
        let mut best = f64::INFINITY;
        for ix in 0..=n {
            let x = ix as f64 * step;
            let mut y_min: f64 = 0.0;
            let mut ok = true;
            for h in cons {
                if h.b == 0.0 {
                    ok &= h.a * x >= h.c - 1e-12;
                } else {
                    y_min = y_min.max((h.c - h.a * x) / h.b);
                }
            }
            if ok {
                let y = (y_min / step - 1e-9).ceil().max(0.0) * step;
                best = best.min(x + y);
            }
        }
        best
    }

    #[test]
    fn unit_box() {
        let s = solve_lp_2d(&[HalfPlane::new(1.0, 0.0, 1.0), HalfPlane::new(0.0, 1.0, 1.0)]).unwrap();
        assert_eq!((s.x, s.y, s.value), (1.0, 1.0, 2.0));
        assert_eq!(s.active, vec![0, 1]);
    }

    #[test]
    fn two_by_two_cutset_instance() {
        let cons = [
            HalfPlane::new(2.0, 0.0, 2.0),
            HalfPlane::new(1.0, 1.0, 2.0),
            HalfPlane::new(0.0, 2.0, 2.0),
            HalfPlane::new(0.0, 1.0, 1.0),
        ];
        let s = solve_lp_2d(&cons).unwrap();
        assert_eq!((s.x, s.y, s.value), (1.0, 1.0, 2.0));
        assert!((grid_min(&cons, 4.0, 1e-3) - 2.0).abs() < 2e-3);
    }

    #[test]
    fn parallel_objective_ties_to_smallest_x() {
        let s = solve_lp_2d(&[HalfPlane::new(1.0, 1.0, 5.0)]).unwrap();
        assert_eq!(s.value, 5.0);
        assert_eq!((s.x, s.y), (0.0, 5.0));
        assert!(s.x_bound_active && !s.y_bound_active);
    }

    #[test]
    fn slack_constraints_are_harmless() {
        let s = solve_lp_2d(&[HalfPlane::new(3.0, 0.0, -4.0), HalfPlane::new(0.0, 1.0, 0.5)]).unwrap();
        assert_eq!((s.x, s.y), (0.0, 0.5));
        assert_eq!(s.active, vec![1]);
    }

    #[test]
    fn malformed_rejected() {
        assert_eq!(
            solve_lp_2d(&[HalfPlane::new(0.0, 0.0, 1.0)]),
            Err(Error::InvalidConstraint { index: 0 })
        );
        assert!(solve_lp_2d(&[HalfPlane::new(-1.0, 1.0, 1.0)]).is_err());
        assert!(solve_lp_2d(&[HalfPlane::new(f64::NAN, 1.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn matches_grid_oracle(raw in proptest::collection::vec((0.0f64..4.0, 0.0f64..4.0, -2.0f64..6.0), 1..6)) {
            let cons: Vec<HalfPlane> = raw
                .iter()
                .map(|&(a, b, c)| HalfPlane::new(a + 0.05, b, c))
                .collect();
            let s = solve_lp_2d(&cons).unwrap();
            for h in &cons {
                prop_assert!(h.is_satisfied(s.x, s.y));
            }
            prop_assert!(!s.active.is_empty() || s.x_bound_active || s.y_bound_active);
            // Any feasible point bounds the optimum; use it to size the grid.
            let upper = cons.iter().map(|h| (h.c / h.a).max(0.0)).fold(0.0, f64::max) + 1.0;
            let brute = grid_min(&cons, upper, 1e-3);
            prop_assert!(brute >= s.value - 1e-9);
            prop_assert!(brute <= s.value + 2e-3, "lp={} grid={}", s.value, brute);
        }
    }
}
