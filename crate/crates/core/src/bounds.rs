//! Cut-set lower bounds on the NDT for any number of ENs.
//!
//! For each `s ∈ [0, min(Kt, Kr)]` the received signals of `s` users, the caches
//! and fronthaul messages of `Kt - s` ENs, and all user caches must together
//! determine the `Kr` requested files, giving
//! `s·δE + (Kt - s)·r·δF ≥ f(s)`. A single-user cut adds `δE ≥ 1 - μr`.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp_2d, HalfPlane};
use crate::model::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CutsetConstraint {
    pub s: usize,
    pub edge_coeff: f64,
    pub fronthaul_coeff: f64,
    pub rhs: f64,
}

impl CutsetConstraint {
    pub fn is_satisfied(&self, delta_f: f64, delta_e: f64) -> bool {
        self.half_plane().is_satisfied(delta_f, delta_e)
    }

    /// As a half-plane over `(x, y) = (δF, δE)`.
    pub fn half_plane(&self) -> HalfPlane {
        HalfPlane::new(self.fronthaul_coeff, self.edge_coeff, self.rhs)
    }
}

/// Serial lower bound `δLB = δF + δE` at the LP optimum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LowerBoundResult {
    pub delta_f: f64,
    pub delta_e: f64,
    pub delta_lb: f64,
    /// Values of `s` whose cut-set constraint is tight at the optimum.
    pub active_constraints: Vec<usize>,
    /// `δF ≥ 0` is tight.
    pub fronthaul_floor_active: bool,
    /// `δE ≥ 1 - μr` is tight.
    pub edge_floor_active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PipelinedBound {
    pub value: f64,
    /// The maximizing `s`, or `None` when the `1 - μr` floor dominates.
    pub argmax_s: Option<usize>,
}

fn max_s(cfg: &SystemConfig) -> usize {
    cfg.kt.min(cfg.kr)
}

/// `f(s) = Kr(1 - s·μr) - (Kr - s)[(Kr - s)μr + (Kt - s)μt]`. May be negative.
pub fn cutset_f(cfg: &SystemConfig, s: usize) -> Result<f64> {
    let max = max_s(cfg);
    if s > max {
        return Err(Error::OutOfRange {
            what: "s",
            value: s,
            max,
        });
    }
    let (kt, kr, s) = (cfg.kt as f64, cfg.kr as f64, s as f64);
    Ok(kr * (1.0 - s * cfg.mu_r) - (kr - s) * ((kr - s) * cfg.mu_r + (kt - s) * cfg.mu_t))
}

pub fn cutset_constraints(cfg: &SystemConfig) -> Vec<CutsetConstraint> {
    (0..=max_s(cfg))
        .map(|s| CutsetConstraint {
            s,
            edge_coeff: s as f64,
            fronthaul_coeff: (cfg.kt - s) as f64 * cfg.r,
            rhs: cutset_f(cfg, s).expect("s within range"),
        })
        .collect()
}

fn require_positive_r(cfg: &SystemConfig) -> Result<()> {
    if cfg.r.is_nan() || cfg.r <= 0.0 {
        return Err(Error::InvalidConfig {
            field: "r",
            reason: "must be > 0",
        });
    }
    Ok(())
}

/// Solves `min δF + δE` over the cut-set constraints with `δF ≥ 0`,
/// `δE ≥ 1 - μr`.
pub fn serial_lower_bound(cfg: &SystemConfig) -> Result<LowerBoundResult> {
    require_positive_r(cfg)?;
    let cuts = cutset_constraints(cfg);
    let mut planes: Vec<HalfPlane> = cuts.iter().map(CutsetConstraint::half_plane).collect();
    let floor_index = planes.len();
    planes.push(HalfPlane::new(0.0, 1.0, 1.0 - cfg.mu_r));

    let sol = solve_lp_2d(&planes)?;
    Ok(LowerBoundResult {
        delta_f: sol.x,
        delta_e: sol.y,
        delta_lb: sol.value,
        active_constraints: sol
            .active
            .iter()
            .filter(|&&i| i < floor_index)
            .map(|&i| cuts[i].s)
            .collect(),
        fronthaul_floor_active: sol.x_bound_active,
        edge_floor_active: sol.active.contains(&floor_index),
    })
}

/// `max(max_s f(s) / (s + (Kt - s)·r), 1 - μr)` with its maximizer.
pub fn pipelined_lower_bound_detail(cfg: &SystemConfig) -> Result<PipelinedBound> {
    require_positive_r(cfg)?;
    let mut best = PipelinedBound {
        value: 1.0 - cfg.mu_r,
        argmax_s: None,
    };
    for cut in cutset_constraints(cfg) {
        let denom = cut.edge_coeff + cut.fronthaul_coeff;
        if denom <= 0.0 {
            continue;
        }
        let term = cut.rhs / denom;
        if term > best.value {
            best = PipelinedBound {
                value: term,
                argmax_s: Some(cut.s),
            };
        }
    }
    Ok(best)
}

pub fn pipelined_lower_bound(cfg: &SystemConfig) -> Result<f64> {
    Ok(pipelined_lower_bound_detail(cfg)?.value)
}
