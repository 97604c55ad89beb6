//! Parameter sweeps and optimality checks over the achievable NDT and the
//! cut-set bounds.

use fran_core::bounds::{pipelined_lower_bound, serial_lower_bound};
use fran_core::formulas::{baseline_single_antenna_ndt, ndt_breakdown};
use fran_core::SystemConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Below this both a scheme and its bound count as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Tolerance of the pipelined optimality check.
pub const P1_TOL: f64 = 1e-9;

/// Largest serial ratio the approximation check accepts.
pub const P2_FACTOR: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("step must be in (0, 1] and divide 1 evenly, got {0}")]
    BadStep(f64),
    #[error("grid needs at least {min} points, got {got}")]
    BadGrid { min: usize, got: usize },
    #[error(transparent)]
    Model(#[from] fran_core::Error),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// `0, step, 2·step, ..., 1` computed as `i/n`, so the endpoints are exact.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(AnalysisError::BadStep(step));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(AnalysisError::BadStep(step));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// `points` values spaced evenly in `log10` between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(AnalysisError::BadGrid { min: 2, got: points });
    }
    let (a, b) = (lo.log10(), hi.log10());
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / last)).collect())
}

/// `dec / lb`, with `0/0 = 1`.
pub fn ratio(dec: f64, lb: f64) -> f64 {
    if dec.abs() < ZERO_TOL && lb.abs() < ZERO_TOL {
        1.0
    } else {
        dec / lb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu_t: f64,
    pub mu_r: f64,
    pub r: f64,
    pub delta_s_dec: f64,
    pub delta_p_dec: f64,
    pub delta_s_lb: f64,
    pub delta_p_lb: f64,
    pub gap_s: f64,
    pub gap_p: f64,
    pub ratio_s: f64,
    pub ratio_p: f64,
}

impl SweepRow {
    pub fn evaluate(cfg: &SystemConfig) -> Result<SweepRow> {
        let dec = ndt_breakdown(cfg)?;
        let s_lb = serial_lower_bound(cfg)?.delta_lb;
        let p_lb = pipelined_lower_bound(cfg)?;
        Ok(SweepRow {
            mu_t: cfg.mu_t,
            mu_r: cfg.mu_r,
            r: cfg.r,
            delta_s_dec: dec.serial,
            delta_p_dec: dec.pipelined,
            delta_s_lb: s_lb,
            delta_p_lb: p_lb,
            gap_s: dec.serial - s_lb,
            gap_p: dec.pipelined - p_lb,
            ratio_s: ratio(dec.serial, s_lb),
            ratio_p: ratio(dec.pipelined, p_lb),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPeak {
    pub gap: f64,
    pub mu_t: f64,
    pub mu_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSweep {
    pub kr: usize,
    pub r: f64,
    pub step: f64,
    /// `μt`-major, `μr`-minor.
    pub rows: Vec<SweepRow>,
    pub max_gap_s: GapPeak,
    pub max_gap_p: GapPeak,
}

fn peak(rows: &[SweepRow], gap: impl Fn(&SweepRow) -> f64) -> GapPeak {
    let mut best = GapPeak {
        gap: f64::NEG_INFINITY,
        mu_t: f64::NAN,
        mu_r: f64::NAN,
    };
    for row in rows {
        if gap(row) > best.gap {
            best = GapPeak {
                gap: gap(row),
                mu_t: row.mu_t,
                mu_r: row.mu_r,
            };
        }
    }
    best
}

/// Gap between achievable NDT and lower bound over the `(μt, μr)` square.
pub fn gap_sweep(kr: usize, r: f64, step: f64) -> Result<GapSweep> {
    let axis = unit_grid(step)?;
    let n = axis.len();
    let base = SystemConfig::two_en(kr, 0.0, 0.0, r).validate()?;
    base.require_two_ens()?;
    let rows = (0..n * n)
        .into_par_iter()
        .map(|i| SweepRow::evaluate(&base.with_mu_t(axis[i / n]).with_mu_r(axis[i % n])))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapSweep {
        kr,
        r,
        step,
        max_gap_s: peak(&rows, |row| row.gap_s),
        max_gap_p: peak(&rows, |row| row.gap_p),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub mu_r: f64,
    /// Two ENs caching the whole library.
    pub two_antenna: f64,
    /// A single transmitter with the whole library.
    pub single_antenna: f64,
    pub difference: f64,
}

/// Full EN caches (`μt = 1`) against the single-antenna baseline, over `μr`.
pub fn compare_baseline(kr: usize, step: f64) -> Result<Vec<BaselineRow>> {
    let base = SystemConfig::two_en(kr, 1.0, 0.0, 1.0).validate()?;
    base.require_two_ens()?;
    unit_grid(step)?
        .into_par_iter()
        .map(|mu_r| {
            let cfg = base.with_mu_r(mu_r);
            let two_antenna = ndt_breakdown(&cfg)?.serial;
            let single_antenna = baseline_single_antenna_ndt(&cfg);
            Ok(BaselineRow {
                mu_r,
                two_antenna,
                single_antenna,
                difference: single_antenna - two_antenna,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityGrid {
    pub mu_t_points: usize,
    pub r_points: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for OptimalityGrid {
    fn default() -> Self {
        OptimalityGrid {
            mu_t_points: 101,
            r_points: 50,
            r_min: 1e-2,
            r_max: 1e2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub mu_t: f64,
    pub r: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    /// Grid points inside the claimed region.
    pub checked: usize,
    pub max_ratio: f64,
    pub violations: Vec<GridPoint>,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub kr: usize,
    pub grid: OptimalityGrid,
    /// Pipelined NDT equals its lower bound.
    pub p1: PropertyCheck,
    /// Serial NDT is within a factor of three of its lower bound.
    pub p2: PropertyCheck,
    /// Grid points in neither region; nothing is claimed there.
    pub unverified: usize,
}

impl OptimalityReport {
    pub fn passed(&self) -> bool {
        self.p1.passed() && self.p2.passed()
    }
}

/// Region where the pipelined NDT is claimed optimal (`μr = 0`).
pub fn in_p1_region(mu_t: f64, r: f64) -> bool {
    r >= 1.0 - mu_t * mu_t || mu_t < 0.5
}

/// Region where the serial NDT is claimed within a factor of three (`μr = 0`).
pub fn in_p2_region(mu_t: f64, r: f64) -> bool {
    r >= 1.0 || mu_t <= std::f64::consts::SQRT_2 - 1.0
}

/// Checks both optimality claims at `μr = 0` over a `(μt, log r)` grid.
pub fn optimality_check(kr: usize, grid: OptimalityGrid) -> Result<OptimalityReport> {
    if grid.mu_t_points < 2 {
        return Err(AnalysisError::BadGrid {
            min: 2,
            got: grid.mu_t_points,
        });
    }
    let last = (grid.mu_t_points - 1) as f64;
    let mu_ts: Vec<f64> = (0..grid.mu_t_points).map(|i| i as f64 / last).collect();
    let rs = log_grid(grid.r_min, grid.r_max, grid.r_points)?;
    let base = SystemConfig::two_en(kr, 0.0, 0.0, 1.0).validate()?;
    base.require_two_ens()?;

    let n = rs.len();
    let rows = (0..mu_ts.len() * n)
        .into_par_iter()
        .map(|i| SweepRow::evaluate(&base.with_mu_t(mu_ts[i / n]).with_r(rs[i % n]).validate()?))
        .collect::<Result<Vec<_>>>()?;

    let mut p1 = PropertyCheck {
        name: "pipelined ratio = 1".into(),
        checked: 0,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    let mut p2 = PropertyCheck {
        name: format!("serial ratio <= {P2_FACTOR}"),
        checked: 0,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    let mut unverified = 0;
    for row in &rows {
        let (a, b) = (in_p1_region(row.mu_t, row.r), in_p2_region(row.mu_t, row.r));
        if a {
            p1.checked += 1;
            p1.max_ratio = p1.max_ratio.max(row.ratio_p);
            if (row.ratio_p - 1.0).abs() > P1_TOL {
                p1.violations.push(GridPoint {
                    mu_t: row.mu_t,
                    r: row.r,
                    ratio: row.ratio_p,
                });
            }
        }
        if b {
            p2.checked += 1;
            p2.max_ratio = p2.max_ratio.max(row.ratio_s);
            if row.ratio_s > P2_FACTOR {
                p2.violations.push(GridPoint {
                    mu_t: row.mu_t,
                    r: row.r,
                    ratio: row.ratio_s,
                });
            }
        }
        if !a && !b {
            unverified += 1;
        }
    }
    Ok(OptimalityReport {
        kr,
        grid,
        p1,
        p2,
        unverified,
    })
}
