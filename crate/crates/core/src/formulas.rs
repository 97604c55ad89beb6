//! Closed-form NDTs of the two-EN decentralized scheme.
//!
//! Every stage NDT is evaluated through binomial sums that are polynomial in
//! `μr`, so `μr = 0` and `μt ∈ {0, 1}` need no special handling. The `1/μr`
//! closed forms in [`closed_form`] and the special-case expressions
//! ([`miso_special_ndt`], [`en_only_ndt`], [`baseline_single_antenna_ndt`]) are
//! independent evaluation routes kept for cross-validation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{NdtBreakdown, NdtPair, Scheme, Stage, StageNdt, SystemConfig, Transmission};
use crate::num::{one_minus_pow_complement, powi};

/// Degrees of freedom of each transmission mode.
pub mod dof {
    /// Cooperative zero-forcing from two ENs: `min(Kt, Kr) = 2`.
    pub const ZERO_FORCING: f64 = 2.0;
    /// A single multicast stream.
    pub const MULTICAST: f64 = 1.0;

    /// Interference alignment over the `2 × Kr` X-channel.
    pub fn x_channel(kr: usize) -> f64 {
        2.0 * kr as f64 / (kr as f64 + 1.0)
    }
}

/// Largest `Kr` for which the floating-point binomial recurrence stays finite.
pub const MAX_USERS: usize = 1000;

fn check(cfg: &SystemConfig) -> Result<()> {
    cfg.require_two_ens()?;
    if cfg.kr > MAX_USERS {
        return Err(Error::OutOfRange {
            what: "kr",
            value: cfg.kr,
            max: MAX_USERS,
        });
    }
    Ok(())
}

/// Expected fraction of a file cached at exactly `st_size` given ENs and
/// `sr_size` given users.
pub fn expected_fragment_fraction(cfg: &SystemConfig, st_size: usize, sr_size: usize) -> Result<f64> {
    if st_size > cfg.kt {
        return Err(Error::OutOfRange {
            what: "st_size",
            value: st_size,
            max: cfg.kt,
        });
    }
    if sr_size > cfg.kr {
        return Err(Error::OutOfRange {
            what: "sr_size",
            value: sr_size,
            max: cfg.kr,
        });
    }
    let (kt, kr) = (cfg.kt as u32, cfg.kr as u32);
    let (st, sr) = (st_size as u32, sr_size as u32);
    Ok(powi(cfg.mu_t, st) * powi(1.0 - cfg.mu_t, kt - st) * powi(cfg.mu_r, sr) * powi(1.0 - cfg.mu_r, kr - sr))
}

/// `Σ_{i=2}^{Kr} C(Kr,i) μr^{i-1} (1-μr)^{Kr-i+1}`: expected multicast load per
/// unit of EN-side probability mass.
fn multicast_user_sum(kr: usize, mu_r: f64) -> f64 {
    let kr32 = kr as u32;
    let mut binom = 1.0;
    let mut total = 0.0;
    for i in 1..=kr32 {
        binom = binom * (kr32 - i + 1) as f64 / i as f64;
        if i >= 2 {
            total += binom * powi(mu_r, i - 1) * powi(1.0 - mu_r, kr32 - i + 1);
        }
    }
    total
}

/// Stage-2 multicast load `R⁽²⁾/F`.
pub fn multicast_rate_r2(cfg: &SystemConfig) -> Result<f64> {
    check(cfg)?;
    Ok(powi(1.0 - cfg.mu_t, 2) * multicast_user_sum(cfg.kr, cfg.mu_r))
}

/// Stage-3 multicast load `R⁽³⁾/F`, summed over the EN subsets {1}, {2}, {1,2}.
pub fn multicast_rate_r3(cfg: &SystemConfig) -> Result<f64> {
    check(cfg)?;
    let users = multicast_user_sum(cfg.kr, cfg.mu_r);
    let mut total = 0.0;
    for (t, subsets) in [(1u32, 2.0), (2, 1.0)] {
        total += subsets * powi(cfg.mu_t, t) * powi(1.0 - cfg.mu_t, 2 - t) * users;
    }
    Ok(total)
}

pub fn stage_ndt(cfg: &SystemConfig, stage: Stage) -> Result<StageNdt> {
    check(cfg)?;
    let kr = cfg.kr as f64;
    let (mt, r) = (cfg.mu_t, cfg.r);
    let untouched = powi(1.0 - cfg.mu_r, cfg.kr as u32);
    let (fronthaul, edge) = match stage {
        Stage::S1 => {
            let edge = kr / dof::ZERO_FORCING * powi(1.0 - mt, 2) * untouched;
            (edge / r, edge)
        }
        Stage::S2 => {
            let load = multicast_rate_r2(cfg)?;
            (load / r, load / dof::MULTICAST)
        }
        Stage::S3 => (0.0, multicast_rate_r3(cfg)? / dof::MULTICAST),
        Stage::S4 => (0.0, kr / dof::ZERO_FORCING * mt * mt * untouched),
        Stage::S5a => {
            let bits = 2.0 * kr * mt * (1.0 - mt) * untouched;
            (0.0, bits / dof::x_channel(cfg.kr))
        }
        Stage::S5b => {
            let edge = 2.0 * kr * mt * (1.0 - mt) * untouched / dof::ZERO_FORCING;
            // Kr fragments cross-shipped on each of the two links in parallel.
            (kr * mt * (1.0 - mt) * untouched / r, edge)
        }
    };
    Ok(StageNdt { stage, fronthaul, edge })
}

pub fn ndt_breakdown(cfg: &SystemConfig) -> Result<NdtBreakdown> {
    let per_stage = Stage::ALL
        .iter()
        .map(|&s| stage_ndt(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(NdtBreakdown::from_stages(per_stage))
}

/// Componentwise stage sum for one scheme.
pub fn scheme_ndt(cfg: &SystemConfig, scheme: Scheme) -> Result<NdtPair> {
    let mut acc = NdtPair::default();
    for stage in Stage::COMMON.iter().copied().chain([scheme.stage5()]) {
        let s = stage_ndt(cfg, stage)?;
        acc.fronthaul += s.fronthaul;
        acc.edge += s.edge;
    }
    Ok(acc)
}

/// Achievable NDT for serial transmission: best scheme by `δF + δE`.
pub fn serial_ndt(cfg: &SystemConfig) -> Result<f64> {
    Ok(ndt_breakdown(cfg)?.serial)
}

/// Achievable NDT for pipelined transmission: best scheme by `max(δF, δE)`.
pub fn pipelined_ndt(cfg: &SystemConfig) -> Result<f64> {
    Ok(ndt_breakdown(cfg)?.pipelined)
}

/// Scheme minimizing the NDT under `mode`; ties go to scheme a.
pub fn best_scheme(cfg: &SystemConfig, mode: Transmission) -> Result<Scheme> {
    let b = ndt_breakdown(cfg)?;
    Ok(if b.scheme_b.under(mode) < b.scheme_a.under(mode) {
        Scheme::B
    } else {
        Scheme::A
    })
}

/// `[1 - (1-μr)^Kr - c·μr(1-μr)^{Kr-1}]`, the bracket shared by the closed forms.
fn bracket(kr: usize, mu_r: f64, c: f64) -> f64 {
    let kr32 = kr as u32;
    one_minus_pow_complement(mu_r, kr32) - c * mu_r * powi(1.0 - mu_r, kr32 - 1)
}

/// NDT when every EN caches the whole library (`μt = 1`): a two-antenna
/// broadcast channel with decentralized user caches.
pub fn miso_special_ndt(cfg: &SystemConfig) -> f64 {
    let (kr, mu_r) = (cfg.kr, cfg.mu_r);
    if mu_r == 0.0 {
        return kr as f64 / 2.0;
    }
    (1.0 - mu_r) / mu_r * bracket(kr, mu_r, kr as f64 / 2.0)
}

/// Single-antenna decentralized coded caching baseline, in NDT units.
pub fn baseline_single_antenna_ndt(cfg: &SystemConfig) -> f64 {
    let (kr, mu_r) = (cfg.kr, cfg.mu_r);
    if mu_r == 0.0 {
        return kr as f64;
    }
    (1.0 - mu_r) / mu_r * one_minus_pow_complement(mu_r, kr as u32)
}

/// Fronthaul-gain breakpoints `(r1, r2)` of the EN-cache-only pipelined NDT.
pub fn en_only_breakpoints(cfg: &SystemConfig) -> (f64, f64) {
    let mt = cfg.mu_t;
    let r1 = 1.0 - mt * mt;
    let r2 = (1.0 - mt) * (1.0 - mt) / (1.0 + 2.0 * mt * (1.0 - mt) / cfg.kr as f64);
    (r1, r2)
}

/// Piecewise NDT with caches at the ENs only (`μr = 0`).
///
/// The pipelined expression is the published piecewise simplification. It
/// coincides with [`pipelined_ndt`] except for
/// `r2 ≤ r < (1-μt²)/(1 + 2μt(1-μt)/Kr)`, where scheme a is strictly better
/// and this expression overestimates.
pub fn en_only_ndt(cfg: &SystemConfig, mode: Transmission) -> Result<f64> {
    check(cfg)?;
    if cfg.mu_r != 0.0 {
        return Err(Error::Precondition("en_only_ndt requires mu_r = 0"));
    }
    let (kr, mt, r) = (cfg.kr as f64, cfg.mu_t, cfg.r);
    Ok(match mode {
        Transmission::Serial if r <= kr => kr / 2.0 * ((1.0 - mt) * (1.0 - mt) / r + 1.0) + mt * (1.0 - mt),
        Transmission::Serial => kr / 2.0 * ((1.0 - mt * mt) / r + 1.0),
        Transmission::Pipelined => {
            let (r1, r2) = en_only_breakpoints(cfg);
            if r >= r1 {
                kr / 2.0
            } else if r >= r2 {
                kr / (2.0 * r) * (1.0 - mt * mt)
            } else {
                kr / (2.0 * r) * (1.0 - mt) * (1.0 - mt)
            }
        }
    })
}

/// The `1/μr` closed forms. Defined for `μr > 0` only; `None` at `μr = 0`.
pub mod closed_form {
    use super::*;

    pub fn rate_r2(cfg: &SystemConfig) -> Option<f64> {
        let mu_r = cfg.mu_r;
        (mu_r > 0.0).then(|| powi(1.0 - cfg.mu_t, 2) * (1.0 - mu_r) / mu_r * bracket(cfg.kr, mu_r, cfg.kr as f64))
    }

    pub fn rate_r3(cfg: &SystemConfig) -> Option<f64> {
        let mu_r = cfg.mu_r;
        (mu_r > 0.0)
            .then(|| (1.0 - powi(1.0 - cfg.mu_t, 2)) * (1.0 - mu_r) / mu_r * bracket(cfg.kr, mu_r, cfg.kr as f64))
    }

    /// Aggregate `(δF, δE)` of a scheme. Scheme b's fronthaul term divides by
    /// `1 - μt`, so it is `None` at `μt = 1` as well.
    pub fn scheme(cfg: &SystemConfig, scheme: Scheme) -> Option<NdtPair> {
        let (kr, mt, mr, r) = (cfg.kr, cfg.mu_t, cfg.mu_r, cfg.r);
        if mr <= 0.0 {
            return None;
        }
        let half = kr as f64 / 2.0;
        let lead = (1.0 - mr) / mr;
        let en_miss = (1.0 - mt) * (1.0 - mt);
        match scheme {
            Scheme::A => Some(NdtPair {
                fronthaul: en_miss * lead / r * bracket(kr, mr, half),
                edge: lead * bracket(kr, mr, half - mt * (1.0 - mt)),
            }),
            Scheme::B => (mt < 1.0).then(|| NdtPair {
                fronthaul: en_miss * lead / r * bracket(kr, mr, half * (1.0 - 3.0 * mt) / (1.0 - mt)),
                edge: lead * bracket(kr, mr, half),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kr: usize, mu_t: f64, mu_r: f64, r: f64) -> SystemConfig {
        SystemConfig::two_en(kr, mu_t, mu_r, r)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    /// Oracle: enumerate user subsets one by one instead of binomial counts.
    fn r2_by_subsets(kr: usize, mu_t: f64, mu_r: f64) -> f64 {
        let mut total = 0.0;
        for mask in 0u32..1 << kr {
            let i = mask.count_ones() as i32;
            if i >= 2 {
                total += (1.0 - mu_t).powi(2) * mu_r.powi(i - 1) * (1.0 - mu_r).powi(kr as i32 - i + 1);
            }
        }
        total
    }

    #[test]
    fn example_fragment_fraction() {
        let c = cfg(2, 0.5, 0.5, 1.0);
        assert_eq!(expected_fragment_fraction(&c, 1, 1).unwrap(), 1.0 / 16.0);
        assert_eq!(expected_fragment_fraction(&c.with_mu_t(0.0), 1, 0).unwrap(), 0.0);
        assert!(expected_fragment_fraction(&c, 3, 0).is_err());
        assert!(expected_fragment_fraction(&c, 0, 3).is_err());
    }

    #[test]
    fn fragment_fractions_partition_unity() {
        let c = SystemConfig {
            kt: 3,
            ..cfg(5, 0.37, 0.81, 1.0)
        };
        let choose = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let mut total = 0.0;
        for t in 0..=3 {
            for i in 0..=5 {
                total += choose(3, t) * choose(5, i) * expected_fragment_fraction(&c, t, i).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stage_examples() {
        let s1 = stage_ndt(&cfg(2, 0.0, 0.0, 1.0), Stage::S1).unwrap();
        assert_eq!((s1.fronthaul, s1.edge), (1.0, 1.0));
        let s4 = stage_ndt(&cfg(2, 0.0, 0.3, 1.0), Stage::S4).unwrap();
        assert_eq!((s4.fronthaul, s4.edge), (0.0, 0.0));
        let s5a = stage_ndt(&cfg(3, 0.5, 0.0, 1.0), Stage::S5a).unwrap();
        assert!(close(s5a.edge, 1.0, 1e-15));
        // Cross-check: 2Kr fragments of size μt(1-μt) at X-channel DoF 2Kr/(Kr+1).
        assert!(close(s5a.edge, 6.0 * 0.25 / (6.0 / 4.0), 1e-15));
        assert_eq!(s5a.fronthaul, 0.0);
    }

    #[test]
    fn stage_fronthaul_zero_where_cached() {
        let c = cfg(4, 0.4, 0.2, 0.7);
        for s in [Stage::S3, Stage::S4, Stage::S5a] {
            assert_eq!(stage_ndt(&c, s).unwrap().fronthaul, 0.0);
        }
    }

    #[test]
    fn topology_rejected() {
        let c = SystemConfig {
            kt: 3,
            ..cfg(2, 0.5, 0.5, 1.0)
        };
        assert!(matches!(
            stage_ndt(&c, Stage::S1),
            Err(Error::UnsupportedTopology { .. })
        ));
        assert!(serial_ndt(&c).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!(close(multicast_rate_r2(&cfg(2, 0.0, 0.5, 1.0)).unwrap(), 0.25, 1e-15));
        assert_eq!(multicast_rate_r2(&cfg(5, 0.3, 0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(multicast_rate_r2(&cfg(5, 1.0, 0.4, 1.0)).unwrap(), 0.0);
        assert_eq!(multicast_rate_r3(&cfg(5, 0.0, 0.4, 1.0)).unwrap(), 0.0);
        assert!(close(multicast_rate_r3(&cfg(2, 1.0, 0.5, 1.0)).unwrap(), 0.25, 1e-15));
        let c = cfg(7, 0.3, 0.45, 1.0);
        let ratio = multicast_rate_r3(&c).unwrap() / multicast_rate_r2(&c).unwrap();
        assert!(close(ratio, (1.0 - 0.49) / 0.49, 1e-13));
    }

    #[test]
    fn rate_r2_matches_subset_enumeration() {
        for kr in 2..=10 {
            for &(mt, mr) in &[(0.0, 0.5), (0.3, 0.1), (0.9, 0.77), (0.5, 1.0)] {
                let got = multicast_rate_r2(&cfg(kr, mt, mr, 1.0)).unwrap();
                assert!(close(got, r2_by_subsets(kr, mt, mr), 1e-13), "kr={kr} mt={mt} mr={mr}");
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_sums() {
        for &(kr, mt, mr, r) in &[(2, 0.1, 0.3, 0.5), (10, 0.5, 0.5, 2.0), (150, 0.77, 0.02, 20.0)] {
            let c = cfg(kr, mt, mr, r);
            assert!(close(
                closed_form::rate_r2(&c).unwrap(),
                multicast_rate_r2(&c).unwrap(),
                1e-12
            ));
            assert!(close(
                closed_form::rate_r3(&c).unwrap(),
                multicast_rate_r3(&c).unwrap(),
                1e-12
            ));
            for s in [Scheme::A, Scheme::B] {
                let sum = scheme_ndt(&c, s).unwrap();
                let cf = closed_form::scheme(&c, s).unwrap();
                assert!(close(cf.fronthaul, sum.fronthaul, 1e-12));
                assert!(close(cf.edge, sum.edge, 1e-12));
            }
        }
        assert!(closed_form::rate_r2(&cfg(3, 0.2, 0.0, 1.0)).is_none());
    }

    #[test]
    fn scheme_examples() {
        // μt = 0, μr = 0, r = 1, Kr = 4: only stage 1 carries load.
        let b = scheme_ndt(&cfg(4, 0.0, 0.0, 1.0), Scheme::B).unwrap();
        assert_eq!((b.fronthaul, b.edge), (2.0, 2.0));
        assert_eq!(b.serial(), 4.0);

        let c = cfg(5, 1.0, 0.35, 1.3);
        let a = scheme_ndt(&c, Scheme::A).unwrap();
        assert_eq!(a.fronthaul, 0.0);
        let e3 = stage_ndt(&c, Stage::S3).unwrap().edge;
        let e4 = stage_ndt(&c, Stage::S4).unwrap().edge;
        assert!(close(a.edge, e3 + e4, 1e-15));

        let c = cfg(6, 0.4, 0.2, 0.8);
        let (a, b) = (scheme_ndt(&c, Scheme::A).unwrap(), scheme_ndt(&c, Scheme::B).unwrap());
        let (s5a, s5b) = (stage_ndt(&c, Stage::S5a).unwrap(), stage_ndt(&c, Stage::S5b).unwrap());
        assert!(close(a.edge - s5a.edge, b.edge - s5b.edge, 1e-14));
        assert!(close(a.fronthaul - s5a.fronthaul, b.fronthaul - s5b.fronthaul, 1e-14));
    }

    #[test]
    fn serial_examples() {
        assert_eq!(serial_ndt(&cfg(2, 0.0, 0.0, 1.0)).unwrap(), 2.0);
        assert_eq!(serial_ndt(&cfg(7, 0.4, 1.0, 1.0)).unwrap(), 0.0);
        assert!(close(serial_ndt(&cfg(4, 0.0, 0.0, 100.0)).unwrap(), 2.02, 1e-14));
        // At μt = 0.3 the tie is broken; scheme b must win for r > Kr.
        assert_eq!(
            best_scheme(&cfg(4, 0.3, 0.0, 100.0), Transmission::Serial).unwrap(),
            Scheme::B
        );
        assert_eq!(
            best_scheme(&cfg(4, 0.3, 0.0, 1.0), Transmission::Serial).unwrap(),
            Scheme::A
        );
    }

    #[test]
    fn pipelined_examples() {
        assert_eq!(pipelined_ndt(&cfg(2, 0.0, 0.0, 1.0)).unwrap(), 1.0);
        assert_eq!(pipelined_ndt(&cfg(9, 0.6, 1.0, 0.3)).unwrap(), 0.0);
        // Scheme a: max(10·0.25, 5 + 0.25) = 5.25; scheme b: max(10·0.75, 5) = 7.5.
        let c = cfg(10, 0.5, 0.0, 0.5);
        assert!(close(pipelined_ndt(&c).unwrap(), 5.25, 1e-14));
        assert!(close(en_only_ndt(&c, Transmission::Pipelined).unwrap(), 7.5, 1e-14));
        let (r1, r2) = en_only_breakpoints(&c);
        assert!(close(r1, 0.75, 1e-15));
        assert!(close(r2, 0.25 / 1.05, 1e-15));
    }

    #[test]
    fn miso_examples() {
        assert_eq!(miso_special_ndt(&cfg(10, 1.0, 1.0, 1.0)), 0.0);
        assert_eq!(miso_special_ndt(&cfg(10, 1.0, 0.0, 1.0)), 5.0);
        let near = miso_special_ndt(&cfg(10, 1.0, 1e-8, 1.0));
        assert!((near - 5.0).abs() < 1e-6);
        for &mr in &[0.0, 0.05, 0.5, 0.93, 1.0] {
            let c = cfg(10, 1.0, mr, 1.0);
            assert!(close(miso_special_ndt(&c), serial_ndt(&c).unwrap(), 1e-12));
        }
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(baseline_single_antenna_ndt(&cfg(10, 1.0, 1.0, 1.0)), 0.0);
        let c = cfg(10, 1.0, 0.5, 1.0);
        let diff = baseline_single_antenna_ndt(&c) - miso_special_ndt(&c);
        assert!((diff - 5.0 / 1024.0).abs() < 1e-12);
        let near = baseline_single_antenna_ndt(&cfg(10, 1.0, 1e-8, 1.0));
        assert!((near - 10.0).abs() < 1e-6);
        assert_eq!(baseline_single_antenna_ndt(&cfg(10, 1.0, 0.0, 1.0)), 10.0);
    }

    #[test]
    fn en_only_examples() {
        assert_eq!(en_only_ndt(&cfg(4, 0.0, 0.0, 1.0), Transmission::Serial).unwrap(), 4.0);
        for r in [0.01, 0.5, 3.0] {
            assert_eq!(en_only_ndt(&cfg(6, 1.0, 0.0, r), Transmission::Pipelined).unwrap(), 3.0);
        }
        assert!(matches!(
            en_only_ndt(&cfg(4, 0.0, 0.1, 1.0), Transmission::Serial),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn en_only_against_stage_sums() {
        for kr in [2usize, 5, 10, 40] {
            for i in 0..=20 {
                let mt = i as f64 / 20.0;
                for &r in &[0.01, 0.1, 0.3, 0.6, 0.9, 1.0, 2.0, 7.0, 50.0, 300.0] {
                    let c = cfg(kr, mt, 0.0, r);
                    let serial = en_only_ndt(&c, Transmission::Serial).unwrap();
                    assert!(close(serial, serial_ndt(&c).unwrap(), 1e-12));

                    let piecewise = en_only_ndt(&c, Transmission::Pipelined).unwrap();
                    let exact = pipelined_ndt(&c).unwrap();
                    let (_, r2) = en_only_breakpoints(&c);
                    let r3 = (1.0 - mt * mt) / (1.0 + 2.0 * mt * (1.0 - mt) / kr as f64);
                    if r >= r2 && r < r3 {
                        assert!(piecewise >= exact - 1e-12);
                    } else {
                        assert!(close(piecewise, exact, 1e-12), "kr={kr} mt={mt} r={r}");
                    }
                }
            }
        }
    }
}
