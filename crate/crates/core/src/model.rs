//! Problem instances and the value types shared by every other module.
//!
//! Node subsets are bitmasks: EN `i` (1-based) is bit `i - 1` of
//! [`FragmentKey::en_set`], user `k` (1-based) is bit `k - 1` of
//! [`FragmentKey::user_set`]. Elsewhere in the crate users, ENs and files are
//! addressed by 0-based indices; only [`DemandVector`] entries are 1-based.

use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SystemConfig {
    /// Number of edge nodes.
    pub kt: usize,
    /// Number of users.
    pub kr: usize,
    /// Library size `N`.
    pub n_files: usize,
    /// Normalized EN cache size.
    pub mu_t: f64,
    /// Normalized user cache size.
    pub mu_r: f64,
    /// Fronthaul multiplexing gain: fronthaul capacity is `r·log P`.
    pub r: f64,
    /// Bits per file. Simulation only.
    pub file_bits: usize,
    /// Simulation only.
    pub seed: u64,
}

impl SystemConfig {
    /// A two-EN instance with `N = Kr` files (distinct worst-case demands).
    pub fn two_en(kr: usize, mu_t: f64, mu_r: f64, r: f64) -> Self {
        SystemConfig {
            kt: 2,
            kr,
            n_files: kr,
            mu_t,
            mu_r,
            r,
            file_bits: 10_000,
            seed: 0,
        }
    }

    pub fn with_mu_t(self, mu_t: f64) -> Self {
        SystemConfig { mu_t, ..self }
    }

    pub fn with_mu_r(self, mu_r: f64) -> Self {
        SystemConfig { mu_r, ..self }
    }

    pub fn with_r(self, r: f64) -> Self {
        SystemConfig { r, ..self }
    }

    pub fn with_file_bits(self, file_bits: usize) -> Self {
        SystemConfig { file_bits, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SystemConfig { seed, ..self }
    }

    pub fn validate(self) -> Result<Self> {
        validate_config(self)
    }

    /// The achievable scheme is defined for two ENs serving at least two users
    /// (zero-forcing over two antennas needs two receivers for DoF 2).
    pub fn require_two_ens(&self) -> Result<()> {
        if self.kt != 2 || self.kr < 2 {
            return Err(Error::UnsupportedTopology {
                kt: self.kt,
                kr: self.kr,
            });
        }
        Ok(())
    }
}

/// Returns `cfg` unchanged iff every range invariant holds.
pub fn validate_config(cfg: SystemConfig) -> Result<SystemConfig> {
    let unit = 0.0..=1.0;
    let bad = |field, reason| Err(Error::InvalidConfig { field, reason });
    if cfg.kt < 1 {
        return bad("kt", "must be >= 1");
    }
    if cfg.kr < 1 {
        return bad("kr", "must be >= 1");
    }
    if cfg.n_files < 1 {
        return bad("n_files", "must be >= 1");
    }
    if !unit.contains(&cfg.mu_t) {
        return bad("mu_t", "out of [0,1]");
    }
    if !unit.contains(&cfg.mu_r) {
        return bad("mu_r", "out of [0,1]");
    }
    if !cfg.r.is_finite() || cfg.r <= 0.0 {
        return bad("r", "must be > 0");
    }
    Ok(cfg)
}

/// Index of the fragment `W_{j,St,Sr}`: the bits cached at exactly the ENs in
/// `en_set` and exactly the users in `user_set`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FragmentKey {
    pub en_set: u32,
    pub user_set: u32,
}

impl FragmentKey {
    pub const EMPTY: FragmentKey = FragmentKey { en_set: 0, user_set: 0 };

    pub const fn new(en_set: u32, user_set: u32) -> Self {
        FragmentKey { en_set, user_set }
    }

    pub fn en_count(&self) -> usize {
        self.en_set.count_ones() as usize
    }

    pub fn user_count(&self) -> usize {
        self.user_set.count_ones() as usize
    }

    /// 0-based EN index.
    pub fn has_en(&self, en: usize) -> bool {
        self.en_set >> en & 1 == 1
    }

    /// 0-based user index.
    pub fn has_user(&self, user: usize) -> bool {
        self.user_set >> user & 1 == 1
    }

    /// Position of this key in [`enumerate_fragment_keys`] order.
    pub fn index(&self, kr: usize) -> usize {
        ((self.en_set as usize) << kr) | self.user_set as usize
    }

    pub fn from_index(index: usize, kr: usize) -> Self {
        FragmentKey {
            en_set: (index >> kr) as u32,
            user_set: (index & ((1 << kr) - 1)) as u32,
        }
    }
}

/// Compact notation: `(12,2)` is EN set {1,2} and user set {2}; `0` is
/// the empty set.
impl fmt::Display for FragmentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(f: &mut fmt::Formatter<'_>, mask: u32) -> fmt::Result {
            if mask == 0 {
                return f.write_str("0");
            }
            let mut first = true;
            for i in 0..32 {
                if mask >> i & 1 == 1 {
                    // Multi-digit indices need a separator to stay unambiguous.
                    if !first && i >= 9 {
                        f.write_str(".")?;
                    }
                    write!(f, "{}", i + 1)?;
                    first = false;
                }
            }
            Ok(())
        }
        f.write_str("(")?;
        set(f, self.en_set)?;
        f.write_str(",")?;
        set(f, self.user_set)?;
        f.write_str(")")
    }
}

/// All `2^(kt+kr)` fragment keys, ordered lexicographically by
/// `(en_set, user_set)` as integers.
///
/// # Panics
///
/// If `kt + kr >= 32`.
pub fn enumerate_fragment_keys(kt: usize, kr: usize) -> Vec<FragmentKey> {
    assert!(kt + kr < 32, "kt + kr must be below 32");
    (0..1usize << (kt + kr))
        .map(|i| FragmentKey::from_index(i, kr))
        .collect()
}

/// Requested files, one per user, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DemandVector {
    demands: Vec<usize>,
}

impl DemandVector {
    pub fn new(demands: Vec<usize>, kr: usize, n_files: usize) -> Result<Self> {
        if demands.len() != kr {
            return Err(Error::DemandLength {
                expected: kr,
                got: demands.len(),
            });
        }
        for (user, &file) in demands.iter().enumerate() {
            if file == 0 || file > n_files {
                return Err(Error::InvalidDemand { user, file, n_files });
            }
        }
        Ok(DemandVector { demands })
    }

    /// User `k` requests file `k`; needs `n_files >= kr`.
    pub fn worst_case(kr: usize, n_files: usize) -> Result<Self> {
        if n_files < kr {
            return Err(Error::Precondition("distinct worst-case demands need n_files >= kr"));
        }
        DemandVector::new((1..=kr).collect(), kr, n_files)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.demands
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    /// 0-based file index requested by 0-based `user`.
    pub fn file_of(&self, user: usize) -> usize {
        self.demands[user] - 1
    }

    pub fn is_distinct(&self) -> bool {
        self.demands
            .iter()
            .enumerate()
            .all(|(i, d)| !self.demands[..i].contains(d))
    }
}

/// Delivery stage. Stages 1-4 are common to both schemes; stage 5 is
/// either 5a (interference alignment) or 5b (fronthaul exchange + ZF).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Stage {
    #[cfg_attr(feature = "serde", serde(rename = "1"))]
    S1,
    #[cfg_attr(feature = "serde", serde(rename = "2"))]
    S2,
    #[cfg_attr(feature = "serde", serde(rename = "3"))]
    S3,
    #[cfg_attr(feature = "serde", serde(rename = "4"))]
    S4,
    #[cfg_attr(feature = "serde", serde(rename = "5a"))]
    S5a,
    #[cfg_attr(feature = "serde", serde(rename = "5b"))]
    S5b,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::S5a, Stage::S5b];
    pub const COMMON: [Stage; 4] = [Stage::S1, Stage::S2, Stage::S3, Stage::S4];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::S1 => "1",
            Stage::S2 => "2",
            Stage::S3 => "3",
            Stage::S4 => "4",
            Stage::S5a => "5a",
            Stage::S5b => "5b",
        }
    }

    pub fn belongs_to(&self, scheme: Scheme) -> bool {
        match self {
            Stage::S5a => scheme == Scheme::A,
            Stage::S5b => scheme == Scheme::B,
            _ => true,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stage-5 variant a delivery uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scheme {
    A,
    B,
}

impl Scheme {
    pub fn stage5(&self) -> Stage {
        match self {
            Scheme::A => Stage::S5a,
            Scheme::B => Stage::S5b,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::A => "a",
            Scheme::B => "b",
        })
    }
}

/// Serial transmission adds fronthaul and edge NDT; pipelined takes the max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Transmission {
    Serial,
    Pipelined,
}

/// Fronthaul and edge NDT of one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StageNdt {
    pub stage: Stage,
    pub fronthaul: f64,
    pub edge: f64,
}

/// A `(δF, δE)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NdtPair {
    pub fronthaul: f64,
    pub edge: f64,
}

impl NdtPair {
    pub fn serial(&self) -> f64 {
        self.fronthaul + self.edge
    }

    pub fn pipelined(&self) -> f64 {
        self.fronthaul.max(self.edge)
    }

    pub fn under(&self, mode: Transmission) -> f64 {
        match mode {
            Transmission::Serial => self.serial(),
            Transmission::Pipelined => self.pipelined(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NdtBreakdown {
    pub per_stage: Vec<StageNdt>,
    pub scheme_a: NdtPair,
    pub scheme_b: NdtPair,
    pub serial: f64,
    pub pipelined: f64,
}

impl NdtBreakdown {
    /// Aggregates per-stage NDTs. Stages missing from `per_stage` count as zero.
    pub fn from_stages(per_stage: Vec<StageNdt>) -> Self {
        let sum = |scheme: Scheme| {
            per_stage
                .iter()
                .filter(|s| s.stage.belongs_to(scheme))
                .fold(NdtPair::default(), |acc, s| NdtPair {
                    fronthaul: acc.fronthaul + s.fronthaul,
                    edge: acc.edge + s.edge,
                })
        };
        let scheme_a = sum(Scheme::A);
        let scheme_b = sum(Scheme::B);
        NdtBreakdown {
            serial: scheme_a.serial().min(scheme_b.serial()),
            pipelined: scheme_a.pipelined().min(scheme_b.pipelined()),
            per_stage,
            scheme_a,
            scheme_b,
        }
    }

    pub fn scheme(&self, scheme: Scheme) -> NdtPair {
        match scheme {
            Scheme::A => self.scheme_a,
            Scheme::B => self.scheme_b,
        }
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageNdt> {
        self.per_stage.iter().find(|s| s.stage == stage)
    }
}
