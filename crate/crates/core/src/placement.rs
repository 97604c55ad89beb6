//! Bit-level decentralized placement.
//!
//! Every EN caches a uniformly random subset of exactly `⌊μt·F⌋` bits of every
//! file, and every user one of exactly `⌊μr·F⌋` bits, independently across
//! nodes and files. Each `(node, file)` pair draws from its own ChaCha stream,
//! so a placement is reproducible node by node from the seed alone.

use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::error::{Error, Result};
use crate::formulas::expected_fragment_fraction;
use crate::model::{enumerate_fragment_keys, validate_config, FragmentKey, SystemConfig};
use crate::num::floor_tolerant;

/// Fragments with fewer expected bits are reported without a relative error.
pub const MIN_EXPECTED_BITS_FOR_ERROR: f64 = 1000.0;

/// Largest number of users the bit-level simulator accepts.
pub const MAX_SIM_USERS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    En = 0,
    User = 1,
}

/// Payload bit `bit` of library file `file`: a fixed pseudorandom function,
/// standing in for real file contents.
pub fn content_bit(file: usize, bit: usize) -> bool {
    // splitmix64 finalizer
    let mut z = ((file as u64) << 40 ^ bit as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) & 1 == 1
}

/// Exact number of bits a node with normalized cache size `mu` stores per file.
pub fn cached_bits_per_file(mu: f64, file_bits: usize) -> usize {
    floor_tolerant(mu * file_bits as f64) as usize
}

fn node_stream(seed: u64, kind: NodeKind, node: usize, file: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind as u64) << 62 | (node as u64) << 32 | file as u64);
    rng
}

fn sample_cache(seed: u64, kind: NodeKind, node: usize, file: usize, file_bits: usize, amount: usize) -> BitSet {
    let mut rng = node_stream(seed, kind, node, file);
    BitSet::from_indices(file_bits, index::sample(&mut rng, file_bits, amount))
}

/// Cache contents of every node after placement, as bit-index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheState {
    kt: usize,
    kr: usize,
    n_files: usize,
    file_bits: usize,
    /// `[en * n_files + file]`
    en_caches: Vec<BitSet>,
    /// `[user * n_files + file]`
    user_caches: Vec<BitSet>,
}

impl CacheState {
    pub fn kt(&self) -> usize {
        self.kt
    }

    pub fn kr(&self) -> usize {
        self.kr
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    pub fn en_cache(&self, en: usize, file: usize) -> &BitSet {
        &self.en_caches[en * self.n_files + file]
    }

    pub fn user_cache(&self, user: usize, file: usize) -> &BitSet {
        &self.user_caches[user * self.n_files + file]
    }

    /// The value of a bit as read from an EN cache; `None` if not cached there.
    pub fn en_bit(&self, en: usize, file: usize, bit: usize) -> Option<bool> {
        self.en_cache(en, file).get(bit).then(|| content_bit(file, bit))
    }

    /// The value of a bit as read from a user cache; `None` if not cached there.
    pub fn user_bit(&self, user: usize, file: usize, bit: usize) -> Option<bool> {
        self.user_cache(user, file).get(bit).then(|| content_bit(file, bit))
    }

    /// The fragment key a bit of `file` falls into.
    pub fn key_of(&self, file: usize, bit: usize) -> FragmentKey {
        let mut key = FragmentKey::EMPTY;
        for en in 0..self.kt {
            if self.en_cache(en, file).get(bit) {
                key.en_set |= 1 << en;
            }
        }
        for user in 0..self.kr {
            if self.user_cache(user, file).get(bit) {
                key.user_set |= 1 << user;
            }
        }
        key
    }

    pub fn total_en_bits(&self, en: usize) -> usize {
        (0..self.n_files).map(|f| self.en_cache(en, f).count_ones()).sum()
    }

    pub fn total_user_bits(&self, user: usize) -> usize {
        (0..self.n_files).map(|f| self.user_cache(user, f).count_ones()).sum()
    }
}

/// Runs the random placement for `cfg.n_files` files of `cfg.file_bits` bits.
pub fn place_caches(cfg: &SystemConfig) -> Result<CacheState> {
    let cfg = validate_config(*cfg)?;
    if cfg.file_bits == 0 {
        return Err(Error::InvalidConfig {
            field: "file_bits",
            reason: "must be >= 1",
        });
    }
    if cfg.file_bits > u32::MAX as usize {
        return Err(Error::InvalidConfig {
            field: "file_bits",
            reason: "must fit in 32 bits",
        });
    }
    if cfg.kt + cfg.kr > 31 {
        return Err(Error::Precondition("kt + kr must be at most 31"));
    }
    let (n, f) = (cfg.n_files, cfg.file_bits);
    let en_amount = cached_bits_per_file(cfg.mu_t, f);
    let user_amount = cached_bits_per_file(cfg.mu_r, f);
    let grid = |nodes: usize, kind, amount| {
        (0..nodes * n)
            .map(|i| sample_cache(cfg.seed, kind, i / n, i % n, f, amount))
            .collect::<Vec<_>>()
    };
    Ok(CacheState {
        kt: cfg.kt,
        kr: cfg.kr,
        n_files: n,
        file_bits: f,
        en_caches: grid(cfg.kt, NodeKind::En, en_amount),
        user_caches: grid(cfg.kr, NodeKind::User, user_amount),
    })
}

/// Each file split into its `2^(kt+kr)` fragments, as sorted bit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentPartition {
    kt: usize,
    kr: usize,
    file_bits: usize,
    /// `[file][key.index(kr)]`
    files: Vec<Vec<Vec<u32>>>,
}

impl FragmentPartition {
    pub fn kt(&self) -> usize {
        self.kt
    }

    pub fn kr(&self) -> usize {
        self.kr
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    pub fn n_files(&self) -> usize {
        self.files.len()
    }

    pub fn fragment(&self, file: usize, key: FragmentKey) -> &[u32] {
        &self.files[file][key.index(self.kr)]
    }

    pub fn keys(&self) -> Vec<FragmentKey> {
        enumerate_fragment_keys(self.kt, self.kr)
    }

    /// `(key, fragment)` pairs of one file in canonical key order.
    pub fn fragments(&self, file: usize) -> impl Iterator<Item = (FragmentKey, &[u32])> + '_ {
        let kr = self.kr;
        self.files[file]
            .iter()
            .enumerate()
            .map(move |(i, bits)| (FragmentKey::from_index(i, kr), bits.as_slice()))
    }
}

/// Assigns every bit to the key of exactly the nodes caching it.
pub fn partition_files(state: &CacheState) -> FragmentPartition {
    let n_keys = 1usize << (state.kt + state.kr);
    let files = (0..state.n_files)
        .map(|file| {
            let mut frags: Vec<Vec<u32>> = (0..n_keys).map(|_| Vec::new()).collect();
            let en: Vec<&BitSet> = (0..state.kt).map(|e| state.en_cache(e, file)).collect();
            let users: Vec<&BitSet> = (0..state.kr).map(|u| state.user_cache(u, file)).collect();
            for bit in 0..state.file_bits {
                let mut en_set = 0usize;
                for (i, c) in en.iter().enumerate() {
                    en_set |= (c.get(bit) as usize) << i;
                }
                let mut user_set = 0usize;
                for (i, c) in users.iter().enumerate() {
                    user_set |= (c.get(bit) as usize) << i;
                }
                frags[en_set << state.kr | user_set].push(bit as u32);
            }
            frags
        })
        .collect();
    FragmentPartition {
        kt: state.kt,
        kr: state.kr,
        file_bits: state.file_bits,
        files,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FragmentStat {
    pub key: FragmentKey,
    /// Fragment size averaged over all files.
    pub observed_bits: f64,
    pub expected_bits: f64,
    pub observed_fraction: f64,
    pub expected_fraction: f64,
    /// `|observed - expected| / expected`, for fragments expected to hold at
    /// least [`MIN_EXPECTED_BITS_FOR_ERROR`] bits.
    pub rel_error: Option<f64>,
}

/// Observed fragment sizes against the independent-caching expectation.
pub fn empirical_fragment_stats(partition: &FragmentPartition, cfg: &SystemConfig) -> Result<Vec<FragmentStat>> {
    let f = partition.file_bits as f64;
    let n = partition.n_files() as f64;
    partition
        .keys()
        .into_iter()
        .map(|key| {
            let total: usize = (0..partition.n_files())
                .map(|file| partition.fragment(file, key).len())
                .sum();
            let observed_bits = total as f64 / n;
            let expected_fraction = expected_fragment_fraction(cfg, key.en_count(), key.user_count())?;
            let expected_bits = expected_fraction * f;
            let rel_error = (expected_bits >= MIN_EXPECTED_BITS_FOR_ERROR)
                .then(|| (observed_bits - expected_bits).abs() / expected_bits);
            Ok(FragmentStat {
                key,
                observed_bits,
                expected_bits,
                observed_fraction: observed_bits / f,
                expected_fraction,
                rel_error,
            })
        })
        .collect()
}
