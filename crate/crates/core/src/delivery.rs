//! Bit-exact execution of the five-stage delivery for two ENs.
//!
//! Every user starts from its own cache and reconstructs its requested file
//! purely from received payloads, XOR-ing out the operands it caches. Bit
//! counts per stage are turned into NDTs by [`latency_from_report`].

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::error::{Error, Result};
use crate::formulas::dof;
use crate::model::{DemandVector, FragmentKey, NdtBreakdown, Scheme, Stage, StageNdt, SystemConfig};
use crate::placement::{content_bit, partition_files, place_caches, CacheState, FragmentPartition, MAX_SIM_USERS};

const EN1: u32 = 0b01;
const EN2: u32 = 0b10;
const BOTH: u32 = 0b11;

/// Where the payload of a message is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sender {
    Cloud,
    /// 0-based EN index.
    En(usize),
    /// Both ENs hold the payload and transmit cooperatively.
    BothEns,
}

/// One fragment inside a message, intended for `user`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operand {
    pub user: usize,
    pub file: usize,
    pub key: FragmentKey,
    pub bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub stage: Stage,
    pub sender: Sender,
    pub operands: Vec<Operand>,
    /// Payload length after zero-padding.
    pub bits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StageTraffic {
    #[cfg_attr(feature = "serde", serde(rename = "id"))]
    pub stage: Stage,
    pub fronthaul_bits: u64,
    pub edge_bits: u64,
    pub messages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct UserOutcome {
    /// 0-based.
    pub user: usize,
    /// 0-based requested file.
    pub file: usize,
    pub decode_ok: bool,
    pub missing_bits: usize,
    pub wrong_bits: usize,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub first_bad_key: Option<FragmentKey>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DeliveryReport {
    pub scheme: Scheme,
    pub kr: usize,
    pub file_bits: usize,
    /// 1-based requested files.
    pub demands: Vec<usize>,
    /// `false` when two users request the same file.
    pub worst_case_demands: bool,
    /// Stages 1-4 followed by the stage 5 variant of `scheme`.
    pub stages: Vec<StageTraffic>,
    pub users: Vec<UserOutcome>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub messages: Vec<MessageRecord>,
}

impl DeliveryReport {
    pub fn all_decoded(&self) -> bool {
        self.users.iter().all(|u| u.decode_ok)
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageTraffic> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn messages_in(&self, stage: Stage) -> impl Iterator<Item = &MessageRecord> + '_ {
        self.messages.iter().filter(move |m| m.stage == stage)
    }

    pub fn total_messages(&self) -> usize {
        self.stages.iter().map(|s| s.messages).sum()
    }

    /// `Err(DecodeFailure)` for the first user that did not recover its file.
    pub fn verify(&self) -> Result<()> {
        match self.users.iter().find(|u| !u.decode_ok) {
            None => Ok(()),
            Some(u) => Err(Error::DecodeFailure {
                user: u.user,
                key: u.first_bad_key.unwrap_or(FragmentKey::EMPTY),
                missing_bits: u.missing_bits,
                wrong_bits: u.wrong_bits,
            }),
        }
    }
}

struct Receiver {
    file: usize,
    known: BitSet,
    value: BitSet,
}

struct Run<'a> {
    state: &'a CacheState,
    partition: &'a FragmentPartition,
    receivers: Vec<Receiver>,
    traffic: Vec<StageTraffic>,
    log: Vec<MessageRecord>,
}

impl<'a> Run<'a> {
    fn fragment(&self, user: usize, key: FragmentKey) -> &'a [u32] {
        let partition = self.partition;
        partition.fragment(self.receivers[user].file, key)
    }

    fn operand(&self, user: usize, key: FragmentKey) -> Operand {
        Operand {
            user,
            file: self.receivers[user].file,
            key,
            bits: self.fragment(user, key).len(),
        }
    }

    fn read(&self, stage: Stage, sender: Sender, op: &Operand) -> Result<BitSet> {
        let bits = self.fragment(op.user, op.key);
        let mut out = BitSet::new(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            let b = b as usize;
            let v = match sender {
                Sender::Cloud => Some(content_bit(op.file, b)),
                Sender::En(e) => self.state.en_bit(e, op.file, b),
                Sender::BothEns => match (self.state.en_bit(0, op.file, b), self.state.en_bit(1, op.file, b)) {
                    (Some(x), Some(y)) if x == y => Some(x),
                    _ => None,
                },
            };
            out.set(i, v.ok_or(Error::SenderMissingData { stage, key: op.key })?);
        }
        Ok(out)
    }

    /// The values of `op` as cached by `user`.
    fn side_information(&self, stage: Stage, user: usize, op: &Operand) -> Result<BitSet> {
        let bits = self.fragment(op.user, op.key);
        let mut out = BitSet::new(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            let v = self
                .state
                .user_bit(user, op.file, b as usize)
                .ok_or(Error::Unrecoverable {
                    stage,
                    user,
                    key: op.key,
                })?;
            out.set(i, v);
        }
        Ok(out)
    }

    fn accept(&mut self, stage: Stage, op: &Operand, payload: &BitSet) -> Result<()> {
        let bits = self.fragment(op.user, op.key);
        let rx = &mut self.receivers[op.user];
        for (i, &b) in bits.iter().enumerate() {
            let b = b as usize;
            if rx.known.get(b) {
                return Err(Error::DuplicateDelivery {
                    stage,
                    user: op.user,
                    key: op.key,
                });
            }
            rx.known.insert(b);
            rx.value.set(b, payload.get(i));
        }
        Ok(())
    }

    fn count(&mut self, stage: Stage, fronthaul: usize, edge: usize) {
        let t = self
            .traffic
            .iter_mut()
            .find(|t| t.stage == stage)
            .expect("stage registered");
        t.fronthaul_bits += fronthaul as u64;
        t.edge_bits += edge as u64;
        t.messages += 1;
    }

    /// Sends `user` its own fragment `key` uncoded.
    fn unicast(
        &mut self,
        stage: Stage,
        sender: Sender,
        user: usize,
        key: FragmentKey,
        over_fronthaul: bool,
    ) -> Result<()> {
        let op = self.operand(user, key);
        if op.bits == 0 {
            return Ok(());
        }
        let payload = self.read(stage, sender, &op)?;
        self.accept(stage, &op, &payload)?;
        self.count(stage, if over_fronthaul { op.bits } else { 0 }, op.bits);
        self.log.push(MessageRecord {
            stage,
            sender,
            operands: alloc::vec![op],
            bits: op.bits,
        });
        Ok(())
    }

    /// `⊕_{k ∈ Sr} W_{d_k, St, Sr∖{k}}`, zero-padded to the longest operand.
    fn multicast(
        &mut self,
        stage: Stage,
        sender: Sender,
        en_set: u32,
        user_set: u32,
        over_fronthaul: bool,
    ) -> Result<()> {
        let operands: Vec<Operand> = (0..self.receivers.len())
            .filter(|&k| user_set >> k & 1 == 1)
            .map(|k| self.operand(k, FragmentKey::new(en_set, user_set & !(1 << k))))
            .collect();
        let len = operands.iter().map(|o| o.bits).max().unwrap_or(0);
        if len == 0 {
            return Ok(());
        }
        let mut sides = Vec::with_capacity(operands.len());
        for op in &operands {
            let mut known = BitSet::new(len);
            for other in operands.iter().filter(|o| o.user != op.user) {
                known.xor_padded(&self.side_information(stage, op.user, other)?);
            }
            sides.push(known);
        }
        let mut payload = BitSet::new(len);
        for op in &operands {
            payload.xor_padded(&self.read(stage, sender, op)?);
        }
        for (op, side) in operands.iter().zip(&sides) {
            let mut own = payload.clone();
            own.xor_padded(side);
            self.accept(stage, op, &own)?;
        }
        self.count(stage, if over_fronthaul { len } else { 0 }, len);
        self.log.push(MessageRecord {
            stage,
            sender,
            operands,
            bits: len,
        });
        Ok(())
    }

    fn outcome(&self, user: usize) -> UserOutcome {
        let rx = &self.receivers[user];
        let mut missing_bits = 0;
        let mut wrong_bits = 0;
        let mut first_bad = None;
        for b in 0..rx.known.len() {
            let bad = if !rx.known.get(b) {
                missing_bits += 1;
                true
            } else if rx.value.get(b) != content_bit(rx.file, b) {
                wrong_bits += 1;
                true
            } else {
                false
            };
            if bad && first_bad.is_none() {
                first_bad = Some(self.state.key_of(rx.file, b));
            }
        }
        UserOutcome {
            user,
            file: rx.file,
            decode_ok: missing_bits == 0 && wrong_bits == 0,
            missing_bits,
            wrong_bits,
            first_bad_key: first_bad,
        }
    }
}

fn check_inputs(state: &CacheState, partition: &FragmentPartition, demands: &DemandVector) -> Result<()> {
    let (kt, kr) = (state.kt(), state.kr());
    if kt != 2 || kr < 2 {
        return Err(Error::UnsupportedTopology { kt, kr });
    }
    if kr > MAX_SIM_USERS {
        return Err(Error::OutOfRange {
            what: "kr",
            value: kr,
            max: MAX_SIM_USERS,
        });
    }
    if partition.kt() != kt
        || partition.kr() != kr
        || partition.n_files() != state.n_files()
        || partition.file_bits() != state.file_bits()
    {
        return Err(Error::Precondition("partition does not belong to the cache state"));
    }
    if demands.len() != kr {
        return Err(Error::DemandLength {
            expected: kr,
            got: demands.len(),
        });
    }
    for (user, &file) in demands.as_slice().iter().enumerate() {
        if file == 0 || file > state.n_files() {
            return Err(Error::InvalidDemand {
                user,
                file,
                n_files: state.n_files(),
            });
        }
    }
    Ok(())
}

/// Runs stages 1-4 and the stage 5 variant of `scheme`, then checks every
/// user's reconstruction bit by bit.
///
/// Structural violations (a sender lacking data, an undecodable XOR, a bit
/// delivered twice) abort with an error; the per-user verdict is reported in
/// [`DeliveryReport::users`].
pub fn run_delivery(
    state: &CacheState,
    partition: &FragmentPartition,
    demands: &DemandVector,
    scheme: Scheme,
) -> Result<DeliveryReport> {
    check_inputs(state, partition, demands)?;
    let kr = state.kr();
    let f = state.file_bits();
    let receivers = (0..kr)
        .map(|k| {
            let file = demands.file_of(k);
            let cache = state.user_cache(k, file);
            let mut value = BitSet::new(f);
            for b in cache.iter_ones() {
                value.set(b, content_bit(file, b));
            }
            Receiver {
                file,
                known: cache.clone(),
                value,
            }
        })
        .collect();
    let stage5 = scheme.stage5();
    let mut run = Run {
        state,
        partition,
        receivers,
        traffic: [Stage::S1, Stage::S2, Stage::S3, Stage::S4, stage5]
            .iter()
            .map(|&stage| StageTraffic {
                stage,
                fronthaul_bits: 0,
                edge_bits: 0,
                messages: 0,
            })
            .collect(),
        log: Vec::new(),
    };

    for k in 0..kr {
        run.unicast(Stage::S1, Sender::Cloud, k, FragmentKey::EMPTY, true)?;
    }
    let groups = || (1u32..1 << kr).filter(|m| m.count_ones() >= 2);
    for sr in groups() {
        run.multicast(Stage::S2, Sender::Cloud, 0, sr, true)?;
    }
    for (st, sender) in [(EN1, Sender::En(0)), (EN2, Sender::En(1)), (BOTH, Sender::BothEns)] {
        for sr in groups() {
            run.multicast(Stage::S3, sender, st, sr, false)?;
        }
    }
    for k in 0..kr {
        run.unicast(Stage::S4, Sender::BothEns, k, FragmentKey::new(BOTH, 0), false)?;
    }
    let cross_ship = scheme == Scheme::B;
    for k in 0..kr {
        run.unicast(stage5, Sender::En(0), k, FragmentKey::new(EN1, 0), cross_ship)?;
        run.unicast(stage5, Sender::En(1), k, FragmentKey::new(EN2, 0), cross_ship)?;
    }

    let users = (0..kr).map(|k| run.outcome(k)).collect();
    Ok(DeliveryReport {
        scheme,
        kr,
        file_bits: f,
        demands: demands.as_slice().to_vec(),
        worst_case_demands: demands.is_distinct(),
        stages: run.traffic,
        users,
        messages: run.log,
    })
}

/// Placement, partition and delivery in one call.
pub fn simulate(cfg: &SystemConfig, demands: &DemandVector, scheme: Scheme) -> Result<DeliveryReport> {
    cfg.require_two_ens()?;
    let state = place_caches(cfg)?;
    let partition = partition_files(&state);
    run_delivery(&state, &partition, demands, scheme)
}

/// Converts bit counts into per-stage NDTs. Both stage-5 variants are derived
/// from the stage-5 fragment bits, whichever variant was run.
pub fn latency_from_report(report: &DeliveryReport, cfg: &SystemConfig) -> Result<NdtBreakdown> {
    if report.file_bits == 0 {
        return Err(Error::InvalidConfig {
            field: "file_bits",
            reason: "must be >= 1",
        });
    }
    if cfg.r.is_nan() || cfg.r <= 0.0 {
        return Err(Error::InvalidConfig {
            field: "r",
            reason: "must be > 0",
        });
    }
    let f = report.file_bits as f64;
    let r = cfg.r;
    let edge = |stage: Stage| report.stage(stage).map_or(0.0, |t| t.edge_bits as f64);
    let fronthaul = |stage: Stage| report.stage(stage).map_or(0.0, |t| t.fronthaul_bits as f64);
    let stage5_bits = edge(report.scheme.stage5());

    let s1 = edge(Stage::S1) / (dof::ZERO_FORCING * f);
    let per_stage = alloc::vec![
        StageNdt {
            stage: Stage::S1,
            fronthaul: s1 / r,
            edge: s1,
        },
        StageNdt {
            stage: Stage::S2,
            fronthaul: fronthaul(Stage::S2) / (r * f),
            edge: edge(Stage::S2) / (dof::MULTICAST * f),
        },
        StageNdt {
            stage: Stage::S3,
            fronthaul: 0.0,
            edge: edge(Stage::S3) / (dof::MULTICAST * f),
        },
        StageNdt {
            stage: Stage::S4,
            fronthaul: 0.0,
            edge: edge(Stage::S4) / (dof::ZERO_FORCING * f),
        },
        StageNdt {
            stage: Stage::S5a,
            fronthaul: 0.0,
            edge: stage5_bits / (dof::x_channel(report.kr) * f),
        },
        StageNdt {
            stage: Stage::S5b,
            // Each link carries half of the cross-shipped bits.
            fronthaul: stage5_bits / (2.0 * r * f),
            edge: stage5_bits / (dof::ZERO_FORCING * f),
        },
    ];
    Ok(NdtBreakdown::from_stages(per_stage))
}
