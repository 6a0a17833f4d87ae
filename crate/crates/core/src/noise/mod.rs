//! Noise channels, component/round assignment tiers and built-in families.

mod apply;
mod family;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Gate;

pub use apply::{apply_noise, resolve_ticks, Durations, Schedule, TickInfo};
pub use family::{make_builtin_family, CircuitContext, Family, FamilyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("family '{family}' requires parameter '{param}'")]
    MissingParameter { family: &'static str, param: &'static str },
    #[error("family '{family}' does not take parameter '{param}'")]
    ExtraParameter { family: &'static str, param: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no {field} parameters resolve for {key:?} in round {round}")]
    Unresolved { field: &'static str, key: ComponentKey, round: u32 },
    #[error("tick {tick}: qubit {qubit} is used by more than one operation")]
    ScheduleConflict { tick: usize, qubit: u32 },
    #[error("no duration given for {0}")]
    MissingDuration(Gate),
    #[error("circuit already contains noise channels")]
    AlreadyNoisy,
}

/// General single-qubit Pauli channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel1 {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl PauliChannel1 {
    pub fn depolarizing(p: f64) -> Self {
        PauliChannel1 { p_x: p / 3.0, p_y: p / 3.0, p_z: p / 3.0 }
    }

    pub fn args(&self) -> Vec<f64> {
        vec![self.p_x, self.p_y, self.p_z]
    }

    pub fn total(&self) -> f64 {
        self.p_x + self.p_y + self.p_z
    }

    pub fn is_valid(&self) -> bool {
        let ps = [self.p_x, self.p_y, self.p_z];
        ps.iter().all(|p| (0.0..=1.0).contains(p)) && self.total() <= 1.0 + 1e-12
    }
}

/// Two-qubit Pauli channel over the 15 non-identity Paulis.
///
/// Component `P = A⊗B` with `I=0, X=1, Y=2, Z=3` is stored at `4*A + B - 1`,
/// i.e. in the order IX, IY, IZ, XI, ..., ZZ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel2 {
    pub p: [f64; 15],
}

impl PauliChannel2 {
    pub fn depolarizing(p: f64) -> Self {
        PauliChannel2 { p: [p / 15.0; 15] }
    }

    pub fn index(a: usize, b: usize) -> usize {
        4 * a + b - 1
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        self.p.iter().all(|p| (0.0..=1.0).contains(p)) && self.total() <= 1.0 + 1e-12
    }
}

/// Reset and measurement flip probabilities per basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpamSpec {
    pub p_reset_z: f64,
    pub p_reset_x: f64,
    pub p_meas_z: f64,
    pub p_meas_x: f64,
}

impl SpamSpec {
    pub fn uniform(p: f64) -> Self {
        SpamSpec { p_reset_z: p, p_reset_x: p, p_meas_z: p, p_meas_x: p }
    }
}

/// Relaxation and dephasing times in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSpec {
    pub t1: f64,
    pub t2: f64,
}

impl CoherenceSpec {
    pub fn new(t1: f64, t2: f64) -> Result<Self, NoiseError> {
        if !(t1 > 0.0) || !(t2 > 0.0) || t2 > 2.0 * t1 {
            return Err(NoiseError::InvalidParameter(format!(
                "coherence times need T1 > 0 and 0 < T2 <= 2 T1 (T1 = {}, T2 = {})",
                t1, t2
            )));
        }
        Ok(CoherenceSpec { t1, t2 })
    }
}

/// Pauli-twirled amplitude damping plus dephasing over an idle of length `t`.
pub fn pta_idle_channel(t: f64, t1: f64, t2: f64) -> Result<PauliChannel1, NoiseError> {
    CoherenceSpec::new(t1, t2)?;
    if !(t >= 0.0) {
        return Err(NoiseError::InvalidParameter(format!("idle time must be non-negative, got {}", t)));
    }
    // 1 - e^{-t/T1}
    let a = -(-t / t1).exp_m1();
    let p_xy = a / 4.0;
    // (1 - e^{-t/T2})/2 - (1 - e^{-t/T1})/4 = [(1-v)^2 + v^2 (e^{t(2/T2 - 1/T1)} - 1)] / 4
    // with v = e^{-t/T2}; both terms are non-negative when T2 <= 2 T1.
    let one_minus_v = -(-t / t2).exp_m1();
    let v = (-t / t2).exp();
    let gamma = (2.0 * t1 - t2) / (t1 * t2);
    let p_z = if t * gamma <= 1.0 {
        (one_minus_v * one_minus_v + v * v * (t * gamma).exp_m1()) / 4.0
    } else {
        // here v < e^{-1/2}, so 1 - 2v + e^{-t/T1} >= (1 - v)^2 is well conditioned
        (1.0 - 2.0 * v + (-t / t1).exp()) / 4.0
    };
    Ok(PauliChannel1 { p_x: p_xy, p_y: p_xy, p_z })
}

/// How idle windows are turned into channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdleModel {
    /// Fixed channel applied for any non-zero idle window.
    Pauli(PauliChannel1),
    /// Channel derived from the window length by the twirled approximation.
    Coherence(CoherenceSpec),
}

/// A qubit or an interaction. Pairs are stored with the smaller index first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentKey {
    Qubit(u32),
    Pair(u32, u32),
}

impl ComponentKey {
    pub fn pair(a: u32, b: u32) -> Self {
        assert_ne!(a, b, "interaction endpoints must differ");
        ComponentKey::Pair(a.min(b), a.max(b))
    }
}

/// Partially specified parameter set; unset fields fall through to the next tier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseOverride {
    #[serde(default)]
    pub gate1: Option<PauliChannel1>,
    #[serde(default)]
    pub gate2: Option<PauliChannel2>,
    #[serde(default)]
    pub spam: Option<SpamSpec>,
    #[serde(default)]
    pub idle: Option<IdleModel>,
}

impl NoiseOverride {
    pub fn full(gate1: PauliChannel1, gate2: PauliChannel2, spam: SpamSpec, idle: IdleModel) -> Self {
        NoiseOverride { gate1: Some(gate1), gate2: Some(gate2), spam: Some(spam), idle: Some(idle) }
    }

    pub fn uniform(p: f64) -> Self {
        NoiseOverride::full(
            PauliChannel1::depolarizing(p),
            PauliChannel2::depolarizing(p),
            SpamSpec::uniform(p),
            IdleModel::Pauli(PauliChannel1::depolarizing(p)),
        )
    }
}

/// Four-tier lookup from (component, round) to channel parameters.
///
/// Precedence, most specific first: spatio-temporal, spatial, temporal, global.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NoiseAssignment {
    pub global: NoiseOverride,
    pub spatial: BTreeMap<ComponentKey, NoiseOverride>,
    pub temporal: BTreeMap<u32, NoiseOverride>,
    pub spatio_temporal: BTreeMap<(ComponentKey, u32), NoiseOverride>,
    pub durations: Durations,
}

impl NoiseAssignment {
    pub fn global(params: NoiseOverride) -> Self {
        NoiseAssignment { global: params, ..Default::default() }
    }

    /// The most coarse tier that still applies to this key.
    pub fn tier_of(&self, key: ComponentKey, round: u32) -> &'static str {
        if self.spatio_temporal.contains_key(&(key, round)) {
            "spatio-temporal"
        } else if self.spatial.contains_key(&key) {
            "spatial"
        } else if self.temporal.contains_key(&round) {
            "temporal"
        } else {
            "global"
        }
    }

    fn lookup<T: Copy>(
        &self,
        key: ComponentKey,
        round: u32,
        field: &'static str,
        get: impl Fn(&NoiseOverride) -> Option<T>,
    ) -> Result<T, NoiseError> {
        self.spatio_temporal
            .get(&(key, round))
            .and_then(&get)
            .or_else(|| self.spatial.get(&key).and_then(&get))
            .or_else(|| self.temporal.get(&round).and_then(&get))
            .or_else(|| get(&self.global))
            .ok_or(NoiseError::Unresolved { field, key, round })
    }

    pub fn gate1(&self, q: u32, round: u32) -> Result<PauliChannel1, NoiseError> {
        self.lookup(ComponentKey::Qubit(q), round, "gate1", |o| o.gate1)
    }

    pub fn gate2(&self, a: u32, b: u32, round: u32) -> Result<PauliChannel2, NoiseError> {
        self.lookup(ComponentKey::pair(a, b), round, "gate2", |o| o.gate2)
    }

    pub fn spam(&self, q: u32, round: u32) -> Result<SpamSpec, NoiseError> {
        self.lookup(ComponentKey::Qubit(q), round, "spam", |o| o.spam)
    }

    pub fn idle(&self, q: u32, round: u32) -> Result<IdleModel, NoiseError> {
        self.lookup(ComponentKey::Qubit(q), round, "idle", |o| o.idle)
    }
}
