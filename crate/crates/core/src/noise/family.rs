//! Built-in noise families.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    ComponentKey, IdleModel, NoiseAssignment, NoiseError, NoiseOverride, PauliChannel1, PauliChannel2, SpamSpec,
};
use crate::circuit::{Circuit, Gate, Target};
use crate::Basis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Uniform,
    Biased,
    MeasurementBiased,
    NonUniformSpatial,
    NonUniformSpatioTemporal,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Biased => "biased",
            Family::MeasurementBiased => "measurement-biased",
            Family::NonUniformSpatial => "non-uniform-spatial",
            Family::NonUniformSpatioTemporal => "non-uniform-spatio-temporal",
        }
    }

    fn uses_eta(self) -> bool {
        matches!(self, Family::Biased | Family::MeasurementBiased)
    }

    fn uses_axis(self) -> bool {
        self == Family::Biased
    }

    fn uses_sigma(self) -> bool {
        matches!(self, Family::NonUniformSpatial | Family::NonUniformSpatioTemporal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub family: Family,
    pub p: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub axis: Option<Basis>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl FamilyConfig {
    pub fn uniform(p: f64) -> Self {
        FamilyConfig { family: Family::Uniform, p, eta: None, axis: None, sigma: None, seed: None }
    }

    pub fn biased(p: f64, eta: f64, axis: Basis) -> Self {
        FamilyConfig { family: Family::Biased, p, eta: Some(eta), axis: Some(axis), sigma: None, seed: None }
    }

    pub fn measurement_biased(p: f64, eta: f64) -> Self {
        FamilyConfig { family: Family::MeasurementBiased, p, eta: Some(eta), axis: None, sigma: None, seed: None }
    }

    pub fn non_uniform(p: f64, sigma: f64, seed: u64, per_round: bool) -> Self {
        let family = if per_round { Family::NonUniformSpatioTemporal } else { Family::NonUniformSpatial };
        FamilyConfig { family, p, eta: None, axis: None, sigma: Some(sigma), seed: Some(seed) }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let f = self.family;
        let name = f.name();
        let check = |present: bool, needed: bool, param: &'static str| match (present, needed) {
            (false, true) => Err(NoiseError::MissingParameter { family: name, param }),
            (true, false) => Err(NoiseError::ExtraParameter { family: name, param }),
            _ => Ok(()),
        };
        check(self.eta.is_some(), f.uses_eta(), "eta")?;
        check(self.axis.is_some(), f.uses_axis(), "axis")?;
        check(self.sigma.is_some(), f.uses_sigma(), "sigma")?;
        check(self.seed.is_some(), f.uses_sigma(), "seed")?;
        if !(0.0..=1.0).contains(&self.p) {
            return Err(NoiseError::InvalidParameter(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if let Some(eta) = self.eta {
            if !(eta >= 1.0) {
                return Err(NoiseError::InvalidParameter(format!("eta must be >= 1, got {}", eta)));
            }
        }
        if let Some(sigma) = self.sigma {
            if !(sigma >= 0.0) {
                return Err(NoiseError::InvalidParameter(format!("sigma must be >= 0, got {}", sigma)));
            }
        }
        Ok(())
    }
}

/// Qubit, interaction and round extents of a circuit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircuitContext {
    pub num_qubits: u32,
    pub pairs: BTreeSet<(u32, u32)>,
    pub rounds: u32,
}

impl CircuitContext {
    pub fn from_circuit(c: &Circuit) -> Self {
        let mut pairs = BTreeSet::new();
        let mut rounds = 0u32;
        let mut reset_in_tick = false;
        for ins in &c.instructions {
            match ins.gate {
                Gate::CX | Gate::CZ => {
                    for pr in ins.targets.chunks(2) {
                        if let [Target::Qubit(a), Target::Qubit(b)] = *pr {
                            pairs.insert((a.min(b), a.max(b)));
                        }
                    }
                }
                Gate::R | Gate::RX => reset_in_tick = true,
                Gate::Tick => {
                    if reset_in_tick {
                        rounds += 1;
                    }
                    reset_in_tick = false;
                }
                _ => {}
            }
        }
        if reset_in_tick {
            rounds += 1;
        }
        CircuitContext { num_qubits: c.num_qubits() as u32, pairs, rounds: rounds.max(1) }
    }
}

fn biased_params(p: f64, eta: f64, axis: Basis) -> NoiseOverride {
    let lo = p / (eta + 2.0);
    let hi = eta * p / (eta + 2.0);
    let one = match axis {
        Basis::Z => PauliChannel1 { p_x: lo, p_y: lo, p_z: hi },
        Basis::X => PauliChannel1 { p_x: hi, p_y: lo, p_z: lo },
    };
    let a = match axis {
        Basis::X => 1,
        Basis::Z => 3,
    };
    let lo2 = p / (12.0 + 3.0 * eta);
    let hi2 = eta * p / (12.0 + 3.0 * eta);
    let mut two = [lo2; 15];
    for (x, y) in [(a, 0), (0, a), (a, a)] {
        two[PauliChannel2::index(x, y)] = hi2;
    }
    // bias-aligned readout is the quiet one
    let aligned = 2.0 * p / (1.0 + eta);
    let orth = 2.0 * eta * p / (1.0 + eta);
    let spam = match axis {
        Basis::Z => SpamSpec { p_reset_z: aligned, p_meas_z: aligned, p_reset_x: orth, p_meas_x: orth },
        Basis::X => SpamSpec { p_reset_x: aligned, p_meas_x: aligned, p_reset_z: orth, p_meas_z: orth },
    };
    NoiseOverride::full(one, PauliChannel2 { p: two }, spam, IdleModel::Pauli(one))
}

/// Deterministic stream key for a perturbation draw.
fn draw_seed(seed: u64, key: ComponentKey, round: u32) -> u64 {
    let (tag, a, b) = match key {
        ComponentKey::Qubit(q) => (1u64, q as u64, 0u64),
        ComponentKey::Pair(x, y) => (2u64, x as u64, y as u64),
    };
    let mut h = splitmix(seed ^ 0x51_7c_c1_b7_27_22_0a_95);
    for v in [tag, a, b, round as u64] {
        h = splitmix(h ^ v);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn perturbed_rate(p: f64, sigma: f64, seed: u64, key: ComponentKey, round: u32) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(draw_seed(seed, key, round));
    let delta: f64 = Normal::new(0.0, sigma).expect("sigma validated").sample(&mut rng);
    (p * (1.0 + delta)).clamp(0.0, 0.5)
}

fn qubit_params(pc: f64) -> NoiseOverride {
    NoiseOverride {
        gate1: Some(PauliChannel1::depolarizing(pc)),
        gate2: None,
        spam: Some(SpamSpec::uniform(pc)),
        idle: Some(IdleModel::Pauli(PauliChannel1::depolarizing(pc))),
    }
}

fn pair_params(pc: f64) -> NoiseOverride {
    NoiseOverride { gate2: Some(PauliChannel2::depolarizing(pc)), ..Default::default() }
}

/// Builds the assignment for a built-in family over the given extents.
pub fn make_builtin_family(config: &FamilyConfig, ctx: &CircuitContext) -> Result<NoiseAssignment, NoiseError> {
    config.validate()?;
    let p = config.p;
    let mut a = NoiseAssignment::global(NoiseOverride::uniform(p));
    match config.family {
        Family::Uniform => {}
        Family::Biased => {
            a.global = biased_params(p, config.eta.unwrap(), config.axis.unwrap());
        }
        Family::MeasurementBiased => {
            let flip = config.eta.unwrap() * p;
            if flip > 1.0 {
                return Err(NoiseError::InvalidParameter(format!("eta * p = {} exceeds 1", flip)));
            }
            a.global.spam = Some(SpamSpec::uniform(flip));
        }
        Family::NonUniformSpatial | Family::NonUniformSpatioTemporal => {
            let sigma = config.sigma.unwrap();
            let seed = config.seed.unwrap();
            let rounds: Vec<Option<u32>> = if config.family == Family::NonUniformSpatial {
                vec![None]
            } else {
                (0..ctx.rounds).map(Some).collect()
            };
            for r in rounds {
                let rr = r.unwrap_or(0);
                let mut put = |key: ComponentKey, params: NoiseOverride| match r {
                    None => {
                        a.spatial.insert(key, params);
                    }
                    Some(round) => {
                        a.spatio_temporal.insert((key, round), params);
                    }
                };
                for q in 0..ctx.num_qubits {
                    let key = ComponentKey::Qubit(q);
                    put(key, qubit_params(perturbed_rate(p, sigma, seed, key, rr)));
                }
                for &(x, y) in &ctx.pairs {
                    let key = ComponentKey::pair(x, y);
                    put(key, pair_params(perturbed_rate(p, sigma, seed, key, rr)));
                }
            }
        }
    }
    Ok(a)
}
