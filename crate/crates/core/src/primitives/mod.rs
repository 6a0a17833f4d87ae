//! Noiseless annotated circuits for surface-code logical primitives.

mod hadamard;
pub mod layout;
mod memory;
mod phase;
mod surgery;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::Basis;

pub use hadamard::gen_hadamard;
pub use memory::gen_memory;
pub use phase::gen_phase_gate;
pub use surgery::gen_lattice_surgery;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("invalid primitive spec: {0}")]
    Invalid(String),
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), SpecError> {
    if ok {
        Ok(())
    } else {
        Err(SpecError::Invalid(msg()))
    }
}

/// Patch distances. The data grid has `d_z` columns and `d_x` rows, so a
/// Z logical (a row) has weight `d_z` and an X logical (a column) weight `d_x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGeometry {
    pub d_x: usize,
    pub d_z: usize,
    #[serde(default)]
    pub origin: (i32, i32),
}

impl PatchGeometry {
    pub fn square(d: usize) -> Self {
        PatchGeometry { d_x: d, d_z: d, origin: (0, 0) }
    }

    pub fn new(d_x: usize, d_z: usize) -> Self {
        PatchGeometry { d_x, d_z, origin: (0, 0) }
    }

    fn validate(&self) -> Result<(), SpecError> {
        require(self.d_x >= 2 && self.d_z >= 2, || format!("distances must be at least 2, got d_x = {}, d_z = {}", self.d_x, self.d_z))
    }

    fn area(&self) -> u64 {
        (self.d_x * self.d_z) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemorySpec {
    pub geometry: PatchGeometry,
    pub rounds: usize,
    pub basis: Basis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HadamardSpec {
    pub geometry: PatchGeometry,
    pub t_pre: usize,
    pub t_post: usize,
    pub basis: Basis,
}

/// Which joint parity a lattice-surgery merge measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "XX", alias = "MXX", alias = "xx")]
    XX,
    #[serde(rename = "ZZ", alias = "MZZ", alias = "zz")]
    ZZ,
}

impl Parity {
    pub fn basis(self) -> Basis {
        match self {
            Parity::XX => Basis::X,
            Parity::ZZ => Basis::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSurgerySpec {
    pub geometry: PatchGeometry,
    pub bridge_length: usize,
    pub t_pre: usize,
    pub t_merge: usize,
    pub t_post: usize,
    pub parity: Parity,
}

impl LatticeSurgerySpec {
    /// Bridge width entering the volume count.
    pub fn bridge_dim(&self) -> usize {
        match self.parity {
            Parity::ZZ => self.geometry.d_x,
            Parity::XX => self.geometry.d_z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGateSpec {
    pub d: usize,
    pub bridge_length: usize,
    pub t_merge: usize,
    pub t_boundary: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrimitiveSpec {
    Memory(MemorySpec),
    Hadamard(HadamardSpec),
    LatticeSurgery(LatticeSurgerySpec),
    PhaseGate(PhaseGateSpec),
}

impl PrimitiveSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        match self {
            PrimitiveSpec::Memory(s) => {
                s.geometry.validate()?;
                require(s.rounds >= 1, || "memory needs t >= 1".into())
            }
            PrimitiveSpec::Hadamard(s) => {
                s.geometry.validate()?;
                require(s.t_pre >= 1 && s.t_post >= 1, || {
                    format!("Hadamard needs t_pre, t_post >= 1, got {} and {}", s.t_pre, s.t_post)
                })
            }
            PrimitiveSpec::LatticeSurgery(s) => {
                s.geometry.validate()?;
                require(s.bridge_length >= 1, || "bridge length must be at least 1".into())?;
                require(s.t_pre >= 1 && s.t_merge >= 1 && s.t_post >= 1, || {
                    "lattice surgery needs t_pre, t_merge, t_post >= 1".into()
                })
            }
            PrimitiveSpec::PhaseGate(s) => {
                require(s.d >= 2, || format!("phase gate needs d >= 2, got {}", s.d))?;
                require(s.bridge_length >= 1, || "bridge length must be at least 1".into())?;
                require(s.t_merge >= 1, || "phase gate needs t_merge >= 1".into())
            }
        }
    }

    pub fn generate(&self) -> Result<Circuit, SpecError> {
        match self {
            PrimitiveSpec::Memory(s) => gen_memory(s),
            PrimitiveSpec::Hadamard(s) => gen_hadamard(s),
            PrimitiveSpec::LatticeSurgery(s) => gen_lattice_surgery(s),
            PrimitiveSpec::PhaseGate(s) => gen_phase_gate(s),
        }
    }

    /// Rounds used to normalize a logical error rate per round.
    pub fn rounds(&self) -> usize {
        match self {
            PrimitiveSpec::Memory(s) => s.rounds,
            PrimitiveSpec::Hadamard(s) => s.t_pre + s.t_post + 1,
            PrimitiveSpec::LatticeSurgery(s) => s.t_pre + s.t_merge + s.t_post,
            PrimitiveSpec::PhaseGate(s) => s.t_merge + s.t_boundary,
        }
    }

    /// Distance used when sweeping: the smaller of the two patch distances.
    pub fn distance(&self) -> usize {
        match self {
            PrimitiveSpec::Memory(s) => s.geometry.d_x.min(s.geometry.d_z),
            PrimitiveSpec::Hadamard(s) => s.geometry.d_x.min(s.geometry.d_z),
            PrimitiveSpec::LatticeSurgery(s) => s.geometry.d_x.min(s.geometry.d_z),
            PrimitiveSpec::PhaseGate(s) => s.d,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PrimitiveSpec::Memory(_) => "memory",
            PrimitiveSpec::Hadamard(_) => "hadamard",
            PrimitiveSpec::LatticeSurgery(_) => "lattice-surgery",
            PrimitiveSpec::PhaseGate(_) => "phase-gate",
        }
    }

    /// The same primitive at another square distance.
    pub fn with_distance(&self, d: usize) -> PrimitiveSpec {
        let mut s = *self;
        match &mut s {
            PrimitiveSpec::Memory(m) => m.geometry = PatchGeometry { d_x: d, d_z: d, ..m.geometry },
            PrimitiveSpec::Hadamard(m) => m.geometry = PatchGeometry { d_x: d, d_z: d, ..m.geometry },
            PrimitiveSpec::LatticeSurgery(m) => m.geometry = PatchGeometry { d_x: d, d_z: d, ..m.geometry },
            PrimitiveSpec::PhaseGate(m) => m.d = d,
        }
        s
    }
}

/// Closed-form spacetime volume in qubit-rounds.
pub fn spacetime_volume(spec: &PrimitiveSpec) -> Result<u64, SpecError> {
    spec.validate()?;
    Ok(match spec {
        PrimitiveSpec::Memory(s) => s.geometry.area() * s.rounds as u64,
        PrimitiveSpec::Hadamard(s) => s.geometry.area() * (s.t_pre + s.t_post + 1) as u64,
        PrimitiveSpec::LatticeSurgery(s) => {
            let a = s.geometry.area();
            let bridge = (s.bridge_length * s.bridge_dim()) as u64;
            2 * a * (s.t_pre + s.t_post) as u64 + (2 * a + bridge) * s.t_merge as u64
        }
        PrimitiveSpec::PhaseGate(s) => {
            let a = (s.d * s.d) as u64;
            (2 * a + (s.bridge_length * s.d) as u64) * s.t_merge as u64 + a * s.t_boundary as u64
        }
    })
}
