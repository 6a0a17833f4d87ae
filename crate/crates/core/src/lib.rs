//! Surface-code logical primitive benchmarking: circuit generation, structured
//! noise, Pauli-frame sampling, detector error models and matching decoders.

pub mod bench;
pub mod circuit;
pub mod decoder;
pub mod dem;
pub mod framesim;
pub mod noise;
pub mod primitives;

use serde::{Deserialize, Serialize};

/// A Pauli basis for preparation, measurement or bias axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    #[serde(alias = "x")]
    X,
    #[serde(alias = "z")]
    Z,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::X => "X",
            Basis::Z => "Z",
        }
    }
}
