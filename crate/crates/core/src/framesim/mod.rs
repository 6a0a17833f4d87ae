//! Bit-packed Pauli-frame sampling of detection events.
//!
//! Frames are stored qubit-major with 64 shots per word. Every random choice
//! is drawn from a counter-based generator keyed by the seed, the instruction,
//! the target and the absolute 64-shot block, so a shot's outcome does not
//! depend on how the shots are partitioned into batches.

pub mod tableau;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{mpp_products, Circuit, CircuitError, Gate, Pauli};

pub use tableau::{reference_run, Tableau};

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// SplitMix64 stream started from a hashed key.
#[derive(Clone, Debug)]
pub struct KeyedRng(u64);

impl KeyedRng {
    pub fn new(seed: u64, a: u64, b: u64, c: u64) -> Self {
        let mut h = mix(seed ^ 0x9e3779b97f4a7c15);
        for v in [a, b, c] {
            h = mix(h ^ v.wrapping_mul(0x9e3779b97f4a7c15));
        }
        KeyedRng(h)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        mix(self.0)
    }

    /// Uniform on (0, 1].
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

const GAUGE_TAG: u64 = 0x6761_7567_6500_0000;

/// One Pauli outcome of a channel: flip masks for up to two qubits.
#[derive(Clone, Copy, Debug)]
struct Component {
    p: f64,
    x: [bool; 2],
    z: [bool; 2],
}

#[derive(Clone, Debug)]
enum Op {
    Reset { q: usize, x: bool },
    Measure { q: usize, x: bool },
    Mpp(Vec<(Pauli, usize)>),
    H(usize),
    S(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    Noise { qs: [usize; 2], comps: Vec<Component>, total: f64, key: (u64, u64) },
}

fn pauli_bits(code: usize) -> (bool, bool) {
    // 0 = I, 1 = X, 2 = Y, 3 = Z
    (code == 1 || code == 2, code == 2 || code == 3)
}

fn channel_components(gate: Gate, args: &[f64]) -> Vec<Component> {
    let one = |p: f64, code: usize| {
        let (x, z) = pauli_bits(code);
        Component { p, x: [x, false], z: [z, false] }
    };
    let two = |p: f64, a: usize, b: usize| {
        let (xa, za) = pauli_bits(a);
        let (xb, zb) = pauli_bits(b);
        Component { p, x: [xa, xb], z: [za, zb] }
    };
    let v: Vec<Component> = match gate {
        Gate::XError => vec![one(args[0], 1)],
        Gate::ZError => vec![one(args[0], 3)],
        Gate::Depolarize1 => (1..4).map(|c| one(args[0] / 3.0, c)).collect(),
        Gate::PauliChannel1 => (1..4).map(|c| one(args[c - 1], c)).collect(),
        Gate::Depolarize2 => (1..16).map(|i| two(args[0] / 15.0, i / 4, i % 4)).collect(),
        Gate::PauliChannel2 => (1..16).map(|i| two(args[i - 1], i / 4, i % 4)).collect(),
        _ => unreachable!(),
    };
    v.into_iter().filter(|c| c.p > 0.0).collect()
}

/// A circuit lowered to frame operations plus detector/observable wiring.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    num_qubits: usize,
    num_measurements: usize,
    ops: Vec<Op>,
    detectors: Vec<Vec<usize>>,
    observables: Vec<Vec<usize>>,
}

impl CompiledCircuit {
    pub fn new(circuit: &Circuit) -> Result<Self, CircuitError> {
        let (detectors, observables) = circuit.resolve_records()?;
        let mut ops = Vec::new();
        for (idx, ins) in circuit.instructions.iter().enumerate() {
            let qs: Vec<usize> = ins.qubit_targets().map(|q| q as usize).collect();
            match ins.gate {
                Gate::R | Gate::RX => ops.extend(qs.iter().map(|&q| Op::Reset { q, x: ins.gate == Gate::RX })),
                Gate::M | Gate::MX => ops.extend(qs.iter().map(|&q| Op::Measure { q, x: ins.gate == Gate::MX })),
                Gate::MPP => ops.extend(
                    mpp_products(&ins.targets).into_iter().map(|p| Op::Mpp(p.into_iter().map(|(a, q)| (a, q as usize)).collect())),
                ),
                Gate::H => ops.extend(qs.iter().map(|&q| Op::H(q))),
                Gate::S => ops.extend(qs.iter().map(|&q| Op::S(q))),
                Gate::CX => ops.extend(qs.chunks(2).map(|p| Op::Cx(p[0], p[1]))),
                Gate::CZ => ops.extend(qs.chunks(2).map(|p| Op::Cz(p[0], p[1]))),
                g if g.is_noise() => {
                    let comps = channel_components(g, &ins.args);
                    let total: f64 = comps.iter().map(|c| c.p).sum();
                    if total <= 0.0 {
                        continue;
                    }
                    let arity = if matches!(g, Gate::Depolarize2 | Gate::PauliChannel2) { 2 } else { 1 };
                    for (t, chunk) in qs.chunks(arity).enumerate() {
                        let pair = [chunk[0], *chunk.get(1).unwrap_or(&chunk[0])];
                        ops.push(Op::Noise { qs: pair, comps: comps.clone(), total, key: (idx as u64, t as u64) });
                    }
                }
                _ => {}
            }
        }
        Ok(CompiledCircuit {
            num_qubits: circuit.num_qubits(),
            num_measurements: circuit.num_measurements(),
            ops,
            detectors,
            observables,
        })
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    /// Samples shots `start..start + shots`; `start` must be a multiple of 64.
    pub fn sample_range(&self, start: u64, shots: usize, seed: u64) -> DetectionTable {
        self.run(start, shots, seed, false)
    }

    fn run(&self, start: u64, shots: usize, seed: u64, gauge: bool) -> DetectionTable {
        assert_eq!(start % 64, 0, "batches must start on a 64-shot boundary");
        let w = shots.div_ceil(64);
        let block0 = start / 64;
        let mut fx = vec![0u64; self.num_qubits * w];
        let mut fz = vec![0u64; self.num_qubits * w];
        let mut rec = vec![0u64; self.num_measurements * w];
        let mut m = 0usize;
        let gauge_word = |key: (u64, u64), j: usize| KeyedRng::new(seed ^ GAUGE_TAG, key.0, key.1, block0 + j as u64).next_u64();
        if gauge {
            for q in 0..self.num_qubits {
                for j in 0..w {
                    fz[q * w + j] = gauge_word((u64::MAX, q as u64), j);
                }
            }
        }
        for (oi, op) in self.ops.iter().enumerate() {
            match *op {
                Op::Reset { q, x } => {
                    for j in 0..w {
                        let g = if gauge { gauge_word((oi as u64, 0), j) } else { 0 };
                        (fx[q * w + j], fz[q * w + j]) = if x { (g, 0) } else { (0, g) };
                    }
                }
                Op::Measure { q, x } => {
                    for j in 0..w {
                        rec[m * w + j] = if x { fz[q * w + j] } else { fx[q * w + j] };
                        if gauge {
                            let g = gauge_word((oi as u64, 0), j);
                            if x {
                                fx[q * w + j] ^= g;
                            } else {
                                fz[q * w + j] ^= g;
                            }
                        }
                    }
                    m += 1;
                }
                Op::Mpp(ref factors) => {
                    for j in 0..w {
                        let mut acc = 0u64;
                        for &(p, q) in factors {
                            if p.has_x() {
                                acc ^= fz[q * w + j];
                            }
                            if p.has_z() {
                                acc ^= fx[q * w + j];
                            }
                        }
                        rec[m * w + j] = acc;
                        if gauge {
                            let g = gauge_word((oi as u64, 0), j);
                            for &(p, q) in factors {
                                if p.has_x() {
                                    fx[q * w + j] ^= g;
                                }
                                if p.has_z() {
                                    fz[q * w + j] ^= g;
                                }
                            }
                        }
                    }
                    m += 1;
                }
                Op::H(q) => {
                    for j in 0..w {
                        std::mem::swap(&mut fx[q * w + j], &mut fz[q * w + j]);
                    }
                }
                Op::S(q) => {
                    for j in 0..w {
                        fz[q * w + j] ^= fx[q * w + j];
                    }
                }
                Op::Cx(c, t) => {
                    for j in 0..w {
                        fx[t * w + j] ^= fx[c * w + j];
                        fz[c * w + j] ^= fz[t * w + j];
                    }
                }
                Op::Cz(a, b) => {
                    for j in 0..w {
                        fz[a * w + j] ^= fx[b * w + j];
                        fz[b * w + j] ^= fx[a * w + j];
                    }
                }
                Op::Noise { qs, ref comps, total, key } => {
                    let log_q = (-total).ln_1p();
                    for j in 0..w {
                        let mut rng = KeyedRng::new(seed, key.0, key.1, block0 + j as u64);
                        let mut skip = || {
                            if total >= 1.0 {
                                0
                            } else {
                                (rng.uniform().ln() / log_q).min(64.0) as usize
                            }
                        };
                        let mut pos = skip();
                        while pos < 64 {
                            let bit = 1u64 << pos;
                            let mut u = KeyedRng::new(seed, key.0 ^ 0x5555, key.1, (block0 + j as u64) * 64 + pos as u64).uniform() * total;
                            let mut chosen = comps.len() - 1;
                            for (ci, c) in comps.iter().enumerate() {
                                if u <= c.p {
                                    chosen = ci;
                                    break;
                                }
                                u -= c.p;
                            }
                            let c = comps[chosen];
                            for k in 0..2 {
                                if k == 1 && qs[1] == qs[0] {
                                    break;
                                }
                                if c.x[k] {
                                    fx[qs[k] * w + j] ^= bit;
                                }
                                if c.z[k] {
                                    fz[qs[k] * w + j] ^= bit;
                                }
                            }
                            pos += 1 + skip();
                        }
                    }
                }
            }
        }
        let tail = if shots % 64 == 0 { u64::MAX } else { (1u64 << (shots % 64)) - 1 };
        let reduce = |lists: &[Vec<usize>]| {
            let mut out = vec![0u64; lists.len() * w];
            for (d, recs) in lists.iter().enumerate() {
                for &r in recs {
                    for j in 0..w {
                        out[d * w + j] ^= rec[r * w + j];
                    }
                }
                if w > 0 {
                    out[d * w + w - 1] &= tail;
                }
            }
            out
        };
        DetectionTable {
            shots,
            num_detectors: self.detectors.len(),
            num_observables: self.observables.len(),
            words: w,
            det: reduce(&self.detectors),
            obs: reduce(&self.observables),
        }
    }

    /// Samples in parallel chunks of `chunk` shots (rounded up to a multiple of 64).
    pub fn sample_parallel(&self, start: u64, shots: usize, seed: u64, chunk: usize) -> DetectionTable {
        let chunk = chunk.div_ceil(64).max(1) * 64;
        let parts: Vec<(u64, usize)> =
            (0..shots.div_ceil(chunk)).map(|i| (start + (i * chunk) as u64, chunk.min(shots - i * chunk))).collect();
        let tables: Vec<DetectionTable> = parts.par_iter().map(|&(s, n)| self.sample_range(s, n, seed)).collect();
        let mut out = DetectionTable::empty(self.num_detectors(), self.num_observables());
        for t in tables {
            out.append(&t);
        }
        out
    }
}

/// Detector and observable flips, stored detector-major with 64 shots per word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionTable {
    pub shots: usize,
    pub num_detectors: usize,
    pub num_observables: usize,
    words: usize,
    det: Vec<u64>,
    obs: Vec<u64>,
}

impl DetectionTable {
    pub fn empty(num_detectors: usize, num_observables: usize) -> Self {
        DetectionTable { shots: 0, num_detectors, num_observables, words: 0, det: vec![], obs: vec![] }
    }

    pub fn detector(&self, shot: usize, d: usize) -> bool {
        self.det[d * self.words + shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn observable(&self, shot: usize, k: usize) -> bool {
        self.obs[k * self.words + shot / 64] >> (shot % 64) & 1 == 1
    }

    /// Observable flips of one shot as a bit mask (observable k at bit k).
    pub fn observable_mask(&self, shot: usize) -> u64 {
        (0..self.num_observables.min(64)).filter(|&k| self.observable(shot, k)).fold(0, |a, k| a | 1 << k)
    }

    /// Number of shots in which each detector fired.
    pub fn detector_counts(&self) -> Vec<u64> {
        (0..self.num_detectors)
            .map(|d| self.det[d * self.words..(d + 1) * self.words].iter().map(|w| w.count_ones() as u64).sum())
            .collect()
    }

    /// Fired detectors of every shot, ascending.
    pub fn defects(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.shots];
        for d in 0..self.num_detectors {
            for j in 0..self.words {
                let mut wd = self.det[d * self.words + j];
                while wd != 0 {
                    let b = wd.trailing_zeros() as usize;
                    out[j * 64 + b].push(d as u32);
                    wd &= wd - 1;
                }
            }
        }
        out
    }

    /// Concatenates shots; `self.shots` must be a multiple of 64 unless empty.
    pub fn append(&mut self, other: &DetectionTable) {
        assert_eq!((self.num_detectors, self.num_observables), (other.num_detectors, other.num_observables));
        assert_eq!(self.shots % 64, 0, "only whole-word tables can be extended");
        let w = self.words + other.words;
        let merge = |a: &[u64], b: &[u64], rows: usize| {
            let mut out = Vec::with_capacity(rows * w);
            for r in 0..rows {
                out.extend_from_slice(&a[r * self.words..(r + 1) * self.words]);
                out.extend_from_slice(&b[r * other.words..(r + 1) * other.words]);
            }
            out
        };
        self.det = merge(&self.det, &other.det, self.num_detectors);
        self.obs = merge(&self.obs, &other.obs, self.num_observables);
        self.words = w;
        self.shots += other.shots;
    }

    /// Shot-major dump: per shot, detector bits then observable bits,
    /// least-significant bit first, padded to a whole byte.
    pub fn to_b8(&self) -> Vec<u8> {
        let bits = self.num_detectors + self.num_observables;
        let per = bits.div_ceil(8);
        let mut out = vec![0u8; per * self.shots];
        for s in 0..self.shots {
            let row = &mut out[s * per..(s + 1) * per];
            for d in 0..self.num_detectors {
                if self.detector(s, d) {
                    row[d / 8] |= 1 << (d % 8);
                }
            }
            for k in 0..self.num_observables {
                if self.observable(s, k) {
                    let i = self.num_detectors + k;
                    row[i / 8] |= 1 << (i % 8);
                }
            }
        }
        out
    }

    pub fn from_b8(bytes: &[u8], num_detectors: usize, num_observables: usize) -> Self {
        let per = (num_detectors + num_observables).div_ceil(8);
        let shots = if per == 0 { 0 } else { bytes.len() / per };
        let words = shots.div_ceil(64);
        let mut det = vec![0u64; num_detectors * words];
        let mut obs = vec![0u64; num_observables * words];
        for s in 0..shots {
            let row = &bytes[s * per..(s + 1) * per];
            let bit = |i: usize| row[i / 8] >> (i % 8) & 1 == 1;
            for d in 0..num_detectors {
                if bit(d) {
                    det[d * words + s / 64] |= 1 << (s % 64);
                }
            }
            for k in 0..num_observables {
                if bit(num_detectors + k) {
                    obs[k * words + s / 64] |= 1 << (s % 64);
                }
            }
        }
        DetectionTable { shots, num_detectors, num_observables, words, det, obs }
    }
}

/// Samples `shots` shots starting from shot 0.
pub fn sample_batch(noisy: &Circuit, shots: usize, seed: u64) -> Result<DetectionTable, CircuitError> {
    Ok(CompiledCircuit::new(noisy)?.sample_range(0, shots, seed))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Nondeterminism {
    #[error("circuit contains noise channels")]
    Noisy,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("detector {index} at {coords:?} has noiseless value 1")]
    DetectorOne { index: usize, coords: Vec<f64> },
    #[error("detector {index} at {coords:?} is not deterministic")]
    DetectorRandom { index: usize, coords: Vec<f64> },
    #[error("observable {index} is not deterministic")]
    ObservableRandom { index: usize },
}

impl Nondeterminism {
    pub fn detector(&self) -> Option<usize> {
        match self {
            Nondeterminism::DetectorOne { index, .. } | Nondeterminism::DetectorRandom { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// Checks that every detector of a noiseless circuit is deterministically 0
/// and every observable deterministic. Returns the observables' noiseless values.
///
/// A tableau run fixes one reference record; gauge-randomized frames (random
/// stabilizer-preserving Paulis after each reset and measurement) then expose
/// any detector or observable whose value depends on a random outcome.
pub fn check_determinism(noiseless: &Circuit) -> Result<Vec<bool>, Nondeterminism> {
    if noiseless.has_noise() {
        return Err(Nondeterminism::Noisy);
    }
    let (dets, obs) = noiseless.resolve_records()?;
    let coords = noiseless.detector_coords();
    let (rec, _) = reference_run(noiseless);
    let parity = |recs: &[usize]| recs.iter().fold(false, |a, &m| a ^ rec[m]);
    let compiled = CompiledCircuit::new(noiseless)?;
    let table = compiled.run(0, 256, 0x0d15_ea5e, true);
    for (i, d) in dets.iter().enumerate() {
        if (0..table.shots).any(|s| table.detector(s, i)) {
            return Err(Nondeterminism::DetectorRandom { index: i, coords: coords[i].clone() });
        }
        if parity(d) {
            return Err(Nondeterminism::DetectorOne { index: i, coords: coords[i].clone() });
        }
    }
    for k in 0..obs.len() {
        if (0..table.shots).any(|s| table.observable(s, k)) {
            return Err(Nondeterminism::ObservableRandom { index: k });
        }
    }
    Ok(obs.iter().map(|o| parity(o)).collect())
}
