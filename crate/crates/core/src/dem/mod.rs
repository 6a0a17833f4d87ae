//! Detector error models built by backward propagation of detector
//! sensitivities through the circuit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{mpp_products, Circuit, CircuitError, Gate};
use crate::Basis;

/// Where a fault comes from: instruction index, target group index and the
/// Pauli applied, e.g. `"XZ"` for a two-qubit component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FaultLocation {
    pub instruction: usize,
    pub target: usize,
    pub pauli: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMechanism {
    pub probability: f64,
    pub detectors: Vec<u32>,
    pub observables: Vec<u32>,
    /// The first contributing fault, kept for diagnostics.
    pub origin: FaultLocation,
}

impl ErrorMechanism {
    pub fn observable_mask(&self) -> u64 {
        self.observables.iter().fold(0, |m, &o| m | 1 << o)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorMeta {
    pub coords: Vec<f64>,
    /// Type of the stabilizer the detector compares.
    pub side: Basis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorErrorModel {
    pub mechanisms: Vec<ErrorMechanism>,
    pub detectors: Vec<DetectorMeta>,
    pub num_observables: usize,
}

/// The noiseless part of `noisy` with only the fault at `loc` applied, and
/// applied with certainty.
pub fn isolate_fault(noisy: &Circuit, loc: &FaultLocation) -> Circuit {
    let mut out = Circuit::new();
    for (idx, ins) in noisy.instructions.iter().enumerate() {
        if !ins.gate.is_noise() {
            out.instructions.push(ins.clone());
            continue;
        }
        if idx != loc.instruction {
            continue;
        }
        let width = if matches!(ins.gate, Gate::PauliChannel2 | Gate::Depolarize2) { 2 } else { 1 };
        let qs: Vec<u32> = ins.qubit_targets().collect();
        for (k, c) in loc.pauli.chars().enumerate() {
            let q = qs[loc.target * width + k];
            if matches!(c, 'X' | 'Y') {
                out.push_qubits(Gate::XError, vec![1.0], &[q]);
            }
            if matches!(c, 'Z' | 'Y') {
                out.push_qubits(Gate::ZError, vec![1.0], &[q]);
            }
        }
    }
    out
}

/// Combined probability of an odd number of two independent events.
pub fn xor_probability(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Sig(Vec<u64>);

impl Sig {
    fn xor(&mut self, o: &Sig) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a ^= b;
        }
    }
    fn clear(&mut self) {
        self.0.iter_mut().for_each(|w| *w = 0);
    }
    fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn ones(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (i, &w) in self.0.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push((i * 64) as u32 + w.trailing_zeros());
                w &= w - 1;
            }
        }
        out
    }
}

fn components(gate: Gate, args: &[f64]) -> Vec<(f64, Vec<(usize, bool, bool)>, String)> {
    const NAME: [char; 4] = ['I', 'X', 'Y', 'Z'];
    let bits = |c: usize| (c == 1 || c == 2, c == 2 || c == 3);
    let one = |p: f64, c: usize| {
        let (x, z) = bits(c);
        (p, vec![(0, x, z)], NAME[c].to_string())
    };
    let two = |p: f64, i: usize| {
        let (a, b) = (i / 4, i % 4);
        let (xa, za) = bits(a);
        let (xb, zb) = bits(b);
        (p, vec![(0, xa, za), (1, xb, zb)], format!("{}{}", NAME[a], NAME[b]))
    };
    match gate {
        Gate::XError => vec![one(args[0], 1)],
        Gate::ZError => vec![one(args[0], 3)],
        Gate::Depolarize1 => (1..4).map(|c| one(args[0] / 3.0, c)).collect(),
        Gate::PauliChannel1 => (1..4).map(|c| one(args[c - 1], c)).collect(),
        Gate::Depolarize2 => (1..16).map(|i| two(args[0] / 15.0, i)).collect(),
        Gate::PauliChannel2 => (1..16).map(|i| two(args[i - 1], i)).collect(),
        _ => vec![],
    }
}

/// Propagates every single fault backward-equivalently: a reverse sweep keeps,
/// for each qubit, the detectors and observables an X or Z error at the
/// current point would flip.
pub fn build_dem(noisy: &Circuit) -> Result<DetectorErrorModel, CircuitError> {
    let (dets, obs) = noisy.resolve_records()?;
    let nd = dets.len();
    let nbits = nd + obs.len();
    let words = nbits.div_ceil(64).max(1);
    let nm = noisy.num_measurements();
    let mut per_meas = vec![Sig(vec![0; words]); nm];
    for (i, recs) in dets.iter().chain(obs.iter()).enumerate() {
        for &m in recs {
            per_meas[m].0[i / 64] ^= 1 << (i % 64);
        }
    }
    let nq = noisy.num_qubits();
    let mut sx = vec![Sig(vec![0; words]); nq];
    let mut sz = vec![Sig(vec![0; words]); nq];
    let mut m = nm;
    let mut found: BTreeMap<Sig, (f64, FaultLocation)> = BTreeMap::new();
    for (idx, ins) in noisy.instructions.iter().enumerate().rev() {
        let qs: Vec<usize> = ins.qubit_targets().map(|q| q as usize).collect();
        match ins.gate {
            Gate::R | Gate::RX => {
                for &q in &qs {
                    sx[q].clear();
                    sz[q].clear();
                }
            }
            Gate::M | Gate::MX => {
                for &q in qs.iter().rev() {
                    m -= 1;
                    let s = if ins.gate == Gate::M { &mut sx[q] } else { &mut sz[q] };
                    s.xor(&per_meas[m]);
                }
            }
            Gate::MPP => {
                for prod in mpp_products(&ins.targets).iter().rev() {
                    m -= 1;
                    for &(p, q) in prod {
                        if p.has_x() {
                            sz[q as usize].xor(&per_meas[m]);
                        }
                        if p.has_z() {
                            sx[q as usize].xor(&per_meas[m]);
                        }
                    }
                }
            }
            Gate::H => qs.iter().for_each(|&q| std::mem::swap(&mut sx[q], &mut sz[q])),
            Gate::S => {
                for &q in &qs {
                    let z = sz[q].clone();
                    sx[q].xor(&z);
                }
            }
            Gate::CX => {
                for p in qs.chunks(2).rev() {
                    let (c, t) = (p[0], p[1]);
                    let xt = sx[t].clone();
                    sx[c].xor(&xt);
                    let zc = sz[c].clone();
                    sz[t].xor(&zc);
                }
            }
            Gate::CZ => {
                for p in qs.chunks(2).rev() {
                    let (a, b) = (p[0], p[1]);
                    let (za, zb) = (sz[a].clone(), sz[b].clone());
                    sx[a].xor(&zb);
                    sx[b].xor(&za);
                }
            }
            g if g.is_noise() => {
                let comps = components(g, &ins.args);
                let arity = if matches!(g, Gate::Depolarize2 | Gate::PauliChannel2) { 2 } else { 1 };
                for (ti, group) in qs.chunks(arity).enumerate() {
                    for (p, flips, name) in &comps {
                        if *p <= 0.0 {
                            continue;
                        }
                        let mut sig = Sig(vec![0; words]);
                        for &(k, x, z) in flips {
                            if x {
                                sig.xor(&sx[group[k]]);
                            }
                            if z {
                                sig.xor(&sz[group[k]]);
                            }
                        }
                        if sig.is_zero() {
                            continue;
                        }
                        let loc = FaultLocation { instruction: idx, target: ti, pauli: name.clone() };
                        found
                            .entry(sig)
                            .and_modify(|(q, l)| {
                                *q = xor_probability(*q, *p);
                                if loc < *l {
                                    *l = loc.clone();
                                }
                            })
                            .or_insert((*p, loc));
                    }
                }
            }
            _ => {}
        }
    }
    let mut mechanisms: Vec<ErrorMechanism> = found
        .into_iter()
        .map(|(sig, (p, origin))| {
            let ones = sig.ones();
            let (d, o): (Vec<u32>, Vec<u32>) = ones.into_iter().partition(|&i| (i as usize) < nd);
            ErrorMechanism { probability: p, detectors: d, observables: o.into_iter().map(|i| i - nd as u32).collect(), origin }
        })
        .collect();
    mechanisms.sort_by(|a, b| (a.detectors.first(), &a.detectors, &a.observables).cmp(&(b.detectors.first(), &b.detectors, &b.observables)));
    Ok(DetectorErrorModel { mechanisms, detectors: detector_meta(noisy), num_observables: obs.len() })
}

/// Side labels from the fourth detector coordinate (0 = X, 1 = Z), falling
/// back to the basis of the detector's latest measurement record.
fn detector_meta(c: &Circuit) -> Vec<DetectorMeta> {
    let mut bases: Vec<Basis> = Vec::new();
    let mut out = Vec::new();
    for ins in &c.instructions {
        match ins.gate {
            Gate::M => bases.extend(std::iter::repeat_n(Basis::Z, ins.targets.len())),
            Gate::MX => bases.extend(std::iter::repeat_n(Basis::X, ins.targets.len())),
            Gate::MPP => {
                for prod in mpp_products(&ins.targets) {
                    bases.push(if prod.iter().all(|(p, _)| p.has_z() && !p.has_x()) { Basis::Z } else { Basis::X });
                }
            }
            Gate::Detector => {
                let side = match ins.args.get(3) {
                    Some(&s) if s == 0.0 => Basis::X,
                    Some(&s) if s == 1.0 => Basis::Z,
                    _ => {
                        let latest = ins
                            .targets
                            .iter()
                            .filter_map(|t| match t {
                                crate::circuit::Target::Rec(k) => Some(*k),
                                _ => None,
                            })
                            .min()
                            .unwrap_or(1);
                        bases.get(bases.len().wrapping_sub(latest as usize)).copied().unwrap_or(Basis::Z)
                    }
                };
                out.push(DetectorMeta { coords: ins.args.clone(), side });
            }
            _ => {}
        }
    }
    out
}

impl DetectorErrorModel {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for m in &self.mechanisms {
            write!(s, "error({})", m.probability).unwrap();
            for d in &m.detectors {
                write!(s, " D{}", d).unwrap();
            }
            for o in &m.observables {
                write!(s, " L{}", o).unwrap();
            }
            s.push('\n');
        }
        for (i, d) in self.detectors.iter().enumerate() {
            let coords: Vec<String> = d.coords.iter().map(|c| c.to_string()).collect();
            writeln!(s, "detector({}) D{}", coords.join(", "), i).unwrap();
        }
        s
    }

    /// Parses the text produced by [`DetectorErrorModel::to_text`].
    /// Detectors without coordinates of their own default to the Z side.
    pub fn parse(text: &str) -> Result<Self, DemParseError> {
        let mut mechanisms = Vec::new();
        let mut metas: BTreeMap<u32, DetectorMeta> = BTreeMap::new();
        let mut max_det: i64 = -1;
        let mut max_obs: i64 = -1;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| DemParseError { line: ln + 1, message: m.to_string() };
            let open = line.find('(').ok_or_else(|| err("expected '('"))?;
            let close = line.find(')').ok_or_else(|| err("expected ')'"))?;
            let head = &line[..open];
            let args: Vec<f64> = line[open + 1..close]
                .split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| a.trim().parse::<f64>().map_err(|_| err("bad number")))
                .collect::<Result<_, _>>()?;
            let mut dets = Vec::new();
            let mut obs = Vec::new();
            for tok in line[close + 1..].split_whitespace() {
                let (kind, num) = tok.split_at(1);
                let n: u32 = num.parse().map_err(|_| err("bad target"))?;
                match kind {
                    "D" => dets.push(n),
                    "L" => obs.push(n),
                    _ => return Err(err("bad target")),
                }
            }
            match head {
                "error" => {
                    let p = *args.first().ok_or_else(|| err("missing probability"))?;
                    if !(p > 0.0 && p < 1.0) {
                        return Err(err("probability out of range"));
                    }
                    dets.sort_unstable();
                    obs.sort_unstable();
                    max_det = max_det.max(dets.last().map_or(-1, |&d| d as i64));
                    max_obs = max_obs.max(obs.last().map_or(-1, |&o| o as i64));
                    mechanisms.push(ErrorMechanism {
                        probability: p,
                        detectors: dets,
                        observables: obs,
                        origin: FaultLocation { instruction: ln, target: 0, pauli: String::new() },
                    });
                }
                "detector" => {
                    let side = match args.get(3) {
                        Some(&s) if s == 0.0 => Basis::X,
                        _ => Basis::Z,
                    };
                    for d in dets {
                        max_det = max_det.max(d as i64);
                        metas.insert(d, DetectorMeta { coords: args.clone(), side });
                    }
                }
                _ => return Err(err("unknown instruction")),
            }
        }
        let detectors = (0..(max_det + 1) as u32)
            .map(|d| metas.remove(&d).unwrap_or(DetectorMeta { coords: vec![], side: Basis::Z }))
            .collect();
        Ok(DetectorErrorModel { mechanisms, detectors, num_observables: (max_obs + 1) as usize })
    }

    /// Mechanisms that flip observables without any detector.
    pub fn undetectable(&self) -> Vec<&ErrorMechanism> {
        self.mechanisms.iter().filter(|m| m.detectors.is_empty() && !m.observables.is_empty()).collect()
    }

    /// First-order marginal of each detector: probability of an odd number of
    /// its mechanisms firing.
    pub fn detector_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.detectors.len()];
        for m in &self.mechanisms {
            for &d in &m.detectors {
                out[d as usize] = xor_probability(out[d as usize], m.probability);
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct DemParseError {
    pub line: usize,
    pub message: String,
}

/// A side-restricted mechanism with at most two detectors.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMechanism {
    pub probability: f64,
    pub detectors: Vec<u32>,
    pub observables: u64,
    /// Index of the originating mechanism in the model.
    pub source: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct GraphlikeSplit {
    pub x: Vec<GraphMechanism>,
    pub z: Vec<GraphMechanism>,
    /// (index into `x`, index into `z`) for parts of one two-sided mechanism.
    pub links: Vec<(usize, usize)>,
    /// Mechanisms with no detector but a non-empty observable set.
    pub undetectable: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("mechanism {mechanism} flips {count} {side:?}-side detectors (fault at instruction {}, target {}, {})", origin.instruction, origin.target, origin.pauli)]
pub struct NonGraphlike {
    pub mechanism: usize,
    pub side: Basis,
    pub count: usize,
    pub origin: FaultLocation,
}

/// Restricts every mechanism to the X-side and Z-side detectors. The observable
/// mask of a two-sided mechanism is attributed using single-sided mechanisms
/// with the same detectors when one exists, and to the Z part otherwise.
pub fn split_graphlike(dem: &DetectorErrorModel) -> Result<GraphlikeSplit, NonGraphlike> {
    let side = |d: u32| dem.detectors.get(d as usize).map_or(Basis::Z, |m| m.side);
    let mut single: BTreeMap<(Basis, Vec<u32>), u64> = BTreeMap::new();
    let mut parts = Vec::with_capacity(dem.mechanisms.len());
    for (i, m) in dem.mechanisms.iter().enumerate() {
        let (xs, zs): (Vec<u32>, Vec<u32>) = m.detectors.iter().partition(|&&d| side(d) == Basis::X);
        for (b, v) in [(Basis::X, &xs), (Basis::Z, &zs)] {
            if v.len() > 2 {
                return Err(NonGraphlike { mechanism: i, side: b, count: v.len(), origin: m.origin.clone() });
            }
        }
        if xs.is_empty() != zs.is_empty() {
            let key = if xs.is_empty() { (Basis::Z, zs.clone()) } else { (Basis::X, xs.clone()) };
            single.entry(key).or_insert(m.observable_mask());
        }
        parts.push((xs, zs));
    }
    let mut out = GraphlikeSplit::default();
    for (i, (m, (xs, zs))) in dem.mechanisms.iter().zip(parts).enumerate() {
        let mask = m.observable_mask();
        let gm = |dets: Vec<u32>, obs: u64| GraphMechanism { probability: m.probability, detectors: dets, observables: obs, source: i };
        match (xs.is_empty(), zs.is_empty()) {
            (true, true) => {
                if mask != 0 {
                    out.undetectable.push(i);
                }
            }
            (false, true) => out.x.push(gm(xs, mask)),
            (true, false) => out.z.push(gm(zs, mask)),
            (false, false) => {
                let (xm, zm) = if let Some(&xm) = single.get(&(Basis::X, xs.clone())) {
                    (xm, mask ^ xm)
                } else if let Some(&zm) = single.get(&(Basis::Z, zs.clone())) {
                    (mask ^ zm, zm)
                } else {
                    (0, mask)
                };
                out.x.push(gm(xs, xm));
                out.z.push(gm(zs, zm));
                out.links.push((out.x.len() - 1, out.z.len() - 1));
            }
        }
    }
    Ok(out)
}
