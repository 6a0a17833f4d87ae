//! Sweeps over distances and error rates with adaptive stopping.

mod stats;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::{DecodeError, Decoder, DecoderMode};
use crate::dem::build_dem;
use crate::framesim::{CompiledCircuit, KeyedRng};
use crate::noise::{
    apply_noise, make_builtin_family, CircuitContext, ComponentKey, Family, FamilyConfig, NoiseAssignment,
    NoiseError, NoiseOverride,
};
use crate::primitives::{
    spacetime_volume, HadamardSpec, LatticeSurgerySpec, MemorySpec, Parity, PatchGeometry, PhaseGateSpec,
    PrimitiveSpec, SpecError,
};
use crate::Basis;

pub use stats::{per_round_ler, ratio_of_rates, total_from_per_round, wilson_interval, Ratio, Z95};

/// Version of the CSV column layout written by [`write_csv`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 28] = [
    "primitive", "basis", "d_x", "d_z", "L", "rounds", "t_pre", "t_merge", "t_post", "t_boundary", "family", "p",
    "eta", "axis", "sigma", "seed", "decoder", "shots", "errors", "ler_total", "ler_per_round", "ci_lo", "ci_hi",
    "rel_ler", "rel_lo", "rel_hi", "volume", "wall_time",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("circuit error: {0}")]
    Circuit(String),
    #[error("relative LER undefined: {0}")]
    Relative(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Primitive without distances or round counts; those come from the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PrimitiveTemplate {
    Memory {
        basis: Basis,
    },
    Hadamard {
        basis: Basis,
    },
    LatticeSurgery {
        parity: Parity,
        #[serde(default = "one")]
        bridge_length: usize,
    },
    PhaseGate {
        #[serde(default = "one")]
        bridge_length: usize,
    },
}

fn one() -> usize {
    1
}

impl PrimitiveTemplate {
    /// Round count applied uniformly: memory `t`; Hadamard `t_pre = t_post`;
    /// lattice surgery `t_pre = t_merge = t_post`; phase gate `t_merge = t_boundary`.
    pub fn instantiate(&self, d_x: usize, d_z: usize, rounds: usize) -> PrimitiveSpec {
        let geometry = PatchGeometry::new(d_x, d_z);
        match *self {
            PrimitiveTemplate::Memory { basis } => PrimitiveSpec::Memory(MemorySpec { geometry, rounds, basis }),
            PrimitiveTemplate::Hadamard { basis } => {
                PrimitiveSpec::Hadamard(HadamardSpec { geometry, t_pre: rounds, t_post: rounds, basis })
            }
            PrimitiveTemplate::LatticeSurgery { parity, bridge_length } => {
                PrimitiveSpec::LatticeSurgery(LatticeSurgerySpec {
                    geometry,
                    bridge_length,
                    t_pre: rounds,
                    t_merge: rounds,
                    t_post: rounds,
                    parity,
                })
            }
            PrimitiveTemplate::PhaseGate { bridge_length } => PrimitiveSpec::PhaseGate(PhaseGateSpec {
                d: d_x.min(d_z),
                bridge_length,
                t_merge: rounds,
                t_boundary: rounds,
            }),
        }
    }

    /// Distance protecting the measured observable, used by the `rounds = "d"` policy.
    pub fn protecting_distance(&self, d_x: usize, d_z: usize) -> usize {
        match *self {
            // a Z-basis memory fails through X chains spanning d_x rows
            PrimitiveTemplate::Memory { basis: Basis::Z } => d_x,
            PrimitiveTemplate::Memory { basis: Basis::X } => d_z,
            _ => d_x.min(d_z),
        }
    }
}

/// A square distance or an explicit `(d_x, d_z)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Distance {
    Square(usize),
    Rect { d_x: usize, d_z: usize },
}

impl Distance {
    pub fn pair(self) -> (usize, usize) {
        match self {
            Distance::Square(d) => (d, d),
            Distance::Rect { d_x, d_z } => (d_x, d_z),
        }
    }
}

/// Fixed round count, or `"d"` for the protecting distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RoundsRepr", into = "RoundsRepr")]
pub enum RoundsPolicy {
    Fixed(usize),
    EqualsDistance,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RoundsRepr {
    Fixed(usize),
    Named(String),
}

impl TryFrom<RoundsRepr> for RoundsPolicy {
    type Error = String;
    fn try_from(r: RoundsRepr) -> Result<Self, String> {
        match r {
            RoundsRepr::Fixed(n) => Ok(RoundsPolicy::Fixed(n)),
            RoundsRepr::Named(s) if s == "d" => Ok(RoundsPolicy::EqualsDistance),
            RoundsRepr::Named(s) => Err(format!("rounds must be an integer or \"d\", got \"{}\"", s)),
        }
    }
}

impl From<RoundsPolicy> for RoundsRepr {
    fn from(r: RoundsPolicy) -> Self {
        match r {
            RoundsPolicy::Fixed(n) => RoundsRepr::Fixed(n),
            RoundsPolicy::EqualsDistance => RoundsRepr::Named("d".into()),
        }
    }
}

/// Noise family with `p` left to the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyTemplate {
    pub family: Family,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub axis: Option<Basis>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl FamilyTemplate {
    pub fn uniform() -> Self {
        FamilyTemplate { family: Family::Uniform, eta: None, axis: None, sigma: None, seed: None }
    }

    pub fn at(&self, p: f64) -> FamilyConfig {
        FamilyConfig { family: self.family, p, eta: self.eta, axis: self.axis, sigma: self.sigma, seed: self.seed }
    }
}

/// Parameters pinned on one component and/or round, layered over the family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OverrideEntry {
    #[serde(default)]
    pub qubit: Option<u32>,
    #[serde(default)]
    pub pair: Option<[u32; 2]>,
    #[serde(default)]
    pub round: Option<u32>,
    #[serde(flatten)]
    pub params: NoiseOverride,
}

fn merge_override(base: &mut NoiseOverride, top: &NoiseOverride) {
    if top.gate1.is_some() {
        base.gate1 = top.gate1;
    }
    if top.gate2.is_some() {
        base.gate2 = top.gate2;
    }
    if top.spam.is_some() {
        base.spam = top.spam;
    }
    if top.idle.is_some() {
        base.idle = top.idle;
    }
}

impl OverrideEntry {
    fn apply(&self, a: &mut NoiseAssignment) -> Result<(), BenchError> {
        let key = match (self.qubit, self.pair) {
            (Some(_), Some(_)) => return Err(BenchError::Config("override sets both qubit and pair".into())),
            (Some(q), None) => Some(ComponentKey::Qubit(q)),
            (None, Some([u, v])) if u != v => Some(ComponentKey::pair(u, v)),
            (None, Some(_)) => return Err(BenchError::Config("override pair endpoints must differ".into())),
            (None, None) => None,
        };
        let slot = match (key, self.round) {
            (Some(k), Some(r)) => a.spatio_temporal.entry((k, r)).or_default(),
            (Some(k), None) => a.spatial.entry(k).or_default(),
            (None, Some(r)) => a.temporal.entry(r).or_default(),
            (None, None) => &mut a.global,
        };
        merge_override(slot, &self.params);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stopping {
    #[serde(default = "default_max_shots")]
    pub max_shots: u64,
    #[serde(default = "default_max_errors")]
    pub max_errors: u64,
    /// Cap that replaces `max_shots` when it is reached with fewer than
    /// `low_ler_errors` errors.
    #[serde(default = "default_low_ler_cap")]
    pub low_ler_cap: u64,
    #[serde(default = "default_low_ler_errors")]
    pub low_ler_errors: u64,
    #[serde(default = "default_batch")]
    pub batch: u64,
}

fn default_max_shots() -> u64 {
    10_000_000
}
fn default_max_errors() -> u64 {
    1_000
}
fn default_low_ler_cap() -> u64 {
    100_000_000
}
fn default_low_ler_errors() -> u64 {
    10
}
fn default_batch() -> u64 {
    100_000
}

impl Default for Stopping {
    fn default() -> Self {
        Stopping {
            max_shots: default_max_shots(),
            max_errors: default_max_errors(),
            low_ler_cap: default_low_ler_cap(),
            low_ler_errors: default_low_ler_errors(),
            batch: default_batch(),
        }
    }
}

fn default_first() -> Basis {
    Basis::Z
}

fn default_mode() -> DecoderMode {
    DecoderMode::Uncorrelated
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub primitive: PrimitiveTemplate,
    pub noise: FamilyTemplate,
    #[serde(default = "default_mode")]
    pub decoder: DecoderMode,
    /// Side decoded first by correlated matching.
    #[serde(default = "default_first")]
    pub correlated_first: Basis,
    pub distances: Vec<Distance>,
    pub p: Vec<f64>,
    pub rounds: RoundsPolicy,
    #[serde(default)]
    pub stopping: Stopping,
    #[serde(default)]
    pub seed: u64,
    /// Observable scored for failures; every observable when unset.
    #[serde(default)]
    pub observable: Option<usize>,
    /// Also run the uniform family at each point and report the ratio.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default, rename = "override")]
    pub overrides: Vec<OverrideEntry>,
}

impl ExperimentConfig {
    pub fn new(primitive: PrimitiveTemplate, noise: FamilyTemplate, distances: Vec<Distance>, p: Vec<f64>, rounds: RoundsPolicy) -> Self {
        ExperimentConfig {
            primitive,
            noise,
            decoder: DecoderMode::Uncorrelated,
            correlated_first: Basis::Z,
            distances,
            p,
            rounds,
            stopping: Stopping::default(),
            seed: 0,
            observable: None,
            baseline: false,
            record_wall_time: false,
            overrides: vec![],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let s = &self.stopping;
        if s.max_shots == 0 || s.max_errors == 0 || s.low_ler_cap == 0 || s.batch == 0 {
            return Err(BenchError::Config("stopping thresholds must be positive".into()));
        }
        if self.distances.is_empty() {
            return Err(BenchError::Config("distance list is empty".into()));
        }
        if self.p.is_empty() {
            return Err(BenchError::Config("error-rate list is empty".into()));
        }
        if self.rounds == RoundsPolicy::Fixed(0) {
            return Err(BenchError::Config("rounds must be positive".into()));
        }
        for &p in &self.p {
            self.noise.at(p).validate()?;
        }
        for pt in self.points() {
            pt.primitive.validate()?;
        }
        Ok(())
    }

    /// Sweep points in output order: distances outer, error rates inner.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for d in &self.distances {
            let (d_x, d_z) = d.pair();
            let rounds = match self.rounds {
                RoundsPolicy::Fixed(n) => n,
                RoundsPolicy::EqualsDistance => self.primitive.protecting_distance(d_x, d_z),
            };
            for &p in &self.p {
                let index = out.len() as u64;
                out.push(SweepPoint {
                    primitive: self.primitive.instantiate(d_x, d_z, rounds),
                    family: self.noise.at(p),
                    decoder: self.decoder,
                    seed: point_seed(self.seed, index),
                });
            }
        }
        out
    }
}

/// Sampling seed of the `index`-th sweep point.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    KeyedRng::new(seed, 0x5eed, index, 0).next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub primitive: PrimitiveSpec,
    pub family: FamilyConfig,
    pub decoder: DecoderMode,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub point: SweepPoint,
    pub shots: u64,
    pub errors: u64,
    pub ler_total: f64,
    pub ler_per_round: f64,
    /// Set when the total rate exceeded 1/2.
    pub saturated: bool,
    pub ci_total: (f64, f64),
    pub ci_per_round: (f64, f64),
    pub rel_ler: Option<Ratio>,
    pub volume: u64,
    pub wall_time: f64,
}

impl RunResult {
    pub fn rounds(&self) -> usize {
        self.point.primitive.rounds()
    }
}

/// Everything needed to sample and decode one point.
pub struct PreparedPoint {
    pub compiled: CompiledCircuit,
    pub decoder: Decoder,
    /// Whether any mechanism can flip an observable at all.
    pub can_fail: bool,
}

pub fn prepare_point(
    point: &SweepPoint,
    overrides: &[OverrideEntry],
    first: Basis,
) -> Result<PreparedPoint, BenchError> {
    let circuit = point.primitive.generate()?;
    let mut assignment = make_builtin_family(&point.family, &CircuitContext::from_circuit(&circuit))?;
    for o in overrides {
        o.apply(&mut assignment)?;
    }
    let noisy = apply_noise(&circuit, &assignment)?;
    let dem = build_dem(&noisy).map_err(|e| BenchError::Circuit(e.to_string()))?;
    let mut decoder = Decoder::new(&dem, point.decoder)?;
    decoder.first = first;
    let compiled = CompiledCircuit::new(&noisy).map_err(|e| BenchError::Circuit(e.to_string()))?;
    let can_fail = dem.mechanisms.iter().any(|m| !m.observables.is_empty());
    Ok(PreparedPoint { compiled, decoder, can_fail })
}

/// Samples and decodes until `max_errors` logical errors or the shot cap.
///
/// The cap starts at `max_shots` and is raised once to `low_ler_cap` if it
/// is reached with fewer than `low_ler_errors` errors. Batches start on
/// multiples of 64 shots, so the sampled stream does not depend on `batch`
/// beyond where sampling stops.
pub fn sample_until(
    prep: &PreparedPoint,
    seed: u64,
    stopping: &Stopping,
    observable: Option<usize>,
) -> Result<(u64, u64), BenchError> {
    let batch = stopping.batch.div_ceil(64) * 64;
    let mut cap = stopping.max_shots;
    let (mut shots, mut errors) = (0u64, 0u64);
    loop {
        if errors >= stopping.max_errors {
            break;
        }
        if shots >= cap {
            if cap == stopping.max_shots
                && prep.can_fail
                && errors < stopping.low_ler_errors
                && stopping.low_ler_cap > cap
            {
                cap = stopping.low_ler_cap;
            } else {
                break;
            }
        }
        let n = batch.min(cap - shots) as usize;
        let chunk = (n / rayon::current_num_threads()).max(4096);
        let table = prep.compiled.sample_parallel(shots, n, seed, chunk);
        let pred = prep.decoder.decode_batch(&table)?;
        errors += pred
            .iter()
            .enumerate()
            .filter(|&(s, &m)| match observable {
                Some(k) => (m >> k & 1 == 1) != table.observable(s, k),
                None => m != table.observable_mask(s),
            })
            .count() as u64;
        shots += n as u64;
    }
    Ok((shots, errors))
}

pub fn make_result(point: SweepPoint, shots: u64, errors: u64, wall_time: f64) -> Result<RunResult, BenchError> {
    let t = point.primitive.rounds();
    let p_total = if shots == 0 { 0.0 } else { errors as f64 / shots as f64 };
    let (e, saturated) = per_round_ler(p_total, t);
    let ci_total = wilson_interval(errors, shots, Z95);
    let ci_per_round = (per_round_ler(ci_total.0, t).0, per_round_ler(ci_total.1, t).0);
    let volume = spacetime_volume(&point.primitive)?;
    Ok(RunResult {
        point,
        shots,
        errors,
        ler_total: p_total,
        ler_per_round: e,
        saturated,
        ci_total,
        ci_per_round,
        rel_ler: None,
        volume,
        wall_time,
    })
}

/// Runs one point end to end.
pub fn run_point(
    point: &SweepPoint,
    config: &ExperimentConfig,
) -> Result<RunResult, BenchError> {
    let start = Instant::now();
    let prep = prepare_point(point, &config.overrides, config.correlated_first)?;
    let (shots, errors) = sample_until(&prep, point.seed, &config.stopping, config.observable)?;
    let wall = if config.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 };
    make_result(point.clone(), shots, errors, wall)
}

/// Ratio of per-round rates with a propagated interval.
pub fn relative_ler(structured: &RunResult, baseline: &RunResult) -> Result<Ratio, BenchError> {
    let (a, b) = (&structured.point, &baseline.point);
    if a.primitive != b.primitive || a.family.p != b.family.p {
        return Err(BenchError::Relative("results differ in primitive, distance, p or rounds".into()));
    }
    ratio_of_rates(structured.errors, structured.shots, baseline.errors, baseline.shots, structured.rounds())
        .ok_or_else(|| BenchError::Relative("baseline LER is zero".into()))
}

/// Runs every sweep point, handing results to `sink` in point order as they
/// complete. With `baseline` set, each non-uniform point is followed by its
/// uniform reference and carries the ratio.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut sink: impl FnMut(&RunResult) -> Result<(), BenchError> + Send,
) -> Result<Vec<RunResult>, BenchError> {
    config.validate()?;
    let points = config.points();
    let jobs: Vec<(usize, SweepPoint, bool)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, pt)| {
            let mut v = vec![(i, pt.clone(), false)];
            if config.baseline && pt.family.family != Family::Uniform {
                let mut b = pt.clone();
                b.family = FamilyTemplate::uniform().at(pt.family.p);
                v.push((i, b, true));
            }
            v
        })
        .collect();
    let state = std::sync::Mutex::new((Vec::<Option<RunResult>>::new(), 0usize, Ok::<(), BenchError>(())));
    state.lock().unwrap().0.resize(jobs.len(), None);
    let sink = std::sync::Mutex::new(&mut sink);
    let run = |j: usize| -> Result<(), BenchError> {
        let r = run_point(&jobs[j].1, config)?;
        let mut st = state.lock().unwrap();
        st.0[j] = Some(r);
        // flush completed prefix; a structured result waits for its baseline
        while st.1 < jobs.len() {
            let k = st.1;
            let has_baseline = k + 1 < jobs.len() && jobs[k + 1].2 && jobs[k + 1].0 == jobs[k].0;
            let ready = st.0[k].is_some() && (!has_baseline || st.0[k + 1].is_some());
            if !ready {
                break;
            }
            if has_baseline {
                let base = st.0[k + 1].clone().unwrap();
                let s = st.0[k].as_mut().unwrap();
                s.rel_ler = ratio_of_rates(s.errors, s.shots, base.errors, base.shots, s.rounds());
                let mut f = sink.lock().unwrap();
                (*f)(st.0[k].as_ref().unwrap())?;
                (*f)(&base)?;
                st.1 += 2;
            } else {
                (*sink.lock().unwrap())(st.0[k].as_ref().unwrap())?;
                st.1 += 1;
            }
        }
        Ok(())
    };
    (0..jobs.len()).into_par_iter().try_for_each(run)?;
    let st = state.into_inner().unwrap();
    Ok(st.0.into_iter().map(|r| r.unwrap()).collect())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunResult>, BenchError> {
    run_experiment_with(config, |_| Ok(()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn float(x: f64) -> String {
    format!("{:e}", x)
}

pub fn csv_record(r: &RunResult) -> Vec<String> {
    let pt = &r.point;
    let (basis, d_x, d_z, l, t_pre, t_merge, t_post, t_boundary) = match pt.primitive {
        PrimitiveSpec::Memory(s) => (s.basis.name(), s.geometry.d_x, s.geometry.d_z, None, None, None, None, None),
        PrimitiveSpec::Hadamard(s) => {
            (s.basis.name(), s.geometry.d_x, s.geometry.d_z, None, Some(s.t_pre), None, Some(s.t_post), None)
        }
        PrimitiveSpec::LatticeSurgery(s) => (
            match s.parity {
                Parity::XX => "XX",
                Parity::ZZ => "ZZ",
            },
            s.geometry.d_x,
            s.geometry.d_z,
            Some(s.bridge_length),
            Some(s.t_pre),
            Some(s.t_merge),
            Some(s.t_post),
            None,
        ),
        PrimitiveSpec::PhaseGate(s) => {
            ("Y", s.d, s.d, Some(s.bridge_length), None, Some(s.t_merge), None, Some(s.t_boundary))
        }
    };
    let f = &pt.family;
    vec![
        pt.primitive.name().to_string(),
        basis.to_string(),
        d_x.to_string(),
        d_z.to_string(),
        opt(l),
        r.rounds().to_string(),
        opt(t_pre),
        opt(t_merge),
        opt(t_post),
        opt(t_boundary),
        f.family.name().to_string(),
        float(f.p),
        opt(f.eta.map(float)),
        opt(f.axis.map(|a| a.name())),
        opt(f.sigma.map(float)),
        pt.seed.to_string(),
        match pt.decoder {
            DecoderMode::Uncorrelated => "uncorrelated",
            DecoderMode::Correlated => "correlated",
        }
        .to_string(),
        r.shots.to_string(),
        r.errors.to_string(),
        float(r.ler_total),
        float(r.ler_per_round),
        float(r.ci_per_round.0),
        float(r.ci_per_round.1),
        opt(r.rel_ler.map(|x| float(x.ratio))),
        opt(r.rel_ler.map(|x| float(x.lo))),
        opt(r.rel_ler.map(|x| float(x.hi))),
        r.volume.to_string(),
        float(r.wall_time),
    ]
}

/// Writes a header row followed by one row per result.
pub fn write_csv<W: Write>(out: W, results: &[RunResult]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in results {
        w.write_record(csv_record(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep, appending each row to `path` as soon as it is final.
pub fn run_to_csv(config: &ExperimentConfig, path: &Path, sidecar: bool) -> Result<Vec<RunResult>, BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    w.flush()?;
    let results = run_experiment_with(config, |r| {
        w.write_record(csv_record(r))?;
        w.flush()?;
        Ok(())
    })?;
    if sidecar {
        let json = serde_json::json!({ "schema_version": CSV_SCHEMA_VERSION, "config": config, "results": results });
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&json).unwrap())?;
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
seed = 7
distances = [3, { d_x = 3, d_z = 5 }]
p = [0.001, 0.002]
rounds = "d"

[primitive]
kind = "memory"
basis = "X"

[noise]
family = "biased"
eta = 10.0
axis = "Z"

[stopping]
max_shots = 2000

[[override]]
qubit = 4
round = 1
spam = { p_reset_z = 0.01, p_reset_x = 0.01, p_meas_z = 0.01, p_meas_x = 0.01 }
"#;

    #[test]
    fn config_parses() {
        let c = ExperimentConfig::from_toml(CONFIG).unwrap();
        assert_eq!(c.stopping.max_errors, 1000);
        assert_eq!(c.stopping.max_shots, 2000);
        let pts = c.points();
        assert_eq!(pts.len(), 4);
        // X-basis memory on (3, 5) runs d_z rounds
        assert_eq!(pts[2].primitive.rounds(), 5);
        assert_eq!(pts[0].primitive.rounds(), 3);
        assert_ne!(pts[0].seed, pts[1].seed);
    }

    #[test]
    fn config_rejects_bad_input() {
        let missing = CONFIG.replace("eta = 10.0\n", "");
        let err = ExperimentConfig::from_toml(&missing).unwrap_err().to_string();
        assert!(err.contains("eta"), "{}", err);
        assert!(ExperimentConfig::from_toml(&CONFIG.replace("rounds = \"d\"", "rounds = \"x\"")).is_err());
        assert!(ExperimentConfig::from_toml(&CONFIG.replace("distances = [3, { d_x = 3, d_z = 5 }]", "distances = []")).is_err());
        assert!(ExperimentConfig::from_toml(&CONFIG.replace("max_shots = 2000", "max_shots = 0")).is_err());
    }

    #[test]
    fn override_lands_on_tier() {
        let c = ExperimentConfig::from_toml(CONFIG).unwrap();
        let mut a = NoiseAssignment::global(NoiseOverride::uniform(0.001));
        c.overrides[0].apply(&mut a).unwrap();
        assert_eq!(a.tier_of(ComponentKey::Qubit(4), 1), "spatio-temporal");
        assert_eq!(a.spam(4, 1).unwrap().p_meas_x, 0.01);
        assert_eq!(a.gate1(4, 1).unwrap(), a.gate1(0, 0).unwrap());
    }

    #[test]
    fn noiseless_point_hits_max_shots() {
        let mut c = ExperimentConfig::new(
            PrimitiveTemplate::Memory { basis: Basis::Z },
            FamilyTemplate::uniform(),
            vec![Distance::Square(3)],
            vec![0.0],
            RoundsPolicy::Fixed(2),
        );
        c.stopping.max_shots = 1000;
        let r = run_experiment(&c).unwrap();
        assert_eq!((r[0].shots, r[0].errors, r[0].ler_total), (1000, 0, 0.0));
    }

    #[test]
    fn error_cap_stops_within_a_batch() {
        let mut c = ExperimentConfig::new(
            PrimitiveTemplate::Memory { basis: Basis::Z },
            FamilyTemplate::uniform(),
            vec![Distance::Square(3)],
            vec![0.01],
            RoundsPolicy::EqualsDistance,
        );
        c.stopping.max_errors = 100;
        c.stopping.batch = 1000;
        let r = &run_experiment(&c).unwrap()[0];
        assert!(r.errors >= 100);
        // batches are rounded up to 1024 shots
        assert_eq!(r.shots % 1024, 0);
        assert!(r.shots < 100_000);
        assert!(r.ci_total.0 <= r.ler_total && r.ler_total <= r.ci_total.1);
    }

    #[test]
    fn low_rate_raises_cap() {
        let mut c = ExperimentConfig::new(
            PrimitiveTemplate::Memory { basis: Basis::Z },
            FamilyTemplate::uniform(),
            vec![Distance::Square(3)],
            vec![1e-5],
            RoundsPolicy::Fixed(1),
        );
        c.stopping = Stopping { max_shots: 640, max_errors: 1000, low_ler_cap: 1280, low_ler_errors: 10, batch: 64 };
        let r = &run_experiment(&c).unwrap()[0];
        assert_eq!(r.shots, 1280);
    }
}
