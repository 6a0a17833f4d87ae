//! Tick resolution and noise insertion.

use std::collections::BTreeMap;

use super::{pta_idle_channel, IdleModel, NoiseAssignment, NoiseError, PauliChannel1};
use crate::circuit::{Circuit, Gate, Instruction, Target};

/// Operation durations by instruction kind (arbitrary time unit, ns for coherence use).
#[derive(Clone, Debug, PartialEq)]
pub struct Durations(pub BTreeMap<Gate, f64>);

impl Default for Durations {
    /// Every operation takes one unit, except the noiseless `MPP` readout which takes none.
    fn default() -> Self {
        let mut m = BTreeMap::new();
        for g in [Gate::R, Gate::RX, Gate::M, Gate::MX, Gate::H, Gate::S, Gate::CX, Gate::CZ] {
            m.insert(g, 1.0);
        }
        m.insert(Gate::MPP, 0.0);
        Durations(m)
    }
}

impl Durations {
    pub fn get(&self, g: Gate) -> Result<f64, NoiseError> {
        self.0.get(&g).copied().ok_or(NoiseError::MissingDuration(g))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickInfo {
    pub duration: f64,
    /// Idle time of every qubit in this tick (zero for fully busy qubits).
    pub idle: Vec<f64>,
    /// Qubits touched by any operation in the tick.
    pub active: Vec<bool>,
}

impl TickInfo {
    pub fn idle_windows(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.idle.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(q, &w)| (q as u32, w))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub ticks: Vec<TickInfo>,
}

/// Splits the circuit at `TICK`s and computes per-qubit idle windows.
pub fn resolve_ticks(circuit: &Circuit, durations: &Durations) -> Result<Schedule, NoiseError> {
    let n = circuit.num_qubits();
    let mut ticks = Vec::new();
    let mut busy = vec![0.0f64; n];
    let mut active = vec![false; n];
    let mut duration = 0.0f64;
    let mut any = false;
    let close = |busy: &mut Vec<f64>, active: &mut Vec<bool>, duration: &mut f64, ticks: &mut Vec<TickInfo>| {
        let idle = busy.iter().map(|&b| (*duration - b).max(0.0)).collect();
        ticks.push(TickInfo { duration: *duration, idle, active: std::mem::replace(active, vec![false; n]) });
        busy.iter_mut().for_each(|b| *b = 0.0);
        *duration = 0.0;
    };
    for ins in &circuit.instructions {
        if ins.gate == Gate::Tick {
            close(&mut busy, &mut active, &mut duration, &mut ticks);
            any = false;
            continue;
        }
        if !ins.gate.is_operation() {
            continue;
        }
        any = true;
        let dt = durations.get(ins.gate)?;
        duration = duration.max(dt);
        let mut qs: Vec<u32> = ins.qubit_targets().collect();
        if ins.gate == Gate::MPP {
            // products within one MPP are measured in sequence
            qs.sort_unstable();
            qs.dedup();
        }
        for q in qs {
            let qi = q as usize;
            if active[qi] {
                return Err(NoiseError::ScheduleConflict { tick: ticks.len(), qubit: q });
            }
            active[qi] = true;
            busy[qi] = dt;
        }
    }
    if any {
        close(&mut busy, &mut active, &mut duration, &mut ticks);
    }
    Ok(Schedule { ticks })
}

/// Appends `gate(args) targets` runs, merging consecutive targets with equal arguments.
fn push_grouped(out: &mut Vec<Instruction>, gate: Gate, items: Vec<(Vec<f64>, Vec<Target>)>) {
    let mut cur: Option<Instruction> = None;
    for (args, ts) in items {
        match cur.as_mut() {
            Some(c) if bits_equal(&c.args, &args) => c.targets.extend(ts),
            _ => {
                if let Some(c) = cur.take() {
                    out.push(c);
                }
                cur = Some(Instruction::new(gate, args, ts));
            }
        }
    }
    if let Some(c) = cur {
        out.push(c);
    }
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn idle_channel(model: IdleModel, window: f64) -> Result<PauliChannel1, NoiseError> {
    match model {
        IdleModel::Pauli(ch) => Ok(ch),
        IdleModel::Coherence(c) => pta_idle_channel(window, c.t1, c.t2),
    }
}

/// Inserts gate, SPAM and idle channels into a noiseless circuit.
///
/// `MPP` is treated as an ideal readout and never receives noise.
pub fn apply_noise(circuit: &Circuit, assignment: &NoiseAssignment) -> Result<Circuit, NoiseError> {
    if circuit.has_noise() {
        return Err(NoiseError::AlreadyNoisy);
    }
    let schedule = resolve_ticks(circuit, &assignment.durations)?;
    let n = circuit.num_qubits();

    // alive window of each qubit, in tick indices
    let mut first = vec![usize::MAX; n];
    let mut last = vec![0usize; n];
    for (t, info) in schedule.ticks.iter().enumerate() {
        for q in 0..n {
            if info.active[q] {
                first[q] = first[q].min(t);
                last[q] = t;
            }
        }
    }

    let mut out: Vec<Instruction> = Vec::with_capacity(circuit.instructions.len() * 2);
    let mut tick = 0usize;
    let mut resets_seen = 0u32;
    let mut tick_has_reset = false;
    let mut mpp_in_tick = vec![false; n];
    let round_of = |resets_seen: u32| resets_seen.saturating_sub(1);

    let flush_idle = |out: &mut Vec<Instruction>, tick: usize, round: u32, mpp: &[bool]| -> Result<(), NoiseError> {
        let Some(info) = schedule.ticks.get(tick) else { return Ok(()) };
        let mut items = Vec::new();
        for (q, w) in info.idle_windows() {
            let qi = q as usize;
            if first[qi] == usize::MAX || tick < first[qi] || tick > last[qi] || mpp[qi] {
                continue;
            }
            let ch = idle_channel(assignment.idle(q, round)?, w)?;
            items.push((ch.args(), vec![Target::Qubit(q)]));
        }
        push_grouped(out, Gate::PauliChannel1, items);
        Ok(())
    };

    for ins in &circuit.instructions {
        let g = ins.gate;
        if g == Gate::Tick {
            flush_idle(&mut out, tick, round_of(resets_seen), &mpp_in_tick)?;
            out.push(ins.clone());
            tick += 1;
            tick_has_reset = false;
            mpp_in_tick.iter_mut().for_each(|m| *m = false);
            continue;
        }
        if g.is_reset() && !tick_has_reset {
            tick_has_reset = true;
            resets_seen += 1;
        }
        let round = round_of(resets_seen);
        match g {
            Gate::R | Gate::RX => {
                out.push(ins.clone());
                let (flip, items) = if g == Gate::R { (Gate::XError, true) } else { (Gate::ZError, false) };
                let mut v = Vec::new();
                for q in ins.qubit_targets() {
                    let s = assignment.spam(q, round)?;
                    v.push((vec![if items { s.p_reset_z } else { s.p_reset_x }], vec![Target::Qubit(q)]));
                }
                push_grouped(&mut out, flip, v);
            }
            Gate::M | Gate::MX => {
                let mut v = Vec::new();
                for q in ins.qubit_targets() {
                    let s = assignment.spam(q, round)?;
                    v.push((vec![if g == Gate::M { s.p_meas_z } else { s.p_meas_x }], vec![Target::Qubit(q)]));
                }
                push_grouped(&mut out, if g == Gate::M { Gate::XError } else { Gate::ZError }, v);
                out.push(ins.clone());
            }
            Gate::H | Gate::S => {
                out.push(ins.clone());
                let mut v = Vec::new();
                for q in ins.qubit_targets() {
                    v.push((assignment.gate1(q, round)?.args(), vec![Target::Qubit(q)]));
                }
                push_grouped(&mut out, Gate::PauliChannel1, v);
            }
            Gate::CX | Gate::CZ => {
                out.push(ins.clone());
                let mut v = Vec::new();
                for pr in ins.targets.chunks(2) {
                    if let [Target::Qubit(a), Target::Qubit(b)] = *pr {
                        v.push((assignment.gate2(a, b, round)?.p.to_vec(), vec![pr[0], pr[1]]));
                    }
                }
                push_grouped(&mut out, Gate::PauliChannel2, v);
            }
            Gate::MPP => {
                for q in ins.qubit_targets() {
                    mpp_in_tick[q as usize] = true;
                }
                out.push(ins.clone());
            }
            _ => out.push(ins.clone()),
        }
    }
    flush_idle(&mut out, tick, round_of(resets_seen), &mpp_in_tick)?;
    Ok(Circuit { instructions: out })
}
