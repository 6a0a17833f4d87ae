//! Rotated-lattice geometry, the syndrome-extraction round builder and the
//! detector bookkeeping shared by every generator.
//!
//! Data qubit `(c, r)` sits at column `c`, row `r`. Plaquette `(c, r)` covers
//! data `(c, r), (c+1, r), (c, r+1), (c+1, r+1)`; it is X-type when `c + r`
//! is even. Top and bottom boundaries carry weight-2 X checks, left and right
//! boundaries weight-2 Z checks, so a Z logical runs along a row and an X
//! logical along a column.

use std::collections::{BTreeMap, BTreeSet};

use crate::circuit::{mpp_targets, Circuit, Gate, Pauli, Target};
use crate::Basis;

pub type Pos = (i32, i32);

/// Checkerboard type of a plaquette position.
pub fn plaquette_basis(pos: Pos) -> Basis {
    if (pos.0 + pos.1).rem_euclid(2) == 0 {
        Basis::X
    } else {
        Basis::Z
    }
}

/// A stabilizer check measured through one ancilla.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaquette {
    pub pos: Pos,
    pub basis: Basis,
    /// Corners in TL, TR, BL, BR order; `None` where the check is truncated.
    pub corners: [Option<Pos>; 4],
}

impl Plaquette {
    pub fn support(&self) -> Vec<Pos> {
        let mut v: Vec<Pos> = self.corners.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// The corner touched in CX layer `k`. The order depends on the position
    /// class only, so it survives a transversal Hadamard unchanged.
    fn corner_in_layer(&self, k: usize) -> Option<Pos> {
        // X-class positions use TL, TR, BL, BR; Z-class positions TL, BL, TR, BR.
        const ZORDER: [usize; 4] = [0, 1, 2, 3];
        const NORDER: [usize; 4] = [0, 2, 1, 3];
        let order = if plaquette_basis(self.pos) == Basis::X { ZORDER } else { NORDER };
        self.corners[order[k]]
    }
}

/// A rectangular block of data qubits: `width` columns by `height` rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub col0: i32,
    pub row0: i32,
    pub width: i32,
    pub height: i32,
}

impl Region {
    pub fn new(col0: i32, row0: i32, width: usize, height: usize) -> Self {
        Region { col0, row0, width: width as i32, height: height as i32 }
    }

    pub fn contains(&self, p: Pos) -> bool {
        p.0 >= self.col0 && p.0 < self.col0 + self.width && p.1 >= self.row0 && p.1 < self.row0 + self.height
    }

    pub fn data(&self) -> Vec<Pos> {
        let mut v = Vec::new();
        for r in self.row0..self.row0 + self.height {
            for c in self.col0..self.col0 + self.width {
                v.push((c, r));
            }
        }
        v
    }

    pub fn row(&self, r: i32) -> Vec<Pos> {
        (self.col0..self.col0 + self.width).map(|c| (c, r)).collect()
    }

    pub fn column(&self, c: i32) -> Vec<Pos> {
        (self.row0..self.row0 + self.height).map(|r| (c, r)).collect()
    }

    /// Stabilizers of the rotated surface code on this block.
    pub fn plaquettes(&self) -> Vec<Plaquette> {
        let (c0, r0, w, h) = (self.col0, self.row0, self.width, self.height);
        let mut out = Vec::new();
        for r in r0 - 1..r0 + h {
            for c in c0 - 1..c0 + w {
                let pos = (c, r);
                let basis = plaquette_basis(pos);
                let top = r == r0 - 1;
                let bottom = r == r0 + h - 1;
                let left = c == c0 - 1;
                let right = c == c0 + w - 1;
                if (top || bottom) && (left || right) {
                    continue;
                }
                if (top || bottom) && basis != Basis::X {
                    continue;
                }
                if (left || right) && basis != Basis::Z {
                    continue;
                }
                let corners = [(c, r), (c + 1, r), (c, r + 1), (c + 1, r + 1)].map(|p| self.contains(p).then_some(p));
                if corners.iter().flatten().count() < 2 {
                    continue;
                }
                out.push(Plaquette { pos, basis, corners });
            }
        }
        out
    }
}

/// GF(2) vectors as packed words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitVec(pub Vec<u64>);

impl BitVec {
    pub fn zeros(n: usize) -> Self {
        BitVec(vec![0; n.div_ceil(64).max(1)])
    }
    pub fn flip(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }
    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    pub fn xor(&mut self, o: &BitVec) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a ^= b;
        }
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn lowest(&self) -> Option<usize> {
        self.0.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Finds a subset of `gens` whose XOR equals `target`.
pub fn solve_gf2(target: &BitVec, gens: &[BitVec]) -> Option<Vec<usize>> {
    // rows: (vector, combination of generator indices)
    let mut basis: Vec<(usize, BitVec, BitVec)> = Vec::new();
    let m = gens.len();
    for (i, g) in gens.iter().enumerate() {
        let mut v = g.clone();
        let mut comb = BitVec::zeros(m);
        comb.flip(i);
        for (piv, bv, bc) in &basis {
            if v.get(*piv) {
                v.xor(bv);
                comb.xor(bc);
            }
        }
        if let Some(p) = v.lowest() {
            // keep the basis reduced so later insertions stay consistent
            for (_, bv, bc) in basis.iter_mut() {
                if bv.get(p) {
                    bv.xor(&v);
                    bc.xor(&comb);
                }
            }
            basis.push((p, v, comb));
        }
    }
    let mut t = target.clone();
    let mut comb = BitVec::zeros(m);
    for (piv, bv, bc) in &basis {
        if t.get(*piv) {
            t.xor(bv);
            comb.xor(bc);
        }
    }
    if !t.is_zero() {
        return None;
    }
    Some((0..m).filter(|&i| comb.get(i)).collect())
}

#[derive(Clone, Debug)]
struct Tracked {
    basis: Basis,
    support: Vec<Pos>,
    /// Last parity expression (absolute measurement indices), `None` when random.
    expr: Option<Vec<usize>>,
}

/// Classical knowledge of a single data qubit in a basis.
#[derive(Clone, Copy, Debug)]
enum Known {
    Fresh(Basis),
    Measured(Basis, usize),
}

impl Known {
    fn basis(self) -> Basis {
        match self {
            Known::Fresh(b) | Known::Measured(b, _) => b,
        }
    }
}

fn xor_into(acc: &mut Vec<usize>, more: &[usize]) {
    acc.extend_from_slice(more);
    *acc = crate::circuit::xor_reduce(std::mem::take(acc));
}

/// Incrementally emits a circuit made of syndrome-extraction rounds.
pub struct Builder {
    pub circuit: Circuit,
    data: BTreeMap<Pos, u32>,
    anc: BTreeMap<Pos, u32>,
    meas: usize,
    stabs: BTreeMap<Pos, Tracked>,
    known: BTreeMap<Pos, Known>,
    pub round: u32,
    /// Side label flip applied to every detector (set when a transversal H
    /// swaps roles, so labels follow the final stabilizer roles).
    side_flip: bool,
    observables: Vec<Vec<usize>>,
}

impl Builder {
    /// Allocates data qubits then ancillas, each sorted by (row, column).
    pub fn new(data: &BTreeSet<Pos>, ancillas: &BTreeSet<Pos>, num_observables: usize) -> Self {
        let mut circuit = Circuit::new();
        let mut dmap = BTreeMap::new();
        let mut amap = BTreeMap::new();
        let mut by_row: Vec<Pos> = data.iter().copied().collect();
        by_row.sort_by_key(|p| (p.1, p.0));
        for p in by_row {
            let q = dmap.len() as u32;
            dmap.insert(p, q);
            circuit.push_qubits(Gate::QubitCoords, vec![p.0 as f64, p.1 as f64], &[q]);
        }
        let mut by_row: Vec<Pos> = ancillas.iter().copied().collect();
        by_row.sort_by_key(|p| (p.1, p.0));
        for p in by_row {
            let q = (dmap.len() + amap.len()) as u32;
            amap.insert(p, q);
            circuit.push_qubits(Gate::QubitCoords, vec![p.0 as f64 + 0.5, p.1 as f64 + 0.5], &[q]);
        }
        Builder {
            circuit,
            data: dmap,
            anc: amap,
            meas: 0,
            stabs: BTreeMap::new(),
            known: BTreeMap::new(),
            round: 0,
            side_flip: false,
            observables: vec![Vec::new(); num_observables],
        }
    }

    pub fn set_side_flip(&mut self, flip: bool) {
        self.side_flip = flip;
    }

    pub fn data_qubit(&self, p: Pos) -> u32 {
        self.data[&p]
    }

    fn side(&self, pos: Pos) -> f64 {
        let b = plaquette_basis(pos);
        let b = if self.side_flip { b.other() } else { b };
        match b {
            Basis::X => 0.0,
            Basis::Z => 1.0,
        }
    }

    pub fn tick(&mut self) {
        self.circuit.push(Gate::Tick, vec![], vec![]);
    }

    fn detector(&mut self, pos: Pos, t: u32, recs: &[usize]) {
        let targets = recs.iter().map(|&m| Target::Rec((self.meas - m) as u32)).collect();
        let side = self.side(pos);
        self.circuit.push(Gate::Detector, vec![pos.0 as f64 + 0.5, pos.1 as f64 + 0.5, t as f64, side], targets);
    }

    /// Adds measurement records to an observable.
    pub fn observable_add(&mut self, k: usize, recs: &[usize]) {
        xor_into(&mut self.observables[k], recs);
    }

    /// Plaquette records measured in the most recent round.
    pub fn last_record(&self, pos: Pos) -> Option<Vec<usize>> {
        self.stabs.get(&pos).and_then(|t| t.expr.clone())
    }

    /// Resets data qubits; they are classically known until the next activation.
    pub fn reset_data(&mut self, qubits: &[Pos], basis: Basis) {
        if qubits.is_empty() {
            return;
        }
        let qs: Vec<u32> = qubits.iter().map(|p| self.data[p]).collect();
        self.circuit.push_qubits(if basis == Basis::Z { Gate::R } else { Gate::RX }, vec![], &qs);
        for p in qubits {
            self.known.insert(*p, Known::Fresh(basis));
        }
    }

    /// Measures data qubits; returns their absolute record indices.
    pub fn measure_data(&mut self, qubits: &[Pos], basis: Basis) -> Vec<usize> {
        if qubits.is_empty() {
            return vec![];
        }
        let qs: Vec<u32> = qubits.iter().map(|p| self.data[p]).collect();
        self.circuit.push_qubits(if basis == Basis::Z { Gate::M } else { Gate::MX }, vec![], &qs);
        let mut recs = Vec::new();
        for p in qubits {
            self.known.insert(*p, Known::Measured(basis, self.meas));
            recs.push(self.meas);
            self.meas += 1;
        }
        recs
    }

    /// Drops classical knowledge of data qubits (e.g. after a basis change).
    pub fn forget(&mut self, qubits: &[Pos]) {
        for p in qubits {
            self.known.remove(p);
        }
    }

    pub fn gate1(&mut self, gate: Gate, qubits: &[Pos]) {
        if qubits.is_empty() {
            return;
        }
        let qs: Vec<u32> = qubits.iter().map(|p| self.data[p]).collect();
        self.circuit.push_qubits(gate, vec![], &qs);
    }

    /// Transversal H on the given data: checks keep their support and swap type.
    pub fn transversal_h(&mut self, qubits: &[Pos]) {
        self.gate1(Gate::H, qubits);
        for t in self.stabs.values_mut() {
            t.basis = t.basis.other();
        }
    }

    /// Expresses `support` (in `basis`) through tracked checks and known qubits.
    fn reconstruct(&self, pos: Option<Pos>, basis: Basis, support: &[Pos], singles_only: bool) -> Option<Vec<usize>> {
        let singles: Vec<(Pos, Known)> =
            self.known.iter().filter(|(_, k)| k.basis() == basis).map(|(p, k)| (*p, *k)).collect();
        let mut qubits: BTreeMap<Pos, usize> = BTreeMap::new();
        for p in support.iter().chain(singles.iter().map(|s| &s.0)) {
            let n = qubits.len();
            qubits.entry(*p).or_insert(n);
        }
        let own: Vec<(Pos, &Tracked)> = match pos.and_then(|p| self.stabs.get(&p).map(|t| (p, t))) {
            Some((p, t)) if t.basis == basis && t.expr.is_some() => vec![(p, t)],
            _ => vec![],
        };
        let others: Vec<(Pos, &Tracked)> = self
            .stabs
            .iter()
            .filter(|(p, t)| t.basis == basis && t.expr.is_some() && Some(**p) != pos)
            .map(|(p, t)| (*p, t))
            .collect();
        let attempts: Vec<Vec<(Pos, &Tracked)>> = if singles_only {
            vec![vec![]]
        } else {
            vec![own.clone(), vec![], own.iter().chain(others.iter()).cloned().collect()]
        };
        for stabs in attempts {
            let mut local = qubits.clone();
            for (_, t) in &stabs {
                for p in &t.support {
                    let n = local.len();
                    local.entry(*p).or_insert(n);
                }
            }
            let n = local.len();
            let vec_of = |ps: &[Pos]| {
                let mut v = BitVec::zeros(n);
                for p in ps {
                    v.flip(local[p]);
                }
                v
            };
            let target = vec_of(support);
            let mut gens: Vec<BitVec> = singles.iter().map(|s| vec_of(&[s.0])).collect();
            gens.extend(stabs.iter().map(|(_, t)| vec_of(&t.support)));
            if let Some(sol) = solve_gf2(&target, &gens) {
                let mut expr = Vec::new();
                for i in sol {
                    if i < singles.len() {
                        if let Known::Measured(_, m) = singles[i].1 {
                            xor_into(&mut expr, &[m]);
                        }
                    } else {
                        xor_into(&mut expr, stabs[i - singles.len()].1.expr.as_ref().unwrap());
                    }
                }
                return Some(expr);
            }
        }
        None
    }

    /// Switches the tracked check set, deriving each new check's expected value
    /// from the previous checks and classically known data.
    pub fn activate(&mut self, set: &[Plaquette]) {
        let mut next = BTreeMap::new();
        for pl in set {
            let support = pl.support();
            let keep = self.stabs.get(&pl.pos).filter(|t| t.basis == pl.basis && t.support == support);
            let expr = match keep {
                Some(t) => t.expr.clone(),
                None => self.reconstruct(Some(pl.pos), pl.basis, &support, false),
            };
            next.insert(pl.pos, Tracked { basis: pl.basis, support, expr });
        }
        self.stabs = next;
        self.known.clear();
    }

    /// Emits detectors for tracked checks that the latest data measurements
    /// fully determine, then forgets those checks.
    pub fn close_with_data(&mut self) {
        let t = self.round;
        let mut closed = Vec::new();
        let positions: Vec<Pos> = self.stabs.keys().copied().collect();
        for pos in positions {
            let tr = self.stabs[&pos].clone();
            let Some(e) = tr.expr.clone() else { continue };
            if let Some(mut recs) = self.reconstruct(None, tr.basis, &tr.support, true) {
                if !tr.support.iter().all(|p| matches!(self.known.get(p), Some(Known::Measured(b, _)) if *b == tr.basis)) {
                    continue;
                }
                xor_into(&mut recs, &e);
                self.detector(pos, t, &recs);
                closed.push(pos);
            }
        }
        for p in closed {
            self.stabs.remove(&p);
        }
    }

    /// Noiseless product measurements of every tracked check on `region`,
    /// each closed by a detector, followed by the extra products given.
    /// Returns the record indices of the extra products.
    pub fn mpp_close(&mut self, region: &Region, extra: &[Vec<(Pauli, Pos)>]) -> Vec<usize> {
        let positions: Vec<Pos> =
            self.stabs.iter().filter(|(_, t)| t.support.iter().all(|p| region.contains(*p))).map(|(p, _)| *p).collect();
        let mut products = Vec::new();
        for p in &positions {
            let t = &self.stabs[p];
            let pauli = if t.basis == Basis::X { Pauli::X } else { Pauli::Z };
            products.push(t.support.iter().map(|q| (pauli, self.data[q])).collect::<Vec<_>>());
        }
        for e in extra {
            products.push(e.iter().map(|(pa, q)| (*pa, self.data[q])).collect());
        }
        self.circuit.push(Gate::MPP, vec![], mpp_targets(&products));
        let base = self.meas;
        self.meas += products.len();
        let t = self.round;
        for (i, p) in positions.iter().enumerate() {
            let tr = self.stabs.remove(p).unwrap();
            if let Some(mut e) = tr.expr {
                xor_into(&mut e, &[base + i]);
                self.detector(*p, t, &e);
            }
        }
        (0..extra.len()).map(|i| base + positions.len() + i).collect()
    }

    /// Ancilla resets for `set` plus the given data resets, in one tick.
    pub fn begin_round(&mut self, set: &[Plaquette]) {
        let mut rz = Vec::new();
        let mut rx = Vec::new();
        for pl in set {
            let q = self.anc[&pl.pos];
            if pl.basis == Basis::Z {
                rz.push(q);
            } else {
                rx.push(q);
            }
        }
        if !rz.is_empty() {
            self.circuit.push_qubits(Gate::R, vec![], &rz);
        }
        if !rx.is_empty() {
            self.circuit.push_qubits(Gate::RX, vec![], &rx);
        }
    }

    /// The four entangling layers, each followed by a tick.
    pub fn cx_layers(&mut self, set: &[Plaquette]) {
        for k in 0..4 {
            let mut targets = Vec::new();
            for pl in set {
                if let Some(c) = pl.corner_in_layer(k) {
                    let a = self.anc[&pl.pos];
                    let d = self.data[&c];
                    if pl.basis == Basis::X {
                        targets.extend([a, d]);
                    } else {
                        targets.extend([d, a]);
                    }
                }
            }
            if !targets.is_empty() {
                self.circuit.push_qubits(Gate::CX, vec![], &targets);
            }
            self.tick();
        }
    }

    /// Ancilla measurements with their detectors.
    pub fn measure_ancillas(&mut self, set: &[Plaquette]) {
        let mut mz = Vec::new();
        let mut mx = Vec::new();
        for pl in set {
            if pl.basis == Basis::Z {
                mz.push(pl.pos);
            } else {
                mx.push(pl.pos);
            }
        }
        let t = self.round;
        for (gate, group) in [(Gate::M, mz), (Gate::MX, mx)] {
            if group.is_empty() {
                continue;
            }
            let qs: Vec<u32> = group.iter().map(|p| self.anc[p]).collect();
            self.circuit.push_qubits(gate, vec![], &qs);
            let base = self.meas;
            self.meas += group.len();
            for (i, pos) in group.iter().enumerate() {
                let m = base + i;
                let tr = self.stabs.get_mut(pos).expect("measured check is tracked");
                let prev = tr.expr.replace(vec![m]);
                if let Some(mut e) = prev {
                    xor_into(&mut e, &[m]);
                    self.detector(*pos, t, &e);
                }
            }
        }
        self.round += 1;
    }

    /// One full round: activation, resets, entangling layers and measurement.
    /// `resets` are data initializations sharing the ancilla reset tick; the
    /// measurement tick is left open for the caller.
    pub fn round(&mut self, set: &[Plaquette], resets: &[(Vec<Pos>, Basis)], before_activation: impl FnOnce(&mut Self)) {
        self.begin_round(set);
        for (qs, b) in resets {
            self.reset_data(qs, *b);
        }
        before_activation(self);
        self.activate(set);
        self.tick();
        self.cx_layers(set);
        self.measure_ancillas(set);
    }

    pub fn finish(mut self) -> Circuit {
        let total = self.meas;
        for (k, recs) in std::mem::take(&mut self.observables).into_iter().enumerate() {
            let targets = recs.iter().map(|&m| Target::Rec((total - m) as u32)).collect();
            self.circuit.push(Gate::ObservableInclude, vec![k as f64], targets);
        }
        self.circuit
    }

    /// Z-type (or X-type) checks of `set` whose product equals `basis` on `support`.
    pub fn product_of_checks(set: &[Plaquette], basis: Basis, support: &[Pos]) -> Option<Vec<Pos>> {
        let cands: Vec<&Plaquette> = set.iter().filter(|p| p.basis == basis).collect();
        let mut idx: BTreeMap<Pos, usize> = BTreeMap::new();
        for p in support.iter().chain(cands.iter().flat_map(|c| c.corners.iter().flatten())) {
            let n = idx.len();
            idx.entry(*p).or_insert(n);
        }
        let n = idx.len();
        let vec_of = |ps: &[Pos]| {
            let mut v = BitVec::zeros(n);
            for p in ps {
                v.flip(idx[p]);
            }
            v
        };
        let gens: Vec<BitVec> = cands.iter().map(|c| vec_of(&c.support())).collect();
        solve_gf2(&vec_of(support), &gens).map(|s| s.into_iter().map(|i| cands[i].pos).collect())
    }
}

/// Every data position and ancilla position used by a sequence of check sets.
pub fn footprint(regions: &[Region], sets: &[&[Plaquette]]) -> (BTreeSet<Pos>, BTreeSet<Pos>) {
    let data = regions.iter().flat_map(|r| r.data()).collect();
    let anc = sets.iter().flat_map(|s| s.iter().map(|p| p.pos)).collect();
    (data, anc)
}
