//! Aaronson–Gottesman stabilizer tableau, used for noiseless reference runs.

use crate::circuit::{mpp_products, Circuit, Gate, Instruction, Pauli};

#[derive(Clone, Debug)]
struct Row {
    x: Vec<u64>,
    z: Vec<u64>,
    sign: bool,
}

impl Row {
    fn zero(words: usize) -> Self {
        Row { x: vec![0; words], z: vec![0; words], sign: false }
    }
    fn get(v: &[u64], q: usize) -> bool {
        v[q / 64] >> (q % 64) & 1 == 1
    }
    fn flip(v: &mut [u64], q: usize) {
        v[q / 64] ^= 1 << (q % 64);
    }
    fn anticommutes(&self, o: &Row) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= ((self.x[i] & o.z[i]) ^ (self.z[i] & o.x[i])).count_ones() & 1;
        }
        acc == 1
    }
    /// self <- self * o, tracking the sign through the phase exponent.
    fn mul_assign(&mut self, o: &Row) {
        let mut pos = 0i64;
        let mut neg = 0i64;
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], o.x[i], o.z[i]);
            // single-qubit products contributing +i / -i
            let p = (x1 & z1 & !x2 & z2) | (x1 & !z1 & x2 & z2) | (!x1 & z1 & x2 & !z2);
            let n = (x1 & z1 & x2 & !z2) | (x1 & !z1 & !x2 & z2) | (!x1 & z1 & x2 & z2);
            pos += p.count_ones() as i64;
            neg += n.count_ones() as i64;
            self.x[i] = x1 ^ x2;
            self.z[i] = z1 ^ z2;
        }
        let e = (2 * self.sign as i64 + 2 * o.sign as i64 + pos - neg).rem_euclid(4);
        debug_assert!(e % 2 == 0);
        self.sign = e == 2;
    }
}

/// Stabilizer state on `n` qubits, starting in |0...0>.
pub struct Tableau {
    n: usize,
    words: usize,
    /// rows 0..n destabilizers, n..2n stabilizers
    rows: Vec<Row>,
}

impl Tableau {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![Row::zero(words); 2 * n];
        for q in 0..n {
            Row::flip(&mut rows[q].x, q);
            Row::flip(&mut rows[n + q].z, q);
        }
        Tableau { n, words, rows }
    }

    pub fn h(&mut self, q: usize) {
        for r in &mut self.rows {
            let (x, z) = (Row::get(&r.x, q), Row::get(&r.z, q));
            r.sign ^= x & z;
            if x != z {
                Row::flip(&mut r.x, q);
                Row::flip(&mut r.z, q);
            }
        }
    }

    pub fn s(&mut self, q: usize) {
        for r in &mut self.rows {
            let (x, z) = (Row::get(&r.x, q), Row::get(&r.z, q));
            r.sign ^= x & z;
            if x {
                Row::flip(&mut r.z, q);
            }
        }
    }

    pub fn cx(&mut self, c: usize, t: usize) {
        for r in &mut self.rows {
            let (xc, zc, xt, zt) = (Row::get(&r.x, c), Row::get(&r.z, c), Row::get(&r.x, t), Row::get(&r.z, t));
            r.sign ^= xc & zt & !(xt ^ zc);
            if xc {
                Row::flip(&mut r.x, t);
            }
            if zt {
                Row::flip(&mut r.z, c);
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cx(a, b);
        self.h(b);
    }

    pub fn x(&mut self, q: usize) {
        for r in &mut self.rows {
            r.sign ^= Row::get(&r.z, q);
        }
    }

    pub fn z(&mut self, q: usize) {
        for r in &mut self.rows {
            r.sign ^= Row::get(&r.x, q);
        }
    }

    fn pauli_row(&self, factors: &[(Pauli, u32)]) -> Row {
        let mut p = Row::zero(self.words);
        // accumulate factor by factor so repeated qubits multiply correctly
        for &(pa, q) in factors {
            let mut f = Row::zero(self.words);
            let q = q as usize;
            match pa {
                Pauli::X => Row::flip(&mut f.x, q),
                Pauli::Z => Row::flip(&mut f.z, q),
                Pauli::Y => {
                    Row::flip(&mut f.x, q);
                    Row::flip(&mut f.z, q);
                }
            }
            p.mul_assign(&f);
        }
        p
    }

    /// Measures a Pauli product; `random` supplies the outcome when it is not
    /// determined. Returns (outcome, was_random).
    pub fn measure(&mut self, factors: &[(Pauli, u32)], random: bool) -> (bool, bool) {
        // rows encode i^{x.z} X^x Z^z, so x = z = 1 is Y itself
        let p = self.pauli_row(factors);
        let n = self.n;
        let anti = (n..2 * n).find(|&i| self.rows[i].anticommutes(&p));
        if let Some(k) = anti {
            for i in 0..2 * n {
                if i != k && i != k - n && self.rows[i].anticommutes(&p) {
                    let rk = self.rows[k].clone();
                    self.rows[i].mul_assign(&rk);
                }
            }
            self.rows[k - n] = self.rows[k].clone();
            let mut np = p;
            np.sign ^= random;
            self.rows[k] = np;
            (random, true)
        } else {
            let mut acc = Row::zero(self.words);
            for i in 0..n {
                if self.rows[i].anticommutes(&p) {
                    let r = self.rows[n + i].clone();
                    acc.mul_assign(&r);
                }
            }
            debug_assert!(acc.x == p.x && acc.z == p.z);
            (acc.sign ^ p.sign, false)
        }
    }

    pub fn reset(&mut self, q: u32, basis_x: bool) {
        let pauli = if basis_x { Pauli::X } else { Pauli::Z };
        let (m, _) = self.measure(&[(pauli, q)], false);
        if m {
            if basis_x {
                self.z(q as usize)
            } else {
                self.x(q as usize)
            }
        }
    }
}

/// Runs the circuit noiselessly, choosing 0 for every random outcome, and
/// returns the measurement record together with per-measurement randomness.
pub fn reference_run(circuit: &Circuit) -> (Vec<bool>, Vec<bool>) {
    let mut t = Tableau::new(circuit.num_qubits());
    let mut rec = Vec::new();
    let mut random = Vec::new();
    for ins in &circuit.instructions {
        run(&mut t, ins, &mut rec, &mut random);
    }
    (rec, random)
}

fn run(t: &mut Tableau, ins: &Instruction, rec: &mut Vec<bool>, random: &mut Vec<bool>) {
    let qs: Vec<u32> = ins.qubit_targets().collect();
    match ins.gate {
        Gate::R => qs.iter().for_each(|&q| t.reset(q, false)),
        Gate::RX => qs.iter().for_each(|&q| t.reset(q, true)),
        Gate::M | Gate::MX => {
            let p = if ins.gate == Gate::M { Pauli::Z } else { Pauli::X };
            for &q in &qs {
                let (m, r) = t.measure(&[(p, q)], false);
                rec.push(m);
                random.push(r);
            }
        }
        Gate::MPP => {
            for prod in mpp_products(&ins.targets) {
                let (m, r) = t.measure(&prod, false);
                rec.push(m);
                random.push(r);
            }
        }
        Gate::H => qs.iter().for_each(|&q| t.h(q as usize)),
        Gate::S => qs.iter().for_each(|&q| t.s(q as usize)),
        Gate::CX => qs.chunks(2).for_each(|p| t.cx(p[0] as usize, p[1] as usize)),
        Gate::CZ => qs.chunks(2).for_each(|p| t.cz(p[0] as usize, p[1] as usize)),
        _ => {}
    }
}
