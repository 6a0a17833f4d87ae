//! Circuit intermediate representation and the line-oriented circuit text format.
//!
//! The supported dialect is a closed subset of the common stabilizer-circuit
//! text format: one instruction per line, optional parenthesised arguments,
//! whitespace-separated targets, `rec[-k]` measurement look-backs and
//! `X1*Z2` Pauli products for `MPP`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

/// Instruction kinds understood by every module of the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    QubitCoords,
    R,
    RX,
    M,
    MX,
    MPP,
    H,
    S,
    CX,
    CZ,
    Tick,
    PauliChannel1,
    PauliChannel2,
    Depolarize1,
    Depolarize2,
    XError,
    ZError,
    Detector,
    ObservableInclude,
}

impl Gate {
    pub const ALL: [Gate; 19] = [
        Gate::QubitCoords,
        Gate::R,
        Gate::RX,
        Gate::M,
        Gate::MX,
        Gate::MPP,
        Gate::H,
        Gate::S,
        Gate::CX,
        Gate::CZ,
        Gate::Tick,
        Gate::PauliChannel1,
        Gate::PauliChannel2,
        Gate::Depolarize1,
        Gate::Depolarize2,
        Gate::XError,
        Gate::ZError,
        Gate::Detector,
        Gate::ObservableInclude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate::QubitCoords => "QUBIT_COORDS",
            Gate::R => "R",
            Gate::RX => "RX",
            Gate::M => "M",
            Gate::MX => "MX",
            Gate::MPP => "MPP",
            Gate::H => "H",
            Gate::S => "S",
            Gate::CX => "CX",
            Gate::CZ => "CZ",
            Gate::Tick => "TICK",
            Gate::PauliChannel1 => "PAULI_CHANNEL_1",
            Gate::PauliChannel2 => "PAULI_CHANNEL_2",
            Gate::Depolarize1 => "DEPOLARIZE1",
            Gate::Depolarize2 => "DEPOLARIZE2",
            Gate::XError => "X_ERROR",
            Gate::ZError => "Z_ERROR",
            Gate::Detector => "DETECTOR",
            Gate::ObservableInclude => "OBSERVABLE_INCLUDE",
        }
    }

    /// Looks up a gate by name; accepts a few common aliases.
    pub fn from_name(name: &str) -> Option<Gate> {
        let upper = name.to_ascii_uppercase();
        let g = match upper.as_str() {
            "QUBIT_COORDS" => Gate::QubitCoords,
            "R" | "RZ" => Gate::R,
            "RX" => Gate::RX,
            "M" | "MZ" => Gate::M,
            "MX" => Gate::MX,
            "MPP" => Gate::MPP,
            "H" | "H_XZ" => Gate::H,
            "S" | "SQRT_Z" => Gate::S,
            "CX" | "CNOT" | "ZCX" => Gate::CX,
            "CZ" | "ZCZ" => Gate::CZ,
            "TICK" => Gate::Tick,
            "PAULI_CHANNEL_1" => Gate::PauliChannel1,
            "PAULI_CHANNEL_2" => Gate::PauliChannel2,
            "DEPOLARIZE1" => Gate::Depolarize1,
            "DEPOLARIZE2" => Gate::Depolarize2,
            "X_ERROR" => Gate::XError,
            "Z_ERROR" => Gate::ZError,
            "DETECTOR" => Gate::Detector,
            "OBSERVABLE_INCLUDE" => Gate::ObservableInclude,
            _ => return None,
        };
        Some(g)
    }

    pub fn is_noise(self) -> bool {
        matches!(
            self,
            Gate::PauliChannel1
                | Gate::PauliChannel2
                | Gate::Depolarize1
                | Gate::Depolarize2
                | Gate::XError
                | Gate::ZError
        )
    }

    pub fn is_measurement(self) -> bool {
        matches!(self, Gate::M | Gate::MX | Gate::MPP)
    }

    pub fn is_reset(self) -> bool {
        matches!(self, Gate::R | Gate::RX)
    }

    /// Gates whose targets come in pairs.
    pub fn is_pair_gate(self) -> bool {
        matches!(self, Gate::CX | Gate::CZ | Gate::PauliChannel2 | Gate::Depolarize2)
    }

    /// Operations that occupy their qubits during a tick.
    pub fn is_operation(self) -> bool {
        matches!(
            self,
            Gate::R | Gate::RX | Gate::M | Gate::MX | Gate::MPP | Gate::H | Gate::S | Gate::CX | Gate::CZ
        )
    }

    pub fn is_annotation(self) -> bool {
        matches!(self, Gate::Detector | Gate::ObservableInclude | Gate::QubitCoords | Gate::Tick)
    }

    /// Number of probability arguments a noise channel takes.
    fn probability_arity(self) -> Option<usize> {
        match self {
            Gate::PauliChannel1 => Some(3),
            Gate::PauliChannel2 => Some(15),
            Gate::Depolarize1 | Gate::Depolarize2 | Gate::XError | Gate::ZError => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
    fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An instruction target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Qubit(u32),
    /// `rec[-k]`, stored as the positive look-back `k`.
    Rec(u32),
    Pauli(Pauli, u32),
    /// The `*` joining Pauli targets of one `MPP` product.
    Combiner,
}

impl Target {
    pub fn qubit(self) -> Option<u32> {
        match self {
            Target::Qubit(q) | Target::Pauli(_, q) => Some(q),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub gate: Gate,
    pub args: Vec<f64>,
    pub targets: Vec<Target>,
}

impl Instruction {
    pub fn new(gate: Gate, args: Vec<f64>, targets: Vec<Target>) -> Self {
        Instruction { gate, args, targets }
    }

    /// Number of measurement results this instruction appends to the record.
    pub fn measurement_count(&self) -> usize {
        match self.gate {
            Gate::M | Gate::MX => self.targets.len(),
            Gate::MPP => mpp_products(&self.targets).len(),
            _ => 0,
        }
    }

    pub fn qubit_targets(&self) -> impl Iterator<Item = u32> + '_ {
        self.targets.iter().filter_map(|t| t.qubit())
    }
}

/// Splits `MPP` targets into products of `(Pauli, qubit)` factors.
pub fn mpp_products(targets: &[Target]) -> Vec<Vec<(Pauli, u32)>> {
    let mut out: Vec<Vec<(Pauli, u32)>> = Vec::new();
    let mut joined = false;
    for t in targets {
        match *t {
            Target::Combiner => joined = true,
            Target::Pauli(p, q) => {
                if joined && !out.is_empty() {
                    out.last_mut().unwrap().push((p, q));
                } else {
                    out.push(vec![(p, q)]);
                }
                joined = false;
            }
            _ => joined = false,
        }
    }
    out
}

/// Builds `MPP` targets from a list of products.
pub fn mpp_targets(products: &[Vec<(Pauli, u32)>]) -> Vec<Target> {
    let mut out = Vec::new();
    for prod in products {
        for (i, &(p, q)) in prod.iter().enumerate() {
            if i > 0 {
                out.push(Target::Combiner);
            }
            out.push(Target::Pauli(p, q));
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new() -> Self {
        Circuit::default()
    }

    pub fn push(&mut self, gate: Gate, args: Vec<f64>, targets: Vec<Target>) {
        self.instructions.push(Instruction::new(gate, args, targets));
    }

    pub fn push_qubits(&mut self, gate: Gate, args: Vec<f64>, qubits: &[u32]) {
        self.push(gate, args, qubits.iter().map(|&q| Target::Qubit(q)).collect());
    }

    pub fn num_qubits(&self) -> usize {
        self.instructions
            .iter()
            .flat_map(|i| i.qubit_targets())
            .map(|q| q as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions.iter().map(|i| i.measurement_count()).sum()
    }

    pub fn num_detectors(&self) -> usize {
        self.instructions.iter().filter(|i| i.gate == Gate::Detector).count()
    }

    pub fn num_observables(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| i.gate == Gate::ObservableInclude)
            .filter_map(|i| i.args.first())
            .map(|&a| a as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn num_ticks(&self) -> usize {
        self.instructions.iter().filter(|i| i.gate == Gate::Tick).count()
    }

    pub fn has_noise(&self) -> bool {
        self.instructions.iter().any(|i| i.gate.is_noise())
    }

    /// Copy of the circuit with every noise channel removed.
    pub fn without_noise(&self) -> Circuit {
        Circuit {
            instructions: self.instructions.iter().filter(|i| !i.gate.is_noise()).cloned().collect(),
        }
    }

    /// Resolves detector and observable record targets to absolute measurement indices.
    ///
    /// Returns `(detectors, observables)`; the observable list is indexed by
    /// observable id and holds the XOR-union of every include.
    pub fn resolve_records(&self) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>), CircuitError> {
        let mut seen = 0usize;
        let mut dets = Vec::new();
        let mut obs: Vec<Vec<usize>> = vec![Vec::new(); self.num_observables()];
        for (idx, ins) in self.instructions.iter().enumerate() {
            match ins.gate {
                Gate::Detector | Gate::ObservableInclude => {
                    let mut recs = Vec::with_capacity(ins.targets.len());
                    for t in &ins.targets {
                        match *t {
                            Target::Rec(k) if k >= 1 && (k as usize) <= seen => recs.push(seen - k as usize),
                            Target::Rec(k) => {
                                return Err(CircuitError::UnresolvedRecord { instruction: idx, lookback: k })
                            }
                            _ => return Err(CircuitError::BadTarget { instruction: idx }),
                        }
                    }
                    if ins.gate == Gate::Detector {
                        dets.push(recs);
                    } else {
                        let k = ins.args.first().copied().unwrap_or(0.0) as usize;
                        obs[k].extend(recs);
                    }
                }
                _ => seen += ins.measurement_count(),
            }
        }
        for o in obs.iter_mut() {
            *o = xor_reduce(std::mem::take(o));
        }
        let dets = dets.into_iter().map(xor_reduce).collect();
        Ok((dets, obs))
    }

    /// Detector coordinate arguments, in detector order.
    pub fn detector_coords(&self) -> Vec<Vec<f64>> {
        self.instructions
            .iter()
            .filter(|i| i.gate == Gate::Detector)
            .map(|i| i.args.clone())
            .collect()
    }

    /// Writes the circuit in the text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for ins in &self.instructions {
            write_instruction(&mut s, ins);
            s.push('\n');
        }
        s
    }

    /// Checks the type invariants and returns every violation found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = 0usize;
        let mut coords_declared = std::collections::HashSet::new();
        for (idx, ins) in self.instructions.iter().enumerate() {
            check_instruction(idx, ins, seen, &mut coords_declared, &mut out);
            seen += ins.measurement_count();
        }
        out
    }
}

/// Sorted symmetric-difference reduction of an index list.
pub fn xor_reduce(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    let mut out: Vec<usize> = Vec::with_capacity(v.len());
    for x in v {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

fn write_instruction(s: &mut String, ins: &Instruction) {
    s.push_str(ins.gate.name());
    if !ins.args.is_empty() {
        s.push('(');
        for (i, a) in ins.args.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "{}", a);
        }
        s.push(')');
    }
    let mut glue = false;
    for t in &ins.targets {
        if *t == Target::Combiner {
            s.push('*');
            glue = true;
            continue;
        }
        if !glue {
            s.push(' ');
        }
        glue = false;
        match *t {
            Target::Qubit(q) => {
                let _ = write!(s, "{}", q);
            }
            Target::Rec(k) => {
                let _ = write!(s, "rec[-{}]", k);
            }
            Target::Pauli(p, q) => {
                let _ = write!(s, "{}{}", p.letter(), q);
            }
            Target::Combiner => unreachable!(),
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// One broken invariant, located by instruction index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub instruction: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "instruction {}: {}", self.instruction, self.message)
    }
}

fn check_instruction(
    idx: usize,
    ins: &Instruction,
    seen: usize,
    coords: &mut std::collections::HashSet<u32>,
    out: &mut Vec<Violation>,
) {
    let mut bad = |m: String| out.push(Violation { instruction: idx, message: m });
    let g = ins.gate;
    if let Some(n) = g.probability_arity() {
        if ins.args.len() != n {
            bad(format!("{} takes {} probabilities, got {}", g, n, ins.args.len()));
        }
        if ins.args.iter().any(|p| !(0.0..=1.0).contains(p) || p.is_nan()) {
            bad(format!("{} probability out of range [0, 1]", g));
        }
        let total: f64 = ins.args.iter().sum();
        if total > 1.0 + 1e-12 {
            bad(format!("{} probabilities sum to {} > 1", g, total));
        }
    }
    match g {
        Gate::Detector | Gate::ObservableInclude => {
            for t in &ins.targets {
                match *t {
                    Target::Rec(k) => {
                        if k == 0 || k as usize > seen {
                            bad(format!("unresolved record reference rec[-{}] with {} prior measurements", k, seen));
                        }
                    }
                    _ => bad(format!("{} targets must be measurement records", g)),
                }
            }
            if g == Gate::ObservableInclude {
                match ins.args.as_slice() {
                    [k] if *k >= 0.0 && k.fract() == 0.0 => {}
                    _ => bad("OBSERVABLE_INCLUDE needs one non-negative integer index".to_string()),
                }
            }
        }
        Gate::MPP => {
            let mut expect_factor = true;
            for t in &ins.targets {
                match (*t, expect_factor) {
                    (Target::Pauli(..), _) => expect_factor = false,
                    (Target::Combiner, false) => expect_factor = true,
                    _ => bad("malformed Pauli product".to_string()),
                }
            }
            if ins.targets.is_empty() || expect_factor {
                bad("malformed Pauli product".to_string());
            }
            for prod in mpp_products(&ins.targets) {
                let mut qs: Vec<u32> = prod.iter().map(|f| f.1).collect();
                qs.sort_unstable();
                if qs.windows(2).any(|w| w[0] == w[1]) {
                    bad("Pauli product repeats a qubit".to_string());
                }
            }
        }
        Gate::Tick => {
            if !ins.targets.is_empty() || !ins.args.is_empty() {
                bad("TICK takes no targets".to_string());
            }
        }
        _ => {
            if ins.targets.iter().any(|t| !matches!(t, Target::Qubit(_))) {
                bad(format!("{} targets must be qubits", g));
            }
            if g.is_pair_gate() {
                if ins.targets.len() % 2 != 0 {
                    bad(format!("{} needs an even number of targets", g));
                }
                for pair in ins.targets.chunks(2) {
                    if pair.len() == 2 && pair[0] == pair[1] {
                        bad(format!("{} pair acts twice on one qubit", g));
                    }
                }
            }
            if g == Gate::QubitCoords {
                for q in ins.qubit_targets() {
                    if !coords.insert(q) {
                        bad(format!("qubit {} has more than one coordinate declaration", q));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("instruction {instruction}: unresolved record reference rec[-{lookback}]")]
    UnresolvedRecord { instruction: usize, lookback: u32 },
    #[error("instruction {instruction}: detector and observable targets must be records")]
    BadTarget { instruction: usize },
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl FromStr for Circuit {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_text(text)
    }
}

/// Parses circuit text; rejections carry the 1-based line number.
pub fn parse_text(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit = Circuit::new();
    let mut seen = 0usize;
    let mut coords = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |m: String| ParseError { line: line_no, message: m };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let name_end = line.find(|c: char| c == '(' || c.is_whitespace()).unwrap_or(line.len());
        let name = &line[..name_end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err(format!("syntax error near '{}'", line)));
        }
        let gate = Gate::from_name(name).ok_or_else(|| err(format!("unsupported instruction '{}'", name)))?;
        let mut rest = line[name_end..].trim_start();
        let mut args = Vec::new();
        if let Some(after) = rest.strip_prefix('(') {
            let close = after.find(')').ok_or_else(|| err("missing ')'".to_string()))?;
            for tok in after[..close].split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                let v: f64 = tok.parse().map_err(|_| err(format!("bad argument '{}'", tok)))?;
                args.push(v);
            }
            rest = &after[close + 1..];
        }
        let mut targets = Vec::new();
        for tok in rest.split_whitespace() {
            parse_targets(tok, &mut targets).map_err(err)?;
        }
        let ins = Instruction::new(gate, args, targets);
        let mut violations = Vec::new();
        check_instruction(circuit.instructions.len(), &ins, seen, &mut coords, &mut violations);
        if let Some(v) = violations.into_iter().next() {
            return Err(err(v.message));
        }
        seen += ins.measurement_count();
        circuit.instructions.push(ins);
    }
    Ok(circuit)
}

fn parse_targets(tok: &str, out: &mut Vec<Target>) -> Result<(), String> {
    if let Some(inner) = tok.strip_prefix("rec[-").and_then(|s| s.strip_suffix(']')) {
        let k: u32 = inner.parse().map_err(|_| format!("bad record target '{}'", tok))?;
        out.push(Target::Rec(k));
        return Ok(());
    }
    if tok.starts_with("rec[") {
        return Err(format!("record targets must use negative offsets: '{}'", tok));
    }
    if tok.contains('*') || tok.starts_with(|c: char| c.is_ascii_alphabetic()) {
        for (i, factor) in tok.split('*').enumerate() {
            if i > 0 {
                out.push(Target::Combiner);
            }
            let mut chars = factor.chars();
            let p = match chars.next().map(|c| c.to_ascii_uppercase()) {
                Some('X') => Pauli::X,
                Some('Y') => Pauli::Y,
                Some('Z') => Pauli::Z,
                _ => return Err(format!("bad Pauli target '{}'", factor)),
            };
            let q: u32 = chars.as_str().parse().map_err(|_| format!("bad Pauli target '{}'", factor))?;
            out.push(Target::Pauli(p, q));
        }
        return Ok(());
    }
    let q: u32 = tok.parse().map_err(|_| format!("bad target '{}'", tok))?;
    out.push(Target::Qubit(q));
    Ok(())
}
