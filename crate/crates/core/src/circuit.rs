//! Circuits: Clifford gates, Pauli noise sites, measurements, classical
//! parity postselection and Pauli-frame corrections.
//!
//! A [`Circuit`] is an ordered op list over named qubits. Measurements
//! produce labelled bits. [`Op::Parity`] requires a labelled parity to hold
//! (postselection) and [`Op::Frame`] records a classically controlled Pauli
//! on an output qubit, applied in software after the run.
//!
//! Text form, one op per line (`#` starts a comment):
//!
//! ```text
//! QUBITS a0 a1 a2
//! OUTPUT a0 a1
//! H a2
//! CX a2 a0
//! NOISE a0 I:0.9 X:0.1
//! MEASURE X a2 m0
//! PARITY 0 m0
//! FRAME Z a1 m0
//! BARRIER right_checks
//! ```

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{parse_err, Error, Result};
use crate::noise::{DepolarizingSpec, PauliChannel};
use crate::pauli::{Pauli, PauliString, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![q],
            Gate::Cnot(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot(..) | Gate::Cz(..))
    }

    fn mnemonic(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "SDG",
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::Cnot(..) => "CX",
            Gate::Cz(..) => "CZ",
        }
    }

    /// Conjugates `p` by this gate: `p ← G p G†`.
    pub fn conjugate(&self, p: &mut PauliString) {
        match *self {
            Gate::H(q) => p.conj_h(q),
            Gate::S(q) => p.conj_s(q),
            Gate::Sdg(q) => p.conj_sdg(q),
            Gate::X(q) => p.conj_pauli(q, Pauli::X),
            Gate::Y(q) => p.conj_pauli(q, Pauli::Y),
            Gate::Z(q) => p.conj_pauli(q, Pauli::Z),
            Gate::Cnot(c, t) => p.conj_cnot(c, t),
            Gate::Cz(a, b) => p.conj_cz(a, b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate(Gate),
    /// A Pauli channel on the listed qubits (in channel qubit order).
    Noise { qubits: Vec<usize>, channel: PauliChannel },
    Measure { basis: Basis, qubit: usize, label: String },
    /// Keep the run only if the XOR of the labelled bits equals `parity`.
    Parity { labels: Vec<String>, parity: bool },
    /// Apply `pauli` to `qubit` after the run if the XOR of the labelled bits
    /// is 1.
    Frame { pauli: Pauli, qubit: usize, labels: Vec<String> },
    /// Named marker separating circuit regions.
    Barrier(String),
}

/// A circuit on named qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    names: Vec<String>,
    ops: Vec<Op>,
    output: Option<(usize, usize)>,
}

impl Circuit {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{} qubits exceeds the limit of {MAX_QUBITS}",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.is_empty() || n.chars().any(char::is_whitespace) || !seen.insert(n.as_str()) {
                return Err(Error::Validation(format!("invalid or repeated qubit name {n:?}")));
            }
        }
        Ok(Self {
            names,
            ops: Vec::new(),
            output: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn output(&self) -> Option<(usize, usize)> {
        self.output
    }

    pub fn qubit(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn set_output(&mut self, q0: usize, q1: usize) -> Result<()> {
        self.check_qubits(&[q0, q1])?;
        self.output = Some((q0, q1));
        Ok(())
    }

    fn check_qubits(&self, qs: &[usize]) -> Result<()> {
        for (i, &q) in qs.iter().enumerate() {
            if q >= self.names.len() {
                return Err(Error::Validation(format!(
                    "qubit index {q} out of range for {} qubits",
                    self.names.len()
                )));
            }
            if qs[..i].contains(&q) {
                return Err(Error::Validation(format!("qubit {q} used twice in one op")));
            }
        }
        Ok(())
    }

    /// Appends an op after checking indices and label references.
    pub fn push(&mut self, op: Op) -> Result<()> {
        match &op {
            Op::Gate(g) => self.check_qubits(&g.qubits())?,
            Op::Noise { qubits, channel } => {
                self.check_qubits(qubits)?;
                if channel.num_qubits() != qubits.len() {
                    return Err(Error::Dimension {
                        expected: qubits.len(),
                        got: channel.num_qubits(),
                    });
                }
            }
            Op::Measure { qubit, label, .. } => {
                self.check_qubits(&[*qubit])?;
                if label.is_empty() || label.chars().any(char::is_whitespace) {
                    return Err(Error::Validation(format!("invalid label {label:?}")));
                }
                if self.labels().contains(&label.as_str()) {
                    return Err(Error::Validation(format!("label {label:?} defined twice")));
                }
            }
            Op::Parity { labels, .. } => self.check_labels(labels)?,
            Op::Frame { qubit, labels, pauli } => {
                self.check_qubits(&[*qubit])?;
                self.check_labels(labels)?;
                if *pauli == Pauli::I {
                    return Err(Error::Validation("identity frame correction".into()));
                }
            }
            Op::Barrier(name) => {
                if name.is_empty() || name.chars().any(char::is_whitespace) {
                    return Err(Error::Validation(format!("invalid barrier name {name:?}")));
                }
            }
        }
        self.ops.push(op);
        Ok(())
    }

    fn check_labels(&self, labels: &[String]) -> Result<()> {
        let defined = self.labels();
        for l in labels {
            if !defined.contains(&l.as_str()) {
                return Err(Error::Validation(format!(
                    "label {l:?} referenced before its measurement"
                )));
            }
        }
        Ok(())
    }

    /// Measurement labels in definition order.
    pub fn labels(&self) -> Vec<&str> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                Op::Measure { label, .. } => Some(label.as_str()),
                _ => None,
            })
            .collect()
    }

    /// `(label, qubit, basis)` for every measurement, in order.
    pub fn measurements(&self) -> Vec<(&str, usize, Basis)> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                Op::Measure { basis, qubit, label } => Some((label.as_str(), *qubit, *basis)),
                _ => None,
            })
            .collect()
    }

    pub fn gate(&mut self, g: Gate) -> Result<()> {
        self.push(Op::Gate(g))
    }

    pub fn noise(&mut self, qubits: Vec<usize>, channel: PauliChannel) -> Result<()> {
        self.push(Op::Noise { qubits, channel })
    }

    pub fn measure(&mut self, basis: Basis, qubit: usize, label: impl Into<String>) -> Result<()> {
        self.push(Op::Measure {
            basis,
            qubit,
            label: label.into(),
        })
    }

    pub fn parity(&mut self, labels: &[&str], parity: bool) -> Result<()> {
        self.push(Op::Parity {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            parity,
        })
    }

    pub fn frame(&mut self, pauli: Pauli, qubit: usize, labels: &[&str]) -> Result<()> {
        self.push(Op::Frame {
            pauli,
            qubit,
            labels: labels.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn barrier(&mut self, name: &str) -> Result<()> {
        self.push(Op::Barrier(name.to_string()))
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.ops.iter().filter_map(|op| match op {
            Op::Gate(g) => Some(g),
            _ => None,
        })
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates().filter(|g| g.is_two_qubit()).count()
    }

    pub fn noise_site_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Noise { .. })).count()
    }

    /// Product over noise sites of their branch counts (saturating).
    pub fn path_count(&self) -> u128 {
        self.ops
            .iter()
            .filter_map(|op| match op {
                Op::Noise { channel, .. } => Some(channel.terms().len() as u128),
                _ => None,
            })
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    /// Copy of the circuit with every noise site removed.
    pub fn noiseless(&self) -> Self {
        Self {
            names: self.names.clone(),
            ops: self
                .ops
                .iter()
                .filter(|op| !matches!(op, Op::Noise { .. }))
                .cloned()
                .collect(),
            output: self.output,
        }
    }

    /// Inserts a fixed Pauli error before op index `at`.
    pub fn with_error_at(&self, at: usize, error: &PauliString) -> Result<Self> {
        if error.num_qubits() != self.num_qubits() {
            return Err(Error::Dimension {
                expected: self.num_qubits(),
                got: error.num_qubits(),
            });
        }
        let support = error.support();
        if support.is_empty() {
            return Ok(self.clone());
        }
        let local = error.restrict(&support)?;
        let mut out = self.clone();
        out.ops.insert(
            at.min(out.ops.len()),
            Op::Noise {
                qubits: support,
                channel: PauliChannel::fixed(local)?,
            },
        );
        Ok(out)
    }

    /// Index of the first barrier with this name.
    pub fn barrier_index(&self, name: &str) -> Option<usize> {
        self.ops
            .iter()
            .position(|op| matches!(op, Op::Barrier(b) if b == name))
    }

    /// Appends all ops of `other` (same qubit register).
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.names != self.names {
            return Err(Error::Validation("circuits act on different registers".into()));
        }
        for op in &other.ops {
            self.push(op.clone())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = |q: usize| self.names[q].as_str();
        writeln!(f, "QUBITS {}", self.names.join(" "))?;
        if let Some((a, b)) = self.output {
            writeln!(f, "OUTPUT {} {}", n(a), n(b))?;
        }
        for op in &self.ops {
            match op {
                Op::Gate(g) => {
                    let qs: Vec<&str> = g.qubits().into_iter().map(n).collect();
                    writeln!(f, "{} {}", g.mnemonic(), qs.join(" "))?;
                }
                Op::Noise { qubits, channel } => {
                    let qs: Vec<&str> = qubits.iter().map(|&q| n(q)).collect();
                    let mut line = format!("NOISE {}", qs.join(","));
                    for (p, w) in channel.terms() {
                        let letters: String = p.letters().iter().map(|l| l.as_char()).collect();
                        let _ = write!(line, " {letters}:{w}");
                    }
                    writeln!(f, "{line}")?;
                }
                Op::Measure { basis, qubit, label } => {
                    let b = match basis {
                        Basis::X => "X",
                        Basis::Z => "Z",
                    };
                    writeln!(f, "MEASURE {b} {} {label}", n(*qubit))?;
                }
                Op::Parity { labels, parity } => {
                    writeln!(f, "PARITY {} {}", u8::from(*parity), labels.join(" "))?;
                }
                Op::Frame { pauli, qubit, labels } => {
                    writeln!(f, "FRAME {pauli} {} {}", n(*qubit), labels.join(" "))?;
                }
                Op::Barrier(name) => writeln!(f, "BARRIER {name}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default().to_ascii_uppercase();
            let args: Vec<&str> = words.collect();
            if head == "QUBITS" {
                if circuit.is_some() {
                    return Err(parse_err(line_no, "QUBITS given twice"));
                }
                let names = args.iter().map(|s| s.to_string()).collect();
                circuit = Some(Circuit::new(names).map_err(|e| parse_err(line_no, e.to_string()))?);
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| parse_err(line_no, "first statement must be QUBITS"))?;
            parse_line(c, &head, &args).map_err(|e| match e {
                Error::Parse { .. } => e,
                other => parse_err(line_no, other.to_string()),
            })?;
        }
        circuit.ok_or_else(|| parse_err(0, "empty circuit text"))
    }
}

fn parse_line(c: &mut Circuit, head: &str, args: &[&str]) -> Result<()> {
    let q = |c: &Circuit, name: &str| -> Result<usize> {
        c.qubit(name)
            .ok_or_else(|| Error::Validation(format!("unknown qubit {name:?}")))
    };
    let want = |k: usize| -> Result<()> {
        if args.len() != k {
            return Err(Error::Validation(format!(
                "{head} takes {k} arguments, got {}",
                args.len()
            )));
        }
        Ok(())
    };
    let letter = |s: &str| -> Result<Pauli> {
        let mut ch = s.chars();
        match (ch.next().and_then(Pauli::from_char), ch.next()) {
            (Some(l), None) => Ok(l),
            _ => Err(Error::Validation(format!("invalid Pauli letter {s:?}"))),
        }
    };
    match head {
        "OUTPUT" => {
            want(2)?;
            let (a, b) = (q(c, args[0])?, q(c, args[1])?);
            c.set_output(a, b)
        }
        "H" | "S" | "SDG" | "X" | "Y" | "Z" => {
            want(1)?;
            let t = q(c, args[0])?;
            c.gate(match head {
                "H" => Gate::H(t),
                "S" => Gate::S(t),
                "SDG" => Gate::Sdg(t),
                "X" => Gate::X(t),
                "Y" => Gate::Y(t),
                _ => Gate::Z(t),
            })
        }
        "CX" | "CNOT" | "CZ" => {
            want(2)?;
            let (a, b) = (q(c, args[0])?, q(c, args[1])?);
            c.gate(if head == "CZ" { Gate::Cz(a, b) } else { Gate::Cnot(a, b) })
        }
        "NOISE" => {
            if args.len() < 2 {
                return Err(Error::Validation("NOISE needs qubits and terms".into()));
            }
            let qubits = args[0]
                .split(',')
                .map(|n| q(c, n))
                .collect::<Result<Vec<_>>>()?;
            let terms = args[1..]
                .iter()
                .map(|t| {
                    let (ps, ws) = t
                        .split_once(':')
                        .ok_or_else(|| Error::Validation(format!("noise term {t:?} lacks ':'")))?;
                    let p: PauliString = ps.parse()?;
                    let w: f64 = ws
                        .parse()
                        .map_err(|_| Error::Validation(format!("bad probability {ws:?}")))?;
                    Ok((p, w))
                })
                .collect::<Result<Vec<_>>>()?;
            c.noise(qubits, PauliChannel::new(terms)?)
        }
        "DEPOLARIZE" => {
            // Shorthand: DEPOLARIZE q p  (replacement convention)
            want(2)?;
            let t = q(c, args[0])?;
            let p: f64 = args[1]
                .parse()
                .map_err(|_| Error::Validation(format!("bad probability {:?}", args[1])))?;
            c.noise(vec![t], PauliChannel::depolarizing(&DepolarizingSpec::replace(p)?)?)
        }
        "MEASURE" => {
            want(3)?;
            let basis = match args[0] {
                "X" => Basis::X,
                "Z" => Basis::Z,
                b => return Err(Error::Validation(format!("unknown basis {b:?}"))),
            };
            let t = q(c, args[1])?;
            c.measure(basis, t, args[2])
        }
        "PARITY" => {
            if args.len() < 2 {
                return Err(Error::Validation("PARITY needs a bit and labels".into()));
            }
            let parity = match args[0] {
                "0" => false,
                "1" => true,
                b => return Err(Error::Validation(format!("parity must be 0 or 1, got {b:?}"))),
            };
            c.parity(&args[1..], parity)
        }
        "FRAME" => {
            if args.len() < 3 {
                return Err(Error::Validation("FRAME needs a letter, a qubit and labels".into()));
            }
            let l = letter(args[0])?;
            let t = q(c, args[1])?;
            c.frame(l, t, &args[2..])
        }
        "BARRIER" => {
            want(1)?;
            c.barrier(args[0])
        }
        other => Err(Error::Validation(format!("unknown statement {other:?}"))),
    }
}

/// Gate-noise rates, replacement convention, applied after every gate on each of
/// its targets as independent single-qubit depolarizing channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GateNoise {
    pub p_1q: f64,
    pub p_2q: f64,
}

impl GateNoise {
    pub fn new(p_1q: f64, p_2q: f64) -> Result<Self> {
        DepolarizingSpec::replace(p_1q)?;
        DepolarizingSpec::replace(p_2q)?;
        Ok(Self { p_1q, p_2q })
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_1q == 0.0 && self.p_2q == 0.0
    }
}

/// Incremental circuit construction with optional automatic gate noise.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    circuit: Circuit,
    gate_noise: GateNoise,
}

impl CircuitBuilder {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        Ok(Self {
            circuit: Circuit::new(names.into_iter().map(Into::into).collect())?,
            gate_noise: GateNoise::default(),
        })
    }

    pub fn with_gate_noise(mut self, gn: GateNoise) -> Self {
        self.gate_noise = gn;
        self
    }

    pub fn gate_noise(&self) -> GateNoise {
        self.gate_noise
    }

    pub fn q(&self, name: &str) -> usize {
        self.circuit
            .qubit(name)
            .unwrap_or_else(|| panic!("builder refers to unknown qubit {name}"))
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    /// Appends a gate followed by its gate noise, if any.
    pub fn gate(&mut self, g: Gate) -> Result<&mut Self> {
        self.circuit.gate(g)?;
        let p = if g.is_two_qubit() {
            self.gate_noise.p_2q
        } else {
            self.gate_noise.p_1q
        };
        if p > 0.0 {
            let ch = PauliChannel::depolarizing(&DepolarizingSpec::replace(p)?)?;
            for q in g.qubits() {
                self.circuit.noise(vec![q], ch.clone())?;
            }
        }
        Ok(self)
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.gate(Gate::H(q))
    }

    pub fn cnot(&mut self, c: usize, t: usize) -> Result<&mut Self> {
        self.gate(Gate::Cnot(c, t))
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.gate(Gate::Cz(a, b))
    }

    /// Depolarizing noise (replacement convention) on each listed qubit; skipped
    /// when `p = 0`.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) -> Result<&mut Self> {
        if p > 0.0 {
            let ch = PauliChannel::depolarizing(&DepolarizingSpec::replace(p)?)?;
            for &q in qubits {
                self.circuit.noise(vec![q], ch.clone())?;
            }
        }
        Ok(self)
    }

    pub fn channel(&mut self, qubits: Vec<usize>, ch: PauliChannel) -> Result<&mut Self> {
        if !ch.is_identity() {
            self.circuit.noise(qubits, ch)?;
        }
        Ok(self)
    }

    pub fn measure(&mut self, basis: Basis, q: usize, label: &str) -> Result<&mut Self> {
        self.circuit.measure(basis, q, label)?;
        Ok(self)
    }

    pub fn parity(&mut self, labels: &[&str], parity: bool) -> Result<&mut Self> {
        self.circuit.parity(labels, parity)?;
        Ok(self)
    }

    pub fn frame(&mut self, pauli: Pauli, q: usize, labels: &[&str]) -> Result<&mut Self> {
        self.circuit.frame(pauli, q, labels)?;
        Ok(self)
    }

    pub fn barrier(&mut self, name: &str) -> Result<&mut Self> {
        self.circuit.barrier(name)?;
        Ok(self)
    }

    /// Bell measurement on `(c, t)`: CNOT, H on `c`, then Z measurements.
    /// `x_label` is the `XX` parity bit (from `c`), `z_label` the `ZZ` parity
    /// bit (from `t`).
    pub fn bell_measure(&mut self, c: usize, t: usize, x_label: &str, z_label: &str) -> Result<&mut Self> {
        self.cnot(c, t)?;
        self.h(c)?;
        self.measure(Basis::Z, c, x_label)?;
        self.measure(Basis::Z, t, z_label)
    }

    pub fn output(&mut self, q0: usize, q1: usize) -> Result<&mut Self> {
        self.circuit.set_output(q0, q1)?;
        Ok(self)
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn build(self) -> Circuit {
        self.circuit
    }
}
