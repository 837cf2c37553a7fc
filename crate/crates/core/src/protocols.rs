//! Circuit builders for the protocols studied here: Bell pairs protected by
//! Pauli checks, recursive checks, entanglement swapping with checks, the
//! teleported variant, and one BBPSSW purification round.
//!
//! Check ancillas start in `|0⟩`, are rotated to `|+⟩` with `H`, control the
//! check Pauli on the left of the noise region and again on the right, and
//! are read out in the X basis as `H` followed by a Z measurement. A run is
//! kept only if every ancilla reads 0.
//!
//! Every builder puts barriers named `left_checks`, `channel`,
//! `right_checks` and `readout` around the corresponding regions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::circuit::{Basis, Circuit, CircuitBuilder, Gate, GateNoise};
use crate::error::{Error, Result};
use crate::noise::PauliChannel;
use crate::pauli::{Pauli, PauliString};

/// Which Pauli checks protect a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    None,
    X,
    XZ,
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMode::None => "none",
            CheckMode::X => "x",
            CheckMode::XZ => "xz",
        })
    }
}

impl FromStr for CheckMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(CheckMode::None),
            "x" => Ok(CheckMode::X),
            "xz" | "x&z" | "x+z" => Ok(CheckMode::XZ),
            o => Err(Error::Validation(format!("unknown check mode {o:?}"))),
        }
    }
}

/// Which qubits of a swap receive checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protect {
    None,
    Flying,
    Memory,
    FlyingMemory,
}

impl fmt::Display for Protect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protect::None => "none",
            Protect::Flying => "flying",
            Protect::Memory => "memory",
            Protect::FlyingMemory => "flying+memory",
        })
    }
}

impl FromStr for Protect {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Protect::None),
            "flying" => Ok(Protect::Flying),
            "memory" => Ok(Protect::Memory),
            "flying+memory" | "flying_memory" | "all" => Ok(Protect::FlyingMemory),
            o => Err(Error::Validation(format!("unknown protection {o:?}"))),
        }
    }
}

/// A check Pauli (on the full register) and the ancilla controlling it.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSpec {
    pub pauli: PauliString,
    pub ancilla: usize,
}

/// `H(q0)`, `CNOT(q0, q1)`.
pub fn build_bell_pair(b: &mut CircuitBuilder, q0: usize, q1: usize) -> Result<()> {
    if q0 == q1 {
        return Err(Error::Validation("Bell pair needs two distinct qubits".into()));
    }
    b.h(q0)?.cnot(q0, q1)?;
    Ok(())
}

fn letter_gates(control: usize, q: usize, l: Pauli) -> Vec<Gate> {
    match l {
        Pauli::I => vec![],
        Pauli::X => vec![Gate::Cnot(control, q)],
        Pauli::Z => vec![Gate::Cz(control, q)],
        // S X S† = Y
        Pauli::Y => vec![Gate::Sdg(q), Gate::Cnot(control, q), Gate::S(q)],
    }
}

/// Gates implementing controlled-`p`. A `−` sign adds `Z` on the control.
fn controlled_pauli_gates(control: usize, p: &PauliString) -> Result<Vec<Gate>> {
    if !p.is_hermitian() {
        return Err(Error::Validation(format!("check {p} is not Hermitian")));
    }
    if p.letter(control) != Pauli::I {
        return Err(Error::Validation("check acts on its own ancilla".into()));
    }
    let mut gates = Vec::new();
    for q in p.support() {
        gates.extend(letter_gates(control, q, p.letter(q)));
    }
    if p.phase() == 2 {
        gates.push(Gate::Z(control));
    }
    Ok(gates)
}

/// Wraps the noise region written by `noise` in Pauli checks. For each check:
/// ancilla to `|+⟩`, controlled check before the region, controlled check
/// after it (in reverse order), X readout, postselect on 0. Readout labels
/// are `m_<ancilla name>`.
pub fn build_pcs_sandwich<F>(b: &mut CircuitBuilder, payload: &[usize], checks: &[CheckSpec], noise: F) -> Result<()>
where
    F: FnOnce(&mut CircuitBuilder) -> Result<()>,
{
    for (i, c) in checks.iter().enumerate() {
        if payload.contains(&c.ancilla) {
            return Err(Error::Validation(format!(
                "ancilla {} overlaps the payload",
                c.ancilla
            )));
        }
        if checks[..i].iter().any(|o| o.ancilla == c.ancilla) {
            return Err(Error::Validation(format!("ancilla {} used twice", c.ancilla)));
        }
        if c.pauli.num_qubits() != b.num_qubits() {
            return Err(Error::Dimension {
                expected: b.num_qubits(),
                got: c.pauli.num_qubits(),
            });
        }
        if c.pauli.support().iter().any(|q| !payload.contains(q)) {
            return Err(Error::Validation("check acts outside the payload".into()));
        }
    }
    let per_check = checks
        .iter()
        .map(|c| controlled_pauli_gates(c.ancilla, &c.pauli))
        .collect::<Result<Vec<_>>>()?;
    b.barrier("left_checks")?;
    for (c, gates) in checks.iter().zip(&per_check) {
        b.h(c.ancilla)?;
        for g in gates {
            b.gate(*g)?;
        }
    }
    b.barrier("channel")?;
    noise(b)?;
    b.barrier("right_checks")?;
    for gates in per_check.iter().rev() {
        for g in gates.iter().rev() {
            b.gate(inverse(g))?;
        }
    }
    b.barrier("readout")?;
    let names: Vec<String> = checks.iter().map(|c| b.circuit().names()[c.ancilla].clone()).collect();
    for (c, name) in checks.iter().zip(&names) {
        b.h(c.ancilla)?;
        let label = format!("m_{name}");
        b.measure(Basis::Z, c.ancilla, &label)?;
        b.parity(&[&label], false)?;
    }
    Ok(())
}

fn inverse(g: &Gate) -> Gate {
    match *g {
        Gate::S(q) => Gate::Sdg(q),
        Gate::Sdg(q) => Gate::S(q),
        other => other,
    }
}

/// Gates of the left (encoding) fragment for one protected qubit. The
/// ancilla list has one entry for X checks and `2r + 2` for X&Z checks with
/// recursion level `r`. Ancillas `anc[2k]` and `anc[2k+1]` (level `k ≥ 1`)
/// put X checks on `anc[2k−2]` and `anc[2k−1]`.
pub fn left_fragment(data: usize, anc: &[usize], mode: CheckMode, r: usize) -> Result<Vec<Gate>> {
    let mut g = Vec::new();
    match mode {
        CheckMode::None => {
            if !anc.is_empty() {
                return Err(Error::Validation("unchecked qubit given ancillas".into()));
            }
        }
        CheckMode::X => {
            if r != 0 || anc.len() != 1 {
                return Err(Error::Validation(
                    "X checks take one ancilla and no recursion".into(),
                ));
            }
            g.push(Gate::H(anc[0]));
            g.push(Gate::Cnot(anc[0], data));
        }
        CheckMode::XZ => {
            if anc.len() != 2 * r + 2 {
                return Err(Error::Validation(format!(
                    "recursion {r} needs {} ancillas, got {}",
                    2 * r + 2,
                    anc.len()
                )));
            }
            g.push(Gate::H(anc[2 * r]));
            g.push(Gate::H(anc[2 * r + 1]));
            for lvl in (1..=r).rev() {
                g.push(Gate::Cnot(anc[2 * lvl], anc[2 * lvl - 2]));
                g.push(Gate::Cnot(anc[2 * lvl + 1], anc[2 * lvl - 1]));
                g.push(Gate::H(anc[2 * lvl - 2]));
                g.push(Gate::H(anc[2 * lvl - 1]));
            }
            g.push(Gate::Cz(anc[1], data));
            g.push(Gate::Cnot(anc[0], data));
        }
    }
    Ok(g)
}

/// Mirror image of [`left_fragment`], ending with the X-basis rotation of
/// the top-level ancillas.
pub fn right_fragment(data: usize, anc: &[usize], mode: CheckMode, r: usize) -> Result<Vec<Gate>> {
    Ok(left_fragment(data, anc, mode, r)?.iter().rev().map(inverse).collect())
}

/// Number of ancillas protecting one qubit.
pub fn ancillas_per_qubit(mode: CheckMode, r: usize) -> usize {
    match mode {
        CheckMode::None => 0,
        CheckMode::X => 1,
        CheckMode::XZ => 2 * r + 2,
    }
}

/// Noise on a checked Bell pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairNoise {
    /// `p1` on every qubit of half A (data and its ancillas), `p2` on half B.
    PerHalf { p1: f64, p2: f64 },
    /// `p_ancilla` on all ancillas, `p_data` on both data qubits.
    ByRole { p_data: f64, p_ancilla: f64 },
}

impl PairNoise {
    pub fn uniform(p: f64) -> Self {
        PairNoise::PerHalf { p1: p, p2: p }
    }
}

/// Settings for a checked Bell pair: the pair is prepared, checked, sent
/// through one noise layer (replacement-convention depolarizing on every qubit) and
/// checked again.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub mode: CheckMode,
    pub recursion: usize,
    pub noise: PairNoise,
    pub gate_noise: GateNoise,
}

/// Qubit names for one protected half with prefix `p`: data `p0`, ancillas
/// `p1, p2, …`.
fn half_names(prefix: &str, n_anc: usize) -> Vec<String> {
    (0..=n_anc).map(|i| format!("{prefix}{i}")).collect()
}

/// A Bell pair `(a0, b0)` with checks on both halves.
pub fn build_pcs_pair(cfg: &PairConfig) -> Result<Circuit> {
    let k = ancillas_per_qubit(cfg.mode, cfg.recursion);
    if cfg.mode != CheckMode::XZ && cfg.recursion > 0 {
        return Err(Error::Validation("recursion requires X&Z checks".into()));
    }
    let mut names = half_names("a", k);
    names.extend(half_names("b", k));
    let mut b = CircuitBuilder::new(names)?.with_gate_noise(cfg.gate_noise);
    let half = |b: &CircuitBuilder, p: &str| -> (usize, Vec<usize>) {
        (b.q(&format!("{p}0")), (1..=k).map(|i| b.q(&format!("{p}{i}"))).collect())
    };
    let (da, aa) = half(&b, "a");
    let (db, ab) = half(&b, "b");
    build_bell_pair(&mut b, da, db)?;
    b.barrier("left_checks")?;
    for (d, anc) in [(da, &aa), (db, &ab)] {
        for g in left_fragment(d, anc, cfg.mode, cfg.recursion)? {
            b.gate(g)?;
        }
    }
    b.barrier("channel")?;
    let (pa, pb, pd) = match cfg.noise {
        PairNoise::PerHalf { p1, p2 } => (p1, p2, None),
        PairNoise::ByRole { p_data, p_ancilla } => (p_ancilla, p_ancilla, Some(p_data)),
    };
    match pd {
        None => {
            b.depolarize(&[da], pa)?;
            b.depolarize(&aa, pa)?;
            b.depolarize(&[db], pb)?;
            b.depolarize(&ab, pb)?;
        }
        Some(p_data) => {
            b.depolarize(&[da, db], p_data)?;
            b.depolarize(&aa, pa)?;
            b.depolarize(&ab, pb)?;
        }
    }
    b.barrier("right_checks")?;
    for (d, anc) in [(da, &aa), (db, &ab)] {
        for g in right_fragment(d, anc, cfg.mode, cfg.recursion)? {
            b.gate(g)?;
        }
    }
    b.barrier("readout")?;
    readout(&mut b, aa.iter().chain(&ab).copied())?;
    b.output(da, db)?;
    Ok(b.build())
}

fn readout(b: &mut CircuitBuilder, ancillas: impl Iterator<Item = usize>) -> Result<()> {
    let ancillas: Vec<usize> = ancillas.collect();
    for q in ancillas {
        let label = format!("m_{}", b.circuit().names()[q]);
        b.measure(Basis::Z, q, &label)?;
        b.parity(&[&label], false)?;
    }
    Ok(())
}

/// X checks on both halves, noiseless gates.
pub fn build_pcs_x_pair(noise: PairNoise) -> Result<Circuit> {
    build_pcs_pair(&PairConfig {
        mode: CheckMode::X,
        recursion: 0,
        noise,
        gate_noise: GateNoise::default(),
    })
}

/// X and Z checks on both halves, noiseless gates.
pub fn build_pcs_xz_pair(noise: PairNoise) -> Result<Circuit> {
    build_pcs_pair(&PairConfig {
        mode: CheckMode::XZ,
        recursion: 0,
        noise,
        gate_noise: GateNoise::default(),
    })
}

/// Recursive X&Z checks at level `r` on both halves of a Bell pair, channel
/// `p` on every qubit.
pub fn build_recursive_pcs(r: usize, p_channel: f64, gate_noise: GateNoise) -> Result<Circuit> {
    build_pcs_pair(&PairConfig {
        mode: CheckMode::XZ,
        recursion: r,
        noise: PairNoise::uniform(p_channel),
        gate_noise,
    })
}

/// One data qubit `d` protected by a single X check with ancilla `a`,
/// replacement-convention depolarizing `p` on both between the checks. Used to
/// extract the postselected single-qubit channel.
pub fn build_half_pcs_x(p: f64) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(["d", "a"])?;
    let checks = [CheckSpec {
        pauli: PauliString::single(2, 0, Pauli::X)?,
        ancilla: 1,
    }];
    build_pcs_sandwich(&mut b, &[0], &checks, |b| {
        b.depolarize(&[0, 1], p)?;
        Ok(())
    })?;
    Ok(b.build())
}

/// The encoding circuit of one protected half on its own: data `r0` and
/// ancillas `a1 … a_{2r+2}`. All qubits start in `|0⟩`.
pub fn build_half_encoding(r: usize) -> Result<Circuit> {
    let k = ancillas_per_qubit(CheckMode::XZ, r);
    let mut names = vec!["rho".to_string()];
    names.extend((1..=k).map(|i| format!("a{i}")));
    let mut c = Circuit::new(names)?;
    let anc: Vec<usize> = (1..=k).collect();
    for g in left_fragment(0, &anc, CheckMode::XZ, r)? {
        c.gate(g)?;
    }
    Ok(c)
}

/// The full single-half check circuit: encoding, a `channel` barrier, the
/// mirrored decoding and Z readout of every ancilla (labels `m_a1 …`).
pub fn build_half_pcs(r: usize) -> Result<Circuit> {
    let mut c = build_half_encoding(r)?;
    let k = c.num_qubits() - 1;
    let anc: Vec<usize> = (1..=k).collect();
    c.barrier("channel")?;
    c.barrier("right_checks")?;
    for g in right_fragment(0, &anc, CheckMode::XZ, r)? {
        c.gate(g)?;
    }
    c.barrier("readout")?;
    for q in 1..=k {
        let label = format!("m_a{q}");
        c.measure(Basis::Z, q, label.clone())?;
        c.parity(&[&label], false)?;
    }
    Ok(c)
}

/// Noise and check settings for entanglement swapping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapConfig {
    pub mode: CheckMode,
    pub protect: Protect,
    pub recursion: usize,
    /// replacement-convention depolarizing on flying qubits and their ancillas.
    pub p_channel: f64,
    /// replacement-convention depolarizing on memory qubits and their ancillas,
    /// during the same window.
    pub p_memory: f64,
    pub gate_noise: GateNoise,
}

impl SwapConfig {
    pub fn new(mode: CheckMode, protect: Protect, p: f64, gate_noise: GateNoise) -> Self {
        Self {
            mode,
            protect,
            recursion: 0,
            p_channel: p,
            p_memory: p,
            gate_noise,
        }
    }

    fn protects(&self, flying: bool) -> bool {
        if self.mode == CheckMode::None {
            return false;
        }
        match self.protect {
            Protect::None => false,
            Protect::Flying => flying,
            Protect::Memory => !flying,
            Protect::FlyingMemory => true,
        }
    }
}

/// Entanglement swapping. Alice holds `(a0, a1)`, Bob `(b0, b1)`; `a0` and
/// `b0` fly to Charlie, who Bell-measures them. Checks (per `protect`) are
/// applied at the origin, the channel acts on every qubit, right checks
/// follow, then the Bell measurement. The output `(a1, b1)` is corrected in
/// the Pauli frame: `Z` on `b1` if the `XX` bit is 1, `X` if the `ZZ` bit is.
pub fn build_swap_with_pcs(cfg: &SwapConfig) -> Result<Circuit> {
    let k = ancillas_per_qubit(cfg.mode, cfg.recursion);
    let data = ["a0", "a1", "b0", "b1"];
    let flying = [true, false, true, false];
    let mut names: Vec<String> = data.iter().map(|s| s.to_string()).collect();
    let mut groups: Vec<(usize, Vec<usize>, bool)> = Vec::new();
    for (i, d) in data.iter().enumerate() {
        let anc = if cfg.protects(flying[i]) {
            let start = names.len();
            names.extend((1..=k).map(|j| format!("{d}_c{j}")));
            (start..start + k).collect()
        } else {
            vec![]
        };
        groups.push((i, anc, flying[i]));
    }
    let mut b = CircuitBuilder::new(names)?.with_gate_noise(cfg.gate_noise);
    build_bell_pair(&mut b, 0, 1)?;
    build_bell_pair(&mut b, 2, 3)?;
    b.barrier("left_checks")?;
    for (d, anc, _) in &groups {
        if !anc.is_empty() {
            for g in left_fragment(*d, anc, cfg.mode, cfg.recursion)? {
                b.gate(g)?;
            }
        }
    }
    b.barrier("channel")?;
    for (d, anc, fly) in &groups {
        let p = if *fly { cfg.p_channel } else { cfg.p_memory };
        b.depolarize(&[*d], p)?;
        b.depolarize(anc, p)?;
    }
    b.barrier("right_checks")?;
    for (d, anc, _) in &groups {
        if !anc.is_empty() {
            for g in right_fragment(*d, anc, cfg.mode, cfg.recursion)? {
                b.gate(g)?;
            }
        }
    }
    b.barrier("readout")?;
    readout(&mut b, groups.iter().flat_map(|(_, a, _)| a.clone()))?;
    b.bell_measure(0, 2, "bx", "bz")?;
    b.frame(Pauli::Z, 3, &["bx"])?;
    b.frame(Pauli::X, 3, &["bz"])?;
    b.output(1, 3)?;
    Ok(b.build())
}

/// Settings for teleported checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportedConfig {
    pub p_channel: f64,
    pub p_memory: f64,
    pub gate_noise: GateNoise,
}

/// Teleported X&Z checks for entanglement swapping.
///
/// Alice holds `(a0, a1)` with check ancillas `a2` (X check on `a0`) and
/// `a3` (Z check on `a0`); Bob mirrors this with `b0 … b3`. Only the left
/// checks are applied; Charlie then Bell-measures `(a0, b0)`, `(a2, b2)` and
/// `(a3, b3)`. Each Bell measurement yields an `XX`-parity bit (suffix 1)
/// and a `ZZ`-parity bit (suffix 2):
///
/// | pair       | bits       |
/// |------------|------------|
/// | `(a0, b0)` | `v1`, `v2` |
/// | `(a2, b2)` | `w1`, `w2` |
/// | `(a3, b3)` | `u1`, `u2` |
///
/// Postselection: `w1 + v1 = 0` and `u1 + v2 + w2 = 0`. Frame on `b1`: `Z` if
/// `v1 + u2 = 1`, `X` if `v2 + w2 = 1`.
pub fn build_teleported_pcs(cfg: &TeleportedConfig) -> Result<Circuit> {
    let names = ["a0", "a1", "b0", "b1", "a2", "a3", "b2", "b3"];
    let mut b = CircuitBuilder::new(names)?.with_gate_noise(cfg.gate_noise);
    let q = |n: &str| names.iter().position(|x| *x == n).expect("fixed layout");
    build_bell_pair(&mut b, q("a0"), q("a1"))?;
    build_bell_pair(&mut b, q("b0"), q("b1"))?;
    b.barrier("left_checks")?;
    for p in ["a", "b"] {
        let d = q(&format!("{p}0"));
        let ax = q(&format!("{p}2"));
        let az = q(&format!("{p}3"));
        b.h(ax)?.h(az)?;
        b.cz(az, d)?;
        b.cnot(ax, d)?;
    }
    b.barrier("channel")?;
    b.depolarize(&[q("a0"), q("b0"), q("a2"), q("a3"), q("b2"), q("b3")], cfg.p_channel)?;
    b.depolarize(&[q("a1"), q("b1")], cfg.p_memory)?;
    b.barrier("readout")?;
    b.bell_measure(q("a0"), q("b0"), "v1", "v2")?;
    b.bell_measure(q("a2"), q("b2"), "w1", "w2")?;
    b.bell_measure(q("a3"), q("b3"), "u1", "u2")?;
    b.parity(&["w1", "v1"], false)?;
    b.parity(&["u1", "v2", "w2"], false)?;
    b.frame(Pauli::Z, q("b1"), &["v1", "u2"])?;
    b.frame(Pauli::X, q("b1"), &["v2", "w2"])?;
    b.output(q("a1"), q("b1"))?;
    Ok(b.build())
}

/// One BBPSSW round on two Werner pairs of fidelity `f`: pairs `(a1, b1)` and
/// `(a2, b2)`, bilateral CNOTs `a1→a2`, `b1→b2`, Z measurements of `a2` and
/// `b2`, keep if they coincide. The Werner form comes from a twirl-equivalent
/// Pauli channel on one half of each pair.
pub fn build_bbpssw_round(f: f64, gate_noise: GateNoise) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(["a1", "b1", "a2", "b2"])?.with_gate_noise(gate_noise);
    build_bell_pair(&mut b, 0, 1)?;
    build_bell_pair(&mut b, 2, 3)?;
    b.barrier("channel")?;
    b.channel(vec![1], PauliChannel::werner(f)?)?;
    b.channel(vec![3], PauliChannel::werner(f)?)?;
    b.barrier("readout")?;
    b.cnot(0, 2)?.cnot(1, 3)?;
    b.measure(Basis::Z, 2, "ma")?;
    b.measure(Basis::Z, 3, "mb")?;
    b.parity(&["ma", "mb"], false)?;
    b.output(0, 1)?;
    Ok(b.build())
}

/// Resource counts of a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitCost {
    pub qubits: usize,
    pub two_qubit_gates: usize,
    /// Two-qubit gates between the `right_checks` and `readout` barriers.
    pub right_check_gates: usize,
}

pub fn cost(c: &Circuit) -> CircuitCost {
    let start = c.barrier_index("right_checks");
    let end = c.barrier_index("readout");
    let right = match (start, end) {
        (Some(s), Some(e)) if s < e => c.ops()[s..e]
            .iter()
            .filter(|op| matches!(op, crate::circuit::Op::Gate(g) if g.is_two_qubit()))
            .count(),
        _ => 0,
    };
    CircuitCost {
        qubits: c.num_qubits(),
        two_qubit_gates: c.two_qubit_gate_count(),
        right_check_gates: right,
    }
}
