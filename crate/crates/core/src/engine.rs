//! Stabilizer-based execution of [`Circuit`]s: Monte Carlo shots on a
//! tableau, and exact evaluation over all Pauli error paths by Pauli-frame
//! propagation.
//!
//! Exact evaluation relies on linearity. Every noise term is a Pauli; pushed
//! through the remaining Clifford gates it flips a fixed set of measurement
//! bits and leaves a fixed residual Pauli on the output pair. Effects of
//! independent sites combine by XOR, so a path is scored by XOR-ing per-term
//! effects without re-simulating the circuit.
//!
//! Before any exact evaluation the noiseless circuit is analysed once on a
//! tableau: every parity condition must hold and the corrected output must be
//! `|Φ+⟩` for every branch of every random measurement. Circuits that violate
//! this are rejected as unsupported.

use std::collections::HashMap;
use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Basis, Circuit, Gate, Op};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::tableau::StabilizerTableau;

/// Largest number of error paths [`enumerate_paths`] will visit.
pub const MAX_PATHS: u128 = 10_000_000;

/// Shots per independently seeded RNG stream.
pub const SHOT_BLOCK: u64 = 1024;

#[derive(Clone, Debug)]
enum Step {
    Gate(Gate),
    Noise {
        cumulative: Vec<f64>,
        paulis: Vec<PauliString>,
        probs: Vec<f64>,
    },
    Measure {
        label: usize,
        observable: PauliString,
    },
}

/// A circuit lowered to full-register Paulis and label bit masks.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    n: usize,
    steps: Vec<Step>,
    labels: Vec<String>,
    conditions: Vec<(u64, bool)>,
    frames: Vec<(u64, PauliString)>,
    output: Option<(usize, usize)>,
}

fn mask_of(labels: &[String], index: &HashMap<&str, usize>) -> u64 {
    labels.iter().fold(0u64, |m, l| m ^ (1u64 << index[l.as_str()]))
}

impl Compiled {
    pub(crate) fn new(c: &Circuit) -> Result<Self> {
        let n = c.num_qubits();
        let labels: Vec<String> = c.labels().iter().map(|s| s.to_string()).collect();
        if labels.len() > 64 {
            return Err(Error::Resource(format!(
                "{} measurement labels exceeds the limit of 64",
                labels.len()
            )));
        }
        let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut steps = Vec::new();
        let mut conditions = Vec::new();
        let mut frames = Vec::new();
        for op in c.ops() {
            match op {
                Op::Gate(g) => steps.push(Step::Gate(*g)),
                Op::Noise { qubits, channel } => {
                    let mut cumulative = Vec::new();
                    let mut paulis = Vec::new();
                    let mut probs = Vec::new();
                    let mut acc = 0.0;
                    for (p, w) in channel.terms() {
                        acc += w;
                        cumulative.push(acc);
                        probs.push(*w);
                        let mut full = PauliString::identity(n)?;
                        for (j, &q) in qubits.iter().enumerate() {
                            full.set(q, p.letter(j))?;
                        }
                        paulis.push(full);
                    }
                    steps.push(Step::Noise {
                        cumulative,
                        paulis,
                        probs,
                    });
                }
                Op::Measure { basis, qubit, label } => {
                    let letter = match basis {
                        Basis::X => Pauli::X,
                        Basis::Z => Pauli::Z,
                    };
                    steps.push(Step::Measure {
                        label: index[label.as_str()],
                        observable: PauliString::single(n, *qubit, letter)?,
                    });
                }
                Op::Parity { labels, parity } => conditions.push((mask_of(labels, &index), *parity)),
                Op::Frame { pauli, qubit, labels } => {
                    frames.push((mask_of(labels, &index), PauliString::single(n, *qubit, *pauli)?));
                }
                Op::Barrier(_) => {}
            }
        }
        Ok(Self {
            n,
            steps,
            labels,
            conditions,
            frames,
            output: c.output(),
        })
    }

    fn passes(&self, bits: u64) -> bool {
        self.conditions
            .iter()
            .all(|&(m, par)| ((bits & m).count_ones() % 2 == 1) == par)
    }

    fn frame_for(&self, bits: u64) -> PauliString {
        let mut f = PauliString::identity(self.n).expect("register size validated");
        for (m, p) in &self.frames {
            if (bits & m).count_ones() % 2 == 1 {
                f = f.mul_unchecked(p);
            }
        }
        f
    }

    fn output_pair(&self) -> Result<(usize, usize)> {
        self.output
            .ok_or_else(|| Error::Validation("circuit has no designated output pair".into()))
    }
}

/// Result of one Monte Carlo shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    /// Measurement bits in label definition order.
    pub bits: Vec<bool>,
    pub passed: bool,
    /// Accumulated Pauli-frame correction on the whole register.
    pub frame: PauliString,
}

fn execute<R: Rng + ?Sized>(prog: &Compiled, rng: &mut R) -> Result<(u64, StabilizerTableau)> {
    let mut t = StabilizerTableau::new(prog.n)?;
    let mut bits = 0u64;
    for step in &prog.steps {
        match step {
            Step::Gate(g) => t.apply_gate_unchecked(g),
            Step::Noise { cumulative, paulis, .. } => {
                let u: f64 = rng.gen();
                let k = cumulative.iter().position(|&c| u < c).unwrap_or(paulis.len() - 1);
                if !paulis[k].is_identity_up_to_phase() {
                    t.apply_pauli_unchecked(&paulis[k]);
                }
            }
            Step::Measure { label, observable } => {
                let m = t.measure_pauli(observable, rng)?;
                if m.outcome {
                    bits |= 1 << label;
                }
            }
        }
    }
    Ok((bits, t))
}

/// Runs one shot: samples one Pauli per noise site, measures, and evaluates
/// the parity conditions and frame corrections.
pub fn run_shot<R: Rng + ?Sized>(c: &Circuit, rng: &mut R) -> Result<ShotRecord> {
    let prog = Compiled::new(c)?;
    let (bits, _) = execute(&prog, rng)?;
    Ok(ShotRecord {
        bits: (0..prog.labels.len()).map(|i| bits >> i & 1 == 1).collect(),
        passed: prog.passes(bits),
        frame: prog.frame_for(bits),
    })
}

/// Raw Monte Carlo tallies. Merging is plain summation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct McCounts {
    pub shots: u64,
    pub passed: u64,
    /// Postselected shots measuring `XX`, `YY`, `ZZ`.
    pub obs_shots: [u64; 3],
    /// Of those, shots with eigenvalue `+1`.
    pub obs_plus: [u64; 3],
}

impl McCounts {
    pub fn merge(mut self, o: &McCounts) -> Self {
        self.shots += o.shots;
        self.passed += o.passed;
        for k in 0..3 {
            self.obs_shots[k] += o.obs_shots[k];
            self.obs_plus[k] += o.obs_plus[k];
        }
        self
    }

    pub fn estimate(&self) -> Result<McEstimate> {
        if self.shots == 0 || self.passed == 0 || self.obs_shots.iter().any(|&s| s == 0) {
            return Err(Error::EstimationImpossible(self.shots));
        }
        let pr = self.passed as f64 / self.shots as f64;
        let mut means = [0.0; 3];
        let mut var = 0.0;
        for k in 0..3 {
            let nk = self.obs_shots[k] as f64;
            let m = (2.0 * self.obs_plus[k] as f64 - nk) / nk;
            means[k] = m;
            var += (1.0 - m * m) / nk;
        }
        Ok(McEstimate {
            pass_rate: pr,
            pass_stderr: (pr * (1.0 - pr) / self.shots as f64).sqrt(),
            fidelity: 0.25 * (1.0 + means[0] - means[1] + means[2]),
            fidelity_stderr: 0.25 * var.sqrt(),
            counts: *self,
        })
    }
}

/// Monte Carlo estimate with binomial standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub pass_rate: f64,
    pub pass_stderr: f64,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
    pub counts: McCounts,
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Runs the shots of the listed blocks. Shot `i` belongs to block
/// `i / SHOT_BLOCK`, draws from that block's stream and measures `XX`, `YY`
/// or `ZZ` on the output by `i mod 3`.
fn sample_blocks(prog: &Compiled, blocks: Range<u64>, n_shots: u64, seed: u64) -> Result<McCounts> {
    let (o0, o1) = prog.output_pair()?;
    let observables = [Pauli::X, Pauli::Y, Pauli::Z]
        .iter()
        .map(|&l| PauliString::on_qubits(prog.n, &[o0, o1], &[l, l]))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = McCounts::default();
    for b in blocks {
        let mut rng = block_rng(seed, b);
        let start = b * SHOT_BLOCK;
        let end = (start + SHOT_BLOCK).min(n_shots);
        for shot in start..end {
            let (bits, mut t) = execute(prog, &mut rng)?;
            counts.shots += 1;
            if !prog.passes(bits) {
                continue;
            }
            counts.passed += 1;
            let k = (shot % 3) as usize;
            let obs = &observables[k];
            let m = t.measure_pauli(obs, &mut rng)?;
            let flip = !prog.frame_for(bits).commutes_unchecked(obs);
            counts.obs_shots[k] += 1;
            if m.outcome == flip {
                counts.obs_plus[k] += 1;
            }
        }
    }
    Ok(counts)
}

fn n_blocks(n_shots: u64) -> u64 {
    n_shots.div_ceil(SHOT_BLOCK)
}

/// Monte Carlo tallies for `n_shots` shots, parallel over shot blocks.
pub fn sample_counts(c: &Circuit, n_shots: u64, seed: u64) -> Result<McCounts> {
    let prog = Compiled::new(c)?;
    let counts = (0..n_blocks(n_shots))
        .into_par_iter()
        .map(|b| sample_blocks(&prog, b..b + 1, n_shots, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.iter().fold(McCounts::default(), |a, b| a.merge(b)))
}

/// Same tallies computed as `workers` contiguous shards merged afterwards.
/// Identical to [`sample_counts`] for any worker count.
pub fn sample_counts_sharded(c: &Circuit, n_shots: u64, seed: u64, workers: u64) -> Result<McCounts> {
    let prog = Compiled::new(c)?;
    let nb = n_blocks(n_shots);
    let workers = workers.max(1);
    let per = nb.div_ceil(workers);
    let shards: Vec<Range<u64>> = (0..workers)
        .map(|w| (w * per).min(nb)..((w + 1) * per).min(nb))
        .collect();
    let counts = shards
        .into_par_iter()
        .map(|r| sample_blocks(&prog, r, n_shots, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.iter().fold(McCounts::default(), |a, b| a.merge(b)))
}

/// Monte Carlo estimate of the pass rate and postselected Bell fidelity
/// `¼(1 + ⟨XX⟩ − ⟨YY⟩ + ⟨ZZ⟩)` of the output pair.
pub fn estimate_bell_fidelity(c: &Circuit, n_shots: u64, seed: u64) -> Result<McEstimate> {
    sample_counts(c, n_shots, seed)?.estimate()
}

/// Exact pass probability and postselected Bell fidelity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactResult {
    pub pass_prob: f64,
    /// NaN when nothing passes or the circuit has no output pair.
    pub bell_fidelity: f64,
    /// Total probability mass visited (1 up to rounding).
    pub total_prob: f64,
}

/// Per-term effect: bit `j` of `violations` flips parity condition `j`;
/// `residual` holds output letters as `(x0, z0, x1, z1)` bits 0..4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Effect {
    pub violations: u64,
    pub residual: u8,
}

impl Effect {
    fn xor(&self, o: &Effect) -> Effect {
        Effect {
            violations: self.violations ^ o.violations,
            residual: self.residual ^ o.residual,
        }
    }
}

fn residual_good(r: u8) -> bool {
    // Same letter on both halves: II, XX, YY or ZZ all fix |Φ+⟩.
    (r & 0b11) == (r >> 2)
}

/// Noise sites lowered to `(effect, probability)` lists.
#[derive(Clone, Debug)]
pub(crate) struct Analysis {
    pub sites: Vec<Vec<(Effect, f64)>>,
    pub has_output: bool,
}

impl Compiled {
    /// Pushes `p`, inserted just after step `from` (or before the first step
    /// when `from` is `None`), to the end of the circuit. Returns the flipped
    /// measurement bits and the final Pauli, frame corrections not included.
    pub(crate) fn propagate(&self, mut p: PauliString, from: Option<usize>) -> (u64, PauliString) {
        let start = from.map_or(0, |f| f + 1);
        let mut flips = 0u64;
        for step in &self.steps[start..] {
            match step {
                Step::Gate(g) => g.conjugate(&mut p),
                Step::Measure { label, observable } => {
                    if !p.commutes_unchecked(observable) {
                        flips ^= 1 << label;
                    }
                }
                Step::Noise { .. } => {}
            }
        }
        (flips, p)
    }

    /// Effect of a propagated Pauli whose measurement flips are `flips`.
    fn effect(&self, flips: u64, p: &PauliString) -> Effect {
        let out = p.mul_unchecked(&self.frame_for(flips));
        Effect {
            violations: self.violations(flips),
            residual: self.residual_bits(&out),
        }
    }

    fn residual_bits(&self, p: &PauliString) -> u8 {
        match self.output {
            None => 0,
            Some((a, b)) => {
                let bit = |m: u64, q: usize| (m >> q & 1) as u8;
                bit(p.x_bits(), a) | bit(p.z_bits(), a) << 1 | bit(p.x_bits(), b) << 2 | bit(p.z_bits(), b) << 3
            }
        }
    }

    fn violations(&self, flips: u64) -> u64 {
        self.conditions
            .iter()
            .enumerate()
            .fold(0u64, |v, (j, &(m, _))| v | (((flips & m).count_ones() % 2) as u64) << j)
    }

    /// Checks the noiseless circuit and lowers every noise term to its
    /// effect.
    pub(crate) fn analyse(&self) -> Result<Analysis> {
        if self.conditions.len() > 60 {
            return Err(Error::Resource(format!(
                "{} parity conditions exceeds the limit of 60",
                self.conditions.len()
            )));
        }
        self.check_reference()?;
        let mut sites = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            if let Step::Noise { paulis, probs, .. } = step {
                let terms = paulis
                    .iter()
                    .zip(probs)
                    .map(|(p, &w)| {
                        let (flips, out) = self.propagate(*p, Some(i));
                        (self.effect(flips, &out), w)
                    })
                    .collect();
                sites.push(terms);
            }
        }
        Ok(Analysis {
            sites,
            has_output: self.output.is_some(),
        })
    }

    /// Runs the noiseless circuit once on a tableau. The reference record
    /// must pass, and every random measurement's alternative branch (reached
    /// by applying the anticommuting stabilizer after the measurement) must
    /// leave conditions and the corrected output unchanged. The corrected
    /// output must be stabilized by `XX` and `ZZ`.
    fn check_reference(&self) -> Result<()> {
        let mut t = StabilizerTableau::new(self.n)?;
        let mut bits = 0u64;
        let mut branches: Vec<(usize, PauliString, usize)> = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Gate(g) => t.apply_gate_unchecked(g),
                Step::Noise { .. } => {}
                Step::Measure { label, observable } => {
                    let (m, flip) = t.measure_pauli_with(observable, false)?;
                    if m.outcome {
                        bits |= 1 << label;
                    }
                    if let Some(g) = flip {
                        branches.push((i, g, *label));
                    }
                }
            }
        }
        if !self.passes(bits) {
            return Err(Error::Unsupported(
                "noiseless circuit fails its parity conditions".into(),
            ));
        }
        for (i, g, label) in branches {
            let (flips, out) = self.propagate(g, Some(i));
            let e = self.effect(flips ^ (1 << label), &out);
            if e.violations != 0 {
                return Err(Error::Unsupported(format!(
                    "parity conditions depend on the random outcome {:?}",
                    self.labels[label]
                )));
            }
            if !residual_good(e.residual) {
                return Err(Error::Unsupported(format!(
                    "corrected output depends on the random outcome {:?}",
                    self.labels[label]
                )));
            }
        }
        if let Some((a, b)) = self.output {
            let frame = self.frame_for(bits);
            for l in [Pauli::X, Pauli::Z] {
                let obs = PauliString::on_qubits(self.n, &[a, b], &[l, l])?;
                let sign = if frame.commutes_unchecked(&obs) { 1 } else { -1 };
                if t.expectation(&obs)?.map(|e| e * sign) != Some(1) {
                    return Err(Error::Unsupported(
                        "noiseless corrected output is not the Bell state".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn finish(pass: f64, good: f64, total: f64, has_output: bool) -> ExactResult {
    let fid = if has_output && pass > 0.0 { good / pass } else { f64::NAN };
    ExactResult {
        pass_prob: pass,
        bell_fidelity: fid,
        total_prob: total,
    }
}

/// Exact evaluation by visiting every Kraus-index assignment. Fails when the
/// number of paths exceeds [`MAX_PATHS`].
pub fn enumerate_paths(c: &Circuit) -> Result<ExactResult> {
    let paths = c.path_count();
    if paths > MAX_PATHS {
        return Err(Error::Resource(format!(
            "{paths} error paths exceeds the enumeration cap of {MAX_PATHS}"
        )));
    }
    let prog = Compiled::new(c)?;
    let a = prog.analyse()?;
    let mut acc = (0.0, 0.0, 0.0);
    fn visit(sites: &[Vec<(Effect, f64)>], e: Effect, p: f64, acc: &mut (f64, f64, f64)) {
        match sites.split_first() {
            None => {
                acc.2 += p;
                if e.violations == 0 {
                    acc.0 += p;
                    if residual_good(e.residual) {
                        acc.1 += p;
                    }
                }
            }
            Some((site, rest)) => {
                for (t, w) in site {
                    visit(rest, e.xor(t), p * w, acc);
                }
            }
        }
    }
    visit(
        &a.sites,
        Effect {
            violations: 0,
            residual: 0,
        },
        1.0,
        &mut acc,
    );
    Ok(finish(acc.0, acc.1, acc.2, a.has_output))
}

/// Probability of every reachable `(violations, residual)` outcome,
/// accumulated site by site.
pub(crate) fn effect_distribution(a: &Analysis) -> HashMap<Effect, f64> {
    let mut dist: HashMap<Effect, f64> = HashMap::new();
    dist.insert(
        Effect {
            violations: 0,
            residual: 0,
        },
        1.0,
    );
    for site in &a.sites {
        let mut next: HashMap<Effect, f64> = HashMap::with_capacity(dist.len() * 2);
        for (e, p) in &dist {
            for (t, w) in site {
                *next.entry(e.xor(t)).or_insert(0.0) += p * w;
            }
        }
        dist = next;
    }
    dist
}

/// Exact evaluation by aggregating path probabilities per outcome class.
/// Gives the same numbers as [`enumerate_paths`] without its path cap.
pub fn exact(c: &Circuit) -> Result<ExactResult> {
    let prog = Compiled::new(c)?;
    let a = prog.analyse()?;
    let dist = effect_distribution(&a);
    let (mut pass, mut good, mut total) = (0.0, 0.0, 0.0);
    for (e, p) in &dist {
        total += p;
        if e.violations == 0 {
            pass += p;
            if residual_good(e.residual) {
                good += p;
            }
        }
    }
    Ok(finish(pass, good, total, a.has_output))
}

/// Measurement bits flipped by the Pauli `error` inserted before op index
/// `at`, in label order, relative to the noiseless record.
pub fn flipped_bits(c: &Circuit, at: usize, error: &PauliString) -> Result<Vec<bool>> {
    if error.num_qubits() != c.num_qubits() {
        return Err(Error::Dimension {
            expected: c.num_qubits(),
            got: error.num_qubits(),
        });
    }
    let prog = Compiled::new(c)?;
    // Steps exclude parity/frame/barrier ops; count the steps before `at`.
    let before = c.ops()[..at.min(c.ops().len())]
        .iter()
        .filter(|op| matches!(op, Op::Gate(_) | Op::Noise { .. } | Op::Measure { .. }))
        .count();
    let (flips, _) = prog.propagate(*error, before.checked_sub(1));
    Ok((0..prog.labels.len()).map(|i| flips >> i & 1 == 1).collect())
}
