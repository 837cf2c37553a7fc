//! Dense execution of [`Circuit`]s and channel extraction.
//!
//! Measurements are deferred: the runner evolves the full density matrix,
//! then reads every measurement outcome at the end. This is exact as long as
//! no gate or noise touches a qubit after it was measured, which is checked.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::circuit::{Basis, Circuit, Gate, Op};
use crate::dense::{self, apply_kraus_raw, conjugate, gates, partial_trace_raw, CMatrix, DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

/// Outcome of a dense run.
#[derive(Clone, Debug)]
pub struct DenseRun {
    pub pass_prob: f64,
    /// NaN when nothing passes or the circuit has no output pair.
    pub bell_fidelity: f64,
    /// Normalized postselected state of the output pair.
    pub output_state: Option<DensityMatrix>,
}

fn gate_matrix(g: &Gate) -> (CMatrix, Vec<usize>) {
    match *g {
        Gate::H(q) => (gates::h(), vec![q]),
        Gate::S(q) => (gates::s(), vec![q]),
        Gate::Sdg(q) => (gates::sdg(), vec![q]),
        Gate::X(q) => (Pauli::X.matrix(), vec![q]),
        Gate::Y(q) => (Pauli::Y.matrix(), vec![q]),
        Gate::Z(q) => (Pauli::Z.matrix(), vec![q]),
        Gate::Cnot(a, b) => (gates::cnot(), vec![a, b]),
        Gate::Cz(a, b) => (gates::cz(), vec![a, b]),
    }
}

fn check_deferrable(c: &Circuit) -> Result<()> {
    let mut measured = vec![false; c.num_qubits()];
    for op in c.ops() {
        let touched: Vec<usize> = match op {
            Op::Gate(g) => g.qubits(),
            Op::Noise { qubits, .. } => qubits.clone(),
            Op::Measure { qubit, .. } => {
                if measured[*qubit] {
                    return Err(Error::Unsupported(format!("qubit {qubit} measured twice")));
                }
                measured[*qubit] = true;
                continue;
            }
            _ => continue,
        };
        if let Some(q) = touched.into_iter().find(|&q| measured[q]) {
            return Err(Error::Unsupported(format!(
                "qubit {} is used after being measured",
                c.names()[q]
            )));
        }
    }
    Ok(())
}

/// Runs `c` on the operator `initial` (any `2^n × 2^n` matrix, so that
/// `|i⟩⟨j|` inputs work for channel extraction) and returns the
/// unnormalized postselected operator on `outputs`, with frame corrections
/// applied.
pub fn run_operator(c: &Circuit, initial: &CMatrix, outputs: &[usize]) -> Result<CMatrix> {
    let n = c.num_qubits();
    if n > dense::MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the dense oracle cap of {}",
            dense::MAX_DENSE_QUBITS
        )));
    }
    let dim = 1usize << n;
    if initial.nrows() != dim || initial.ncols() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: initial.nrows(),
        });
    }
    check_deferrable(c)?;
    let mut m = initial.clone();
    let mut measured: Vec<(String, usize)> = Vec::new();
    let mut conditions: Vec<(Vec<String>, bool)> = Vec::new();
    let mut frames: Vec<(Pauli, usize, Vec<String>)> = Vec::new();
    for op in c.ops() {
        match op {
            Op::Gate(g) => {
                let (u, t) = gate_matrix(g);
                m = conjugate(&m, &u, &t, n);
            }
            Op::Noise { qubits, channel } => {
                let ops = channel
                    .terms()
                    .iter()
                    .map(|(p, w)| Ok(p.to_matrix()? * Complex64::new(w.sqrt(), 0.0)))
                    .collect::<Result<Vec<_>>>()?;
                m = apply_kraus_raw(&m, &ops, qubits, n);
            }
            Op::Measure { basis, qubit, label } => {
                if *basis == Basis::X {
                    m = conjugate(&m, &gates::h(), &[*qubit], n);
                }
                measured.push((label.clone(), *qubit));
            }
            Op::Parity { labels, parity } => conditions.push((labels.clone(), *parity)),
            Op::Frame { pauli, qubit, labels } => frames.push((*pauli, *qubit, labels.clone())),
            Op::Barrier(_) => {}
        }
    }
    for &(_, q) in &measured {
        if outputs.contains(&q) {
            return Err(Error::Unsupported("an output qubit is measured".into()));
        }
    }
    for (_, q, _) in &frames {
        if !outputs.contains(q) {
            return Err(Error::Unsupported("frame correction on a non-output qubit".into()));
        }
    }
    let label_pos: HashMap<&str, usize> = measured
        .iter()
        .enumerate()
        .map(|(i, (l, _))| (l.as_str(), i))
        .collect();
    let mut keep: Vec<usize> = measured.iter().map(|&(_, q)| q).collect();
    keep.extend_from_slice(outputs);
    let reduced = partial_trace_raw(&m, &keep, n);
    let nm = measured.len();
    let k = outputs.len();
    let dk = 1usize << k;
    let bit = |outcome: usize, label: &str| -> bool { outcome >> (nm - 1 - label_pos[label]) & 1 == 1 };
    let parity = |outcome: usize, labels: &[String]| -> bool {
        labels.iter().fold(false, |acc, l| acc ^ bit(outcome, l))
    };
    let mut acc = CMatrix::zeros(dk, dk);
    for outcome in 0..(1usize << nm) {
        if !conditions.iter().all(|(ls, p)| parity(outcome, ls) == *p) {
            continue;
        }
        let base = outcome << k;
        let mut block = reduced.view((base, base), (dk, dk)).into_owned();
        for (letter, q, ls) in &frames {
            if parity(outcome, ls) {
                let j = outputs.iter().position(|o| o == q).expect("checked above");
                let p = PauliString::single(k, j, *letter)?.to_matrix()?;
                block = &p * block * &p;
            }
        }
        acc += block;
    }
    Ok(acc)
}

/// Runs `c` from `|0…0⟩` and evaluates the postselected output pair.
pub fn run_dense(c: &Circuit) -> Result<DenseRun> {
    let n = c.num_qubits();
    let init = DensityMatrix::zero_state(n)?;
    let outputs: Vec<usize> = match c.output() {
        Some((a, b)) => vec![a, b],
        None => vec![],
    };
    let acc = run_operator(c, init.data(), &outputs)?;
    let pass = acc.trace().re;
    if outputs.is_empty() || pass <= 0.0 {
        return Ok(DenseRun {
            pass_prob: pass,
            bell_fidelity: f64::NAN,
            output_state: None,
        });
    }
    let state = DensityMatrix::from_matrix_unchecked(acc / Complex64::new(pass, 0.0))?;
    Ok(DenseRun {
        pass_prob: pass,
        bell_fidelity: state.bell_fidelity(0, 1)?,
        output_state: Some(state),
    })
}

/// The (possibly trace-decreasing) map a circuit induces on its `data`
/// qubits, conditioned on its parity postselection. Every other qubit starts
/// in `|0⟩`; data qubits serve as both input and output.
pub fn extract_channel(c: &Circuit, data: &[usize]) -> Result<KrausChannel> {
    let k = data.len();
    if k == 0 || k > 3 {
        return Err(Error::Validation(format!(
            "channel extraction supports 1 to 3 data qubits, got {k}"
        )));
    }
    let n = c.num_qubits();
    if n > dense::MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!("{n} qubits exceeds the dense oracle cap")));
    }
    for (i, &q) in data.iter().enumerate() {
        if q >= n || data[..i].contains(&q) {
            return Err(Error::Validation(format!("invalid data qubit {q}")));
        }
    }
    let dk = 1usize << k;
    let dim = 1usize << n;
    let spread = |local: usize| -> usize {
        data.iter()
            .enumerate()
            .filter(|&(j, _)| local >> (k - 1 - j) & 1 == 1)
            .fold(0usize, |acc, (_, &q)| acc | 1 << (n - 1 - q))
    };
    let mut choi = CMatrix::zeros(dk * dk, dk * dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut init = CMatrix::zeros(dim, dim);
            init[(spread(i), spread(j))] = Complex64::new(1.0, 0.0);
            let out = run_operator(c, &init, data)?;
            for a in 0..dk {
                for b in 0..dk {
                    choi[(i * dk + a, j * dk + b)] = out[(a, b)];
                }
            }
        }
    }
    KrausChannel::from_choi(k, &choi)
}
