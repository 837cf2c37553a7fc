//! Depolarizing conventions, Pauli channels and the postselected effective
//! channel of a single X check.
//!
//! Two depolarizing conventions are in use:
//!
//! * [`Convention::Replace`]: weights `1 − 3p/4` on `I` and `p/4` on each of
//!   `X, Y, Z`. Completely depolarizing at `p = 1`.
//! * [`Convention::PauliError`]: weights `1 − p` and `p/3`. Completely
//!   depolarizing at `p = 3/4`.
//!
//! `Replace(p)` and `PauliError(3p/4)` are the same channel. Public APIs default
//! to `Replace`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::KrausChannel;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Replace,
    PauliError,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Replace => "replace",
            Convention::PauliError => "pauli_error",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "replace" => Ok(Convention::Replace),
            "pauli_error" => Ok(Convention::PauliError),
            other => Err(Error::Validation(format!("unknown convention {other:?}"))),
        }
    }
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Validation(format!("{what} = {p} is outside [0, 1]")));
    }
    Ok(())
}

/// A single-qubit depolarizing channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepolarizingSpec {
    pub p: f64,
    pub convention: Convention,
}

impl DepolarizingSpec {
    pub fn replace(p: f64) -> Result<Self> {
        Self::new(p, Convention::Replace)
    }

    pub fn pauli_error(p: f64) -> Result<Self> {
        Self::new(p, Convention::PauliError)
    }

    pub fn new(p: f64, convention: Convention) -> Result<Self> {
        check_prob(p, "depolarizing probability")?;
        Ok(Self { p, convention })
    }

    /// Probability of each non-identity Pauli.
    pub fn pauli_weight(&self) -> f64 {
        match self.convention {
            Convention::Replace => self.p / 4.0,
            Convention::PauliError => self.p / 3.0,
        }
    }

    /// `[w_I, w_X, w_Y, w_Z]`.
    pub fn weights(&self) -> [f64; 4] {
        let w = self.pauli_weight();
        [1.0 - 3.0 * w, w, w, w]
    }

    /// The same channel written in the replacement convention.
    pub fn to_replace(&self) -> Self {
        match self.convention {
            Convention::Replace => *self,
            Convention::PauliError => Self {
                p: 4.0 * self.p / 3.0,
                convention: Convention::Replace,
            },
        }
    }

    /// The same channel written in the Pauli-error convention.
    pub fn to_pauli_error(&self) -> Self {
        match self.convention {
            Convention::PauliError => *self,
            Convention::Replace => Self {
                p: 3.0 * self.p / 4.0,
                convention: Convention::PauliError,
            },
        }
    }
}

/// Kraus operators `√w_P · P` for `P ∈ {I, X, Y, Z}`.
pub fn depolarizing_kraus(spec: &DepolarizingSpec) -> Result<KrausChannel> {
    check_prob(spec.p, "depolarizing probability")?;
    let ops = Pauli::ALL
        .iter()
        .zip(spec.weights())
        .map(|(l, w)| l.matrix() * Complex64::new(w.max(0.0).sqrt(), 0.0))
        .collect();
    KrausChannel::new(1, ops)
}

/// A Pauli channel on `k` qubits: a probability for each Pauli string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannel {
    n_qubits: usize,
    terms: Vec<(PauliString, f64)>,
}

impl PauliChannel {
    /// Builds a channel from `(Pauli, probability)` terms. Phases are dropped,
    /// duplicate strings are merged, zero-probability terms removed. The
    /// probabilities must sum to 1.
    pub fn new(terms: Vec<(PauliString, f64)>) -> Result<Self> {
        let n_qubits = match terms.first() {
            Some((p, _)) => p.num_qubits(),
            None => return Err(Error::Validation("Pauli channel has no terms".into())),
        };
        let mut merged: Vec<(PauliString, f64)> = Vec::new();
        let mut total = 0.0;
        for (p, w) in terms {
            if p.num_qubits() != n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    got: p.num_qubits(),
                });
            }
            if !(w >= 0.0) || w > 1.0 + 1e-12 {
                return Err(Error::Validation(format!("Pauli term probability {w} invalid")));
            }
            total += w;
            let p = p.with_phase(0);
            if let Some(slot) = merged.iter_mut().find(|(q, _)| *q == p) {
                slot.1 += w;
            } else {
                merged.push((p, w));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "Pauli channel probabilities sum to {total}, not 1"
            )));
        }
        merged.retain(|(_, w)| *w > 0.0);
        Ok(Self {
            n_qubits,
            terms: merged,
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(vec![(PauliString::identity(n_qubits)?, 1.0)])
    }

    pub fn depolarizing(spec: &DepolarizingSpec) -> Result<Self> {
        let terms = Pauli::ALL
            .iter()
            .zip(spec.weights())
            .map(|(&l, w)| Ok((PauliString::from_letters(&[l])?, w.max(0.0))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    /// Single-qubit channel with explicit `[w_I, w_X, w_Y, w_Z]`.
    pub fn single_qubit(weights: [f64; 4]) -> Result<Self> {
        let terms = Pauli::ALL
            .iter()
            .zip(weights)
            .map(|(&l, w)| Ok((PauliString::from_letters(&[l])?, w)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    /// Applies `letter` with probability `p`.
    pub fn flip(letter: Pauli, p: f64) -> Result<Self> {
        check_prob(p, "flip probability")?;
        Self::new(vec![
            (PauliString::identity(1)?, 1.0 - p),
            (PauliString::from_letters(&[letter])?, p),
        ])
    }

    /// Deterministic Pauli error (probability 1).
    pub fn fixed(p: PauliString) -> Result<Self> {
        Self::new(vec![(p, 1.0)])
    }

    /// Werner twirl on one half of a Bell pair: identity with weight `f` and
    /// each of `X, Y, Z` with `(1 − f)/3`. Applied to `|Φ+⟩`, this yields
    /// the Werner state of fidelity `f`.
    pub fn werner(f: f64) -> Result<Self> {
        check_prob(f, "Werner fidelity")?;
        let w = (1.0 - f) / 3.0;
        Self::single_qubit([f, w, w, w])
    }

    pub fn num_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    pub fn is_identity(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_identity_up_to_phase()
    }

    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let ops = self
            .terms
            .iter()
            .map(|(p, w)| Ok(p.to_matrix()? * Complex64::new(w.sqrt(), 0.0)))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(self.n_qubits, ops)
    }
}

/// A trace-nonincreasing channel together with its success probability.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub kraus: KrausChannel,
    /// Postselection rate `c1`.
    pub norm: f64,
}

impl EffectiveChannel {
    /// The normalized (trace-preserving) version.
    pub fn normalized(&self) -> Result<KrausChannel> {
        let s = Complex64::new(1.0 / self.norm.sqrt(), 0.0);
        KrausChannel::new(
            self.kraus.n_targets(),
            self.kraus.operators().iter().map(|k| k * s).collect(),
        )
    }
}

/// Effective postselected channel on one Bell half protected by an X check,
/// with Pauli-error-convention depolarizing probability `p1` on both the data
/// qubit and its ancilla.
///
/// The Kraus set is `{a·I, b·X, d·Y, d·Z}` with `a = √((1−p1)² + p1²/9)`,
/// `b = √((1−p1)·2p1/3)` and `d = √2·p1/3`. It is not normalized: `Σ K†K =
/// c1·I`.
pub fn effective_pcs_x_channel(p1: f64) -> Result<EffectiveChannel> {
    check_prob(p1, "p1")?;
    let a = ((1.0 - p1).powi(2) + p1 * p1 / 9.0).sqrt();
    let b = ((1.0 - p1) * 2.0 * p1 / 3.0).sqrt();
    let d = 2f64.sqrt() * p1 / 3.0;
    let ops: Vec<DMatrix<Complex64>> = [(Pauli::I, a), (Pauli::X, b), (Pauli::Y, d), (Pauli::Z, d)]
        .iter()
        .map(|&(l, w)| l.matrix() * Complex64::new(w, 0.0))
        .collect();
    let norm = a * a + b * b + 2.0 * d * d;
    Ok(EffectiveChannel {
        kraus: KrausChannel::trace_nonincreasing(1, ops)?,
        norm,
    })
}

/// Bell fidelity after replacement-convention depolarizing `p` on both qubits.
pub fn fidelity_from_p(p: f64) -> Result<f64> {
    check_prob(p, "p")?;
    Ok(1.0 + 0.75 * (p - 2.0) * p)
}

/// Inverse of [`fidelity_from_p`] on `F ∈ [0.25, 1]`.
pub fn p_from_fidelity(f: f64) -> Result<f64> {
    if !(0.25..=1.0).contains(&f) {
        return Err(Error::OutOfDomain(format!(
            "fidelity {f} outside [0.25, 1]"
        )));
    }
    Ok((3.0 - 3f64.sqrt() * (4.0 * f - 1.0).sqrt()) / 3.0)
}
