//! Stabilizer tableau (destabilizer/stabilizer form) for Clifford circuits.

use rand::Rng;

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

/// Outcome of a Pauli measurement on a tableau.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    /// `false` for the `+1` eigenvalue (bit 0), `true` for `−1`.
    pub outcome: bool,
    pub deterministic: bool,
}

/// `n` destabilizer rows followed by `n` stabilizer rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    rows: Vec<PauliString>,
}

impl StabilizerTableau {
    /// `|0…0⟩`.
    pub fn new(n: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(2 * n);
        for q in 0..n {
            rows.push(PauliString::single(n, q, Pauli::X)?);
        }
        for q in 0..n {
            rows.push(PauliString::single(n, q, Pauli::Z)?);
        }
        Ok(Self { n, rows })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.rows[self.n..]
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.rows[..self.n]
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::Validation(format!(
                "qubit {q} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        let qs = g.qubits();
        for &q in &qs {
            self.check(q)?;
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::Validation("two-qubit gate on a single qubit".into()));
        }
        self.apply_gate_unchecked(g);
        #[cfg(debug_assertions)]
        debug_assert!(self.check_invariants().is_ok());
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_gate_unchecked(&mut self, g: &Gate) {
        for r in &mut self.rows {
            g.conjugate(r);
        }
    }

    /// Applies a Pauli operator (sign of the operator is irrelevant).
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        self.apply_pauli_unchecked(p);
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_pauli_unchecked(&mut self, p: &PauliString) {
        for r in &mut self.rows {
            if !r.commutes_unchecked(p) {
                *r = r.with_phase(r.phase() + 2);
            }
        }
    }

    /// Returns `Some(±1)` when `±p` is in the stabilizer group, `None` when
    /// the measurement of `p` would be random.
    pub fn expectation(&self, p: &PauliString) -> Result<Option<i8>> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        if self.rows[self.n..].iter().any(|s| !s.commutes_unchecked(p)) {
            return Ok(None);
        }
        let prod = self.stabilizer_product_for(p);
        debug_assert!(prod.same_letters(&p.with_phase(0)));
        // prod = i^a P, p = i^b P  =>  prod = i^(a-b) p
        let rel = (4 + prod.phase() - p.phase()) % 4;
        match rel {
            0 => Ok(Some(1)),
            2 => Ok(Some(-1)),
            _ => Err(Error::Validation(format!("{p} is not Hermitian"))),
        }
    }

    /// Product of the stabilizers whose destabilizer anticommutes with `p`.
    fn stabilizer_product_for(&self, p: &PauliString) -> PauliString {
        let mut acc = PauliString::identity(self.n).expect("size checked at construction");
        for i in 0..self.n {
            if !self.rows[i].commutes_unchecked(p) {
                acc = acc.mul_unchecked(&self.rows[i + self.n]);
            }
        }
        acc
    }

    /// Measures the Hermitian Pauli `p`. A random outcome is drawn from `rng`
    /// and the tableau collapses accordingly.
    pub fn measure_pauli<R: Rng + ?Sized>(&mut self, p: &PauliString, rng: &mut R) -> Result<Measurement> {
        let forced = rng.gen::<bool>();
        self.measure_pauli_with(p, forced).map(|(m, _)| m)
    }

    /// Like [`measure_pauli`](Self::measure_pauli) but with the random outcome
    /// fixed to `choice`. Also returns, for a random measurement, the old
    /// stabilizer that anticommuted with `p`: applying it after the
    /// measurement maps one outcome branch onto the other.
    pub(crate) fn measure_pauli_with(
        &mut self,
        p: &PauliString,
        choice: bool,
    ) -> Result<(Measurement, Option<PauliString>)> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        if !p.is_hermitian() {
            return Err(Error::Validation(format!("{p} is not Hermitian")));
        }
        let n = self.n;
        let pivot = (n..2 * n).find(|&i| !self.rows[i].commutes_unchecked(p));
        match pivot {
            None => {
                let e = self.expectation(p)?.expect("commutes with all stabilizers");
                Ok((
                    Measurement {
                        outcome: e < 0,
                        deterministic: true,
                    },
                    None,
                ))
            }
            Some(piv) => {
                let old = self.rows[piv];
                for i in 0..2 * n {
                    if i != piv && !self.rows[i].commutes_unchecked(p) {
                        self.rows[i] = self.rows[i].mul_unchecked(&old);
                    }
                }
                self.rows[piv - n] = old;
                let sign = if choice { 2 } else { 0 };
                self.rows[piv] = p.with_phase(p.phase() + sign);
                Ok((
                    Measurement {
                        outcome: choice,
                        deterministic: false,
                    },
                    Some(old.with_phase(0)),
                ))
            }
        }
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<Measurement> {
        self.check(q)?;
        let z = PauliString::single(self.n, q, Pauli::Z)?;
        self.measure_pauli(&z, rng)
    }

    pub fn measure_x<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<Measurement> {
        self.check(q)?;
        let x = PauliString::single(self.n, q, Pauli::X)?;
        self.measure_pauli(&x, rng)
    }

    /// Checks the symplectic structure: stabilizers commute pairwise,
    /// destabilizer `i` anticommutes exactly with stabilizer `i`, all rows are
    /// Hermitian.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        for i in 0..2 * n {
            if !self.rows[i].is_hermitian() {
                return Err(Error::Validation(format!("row {i} is not Hermitian")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let s = &self.rows[n + j];
                if i < j && !self.rows[n + i].commutes_unchecked(s) {
                    return Err(Error::Validation(format!("stabilizers {i} and {j} anticommute")));
                }
                let anti = !self.rows[i].commutes_unchecked(s);
                if anti != (i == j) {
                    return Err(Error::Validation(format!(
                        "destabilizer {i} / stabilizer {j} pairing broken"
                    )));
                }
                if i < j && !self.rows[i].commutes_unchecked(&self.rows[j]) {
                    return Err(Error::Validation(format!("destabilizers {i} and {j} anticommute")));
                }
            }
        }
        Ok(())
    }
}
