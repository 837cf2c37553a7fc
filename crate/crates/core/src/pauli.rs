//! Signed Pauli strings in symplectic form.
//!
//! A [`PauliString`] on `n` qubits is stored as two bit masks (`x`, `z`) and a
//! phase exponent `k` so that the operator is `i^k · P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}`,
//! with each tensor factor read off as `(x, z)`: `(0,0)=I`, `(1,0)=X`,
//! `(1,1)=Y`, `(0,1)=Z`. The letter `Y` denotes the Hermitian Pauli matrix,
//! not `XZ`.
//!
//! Qubit 0 is the leftmost tensor factor everywhere in this crate. In a dense
//! basis index of an `n`-qubit register, qubit `q` is the bit at position
//! `n - 1 - q` (qubit 0 is the most significant bit).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register a [`PauliString`] can describe.
pub const MAX_QUBITS: usize = 64;

/// Default qubit cap for [`PauliString::to_matrix`].
pub const DENSE_MATRIX_CAP: usize = 14;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// The 2×2 matrix of this letter.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[inline]
fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Exponent of `i` picked up when multiplying the letter products
/// `(ax, az) · (bx, bz)` qubit by qubit, reduced mod 4.
#[inline]
pub(crate) fn product_phase(ax: u64, az: u64, bx: u64, bz: u64) -> u8 {
    // Cyclic products (XY, YZ, ZX) give +i, anti-cyclic give -i.
    let pos = (ax & !az & bx & bz) | (ax & az & !bx & bz) | (!ax & az & bx & !bz);
    let neg = (ax & !az & !bx & bz) | (ax & az & bx & !bz) | (!ax & az & bx & bz);
    let d = pos.count_ones() as i64 - neg.count_ones() as i64;
    d.rem_euclid(4) as u8
}

/// A signed `n`-qubit Pauli operator `i^phase · P_0 ⊗ … ⊗ P_{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{n} qubits exceeds the Pauli string limit of {MAX_QUBITS}"
            )));
        }
        Ok(Self {
            n,
            x: 0,
            z: 0,
            phase: 0,
        })
    }

    /// Builds a string from raw symplectic masks. Bits above `n` are rejected.
    pub fn from_bits(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        let mut p = Self::identity(n)?;
        if (x | z) & !mask(n) != 0 {
            return Err(Error::Validation(format!(
                "symplectic bits set beyond qubit count {n}"
            )));
        }
        p.x = x;
        p.z = z;
        p.phase = phase % 4;
        Ok(p)
    }

    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Result<Self> {
        let mut p = Self::identity(n)?;
        p.set(qubit, letter)?;
        Ok(p)
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        let mut p = Self::identity(letters.len())?;
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l)?;
        }
        Ok(p)
    }

    /// Places `letters` on the listed qubits of an `n`-qubit identity.
    pub fn on_qubits(n: usize, qubits: &[usize], letters: &[Pauli]) -> Result<Self> {
        if qubits.len() != letters.len() {
            return Err(Error::Dimension {
                expected: qubits.len(),
                got: letters.len(),
            });
        }
        let mut p = Self::identity(n)?;
        for (&q, &l) in qubits.iter().zip(letters) {
            p.set(q, l)?;
        }
        Ok(p)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Phase exponent `k` of the prefactor `i^k`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn set(&mut self, qubit: usize, letter: Pauli) -> Result<()> {
        if qubit >= self.n {
            return Err(Error::Validation(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n
            )));
        }
        let (x, z) = letter.bits();
        let b = 1u64 << qubit;
        self.x = (self.x & !b) | if x { b } else { 0 };
        self.z = (self.z & !b) | if z { b } else { 0 };
        Ok(())
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| (self.x | self.z) >> q & 1 == 1).collect()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Same letters, ignoring the phase.
    pub fn same_letters(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    /// Operator product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let ph = product_phase(self.x, self.z, other.x, other.z);
        Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + ph) % 4,
        }
    }

    /// `true` iff the two operators commute.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_size(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }

    /// Dense `2^n × 2^n` matrix. Fails above `cap` qubits.
    pub fn to_matrix_capped(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        if self.n > cap {
            return Err(Error::Resource(format!(
                "dense matrix of {} qubits exceeds the cap of {cap}",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        // P|b> = i^phase · Π_q (phase of letter q on bit b_q) |b ⊕ xmask>
        let xflip = self.index_mask(self.x);
        let zmask = self.index_mask(self.z);
        let ny = (self.x & self.z).count_ones() as usize;
        for b in 0..dim {
            let out = b ^ xflip;
            // Y = i X Z on each qubit: Y|b> = i (-1)^b |b⊕1>
            let minus = (b & zmask).count_ones() as usize;
            let k = (self.phase as usize + ny + 2 * minus) % 4;
            m[(out, b)] = i_pow(k as u8);
        }
        Ok(m)
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        self.to_matrix_capped(DENSE_MATRIX_CAP)
    }

    /// Converts a qubit mask (bit q = qubit q) into a basis-index mask.
    pub(crate) fn index_mask(&self, qmask: u64) -> usize {
        let mut out = 0usize;
        for q in 0..self.n {
            if qmask >> q & 1 == 1 {
                out |= 1 << (self.n - 1 - q);
            }
        }
        out
    }

    /// Restricts to the listed qubits (in that order); the phase is kept.
    pub fn restrict(&self, qubits: &[usize]) -> Result<Self> {
        let letters: Vec<Pauli> = qubits.iter().map(|&q| self.letter(q)).collect();
        Ok(Self::from_letters(&letters)?.with_phase(self.phase))
    }

    /// Symplectic vector `(x | z)` of length `2n`, used by code analysis.
    pub fn symplectic(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    // Conjugation `P -> G P G†` by Clifford generators, sign tracked.

    pub(crate) fn conj_h(&mut self, q: usize) {
        let xb = self.x >> q & 1;
        let zb = self.z >> q & 1;
        if xb & zb == 1 {
            self.phase = (self.phase + 2) % 4;
        }
        let b = 1u64 << q;
        self.x = (self.x & !b) | (zb << q);
        self.z = (self.z & !b) | (xb << q);
    }

    pub(crate) fn conj_s(&mut self, q: usize) {
        let xb = self.x >> q & 1;
        let zb = self.z >> q & 1;
        if xb & zb == 1 {
            self.phase = (self.phase + 2) % 4;
        }
        self.z ^= xb << q;
    }

    pub(crate) fn conj_sdg(&mut self, q: usize) {
        let xb = self.x >> q & 1;
        let zb = self.z >> q & 1;
        if xb == 1 && zb == 0 {
            self.phase = (self.phase + 2) % 4;
        }
        self.z ^= xb << q;
    }

    pub(crate) fn conj_pauli(&mut self, q: usize, letter: Pauli) {
        let xb = self.x >> q & 1 == 1;
        let zb = self.z >> q & 1 == 1;
        let (px, pz) = letter.bits();
        // Anticommutes iff the symplectic form is odd.
        if (xb && pz) ^ (zb && px) {
            self.phase = (self.phase + 2) % 4;
        }
    }

    pub(crate) fn conj_cnot(&mut self, c: usize, t: usize) {
        let xc = self.x >> c & 1;
        let zc = self.z >> c & 1;
        let xt = self.x >> t & 1;
        let zt = self.z >> t & 1;
        if xc & zt & (xt ^ zc ^ 1) == 1 {
            self.phase = (self.phase + 2) % 4;
        }
        self.x ^= xc << t;
        self.z ^= zt << c;
    }

    pub(crate) fn conj_cz(&mut self, a: usize, b: usize) {
        let xa = self.x >> a & 1;
        let za = self.z >> a & 1;
        let xb = self.x >> b & 1;
        let zb = self.z >> b & 1;
        if xa & xb & (za ^ zb) == 1 {
            self.phase = (self.phase + 2) % 4;
        }
        self.z ^= xa << b;
        self.z ^= xb << a;
    }
}

fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{sign}")?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else {
            (0, s)
        };
        let letters = body
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::Validation(format!("invalid Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(&letters)?.with_phase(phase))
    }
}
