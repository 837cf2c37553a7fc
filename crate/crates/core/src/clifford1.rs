//! Single-qubit Clifford operators modulo global phase, stored by their
//! action on `X` and `Z`.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dense::{gates, CMatrix};
use crate::pauli::{Pauli, PauliString};

/// `C` with `C X C† = x` and `C Z C† = z` (single-qubit, signs `±1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Clifford1 {
    x: PauliString,
    z: PauliString,
}

fn p1(l: Pauli) -> PauliString {
    PauliString::single(1, 0, l).expect("one qubit")
}

impl Default for Clifford1 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Clifford1 {
    pub fn identity() -> Self {
        Self {
            x: p1(Pauli::X),
            z: p1(Pauli::Z),
        }
    }

    pub fn h() -> Self {
        Self {
            x: p1(Pauli::Z),
            z: p1(Pauli::X),
        }
    }

    pub fn s() -> Self {
        Self {
            x: p1(Pauli::Y),
            z: p1(Pauli::Z),
        }
    }

    pub fn sdg() -> Self {
        Self::s().inverse()
    }

    pub fn pauli(l: Pauli) -> Self {
        let flip = |p: Pauli| {
            let s = p1(p);
            if p1(l).commutes_unchecked(&s) {
                s
            } else {
                s.with_phase(2)
            }
        };
        Self {
            x: flip(Pauli::X),
            z: flip(Pauli::Z),
        }
    }

    /// Operator product `word[0] · word[1] · …`.
    pub fn from_word(word: &[Clifford1]) -> Self {
        word.iter().fold(Self::identity(), |acc, c| acc.then_right(c))
    }

    /// `self · other`.
    pub fn then_right(&self, other: &Clifford1) -> Self {
        Self {
            x: self.apply(&other.x),
            z: self.apply(&other.z),
        }
    }

    /// `C p C†` for a single-qubit Pauli with any phase.
    pub fn apply(&self, p: &PauliString) -> PauliString {
        debug_assert_eq!(p.num_qubits(), 1);
        let (x, z) = p.symplectic();
        let mut out = p1(Pauli::I).with_phase(p.phase());
        if x == 1 {
            out = out.mul_unchecked(&self.x);
        }
        if z == 1 {
            out = out.mul_unchecked(&self.z);
        }
        if x == 1 && z == 1 {
            // Y = i X Z
            out = out.with_phase((out.phase() + 1) % 4);
        }
        out
    }

    /// Image of a letter: `(negative, letter)`.
    pub fn image(&self, l: Pauli) -> (bool, Pauli) {
        let q = self.apply(&p1(l));
        debug_assert!(q.is_hermitian());
        (q.phase() == 2, q.letter(0))
    }

    /// `C† P C`, the observable that measuring `P` after `C` amounts to.
    pub fn preimage(&self, l: Pauli) -> (bool, Pauli) {
        self.inverse().image(l)
    }

    pub fn inverse(&self) -> Self {
        *table()
            .keys()
            .find(|c| c.then_right(self) == Self::identity())
            .expect("group is closed")
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// A unitary representative.
    pub fn matrix(&self) -> CMatrix {
        table()[self].clone()
    }

    /// All 24 elements.
    pub fn all() -> Vec<Clifford1> {
        let mut v: Vec<Clifford1> = table().keys().copied().collect();
        v.sort_by_key(|c| c.to_string());
        v
    }

    /// `O = H X` (a square root of `iY` up to phase).
    pub fn o() -> Self {
        Self::from_word(&[Self::h(), Self::pauli(Pauli::X)])
    }

    /// `√(−iX)` up to phase.
    pub fn sqrt_minus_ix() -> Self {
        Self::from_word(&[Self::h(), Self::s(), Self::h()])
    }

    /// `√(iZ)` up to phase.
    pub fn sqrt_iz() -> Self {
        Self::sdg()
    }
}

impl fmt::Display for Clifford1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X->{} Z->{}", self.x, self.z)
    }
}

fn table() -> &'static HashMap<Clifford1, CMatrix> {
    static T: OnceLock<HashMap<Clifford1, CMatrix>> = OnceLock::new();
    T.get_or_init(|| {
        let gens = [(Clifford1::h(), gates::h()), (Clifford1::s(), gates::s())];
        let mut t: HashMap<Clifford1, CMatrix> = HashMap::new();
        let mut frontier = vec![(Clifford1::identity(), CMatrix::identity(2, 2))];
        t.insert(Clifford1::identity(), CMatrix::identity(2, 2));
        while let Some((c, m)) = frontier.pop() {
            for (g, gm) in &gens {
                let nc = g.then_right(&c);
                if !t.contains_key(&nc) {
                    let nm = gm * &m;
                    t.insert(nc, nm.clone());
                    frontier.push((nc, nm));
                }
            }
        }
        assert_eq!(t.len(), 24);
        t
    })
}

/// Whether `a = e^{iφ} b` for some phase.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let inner: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    (inner.norm() - (na * nb).sqrt()).abs() < tol
}
