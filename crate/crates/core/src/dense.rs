//! Dense density-matrix oracle.
//!
//! Everything here is deliberately naive: full `2^n × 2^n` complex matrices
//! and explicit index loops. It is the ground truth the stabilizer engine
//! and the closed-form models are checked against, so it must stay simple.
//!
//! Qubit ordering follows [`crate::pauli`]: qubit 0 is the most significant
//! bit of a basis index.
//!
//! Choi convention: `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input factor first. For a
//! Kraus operator `K` this is `vec(K) vec(K)†` with `vec(K)[i·d + a] = K[a, i]`
//! (columns of `K` stacked).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Largest register accepted as a density-matrix subject.
pub const MAX_DENSE_QUBITS: usize = 8;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-12;
const COMPLETENESS_TOL: f64 = 1e-12;
// Eigenvalues this small are rounding noise; their square roots would
// otherwise leak ~1e-8 into fidelities of low-rank states.
const EIG_FLOOR: f64 = 1e-13;

/// Probability below which a projection is treated as an impossible branch.
pub const IMPOSSIBLE_BRANCH: f64 = 1e-14;

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the dense oracle cap of {MAX_DENSE_QUBITS}"
        )));
    }
    Ok(())
}

fn check_targets(n: usize, targets: &[usize]) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(Error::Validation(format!(
                "target qubit {t} out of range for {n} qubits"
            )));
        }
        if targets[..i].contains(&t) {
            return Err(Error::Validation(format!("repeated target qubit {t}")));
        }
    }
    Ok(())
}

/// Left-multiplies `m` (a `2^n`-row matrix) by the operator `op` acting on
/// `targets`, in place.
pub(crate) fn apply_left(m: &mut CMatrix, op: &CMatrix, targets: &[usize], n: usize) {
    let k = targets.len();
    let dl = 1usize << k;
    let bits: Vec<usize> = targets.iter().map(|&t| n - 1 - t).collect();
    let tmask: usize = bits.iter().map(|b| 1usize << b).sum();
    let spread = |local: usize| -> usize {
        let mut out = 0;
        for (j, &b) in bits.iter().enumerate() {
            if local >> (k - 1 - j) & 1 == 1 {
                out |= 1 << b;
            }
        }
        out
    };
    let offsets: Vec<usize> = (0..dl).map(spread).collect();
    let dim = 1usize << n;
    let mut buf = vec![Complex64::new(0.0, 0.0); dl];
    for col in 0..m.ncols() {
        for base in 0..dim {
            if base & tmask != 0 {
                continue;
            }
            for (l, &o) in offsets.iter().enumerate() {
                buf[l] = m[(base | o, col)];
            }
            for (a, &oa) in offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, v) in buf.iter().enumerate() {
                    acc += op[(a, b)] * v;
                }
                m[(base | oa, col)] = acc;
            }
        }
    }
}

/// `op · m · op†` with `op` acting on `targets`.
pub(crate) fn conjugate(m: &CMatrix, op: &CMatrix, targets: &[usize], n: usize) -> CMatrix {
    let mut left = m.clone();
    apply_left(&mut left, op, targets, n);
    let mut t = left.adjoint();
    apply_left(&mut t, op, targets, n);
    t.adjoint()
}

/// Applies `Σ_K K m K†` with the operators acting on `targets`.
pub(crate) fn apply_kraus_raw(m: &CMatrix, ops: &[CMatrix], targets: &[usize], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for k in ops {
        out += conjugate(m, k, targets, n);
    }
    out
}

/// Partial trace of a raw operator, keeping `keep` in the given order.
pub(crate) fn partial_trace_raw(m: &CMatrix, keep: &[usize], n: usize) -> CMatrix {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let kk = keep.len();
    let dk = 1usize << kk;
    let index = |kept: usize, rest: usize| -> usize {
        let mut i = 0usize;
        for (j, &q) in keep.iter().enumerate() {
            if kept >> (kk - 1 - j) & 1 == 1 {
                i |= 1 << (n - 1 - q);
            }
        }
        for (j, &q) in traced.iter().enumerate() {
            if rest >> (traced.len() - 1 - j) & 1 == 1 {
                i |= 1 << (n - 1 - q);
            }
        }
        i
    };
    let mut out = CMatrix::zeros(dk, dk);
    for r in 0..(1usize << traced.len()) {
        for a in 0..dk {
            let ia = index(a, r);
            for b in 0..dk {
                out[(a, b)] += m[(ia, index(b, r))];
            }
        }
    }
    out
}

/// A density matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: CMatrix,
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`.
    pub fn zero_state(n: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        let mut data = CMatrix::zeros(dim, dim);
        data[(0, 0)] = c(1.0);
        Ok(Self { n, data })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            data: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        let n = qubits_of(psi.len())?;
        check_size(n)?;
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("state vector norm {norm} is not 1")));
        }
        Ok(Self {
            n,
            data: psi * psi.adjoint(),
        })
    }

    /// Wraps and validates a matrix (Hermitian, unit trace, PSD).
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(data)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension {
                expected: data.nrows(),
                got: data.ncols(),
            });
        }
        let n = qubits_of(data.nrows())?;
        check_size(n)?;
        Ok(Self { n, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.data - self.data.adjoint()).norm();
        if herm > HERMITIAN_TOL * (1.0 + self.data.norm()) {
            return Err(Error::Validation(format!("matrix not Hermitian (defect {herm:e})")));
        }
        let tr = self.data.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Validation(format!("trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&self.data);
        if min < -PSD_TOL {
            return Err(Error::Validation(format!(
                "matrix not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    /// `U ρ U†` with `u` acting on `targets` (first target = most significant
    /// local bit).
    pub fn apply_unitary(&self, u: &CMatrix, targets: &[usize]) -> Result<Self> {
        check_targets(self.n, targets)?;
        check_op_dim(u, targets.len())?;
        let d = u.nrows();
        let defect = (u.adjoint() * u - CMatrix::identity(d, d)).norm();
        if defect > UNITARY_TOL * d as f64 {
            return Err(Error::Validation(format!("operator is not unitary (defect {defect:e})")));
        }
        Ok(Self {
            n: self.n,
            data: conjugate(&self.data, u, targets, self.n),
        })
    }

    pub fn apply_channel(&self, ch: &KrausChannel, targets: &[usize]) -> Result<Self> {
        check_targets(self.n, targets)?;
        if ch.n_targets != targets.len() {
            return Err(Error::Dimension {
                expected: ch.n_targets,
                got: targets.len(),
            });
        }
        ch.check_complete()?;
        Ok(Self {
            n: self.n,
            data: apply_kraus_raw(&self.data, &ch.operators, targets, self.n),
        })
    }

    /// Applies a Pauli string on all qubits.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        let m = p.to_matrix()?;
        Ok(Self {
            n: self.n,
            data: &m * &self.data * m.adjoint(),
        })
    }

    /// Projects with `projector` on `targets`. Returns the branch probability
    /// and the normalized post-projection state. A branch with probability
    /// below [`IMPOSSIBLE_BRANCH`] yields [`Error::ImpossibleBranch`].
    pub fn postselect(&self, projector: &CMatrix, targets: &[usize]) -> Result<(f64, Self)> {
        check_targets(self.n, targets)?;
        check_op_dim(projector, targets.len())?;
        let idem = (projector * projector - projector).norm();
        let herm = (projector - projector.adjoint()).norm();
        if idem > 1e-10 || herm > 1e-10 {
            return Err(Error::Validation("operator is not a projector".into()));
        }
        let projected = conjugate(&self.data, projector, targets, self.n);
        let prob = projected.trace().re;
        if prob < IMPOSSIBLE_BRANCH {
            return Err(Error::ImpossibleBranch(prob));
        }
        Ok((
            prob,
            Self {
                n: self.n,
                data: projected / c(prob),
            },
        ))
    }

    /// Reduced state on `keep`, in the listed order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Validation("keep-set must be nonempty".into()));
        }
        check_targets(self.n, keep)?;
        Ok(Self {
            n: keep.len(),
            data: partial_trace_raw(&self.data, keep, self.n),
        })
    }

    /// `tr(ρ P)` for a Pauli string on all qubits.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        Ok((&self.data * p.to_matrix()?).trace().re)
    }

    /// Fidelity with `|Φ+⟩` of the qubit pair `(q0, q1)`, other qubits traced
    /// out, computed as `⟨Φ+|ρ|Φ+⟩`.
    pub fn bell_fidelity(&self, q0: usize, q1: usize) -> Result<f64> {
        let r = self.partial_trace(&[q0, q1])?;
        let d = &r.data;
        // |Φ+⟩ = (|00⟩ + |11⟩)/√2
        let v = d[(0, 0)] + d[(0, 3)] + d[(3, 0)] + d[(3, 3)];
        Ok(0.5 * v.re)
    }

    /// Same quantity via `¼(⟨II⟩ + ⟨XX⟩ − ⟨YY⟩ + ⟨ZZ⟩)`.
    pub fn bell_fidelity_observables(&self, q0: usize, q1: usize) -> Result<f64> {
        let r = self.partial_trace(&[q0, q1])?;
        let e = |s: &str| -> Result<f64> { r.expectation(&s.parse()?) };
        Ok(0.25 * (r.trace() + e("XX")? - e("YY")? + e("ZZ")?))
    }
}

fn qubits_of(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Validation(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_op_dim(op: &CMatrix, k: usize) -> Result<()> {
    let d = 1usize << k;
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: op.nrows(),
        });
    }
    Ok(())
}

fn hermitian_eigen(m: &CMatrix) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    let h = (m + m.adjoint()) * c(0.5);
    SymmetricEigen::new(h)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Square root of a PSD matrix; eigenvalues down to `-PSD_TOL` are clamped.
fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(m);
    let mut vals = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        if l < -PSD_TOL {
            return Err(Error::Validation(format!(
                "matrix not positive semidefinite (eigenvalue {l:e})"
            )));
        }
        vals.push(c(if l < EIG_FLOOR { 0.0 } else { l.sqrt() }));
    }
    let d = CMatrix::from_diagonal(&DVector::from_vec(vals));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Uhlmann fidelity `(tr √(√ρ1 ρ2 √ρ1))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::Dimension {
            expected: a.n,
            got: b.n,
        });
    }
    let s = psd_sqrt(&a.data)?;
    psd_sqrt(&b.data)?;
    let m = &s * &b.data * &s;
    let eig = hermitian_eigen(&m);
    let mut tr = 0.0;
    for &l in eig.eigenvalues.iter() {
        if l < -PSD_TOL {
            return Err(Error::Validation(format!("negative eigenvalue {l:e}")));
        }
        if l >= EIG_FLOOR {
            tr += l.sqrt();
        }
    }
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// A list of Kraus operators on `n_targets` qubits.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    n_targets: usize,
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    /// A trace-preserving channel; completeness is checked.
    pub fn new(n_targets: usize, operators: Vec<CMatrix>) -> Result<Self> {
        let ch = Self::trace_nonincreasing(n_targets, operators)?;
        ch.check_complete()?;
        Ok(ch)
    }

    /// A channel that may lose trace (e.g. conditioned on postselection).
    pub fn trace_nonincreasing(n_targets: usize, operators: Vec<CMatrix>) -> Result<Self> {
        for op in &operators {
            check_op_dim(op, n_targets)?;
        }
        Ok(Self { n_targets, operators })
    }

    pub fn identity(n_targets: usize) -> Self {
        let d = 1usize << n_targets;
        Self {
            n_targets,
            operators: vec![CMatrix::identity(d, d)],
        }
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> CMatrix {
        let d = 1usize << self.n_targets;
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
    }

    pub fn check_complete(&self) -> Result<()> {
        let d = 1usize << self.n_targets;
        let defect = (self.completeness() - CMatrix::identity(d, d)).norm();
        if defect > COMPLETENESS_TOL * d as f64 {
            return Err(Error::Validation(format!(
                "Kraus operators are not complete (defect {defect:e})"
            )));
        }
        Ok(())
    }

    /// Choi matrix, input factor first.
    pub fn choi(&self) -> CMatrix {
        let d = 1usize << self.n_targets;
        let mut j = CMatrix::zeros(d * d, d * d);
        for k in &self.operators {
            let v = DVector::from_iterator(d * d, (0..d).flat_map(|i| (0..d).map(move |a| k[(a, i)])));
            j += &v * v.adjoint();
        }
        j
    }

    /// Kraus form of a Choi matrix from its eigenvectors. Eigenvalues below
    /// `1e-13` are dropped.
    pub fn from_choi(n_targets: usize, choi: &CMatrix) -> Result<Self> {
        let d = 1usize << n_targets;
        check_op_dim(choi, 2 * n_targets)?;
        let eig = hermitian_eigen(choi);
        let mut ops = Vec::new();
        for (idx, &l) in eig.eigenvalues.iter().enumerate() {
            if l < -PSD_TOL {
                return Err(Error::Validation(format!(
                    "Choi matrix not positive semidefinite (eigenvalue {l:e})"
                )));
            }
            if l <= 1e-13 {
                continue;
            }
            let v = eig.eigenvectors.column(idx);
            let s = l.sqrt();
            let k = CMatrix::from_fn(d, d, |a, i| v[i * d + a] * s);
            ops.push(k);
        }
        Self::trace_nonincreasing(n_targets, ops)
    }

    /// Applies the channel to a matrix on exactly `n_targets` qubits.
    pub fn apply_to(&self, m: &CMatrix) -> CMatrix {
        let targets: Vec<usize> = (0..self.n_targets).collect();
        apply_kraus_raw(m, &self.operators, &targets, self.n_targets)
    }
}

/// Frobenius distance between Choi matrices.
pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    if a.n_targets != b.n_targets {
        return Err(Error::Dimension {
            expected: a.n_targets,
            got: b.n_targets,
        });
    }
    Ok((a.choi() - b.choi()).norm())
}

/// Common single-qubit matrices.
pub mod gates {
    use super::*;

    pub fn h() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)])
    }

    pub fn s() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), Complex64::new(0.0, 1.0)])
    }

    pub fn sdg() -> CMatrix {
        s().adjoint()
    }

    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0);
        m[(1, 1)] = c(1.0);
        m[(2, 3)] = c(1.0);
        m[(3, 2)] = c(1.0);
        m
    }

    pub fn cz() -> CMatrix {
        let mut m = CMatrix::identity(4, 4);
        m[(3, 3)] = c(-1.0);
        m
    }

    /// `|b⟩⟨b|` on one qubit.
    pub fn proj(b: u8) -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(b as usize, b as usize)] = c(1.0);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;

    fn bell() -> DensityMatrix {
        let r = DensityMatrix::zero_state(2).unwrap();
        let r = r.apply_unitary(&gates::h(), &[0]).unwrap();
        r.apply_unitary(&gates::cnot(), &[0, 1]).unwrap()
    }

    fn pauli_channel(weights: [f64; 4]) -> KrausChannel {
        let ops = Pauli::ALL
            .iter()
            .zip(weights)
            .map(|(l, w)| l.matrix() * c(w.sqrt()))
            .collect();
        KrausChannel::new(1, ops).unwrap()
    }

    #[test]
    fn bell_preparation() {
        let b = bell();
        assert!((b.bell_fidelity(0, 1).unwrap() - 1.0).abs() < 1e-12);
        let x = b.apply_unitary(&Pauli::X.matrix(), &[0]).unwrap();
        assert!(x.bell_fidelity(0, 1).unwrap().abs() < 1e-12);
        let same = b.apply_unitary(&CMatrix::identity(2, 2), &[1]).unwrap();
        assert_eq!(same, b);
    }

    #[test]
    fn non_unitary_rejected() {
        let b = bell();
        let m = CMatrix::from_element(2, 2, c(1.0));
        assert!(matches!(b.apply_unitary(&m, &[0]), Err(Error::Validation(_))));
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let ch = KrausChannel::trace_nonincreasing(1, vec![gates::proj(0)]).unwrap();
        assert!(bell().apply_channel(&ch, &[0]).is_err());
        assert!(KrausChannel::new(1, vec![gates::proj(0)]).is_err());
    }

    #[test]
    fn full_depolarization_of_one_half() {
        let ch = pauli_channel([0.25; 4]);
        let r = bell().apply_channel(&ch, &[0]).unwrap();
        let red = r.partial_trace(&[0]).unwrap();
        let want = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((red.data() - want.data()).norm() < 1e-12);
    }

    #[test]
    fn postselection_probabilities() {
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let (p, post) = mixed.postselect(&gates::proj(0), &[0]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((post.trace() - 1.0).abs() < 1e-12);
        let zero = DensityMatrix::zero_state(1).unwrap();
        assert!(matches!(
            zero.postselect(&gates::proj(1), &[0]),
            Err(Error::ImpossibleBranch(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let z0 = DensityMatrix::zero_state(1).unwrap();
        let z1 = z0.apply_unitary(&Pauli::X.matrix(), &[0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((fidelity(&z0, &z0).unwrap() - 1.0).abs() < 1e-10);
        assert!(fidelity(&z0, &z1).unwrap().abs() < 1e-10);
        assert!((fidelity(&z0, &mixed).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bell_fidelity_of_mixed_pair() {
        let m = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((m.bell_fidelity(0, 1).unwrap() - 0.25).abs() < 1e-12);
        assert!((m.bell_fidelity_observables(0, 1).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_cases() {
        let b = bell();
        let half = b.partial_trace(&[1]).unwrap();
        assert!((half.data() - DensityMatrix::maximally_mixed(1).unwrap().data()).norm() < 1e-12);
        assert_eq!(b.partial_trace(&[0, 1]).unwrap(), b);
        // |0⟩ ⊗ |Φ+⟩ factorizes
        let three = DensityMatrix::zero_state(3).unwrap();
        let three = three.apply_unitary(&gates::h(), &[1]).unwrap();
        let three = three.apply_unitary(&gates::cnot(), &[1, 2]).unwrap();
        assert_eq!(three.partial_trace(&[1, 2]).unwrap().data(), b.data());
        assert!(b.partial_trace(&[]).is_err());
    }

    #[test]
    fn identity_channel_choi() {
        let id = KrausChannel::identity(1);
        let j = id.choi();
        // |Φ⟩⟨Φ| unnormalized with |Φ⟩ = |00⟩ + |11⟩
        for (a, b) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_eq!(j[(a, b)], c(1.0));
        }
        assert!((j.trace().re - 2.0).abs() < 1e-12);
        let back = KrausChannel::from_choi(1, &j).unwrap();
        assert!(choi_distance(&back, &id).unwrap() < 1e-12);
    }

    #[test]
    fn kraus_round_trip_through_choi() {
        let ch = pauli_channel([0.7, 0.1, 0.15, 0.05]);
        let back = KrausChannel::from_choi(1, &ch.choi()).unwrap();
        assert!(choi_distance(&ch, &back).unwrap() < 1e-12);
        back.check_complete().unwrap();
    }

    #[test]
    fn too_large() {
        assert!(DensityMatrix::zero_state(9).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_state(n: usize) -> impl Strategy<Value = DensityMatrix> {
            let dim = 1usize << n;
            (
                proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim),
                Just(dim),
            )
                .prop_map(|(v, dim)| {
                    let a = CMatrix::from_fn(dim, dim, |i, j| {
                        Complex64::new(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1])
                    });
                    let m = &a * a.adjoint();
                    let t = m.trace();
                    DensityMatrix::from_matrix(m / t).unwrap()
                })
        }

        fn random_pure(n: usize) -> impl Strategy<Value = DensityMatrix> {
            let dim = 1usize << n;
            proptest::collection::vec(-1.0f64..1.0, 2 * dim).prop_map(move |v| {
                let psi = DVector::from_fn(dim, |i, _| Complex64::new(v[2 * i], v[2 * i + 1]));
                let psi = &psi / c(psi.norm());
                DensityMatrix::from_pure(&psi).unwrap()
            })
        }

        fn random_channel() -> impl Strategy<Value = KrausChannel> {
            proptest::collection::vec(0.0f64..1.0, 4).prop_map(|w| {
                let s: f64 = w.iter().sum::<f64>() + 1e-9;
                pauli_channel([w[0] / s, w[1] / s, w[2] / s, w[3] / s + 1e-9 / s])
            })
        }

        proptest! {
            #[test]
            fn channels_preserve_trace(rho in random_state(2), ch in random_channel(), q in 0usize..2) {
                let out = rho.apply_channel(&ch, &[q]).unwrap();
                prop_assert!((out.trace() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn bell_fidelity_forms_agree(rho in random_state(2)) {
                let a = rho.bell_fidelity(0, 1).unwrap();
                let b = rho.bell_fidelity_observables(0, 1).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }

            #[test]
            fn postselected_state_has_unit_trace(rho in random_state(2), b in 0u8..2) {
                if let Ok((p, st)) = rho.postselect(&gates::proj(b), &[1]) {
                    prop_assert!(p > IMPOSSIBLE_BRANCH);
                    prop_assert!((st.trace() - 1.0).abs() < 1e-12);
                }
            }

            #[test]
            fn fidelity_is_symmetric(a in random_state(2), b in random_state(2)) {
                let f1 = fidelity(&a, &b).unwrap();
                let f2 = fidelity(&b, &a).unwrap();
                prop_assert!((f1 - f2).abs() < 1e-10);
            }

            #[test]
            fn fidelity_of_pure_states_is_overlap(a in random_pure(2), b in random_pure(2)) {
                let f = fidelity(&a, &b).unwrap();
                let overlap = (a.data() * b.data()).trace().re;
                prop_assert!((f - overlap).abs() < 1e-10);
            }
        }
    }
}
