//! Stabilizer codes defined by check encodings: extraction, distance,
//! low-weight generating sets, CSS equivalence and syndrome tables.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::circuit::{Circuit, Op};
use crate::engine::flipped_bits;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::protocols::{build_half_encoding, build_half_pcs};

/// A stabilizer code with one logical qubit per data input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeSpec {
    pub n: usize,
    pub k: usize,
    #[serde(serialize_with = "ser_paulis")]
    pub generators: Vec<PauliString>,
    #[serde(serialize_with = "ser_pauli")]
    pub logical_x: PauliString,
    #[serde(serialize_with = "ser_pauli")]
    pub logical_z: PauliString,
    pub names: Vec<String>,
}

fn ser_pauli<S: serde::Serializer>(p: &PauliString, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

fn ser_paulis<S: serde::Serializer>(ps: &[PauliString], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ps.iter().map(|p| p.to_string()))
}

fn sym(p: &PauliString) -> u128 {
    (p.x_bits() as u128) << 64 | p.z_bits() as u128
}

/// Row-reduced basis over GF(2), keyed by pivot bit.
#[derive(Clone, Default)]
struct Gf2Basis {
    rows: Vec<(u128, u32)>,
}

impl Gf2Basis {
    fn reduce(&self, mut v: u128) -> u128 {
        for &(r, piv) in &self.rows {
            if v >> piv & 1 == 1 {
                v ^= r;
            }
        }
        v
    }

    /// Adds `v` if independent; returns whether it was.
    fn insert(&mut self, v: u128) -> bool {
        let v = self.reduce(v);
        if v == 0 {
            return false;
        }
        let piv = 127 - v.leading_zeros();
        for (r, _) in self.rows.iter_mut() {
            if *r >> piv & 1 == 1 {
                *r ^= v;
            }
        }
        self.rows.push((v, piv));
        true
    }

    fn contains(&self, v: u128) -> bool {
        self.reduce(v) == 0
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn rank_of(vs: impl IntoIterator<Item = u128>) -> usize {
    let mut b = Gf2Basis::default();
    for v in vs {
        b.insert(v);
    }
    b.rank()
}

impl CodeSpec {
    /// Checks commutation, independence and logical relations.
    pub fn validate(&self) -> Result<()> {
        let g = &self.generators;
        for (i, a) in g.iter().enumerate() {
            if a.num_qubits() != self.n {
                return Err(Error::Dimension {
                    expected: self.n,
                    got: a.num_qubits(),
                });
            }
            for b in &g[i + 1..] {
                if !a.commutes(b)? {
                    return Err(Error::Validation(format!("generators {a} and {b} anticommute")));
                }
            }
            if !a.commutes(&self.logical_x)? || !a.commutes(&self.logical_z)? {
                return Err(Error::Validation(format!("logical anticommutes with {a}")));
            }
        }
        if rank_of(g.iter().map(sym)) != g.len() {
            return Err(Error::Validation("generators are dependent".into()));
        }
        if self.n - g.len() != self.k {
            return Err(Error::Validation("n − rank ≠ k".into()));
        }
        if self.logical_x.commutes(&self.logical_z)? {
            return Err(Error::Validation("logical X and Z commute".into()));
        }
        Ok(())
    }

    /// Whether `p` (up to sign) lies in the stabilizer group.
    pub fn in_group(&self, p: &PauliString) -> bool {
        let mut b = Gf2Basis::default();
        for g in &self.generators {
            b.insert(sym(g));
        }
        b.contains(sym(p))
    }

    /// Syndrome of `e`: one bit per generator, set if they anticommute.
    pub fn syndrome(&self, e: &PauliString) -> Result<Vec<bool>> {
        self.generators.iter().map(|g| Ok(!g.commutes(e)?)).collect()
    }

    /// All `2^m` group elements (with signs).
    pub fn group_elements(&self) -> Result<Vec<PauliString>> {
        let m = self.generators.len();
        if m > 20 {
            return Err(Error::Resource(format!("group of 2^{m} elements")));
        }
        let mut out = vec![PauliString::identity(self.n)?];
        for g in &self.generators {
            let more: Vec<PauliString> = out.iter().map(|e| e.multiply(g)).collect::<Result<_>>()?;
            out.extend(more);
        }
        Ok(out)
    }

    pub fn qubit_label(&self, q: usize) -> &str {
        &self.names[q]
    }

    /// Pauli in conventional subscript notation, e.g. `Z_rho Z_a1 X_a2`.
    pub fn describe(&self, p: &PauliString) -> String {
        let sign = match p.phase() {
            0 => "",
            2 => "-",
            1 => "i",
            _ => "-i",
        };
        let body: Vec<String> = p
            .support()
            .into_iter()
            .map(|q| format!("{}_{}", p.letter(q).as_char(), self.names[q]))
            .collect();
        if body.is_empty() {
            format!("{sign}I")
        } else {
            format!("{sign}{}", body.join(" "))
        }
    }
}

/// Extracts the code of a Clifford encoding. `data` is the logical input;
/// every other qubit starts in `|0⟩`. Generators are the images of `Z` on
/// each ancilla (in register order), logicals the images of `X` and `Z` on
/// the data qubit.
pub fn extract_code(encoding: &Circuit, data: usize) -> Result<CodeSpec> {
    let n = encoding.num_qubits();
    if data >= n {
        return Err(Error::Validation(format!("data qubit {data} out of range")));
    }
    for op in encoding.ops() {
        match op {
            Op::Gate(_) | Op::Barrier(_) => {}
            _ => return Err(Error::Unsupported("encoding must be a unitary Clifford circuit".into())),
        }
    }
    let image = |mut p: PauliString| {
        for g in encoding.gates() {
            g.conjugate(&mut p);
        }
        p
    };
    let generators = (0..n)
        .filter(|&q| q != data)
        .map(|q| Ok(image(PauliString::single(n, q, Pauli::Z)?)))
        .collect::<Result<Vec<_>>>()?;
    let code = CodeSpec {
        n,
        k: 1,
        generators,
        logical_x: image(PauliString::single(n, data, Pauli::X)?),
        logical_z: image(PauliString::single(n, data, Pauli::Z)?),
        names: encoding.names().to_vec(),
    };
    code.validate()?;
    Ok(code)
}

/// Code of the recursive X&Z check encoding at level `r` (`n = 2r + 3`).
pub fn recursive_code(r: usize) -> Result<CodeSpec> {
    extract_code(&build_half_encoding(r)?, 0)
}

/// Result of a bounded distance search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Distance {
    Exact {
        d: usize,
        #[serde(serialize_with = "ser_pauli")]
        witness: PauliString,
    },
    AtLeast(usize),
}

impl Distance {
    pub fn exact(&self) -> Option<usize> {
        match self {
            Distance::Exact { d, .. } => Some(*d),
            Distance::AtLeast(_) => None,
        }
    }
}

const ENUMERATION_BUDGET: u128 = 50_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` for every Pauli of exactly weight `w` on `n` qubits (sign +).
/// Stops early when `f` returns `false`.
fn for_each_of_weight(n: usize, w: usize, f: &mut impl FnMut(&PauliString) -> bool) -> Result<bool> {
    fn rec(
        n: usize,
        start: usize,
        left: usize,
        cur: &mut PauliString,
        f: &mut impl FnMut(&PauliString) -> bool,
    ) -> Result<bool> {
        if left == 0 {
            return Ok(f(cur));
        }
        for q in start..=n - left {
            for l in [Pauli::X, Pauli::Y, Pauli::Z] {
                cur.set(q, l)?;
                if !rec(n, q + 1, left - 1, cur, f)? {
                    cur.set(q, Pauli::I)?;
                    return Ok(false);
                }
            }
            cur.set(q, Pauli::I)?;
        }
        Ok(true)
    }
    let mut cur = PauliString::identity(n)?;
    if w > n {
        return Ok(true);
    }
    rec(n, 0, w, &mut cur, f)
}

/// Smallest weight of a logical operator (commutes with every generator,
/// not in the group), searched exhaustively up to weight `cap`.
pub fn distance(code: &CodeSpec, cap: usize) -> Result<Distance> {
    if cap == 0 {
        return Err(Error::Validation("cap must be at least 1".into()));
    }
    let budget: u128 = (1..=cap.min(code.n))
        .map(|w| binomial(code.n, w) * 3u128.pow(w as u32))
        .sum();
    if budget > ENUMERATION_BUDGET {
        return Err(Error::Resource(format!(
            "{budget} Paulis to enumerate exceeds the budget"
        )));
    }
    let mut basis = Gf2Basis::default();
    for g in &code.generators {
        basis.insert(sym(g));
    }
    for w in 1..=cap.min(code.n) {
        let mut found = None;
        for_each_of_weight(code.n, w, &mut |p| {
            let logical = code.generators.iter().all(|g| g.commutes_unchecked(p)) && !basis.contains(sym(p));
            if logical {
                found = Some(*p);
            }
            !logical
        })?;
        if let Some(witness) = found {
            return Ok(Distance::Exact { d: w, witness });
        }
    }
    Ok(Distance::AtLeast(cap + 1))
}

/// Weight-`≤ w` errors that are undetected logicals.
pub fn undetected_logicals(code: &CodeSpec, w: usize) -> Result<Vec<PauliString>> {
    let mut out = Vec::new();
    for wt in 1..=w.min(code.n) {
        for_each_of_weight(code.n, wt, &mut |p| {
            if code.generators.iter().all(|g| g.commutes_unchecked(p)) && !code.in_group(p) {
                out.push(*p);
            }
            true
        })?;
    }
    Ok(out)
}

/// A generating set selected by weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedGenerators {
    #[serde(serialize_with = "ser_paulis")]
    pub generators: Vec<PauliString>,
    pub max_weight: usize,
    /// Number of generators attaining `max_weight`.
    pub at_max: usize,
}

fn greedy_basis(m: usize, required: &[PauliString], pool: &mut [PauliString]) -> Result<WeightedGenerators> {
    pool.sort_by_key(|p| (p.weight(), p.x_bits(), p.z_bits()));
    let mut basis = Gf2Basis::default();
    let mut chosen = Vec::new();
    for p in required {
        if !basis.insert(sym(p)) {
            return Err(Error::Validation(format!("required generator {p} is dependent")));
        }
        chosen.push(*p);
    }
    for p in pool.iter() {
        if basis.rank() == m {
            break;
        }
        if basis.insert(sym(p)) {
            chosen.push(*p);
        }
    }
    debug_assert_eq!(basis.rank(), m);
    let max_weight = chosen.iter().map(|p| p.weight()).max().unwrap_or(0);
    let at_max = chosen.iter().filter(|p| p.weight() == max_weight).count();
    Ok(WeightedGenerators {
        generators: chosen,
        max_weight,
        at_max,
    })
}

/// Generating set minimizing the maximum weight. Candidates are the whole
/// group for up to 16 generators, otherwise products of up to three
/// generators. Picking candidates by increasing weight yields a basis whose
/// sorted weights are minimal among all bases drawn from the candidates.
pub fn min_weight_generating_set(code: &CodeSpec) -> Result<WeightedGenerators> {
    generating_set_containing(code, &[])
}

/// Like [`min_weight_generating_set`], but starting from `required`, which
/// must be independent group elements.
pub fn generating_set_containing(code: &CodeSpec, required: &[PauliString]) -> Result<WeightedGenerators> {
    for p in required {
        if !code.in_group(p) {
            return Err(Error::Validation(format!("{p} is not in the stabilizer group")));
        }
    }
    let m = code.generators.len();
    let mut pool = if m <= 16 {
        code.group_elements()?
    } else {
        let g = &code.generators;
        let mut v = g.clone();
        for i in 0..m {
            for j in i + 1..m {
                let ij = g[i].multiply(&g[j])?;
                v.push(ij);
                for l in &g[j + 1..] {
                    v.push(ij.multiply(l)?);
                }
            }
        }
        v
    };
    pool.retain(|p| !p.is_identity_up_to_phase());
    greedy_basis(m, required, &mut pool)
}

/// Result of a CSS test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CssCheck {
    pub is_css: bool,
    /// Generators after the `H` layer; a pure X/Z generating set when
    /// `is_css`.
    #[serde(serialize_with = "ser_paulis")]
    pub generators: Vec<PauliString>,
}

/// Applies `H` on `h_pattern` after the encoding and tests whether the
/// resulting group has a generating set of pure-X and pure-Z elements.
pub fn css_equivalence_check(code: &CodeSpec, h_pattern: &[usize]) -> Result<CssCheck> {
    let mut gens = code.generators.clone();
    for &q in h_pattern {
        if q >= code.n {
            return Err(Error::Validation(format!("pattern qubit {q} out of range")));
        }
        for g in gens.iter_mut() {
            g.conj_h(q);
        }
    }
    let m = gens.len();
    let conj = CodeSpec {
        generators: gens.clone(),
        ..code.clone()
    };
    let elements = conj.group_elements()?;
    let mut xb = Gf2Basis::default();
    let mut zb = Gf2Basis::default();
    let mut x_type = Vec::new();
    let mut z_type = Vec::new();
    for e in elements.iter().filter(|e| !e.is_identity_up_to_phase()) {
        if e.z_bits() == 0 && xb.insert(sym(e)) {
            x_type.push(*e);
        } else if e.x_bits() == 0 && zb.insert(sym(e)) {
            z_type.push(*e);
        }
    }
    let is_css = xb.rank() + zb.rank() == m;
    Ok(CssCheck {
        is_css,
        generators: if is_css { x_type.into_iter().chain(z_type).collect() } else { gens },
    })
}

/// `H` positions that make the level-`r` code CSS: ancillas `a_i` with
/// `i mod 4 ∈ {2, 3}` (register index equals `i`).
pub fn documented_h_pattern(r: usize) -> Vec<usize> {
    (1..=2 * r + 2).filter(|i| matches!(i % 4, 2 | 3)).collect()
}

/// Errors grouped by the ancilla readout they produce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyndromeTable {
    /// Ancilla names in syndrome bit order.
    pub ancillas: Vec<String>,
    pub entries: BTreeMap<String, Vec<String>>,
}

fn syndrome_key(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl SyndromeTable {
    pub fn errors_for(&self, syndrome: &str) -> &[String] {
        self.entries.get(syndrome).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Exhaustive table of errors of weight `≤ w` (on the whole register)
/// inserted just before the right checks of `circuit`, keyed by the ancilla
/// syndrome in measurement order. Errors are written as letter strings.
pub fn syndrome_table(circuit: &Circuit, w: usize) -> Result<SyndromeTable> {
    if w > 2 {
        return Err(Error::Validation("syndrome tables support weight ≤ 2".into()));
    }
    let at = circuit
        .barrier_index("right_checks")
        .ok_or_else(|| Error::Validation("circuit has no right_checks barrier".into()))?;
    let n = circuit.num_qubits();
    let ancillas: Vec<String> = circuit
        .measurements()
        .iter()
        .map(|(_, q, _)| circuit.names()[*q].clone())
        .collect();
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut err = None;
    for wt in 0..=w {
        for_each_of_weight(n, wt, &mut |p| match flipped_bits(circuit, at, p) {
            Ok(bits) => {
                entries.entry(syndrome_key(&bits)).or_default().push(p.letters().iter().map(|l| l.as_char()).collect());
                true
            }
            Err(e) => {
                err = Some(e);
                false
            }
        })?;
        if let Some(e) = err.take() {
            return Err(e);
        }
    }
    Ok(SyndromeTable { ancillas, entries })
}

/// Table for the single-half check circuit at level `r`.
pub fn recursive_syndrome_table(r: usize, w: usize) -> Result<SyndromeTable> {
    syndrome_table(&build_half_pcs(r)?, w)
}

/// Certification summary for one recursion level.
#[derive(Clone, Debug, Serialize)]
pub struct CodeReport {
    pub recursion: usize,
    pub n: usize,
    pub k: usize,
    pub distance: Option<usize>,
    pub undetected_weight_one: usize,
    pub max_generator_weight: usize,
    pub generators: Vec<String>,
    pub css_pattern: Vec<String>,
    pub css: bool,
}

pub fn certify(r: usize) -> Result<CodeReport> {
    let code = recursive_code(r)?;
    let d = distance(&code, 3)?;
    let mw = min_weight_generating_set(&code)?;
    let pattern = documented_h_pattern(r);
    let css = css_equivalence_check(&code, &pattern)?;
    Ok(CodeReport {
        recursion: r,
        n: code.n,
        k: code.k,
        distance: d.exact(),
        undetected_weight_one: undetected_logicals(&code, 1)?.len(),
        max_generator_weight: mw.max_weight,
        generators: mw.generators.iter().map(|g| code.describe(g)).collect(),
        css_pattern: pattern.iter().map(|&q| code.names[q].clone()).collect(),
        css: css.is_css,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::dense::DensityMatrix;
    use crate::oracle::run_dense;

    fn letters(n: usize, spec: &[(usize, Pauli)]) -> PauliString {
        let mut p = PauliString::identity(n).unwrap();
        for &(q, l) in spec {
            p.set(q, l).unwrap();
        }
        p
    }

    #[test]
    fn parameters_and_distance() {
        for r in 1..=3 {
            let c = recursive_code(r).unwrap();
            assert_eq!((c.n, c.k), (2 * (r - 1) + 5, 1));
            assert_eq!(distance(&c, 3).unwrap().exact(), Some(2));
            assert!(undetected_logicals(&c, 1).unwrap().is_empty());
        }
        let base = recursive_code(0).unwrap();
        assert_eq!(base.n, 3);
        assert_eq!(distance(&base, 3).unwrap().exact(), Some(1));
    }

    #[test]
    fn repetition_code_has_distance_one() {
        let mut c = Circuit::new(vec!["d".into(), "a".into(), "b".into()]).unwrap();
        c.gate(Gate::Cnot(0, 1)).unwrap();
        c.gate(Gate::Cnot(0, 2)).unwrap();
        let code = extract_code(&c, 0).unwrap();
        let Distance::Exact { d, witness } = distance(&code, 3).unwrap() else {
            panic!("no logical found")
        };
        assert_eq!(d, 1);
        assert_eq!(witness.letter(witness.support()[0]), Pauli::Z);
    }

    #[test]
    fn weight_four_generator() {
        let c = recursive_code(1).unwrap();
        let w4 = letters(5, &[(0, Pauli::Z), (1, Pauli::Z), (2, Pauli::X), (4, Pauli::Z)]);
        assert!(c.in_group(&w4));
        let best = min_weight_generating_set(&c).unwrap();
        assert_eq!(best.max_weight, 4);
        assert_eq!(best.at_max, 1);
        let with = generating_set_containing(&c, &[w4]).unwrap();
        assert_eq!(with.max_weight, 4);
        assert_eq!(with.at_max, 1);
        for r in 2..=3 {
            assert_eq!(min_weight_generating_set(&recursive_code(r).unwrap()).unwrap().max_weight, 4);
        }
    }

    #[test]
    fn bell_state_stabilizers() {
        let mut c = Circuit::new(vec!["d".into(), "a".into(), "b".into()]).unwrap();
        c.gate(Gate::H(1)).unwrap();
        c.gate(Gate::Cnot(1, 2)).unwrap();
        let code = extract_code(&c, 0).unwrap();
        assert_eq!(min_weight_generating_set(&code).unwrap().max_weight, 2);
    }

    #[test]
    fn css_patterns() {
        assert_eq!(documented_h_pattern(1), vec![2, 3]);
        assert_eq!(documented_h_pattern(2), vec![2, 3, 6]);
        assert_eq!(documented_h_pattern(3), vec![2, 3, 6, 7]);
        for r in 1..=3 {
            let c = recursive_code(r).unwrap();
            let chk = css_equivalence_check(&c, &documented_h_pattern(r)).unwrap();
            assert!(chk.is_css, "r={r}");
            assert!(chk.generators.iter().all(|g| g.x_bits() == 0 || g.z_bits() == 0));
            assert_eq!(rank_of(chk.generators.iter().map(sym)), c.generators.len());
        }
        assert!(!css_equivalence_check(&recursive_code(1).unwrap(), &[]).unwrap().is_css);
    }

    #[test]
    fn syndrome_claims() {
        let t = recursive_syndrome_table(1, 2).unwrap();
        assert_eq!(t.ancillas, ["a1", "a2", "a3", "a4"]);
        let hits = t.errors_for("0010");
        let weight_one: Vec<&String> = hits.iter().filter(|e| e.chars().filter(|&c| c != 'I').count() == 1).collect();
        assert_eq!(weight_one, [&"IIIZI".to_string()]);
        assert!(hits.contains(&"XXIII".to_string()));
        assert_eq!(t.errors_for("0000")[0], "IIIII");
    }

    #[test]
    fn circuit_syndromes_match_algebra() {
        let c = recursive_code(1).unwrap();
        let t = recursive_syndrome_table(1, 2).unwrap();
        for (syn, errs) in &t.entries {
            for e in errs {
                let p: PauliString = e.parse().unwrap();
                assert_eq!(syndrome_key(&c.syndrome(&p).unwrap()), *syn, "{e}");
            }
        }
    }

    #[test]
    fn encoded_state_is_stabilized() {
        // The dense encoding of |0⟩ is a +1 eigenstate of every generator.
        let enc = build_half_encoding(1).unwrap();
        let code = extract_code(&enc, 0).unwrap();
        let run = run_dense(&enc).unwrap();
        assert!(run.output_state.is_none());
        let mut rho = DensityMatrix::zero_state(5).unwrap();
        for g in enc.gates() {
            let (u, t) = match *g {
                Gate::H(q) => (crate::dense::gates::h(), vec![q]),
                Gate::Cnot(a, b) => (crate::dense::gates::cnot(), vec![a, b]),
                Gate::Cz(a, b) => (crate::dense::gates::cz(), vec![a, b]),
                _ => unreachable!(),
            };
            rho = rho.apply_unitary(&u, &t).unwrap();
        }
        for g in code.generators.iter().chain([&code.logical_z]) {
            assert!((rho.expectation(g).unwrap() - 1.0).abs() < 1e-12, "{g}");
        }
    }
}
