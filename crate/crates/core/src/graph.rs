//! Graph states with per-vertex local Clifford frames.
//!
//! A [`GraphState`] stands for `⊗_v C_v |G⟩`, where `|G⟩` is the graph state
//! of the current graph and `C_v` the frame of vertex `v`. Measured vertices
//! are removed; vertex ids stay stable.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::clifford1::Clifford1;
use crate::dense::{fidelity, gates, CMatrix, DensityMatrix, MAX_DENSE_QUBITS};
use crate::error::{parse_err, Error, Result};
use crate::pauli::{Pauli, PauliString};

/// Largest vertex count.
pub const MAX_VERTICES: usize = 64;
/// Largest number of present vertices [`GraphState::to_state`] expands.
pub const MAX_STATE_VERTICES: usize = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphState {
    adj: Vec<u64>,
    present: u64,
    frames: Vec<Clifford1>,
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

impl GraphState {
    /// `n` isolated vertices, each in `|+⟩`.
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::Resource(format!("{n} vertices exceeds {MAX_VERTICES}")));
        }
        Ok(Self {
            adj: vec![0; n],
            present: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
            frames: vec![Clifford1::identity(); n],
        })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n)?;
        for &(u, v) in edges {
            if g.has_edge(u, v)? {
                return Err(Error::Validation(format!("duplicate edge {u}-{v}")));
            }
            g.toggle_edge(u, v)?;
        }
        Ok(g)
    }

    /// Total vertex ids ever allocated.
    pub fn capacity(&self) -> usize {
        self.adj.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.adj.len() && self.present >> v & 1 == 1
    }

    fn check(&self, v: usize) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Validation(format!("vertex {v} not in the graph")))
        }
    }

    /// Present vertices in increasing order.
    pub fn vertices(&self) -> Vec<usize> {
        bits(self.present).collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.present.count_ones() as usize
    }

    pub fn neighbors(&self, v: usize) -> Result<Vec<usize>> {
        self.check(v)?;
        Ok(bits(self.adj[v]).collect())
    }

    fn nmask(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.adj[u] >> v & 1 == 1)
    }

    pub fn toggle_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::Validation(format!("self-loop on {u}")));
        }
        self.adj[u] ^= 1 << v;
        self.adj[v] ^= 1 << u;
        Ok(())
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in self.vertices() {
            for v in bits(self.adj[u] >> u >> 1) {
                out.push((u, u + 1 + v));
            }
        }
        out
    }

    pub fn frame(&self, v: usize) -> Result<Clifford1> {
        self.check(v)?;
        Ok(self.frames[v])
    }

    /// Applies `c` to vertex `v` after everything else: `C_v ← c · C_v`.
    pub fn apply_local(&mut self, v: usize, c: Clifford1) -> Result<()> {
        self.check(v)?;
        self.frames[v] = c.then_right(&self.frames[v]);
        Ok(())
    }

    /// Adds an isolated `|+⟩` vertex and returns its id.
    pub fn add_vertex(&mut self) -> Result<usize> {
        let v = self.adj.len();
        if v >= MAX_VERTICES {
            return Err(Error::Resource("vertex limit reached".into()));
        }
        self.adj.push(0);
        self.frames.push(Clifford1::identity());
        self.present |= 1 << v;
        Ok(v)
    }

    fn remove(&mut self, a: usize) {
        for b in bits(self.adj[a]) {
            self.adj[b] &= !(1 << a);
        }
        self.adj[a] = 0;
        self.present &= !(1 << a);
        self.frames[a] = Clifford1::identity();
    }

    /// Graph-only local complementation: toggles every edge inside `N_a`.
    fn tau(&mut self, a: usize) {
        let n = self.adj[a];
        for b in bits(n) {
            // Toggle b's edges to N_a \ {b}.
            let t = n & !(1 << b);
            self.adj[b] ^= t;
        }
    }

    /// Local complementation at `a` with the frame adjusted so that
    /// [`to_state`](Self::to_state) is unchanged.
    pub fn local_complement(&self, a: usize) -> Result<Self> {
        self.check(a)?;
        let mut g = self.clone();
        // |τ_a G⟩ = √(−iX)_a ∏ √(iZ)_b |G⟩, so each frame absorbs the inverse.
        let na = g.nmask(a);
        g.tau(a);
        g.frames[a] = g.frames[a].then_right(&Clifford1::sqrt_minus_ix().inverse());
        for b in bits(na) {
            g.frames[b] = g.frames[b].then_right(&Clifford1::sqrt_iz().inverse());
        }
        Ok(g)
    }

    /// Probability of the given outcome for a measurement of `basis` on `a`.
    pub fn outcome_probability(&self, a: usize, basis: Pauli, outcome: bool) -> Result<f64> {
        self.check(a)?;
        let (q, bare) = self.bare_measurement(a, basis, outcome)?;
        if self.adj[a] != 0 {
            return Ok(0.5);
        }
        Ok(match q {
            Pauli::X => {
                if bare {
                    0.0
                } else {
                    1.0
                }
            }
            _ => 0.5,
        })
    }

    fn bare_measurement(&self, a: usize, basis: Pauli, outcome: bool) -> Result<(Pauli, bool)> {
        if basis == Pauli::I {
            return Err(Error::Validation("cannot measure the identity".into()));
        }
        let (neg, q) = self.frames[a].preimage(basis);
        Ok((q, outcome ^ neg))
    }

    /// Measures `basis` on `a` with the given outcome (`false` is the `+1`
    /// eigenvalue) and removes `a`. For X measurements `b0` picks the
    /// neighbor used by the rule; `None` takes the smallest.
    pub fn measure(&self, a: usize, basis: Pauli, outcome: bool, b0: Option<usize>) -> Result<Self> {
        self.check(a)?;
        let (q, bare) = self.bare_measurement(a, basis, outcome)?;
        let p = self.outcome_probability(a, basis, outcome)?;
        if p == 0.0 {
            return Err(Error::ImpossibleBranch(0.0));
        }
        let mut g = self.clone();
        let corrections = match q {
            Pauli::Z => g.rule_z(a, bare),
            Pauli::Y => g.rule_y(a, bare),
            Pauli::X => g.rule_x(a, bare, b0)?,
            Pauli::I => unreachable!(),
        };
        for (v, c) in corrections {
            g.frames[v] = g.frames[v].then_right(&c);
        }
        Ok(g)
    }

    pub fn measure_x(&self, a: usize, b0: Option<usize>, outcome: bool) -> Result<Self> {
        self.measure(a, Pauli::X, outcome, b0)
    }

    pub fn measure_y(&self, a: usize, outcome: bool) -> Result<Self> {
        self.measure(a, Pauli::Y, outcome, None)
    }

    pub fn measure_z(&self, a: usize, outcome: bool) -> Result<Self> {
        self.measure(a, Pauli::Z, outcome, None)
    }

    // Each rule acts on the bare graph, removes `a` and returns the local
    // corrections U with C_v ← C_v · U_v.

    fn rule_z(&mut self, a: usize, one: bool) -> Vec<(usize, Clifford1)> {
        let na = self.nmask(a);
        self.remove(a);
        if one {
            bits(na).map(|b| (b, Clifford1::pauli(Pauli::Z))).collect()
        } else {
            vec![]
        }
    }

    fn rule_y(&mut self, a: usize, minus: bool) -> Vec<(usize, Clifford1)> {
        let na = self.nmask(a);
        self.tau(a);
        self.remove(a);
        let c = if minus { Clifford1::sdg() } else { Clifford1::s() };
        bits(na).map(|b| (b, c)).collect()
    }

    fn rule_x(&mut self, a: usize, minus: bool, b0: Option<usize>) -> Result<Vec<(usize, Clifford1)>> {
        let na = self.nmask(a);
        if na == 0 {
            self.remove(a);
            return Ok(vec![]);
        }
        let b0 = match b0 {
            Some(b) if na >> b & 1 == 1 => b,
            Some(b) => return Err(Error::Validation(format!("{b} is not a neighbor of {a}"))),
            None => na.trailing_zeros() as usize,
        };
        let nb = self.nmask(b0);
        self.tau(b0);
        self.tau(a);
        self.remove(a);
        self.tau(b0);
        let z = Clifford1::pauli(Pauli::Z);
        let (o, zs) = if minus {
            (Clifford1::o().inverse(), nb & !na & !(1 << a))
        } else {
            (Clifford1::o(), na & !nb & !(1 << b0))
        };
        let mut out = vec![(b0, o)];
        out.extend(bits(zs).map(|v| (v, z)));
        Ok(out)
    }

    /// Adds a `|+⟩` vertex `A` and applies controlled-`P` from `A` onto
    /// `target` (lab frame). Returns `A`.
    pub fn attach_controlled_pauli(&mut self, target: usize, letter: Pauli) -> Result<usize> {
        self.check(target)?;
        if letter == Pauli::I {
            return Err(Error::Validation("controlled identity".into()));
        }
        let (neg, q) = self.frames[target].preimage(letter);
        let a = self.add_vertex()?;
        let nt = self.nmask(target);
        // P_t|G⟩ on the bare graph: Z_t, X_t = Z_{N_t}, Y_t = −i Z_t Z_{N_t}.
        let (mask, phase) = match q {
            Pauli::Z => (1u64 << target, None),
            Pauli::X => (nt, None),
            Pauli::Y => (nt | 1 << target, Some(Clifford1::sdg())),
            Pauli::I => unreachable!(),
        };
        for b in bits(mask) {
            self.toggle_edge(a, b)?;
        }
        if let Some(c) = phase {
            self.frames[a] = c;
        }
        if neg {
            self.frames[a] = Clifford1::pauli(Pauli::Z).then_right(&self.frames[a]);
        }
        Ok(a)
    }

    /// The normalized state vector over present vertices in increasing id
    /// order, first vertex most significant.
    pub fn to_state(&self) -> Result<DVector<Complex64>> {
        let vs = self.vertices();
        let m = vs.len();
        if m > MAX_STATE_VERTICES {
            return Err(Error::Resource(format!("{m} vertices exceeds {MAX_STATE_VERTICES}")));
        }
        let pos = |v: usize| vs.iter().position(|&x| x == v).expect("present");
        let dim = 1usize << m;
        let amp = 1.0 / (dim as f64).sqrt();
        let edges: Vec<(usize, usize)> = self.edges().into_iter().map(|(u, v)| (pos(u), pos(v))).collect();
        let mut psi = DVector::from_fn(dim, |i, _| {
            let bit = |j: usize| i >> (m - 1 - j) & 1 == 1;
            let odd = edges.iter().filter(|&&(u, v)| bit(u) && bit(v)).count() % 2 == 1;
            Complex64::new(if odd { -amp } else { amp }, 0.0)
        });
        for (j, &v) in vs.iter().enumerate() {
            if self.frames[v].is_identity() {
                continue;
            }
            let u = self.frames[v].matrix();
            let stride = 1usize << (m - 1 - j);
            for i in 0..dim {
                if i & stride == 0 {
                    let (a0, a1) = (psi[i], psi[i | stride]);
                    psi[i] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                    psi[i | stride] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
                }
            }
        }
        Ok(psi)
    }

    /// Edges joining `region` to the remaining present vertices.
    pub fn crossing_edges(&self, region: &[usize]) -> Vec<(usize, usize)> {
        let rmask = region.iter().fold(0u64, |m, &v| m | 1 << v);
        self.edges()
            .into_iter()
            .filter(|&(u, v)| (rmask >> u & 1 == 1) != (rmask >> v & 1 == 1))
            .collect()
    }

    /// Writes the graph as an edge list (`vertices n`, then `u v` lines).
    /// Removed vertices and frames are not written.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("vertices {}\n", self.capacity());
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

impl FromStr for GraphState {
    type Err = Error;
    /// Edge-list text. `vertices n` is optional; otherwise the count is one
    /// more than the largest id. `#` starts a comment.
    fn from_str(s: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| parse_err(i + 1, format!("bad vertex id {t:?}")))
            };
            match toks.as_slice() {
                ["vertices", k] => n = Some(num(k)?),
                [u, v] => edges.push((num(u)?, num(v)?)),
                _ => return Err(parse_err(i + 1, format!("expected `u v`, got {line:?}"))),
            }
        }
        let max = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let n = n.unwrap_or(max);
        if max > n {
            return Err(Error::Validation(format!("edge endpoint beyond {n} vertices")));
        }
        GraphState::from_edges(n, &edges)
    }
}

impl fmt::Display for GraphState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_edge_list())?;
        for v in self.vertices() {
            if !self.frames[v].is_identity() {
                writeln!(f, "# frame {v}: {}", self.frames[v])?;
            }
        }
        Ok(())
    }
}

/// Two check ancillas attached to one data vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LossyCheck {
    pub data: usize,
    pub ancillas: [usize; 2],
    /// Check Pauli on the data vertex. The check stabilizers are
    /// `X_{A_i} ⊗ kind_data`.
    pub kind: Pauli,
}

impl LossyCheck {
    /// Basis in which the data vertex is measured to cut the region loose.
    pub fn data_basis(&self) -> Pauli {
        self.kind
    }

    pub fn region(&self) -> [usize; 3] {
        [self.data, self.ancillas[0], self.ancillas[1]]
    }
}

/// Left X checks from two fresh ancillas onto `data`. Each ancilla `A`
/// starts in `|+⟩` and controls `X` on `data`, so the result is stabilized
/// by `X_A X_data`.
pub fn attach_lossy_pcs_x(g: &GraphState, data: usize) -> Result<(GraphState, LossyCheck)> {
    attach_checks(g, data, Pauli::X)
}

/// As [`attach_lossy_pcs_x`] with Z checks, which attach both ancillas to
/// `data` as leaves.
pub fn attach_lossy_pcs_z(g: &GraphState, data: usize) -> Result<(GraphState, LossyCheck)> {
    attach_checks(g, data, Pauli::Z)
}

fn attach_checks(g: &GraphState, data: usize, kind: Pauli) -> Result<(GraphState, LossyCheck)> {
    let mut out = g.clone();
    let a1 = out.attach_controlled_pauli(data, kind)?;
    let a2 = out.attach_controlled_pauli(data, kind)?;
    Ok((
        out,
        LossyCheck {
            data,
            ancillas: [a1, a2],
            kind,
        },
    ))
}

/// The single measurement used to disconnect a check region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DisconnectAction {
    pub vertex: usize,
    pub basis: Pauli,
}

/// Cuts the region of `check` off the rest of the graph using whichever of
/// its qubits survived: the data vertex in its check basis if present,
/// otherwise an X measurement on the first surviving ancilla.
pub fn lossy_disconnect(
    g: &GraphState,
    check: &LossyCheck,
    surviving: &[usize],
    outcome: bool,
) -> Result<(GraphState, DisconnectAction)> {
    let region = check.region();
    if let Some(v) = surviving.iter().find(|v| !region.contains(v)) {
        return Err(Error::Validation(format!("vertex {v} is outside the region")));
    }
    let action = if surviving.contains(&check.data) {
        DisconnectAction {
            vertex: check.data,
            basis: check.data_basis(),
        }
    } else if let Some(&a) = check.ancillas.iter().find(|a| surviving.contains(a)) {
        DisconnectAction {
            vertex: a,
            basis: Pauli::X,
        }
    } else {
        return Err(Error::DisconnectImpossible);
    };
    let out = g.measure(action.vertex, action.basis, outcome, None)?;
    Ok((out, action))
}

/// Dense density matrix built gate by gate (H on every vertex, CZ per edge,
/// then the frames), in increasing vertex order. Independent of the rules
/// above.
pub fn dense_reference(g: &GraphState) -> Result<DensityMatrix> {
    let vs = g.vertices();
    if vs.len() > MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "dense reference handles at most {MAX_DENSE_QUBITS} vertices"
        )));
    }
    let pos = |v: usize| vs.iter().position(|&x| x == v).expect("present");
    let mut rho = DensityMatrix::zero_state(vs.len())?;
    for j in 0..vs.len() {
        rho = rho.apply_unitary(&gates::h(), &[j])?;
    }
    for (u, v) in g.edges() {
        rho = rho.apply_unitary(&gates::cz(), &[pos(u), pos(v)])?;
    }
    for &v in &vs {
        rho = rho.apply_unitary(&g.frame(v)?.matrix(), &[pos(v)])?;
    }
    Ok(rho)
}

fn projector(basis: Pauli, outcome: bool) -> CMatrix {
    let s = if outcome { -0.5 } else { 0.5 };
    CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0) + basis.matrix() * Complex64::new(s, 0.0)
}

/// Measures `a` in the dense picture and traces it out. Returns the outcome
/// probability and the normalized post-measurement state (the unmeasured
/// reduced state when the branch is impossible).
pub fn dense_measure(g: &GraphState, a: usize, basis: Pauli, outcome: bool) -> Result<(f64, DensityMatrix)> {
    let vs = g.vertices();
    let j = vs
        .iter()
        .position(|&x| x == a)
        .ok_or_else(|| Error::Validation(format!("vertex {a} is not present")))?;
    let rho = dense_reference(g)?;
    let keep: Vec<usize> = (0..vs.len()).filter(|&k| k != j).collect();
    match rho.postselect(&projector(basis, outcome), &[j]) {
        Ok((p, post)) => Ok((p, post.partial_trace(&keep)?)),
        Err(Error::ImpossibleBranch(p)) => Ok((p, rho.partial_trace(&keep)?)),
        Err(e) => Err(e),
    }
}

/// Agreement of one graph measurement rule with the dense reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleCheck {
    pub vertex: usize,
    pub basis: Pauli,
    pub outcome: bool,
    pub probability: f64,
    pub probability_error: f64,
    /// Fidelity between rule and dense post-measurement states (1 when the
    /// branch is impossible).
    pub state_fidelity: f64,
}

/// Checks every single-vertex Pauli measurement of `g` against the dense
/// reference.
pub fn check_measurement_rules(g: &GraphState) -> Result<Vec<RuleCheck>> {
    let mut out = Vec::new();
    for a in g.vertices() {
        for basis in [Pauli::X, Pauli::Y, Pauli::Z] {
            for outcome in [false, true] {
                let rule_p = g.outcome_probability(a, basis, outcome)?;
                if g.num_vertices() == 1 {
                    // Nothing remains after the measurement; only the
                    // probability can be compared.
                    let rho = dense_reference(g)?;
                    let p = rho.expectation(&PauliString::single(1, 0, basis)?)?;
                    let p = 0.5 * (1.0 + if outcome { -p } else { p });
                    out.push(RuleCheck {
                        vertex: a,
                        basis,
                        outcome,
                        probability: rule_p,
                        probability_error: (p - rule_p).abs(),
                        state_fidelity: 1.0,
                    });
                    continue;
                }
                let (p, want) = dense_measure(g, a, basis, outcome)?;
                let fid = if rule_p < 1e-12 {
                    1.0
                } else {
                    let h = g.measure(a, basis, outcome, None)?;
                    let got = dense_reference(&h)?;
                    fidelity(&got, &want)?
                };
                out.push(RuleCheck {
                    vertex: a,
                    basis,
                    outcome,
                    probability: rule_p,
                    probability_error: (p - rule_p).abs(),
                    state_fidelity: fid,
                });
            }
        }
    }
    Ok(out)
}
