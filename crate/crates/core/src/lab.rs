//! Experiment harness: configuration, sweeps, engine comparison and the
//! figure tables.
//!
//! Configurations are flat `key = value` text:
//!
//! ```text
//! scenario = swap          # pcs_x_pair | pcs_xz_pair | recursive_pcs | swap | teleported_pcs | bbpssw
//! check_mode = xz          # swap only: none | x | xz
//! protect = flying         # swap only: none | flying | memory | flying+memory
//! recursion = 0            # recursive_pcs, swap
//! rounds = 1               # bbpssw
//! sweep = p                # p (channel depolarizing) or f (input fidelity)
//! grid = 0:0.5:0.05        # start:stop:step, or a comma list
//! p_1q = 0.001
//! p_2q = 0.01
//! p_memory = 0.1           # optional; defaults to the channel p
//! n_shots = 100000
//! seed = 1
//! engine = monte_carlo     # monte_carlo | enumerate | exact | analytic | oracle
//! ```

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analytic::{bbpssw_recursive, pcs_x_point_p, pcs_xz_point_p};
use crate::circuit::{Circuit, GateNoise};
use crate::dense::MAX_DENSE_QUBITS;
use crate::engine::{enumerate_paths, exact, sample_counts, ExactResult, MAX_PATHS};
use crate::error::{parse_err, Error, Result};
use crate::noise::{fidelity_from_p, p_from_fidelity};
use crate::oracle::run_dense;
use crate::protocols::{
    build_bbpssw_round, build_pcs_pair, build_recursive_pcs, build_swap_with_pcs, build_teleported_pcs, CheckMode,
    PairConfig, PairNoise, Protect, SwapConfig, TeleportedConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    PcsXPair,
    PcsXzPair,
    RecursivePcs { r: usize },
    Swap { mode: CheckMode, protect: Protect, r: usize },
    TeleportedPcs,
    Bbpssw { rounds: u32 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::PcsXPair => "pcs_x_pair",
            Scenario::PcsXzPair => "pcs_xz_pair",
            Scenario::RecursivePcs { .. } => "recursive_pcs",
            Scenario::Swap { .. } => "swap",
            Scenario::TeleportedPcs => "teleported_pcs",
            Scenario::Bbpssw { .. } => "bbpssw",
        }
    }

    /// Label with parameters, e.g. `swap:xz:flying`. Free of commas.
    pub fn label(&self) -> String {
        match self {
            Scenario::RecursivePcs { r } => format!("recursive_pcs({r})"),
            Scenario::Swap { mode, protect, r: 0 } => format!("swap:{mode}:{protect}"),
            Scenario::Swap { mode, protect, r } => format!("swap:{mode}:{protect}:r{r}"),
            Scenario::Bbpssw { rounds } => format!("bbpssw({rounds})"),
            s => s.name().to_string(),
        }
    }

    fn r_column(&self) -> usize {
        match *self {
            Scenario::RecursivePcs { r } | Scenario::Swap { r, .. } => r,
            Scenario::Bbpssw { rounds } => rounds as usize,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    MonteCarlo,
    /// Path enumeration; falls back to the aggregated exact engine when the
    /// number of paths exceeds the enumeration cap.
    Enumerate,
    Exact,
    Analytic,
    Oracle,
}

impl Engine {
    pub const ALL: [Engine; 5] = [
        Engine::Analytic,
        Engine::Enumerate,
        Engine::Exact,
        Engine::Oracle,
        Engine::MonteCarlo,
    ];

    pub fn is_exact(self) -> bool {
        self != Engine::MonteCarlo
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::MonteCarlo => "monte_carlo",
            Engine::Enumerate => "enumerate",
            Engine::Exact => "exact",
            Engine::Analytic => "analytic",
            Engine::Oracle => "oracle",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "monte_carlo" | "mc" => Ok(Engine::MonteCarlo),
            "enumerate" => Ok(Engine::Enumerate),
            "exact" => Ok(Engine::Exact),
            "analytic" => Ok(Engine::Analytic),
            "oracle" | "dense" => Ok(Engine::Oracle),
            o => Err(Error::Validation(format!("unknown engine {o:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    /// Channel depolarizing probability (replacement convention).
    P,
    /// Input Bell fidelity.
    F,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    pub gate_noise: GateNoise,
    pub p_memory: Option<f64>,
    pub n_shots: u64,
    pub seed: u64,
    pub engine: Engine,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::PcsXPair,
            sweep: SweepVar::P,
            grid: vec![0.0],
            gate_noise: GateNoise::default(),
            p_memory: None,
            n_shots: 0,
            seed: 0,
            engine: Engine::Exact,
        }
    }
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Validation(format!("bad number {t:?} in grid")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if parts.len() == 3 {
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(Error::Validation(format!("bad grid range {s:?}")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(Error::Validation("grid too large".into()));
        }
        (0..=n).map(|i| round12(a + step * i as f64)).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    Ok(grid)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut scenario = None;
        let mut mode = CheckMode::XZ;
        let mut protect = Protect::Flying;
        let mut recursion = 0usize;
        let mut rounds = 1u32;
        let mut p_1q = 0.0;
        let mut p_2q = 0.0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ln = i + 1;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(ln, format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let wrap = |e: Error| parse_err(ln, e.to_string());
            let float = |v: &str| v.parse::<f64>().map_err(|_| parse_err(ln, format!("bad number {v:?}")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| parse_err(ln, format!("bad integer {v:?}")));
            match k {
                "scenario" => scenario = Some(v.to_string()),
                "check_mode" => mode = v.parse().map_err(wrap)?,
                "protect" => protect = v.parse().map_err(wrap)?,
                "recursion" => recursion = int(v)? as usize,
                "rounds" => rounds = int(v)? as u32,
                "sweep" => {
                    cfg.sweep = match v {
                        "p" => SweepVar::P,
                        "f" | "F" => SweepVar::F,
                        _ => return Err(parse_err(ln, format!("sweep must be p or f, got {v:?}"))),
                    }
                }
                "grid" => cfg.grid = parse_grid(v).map_err(wrap)?,
                "p_1q" => p_1q = float(v)?,
                "p_2q" => p_2q = float(v)?,
                "p_memory" => cfg.p_memory = Some(float(v)?),
                "n_shots" => cfg.n_shots = int(v)?,
                "seed" => cfg.seed = int(v)?,
                "engine" => cfg.engine = v.parse().map_err(wrap)?,
                _ => return Err(parse_err(ln, format!("unknown key {k:?}"))),
            }
        }
        cfg.gate_noise = GateNoise::new(p_1q, p_2q)?;
        let name = scenario.ok_or_else(|| Error::Validation("missing scenario".into()))?;
        cfg.scenario = match name.as_str() {
            "pcs_x_pair" => Scenario::PcsXPair,
            "pcs_xz_pair" => Scenario::PcsXzPair,
            "recursive_pcs" => Scenario::RecursivePcs { r: recursion },
            "swap" => Scenario::Swap {
                mode,
                protect,
                r: recursion,
            },
            "teleported_pcs" => Scenario::TeleportedPcs,
            "bbpssw" => Scenario::Bbpssw { rounds },
            o => return Err(Error::Validation(format!("unknown scenario {o:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Validation("empty grid".into()));
        }
        let lo = match self.sweep {
            SweepVar::P => 0.0,
            SweepVar::F if matches!(self.scenario, Scenario::Bbpssw { .. }) => 0.0,
            SweepVar::F => 0.25,
        };
        if let Some(x) = self.grid.iter().find(|x| !(lo..=1.0).contains(*x)) {
            return Err(Error::Validation(format!("grid value {x} outside [{lo}, 1]")));
        }
        if let Some(pm) = self.p_memory {
            if !(0.0..=1.0).contains(&pm) {
                return Err(Error::Validation(format!("p_memory {pm} outside [0, 1]")));
            }
        }
        if let Scenario::Bbpssw { rounds } = self.scenario {
            if rounds == 0 || rounds > 30 {
                return Err(Error::Validation(format!("rounds {rounds} outside 1..=30")));
            }
        }
        if self.engine == Engine::MonteCarlo && self.n_shots == 0 {
            return Err(Error::Validation("monte_carlo needs n_shots > 0".into()));
        }
        Ok(())
    }

    /// Canonical text; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = format!("scenario = {}\n", self.scenario.name());
        match self.scenario {
            Scenario::RecursivePcs { r } => s += &format!("recursion = {r}\n"),
            Scenario::Swap { mode, protect, r } => {
                s += &format!("check_mode = {mode}\nprotect = {protect}\nrecursion = {r}\n")
            }
            Scenario::Bbpssw { rounds } => s += &format!("rounds = {rounds}\n"),
            _ => {}
        }
        let grid: Vec<String> = self.grid.iter().map(|x| format!("{x}")).collect();
        s += &format!(
            "sweep = {}\ngrid = {}\np_1q = {}\np_2q = {}\n",
            match self.sweep {
                SweepVar::P => "p",
                SweepVar::F => "f",
            },
            grid.join(","),
            self.gate_noise.p_1q,
            self.gate_noise.p_2q
        );
        if let Some(pm) = self.p_memory {
            s += &format!("p_memory = {pm}\n");
        }
        s += &format!("n_shots = {}\nseed = {}\nengine = {}\n", self.n_shots, self.seed, self.engine);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`to_text`](Self::to_text).
    pub fn config_hash(&self) -> String {
        let d = Sha256::digest(self.to_text().as_bytes());
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Channel `p` and input fidelity for a grid value.
    fn point(&self, x: f64) -> Result<(f64, f64)> {
        match self.sweep {
            SweepVar::P => Ok((x, fidelity_from_p(x)?)),
            SweepVar::F if matches!(self.scenario, Scenario::Bbpssw { .. }) => {
                Ok((p_from_fidelity(x).unwrap_or(f64::NAN), x))
            }
            SweepVar::F => Ok((p_from_fidelity(x)?, x)),
        }
    }
}

/// Builds the circuit of a scenario at channel `p` (or, for BBPSSW, one
/// round at input fidelity `f`).
pub fn build_circuit(
    scenario: Scenario,
    p: f64,
    f: f64,
    gate_noise: GateNoise,
    p_memory: Option<f64>,
) -> Result<Circuit> {
    match scenario {
        Scenario::PcsXPair | Scenario::PcsXzPair => build_pcs_pair(&PairConfig {
            mode: if scenario == Scenario::PcsXPair {
                CheckMode::X
            } else {
                CheckMode::XZ
            },
            recursion: 0,
            noise: PairNoise::uniform(p),
            gate_noise,
        }),
        Scenario::RecursivePcs { r } => build_recursive_pcs(r, p, gate_noise),
        Scenario::Swap { mode, protect, r } => build_swap_with_pcs(&SwapConfig {
            mode,
            protect,
            recursion: r,
            p_channel: p,
            p_memory: p_memory.unwrap_or(p),
            gate_noise,
        }),
        Scenario::TeleportedPcs => build_teleported_pcs(&TeleportedConfig {
            p_channel: p,
            p_memory: p_memory.unwrap_or(p),
            gate_noise,
        }),
        Scenario::Bbpssw { .. } => build_bbpssw_round(f, gate_noise),
    }
}

/// Pass rate and fidelity with standard errors (zero for exact engines).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub pass_rate: f64,
    pub pass_stderr: f64,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
}

impl Estimate {
    fn exact(pass: f64, fid: f64) -> Self {
        Self {
            pass_rate: pass,
            pass_stderr: 0.0,
            fidelity: fid,
            fidelity_stderr: 0.0,
        }
    }
}

fn run_exact(c: &Circuit, engine: Engine) -> Result<ExactResult> {
    match engine {
        Engine::Enumerate if c.path_count() <= MAX_PATHS as u128 => enumerate_paths(c),
        Engine::Enumerate | Engine::Exact => exact(c),
        Engine::Oracle => {
            if c.num_qubits() > MAX_DENSE_QUBITS {
                return Err(Error::Resource(format!(
                    "oracle handles at most {MAX_DENSE_QUBITS} qubits, circuit has {}",
                    c.num_qubits()
                )));
            }
            let d = run_dense(c)?;
            Ok(ExactResult {
                pass_prob: d.pass_prob,
                bell_fidelity: d.bell_fidelity,
                total_prob: 1.0,
            })
        }
        _ => unreachable!("not a circuit engine"),
    }
}

fn run_mc(c: &Circuit, shots: u64, seed: u64) -> Result<Estimate> {
    let counts = sample_counts(c, shots, seed)?;
    match counts.estimate() {
        Ok(e) => Ok(Estimate {
            pass_rate: e.pass_rate,
            pass_stderr: e.pass_stderr,
            fidelity: e.fidelity,
            fidelity_stderr: e.fidelity_stderr,
        }),
        Err(Error::EstimationImpossible(_)) => {
            let pr = counts.passed as f64 / counts.shots.max(1) as f64;
            Ok(Estimate {
                pass_rate: pr,
                pass_stderr: (pr * (1.0 - pr) / counts.shots.max(1) as f64).sqrt(),
                fidelity: f64::NAN,
                fidelity_stderr: f64::NAN,
            })
        }
        Err(e) => Err(e),
    }
}

/// Mixes a master seed with indices into a per-task seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(a.to_le_bytes());
    h.update(b.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Evaluates one scenario point with one engine.
pub fn evaluate(
    scenario: Scenario,
    engine: Engine,
    p: f64,
    f: f64,
    gate_noise: GateNoise,
    p_memory: Option<f64>,
    shots: u64,
    seed: u64,
) -> Result<Estimate> {
    if engine == Engine::Analytic {
        if !gate_noise.is_noiseless() {
            return Err(Error::Unsupported("closed forms assume noiseless gates".into()));
        }
        return match scenario {
            Scenario::PcsXPair => pcs_x_point_p(p, p).map(|s| Estimate::exact(s.rate, s.f_out)),
            Scenario::PcsXzPair => pcs_xz_point_p(p, p).map(|s| Estimate::exact(s.rate, s.f_out)),
            Scenario::Bbpssw { rounds } => bbpssw_recursive(f, rounds).map(|s| Estimate::exact(s.rate, s.f_out)),
            s => Err(Error::Unsupported(format!("no closed form for {}", s.label()))),
        };
    }
    if let Scenario::Bbpssw { rounds } = scenario {
        // Each round is re-twirled to Werner form at the previous output.
        if engine == Engine::MonteCarlo && rounds > 1 {
            return Err(Error::Unsupported("monte_carlo bbpssw supports one round".into()));
        }
        let mut fid = f;
        let mut rate = 1.0;
        let mut last = Estimate::exact(1.0, f);
        for round in 0..rounds {
            let c = build_circuit(scenario, p, fid.clamp(0.0, 1.0), gate_noise, p_memory)?;
            last = if engine == Engine::MonteCarlo {
                run_mc(&c, shots, derive_seed(seed, round as u64, 0))?
            } else {
                let e = run_exact(&c, engine)?;
                Estimate::exact(e.pass_prob, e.bell_fidelity)
            };
            fid = last.fidelity;
            rate *= last.pass_rate;
        }
        return Ok(Estimate {
            pass_rate: rate,
            fidelity: fid,
            ..last
        });
    }
    let c = build_circuit(scenario, p, f, gate_noise, p_memory)?;
    if engine == Engine::MonteCarlo {
        run_mc(&c, shots, seed)
    } else {
        let e = run_exact(&c, engine)?;
        Ok(Estimate::exact(e.pass_prob, e.bell_fidelity))
    }
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    pub engine: String,
    pub r: usize,
    pub p_channel: f64,
    pub p_1q: f64,
    pub p_2q: f64,
    #[serde(rename = "F_in")]
    pub f_in: f64,
    pub n_shots: u64,
    pub pass_rate: f64,
    pub pass_stderr: f64,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}

/// Runs every grid point of `cfg`. Points run in parallel; Monte Carlo
/// point `i` uses a seed derived from the master seed and `i`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let hash = cfg.config_hash();
    let rows = cfg
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let (p, f) = cfg.point(x)?;
            let est = evaluate(
                cfg.scenario,
                cfg.engine,
                p,
                f,
                cfg.gate_noise,
                cfg.p_memory,
                cfg.n_shots,
                derive_seed(cfg.seed, i as u64, 0),
            )?;
            Ok(SweepRow {
                scenario: cfg.scenario.label(),
                engine: cfg.engine.to_string(),
                r: cfg.scenario.r_column(),
                p_channel: p,
                p_1q: cfg.gate_noise.p_1q,
                p_2q: cfg.gate_noise.p_2q,
                f_in: f,
                n_shots: if cfg.engine == Engine::MonteCarlo { cfg.n_shots } else { 0 },
                pass_rate: est.pass_rate,
                pass_stderr: est.pass_stderr,
                fidelity: est.fidelity,
                fidelity_stderr: est.fidelity_stderr,
                seed: cfg.seed,
                config_hash: hash.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Outcome of a cross-engine comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareStatus {
    Ok,
    /// Some Monte Carlo value is between 3σ and 4σ from the exact value.
    Warning,
    /// Exact engines disagree beyond the tolerance.
    ExactMismatch,
    /// Some Monte Carlo value is more than 4σ from the exact value.
    StatisticalFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareEntry {
    pub x: f64,
    pub engine: Engine,
    pub estimate: Estimate,
    /// Distance to the exact reference in standard errors (Monte Carlo).
    pub pass_sigma: Option<f64>,
    pub fidelity_sigma: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub engines: Vec<Engine>,
    pub entries: Vec<CompareEntry>,
    pub max_exact_deviation: f64,
    pub max_sigma: f64,
    pub status: CompareStatus,
}

pub const EXACT_TOLERANCE: f64 = 1e-9;
pub const SIGMA_FAIL: f64 = 4.0;
pub const SIGMA_WARN: f64 = 3.0;

fn sigma(v: f64, reference: f64, se: f64) -> f64 {
    if v.is_nan() || reference.is_nan() {
        return 0.0;
    }
    let d = (v - reference).abs();
    if se > 0.0 {
        d / se
    } else if d < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn nan_eq_dev(a: f64, b: f64) -> f64 {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => 0.0,
        (false, false) => (a - b).abs(),
        _ => f64::INFINITY,
    }
}

/// Runs the scenario of `cfg` with every engine that supports it and checks
/// agreement: exact engines to [`EXACT_TOLERANCE`], Monte Carlo against the
/// first exact engine in σ units. Monte Carlo is skipped when `n_shots` is 0.
pub fn compare_engines(cfg: &ExperimentConfig) -> Result<CompareReport> {
    let mut used: Vec<Engine> = Vec::new();
    let mut entries = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut max_sigma: f64 = 0.0;
    for (i, &x) in cfg.grid.iter().enumerate() {
        let (p, f) = cfg.point(x)?;
        let mut reference: Option<Estimate> = None;
        for engine in Engine::ALL {
            if engine == Engine::MonteCarlo && cfg.n_shots == 0 {
                continue;
            }
            let r = evaluate(
                cfg.scenario,
                engine,
                p,
                f,
                cfg.gate_noise,
                cfg.p_memory,
                cfg.n_shots,
                derive_seed(cfg.seed, i as u64, 0),
            );
            let est = match r {
                Ok(e) => e,
                Err(Error::Unsupported(_)) | Err(Error::Resource(_)) => continue,
                Err(e) => return Err(e),
            };
            if !used.contains(&engine) {
                used.push(engine);
            }
            let (mut ps, mut fs) = (None, None);
            if let Some(r) = reference {
                if engine.is_exact() {
                    max_dev = max_dev
                        .max(nan_eq_dev(est.pass_rate, r.pass_rate))
                        .max(nan_eq_dev(est.fidelity, r.fidelity));
                } else {
                    let a = sigma(est.pass_rate, r.pass_rate, est.pass_stderr);
                    let b = sigma(est.fidelity, r.fidelity, est.fidelity_stderr);
                    max_sigma = max_sigma.max(a).max(b);
                    ps = Some(a);
                    fs = Some(b);
                }
            } else if engine.is_exact() {
                reference = Some(est);
            }
            entries.push(CompareEntry {
                x,
                engine,
                estimate: est,
                pass_sigma: ps,
                fidelity_sigma: fs,
            });
        }
    }
    let status = if max_dev > EXACT_TOLERANCE {
        CompareStatus::ExactMismatch
    } else if max_sigma > SIGMA_FAIL {
        CompareStatus::StatisticalFailure
    } else if max_sigma > SIGMA_WARN {
        CompareStatus::Warning
    } else {
        CompareStatus::Ok
    };
    Ok(CompareReport {
        scenario: cfg.scenario.label(),
        engines: used,
        entries,
        max_exact_deviation: max_dev,
        max_sigma,
        status,
    })
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        writeln!(
            f,
            "{:>8}  {:<12} {:>12} {:>10} {:>12} {:>10} {:>7} {:>7}",
            "x", "engine", "pass", "±", "fidelity", "±", "σ_pass", "σ_fid"
        )?;
        let s = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        for e in &self.entries {
            writeln!(
                f,
                "{:>8.4}  {:<12} {:>12.9} {:>10.2e} {:>12.9} {:>10.2e} {:>7} {:>7}",
                e.x,
                e.engine.to_string(),
                e.estimate.pass_rate,
                e.estimate.pass_stderr,
                e.estimate.fidelity,
                e.estimate.fidelity_stderr,
                s(e.pass_sigma),
                s(e.fidelity_sigma)
            )?;
        }
        writeln!(f, "max exact deviation {:.3e}", self.max_exact_deviation)?;
        writeln!(f, "max Monte Carlo distance {:.2}σ", self.max_sigma)?;
        write!(f, "status {:?}", self.status)
    }
}

/// A named-column numeric table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// How the numbers should be read, for the report.
    pub note: String,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|v| format!("{v}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}

pub const FIGURES: [&str; 6] = ["fig2a", "fig2b", "fig3b", "fig7a", "fig7b", "fig8"];

/// Gate noise used for the network simulations.
pub fn network_gate_noise() -> GateNoise {
    GateNoise::new(0.001, 0.01).expect("valid rates")
}

fn fidelity_grid() -> Vec<f64> {
    (0..=75).map(|i| round12(0.25 + 0.01 * i as f64)).collect()
}

fn channel_grid() -> Vec<f64> {
    (0..=10).map(|i| round12(0.05 * i as f64)).collect()
}

/// Emits the series of a named figure. Analytic curves ignore `shots` and
/// `seed`; the network figures are Monte Carlo with standard errors.
pub fn reproduce_figure(name: &str, shots: u64, seed: u64) -> Result<Table> {
    let analytic = |cols: &[&str], f: &dyn Fn(f64) -> Result<Vec<f64>>| -> Result<Table> {
        let rows = fidelity_grid()
            .into_iter()
            .map(|x| {
                let mut r = vec![x];
                r.extend(f(x)?);
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            columns: cols.iter().map(|s| s.to_string()).collect(),
            rows,
            note: "closed-form curves".into(),
        })
    };
    use crate::analytic::{pcs_x_point_f, pcs_xz_point_f};
    match name {
        "fig2a" => analytic(&["F", "F'_pcs_x", "F'_bbpssw1", "diagonal"], &|x| {
            Ok(vec![pcs_x_point_f(x)?.f_out, bbpssw_recursive(x, 1)?.f_out, x])
        }),
        "fig2b" => analytic(&["F", "F'_pcs_xz", "F'_bbpssw2", "F'_bbpssw3", "diagonal"], &|x| {
            Ok(vec![
                pcs_xz_point_f(x)?.f_out,
                bbpssw_recursive(x, 2)?.f_out,
                bbpssw_recursive(x, 3)?.f_out,
                x,
            ])
        }),
        "fig3b" => analytic(&["F", "c_pcs_xz", "c_bbpssw3"], &|x| {
            Ok(vec![pcs_xz_point_f(x)?.rate, bbpssw_recursive(x, 3)?.rate])
        }),
        "fig7a" | "fig7b" => {
            if shots == 0 {
                return Err(Error::Validation("network figures need shots > 0".into()));
            }
            let protect = if name == "fig7a" {
                Protect::Flying
            } else {
                Protect::FlyingMemory
            };
            let series = [
                Scenario::Swap {
                    mode: CheckMode::None,
                    protect: Protect::None,
                    r: 0,
                },
                Scenario::Swap {
                    mode: CheckMode::XZ,
                    protect,
                    r: 0,
                },
            ];
            network_table(&series, &["none", "pcs"], shots, seed, "swap")
        }
        "fig8" => {
            if shots == 0 {
                return Err(Error::Validation("network figures need shots > 0".into()));
            }
            let series = [
                Scenario::RecursivePcs { r: 0 },
                Scenario::RecursivePcs { r: 1 },
                Scenario::RecursivePcs { r: 2 },
            ];
            network_table(&series, &["r0", "r1", "r2"], shots, seed, "recursion")
        }
        o => Err(Error::Validation(format!(
            "unknown figure {o:?}; known: {}",
            FIGURES.join(", ")
        ))),
    }
}

fn network_table(series: &[Scenario], tags: &[&str], shots: u64, seed: u64, what: &str) -> Result<Table> {
    let gn = network_gate_noise();
    let grid = channel_grid();
    let mut columns = vec!["p".to_string()];
    for t in tags {
        for c in ["F", "F_err", "c", "c_err"] {
            columns.push(format!("{c}_{t}"));
        }
    }
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..series.len()).map(move |s| (i, s)))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(i, s)| {
            let c = build_circuit(series[s], grid[i], 0.0, gn, None)?;
            run_mc(&c, shots, derive_seed(seed, i as u64, s as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut r = vec![p];
            for s in 0..series.len() {
                let e = results[i * series.len() + s];
                r.extend([e.fidelity, e.fidelity_stderr, e.pass_rate, e.pass_stderr]);
            }
            r
        })
        .collect();
    Ok(Table {
        columns,
        rows,
        note: format!(
            "Monte Carlo {what} series, {shots} shots per point, gate noise p_1q={} p_2q={}. \
             No reference values exist for these curves; they are checked by ordering only.",
            gn.p_1q, gn.p_2q
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# sample\nscenario = swap\ncheck_mode = xz\nprotect = flying+memory\n\
        sweep = p\ngrid = 0:0.2:0.1\np_1q = 0.001\np_2q = 0.01\nn_shots = 3000\nseed = 9\nengine = monte_carlo\n";

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.grid, vec![0.0, 0.1, 0.2]);
        assert_eq!(
            cfg.scenario,
            Scenario::Swap {
                mode: CheckMode::XZ,
                protect: Protect::FlyingMemory,
                r: 0
            }
        );
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
        assert_eq!(cfg.config_hash().len(), 16);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            ExperimentConfig::parse("scenario = swap\nbogus = 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(ExperimentConfig::parse("grid = 0:1:0.1\n").is_err());
        assert!(ExperimentConfig::parse("scenario = pcs_x_pair\ngrid = 0,1.5\n").is_err());
        assert!(ExperimentConfig::parse("scenario = pcs_x_pair\nengine = monte_carlo\n").is_err());
        assert!(ExperimentConfig::parse("scenario = pcs_x_pair\nsweep = f\ngrid = 0.1\n").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert_eq!(parse_grid("0:0.5:0.05").unwrap().len(), 11);
    }

    #[test]
    fn sweep_is_deterministic_and_sharding_free() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let a = run_sweep(&cfg).unwrap().to_csv().unwrap();
        let b = run_sweep(&cfg).unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(
            "scenario,engine,r,p_channel,p_1q,p_2q,F_in,n_shots,pass_rate,pass_stderr,fidelity,fidelity_stderr,seed,config_hash"
        ));
    }

    #[test]
    fn analytic_rows_have_zero_stderr() {
        let cfg = ExperimentConfig::parse("scenario = pcs_xz_pair\ngrid = 0:1:0.25\nengine = analytic\n").unwrap();
        let res = run_sweep(&cfg).unwrap();
        assert_eq!(res.rows.len(), 5);
        assert!(res.rows.iter().all(|r| r.pass_stderr == 0.0 && r.fidelity_stderr == 0.0 && r.n_shots == 0));
    }

    #[test]
    fn engines_agree_on_pairs() {
        for s in ["pcs_x_pair", "pcs_xz_pair"] {
            let cfg = ExperimentConfig::parse(&format!(
                "scenario = {s}\ngrid = 0.1,0.3\nn_shots = 20000\nseed = 3\nengine = enumerate\n"
            ))
            .unwrap();
            let rep = compare_engines(&cfg).unwrap();
            assert!(rep.engines.contains(&Engine::Analytic) && rep.engines.contains(&Engine::Oracle));
            assert!(rep.max_exact_deviation < 1e-9, "{rep}");
            assert_ne!(rep.status, CompareStatus::StatisticalFailure, "{rep}");
        }
    }

    #[test]
    fn oracle_refuses_large_circuits() {
        let e = evaluate(
            Scenario::RecursivePcs { r: 1 },
            Engine::Oracle,
            0.1,
            0.9,
            GateNoise::default(),
            None,
            0,
            0,
        );
        assert!(matches!(e, Err(Error::Resource(_))));
    }

    #[test]
    fn bbpssw_engines_agree() {
        for rounds in 1..=2 {
            for f in [0.6, 0.75, 0.9] {
                let a = evaluate(Scenario::Bbpssw { rounds }, Engine::Analytic, 0.0, f, GateNoise::default(), None, 0, 0)
                    .unwrap();
                let o = evaluate(Scenario::Bbpssw { rounds }, Engine::Oracle, 0.0, f, GateNoise::default(), None, 0, 0)
                    .unwrap();
                assert!((a.fidelity - o.fidelity).abs() < 1e-10);
                assert!((a.pass_rate - o.pass_rate).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn analytic_figures() {
        let t = reproduce_figure("fig2a", 0, 0).unwrap();
        assert_eq!(t.columns, ["F", "F'_pcs_x", "F'_bbpssw1", "diagonal"]);
        assert_eq!(t.rows.len(), 76);
        let t = reproduce_figure("fig2b", 0, 0).unwrap();
        assert_eq!(t.columns[1], "F'_pcs_xz");
        let t = reproduce_figure("fig3b", 0, 0).unwrap();
        assert_eq!(t.columns, ["F", "c_pcs_xz", "c_bbpssw3"]);
        assert!(reproduce_figure("fig9", 0, 0).is_err());
        assert!(reproduce_figure("fig8", 0, 0).is_err());
    }
}
