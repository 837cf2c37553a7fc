//! `pcslab` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure (bad input or
//! exact engines disagreeing), 3 statistical gate failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pcslab::analytic::{bbpssw_recursive, crossover_region, pcs_x_point_f, pcs_xz_point_f, Scheme};
use pcslab::code::{certify, recursive_syndrome_table};
use pcslab::error::{Error, Result};
use pcslab::graph::{
    attach_lossy_pcs_x, attach_lossy_pcs_z, check_measurement_rules, lossy_disconnect, GraphState, LossyCheck,
};
use pcslab::lab::{compare_engines, parse_grid, reproduce_figure, run_sweep, CompareStatus, Engine, ExperimentConfig};

#[derive(Parser)]
#[command(name = "pcslab", version, about = "Pauli check sandwiching lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunOpts {
    /// Experiment configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo shot count.
    #[arg(long)]
    shots: Option<u64>,
    /// Override the engine.
    #[arg(long)]
    engine: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form output fidelity and success rate over input fidelities.
    Analytic {
        /// pcs_x, pcs_xz or bbpssw.
        #[arg(long, default_value = "pcs_xz")]
        scheme: String,
        /// BBPSSW rounds.
        #[arg(long, default_value_t = 1)]
        rounds: u32,
        /// Input fidelities, `start:stop:step` or a comma list.
        #[arg(long, default_value = "0.25:1:0.05")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write CSV.
    Sweep(RunOpts),
    /// Run one configuration on every applicable engine and check agreement.
    Compare {
        #[command(flatten)]
        opts: RunOpts,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Stabilizer code of the recursive check encoding.
    CodeAnalyze {
        #[arg(long, default_value_t = 1)]
        recursion: usize,
        /// Also print syndromes of errors up to this weight.
        #[arg(long, default_value_t = 0)]
        syndromes: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lossy checks on a graph state, verified against a dense reference.
    GraphDemo {
        /// Edge-list file; defaults to a 4-vertex example.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Data vertex the checks attach to.
        #[arg(long, default_value_t = 2)]
        data: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the data series of a figure as CSV.
    Reproduce {
        /// fig2a, fig2b, fig3b, fig7a, fig7b or fig8.
        figure: String,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    Validation,
    Statistical,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(opts: &RunOpts) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&opts.config)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(n) = opts.shots {
        cfg.n_shots = n;
    }
    if let Some(e) = &opts.engine {
        cfg.engine = e.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn analytic(scheme: &str, rounds: u32, grid: &str, out: &Option<PathBuf>) -> Result<Outcome> {
    let scheme: Scheme = scheme.parse()?;
    let grid = parse_grid(grid)?;
    let mut s = String::from("F,F_out,rate,qubit_cost\n");
    for f in grid {
        let pt = match scheme {
            Scheme::PcsX => pcs_x_point_f(f)?,
            Scheme::PcsXz => pcs_xz_point_f(f)?,
            Scheme::Bbpssw => bbpssw_recursive(f, rounds)?,
        };
        s += &format!("{},{},{},{}\n", pt.f_in, pt.f_out, pt.rate, pt.qubit_cost);
    }
    emit(out, &s)?;
    if scheme != Scheme::Bbpssw || rounds == 1 {
        match crossover_region(scheme, 1e-10)? {
            Some((lo, hi)) => eprintln!("{scheme}: F' > F for F in ({lo:.6}, {hi:.6})"),
            None => eprintln!("{scheme}: F' <= F everywhere"),
        }
    }
    Ok(Outcome::Ok)
}

fn compare(opts: &RunOpts, json: bool) -> Result<Outcome> {
    let cfg = load(opts)?;
    let rep = compare_engines(&cfg)?;
    let text = if json {
        serde_json::to_string_pretty(&rep).map_err(|e| Error::Validation(e.to_string()))? + "\n"
    } else {
        format!("{rep}\n")
    };
    emit(&opts.out, &text)?;
    Ok(match rep.status {
        CompareStatus::Ok => Outcome::Ok,
        CompareStatus::Warning => {
            eprintln!("warning: a Monte Carlo value lies beyond 3σ");
            Outcome::Ok
        }
        CompareStatus::ExactMismatch => Outcome::Validation,
        CompareStatus::StatisticalFailure => Outcome::Statistical,
    })
}

fn code_analyze(r: usize, syndromes: usize, json: bool, out: &Option<PathBuf>) -> Result<Outcome> {
    let rep = certify(r)?;
    let mut s = if json {
        serde_json::to_string_pretty(&rep).map_err(|e| Error::Validation(e.to_string()))? + "\n"
    } else {
        let d = rep.distance.map_or("> 3".to_string(), |d| d.to_string());
        let mut s = format!("[[{}, {}, {}]] recursion {}\n", rep.n, rep.k, d, rep.recursion);
        s += &format!("undetected weight-1 logicals: {}\n", rep.undetected_weight_one);
        s += &format!("minimum-weight generators (max weight {}):\n", rep.max_generator_weight);
        for g in &rep.generators {
            s += &format!("  {g}\n");
        }
        s += &format!(
            "H on {} gives a CSS code: {}\n",
            rep.css_pattern.join(", "),
            if rep.css { "yes" } else { "no" }
        );
        s
    };
    if syndromes > 0 {
        let t = recursive_syndrome_table(r, syndromes)?;
        s += &format!("syndromes over {}:\n", t.ancillas.join(" "));
        for (k, errs) in &t.entries {
            let shown: Vec<&str> = errs.iter().take(8).map(String::as_str).collect();
            let more = if errs.len() > 8 { format!(" (+{})", errs.len() - 8) } else { String::new() };
            s += &format!("  {k}: {}{more}\n", shown.join(" "));
        }
    }
    emit(out, &s)?;
    Ok(Outcome::Ok)
}

fn default_graph() -> GraphState {
    GraphState::from_edges(4, &[(0, 2), (1, 2), (0, 3), (2, 3)]).expect("valid example")
}

/// Checks every measurement rule of `g` against the dense reference and
/// returns the worst probability error and infidelity.
fn record(name: &str, g: &GraphState, s: &mut String) -> Result<(f64, f64)> {
    let checks = check_measurement_rules(g)?;
    let ep = checks.iter().map(|c| c.probability_error).fold(0.0, f64::max);
    let ef = checks.iter().map(|c| 1.0 - c.state_fidelity).fold(0.0, f64::max);
    *s += &format!(
        "{name}: {} measurement rules checked, max probability error {ep:.1e}, max infidelity {ef:.1e}\n",
        checks.len()
    );
    Ok((ep, ef))
}

fn graph_demo(path: &Option<PathBuf>, data: usize, out: &Option<PathBuf>) -> Result<Outcome> {
    let g = match path {
        Some(p) => fs::read_to_string(p)?.parse::<GraphState>()?,
        None => default_graph(),
    };
    let mut s = format!("graph\n{g}");
    let (ep, ef) = record("base graph", &g, &mut s)?;
    let mut worst_p = ep;
    let mut worst_f = ef;
    let mut agree = ep < 1e-9 && ef < 1e-9;
    type Attach = fn(&GraphState, usize) -> Result<(GraphState, LossyCheck)>;
    let attach: [(&str, Attach); 2] = [("X", attach_lossy_pcs_x), ("Z", attach_lossy_pcs_z)];
    for (kind, f) in attach {
        let (h, chk) = f(&g, data)?;
        s += &format!(
            "\n{kind} checks on vertex {data}: ancillas {:?}, edges {:?}\n",
            chk.ancillas,
            h.edges()
        );
        let (ep, ef) = record(&format!("{kind}-checked graph"), &h, &mut s)?;
        worst_p = worst_p.max(ep);
        worst_f = worst_f.max(ef);
        agree &= ep < 1e-9 && ef < 1e-9;
        let region = chk.region();
        for mask in 1u8..8 {
            let surv: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| region[i]).collect();
            let (cut, act) = lossy_disconnect(&h, &chk, &surv, false)?;
            let rest: Vec<usize> = region.into_iter().filter(|v| cut.contains(*v)).collect();
            let crossing = cut.crossing_edges(&rest);
            agree &= crossing.is_empty();
            s += &format!(
                "  surviving {:?}: measure {} on {} -> crossing edges {:?}\n",
                surv,
                act.basis.as_char(),
                act.vertex,
                crossing
            );
        }
        match lossy_disconnect(&h, &chk, &[], false) {
            Err(Error::DisconnectImpossible) => s += "  surviving []: cannot disconnect\n",
            other => {
                agree = false;
                s += &format!("  surviving []: unexpected {other:?}\n");
            }
        }
    }
    s += &format!(
        "\ndense reference agreement: {} (max probability error {worst_p:.1e}, max infidelity {worst_f:.1e})\n",
        if agree { "yes" } else { "NO" }
    );
    emit(out, &s)?;
    Ok(if agree { Outcome::Ok } else { Outcome::Validation })
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Analytic {
            scheme,
            rounds,
            grid,
            out,
        } => analytic(&scheme, rounds, &grid, &out),
        Command::Sweep(opts) => {
            let cfg = load(&opts)?;
            let res = run_sweep(&cfg)?;
            emit(&opts.out, &res.to_csv()?)?;
            if cfg.engine == Engine::MonteCarlo {
                eprintln!("seed {} config {}", cfg.seed, cfg.config_hash());
            }
            Ok(Outcome::Ok)
        }
        Command::Compare { opts, json } => compare(&opts, json),
        Command::CodeAnalyze {
            recursion,
            syndromes,
            json,
            out,
        } => code_analyze(recursion, syndromes, json, &out),
        Command::GraphDemo { graph, data, out } => graph_demo(&graph, data, &out),
        Command::Reproduce {
            figure,
            shots,
            seed,
            out,
        } => {
            let t = reproduce_figure(&figure, shots, seed)?;
            emit(&out, &t.to_csv()?)?;
            eprintln!("{}", t.note);
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Validation) => ExitCode::from(2),
        Ok(Outcome::Statistical) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
