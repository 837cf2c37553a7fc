//! Closed-form fidelities and postselection rates.
//!
//! Noise parameters `p` are in the replacement convention (`1 − 3p/4` identity
//! weight) unless stated otherwise. Fidelity inputs `F` refer to a Bell pair
//! whose two halves went through the same depolarizing channel, so
//! `F = 1 + ¾(p − 2)p`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{fidelity_from_p, p_from_fidelity};

/// One point of a purification or checking curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationPoint {
    pub f_in: f64,
    pub f_out: f64,
    pub rate: f64,
    pub qubit_cost: usize,
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("{what} = {x} outside [0, 1]")))
    }
}

fn check_werner_floor(f: f64) -> Result<()> {
    if (0.25..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("fidelity {f} outside [0.25, 1]")))
    }
}

/// One BBPSSW round on two Werner pairs of fidelity `f`.
pub fn bbpssw_step(f: f64) -> Result<PurificationPoint> {
    check_unit(f, "F")?;
    let e = (1.0 - f) / 3.0;
    let rate = f * f + 2.0 * f * e + 5.0 * e * e;
    let f_out = (f * f + e * e) / rate;
    Ok(PurificationPoint {
        f_in: f,
        f_out,
        rate,
        qubit_cost: 4,
    })
}

/// `rounds` BBPSSW rounds, each re-twirled to Werner form. The rate is the
/// product of the per-round rates; the qubit cost doubles per round.
pub fn bbpssw_recursive(f: f64, rounds: u32) -> Result<PurificationPoint> {
    if rounds == 0 {
        return Err(Error::Validation("at least one round required".into()));
    }
    if rounds > 30 {
        return Err(Error::Validation(format!("{rounds} rounds is too many")));
    }
    let mut cur = f;
    let mut rate = 1.0;
    for _ in 0..rounds {
        let s = bbpssw_step(cur)?;
        cur = s.f_out;
        rate *= s.rate;
    }
    Ok(PurificationPoint {
        f_in: f,
        f_out: cur,
        rate,
        qubit_cost: 1usize << (rounds + 1),
    })
}

/// X checks on both halves; `p1` on half A, `p2` on half B.
pub fn pcs_x_point_p(p1: f64, p2: f64) -> Result<PurificationPoint> {
    check_unit(p1, "p1")?;
    check_unit(p2, "p2")?;
    let h1 = (p1 - 2.0) * p1 + 2.0;
    let h2 = (p2 - 2.0) * p2 + 2.0;
    let rate = 0.25 * h1 * h2;
    let num = (9.0 * (p1 - 2.0) * p1 + 10.0) * p2 * p2 + 2.0 * (20.0 - 9.0 * p1) * p1 * p2
        + 2.0 * p1 * (5.0 * p1 - 12.0)
        - 24.0 * p2
        + 16.0;
    Ok(PurificationPoint {
        f_in: bell_fidelity_two_halves(p1, p2),
        f_out: num / (4.0 * h1 * h2),
        rate,
        qubit_cost: 4,
    })
}

/// X checks on both halves, in terms of the input fidelity.
pub fn pcs_x_point_f(f: f64) -> Result<PurificationPoint> {
    check_werner_floor(f)?;
    let s = (1.0 + 2.0 * f).powi(2);
    Ok(PurificationPoint {
        f_in: f,
        f_out: 9.0 * f * f / s,
        rate: s / 9.0,
        qubit_cost: 4,
    })
}

/// X and Z checks on both halves; `p1` on half A, `p2` on half B.
pub fn pcs_xz_point_p(p1: f64, p2: f64) -> Result<PurificationPoint> {
    check_unit(p1, "p1")?;
    check_unit(p2, "p2")?;
    let g1 = p1 * (2.0 * p1 - 3.0) + 2.0;
    let g2 = p2 * (2.0 * p2 - 3.0) + 2.0;
    let rate = (p1 - 2.0) * g1 * (p2 - 2.0) * g2 / 16.0;
    let num = (p1 * (13.0 * p1 - 25.0) + 14.0) * p2 * p2 - 25.0 * (p1 - 2.0) * p1 * p2
        + 14.0 * (p1 - 2.0) * p1
        - 28.0 * p2
        + 16.0;
    Ok(PurificationPoint {
        f_in: bell_fidelity_two_halves(p1, p2),
        f_out: num / (4.0 * g1 * g2),
        rate,
        qubit_cost: 6,
    })
}

/// X and Z checks on both halves, in terms of the input fidelity.
pub fn pcs_xz_point_f(f: f64) -> Result<PurificationPoint> {
    check_werner_floor(f)?;
    let s = (12.0 * f - 3.0).max(0.0).sqrt();
    let rate = (3.0 + 6.0 * f - s + 4.0 * f * s).powi(2) / 324.0;
    let f_out = (1.0 + 52.0 * f * f - s - 2.0 * f * (4.0 + s)) / (s - 1.0 - 8.0 * f).powi(2);
    Ok(PurificationPoint {
        f_in: f,
        f_out,
        rate,
        qubit_cost: 6,
    })
}

/// Bell fidelity when half A sees depolarizing `p1` and half B sees `p2`.
pub fn bell_fidelity_two_halves(p1: f64, p2: f64) -> f64 {
    let e1 = 0.75 * p1;
    let e2 = 0.75 * p2;
    // Both identity, or the same non-identity letter on each side.
    (1.0 - e1) * (1.0 - e2) + e1 * e2 / 3.0
}

/// Rate `c1` and fidelity `F'_1` for a Bell pair where only one half carries
/// an X check and both data and ancilla of that half see depolarizing `p1`.
pub fn single_check_half_channel(p1: f64) -> Result<(f64, f64)> {
    check_unit(p1, "p1")?;
    let c1 = 0.5 * (2.0 + p1 * (p1 - 2.0));
    let f1 = (8.0 + p1 * (5.0 * p1 - 12.0)) / (8.0 + 4.0 * p1 * (p1 - 2.0));
    Ok((c1, f1))
}

/// Schemes with a closed-form `F'(F)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    PcsX,
    PcsXz,
    Bbpssw,
}

impl Scheme {
    pub fn f_out(self, f: f64) -> Result<f64> {
        Ok(match self {
            Scheme::PcsX => pcs_x_point_f(f)?.f_out,
            Scheme::PcsXz => pcs_xz_point_f(f)?.f_out,
            Scheme::Bbpssw => bbpssw_step(f)?.f_out,
        })
    }

    /// Range of input fidelities the formula accepts.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Scheme::Bbpssw => (0.0, 1.0),
            _ => (0.25, 1.0),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::PcsX => "pcs_x",
            Scheme::PcsXz => "pcs_xz",
            Scheme::Bbpssw => "bbpssw",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pcs_x" | "x" => Ok(Scheme::PcsX),
            "pcs_xz" | "xz" => Ok(Scheme::PcsXz),
            "bbpssw" => Ok(Scheme::Bbpssw),
            o => Err(Error::Validation(format!("unknown scheme {o:?}"))),
        }
    }
}

const GRID: usize = 2000;

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // Invariant: g(lo) <= 0 < g(hi) or the reverse.
    let lo_pos = g(lo) > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The highest interval of input fidelities for which `F' > F`, with both edges
/// located by bisection to `tol`. Edges that coincide with the ends of the
/// formula's domain are returned exactly. `None` if `F' ≤ F` everywhere on
/// the grid. For BBPSSW the formula also exceeds `F` for `F < 0.2`, far
/// below the Werner floor; that run is ignored.
pub fn crossover_region(scheme: Scheme, tol: f64) -> Result<Option<(f64, f64)>> {
    let (a, b) = scheme.domain();
    let g = |f: f64| scheme.f_out(f).map(|v| v - f).unwrap_or(f64::NAN);
    let xs: Vec<f64> = (0..=GRID).map(|i| a + (b - a) * i as f64 / GRID as f64).collect();
    let pos: Vec<bool> = xs.iter().map(|&x| g(x) > 0.0).collect();
    let Some(last) = pos.iter().rposition(|&p| p) else {
        return Ok(None);
    };
    let first = pos[..last].iter().rposition(|&p| !p).map_or(0, |i| i + 1);
    let lo = if first == 0 {
        a
    } else if g(xs[first - 1]) == 0.0 && first == 1 {
        a
    } else {
        bisect(g, xs[first - 1], xs[first], tol)
    };
    let hi = if last == GRID {
        b
    } else if g(xs[last + 1]) == 0.0 && last + 1 == GRID {
        b
    } else {
        bisect(g, xs[last], xs[last + 1], tol)
    };
    Ok(Some((lo, hi)))
}

/// [`pcs_x_point_p`] at `p1 = p2 = p`, expressed through the fidelity.
pub fn pcs_x_point_via_f(p: f64) -> Result<PurificationPoint> {
    pcs_x_point_f(fidelity_from_p(p)?)
}

/// [`pcs_xz_point_p`] at the `p` that produces fidelity `f`.
pub fn pcs_xz_point_via_p(f: f64) -> Result<PurificationPoint> {
    let p = p_from_fidelity(f)?;
    pcs_xz_point_p(p, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Independent evaluation: BBPSSW on Bell-diagonal weights
    // (A, B, C, D) = (F, e, e, e) with coincidence keeping AA+BB, AB+BA on
    // the Φ/Ψ flip structure.
    fn bbpssw_from_weights(f: f64) -> (f64, f64) {
        let e = (1.0 - f) / 3.0;
        // Φ+ = f, Ψ− = e, Ψ+ = e, Φ− = e.
        let (a, b, c, d) = (f, e, e, e);
        let keep = (a + d).powi(2) + (b + c).powi(2);
        let good = a * a + d * d;
        (good / keep, keep)
    }

    #[test]
    fn bbpssw_values() {
        let s = bbpssw_step(0.75).unwrap();
        assert_abs_diff_eq!(s.f_out, 0.788462, epsilon = 1e-6);
        assert_abs_diff_eq!(s.rate, 0.722222, epsilon = 1e-6);
        assert_abs_diff_eq!(bbpssw_step(1.0).unwrap().f_out, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bbpssw_step(0.5).unwrap().f_out, 0.5, epsilon = 1e-15);
        for i in 0..=20 {
            let f = i as f64 / 20.0;
            let (fo, c) = bbpssw_from_weights(f);
            let s = bbpssw_step(f).unwrap();
            assert_abs_diff_eq!(s.f_out, fo, epsilon = 1e-13);
            assert_abs_diff_eq!(s.rate, c, epsilon = 1e-13);
        }
    }

    #[test]
    fn bbpssw_rounds() {
        let one = bbpssw_recursive(0.9, 1).unwrap();
        assert_eq!(one, bbpssw_step(0.9).unwrap());
        let f: Vec<f64> = (1..=3).map(|r| bbpssw_recursive(0.9, r).unwrap().f_out).collect();
        assert!(f[2] > f[1] && f[1] > f[0] && f[0] > 0.9);
        assert_eq!(bbpssw_recursive(0.9, 2).unwrap().qubit_cost, 8);
        assert_eq!(bbpssw_recursive(0.9, 3).unwrap().qubit_cost, 16);
        assert!(bbpssw_recursive(0.9, 0).is_err());
    }

    #[test]
    fn pcs_examples() {
        let z = pcs_x_point_p(0.0, 0.0).unwrap();
        assert_eq!((z.rate, z.f_out), (1.0, 1.0));
        assert_abs_diff_eq!(pcs_x_point_p(0.4, 0.4).unwrap().rate, 0.4624, epsilon = 1e-12);
        let h = pcs_x_point_f(0.5).unwrap();
        assert_abs_diff_eq!(h.rate, 4.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.f_out, 0.5625, epsilon = 1e-15);
        assert_abs_diff_eq!(pcs_x_point_f(0.25).unwrap().f_out, 0.25, epsilon = 1e-15);
        assert!(pcs_x_point_f(0.2).is_err());
        assert!(pcs_xz_point_f(0.2).is_err());
        assert_abs_diff_eq!(pcs_xz_point_p(1.0, 1.0).unwrap().rate, 1.0 / 16.0, epsilon = 1e-15);
        let one = pcs_xz_point_f(1.0).unwrap();
        assert_abs_diff_eq!(one.rate, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one.f_out, 1.0, epsilon = 1e-15);
        let e = pcs_xz_point_f(0.8).unwrap();
        assert!(e.f_out > 0.8 && e.f_out < 1.0 && e.rate > 0.0 && e.rate < 1.0);
    }

    #[test]
    fn xz_first_order_slope() {
        let e = 1e-4;
        let f = pcs_xz_point_f(1.0 - e).unwrap().f_out;
        let slope = (f - 1.0) / e;
        assert!((slope + 1.0 / 3.0).abs() < 1e-3 / 3.0, "{slope}");
    }

    #[test]
    fn half_channel_product_law() {
        assert_eq!(single_check_half_channel(0.0).unwrap(), (1.0, 1.0));
        assert_abs_diff_eq!(single_check_half_channel(1.0).unwrap().0, 0.5, epsilon = 1e-15);
        for i in 0..=20 {
            for j in 0..=20 {
                let (p1, p2) = (i as f64 / 20.0, j as f64 / 20.0);
                let c = single_check_half_channel(p1).unwrap().0 * single_check_half_channel(p2).unwrap().0;
                assert_abs_diff_eq!(c, pcs_x_point_p(p1, p2).unwrap().rate, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn crossovers() {
        let (lo, hi) = crossover_region(Scheme::PcsX, 1e-12).unwrap().unwrap();
        assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-9);
        let (lo, hi) = crossover_region(Scheme::Bbpssw, 1e-12).unwrap().unwrap();
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-9);
        let (lo, hi) = crossover_region(Scheme::PcsXz, 1e-12).unwrap().unwrap();
        assert!(lo >= 0.25 && lo < 0.5, "{lo}");
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn xz_dominates_x_at_high_fidelity() {
        for i in 0..=50 {
            let f = 0.5 + 0.5 * i as f64 / 50.0;
            assert!(pcs_xz_point_f(f).unwrap().f_out >= pcs_x_point_f(f).unwrap().f_out - 1e-15);
        }
    }

    proptest! {
        #[test]
        fn f_forms_match_p_forms(f in 0.25f64..=1.0) {
            let p = p_from_fidelity(f).unwrap();
            let a = pcs_x_point_p(p, p).unwrap();
            let b = pcs_x_point_f(f).unwrap();
            prop_assert!((a.rate - b.rate).abs() < 1e-10);
            prop_assert!((a.f_out - b.f_out).abs() < 1e-10);
            let a = pcs_xz_point_p(p, p).unwrap();
            let b = pcs_xz_point_f(f).unwrap();
            prop_assert!((a.rate - b.rate).abs() < 1e-10);
            prop_assert!((a.f_out - b.f_out).abs() < 1e-10);
            prop_assert!((a.f_in - f).abs() < 1e-12);
        }

        #[test]
        fn outputs_are_probabilities(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            for s in [pcs_x_point_p(p1, p2).unwrap(), pcs_xz_point_p(p1, p2).unwrap()] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&s.rate));
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s.f_out));
            }
            let (c, f) = single_check_half_channel(p1).unwrap();
            prop_assert!((0.0..=1.0).contains(&c) && (0.0..=1.0 + 1e-12).contains(&f));
        }
    }
}
