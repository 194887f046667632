//! Periodic-orbit pressure `P_n(t) = (1/n) log sum |f_[w]'(p)|^{-t}` and the
//! first-order phase transition at `t_Q`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber_maps::FiberMapPair;
use crate::spectrum::{enumerate_orbits, gap_from_orbits, GapEstimate, PeriodicOrbit};
use crate::symbolic::Word;

/// Terms per partial sum. Partial sums are merged in index order, so the
/// result does not depend on the number of worker threads.
const CHUNK: usize = 1024;
/// Step of the refined grid for `t_Q`.
pub const REFINE_STEP: f64 = 1e-3;
/// Slack on the lower end of the admissible `t_Q` window.
pub const TQ_SLACK: f64 = 0.1;
pub const ENTROPY_NOTE: &str = "h(F) is taken as log 2 (full-shift factor); it is not computed from the fiber maps";

/// `ln |multiplier|` of every fixed point of every word of one length.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub n: usize,
    pub orbits: Vec<PeriodicOrbit>,
    log_mult: Vec<f64>,
    excluded: Vec<bool>,
}

impl OrbitTable {
    pub fn build(pair: &FiberMapPair, n: usize) -> Result<OrbitTable> {
        if n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        Ok(OrbitTable::from_orbits(n, enumerate_orbits(pair, n..=n)))
    }

    /// Keeps the orbits whose word has length `n`.
    pub fn from_orbits(n: usize, orbits: impl IntoIterator<Item = PeriodicOrbit>) -> OrbitTable {
        let orbits: Vec<PeriodicOrbit> = orbits.into_iter().filter(|o| o.word.len() == n).collect();
        let log_mult = orbits.iter().map(|o| o.exponent * n as f64).collect();
        let excluded = orbits.iter().map(|o| o.is_excluded()).collect();
        OrbitTable { n, orbits, log_mult, excluded }
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    /// `P_n(t)` over all orbits.
    pub fn pressure(&self, t: f64) -> f64 {
        log_sum_exp(&self.log_mult, |l| -t * l) / self.n as f64
    }

    /// Pressure over the orbits outside the excluded set.
    pub fn pressure_rest(&self, t: f64) -> f64 {
        let rest: Vec<f64> = self.log_mult.iter().zip(&self.excluded).filter(|(_, &e)| !e).map(|(&l, _)| l).collect();
        log_sum_exp(&rest, |l| -t * l) / self.n as f64
    }

    /// Gibbs weights `|f_[w]'(p)|^{-t} / Z_n(t)`.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let z = self.pressure(t) * self.n as f64;
        self.log_mult.iter().map(|&l| (-t * l - z).exp()).collect()
    }

    /// Weighted mean exponent; equals `-P_n'(t)`.
    pub fn mean_exponent(&self, t: f64) -> f64 {
        let z = self.pressure(t) * self.n as f64;
        chunked_sum(&self.log_mult, |l| (-t * l - z).exp() * l) / self.n as f64
    }
}

fn chunked_sum(xs: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = xs.par_chunks(CHUNK).map(|c| c.iter().map(|&x| f(x)).sum::<f64>()).collect();
    parts.into_iter().sum()
}

/// `log sum exp(f(x))`, stable against overflow.
pub fn log_sum_exp(xs: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let m = xs.iter().map(|&x| f(x)).fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + chunked_sum(xs, |x| (f(x) - m).exp()).ln()
}

pub fn pressure(pair: &FiberMapPair, t: f64, n: usize) -> Result<f64> {
    Ok(OrbitTable::build(pair, n)?.pressure(t))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kink {
    pub t_q: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureCurve {
    pub n: usize,
    pub t_grid: Vec<f64>,
    /// `P_n` at each grid point.
    pub values: Vec<f64>,
    /// Forward differences of `values`; one fewer than the grid.
    pub slopes: Vec<f64>,
    /// `max(-t log beta, P_n restricted to non-excluded orbits)`.
    pub envelope: Vec<f64>,
    pub envelope_slopes: Vec<f64>,
    pub theta: f64,
    pub kink: Option<Kink>,
}

fn grid(t_lo: f64, t_hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| if i == steps { t_hi } else { t_lo + (t_hi - t_lo) * i as f64 / steps as f64 }).collect()
}

fn diffs(t: &[f64], v: &[f64]) -> Vec<f64> {
    t.windows(2).zip(v.windows(2)).map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0])).collect()
}

fn envelope_at(table: &OrbitTable, log_beta: f64, t: f64) -> f64 {
    (-t * log_beta).max(table.pressure_rest(t))
}

/// Curve from a prebuilt table. The kink is the interior grid point with the
/// largest jump in envelope slope, reported when the jump reaches `theta`.
pub fn curve_from_table(
    table: &OrbitTable,
    log_beta: f64,
    t_lo: f64,
    t_hi: f64,
    steps: usize,
    theta: f64,
) -> Result<PressureCurve> {
    if !(t_lo < t_hi) {
        return Err(Error::Parameter(format!("t_lo={t_lo} must be below t_hi={t_hi}")));
    }
    if steps < 8 {
        return Err(Error::Parameter(format!("steps={steps} must be at least 8")));
    }
    if table.is_empty() {
        return Err(Error::Parameter("empty orbit table".into()));
    }
    let t_grid = grid(t_lo, t_hi, steps);
    let values: Vec<f64> = t_grid.iter().map(|&t| table.pressure(t)).collect();
    let envelope: Vec<f64> = t_grid.iter().map(|&t| envelope_at(table, log_beta, t)).collect();
    let slopes = diffs(&t_grid, &values);
    let envelope_slopes = diffs(&t_grid, &envelope);
    let kink = (1..steps)
        .map(|i| (i, envelope_slopes[i] - envelope_slopes[i - 1]))
        .fold(None, |best: Option<(usize, f64)>, (i, j)| match best {
            Some((_, bj)) if bj >= j => best,
            _ => Some((i, j)),
        })
        .filter(|&(_, j)| j >= theta)
        .map(|(i, jump)| Kink { t_q: t_grid[i], d_minus: envelope_slopes[i - 1], d_plus: envelope_slopes[i], jump });
    Ok(PressureCurve { n: table.n, t_grid, values, slopes, envelope, envelope_slopes, theta, kink })
}

/// Default threshold: half the expected jump `log beta - log beta_tilde_n`.
pub fn default_theta(gap: &GapEstimate) -> f64 {
    0.5 * gap.margin
}

pub fn pressure_curve(pair: &FiberMapPair, t_lo: f64, t_hi: f64, steps: usize, n: usize) -> Result<PressureCurve> {
    let orbits = enumerate_orbits(pair, 1..=n);
    let gap = gap_from_orbits(pair, &orbits, n);
    let table = OrbitTable::from_orbits(n, orbits);
    curve_from_table(&table, gap.log_beta, t_lo, t_hi, steps, default_theta(&gap))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseControls {
    /// Coarse window; `None` picks `[2 t_bound - 1, 1]`.
    pub window: Option<(f64, f64)>,
    pub steps: usize,
    /// Kink threshold; `None` uses half the gap margin.
    pub theta: Option<f64>,
    pub slack: f64,
}

impl Default for PhaseControls {
    fn default() -> PhaseControls {
        PhaseControls { window: None, steps: 400, theta: None, slack: TQ_SLACK }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KinkReport {
    pub n: usize,
    pub detected: bool,
    /// Crossing of `-t log beta` and the non-excluded pressure, rounded to the refined grid.
    pub t_q: Option<f64>,
    pub t_crossing: Option<f64>,
    pub d_minus: Option<f64>,
    pub d_plus: Option<f64>,
    pub jump: Option<f64>,
    /// Slope of the untruncated `P_n` at `t_q`; smooth at finite `n`.
    pub smooth_slope: Option<f64>,
    pub theta: f64,
    pub log_beta: f64,
    pub log_beta_tilde: f64,
    pub entropy: f64,
    pub entropy_note: String,
    /// `-h(F) / (log beta - log beta_tilde_n)`.
    pub t_bound: f64,
    pub slack: f64,
    pub in_window: Option<bool>,
    pub gap: GapEstimate,
    pub curve: PressureCurve,
}

fn crossing(table: &OrbitTable, log_beta: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let g = |t: f64| -t * log_beta - table.pressure_rest(t);
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn phase_transition(pair: &FiberMapPair, n: usize, controls: &PhaseControls) -> Result<KinkReport> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let orbits = enumerate_orbits(pair, 1..=n);
    let gap = gap_from_orbits(pair, &orbits, n);
    let table = OrbitTable::from_orbits(n, orbits);
    phase_transition_from(&table, gap, controls)
}

pub fn phase_transition_from(table: &OrbitTable, gap: GapEstimate, controls: &PhaseControls) -> Result<KinkReport> {
    let log_beta = gap.log_beta;
    let log_bt = gap.beta_tilde_n.ln();
    let entropy = std::f64::consts::LN_2;
    let t_bound = -entropy / gap.margin;
    let (t_lo, t_hi) = controls.window.unwrap_or((2.0 * t_bound - 1.0, 1.0));
    let theta = controls.theta.unwrap_or_else(|| default_theta(&gap));
    let curve = curve_from_table(table, log_beta, t_lo, t_hi, controls.steps, theta)?;
    let mut report = KinkReport {
        n: table.n,
        detected: false,
        t_q: None,
        t_crossing: None,
        d_minus: None,
        d_plus: None,
        jump: None,
        smooth_slope: None,
        theta,
        log_beta,
        log_beta_tilde: log_bt,
        entropy,
        entropy_note: ENTROPY_NOTE.into(),
        t_bound,
        slack: controls.slack,
        in_window: None,
        gap,
        curve,
    };
    let Some(coarse) = report.curve.kink.clone() else { return Ok(report) };
    let h = REFINE_STEP;
    let star = crossing(table, log_beta, t_lo, t_hi).unwrap_or(coarse.t_q);
    let t_q = (star / h).round() * h;
    let env = |t: f64| envelope_at(table, log_beta, t);
    let d_minus = (env(star) - env(star - h)) / h;
    let d_plus = (env(star + h) - env(star)) / h;
    report.detected = true;
    report.t_q = Some(t_q);
    report.t_crossing = Some(star);
    report.d_minus = Some(d_minus);
    report.d_plus = Some(d_plus);
    report.jump = Some(d_plus - d_minus);
    report.smooth_slope = Some(-table.mean_exponent(t_q));
    report.in_window = Some(t_q >= t_bound - controls.slack && t_q < 0.0);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominantOrbit {
    pub word: Word,
    pub fix: f64,
    pub exponent: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubgradientCase {
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubgradientReport {
    pub t: f64,
    pub n: usize,
    pub pressure: f64,
    /// Orbits carrying the most Gibbs weight, heaviest first.
    pub dominant: Vec<DominantOrbit>,
    /// Gibbs-weighted exponent; `-P_n'(t)`.
    pub chi: f64,
    /// `P_n(t+s) >= P_n(t) - s chi`.
    pub cases: Vec<SubgradientCase>,
    /// Same inequality with the heaviest single orbit's exponent in place of `chi`.
    pub cases_top_orbit: Vec<SubgradientCase>,
    pub all_hold: bool,
}

pub const SUBGRADIENT_STEPS: [f64; 4] = [-0.1, -0.01, 0.01, 0.1];
const SUBGRADIENT_TOL: f64 = 1e-10;

pub fn subgradient_from(table: &OrbitTable, t: f64) -> SubgradientReport {
    let p = table.pressure(t);
    let chi = table.mean_exponent(t);
    let w = table.weights(t);
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let dominant: Vec<DominantOrbit> = order
        .iter()
        .take(3)
        .map(|&i| {
            let o = &table.orbits[i];
            DominantOrbit { word: o.word.clone(), fix: o.fix, exponent: o.exponent, weight: w[i] }
        })
        .collect();
    let cases_for = |c: f64| -> Vec<SubgradientCase> {
        SUBGRADIENT_STEPS
            .iter()
            .map(|&s| {
                let lhs = table.pressure(t + s);
                let rhs = p - s * c;
                SubgradientCase { s, lhs, rhs, holds: lhs >= rhs - SUBGRADIENT_TOL }
            })
            .collect()
    };
    let cases = cases_for(chi);
    let cases_top_orbit = cases_for(dominant[0].exponent);
    let all_hold = cases.iter().all(|c| c.holds);
    SubgradientReport { t, n: table.n, pressure: p, dominant, chi, cases, cases_top_orbit, all_hold }
}

pub fn subgradient_check(pair: &FiberMapPair, t: f64, n: usize) -> Result<SubgradientReport> {
    Ok(subgradient_from(&OrbitTable::build(pair, n)?, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_survives_large_arguments() {
        let xs = [1000.0, 1000.0];
        assert!((log_sum_exp(&xs, |x| x) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[], |x| x), f64::NEG_INFINITY);
    }

    #[test]
    fn curve_rejects_short_grids() {
        let pair = FiberMapPair::canonical();
        let table = OrbitTable::build(&pair, 3).unwrap();
        assert!(curve_from_table(&table, 0.2, -1.0, 1.0, 4, 0.1).is_err());
        assert!(curve_from_table(&table, 0.2, 1.0, -1.0, 10, 0.1).is_err());
    }
}
