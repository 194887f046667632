//! The skew product `F(xs, xu, x) = (Phi(xs, xu), f_{xi_0}(x))` over an affine
//! two-branch horseshoe on the unit square.
//!
//! Branch 0 lives on `xu <= 1/sigma_u` and fixes `(0,0)`; branch 1 lives on
//! `xu >= 1 - 1/sigma_u` and fixes `(1,1)`. `xu` codes the future, `xs` the past.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{classify_fiber, AdmissibleDomain};
use crate::error::{Error, Result};
use crate::fiber_maps::{FiberMapPair, MAX_ITER};
use crate::spectrum::{p_hat, PeriodicOrbit, Stability};
use crate::symbolic::{SeqSpec, Word};

pub const DEFAULT_SIGMA_S: f64 = 1.0 / 3.0;
pub const DEFAULT_SIGMA_U: f64 = 3.0;
/// Slack when deciding which rectangle a base point lies in.
const RECT_TOL: f64 = 1e-12;
/// Per-step defect allowed when verifying a lifted orbit.
pub const RETURN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeModel {
    pub sigma_s: f64,
    pub sigma_u: f64,
}

impl HorseshoeModel {
    /// Checks the Markov layout and domination over `pair`.
    pub fn new(sigma_s: f64, sigma_u: f64, pair: &FiberMapPair) -> Result<HorseshoeModel> {
        if !(sigma_s > 0.0 && sigma_s < 0.5) {
            return Err(Error::Parameter(format!("sigma_s={sigma_s} must lie in (0, 1/2)")));
        }
        if !(sigma_u > 2.0) {
            return Err(Error::Parameter(format!("sigma_u={sigma_u} must exceed 2")));
        }
        let p = &pair.params;
        if !(sigma_u > p.beta) {
            return Err(Error::Precondition(format!("sigma_u={sigma_u} does not dominate beta={}", p.beta)));
        }
        let weakest = p.lambda.min(p.gamma_prime);
        if !(sigma_s < weakest) {
            return Err(Error::Precondition(format!(
                "sigma_s={sigma_s} is not below min(lambda, gamma')={weakest}"
            )));
        }
        Ok(HorseshoeModel { sigma_s, sigma_u })
    }

    pub fn standard(pair: &FiberMapPair) -> Result<HorseshoeModel> {
        HorseshoeModel::new(DEFAULT_SIGMA_S, DEFAULT_SIGMA_U, pair)
    }

    /// Rectangle index of a base point, if any.
    pub fn rectangle(&self, xu: f64) -> Option<u8> {
        let w = 1.0 / self.sigma_u;
        if (-RECT_TOL..=w + RECT_TOL).contains(&xu) {
            Some(0)
        } else if (1.0 - w - RECT_TOL..=1.0 + RECT_TOL).contains(&xu) {
            Some(1)
        } else {
            None
        }
    }

    pub fn phi(&self, symbol: u8, xs: f64, xu: f64) -> (f64, f64) {
        let (s, u) = (self.sigma_s, self.sigma_u);
        let b = symbol as f64;
        ((s * xs + b * (1.0 - s)).clamp(0.0, 1.0), (u * xu - b * (u - 1.0)).clamp(0.0, 1.0))
    }

    pub fn phi_inv(&self, symbol: u8, xs: f64, xu: f64) -> (f64, f64) {
        let (s, u) = (self.sigma_s, self.sigma_u);
        let b = symbol as f64;
        (((xs - b * (1.0 - s)) / s).clamp(0.0, 1.0), ((xu + b * (u - 1.0)) / u).clamp(0.0, 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub xs: f64,
    pub xu: f64,
    pub x: f64,
}

impl Point3 {
    pub fn new(xs: f64, xu: f64, x: f64) -> Result<Point3> {
        for (name, v) in [("xs", xs), ("xu", xu), ("x", x)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name}={v} outside [0,1]")));
            }
        }
        Ok(Point3 { xs, xu, x })
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        (self.xs - other.xs).abs().max((self.xu - other.xu).abs()).max((self.x - other.x).abs())
    }
}

/// `P = (theta, 1)`.
pub fn point_p() -> Point3 {
    Point3 { xs: 0.0, xu: 0.0, x: 1.0 }
}

/// `Q = (theta, 0)`.
pub fn point_q() -> Point3 {
    Point3 { xs: 0.0, xu: 0.0, x: 0.0 }
}

/// `P_hat` over the fixed point of branch 1.
pub fn point_p_hat(pair: &FiberMapPair) -> Point3 {
    Point3 { xs: 1.0, xu: 1.0, x: p_hat(pair) }
}

pub fn step(model: &HorseshoeModel, pair: &FiberMapPair, p: Point3) -> Result<Point3> {
    let r = model.rectangle(p.xu).ok_or(Error::Escaped { step: 0 })?;
    let (xs, xu) = model.phi(r, p.xs, p.xu);
    Ok(Point3 { xs, xu, x: pair.step(r, p.x).0 })
}

/// Inverse step; the branch is read off `xs`.
pub fn step_back(model: &HorseshoeModel, pair: &FiberMapPair, p: Point3) -> Result<Point3> {
    let s = model.sigma_s;
    let r = if p.xs <= s + RECT_TOL {
        0
    } else if p.xs >= 1.0 - s - RECT_TOL {
        1
    } else {
        return Err(Error::Escaped { step: 0 });
    };
    let (xs, xu) = model.phi_inv(r, p.xs, p.xu);
    let x = match r {
        0 => pair.f0_inv(p.x),
        _ => pair.invert(crate::fiber_maps::MapKind::F1, p.x)?,
    };
    Ok(Point3 { xs, xu, x })
}

/// `sum_k a_k r^k` over bits `a_k = bit(start + dir k)` where the bits become
/// periodic with period `period` after `core` terms.
fn coded_sum(seq: &SeqSpec, start: i64, dir: i64, core: usize, period: usize, r: f64) -> f64 {
    let bit = |k: usize| seq.bit(start + dir * k as i64) as f64;
    let head: f64 = (0..core).map(|k| bit(k) * r.powi(k as i32)).sum();
    let block: f64 = (0..period).map(|k| bit(core + k) * r.powi(k as i32)).sum();
    head + r.powi(core as i32) * block / (1.0 - r.powi(period as i32))
}

/// Base point whose itinerary is `seq`; exact geometric series for the periodic tails.
pub fn code_point(model: &HorseshoeModel, seq: &SeqSpec) -> (f64, f64) {
    let (s, u) = (model.sigma_s, model.sigma_u);
    let xu = (u - 1.0) / u * coded_sum(seq, 0, 1, seq.right_core.len(), seq.right_tail.period(), 1.0 / u);
    let xs = (1.0 - s) * coded_sum(seq, -1, -1, seq.left_core.len(), seq.left_tail.period(), s);
    (xs.clamp(0.0, 1.0), xu.clamp(0.0, 1.0))
}

/// Symbols `xi_lo ..= xi_hi` read back from a base point.
pub fn itinerary(model: &HorseshoeModel, xs: f64, xu: f64, lo: i64, hi: i64) -> Result<Word> {
    let mut fwd = Vec::new();
    let mut u = xu;
    for _ in 0..=hi.max(-1) {
        let r = model.rectangle(u).ok_or(Error::Escaped { step: fwd.len() })?;
        fwd.push(r);
        u = model.phi(r, 0.0, u).1;
    }
    let mut back = Vec::new();
    let mut x = xs;
    let s = model.sigma_s;
    for _ in 0..(-lo).max(0) {
        let r = if x <= s + RECT_TOL {
            0
        } else if x >= 1.0 - s - RECT_TOL {
            1
        } else {
            return Err(Error::Escaped { step: back.len() });
        };
        back.push(r);
        x = model.phi_inv(r, x, 0.0).0;
    }
    let bits = (lo..=hi).map(|i| if i >= 0 { fwd[i as usize] } else { back[(-i - 1) as usize] }).collect();
    Word::new(bits)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftedOrbit {
    pub word: Word,
    pub fiber_orbit: PeriodicOrbit,
    pub base: (f64, f64),
    /// 1 for a fiber-contracting orbit, 2 for a fiber-expanding one.
    pub index: Option<u8>,
    /// Largest one-step defect along the closed orbit.
    pub return_defect: f64,
    pub warning: Option<String>,
}

/// Lifts a fiber periodic orbit to the saddle of `F` over the periodic base point.
/// The base coordinate `xu` is expanded by `sigma_u` each step, so the orbit is
/// checked step by step against the exact coded points instead of by iterating
/// from the start.
pub fn lift_periodic(model: &HorseshoeModel, pair: &FiberMapPair, orbit: &PeriodicOrbit) -> Result<LiftedOrbit> {
    if orbit.word.is_empty() {
        return Err(Error::Parameter("orbit has an empty word".into()));
    }
    let mut seq = SeqSpec::periodic(&orbit.word)?;
    let base = code_point(model, &seq);
    let mut cur = Point3 { xs: base.0, xu: base.1, x: orbit.fix };
    let mut defect: f64 = 0.0;
    for k in 0..orbit.word.len() {
        let next = step(model, pair, cur).map_err(|_| Error::Escaped { step: k })?;
        seq = seq.shift();
        let (xs, xu) = code_point(model, &seq);
        let expected_x = if k + 1 == orbit.word.len() { orbit.fix } else { next.x };
        defect = defect.max(next.dist(&Point3 { xs, xu, x: expected_x }));
        cur = Point3 { xs, xu, x: next.x };
    }
    if defect > RETURN_TOL {
        return Err(Error::Validation(format!("lifted orbit of {} does not close: defect {defect:e}", orbit.word)));
    }
    let (index, warning) = match orbit.stability {
        Stability::Repelling => (Some(2), None),
        Stability::Attracting => (Some(1), None),
        Stability::Neutral => (None, Some(format!("neutral fiber multiplier {}; index undefined", orbit.multiplier))),
    };
    Ok(LiftedOrbit { word: orbit.word.clone(), fiber_orbit: orbit.clone(), base, index, return_defect: defect, warning })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spine {
    pub seq: SeqSpec,
    pub xs: f64,
    pub xu: f64,
    pub domain: AdmissibleDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpineRecord {
    pub seq: String,
    pub xs: f64,
    pub xu: f64,
    pub lo: f64,
    pub hi: f64,
    pub status: String,
}

impl Spine {
    pub fn record(&self) -> SpineRecord {
        SpineRecord {
            seq: self.seq.to_string(),
            xs: self.xs,
            xu: self.xu,
            lo: self.domain.interval.lo,
            hi: self.domain.interval.hi,
            status: self.domain.status.as_str().into(),
        }
    }
}

pub fn spine(model: &HorseshoeModel, pair: &FiberMapPair, seq: &SeqSpec, max_depth: usize, width_tol: f64) -> Result<Spine> {
    let (xs, xu) = code_point(model, seq);
    Ok(Spine { seq: seq.clone(), xs, xu, domain: classify_fiber(pair, seq, max_depth, width_tol)? })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleCheck {
    pub name: String,
    pub passed: bool,
    /// Worst deviation seen.
    pub value: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub checks: Vec<CycleCheck>,
    pub all_pass: bool,
}

pub const CYCLE_SAMPLES: usize = 20;
const CONVERGE_TOL: f64 = 1e-9;

fn iterate_until(mut p: Point3, mut f: impl FnMut(Point3) -> Result<Point3>, done: impl Fn(&Point3) -> bool) -> Result<(Point3, usize, bool)> {
    let mut monotone = true;
    let mut dir = 0.0;
    for k in 0..MAX_ITER {
        if done(&p) {
            return Ok((p, k, monotone));
        }
        let q = f(p)?;
        let d = q.x - p.x;
        if d != 0.0 {
            if dir == 0.0 {
                dir = d.signum();
            } else if d.signum() != dir {
                monotone = false;
            }
        }
        p = q;
    }
    Ok((p, MAX_ITER, monotone))
}

/// The three finite checks of the heterodimensional cycle between `P` and `Q`.
pub fn verify_cycle(model: &HorseshoeModel, pair: &FiberMapPair) -> Result<CycleReport> {
    let mut checks = Vec::new();

    let y = pair.f1(1.0);
    checks.push(CycleCheck {
        name: "f1(1)=0".into(),
        passed: y == 0.0,
        value: y.abs(),
        detail: format!("f1(1) = {y:e}"),
    });

    let xs_samples: Vec<f64> = (0..CYCLE_SAMPLES).map(|k| (k as f64 + 0.5) / CYCLE_SAMPLES as f64).collect();
    let mut worst_s: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for &x in &xs_samples {
        // Stable leaf of theta: xu = 0, any xs.
        let start = Point3 { xs: x, xu: 0.0, x };
        let (end, k, mono) = iterate_until(start, |p| step(model, pair, p), |p| 1.0 - p.x <= CONVERGE_TOL && p.xs <= CONVERGE_TOL)?;
        worst_s = worst_s.max((1.0 - end.x).max(end.xs));
        if k == MAX_ITER || !mono {
            ok = false;
            notes.push(format!("forward from x={x} stalled"));
        }
        // Unstable leaf of theta: xs = 0, any xu inside the first rectangle.
        let start = Point3 { xs: 0.0, xu: x / model.sigma_u, x };
        let (end, k, mono) = iterate_until(start, |p| step_back(model, pair, p), |p| p.x <= CONVERGE_TOL && p.xu <= CONVERGE_TOL)?;
        worst_u = worst_u.max(end.x.max(end.xu));
        if k == MAX_ITER || !mono {
            ok = false;
            notes.push(format!("backward from x={x} stalled"));
        }
    }
    checks.push(CycleCheck {
        name: "W^s(P) and W^u(Q) contain the theta segment".into(),
        passed: ok,
        value: worst_s.max(worst_u),
        detail: if notes.is_empty() {
            format!("{CYCLE_SAMPLES} fibers: forward to 1 within {worst_s:e}, backward to 0 within {worst_u:e}")
        } else {
            notes.join("; ")
        },
    });

    let mut worst: f64 = 0.0;
    let lo = 1.0 - 1.0 / model.sigma_u;
    for k in 0..=CYCLE_SAMPLES {
        let xu = lo + (1.0 - lo) * k as f64 / CYCLE_SAMPLES as f64;
        let q = step(model, pair, Point3 { xs: 0.0, xu, x: 1.0 })?;
        worst = worst.max(q.x.abs());
    }
    checks.push(CycleCheck {
        name: "W^u(P) meets W^s(Q) through the second rectangle".into(),
        passed: worst == 0.0,
        value: worst,
        detail: format!("{} points of xs=0, x=1 map to fiber height <= {worst:e}", CYCLE_SAMPLES + 1),
    });

    let all_pass = checks.iter().all(|c| c.passed);
    Ok(CycleReport { checks, all_pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub xs: f64,
    pub xu: f64,
    pub x: f64,
    pub rectangle: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// Step at which the base point left both rectangles.
    pub escaped_at: Option<usize>,
}

pub fn trajectory(model: &HorseshoeModel, pair: &FiberMapPair, start: Point3, steps: usize) -> Trajectory {
    let mut records = Vec::with_capacity(steps + 1);
    let mut p = start;
    for t in 0..=steps {
        let rectangle = model.rectangle(p.xu);
        records.push(TrajectoryRecord { t, xs: p.xs, xu: p.xu, x: p.x, rectangle });
        if rectangle.is_none() {
            return Trajectory { records, escaped_at: Some(t) };
        }
        if t < steps {
            p = step(model, pair, p).expect("rectangle checked");
        }
    }
    Trajectory { records, escaped_at: None }
}

/// Trajectories of many starting points, in input order.
pub fn trajectories(model: &HorseshoeModel, pair: &FiberMapPair, starts: &[Point3], steps: usize) -> Vec<Trajectory> {
    starts.par_iter().map(|&p| trajectory(model, pair, p, steps)).collect()
}
