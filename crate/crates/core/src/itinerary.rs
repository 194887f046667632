//! Expanding itineraries: successor steps and chains, the sweeping word and
//! expanding fixed points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_maps::{FiberMapPair, MAX_ITER};
use crate::spectrum::{self, PeriodicOrbit, NEUTRAL_BAND, RESIDUAL_TOL};
use crate::symbolic::Word;

/// Slack for interval membership at fundamental-domain endpoints.
pub const BAND_TOL: f64 = 1e-10;
/// Safety cap on chain lengths and covering loops.
const MAX_STEPS: usize = 10_000;

/// A closed interval `[lo, hi]` in `[0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        if lo <= hi {
            Interval { lo, hi }
        } else {
            Interval { lo: hi, hi: lo }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_trivial(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `other ⊂ self` up to `tol`.
    pub fn contains(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    pub fn contains_point(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `f_[word](J)`, by transporting the endpoints.
pub fn image(pair: &FiberMapPair, word: &[u8], j: Interval) -> Interval {
    Interval::new(pair.compose_value(word, j.lo), pair.compose_value(word, j.hi))
}

/// `[f0^{-2}(b0), b0]`, where successor steps start.
pub fn band(pair: &FiberMapPair) -> Interval {
    Interval::new(pair.band_lo(), pair.params.b0)
}

/// `[f0^{-2}(b0), f0^{-1}(b0)]`, the fundamental domain every chain covers.
pub fn d_hat(pair: &FiberMapPair) -> Interval {
    Interval::new(pair.band_lo(), pair.params.a0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessorStep {
    pub word: Word,
    pub n: usize,
    pub m: usize,
    pub source: Interval,
    pub image: Interval,
    pub min_deriv: f64,
    pub max_deriv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessorChain {
    pub steps: Vec<SuccessorStep>,
    pub i_j: usize,
    pub final_interval: Interval,
}

impl SuccessorChain {
    /// The expanding sequence `xi(J)`: all step words in order.
    pub fn word(&self) -> Word {
        let mut w = Word::empty();
        for s in &self.steps {
            w.extend_from(&s.word);
        }
        w
    }

    /// The upper bound on the chain length from `kappa`-growth.
    pub fn length_bound(pair: &FiberMapPair, j: Interval) -> usize {
        let b = band(pair).width();
        ((b / j.width()).ln() / pair.params.kappa().ln()).ceil().max(0.0) as usize + 1
    }
}

fn check_in_band(pair: &FiberMapPair, j: Interval) -> Result<()> {
    let b = band(pair);
    if j.is_trivial() {
        return Err(Error::Precondition(format!("J={j} is trivial")));
    }
    if !b.contains(&j, BAND_TOL) {
        return Err(Error::Precondition(format!("J={j} is not inside the band {b}")));
    }
    Ok(())
}

fn push_zeros(pair: &FiberMapPair, j: Interval) -> Interval {
    Interval::new(pair.f0(j.lo), pair.f0(j.hi))
}

/// One expanded successor `0^n 1 0^m` of `J ⊂ [f0^{-2}(b0), b0]`.
pub fn expanding_step(pair: &FiberMapPair, j: Interval) -> Result<SuccessorStep> {
    check_in_band(pair, j)?;
    let p = &pair.params;
    let mut cur = j;
    let mut n = 0;
    loop {
        cur = push_zeros(pair, cur);
        n += 1;
        if cur.lo >= p.a1 - BAND_TOL && cur.hi < 1.0 {
            break;
        }
        if n > MAX_ITER || cur.lo >= 1.0 {
            return Err(Error::Internal(format!("J={j} never lands in [a1, 1)")));
        }
    }
    let mut cur = image(pair, &[1], cur);
    if !(cur.lo > 0.0 && cur.hi < p.a0 + BAND_TOL) {
        return Err(Error::Validation(format!("J' = {cur} is not inside (0, a0)")));
    }
    let i0 = Interval::new(p.a0, p.b0);
    let mut m = 0;
    while !(cur.hi >= i0.lo - BAND_TOL && cur.lo <= i0.hi + BAND_TOL) {
        cur = push_zeros(pair, cur);
        m += 1;
        if m > MAX_ITER {
            return Err(Error::Internal("J' never returns to I0".into()));
        }
    }
    if m == 0 {
        return Err(Error::Validation(format!(
            "m(J)=0 for J={j}; the fundamental domains are malformed for this family"
        )));
    }
    let mut word = Word::zeros(n);
    word.push(1);
    word.push_run(0, m);
    let img = image(pair, &word, j);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in crate::fiber_maps::grid(j.lo, j.hi, j.width() / 99.0) {
        let d = pair.compose(&word, x).log_abs_deriv.exp();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok(SuccessorStep { word, n, m, source: j, image: img, min_deriv: lo, max_deriv: hi })
}

/// Successor steps until the image leaves `[f0^{-2}(b0), b0]`.
pub fn successor_chain(pair: &FiberMapPair, j: Interval) -> Result<SuccessorChain> {
    check_in_band(pair, j)?;
    let b = band(pair);
    let mut steps = Vec::new();
    let mut cur = j;
    loop {
        let step = expanding_step(pair, cur)?;
        cur = step.image;
        steps.push(step);
        if !b.contains(&cur, BAND_TOL) || cur.is_trivial() {
            break;
        }
        if steps.len() > MAX_STEPS {
            return Err(Error::Internal(format!("successor chain of J={j} does not leave the band")));
        }
    }
    let d = d_hat(pair);
    if !cur.contains(&d, BAND_TOL) {
        return Err(Error::Internal(format!("final interval {cur} does not cover {d}")));
    }
    Ok(SuccessorChain { i_j: steps.len(), steps, final_interval: cur })
}

/// Word `w = 0^m 1 0^k xi` with `f_[w](H) ⊇ [f0^{-2}(b0), f0^{-1}(b0)]`.
pub fn sweep(pair: &FiberMapPair, h: Interval) -> Result<Word> {
    if h.is_trivial() {
        return Err(Error::Precondition(format!("H={h} is degenerate")));
    }
    if !(h.lo > 0.0 && h.hi < 1.0) {
        return Err(Error::Precondition(format!("H={h} touches {{0,1}}")));
    }
    let b = band(pair);
    let mut m = 0;
    let mut cur = h;
    let k_int = loop {
        let k = image(pair, &[1], cur);
        if k.lo > 0.0 && k.hi < b.lo {
            break k;
        }
        cur = push_zeros(pair, cur);
        m += 1;
        if m > MAX_ITER || cur.hi >= 1.0 {
            return Err(Error::Internal(format!("H={h} cannot be pushed below the band")));
        }
    };
    let mut cur = k_int;
    let mut k = 0;
    while !(cur.hi > b.lo && cur.lo < b.hi) {
        cur = push_zeros(pair, cur);
        k += 1;
        if k > MAX_ITER {
            return Err(Error::Internal("pushed interval never meets the band".into()));
        }
    }
    let j = cur.intersect(&b).expect("meets the band");
    let chain = successor_chain(pair, j)?;
    let mut w = Word::zeros(m);
    w.push(1);
    w.push_run(0, k);
    w.extend_from(&chain.word());
    let d = d_hat(pair);
    let img = image(pair, &w, h);
    if !img.contains(&d, BAND_TOL) {
        return Err(Error::Internal(format!("sweep image {img} misses {d}")));
    }
    Ok(w)
}

/// The expanding fixed point `q*_J` of `f_[xi(J)]` in `J`.
pub fn expanding_fixed_point(pair: &FiberMapPair, j: Interval) -> Result<PeriodicOrbit> {
    let chain = successor_chain(pair, j)?;
    let w = chain.word();
    spectrum::expanding_orbit_in(pair, &w, j).ok_or_else(|| {
        Error::Internal(format!(
            "f_[xi(J)](x) - x has no expanding sign change in J={j}; final interval {}",
            chain.final_interval
        ))
    })
}

/// Word `r` with `f_[r](start) ⊇ target`: push right with `f0`, jump with
/// `f1` once the jump lands left of the target, repeat until some push covers it.
pub fn covering_return_word(pair: &FiberMapPair, start: Interval, target: Interval) -> Result<Word> {
    let jump = jump_point(pair);
    let mut w = Word::empty();
    let mut cur = start;
    for _ in 0..64 {
        loop {
            if cur.lo <= target.lo && cur.hi >= target.hi {
                return Ok(w);
            }
            if cur.lo > target.lo || cur.hi >= 1.0 {
                break;
            }
            cur = push_zeros(pair, cur);
            w.push(0);
        }
        let mut guard = 0;
        while !(pair.f1(cur.lo) < target.lo) || (cur.lo < jump && pair.f0(cur.hi) < 1.0 - BAND_TOL) {
            cur = push_zeros(pair, cur);
            w.push(0);
            guard += 1;
            if guard > MAX_ITER {
                return Err(Error::Internal("covering push never passes the target".into()));
            }
        }
        if cur.hi >= 1.0 {
            return Err(Error::Internal("covering interval collapsed onto 1".into()));
        }
        cur = image(pair, &[1], cur);
        w.push(1);
    }
    Err(Error::NotFound { what: format!("covering word for {target}"), best: cur.width() })
}

// Where a jump by f1 gains the most fundamental domains: argmax of c1 v(u) / v(f1 u), v(x) = f0(x) - x.
fn jump_point(pair: &FiberMapPair) -> f64 {
    let v = |x: f64| pair.f0(x) - x;
    let mut best = (f64::NEG_INFINITY, 0.5);
    for k in 1..1000 {
        let u = k as f64 * 1e-3;
        let r = pair.params.c1 * v(u) / v(pair.f1(u));
        if r > best.0 {
            best = (r, u);
        }
    }
    best.1
}

/// A periodic point within `eps` of `x` whose multiplier exceeds 1.
pub fn periodic_point_near(pair: &FiberMapPair, x: f64, eps: f64) -> Result<PeriodicOrbit> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps={eps} must be positive")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Parameter(format!("x={x} must lie in (0,1)")));
    }
    let h = Interval::new((x - eps).max(0.5 * x), (x + eps).min(0.5 * (1.0 + x)));
    let s = sweep(pair, h)?;
    let r = covering_return_word(pair, d_hat(pair), h)?;
    let w = s.concat(&r);
    let img = image(pair, &w, h);
    if !img.contains(&h, BAND_TOL) {
        return Err(Error::Internal(format!("f_[w](H) = {img} does not cover H = {h}")));
    }
    let candidates = [w.clone(), w.repeat(2)];
    for cand in &candidates {
        if let Some(o) = spectrum::expanding_orbit_in(pair, cand, h) {
            if (o.fix - x).abs() <= eps && o.multiplier > 1.0 + NEUTRAL_BAND && o.residual(pair) <= RESIDUAL_TOL {
                return Ok(o);
            }
        }
    }
    Err(Error::Internal(format!("no expanding fixed point of the covering word in H={h}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_of_f1_on_unit_interval() {
        let pair = FiberMapPair::canonical();
        let i = image(&pair, &[1], Interval::new(0.0, 1.0));
        assert_eq!(i, Interval::new(0.0, 0.34));
        assert_eq!(image(&pair, &[], Interval::new(0.2, 0.3)), Interval::new(0.2, 0.3));
        assert_eq!(image(&pair, &[0], Interval::new(0.0, 1.0)), Interval::new(0.0, 1.0));
    }

    #[test]
    fn sweep_rejects_bad_intervals() {
        let pair = FiberMapPair::canonical();
        assert!(sweep(&pair, Interval::new(0.5, 0.5)).is_err());
        assert!(sweep(&pair, Interval::new(0.0, 0.5)).is_err());
    }

    #[test]
    fn expanding_step_rejects_outside_band() {
        let pair = FiberMapPair::canonical();
        assert!(matches!(expanding_step(&pair, Interval::new(0.5, 0.6)), Err(Error::Precondition(_))));
    }
}
