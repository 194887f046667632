//! Periodic orbits of compositions, their Lyapunov exponents, the spectral
//! gap estimate and the near-zero exponent constructions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_maps::{FiberMapPair, MAX_ITER};
use crate::itinerary::{self, Interval};
use crate::symbolic::{SeqSpec, Word};

pub const DEFAULT_SCAN: usize = 2048;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const NEUTRAL_BAND: f64 = 1e-8;
/// Bound on the `m` loop of the near-zero searches.
pub const NEAR_ZERO_BUDGET: usize = 400;
/// Cells are halved at most this many times when a double root is suspected.
const MAX_REFINE: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
    Neutral,
}

impl Stability {
    pub fn of(multiplier: f64) -> Stability {
        if (multiplier - 1.0).abs() <= NEUTRAL_BAND {
            Stability::Neutral
        } else if multiplier > 1.0 {
            Stability::Repelling
        } else {
            Stability::Attracting
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub word: Word,
    pub fix: f64,
    pub multiplier: f64,
    pub exponent: f64,
    pub stability: Stability,
}

impl PeriodicOrbit {
    /// Builds the orbit record for a known fixed point of `f_[word]`.
    pub fn at(pair: &FiberMapPair, word: Word, fix: f64) -> PeriodicOrbit {
        let jet = pair.compose(&word, fix);
        let exponent = jet.log_abs_deriv / word.len() as f64;
        let multiplier = jet.log_abs_deriv.exp();
        PeriodicOrbit { word, fix, multiplier, exponent, stability: Stability::of(multiplier) }
    }

    pub fn residual(&self, pair: &FiberMapPair) -> f64 {
        (pair.compose_value(&self.word, self.fix) - self.fix).abs()
    }

    /// Belongs to the periodic realization of the exceptional set: word `0^n`, fix 0.
    pub fn is_excluded(&self) -> bool {
        self.word.iter().all(|&b| b == 0) && self.fix.abs() <= 1e-12
    }
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    if glo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    if g(hi).abs() < glo.abs() {
        hi
    } else {
        lo
    }
}

/// Roots of `f_[word](x) - x` on `[lo, hi]` from a scan with `cells` cells,
/// refined where a cell may hide a pair of roots.
pub fn fixed_points_in(
    pair: &FiberMapPair,
    word: &[u8],
    lo: f64,
    hi: f64,
    cells: usize,
) -> Vec<f64> {
    let g = |x: f64| {
        let j = pair.compose(word, x);
        (j.value - x, j.deriv() - 1.0)
    };
    let cells = cells.max(1);
    let xs: Vec<f64> = (0..=cells)
        .map(|i| if i == cells { hi } else { lo + (hi - lo) * i as f64 / cells as f64 })
        .collect();
    let vals: Vec<(f64, f64)> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..=cells {
        if vals[i].0 == 0.0 {
            roots.push(xs[i]);
        }
    }
    let mut stack: Vec<(f64, f64, (f64, f64), (f64, f64), u32)> = (0..cells)
        .map(|i| (xs[i], xs[i + 1], vals[i], vals[i + 1], 0))
        .collect();
    while let Some((a, b, ga, gb, depth)) = stack.pop() {
        if ga.0 == 0.0 || gb.0 == 0.0 {
            continue;
        }
        if (ga.0 < 0.0) != (gb.0 < 0.0) {
            roots.push(bisect(|x| pair.compose_value(word, x) - x, a, b));
            continue;
        }
        // Same sign at both ends: only an interior extremum can hide roots.
        let turns = (ga.1 < 0.0) != (gb.1 < 0.0);
        let reach = ga.1.abs().max(gb.1.abs()) * (b - a);
        if turns && ga.0.abs().min(gb.0.abs()) <= reach && depth < MAX_REFINE {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm.0 == 0.0 {
                roots.push(m);
            }
            stack.push((a, m, ga, gm, depth + 1));
            stack.push((m, b, gm, gb, depth + 1));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    roots
}

/// All periodic orbits of `f_[word]` on `[0,1]`.
pub fn fixed_points(pair: &FiberMapPair, word: &Word) -> Result<Vec<PeriodicOrbit>> {
    fixed_points_with(pair, word, DEFAULT_SCAN)
}

pub fn fixed_points_with(pair: &FiberMapPair, word: &Word, scan: usize) -> Result<Vec<PeriodicOrbit>> {
    if word.is_empty() {
        return Err(Error::Parameter("fixed_points needs a nonempty word".into()));
    }
    Ok(fixed_points_in(pair, word, 0.0, 1.0, scan)
        .into_iter()
        .map(|x| PeriodicOrbit::at(pair, word.clone(), x))
        .collect())
}

/// Orbits of all words of each length in `lengths`, in lexicographic order
/// per length. The word space is split across rayon workers; the output order
/// does not depend on the number of threads.
pub fn enumerate_orbits(pair: &FiberMapPair, lengths: std::ops::RangeInclusive<usize>) -> Vec<PeriodicOrbit> {
    let mut out = Vec::new();
    for n in lengths {
        assert!((1..=30).contains(&n), "word length {n} out of range");
        let per_word: Vec<Vec<PeriodicOrbit>> = (0..1u64 << n)
            .into_par_iter()
            .map(|i| fixed_points(pair, &Word::from_index(i, n)).expect("nonempty word"))
            .collect();
        out.extend(per_word.into_iter().flatten());
    }
    out
}

/// Source of the symbols `xi_0, xi_1, ...` for a finite-time exponent.
#[derive(Clone, Debug)]
pub enum Symbols {
    /// Repeated periodically.
    Word(Word),
    Seq(SeqSpec),
}

impl Symbols {
    pub fn first(&self, n: usize) -> Word {
        match self {
            Symbols::Word(w) => {
                assert!(!w.is_empty(), "periodic symbol source needs a nonempty word");
                Word::new(w.iter().cycle().take(n).copied().collect()).expect("bits")
            }
            Symbols::Seq(s) => s.truncate(0, n as i64 - 1),
        }
    }
}

/// `(1/n) log |(f_[xi_0 ... xi_{n-1}])'(x)|`.
pub fn finite_time_exponent(pair: &FiberMapPair, symbols: &Symbols, x: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    Ok(pair.compose(&symbols.first(n), x).log_abs_deriv / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub word: Word,
    pub fix: f64,
    pub multiplier: f64,
    pub exponent: f64,
    pub stability: Stability,
    pub excluded: bool,
}

impl From<&PeriodicOrbit> for SpectrumEntry {
    fn from(o: &PeriodicOrbit) -> SpectrumEntry {
        SpectrumEntry {
            word: o.word.clone(),
            fix: o.fix,
            multiplier: o.multiplier,
            exponent: o.exponent,
            stability: o.stability,
            excluded: o.is_excluded(),
        }
    }
}

/// Per-period exponents of all periodic orbits with word length `<= n_max`.
pub fn spectrum_sample(pair: &FiberMapPair, n_max: usize) -> Result<Vec<SpectrumEntry>> {
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    Ok(enumerate_orbits(pair, 1..=n_max).iter().map(SpectrumEntry::from).collect())
}

pub const EXCLUDED_DESCRIPTION: &str =
    "periodic orbits with word 0^n and fiber fixed point 0 (forward tail all zeros at the repeller)";

pub const GAP_NOTE: &str = "beta_tilde_n is the largest exponent over periodic data only; it is a lower bound \
for the supremum over all points and sequences, and convergence in n is not asserted";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapLevel {
    pub n: usize,
    pub beta_tilde: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEstimate {
    pub n_max: usize,
    pub log_beta: f64,
    pub beta_tilde_n: f64,
    pub margin: f64,
    pub argmax_word: Word,
    pub argmax_fix: f64,
    pub excluded: String,
    pub orbit_count: usize,
    pub max_fixed_points_per_word: usize,
    pub levels: Vec<GapLevel>,
    pub note: String,
}

/// Gap estimate from the orbit list of all words of length `1..=n_max`.
pub fn gap_from_orbits(pair: &FiberMapPair, orbits: &[PeriodicOrbit], n_max: usize) -> GapEstimate {
    let log_beta = pair.params.beta.ln();
    let mut best = f64::NEG_INFINITY;
    let mut arg: Option<&PeriodicOrbit> = None;
    let mut levels = Vec::new();
    let mut per_word = std::collections::HashMap::<&Word, usize>::new();
    let mut idx = 0;
    for n in 1..=n_max {
        while idx < orbits.len() && orbits[idx].word.len() == n {
            let o = &orbits[idx];
            *per_word.entry(&o.word).or_default() += 1;
            if !o.is_excluded() && o.exponent > best {
                best = o.exponent;
                arg = Some(o);
            }
            idx += 1;
        }
        levels.push(GapLevel { n, beta_tilde: best.exp(), margin: log_beta - best });
    }
    let (w, x) = arg.map(|o| (o.word.clone(), o.fix)).unwrap_or((Word::empty(), f64::NAN));
    GapEstimate {
        n_max,
        log_beta,
        beta_tilde_n: best.exp(),
        margin: log_beta - best,
        argmax_word: w,
        argmax_fix: x,
        excluded: EXCLUDED_DESCRIPTION.into(),
        orbit_count: orbits.len(),
        max_fixed_points_per_word: per_word.values().copied().max().unwrap_or(0),
        levels,
        note: GAP_NOTE.into(),
    }
}

pub fn gap_estimate(pair: &FiberMapPair, n_max: usize) -> Result<GapEstimate> {
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    let orbits = enumerate_orbits(pair, 1..=n_max);
    Ok(gap_from_orbits(pair, &orbits, n_max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionProfile {
    pub interval: Interval,
    pub m: Vec<usize>,
    pub ratio: Vec<f64>,
    pub tempered_rate: Vec<f64>,
}

/// `max/min` of `(f0^m)'` over `J` for `m = 0..=m_max`.
pub fn distortion_profile(pair: &FiberMapPair, j: Interval, m_max: usize) -> Result<DistortionProfile> {
    if !(j.lo > 0.0 && j.hi < 1.0) {
        return Err(Error::Precondition(format!("J={j} must lie inside (0,1)")));
    }
    let mut xs: Vec<f64> = crate::fiber_maps::grid(j.lo, j.hi, j.width() / 200.0).collect();
    let mut logs = vec![0.0; xs.len()];
    let mut prof = DistortionProfile { interval: j, m: vec![0], ratio: vec![1.0], tempered_rate: vec![0.0] };
    for m in 1..=m_max {
        for (x, l) in xs.iter_mut().zip(logs.iter_mut()) {
            let (v, d) = pair.step(0, *x);
            *l += d.ln();
            *x = v;
        }
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        prof.m.push(m);
        prof.ratio.push((hi - lo).exp());
        prof.tempered_rate.push((hi - lo) / m as f64);
    }
    Ok(prof)
}

/// The attracting fixed point of `f1`.
pub fn p_hat(pair: &FiberMapPair) -> f64 {
    let c1 = pair.params.c1;
    c1 / (1.0 + c1)
}

/// Fundamental domain `[y, f0(y)]` of `f0` centred on `p`.
pub fn fundamental_domain_around(pair: &FiberMapPair, p: f64) -> Interval {
    let y = bisect(|y| 0.5 * (y + pair.f0(y)) - p, 0.0, p);
    Interval::new(y, pair.f0(y))
}

/// Least `j >= 0` with `f0^j(K)` meeting `target`, or `None` when `K` is
/// already past it.
pub fn return_index(pair: &FiberMapPair, k: Interval, target: Interval, min_j: usize) -> Option<usize> {
    let mut cur = k;
    for j in 0..=MAX_ITER {
        if j >= min_j && cur.hi >= target.lo && cur.lo <= target.hi {
            return Some(j);
        }
        if cur.lo > target.hi {
            return None;
        }
        cur = Interval::new(pair.f0(cur.lo), pair.f0(cur.hi));
    }
    None
}

fn loop_word(m: usize, j: usize) -> Word {
    let mut w = Word::zeros(m);
    w.push(1);
    w.push_run(0, j);
    w
}

/// Largest `|f_[word]'|` on a uniform grid of `[0,1]`.
pub fn max_grid_deriv(pair: &FiberMapPair, word: &[u8], points: usize) -> f64 {
    crate::fiber_maps::grid(0.0, 1.0, 1.0 / points as f64)
        .map(|x| pair.compose(word, x).log_abs_deriv)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp()
}

/// A globally contracting periodic orbit with exponent in `(-eps, 0)`,
/// word shape `1^l 0^m 1 0^j`.
pub fn near_zero_negative(pair: &FiberMapPair, eps: f64) -> Result<PeriodicOrbit> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps={eps} must be positive")));
    }
    let j_dom = fundamental_domain_around(pair, p_hat(pair));
    // l0: f1^l([0,1]) inside J for every l >= l0.
    let mut l0 = 0;
    let mut img = Interval::new(0.0, 1.0);
    while !(img.lo >= j_dom.lo && img.hi <= j_dom.hi) {
        img = itinerary::image(pair, &[1], img);
        l0 += 1;
        if l0 > MAX_ITER {
            return Err(Error::Internal("f1 iterates never enter the domain of p_hat".into()));
        }
    }
    let mut best = f64::NEG_INFINITY;
    for m in 1..=NEAR_ZERO_BUDGET {
        let k = itinerary::image(pair, &loop_word(m, 0), j_dom);
        let Some(j) = return_index(pair, k, j_dom, 1) else { continue };
        let core = loop_word(m, j);
        for l in l0..l0 + 200 {
            let mut w = Word::ones(l);
            w.extend_from(&core);
            if max_grid_deriv(pair, &w, 1000) >= 1.0 {
                continue;
            }
            let roots = fixed_points_in(pair, &w, 0.0, 1.0, 256);
            if let [x] = roots[..] {
                let orbit = PeriodicOrbit::at(pair, w, x);
                if orbit.exponent < 0.0 && orbit.exponent > -eps && orbit.residual(pair) <= RESIDUAL_TOL {
                    return Ok(orbit);
                }
                if orbit.exponent < 0.0 {
                    best = best.max(orbit.exponent);
                }
            }
            break;
        }
    }
    Err(Error::NotFound { what: format!("contracting orbit with exponent in (-{eps}, 0)"), best })
}

/// An expanding periodic orbit with exponent in `(0, eps)`, word shape
/// `0^m 1 0^j` followed by successor-chain words and one more `0`.
pub fn near_zero_positive(pair: &FiberMapPair, eps: f64) -> Result<PeriodicOrbit> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps={eps} must be positive")));
    }
    let p = &pair.params;
    let i_dom = Interval::new(p.a0, p.b0);
    let band = Interval::new(pair.band_lo(), p.b0);
    let mut best = f64::INFINITY;
    for m in 1..=NEAR_ZERO_BUDGET {
        let k = itinerary::image(pair, &loop_word(m, 0), i_dom);
        let Some(j) = return_index(pair, k, i_dom, 0) else { continue };
        let head = loop_word(m, j);
        let Some(jmj) = itinerary::image(pair, &head, i_dom).intersect(&band) else { continue };
        if jmj.width() <= 0.0 {
            continue;
        }
        let Ok(chain) = itinerary::successor_chain(pair, jmj) else { continue };
        let mut w = head;
        w.extend_from(&chain.word());
        w.push(0);
        let Some(orbit) = expanding_orbit_in(pair, &w, i_dom) else { continue };
        if orbit.exponent > 0.0 && orbit.exponent < eps && orbit.residual(pair) <= RESIDUAL_TOL {
            return Ok(orbit);
        }
        if orbit.exponent > 0.0 {
            best = best.min(orbit.exponent);
        }
    }
    Err(Error::NotFound { what: format!("expanding orbit with exponent in (0, {eps})"), best })
}

/// The expanding fixed point of `f_[word]` in `J` with the largest multiplier.
pub fn expanding_orbit_in(pair: &FiberMapPair, word: &Word, j: Interval) -> Option<PeriodicOrbit> {
    fixed_points_in(pair, word, j.lo, j.hi, 512)
        .into_iter()
        .map(|x| PeriodicOrbit::at(pair, word.clone(), x))
        .filter(|o| o.multiplier > 1.0 + NEUTRAL_BAND && o.residual(pair) <= RESIDUAL_TOL)
        .max_by(|a, b| a.multiplier.total_cmp(&b.multiplier))
}
