//! Admissible domains `I_[xi] = lim f_{xi_{-1}} o ... o f_{xi_{-m}}([0,1])`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_maps::{FiberMapPair, MAX_ITER};
use crate::itinerary::{image, Interval};
use crate::spectrum::{fixed_points_in, PeriodicOrbit, Stability};
use crate::symbolic::{SeqSpec, Tail, Word};

/// Convergence threshold for the two-sided iteration of `f_w^2`.
pub const LIMIT_TOL: f64 = 1e-10;
/// Default number of `1 0^K` blocks in a constructed family member.
pub const FAMILY_BLOCKS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberStatus {
    Trivial,
    NonTrivial,
    Undetermined,
}

impl FiberStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FiberStatus::Trivial => "Trivial",
            FiberStatus::NonTrivial => "NonTrivial",
            FiberStatus::Undetermined => "Undetermined",
        }
    }
}

/// How the status was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ZeroTail,
    RepellingPoint,
    Contraction,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleDomain {
    /// `approximations[m]` is the interval at depth `m`; depth 0 is `[0,1]`.
    pub approximations: Vec<Interval>,
    pub depth: usize,
    /// `gamma^{k_m} beta^{m-k_m}` at the deepest computed depth.
    pub upper_bound_width: f64,
    pub status: FiberStatus,
    pub route: Route,
    /// Best known enclosure; exact for NonTrivial fibers.
    pub interval: Interval,
    /// Two distinct points of the fiber (NonTrivial only).
    pub witness: Option<[f64; 2]>,
    /// The repelling periodic point of the tail period, before the core is applied.
    pub repelling: Option<PeriodicOrbit>,
}

/// `f_{w_last} o ... o f_{w_first}([0,1])`.
pub fn domain_at_depth(pair: &FiberMapPair, left_word: &[u8]) -> Interval {
    image(pair, left_word, Interval::new(0.0, 1.0))
}

/// `gamma^k beta^(m-k)` for a left word of length `m` with `k` ones.
pub fn contraction_bound(pair: &FiberMapPair, m: usize, k: usize) -> f64 {
    let p = &pair.params;
    (k as f64 * p.gamma.ln() + (m - k) as f64 * p.beta.ln()).exp()
}

fn approximations(pair: &FiberMapPair, seq: &SeqSpec, max_depth: usize) -> Vec<Interval> {
    (0..=max_depth).map(|m| domain_at_depth(pair, &seq.left_word(m))).collect()
}

/// Limits of `g^k(0)` and `g^k(1)` for `g = f_w^2`, or None if they do not settle.
fn two_sided_limits(pair: &FiberMapPair, w: &Word) -> Option<(f64, f64)> {
    let ww = w.repeat(2);
    let settle = |mut x: f64| {
        for _ in 0..MAX_ITER {
            let y = pair.compose_value(&ww, x);
            if (y - x).abs() <= LIMIT_TOL {
                return Some(y);
            }
            x = y;
        }
        None
    };
    Some((settle(0.0)?, settle(1.0)?))
}

fn repelling_route(pair: &FiberMapPair, w: &Word) -> Option<(f64, f64, PeriodicOrbit)> {
    let (lo, hi) = two_sided_limits(pair, w)?;
    if !(hi - lo > 10.0 * LIMIT_TOL) {
        return None;
    }
    fixed_points_in(pair, w, lo, hi, 256)
        .into_iter()
        .filter(|&x| x > lo && x < hi)
        .map(|x| PeriodicOrbit::at(pair, w.clone(), x))
        .find(|o| o.stability == Stability::Repelling)
        .map(|o| (lo, hi, o))
}

/// Classifies the fiber over `seq`. Rules, in order: an all-zeros left tail is
/// NonTrivial with the exact interval; a periodic left tail whose period has a
/// repelling fixed point between the two-sided limits of `f_w^2` is NonTrivial;
/// a contraction bound below `width_tol` at some depth is Trivial.
pub fn classify_fiber(pair: &FiberMapPair, seq: &SeqSpec, max_depth: usize, width_tol: f64) -> Result<AdmissibleDomain> {
    if max_depth == 0 {
        return Err(Error::Parameter("max_depth must be at least 1".into()));
    }
    let core = &seq.left_core;
    match &seq.left_tail {
        Tail::Zeros => {
            let approx = approximations(pair, seq, max_depth);
            let interval = domain_at_depth(pair, core);
            return Ok(AdmissibleDomain {
                depth: max_depth,
                upper_bound_width: contraction_bound(pair, max_depth, seq.left_word(max_depth).count_ones()),
                status: FiberStatus::NonTrivial,
                route: Route::ZeroTail,
                witness: (!interval.is_trivial()).then_some([interval.lo, interval.hi]),
                interval,
                approximations: approx,
                repelling: None,
            });
        }
        tail => {
            let w = match tail {
                Tail::Ones => Word::ones(1),
                Tail::Periodic(w) => w.clone(),
                Tail::Zeros => unreachable!(),
            };
            if let Some((lo, hi, orbit)) = repelling_route(pair, &w) {
                let approx = approximations(pair, seq, max_depth);
                let a = pair.compose_value(core, lo);
                let b = pair.compose_value(core, hi);
                let interval = Interval::new(a, b);
                if !interval.is_trivial() {
                    return Ok(AdmissibleDomain {
                        depth: max_depth,
                        upper_bound_width: contraction_bound(pair, max_depth, seq.left_word(max_depth).count_ones()),
                        status: FiberStatus::NonTrivial,
                        route: Route::RepellingPoint,
                        interval,
                        witness: Some([interval.lo, interval.hi]),
                        approximations: approx,
                        repelling: Some(orbit),
                    });
                }
            }
        }
    }
    let mut approx = vec![Interval::new(0.0, 1.0)];
    let mut bound = 1.0;
    let mut ones = 0;
    for m in 1..=max_depth {
        let word = seq.left_word(m);
        if word[0] == 1 {
            ones += 1;
        }
        approx.push(domain_at_depth(pair, &word));
        bound = contraction_bound(pair, m, ones);
        if bound < width_tol {
            break;
        }
    }
    let depth = approx.len() - 1;
    let interval = approx[depth];
    let trivial = bound < width_tol;
    Ok(AdmissibleDomain {
        approximations: approx,
        depth,
        upper_bound_width: bound,
        status: if trivial { FiberStatus::Trivial } else { FiberStatus::Undetermined },
        route: if trivial { Route::Contraction } else { Route::None },
        interval,
        witness: None,
        repelling: None,
    })
}

/// Classifies a batch in parallel; output order follows the input.
pub fn classify_many(pair: &FiberMapPair, seqs: &[SeqSpec], max_depth: usize, width_tol: f64) -> Result<Vec<AdmissibleDomain>> {
    seqs.par_iter().map(|s| classify_fiber(pair, s, max_depth, width_tol)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub seq: SeqSpec,
    /// `K_1, K_2, ...` with `K_1` the block nearest the dot.
    pub k: Vec<usize>,
    pub depth: usize,
    pub domain: Interval,
}

/// Least `K` with `f0^{-K}(J)` inside `(0, c1)`.
fn least_pullback(pair: &FiberMapPair, j: Interval) -> Result<(usize, Interval)> {
    let mut cur = j;
    for k in 0..MAX_ITER {
        if cur.hi < pair.params.c1 {
            return Ok((k, cur));
        }
        cur = Interval::new(pair.f0_inv(cur.lo), pair.f0_inv(cur.hi));
    }
    Err(Error::Internal(format!("{j} never pulls back below c1")))
}

fn pull_back(pair: &FiberMapPair, j: Interval, k: usize) -> Interval {
    let mut cur = j;
    for _ in 0..k {
        cur = Interval::new(pair.f0_inv(cur.lo), pair.f0_inv(cur.hi));
    }
    cur
}

/// `count` sequences `... 1 0^{K_3} 1 0^{K_2} 1 0^{K_1} . xi_plus` with
/// `K_{l+1} > K_l` and `J` inside the fiber at construction depth. The left
/// tail is all zeros, so that depth already gives the exact fiber.
pub fn nontrivial_family(pair: &FiberMapPair, j: Interval, xi_plus: &SeqSpec, count: usize) -> Result<Vec<FamilyMember>> {
    if count == 0 {
        return Err(Error::Parameter("count must be at least 1".into()));
    }
    if !(j.lo > 0.0 && j.hi < 1.0) || j.is_trivial() {
        return Err(Error::Precondition(format!("J = {j} must be a non-trivial closed interval inside (0,1)")));
    }
    let (k_min, _) = least_pullback(pair, j)?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut ks = Vec::with_capacity(FAMILY_BLOCKS);
        let mut cur = j;
        for _ in 0..FAMILY_BLOCKS {
            let (need, _) = least_pullback(pair, cur)?;
            let k = match ks.last() {
                None => k_min + i,
                Some(&prev) => need.max(prev + 1),
            };
            let pulled = pull_back(pair, cur, k);
            cur = Interval::new(pair.f1_inv(pulled.lo), pair.f1_inv(pulled.hi));
            ks.push(k);
        }
        let mut left = Word::empty();
        for &k in ks.iter().rev() {
            left.push(1);
            left.push_run(0, k);
        }
        let domain = domain_at_depth(pair, &left);
        if !domain.contains(&j, 0.0) {
            return Err(Error::Validation(format!("J = {j} escapes the constructed fiber {domain} for K = {ks:?}")));
        }
        let seq = SeqSpec::new(Tail::Zeros, left.clone(), xi_plus.right_core.clone(), xi_plus.right_tail.clone());
        out.push(FamilyMember { seq, k: ks, depth: left.len(), domain });
    }
    Ok(out)
}

/// Widths of the depth-`m` approximations for each `m` in `depths`.
pub fn width_profile(pair: &FiberMapPair, seq: &SeqSpec, depths: &[usize]) -> Result<Vec<f64>> {
    if depths.windows(2).any(|d| d[0] >= d[1]) {
        return Err(Error::Parameter("depths must be strictly increasing".into()));
    }
    Ok(depths.iter().map(|&m| domain_at_depth(pair, &seq.left_word(m)).width()).collect())
}

/// One CSV row per computed depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainRow {
    pub sequence: String,
    pub depth: usize,
    pub lo: f64,
    pub hi: f64,
    pub bound: f64,
    pub status: String,
}

pub fn domain_rows(pair: &FiberMapPair, seq: &SeqSpec, dom: &AdmissibleDomain) -> Vec<DomainRow> {
    let name = seq.to_string();
    let mut ones = 0;
    dom.approximations
        .iter()
        .enumerate()
        .map(|(m, iv)| {
            if m > 0 && seq.bit(-(m as i64)) == 1 {
                ones += 1;
            }
            DomainRow {
                sequence: name.clone(),
                depth: m,
                lo: iv.lo,
                hi: iv.hi,
                bound: contraction_bound(pair, m, ones),
                status: dom.status.as_str().to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_words_give_the_unit_interval() {
        let pair = FiberMapPair::canonical();
        for k in 0..20 {
            assert_eq!(domain_at_depth(&pair, &Word::zeros(k)), Interval::new(0.0, 1.0));
        }
        assert_eq!(domain_at_depth(&pair, &[1]), Interval::new(0.0, pair.params.c1));
    }

    #[test]
    fn ones_tail_is_trivial_and_zero_tail_is_not() {
        let pair = FiberMapPair::canonical();
        let d = classify_fiber(&pair, &SeqSpec::ones(), 64, 1e-8).unwrap();
        assert_eq!(d.status, FiberStatus::Trivial);
        assert!(d.interval.width() <= d.upper_bound_width);
        let s: SeqSpec = "[0*] 1 . [0*]".parse().unwrap();
        let d = classify_fiber(&pair, &s, 10, 1e-8).unwrap();
        assert_eq!(d.status, FiberStatus::NonTrivial);
        assert_eq!(d.interval, Interval::new(0.0, pair.params.c1));
    }

    #[test]
    fn family_rejects_touching_intervals() {
        let pair = FiberMapPair::canonical();
        assert!(nontrivial_family(&pair, Interval::new(0.0, 0.5), &SeqSpec::zeros(), 3).is_err());
        assert!(nontrivial_family(&pair, Interval::new(0.3, 0.4), &SeqSpec::zeros(), 0).is_err());
    }

    #[test]
    fn profile_needs_increasing_depths() {
        let pair = FiberMapPair::canonical();
        assert!(width_profile(&pair, &SeqSpec::ones(), &[3, 2]).is_err());
    }
}
