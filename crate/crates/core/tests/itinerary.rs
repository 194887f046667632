use porcupine_core::fiber_maps::FiberMapPair;
use porcupine_core::itinerary::*;
use porcupine_core::symbolic::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cf() -> FiberMapPair {
    FiberMapPair::canonical()
}

/// Closed subinterval of `outer` with both endpoints uniform.
fn random_sub(rng: &mut impl Rng, outer: Interval, min_width: f64) -> Interval {
    loop {
        let a = rng.gen_range(outer.lo..=outer.hi);
        let b = rng.gen_range(outer.lo..=outer.hi);
        let j = Interval::new(a, b);
        if j.width() >= min_width {
            return j;
        }
    }
}

/// Endpoints pushed through the word one map at a time.
fn stepwise_image(p: &FiberMapPair, w: &[u8], j: Interval) -> Interval {
    let run = |mut x: f64| {
        for &b in w {
            x = p.step(b, x).0;
        }
        x
    };
    Interval::new(run(j.lo), run(j.hi))
}

/// Minimum of `|f_[w]'|` on a dense grid, by stepwise products.
fn dense_min_deriv(p: &FiberMapPair, w: &[u8], j: Interval, points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let mut x = j.lo + j.width() * i as f64 / (points - 1) as f64;
            let mut d = 1.0f64;
            for &b in w {
                let (v, g) = p.step(b, x);
                d *= g.abs();
                x = v;
            }
            d
        })
        .fold(f64::INFINITY, f64::min)
}

fn bisect_root(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = g(lo) < 0.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn image_examples() {
    let p = cf();
    let unit = Interval::new(0.0, 1.0);
    assert_eq!(image(&p, &[], Interval::new(0.2, 0.3)), Interval::new(0.2, 0.3));
    assert_eq!(image(&p, &[1], unit), Interval::new(0.0, p.params.c1));
    assert_eq!(image(&p, &[0], unit), unit);
}

#[test]
fn fundamental_domain_step() {
    let p = cf();
    let i0 = Interval::new(p.params.a0, p.params.b0);
    let s = expanding_step(&p, i0).unwrap();
    assert!(s.n == p.params.n || s.n == p.params.n + 1);
    assert_eq!((s.n, s.m), (25, 4));
    assert!(s.min_deriv >= p.params.kappa());
}

#[test]
fn half_band_step_is_frozen() {
    let p = cf();
    let j = Interval::new(p.f0_inv(p.params.b0), p.params.b0);
    let s = expanding_step(&p, j).unwrap();
    assert_eq!((s.n, s.m), (25, 4));
    assert!((s.image.lo - 0.043917511627).abs() < 1e-10, "{}", s.image);
    assert!((s.image.hi - 0.071511340047).abs() < 1e-10, "{}", s.image);
    assert!((s.min_deriv - 3.91379459).abs() < 1e-6);
}

#[test]
fn whole_band_chain_has_one_step() {
    let p = cf();
    let c = successor_chain(&p, band(&p)).unwrap();
    assert_eq!(c.i_j, 1);
    assert!(c.final_interval.contains(&d_hat(&p), BAND_TOL));
}

#[test]
fn tiny_interval_chain_respects_growth_bound() {
    let p = cf();
    let j = Interval::new(0.065, 0.065 + 1e-6);
    let c = successor_chain(&p, j).unwrap();
    assert!(c.i_j <= SuccessorChain::length_bound(&p, j));
    assert_eq!(c.i_j, 6);
}

#[test]
fn random_chains_expand_and_cover() {
    let p = cf();
    let b = band(&p);
    let d = d_hat(&p);
    let kappa = p.params.kappa();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut max_n, mut max_m) = (0, 0);
    for _ in 0..100 {
        let j = random_sub(&mut rng, b, 1e-7);
        let c = successor_chain(&p, j).unwrap();
        assert!(c.i_j <= SuccessorChain::length_bound(&p, j), "J={j}: {} steps", c.i_j);
        assert!(c.final_interval.contains(&d, BAND_TOL), "J={j}: final {}", c.final_interval);
        for s in &c.steps {
            assert!(s.min_deriv >= kappa, "J={j}: step min {}", s.min_deriv);
            assert!(dense_min_deriv(&p, &s.word, s.source, 1000) >= kappa);
            assert_eq!(stepwise_image(&p, &s.word, s.source), s.image);
            max_n = max_n.max(s.n);
            max_m = max_m.max(s.m);
        }
    }
    assert!(max_n <= p.params.n + 2, "n(J) up to {max_n}");
    assert!(max_m <= 10, "m(J) up to {max_m}");
}

#[test]
fn sweep_covers_the_fundamental_domain() {
    let p = cf();
    let d = d_hat(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let h = random_sub(&mut rng, Interval::new(0.05, 0.95), 1e-4);
        let w = sweep(&p, h).unwrap();
        let img = stepwise_image(&p, &w, h);
        assert!(img.contains(&d, BAND_TOL), "H={h}: image {img}");
    }
}

#[test]
fn sweep_preconditions() {
    let p = cf();
    assert!(sweep(&p, Interval::new(0.4, 0.6)).is_ok());
    assert!(sweep(&p, Interval::new(0.5, 0.5)).is_err());
    assert!(sweep(&p, Interval::new(0.0, 0.3)).is_err());
    assert!(sweep(&p, Interval::new(0.7, 1.0)).is_err());
}

#[test]
fn expanding_fixed_point_matches_bisection() {
    let p = cf();
    let i0 = Interval::new(p.params.a0, p.params.b0);
    let o = expanding_fixed_point(&p, i0).unwrap();
    let w = o.word.clone();
    let mut want_word = Word::zeros(25);
    want_word.push(1);
    want_word.push_run(0, 4);
    assert_eq!(w, want_word);
    let x = bisect_root(|x| p.compose_value(&w, x) - x, i0.lo, i0.hi);
    assert!((o.fix - x).abs() < 1e-10, "{} vs {x}", o.fix);
    assert!((o.fix - 0.066798946548).abs() < 1e-10);
    assert!((o.multiplier - 5.7746484097).abs() < 1e-7);
}

#[test]
fn periodic_points_near_targets() {
    let p = cf();
    for k in 0..19 {
        let x = 0.05 + 0.05 * k as f64;
        let o = periodic_point_near(&p, x, 0.05).unwrap();
        assert!((o.fix - x).abs() <= 0.05);
        assert!((p.compose_value(&o.word, o.fix) - o.fix).abs() <= 1e-10);
        assert!(p.compose_deriv(&o.word, o.fix).abs() > 1.0);
    }
    assert!(periodic_point_near(&p, 0.5, 0.0).is_err());
}
