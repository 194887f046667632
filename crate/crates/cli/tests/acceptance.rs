//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use porcupine_core::domains::{classify_fiber, classify_many, domain_at_depth, nontrivial_family, FiberStatus};
use porcupine_core::fiber_maps::{build_pair, FamilySpec, FiberMapPair};
use porcupine_core::itinerary::{band, d_hat, image, periodic_point_near, successor_chain, sweep, Interval, SuccessorChain, BAND_TOL};
use porcupine_core::skew3d::{self, code_point, itinerary, lift_periodic, point_p, point_p_hat, point_q, verify_cycle, HorseshoeModel};
use porcupine_core::spectrum::{self, enumerate_orbits, fixed_points, gap_from_orbits, max_grid_deriv, spectrum_sample};
use porcupine_core::symbolic::{SeqSpec, Tail, Word};
use porcupine_core::thermo::{phase_transition_from, OrbitTable, PhaseControls};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: f64 = 1e-4;
const RESIDUAL: f64 = 1e-10;
const EPS_NEAR_ZERO: f64 = 0.05;
const ORACLE_POINTS: usize = 100_000;
const ORACLE_LOC: f64 = 1e-8;
const SPECTRUM_SLACK: f64 = 1e-9;
const CONVEXITY_SLACK: f64 = -1e-9;
const LEFT_SLOPE_TOL: f64 = 5e-3;
const RIGHT_SLOPE_TOL: f64 = 1e-2;
const TQ_SLACK: f64 = 0.1;
const DEPTH: usize = 64;
const WIDTH_TOL: f64 = 1e-8;
const TRIVIAL_FRACTION: f64 = 0.95;
const NET: f64 = 0.05;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn cf() -> FiberMapPair {
    FiberMapPair::canonical()
}

fn random_sub(rng: &mut impl Rng, outer: Interval, min_width: f64) -> Interval {
    loop {
        let j = Interval::new(rng.gen_range(outer.lo..=outer.hi), rng.gen_range(outer.lo..=outer.hi));
        if j.width() >= min_width {
            return j;
        }
    }
}

fn random_word(rng: &mut impl Rng, n: usize) -> Word {
    Word::new((0..n).map(|_| rng.gen_range(0..2)).collect()).unwrap()
}

fn random_tail(rng: &mut impl Rng) -> Tail {
    match rng.gen_range(0..3) {
        0 => Tail::Zeros,
        1 => Tail::Ones,
        _ => {
            let n = rng.gen_range(1..=4);
            Tail::periodic(random_word(rng, n)).unwrap()
        }
    }
}

fn random_seq(rng: &mut impl Rng) -> SeqSpec {
    let lt = random_tail(rng);
    let rt = random_tail(rng);
    let (a, b) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
    SeqSpec::new(lt, random_word(rng, a), random_word(rng, b), rt)
}

fn family_certification() -> Outcome {
    let t = Instant::now();
    let r = cf().validate(GRID);
    ensure(r.all_pass, || format!("CF fails {:?}", r.failed()))?;
    let worst = r.conditions.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    ensure(worst > 0.0, || format!("smallest margin {worst}"))?;

    let mut spec = FamilySpec::canonical();
    spec.c1 = 1.0;
    let broken = build_pair(&spec).map_err(|e| e.to_string())?.validate(GRID);
    ensure(broken.failed().contains(&"F1.i"), || format!("c1=1 fails {:?}, expected F1.i", broken.failed()))?;

    let mut spec = FamilySpec::canonical();
    spec.beta = 2.0;
    spec.lambda = 0.5;
    spec.shape_controls.knots = vec![[0.03, 1.9], [0.09, 1.9], [0.11, 1.16], [0.4, 1.16]];
    let broken = build_pair(&spec).map_err(|e| e.to_string())?.validate(GRID);
    ensure(broken.failed().contains(&"standing"), || format!("beta=2, lambda=0.5 fails {:?}", broken.failed()))?;
    within(t.elapsed(), Duration::from_secs(1), "certification")?;
    Ok(format!("CF all-pass, smallest margin {worst:.3e}; c1=1 breaks F1.i; beta=2, lambda=0.5 breaks the standing inequality"))
}

fn expanding_machinery() -> Outcome {
    let p = cf();
    let (b, d, kappa) = (band(&p), d_hat(&p), p.params.kappa());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut steps, mut longest, mut min_d) = (0, 0, f64::INFINITY);
    for _ in 0..100 {
        let j = random_sub(&mut rng, b, 1e-7);
        let c = successor_chain(&p, j).map_err(|e| format!("J={j}: {e}"))?;
        ensure(c.i_j <= SuccessorChain::length_bound(&p, j), || format!("J={j}: chain length {}", c.i_j))?;
        ensure(c.final_interval.contains(&d, BAND_TOL), || format!("J={j}: final {} misses {d}", c.final_interval))?;
        for s in &c.steps {
            ensure(s.min_deriv >= kappa, || format!("J={j}: step derivative {} < {kappa}", s.min_deriv))?;
            min_d = min_d.min(s.min_deriv);
        }
        steps += c.steps.len();
        longest = longest.max(c.i_j);
    }
    Ok(format!("100 chains, {steps} steps, min derivative {min_d:.3} >= kappa {kappa:.3}, longest chain {longest}"))
}

fn sweeping() -> Outcome {
    let p = cf();
    let d = d_hat(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut longest = 0;
    for _ in 0..50 {
        let h = random_sub(&mut rng, Interval::new(0.05, 0.95), 1e-4);
        let w = sweep(&p, h).map_err(|e| format!("H={h}: {e}"))?;
        let img = image(&p, &w, h);
        ensure(img.contains(&d, BAND_TOL), || format!("H={h}: image {img} misses {d}"))?;
        longest = longest.max(w.len());
    }
    Ok(format!("50 windows covered, longest word {longest}"))
}

fn near_zero_exponents() -> Outcome {
    let p = cf();
    let t = Instant::now();
    let neg = spectrum::near_zero_negative(&p, EPS_NEAR_ZERO).map_err(|e| e.to_string())?;
    within(t.elapsed(), Duration::from_secs(60), "negative search")?;
    ensure(neg.exponent < 0.0 && neg.exponent > -EPS_NEAR_ZERO, || format!("negative exponent {}", neg.exponent))?;
    ensure(neg.residual(&p) <= RESIDUAL, || format!("negative residual {}", neg.residual(&p)))?;
    let grid_max = max_grid_deriv(&p, &neg.word, 1000);
    ensure(grid_max < 1.0, || format!("negative word is not a global contraction: {grid_max}"))?;
    let t = Instant::now();
    let pos = spectrum::near_zero_positive(&p, EPS_NEAR_ZERO).map_err(|e| e.to_string())?;
    within(t.elapsed(), Duration::from_secs(60), "positive search")?;
    ensure(pos.exponent > 0.0 && pos.exponent < EPS_NEAR_ZERO, || format!("positive exponent {}", pos.exponent))?;
    ensure(pos.residual(&p) <= RESIDUAL, || format!("positive residual {}", pos.residual(&p)))?;
    Ok(format!(
        "negative {:.5} (length {}, grid max |f'| {grid_max:.3}), positive {:.5} (length {})",
        neg.exponent,
        neg.word.len(),
        pos.exponent,
        pos.word.len()
    ))
}

fn sign_scan(p: &FiberMapPair, w: &[u8]) -> Vec<f64> {
    let g = |x: f64| {
        let mut y = x;
        for &b in w {
            y = p.step(b, y).0;
        }
        y - x
    };
    let xs: Vec<f64> = (0..=ORACLE_POINTS).map(|i| i as f64 / ORACLE_POINTS as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..=ORACLE_POINTS {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
        } else if i < ORACLE_POINTS && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0) {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if (g(m) < 0.0) == (gs[i] < 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

fn spectral_gap() -> Outcome {
    let p = cf();
    let orbits = enumerate_orbits(&p, 1..=12);
    let g = gap_from_orbits(&p, &orbits, 12);
    ensure(g.margin > 0.0, || format!("margin {}", g.margin))?;
    let levels: Vec<_> = g.levels.iter().filter(|l| [4, 6, 8, 10, 12].contains(&l.n)).collect();
    for w in levels.windows(2) {
        ensure(w[1].beta_tilde >= w[0].beta_tilde, || format!("beta_tilde drops from n={} to n={}", w[0].n, w[1].n))?;
    }
    ensure(levels.iter().all(|l| l.margin > 0.0), || "a margin collapses below 0".into())?;
    let margins: Vec<String> = levels.iter().map(|l| format!("{}:{:.4}", l.n, l.margin)).collect();
    let mut words = 0;
    for n in 1..=8 {
        for i in 0..1u64 << n {
            let w = Word::from_index(i, n);
            let got: Vec<f64> = fixed_points(&p, &w).map_err(|e| e.to_string())?.iter().map(|o| o.fix).collect();
            let want = sign_scan(&p, &w);
            ensure(got.len() == want.len(), || format!("{w}: {} roots, oracle {}", got.len(), want.len()))?;
            for (a, b) in got.iter().zip(&want) {
                ensure((a - b).abs() <= ORACLE_LOC, || format!("{w}: root {a} vs oracle {b}"))?;
            }
            words += 1;
        }
    }
    Ok(format!("margin {:.4} (lower-bound certificate); margins {}; {words} words match the sign scan", g.margin, margins.join(" ")))
}

fn spectrum_shape() -> Outcome {
    let p = cf();
    let s = spectrum_sample(&p, 12).map_err(|e| e.to_string())?;
    let top = gap_from_orbits(&p, &enumerate_orbits(&p, 1..=12), 12).beta_tilde_n.ln();
    let (lb, ll) = (p.params.beta.ln(), p.params.lambda.ln());
    ensure(s.iter().any(|e| (e.exponent - ll).abs() < 1e-12), || "log lambda missing".into())?;
    ensure(s.iter().any(|e| (e.exponent - lb).abs() < 1e-12), || "log beta missing".into())?;
    let pos = s.iter().filter(|e| !e.excluded && e.exponent > 0.0).count();
    let neg = s.iter().filter(|e| e.exponent < 0.0).count();
    ensure(pos > 0 && neg > 0, || format!("{pos} positive, {neg} negative"))?;
    let worst = s.iter().filter(|e| !e.excluded).map(|e| e.exponent).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= top + SPECTRUM_SLACK, || format!("included exponent {worst} above log beta_tilde_12 {top}"))?;
    Ok(format!("{} orbits, {pos} positive, {neg} negative, max included {worst:.5} <= {top:.5}", s.len()))
}

fn pressure_and_transition() -> Outcome {
    let p = cf();
    let t0 = Instant::now();
    let lb = p.params.beta.ln();
    let orbits = enumerate_orbits(&p, 1..=12);
    let gap = gap_from_orbits(&p, &orbits, 12);
    let ts: Vec<f64> = (0..=400).map(|i| -8.0 + 9.0 * i as f64 / 400.0).collect();
    for n in [4, 8, 12] {
        let table = OrbitTable::from_orbits(n, orbits.iter().cloned());
        let v: Vec<f64> = ts.iter().map(|&t| table.pressure(t)).collect();
        for k in 1..v.len() - 1 {
            let d2 = v[k + 1] - 2.0 * v[k] + v[k - 1];
            ensure(d2 >= CONVEXITY_SLACK, || format!("n={n}: second difference {d2} at t={}", ts[k]))?;
        }
        for (&t, &pv) in ts.iter().zip(&v) {
            ensure(t > 0.0 || pv >= -t * lb, || format!("n={n}: P({t}) = {pv} below -t log beta"))?;
        }
        let dev = (table.pressure(0.0) - 2f64.ln()).abs();
        let bound = (gap.max_fixed_points_per_word as f64).ln() / n as f64;
        ensure(dev <= bound + 1e-12, || format!("n={n}: |P(0) - log 2| = {dev} > {bound}"))?;
    }
    let table = OrbitTable::from_orbits(12, orbits);
    let r = phase_transition_from(&table, gap, &PhaseControls::default()).map_err(|e| e.to_string())?;
    ensure(r.detected, || "no kink detected".into())?;
    let (t_q, dm, dp) = (r.t_q.unwrap(), r.d_minus.unwrap(), r.d_plus.unwrap());
    ensure((dm + lb).abs() <= LEFT_SLOPE_TOL, || format!("left slope {dm} vs {}", -lb))?;
    ensure(dp >= -r.log_beta_tilde - RIGHT_SLOPE_TOL, || format!("right slope {dp}"))?;
    let lower = -2f64.ln() / (lb - r.log_beta_tilde) - TQ_SLACK;
    ensure(t_q >= lower && t_q < 0.0, || format!("t_Q {t_q} outside [{lower}, 0)"))?;
    within(t0.elapsed(), Duration::from_secs(120), "pressure at n=12")?;
    Ok(format!("convex for n=4,8,12; t_Q {t_q:.3} in [{lower:.3}, 0); D- {dm:.5}; D+ {dp:.5}"))
}

fn admissible_domains() -> Outcome {
    let p = cf();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let s = random_seq(&mut rng);
        let shifted = s.shift();
        for m in 0..DEPTH {
            let here = domain_at_depth(&p, &s.left_word(m));
            let deeper = domain_at_depth(&p, &s.left_word(m + 1));
            ensure(here.contains(&deeper, 0.0), || format!("{s}: nesting fails at depth {m}"))?;
            let mut padded = Word::zeros(rng.gen_range(1..8));
            padded.extend_from(&s.left_word(m));
            ensure(domain_at_depth(&p, &padded) == here, || format!("{s}: left zeros change depth {m}"))?;
            let b = s.bit(0);
            let pushed = Interval::new(p.step(b, here.lo).0, p.step(b, here.hi).0);
            ensure(pushed == domain_at_depth(&p, &shifted.left_word(m + 1)), || format!("{s}: shift fails at depth {m}"))?;
        }
    }
    for _ in 0..50 {
        let k = rng.gen_range(0..10);
        let core = random_word(&mut rng, k);
        let ones = SeqSpec::new(Tail::Ones, core.clone(), Word::empty(), Tail::Zeros);
        let d = classify_fiber(&p, &ones, DEPTH, WIDTH_TOL).map_err(|e| e.to_string())?;
        ensure(d.status == FiberStatus::Trivial, || format!("{ones}: {:?}", d.status))?;
        let zeros = SeqSpec::new(Tail::Zeros, core, Word::empty(), Tail::Zeros);
        let d = classify_fiber(&p, &zeros, DEPTH, WIDTH_TOL).map_err(|e| e.to_string())?;
        ensure(d.status == FiberStatus::NonTrivial, || format!("{zeros}: {:?}", d.status))?;
    }
    let j = Interval::new(0.3, 0.4);
    let fam = nontrivial_family(&p, j, &SeqSpec::zeros(), 10).map_err(|e| e.to_string())?;
    ensure(fam.len() == 10, || format!("{} members", fam.len()))?;
    for (i, m) in fam.iter().enumerate() {
        ensure(domain_at_depth(&p, &m.seq.left_word(m.depth)).contains(&j, 0.0), || format!("member {i} misses J"))?;
        ensure(fam[..i].iter().all(|o| o.seq != m.seq), || format!("member {i} repeats"))?;
    }
    let seqs: Vec<SeqSpec> =
        (0..200).map(|_| SeqSpec::new(Tail::Ones, random_word(&mut rng, DEPTH), Word::empty(), Tail::Zeros)).collect();
    let doms = classify_many(&p, &seqs, DEPTH, WIDTH_TOL).map_err(|e| e.to_string())?;
    let trivial = doms.iter().filter(|d| d.status == FiberStatus::Trivial).count() as f64 / 200.0;
    ensure(trivial >= TRIVIAL_FRACTION, || format!("spot check: {trivial} trivial"))?;
    Ok(format!("200 sequences x depth {DEPTH} structural checks; tails classify; 10 family members; spot check {:.3} trivial", trivial))
}

fn skew_product() -> Outcome {
    let p = cf();
    let m = HorseshoeModel::standard(&p).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let s = random_seq(&mut rng);
        let (xs, xu) = code_point(&m, &s);
        let back = itinerary(&m, xs, xu, -20, 19).map_err(|e| format!("{s}: {e}"))?;
        ensure(back == s.truncate(-20, 19), || format!("{s}: itinerary {back}"))?;
    }
    for (name, pt) in [("P", point_p()), ("Q", point_q()), ("P_hat", point_p_hat(&p))] {
        let q = skew3d::step(&m, &p, pt).map_err(|e| e.to_string())?;
        ensure(q.dist(&pt) < 1e-14, || format!("{name} is not fixed"))?;
    }
    let zero = fixed_points(&p, &Word::zeros(1)).map_err(|e| e.to_string())?;
    let one = fixed_points(&p, &Word::ones(1)).map_err(|e| e.to_string())?;
    let idx = |o| lift_periodic(&m, &p, o).map(|l| l.index).map_err(|e| e.to_string());
    let (ip, iq, ih) = (idx(&zero[1])?, idx(&zero[0])?, idx(&one[0])?);
    ensure((ip, iq, ih) == (Some(1), Some(2), Some(1)), || format!("indices P {ip:?}, Q {iq:?}, P_hat {ih:?}"))?;
    let cyc = verify_cycle(&m, &p).map_err(|e| e.to_string())?;
    ensure(cyc.all_pass, || format!("cycle checks {:?}", cyc.checks.iter().map(|c| c.passed).collect::<Vec<_>>()))?;
    let cells = (1.0 / NET).round() as usize;
    for k in 0..cells {
        let centre = (k as f64 + 0.5) * NET;
        let o = periodic_point_near(&p, centre, 0.5 * NET).map_err(|e| format!("cell {k}: {e}"))?;
        let l = lift_periodic(&m, &p, &o).map_err(|e| format!("cell {k}: {e}"))?;
        ensure(l.index == Some(2) && (o.fix - centre).abs() <= 0.5 * NET, || format!("cell {k}: fix {} index {:?}", o.fix, l.index))?;
    }
    Ok(format!("100 round trips; P, Q, P_hat indices 1, 2, 1; cycle checks pass; {cells} net cells hit by index-2 orbits"))
}

fn run_cli(args: &[&str], threads: &str) -> Result<(Vec<u8>, Option<i32>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_porcupine"))
        .args(args)
        .args(["--threads", threads])
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code()))
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["gap", "--nmax", "10"],
        &["spectrum", "--nmax", "8", "--format", "csv"],
        &["transition", "--n", "10", "--t-lo", "-3", "--t-hi", "1"],
        &["pressure", "--n", "9", "--format", "jsonl"],
        &["fiber", "--seq", "[011*] 1 0 . 1 [0*]"],
        &["periodic-near", "--x", "0.3", "--eps", "0.05"],
    ];
    let mut bytes = 0;
    for args in runs {
        let (first, code) = run_cli(args, "1")?;
        ensure(code == Some(0), || format!("{args:?} exited with {code:?}"))?;
        for threads in ["1", "4", "4"] {
            let (again, c) = run_cli(args, threads)?;
            ensure(again == first && c == code, || format!("{args:?} differs with {threads} threads"))?;
        }
        bytes += first.len();
    }
    Ok(format!("{} commands x 4 runs (1 and 4 threads) byte-identical, {bytes} bytes each round", runs.len()))
}

fn main() {
    panic::set_hook(Box::new(|_| {}));
    let criteria: [(u8, &str, fn() -> Outcome); 10] = [
        (1, "family certification", family_certification),
        (2, "expanding machinery", expanding_machinery),
        (3, "sweeping", sweeping),
        (4, "near-zero exponents", near_zero_exponents),
        (5, "spectral gap", spectral_gap),
        (6, "spectrum shape", spectrum_shape),
        (7, "pressure and phase transition", pressure_and_transition),
        (8, "admissible domains", admissible_domains),
        (9, "skew product", skew_product),
        (10, "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let t = Instant::now();
        let r = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {d} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
