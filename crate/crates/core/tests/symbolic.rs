mod common;

use porcupine_core::symbolic::*;
use proptest::prelude::*;

fn s(text: &str) -> SeqSpec {
    text.parse().unwrap()
}

/// Direct summation far past the point where the tails matter at f64 precision.
fn metric_by_summation(a: &SeqSpec, b: &SeqSpec) -> f64 {
    (-1100i64..=1100).filter(|&i| a.bit(i) != b.bit(i)).map(|i| 0.5f64.powi(i.unsigned_abs() as i32)).sum()
}

#[test]
fn truncation_examples() {
    assert_eq!(SeqSpec::zeros().truncate(-2, 2).to_string(), "00000");
    assert_eq!(s("[0*] . 1 [0*]").truncate(-1, 1).to_string(), "010");
    assert_eq!(s(". [01*]").truncate(0, 3).to_string(), "0101");
}

#[test]
fn shift_examples() {
    assert_eq!(SeqSpec::zeros().shift(), SeqSpec::zeros());
    let e = s(". 1");
    let moved = e.shift();
    assert_eq!(moved.truncate(-3, 3).to_string(), "0010000");
    assert_eq!(moved.bit(-1), 1);
    let p = SeqSpec::periodic(&"01".parse().unwrap()).unwrap();
    let q = SeqSpec::periodic(&"10".parse().unwrap()).unwrap();
    for lo in -20..20 {
        assert_eq!(p.shift().truncate(lo, lo + 7), q.truncate(lo, lo + 7));
    }
}

#[test]
fn metric_examples() {
    let a = s("[01*] 1 . 0 [1*]");
    assert_eq!(a.metric(&a), 0.0);
    assert_eq!(SeqSpec::zeros().metric(&s(". 1")), 1.0);
    assert_eq!(SeqSpec::zeros().metric(&s("1 . 1")), 1.5);
    let b = s("1 . 0 1");
    assert_eq!(SeqSpec::zeros().metric(&b), 1.0);
}

#[test]
fn cylinder_membership() {
    let c = Cylinder { word: "101".parse().unwrap(), anchor: -1 };
    assert!(c.contains(&s("1 . 0 1")));
    assert!(!c.contains(&s(". 0 1")));
}

#[test]
fn malformed_text_is_rejected() {
    assert!("0 1 1".parse::<SeqSpec>().is_err());
    assert!("[*] . 1".parse::<SeqSpec>().is_err());
    assert!("[0*] . 2".parse::<SeqSpec>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn text_round_trip(a in common::seq()) {
        let back: SeqSpec = a.to_string().parse().unwrap();
        prop_assert_eq!(back.truncate(-60, 60), a.truncate(-60, 60));
    }

    #[test]
    fn metric_agrees_with_direct_summation(a in common::seq(), b in common::seq()) {
        let want = metric_by_summation(&a, &b);
        prop_assert!((a.metric(&b) - want).abs() <= 1e-12, "{} vs {want}", a.metric(&b));
    }

    #[test]
    fn metric_is_symmetric_and_triangular(a in common::seq(), b in common::seq(), c in common::seq()) {
        prop_assert_eq!(a.metric(&b), b.metric(&a));
        prop_assert!(a.metric(&c) <= a.metric(&b) + b.metric(&c) + 1e-12);
    }

    #[test]
    fn zero_distance_iff_equal_truncations(a in common::seq(), b in common::seq()) {
        let same = a.truncate(-32, 31) == b.truncate(-32, 31);
        let d = a.metric(&b);
        if d == 0.0 {
            prop_assert!(same);
        }
        if !same {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn shift_back_inverts_shift(a in common::seq(), k in 1usize..12) {
        let mut x = a.clone();
        for _ in 0..k {
            x = x.shift();
        }
        for _ in 0..k {
            x = x.shift_back();
        }
        prop_assert_eq!(x.truncate(-50, 50), a.truncate(-50, 50));
    }

    #[test]
    fn truncation_commutes_with_shift(a in common::seq(), lo in -30i64..30, len in 0i64..20) {
        prop_assert_eq!(a.shift().truncate(lo, lo + len), a.truncate(lo + 1, lo + len + 1));
    }
}
