#![allow(dead_code)]

use porcupine_core::symbolic::{SeqSpec, Tail, Word};
use proptest::prelude::*;
use rand::Rng;

pub fn word_bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..=max)
}

pub fn tail() -> impl Strategy<Value = Tail> {
    prop_oneof![
        Just(Tail::Zeros),
        Just(Tail::Ones),
        prop::collection::vec(0u8..2, 1..=4).prop_map(|b| Tail::periodic(Word::new(b).unwrap()).unwrap()),
    ]
}

/// Eventually periodic sequences with short cores.
pub fn seq() -> impl Strategy<Value = SeqSpec> {
    (tail(), word_bits(8), word_bits(8), tail()).prop_map(|(lt, lc, rc, rt)| {
        SeqSpec::new(lt, Word::new(lc).unwrap(), Word::new(rc).unwrap(), rt)
    })
}

/// Same shape as [`seq`], drawn from a seeded generator.
pub fn random_seq(rng: &mut impl Rng) -> SeqSpec {
    let tail = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..3) {
        0 => Tail::Zeros,
        1 => Tail::Ones,
        _ => {
            let n = rng.gen_range(1..=4);
            Tail::periodic(Word::new((0..n).map(|_| rng.gen_range(0..2)).collect()).unwrap()).unwrap()
        }
    };
    let lt = tail(rng);
    let rt = tail(rng);
    let core = |rng: &mut dyn rand::RngCore| {
        let n = rng.gen_range(0..=8);
        Word::new((0..n).map(|_| rng.gen_range(0..2)).collect()).unwrap()
    };
    let lc = core(rng);
    let rc = core(rng);
    SeqSpec::new(lt, lc, rc, rt)
}

/// `m` independent fair-coin bits.
pub fn coin_word(rng: &mut impl Rng, m: usize) -> Word {
    Word::new((0..m).map(|_| rng.gen_range(0..2)).collect()).unwrap()
}
