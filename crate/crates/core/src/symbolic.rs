//! Words over {0,1}, eventually periodic bi-infinite sequences, the shift
//! and the metric `d(a,b) = sum 2^-|i| |a_i - b_i|`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite binary word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(bits: Vec<u8>) -> Result<Word> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Parse(format!("word bit {b} is not 0 or 1")));
        }
        Ok(Word(bits))
    }

    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn zeros(n: usize) -> Word {
        Word(vec![0; n])
    }

    pub fn ones(n: usize) -> Word {
        Word(vec![1; n])
    }

    /// The word with the bits of `index` (most significant first), length `n`.
    pub fn from_index(index: u64, n: usize) -> Word {
        Word((0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn push(&mut self, bit: u8) {
        assert!(bit <= 1, "bit must be 0 or 1");
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &[u8]) {
        self.0.extend_from_slice(other);
    }

    pub fn push_run(&mut self, bit: u8, n: usize) {
        assert!(bit <= 1, "bit must be 0 or 1");
        self.0.extend(std::iter::repeat(bit).take(n));
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// `self` repeated `k` times.
    pub fn repeat(&self, k: usize) -> Word {
        Word(self.0.repeat(k))
    }

    /// Cyclic rotation by `k` to the left.
    pub fn rotate(&self, k: usize) -> Word {
        let mut v = self.0.clone();
        if !v.is_empty() {
            let k = k % v.len();
            v.rotate_left(k);
        }
        Word(v)
    }
}

impl Deref for Word {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for Word {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Word> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_whitespace() || c == '_' => {}
                c => return Err(Error::Parse(format!("unexpected character {c:?} in word"))),
            }
        }
        Ok(Word(bits))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A tail of a bi-infinite sequence. Constant tails are kept apart from
/// periodic ones so that the common cases print and compare cheaply.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tail {
    Zeros,
    Ones,
    Periodic(Word),
}

impl Tail {
    pub fn periodic(w: Word) -> Result<Tail> {
        if w.is_empty() {
            return Err(Error::Parse("periodic tail needs a nonempty period".into()));
        }
        Ok(Tail::Periodic(w).normalized())
    }

    fn normalized(self) -> Tail {
        match self {
            Tail::Periodic(w) if w.iter().all(|&b| b == 0) => Tail::Zeros,
            Tail::Periodic(w) if w.iter().all(|&b| b == 1) => Tail::Ones,
            t => t,
        }
    }

    pub fn period(&self) -> usize {
        match self {
            Tail::Periodic(w) => w.len(),
            _ => 1,
        }
    }

    /// Bit at offset `k` reading forward (rightwards) from the start of the tail.
    fn forward(&self, k: usize) -> u8 {
        match self {
            Tail::Zeros => 0,
            Tail::Ones => 1,
            Tail::Periodic(w) => w[k % w.len()],
        }
    }

    /// Bit at distance `k` leftwards from the end of the tail (k = 0 is adjacent to the core).
    fn backward(&self, k: usize) -> u8 {
        match self {
            Tail::Zeros => 0,
            Tail::Ones => 1,
            Tail::Periodic(w) => w[w.len() - 1 - k % w.len()],
        }
    }

    fn token(&self) -> String {
        match self {
            Tail::Zeros => "[0*]".into(),
            Tail::Ones => "[1*]".into(),
            Tail::Periodic(w) => format!("[{w}*]"),
        }
    }
}

/// An eventually periodic bi-infinite sequence
/// `... left_tail | left_core . right_core | right_tail ...`
/// where `left_core` occupies positions `-m..-1` and `right_core` positions `0..n-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeqSpec {
    pub left_tail: Tail,
    pub left_core: Word,
    pub right_core: Word,
    pub right_tail: Tail,
}

impl SeqSpec {
    pub fn new(left_tail: Tail, left_core: Word, right_core: Word, right_tail: Tail) -> SeqSpec {
        SeqSpec {
            left_tail: left_tail.normalized(),
            left_core,
            right_core,
            right_tail: right_tail.normalized(),
        }
    }

    pub fn zeros() -> SeqSpec {
        SeqSpec::new(Tail::Zeros, Word::empty(), Word::empty(), Tail::Zeros)
    }

    pub fn ones() -> SeqSpec {
        SeqSpec::new(Tail::Ones, Word::empty(), Word::empty(), Tail::Ones)
    }

    /// The bi-infinite repetition `w^Z` with `w` starting at position 0.
    pub fn periodic(w: &Word) -> Result<SeqSpec> {
        let t = Tail::periodic(w.clone())?;
        Ok(SeqSpec::new(t.clone(), Word::empty(), Word::empty(), t))
    }

    pub fn bit(&self, i: i64) -> u8 {
        let m = self.left_core.len() as i64;
        let n = self.right_core.len() as i64;
        if i >= 0 {
            if i < n {
                self.right_core[i as usize]
            } else {
                self.right_tail.forward((i - n) as usize)
            }
        } else if i >= -m {
            self.left_core[(i + m) as usize]
        } else {
            self.left_tail.backward((-m - 1 - i) as usize)
        }
    }

    /// Bits on positions `lo..=hi`.
    pub fn truncate(&self, lo: i64, hi: i64) -> Word {
        if hi < lo {
            return Word::empty();
        }
        Word((lo..=hi).map(|i| self.bit(i)).collect())
    }

    /// Bits `xi_{-m} ... xi_{-1}` (the left word at depth `m`).
    pub fn left_word(&self, m: usize) -> Word {
        self.truncate(-(m as i64), -1)
    }

    /// `sigma(xi)_i = xi_{i+1}`.
    pub fn shift(&self) -> SeqSpec {
        let mut s = self.clone();
        let (b, rest, tail) = if s.right_core.is_empty() {
            let b = s.right_tail.forward(0);
            let tail = match s.right_tail {
                Tail::Periodic(w) => Tail::Periodic(w.rotate(1)),
                t => t,
            };
            (b, Word::empty(), tail)
        } else {
            let mut v = s.right_core.into_bits();
            let b = v.remove(0);
            (b, Word(v), s.right_tail)
        };
        s.left_core.push(b);
        s.right_core = rest;
        s.right_tail = tail;
        s.compact()
    }

    /// Inverse of [`SeqSpec::shift`].
    pub fn shift_back(&self) -> SeqSpec {
        let mut s = self.clone();
        let (b, rest, tail) = if s.left_core.is_empty() {
            let b = s.left_tail.backward(0);
            let tail = match s.left_tail {
                Tail::Periodic(w) => Tail::Periodic(w.rotate(w.len() - 1)),
                t => t,
            };
            (b, Word::empty(), tail)
        } else {
            let mut v = s.left_core.into_bits();
            let b = v.pop().unwrap();
            (b, Word(v), s.left_tail)
        };
        let mut core = vec![b];
        core.extend_from_slice(&s.right_core);
        s.right_core = Word(core);
        s.left_core = rest;
        s.left_tail = tail;
        s.compact()
    }

    /// Absorbs core bits that merely continue a tail.
    fn compact(mut self) -> SeqSpec {
        let p = self.left_tail.period();
        while self.left_core.len() >= p {
            let head: Vec<u8> = self.left_core[..p].to_vec();
            let matches = (0..p).all(|k| head[k] == self.left_tail.backward(p - 1 - k));
            if !matches {
                break;
            }
            self.left_core = Word(self.left_core[p..].to_vec());
        }
        let p = self.right_tail.period();
        while self.right_core.len() >= p {
            let n = self.right_core.len();
            let tail: Vec<u8> = self.right_core[n - p..].to_vec();
            let matches = (0..p).all(|k| tail[k] == self.right_tail.forward(k));
            if !matches {
                break;
            }
            self.right_core = Word(self.right_core[..n - p].to_vec());
        }
        self
    }

    /// Exact value of `sum_i 2^-|i| |a_i - b_i|`.
    pub fn metric(&self, other: &SeqSpec) -> f64 {
        metric(self, other)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn metric(a: &SeqSpec, b: &SeqSpec) -> f64 {
    // Beyond `r0` (right) and below `-l0` (left) both sequences are in their
    // tails, so the difference pattern repeats with period lcm of the periods.
    let r0 = a.right_core.len().max(b.right_core.len()) as i64;
    let l0 = a.left_core.len().max(b.left_core.len()) as i64;
    let pr = {
        let (x, y) = (a.right_tail.period(), b.right_tail.period());
        x / gcd(x, y) * y
    };
    let pl = {
        let (x, y) = (a.left_tail.period(), b.left_tail.period());
        x / gcd(x, y) * y
    };
    let diff = |i: i64| (a.bit(i) != b.bit(i)) as u8 as f64;
    let mut sum = 0.0;
    for i in -l0..r0 {
        sum += diff(i) * 0.5f64.powi(i.unsigned_abs() as i32);
    }
    let mut block = 0.0;
    for k in 0..pr as i64 {
        block += diff(r0 + k) * 0.5f64.powi((r0 + k) as i32);
    }
    sum += block / (1.0 - 0.5f64.powi(pr as i32));
    let mut block = 0.0;
    for k in 0..pl as i64 {
        let i = -l0 - 1 - k;
        block += diff(i) * 0.5f64.powi(i.unsigned_abs() as i32);
    }
    sum += block / (1.0 - 0.5f64.powi(pl as i32));
    sum
}

impl fmt::Display for SeqSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.left_tail.token())?;
        if !self.left_core.is_empty() {
            write!(f, "{} ", self.left_core)?;
        }
        f.write_str(".")?;
        if !self.right_core.is_empty() {
            write!(f, " {}", self.right_core)?;
        }
        write!(f, " {}", self.right_tail.token())
    }
}

fn parse_tail(tok: &str) -> Result<Tail> {
    let inner = tok
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .and_then(|t| t.strip_suffix('*'))
        .ok_or_else(|| Error::Parse(format!("malformed tail {tok:?}, expected e.g. [01*]")))?;
    Tail::periodic(inner.parse()?)
}

/// Splits one side of the dot into (tail, core). Tails are optional and
/// default to all zeros.
fn parse_side(text: &str, left: bool) -> Result<(Tail, Word)> {
    let text = text.trim();
    let (tail_tok, core) = if left {
        match text.find(']') {
            Some(end) if text.starts_with('[') => (Some(&text[..=end]), &text[end + 1..]),
            _ => (None, text),
        }
    } else {
        match text.find('[') {
            Some(start) => (Some(&text[start..]), &text[..start]),
            None => (None, text),
        }
    };
    let tail = match tail_tok {
        Some(t) => parse_tail(t.trim())?,
        None => Tail::Zeros,
    };
    Ok((tail, core.parse()?))
}

impl FromStr for SeqSpec {
    type Err = Error;
    /// Syntax: `"[0*] 1 . 0 1 [01*]"`, i.e. left tail, left core, dot,
    /// right core, right tail.
    fn from_str(s: &str) -> Result<SeqSpec> {
        let (l, r) = s
            .split_once('.')
            .ok_or_else(|| Error::Parse(format!("sequence {s:?} has no '.' separator")))?;
        let (lt, lc) = parse_side(l, true)?;
        let (rt, rc) = parse_side(r, false)?;
        Ok(SeqSpec::new(lt, lc, rc, rt))
    }
}

impl Serialize for SeqSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeqSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<SeqSpec, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The cylinder of sequences agreeing with `word` from position `anchor` on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cylinder {
    pub word: Word,
    pub anchor: i64,
}

impl Cylinder {
    pub fn contains(&self, seq: &SeqSpec) -> bool {
        let hi = self.anchor + self.word.len() as i64 - 1;
        seq.truncate(self.anchor, hi) == self.word
    }
}
