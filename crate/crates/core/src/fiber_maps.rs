//! The fiber maps `f0`, `f1` on `[0,1]`, their compositions and the
//! grid-sampled condition checker.
//!
//! `f1` is the affine reflection `x ↦ c1·(1−x)`. `f0` is built from a
//! continuous, piecewise-linear derivative: the derivative starts at `beta`
//! at 0, passes through the user knots, falls linearly to `lambda` at a
//! closing knot that is solved so that `f0(1) = 1`, and stays `lambda` up to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for pointwise equalities and strict margins.
pub const EVAL_TOL: f64 = 1e-12;
/// Tolerance for matching `f0^N(a0)` with `a1`.
pub const TRANSIT_TOL: f64 = 1e-9;
pub const DEFAULT_RESOLUTION: f64 = 1e-4;
/// Hard cap on plain `f0` iteration counts.
pub const MAX_ITER: usize = 100_000;

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

/// Interior shape of `f0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeControls {
    /// Interior knots `[x, f0'(x)]`, strictly increasing in `x`.
    pub knots: Vec<[f64; 2]>,
    /// Left endpoint of the fundamental domain `I0`.
    pub a0: f64,
    /// Number of `f0` steps from `I0` to `I1`; chosen automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transit: Option<usize>,
}

/// The JSON family document: `beta`, `lambda`, `c1`, `shape_controls`, `resolution`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub beta: f64,
    pub lambda: f64,
    pub c1: f64,
    pub shape_controls: ShapeControls,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

impl FamilySpec {
    /// The canonical family used throughout the tests and the CLI defaults.
    pub fn canonical() -> FamilySpec {
        FamilySpec {
            beta: 1.2,
            lambda: 0.5,
            c1: 0.34,
            shape_controls: ShapeControls {
                knots: vec![[0.03, 1.05], [0.09, 1.05], [0.11, 1.16], [0.6, 1.16]],
                a0: 0.066,
                transit: None,
            },
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn from_json(text: &str) -> Result<FamilySpec> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("family JSON: {e}")))
    }
}

/// Derived parameters of a built pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberMapParams {
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub alpha: f64,
    pub alpha_bar: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
}

impl FiberMapParams {
    /// `kappa = alpha_bar * alpha`, the expansion of one successor step.
    pub fn kappa(&self) -> f64 {
        self.alpha_bar * self.alpha
    }

    /// `lambda(1-lambda)/(1-1/beta)`; the standing inequality asks for > 1.
    pub fn standing_value(&self) -> f64 {
        standing_value(self.beta, self.lambda)
    }
}

pub fn standing_value(beta: f64, lambda: f64) -> f64 {
    lambda * (1.0 - lambda) / (1.0 - 1.0 / beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    F0,
    F1,
}

impl MapKind {
    pub fn symbol(self) -> u8 {
        match self {
            MapKind::F0 => 0,
            MapKind::F1 => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

/// `f0` as an integrated piecewise-linear derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeSpline {
    xs: Vec<f64>,
    ds: Vec<f64>,
    values: Vec<f64>,
    lambda: f64,
}

impl DerivativeSpline {
    fn new(beta: f64, lambda: f64, knots: &[[f64; 2]]) -> Result<DerivativeSpline> {
        let mut xs = vec![0.0];
        let mut ds = vec![beta];
        for (i, k) in knots.iter().enumerate() {
            let (x, d) = (k[0], k[1]);
            if !(x > 0.0 && x < 1.0) || !x.is_finite() {
                return Err(Error::Construction(format!("knot {i} at x={x} is outside (0,1)")));
            }
            if x <= *xs.last().unwrap() {
                return Err(Error::Construction(format!("knot {i} is not strictly increasing")));
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Construction(format!(
                    "knot {i} has derivative {d}; the interpolant would not be monotone"
                )));
            }
            xs.push(x);
            ds.push(d);
        }
        let mut values = vec![0.0];
        for i in 1..xs.len() {
            let h = xs[i] - xs[i - 1];
            values.push(values[i - 1] + 0.5 * h * (ds[i - 1] + ds[i]));
        }
        // Closing knot: the derivative falls linearly to lambda at xc and stays there.
        let (xk, dk, ak) = (*xs.last().unwrap(), *ds.last().unwrap(), *values.last().unwrap());
        if dk <= lambda {
            return Err(Error::Construction(format!(
                "last knot derivative {dk} must exceed lambda={lambda} to close the interpolant"
            )));
        }
        let xc = xk + 2.0 * (1.0 - ak - lambda * (1.0 - xk)) / (dk - lambda);
        if !(xc > xk && xc <= 1.0) {
            return Err(Error::Construction(format!(
                "closing knot at {xc} lies outside ({xk}, 1]; the knots do not integrate to 1"
            )));
        }
        xs.push(xc);
        ds.push(lambda);
        values.push(1.0 - lambda * (1.0 - xc));
        Ok(DerivativeSpline { xs, ds, values, lambda })
    }

    /// Knot abscissae including 0 and the solved closing knot.
    pub fn knots(&self) -> Vec<[f64; 2]> {
        self.xs.iter().zip(&self.ds).map(|(&x, &d)| [x, d]).collect()
    }

    pub fn closing_knot(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, self.ds[0]);
        }
        if x >= 1.0 {
            return (1.0, self.lambda);
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return (1.0 - self.lambda * (1.0 - x), self.lambda);
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let s = (self.ds[i + 1] - self.ds[i]) / h;
        (self.values[i] + self.ds[i] * t + 0.5 * s * t * t, self.ds[i] + s * t)
    }
}

/// Value, derivative sign and log-derivative of a composition at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub log_abs_deriv: f64,
    pub sign: f64,
}

impl Jet {
    pub fn deriv(&self) -> f64 {
        self.sign * self.log_abs_deriv.exp()
    }
}

/// The certified pair `(f0, f1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberMapPair {
    pub params: FiberMapParams,
    pub spec: FamilySpec,
    f0: DerivativeSpline,
}

/// A borrowed view of one of the two maps.
#[derive(Clone, Copy, Debug)]
pub struct FiberMap<'a> {
    pub kind: MapKind,
    pair: &'a FiberMapPair,
}

impl FiberMap<'_> {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        self.pair.step(self.kind.symbol(), x)
    }

    pub fn orientation(&self) -> Orientation {
        match self.kind {
            MapKind::F0 => Orientation::Preserving,
            MapKind::F1 => Orientation::Reversing,
        }
    }

    /// Unique preimage of `y`, by bisection.
    pub fn invert(&self, y: f64) -> Result<f64> {
        self.pair.invert(self.kind, y)
    }
}

/// Builds the pair described by `spec`; the remaining parameters are derived.
pub fn build_pair(spec: &FamilySpec) -> Result<FiberMapPair> {
    let FamilySpec { beta, lambda, c1, .. } = *spec;
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::Parameter(format!("beta={beta} must be > 1")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("lambda={lambda} must lie in (0,1)")));
    }
    if !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::Parameter(format!("c1={c1} must lie in (0,1]")));
    }
    if !(spec.resolution > 0.0) {
        return Err(Error::Parameter("resolution must be positive".into()));
    }
    let a0 = spec.shape_controls.a0;
    if !(a0 > 0.0 && a0 < 1.0) {
        return Err(Error::Parameter(format!("a0={a0} must lie in (0,1)")));
    }
    let f0 = DerivativeSpline::new(beta, lambda, &spec.shape_controls.knots)?;
    let mut pair = FiberMapPair {
        params: FiberMapParams {
            beta,
            lambda,
            gamma: c1,
            gamma_prime: c1,
            alpha: 1.0,
            alpha_bar: c1,
            n: 0,
            a0,
            b0: 0.0,
            a1: 0.0,
            b1: 0.0,
            c1,
        },
        spec: spec.clone(),
        f0,
    };
    let b0 = pair.f0(a0);
    let n = match spec.shape_controls.transit {
        Some(0) => return Err(Error::Parameter("transit must be positive".into())),
        Some(n) => n,
        None => pair.auto_transit(a0)?,
    };
    let a1 = pair.f0_iter(a0, n);
    let b1 = pair.f0(a1);
    pair.params.b0 = b0;
    pair.params.n = n;
    pair.params.a1 = a1;
    pair.params.b1 = b1;
    let min_d = pair.min_transit_deriv(spec.resolution);
    pair.params.alpha = (lambda * min_d / pair.params.alpha_bar).sqrt();
    Ok(pair)
}

impl FiberMapPair {
    pub fn from_spec(spec: &FamilySpec) -> Result<FiberMapPair> {
        build_pair(spec)
    }

    pub fn canonical() -> FiberMapPair {
        build_pair(&FamilySpec::canonical()).expect("canonical family builds")
    }

    pub fn f0_spline(&self) -> &DerivativeSpline {
        &self.f0
    }

    pub fn map(&self, kind: MapKind) -> FiberMap<'_> {
        FiberMap { kind, pair: self }
    }

    /// One map application: value and derivative.
    #[inline]
    pub fn step(&self, symbol: u8, x: f64) -> (f64, f64) {
        if symbol == 0 {
            self.f0.eval(x)
        } else {
            let c1 = self.params.c1;
            (c1 * (1.0 - x), -c1)
        }
    }

    #[inline]
    pub fn f0(&self, x: f64) -> f64 {
        self.f0.eval(x).0
    }

    #[inline]
    pub fn f1(&self, x: f64) -> f64 {
        self.params.c1 * (1.0 - x)
    }

    pub fn f0_iter(&self, mut x: f64, n: usize) -> f64 {
        for _ in 0..n {
            x = self.f0(x);
        }
        x
    }

    /// `f0^{-1}(y)` for `y ∈ [0,1]`.
    pub fn f0_inv(&self, y: f64) -> f64 {
        self.invert(MapKind::F0, y).expect("f0 is onto [0,1]")
    }

    /// `f0^{-2}(b0) = f0^{-1}(a0)`, the left end of the admissible band.
    pub fn band_lo(&self) -> f64 {
        self.f0_inv(self.params.a0)
    }

    /// `f1^{-1}` on `[0, c1]`, closed form.
    pub fn f1_inv(&self, y: f64) -> f64 {
        1.0 - y / self.params.c1
    }

    /// `f_[word](x)`; the first symbol is applied first.
    pub fn compose_value(&self, word: &[u8], x: f64) -> f64 {
        word.iter().fold(x, |y, &s| self.step(s, y).0)
    }

    /// Signed derivative of `f_[word]` at `x` as a plain product.
    pub fn compose_deriv(&self, word: &[u8], x: f64) -> f64 {
        let mut y = x;
        let mut d = 1.0;
        for &s in word {
            let (v, dv) = self.step(s, y);
            d *= dv;
            y = v;
        }
        d
    }

    /// Value and log-derivative; safe for long words.
    pub fn compose(&self, word: &[u8], x: f64) -> Jet {
        let mut y = x;
        let mut log = 0.0;
        let mut sign = 1.0;
        for &s in word {
            let (v, dv) = self.step(s, y);
            if dv < 0.0 {
                sign = -sign;
            }
            log += dv.abs().ln();
            y = v;
        }
        Jet { value: y, log_abs_deriv: log, sign }
    }

    /// Bisection inverse of a single map, `|map(x) - y| <= 1e-12`.
    pub fn invert(&self, kind: MapKind, y: f64) -> Result<f64> {
        let (lo_val, hi_val) = match kind {
            MapKind::F0 => (0.0, 1.0),
            MapKind::F1 => (0.0, self.params.c1),
        };
        if !(y >= lo_val - EVAL_TOL && y <= hi_val + EVAL_TOL) {
            return Err(Error::Domain(format!("y={y} is outside the range [{lo_val}, {hi_val}]")));
        }
        let s = kind.symbol();
        let increasing = kind == MapKind::F0;
        let g = |x: f64| {
            let v = self.step(s, x).0 - y;
            if increasing {
                v
            } else {
                -v
            }
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if g(lo) >= 0.0 {
            return Ok(lo);
        }
        if g(hi) <= 0.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = if g(hi).abs() < g(lo).abs() { hi } else { lo };
        if g(x).abs() > EVAL_TOL {
            return Err(Error::Internal(format!("bisection residual {} at y={y}", g(x).abs())));
        }
        Ok(x)
    }

    /// Sup of the region where `f0' >= 1`.
    fn expanding_edge(&self) -> f64 {
        let knots = self.f0.knots();
        let mut edge = 0.0;
        for w in knots.windows(2) {
            let ([x0, d0], [x1, d1]) = (w[0], w[1]);
            if d0 >= 1.0 && d1 >= 1.0 {
                edge = x1;
            } else if d0 >= 1.0 && d1 < 1.0 {
                edge = x0 + (d0 - 1.0) / (d0 - d1) * (x1 - x0);
            } else if d0 < 1.0 && d1 >= 1.0 {
                edge = x1;
            }
        }
        edge
    }

    /// First `n` with `f0^n(a0)` in the contracting region and `f1(f0^n a0) < a0`.
    fn auto_transit(&self, a0: f64) -> Result<usize> {
        let edge = self.expanding_edge();
        let mut x = a0;
        for n in 1..=MAX_ITER {
            x = self.f0(x);
            if x >= 1.0 {
                break;
            }
            if x > edge && self.f1(x) < a0 {
                return Ok(n);
            }
        }
        Err(Error::Construction(format!(
            "no transit from a0={a0} reaches the contracting region near 1"
        )))
    }

    fn min_transit_deriv(&self, resolution: f64) -> f64 {
        let p = &self.params;
        grid(p.a0, p.b0, resolution)
            .map(|x| self.compose(&vec![0; p.n], x).log_abs_deriv.exp())
            .fold(f64::INFINITY, f64::min)
    }

    /// Grid-sampled check of every standing condition.
    pub fn validate(&self, resolution: f64) -> ConditionReport {
        validate(self, resolution)
    }
}

/// Grid `lo = x_0 < ... < x_k = hi` with spacing at most `step`.
pub fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> + Clone {
    let k = (((hi - lo) / step).ceil() as usize).max(1);
    (0..=k).map(move |i| if i == k { hi } else { lo + (hi - lo) * (i as f64) / (k as f64) })
}

/// One condition of the report. Strict inequalities must clear `tolerance`;
/// non-strict ones may undershoot it and equalities must hold to it.
/// `margin` is the smallest strict slack minus `tolerance` (for conditions
/// with no strict part, the smallest non-strict slack, then the equality slack); on failure it is the worst
/// violation and `witness` the grid point where it occurs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecomputedDomains {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
    pub band_lo: f64,
    pub transit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub resolution: f64,
    pub tolerance: f64,
    pub params: FiberMapParams,
    pub standing_value: f64,
    pub conditions: Vec<ConditionCheck>,
    pub optional: Vec<ConditionCheck>,
    pub recomputed: RecomputedDomains,
    pub all_pass: bool,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().chain(&self.optional).find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

struct Acc {
    strict: f64,
    weak_raw: f64,
    other: f64,
    witness: Option<f64>,
    worst: f64,
    notes: Vec<String>,
}

impl Acc {
    fn new() -> Acc {
        Acc {
            strict: f64::INFINITY,
            weak_raw: f64::INFINITY,
            other: f64::INFINITY,
            witness: None,
            worst: f64::INFINITY,
            notes: Vec::new(),
        }
    }

    fn track(&mut self, m: f64, at: Option<f64>, what: &str) -> f64 {
        let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
        if m < self.worst {
            self.worst = m;
            self.witness = at;
        }
        if m < 0.0 && !self.notes.iter().any(|n| n == what) {
            self.notes.push(what.to_string());
        }
        m
    }

    fn strict(&mut self, s: f64, at: Option<f64>, what: &str) {
        let m = self.track(s - EVAL_TOL, at, what);
        self.strict = self.strict.min(m);
    }

    fn weak(&mut self, s: f64, at: Option<f64>, what: &str) {
        let m = self.track(s + EVAL_TOL, at, what);
        self.other = self.other.min(m);
        self.weak_raw = self.weak_raw.min(s);
    }

    fn equal(&mut self, r: f64, at: Option<f64>, what: &str) {
        let m = self.track(EVAL_TOL - r.abs(), at, what);
        self.other = self.other.min(m);
    }

    fn flag(&mut self, ok: bool, at: Option<f64>, what: &str) {
        let m = self.track(if ok { f64::INFINITY } else { f64::NEG_INFINITY }, at, what);
        self.other = self.other.min(m);
    }

    fn finish(self, name: &str) -> ConditionCheck {
        let passed = self.strict >= 0.0 && self.other >= 0.0;
        let margin = if self.strict.is_finite() {
            self.strict
        } else if self.weak_raw.is_finite() {
            self.weak_raw
        } else {
            self.other
        };
        ConditionCheck {
            name: name.to_string(),
            passed,
            margin: if passed { margin } else { self.worst },
            witness: if passed { None } else { self.witness },
            detail: self.notes.join("; "),
        }
    }
}

pub fn validate(pair: &FiberMapPair, resolution: f64) -> ConditionReport {
    let p = &pair.params;
    let res = if resolution > 0.0 { resolution } else { DEFAULT_RESOLUTION };
    let mut checks = Vec::new();

    // (F0.i)
    let mut a = Acc::new();
    a.strict(p.beta - 1.0, None, "beta > 1");
    a.strict(p.lambda, None, "lambda > 0");
    a.strict(1.0 - p.lambda, None, "lambda < 1");
    a.flag(pair.f0(0.0) == 0.0, Some(0.0), "f0(0) = 0");
    a.flag(pair.f0(1.0) == 1.0, Some(1.0), "f0(1) = 1");
    a.equal(pair.f0.eval(0.0).1 - p.beta, Some(0.0), "f0'(0) = beta");
    a.equal(pair.f0.eval(1.0).1 - p.lambda, Some(1.0), "f0'(1) = lambda");
    for x in grid(0.0, 1.0, res) {
        let (v, d) = pair.f0.eval(x);
        a.strict(d, Some(x), "f0' > 0");
        a.weak(d - p.lambda, Some(x), "f0' >= lambda");
        a.weak(p.beta - d, Some(x), "f0' <= beta");
        if x > 0.0 && x < 1.0 {
            a.strict(v - x, Some(x), "no interior fixed point");
        }
    }
    checks.push(a.finish("F0.i"));

    // (F0.ii)
    let a0 = p.a0;
    let b0 = pair.f0(a0);
    let mut recomputed_n = None;
    let mut x = a0;
    let mut best = f64::INFINITY;
    for n in 1..=MAX_ITER {
        x = pair.f0(x);
        let r = (x - p.a1).abs();
        best = best.min(r);
        if r <= TRANSIT_TOL {
            recomputed_n = Some(n);
            break;
        }
        if x >= 1.0 || x > p.a1 + 1.0 {
            break;
        }
    }
    let a1 = match recomputed_n {
        Some(n) => pair.f0_iter(a0, n),
        None => p.a1,
    };
    let b1 = pair.f0(a1);
    let mut a = Acc::new();
    a.strict(a0, Some(a0), "a0 > 0");
    a.strict(b0 - a0, Some(a0), "a0 < b0");
    a.weak(a1 - b0, Some(a1), "b0 <= a1");
    a.strict(b1 - a1, Some(a1), "a1 < b1");
    a.strict(1.0 - b1, Some(b1), "b1 < 1");
    a.equal(b0 - p.b0, Some(a0), "b0 = f0(a0)");
    a.equal(b1 - p.b1, Some(a1), "b1 = f0(a1)");
    a.flag(recomputed_n == Some(p.n), Some(a1), "f0^N(I0) = I1 with the declared N");
    a.strict(p.alpha - 1.0, None, "alpha > 1");
    let transit = vec![0u8; p.n];
    for x in grid(a0, b0, res) {
        let d = pair.compose(&transit, x).log_abs_deriv.exp();
        a.strict(p.lambda * d - p.alpha, Some(x), "lambda (f0^N)' > alpha on I0");
    }
    for x in grid(0.0, b0, res) {
        a.strict(pair.f0.eval(x).1 - 1.0, Some(x), "f0 expanding on [0, b0]");
    }
    for x in grid(a1.min(1.0), 1.0, res) {
        a.strict(1.0 - pair.f0.eval(x).1, Some(x), "f0 contracting on [a1, 1]");
    }
    checks.push(a.finish("F0.ii"));

    // (F1.i)
    let mut a = Acc::new();
    let mut dmax: f64 = 0.0;
    let mut dmin = f64::INFINITY;
    for x in grid(0.0, 1.0, res) {
        let (v, d) = pair.step(1, x);
        a.strict(-d, Some(x), "f1 decreasing");
        a.weak(v, Some(x), "f1 maps into [0,1]");
        a.weak(1.0 - v, Some(x), "f1 maps into [0,1]");
        dmax = dmax.max(d.abs());
        dmin = dmin.min(d.abs());
    }
    a.strict(1.0 - p.gamma, None, "gamma < 1");
    a.strict(p.gamma_prime, None, "gamma' > 0");
    a.weak(p.gamma - dmax, None, "|f1'| <= gamma");
    a.weak(dmin - p.gamma_prime, None, "|f1'| >= gamma'");
    a.weak(p.gamma - p.gamma_prime, None, "gamma' <= gamma");
    checks.push(a.finish("F1.i"));

    // (F1.ii)
    let mut a = Acc::new();
    let f1a1 = pair.f1(a1);
    let f11a1 = pair.f1(f1a1);
    let (lo, hi) = if f11a1 <= a1 { (f11a1, a1) } else { (a1, f11a1) };
    for x in grid(lo, hi, res) {
        a.weak(pair.step(1, x).1.abs() - p.alpha_bar, Some(x), "|f1'| >= alpha_bar");
    }
    a.strict(p.alpha_bar * p.alpha - 1.0, None, "alpha_bar > 1/alpha");
    checks.push(a.finish("F1.ii"));

    // (F01)
    let mut a = Acc::new();
    a.flag(pair.f1(1.0) == 0.0, Some(1.0), "f1(1) = 0");
    checks.push(a.finish("F01.a"));

    let mut a = Acc::new();
    for x in grid(a1.min(1.0), 1.0, res) {
        a.strict(a0 - pair.f1(x), Some(x), "f1([a1,1]) inside (0, a0)");
    }
    checks.push(a.finish("F01.b"));

    let band_lo = pair.f0_inv(a0);
    let mut a = Acc::new();
    a.weak(p.c1 - band_lo, Some(band_lo), "f0^-2(b0) <= c1");
    a.flag(pair.f1(1.0).min(pair.f1(0.0)) <= 0.0, Some(1.0), "f1([0,1]) reaches 0");
    checks.push(a.finish("F01.c"));

    let sv = standing_value(p.beta, p.lambda);
    let mut a = Acc::new();
    a.strict(sv - 1.0, None, "lambda(1-lambda)/(1-1/beta) > 1");
    checks.push(a.finish("standing"));

    // (F_B), optional
    let mut a = Acc::new();
    let c = pair.f1(0.0).max(pair.f1(1.0));
    for x in grid(c.min(1.0), 1.0, res) {
        let d = pair.f0.eval(x).1;
        a.strict(d, Some(x), "f0' > 0 on [c,1]");
        a.strict(1.0 - d, Some(x), "f0' < 1 on [c,1]");
    }
    let optional = vec![a.finish("F_B")];

    let all_pass = checks.iter().all(|c| c.passed);
    ConditionReport {
        resolution: res,
        tolerance: EVAL_TOL,
        params: p.clone(),
        standing_value: sv,
        conditions: checks,
        optional,
        recomputed: RecomputedDomains {
            n: recomputed_n,
            a0,
            b0,
            a1,
            b1,
            band_lo,
            transit_residual: if recomputed_n.is_some() { (a1 - p.a1).abs() } else { best },
        },
        all_pass,
    }
}
