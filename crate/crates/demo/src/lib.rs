//! Browser bindings: pressure curve, periodic orbits of a word, fiber width profile.
//! Every export takes the family as JSON (empty string for the canonical family)
//! and returns a JSON document.

use porcupine_core::domains::width_profile;
use porcupine_core::export::to_json;
use porcupine_core::fiber_maps::{build_pair, FamilySpec, FiberMapPair};
use porcupine_core::spectrum::{enumerate_orbits, fixed_points, gap_from_orbits, SpectrumEntry};
use porcupine_core::symbolic::{SeqSpec, Word};
use porcupine_core::thermo::{curve_from_table, default_theta, OrbitTable};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Word length cap for in-browser enumeration.
pub const MAX_N: usize = 12;

fn pair_from(family: &str) -> Result<FiberMapPair, String> {
    let spec = if family.trim().is_empty() {
        FamilySpec::canonical()
    } else {
        FamilySpec::from_json(family).map_err(|e| e.to_string())?
    };
    build_pair(&spec).map_err(|e| e.to_string())
}

pub fn pressure_json(family: &str, n: usize, t_lo: f64, t_hi: f64, steps: usize) -> Result<String, String> {
    if !(1..=MAX_N).contains(&n) {
        return Err(format!("n must lie in 1..={MAX_N}"));
    }
    let pair = pair_from(family)?;
    let orbits = enumerate_orbits(&pair, 1..=n);
    let gap = gap_from_orbits(&pair, &orbits, n);
    let table = OrbitTable::from_orbits(n, orbits);
    let c = curve_from_table(&table, gap.log_beta, t_lo, t_hi, steps, default_theta(&gap)).map_err(|e| e.to_string())?;
    to_json(&json!({"curve": c, "log_beta": gap.log_beta, "beta_tilde_n": gap.beta_tilde_n, "margin": gap.margin}))
        .map_err(|e| e.to_string())
}

pub fn orbits_json(family: &str, word: &str) -> Result<String, String> {
    let pair = pair_from(family)?;
    let w: Word = word.parse().map_err(|e: porcupine_core::error::Error| e.to_string())?;
    if w.is_empty() || w.len() > 24 {
        return Err("word length must lie in 1..=24".into());
    }
    let orbits = fixed_points(&pair, &w).map_err(|e| e.to_string())?;
    let entries: Vec<SpectrumEntry> = orbits.iter().map(SpectrumEntry::from).collect();
    let graph: Vec<[f64; 2]> = (0..=400)
        .map(|i| {
            let x = i as f64 / 400.0;
            [x, pair.compose_value(&w, x)]
        })
        .collect();
    to_json(&json!({"word": w, "orbits": entries, "graph": graph})).map_err(|e| e.to_string())
}

pub fn widths_json(family: &str, seq: &str, max_depth: usize) -> Result<String, String> {
    let pair = pair_from(family)?;
    let s: SeqSpec = seq.parse().map_err(|e: porcupine_core::error::Error| e.to_string())?;
    let depths: Vec<usize> = (0..=max_depth.min(200)).collect();
    let widths = width_profile(&pair, &s, &depths).map_err(|e| e.to_string())?;
    let p = &pair.params;
    let mut ones = 0;
    let bound: Vec<f64> = depths
        .iter()
        .map(|&m| {
            if m > 0 && s.bit(-(m as i64)) == 1 {
                ones += 1;
            }
            (ones as f64 * p.gamma.ln() + (m - ones) as f64 * p.beta.ln()).exp()
        })
        .collect();
    to_json(&json!({"seq": s, "depths": depths, "widths": widths, "bound": bound})).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn pressure(family: &str, n: usize, t_lo: f64, t_hi: f64, steps: usize) -> Result<String, JsError> {
    pressure_json(family, n, t_lo, t_hi, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn orbits(family: &str, word: &str) -> Result<String, JsError> {
    orbits_json(family, word).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn widths(family: &str, seq: &str, max_depth: usize) -> Result<String, JsError> {
    widths_json(family, seq, max_depth).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn canonical_family() -> String {
    to_json(&FamilySpec::canonical()).unwrap_or_default()
}
