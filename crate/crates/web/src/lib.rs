//! wasm-bindgen entry points for `www/index.html`. Every function returns a
//! JSON string; errors become JavaScript exceptions carrying the message.

use lie_psido::experiments::{render_json, run_default};
use lie_psido::subelliptic::{weyl_slope, SubLaplacian, WeylMode};
use lie_psido::traces::{heat_slope, SpectrumLadder};
use lie_psido::Group;
use wasm_bindgen::prelude::*;

/// Experiments quick enough to run on the page's main thread.
pub const QUICK: [&str; 6] = ["plancherel", "contour", "fio", "dixmier", "heat-slope", "weyl"];

fn fail(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn operator(name: &str) -> Result<SubLaplacian, JsValue> {
    SubLaplacian::by_name(Group::Su2, name).map_err(fail)
}

#[wasm_bindgen]
pub fn quick_experiments() -> String {
    serde_json::to_string(&QUICK).expect("static list")
}

/// Runs one of [`QUICK`] with its defaults and returns the JSON summary.
#[wasm_bindgen]
pub fn run_experiment(name: &str, seed: u64) -> Result<String, JsValue> {
    if !QUICK.contains(&name) {
        return Err(fail(format!("'{name}' is not available in the browser")));
    }
    run_default(name, seed).and_then(|o| render_json(&o)).map_err(fail)
}

/// `N(λ)` on SU(2) for `λ` log-spaced in `[2, lambda_max]`, with its log-log fit.
#[wasm_bindgen]
pub fn weyl_curve(name: &str, lambda_max: f64, points: usize) -> Result<String, JsValue> {
    if !(2.0..=2000.0).contains(&lambda_max) {
        return Err(fail("lambda_max must lie in [2, 2000]"));
    }
    let sub = operator(name)?;
    let report = weyl_slope(&sub, &logspace(2.0, lambda_max, points), WeylMode::Multiplicity).map_err(fail)?;
    serde_json::to_string(&report).map_err(fail)
}

/// `Tr e^{-tL}` on SU(2) for `t` log-spaced in `[t_min, t_max]`, with its log-log fit.
#[wasm_bindgen]
pub fn heat_curve(name: &str, t_min: f64, t_max: f64, points: usize) -> Result<String, JsValue> {
    if !(t_min >= 1e-4 && t_max > t_min && t_max <= 10.0) {
        return Err(fail("need 1e-4 <= t_min < t_max <= 10"));
    }
    let sub = operator(name)?;
    let ladder = SpectrumLadder::new(&sub).map_err(fail)?;
    let report = heat_slope(&ladder, &logspace(t_min, t_max, points)).map_err(fail)?;
    serde_json::to_string(&report).map_err(fail)
}
