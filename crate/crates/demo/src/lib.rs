//! WebAssembly bindings for the browser demo. Every export takes and
//! returns JSON text; errors surface as JavaScript exceptions.

use iqp_core::config::{parse_config, Scenario, ScenarioConfig};
use iqp_core::credal::{born_product_witness, lower_upper, BoundsStatus};
use iqp_core::scenarios::builtin;
use iqp_core::typicality::verify_w11;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn build(config: &str) -> Result<Scenario, String> {
    parse_config(config)
        .and_then(|c| c.build())
        .map_err(|e| e.to_string())
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Built-in scenario configuration as pretty JSON.
pub fn scenario_json(name: &str) -> Result<String, String> {
    builtin(name)
        .map(|c| c.to_json())
        .ok_or_else(|| format!("unknown scenario \"{name}\""))
}

/// Label weights `‖E(l)Ψ(t)‖²` for every grid time.
pub fn weights(config: &str) -> Result<Value, String> {
    let sc = build(config)?;
    let sys = &sc.system;
    let rows = (0..sys.n_times())
        .map(|t| sys.label_weights(t).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({ "labels": sys.labels(), "weights": rows }))
}

/// Lower and upper probability of `event` after replacing the config's rule
/// block with `ruleset` (comma separated), `epsilon` and `alpha`.
pub fn bounds(config: &str, event: &str, ruleset: &str, epsilon: f64, alpha: f64) -> Result<Value, String> {
    let mut cfg: ScenarioConfig = parse_config(config).map_err(|e| e.to_string())?;
    cfg.rules.ruleset = ruleset
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    cfg.rules.epsilon = Some(epsilon);
    cfg.rules.alpha = Some(alpha);
    let sc = cfg.build().map_err(|e| e.to_string())?;
    let e = sc.event(event).map_err(|e| e.to_string())?;
    let b = lower_upper(&sc.constraints, &e).map_err(|e| e.to_string())?;
    Ok(json!({
        "event": event,
        "lower": finite(b.lower),
        "upper": finite(b.upper),
        "feasible": b.status == BoundsStatus::Solved,
        "constraints": sc.constraints.len(),
        "rules": sc.constraints.rules.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
    }))
}

/// Branch statistics on seeded vertex samples and the two branch bounds.
pub fn branch(config: &str, name: &str, delta: f64, samples: usize, seed: u64) -> Result<Value, String> {
    let sc = build(config)?;
    let b = sc.branch(name).ok_or_else(|| format!("no branch named \"{name}\""))?;
    let product = born_product_witness(&sc.system, &sc.space);
    let r = verify_w11(&sc.constraints, b, delta, samples, seed, std::slice::from_ref(&product))
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "branch": name,
        "epsilon": r.epsilon,
        "delta": r.delta,
        "expectation_bound": r.expectation_bound,
        "tail_bound": r.tail_bound,
        "worst_expectation": r.worst_expectation,
        "worst_tail": r.worst_tail,
        "expectation_verdict": r.expectation_verdict.to_string(),
        "tail_verdict": r.tail_verdict.to_string(),
        "samples": r.samples.iter().map(|s| json!([s.expectation, s.tail])).collect::<Vec<_>>(),
    }))
}

fn js<T: ToString>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scenario)]
pub fn js_scenario(name: &str) -> Result<String, JsError> {
    js(scenario_json(name))
}

#[wasm_bindgen(js_name = simulate)]
pub fn js_simulate(config: &str) -> Result<String, JsError> {
    js(weights(config))
}

#[wasm_bindgen(js_name = eventBounds)]
pub fn js_event_bounds(config: &str, event: &str, ruleset: &str, epsilon: f64, alpha: f64) -> Result<String, JsError> {
    js(bounds(config, event, ruleset, epsilon, alpha))
}

#[wasm_bindgen(js_name = branchStats)]
pub fn js_branch_stats(config: &str, name: &str, delta: f64, samples: u32, seed: u32) -> Result<String, JsError> {
    js(branch(config, name, delta, samples as usize, seed as u64))
}
