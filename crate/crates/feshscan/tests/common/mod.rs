//! Shared helpers for the integration suites: transcendental square-well
//! oracles (independent of the engine code) and TOML model builders.
#![allow(dead_code)]

use std::f64::consts::PI;

/// s-wave bound-state energies of a square well of the given depth and range
/// (units ħ²/2m = 1), deepest first, from the matching condition
/// k·cot(kR) = −κ with κ = √(depth − k²), solved by bisection.
pub fn square_well_levels(depth: f64, range: f64) -> Vec<f64> {
    let kmax = depth.sqrt();
    let g = |k: f64| {
        let kappa = (depth - k * k).max(0.0).sqrt();
        k * (k * range).cos() / (k * range).sin() + kappa
    };
    let mut out = Vec::new();
    let mut n = 0usize;
    loop {
        let mut lo = (n as f64 + 0.5) * PI / range;
        if lo >= kmax {
            break;
        }
        let mut hi = ((n as f64 + 1.0) * PI / range).min(kmax * (1.0 - 1e-15));
        // g(lo) = κ > 0 (cot vanishes) and g decreases to −∞ at the branch
        // end (or is negative at kmax when the state is barely bound).
        if g(hi) > 0.0 {
            break; // shallowest state not yet bound at this depth
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k = 0.5 * (lo + hi);
        out.push(-(depth - k * k));
        n += 1;
    }
    out
}

/// Analytic scattering length of an attractive square well (depth > 0).
pub fn square_well_a_attractive(depth: f64, range: f64) -> f64 {
    let k = depth.sqrt();
    range - (k * range).tan() / k
}

/// Analytic scattering length of a repulsive square well (height > 0).
pub fn square_well_a_repulsive(height: f64, range: f64) -> f64 {
    let k = height.sqrt();
    range - (k * range).tanh() / k
}

/// Standard two-channel model: attractive square-well U (range 1), repulsive
/// gaussian V (depth 0.5, range 1), gaussian coupling profile (range 0.8).
/// `extra` appends further TOML sections ([scan], [magnetic_map], ...).
pub fn model_toml(
    u_depth: f64,
    kind: &str,
    w_depth: f64,
    panels: usize,
    nodes_per_panel: usize,
    extra: &str,
) -> String {
    format!(
        r#"
[potential_U]
shape = "square-well"
depth = {u_depth}
range = 1.0
sign = "attractive"

[potential_V]
shape = "gaussian"
depth = 0.5
range = 1.0
sign = "repulsive"

[coupling]
kind = "{kind}"
shape = "gaussian"
depth = {w_depth}
range = 0.8

[grid]
r_max = 10.0
panels = {panels}
nodes_per_panel = {nodes_per_panel}
fd_points = 2000

{extra}
"#
    )
}
