//! Check a model definition against the engine's standing assumptions:
//! H_V must have no bound state, a_V must be finite, the closed channel must
//! bind at least one state, and every profile must decay inside the box.
//!
//! Run with: cargo run --example validate

use feshscan::config::{config_hash, parse_config, validate_assumptions};

const MODEL: &str = r#"
[potential_U]
shape = "square-well"
depth = 12.0
range = 1.0
sign = "attractive"

[potential_V]
shape = "gaussian"
depth = 0.5
range = 1.0
sign = "repulsive"

[coupling]
kind = "local"
shape = "gaussian"
depth = 0.35
range = 0.8

[grid]
r_max = 10.0
panels = 20
nodes_per_panel = 8
"#;

fn main() -> anyhow::Result<()> {
    let cfg = parse_config(MODEL)?;
    let report = validate_assumptions(&cfg)?;

    println!("model {}", config_hash(&cfg));
    println!(
        "closed channel binds {} state(s):",
        report.n_bound_states_u
    );
    for (j, e) in report.closed_channel_energies.iter().enumerate() {
        println!("  E_{j} = {e:+.12e}");
    }
    println!(
        "open channel: H_V nonnegative = {} (lowest eigenvalue {:+.3e})",
        report.hv_nonneg, report.hv_min_eigenvalue
    );
    if let Some(a) = report.a_v {
        println!("  a_V = {a:+.12e}");
    }
    println!("profile tails decay inside the box: {}", report.tails_ok);

    if report.violations.is_empty() {
        println!("all assumptions hold");
    } else {
        println!("VIOLATIONS:");
        for v in &report.violations {
            println!("  - {v}");
        }
    }
    Ok(())
}
