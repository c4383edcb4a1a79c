//! Magnetic-field picture: an affine map λ(B) turns the swept curve into
//! a(B), and a Levenberg–Marquardt fit of a(B) = a_bg + Δ/(B − B_res)
//! recovers the resonance position and width.  The fitted Δ must agree with
//! the annotated pole residue through Δ = c_j / (dλ/dB).
//!
//! Run with: cargo run --example feshbach_fit

use feshscan::config::parse_config;
use feshscan::scan::{fit_feshbach, sweep};

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

[scan]
lambda_min = 0.5
lambda_max = 9.0
points = 240
refine_threshold = 0.25
max_refinements = 80

[magnetic_map]
lambda_ref = 1.0
slope = -0.5
b_ref = 100.0
"#;

fn main() -> anyhow::Result<()> {
    let cfg = parse_config(MODEL)?;
    let map = cfg.magnetic_map.expect("model defines a magnetic map");
    let out = sweep(&cfg)?;
    println!(
        "swept {} samples, {} annotated pole(s)",
        out.curve.samples.len(),
        out.curve.poles.len()
    );

    let fit = fit_feshbach(&out.curve, 0, &map)?;
    println!("\nfit of a(B) = a_bg + Delta/(B − B_res) around pole 0:");
    println!("  a_bg  = {:+.9e}", fit.a_inf);
    println!("  Delta = {:+.9e}", fit.delta);
    println!("  B_res = {:+.9e}", fit.b_res);
    println!("  rms   = {:.3e} over the window ({} iterations)", fit.rms, fit.iterations);

    // Cross-checks against the annotation and the map.
    let pole = &out.curve.poles[0];
    println!("\nannotated residue     c_j        = {:+.9e}", pole.c_j);
    println!("fitted Delta · slope             = {:+.9e}", fit.delta * map.slope);
    println!(
        "map position of fitted B_res     = {:.9e}  (annotated λ_j = {:.9e})",
        map.lambda_of_b(fit.b_res),
        pole.lambda_j
    );
    Ok(())
}
