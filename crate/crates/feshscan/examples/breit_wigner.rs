//! Embedded resonances: when the offset closed-channel level sits above the
//! open-channel threshold (E_b = λ − |E_j| > 0), the level acquires a shift
//! and a width.  The example prints E_res and Γ across a λ window and shows
//! the Fermi-golden-rule scaling Γ ∝ ε² when the coupling is scaled by ε.
//!
//! Run with: cargo run --example breit_wigner

use feshscan::config::parse_config;
use feshscan::coupled::CoupledContext;

fn model(w_depth: f64) -> String {
    format!(
        r#"
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
depth = {w_depth}
range = 0.8

[grid]
r_max = 10.0
panels = 20
nodes_per_panel = 10
"#
    )
}

fn main() -> anyhow::Result<()> {
    let ctx = CoupledContext::new(&parse_config(&model(1.0))?)?;
    let pole = ctx.poles()[0];
    println!("closed-channel level |E_0| = {pole:.9e}");

    println!(
        "\n{:>10}  {:>14}  {:>14}  {:>12}",
        "λ/|E_0|", "E_b", "E_res", "Gamma"
    );
    for f in [1.05, 1.2, 1.5, 2.0, 3.0] {
        let bw = ctx.breit_wigner(f * pole, 0)?;
        println!(
            "{f:>10.2}  {:>+14.6e}  {:>+14.6e}  {:>12.6e}",
            bw.e_b, bw.e_res, bw.gamma
        );
    }

    // Perturbative regime: Γ scales with the square of the coupling size.
    let lambda = 1.3 * pole;
    println!("\nwidth at fixed λ = 1.3·|E_0| under W → εW:");
    let g1 = ctx.breit_wigner(lambda, 0)?.gamma;
    for eps in [1.0, 0.5, 0.1] {
        let scaled = CoupledContext::new(&parse_config(&model(eps))?)?;
        let g = scaled.breit_wigner(lambda, 0)?.gamma;
        println!(
            "  ε = {eps:<4}  Γ = {g:.9e}   Γ/Γ(1) = {:.6e}   (ε² = {:.6e})",
            g / g1,
            eps * eps
        );
    }
    Ok(())
}
