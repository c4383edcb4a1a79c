//! Open-channel scattering on a single potential: the zero-energy solution
//! and scattering length, finite-momentum amplitudes with on-shell
//! unitarity, and the low-energy limit k·cot δ → −1/a.
//!
//! Run with: cargo run --example one_body

use feshscan::grid::build_grid;
use feshscan::onebody::{scattering_solution, zero_energy};

fn main() -> anyhow::Result<()> {
    let grid = build_grid(10.0, 20, 8)?;
    // Repulsive gaussian barrier: positive scattering length.
    let pot = grid.nodes.mapv(|r| 0.7 * (-(r * r)).exp());

    let z = zero_energy(&grid, &pot, 1e12)?;
    println!("a_V = {:+.15e}  (solve condition {:.2e})", z.scattering_length, z.cond);

    println!(
        "\n{:>8}  {:>12}  {:>24}  {:>14}",
        "k", "delta(k)", "A(k)", "|Im A - k|A|^2|"
    );
    for i in 0..10 {
        let k = 0.05 * (2.0f64 / 0.05).powf(i as f64 / 9.0);
        let sc = scattering_solution(&grid, &pot, k, 1e12)?;
        let defect = (sc.amplitude.im - k * sc.amplitude.norm_sqr()).abs();
        println!(
            "{k:>8.4}  {:>12.6}  {:>24}  {defect:>14.2e}",
            sc.phase_shift,
            format!("{:+.6e}{:+.6e}i", sc.amplitude.re, sc.amplitude.im)
        );
    }

    // Low-energy limit: k cot delta approaches -1/a.
    let k = 1e-3;
    let sc = scattering_solution(&grid, &pot, k, 1e12)?;
    let kcot = k / sc.phase_shift.tan();
    println!(
        "\nk·cotδ at k = {k}: {kcot:+.9e}   vs   −1/a_V = {:+.9e}",
        -1.0 / z.scattering_length
    );
    Ok(())
}
