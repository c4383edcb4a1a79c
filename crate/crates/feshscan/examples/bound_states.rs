//! Closed-channel spectrum: locate every bound state of H_U by a
//! finite-difference Sturm scan and polish each level on the spectral grid.
//! For a square well the exact levels come from transcendental matching, so
//! the example prints both and the difference.
//!
//! Run with: cargo run --example bound_states

use feshscan::grid::build_grid;
use feshscan::onebody::bound_states;

fn main() -> anyhow::Result<()> {
    let depth = 30.0f64;
    let range = 1.0f64;
    let grid = build_grid(6.0, 30, 10)?;
    let well = move |r: f64| if r < range { -depth } else { 0.0 };
    let pot = grid.nodes.mapv(well);

    let states = bound_states(&grid, &well, &pot, 2000, 1e-12)?;
    let exact = square_well_levels(depth, range);

    println!("square well, depth {depth}, range {range}:");
    println!(
        "{:>3}  {:>22}  {:>22}  {:>10}  {:>6}",
        "j", "engine E_j", "matching oracle", "diff", "nodes"
    );
    for (j, st) in states.iter().enumerate() {
        println!(
            "{j:>3}  {:>+22.15e}  {:>+22.15e}  {:>10.2e}  {:>6}",
            st.energy,
            exact[j],
            (st.energy - exact[j]).abs(),
            st.node_count
        );
    }

    // The reduced wavefunctions are normalized in the 4π pairing.
    for (j, st) in states.iter().enumerate() {
        let n = grid.pair(&st.wavefunction.values, &st.wavefunction.values);
        println!("⟨u_{j}, u_{j}⟩ = {n:.15}");
    }
    Ok(())
}

/// Bound levels −κ² of the square well (ħ²/2m = 1) from the matching
/// condition k·cot(kR) = −κ, k² + κ² = depth.
fn square_well_levels(depth: f64, range: f64) -> Vec<f64> {
    let kmax = depth.sqrt();
    let g = |k: f64| k * (k * range).cos() / (k * range).sin() + (depth - k * k).sqrt();
    let mut out = Vec::new();
    for n in 0.. {
        let mut lo = (n as f64 + 0.5) * std::f64::consts::PI / range;
        let mut hi = ((n + 1) as f64 * std::f64::consts::PI / range).min(kmax * (1.0 - 1e-15));
        if lo >= kmax || g(hi) > 0.0 {
            break;
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
        out.push(k * k - depth);
    }
    out
}
