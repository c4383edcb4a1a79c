//! Single-channel solvers: bound states, zero-energy scattering length,
//! finite-energy phase shifts, and spectral pairings of the resolvent.
//!
//! Bound states are located in two stages. A uniform-mesh finite-difference
//! discretization of −u″ + V u with Dirichlet ends gives, through Sturm
//! sequences, a *certified count* of negative eigenvalues and a bracket for
//! each. Each bracket is then refined on the quadrature grid by driving the
//! smallest eigenvalue μ(E) of the Lippmann–Schwinger matrix I + G_E V to
//! zero with Brent's method — μ crosses zero exactly where the integral
//! equation u = −G_E V u has a nontrivial decaying solution, i.e. at a bound
//! state — so the final energies converge at the quadrature's spectral rate
//! rather than the mesh's O(h²).
//!
//! Scattering quantities use the outgoing Lippmann–Schwinger equation
//! (I + G_{k²} V) u = sin(kr)/k, whose solution behaves like
//! sin(kr)/k + A e^{ikr} beyond the potential; A is the standard unitary
//! amplitude (S = 1 + 2ikA, |S| = 1) and the physical scattering length is
//! a = −A(0), positive for a repulsive core.

use crate::error::{FeshError, Result};
use crate::green::{
    greens_matrix_complex, greens_matrix_real, system_matrix_complex, system_matrix_real,
    DEFAULT_COND_MAX,
};
use crate::grid::{RadialFn, RadialGrid};
use crate::roots::brent;
use ndarray::prelude::*;
use ndarray_linalg::{Inverse, OperationNorm, Solve};
use num_complex::Complex64 as C64;

/// A negative-energy eigenpair of −d²/dr² + V.
#[derive(Clone, Debug)]
pub struct BoundState {
    pub energy: f64,
    /// Reduced wavefunction at the grid nodes, normalized to ⟨u, u⟩ = 1 in
    /// the 4π pairing and positive near the origin.
    pub wavefunction: RadialFn,
    /// Number of interior sign changes (0 for the ground state).
    pub node_count: usize,
}

/// Outgoing scattering solution at momentum k > 0.
#[derive(Clone, Debug)]
pub struct Scattering {
    pub k: f64,
    /// Unitary amplitude A(k): u → sin(kr)/k + A e^{ikr}.
    pub amplitude: C64,
    /// S(k) = 1 + 2ik A(k).
    pub s_matrix: C64,
    /// δ(k) = arg S / 2 ∈ (−π/2, π/2].
    pub phase_shift: f64,
    /// The outgoing solution u⁺ at the nodes.
    pub wavefunction: Array1<C64>,
    pub cond: f64,
}

/// Zero-energy solution u → r − a and the scattering length a.
#[derive(Clone, Debug)]
pub struct ZeroEnergy {
    pub scattering_length: f64,
    pub wavefunction: RadialFn,
    pub cond: f64,
}

// ---------------------------------------------------------------------------
// Finite-difference stage: Sturm counts and eigenvalue brackets.

/// Number of eigenvalues of the FD tridiagonal (diag, constant off-diagonal
/// −1/h²) strictly below x, by counting negative pivots of the shifted LDLᵀ.
fn sturm_count(diag: &[f64], off2: f64, x: f64) -> usize {
    let mut count = 0usize;
    // q = ∞ makes the first pivot come out as d₁ − x with no coupling term.
    let mut q = f64::INFINITY;
    for &d in diag {
        q = d - x - off2 / q;
        if q == 0.0 {
            // Exact tie against a leading-submatrix eigenvalue: nudge off it.
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// j-th (0-based, ascending) eigenvalue of the FD matrix by Sturm bisection,
/// restricted to the negative axis.
fn sturm_eigenvalue(diag: &[f64], off2: f64, j: usize) -> f64 {
    let off = off2.sqrt();
    let mut lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * off;
    let mut hi = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count(diag, off2, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo).abs() <= 1e-13 * hi.abs().max(1e-8) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest eigenvalue of the FD discretization of −u″ + pot·u with Dirichlet
/// ends — the positivity check for H_V (a nonnegative operator discretizes to
/// a small positive box mode, never below −O(h²)).
pub(crate) fn fd_smallest_eigenvalue(
    pot_fn: &dyn Fn(f64) -> f64,
    r_max: f64,
    fd_points: usize,
) -> f64 {
    let n = fd_points.max(200);
    let h = r_max / n as f64;
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = (1..n)
        .map(|i| 2.0 * inv_h2 + pot_fn(i as f64 * h))
        .collect();
    let off2 = inv_h2 * inv_h2;
    let mut lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * inv_h2;
    let mut hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * inv_h2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count(&diag, off2, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Quadrature-grid stage.

/// Smallest-modulus eigenvalue of I + G_E·diag(pot) by inverse iteration,
/// warm-started from `seed` (updated in place). Returns 0 exactly when the
/// factorization detects singularity — i.e. E is an eigen-energy to machine
/// precision.
fn smallest_system_eigenvalue(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    e: f64,
    seed: &mut Array1<f64>,
) -> Result<f64> {
    let b = greens_matrix_real(grid, e);
    let a = system_matrix_real(&b, pot);
    let lu = match ndarray_linalg::Factorize::factorize(&a) {
        Ok(lu) => lu,
        Err(_) => return Ok(0.0),
    };
    let mut mu_prev = f64::INFINITY;
    for _ in 0..40 {
        let mut v = match lu.solve(seed) {
            Ok(v) => v,
            Err(_) => return Ok(0.0),
        };
        let norm = v.dot(&v).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Ok(0.0);
        }
        v.mapv_inplace(|x| x / norm);
        let av = a.dot(&v);
        let mu = v.dot(&av);
        *seed = v;
        if (mu - mu_prev).abs() <= 1e-13 * mu.abs().max(1e-300) {
            return Ok(mu);
        }
        mu_prev = mu;
    }
    Ok(mu_prev)
}

/// All negative-energy bound states of −u″ + pot·u, ascending in energy.
///
/// `pot_fn` evaluates the potential anywhere in [0, r_max] (used on the FD
/// counting mesh); `pot_nodes` are its values on the quadrature nodes.
/// `fd_points` is the FD mesh resolution (clamped below at 200).
/// A state within `threshold_tol` of E = 0 is reported as a near-threshold
/// error, since its bound/free character is discretization-dependent there.
pub fn bound_states(
    grid: &RadialGrid,
    pot_fn: &dyn Fn(f64) -> f64,
    pot_nodes: &Array1<f64>,
    fd_points: usize,
    threshold_tol: f64,
) -> Result<Vec<BoundState>> {
    let n_fd = fd_points.max(200);
    let h = grid.r_max() / n_fd as f64;
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = (1..n_fd)
        .map(|i| 2.0 * inv_h2 + pot_fn(i as f64 * h))
        .collect();
    let off2 = inv_h2 * inv_h2;

    let n_bound = sturm_count(&diag, off2, 0.0);
    if n_bound == 0 {
        return Ok(Vec::new());
    }
    let fd_energies: Vec<f64> = (0..n_bound)
        .map(|j| sturm_eigenvalue(&diag, off2, j))
        .collect();

    let mut states = Vec::with_capacity(n_bound);
    let mut seed = grid.nodes.mapv(|r| r * (-r / grid.r_max()).exp());
    for (j, &e_fd) in fd_energies.iter().enumerate() {
        // Refinement window: stay on this state's side of its FD neighbours.
        let lo_lim = if j == 0 {
            e_fd * 4.0 - 1.0
        } else {
            0.5 * (fd_energies[j - 1] + e_fd)
        };
        let hi_lim = if j + 1 < n_bound {
            0.5 * (e_fd + fd_energies[j + 1])
        } else {
            -0.25 * threshold_tol.min(-e_fd)
        };
        let mut mu = |e: f64| smallest_system_eigenvalue(grid, pot_nodes, e, &mut seed);

        let mut delta = (2e-3 * e_fd.abs()).max(1e-9);
        let (mut lo, mut hi) = ((e_fd - delta).max(lo_lim), (e_fd + delta).min(hi_lim));
        let mut f_lo = mu(lo)?;
        let mut f_hi = mu(hi)?;
        let mut expansions = 0;
        while f_lo.signum() == f_hi.signum() {
            expansions += 1;
            if expansions > 24 || (lo == lo_lim && hi == hi_lim) {
                return Err(FeshError::Domain(format!(
                    "bound-state refinement near E = {e_fd:.9e} lost its bracket"
                )));
            }
            delta *= 4.0;
            lo = (e_fd - delta).max(lo_lim);
            hi = (e_fd + delta).min(hi_lim);
            f_lo = mu(lo)?;
            f_hi = mu(hi)?;
        }
        let energy = brent(&mut mu, lo, hi, f_lo, f_hi, 1e-14, 1e-14)?;
        if energy > -threshold_tol {
            return Err(FeshError::NearThreshold { energy });
        }

        // The Brent loop's final inverse iteration already drove `seed` into
        // the near-null direction; polish once more at the converged energy.
        let _ = smallest_system_eigenvalue(grid, pot_nodes, energy, &mut seed)?;
        let mut u = seed.clone();
        // Orthogonalize against lower states (cosmetic: energies are simple).
        for prev in &states {
            let prev: &BoundState = prev;
            let overlap = grid.pair(&prev.wavefunction.values, &u);
            u.scaled_add(-overlap, &prev.wavefunction.values);
        }
        let norm = grid.pair(&u, &u).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(FeshError::Domain(format!(
                "bound-state vector at E = {energy:.9e} failed to normalize"
            )));
        }
        u.mapv_inplace(|x| x / norm);
        let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = u.iter().find(|v| v.abs() > 1e-3 * peak).copied().unwrap_or(1.0);
        if lead < 0.0 {
            u.mapv_inplace(|x| -x);
        }
        let node_count = count_nodes(&u);
        states.push(BoundState {
            energy,
            wavefunction: RadialFn::new(u),
            node_count,
        });
    }
    states.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    Ok(states)
}

/// Interior sign changes of a grid vector, ignoring entries below a noise
/// floor relative to the vector's peak.
fn count_nodes(u: &Array1<f64>) -> usize {
    let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-6 * peak;
    let mut count = 0;
    let mut last = 0.0f64;
    for &v in u {
        if v.abs() < floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Zero-energy scattering solution (I + G₀V) u = r and the scattering length
/// a = ∫ r V u dr, so that u → r − a beyond the potential. Fails with the
/// zero-energy-resonance diagnostic when I + G₀V is numerically singular.
pub fn zero_energy(grid: &RadialGrid, pot: &Array1<f64>, cond_max: f64) -> Result<ZeroEnergy> {
    let b = greens_matrix_real(grid, 0.0);
    let a = system_matrix_real(&b, pot);
    let inv = a.inv().map_err(|_| FeshError::ZeroEnergyResonance)?;
    let cond = a.opnorm_one()? * inv.opnorm_one()?;
    if !cond.is_finite() || cond > cond_max {
        return Err(FeshError::ZeroEnergyResonance);
    }
    let u = inv.dot(&grid.nodes);
    let mut a_len = 0.0;
    for i in 0..grid.n() {
        a_len += grid.weights[i] * grid.nodes[i] * pot[i] * u[i];
    }
    Ok(ZeroEnergy {
        scattering_length: a_len,
        wavefunction: RadialFn::new(u),
        cond,
    })
}

/// Outgoing scattering solution at momentum k > 0.
pub fn scattering_solution(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    k: f64,
    cond_max: f64,
) -> Result<Scattering> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(FeshError::Domain(format!(
            "scattering momentum must be positive and finite, got {k}"
        )));
    }
    let b = greens_matrix_complex(grid, k * k);
    let a = system_matrix_complex(&b, pot);
    let inv = match a.inv() {
        Ok(inv) => inv,
        Err(_) => {
            return Err(FeshError::NearSingular {
                context: format!("scattering solve at k = {k:.6e}"),
                cond: f64::INFINITY,
            })
        }
    };
    let cond = a.opnorm_one()? * inv.opnorm_one()?;
    if !cond.is_finite() || cond > cond_max {
        return Err(FeshError::NearSingular {
            context: format!("scattering solve at k = {k:.6e}"),
            cond,
        });
    }
    let rhs = grid.nodes.mapv(|r| C64::new((k * r).sin() / k, 0.0));
    let u = inv.dot(&rhs);
    let mut amp = C64::new(0.0, 0.0);
    for i in 0..grid.n() {
        amp += u[i] * (grid.weights[i] * (k * grid.nodes[i]).sin() * pot[i]);
    }
    amp = -amp / k;
    let s_matrix = C64::new(1.0, 0.0) + C64::new(0.0, 2.0 * k) * amp;
    let phase_shift = 0.5 * s_matrix.arg();
    Ok(Scattering {
        k,
        amplitude: amp,
        s_matrix,
        phase_shift,
        wavefunction: u,
        cond,
    })
}

/// Im ⟨f, R_V(k² + i0) f⟩ in the 4π pairing, evaluated as the manifestly
/// nonnegative square (4π/k)·(∫ û_k f dr)², where û_k = Re(k e^{−iδ} u⁺) is
/// the real regular solution behaving like sin(kr + δ).
pub fn im_resolvent_pairing(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    k: f64,
    f: &Array1<f64>,
) -> Result<f64> {
    let sc = scattering_solution(grid, pot, k, DEFAULT_COND_MAX)?;
    let rot = C64::from_polar(k, -sc.phase_shift);
    let mut ft = 0.0;
    for i in 0..grid.n() {
        ft += grid.weights[i] * (rot * sc.wavefunction[i]).re * f[i];
    }
    Ok(4.0 * std::f64::consts::PI / k * ft * ft)
}

/// Full complex pairing ⟨f, R_V(E + i0) f⟩ (4π, bilinear). Its real part is
/// the principal-value shift integral; its imaginary part matches
/// [`im_resolvent_pairing`] at E = k² > 0.
pub fn resolvent_pairing(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    e: f64,
    f: &Array1<f64>,
) -> Result<C64> {
    let u = crate::green::apply_resolvent(grid, pot, e, f)?;
    let fc = f.mapv(|v| C64::new(v, 0.0));
    Ok(grid.pair_c(&fc, &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square_well(v0: f64) -> impl Fn(f64) -> f64 {
        move |r: f64| if r < 1.0 { -v0 } else { 0.0 }
    }

    fn well_setup(v0: f64) -> (RadialGrid, Array1<f64>) {
        // Panel edges at multiples of 0.2, so the well edge r = 1 is a panel
        // boundary and quadrature stays spectral across the jump.
        let grid = build_grid(6.0, 30, 10).unwrap();
        let pot = grid.nodes.mapv(square_well(v0));
        (grid, pot)
    }

    // Transcendental square-well eigenvalues, frozen from an independent
    // bisection of √(V₀−κ²)·cot(√(V₀−κ²)) = −κ at high precision.
    #[allow(clippy::excessive_precision)]
    const E0_V10: f64 = -4.624_194_086_329_781;
    #[allow(clippy::excessive_precision)]
    const E0_V30: f64 = -23.036_247_639_323_541;
    #[allow(clippy::excessive_precision)]
    const E1_V30: f64 = -4.087_368_021_050_569;

    #[test]
    fn square_well_ground_state() {
        let (grid, pot) = well_setup(10.0);
        let states = bound_states(&grid, &square_well(10.0), &pot, 2000, 1e-12).unwrap();
        assert_eq!(states.len(), 1);
        assert_relative_eq!(states[0].energy, E0_V10, max_relative = 1e-9);
        assert_eq!(states[0].node_count, 0);
        let u = &states[0].wavefunction.values;
        assert_relative_eq!(grid.pair(u, u), 1.0, max_relative = 1e-10);
        assert!(u[0] > 0.0);
    }

    #[test]
    fn square_well_excited_spectrum() {
        let (grid, pot) = well_setup(30.0);
        let states = bound_states(&grid, &square_well(30.0), &pot, 2000, 1e-12).unwrap();
        assert_eq!(states.len(), 2);
        assert_relative_eq!(states[0].energy, E0_V30, max_relative = 1e-9);
        assert_relative_eq!(states[1].energy, E1_V30, max_relative = 1e-9);
        assert_eq!(states[0].node_count, 0);
        assert_eq!(states[1].node_count, 1);
        let overlap = grid.pair(
            &states[0].wavefunction.values,
            &states[1].wavefunction.values,
        );
        assert!(overlap.abs() < 1e-8, "overlap {overlap}");
    }

    #[test]
    fn bound_state_satisfies_equation() {
        let (grid, pot) = well_setup(10.0);
        let states = bound_states(&grid, &square_well(10.0), &pot, 2000, 1e-12).unwrap();
        let u = &states[0].wavefunction.values;
        let d2 = grid.second_derivative(u);
        let mut resid: f64 = 0.0;
        for i in 0..grid.n() {
            resid = resid.max((-d2[i] + (pot[i] - states[0].energy) * u[i]).abs());
        }
        assert!(resid < 1e-6, "eigen-equation residual {resid}");
    }

    #[test]
    fn repulsive_potential_has_no_bound_states() {
        let grid = build_grid(6.0, 30, 10).unwrap();
        let pot_fn = |r: f64| if r < 1.0 { 4.0 } else { 0.0 };
        let pot = grid.nodes.mapv(pot_fn);
        let states = bound_states(&grid, &pot_fn, &pot, 2000, 1e-12).unwrap();
        assert!(states.is_empty());
    }

    #[test]
    fn shallow_state_trips_threshold_guard() {
        // With an absurdly wide guard band every state is "near threshold".
        let (grid, pot) = well_setup(10.0);
        let err = bound_states(&grid, &square_well(10.0), &pot, 2000, 10.0).unwrap_err();
        assert!(matches!(err, FeshError::NearThreshold { .. }));
    }

    #[test]
    fn scattering_length_attractive_well() {
        // V = −1 on r < 1: a = 1 − tan(1)/1.
        let grid = build_grid(6.0, 30, 10).unwrap();
        let pot = grid.nodes.mapv(|r| if r < 1.0 { -1.0 } else { 0.0 });
        let z = zero_energy(&grid, &pot, 1e12).unwrap();
        assert_relative_eq!(z.scattering_length, 1.0 - 1.0f64.tan(), max_relative = 1e-10);
        // Beyond the well the solution is exactly r − a.
        let i = grid.n() - 3;
        assert_relative_eq!(
            z.wavefunction.values[i],
            grid.nodes[i] - z.scattering_length,
            max_relative = 1e-9
        );
    }

    #[test]
    fn scattering_length_repulsive_barrier_is_positive() {
        // V = +4 on r < 1: a = 1 − tanh(2)/2 > 0.
        let grid = build_grid(6.0, 30, 10).unwrap();
        let pot = grid.nodes.mapv(|r| if r < 1.0 { 4.0 } else { 0.0 });
        let z = zero_energy(&grid, &pot, 1e12).unwrap();
        assert_relative_eq!(
            z.scattering_length,
            1.0 - 2.0f64.tanh() / 2.0,
            max_relative = 1e-10
        );
        assert!(z.scattering_length > 0.0);
    }

    #[test]
    fn weak_potential_matches_born_scattering_length() {
        let eps = 1e-3;
        let grid = build_grid(10.0, 25, 10).unwrap();
        let pot = grid.nodes.mapv(|r| -eps * (-r * r).exp());
        let z = zero_energy(&grid, &pot, 1e12).unwrap();
        // Born: a ≈ ∫ V r² dr = −ε √π / 4.
        let born = -eps * PI.sqrt() / 4.0;
        assert_relative_eq!(z.scattering_length, born, max_relative = 1e-2);
    }

    #[test]
    fn phase_shift_matches_square_well_matching() {
        let grid = build_grid(6.0, 30, 10).unwrap();
        let v0 = 2.0;
        let pot = grid.nodes.mapv(|r| if r < 1.0 { -v0 } else { 0.0 });
        let k = 0.7;
        let sc = scattering_solution(&grid, &pot, k, 1e12).unwrap();
        // Interior momentum κ = √(k² + V₀); log-derivative matching at r = 1:
        // κ cot κ = k cot(k + δ).
        let kin = (k * k + v0).sqrt();
        let lhs = kin * (kin.cos() / kin.sin());
        let rhs = k * ((k + sc.phase_shift).cos() / (k + sc.phase_shift).sin());
        assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
        // Unitarity both ways.
        assert_relative_eq!(sc.s_matrix.norm(), 1.0, max_relative = 1e-10);
        let im = sc.amplitude.im;
        assert_relative_eq!(im, k * sc.amplitude.norm_sqr(), max_relative = 1e-8);
    }

    #[test]
    fn amplitude_low_k_limit_is_minus_scattering_length() {
        let grid = build_grid(6.0, 30, 10).unwrap();
        let pot = grid.nodes.mapv(|r| if r < 1.0 { 4.0 } else { 0.0 });
        let z = zero_energy(&grid, &pot, 1e12).unwrap();
        let sc = scattering_solution(&grid, &pot, 1e-4, 1e12).unwrap();
        assert_relative_eq!(sc.amplitude.re, -z.scattering_length, max_relative = 1e-6);
    }

    #[test]
    fn free_resolvent_pairing_closed_form() {
        // V = 0, f = e^{−r}: ⟨f, R₀(k²+i0) f⟩ = 4π/(1+k²)·[(1+ik)/(1+k²) − ½].
        // At k = 1 the real part vanishes and the imaginary part is π.
        let grid = build_grid(36.0, 36, 10).unwrap();
        let pot = Array1::zeros(grid.n());
        let f = grid.nodes.mapv(|r| (-r).exp());
        let p = resolvent_pairing(&grid, &pot, 1.0, &f).unwrap();
        assert!(p.re.abs() < 1e-9, "Re = {}", p.re);
        assert_relative_eq!(p.im, PI, max_relative = 1e-9);
        let k = 0.5;
        let p2 = resolvent_pairing(&grid, &pot, k * k, &f).unwrap();
        let denom = 1.0 + k * k;
        assert_relative_eq!(p2.re, 2.0 * PI * (1.0 - k * k) / (denom * denom), max_relative = 1e-8);
        assert_relative_eq!(p2.im, 4.0 * PI * k / (denom * denom), max_relative = 1e-8);
    }

    #[test]
    fn spectral_identity_between_pairings() {
        // Im of the direct complex pairing must equal the square formula.
        let grid = build_grid(14.0, 28, 10).unwrap();
        let pot = grid.nodes.mapv(|r| -3.0 * (-r * r).exp());
        let f = grid.nodes.mapv(|r| r * (-r).exp());
        let k = 0.8;
        let direct = resolvent_pairing(&grid, &pot, k * k, &f).unwrap();
        let square = im_resolvent_pairing(&grid, &pot, k, &f).unwrap();
        assert_relative_eq!(direct.im, square, max_relative = 1e-8);
        assert!(square >= 0.0);
    }
}
