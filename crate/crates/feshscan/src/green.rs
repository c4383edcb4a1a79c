//! Outgoing free Green kernels of −u″ − E u on the half line and the Nyström
//! realization of reduced resolvents R_Z(E) = (−d²/dr² + Z − E)⁻¹.
//!
//! Kernel, with r_< = min(r, r′), r_> = max(r, r′):
//!   E = −κ² < 0 :  g = sinh(κ r_<) e^{−κ r_>} / κ      (decaying at ∞)
//!   E = 0       :  g = r_<
//!   E = k²  > 0 :  g = sin(k r_<) e^{i k r_>} / k      (outgoing at ∞)
//! The negative-energy branch is evaluated in combined-exponent form
//! e^{−κ(r_> − r_<)} · (1 − e^{−2κ r_<}) / (2κ), so deep closed channels
//! (large κ·r_>) never overflow — the subtraction of exponents happens before
//! exponentiation.
//!
//! R_Z(E) f is obtained by solving (I + G_E Z) u = G_E f collocated on the
//! grid nodes. The kernel has a derivative kink on the diagonal r = r′, which
//! would cap plain Nyström at low order: for the row of node rᵢ, the columns
//! of rᵢ's own panel are therefore replaced by product integrals
//! ∫ g_E(rᵢ, x) ℓⱼ(x) dx of kernel × Lagrange basis, split at the kink and
//! refined geometrically toward it when κ·h is large (uniformly when k·h is
//! large). Off-panel entries keep the plain weighted kernel samples, which are
//! already spectrally accurate there. Functionals of the solution then
//! converge at the quadrature's own rate instead of the kink-limited one.

use crate::error::{FeshError, Result};
use crate::grid::{gauss_legendre, lagrange_basis, RadialGrid};
use ndarray::prelude::*;
use ndarray_linalg::{Inverse, OperationNorm};
use num_complex::Complex64 as C64;

/// Default ceiling for resolvent condition estimates.
pub const DEFAULT_COND_MAX: f64 = 1e12;

/// Kernel-scale × subinterval-length product above which the product
/// integrals subdivide their interval.
const SPLIT_THRESHOLD: f64 = 3.0;

/// Quadrature order for the kernel × basis product integrals.
const PRODUCT_RULE: usize = 12;

/// Free outgoing Green kernel of −d²/dr² − E at energy `e`.
///
/// Preconditions: r ≥ 0, rp ≥ 0 finite. Real for e ≤ 0.
pub fn free_kernel(e: f64, r: f64, rp: f64) -> C64 {
    debug_assert!(r >= 0.0 && rp >= 0.0);
    let lo = r.min(rp);
    let hi = r.max(rp);
    if e > 0.0 {
        let k = e.sqrt();
        let (s, c) = (k * hi).sin_cos();
        C64::new(c, s) * ((k * lo).sin() / k)
    } else {
        C64::new(kernel_neg((-e).sqrt(), lo, hi), 0.0)
    }
}

/// Real kernel branch for E = −κ² ≤ 0 in overflow-safe combined-exponent form.
#[inline]
fn kernel_neg(kappa: f64, lo: f64, hi: f64) -> f64 {
    if kappa < 1e-12 {
        // κ → 0 limit: g → r_< (the E = 0 kernel), reached smoothly.
        return lo;
    }
    (-kappa * (hi - lo)).exp() * (-(-2.0 * kappa * lo).exp_m1()) / (2.0 * kappa)
}

/// Offsets (from the kink, ascending, last = len) partitioning one side of a
/// panel for the product integrals. Decaying kernels refine geometrically
/// toward the kink; oscillatory ones subdivide uniformly.
fn side_offsets(len: f64, scale: f64, oscillatory: bool) -> Vec<f64> {
    if scale * len <= SPLIT_THRESHOLD || len == 0.0 {
        return vec![len];
    }
    if oscillatory {
        let pieces = ((scale * len / SPLIT_THRESHOLD).ceil() as usize).clamp(1, 64);
        return (1..=pieces).map(|s| len * s as f64 / pieces as f64).collect();
    }
    let halvings = ((scale * len / SPLIT_THRESHOLD).log2().ceil() as usize).min(48);
    let mut offs: Vec<f64> = (0..=halvings)
        .rev()
        .map(|s| len / (1u64 << s.min(52)) as f64)
        .collect();
    *offs.last_mut().unwrap() = len;
    offs
}

/// ∫ over [a, b] of g(x)·ℓⱼ(x) dx for every Lagrange basis ℓⱼ of the panel
/// nodes `t`, with the integrand kinked at `kink ∈ [a, b]`.
#[allow(clippy::too_many_arguments)]
fn product_integrals<T, G>(
    g: G,
    kink: f64,
    a: f64,
    b: f64,
    t: &[f64],
    bary: &[f64],
    scale: f64,
    oscillatory: bool,
    rule: &(Vec<f64>, Vec<f64>),
    out: &mut [T],
) where
    T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    G: Fn(f64) -> T,
{
    out.iter_mut().for_each(|v| *v = T::default());
    let mut basis = vec![0.0; t.len()];
    let mut accumulate = |lo: f64, hi: f64| {
        if hi <= lo {
            return;
        }
        let c = 0.5 * (lo + hi);
        let s = 0.5 * (hi - lo);
        for q in 0..rule.0.len() {
            let x = c + s * rule.0[q];
            let wq = s * rule.1[q];
            let gv = g(x);
            lagrange_basis(t, bary, x, &mut basis);
            for (j, bj) in basis.iter().enumerate() {
                out[j] += gv * (wq * bj);
            }
        }
    };
    // Left side [a, kink]: kink at the right end.
    let mut prev = 0.0;
    for off in side_offsets(kink - a, scale, oscillatory) {
        accumulate(kink - off, kink - prev);
        prev = off;
    }
    // Right side [kink, b]: kink at the left end.
    prev = 0.0;
    for off in side_offsets(b - kink, scale, oscillatory) {
        accumulate(kink + prev, kink + off);
        prev = off;
    }
}

/// Nyström matrix of the free Green operator G_E for E ≤ 0: (B f)ᵢ ≈ (G_E f)(rᵢ).
pub(crate) fn greens_matrix_real(grid: &RadialGrid, e: f64) -> Array2<f64> {
    assert!(e <= 0.0, "real Green matrix needs E ≤ 0, got {e}");
    let kappa = (-e).sqrt();
    let n = grid.n();
    let m = grid.nodes_per_panel;
    let rule = gauss_legendre(PRODUCT_RULE);
    let (_, ref_bary) = grid.reference();
    let mut b = Array2::<f64>::zeros((n, n));
    let mut panel_t = vec![0.0; m];
    let mut integrals = vec![0.0; m];
    for i in 0..n {
        let ri = grid.nodes[i];
        for j in 0..n {
            b[[i, j]] = grid.weights[j] * kernel_neg(kappa, ri.min(grid.nodes[j]), ri.max(grid.nodes[j]));
        }
        // Own panel: replace by kink-split product integrals.
        let p = grid.panel_of(i);
        let (pa, pb) = (grid.panel_edges[p], grid.panel_edges[p + 1]);
        for (jj, tj) in panel_t.iter_mut().enumerate() {
            *tj = grid.nodes[p * m + jj];
        }
        product_integrals(
            |x: f64| kernel_neg(kappa, ri.min(x), ri.max(x)),
            ri,
            pa,
            pb,
            &panel_t,
            ref_bary,
            kappa,
            false,
            &rule,
            &mut integrals,
        );
        for jj in 0..m {
            b[[i, p * m + jj]] = integrals[jj];
        }
    }
    b
}

/// Nyström matrix of the outgoing free Green operator for any energy
/// (complex-valued; used when E > 0).
pub(crate) fn greens_matrix_complex(grid: &RadialGrid, e: f64) -> Array2<C64> {
    if e <= 0.0 {
        return greens_matrix_real(grid, e).mapv(|v| C64::new(v, 0.0));
    }
    let k = e.sqrt();
    let n = grid.n();
    let m = grid.nodes_per_panel;
    let rule = gauss_legendre(PRODUCT_RULE);
    let (_, ref_bary) = grid.reference();
    let kernel = |r: f64, x: f64| -> C64 {
        let lo = r.min(x);
        let hi = r.max(x);
        let (s, c) = (k * hi).sin_cos();
        C64::new(c, s) * ((k * lo).sin() / k)
    };
    let mut b = Array2::<C64>::zeros((n, n));
    let mut panel_t = vec![0.0; m];
    let mut integrals = vec![C64::default(); m];
    for i in 0..n {
        let ri = grid.nodes[i];
        for j in 0..n {
            b[[i, j]] = grid.weights[j] * kernel(ri, grid.nodes[j]);
        }
        let p = grid.panel_of(i);
        let (pa, pb) = (grid.panel_edges[p], grid.panel_edges[p + 1]);
        for (jj, tj) in panel_t.iter_mut().enumerate() {
            *tj = grid.nodes[p * m + jj];
        }
        product_integrals(
            |x: f64| kernel(ri, x),
            ri,
            pa,
            pb,
            &panel_t,
            ref_bary,
            k,
            true,
            &rule,
            &mut integrals,
        );
        for jj in 0..m {
            b[[i, p * m + jj]] = integrals[jj];
        }
    }
    b
}

/// Lippmann–Schwinger system matrix I + G_E·diag(pot) from an assembled
/// Green matrix.
pub(crate) fn system_matrix_real(b: &Array2<f64>, pot: &Array1<f64>) -> Array2<f64> {
    let n = b.nrows();
    let mut a = Array2::<f64>::eye(n);
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] += b[[i, j]] * pot[j];
        }
    }
    a
}

pub(crate) fn system_matrix_complex(b: &Array2<C64>, pot: &Array1<f64>) -> Array2<C64> {
    let n = b.nrows();
    let mut a = Array2::<C64>::eye(n);
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] += b[[i, j]] * pot[j];
        }
    }
    a
}

/// Matrix realization of a real resolvent R_Z(E), E ≤ 0.
pub struct Resolvent {
    /// (mat · f) at the nodes ≈ (R_Z(E) f)(rᵢ); quadrature folded in.
    pub mat: Array2<f64>,
    /// 1-norm condition estimate of (I + G_E Z).
    pub cond: f64,
}

/// Matrix realization of the outgoing resolvent at any energy.
pub struct ResolventC {
    pub mat: Array2<C64>,
    pub cond: f64,
}

/// Build R_Z(E) for E ≤ 0. `context` lazily names the operator (and any nearby
/// eigenvalue known to the caller) for the near-singular diagnostic.
pub fn resolvent_real<F: FnOnce() -> String>(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    e: f64,
    cond_max: f64,
    context: F,
) -> Result<Resolvent> {
    let b = greens_matrix_real(grid, e);
    let a = system_matrix_real(&b, pot);
    let inv = match a.inv() {
        Ok(inv) => inv,
        Err(_) => {
            return Err(FeshError::NearSingular {
                context: context(),
                cond: f64::INFINITY,
            })
        }
    };
    let cond = a.opnorm_one()? * inv.opnorm_one()?;
    if !cond.is_finite() || cond > cond_max {
        return Err(FeshError::NearSingular {
            context: context(),
            cond,
        });
    }
    Ok(Resolvent {
        mat: inv.dot(&b),
        cond,
    })
}

/// Build the outgoing R_Z(E) for any energy (complex path; needed for E > 0).
pub fn resolvent_complex<F: FnOnce() -> String>(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    e: f64,
    cond_max: f64,
    context: F,
) -> Result<ResolventC> {
    let b = greens_matrix_complex(grid, e);
    let a = system_matrix_complex(&b, pot);
    let inv = match a.inv() {
        Ok(inv) => inv,
        Err(_) => {
            return Err(FeshError::NearSingular {
                context: context(),
                cond: f64::INFINITY,
            })
        }
    };
    let cond = a.opnorm_one()? * inv.opnorm_one()?;
    if !cond.is_finite() || cond > cond_max {
        return Err(FeshError::NearSingular {
            context: context(),
            cond,
        });
    }
    Ok(ResolventC {
        mat: inv.dot(&b),
        cond,
    })
}

/// Apply R_Z(E) to a reduced grid function: decaying solution for E ≤ 0,
/// outgoing for E > 0.
pub fn apply_resolvent(
    grid: &RadialGrid,
    pot: &Array1<f64>,
    e: f64,
    f: &Array1<f64>,
) -> Result<Array1<C64>> {
    if e > 0.0 {
        let r = resolvent_complex(grid, pot, e, DEFAULT_COND_MAX, || {
            format!("resolvent at E = {e:.6e}")
        })?;
        Ok(r.mat.dot(&f.mapv(|v| C64::new(v, 0.0))))
    } else {
        let r = resolvent_real(grid, pot, e, DEFAULT_COND_MAX, || {
            format!("resolvent at E = {e:.6e}")
        })?;
        Ok(r.mat.dot(f).mapv(|v| C64::new(v, 0.0)))
    }
}
