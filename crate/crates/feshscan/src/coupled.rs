//! The general two-channel machinery: Nyström assembly of the effective
//! operator D_k = R_V(k²)·W·R_U(k²−λ)·W, effective Lippmann–Schwinger
//! solves, eigenvalue-branch tracking of the resonance operator, critical
//! values λ_j with residues, Breit–Wigner parameters, and closed-channel
//! pair verification.
//!
//! Nothing here assumes a factorized coupling; with a separable W the
//! results must (and do, see the tests) reproduce the closed forms of the
//! rank-one engine to solver accuracy, which is the main internal
//! consistency check of the crate.
//!
//! Conventions follow the crate defaults: reduced radial functions, the
//! bilinear 4π pairing, physical-sign scalars (a_eff has residue
//! c_j = (1/4π)·p_j·⟨η̃,φ_{V,0}⟩/⟨η̃, D′(λ_j) η⟩, negative for generic
//! couplings), and standard-unitary finite-k amplitudes.

use crate::config::ModelConfig;
use crate::error::{FeshError, Result};
use crate::green::{resolvent_complex, resolvent_real};
use crate::grid::RadialGrid;
use crate::onebody::{
    bound_states, im_resolvent_pairing, resolvent_pairing, scattering_solution, zero_energy,
    BoundState,
};
use ndarray::prelude::*;
use ndarray::OwnedRepr;
use ndarray_linalg::{Determinant, Eig, Factorize, Inverse, LUFactorized, OperationNorm, Solve, SVD};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Relative margin kept around closed-channel poles |E_j| when bracketing.
const POLE_MARGIN: f64 = 1e-6;
/// Eigenvalues with |Im μ| above this (relative) are treated as non-real.
const IM_TOL: f64 = 1e-8;
/// Singular values of I − D₀(λ_j) below this count toward the kernel.
const KERNEL_TOL: f64 = 1e-6;

/// Dense grid realization of D_k = R_V(k²)·W·R_U(k²−λ)·W with quadrature
/// weights folded in, so `matrix.dot(v)` approximates the integral operator.
pub struct EffectiveOperator {
    pub matrix: Array2<C64>,
    pub lambda: f64,
    pub k2: f64,
    /// Condition estimate of the open-channel resolvent solve.
    pub cond_open: f64,
    /// Condition estimate of the closed-channel resolvent solve.
    pub cond_closed: f64,
}

/// One tracked eigenvalue branch μ(λ) of D₀(λ).
#[derive(Clone, Debug)]
pub struct MuBranch {
    pub id: usize,
    pub lambdas: Vec<f64>,
    /// Real parts of the tracked eigenvalue (imaginary parts verified tiny).
    pub mus: Vec<f64>,
    /// Eigenvector snapshots used for continuity matching, one per sample.
    pub vectors: Vec<Array1<f64>>,
}

/// Breit–Wigner parameters of an embedded resonance.
#[derive(Clone, Copy, Debug)]
pub struct BreitWigner {
    /// Bare embedded energy E_b = λ − |E_j| > 0.
    pub e_b: f64,
    /// Shifted resonance position.
    pub e_res: f64,
    /// Width Γ ≥ 0.
    pub gamma: f64,
}

/// Everything reported about one critical value λ_j.
#[derive(Clone, Debug)]
pub struct ResonanceReport {
    pub lambda_j: f64,
    /// Kernel vector η_j of I − D₀(λ_j), normalized ⟨η,η⟩ = 1 with
    /// ⟨η, φ_{V,0}⟩ ≥ 0.
    pub eta: Array1<f64>,
    /// Smallest singular value of I − D₀(λ_j).
    pub sigma_min: f64,
    /// Kernel dimension estimate (singular values below tolerance).
    pub kernel_dim: usize,
    /// Resonant pairing p_j = ⟨φ_{V,0}, W R_U(−λ_j) W η_j⟩.
    pub p_j: f64,
    /// Residue of a_eff at λ_j from the eigenvector formula.
    pub c_j: f64,
    /// Residue from an independent local pole fit of a_eff (NaN if the fit
    /// window was unusable).
    pub c_j_fit: f64,
    /// Closed-channel state the root is associated with (pole just below),
    /// None for a root below the whole closed spectrum.
    pub state: Option<usize>,
    /// True when this is the only root in its inter-pole interval.
    pub interlaced: bool,
    /// Populated in the embedded regime λ_j > |E_j|.
    pub breit_wigner: Option<BreitWigner>,
    /// Coupling-size proxy ‖W‖₁ of the grid operator, for the smallness
    /// regime check.
    pub w_norm: f64,
}

/// Precomputed general-model context.
pub struct CoupledContext {
    pub grid: RadialGrid,
    pub pot_u: Array1<f64>,
    pub pot_v: Array1<f64>,
    /// Grid realization of the coupling operator W.
    pub wm: Array2<f64>,
    /// R_V(0) realization.
    pub m_v0: Array2<f64>,
    pub phi_v0: Array1<f64>,
    pub a_v: f64,
    pub bound_states_u: Vec<BoundState>,
    /// ‖W‖₁ of the grid operator (smallness proxy).
    pub w_norm: f64,
    cond_max: f64,
    root_rtol: f64,
}

impl CoupledContext {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let grid = cfg.build_grid()?;
        let pot_u = cfg.sample(&cfg.potential_u, &grid)?;
        let pot_v = cfg.sample(&cfg.potential_v, &grid)?;
        let prof_w = cfg.sample(&cfg.coupling.profile, &grid)?;
        let wm = crate::config::coupling_matrix(cfg.coupling.kind, &prof_w, &grid);
        let u_fn = |r: f64| {
            crate::config::eval_potential(&cfg.potential_u, r).expect("validated potential")
        };
        Self::from_parts(
            grid,
            pot_u,
            pot_v,
            wm,
            &u_fn,
            cfg.grid.fd_points,
            cfg.tolerances.threshold_tol,
            cfg.tolerances.cond_max,
            cfg.tolerances.root_rtol,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        grid: RadialGrid,
        pot_u: Array1<f64>,
        pot_v: Array1<f64>,
        wm: Array2<f64>,
        u_fn: &dyn Fn(f64) -> f64,
        fd_points: usize,
        threshold_tol: f64,
        cond_max: f64,
        root_rtol: f64,
    ) -> Result<Self> {
        let states = bound_states(&grid, u_fn, &pot_u, fd_points, threshold_tol)?;
        let z = zero_energy(&grid, &pot_v, cond_max)?;
        let rv0 = resolvent_real(&grid, &pot_v, 0.0, cond_max, || "R_V(0)".into())?;
        let w_norm = wm.opnorm_one()?;
        Ok(CoupledContext {
            grid,
            pot_u,
            pot_v,
            wm,
            m_v0: rv0.mat,
            phi_v0: z.wavefunction.values,
            a_v: z.scattering_length,
            bound_states_u: states,
            w_norm,
            cond_max,
            root_rtol,
        })
    }

    /// Pole positions |E_j|, decreasing (|E_0| largest).
    pub fn poles(&self) -> Vec<f64> {
        self.bound_states_u.iter().map(|s| -s.energy).collect()
    }

    /// T(E) = W·M_U(E)·W and the closed-channel condition estimate. The
    /// resolvent error names the offending channel and the nearest
    /// eigenvalue.
    fn t_real(&self, e: f64) -> Result<(Array2<f64>, f64)> {
        let nearest = self
            .bound_states_u
            .iter()
            .map(|s| s.energy)
            .min_by(|a, b| (a - e).abs().partial_cmp(&(b - e).abs()).unwrap());
        let ru = resolvent_real(&self.grid, &self.pot_u, e, self.cond_max, || match nearest {
            Some(ej) => format!(
                "closed channel U at E = {e:.9e}, nearest eigenvalue E_j = {ej:.9e}"
            ),
            None => format!("closed channel U at E = {e:.9e}"),
        })?;
        Ok((self.wm.dot(&ru.mat).dot(&self.wm), ru.cond))
    }

    /// D₀(λ) = R_V(0)·W·R_U(−λ)·W (real zero-energy path).
    fn d0(&self, lambda: f64) -> Result<(Array2<f64>, f64)> {
        let (t, cond_u) = self.t_real(-lambda)?;
        Ok((self.m_v0.dot(&t), cond_u))
    }

    /// Dense complex D_k at energy k² and offset λ.
    pub fn assemble_d(&self, k2: f64, lambda: f64) -> Result<EffectiveOperator> {
        if !(k2 >= 0.0 && k2 < lambda) {
            return Err(FeshError::Domain(format!(
                "effective operator needs 0 ≤ k² < λ, got k² = {k2}, λ = {lambda}"
            )));
        }
        let (t, cond_closed) = self.t_real(k2 - lambda)?;
        if k2 == 0.0 {
            let d = self.m_v0.dot(&t);
            return Ok(EffectiveOperator {
                matrix: d.mapv(|v| C64::new(v, 0.0)),
                lambda,
                k2,
                cond_open: f64::NAN,
                cond_closed,
            });
        }
        let rv = resolvent_complex(&self.grid, &self.pot_v, k2, self.cond_max, || {
            format!("open channel V at E = {k2:.9e}")
        })?;
        let tc = t.mapv(|v| C64::new(v, 0.0));
        Ok(EffectiveOperator {
            matrix: rv.mat.dot(&tc),
            lambda,
            k2,
            cond_open: rv.cond,
            cond_closed,
        })
    }

    /// Near-real eigenpairs of D₀(λ), sorted by decreasing real part.
    fn real_eigs(&self, lambda: f64) -> Result<Vec<(f64, Array1<f64>)>> {
        let (d, _) = self.d0(lambda)?;
        let (vals, vecs) = d.eig()?;
        let scale = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut out: Vec<(f64, Array1<f64>)> = Vec::new();
        for (i, z) in vals.iter().enumerate() {
            if z.im.abs() <= IM_TOL * z.norm().max(1e-12 * scale) {
                let v = vecs.column(i).mapv(|c| c.re);
                let n = v.dot(&v).sqrt();
                out.push((z.re, v / n));
            }
        }
        out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        Ok(out)
    }

    /// Number of real eigenvalues of D₀(λ) above 1.
    fn count_above_one(&self, lambda: f64) -> Result<usize> {
        Ok(self
            .real_eigs(lambda)?
            .iter()
            .filter(|(mu, _)| *mu > 1.0)
            .count())
    }

    /// sign(det(I − D₀(λ))) ∈ {−1, 0, +1}; flips at every simple crossing
    /// μ = 1 and is insensitive to complex conjugate pairs.
    fn det_sign(&self, lambda: f64) -> Result<f64> {
        let (d, _) = self.d0(lambda)?;
        let a = Array2::<f64>::eye(d.nrows()) - &d;
        let (sign, _) = a.sln_det()?;
        Ok(sign)
    }

    /// Track the `n_branches` largest eigenvalue branches of D₀ across an
    /// ascending λ grid, matching by maximal eigenvector overlap and
    /// bisecting samples when the matching is ambiguous.
    pub fn mu_branches(&self, lambda_grid: &[f64], n_branches: usize) -> Result<Vec<MuBranch>> {
        if lambda_grid.len() < 2 {
            return Err(FeshError::Domain(
                "branch tracking needs at least two λ samples".into(),
            ));
        }
        for pair in lambda_grid.windows(2) {
            if !(pair[0] > 0.0 && pair[1] > pair[0]) {
                return Err(FeshError::Domain(
                    "λ grid must be positive and strictly increasing".into(),
                ));
            }
        }
        for &lam in lambda_grid {
            for pole in self.poles() {
                if (lam - pole).abs() < 1e-4 * pole {
                    return Err(FeshError::Domain(format!(
                        "λ = {lam:.9e} within relative margin 1e-4 of closed-channel \
                         eigenvalue |E_j| = {pole:.9e}"
                    )));
                }
            }
        }

        let first = self.real_eigs(lambda_grid[0])?;
        let m = n_branches.min(first.len()).max(1);
        let mut branches: Vec<MuBranch> = first
            .into_iter()
            .take(m)
            .enumerate()
            .map(|(id, (mu, v))| MuBranch {
                id,
                lambdas: vec![lambda_grid[0]],
                mus: vec![mu],
                vectors: vec![v],
            })
            .collect();

        let mut cursor = lambda_grid[0];
        // Work queue of targets; ambiguous steps push a midpoint in front.
        let mut queue: Vec<f64> = lambda_grid[1..].iter().rev().cloned().collect();
        let mut splits = 0usize;
        while let Some(target) = queue.pop() {
            let eigs = self.real_eigs(target)?;
            // Greedy overlap matching of each branch to an unused eigenpair.
            let mut taken = vec![false; eigs.len()];
            let mut assignment: Vec<(usize, f64)> = Vec::with_capacity(branches.len());
            let mut worst: f64 = 1.0;
            for br in &branches {
                let snap = br.vectors.last().unwrap();
                let mut best = (usize::MAX, 0.0);
                for (i, (_, v)) in eigs.iter().enumerate() {
                    if taken[i] {
                        continue;
                    }
                    let ov = snap.dot(v).abs();
                    if ov > best.1 {
                        best = (i, ov);
                    }
                }
                if best.0 == usize::MAX {
                    return Err(FeshError::Domain(format!(
                        "eigenvalue branch {} lost its real continuation at λ = {target:.9e}",
                        br.id
                    )));
                }
                taken[best.0] = true;
                worst = worst.min(best.1);
                assignment.push(best);
            }
            let span = target - cursor;
            if worst < 0.5 && span > 1e-9 * target && splits < 4096 {
                // Ambiguous: bisect the step and retry.
                queue.push(target);
                queue.push(cursor + 0.5 * span);
                splits += 1;
                continue;
            }
            for (br, (idx, _)) in branches.iter_mut().zip(assignment) {
                let (mu, v) = &eigs[idx];
                br.lambdas.push(target);
                br.mus.push(*mu);
                br.vectors.push(v.clone());
            }
            cursor = target;
        }
        Ok(branches)
    }

    /// All critical values λ_j in `(lambda_min, lambda_max)` with full
    /// reports. Roots are isolated per inter-pole segment by exact crossing
    /// counts (the branch values decrease monotonically in λ), refined by
    /// determinant-sign bisection, and validated through the kernel's
    /// singular values. An empty list is returned when nothing crosses.
    pub fn find_resonances(&self, lambda_min: f64, lambda_max: f64) -> Result<Vec<ResonanceReport>> {
        if !(lambda_min > 0.0 && lambda_max > lambda_min) {
            return Err(FeshError::ConfigInvalid(
                "lambda_range must be positive".into(),
            ));
        }
        let mut poles_asc = self.poles();
        poles_asc.reverse();

        // Carve [λ_min, λ_max] into segments avoiding pole margins.
        let mut segments: Vec<(f64, f64)> = Vec::new();
        let mut start = lambda_min;
        for &q in &poles_asc {
            let lo_edge = q * (1.0 - POLE_MARGIN);
            let hi_edge = q * (1.0 + POLE_MARGIN);
            if hi_edge <= lambda_min || lo_edge >= lambda_max {
                if hi_edge > lambda_min && hi_edge < lambda_max {
                    start = start.max(hi_edge);
                }
                continue;
            }
            if lo_edge > start {
                segments.push((start, lo_edge.min(lambda_max)));
            }
            start = start.max(hi_edge);
        }
        if start < lambda_max {
            segments.push((start, lambda_max));
        }

        let mut roots: Vec<f64> = Vec::new();
        for (lo, hi) in segments {
            let n_lo = self.count_above_one(lo)?;
            let n_hi = self.count_above_one(hi)?;
            if n_lo > n_hi {
                self.isolate_roots(lo, hi, n_lo, n_hi, &mut roots)?;
            }
        }
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());

        // Interval occupancy for the interlacing flags.
        let interval_of = |lam: f64| poles_asc.iter().filter(|&&q| q < lam).count();
        let mut reports = Vec::with_capacity(roots.len());
        for &lam in &roots {
            let occupancy = roots.iter().filter(|&&r| interval_of(r) == interval_of(lam)).count();
            reports.push(self.report_at(lam, occupancy == 1)?);
        }
        Ok(reports)
    }

    /// Recursively split [lo, hi] (crossing counts n_lo > n_hi) until each
    /// bracket holds exactly one crossing, then bisect on the determinant
    /// sign. Brackets that cannot be split flag an accidental degeneracy.
    fn isolate_roots(
        &self,
        lo: f64,
        hi: f64,
        n_lo: usize,
        n_hi: usize,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        let count = n_lo - n_hi;
        if count == 0 {
            return Ok(());
        }
        if hi - lo < 1e-9 * hi {
            if count == 1 {
                out.push(0.5 * (lo + hi));
                return Ok(());
            }
            return Err(FeshError::AccidentalDegeneracy {
                lambda: 0.5 * (lo + hi),
                dim: count,
            });
        }
        if count == 1 {
            out.push(self.bisect_det(lo, hi)?);
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        let n_mid = self.count_above_one(mid)?;
        self.isolate_roots(lo, mid, n_lo, n_mid, out)?;
        self.isolate_roots(mid, hi, n_mid, n_hi, out)
    }

    /// Determinant-sign bisection for a single crossing in [lo, hi].
    fn bisect_det(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        let s_lo = self.det_sign(lo)?;
        let s_hi = self.det_sign(hi)?;
        if s_lo == 0.0 {
            return Ok(lo);
        }
        if s_hi == 0.0 {
            return Ok(hi);
        }
        if s_lo == s_hi {
            // A pair of very close crossings hides from the parity; treat as
            // degenerate at this resolution.
            return Err(FeshError::AccidentalDegeneracy {
                lambda: 0.5 * (lo + hi),
                dim: 2,
            });
        }
        while hi - lo > self.root_rtol * hi {
            let mid = 0.5 * (lo + hi);
            let s_mid = self.det_sign(mid)?;
            if s_mid == 0.0 {
                return Ok(mid);
            }
            if s_mid == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Populate a full report at one critical value.
    fn report_at(&self, lambda_j: f64, interlaced: bool) -> Result<ResonanceReport> {
        let (d, _) = self.d0(lambda_j)?;
        let n = d.nrows();

        // Kernel size from the singular values of I − D₀.
        let a = Array2::<f64>::eye(n) - &d;
        let (_, sv, _) = a.svd(false, false)?;
        let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let kernel_dim = sv.iter().filter(|&&s| s < KERNEL_TOL).count();
        if kernel_dim > 1 {
            return Err(FeshError::AccidentalDegeneracy {
                lambda: lambda_j,
                dim: kernel_dim,
            });
        }

        // Right and left kernel vectors (left in the bilinear 4π sense:
        // η̃ = y / q where Dᵀ y = y and q are the quadrature weights).
        // The dgeev vectors only seed a shifted inverse iteration on I − D₀:
        // the coupling tail grades D₀ over many decades and the balancing
        // back-transform inside dgeev can leave O(1) junk in the graded
        // components, while LU solves are grading-safe.
        let polish = KernelPolish::new(&a)?;
        let eta = {
            let (vals, vecs) = d.eig()?;
            let mut eta = polish.refine(&a, nearest_one_vector(&vals, &vecs)?, false);
            let norm = self.grid.pair(&eta, &eta).sqrt();
            eta.mapv_inplace(|v| v / norm);
            if self.grid.pair(&eta, &self.phi_v0) < 0.0 {
                eta.mapv_inplace(|v| -v);
            }
            eta
        };
        let eta_t = {
            let (vals, vecs) = d.t().to_owned().eig()?;
            let y = polish.refine(&a, nearest_one_vector(&vals, &vecs)?, true);
            let mut et = Array1::<f64>::zeros(n);
            for i in 0..n {
                et[i] = y[i] / self.grid.weights[i];
            }
            et
        };

        // One closed-channel resolvent serves p_j, c_j, and D′.
        let ru = resolvent_real(&self.grid, &self.pot_u, -lambda_j, self.cond_max, || {
            format!("closed channel U at E = {:.9e}", -lambda_j)
        })?;
        let t1 = self.wm.dot(&eta);
        let t2 = ru.mat.dot(&t1);
        let p_j = self.grid.pair(&self.phi_v0, &self.wm.dot(&t2));
        // ⟨η̃, D′(λ_j) η⟩ with D′ = −R_V(0)·W·R_U(−λ)²·W.
        let t3 = ru.mat.dot(&t2);
        let dprime_eta = -self.m_v0.dot(&self.wm.dot(&t3));
        let denom = self.grid.pair(&eta_t, &dprime_eta);
        let c_j = p_j * self.grid.pair(&eta_t, &self.phi_v0) / (4.0 * PI * denom);

        let c_j_fit = self.pole_fit(lambda_j);

        // Associated closed-channel state: the pole just below λ_j.
        let state = self.poles().iter().position(|&p| p < lambda_j);
        let breit_wigner = match state {
            Some(j) if lambda_j + self.bound_states_u[j].energy > 1e-12 * lambda_j => {
                Some(self.breit_wigner(lambda_j, j)?)
            }
            _ => None,
        };

        Ok(ResonanceReport {
            lambda_j,
            eta,
            sigma_min,
            kernel_dim,
            p_j,
            c_j,
            c_j_fit,
            state,
            interlaced,
            breit_wigner,
            w_norm: self.w_norm,
        })
    }

    /// Independent residue estimate: least-squares fit of
    /// (λ − λ_j)·a_eff(λ) = c + b·(λ − λ_j) on a symmetric stencil.
    fn pole_fit(&self, lambda_j: f64) -> f64 {
        for deltas in [[1e-2, 1e-3], [3e-3, 3e-4]] {
            let mut xs: Vec<f64> = Vec::new();
            let mut ys: Vec<f64> = Vec::new();
            for d in deltas {
                for s in [1.0, -1.0] {
                    let lam = lambda_j * (1.0 + s * d);
                    if let Ok(a) = self.a_eff(lam) {
                        xs.push(lam - lambda_j);
                        ys.push((lam - lambda_j) * a);
                    }
                }
            }
            if xs.len() >= 3 {
                // Normal equations for y = c + b x.
                let n = xs.len() as f64;
                let sx: f64 = xs.iter().sum();
                let sxx: f64 = xs.iter().map(|x| x * x).sum();
                let sy: f64 = ys.iter().sum();
                let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
                let det = n * sxx - sx * sx;
                if det.abs() > 0.0 {
                    return (sy * sxx - sx * sxy) / det;
                }
            }
        }
        f64::NAN
    }

    /// Zero-energy effective scattering length (physical convention):
    /// a_eff(λ) = a_V − (1/4π)·⟨φ_{V,0}, W R_U(−λ) W φ₀⟩ with
    /// (I − D₀(λ))·φ₀ = φ_{V,0}.
    pub fn a_eff(&self, lambda: f64) -> Result<f64> {
        self.sample_zero_energy(lambda).map(|(a, _, _)| a)
    }

    /// One zero-energy sweep sample: `(a_eff, mu_max, cond)` where `mu_max`
    /// is a power-method estimate of the largest eigenvalue of D₀(λ) and
    /// `cond` the 1-norm condition estimate of I − D₀(λ).  A fixed iteration
    /// count keeps the estimate bit-reproducible across thread layouts.
    pub fn sample_zero_energy(&self, lambda: f64) -> Result<(f64, f64, f64)> {
        let (t, _) = self.t_real(-lambda)?;
        let d = self.m_v0.dot(&t);
        let mu_max = dominant_eigenvalue(&d)?;
        let a = Array2::<f64>::eye(d.nrows()) - &d;
        let inv = match a.inv() {
            Ok(inv) => inv,
            Err(_) => {
                return Err(FeshError::NearSingular {
                    context: "near a resonance or embedded eigenvalue".into(),
                    cond: f64::INFINITY,
                })
            }
        };
        let cond = a.opnorm_one()? * inv.opnorm_one()?;
        if !cond.is_finite() || cond > self.cond_max {
            return Err(FeshError::NearSingular {
                context: "near a resonance or embedded eigenvalue".into(),
                cond,
            });
        }
        let phi0 = inv.dot(&self.phi_v0);
        let a_eff = self.a_v - self.grid.pair(&self.phi_v0, &t.dot(&phi0)) / (4.0 * PI);
        Ok((a_eff, mu_max, cond))
    }

    /// Effective Lippmann–Schwinger solve at momentum k: returns the dressed
    /// open-channel solution φ_k and the unitary amplitude
    /// A_eff(k) = A_V(k) + (1/4π)·⟨φ_{V,k}, W R_U(k²−λ) W φ_k⟩.
    pub fn solve_effective_ls(&self, k: f64, lambda: f64) -> Result<(Array1<C64>, C64)> {
        if !(k > 0.0 && k * k < lambda) {
            return Err(FeshError::Domain(format!(
                "effective LS needs 0 < k² < λ, got k = {k}, λ = {lambda}"
            )));
        }
        let sc = scattering_solution(&self.grid, &self.pot_v, k, self.cond_max)?;
        let (t, _) = self.t_real(k * k - lambda)?;
        let tc = t.mapv(|v| C64::new(v, 0.0));
        let rv = resolvent_complex(&self.grid, &self.pot_v, k * k, self.cond_max, || {
            format!("open channel V at E = {:.9e}", k * k)
        })?;
        let d = rv.mat.dot(&tc);
        let a = Array2::<C64>::eye(d.nrows()) - &d;
        let inv = match a.inv() {
            Ok(inv) => inv,
            Err(_) => {
                return Err(FeshError::NearSingular {
                    context: "near a resonance or embedded eigenvalue".into(),
                    cond: f64::INFINITY,
                })
            }
        };
        let cond = a.opnorm_one()? * inv.opnorm_one()?;
        if !cond.is_finite() || cond > self.cond_max {
            return Err(FeshError::NearSingular {
                context: "near a resonance or embedded eigenvalue".into(),
                cond,
            });
        }
        let phi = inv.dot(&sc.wavefunction);
        let amp = sc.amplitude
            + self.grid.pair_c(&sc.wavefunction, &tc.dot(&phi)) / C64::new(4.0 * PI, 0.0);
        Ok((phi, amp))
    }

    /// Residue of a_eff at a critical value, from the right kernel vector
    /// `eta` (the left one is recomputed internally).
    pub fn residue(&self, lambda_j: f64, eta: &Array1<f64>) -> Result<f64> {
        let (d, _) = self.d0(lambda_j)?;
        let n = d.nrows();
        let a = Array2::<f64>::eye(n) - &d;
        let (_, sv, _) = a.svd(false, false)?;
        let kernel_dim = sv.iter().filter(|&&s| s < KERNEL_TOL).count();
        if kernel_dim > 1 {
            return Err(FeshError::AccidentalDegeneracy {
                lambda: lambda_j,
                dim: kernel_dim,
            });
        }
        let (vals, vecs) = d.t().to_owned().eig()?;
        let y = nearest_one_vector(&vals, &vecs)?;
        let mut eta_t = Array1::<f64>::zeros(n);
        for i in 0..n {
            eta_t[i] = y[i] / self.grid.weights[i];
        }
        let ru = resolvent_real(&self.grid, &self.pot_u, -lambda_j, self.cond_max, || {
            format!("closed channel U at E = {:.9e}", -lambda_j)
        })?;
        let t1 = self.wm.dot(eta);
        let t2 = ru.mat.dot(&t1);
        let p_j = self.grid.pair(&self.phi_v0, &self.wm.dot(&t2));
        let t3 = ru.mat.dot(&t2);
        let dprime_eta = -self.m_v0.dot(&self.wm.dot(&t3));
        let denom = self.grid.pair(&eta_t, &dprime_eta);
        Ok(p_j * self.grid.pair(&eta_t, &self.phi_v0) / (4.0 * PI * denom))
    }

    /// Breit–Wigner parameters of the resonance embedded in the open
    /// channel by closed-channel state `j` at offset λ:
    /// E_res = E_b + Re⟨Wψ_j, R_V(E + i0) Wψ_j⟩ (one fixed-point update of
    /// the evaluation energy) and Γ = 2·Im⟨Wψ_j, R_V(E_b + i0) Wψ_j⟩ ≥ 0.
    pub fn breit_wigner(&self, lambda: f64, j: usize) -> Result<BreitWigner> {
        let state = self.bound_states_u.get(j).ok_or_else(|| {
            FeshError::Domain(format!(
                "closed-channel state index {j} out of range ({} states)",
                self.bound_states_u.len()
            ))
        })?;
        let e_b = lambda + state.energy;
        if e_b <= 0.0 {
            return Err(FeshError::NotEmbedded { e_b });
        }
        let f = self.wm.dot(&state.wavefunction.values);
        let shift0 = resolvent_pairing(&self.grid, &self.pot_v, e_b, &f)?;
        let gamma = 2.0 * im_resolvent_pairing(&self.grid, &self.pot_v, e_b.sqrt(), &f)?;
        let e1 = e_b + shift0.re;
        let e_res = if e1 > 0.0 && (e1 - e_b).abs() > 1e-14 * e_b {
            let shift1 = resolvent_pairing(&self.grid, &self.pot_v, e1, &f)?;
            e_b + shift1.re
        } else {
            e1
        };
        Ok(BreitWigner { e_b, e_res, gamma })
    }

    /// Closed-channel partner ξ = −R_U(k²−λ)·Wφ and the quadrature norm of
    /// the coupled residual (ℋ − k²)(φ, ξ), with second derivatives taken by
    /// per-panel spectral collocation on the grid.
    pub fn closed_channel_pair(
        &self,
        phi: &Array1<C64>,
        k: f64,
        lambda: f64,
    ) -> Result<(Array1<C64>, f64)> {
        let e = k * k - lambda;
        let ru = resolvent_real(&self.grid, &self.pot_u, e, self.cond_max, || {
            format!("closed channel U at E = {e:.9e}")
        })?;
        let ruc = ru.mat.mapv(|v| C64::new(v, 0.0));
        let wmc = self.wm.mapv(|v| C64::new(v, 0.0));
        let w_phi = wmc.dot(phi);
        let xi = -ruc.dot(&w_phi);

        let phi_dd = self.grid.second_derivative_c(phi);
        let xi_dd = self.grid.second_derivative_c(&xi);
        let w_xi = wmc.dot(&xi);
        let k2 = C64::new(k * k, 0.0);
        let mut r1 = Array1::<C64>::zeros(self.grid.n());
        let mut r2 = Array1::<C64>::zeros(self.grid.n());
        for i in 0..self.grid.n() {
            r1[i] = -phi_dd[i] + (C64::new(self.pot_v[i], 0.0) - k2) * phi[i] + w_xi[i];
            r2[i] = -xi_dd[i] + (C64::new(self.pot_u[i] + lambda, 0.0) - k2) * xi[i] + w_phi[i];
        }
        let res = (self.grid.norm_c(&r1).powi(2) + self.grid.norm_c(&r2).powi(2)).sqrt();
        Ok((xi, res))
    }
}

/// Shared LU of I − D₀ (plus a tiny diagonal shift) that polishes kernel
/// vectors by inverse iteration.  Both the right vector and the transposed
/// (left) vector reuse the one factorization.
struct KernelPolish {
    lu: Option<LUFactorized<OwnedRepr<f64>>>,
}

impl KernelPolish {
    fn new(a: &Array2<f64>) -> Result<Self> {
        let shift = 1e-13 * a.opnorm_one()?;
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        // A factorization failure (hard singularity despite the shift) just
        // disables polishing; the dgeev vectors are used as they are.
        Ok(KernelPolish {
            lu: m.factorize().ok(),
        })
    }

    /// Three inverse-iteration steps from `start`, kept only when they do
    /// not worsen the kernel residual ‖(I − D₀)v‖; the sign stays aligned
    /// with the start vector.
    fn refine(&self, a: &Array2<f64>, start: Array1<f64>, transpose: bool) -> Array1<f64> {
        let Some(lu) = &self.lu else { return start };
        let mut v = start.clone();
        for _ in 0..3 {
            let solved = if transpose { lu.solve_t(&v) } else { lu.solve(&v) };
            let Ok(w) = solved else { return start };
            let nrm = w.dot(&w).sqrt();
            if !nrm.is_finite() || nrm <= 0.0 {
                return start;
            }
            v = w / nrm;
        }
        let residual = |x: &Array1<f64>| {
            let ax = if transpose { a.t().dot(x) } else { a.dot(x) };
            ax.dot(&ax).sqrt()
        };
        let s = start.dot(&start).sqrt();
        if residual(&v) > residual(&start) / s.max(f64::MIN_POSITIVE) {
            return start;
        }
        if v.dot(&start) < 0.0 {
            v.mapv_inplace(|x| -x);
        }
        v
    }
}

/// Largest eigenvalue of a real matrix with (numerically) real spectrum,
/// estimated by 300 shifted power iterations and a final Rayleigh quotient.
/// The shift s = ‖D‖₁ + 1 makes every eigenvalue μ + s positive, so the
/// iteration converges to the largest μ rather than the largest |μ|.
fn dominant_eigenvalue(d: &Array2<f64>) -> Result<f64> {
    let n = d.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let s = d.opnorm_one()? + 1.0;
    let mut v = Array1::<f64>::from_elem(n, 1.0 / (n as f64).sqrt());
    for _ in 0..300 {
        let w = d.dot(&v) + &v * s;
        let nrm = w.dot(&w).sqrt();
        if nrm <= 0.0 || nrm.is_nan() {
            return Ok(-s);
        }
        v = w / nrm;
    }
    let sv = d.dot(&v) + &v * s;
    Ok(v.dot(&sv) / v.dot(&v) - s)
}

/// Real eigenvector at the eigenvalue nearest 1 (errors if that eigenvalue
/// is meaningfully complex).
fn nearest_one_vector(vals: &Array1<C64>, vecs: &Array2<C64>) -> Result<Array1<f64>> {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, z) in vals.iter().enumerate() {
        let d = (z - C64::new(1.0, 0.0)).norm();
        if d < best.1 {
            best = (i, d);
        }
    }
    let z = vals[best.0];
    if z.im.abs() > IM_TOL * z.norm().max(1.0) {
        return Err(FeshError::Domain(format!(
            "kernel eigenvalue is complex: {z}"
        )));
    }
    let v = vecs.column(best.0).mapv(|c| c.re);
    let n = v.dot(&v).sqrt();
    Ok(v / n)
}
