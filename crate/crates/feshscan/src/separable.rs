//! The exactly solvable rank-one model.
//!
//! With W = |w⟩⟨w| every two-channel quantity collapses to two scalar
//! functions of the closed-channel offset λ:
//!   β_V      = ⟨w, R_V(0) w⟩            (coupling strength through V)
//!   F(λ)     = ⟨w, R_U(−λ) w⟩           (closed-channel response)
//! with F′(λ) = −‖R_U(−λ) w‖² < 0, so F decreases from +∞ to −∞ across each
//! pole |E_j| and the resonance condition F(λ) = 1/β_V has exactly one root
//! per interval (plus one more below the deepest pole when F(0⁺) > 1/β_V).
//!
//! All scalars (a_V, a_eff, residues) follow the physical sign convention
//! pinned crate-wide: a repulsive core gives a > 0, the closed-channel
//! dressing is an *attractive* effective interaction, so
//!   a_eff(λ) = a_V − (1/4π)·⟨w, φ_{V,0}⟩²·F(λ)/(1 − β_V F(λ)),
//! and the pole residues c_j = (1/4π)·o²·F(λ_j)/(β_V·F′(λ_j)) come out
//! negative for generic couplings. Finite-k amplitudes stay in the standard
//! unitary convention (Im A = k|A|², a = −A(0)), so the k → 0 limit of
//! A_eff is −a_eff. Both signs are deliberate and covered by tests.
//!
//! Everywhere below, w denotes the *reduced* profile r·w(r) sampled on the
//! grid, and every pairing is the bilinear 4π one.

use crate::config::{CouplingKind, ModelConfig};
use crate::error::{FeshError, Result};
use crate::green::{resolvent_complex, resolvent_real};
use crate::grid::RadialGrid;
use crate::onebody::{bound_states, scattering_solution, zero_energy, BoundState};
use crate::roots::brent;
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Everything fixed about the rank-one model once the potentials are chosen.
pub struct SeparableContext {
    pub grid: RadialGrid,
    /// Reduced coupling profile r·w(r) at the nodes.
    pub w: Array1<f64>,
    pub pot_u: Array1<f64>,
    pub pot_v: Array1<f64>,
    /// β_V = ⟨w, R_V(0) w⟩ ≥ 0.
    pub beta_v: f64,
    pub bound_states_u: Vec<BoundState>,
    /// o_j = ⟨ψ_j, w⟩.
    pub overlaps: Vec<f64>,
    /// Zero-energy open-channel solution, u → r − a_V.
    pub phi_v0: Array1<f64>,
    pub a_v: f64,
    /// o = ⟨w, φ_{V,0}⟩.
    pub w_phi0: f64,
    cond_max: f64,
    root_rtol: f64,
    pole_window: f64,
}

/// A root of the resonance condition F(λ) = 1/β_V.
#[derive(Clone, Copy, Debug)]
pub struct SeparableRoot {
    pub lambda: f64,
    /// Bracket the root was isolated in.
    pub bracket: (f64, f64),
    /// The default pole margins had to be tightened to capture the sign
    /// change (root hugging a pole); downstream surfaces this as a warning.
    pub widened: bool,
}

impl SeparableContext {
    /// Build from a validated config (requires separable coupling).
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        if cfg.coupling.kind != CouplingKind::Separable {
            return Err(FeshError::Domain(
                "separable engine requires coupling.kind = \"separable\"".into(),
            ));
        }
        let grid = cfg.build_grid()?;
        let pot_u = cfg.sample(&cfg.potential_u, &grid)?;
        let pot_v = cfg.sample(&cfg.potential_v, &grid)?;
        let w_spec = cfg.sample(&cfg.coupling.profile, &grid)?;
        let u_fn = |r: f64| {
            crate::config::eval_potential(&cfg.potential_u, r).expect("validated potential")
        };
        Self::from_parts(
            grid,
            pot_u,
            pot_v,
            &w_spec,
            &u_fn,
            cfg.grid.fd_points,
            cfg.tolerances.threshold_tol,
            cfg.tolerances.cond_max,
            cfg.tolerances.root_rtol,
            cfg.tolerances.pole_window,
        )
    }

    /// Build from already-sampled ingredients. `w_spec` is the declared 3D
    /// profile w(r); the context stores its reduced form r·w(r).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        grid: RadialGrid,
        pot_u: Array1<f64>,
        pot_v: Array1<f64>,
        w_spec: &Array1<f64>,
        u_fn: &dyn Fn(f64) -> f64,
        fd_points: usize,
        threshold_tol: f64,
        cond_max: f64,
        root_rtol: f64,
        pole_window: f64,
    ) -> Result<Self> {
        let w = w_spec * &grid.nodes;
        let states = bound_states(&grid, u_fn, &pot_u, fd_points, threshold_tol)?;
        let z = zero_energy(&grid, &pot_v, cond_max)?;
        let rv0 = resolvent_real(&grid, &pot_v, 0.0, cond_max, || "R_V(0)".into())?;
        let beta_v = grid.pair(&w, &rv0.mat.dot(&w));
        if beta_v < 0.0 {
            return Err(FeshError::Domain(format!(
                "beta_V = {beta_v:.6e} is negative; H_V fails the positivity assumption"
            )));
        }
        let overlaps = states
            .iter()
            .map(|s| grid.pair(&s.wavefunction.values, &w))
            .collect();
        let w_phi0 = grid.pair(&w, &z.wavefunction.values);
        Ok(SeparableContext {
            grid,
            w,
            pot_u,
            pot_v,
            beta_v,
            bound_states_u: states,
            overlaps,
            phi_v0: z.wavefunction.values,
            a_v: z.scattering_length,
            w_phi0,
            cond_max,
            root_rtol,
            pole_window,
        })
    }

    /// Pole positions |E_j| in decreasing order (|E_0| largest).
    pub fn poles(&self) -> Vec<f64> {
        self.bound_states_u.iter().map(|s| -s.energy).collect()
    }

    /// F(λ) = ⟨w, R_U(−λ) w⟩ and F′(λ) = −‖R_U(−λ) w‖², both from one direct
    /// linear solve — no spectral decomposition, so the continuum is exact.
    pub fn f_lambda(&self, lambda: f64) -> Result<(f64, f64)> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(FeshError::Domain(format!(
                "F(λ) needs λ > 0, got {lambda}"
            )));
        }
        for pole in self.poles() {
            if (lambda - pole).abs() < 1e-9 * pole.max(1.0) {
                return Err(FeshError::Domain(format!(
                    "pole of F: λ = {lambda:.12e} within tolerance of |E_j| = {pole:.12e}"
                )));
            }
        }
        let res = resolvent_real(&self.grid, &self.pot_u, -lambda, self.cond_max, || {
            format!("R_U(−λ) at λ = {lambda:.6e}")
        })?;
        let f = res.mat.dot(&self.w);
        Ok((self.grid.pair(&self.w, &f), -self.grid.pair(&f, &f)))
    }

    /// All roots of F(λ) = 1/β_V, one per inter-pole interval, largest λ
    /// first, plus the below-the-spectrum root when F(0⁺) > 1/β_V.
    pub fn resonances(&self) -> Result<Vec<SeparableRoot>> {
        if self.beta_v <= 0.0 {
            return Err(FeshError::Domain(
                "resonance condition needs beta_V > 0".into(),
            ));
        }
        let target = 1.0 / self.beta_v;
        let poles = self.poles();
        let mut roots = Vec::new();
        let g = |lam: f64| -> Result<f64> { Ok(self.f_lambda(lam)?.0 - target) };

        if poles.is_empty() {
            return Ok(roots);
        }

        // (|E_0|, ∞): expand the upper endpoint until F − 1/β < 0.
        {
            let p = poles[0];
            let mut hi = 2.0 * p;
            let mut g_hi = g(hi)?;
            let mut grow = 0;
            while g_hi > 0.0 && grow < 200 {
                hi *= 2.0;
                g_hi = g(hi)?;
                grow += 1;
            }
            if g_hi <= 0.0 {
                if let Some(root) = self.bracket_root(&g, p, hi, false, g_hi)? {
                    roots.push(root);
                }
            }
        }

        // Interior intervals (|E_j|, |E_{j−1}|).
        for j in 1..poles.len() {
            let (lo_pole, hi_pole) = (poles[j], poles[j - 1]);
            if let Some(root) = self.interval_root(&g, lo_pole, hi_pole)? {
                roots.push(root);
            }
        }

        // Extra root in (0, |E_{N−1}|) iff F(0⁺) > 1/β_V.
        {
            let last = *poles.last().unwrap();
            let lo = (1e-8 * last).max(f64::MIN_POSITIVE.sqrt());
            let g_lo = g(lo)?;
            if g_lo > 0.0 {
                let hi = last * (1.0 - 1e-6);
                let g_hi = g(hi)?;
                if g_hi < 0.0 {
                    let lambda = brent(&g, lo, hi, g_lo, g_hi, 0.0, self.root_rtol)?;
                    roots.push(SeparableRoot {
                        lambda,
                        bracket: (lo, hi),
                        widened: false,
                    });
                }
            }
        }
        Ok(roots)
    }

    /// Root search in an interval with the left endpoint at a pole of F and a
    /// free upper endpoint where g has already been evaluated (negative).
    fn bracket_root<G: Fn(f64) -> Result<f64>>(
        &self,
        g: &G,
        lo_pole: f64,
        hi: f64,
        mut widened: bool,
        g_hi: f64,
    ) -> Result<Option<SeparableRoot>> {
        // F → +∞ at the pole when the overlap is nonzero; tighten the margin
        // toward the pole until the sign change appears.
        for margin in [1e-6, 1e-8, 1e-10] {
            let lo = lo_pole * (1.0 + margin);
            if lo >= hi {
                continue;
            }
            let g_lo = g(lo)?;
            if g_lo > 0.0 {
                let lambda = brent(g, lo, hi, g_lo, g_hi, 0.0, self.root_rtol)?;
                return Ok(Some(SeparableRoot {
                    lambda,
                    bracket: (lo, hi),
                    widened,
                }));
            }
            widened = true;
        }
        // No sign change even hugging the pole: the overlap with this bound
        // state vanishes, so no resonance emerges from it.
        Ok(None)
    }

    fn interval_root<G: Fn(f64) -> Result<f64>>(
        &self,
        g: &G,
        lo_pole: f64,
        hi_pole: f64,
    ) -> Result<Option<SeparableRoot>> {
        let mut widened = false;
        for margin in [1e-6, 1e-8, 1e-10] {
            let lo = lo_pole * (1.0 + margin);
            let hi = hi_pole * (1.0 - margin);
            if lo >= hi {
                continue;
            }
            let (g_lo, g_hi) = (g(lo)?, g(hi)?);
            if g_lo > 0.0 && g_hi < 0.0 {
                let lambda = brent(g, lo, hi, g_lo, g_hi, 0.0, self.root_rtol)?;
                return Ok(Some(SeparableRoot {
                    lambda,
                    bracket: (lo, hi),
                    widened,
                }));
            }
            widened = true;
        }
        Ok(None)
    }

    /// Effective scattering length (physical convention; see module docs).
    pub fn a_eff(&self, lambda: f64) -> Result<f64> {
        let (f, fp) = self.f_lambda(lambda)?;
        let denom = 1.0 - self.beta_v * f;
        // Distance to the nearest root estimated by one Newton step of
        // (1 − βF); inside the pole window the evaluation is refused.
        let newton = denom / (self.beta_v * fp);
        if newton.abs() < self.pole_window * lambda {
            return Err(FeshError::PoleProximity {
                what: "a_eff",
                lambda,
                nearest: lambda + newton,
            });
        }
        Ok(self.a_v - self.w_phi0 * self.w_phi0 / (4.0 * PI) * f / denom)
    }

    /// Finite-momentum effective amplitude A_eff(k, λ) in the standard
    /// unitary convention; A_eff → −a_eff as k → 0.
    pub fn amp_eff(&self, k: f64, lambda: f64) -> Result<C64> {
        if !(k > 0.0 && k * k < lambda) {
            return Err(FeshError::Domain(format!(
                "amplitude needs 0 < k² < λ, got k = {k}, λ = {lambda}"
            )));
        }
        let sc = scattering_solution(&self.grid, &self.pot_v, k, self.cond_max)?;
        let wc = self.w.mapv(|v| C64::new(v, 0.0));
        // ⟨w, R_V(k²) w⟩ with the outgoing kernel (complex β).
        let rv = resolvent_complex(&self.grid, &self.pot_v, k * k, self.cond_max, || {
            format!("R_V(k²) at k = {k:.6e}")
        })?;
        let beta_k = self.grid.pair_c(&wc, &rv.mat.dot(&wc));
        // ⟨w, R_U(k² − λ) w⟩ — still below the closed-channel threshold.
        let e_closed = k * k - lambda;
        for pole in self.poles() {
            if (e_closed + pole).abs() < 1e-9 * pole.max(1.0) {
                return Err(FeshError::Domain(format!(
                    "pole of F: k² − λ = {e_closed:.12e} at closed-channel eigenvalue −{pole:.12e}"
                )));
            }
        }
        let ru = resolvent_real(&self.grid, &self.pot_u, e_closed, self.cond_max, || {
            format!("R_U(k²−λ) at k = {k:.6e}, λ = {lambda:.6e}")
        })?;
        let f_k = self.grid.pair(&self.w, &ru.mat.dot(&self.w));
        let w_phik = self.grid.pair_c(&wc, &sc.wavefunction);
        let denom = C64::new(1.0, 0.0) - beta_k * f_k;
        if denom.norm() < 1e-12 * (1.0 + (beta_k * f_k).norm()) {
            return Err(FeshError::NearSingular {
                context: "near a resonance or embedded eigenvalue".into(),
                cond: 1.0 / denom.norm(),
            });
        }
        Ok(sc.amplitude + w_phik * w_phik * f_k / (4.0 * PI * denom))
    }

    /// Pole residue c_j of a_eff at a root λ_j of the resonance condition
    /// (physical convention: negative for generic couplings).
    pub fn residue(&self, lambda_j: f64) -> Result<f64> {
        let (f, fp) = self.f_lambda(lambda_j)?;
        Ok(self.w_phi0 * self.w_phi0 / (4.0 * PI) * f / (self.beta_v * fp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use approx::assert_relative_eq;

    fn model(u_depth: f64, w_depth: f64) -> SeparableContext {
        let text = format!(
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
kind = "separable"
shape = "gaussian"
depth = {w_depth}
range = 1.0

[grid]
r_max = 10.0
panels = 25
nodes_per_panel = 10
"#
        );
        SeparableContext::new(&parse_config(&text).unwrap()).unwrap()
    }

    #[test]
    fn f_is_decreasing_between_poles() {
        let ctx = model(30.0, 1.0);
        let poles = ctx.poles();
        assert_eq!(poles.len(), 2);
        // Interior interval (|E_1|, |E_0|) and the outer one (|E_0|, 4|E_0|).
        for (lo, hi) in [(poles[1] * 1.01, poles[0] * 0.99), (poles[0] * 1.01, poles[0] * 4.0)] {
            let mut prev = f64::INFINITY;
            for s in 0..50 {
                let lam = lo + (hi - lo) * s as f64 / 49.0;
                let (f, fp) = ctx.f_lambda(lam).unwrap();
                assert!(f < prev, "F not decreasing at λ = {lam}");
                assert!(fp < 0.0);
                prev = f;
            }
        }
    }

    #[test]
    fn f_prime_matches_finite_differences() {
        let ctx = model(10.0, 1.0);
        let p = ctx.poles()[0];
        for lam in [p * 1.17, p * 1.9, p * 3.3, p * 0.21, p * 0.62] {
            let (_, fp) = ctx.f_lambda(lam).unwrap();
            let h = 1e-5 * lam;
            let (f_plus, _) = ctx.f_lambda(lam + h).unwrap();
            let (f_minus, _) = ctx.f_lambda(lam - h).unwrap();
            let fd = (f_plus - f_minus) / (2.0 * h);
            assert_relative_eq!(fp, fd, max_relative = 1e-8);
        }
    }

    #[test]
    fn f_vanishes_at_large_lambda() {
        let ctx = model(10.0, 1.0);
        let lam = 1e6 * ctx.poles()[0];
        let (f, _) = ctx.f_lambda(lam).unwrap();
        let w_norm2 = ctx.grid.pair(&ctx.w, &ctx.w);
        assert!(f.abs() < w_norm2 / lam * 1.001, "F = {f}");
        assert!(f > 0.0);
    }

    #[test]
    fn pole_strength_recovers_overlap() {
        let ctx = model(10.0, 1.0);
        let p = ctx.poles()[0];
        let lam = p * (1.0 + 1e-5);
        let (f, _) = ctx.f_lambda(lam).unwrap();
        let strength = (lam - p) * f;
        let o2 = ctx.overlaps[0] * ctx.overlaps[0];
        assert_relative_eq!(strength, o2, max_relative = 1e-3);
    }

    #[test]
    fn pole_guard_names_f() {
        let ctx = model(10.0, 1.0);
        let p = ctx.poles()[0];
        let err = ctx.f_lambda(p * (1.0 + 1e-12)).unwrap_err();
        assert!(err.to_string().contains("pole of F"), "{err}");
    }

    #[test]
    fn single_state_yields_single_root_above_pole() {
        let ctx = model(10.0, 1.0);
        let roots = ctx.resonances().unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].lambda > ctx.poles()[0]);
        // At the root, F = 1/β to root tolerance.
        let (f, _) = ctx.f_lambda(roots[0].lambda).unwrap();
        assert_relative_eq!(f, 1.0 / ctx.beta_v, max_relative = 1e-7);
    }

    #[test]
    fn two_state_roots_interlace() {
        let ctx = model(30.0, 0.4);
        let poles = ctx.poles();
        let roots = ctx.resonances().unwrap();
        assert_eq!(roots.len(), 2, "expected exactly N = 2 roots");
        assert!(
            roots[0].lambda > poles[0]
                && poles[0] > roots[1].lambda
                && roots[1].lambda > poles[1],
            "interlacing violated: λ₀ = {}, |E₀| = {}, λ₁ = {}, |E₁| = {}",
            roots[0].lambda,
            poles[0],
            roots[1].lambda,
            poles[1]
        );
    }

    #[test]
    fn root_count_follows_f_at_origin() {
        // The extra root below the spectrum appears exactly when F(0⁺) > 1/β.
        for w_depth in [0.5, 2.0, 4.0] {
            let ctx = model(10.0, w_depth);
            let poles = ctx.poles();
            let lo = 1e-8 * poles.last().unwrap();
            let (f0, _) = ctx.f_lambda(lo).unwrap();
            let expected = poles.len() + usize::from(f0 > 1.0 / ctx.beta_v);
            let roots = ctx.resonances().unwrap();
            assert_eq!(
                roots.len(),
                expected,
                "w_depth = {w_depth}: F(0⁺) = {f0}, 1/β = {}",
                1.0 / ctx.beta_v
            );
        }
    }

    #[test]
    fn a_eff_reduces_to_a_v_without_coupling() {
        // Zero profile is legal at the engine level (configs forbid it).
        let base = model(10.0, 1.0);
        let zero_w = Array1::<f64>::zeros(base.grid.n());
        let u_fn = |r: f64| if r < 1.0 { -10.0 } else { 0.0 };
        let ctx = SeparableContext::from_parts(
            base.grid.clone(),
            base.pot_u.clone(),
            base.pot_v.clone(),
            &zero_w,
            &u_fn,
            2000,
            1e-12,
            1e12,
            1e-10,
            1e-4,
        )
        .unwrap();
        assert_eq!(ctx.beta_v, 0.0);
        let a = ctx.a_eff(3.0).unwrap();
        assert_relative_eq!(a, ctx.a_v, max_relative = 1e-14);
        assert!(ctx.resonances().is_err());
    }

    #[test]
    fn weak_coupling_shift_is_quadratic_in_operator_scale() {
        // Scaling the rank-one operator by ε (profile by √ε) shifts the root
        // by ε²·β_V·o₀² — the coupling enters twice — with an O(ε⁴) error,
        // so halving ε shrinks the residual by ≈ 16.
        let base = model(10.0, 1.0);
        let p = base.poles()[0];
        let o2 = base.overlaps[0] * base.overlaps[0];
        let shift_err = |eps: f64| -> f64 {
            let ctx = model(10.0, eps.sqrt());
            let root = ctx.resonances().unwrap()[0].lambda;
            (root - p - eps * eps * base.beta_v * o2).abs()
        };
        let e1 = shift_err(0.2);
        let e2 = shift_err(0.1);
        let ratio = e1 / e2;
        assert!(
            (8.0..=32.0).contains(&ratio),
            "residuals {e1:.3e} → {e2:.3e}, ratio {ratio:.2}"
        );
    }

    #[test]
    fn residue_matches_pole_fit() {
        let ctx = model(10.0, 1.0);
        let root = ctx.resonances().unwrap()[0].lambda;
        let c = ctx.residue(root).unwrap();
        assert!(c < 0.0, "physical-convention residue should be negative");
        // (λ − λ_j)·a_eff(λ) → c_j, two-point extrapolation in δ.
        let fit = |delta: f64| -> f64 {
            let lam = root * (1.0 + delta);
            (lam - root) * ctx.a_eff(lam).unwrap()
        };
        let f1 = fit(1e-2);
        let f2 = fit(5e-3);
        let extrap = 2.0 * f2 - f1;
        assert_relative_eq!(extrap, c, max_relative = 1e-2);
    }

    #[test]
    fn a_eff_flips_sign_across_the_pole() {
        let ctx = model(10.0, 1.0);
        let root = ctx.resonances().unwrap()[0].lambda;
        let left = ctx.a_eff(root * (1.0 - 2e-3)).unwrap();
        let right = ctx.a_eff(root * (1.0 + 2e-3)).unwrap();
        assert!(
            left * right < 0.0,
            "no sign flip: a({:.6}) = {left}, a({:.6}) = {right}",
            root * 0.998,
            root * 1.002
        );
    }

    #[test]
    fn pole_window_refuses_evaluation_and_names_the_pole() {
        let ctx = model(10.0, 1.0);
        let root = ctx.resonances().unwrap()[0].lambda;
        let err = ctx.a_eff(root * (1.0 + 1e-6)).unwrap_err();
        match err {
            FeshError::PoleProximity { nearest, .. } => {
                assert_relative_eq!(nearest, root, max_relative = 1e-4);
            }
            other => panic!("expected pole-proximity error, got {other}"),
        }
    }

    #[test]
    fn amplitude_limits_to_minus_a_eff() {
        let ctx = model(10.0, 1.0);
        let root = ctx.resonances().unwrap()[0].lambda;
        let lam = root * 1.37;
        let a = ctx.a_eff(lam).unwrap();
        let amp = |k: f64| ctx.amp_eff(k, lam).unwrap().re;
        // Richardson in k² over a halving pair.
        let a1 = amp(1e-2);
        let a2 = amp(5e-3);
        let extrap = (4.0 * a2 - a1) / 3.0;
        assert_relative_eq!(extrap, -a, max_relative = 1e-6);
        // Unitarity of the effective amplitude.
        let k = 0.3;
        let ae = ctx.amp_eff(k, lam).unwrap();
        assert_relative_eq!(ae.im, k * ae.norm_sqr(), max_relative = 1e-6);
    }
}
