//! Composite Gauss–Legendre radial grid and reduced-function algebra.
//!
//! Every s-wave radial wavefunction ψ(r) is stored in reduced form
//! u(r) = r·ψ(r), sampled at the quadrature nodes. With that convention the
//! three-dimensional L² pairing of radial functions becomes
//! ⟨f, g⟩ = 4π ∫₀^∞ f(r) g(r) dr, realized here as 4π Σᵢ wᵢ fᵢ gᵢ.
//!
//! The grid is a uniform partition of [0, r_max] into panels, each carrying
//! the same Gauss–Legendre rule. Nodes are strictly interior to their panel,
//! so u(0) = 0 never needs an explicit sample and per-panel polynomial
//! interpolation/differentiation is always well defined. Potential
//! discontinuities should be aligned with panel edges (choose the panel count
//! so the radius divides r_max evenly); smooth potentials need no care.

use crate::error::{FeshError, Result};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;

/// Composite quadrature grid on (0, r_max).
#[derive(Clone, Debug)]
pub struct RadialGrid {
    /// Quadrature nodes, strictly increasing, all in (0, r_max).
    pub nodes: Array1<f64>,
    /// Matching quadrature weights; Σ weights = r_max.
    pub weights: Array1<f64>,
    /// panels + 1 ascending edges with `edges[0] = 0` and `edges[panels] = r_max`.
    pub panel_edges: Vec<f64>,
    pub nodes_per_panel: usize,
    /// Reference Gauss–Legendre nodes on [-1, 1] (ascending).
    ref_nodes: Vec<f64>,
    /// Barycentric weights of the reference nodes.
    ref_bary: Vec<f64>,
    /// Second-derivative collocation matrix on the reference nodes.
    ref_d2: Array2<f64>,
}

/// Radial function sampled on a [`RadialGrid`], always in reduced form u = r·ψ.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialFn {
    pub values: Array1<f64>,
}

impl RadialFn {
    pub fn new(values: Array1<f64>) -> Self {
        RadialFn { values }
    }
}

/// Gauss–Legendre rule of order `n` on [-1, 1], nodes ascending.
/// Newton iteration on the Legendre recurrence; standard and accurate to ~1 ulp
/// for the modest orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th root (descending order).
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(z) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Barycentric interpolation weights for distinct nodes `t`.
fn barycentric_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut b = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                b[j] /= t[j] - t[k];
            }
        }
    }
    // Normalize to tame the scale; barycentric ratios are scale invariant.
    let mx = b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for v in &mut b {
        *v /= mx;
    }
    b
}

/// Values of all Lagrange basis polynomials over nodes `t` at point `x`.
pub(crate) fn lagrange_basis(t: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    // Exact node hit: the basis collapses to a unit vector.
    for (j, &tj) in t.iter().enumerate() {
        if x == tj {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut denom = 0.0;
    for j in 0..t.len() {
        let term = bary[j] / (x - t[j]);
        out[j] = term;
        denom += term;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

/// First-derivative collocation matrix on distinct nodes `t` (degree-exact for
/// polynomials up to the interpolation degree).
fn diff_matrix(t: &[f64], bary: &[f64]) -> Array2<f64> {
    let n = t.len();
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (t[i] - t[j]);
                d[[i, j]] = v;
                row_sum += v;
            }
        }
        d[[i, i]] = -row_sum;
    }
    d
}

/// Build a composite Gauss–Legendre grid.
///
/// Preconditions: `r_max > 0`, `panels ≥ 1`, `nodes_per_panel ≥ 2`.
pub fn build_grid(r_max: f64, panels: usize, nodes_per_panel: usize) -> Result<RadialGrid> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(FeshError::Domain(format!("r_max must be positive, got {r_max}")));
    }
    if panels < 1 || nodes_per_panel < 2 {
        return Err(FeshError::Domain(format!(
            "grid needs panels ≥ 1 and nodes_per_panel ≥ 2, got {panels}×{nodes_per_panel}"
        )));
    }
    let m = nodes_per_panel;
    let (xs, ws) = gauss_legendre(m);
    let mut nodes = Vec::with_capacity(panels * m);
    let mut weights = Vec::with_capacity(panels * m);
    let mut edges = Vec::with_capacity(panels + 1);
    let h = r_max / panels as f64;
    for p in 0..=panels {
        edges.push(p as f64 * h);
    }
    *edges.last_mut().unwrap() = r_max;
    for p in 0..panels {
        let (a, b) = (edges[p], edges[p + 1]);
        let c = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        for j in 0..m {
            nodes.push(c + s * xs[j]);
            weights.push(s * ws[j]);
        }
    }
    let bary = barycentric_weights(&xs);
    let d1 = diff_matrix(&xs, &bary);
    let ref_d2 = d1.dot(&d1);
    Ok(RadialGrid {
        nodes: Array1::from(nodes),
        weights: Array1::from(weights),
        panel_edges: edges,
        nodes_per_panel: m,
        ref_nodes: xs,
        ref_bary: bary,
        ref_d2,
    })
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn panels(&self) -> usize {
        self.panel_edges.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        *self.panel_edges.last().unwrap()
    }

    /// Index of the panel containing node `i`.
    pub fn panel_of(&self, i: usize) -> usize {
        i / self.nodes_per_panel
    }

    /// Reference-rule data used by kernel product integration.
    pub(crate) fn reference(&self) -> (&[f64], &[f64]) {
        (&self.ref_nodes, &self.ref_bary)
    }

    /// Reduced 3D pairing 4π Σ wᵢ fᵢ gᵢ (bilinear; all stored functions are
    /// either real or carry their outgoing phase explicitly, so no conjugate).
    pub fn pair(&self, f: &Array1<f64>, g: &Array1<f64>) -> f64 {
        debug_assert_eq!(f.len(), self.n());
        debug_assert_eq!(g.len(), self.n());
        let mut s = 0.0;
        for i in 0..self.n() {
            s += self.weights[i] * f[i] * g[i];
        }
        4.0 * std::f64::consts::PI * s
    }

    /// Complex bilinear pairing 4π Σ wᵢ fᵢ gᵢ (no conjugation: amplitude
    /// formulas pair outgoing solutions bilinearly).
    pub fn pair_c(&self, f: &Array1<C64>, g: &Array1<C64>) -> C64 {
        debug_assert_eq!(f.len(), self.n());
        debug_assert_eq!(g.len(), self.n());
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.n() {
            s += self.weights[i] * f[i] * g[i];
        }
        4.0 * std::f64::consts::PI * s
    }

    /// Reduced L² norm √⟨f, f⟩.
    pub fn norm(&self, f: &Array1<f64>) -> f64 {
        self.pair(f, f).sqrt()
    }

    /// Quadrature norm of a complex grid function: √(4π Σ wᵢ |fᵢ|²).
    pub fn norm_c(&self, f: &Array1<C64>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n() {
            s += self.weights[i] * f[i].norm_sqr();
        }
        (4.0 * std::f64::consts::PI * s).sqrt()
    }

    /// Second derivative of the per-panel polynomial interpolant, evaluated at
    /// the nodes. Degree-exact within each panel; accuracy for smooth data is
    /// set by the panel interpolation error, so it refines at the quadrature's
    /// own rate.
    pub fn second_derivative_c(&self, f: &Array1<C64>) -> Array1<C64> {
        debug_assert_eq!(f.len(), self.n());
        let m = self.nodes_per_panel;
        let mut out = Array1::<C64>::zeros(self.n());
        for p in 0..self.panels() {
            let s = 0.5 * (self.panel_edges[p + 1] - self.panel_edges[p]);
            let scale = 1.0 / (s * s);
            for i in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..m {
                    acc += self.ref_d2[[i, j]] * f[p * m + j];
                }
                out[p * m + i] = acc * scale;
            }
        }
        out
    }

    pub fn second_derivative(&self, f: &Array1<f64>) -> Array1<f64> {
        let fc = f.mapv(|v| C64::new(v, 0.0));
        self.second_derivative_c(&fc).mapv(|v| v.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_r_max() {
        // Σ wᵢ = r_max and nodes strictly increase: quadrature consistency.
        let g = build_grid(7.5, 13, 9).unwrap();
        assert_relative_eq!(g.weights.sum(), 7.5, max_relative = 1e-13);
        for i in 1..g.n() {
            assert!(g.nodes[i] > g.nodes[i - 1]);
        }
        assert!(g.nodes[0] > 0.0 && g.nodes[g.n() - 1] < 7.5);
    }

    #[test]
    fn quadrature_is_spectrally_accurate() {
        // ∫₀^5 e^{-r} dr = 1 - e^{-5}
        let g = build_grid(5.0, 10, 8).unwrap();
        let vals = g.nodes.mapv(|r| (-r).exp());
        let q: f64 = (0..g.n()).map(|i| g.weights[i] * vals[i]).sum();
        assert_relative_eq!(q, 1.0 - (-5.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn pairing_matches_three_dimensional_integral() {
        // f = g = r e^{-r} (reduced form of ψ = e^{-r}):
        // 4π ∫ r² e^{-2r} dr = 4π · (2/8) = π over [0, ∞).
        let g = build_grid(40.0, 40, 10).unwrap();
        let f = g.nodes.mapv(|r| r * (-r).exp());
        assert_relative_eq!(g.pair(&f, &f), std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn panel_second_derivative_is_degree_exact() {
        let g = build_grid(3.0, 6, 7).unwrap();
        // u = r³ - 2r² + r → u'' = 6r - 4, exactly representable per panel.
        let u = g.nodes.mapv(|r| r * r * r - 2.0 * r * r + r);
        let d2 = g.second_derivative(&u);
        for i in 0..g.n() {
            assert_relative_eq!(d2[i], 6.0 * g.nodes[i] - 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(build_grid(0.0, 4, 4).is_err());
        assert!(build_grid(5.0, 0, 4).is_err());
        assert!(build_grid(5.0, 4, 1).is_err());
    }
}
