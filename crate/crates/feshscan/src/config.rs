//! Model description and validation.
//!
//! A model is declared in a TOML document with sections `[potential_U]`,
//! `[potential_V]`, `[coupling]`, `[grid]`, `[scan]`, `[magnetic_map]`,
//! `[tolerances]`. Only the two potentials and the coupling are mandatory;
//! solver parameters default sensibly. Keys are lower_snake_case; energies
//! and lengths are plain decimal literals in units with ħ²/2m = 1.
//!
//! Shape semantics (with d = signed depth, R = range):
//!   square-well   V(r) = d for r < R, else 0
//!   gaussian      V(r) = d·exp(−(r/R)²)
//!   exponential   V(r) = d·exp(−r/R)
//!   tabulated     linear interpolation of (r, V) pairs; evaluation outside
//!                 the tabulated interval is an error
//! `sign = "attractive"`/`"repulsive"` forces the sign of the magnitude;
//! omitted, the depth is taken literally (negative = attractive).

use crate::error::{FeshError, Result};
use crate::green::resolvent_real;
use crate::grid::{build_grid, RadialGrid};
use crate::onebody::{bound_states, fd_smallest_eigenvalue, zero_energy};
use ndarray::prelude::*;
use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    SquareWell,
    Gaussian,
    Exponential,
    Tabulated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Attractive,
    Repulsive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub shape: Shape,
    /// Depth/amplitude at the peak; `amplitude` is accepted as an alias.
    #[serde(default, alias = "amplitude")]
    pub depth: f64,
    /// Length scale; `width` is accepted as an alias. Ignored for tabulated.
    #[serde(default, alias = "width", skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    /// (r, value) pairs for the tabulated shape, r ascending from 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    /// Multiplication by the radial profile W(r).
    Local,
    /// Rank-one |w⟩⟨w| in the 4π pairing, with w(r) the radial profile.
    Separable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub kind: CouplingKind,
    #[serde(flatten)]
    pub profile: PotentialSpec,
}

fn default_panels() -> usize {
    40
}
fn default_nodes_per_panel() -> usize {
    10
}
fn default_fd_points() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    /// Truncation radius; defaults to 5× the largest declared range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default = "default_panels")]
    pub panels: usize,
    #[serde(default = "default_nodes_per_panel")]
    pub nodes_per_panel: usize,
    /// Finite-difference mesh used for eigenvalue counting/bracketing.
    #[serde(default = "default_fd_points")]
    pub fd_points: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            r_max: None,
            panels: default_panels(),
            nodes_per_panel: default_nodes_per_panel(),
            fd_points: default_fd_points(),
        }
    }
}

fn default_lambda_min() -> f64 {
    0.1
}
fn default_lambda_max() -> f64 {
    10.0
}
fn default_points() -> usize {
    200
}
fn default_refine_threshold() -> f64 {
    1.0
}
fn default_max_refinements() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Base grid size of the λ sweep.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Adaptive refinement trigger: |Δa_eff| between neighbours above this
    /// inserts a midpoint sample.
    #[serde(default = "default_refine_threshold")]
    pub refine_threshold: f64,
    #[serde(default = "default_max_refinements")]
    pub max_refinements: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            lambda_min: default_lambda_min(),
            lambda_max: default_lambda_max(),
            points: default_points(),
            refine_threshold: default_refine_threshold(),
            max_refinements: default_max_refinements(),
        }
    }
}

/// Affine map λ(B) = lambda_ref + slope·(B − b_ref).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticMap {
    pub lambda_ref: f64,
    pub slope: f64,
    pub b_ref: f64,
}

impl MagneticMap {
    pub fn lambda_of_b(&self, b: f64) -> f64 {
        self.lambda_ref + self.slope * (b - self.b_ref)
    }
    pub fn b_of_lambda(&self, lambda: f64) -> f64 {
        self.b_ref + (lambda - self.lambda_ref) / self.slope
    }
}

fn default_tail_tol() -> f64 {
    1e-6
}
fn default_cond_max() -> f64 {
    crate::green::DEFAULT_COND_MAX
}
fn default_root_rtol() -> f64 {
    1e-10
}
fn default_pole_window() -> f64 {
    1e-4
}
fn default_threshold_tol() -> f64 {
    1e-12
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Tail-decay budget for the Ikebe-style checks at R_max.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Condition-estimate ceiling for every dense solve.
    #[serde(default = "default_cond_max")]
    pub cond_max: f64,
    /// Relative tolerance of bracketed root refinement.
    #[serde(default = "default_root_rtol")]
    pub root_rtol: f64,
    /// Relative half-width of the exclusion window around poles.
    #[serde(default = "default_pole_window")]
    pub pole_window: f64,
    /// Bound states closer to E = 0 than this are refused as ambiguous.
    #[serde(default = "default_threshold_tol")]
    pub threshold_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tail_tol: default_tail_tol(),
            cond_max: default_cond_max(),
            root_rtol: default_root_rtol(),
            pole_window: default_pole_window(),
            threshold_tol: default_threshold_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "potential_U")]
    pub potential_u: PotentialSpec,
    #[serde(rename = "potential_V")]
    pub potential_v: PotentialSpec,
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub scan: ScanParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic_map: Option<MagneticMap>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

// ---------------------------------------------------------------------------
// Parsing.

const POTENTIAL_KEYS: &[&str] = &["shape", "depth", "amplitude", "range", "width", "sign", "table"];

/// Key allowlist check for the sections that serde's `flatten` prevents us
/// from guarding with `deny_unknown_fields`.
fn check_section_keys(doc: &toml::Table, section: &str, allowed: &[&str]) -> Result<()> {
    if let Some(toml::Value::Table(t)) = doc.get(section) {
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(FeshError::ConfigParse(format!(
                    "unknown key `{key}` in [{section}]"
                )));
            }
        }
    }
    Ok(())
}

/// Parse and validate a TOML model document.
pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| FeshError::ConfigParse(e.to_string()))?;
    check_section_keys(&doc, "potential_U", POTENTIAL_KEYS)?;
    check_section_keys(&doc, "potential_V", POTENTIAL_KEYS)?;
    let mut coupling_keys = vec!["kind"];
    coupling_keys.extend_from_slice(POTENTIAL_KEYS);
    check_section_keys(&doc, "coupling", &coupling_keys)?;
    let cfg: ModelConfig =
        toml::from_str(text).map_err(|e| FeshError::ConfigParse(e.to_string()))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

/// Canonical serialization; `parse_config(serialize_config(c))` is identity.
pub fn serialize_config(cfg: &ModelConfig) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| FeshError::ConfigInvalid(e.to_string()))
}

/// FNV-1a 64-bit hash of the canonical serialization; stamped into every
/// output file for provenance.
pub fn config_hash(cfg: &ModelConfig) -> String {
    let text = serialize_config(cfg).unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn validate_potential(spec: &PotentialSpec, name: &str) -> Result<()> {
    if !spec.depth.is_finite() {
        return Err(FeshError::ConfigInvalid(format!(
            "{name}: depth must be finite"
        )));
    }
    match spec.shape {
        Shape::Tabulated => {
            let table = spec.table.as_ref().ok_or_else(|| {
                FeshError::ConfigInvalid(format!("{name}: tabulated shape needs a `table`"))
            })?;
            if table.is_empty() {
                return Err(FeshError::ConfigInvalid(format!("{name}: empty table")));
            }
            if table[0].0 != 0.0 {
                return Err(FeshError::ConfigInvalid(format!(
                    "{name}: table must start at r = 0"
                )));
            }
            // NaN radii fall through here and are rejected by the
            // finiteness check below.
            for w in table.windows(2) {
                if w[1].0 <= w[0].0 {
                    return Err(FeshError::ConfigInvalid(format!(
                        "{name}: table radii must be strictly increasing"
                    )));
                }
            }
            if table.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
                return Err(FeshError::ConfigInvalid(format!(
                    "{name}: table values must be finite"
                )));
            }
        }
        _ => {
            let range = spec.range.ok_or_else(|| {
                FeshError::ConfigInvalid(format!("{name}: missing `range`"))
            })?;
            if !(range > 0.0 && range.is_finite()) {
                return Err(FeshError::ConfigInvalid(format!(
                    "{name}: range must be positive, got {range}"
                )));
            }
        }
    }
    Ok(())
}

fn validate_config(cfg: &ModelConfig) -> Result<()> {
    validate_potential(&cfg.potential_u, "potential_U")?;
    validate_potential(&cfg.potential_v, "potential_V")?;
    validate_potential(&cfg.coupling.profile, "coupling")?;
    if cfg.coupling.kind == CouplingKind::Separable && potential_is_zero(&cfg.coupling.profile) {
        return Err(FeshError::ConfigInvalid(
            "coupling: separable profile must not be identically zero".into(),
        ));
    }
    if cfg.grid.panels < 4 || cfg.grid.nodes_per_panel < 4 {
        return Err(FeshError::ConfigInvalid(format!(
            "grid counts must be at least 4 (panels = {}, nodes_per_panel = {})",
            cfg.grid.panels, cfg.grid.nodes_per_panel
        )));
    }
    if !(cfg.scan.lambda_min > 0.0 && cfg.scan.lambda_max > cfg.scan.lambda_min) {
        return Err(FeshError::ConfigInvalid(
            "lambda_range must be positive".into(),
        ));
    }
    if cfg.scan.points < 2 {
        return Err(FeshError::ConfigInvalid(
            "scan points must be at least 2".into(),
        ));
    }
    if let Some(map) = &cfg.magnetic_map {
        if map.slope == 0.0 || !map.slope.is_finite() {
            return Err(FeshError::ConfigInvalid(
                "magnetic_map: slope must be nonzero and finite".into(),
            ));
        }
    }
    let t = &cfg.tolerances;
    if !(t.tail_tol > 0.0 && t.cond_max > 1.0 && t.root_rtol > 0.0 && t.pole_window > 0.0
        && t.threshold_tol > 0.0)
    {
        return Err(FeshError::ConfigInvalid(
            "tolerances must all be positive".into(),
        ));
    }

    let r_max = cfg.r_max();
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(FeshError::ConfigInvalid(format!(
            "r_max must be positive and finite, got {r_max}"
        )));
    }
    for (spec, name) in [
        (&cfg.potential_u, "potential_U"),
        (&cfg.potential_v, "potential_V"),
        (&cfg.coupling.profile, "coupling"),
    ] {
        match spec.shape {
            Shape::Tabulated => {
                let last = spec.table.as_ref().unwrap().last().unwrap().0;
                if r_max > last {
                    return Err(FeshError::ConfigInvalid(format!(
                        "{name}: table ends at r = {last} but the grid extends to {r_max}"
                    )));
                }
            }
            _ => {
                if r_max <= spec.range.unwrap() {
                    return Err(FeshError::ConfigInvalid(format!(
                        "r_max = {r_max} must exceed the {name} range {}",
                        spec.range.unwrap()
                    )));
                }
            }
        }
    }
    Ok(())
}

fn potential_is_zero(spec: &PotentialSpec) -> bool {
    match spec.shape {
        Shape::Tabulated => spec
            .table
            .as_ref()
            .map(|t| t.iter().all(|(_, v)| *v == 0.0))
            .unwrap_or(true),
        _ => spec.depth == 0.0,
    }
}

// ---------------------------------------------------------------------------
// Evaluation.

/// Evaluate a potential shape at radius r ≥ 0.
pub fn eval_potential(spec: &PotentialSpec, r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(FeshError::PotentialEval(format!(
            "radius must be finite and nonnegative, got {r}"
        )));
    }
    let raw = match spec.shape {
        Shape::SquareWell => {
            let range = spec.range.unwrap_or(0.0);
            if r < range {
                spec.depth
            } else {
                0.0
            }
        }
        Shape::Gaussian => {
            let range = spec.range.unwrap_or(1.0);
            let x = r / range;
            spec.depth * (-x * x).exp()
        }
        Shape::Exponential => {
            let range = spec.range.unwrap_or(1.0);
            spec.depth * (-r / range).exp()
        }
        Shape::Tabulated => {
            let table = spec
                .table
                .as_ref()
                .ok_or_else(|| FeshError::PotentialEval("tabulated shape without table".into()))?;
            let last = table.last().unwrap();
            if r > last.0 {
                return Err(FeshError::PotentialEval(format!(
                    "r = {r} outside tabulated range [0, {}]",
                    last.0
                )));
            }
            let idx = table.partition_point(|(ri, _)| *ri <= r);
            if idx == 0 {
                table[0].1
            } else if idx == table.len() {
                last.1
            } else {
                let (r0, v0) = table[idx - 1];
                let (r1, v1) = table[idx];
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    };
    Ok(match spec.sign {
        None => raw,
        Some(Sign::Attractive) => -raw.abs(),
        Some(Sign::Repulsive) => raw.abs(),
    })
}

impl ModelConfig {
    /// Truncation radius: declared, or 5× the largest parametric range
    /// (falling back to the shortest tabulated extent).
    pub fn r_max(&self) -> f64 {
        if let Some(r) = self.grid.r_max {
            return r;
        }
        let specs = [&self.potential_u, &self.potential_v, &self.coupling.profile];
        let widest = specs
            .iter()
            .filter(|s| s.shape != Shape::Tabulated)
            .filter_map(|s| s.range)
            .fold(0.0f64, f64::max);
        if widest > 0.0 {
            5.0 * widest
        } else {
            specs
                .iter()
                .filter_map(|s| s.table.as_ref())
                .filter_map(|t| t.last())
                .map(|(r, _)| *r)
                .fold(f64::INFINITY, f64::min)
        }
    }

    pub fn build_grid(&self) -> Result<RadialGrid> {
        build_grid(self.r_max(), self.grid.panels, self.grid.nodes_per_panel)
    }

    /// Potential values on the quadrature nodes. Valid configs guarantee the
    /// grid lies inside every tabulated interval, so this cannot fail after
    /// [`parse_config`].
    pub fn sample(&self, spec: &PotentialSpec, grid: &RadialGrid) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(grid.n());
        for (i, &r) in grid.nodes.iter().enumerate() {
            out[i] = eval_potential(spec, r)?;
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Assumption checks.

/// Numerical audit of the model's standing assumptions. Failures are
/// reported, never thrown; `violations` is empty exactly when every boolean
/// check passes.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    /// Number of closed-channel bound states (must be ≥ 1 for resonances).
    pub n_bound_states_u: usize,
    pub closed_channel_energies: Vec<f64>,
    /// Open channel must carry no bound state: smallest eigenvalue of the
    /// discretized −d²/dr² + V is not negative.
    pub hv_nonneg: bool,
    pub hv_min_eigenvalue: f64,
    pub a_v_finite: bool,
    pub a_v: Option<f64>,
    /// ⟨w, R_V(0) w⟩ for separable coupling (positive by assumption).
    pub beta_positive: Option<bool>,
    pub beta_v: Option<f64>,
    /// Tail-decay checks |Z(R_max)|·R_max^(n+1/2) < tail_tol with n = 2 (U),
    /// 4 (V), 3 (W).
    pub tails_ok: bool,
    /// Smallest singular value of the discretized W·R_V(0)·W quadratic form.
    /// Diagnostic only — a nontrivial kernel of this form would defeat the
    /// residue formulas, but no hard threshold is imposed.
    pub coupling_kernel_sigma_min: f64,
    pub violations: Vec<String>,
}

pub fn validate_assumptions(cfg: &ModelConfig) -> Result<AssumptionReport> {
    let grid = cfg.build_grid()?;
    let pot_u = cfg.sample(&cfg.potential_u, &grid)?;
    let pot_v = cfg.sample(&cfg.potential_v, &grid)?;
    let prof_w = cfg.sample(&cfg.coupling.profile, &grid)?;
    let mut violations = Vec::new();

    // Closed channel: N ≥ 1 simple negative eigenvalues.
    let u_fn = |r: f64| eval_potential(&cfg.potential_u, r).expect("validated potential");
    let (n_u, energies) = match bound_states(
        &grid,
        &u_fn,
        &pot_u,
        cfg.grid.fd_points,
        cfg.tolerances.threshold_tol,
    ) {
        Ok(states) => {
            let e: Vec<f64> = states.iter().map(|s| s.energy).collect();
            (states.len(), e)
        }
        Err(FeshError::NearThreshold { energy }) => {
            violations.push(format!(
                "H_U has a bound state at the threshold (E = {energy:.3e})"
            ));
            (0, Vec::new())
        }
        Err(e) => return Err(e),
    };
    if n_u == 0 && violations.is_empty() {
        violations.push("H_U has no bound states".into());
    }

    // Open channel: H_V ≥ 0 via the smallest FD eigenvalue.
    let v_fn = |r: f64| eval_potential(&cfg.potential_v, r).expect("validated potential");
    let hv_min = fd_smallest_eigenvalue(&v_fn, grid.r_max(), cfg.grid.fd_points);
    let hv_nonneg = hv_min > -1e-8 * hv_min.abs().max(1.0);
    if !hv_nonneg {
        violations.push("H_V has negative eigenvalue".into());
    }

    // Finite scattering length (no zero-energy resonance).
    let (a_v_finite, a_v) = match zero_energy(&grid, &pot_v, cfg.tolerances.cond_max) {
        Ok(z) => (true, Some(z.scattering_length)),
        Err(FeshError::ZeroEnergyResonance) => (false, None),
        Err(e) => return Err(e),
    };
    if !a_v_finite {
        violations.push("a_V diverges (zero-energy resonance of H_V)".into());
    }

    // β_V > 0 for separable coupling. The declared profile is the 3D radial
    // shape w(r); pairings act on its reduced form r·w(r).
    let (beta_positive, beta_v) = if cfg.coupling.kind == CouplingKind::Separable {
        let w_red = &prof_w * &grid.nodes;
        match resolvent_real(&grid, &pot_v, 0.0, cfg.tolerances.cond_max, || {
            "R_V(0) for beta_V".into()
        }) {
            Ok(res) => {
                let beta = grid.pair(&w_red, &res.mat.dot(&w_red));
                (Some(beta > 0.0), Some(beta))
            }
            Err(_) => (Some(false), None),
        }
    } else {
        (None, None)
    };
    if beta_positive == Some(false) {
        violations.push("beta_V is not positive".into());
    }

    // Tail decay at R_max.
    let r_max = grid.r_max();
    let mut tails_ok = true;
    for (spec, name, n) in [
        (&cfg.potential_u, "U", 2.0),
        (&cfg.potential_v, "V", 4.0),
        (&cfg.coupling.profile, "W", 3.0),
    ] {
        let z = eval_potential(spec, r_max)?.abs();
        let weight = z * r_max.powf(n + 0.5);
        if weight >= cfg.tolerances.tail_tol {
            tails_ok = false;
            violations.push(format!(
                "{name} tail too heavy at R_max: |Z|·R^{:.1} = {weight:.3e} ≥ {:.1e}",
                n + 0.5,
                cfg.tolerances.tail_tol
            ));
        }
    }

    // Kernel-triviality diagnostic: σ_min of the grid realization of
    // W·R_V(0)·W (no threshold; reported for inspection).
    let coupling_kernel_sigma_min = {
        let wm = coupling_matrix(cfg.coupling.kind, &prof_w, &grid);
        match resolvent_real(&grid, &pot_v, 0.0, cfg.tolerances.cond_max, || {
            "R_V(0) for the coupling kernel diagnostic".into()
        }) {
            Ok(res) => {
                let k = wm.dot(&res.mat).dot(&wm);
                match k.svd(false, false) {
                    Ok((_, s, _)) => s.iter().cloned().fold(f64::INFINITY, f64::min),
                    Err(_) => f64::NAN,
                }
            }
            Err(_) => f64::NAN,
        }
    };

    Ok(AssumptionReport {
        n_bound_states_u: n_u,
        closed_channel_energies: energies,
        hv_nonneg,
        hv_min_eigenvalue: hv_min,
        a_v_finite,
        a_v,
        beta_positive,
        beta_v,
        tails_ok,
        coupling_kernel_sigma_min,
        violations,
    })
}

/// Grid realization of the coupling operator W acting on reduced functions
/// (quadrature folded in). `profile` holds the declared shape values W(r_i).
/// Local coupling multiplies pointwise, so the matrix is diag(W(r_i)); the
/// separable rank-one operator pairs against the *reduced* profile
/// w_red = r·w(r): (W u)_i = w_red,i·⟨w_red, u⟩ = 4π Σ_j w_red,i w_red,j q_j u_j.
pub(crate) fn coupling_matrix(
    kind: CouplingKind,
    profile: &Array1<f64>,
    grid: &RadialGrid,
) -> Array2<f64> {
    let n = grid.n();
    match kind {
        CouplingKind::Local => Array2::from_diag(profile),
        CouplingKind::Separable => {
            let w_red = profile * &grid.nodes;
            let mut m = Array2::zeros((n, n));
            let four_pi = 4.0 * std::f64::consts::PI;
            for i in 0..n {
                for j in 0..n {
                    m[[i, j]] = four_pi * w_red[i] * w_red[j] * grid.weights[j];
                }
            }
            m
        }
    }
}
