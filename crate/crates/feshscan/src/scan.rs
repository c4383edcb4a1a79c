//! λ-sweep orchestration and the magnetic-field resonance fit.
//!
//! [`sweep`] drives the coupled solver over the configured λ range: it first
//! locates every resonance root (so the curve carries pole annotations and no
//! sample lands inside a pole window), then evaluates a uniform base grid in
//! parallel and bisects intervals where a_eff jumps by more than the
//! configured threshold.  Samples are independent of each other, so the
//! result — and any file serialized from it — is bit-identical regardless of
//! how many worker threads Rayon uses.
//!
//! [`fit_feshbach`] converts one annotated pole into the conventional
//! magnetic-field parametrization a(B) = a_∞ + Δ/(B − B_res) by a
//! Levenberg–Marquardt fit with the analytic Jacobian.

use ndarray::Array1;
use rayon::prelude::*;

use crate::config::{config_hash, MagneticMap, ModelConfig};
use crate::coupled::{CoupledContext, ResonanceReport};
use crate::error::{FeshError, Result};

/// Provenance of one sweep sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFlag {
    /// Member of the uniform base grid.
    Base,
    /// Inserted by adaptive bisection.
    Refined,
    /// Evaluation failed; the row records the λ with empty values.
    Gap,
}

impl SampleFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleFlag::Base => "base",
            SampleFlag::Refined => "refined",
            SampleFlag::Gap => "gap",
        }
    }

    pub fn parse(s: &str) -> Option<SampleFlag> {
        match s {
            "base" => Some(SampleFlag::Base),
            "refined" => Some(SampleFlag::Refined),
            "gap" => Some(SampleFlag::Gap),
            _ => None,
        }
    }
}

/// One row of the effective-scattering-length curve.
#[derive(Clone, Copy, Debug)]
pub struct ScanSample {
    pub lambda: f64,
    /// Magnetic field B(λ); present only when the config has a magnetic_map.
    pub b: Option<f64>,
    pub a_eff: Option<f64>,
    /// Largest eigenvalue of D₀(λ) (power-method estimate).
    pub mu_max: Option<f64>,
    /// Condition estimate of the I − D₀(λ) solve.
    pub cond: Option<f64>,
    pub flag: SampleFlag,
}

/// Pole annotation attached to a curve: position and physical residue.
#[derive(Clone, Copy, Debug)]
pub struct PoleAnnotation {
    pub lambda_j: f64,
    pub c_j: f64,
}

/// An a_eff(λ) curve with pole annotations and provenance.
#[derive(Clone, Debug)]
pub struct EffCurve {
    /// Samples in strictly increasing λ order.
    pub samples: Vec<ScanSample>,
    /// Annotated resonance positions, increasing in λ.
    pub poles: Vec<PoleAnnotation>,
    /// Hash of the generating config (embedded in every exported file).
    pub config_hash: String,
    /// Human-readable grid/solver provenance line.
    pub provenance: String,
}

/// Everything a sweep produces: the curve plus the full resonance reports.
#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub curve: EffCurve,
    /// Resonance reports in decreasing λ order (as found).
    pub reports: Vec<ResonanceReport>,
}

/// Result of the magnetic-field fit a(B) = a_∞ + Δ/(B − B_res).
#[derive(Clone, Copy, Debug)]
pub struct FeshbachFit {
    pub a_inf: f64,
    pub delta: f64,
    pub b_res: f64,
    /// Root-mean-square residual of the converged fit.
    pub rms: f64,
    pub iterations: usize,
    /// λ of the pole the fit was anchored to.
    pub pole_lambda: f64,
}

fn in_pole_window(lambda: f64, poles: &[PoleAnnotation], window: f64) -> bool {
    poles
        .iter()
        .any(|p| (lambda - p.lambda_j).abs() < window * p.lambda_j)
}

fn evaluate(ctx: &CoupledContext, lambda: f64, b: Option<f64>, flag: SampleFlag) -> ScanSample {
    match ctx.sample_zero_energy(lambda) {
        Ok((a_eff, mu_max, cond)) => ScanSample {
            lambda,
            b,
            a_eff: Some(a_eff),
            mu_max: Some(mu_max),
            cond: Some(cond),
            flag,
        },
        Err(_) => ScanSample {
            lambda,
            b,
            a_eff: None,
            mu_max: None,
            cond: None,
            flag: SampleFlag::Gap,
        },
    }
}

/// Sweep a_eff(λ) over `cfg.scan`: resonance search, uniform base grid,
/// adaptive refinement.  Individual sample failures become `gap` rows; only
/// setup-level failures (bad config, degenerate resonance search) abort.
pub fn sweep(cfg: &ModelConfig) -> Result<ScanOutput> {
    let ctx = CoupledContext::new(cfg)?;
    sweep_with(cfg, &ctx)
}

/// [`sweep`] with a caller-supplied context (avoids rebuilding the grid and
/// bound states when several sweeps share one model).
pub fn sweep_with(cfg: &ModelConfig, ctx: &CoupledContext) -> Result<ScanOutput> {
    let scan = &cfg.scan;
    if !(scan.lambda_min > 0.0 && scan.lambda_max > scan.lambda_min) {
        return Err(FeshError::ConfigInvalid(format!(
            "scan range must satisfy 0 < lambda_min < lambda_max, got [{}, {}]",
            scan.lambda_min, scan.lambda_max
        )));
    }
    if scan.points < 2 {
        return Err(FeshError::ConfigInvalid(format!(
            "scan needs at least 2 points, got {}",
            scan.points
        )));
    }
    let window = cfg.tolerances.pole_window;

    let reports = ctx.find_resonances(scan.lambda_min, scan.lambda_max)?;
    let mut poles: Vec<PoleAnnotation> = reports
        .iter()
        .map(|r| PoleAnnotation {
            lambda_j: r.lambda_j,
            c_j: r.c_j,
        })
        .collect();
    poles.sort_by(|a, b| a.lambda_j.total_cmp(&b.lambda_j));

    let step = (scan.lambda_max - scan.lambda_min) / (scan.points - 1) as f64;
    let base: Vec<f64> = (0..scan.points)
        .map(|i| scan.lambda_min + step * i as f64)
        .filter(|&l| !in_pole_window(l, &poles, window))
        .collect();

    let b_of = |l: f64| cfg.magnetic_map.as_ref().map(|m| m.b_of_lambda(l));
    let mut samples: Vec<ScanSample> = base
        .par_iter()
        .map(|&l| evaluate(ctx, l, b_of(l), SampleFlag::Base))
        .collect();

    // Adaptive bisection: insert midpoints wherever adjacent non-gap samples
    // differ by more than the threshold.  Each round evaluates its batch in
    // parallel; candidates are chosen from the ordered sample list, so the
    // outcome does not depend on thread scheduling.  The loop stops when the
    // budget is spent or a round accepts no new point (e.g. every remaining
    // midpoint falls inside a pole window).
    let mut added = 0usize;
    while added < scan.max_refinements {
        let mut mids: Vec<f64> = Vec::new();
        for pair in samples.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            if let (Some(a0), Some(a1)) = (lo.a_eff, hi.a_eff) {
                if (a1 - a0).abs() > scan.refine_threshold {
                    let m = 0.5 * (lo.lambda + hi.lambda);
                    if m > lo.lambda && m < hi.lambda && !in_pole_window(m, &poles, window) {
                        mids.push(m);
                    }
                }
            }
        }
        mids.truncate(scan.max_refinements - added);
        if mids.is_empty() {
            break;
        }
        added += mids.len();
        let fresh: Vec<ScanSample> = mids
            .par_iter()
            .map(|&l| evaluate(ctx, l, b_of(l), SampleFlag::Refined))
            .collect();
        samples.extend(fresh);
        samples.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    }

    let curve = EffCurve {
        samples,
        poles,
        config_hash: config_hash(cfg),
        provenance: format!(
            "r_max={} panels={} nodes_per_panel={} fd_points={} cond_max={:.1e} root_rtol={:.1e} pole_window={:.1e}",
            cfg.r_max(),
            cfg.grid.panels,
            cfg.grid.nodes_per_panel,
            cfg.grid.fd_points,
            cfg.tolerances.cond_max,
            cfg.tolerances.root_rtol,
            cfg.tolerances.pole_window,
        ),
    };
    Ok(ScanOutput { curve, reports })
}

/// Solve the 3×3 system M·x = rhs by Gaussian elimination with partial
/// pivoting.  Returns None when the pivot chain collapses.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (k, mk) in m[row].iter_mut().enumerate().skip(col) {
                *mk -= f * pivot_row[k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..3).rev() {
        let mut s = rhs[col];
        for k in col + 1..3 {
            s -= m[col][k] * x[k];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

fn cost_of(params: [f64; 3], pts: &[(f64, f64)]) -> f64 {
    let [a_inf, delta, b_res] = params;
    pts.iter()
        .map(|&(b, a)| {
            let r = a_inf + delta / (b - b_res) - a;
            r * r
        })
        .sum()
}

/// Fit a(B) = a_∞ + Δ/(B − B_res) to the samples surrounding one annotated
/// pole of `curve`.  The window reaches halfway to the neighbouring poles
/// (or to the curve edge) and must contain at least 8 usable samples on each
/// side.  Initial guesses come from the annotation itself: B_res from the
/// magnetic map at λ_j, Δ = c_j / slope, a_∞ from the window edges.
pub fn fit_feshbach(
    curve: &EffCurve,
    pole_index: usize,
    map: &MagneticMap,
) -> Result<FeshbachFit> {
    let pole = *curve.poles.get(pole_index).ok_or_else(|| {
        FeshError::Domain(format!(
            "pole index {pole_index} out of range: curve has {} annotated poles",
            curve.poles.len()
        ))
    })?;
    if map.slope == 0.0 {
        return Err(FeshError::ConfigInvalid(
            "magnetic_map.slope must be nonzero".into(),
        ));
    }
    let lj = pole.lambda_j;
    let lo = curve.poles[..pole_index]
        .iter()
        .map(|p| 0.5 * (p.lambda_j + lj))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = curve.poles[pole_index + 1..]
        .iter()
        .map(|p| 0.5 * (p.lambda_j + lj))
        .fold(f64::INFINITY, f64::min);

    let pts: Vec<(f64, f64)> = curve
        .samples
        .iter()
        .filter(|s| s.lambda > lo && s.lambda < hi)
        .filter_map(|s| s.a_eff.map(|a| (map.b_of_lambda(s.lambda), a)))
        .collect();
    let left = curve
        .samples
        .iter()
        .filter(|s| s.lambda > lo && s.lambda < lj && s.a_eff.is_some())
        .count();
    let right = curve
        .samples
        .iter()
        .filter(|s| s.lambda > lj && s.lambda < hi && s.a_eff.is_some())
        .count();
    if left < 8 || right < 8 {
        return Err(FeshError::FitWindow { left, right });
    }

    let b_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let b_max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);

    // Initial iterate from the pole annotation and the window edges.  The
    // edge samples sit farthest from the pole in λ; average their values for
    // the background level.
    let first = curve
        .samples
        .iter()
        .find(|s| s.lambda > lo && s.a_eff.is_some())
        .and_then(|s| s.a_eff)
        .unwrap_or(0.0);
    let last = curve
        .samples
        .iter()
        .rev()
        .find(|s| s.lambda < hi && s.a_eff.is_some())
        .and_then(|s| s.a_eff)
        .unwrap_or(0.0);
    let mut params = [0.5 * (first + last), pole.c_j / map.slope, map.b_of_lambda(lj)];

    let mut damping = 1e-3;
    let mut cost = cost_of(params, &pts);
    let max_iter = 200;
    for iter in 1..=max_iter {
        let [a_inf, delta, b_res] = params;
        // Normal equations JᵀJ·δ = −Jᵀr with the analytic Jacobian
        // ∂a/∂a_∞ = 1, ∂a/∂Δ = 1/(B−B_res), ∂a/∂B_res = Δ/(B−B_res)².
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for &(b, a) in &pts {
            let inv = 1.0 / (b - b_res);
            let row = [1.0, inv, delta * inv * inv];
            let r = a_inf + delta * inv - a;
            for i in 0..3 {
                for j in 0..3 {
                    jtj[i][j] += row[i] * row[j];
                }
                jtr[i] += row[i] * r;
            }
        }
        let mut step = None;
        while damping < 1e14 {
            let mut m = jtj;
            for i in 0..3 {
                m[i][i] += damping * jtj[i][i].max(1e-300);
            }
            if let Some(d) = solve3(m, [-jtr[0], -jtr[1], -jtr[2]]) {
                let trial = [params[0] + d[0], params[1] + d[1], params[2] + d[2]];
                let trial_cost = cost_of(trial, &pts);
                if trial_cost.is_finite() && trial_cost <= cost {
                    step = Some((d, trial, trial_cost));
                    break;
                }
            }
            damping *= 3.0;
        }
        let Some((d, trial, trial_cost)) = step else {
            return Err(FeshError::FitDiverged {
                iterations: iter,
                last: format!(
                    "a_inf = {}, delta = {}, b_res = {}",
                    params[0], params[1], params[2]
                ),
            });
        };
        params = trial;
        cost = trial_cost;
        damping = (damping / 3.0).max(1e-12);
        let converged = (0..3).all(|i| d[i].abs() <= 1e-12 * (1.0 + params[i].abs()));
        if converged {
            let b_res = params[2];
            if !(b_res > b_min.min(b_max) && b_res < b_max.max(b_min)) {
                return Err(FeshError::FitDiverged {
                    iterations: iter,
                    last: format!(
                        "B_res = {} escaped the fitted window [{}, {}]",
                        b_res,
                        b_min.min(b_max),
                        b_max.max(b_min)
                    ),
                });
            }
            return Ok(FeshbachFit {
                a_inf: params[0],
                delta: params[1],
                b_res,
                rms: (cost / pts.len() as f64).sqrt(),
                iterations: iter,
                pole_lambda: lj,
            });
        }
    }
    Err(FeshError::FitDiverged {
        iterations: max_iter,
        last: format!(
            "a_inf = {}, delta = {}, b_res = {}",
            params[0], params[1], params[2]
        ),
    })
}

/// Convenience accessor: the a_eff values of the non-gap samples.
pub fn finite_values(curve: &EffCurve) -> Array1<f64> {
    Array1::from_iter(curve.samples.iter().filter_map(|s| s.a_eff))
}
