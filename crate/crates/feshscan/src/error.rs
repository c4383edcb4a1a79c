//! Crate-wide error type.
//!
//! Engine failures are diagnosable states of the model (near-singular
//! resolvents, pole proximity, divergent scattering length), not panics;
//! the CLI maps `Config*` variants to exit code 2 and everything else to 1.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FeshError>;

#[derive(Debug, Error)]
pub enum FeshError {
    /// Schema violation while reading the config document.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// A structurally valid config with an invalid value.
    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    /// Potential evaluation outside the tabulated range.
    #[error("potential evaluation: {0}")]
    PotentialEval(String),

    /// A linear system needed by the engine is numerically singular.
    /// `context` names the operator and the nearby eigenvalue when known.
    #[error("near-singular linear system: {context} (condition estimate {cond:.3e})")]
    NearSingular { context: String, cond: f64 },

    /// Evaluation requested inside a declared pole window.
    #[error("{what} evaluated too close to a pole: λ = {lambda:.12e}, nearest pole {nearest:.12e}")]
    PoleProximity {
        what: &'static str,
        lambda: f64,
        nearest: f64,
    },

    /// A bound state sits numerically on the threshold.
    #[error("near-threshold bound state: |E| = {energy:.3e} below tolerance")]
    NearThreshold { energy: f64 },

    /// Zero-energy resonance of the open channel: the scattering length has no finite value.
    #[error("a_V diverges")]
    ZeroEnergyResonance,

    /// Breit–Wigner parameters requested for a state that is not embedded in the continuum.
    #[error("resonance not embedded: E_b = {e_b:.6e} ≤ 0")]
    NotEmbedded { e_b: f64 },

    /// The kernel of (I − D) at a critical point is more than one-dimensional.
    #[error("accidental degeneracy: kernel dimension {dim} at λ = {lambda:.12e}")]
    AccidentalDegeneracy { lambda: f64, dim: usize },

    /// Not enough usable samples around a pole to fit the magnetic-field form.
    #[error("fit window too thin: {left} samples left, {right} right of the pole (need ≥ 8 each)")]
    FitWindow { left: usize, right: usize },

    /// Nonlinear fit failed to converge; the message carries the last iterate.
    #[error("fit did not converge after {iterations} iterations: {last}")]
    FitDiverged { iterations: usize, last: String },

    /// Domain/precondition violation detected at runtime.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("linear algebra backend: {0}")]
    Linalg(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<ndarray_linalg::error::LinalgError> for FeshError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        FeshError::Linalg(e.to_string())
    }
}

impl FeshError {
    /// Exit-code class for the CLI: config/usage problems are 2, engine failures 1.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            FeshError::ConfigParse(_) | FeshError::ConfigInvalid(_)
        )
    }
}
