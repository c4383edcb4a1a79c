//! Command-line interface: argument parsing, dispatch, exit-code mapping.
//!
//! Exit codes: 0 on success, 1 for engine/domain failures (near-singular
//! solves, missing resonances, diverged fits, assumption violations), 2 for
//! usage and config problems (unknown flags, unreadable or invalid config).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{
    config_hash, parse_config, validate_assumptions, AssumptionReport, ModelConfig,
};
use crate::coupled::CoupledContext;
use crate::error::{FeshError, Result};
use crate::export;
use crate::onebody::{bound_states, scattering_solution, zero_energy};
use crate::scan::{fit_feshbach, sweep_with, FeshbachFit, ScanOutput};
use crate::separable::SeparableContext;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Parser, Debug)]
#[command(
    name = "feshscan",
    version,
    about = "Two-channel Feshbach-resonance scan engine"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Model definition (TOML); required by every subcommand except `plot`.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for generated files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Override scan.lambda_min from the config.
    #[arg(long, global = true, value_name = "LAMBDA")]
    pub lambda_min: Option<f64>,

    /// Override scan.lambda_max from the config.
    #[arg(long, global = true, value_name = "LAMBDA")]
    pub lambda_max: Option<f64>,

    /// Override scan.points from the config.
    #[arg(long, global = true, value_name = "N")]
    pub points: Option<usize>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Extra output format for commands that write files.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Reserved for future stochastic features; accepted but unused.
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check model assumptions and print the report.
    Validate,
    /// List the closed-channel bound states E_j.
    BoundStates,
    /// Open-channel scattering: a_V and phase-shift samples.
    OneBody,
    /// Rank-one engine: resonance roots and residues.
    Separable,
    /// Sweep a_eff(lambda); writes curve.csv and reports.json to --out.
    Scan,
    /// General-coupling resonance reports.
    Resonances,
    /// Fit a(B) = a_inf + Delta/(B - B_res) around one annotated pole.
    Fit {
        /// Index of the annotated pole (by increasing lambda).
        #[arg(long, default_value_t = 0)]
        pole: usize,
    },
    /// Render an SVG from a previously written curve CSV.
    Plot {
        /// Existing curve CSV (default: <out>/curve.csv).
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
}

/// Parse `std::env::args`, dispatch, map errors to exit codes.
pub fn run() -> ExitCode {
    // Rayon owns all parallelism; a threaded BLAS underneath it would
    // oversubscribe the cores and make reduction orders run-dependent.
    // Still single-threaded here, so setting the variable is race-free.
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout (exit 0) and usage errors
            // to stderr (exit 2).
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(FeshError::ConfigInvalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| FeshError::Domain(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Validate => cmd_validate(cli),
        Command::BoundStates => cmd_bound_states(cli),
        Command::OneBody => cmd_one_body(cli),
        Command::Separable => cmd_separable(cli),
        Command::Scan => cmd_scan(cli),
        Command::Resonances => cmd_resonances(cli),
        Command::Fit { pole } => cmd_fit(cli, *pole),
        Command::Plot { input } => cmd_plot(cli, input.as_deref()),
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig> {
    let path = cli.config.as_ref().ok_or_else(|| {
        FeshError::ConfigInvalid("--config <PATH> is required for this command".into())
    })?;
    let text = fs::read_to_string(path).map_err(|e| {
        FeshError::ConfigInvalid(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(v) = cli.lambda_min {
        cfg.scan.lambda_min = v;
    }
    if let Some(v) = cli.lambda_max {
        cfg.scan.lambda_max = v;
    }
    if let Some(v) = cli.points {
        cfg.scan.points = v;
    }
    if !(cfg.scan.lambda_min > 0.0 && cfg.scan.lambda_max > cfg.scan.lambda_min) {
        return Err(FeshError::ConfigInvalid(format!(
            "scan range must satisfy 0 < lambda_min < lambda_max, got [{}, {}]",
            cfg.scan.lambda_min, cfg.scan.lambda_max
        )));
    }
    if cfg.scan.points < 2 {
        return Err(FeshError::ConfigInvalid(format!(
            "scan needs at least 2 points, got {}",
            cfg.scan.points
        )));
    }
    Ok(cfg)
}

fn ensure_out_dir(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out).map_err(|e| FeshError::Io {
        path: cli.out.display().to_string(),
        source: e,
    })
}

fn report_text(cfg: &ModelConfig, report: &AssumptionReport) -> String {
    let mut s = String::new();
    s.push_str("feshscan assumption report\n");
    s.push_str(&format!("  config_hash             = {}\n", config_hash(cfg)));
    s.push_str(&format!(
        "  closed-channel states   = {}\n",
        report.n_bound_states_u
    ));
    for (j, e) in report.closed_channel_energies.iter().enumerate() {
        s.push_str(&format!("    E_{j} = {e:+.12e}\n"));
    }
    s.push_str(&format!(
        "  H_V nonnegative         = {} (min eigenvalue {:+.6e})\n",
        report.hv_nonneg, report.hv_min_eigenvalue
    ));
    match report.a_v {
        Some(a) => s.push_str(&format!(
            "  a_V                     = {a:+.12e} (finite = {})\n",
            report.a_v_finite
        )),
        None => s.push_str("  a_V                     = not finite\n"),
    }
    match (report.beta_positive, report.beta_v) {
        (Some(pos), Some(b)) => s.push_str(&format!(
            "  beta_V                  = {b:+.12e} (positive = {pos})\n"
        )),
        _ => s.push_str("  beta_V                  = n/a (local coupling)\n"),
    }
    s.push_str(&format!(
        "  potential tails ok      = {}\n",
        report.tails_ok
    ));
    s.push_str(&format!(
        "  coupling sigma_min      = {:.6e}\n",
        report.coupling_kernel_sigma_min
    ));
    if report.violations.is_empty() {
        s.push_str("  violations              = none\n");
    } else {
        for v in &report.violations {
            s.push_str(&format!("  violation: {v}\n"));
        }
    }
    s
}

fn cmd_validate(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let report = validate_assumptions(&cfg)?;
    print!("{}", report_text(&cfg, &report));
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(FeshError::Domain(format!(
            "{} assumption violation(s); see report above",
            report.violations.len()
        )))
    }
}

fn cmd_bound_states(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let grid = cfg.build_grid()?;
    let pot_u = cfg.sample(&cfg.potential_u, &grid)?;
    let u_fn =
        |r: f64| crate::config::eval_potential(&cfg.potential_u, r).expect("validated potential");
    let states = bound_states(
        &grid,
        &u_fn,
        &pot_u,
        cfg.grid.fd_points,
        cfg.tolerances.threshold_tol,
    )?;
    println!("# closed-channel bound states (config_hash = {})", config_hash(&cfg));
    println!("{:>3}  {:>22}  {:>5}", "j", "E_j", "nodes");
    for (j, st) in states.iter().enumerate() {
        println!("{j:>3}  {:>+22.15e}  {:>5}", st.energy, st.node_count);
    }
    if states.is_empty() {
        println!("(no bound states)");
    }
    Ok(())
}

fn cmd_one_body(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let grid = cfg.build_grid()?;
    let pot_v = cfg.sample(&cfg.potential_v, &grid)?;
    let z = zero_energy(&grid, &pot_v, cfg.tolerances.cond_max)?;
    println!("# open-channel scattering (config_hash = {})", config_hash(&cfg));
    println!("a_V = {:+.15e}   (cond {:.3e})", z.scattering_length, z.cond);
    println!(
        "{:>12}  {:>22}  {:>22}  {:>12}",
        "k", "delta(k)", "Re A(k)", "|S|-1"
    );
    let n = 12;
    for i in 0..n {
        let k = 0.05 * (2.0 / 0.05_f64).powf(i as f64 / (n - 1) as f64);
        let sc = scattering_solution(&grid, &pot_v, k, cfg.tolerances.cond_max)?;
        println!(
            "{k:>12.6}  {:>22.15e}  {:>22.15e}  {:>12.3e}",
            sc.phase_shift,
            sc.amplitude.re,
            sc.s_matrix.norm() - 1.0
        );
    }
    Ok(())
}

fn cmd_separable(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let ctx = SeparableContext::new(&cfg)?;
    let mut roots = ctx.resonances()?;
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let poles = ctx.poles();
    println!(
        "# separable-engine resonances (config_hash = {})",
        config_hash(&cfg)
    );
    println!(
        "{:>3}  {:>22}  {:>22}  {:>12}  {:>7}",
        "j", "lambda_j", "c_j", "|1-bF|", "widened"
    );
    let mut items = Vec::new();
    for (j, root) in roots.iter().enumerate() {
        let c = ctx.residue(root.lambda)?;
        let (f, _) = ctx.f_lambda(root.lambda)?;
        let resid = (1.0 - ctx.beta_v * f).abs();
        println!(
            "{j:>3}  {:>+22.15e}  {:>+22.15e}  {:>12.3e}  {:>7}",
            root.lambda, c, resid, root.widened
        );
        let state = poles
            .iter()
            .enumerate()
            .filter(|(_, &p)| p < root.lambda)
            .map(|(i, _)| i)
            .next_back();
        items.push(json!({
            "lambda_j": root.lambda,
            "c_j": c,
            "p_j": serde_json::Value::Null,
            "sigma_min": resid,
            "kernel_dim": 1,
            "state": state,
            "interlaced": serde_json::Value::Null,
            "E_res": serde_json::Value::Null,
            "Gamma": serde_json::Value::Null,
        }));
    }
    if cli.format == Some(Format::Json) {
        ensure_out_dir(cli)?;
        let path = cli.out.join("separable_reports.json");
        let doc = json!({
            "schema": "feshscan.report.v1",
            "engine": "separable",
            "config_hash": config_hash(&cfg),
            "reports": items,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report document serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| FeshError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_sweep(cfg: &ModelConfig) -> Result<ScanOutput> {
    let ctx = CoupledContext::new(cfg)?;
    sweep_with(cfg, &ctx)
}

fn cmd_scan(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = run_sweep(&cfg)?;
    ensure_out_dir(cli)?;
    let csv_path = cli.out.join("curve.csv");
    let json_path = cli.out.join("reports.json");
    export::write_csv(&csv_path, &out.curve)?;
    export::write_reports_json(
        &json_path,
        &out.reports,
        &out.curve.config_hash,
        &out.curve.provenance,
    )?;
    let mut written = vec![csv_path.display().to_string(), json_path.display().to_string()];
    if cli.format == Some(Format::Svg) {
        let svg_path = cli.out.join("curve.svg");
        export::write_svg(&svg_path, &out.curve)?;
        written.push(svg_path.display().to_string());
    }
    let gaps = out
        .curve
        .samples
        .iter()
        .filter(|s| s.a_eff.is_none())
        .count();
    println!(
        "scan: {} samples ({} gaps), {} annotated pole(s)",
        out.curve.samples.len(),
        gaps,
        out.curve.poles.len()
    );
    for p in &out.curve.poles {
        println!("  pole lambda_j = {:+.12e}  c_j = {:+.12e}", p.lambda_j, p.c_j);
    }
    for w in written {
        println!("wrote {w}");
    }
    Ok(())
}

fn cmd_resonances(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let ctx = CoupledContext::new(&cfg)?;
    let mut reports = ctx.find_resonances(cfg.scan.lambda_min, cfg.scan.lambda_max)?;
    reports.sort_by(|a, b| a.lambda_j.total_cmp(&b.lambda_j));
    println!(
        "# general-engine resonances (config_hash = {})",
        config_hash(&cfg)
    );
    if reports.is_empty() {
        println!(
            "(no resonances in [{}, {}])",
            cfg.scan.lambda_min, cfg.scan.lambda_max
        );
    }
    println!(
        "{:>3}  {:>22}  {:>22}  {:>12}  {:>22}  {:>12}",
        "j", "lambda_j", "c_j", "sigma_min", "E_res", "Gamma"
    );
    for (j, r) in reports.iter().enumerate() {
        let (e_res, gamma) = match r.breit_wigner {
            Some(bw) => (format!("{:+.15e}", bw.e_res), format!("{:.6e}", bw.gamma)),
            None => ("-".into(), "-".into()),
        };
        println!(
            "{j:>3}  {:>+22.15e}  {:>+22.15e}  {:>12.3e}  {e_res:>22}  {gamma:>12}",
            r.lambda_j, r.c_j, r.sigma_min
        );
    }
    if cli.format == Some(Format::Json) {
        ensure_out_dir(cli)?;
        let path = cli.out.join("reports.json");
        export::write_reports_json(&path, &reports, &config_hash(&cfg), "resonances")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn fit_json(fit: &FeshbachFit, hash: &str) -> String {
    let doc = json!({
        "schema": "feshscan.fit.v1",
        "config_hash": hash,
        "pole_lambda": fit.pole_lambda,
        "a_inf": fit.a_inf,
        "delta": fit.delta,
        "b_res": fit.b_res,
        "rms": fit.rms,
        "iterations": fit.iterations,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("fit document serializes");
    s.push('\n');
    s
}

fn cmd_fit(cli: &Cli, pole: usize) -> Result<()> {
    let cfg = load_config(cli)?;
    let map = cfg.magnetic_map.ok_or_else(|| {
        FeshError::ConfigInvalid("fit requires a [magnetic_map] section in the config".into())
    })?;
    let out = run_sweep(&cfg)?;
    let fit = fit_feshbach(&out.curve, pole, &map)?;
    println!("# Feshbach fit a(B) = a_inf + Delta/(B - B_res)");
    println!("pole   lambda_j = {:+.15e}", fit.pole_lambda);
    println!("a_inf  = {:+.15e}", fit.a_inf);
    println!("Delta  = {:+.15e}", fit.delta);
    println!("B_res  = {:+.15e}", fit.b_res);
    println!("rms    = {:.6e}   ({} iterations)", fit.rms, fit.iterations);
    if cli.format == Some(Format::Json) {
        ensure_out_dir(cli)?;
        let path = cli.out.join("fit.json");
        fs::write(&path, fit_json(&fit, &out.curve.config_hash)).map_err(|e| FeshError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_plot(cli: &Cli, input: Option<&Path>) -> Result<()> {
    let default_input = cli.out.join("curve.csv");
    let input = input.unwrap_or(&default_input);
    let curve = export::read_csv(input)?;
    ensure_out_dir(cli)?;
    let path = cli.out.join("curve.svg");
    export::write_svg(&path, &curve)?;
    println!("wrote {}", path.display());
    Ok(())
}
