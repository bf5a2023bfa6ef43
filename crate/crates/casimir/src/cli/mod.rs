//! Command implementations behind the `casimir` binary.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 validation,
//! 3 convergence, 4 I/O. Every output embeds the resolved config hash,
//! the seed, and the library version; re-running with identical inputs
//! produces byte-identical files.

use crate::analysis::{
    gradient_pipeline, interpolate_drift, relative_reduction, screen_sweeps,
    weighted_running_mean, A0FitModel, AnalysisError, AveragedCurve,
};
use crate::dielectric::{
    fit_model, DielectricError, DrudeLorentzModel, FitOptions, KkContinuation, LowTail,
    TabulatedSpectrum,
};
use crate::instrument::{simulate_run, CantileverParams, InstrumentError, NoiseModel, RunPlan};
use crate::lifshitz::{
    gradient_pfa, reduction_curve, DielectricSource, LifshitzConfig, LifshitzError,
    MaterialAssignment, DEFAULT_WINDOW,
};
use crate::math::fnv1a;
use crate::records::RecordError;
use crate::surfaces::{
    mapio, patch_gradient, roughness_eta, HeightMap, MapRole, MapUnit, PatchOptions,
    PotentialMap, RoughnessOptions, SurfaceError,
};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: msg.into(),
        }
    }
    fn io(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: msg.into(),
        }
    }
}

impl From<DielectricError> for CliError {
    fn from(e: DielectricError) -> Self {
        let code = match &e {
            DielectricError::Io(_) => EXIT_IO,
            DielectricError::FitDidNotConverge { .. } => EXIT_CONVERGENCE,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<LifshitzError> for CliError {
    fn from(e: LifshitzError) -> Self {
        let code = match &e {
            LifshitzError::ConvergenceFailure { .. } => EXIT_CONVERGENCE,
            LifshitzError::Dielectric(DielectricError::Io(_)) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        let code = match &e {
            SurfaceError::Io(_) => EXIT_IO,
            SurfaceError::SamplingExhausted { .. } => EXIT_CONVERGENCE,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        let code = match &e {
            RecordError::Version { .. } => EXIT_VALIDATION,
            _ => EXIT_IO,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: e.to_string(),
        }
    }
}

impl From<InstrumentError> for CliError {
    fn from(e: InstrumentError) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

/// Optional config file mirroring the library parameter sets.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub lifshitz: Option<LifshitzConfig>,
    pub roughness: Option<RoughnessOptions>,
    pub patch: Option<PatchOptions>,
    pub run_plan: Option<RunPlan>,
    pub noise: Option<NoiseModel>,
    pub fit: Option<FitOptions>,
    pub cantilever: Option<CantileverParams>,
    pub seed: Option<u64>,
    pub window: Option<(f64, f64)>,
}

#[derive(Parser, Debug)]
#[command(
    name = "casimir",
    version,
    about = "Casimir force gradients from dielectric spectra: Lifshitz/PFA curves, surface corrections, sweep simulation and analysis"
)]
struct Cli {
    /// JSON config overriding library defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Averaging window, e.g. `80nm,120nm`.
    #[arg(long, global = true)]
    window: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a Drude-Lorentz model to a spectrum CSV.
    FitDielectric {
        /// Spectrum CSV: omega_rad_per_s, eps_real, eps_imag, provenance.
        spectrum: PathBuf,
        #[arg(long)]
        n_oscillators: usize,
        /// Initial model JSON (optional).
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Continue a spectrum to the imaginary axis.
    Kk {
        spectrum: PathBuf,
        /// Model JSON supplying the Drude low tail (optional).
        #[arg(long)]
        tail_model: Option<PathBuf>,
        #[arg(long, default_value = "1e13")]
        xi_min: f64,
        #[arg(long, default_value = "1e17")]
        xi_max: f64,
        #[arg(long, default_value_t = 120)]
        n: usize,
    },
    /// Gradient curve for one material, optionally a second plus the
    /// relative reduction.
    Gradient {
        /// `gold`, `psi`, or a model JSON path.
        #[arg(long)]
        model_a: String,
        #[arg(long)]
        model_b: Option<String>,
        #[arg(long, default_value = "70nm")]
        a_min: String,
        #[arg(long, default_value = "500nm")]
        a_max: String,
        #[arg(long, default_value_t = 25)]
        n: usize,
    },
    /// Roughness and patch corrections from map files.
    Corrections {
        #[arg(long)]
        sphere_height: PathBuf,
        #[arg(long)]
        plate_height: PathBuf,
        #[arg(long)]
        sphere_pot: PathBuf,
        #[arg(long)]
        plate_pot: PathBuf,
        /// Material supplying the smooth gradient law.
        #[arg(long, default_value = "gold")]
        model: String,
        #[arg(long, default_value_t = 100)]
        n_mc: usize,
        #[arg(long, default_value = "60nm")]
        a_min: String,
        #[arg(long, default_value = "200nm")]
        a_max: String,
        #[arg(long, default_value_t = 13)]
        n: usize,
    },
    /// Simulate sweep records with a known gradient law.
    Simulate {
        /// Material behind the true gradient law.
        #[arg(long, default_value = "gold")]
        model: String,
        /// Uniform relative reduction planted on the law (e.g. -0.04).
        #[arg(long, default_value_t = 0.0)]
        reduction: f64,
        #[arg(long, default_value_t = 35)]
        n_sweeps: usize,
        /// Output file name (records as JSON lines).
        #[arg(long, default_value = "sweeps.jsonl")]
        records_out: String,
    },
    /// Analyze sweep records against reference records.
    Analyze {
        /// Sample records (JSON lines). Omit for a reference-only
        /// self-check.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        reference: PathBuf,
        /// Running-mean width in points.
        #[arg(long, default_value_t = 35)]
        mean_width: usize,
    },
    /// Summarize a reduction report JSON as a table.
    Report { report: PathBuf },
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    run_from(std::env::args().collect::<Vec<_>>())
}

/// Testable entry point.
pub fn run_from<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through this path with status 0
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

struct Ctx {
    config: JobConfig,
    config_hash: u64,
    seed: u64,
    out: PathBuf,
    window: (f64, f64),
}

impl Ctx {
    fn stamp(&self) -> String {
        format!(
            "version={} config_hash={:016x} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )
    }

    fn write_text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(body.as_bytes())?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Stamped<'a, T> {
            version: &'a str,
            config_hash: String,
            seed: u64,
            #[serde(flatten)]
            value: &'a T,
        }
        let body = serde_json::to_string_pretty(&Stamped {
            version: env!("CARGO_PKG_VERSION"),
            config_hash: format!("{:016x}", self.config_hash),
            seed: self.seed,
            value,
        })
        .map_err(|e| CliError::io(e.to_string()))?;
        self.write_text(name, &(body + "\n"))
    }
}

fn parse_length(s: &str) -> Result<f64, CliError> {
    let t = s.trim();
    let (num, mult) = if let Some(v) = t.strip_suffix("nm") {
        (v, 1e-9)
    } else if let Some(v) = t.strip_suffix("um").or_else(|| t.strip_suffix("µm")) {
        (v, 1e-6)
    } else if let Some(v) = t.strip_suffix('m') {
        (v, 1.0)
    } else {
        (t, 1.0)
    };
    num.trim()
        .parse::<f64>()
        .map(|v| v * mult)
        .map_err(|_| CliError::validation(format!("cannot parse length {s:?}")))
}

fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::validation(
            "window must be two comma-separated lengths, e.g. 80nm,120nm",
        ));
    }
    let lo = parse_length(parts[0])?;
    let hi = parse_length(parts[1])?;
    if !(lo < hi) {
        return Err(CliError::validation("window bounds must be increasing"));
    }
    Ok((lo, hi))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n.max(2) - 1) as f64))
        .collect()
}

fn load_model(path: &Path) -> Result<DrudeLorentzModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let model: DrudeLorentzModel = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    DrudeLorentzModel::new(model.omega_p, model.tau_d, model.oscillators.clone())
        .map_err(CliError::from)
}

/// Resolve a material argument: bundled name or model JSON path. All
/// gradients run on the Kramers-Kronig continuation and are validated
/// `eps(i xi) > 1` over the Matsubara range in use.
fn resolve_source(name: &str) -> Result<(String, DielectricSource), CliError> {
    if let Some(mat) = crate::dielectric::materials::by_name(name) {
        return Ok((mat.name.to_string(), DielectricSource::bundled(mat)));
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(CliError::validation(format!(
            "unknown material {name:?}: not a bundled name (gold, psi) and no such file"
        )));
    }
    let model = load_model(path)?;
    Ok((
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into()),
        DielectricSource::model_kk(model),
    ))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config: JobConfig = match &cli.config {
        None => JobConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        }
    };
    let seed = cli.seed.or(config.seed).unwrap_or(1);
    let window = match &cli.window {
        Some(w) => parse_window(w)?,
        None => config.window.unwrap_or(DEFAULT_WINDOW),
    };
    let mut hash_input = serde_json::to_vec(&config).map_err(|e| CliError::io(e.to_string()))?;
    hash_input.extend_from_slice(&seed.to_le_bytes());
    let ctx = Ctx {
        config_hash: fnv1a(&hash_input),
        config,
        seed,
        out: cli.out.clone(),
        window,
    };
    match cli.command {
        Command::FitDielectric {
            spectrum,
            n_oscillators,
            init,
        } => cmd_fit_dielectric(&ctx, &spectrum, n_oscillators, init.as_deref()),
        Command::Kk {
            spectrum,
            tail_model,
            xi_min,
            xi_max,
            n,
        } => cmd_kk(&ctx, &spectrum, tail_model.as_deref(), xi_min, xi_max, n),
        Command::Gradient {
            model_a,
            model_b,
            a_min,
            a_max,
            n,
        } => cmd_gradient(&ctx, &model_a, model_b.as_deref(), &a_min, &a_max, n),
        Command::Corrections {
            sphere_height,
            plate_height,
            sphere_pot,
            plate_pot,
            model,
            n_mc,
            a_min,
            a_max,
            n,
        } => cmd_corrections(
            &ctx,
            &sphere_height,
            &plate_height,
            &sphere_pot,
            &plate_pot,
            &model,
            n_mc,
            &a_min,
            &a_max,
            n,
        ),
        Command::Simulate {
            model,
            reduction,
            n_sweeps,
            records_out,
        } => cmd_simulate(&ctx, &model, reduction, n_sweeps, &records_out),
        Command::Analyze {
            records,
            reference,
            mean_width,
        } => cmd_analyze(&ctx, records.as_deref(), &reference, mean_width),
        Command::Report { report } => cmd_report(&report),
    }
}

fn cmd_fit_dielectric(
    ctx: &Ctx,
    spectrum: &Path,
    n_oscillators: usize,
    init: Option<&Path>,
) -> Result<(), CliError> {
    let spec = TabulatedSpectrum::read_csv_path(spectrum)?;
    let initial = init.map(load_model).transpose()?;
    let mut opts = ctx.config.fit.clone().unwrap_or_default();
    opts.seed = ctx.seed;
    let (model, report) = fit_model(&spec, n_oscillators, initial, &opts)?;
    ctx.write_json("model.json", &model)?;
    ctx.write_json("fit_report.json", &report)?;
    println!(
        "fit: residual {:.3e} after {} iterations ({})",
        report.residual_norm,
        report.iterations,
        if report.converged {
            "converged"
        } else {
            "NOT converged"
        }
    );
    if !report.converged {
        return Err(CliError {
            code: EXIT_CONVERGENCE,
            message: "fit did not converge; best-effort model written".into(),
        });
    }
    Ok(())
}

fn cmd_kk(
    ctx: &Ctx,
    spectrum: &Path,
    tail_model: Option<&Path>,
    xi_min: f64,
    xi_max: f64,
    n: usize,
) -> Result<(), CliError> {
    let spec = TabulatedSpectrum::read_csv_path(spectrum)?;
    let low = match tail_model {
        Some(p) => {
            let m = load_model(p)?;
            LowTail::Drude {
                omega_p: m.omega_p,
                tau: m.tau_d,
            }
        }
        None => LowTail::Matched,
    };
    let cont = KkContinuation::of_spectrum(&spec, low)?;
    let mut body = format!("# {}\nxi_rad_per_s,eps_i_xi\n", ctx.stamp());
    for xi in log_grid(xi_min, xi_max, n) {
        let eps = cont.eval(xi)?;
        body.push_str(&format!("{xi:.9e},{eps:.9e}\n"));
    }
    let path = ctx.write_text("kk.csv", &body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn gradient_csv(
    name: &str,
    ctx: &Ctx,
    a: &[f64],
    mats: &MaterialAssignment,
    cfg: &LifshitzConfig,
) -> Result<Vec<f64>, CliError> {
    let mut vals = Vec::with_capacity(a.len());
    let mut body = format!("# {}\na_m,dFda_N_per_m,rel_err\n", ctx.stamp());
    for &ai in a {
        let g = gradient_pfa(ai, mats, cfg)?;
        body.push_str(&format!("{ai:.9e},{:.9e},{:.3e}\n", g.value, g.rel_err));
        vals.push(g.value);
    }
    ctx.write_text(name, &body)?;
    Ok(vals)
}

fn cmd_gradient(
    ctx: &Ctx,
    model_a: &str,
    model_b: Option<&str>,
    a_min: &str,
    a_max: &str,
    n: usize,
) -> Result<(), CliError> {
    let lo = parse_length(a_min)?;
    let hi = parse_length(a_max)?;
    if !(1e-8..=1e-5).contains(&lo) || !(1e-8..=1e-5).contains(&hi) || lo >= hi {
        return Err(CliError::validation(format!(
            "separation range {lo:.3e}..{hi:.3e} m outside the validated 10 nm .. 10 um"
        )));
    }
    let cfg = ctx.config.lifshitz.clone().unwrap_or_default();
    cfg.validate()?;
    let (name_a, src_a) = resolve_source(model_a)?;
    let xi_hi = crate::constants::matsubara_spacing(cfg.temperature) * 5000.0;
    let mats_a = MaterialAssignment::symmetric(src_a);
    mats_a.validate(1e12, xi_hi)?;
    let grid = log_grid(lo, hi, n);
    gradient_csv(&format!("gradient_{name_a}.csv"), ctx, &grid, &mats_a, &cfg)?;
    println!("gradient curve for {name_a}: {} points", grid.len());

    if let Some(mb) = model_b {
        let (name_b, src_b) = resolve_source(mb)?;
        let mats_b = MaterialAssignment::symmetric(src_b);
        mats_b.validate(1e12, xi_hi)?;
        gradient_csv(&format!("gradient_{name_b}.csv"), ctx, &grid, &mats_b, &cfg)?;
        let red = reduction_curve(&grid, &mats_a, &mats_b, &cfg, ctx.window)?;
        let mut body = format!("# {}\na_m,delta\n", ctx.stamp());
        for (a, d) in red.a.iter().zip(&red.delta) {
            body.push_str(&format!("{a:.9e},{d:.9e}\n"));
        }
        ctx.write_text("reduction.csv", &body)?;
        println!(
            "reduction {name_b} vs {name_a}: window mean {:.3}% over {:.0}-{:.0} nm",
            red.window_mean * 100.0,
            ctx.window.0 * 1e9,
            ctx.window.1 * 1e9
        );
    }
    Ok(())
}

fn correction_csv(
    c: &crate::surfaces::CorrectionResult,
    ctx: &Ctx,
    name: &str,
) -> Result<(), CliError> {
    let mut body = format!(
        "# {}\n# n_accepted={} n_attempted={}\na_m,eta,band_lo,band_hi\n",
        ctx.stamp(),
        c.n_accepted,
        c.n_attempted
    );
    for i in 0..c.a_grid.len() {
        body.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e}\n",
            c.a_grid[i], c.eta[i], c.band_lo[i], c.band_hi[i]
        ));
    }
    ctx.write_text(name, &body)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_corrections(
    ctx: &Ctx,
    sphere_height: &Path,
    plate_height: &Path,
    sphere_pot: &Path,
    plate_pot: &Path,
    model: &str,
    n_mc: usize,
    a_min: &str,
    a_max: &str,
    n: usize,
) -> Result<(), CliError> {
    let lo = parse_length(a_min)?;
    let hi = parse_length(a_max)?;
    let grid = log_grid(lo, hi, n);

    let sphere_h = HeightMap::new(mapio::read_map_path(sphere_height)?, MapRole::Sphere);
    let plate_h = HeightMap::new(mapio::read_map_path(plate_height)?, MapRole::Plate);
    let sphere_v = PotentialMap::new(mapio::read_map_path(sphere_pot)?);
    let plate_v = PotentialMap::new(mapio::read_map_path(plate_pot)?);
    for (name, map, want) in [
        ("sphere height", &sphere_h.grid, MapUnit::Meters),
        ("plate height", &plate_h.grid, MapUnit::Meters),
        ("sphere potential", &sphere_v.grid, MapUnit::Volts),
        ("plate potential", &plate_v.grid, MapUnit::Volts),
    ] {
        if map.unit != want {
            return Err(CliError::validation(format!(
                "{name} map has the wrong unit"
            )));
        }
    }

    let cfg = ctx.config.lifshitz.clone().unwrap_or_default();
    let (_, src) = resolve_source(model)?;
    let mats = MaterialAssignment::symmetric(src);
    let gradient_law = |a: f64| {
        gradient_pfa(a, &mats, &cfg)
            .map(|g| g.value)
            .unwrap_or(f64::NAN)
    };

    let mut rough_opts = ctx.config.roughness.clone().unwrap_or_default();
    rough_opts.seed = ctx.seed;
    let rough = roughness_eta(
        &grid,
        &sphere_h,
        &plate_h,
        cfg.sphere_radius,
        &gradient_law,
        n_mc,
        &rough_opts,
    )?;
    correction_csv(&rough, ctx, "eta_rough.csv")?;

    let flat: Vec<f64> = grid.iter().map(|&a| gradient_law(a)).collect();
    let mut patch_opts = ctx.config.patch.clone().unwrap_or_default();
    patch_opts.seed = ctx.seed;
    let patch = patch_gradient(
        &grid,
        &sphere_v,
        &plate_v,
        cfg.sphere_radius,
        &flat,
        n_mc,
        &patch_opts,
    )?;
    correction_csv(&patch.gradient, ctx, "patch_gradient.csv")?;
    correction_csv(&patch.eta, ctx, "eta_patch.csv")?;
    println!(
        "corrections: roughness {}/{} accepted, patch {}/{} accepted",
        rough.n_accepted, rough.n_attempted, patch.gradient.n_accepted, patch.gradient.n_attempted
    );
    Ok(())
}

fn cmd_simulate(
    ctx: &Ctx,
    model: &str,
    reduction: f64,
    n_sweeps: usize,
    records_out: &str,
) -> Result<(), CliError> {
    let cfg = ctx.config.lifshitz.clone().unwrap_or_default();
    let (_, src) = resolve_source(model)?;
    let mats = MaterialAssignment::symmetric(src);
    // tabulate the law once; per-point evaluation during the sweep loop
    // would redo the full Matsubara sum thousands of times
    let table = {
        let grid = log_grid(50e-9, 700e-9, 60);
        let ln_a: Vec<f64> = grid.iter().map(|a| a.ln()).collect();
        let mut ln_g = Vec::with_capacity(grid.len());
        for &a in &grid {
            ln_g.push((gradient_pfa(a, &mats, &cfg)?.value * (1.0 + reduction)).ln());
        }
        crate::math::spline::CubicSpline::natural(ln_a, ln_g)
    };
    let law = move |a: f64| table.eval(a.ln()).exp();

    let params = ctx
        .config
        .cantilever
        .clone()
        .unwrap_or_else(CantileverParams::bundled_defaults);
    let plan = ctx.config.run_plan.clone().unwrap_or_else(|| RunPlan {
        n_sweeps,
        ..RunPlan::default()
    });
    let noise = ctx
        .config
        .noise
        .clone()
        .unwrap_or_else(NoiseModel::realistic);
    let sweeps = simulate_run(&law, &params, &plan, &noise, ctx.seed)?;
    std::fs::create_dir_all(&ctx.out)?;
    let path = ctx.out.join(records_out);
    let mut buf = Vec::new();
    crate::records::write_sweeps(&mut buf, &sweeps)?;
    std::fs::write(&path, buf)?;
    ctx.write_json(
        &format!("{records_out}.config.json"),
        &serde_json::json!({
            "n_sweeps": sweeps.len(),
            "reduction": reduction,
            "model": model,
        }),
    )?;
    println!("wrote {} sweeps to {}", sweeps.len(), path.display());
    Ok(())
}

fn analyze_records(
    records: &[crate::records::SweepRecord],
    params: &CantileverParams,
    radius: f64,
    mean_width: usize,
) -> Result<(AveragedCurve, Vec<String>), CliError> {
    let runset = screen_sweeps(records.to_vec(), &A0FitModel::default())?;
    let rejection_log: Vec<String> = runset
        .flags
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.is_empty())
        .map(|(i, f)| {
            format!(
                "sweep {i}: {}",
                f.iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join("+")
            )
        })
        .collect();
    if runset.accepted_indices().is_empty() {
        return Err(CliError::validation(
            "no sweeps survived screening; nothing to analyze",
        ));
    }
    let corrected = interpolate_drift(&runset)?;
    let points = gradient_pipeline(&corrected, params, radius, 0.0)?;
    let curve = weighted_running_mean(&points, mean_width)?;
    Ok((curve, rejection_log))
}

fn cmd_analyze(
    ctx: &Ctx,
    records: Option<&Path>,
    reference: &Path,
    mean_width: usize,
) -> Result<(), CliError> {
    let params = ctx
        .config
        .cantilever
        .clone()
        .unwrap_or_else(CantileverParams::bundled_defaults);
    let radius = ctx
        .config
        .lifshitz
        .as_ref()
        .map(|c| c.sphere_radius)
        .unwrap_or(77.9e-6);

    let ref_records = crate::records::read_sweeps_path(reference)?;
    let (ref_curve, ref_log) = analyze_records(&ref_records, &params, radius, mean_width)?;
    write_curve_csv(ctx, "reference_curve.csv", &ref_curve)?;

    let (sample_curve, sample_log, self_check) = match records {
        Some(p) => {
            let recs = crate::records::read_sweeps_path(p)?;
            let (c, log) = analyze_records(&recs, &params, radius, mean_width)?;
            (c, log, false)
        }
        None => (ref_curve.clone(), Vec::new(), true),
    };
    write_curve_csv(ctx, "sample_curve.csv", &sample_curve)?;

    let report = relative_reduction(&sample_curve, &ref_curve, ctx.window)?;
    #[derive(Serialize)]
    struct FullReport<'a> {
        self_check: bool,
        window_mean: f64,
        window_sigma: f64,
        window: (f64, f64),
        a: &'a [f64],
        delta: &'a [f64],
        sigma: &'a [f64],
        histogram: &'a crate::math::stats::Histogram,
        rejection_log_sample: &'a [String],
        rejection_log_reference: &'a [String],
    }
    ctx.write_json(
        "reduction_report.json",
        &FullReport {
            self_check,
            window_mean: report.window_mean,
            window_sigma: report.window_sigma,
            window: report.window,
            a: &report.a,
            delta: &report.delta,
            sigma: &report.sigma,
            histogram: &report.histogram,
            rejection_log_sample: &sample_log,
            rejection_log_reference: &ref_log,
        },
    )?;
    println!(
        "reduction window mean {:.3}% +/- {:.3}% over {:.0}-{:.0} nm{}",
        report.window_mean * 100.0,
        report.window_sigma * 100.0,
        ctx.window.0 * 1e9,
        ctx.window.1 * 1e9,
        if self_check { " (self-check)" } else { "" }
    );
    Ok(())
}

fn write_curve_csv(ctx: &Ctx, name: &str, curve: &AveragedCurve) -> Result<(), CliError> {
    let mut body = format!("# {}\na_m,value,sigma\n", ctx.stamp());
    for i in 0..curve.a.len() {
        body.push_str(&format!(
            "{:.9e},{:.9e},{:.9e}\n",
            curve.a[i], curve.value[i], curve.sigma[i]
        ));
    }
    ctx.write_text(name, &body)?;
    Ok(())
}

fn cmd_report(report: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(report)
        .map_err(|e| CliError::io(format!("{}: {e}", report.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", report.display())))?;
    let mean = v["window_mean"].as_f64().unwrap_or(f64::NAN);
    let sigma = v["window_sigma"].as_f64().unwrap_or(f64::NAN);
    let window = (
        v["window"][0].as_f64().unwrap_or(f64::NAN),
        v["window"][1].as_f64().unwrap_or(f64::NAN),
    );
    println!("reduction report");
    println!(
        "  window      : {:.0} - {:.0} nm",
        window.0 * 1e9,
        window.1 * 1e9
    );
    println!("  mean        : {:.3} %", mean * 100.0);
    println!("  sigma       : {:.3} %", sigma * 100.0);
    if let Some(counts) = v["histogram"]["counts"].as_array() {
        println!("  histogram   : {} bins", counts.len());
    }
    for key in ["rejection_log_sample", "rejection_log_reference"] {
        if let Some(log) = v[key].as_array() {
            if !log.is_empty() {
                println!("  {key}:");
                for line in log {
                    println!("    {}", line.as_str().unwrap_or("?"));
                }
            }
        }
    }
    Ok(())
}
