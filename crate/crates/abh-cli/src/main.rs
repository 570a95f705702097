//! `abh`: tabulates the toolkit's quantities as CSV or JSON datasets.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! failure, 4 regime violation. Failures also print a one-line JSON record
//! on stderr.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use abh::characteristics::entanglement_boundary;
use abh::correlations::{
    closed_form_grid, corr_mode_sum_oracle, detect_peak, open_correction_er, ClosedFormVariant, CorrelationGrid,
    CorrelationMethod, ErReading,
};
use abh::decoherence::{
    diffusion_asymptotic, diffusion_exact, diffusion_oracle, diffusion_thermal, sweep_decoherence,
    v_coefficients, allowed_frequencies, DecoherenceOptions, SweepAxis, SweepBase,
};
use abh::environment::{CutoffShape, EnvironmentSpec};
use abh::langevin_oracle::{estimate_correlation, mc_peak_location, Background, EnsembleParams};
use abh::params::{derive_default, ConfigDoc, DerivedParams, PhysicalConfig};
use abh::profile::{hawking_temperatures_ring, LineProfile, RingProfile};
use abh::Error;

use output::{render, sha256_hex, write_atomic, Format, Manifest, Table};

/// Environment variable naming the default configuration file.
const CONFIG_ENV: &str = "ABH_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "abh", version, about = "Acoustic black hole open-system toolkit")]
struct Cli {
    /// Configuration file (`key = value` lines); defaults to $ABH_CONFIG,
    /// then to the built-in ring and line profiles.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decoherence-time band over the allowed frequencies, swept along one axis.
    TdecSweep(TdecArgs),
    /// Normal diffusion coefficient D(t) at one frequency.
    Diffusion(DiffusionArgs),
    /// V-coefficients of the ring for every allowed frequency.
    Vcoef(VcoefArgs),
    /// Momentum correlation of a probe x1 against a grid of x2.
    Correlation(CorrelationArgs),
    /// Entanglement-region boundaries x-(t), x+(t).
    Boundary(BoundaryArgs),
    /// Relative open-system correction e_r(t).
    Er(ErArgs),
    /// Monte-Carlo correlation from the stochastic lattice.
    Langevin(LangevinArgs),
    /// Hawking temperatures of the ring and the line profile.
    Hawking,
}

#[derive(Args, Debug)]
struct TdecArgs {
    /// gamma, v_min or temperature.
    #[arg(long, default_value = "gamma")]
    axis: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Evenly spaced instead of log-spaced values.
    #[arg(long)]
    linear: bool,
    /// γ held fixed on the v_min and temperature axes.
    #[arg(long, default_value_t = 3e-8)]
    gamma: f64,
    /// T₀ held fixed on the gamma and v_min axes.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
}

#[derive(Args, Debug)]
struct DiffusionArgs {
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    t_from: f64,
    #[arg(long)]
    t_to: f64,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// exact, oracle, asymptotic or thermal.
    #[arg(long, default_value = "exact")]
    method: String,
    /// β for the thermal method.
    #[arg(long, default_value = "inf", value_parser = parse_beta)]
    beta: f64,
    /// Effective coupling γ̃; otherwise taken from the configuration, else 1.
    #[arg(long)]
    coupling: Option<f64>,
}

#[derive(Args, Debug)]
struct VcoefArgs {
    /// Time of the profile; `inf` is the asymptotic ring.
    #[arg(long, default_value = "inf", value_parser = parse_time)]
    t: f64,
}

#[derive(Args, Debug)]
struct CorrelationArgs {
    #[arg(long, default_value_t = 100.0)]
    t: f64,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    x1: f64,
    /// Inverse temperature, or `inf` for the vacuum.
    #[arg(long, default_value = "inf", value_parser = parse_beta)]
    beta: f64,
    /// First x2; defaults to the right edge of the transition region.
    #[arg(long, allow_hyphen_values = true)]
    x2_from: Option<f64>,
    /// Last x2; defaults to x+(t).
    #[arg(long, allow_hyphen_values = true)]
    x2_to: Option<f64>,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// matched or verbatim.
    #[arg(long, default_value = "matched")]
    variant: String,
    /// closed-form or mode-sum.
    #[arg(long, default_value = "closed-form")]
    method: String,
}

#[derive(Args, Debug)]
struct BoundaryArgs {
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Args, Debug)]
struct ErArgs {
    #[arg(long, default_value_t = 0.01)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    t_from: f64,
    #[arg(long, default_value_t = 100.0)]
    t_to: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 1e-7)]
    lambda: f64,
    /// Bath temperature in units of the line profile's T_H.
    #[arg(long, default_value_t = 100.0)]
    t0_over_th: f64,
    /// symmetric or literal.
    #[arg(long, default_value = "symmetric")]
    reading: String,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    x1: f64,
    /// Partner point; defaults to the mirror of x1 about the horizon.
    #[arg(long, allow_hyphen_values = true)]
    x2: Option<f64>,
}

#[derive(Args, Debug)]
struct LangevinArgs {
    #[arg(long, default_value_t = 40.0)]
    t: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    x1: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    x2_from: f64,
    /// Last x2; defaults to x+(t).
    #[arg(long, allow_hyphen_values = true)]
    x2_to: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    realizations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Initial-state and bath temperature in units of T_H.
    #[arg(long, default_value_t = 0.0)]
    t0_over_th: f64,
    #[arg(long, default_value_t = 512)]
    sites: usize,
    #[arg(long, default_value_t = 0.0625)]
    h: f64,
    #[arg(long, default_value_t = 8)]
    batches: usize,
    /// Effective bath coupling γ̃ (0 closes the system).
    #[arg(long, default_value_t = 0.0)]
    coupling: f64,
}

fn parse_beta(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        v => match v.parse::<f64>() {
            Ok(b) if b > 0.0 && b.is_finite() => Ok(b),
            _ => Err(format!("expected a positive number or `inf`, got `{s}`")),
        },
    }
}

fn parse_time(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        v => match v.parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
            _ => Err(format!("expected a time ≥ 0 or `inf`, got `{s}`")),
        },
    }
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Parse { .. } => ("parse", 2),
            Error::Config { .. } => ("config", 2),
            Error::Domain(_) => ("domain", 2),
            Error::Quadrature { .. } => ("quadrature", 3),
            Error::Numeric(_) => ("numeric", 3),
            Error::Unsupported(_) => ("unsupported", 3),
            Error::Regime(_) => ("regime", 4),
            Error::RegionExit { .. } => ("region_exit", 4),
        };
        Failure { kind, code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { kind: "input", code: 2, message: message.into() }
}

/// Resolved configuration shared by the subcommands.
struct Setup {
    doc: ConfigDoc,
    ring: PhysicalConfig,
    line: LineProfile,
}

impl Setup {
    fn load(path: Option<&PathBuf>) -> Result<Self, Failure> {
        let path = path.cloned().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| input_error(format!("cannot read config {}: {e}", p.display())))?;
                ConfigDoc::parse(&text)?
            }
            None => ConfigDoc::default(),
        };
        // ring keys are all-or-nothing: n_ions switches the ring on
        let ring = if doc.contains("n_ions") { PhysicalConfig::from_doc(&doc)? } else { PhysicalConfig::default() };
        let line = LineProfile::from_doc(&doc)?;
        Ok(Setup { doc, ring, line })
    }

    fn derived(&self) -> DerivedParams {
        derive_default(&self.ring)
    }

    /// Bath of the ring configuration (Lorentzian, Λ = 1/τ unless set).
    fn ring_environment(&self) -> Result<EnvironmentSpec, Failure> {
        Ok(EnvironmentSpec::from_doc(&self.doc, &self.ring, &self.derived())?)
    }

    fn canonical_text(&self) -> String {
        let env = self.ring_environment().map(|e| e.to_doc_string()).unwrap_or_default();
        format!("{}{}{}", self.ring.to_doc_string(), self.line.to_doc_string(), env)
    }
}

fn grid(from: f64, to: f64, points: usize, log: bool) -> Result<Vec<f64>, Failure> {
    if points == 0 || !from.is_finite() || !to.is_finite() {
        return Err(input_error(format!("need finite bounds and ≥ 1 point ({from}, {to}, {points})")));
    }
    if log && !(from > 0.0 && to > 0.0) {
        return Err(input_error(format!("log spacing needs positive bounds ({from}, {to})")));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let s = i as f64 / n;
            if i == 0 {
                from
            } else if i == points - 1 {
                to
            } else if log {
                (from.ln() + s * (to.ln() - from.ln())).exp()
            } else {
                from + s * (to - from)
            }
        })
        .collect())
}

fn tdec_sweep(setup: &Setup, a: &TdecArgs) -> Result<Table, Failure> {
    let axis = SweepAxis::parse(&a.axis)?;
    let values = grid(a.from, a.to, a.points, !a.linear)?;
    let base = SweepBase {
        config: setup.ring.clone(),
        gamma: a.gamma,
        temperature: a.temperature,
        options: DecoherenceOptions::default(),
    };
    let sweep = sweep_decoherence(axis, &values, &base)?;
    let mut t = Table::new(&[axis.name(), "t_d_min", "t_d_max", "omega_min", "omega_max", "omega_worst"]);
    for r in &sweep.rows {
        t.push(vec![r.axis, r.t_d_min, r.t_d_max, r.omega_min, r.omega_max, r.omega_worst]);
    }
    for (x, why) in &sweep.errors {
        t.note("skipped", format!("{x:e}: {why}"));
    }
    Ok(t)
}

fn diffusion(setup: &Setup, a: &DiffusionArgs) -> Result<Table, Failure> {
    let mut env = setup.ring_environment()?;
    let mut t = Table::new(&["t", "D", "D_asymptotic"]);
    match a.coupling {
        Some(g) => env.coupling_eff = g,
        None if !setup.doc.contains("env_gamma") && !setup.doc.contains("env_coupling_eff") => {
            env.coupling_eff = 1.0;
            t.note("coupling", "no coupling configured; D is per unit γ̃²");
        }
        None => {}
    }
    env.validate()?;
    let ts = grid(a.t_from, a.t_to, a.points, a.t_from > 0.0)?;
    let plateau = diffusion_asymptotic(a.omega, &env);
    for &time in &ts {
        let d = match a.method.as_str() {
            "exact" => diffusion_exact(time, a.omega, &env)?,
            "oracle" => diffusion_oracle(time, a.omega, &env)?,
            "asymptotic" => plateau,
            "thermal" => diffusion_thermal(time, a.omega, a.beta, &env)?,
            other => return Err(input_error(format!("unknown diffusion method `{other}`"))),
        };
        t.push(vec![time, d, plateau]);
    }
    Ok(t)
}

fn vcoef(setup: &Setup, a: &VcoefArgs) -> Result<Table, Failure> {
    let profile = RingProfile::new(setup.ring.clone())?;
    let derived = setup.derived();
    let mut t = Table::new(&["omega", "v1_u", "v2_u", "v1_v", "v2_v", "anomalous_ratio"]);
    for w in allowed_frequencies(&profile, derived.omega_max)? {
        let c = v_coefficients(&profile, a.t, w, derived.delta)?;
        let ratio = 2.0 * (1.0 / (w * derived.tau)).ln() * c.v2_u / c.v1_u;
        t.push(vec![w, c.v1_u, c.v2_u, c.v1_v, c.v2_v, ratio]);
    }
    Ok(t)
}

fn peak_notes(t: &mut Table, g: &CorrelationGrid) {
    let p = detect_peak(g);
    t.note(
        "peak",
        format!(
            "location={:e} height={:e} background={:e} contrast={:e} present={}",
            p.location, p.height, p.background, p.contrast, p.present
        ),
    );
}

fn correlation(setup: &Setup, a: &CorrelationArgs) -> Result<Table, Failure> {
    let p = setup.line;
    let variant = ClosedFormVariant::parse(&a.variant)?;
    let (_, xp) = entanglement_boundary(a.t, &p);
    let from = a.x2_from.unwrap_or(p.a + (xp - p.a) / a.points.max(1) as f64);
    let x2s = grid(from, a.x2_to.unwrap_or(xp), a.points, false)?;
    let g = match a.method.as_str() {
        "closed-form" => closed_form_grid(a.x1, &x2s, a.t, a.beta, &p, variant)?,
        "mode-sum" => {
            let samples = x2s
                .iter()
                .map(|&x2| corr_mode_sum_oracle(a.x1, x2, a.t, a.beta, &p).map(|v| (x2, v)))
                .collect::<abh::Result<Vec<_>>>()?;
            let temperature = if a.beta.is_infinite() { 0.0 } else { 1.0 / a.beta };
            CorrelationGrid::new(a.t, a.x1, samples, CorrelationMethod::ModeSumOracle, temperature)?
        }
        other => return Err(input_error(format!("unknown correlation method `{other}`"))),
    };
    let mut t = Table::new(&["x2", "value"]);
    for &(x, v) in &g.samples {
        t.push(vec![x, v]);
    }
    t.note("variant", variant.name());
    peak_notes(&mut t, &g);
    Ok(t)
}

fn boundary(setup: &Setup, a: &BoundaryArgs) -> Result<Table, Failure> {
    if !(a.t_max >= 0.0) {
        return Err(input_error("t-max must be ≥ 0"));
    }
    let mut t = Table::new(&["t", "x_minus", "x_plus"]);
    for time in grid(0.0, a.t_max, a.points, false)? {
        let (xm, xp) = entanglement_boundary(time, &setup.line);
        t.push(vec![time, xm, xp]);
    }
    Ok(t)
}

fn er(setup: &Setup, a: &ErArgs) -> Result<Table, Failure> {
    let p = setup.line;
    let reading = ErReading::parse(&a.reading)?;
    let temperature = a.t0_over_th * p.hawking_temperature();
    let x2 = a.x2.unwrap_or(-a.x1 + 2.0 * p.a - 2.0 * p.tau * std::f64::consts::LN_2);
    let mut t = Table::new(&["t", "e_r"]);
    let mut warnings: Vec<String> = Vec::new();
    for time in grid(a.t_from, a.t_to, a.points, false)? {
        let r = open_correction_er(a.k, time, a.lambda, temperature, &p, reading, (a.x1, x2))?;
        for w in r.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        t.push(vec![time, r.value]);
    }
    t.note("reading", reading.name());
    for w in warnings {
        t.note("warning", w);
    }
    Ok(t)
}

fn langevin(setup: &Setup, a: &LangevinArgs) -> Result<Table, Failure> {
    let p = setup.line;
    let temperature = a.t0_over_th * p.hawking_temperature();
    let env = EnvironmentSpec::new(a.coupling, 10.0, CutoffShape::Exponential)?.with_temperature(temperature)?;
    let (_, xp) = entanglement_boundary(a.t, &p);
    let to = a.x2_to.unwrap_or(xp);
    let points = ((to - a.x2_from) / a.h).floor().max(0.0) as usize + 1;
    let x2s = grid(a.x2_from, a.x2_from + (points - 1) as f64 * a.h, points, false)?;
    let params = EnsembleParams {
        realizations: a.realizations,
        sites: a.sites,
        h: a.h,
        dt: None,
        seed: a.seed,
        batches: a.batches,
        target_rel_error: None,
    };
    let mc = estimate_correlation(&params, a.x1, &x2s, a.t, temperature, &Background::line(p), &env)?;
    let mut t = Table::new(&["x2", "value", "std_error"]);
    for (&(x, v), e) in mc.grid.samples.iter().zip(&mc.std_error) {
        t.push(vec![x, v, *e]);
    }
    let pk = mc_peak_location(&mc);
    t.note("x1_snapped", format!("{:e}", mc.grid.x1));
    t.note(
        "mc_peak",
        format!("location={:e} statistical={:e} spacing={:e}", pk.location, pk.statistical, pk.spacing),
    );
    peak_notes(&mut t, &mc.grid);
    Ok(t)
}

fn hawking(setup: &Setup) -> Result<Table, Failure> {
    let ring = RingProfile::new(setup.ring.clone())?;
    let mut t = Table::new(&["horizon_theta", "temperature"]);
    for (pos, th) in hawking_temperatures_ring(&ring)? {
        t.push(vec![pos, th]);
    }
    t.note("line_hawking_temperature", format!("{:e}", setup.line.hawking_temperature()));
    Ok(t)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let setup = Setup::load(cli.config.as_ref())?;
    let (name, seed, table) = match &cli.command {
        Command::TdecSweep(a) => ("tdec-sweep", None, tdec_sweep(&setup, a)?),
        Command::Diffusion(a) => ("diffusion", None, diffusion(&setup, a)?),
        Command::Vcoef(a) => ("vcoef", None, vcoef(&setup, a)?),
        Command::Correlation(a) => ("correlation", None, correlation(&setup, a)?),
        Command::Boundary(a) => ("boundary", None, boundary(&setup, a)?),
        Command::Er(a) => ("er", None, er(&setup, a)?),
        Command::Langevin(a) => ("langevin", Some(a.seed), langevin(&setup, a)?),
        Command::Hawking => ("hawking", None, hawking(&setup)?),
    };
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: name.to_string(),
        config_sha256: sha256_hex(&setup.canonical_text()),
        seed,
        args: invocation_args(),
    };
    let text = render(&manifest, &table, cli.format);
    match &cli.output {
        Some(path) => write_atomic(path, &text)
            .map_err(|e| Failure { kind: "io", code: 3, message: format!("writing {}: {e}", path.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Command-line arguments without the output destination, so the manifest
/// does not depend on where the file goes.
fn invocation_args() -> Vec<String> {
    let mut out = Vec::new();
    let mut it = std::env::args().skip(1);
    while let Some(a) = it.next() {
        if a == "--output" || a == "-o" {
            it.next();
        } else if !a.starts_with("--output=") {
            out.push(a);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": { "kind": f.kind, "exit_code": f.code, "message": f.message } }));
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_documented_exit_codes() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::Parse { line: 1, msg: "x".into() }), 2);
        assert_eq!(code(Error::Numeric("x".into())), 3);
        assert_eq!(code(Error::Quadrature { msg: "x".into(), partial: 0.0, error_estimate: 1.0 }), 3);
        assert_eq!(code(Error::Regime("x".into())), 4);
        assert_eq!(code(Error::RegionExit { exit_time: 1.0 }), 4);
    }

    #[test]
    fn beta_accepts_inf_and_rejects_nonpositive() {
        assert_eq!(parse_beta("inf"), Ok(f64::INFINITY));
        assert_eq!(parse_beta("2.5"), Ok(2.5));
        assert!(parse_beta("0").is_err());
        assert!(parse_beta("-1").is_err());
    }

    #[test]
    fn grids_hit_both_endpoints_exactly() {
        let g = grid(1e-8, 1e-5, 7, true).unwrap();
        assert_eq!((g[0], g[6]), (1e-8, 1e-5));
        assert!(grid(0.0, 1.0, 3, true).is_err());
        assert_eq!(grid(2.0, 3.0, 1, false).unwrap(), vec![2.0]);
    }
}
