//! Momentum correlations of the left-moving field across the horizon.
//!
//! A left mover is labelled by its initial position X = x₀(x, t), and the
//! momentum of a left-moving mode is Π u_k = ik (∂ₓX) u_k. For a thermal
//! initial state the equal-time correlation is then
//! X₁′X₂′ I(X₂ − X₁) with I(Δ) = ∫₀^∞ k coth(βk/2) cos(kΔ) dk, which is
//! −(π/β)² cosech²(πΔ/β), or −1/Δ² in vacuum.
//!
//! Inverse temperatures are plain `f64`; `f64::INFINITY` is the vacuum.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::characteristics::{entanglement_boundary, left_x0_asymptotic, trace_characteristic, Branch};
use crate::error::{Error, Result};
use crate::profile::{richardson_derivative, sigma_accumulated, LineProfile};
use crate::specfun::{integrate, QuadOptions};

/// Contrast above which a correlation peak counts as present.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 3.0;
pub const MIN_PEAK_SAMPLES: usize = 16;

/// Π = ∂ₜφ + v ∂ₓφ.
pub fn momentum_of_field(dphi_dt: Complex64, dphi_dx: Complex64, v: f64) -> Complex64 {
    dphi_dt + dphi_dx * v
}

/// A signed number kept as ln|value| and its sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LogValue {
    /// May underflow to 0 or overflow to ±∞.
    pub fn value(self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosedFormVariant {
    /// The published display, including its e² term and cosh prefactors.
    Verbatim,
    /// X₁′X₂′ I(X₂ − X₁) with the long-time matched labels of
    /// [`left_x0_asymptotic`].
    MatchedModes,
}

impl ClosedFormVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "verbatim" => Ok(ClosedFormVariant::Verbatim),
            "matched" | "matched_modes" | "matched-modes" => Ok(ClosedFormVariant::MatchedModes),
            other => Err(Error::config("variant", format!("unknown closed-form variant '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClosedFormVariant::Verbatim => "verbatim",
            ClosedFormVariant::MatchedModes => "matched",
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// ln cosech²(z) from ln z, without overflow at either end.
fn ln_cosech2(ln_z: f64) -> f64 {
    if ln_z < -9.0 {
        let z2 = (2.0 * ln_z).exp();
        return -2.0 * ln_z - z2 / 3.0 + z2 * z2 / 90.0;
    }
    let z = ln_z.exp();
    if !z.is_finite() {
        return f64::NEG_INFINITY;
    }
    4f64.ln() - 2.0 * z - 2.0 * (-(-2.0 * z).exp_m1()).ln()
}

/// ln|I(Δ)| from ln|Δ|.
fn ln_thermal_kernel(ln_delta: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        return -2.0 * ln_delta;
    }
    let lpb = (PI / beta).ln();
    2.0 * lpb + ln_cosech2(lpb + ln_delta)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("inverse temperature must be positive (∞ for vacuum), got {beta}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("need finite t ≥ 0, got {t}")))
    }
}

/// Is x1 ∈ [x₋, −a) and x2 ∈ (a, x₊]?
pub fn in_entanglement_domain(x1: f64, x2: f64, t: f64, p: &LineProfile) -> bool {
    let (xm, xp) = entanglement_boundary(t, p);
    x1 < -p.a && x1 >= xm && x2 > p.a && x2 <= xp
}

fn check_pair_domain(x1: f64, x2: f64, t: f64, p: &LineProfile) -> Result<()> {
    if in_entanglement_domain(x1, x2, t, p) {
        return Ok(());
    }
    let (xm, xp) = entanglement_boundary(t, p);
    Err(Error::Domain(format!(
        "(x1, x2) = ({x1}, {x2}) is outside x1 ∈ [{xm}, {}), x2 ∈ ({}, {xp}] at t = {t}; \
         use corr_homogeneous there",
        -p.a, p.a
    )))
}

/// ⟨Π_L(x₁,t) Π_L(x₂,t)⟩ across the horizon, in log space.
///
/// `Verbatim`:
/// −(π/β)² e^{(x₁−x₂)/a} C^{−Δvτ/a}
/// cosech²[(aπ/β) e^{−(a+t+x₂)/a} C^{v_max τ/a}(e^{(2t+x₁+x₂)/a} + e² C^{Σvτ/a})],
/// C = cosh(t/τ). Its cosech argument is e^{(x₁−x₂)/a} C^{2v_max τ/a}(X₂ − X₁)
/// in terms of the matched labels, so at late times and finite β it
/// underflows to zero; at β = ∞ it is the matched result times a factor
/// that depends on x₁ only.
pub fn corr_closed_form(
    x1: f64,
    x2: f64,
    t: f64,
    beta: f64,
    p: &LineProfile,
    variant: ClosedFormVariant,
) -> Result<LogValue> {
    check_time(t)?;
    check_beta(beta)?;
    check_pair_domain(x1, x2, t, p)?;
    let (a, f) = (p.a, p.f(t));
    let (ln_pref, ln_delta) = match variant {
        ClosedFormVariant::MatchedModes => {
            let u1 = (x1 + t - f * p.v_min - a) / a;
            let u2 = (x2 + t - f * p.v_max - a) / a;
            (u2 - u1, a.ln() + log_add_exp(u2, -u1))
        }
        ClosedFormVariant::Verbatim => {
            // ln cosh(t/τ) = f/τ
            let lc = f / p.tau;
            let pref = (x1 - x2) / a - p.delta_v() * p.tau / a * lc;
            let ln_e = -(a + t + x2) / a
                + p.v_max * p.tau / a * lc
                + log_add_exp((2.0 * t + x1 + x2) / a, 2.0 + p.sigma_v() * p.tau / a * lc);
            (pref, a.ln() + ln_e)
        }
    };
    Ok(LogValue {
        ln_abs: ln_pref + ln_thermal_kernel(ln_delta, beta),
        sign: -1.0,
    })
}

/// κ and τ of a homogeneous stretch; flat regions have κ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneousRegion {
    pub kappa: f64,
    pub tau: f64,
}

impl HomogeneousRegion {
    pub fn transition(p: &LineProfile) -> Self {
        HomogeneousRegion { kappa: p.kappa, tau: p.tau }
    }

    pub fn flat(p: &LineProfile) -> Self {
        HomogeneousRegion { kappa: 0.0, tau: p.tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regulator {
    /// e^{−εk}; the regulated value is analytic in ε.
    Exponential,
    /// e^{−ε²k²}; asymptotic series in ε².
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HomogeneousMethod {
    Regulated(Regulator),
    /// Vacuum part as the distributional limit Γ(5/2)(iy)^{−5/2}, thermal
    /// remainder (coth − 1 decays exponentially) by direct quadrature.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegulatedValue {
    pub value: Complex64,
    pub error_estimate: f64,
}

fn coth_weight(k: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        1.0
    } else {
        1.0 / (0.5 * beta * k).tanh()
    }
}

/// Raises the absolute tolerance to what rounding allows on [lo, hi].
fn roundoff_floor<M: Fn(f64) -> f64>(opts: &QuadOptions, magnitude: M, lo: f64, hi: f64) -> QuadOptions {
    let m = [lo, 0.5 * (lo + hi), hi].iter().map(|&k| magnitude(k)).fold(0.0, f64::max);
    QuadOptions {
        abs_tol: opts.abs_tol.max(1e-14 * m * (hi - lo)),
        ..*opts
    }
}

/// ∫₀^∞ f(k) R(εk) dk with ε → 0 by Richardson extrapolation.
///
/// `freq` sets both the oscillation scale (pieces of π/freq) and the
/// starting regulator; `scale` is the expected magnitude of the result.
/// The regulated value is assumed to expand in powers ε^{j·power_step}.
fn regulated_integral<F: Fn(f64) -> Complex64>(
    f: F,
    freq: f64,
    scale: f64,
    regulator: Regulator,
    power_step: usize,
    real_only: bool,
) -> Result<RegulatedValue> {
    const LEVELS: usize = 7;
    let eps0 = match regulator {
        Regulator::Exponential => freq / 8.0,
        Regulator::Gaussian => freq / 8.0,
    };
    let half = PI / freq;
    let opts = QuadOptions::mixed(1e-15 * scale, 1e-12);
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(LEVELS);
    for i in 0..LEVELS {
        let eps = eps0 / 2f64.powi(i as i32);
        let (cutoff, reg): (f64, Box<dyn Fn(f64) -> f64>) = match regulator {
            Regulator::Exponential => (60.0 / eps, Box::new(move |k: f64| (-eps * k).exp())),
            Regulator::Gaussian => (8.5 / eps, Box::new(move |k: f64| (-(eps * k) * (eps * k)).exp())),
        };
        let pieces = (cutoff / half).ceil() as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..pieces {
            let (lo, hi) = (j as f64 * half, (j + 1) as f64 * half);
            let opts = roundoff_floor(&opts, |k| f(k).norm() * reg(k), lo, hi);
            let re = integrate(|k| f(k).re * reg(k), lo, hi, &opts)?.value;
            let im = if real_only {
                0.0
            } else {
                integrate(|k| f(k).im * reg(k), lo, hi, &opts)?.value
            };
            acc += Complex64::new(re, im);
        }
        let mut row = vec![acc];
        for j in 1..=i {
            let fac = 2f64.powi((power_step * j) as i32) - 1.0;
            let next = row[j - 1] + (row[j - 1] - rows[i - 1][j - 1]) / fac;
            row.push(next);
        }
        rows.push(row);
    }
    let value = rows[LEVELS - 1][LEVELS - 1];
    let err = (value - rows[LEVELS - 2][LEVELS - 2]).norm();
    if !(err <= 1e-6 * value.norm() + 1e-12 * scale) {
        return Err(Error::Quadrature {
            msg: format!(
                "regulator removal did not settle ({regulator:?}; last diagonal entries {} and {})",
                rows[LEVELS - 2][LEVELS - 2],
                value
            ),
            partial: value.re,
            error_estimate: err,
        });
    }
    Ok(RegulatedValue { value, error_estimate: err })
}

/// ⟨Π_L Π_L⟩ in a homogeneous stretch:
/// e^{−κf}/√2 ∫₀^∞ k^{3/2} coth(βk/2) e^{−ik dx e^{−κf}} dk, dx = x₁ − x₂.
///
/// The integral exists only as a distribution; it is regulated with
/// e^{−εk} and extrapolated to ε = 0.
pub fn corr_homogeneous(dx: f64, t: f64, beta: f64, region: HomogeneousRegion) -> Result<Complex64> {
    corr_homogeneous_with(dx, t, beta, region, HomogeneousMethod::Regulated(Regulator::Exponential))
        .map(|r| r.value)
}

pub fn corr_homogeneous_with(
    dx: f64,
    t: f64,
    beta: f64,
    region: HomogeneousRegion,
    method: HomogeneousMethod,
) -> Result<RegulatedValue> {
    check_time(t)?;
    check_beta(beta)?;
    if dx == 0.0 || !dx.is_finite() {
        return Err(Error::Domain(format!("coincident points diverge; need finite dx ≠ 0, got {dx}")));
    }
    let decay = (-region.kappa * sigma_accumulated(t, region.tau)).exp();
    let y = dx * decay;
    let scale = y.abs().powf(-2.5);
    let r = match method {
        HomogeneousMethod::Regulated(reg) => {
            let f = |k: f64| {
                if k == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::from_polar(k.powf(1.5) * coth_weight(k, beta), -k * y)
            };
            // e^{−εk} leaves every power of ε; e^{−ε²k²} only even ones
            let step = if reg == Regulator::Exponential { 1 } else { 2 };
            regulated_integral(f, y.abs(), scale, reg, step, false)?
        }
        HomogeneousMethod::Split => {
            let gamma_52 = 0.75 * PI.sqrt();
            let vac = Complex64::new(0.0, y).powf(-2.5) * gamma_52;
            let (thermal, err) = if beta.is_infinite() {
                (Complex64::new(0.0, 0.0), 0.0)
            } else {
                let w = |k: f64| Complex64::from_polar(k.powf(1.5), -k * y);
                thermal_remainder(w, y.abs(), beta, scale)?
            };
            RegulatedValue { value: vac + thermal, error_estimate: err }
        }
    };
    let s = decay / SQRT_2;
    Ok(RegulatedValue {
        value: r.value * s,
        error_estimate: r.error_estimate * s,
    })
}

/// ∫₀^∞ f(k) (coth(βk/2) − 1) dk; the thermal factor decays like e^{−βk}.
fn thermal_remainder<F: Fn(f64) -> Complex64>(f: F, freq: f64, beta: f64, scale: f64) -> Result<(Complex64, f64)> {
    let cutoff = 80.0 / beta;
    let width = (PI / freq).min(cutoff / 50.0);
    let pieces = (cutoff / width).ceil() as usize;
    let opts = QuadOptions::mixed(1e-15 * scale, 1e-12);
    let g = |k: f64| if k == 0.0 { Complex64::new(0.0, 0.0) } else { f(k) * (2.0 / (beta * k).exp_m1()) };
    let (mut acc, mut err) = (Complex64::new(0.0, 0.0), 0.0);
    for j in 0..pieces {
        let (lo, hi) = (j as f64 * width, (j + 1) as f64 * width);
        let opts = roundoff_floor(&opts, |k| g(k).norm(), lo, hi);
        let re = integrate(|k| g(k).re, lo, hi, &opts)?;
        let im = integrate(|k| g(k).im, lo, hi, &opts)?;
        acc += Complex64::new(re.value, im.value);
        err += re.error_estimate + im.error_estimate;
    }
    Ok((acc, err))
}

/// Where the mode-sum oracle takes its left-mover labels from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeSource {
    /// Long-time matched forms, [`left_x0_asymptotic`].
    Matched,
    /// Numerically traced characteristics.
    Traced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub error_estimate: f64,
    /// Bound on the discarded k-tail at the smallest regulator, relative to |value|.
    pub truncation_bound: f64,
}

/// X and ΠX = ∂ₜX + v∂ₓX at (x, t), the derivatives by Richardson differences.
pub fn label_and_momentum(x: f64, t: f64, p: &LineProfile, source: ModeSource) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("labels are differentiated in t; need t > 0, got {t}")));
    }
    let label = |x: f64, t: f64| match source {
        ModeSource::Matched => left_x0_asymptotic(x, t, p),
        ModeSource::Traced => trace_characteristic(x, t, Branch::Left, p).map(|m| m.x0).unwrap_or(f64::NAN),
    };
    // keep the stencil on one side of the kinks at ±a
    let gap = (x.abs() - p.a).abs();
    let hx = if gap > 0.0 { (1e-2 * p.a).min(0.4 * gap) } else { 1e-2 * p.a };
    let ht = (1e-2 * p.tau).min(0.4 * t);
    let d_x = richardson_derivative(&|s| label(s, t), x, hx);
    let d_t = richardson_derivative(&|s| label(x, s), t, ht);
    let pi = momentum_of_field(Complex64::new(d_t, 0.0), Complex64::new(d_x, 0.0), p.velocity(x, t)).re;
    let x0 = label(x, t);
    if !(x0.is_finite() && pi.is_finite()) {
        return Err(Error::Numeric(format!("left-mover label not available at (x, t) = ({x}, {t})")));
    }
    Ok((x0, pi))
}

/// Independent evaluation of ⟨Π_L Π_L⟩ from the mode sum
/// 2∫₀^∞ dk coth(βk/2) Re[Πu_k(x₁) Πu_k(x₂)*], u_k = e^{ikX}/√(2k),
/// with matched labels. Same domain as [`corr_closed_form`].
pub fn corr_mode_sum_oracle(x1: f64, x2: f64, t: f64, beta: f64, p: &LineProfile) -> Result<f64> {
    check_pair_domain(x1, x2, t, p)?;
    corr_mode_sum_oracle_with(x1, x2, t, beta, p, ModeSource::Matched).map(|r| r.value)
}

/// As [`corr_mode_sum_oracle`] with a choice of labels and no domain check.
pub fn corr_mode_sum_oracle_with(
    x1: f64,
    x2: f64,
    t: f64,
    beta: f64,
    p: &LineProfile,
    source: ModeSource,
) -> Result<OracleValue> {
    check_time(t)?;
    check_beta(beta)?;
    let (l1, pi1) = label_and_momentum(x1, t, p, source)?;
    let (l2, pi2) = label_and_momentum(x2, t, p, source)?;
    let delta = (l2 - l1).abs();
    if delta == 0.0 {
        return Err(Error::Domain("coincident labels: the correlation diverges".into()));
    }
    // a common phase drops out of the product; referencing both labels to
    // their midpoint keeps k·X small enough for accurate trig
    let mid = 0.5 * (l1 + l2);
    let (r1, r2) = (l1 - mid, l2 - mid);
    let mode_pair = |k: f64| {
        if k == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let norm = 1.0 / (2.0 * k).sqrt();
        let m1 = Complex64::new(0.0, k * pi1) * Complex64::from_polar(norm, k * r1);
        let m2 = Complex64::new(0.0, k * pi2) * Complex64::from_polar(norm, k * r2);
        Complex64::new(2.0 * (m1 * m2.conj()).re, 0.0)
    };
    let scale = (pi1 * pi2).abs() / (delta * delta);
    // vacuum part: Re 1/(ε − iΔ)² is even in ε
    let vac = regulated_integral(mode_pair, delta, scale, Regulator::Exponential, 2, true)?;
    let (thermal, thermal_err) = if beta.is_infinite() {
        (Complex64::new(0.0, 0.0), 0.0)
    } else {
        thermal_remainder(mode_pair, delta, beta, scale)?
    };
    let value = vac.value.re + thermal.re;
    // tails: beyond 60/ε of k e^{−εk} at the smallest ε, and beyond 80/β of
    // 2k/(e^{βk} − 1)
    let eps = delta / 8.0 / 64.0;
    let kc = 60.0 / eps;
    let mut tail = (kc / eps + 1.0 / (eps * eps)) * (-eps * kc).exp();
    if beta.is_finite() {
        let kt = 80.0 / beta;
        tail += 4.0 * (kt / beta + 1.0 / (beta * beta)) * (-beta * kt).exp();
    }
    tail *= (pi1 * pi2).abs();
    Ok(OracleValue {
        value,
        error_estimate: vac.error_estimate + thermal_err,
        truncation_bound: tail / value.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    ClosedForm,
    ModeSumOracle,
    MonteCarlo,
}

impl CorrelationMethod {
    pub fn name(self) -> &'static str {
        match self {
            CorrelationMethod::ClosedForm => "closed_form",
            CorrelationMethod::ModeSumOracle => "mode_sum_oracle",
            CorrelationMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Correlation with a fixed probe x₁ as a function of x₂.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationGrid {
    pub t: f64,
    pub x1: f64,
    /// (x₂, value), sorted by x₂.
    pub samples: Vec<(f64, f64)>,
    pub method: CorrelationMethod,
    pub temperature: f64,
}

impl CorrelationGrid {
    pub fn new(
        t: f64,
        x1: f64,
        mut samples: Vec<(f64, f64)>,
        method: CorrelationMethod,
        temperature: f64,
    ) -> Result<Self> {
        if let Some(&(x, v)) = samples.iter().find(|(x, v)| !(x.is_finite() && v.is_finite())) {
            return Err(Error::Numeric(format!("non-finite correlation sample ({x}, {v})")));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(CorrelationGrid { t, x1, samples, method, temperature })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x2,value\n");
        for (x, v) in &self.samples {
            s.push_str(&format!("{x:.10e},{v:.10e}\n"));
        }
        s
    }
}

/// Closed-form correlation over `x2s`.
///
/// With x₁ inside the entanglement region only the x₂ in (a, x₊] are kept.
/// With x₁ beyond x₋ the closed form does not apply and the samples are
/// |corr_homogeneous| of the flat region, which depends on x₁ − x₂ only.
pub fn closed_form_grid(
    x1: f64,
    x2s: &[f64],
    t: f64,
    beta: f64,
    p: &LineProfile,
    variant: ClosedFormVariant,
) -> Result<CorrelationGrid> {
    check_time(t)?;
    check_beta(beta)?;
    let (xm, xp) = entanglement_boundary(t, p);
    let temperature = if beta.is_infinite() { 0.0 } else { 1.0 / beta };
    let mut samples = Vec::with_capacity(x2s.len());
    if x1 < -p.a && x1 >= xm {
        for &x2 in x2s.iter().filter(|&&x2| x2 > p.a && x2 <= xp) {
            samples.push((x2, corr_closed_form(x1, x2, t, beta, p, variant)?.value()));
        }
    } else if x1.abs() <= p.a {
        return Err(Error::Domain(format!("probe x1 = {x1} lies in the transition region")));
    } else {
        let region = HomogeneousRegion::flat(p);
        for &x2 in x2s.iter().filter(|&&x2| x2 != x1) {
            let v = corr_homogeneous_with(x1 - x2, t, beta, region, HomogeneousMethod::Split)?;
            samples.push((x2, v.value.norm()));
        }
    }
    CorrelationGrid::new(t, x1, samples, CorrelationMethod::ClosedForm, temperature)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakReport {
    pub location: f64,
    pub height: f64,
    /// Median |value| outside the exclusion window around the maximum.
    pub background: f64,
    pub contrast: f64,
    pub present: bool,
}

pub fn detect_peak(grid: &CorrelationGrid) -> PeakReport {
    detect_peak_with(grid, DEFAULT_PEAK_THRESHOLD)
}

/// Peak of |value|. A maximum on the first or last sample is the edge of the
/// sampled range, not a peak, and is never reported present.
pub fn detect_peak_with(grid: &CorrelationGrid, threshold: f64) -> PeakReport {
    let n = grid.samples.len();
    if n == 0 {
        return PeakReport { location: f64::NAN, height: 0.0, background: 0.0, contrast: 0.0, present: false };
    }
    let mags: Vec<f64> = grid.samples.iter().map(|s| s.1.abs()).collect();
    let imax = (0..n).max_by(|&i, &j| mags[i].total_cmp(&mags[j])).unwrap_or(0);
    let height = mags[imax];
    let w = (n / 10).max(2);
    let mut off: Vec<f64> = (0..n).filter(|&i| i.abs_diff(imax) > w).map(|i| mags[i]).collect();
    let background = if off.is_empty() {
        height
    } else {
        off.sort_by(f64::total_cmp);
        let m = off.len() / 2;
        if off.len() % 2 == 1 {
            off[m]
        } else {
            0.5 * (off[m - 1] + off[m])
        }
    };
    let contrast = if background > 0.0 {
        height / background
    } else if height > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let present = n >= MIN_PEAK_SAMPLES && contrast > threshold && imax > 0 && imax + 1 < n;
    PeakReport { location: grid.samples[imax].0, height, background, contrast, present }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresenceScan {
    /// (x₁, report) per probe.
    pub probes: Vec<(f64, PeakReport)>,
    /// Midpoint between the last present peak and the next probe's maximum.
    pub flip: Option<f64>,
    pub spacing: f64,
    pub x_plus: f64,
}

/// Peak reports for a series of probes over the x₂ grid a + h, …, x₊(t).
pub fn presence_scan(
    x1s: &[f64],
    n_samples: usize,
    t: f64,
    beta: f64,
    p: &LineProfile,
    variant: ClosedFormVariant,
) -> Result<PresenceScan> {
    let (_, xp) = entanglement_boundary(t, p);
    let h = (xp - p.a) / n_samples as f64;
    let x2s: Vec<f64> = (1..=n_samples).map(|i| p.a + i as f64 * h).collect();
    let mut probes = Vec::with_capacity(x1s.len());
    for &x1 in x1s {
        let grid = closed_form_grid(x1, &x2s, t, beta, p, variant)?;
        probes.push((x1, detect_peak(&grid)));
    }
    let flip = probes
        .windows(2)
        .find(|w| w[0].1.present && !w[1].1.present)
        .map(|w| 0.5 * (w[0].1.location + w[1].1.location));
    Ok(PresenceScan { probes, flip, spacing: h, x_plus: xp })
}

/// g(t) = ∫₀ᵗ e^{−κ f(s)} ds.
fn stretched_time(t: f64, p: &LineProfile) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions::mixed(1e-15, 1e-13);
    let knee = (10.0 * p.tau).min(t);
    let g = |s: f64| (-p.kappa * p.f(s)).exp();
    let mut v = integrate(g, 0.0, knee, &opts)?.value;
    if t > knee {
        v += integrate(g, knee, t, &opts)?.value;
    }
    Ok(v)
}

/// G_ret = i[φ(x,t), φ(x′,t′)] Θ(t − t′) for modes normalised by
/// [a_k, a_k′†] = δ(k − k′); flat space gives π Θ(Δt − |Δx|).
///
/// The right-mover factor of the k > 0 modes integrates exactly to
/// e^{−2ik g(t)}, so the k-sum is a pair of Dirichlet integrals:
/// G = (π/2)[sgn(Δ₀) − sgn(Δ₀ − 2Δg)], Δ₀ = x₀ − x₀′, Δg = g(t) − g(t′).
pub fn retarded_green(x: f64, t: f64, xp: f64, tp: f64, p: &LineProfile) -> Result<f64> {
    check_time(t)?;
    check_time(tp)?;
    if t < tp {
        return Ok(0.0);
    }
    let x0 = trace_characteristic(x, t, Branch::Left, p)?.x0;
    let x0p = trace_characteristic(xp, tp, Branch::Left, p)?.x0;
    let d0 = x0 - x0p;
    let dg = stretched_time(t, p)? - stretched_time(tp, p)?;
    let sgn = |v: f64| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
    Ok(0.5 * PI * (sgn(d0) - sgn(d0 - 2.0 * dg)))
}

/// How the two dissipative cross terms of the open correlation are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErReading {
    /// Each cross term propagates from one point to the other:
    /// both collapse onto the closed cross correlation.
    Symmetric,
    /// Both terms carry the propagator from x₂ as printed; one of them
    /// collapses onto the autocorrelation at x₂.
    Literal,
}

impl ErReading {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(ErReading::Symmetric),
            "literal" => Ok(ErReading::Literal),
            other => Err(Error::config("reading", format!("unknown reading '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErReading::Symmetric => "symmetric",
            ErReading::Literal => "literal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErResult {
    pub value: f64,
    pub reading: ErReading,
    pub warnings: Vec<String>,
}

/// Relative open-system correction e_r of mode k at time t.
///
/// Ohmic dissipation D = −λ²∂ₛδ and high-temperature noise N = λ²T₀δ. Per
/// mode, each dissipative term is λ²(t/2) times the closed correlation it
/// collapses onto, and the noise term G·N·G is λ²t T₀ tanh(k/2T₀)/k relative
/// to the closed one. `pair` = (x₁, x₂) fixes the autocorrelation ratio
/// X₂′/(X₁′ cos kΔX) needed by the literal reading.
pub fn open_correction_er(
    k: f64,
    t: f64,
    lambda: f64,
    temperature: f64,
    p: &LineProfile,
    reading: ErReading,
    pair: (f64, f64),
) -> Result<ErResult> {
    check_time(t)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("need k > 0, got {k}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("need λ ≥ 0, got {lambda}")));
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!("need T0 ≥ 0, got {temperature}")));
    }
    let mut warnings = Vec::new();
    let th = p.hawking_temperature();
    if temperature < 10.0 * th {
        warnings.push(format!("T0 = {temperature} is not ≫ T_H = {th}; the white-noise kernel assumes high temperature"));
    }
    if lambda > 1e-2 {
        warnings.push(format!("λ = {lambda} is not weak coupling"));
    }
    if k > temperature {
        warnings.push(format!("k = {k} lies outside the small-k window k ≲ T0"));
    }
    let noise = if temperature > 0.0 { temperature * (0.5 * k / temperature).tanh() / k } else { 0.0 };
    let l2 = lambda * lambda;
    let value = match reading {
        ErReading::Symmetric => l2 * t * (1.0 + noise),
        ErReading::Literal => {
            let ratio = if t > 0.0 {
                let (l1, d1) = label_and_momentum(pair.0, t, p, ModeSource::Matched)?;
                let (l2x, d2) = label_and_momentum(pair.1, t, p, ModeSource::Matched)?;
                let c = (k * (l2x - l1)).cos();
                if c.abs() < 0.1 {
                    warnings.push(format!("cos(kΔX) = {c:.3}: the literal reading is ill-conditioned here"));
                }
                d2 / (d1 * c)
            } else {
                1.0
            };
            0.5 * l2 * t * (1.0 + ratio + 2.0 * noise).abs()
        }
    };
    Ok(ErResult { value, reading, warnings })
}
