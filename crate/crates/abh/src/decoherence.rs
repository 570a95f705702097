//! Diffusion coefficients of the reduced master equation, the ring's
//! V-coefficients, and the decoherence-time estimate with parameter sweeps.

use std::f64::consts::PI;

use serde::Serialize;

use crate::environment::{nu_coth, CutoffShape, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::params::{derive_default, DerivedParams, PhysicalConfig};
use crate::profile::{hawking_temperature_ring, NullBranch, RingNullMap, RingProfile};
use crate::specfun::{integrate, integrate_oscillatory, si, stable_shi_chi_combo, QuadOptions};

/// Right-hand side of the decoherence criterion (order-one convention).
pub const DECOHERENCE_CRITERION: f64 = 1.0;

/// Validity limit of the low-temperature expansion, in units of T_H.
pub const MAX_TEMPERATURE_OVER_TH: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiffusionMethod {
    Exact,
    Asymptotic,
    ThermalExpansion,
    QuadratureOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionResult {
    pub t: f64,
    pub omega: f64,
    /// D(t)
    pub normal: f64,
    /// f(t)
    pub anomalous: f64,
    pub normal_integral: f64,
    pub anomalous_integral: f64,
    pub method: DiffusionMethod,
}

fn check_t_omega(t: f64, omega: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be finite and ≥ 0, got {t}")));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("ω must be finite and > 0, got {omega}")));
    }
    Ok(())
}

/// Closed-form D(t) for the Lorentzian cutoff in the vacuum:
///
/// D = (γ̃²/2) ω/(1 + (ω/Λ)²) · [Shi(Λt)((Λ/ω) cos ωt cosh Λt + sin ωt sinh Λt)
///     − Chi(Λt)((Λ/ω) cos ωt sinh Λt + sin ωt cosh Λt) + Si(ωt)]
///
/// The Shi/Chi bracket is evaluated in its cancellation-free form.
pub fn diffusion_exact(t: f64, omega: f64, spec: &EnvironmentSpec) -> Result<f64> {
    check_t_omega(t, omega)?;
    if spec.cutoff_shape != CutoffShape::Lorentzian {
        return Err(Error::Unsupported(format!(
            "closed-form D(t) exists only for the Lorentzian cutoff (got {}); use diffusion_oracle",
            spec.cutoff_shape.name()
        )));
    }
    if spec.bath_temperature != 0.0 {
        return Err(Error::Unsupported(
            "closed-form D(t) is the vacuum result; use diffusion_thermal for T₀ > 0".into(),
        ));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let l = spec.cutoff;
    let r = omega / l;
    let bracket =
        stable_shi_chi_combo((l / omega) * (omega * t).cos(), (omega * t).sin(), l * t) + si(omega * t);
    Ok(0.5 * spec.coupling_eff.powi(2) * omega / (1.0 + r * r) * bracket)
}

/// Long-time plateau γ̃²ωπ/4.
pub fn diffusion_asymptotic(omega: f64, spec: &EnvironmentSpec) -> f64 {
    0.25 * spec.coupling_eff.powi(2) * omega * PI
}

/// (sin x t)/x with the removable point handled.
fn sin_ratio(x: f64, t: f64) -> f64 {
    if (x * t).abs() < 1e-8 {
        t
    } else {
        (x * t).sin() / x
    }
}

/// K(ν, t) = ∫₀ᵗ cos νs cos ωs ds.
fn cos_cos_kernel(nu: f64, omega: f64, t: f64) -> f64 {
    0.5 * (sin_ratio(nu - omega, t) + sin_ratio(nu + omega, t))
}

/// ∫₀^∞ w(ν) K(ν,t) dν: adaptive head over [0, ω + 40π/t] split at ω,
/// then a half-period oscillatory tail.
fn nu_kernel_integral<W: Fn(f64) -> f64>(w: W, omega: f64, t: f64, opts: &QuadOptions) -> Result<f64> {
    let g = |nu: f64| w(nu) * cos_cos_kernel(nu, omega, t);
    let head_end = omega + 40.0 * PI / t;
    let mut v = integrate(g, 0.0, omega, opts)?.value;
    v += integrate(g, omega, head_end, opts)?.value;
    v += integrate_oscillatory(g, head_end, PI / t, &[], opts)?.value;
    Ok(v)
}

/// D(t) from its frequency representation
/// (γ̃²/2) ∫₀^∞ dν ν f(ν) coth(βħν/2) K(ν, t), any cutoff and temperature.
///
/// The time integral is done analytically; [`diffusion_oracle_nested`]
/// keeps it numerical.
pub fn diffusion_oracle(t: f64, omega: f64, spec: &EnvironmentSpec) -> Result<f64> {
    check_t_omega(t, omega)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let bh = spec.beta() * spec.hbar;
    let (shape, l) = (spec.cutoff_shape, spec.cutoff);
    let opts = QuadOptions::mixed(1e-13, 1e-11);
    let v = nu_kernel_integral(|nu| nu_coth(nu, bh) * shape.eval(nu, l), omega, t, &opts)?;
    Ok(0.5 * spec.coupling_eff.powi(2) * v)
}

/// D(t) as a genuine double integral: inner adaptive quadrature over s for
/// every ν, outer over ν. Slow; meant for spot checks.
pub fn diffusion_oracle_nested(t: f64, omega: f64, spec: &EnvironmentSpec) -> Result<f64> {
    check_t_omega(t, omega)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let bh = spec.beta() * spec.hbar;
    let (shape, l) = (spec.cutoff_shape, spec.cutoff);
    let inner_opts = QuadOptions::mixed(1e-14, 1e-12);
    let outer_opts = QuadOptions::mixed(1e-12, 1e-10);
    let mut failure = None;
    let w = |nu: f64| nu_coth(nu, bh) * shape.eval(nu, l);
    let g = |nu: f64| {
        // split s at every half period of the faster oscillation
        let fast = nu + omega;
        let n = ((fast * t / PI).ceil() as usize).clamp(1, 100_000);
        let h = t / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            match integrate(|s| (nu * s).cos() * (omega * s).cos(), a, b, &inner_opts) {
                Ok(r) => acc += r.value,
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        w(nu) * acc
    };
    let g = std::cell::RefCell::new(g);
    let call = |nu: f64| (g.borrow_mut())(nu);
    let head_end = omega + 40.0 * PI / t;
    let mut v = integrate(call, 0.0, omega, &outer_opts)?.value;
    v += integrate(call, omega, head_end, &outer_opts)?.value;
    v += integrate_oscillatory(call, head_end, PI / t, &[], &outer_opts)?.value;
    drop(g);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(0.5 * spec.coupling_eff.powi(2) * v)
}

/// Low-temperature D(t, β) = (γ̃²/2)[ω Si(ωt) + 2 sin ωt/(ω β²ħ²)].
///
/// Valid for βħω ≫ 1; `beta = ∞` gives the cutoff-free vacuum form.
pub fn diffusion_thermal(t: f64, omega: f64, beta: f64, spec: &EnvironmentSpec) -> Result<f64> {
    check_t_omega(t, omega)?;
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("β must be > 0, got {beta}")));
    }
    let bh = beta * spec.hbar;
    let corr = if bh.is_infinite() { 0.0 } else { 2.0 * (omega * t).sin() / (omega * bh * bh) };
    Ok(0.5 * spec.coupling_eff.powi(2) * (omega * si(omega * t) + corr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThermalSplit {
    /// coth(βħν/2) → 2/(βħν) below ν_c = 2/(βħ), → 1 above.
    Sharp,
    /// The full coth(βħν/2) − 1 excess.
    FullCoth,
}

/// Quadrature companion of [`diffusion_thermal`], cutoff free:
/// ω Si(ωt) plus the thermal excess integrated against K(ν, t).
///
/// With the sharp split the result agrees with the two-term expansion up to
/// O(ν_c⁴ t³). The full coth changes the β⁻² coefficient from 2 to π²/3.
pub fn diffusion_thermal_oracle(
    t: f64,
    omega: f64,
    beta: f64,
    spec: &EnvironmentSpec,
    split: ThermalSplit,
) -> Result<f64> {
    check_t_omega(t, omega)?;
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("β must be > 0, got {beta}")));
    }
    let bh = beta * spec.hbar;
    let zero_t = omega * si(omega * t);
    if bh.is_infinite() {
        return Ok(0.5 * spec.coupling_eff.powi(2) * zero_t);
    }
    let opts = QuadOptions::mixed(1e-15, 1e-12);
    let excess = match split {
        ThermalSplit::Sharp => {
            let nu_c = 2.0 / bh;
            integrate(|nu| (nu_c - nu) * cos_cos_kernel(nu, omega, t), 0.0, nu_c, &opts)?.value
        }
        ThermalSplit::FullCoth => {
            // ν(coth − 1) = 2ν/(e^{βħν} − 1) decays exponentially; 60/βħ is far enough
            let g = |nu: f64| (nu_coth(nu, bh) - nu) * cos_cos_kernel(nu, omega, t);
            let end = 60.0 / bh;
            let mut v = 0.0;
            let pieces = ((end * t / PI).ceil() as usize).max(1);
            let h = end / pieces as f64;
            for i in 0..pieces {
                v += integrate(g, i as f64 * h, (i + 1) as f64 * h, &opts)?.value;
            }
            v
        }
    };
    Ok(0.5 * spec.coupling_eff.powi(2) * (zero_t + excess))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalousAsymptote {
    /// (γ̃²/2) π ω log(Λ/ω)
    pub value: f64,
    /// (γ̃²/2) π log(1/(ωτ)) ω, the slope of ∫₀ᵗ f under Λ ≈ 1/τ.
    pub integral_rate: f64,
    pub warning: Option<String>,
}

/// Long-time anomalous coefficient in the form used for the decoherence
/// estimate: f ≈ (γ̃²/2) π ω log(Λ/ω), and ∫₀ᵗ f ≈ (γ̃²/2) π log(1/(ωτ)) ω t.
///
/// The log is negative once ω exceeds Λ (or 1/τ); the result then carries a
/// warning rather than an error. See [`anomalous_diffusion_limit`] for the
/// value the definition actually converges to.
pub fn anomalous_diffusion_asymptotic(omega: f64, tau: f64, spec: &EnvironmentSpec) -> Result<AnomalousAsymptote> {
    if !(omega > 0.0) || !(tau > 0.0) {
        return Err(Error::Domain(format!("ω and τ must be > 0 (ω = {omega}, τ = {tau})")));
    }
    let half = 0.5 * spec.coupling_eff.powi(2);
    let warning = if omega * tau >= 1.0 || omega >= spec.cutoff {
        Some(format!(
            "ωτ = {:.4}, ω/Λ = {:.4}: logarithm is not positive, asymptote outside its regime",
            omega * tau,
            omega / spec.cutoff
        ))
    } else {
        None
    };
    Ok(AnomalousAsymptote {
        value: half * PI * omega * (spec.cutoff / omega).ln(),
        integral_rate: half * PI * (1.0 / (omega * tau)).ln() * omega,
        warning,
    })
}

/// t → ∞ limit of f(t) = ∫₀ᵗ N(s) sin ωs ds for the vacuum Lorentzian bath:
/// −(γ̃²/2) ω ln(Λ/ω)/(1 + ω²/Λ²).
///
/// Same logarithm as [`anomalous_diffusion_asymptotic`] but a factor −1/π
/// in front.
pub fn anomalous_diffusion_limit(omega: f64, spec: &EnvironmentSpec) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("ω must be > 0, got {omega}")));
    }
    if spec.cutoff_shape != CutoffShape::Lorentzian || spec.bath_temperature != 0.0 {
        return Err(Error::Unsupported(
            "anomalous limit is closed form only for the vacuum Lorentzian bath".into(),
        ));
    }
    let r = omega / spec.cutoff;
    Ok(-0.5 * spec.coupling_eff.powi(2) * omega * (1.0 / r).ln() / (1.0 + r * r))
}

/// f(t) = (γ̃²/2) ∫₀^∞ dν ν f(ν) ∫₀ᵗ cos νs sin ωs ds by quadrature (vacuum).
pub fn anomalous_diffusion_oracle(t: f64, omega: f64, spec: &EnvironmentSpec) -> Result<f64> {
    check_t_omega(t, omega)?;
    if spec.bath_temperature != 0.0 {
        return Err(Error::Unsupported("anomalous oracle is implemented for T₀ = 0".into()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let (shape, l) = (spec.cutoff_shape, spec.cutoff);
    let w = |nu: f64| nu * shape.eval(nu, l);
    // (1 − cos xt)/x = 2 sin²(xt/2)/x
    let one_minus_cos = |x: f64| {
        if (x * t).abs() < 1e-8 {
            0.5 * x * t * t
        } else {
            2.0 * (0.5 * x * t).sin().powi(2) / x
        }
    };
    let full = |nu: f64| 0.5 * w(nu) * (one_minus_cos(omega + nu) + one_minus_cos(omega - nu));
    let opts = QuadOptions::mixed(1e-13, 1e-11);
    let head_end = omega + 40.0 * PI / t;
    let mut v = integrate(full, 0.0, omega, &opts)?.value;
    v += integrate(full, omega, head_end, &opts)?.value;
    // beyond the head: smooth principal part plus a pure oscillation
    let smooth = |nu: f64| 0.5 * w(nu) * (1.0 / (omega + nu) + 1.0 / (omega - nu));
    v += integrate(smooth, head_end, f64::INFINITY, &opts)?.value;
    let osc = |nu: f64| -0.5 * w(nu) * (((omega + nu) * t).cos() / (omega + nu) + ((omega - nu) * t).cos() / (omega - nu));
    v += integrate_oscillatory(osc, head_end, PI / t, &[], &opts)?.value;
    Ok(0.5 * spec.coupling_eff.powi(2) * v)
}

/// D, f and their time integrals in the long-time asymptotic regime.
pub fn diffusion_asymptotic_result(t: f64, omega: f64, tau: f64, spec: &EnvironmentSpec) -> Result<DiffusionResult> {
    check_t_omega(t, omega)?;
    let d = diffusion_asymptotic(omega, spec);
    let f = anomalous_diffusion_asymptotic(omega, tau, spec)?;
    Ok(DiffusionResult {
        t,
        omega,
        normal: d,
        anomalous: f.value,
        normal_integral: d * t,
        anomalous_integral: f.integral_rate * t,
        method: DiffusionMethod::Asymptotic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VCoefficients {
    pub v1_u: f64,
    pub v2_u: f64,
    pub v1_v: f64,
    pub v2_v: f64,
    pub omega: f64,
    pub epsilon: f64,
}

/// (∫ cos²(ω x(θ)) dθ, ∫ cos(ω x) sin(ω x) dθ) over [0, 2π].
///
/// `breakpoints` are split points where x(θ) has kinks or jumps. The range
/// is further cut so that each piece carries at most about a half turn of
/// phase on average.
pub fn v_integrals<X: Fn(f64) -> f64>(x: X, omega: f64, breakpoints: &[f64]) -> Result<(f64, f64)> {
    if omega == 0.0 {
        return Ok((2.0 * PI, 0.0));
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < 2.0 * PI).collect();
    cuts.push(0.0);
    cuts.push(2.0 * PI);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let opts = QuadOptions::mixed(1e-11, 1e-10);
    let (mut c2, mut s2) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let phase = (omega * (x(b) - x(a))).abs();
        let n = ((2.0 * phase / PI).ceil() as usize).clamp(1, 1_000_000);
        let h = (b - a) / n as f64;
        for i in 0..n {
            let (lo, hi) = (a + i as f64 * h, if i + 1 == n { b } else { a + (i + 1) as f64 * h });
            c2 += integrate(|th| (2.0 * omega * x(th)).cos(), lo, hi, &opts)?.value;
            s2 += integrate(|th| (2.0 * omega * x(th)).sin(), lo, hi, &opts)?.value;
        }
    }
    // cos² = (1 + cos 2φ)/2, cos·sin = sin 2φ/2
    Ok((PI + 0.5 * c2, 0.5 * s2))
}

fn map_breakpoints(profile: &RingProfile, map: &RingNullMap, epsilon: f64) -> Vec<f64> {
    let mut b = profile.kinks();
    for &h in map.horizons() {
        b.push(h - epsilon);
        b.push(h + epsilon);
    }
    b
}

/// V₁ = ∫₀^{2π} cos²(ω x) dθ and V₂ = ∫₀^{2π} cos(ω x) sin(ω x) dθ on both
/// null branches of the ring at time `t`. The v branch removes an ε window
/// around each horizon.
pub fn v_coefficients(profile: &RingProfile, t: f64, omega: f64, epsilon: f64) -> Result<VCoefficients> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("ω must be ≥ 0, got {omega}")));
    }
    let u = RingNullMap::new(profile, t, NullBranch::U, epsilon)?;
    let v = RingNullMap::new(profile, t, NullBranch::V, epsilon)?;
    let (v1_u, v2_u) = v_integrals(|th| u.eval(th), omega, &profile.kinks())?;
    let (v1_v, v2_v) = v_integrals(|th| v.eval(th), omega, &map_breakpoints(profile, &v, epsilon))?;
    Ok(VCoefficients { v1_u, v2_u, v1_v, v2_v, omega, epsilon })
}

/// Only the u branch, which is all the decoherence time needs by default.
pub fn v1_u(profile: &RingProfile, t: f64, omega: f64) -> Result<(f64, f64)> {
    let u = RingNullMap::new(profile, t, NullBranch::U, 0.0)?;
    v_integrals(|th| u.eval(th), omega, &profile.kinks())
}

/// Frequencies compatible with periodicity on the ring: positive multiples
/// of 2π/X up to ω_max, where X is the u-branch circumference of the
/// asymptotic profile.
pub fn allowed_frequencies(profile: &RingProfile, omega_max: f64) -> Result<Vec<f64>> {
    let u = RingNullMap::new(profile, f64::INFINITY, NullBranch::U, 0.0)?;
    let x = u.circumference();
    if !(x > 0.0) {
        return Err(Error::Numeric(format!("null circumference is not positive: {x}")));
    }
    let step = 2.0 * PI / x;
    let n = (omega_max / step).floor() as usize;
    if n == 0 {
        return Err(Error::Domain(format!(
            "no allowed frequency below ω_max = {omega_max} (spacing {step})"
        )));
    }
    Ok((1..=n).map(|k| k as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VForm {
    /// V = V₁
    Simplified,
    /// V = V₁ + 2 log((ωτ)⁻¹) V₂
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaVPower {
    /// Δv to the first power, as the closed formula is usually quoted.
    Linear,
    /// Δv², what the γ → γ̃ substitution produces.
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceTerms {
    pub zero_temperature: f64,
    /// −8 k_B² T₀²/(ω³ π ħ²), never positive.
    pub thermal_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceEstimate {
    pub t_d: f64,
    pub omega: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub v: f64,
    pub terms: DecoherenceTerms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoherenceOptions {
    pub v_form: VForm,
    pub delta_v_power: DeltaVPower,
    /// T_H used for the T₀ ≤ 100 T_H check; `None` skips it.
    pub hawking_temperature: Option<f64>,
}

impl Default for DecoherenceOptions {
    fn default() -> Self {
        DecoherenceOptions {
            v_form: VForm::Simplified,
            delta_v_power: DeltaVPower::Linear,
            hawking_temperature: None,
        }
    }
}

/// The V entering t_D, from the u-branch coefficients.
pub fn effective_v(vcoef: &VCoefficients, tau: f64, form: VForm) -> f64 {
    match form {
        VForm::Simplified => vcoef.v1_u,
        VForm::Full => vcoef.v1_u + 2.0 * (1.0 / (vcoef.omega * tau)).ln() * vcoef.v2_u,
    }
}

/// t_D(0) = 2ħ²/(γ² Δv δ² ω π ρ² V) and the finite-temperature estimate
/// t_D(T₀) = t_D(0) − 8k_B²T₀²/(ω³πħ²).
pub fn decoherence_time(
    config: &PhysicalConfig,
    derived: &DerivedParams,
    gamma: f64,
    omega: f64,
    temperature: f64,
    vcoef: &VCoefficients,
    opts: &DecoherenceOptions,
) -> Result<DecoherenceEstimate> {
    if !(gamma > 0.0) || !(omega > 0.0) {
        return Err(Error::Domain(format!("γ and ω must be > 0 (γ = {gamma}, ω = {omega})")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::Domain(format!("T₀ must be ≥ 0, got {temperature}")));
    }
    if let Some(th) = opts.hawking_temperature {
        if temperature > MAX_TEMPERATURE_OVER_TH * th {
            return Err(Error::Regime(format!(
                "T₀ = {temperature:e} exceeds {MAX_TEMPERATURE_OVER_TH} T_H = {:e}; low-temperature expansion not valid",
                MAX_TEMPERATURE_OVER_TH * th
            )));
        }
    }
    let v = effective_v(vcoef, derived.tau, opts.v_form);
    if !(v > 0.0) {
        return Err(Error::Domain(format!("V must be > 0, got {v}")));
    }
    let hbar = config.hbar;
    let dv = match opts.delta_v_power {
        DeltaVPower::Linear => derived.delta_v,
        DeltaVPower::Squared => derived.delta_v.powi(2),
    };
    let zero = DECOHERENCE_CRITERION * 2.0 * hbar * hbar
        / (gamma * gamma * dv * derived.delta.powi(2) * omega * PI * derived.rho.powi(2) * v);
    let thermal = -8.0 * (config.k_boltzmann * temperature).powi(2) / (omega.powi(3) * PI * hbar * hbar);
    let t_d = zero + thermal;
    if !(t_d > 0.0) {
        return Err(Error::Regime(format!(
            "thermal correction {thermal:e} overwhelms t_D(0) = {zero:e}; T₀ = {temperature:e} is outside the low-temperature regime"
        )));
    }
    Ok(DecoherenceEstimate {
        t_d,
        omega,
        gamma,
        temperature,
        v,
        terms: DecoherenceTerms { zero_temperature: zero, thermal_correction: thermal },
    })
}

/// Solves the decoherence criterion ρδ²V/ħ · ∫₀ᵗ D = 1 for t by bisection,
/// with D the long-time normal coefficient plus the low-temperature term,
/// whose time integral γ̃²(1 − cos ωt)/(ω²β²ħ²) is replaced by its maximum.
///
/// Independent of [`decoherence_time`]; used to check its thermal
/// coefficient. Uses γ̃ = γ √(2ρ/ħ) Δv.
pub fn decoherence_time_root(
    config: &PhysicalConfig,
    derived: &DerivedParams,
    gamma: f64,
    omega: f64,
    temperature: f64,
    v: f64,
) -> Result<f64> {
    let hbar = config.hbar;
    let g2 = (gamma * (2.0 * derived.rho / hbar).sqrt() * derived.delta_v).powi(2);
    let beta_hbar_sq_inv = (config.k_boltzmann * temperature / hbar).powi(2);
    let target = DECOHERENCE_CRITERION * hbar / (derived.rho * derived.delta.powi(2) * v);
    let lhs = |t: f64| 0.25 * g2 * omega * PI * t + 2.0 * g2 * beta_hbar_sq_inv / (omega * omega) - target;
    if lhs(0.0) >= 0.0 {
        return Err(Error::Regime("thermal term alone meets the decoherence criterion".into()));
    }
    let mut hi = 1.0;
    while lhs(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric("decoherence root not bracketed".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    Gamma,
    VMin,
    Temperature,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepAxis::Gamma),
            "v_min" | "vmin" => Ok(SweepAxis::VMin),
            "temperature" | "t0" => Ok(SweepAxis::Temperature),
            other => Err(Error::Domain(format!(
                "unknown sweep axis `{other}` (expected gamma, v_min or temperature)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::VMin => "v_min",
            SweepAxis::Temperature => "temperature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    pub t_d_min: f64,
    pub t_d_max: f64,
    /// Smallest and largest allowed ω of the band.
    pub omega_min: f64,
    pub omega_max: f64,
    /// ω at which the band minimum occurs.
    pub omega_worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Points that failed, with the reason; the sweep itself carries on.
    pub errors: Vec<(f64, String)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis,t_d_min,t_d_max,omega_min,omega_max\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                r.axis, r.t_d_min, r.t_d_max, r.omega_min, r.omega_max
            ));
        }
        s
    }
}

/// Fixed inputs of a sweep; the swept quantity overrides one of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepBase {
    pub config: PhysicalConfig,
    pub gamma: f64,
    pub temperature: f64,
    pub options: DecoherenceOptions,
}

/// V₁ on the u branch of the asymptotic ring for every allowed frequency.
pub fn band_coefficients(profile: &RingProfile, derived: &DerivedParams) -> Result<Vec<VCoefficients>> {
    let eps = derived.delta;
    allowed_frequencies(profile, derived.omega_max)?
        .into_iter()
        .map(|w| {
            let (v1, v2) = v1_u(profile, f64::INFINITY, w)?;
            Ok(VCoefficients { v1_u: v1, v2_u: v2, v1_v: f64::NAN, v2_v: f64::NAN, omega: w, epsilon: eps })
        })
        .collect()
}

fn band(
    config: &PhysicalConfig,
    derived: &DerivedParams,
    coefs: &[VCoefficients],
    gamma: f64,
    temperature: f64,
    opts: &DecoherenceOptions,
    axis: f64,
) -> Result<SweepRow> {
    let mut row = SweepRow {
        axis,
        t_d_min: f64::INFINITY,
        t_d_max: f64::NEG_INFINITY,
        omega_min: f64::INFINITY,
        omega_max: f64::NEG_INFINITY,
        omega_worst: f64::NAN,
    };
    for c in coefs {
        let e = decoherence_time(config, derived, gamma, c.omega, temperature, c, opts)?;
        if e.t_d < row.t_d_min {
            row.t_d_min = e.t_d;
            row.omega_worst = c.omega;
        }
        row.t_d_max = row.t_d_max.max(e.t_d);
        row.omega_min = row.omega_min.min(c.omega);
        row.omega_max = row.omega_max.max(c.omega);
    }
    Ok(row)
}

/// t_D band over the allowed frequencies for each value of `axis`.
///
/// Points run in input order and per-point failures are collected in
/// [`SweepTable::errors`]. Temperature points above 100 T_H are refused.
pub fn sweep_decoherence(axis: SweepAxis, values: &[f64], base: &SweepBase) -> Result<SweepTable> {
    let mut table = SweepTable { axis, rows: Vec::new(), errors: Vec::new() };
    // the γ and T₀ axes share one profile
    let shared = match axis {
        SweepAxis::VMin => None,
        _ => {
            let profile = RingProfile::new(base.config.clone())?;
            let derived = derive_default(&base.config);
            let coefs = band_coefficients(&profile, &derived)?;
            let th = hawking_temperature_ring(&profile)?;
            Some((derived, coefs, th))
        }
    };
    for &x in values {
        let point = || -> Result<SweepRow> {
            match (axis, &shared) {
                (SweepAxis::Gamma, Some((d, coefs, _))) => {
                    band(&base.config, d, coefs, x, base.temperature, &base.options, x)
                }
                (SweepAxis::Temperature, Some((d, coefs, th))) => {
                    let opts = DecoherenceOptions { hawking_temperature: Some(*th), ..base.options };
                    band(&base.config, d, coefs, base.gamma, x, &opts, x)
                }
                _ => {
                    let mut config = base.config.clone();
                    config.v_min = x;
                    config.v_max = 2.0 * config.uniform_velocity() - x;
                    config.validate()?;
                    let profile = RingProfile::new(config.clone())?;
                    let derived = derive_default(&config);
                    let coefs = band_coefficients(&profile, &derived)?;
                    band(&config, &derived, &coefs, base.gamma, base.temperature, &base.options, x)
                }
            }
        };
        match point() {
            Ok(r) => table.rows.push(r),
            Err(e) => table.errors.push((x, e.to_string())),
        }
    }
    Ok(table)
}
