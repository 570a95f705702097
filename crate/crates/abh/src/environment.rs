//! Ohmic bath: spectral density, noise and dissipation kernels, and the
//! conversion from the measured force-noise level γ to the effective
//! coupling γ̃.
//!
//! Kernels are local in space. The functions here return only the time
//! dependent coefficient; the spatial δ(x − x') is implicit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ConfigDoc, DerivedParams, PhysicalConfig};
use crate::specfun::{integrate, integrate_oscillatory, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutoffShape {
    /// f(ν) = e^{−ν/Λ}
    Exponential,
    /// f(ν) = 1/(1 + (ν/Λ)²)
    Lorentzian,
}

impl CutoffShape {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(CutoffShape::Exponential),
            "lorentzian" | "lorentz" => Ok(CutoffShape::Lorentzian),
            other => Err(Error::config(
                "env_cutoff_shape",
                format!("expected `exponential` or `lorentzian`, got `{other}`"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CutoffShape::Exponential => "exponential",
            CutoffShape::Lorentzian => "lorentzian",
        }
    }

    pub fn eval(self, nu: f64, cutoff: f64) -> f64 {
        let r = nu / cutoff;
        match self {
            CutoffShape::Exponential => (-r).exp(),
            CutoffShape::Lorentzian => 1.0 / (1.0 + r * r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentSpec {
    /// γ̃, dimensionless.
    pub coupling_eff: f64,
    /// Λ.
    pub cutoff: f64,
    pub cutoff_shape: CutoffShape,
    /// T₀; zero means the vacuum bath.
    pub bath_temperature: f64,
    pub hbar: f64,
    pub k_boltzmann: f64,
}

impl EnvironmentSpec {
    /// Vacuum bath in natural units.
    pub fn new(coupling_eff: f64, cutoff: f64, cutoff_shape: CutoffShape) -> Result<Self> {
        let s = EnvironmentSpec {
            coupling_eff,
            cutoff,
            cutoff_shape,
            bath_temperature: 0.0,
            hbar: 1.0,
            k_boltzmann: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_temperature(mut self, t0: f64) -> Result<Self> {
        self.bath_temperature = t0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling_eff >= 0.0) || !self.coupling_eff.is_finite() {
            return Err(Error::config("env_coupling_eff", "must be finite and ≥ 0"));
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(Error::config("env_cutoff", "must be finite and > 0"));
        }
        if !(self.bath_temperature >= 0.0) || !self.bath_temperature.is_finite() {
            return Err(Error::config("env_temperature", "must be finite and ≥ 0"));
        }
        if !(self.hbar > 0.0) || !(self.k_boltzmann > 0.0) {
            return Err(Error::config("hbar", "ħ and k_B must be positive"));
        }
        Ok(())
    }

    /// β = 1/(k_B T₀); infinite for the vacuum bath.
    pub fn beta(&self) -> f64 {
        if self.bath_temperature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (self.k_boltzmann * self.bath_temperature)
        }
    }

    /// Reads `env_*` keys. The coupling is either given directly
    /// (`env_coupling_eff`) or as the noise level `env_gamma`, converted with
    /// [`effective_coupling`]. Λ defaults to 1/τ.
    pub fn from_doc(doc: &ConfigDoc, config: &PhysicalConfig, derived: &DerivedParams) -> Result<Self> {
        let coupling_eff = match (doc.get_f64("env_coupling_eff")?, doc.get_f64("env_gamma")?) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "env_gamma",
                    "give either env_gamma or env_coupling_eff, not both",
                ))
            }
            (Some(g), None) => g,
            (None, Some(g)) => {
                if !(g >= 0.0) {
                    return Err(Error::config("env_gamma", "must be ≥ 0"));
                }
                effective_coupling(g, config, derived)
            }
            (None, None) => 0.0,
        };
        let cutoff_shape = match doc.get_str("env_cutoff_shape") {
            Some(s) => CutoffShape::parse(s)?,
            None => CutoffShape::Lorentzian,
        };
        let s = EnvironmentSpec {
            coupling_eff,
            cutoff: doc.f64_or("env_cutoff", 1.0 / derived.tau)?,
            cutoff_shape,
            bath_temperature: doc.f64_or("env_temperature", 0.0)?,
            hbar: config.hbar,
            k_boltzmann: config.k_boltzmann,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_doc_string(&self) -> String {
        format!(
            "env_coupling_eff = {:e}\nenv_cutoff = {:e}\nenv_cutoff_shape = {}\nenv_temperature = {:e}\n",
            self.coupling_eff,
            self.cutoff,
            self.cutoff_shape.name(),
            self.bath_temperature
        )
    }
}

/// One kernel value at a time lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSample {
    pub lag: f64,
    pub value: f64,
}

/// J(ν) = γ̃² ν f(ν).
pub fn spectral_density(nu: f64, spec: &EnvironmentSpec) -> Result<f64> {
    if !(nu >= 0.0) {
        return Err(Error::Domain(format!("spectral density needs ν ≥ 0, got {nu}")));
    }
    Ok(spec.coupling_eff.powi(2) * nu * spec.cutoff_shape.eval(nu, spec.cutoff))
}

/// ν coth(βħν/2), finite at ν = 0. `beta_hbar = ∞` gives ν.
pub(crate) fn nu_coth(nu: f64, beta_hbar: f64) -> f64 {
    if beta_hbar.is_infinite() {
        return nu;
    }
    let x = 0.5 * beta_hbar * nu;
    if x.abs() < 1e-6 {
        // ν coth x = (2/βħ)(1 + x²/3 + ...)
        (2.0 / beta_hbar) * (1.0 + x * x / 3.0)
    } else {
        nu / x.tanh()
    }
}

const KERNEL_TOL: QuadOptions = QuadOptions {
    abs_tol: 1e-12,
    rel_tol: 1e-8,
    max_subdivisions: 4000,
};

/// ∫₀^∞ g(ν) w(ν l) dν where w is cos or sin; oscillatory summation for l ≠ 0.
fn kernel_integral<G: Fn(f64) -> f64>(g: G, lag: f64, sine: bool) -> Result<f64> {
    let l = lag.abs();
    let opts = QuadOptions {
        abs_tol: KERNEL_TOL.abs_tol / 10.0,
        ..KERNEL_TOL
    };
    let h = |nu: f64| {
        let w = if sine { (nu * l).sin() } else { (nu * l).cos() };
        g(nu) * w
    };
    let r = if l == 0.0 {
        integrate(h, 0.0, f64::INFINITY, &opts)?
    } else {
        integrate_oscillatory(h, 0.0, std::f64::consts::PI / l, &[], &opts)?
    };
    Ok(r.value)
}

/// N(lag) = ½ ∫₀^∞ J(ν) coth(βħν/2) cos(ν lag) dν.
///
/// The Lorentzian kernel diverges at lag 0 (the integrand decays as 1/ν),
/// which is reported as a domain error.
pub fn noise_kernel(lag: f64, spec: &EnvironmentSpec) -> Result<f64> {
    if !lag.is_finite() {
        return Err(Error::Domain(format!("lag must be finite, got {lag}")));
    }
    if lag == 0.0 && spec.cutoff_shape == CutoffShape::Lorentzian {
        return Err(Error::Domain(
            "Lorentzian noise kernel diverges at zero lag".into(),
        ));
    }
    let bh = spec.beta() * spec.hbar;
    let (shape, cutoff) = (spec.cutoff_shape, spec.cutoff);
    let g2 = spec.coupling_eff.powi(2);
    if g2 == 0.0 {
        return Ok(0.0);
    }
    let v = kernel_integral(|nu| nu_coth(nu, bh) * shape.eval(nu, cutoff), lag, false)?;
    Ok(0.5 * g2 * v)
}

/// D(lag) = Θ(lag) ∫₀^∞ J(ν) sin(ν lag) dν.
///
/// Zero for lag ≤ 0. For the Lorentzian shape the limit lag → 0⁺ is
/// γ̃²Λ²π/2, not zero: the kernel jumps at the origin.
pub fn dissipation_kernel(lag: f64, spec: &EnvironmentSpec) -> Result<f64> {
    if !lag.is_finite() {
        return Err(Error::Domain(format!("lag must be finite, got {lag}")));
    }
    let g2 = spec.coupling_eff.powi(2);
    if lag <= 0.0 || g2 == 0.0 {
        return Ok(0.0);
    }
    let (shape, cutoff) = (spec.cutoff_shape, spec.cutoff);
    Ok(g2 * kernel_integral(|nu| nu * shape.eval(nu, cutoff), lag, true)?)
}

pub fn noise_samples(lags: &[f64], spec: &EnvironmentSpec) -> Result<Vec<KernelSample>> {
    lags.iter()
        .map(|&lag| Ok(KernelSample { lag, value: noise_kernel(lag, spec)? }))
        .collect()
}

pub fn dissipation_samples(lags: &[f64], spec: &EnvironmentSpec) -> Result<Vec<KernelSample>> {
    lags.iter()
        .map(|&lag| Ok(KernelSample { lag, value: dissipation_kernel(lag, spec)? }))
        .collect()
}

/// γ̃ = γ √(2ρ/ħ) Δv.
pub fn effective_coupling(gamma: f64, config: &PhysicalConfig, derived: &DerivedParams) -> f64 {
    gamma * (2.0 * derived.rho / config.hbar).sqrt() * derived.delta_v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_default;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn env(g: f64, l: f64, s: CutoffShape) -> EnvironmentSpec {
        EnvironmentSpec::new(g, l, s).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        for s in [CutoffShape::Exponential, CutoffShape::Lorentzian] {
            assert_eq!(spectral_density(0.0, &env(0.7, 3.0, s)).unwrap(), 0.0);
        }
        let e = env(0.7, 3.0, CutoffShape::Exponential);
        assert_relative_eq!(spectral_density(3.0, &e).unwrap(), 0.49 * 3.0 / 1f64.exp(), max_relative = 1e-15);
        let total = integrate(|n| spectral_density(n, &e).unwrap(), 0.0, f64::INFINITY, &QuadOptions::relative(1e-12))
            .unwrap();
        assert_relative_eq!(total.value, 0.49 * 9.0, max_relative = 1e-10);
        assert!(spectral_density(-1.0, &e).is_err());
    }

    #[test]
    fn vacuum_noise_exponential_closed_form() {
        let (g, l) = (0.8, 4.0);
        let e = env(g, l, CutoffShape::Exponential);
        assert_relative_eq!(noise_kernel(0.0, &e).unwrap(), 0.5 * g * g * l * l, max_relative = 1e-8);
        for lag in [0.1, 0.37, 1.0, 2.5] {
            let x = (l * lag).powi(2);
            let exact = 0.5 * g * g * l * l * (1.0 - x) / (1.0 + x).powi(2);
            let n = noise_kernel(lag, &e).unwrap();
            assert!((n - exact).abs() <= 1e-12 + 1e-8 * exact.abs(), "{lag}: {n} vs {exact}");
            assert_eq!(n, noise_kernel(-lag, &e).unwrap());
        }
    }

    #[test]
    fn lorentzian_noise_matches_extended_precision() {
        let e = env(1.0, 10.0, CutoffShape::Lorentzian);
        let n = noise_kernel(1.0, &e).unwrap();
        assert_relative_eq!(n, -0.539_592_163_340_567_4, max_relative = 1e-8);
        assert!(noise_kernel(0.0, &e).is_err());
    }

    #[test]
    fn thermal_noise_matches_extended_precision() {
        // βħ = 2 with ħ = k_B = 1 means T₀ = 0.5
        let e = env(1.0, 3.0, CutoffShape::Exponential).with_temperature(0.5).unwrap();
        assert_relative_eq!(noise_kernel(0.0, &e).unwrap(), 4.829_628_273_087_414_7, max_relative = 1e-8);
        assert_relative_eq!(noise_kernel(0.7, &e).unwrap(), -0.243_139_149_279_449_67, max_relative = 1e-8);
        let e = env(1.0, 4.0, CutoffShape::Lorentzian).with_temperature(1.0 / 1.5).unwrap();
        assert_relative_eq!(noise_kernel(1.3, &e).unwrap(), -0.094_346_661_726_713_82, max_relative = 1e-8);
    }

    #[test]
    fn dissipation_kernel_values() {
        let e = env(1.0, 5.0, CutoffShape::Exponential);
        assert_eq!(dissipation_kernel(-1.0, &e).unwrap(), 0.0);
        assert_eq!(dissipation_kernel(0.0, &e).unwrap(), 0.0);
        assert!(dissipation_kernel(1e-9, &e).unwrap().abs() < 1e-6);
        assert_relative_eq!(dissipation_kernel(0.5, &e).unwrap(), 2.378_121_284_185_493_5, max_relative = 1e-8);
        let e = env(1.0, 4.0, CutoffShape::Lorentzian);
        let exact = 16.0 * PI / 2.0 * (-4.0f64 * 1.3).exp();
        assert_relative_eq!(dissipation_kernel(1.3, &e).unwrap(), exact, max_relative = 1e-7);
    }

    #[test]
    fn effective_coupling_is_linear() {
        let c = crate::params::PhysicalConfig::default();
        let d = derive_default(&c);
        assert_eq!(effective_coupling(0.0, &c, &d), 0.0);
        let a = effective_coupling(5e-6, &c, &d);
        assert_relative_eq!(effective_coupling(1e-5, &c, &d), 2.0 * a, max_relative = 1e-15);
        let by_hand = 5e-6 * (2.0 * d.rho / c.hbar).sqrt() * (c.v_max - c.v_min);
        assert_relative_eq!(a, by_hand, max_relative = 1e-15);
    }

    #[test]
    fn doc_round_trip_and_defaults() {
        let c = crate::params::PhysicalConfig::default();
        let d = derive_default(&c);
        let doc = ConfigDoc::parse("env_gamma = 5e-6\n").unwrap();
        let e = EnvironmentSpec::from_doc(&doc, &c, &d).unwrap();
        assert_relative_eq!(e.cutoff, 1.0 / d.tau, max_relative = 1e-15);
        assert_eq!(e.cutoff_shape, CutoffShape::Lorentzian);
        let back = EnvironmentSpec::from_doc(&ConfigDoc::parse(&e.to_doc_string()).unwrap(), &c, &d).unwrap();
        assert_relative_eq!(back.coupling_eff, e.coupling_eff, max_relative = 1e-15);
        let bad = ConfigDoc::parse("env_gamma = 1\nenv_coupling_eff = 1\n").unwrap();
        assert!(EnvironmentSpec::from_doc(&bad, &c, &d).is_err());
        let bad = ConfigDoc::parse("env_cutoff_shape = gaussian\n").unwrap();
        assert!(EnvironmentSpec::from_doc(&bad, &c, &d).is_err());
    }
}
