//! Physical parameters, the key-value configuration format and derived quantities.
//!
//! The configuration format is one `key = value` pair per line. `#` starts a
//! comment, blank lines are ignored and numbers may use scientific notation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Collapse time as a fraction of the rotation period.
pub const COLLAPSE_FRACTION: f64 = 0.05;

/// Parsed `key = value` document, keys kept in sorted order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = k.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            if entries
                .insert(key.clone(), (i + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(ConfigDoc { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Numeric value; `inf` is accepted, NaN is not.
    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        let Some((line, v)) = self.entries.get(key) else {
            return Ok(None);
        };
        match v.parse::<f64>() {
            Ok(x) if !x.is_nan() => Ok(Some(x)),
            _ => Err(Error::Parse {
                line: *line,
                msg: format!("`{key}`: `{v}` is not a number"),
            }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::config(key, "required field missing"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }
}

/// Ring and field parameters plus the unit constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalConfig {
    pub n_ions: u64,
    pub period: f64,
    pub radius: f64,
    pub ion_mass: f64,
    pub ion_charge: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta_h: f64,
    pub hbar: f64,
    pub k_boltzmann: f64,
}

impl Default for PhysicalConfig {
    /// Default ring. These numbers are working assumptions, not measured data:
    ///
    /// - N = 1000, T = 1, R = 1, θ_H = π/2, γ₁ = γ₂ = 0.3;
    /// - v_min = 0.8333·2π/T with v_max placed symmetrically about 2π/T, so the
    ///   horizon sits exactly at θ_H;
    /// - Q²/(mR³) is fixed so that the uniform flow 2π/T is exactly sonic;
    /// - m is fixed so that the shortest decoherence time of the band at
    ///   γ = 5·10⁻⁶ equals the collapse time τ.
    fn default() -> Self {
        let period = 1.0;
        let n_ions = 1000u64;
        let radius = 1.0;
        let ion_mass = DEFAULT_ION_MASS;
        let w = 2.0 * PI / period;
        let ion_charge = sonic_charge(n_ions, period, radius, ion_mass);
        PhysicalConfig {
            n_ions,
            period,
            radius,
            ion_mass,
            ion_charge,
            v_min: DEFAULT_VMIN_FRACTION * w,
            v_max: (2.0 - DEFAULT_VMIN_FRACTION) * w,
            gamma1: 0.3,
            gamma2: 0.3,
            theta_h: PI / 2.0,
            hbar: 1.0,
            k_boltzmann: 1.0,
        }
    }
}

/// v_min of the default ring in units of 2π/T.
pub const DEFAULT_VMIN_FRACTION: f64 = 0.8333;
/// Ion mass of the default ring (see [`PhysicalConfig::default`]).
pub const DEFAULT_ION_MASS: f64 = 8815.15;

/// Charge that makes the uniform flow 2π/T sonic: c(2π/T) = 2π/T.
pub fn sonic_charge(n_ions: u64, period: f64, radius: f64, ion_mass: f64) -> f64 {
    // c² = 2 n Q²/(m R³), n = N/(v T); c = v = 2π/T gives Q²/(mR³) = v³T/(2N)
    let w = 2.0 * PI / period;
    (w.powi(3) * period / (2.0 * n_ions as f64) * ion_mass * radius.powi(3)).sqrt()
}

impl PhysicalConfig {
    pub fn from_doc(doc: &ConfigDoc) -> Result<Self> {
        let d = PhysicalConfig::default();
        let n = doc.require_f64("n_ions")?;
        if !(n >= 2.0 && n.fract() == 0.0 && n <= 1e12) {
            return Err(Error::config("n_ions", format!("expected an integer ≥ 2, got {n}")));
        }
        let period = doc.require_f64("period")?;
        let ion_mass = doc.f64_or("ion_mass", d.ion_mass)?;
        let radius = doc.f64_or("radius", d.radius)?;
        let default_q = if period > 0.0 && ion_mass > 0.0 && radius > 0.0 {
            sonic_charge(n as u64, period, radius, ion_mass)
        } else {
            f64::NAN
        };
        let cfg = PhysicalConfig {
            n_ions: n as u64,
            period,
            radius,
            ion_mass,
            ion_charge: doc.f64_or("ion_charge", default_q)?,
            v_min: doc.require_f64("v_min")?,
            v_max: doc.require_f64("v_max")?,
            gamma1: doc.f64_or("gamma1", d.gamma1)?,
            gamma2: doc.f64_or("gamma2", d.gamma2)?,
            theta_h: doc.f64_or("theta_h", d.theta_h)?,
            hbar: doc.f64_or("hbar", 1.0)?,
            k_boltzmann: doc.f64_or("k_boltzmann", 1.0)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let pos = |field: &str, x: f64| -> Result<()> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {x}")))
            }
        };
        if self.n_ions < 2 {
            return Err(Error::config("n_ions", "expected at least 2 ions"));
        }
        pos("period", self.period)?;
        pos("radius", self.radius)?;
        pos("ion_mass", self.ion_mass)?;
        pos("ion_charge", self.ion_charge)?;
        pos("v_min", self.v_min)?;
        pos("v_max", self.v_max)?;
        pos("hbar", self.hbar)?;
        pos("k_boltzmann", self.k_boltzmann)?;
        pos("gamma1", self.gamma1)?;
        pos("gamma2", self.gamma2)?;
        if self.v_min > self.v_max {
            return Err(Error::config(
                "v_min",
                format!("profile extrema inverted (v_min = {} > v_max = {})", self.v_min, self.v_max),
            ));
        }
        let w = 2.0 * PI / self.period;
        if !(self.v_min < w) {
            return Err(Error::config("v_min", format!("expected v_min < 2π/T = {w}, got {}", self.v_min)));
        }
        if !(self.v_max > w) {
            return Err(Error::config("v_max", format!("expected v_max > 2π/T = {w}, got {}", self.v_max)));
        }
        if !(self.theta_h > 0.0 && self.theta_h < 2.0 * PI) {
            return Err(Error::config("theta_h", format!("expected 0 < θ_H < 2π, got {}", self.theta_h)));
        }
        // segments [0, θ_H−γ₁], [θ_H±γ₁], plateau, [2π−θ_H±γ₂], [.., 2π]
        if self.gamma1 > self.theta_h {
            return Err(Error::config("gamma1", "transition region extends below θ = 0"));
        }
        if self.gamma2 > self.theta_h {
            return Err(Error::config("gamma2", "transition region extends beyond θ = 2π"));
        }
        if self.theta_h + self.gamma1 > 2.0 * PI - self.theta_h - self.gamma2 {
            return Err(Error::config(
                "theta_h",
                "transition regions overlap (need θ_H + γ₁ ≤ 2π − θ_H − γ₂)",
            ));
        }
        Ok(())
    }

    /// 2π/T, the uniform pre-collapse velocity.
    pub fn uniform_velocity(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Serialises back to the key-value format.
    pub fn to_doc_string(&self) -> String {
        format!(
            "n_ions = {}\nperiod = {:e}\nradius = {:e}\nion_mass = {:e}\nion_charge = {:e}\n\
             v_min = {:e}\nv_max = {:e}\ngamma1 = {:e}\ngamma2 = {:e}\ntheta_h = {:e}\n\
             hbar = {:e}\nk_boltzmann = {:e}\n",
            self.n_ions,
            self.period,
            self.radius,
            self.ion_mass,
            self.ion_charge,
            self.v_min,
            self.v_max,
            self.gamma1,
            self.gamma2,
            self.theta_h,
            self.hbar,
            self.k_boltzmann
        )
    }
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<PhysicalConfig> {
    PhysicalConfig::from_doc(&ConfigDoc::parse(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Mean ion separation 2π/N.
    pub delta: f64,
    /// Conformal factor m R² N/(v T) at the reference velocity.
    pub rho: f64,
    /// Collapse time 0.05·T.
    pub tau: f64,
    /// N/T.
    pub omega_max: f64,
    pub delta_v: f64,
    pub sigma_v: f64,
    /// Δv/(2a) with a = γ₁R, the half-width of the first transition region.
    pub kappa: f64,
}

/// Derived quantities; `reference_velocity` is usually 2π/T.
pub fn derive(config: &PhysicalConfig, reference_velocity: f64) -> Result<DerivedParams> {
    if !(reference_velocity > 0.0) {
        return Err(Error::Domain(format!(
            "reference velocity must be positive, got {reference_velocity}"
        )));
    }
    let n = config.n_ions as f64;
    let delta_v = config.v_max - config.v_min;
    let a = config.gamma1 * config.radius;
    Ok(DerivedParams {
        delta: 2.0 * PI / n,
        rho: config.ion_mass * config.radius.powi(2) * n / (reference_velocity * config.period),
        tau: COLLAPSE_FRACTION * config.period,
        omega_max: n / config.period,
        delta_v,
        sigma_v: config.v_max + config.v_min,
        kappa: delta_v / (2.0 * a),
    })
}

/// [`derive`] at the uniform velocity 2π/T.
pub fn derive_default(config: &PhysicalConfig) -> DerivedParams {
    derive(config, config.uniform_velocity()).expect("2π/T > 0")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(extra: &str) -> String {
        format!(
            "n_ions = 1000\nperiod = 1\nv_min = {}\nv_max = {}\n{extra}",
            0.9 * 2.0 * PI,
            1.1 * 2.0 * PI
        )
    }

    #[test]
    fn well_formed_document() {
        let c = load_config(&doc("# comment\n\nradius = 1.0 # trailing\n")).unwrap();
        assert_eq!(c.n_ions, 1000);
        assert_eq!(c.hbar, 1.0);
        assert_eq!(c.k_boltzmann, 1.0);
    }

    #[test]
    fn inverted_extrema() {
        let text = format!("n_ions = 1000\nperiod = 1\nv_min = {}\nv_max = {}\n", 7.0, 5.0);
        let e = load_config(&text).unwrap_err();
        assert!(e.to_string().contains("profile extrema inverted"), "{e}");
    }

    #[test]
    fn parse_errors_carry_line() {
        match load_config("n_ions = 1000\nperiod 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match load_config(&doc("hbar = abc\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_config("n_ions = 1000\n"), Err(Error::Config { .. })));
        assert!(matches!(load_config(&doc("period = 2\n")), Err(Error::Parse { .. })));
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let e = load_config(&doc("theta_h = 7\n")).unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "theta_h"));
        let e = load_config(&doc("gamma1 = -1\n")).unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "gamma1"));
        let e = load_config(&doc("theta_h = 3.0\ngamma1 = 0.5\ngamma2 = 0.5\n")).unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "theta_h"));
    }

    #[test]
    fn derived_values() {
        let c = load_config(&doc("")).unwrap();
        let d = derive_default(&c);
        assert_eq!(d.delta, 2.0 * PI / 1000.0);
        assert_eq!(d.tau, 0.05);
        assert_eq!(d.omega_max, 1000.0);
        assert!(derive(&c, 0.0).is_err());
    }

    #[test]
    fn kappa_from_line_parameters() {
        let c = PhysicalConfig {
            period: 1.0,
            v_min: 0.9,
            v_max: 1.1,
            gamma1: 1.0,
            radius: 1.0,
            ..PhysicalConfig::default()
        };
        let d = derive(&c, 1.0).unwrap();
        assert!((d.kappa - 0.1).abs() < 1e-15);
    }

    #[test]
    fn default_round_trips_through_text() {
        let c = PhysicalConfig::default();
        c.validate().unwrap();
        let back = load_config(&c.to_doc_string()).unwrap();
        assert_eq!(back, c);
        // uniform flow is sonic
        let w = c.uniform_velocity();
        let n = c.n_ions as f64 / (w * c.period);
        let cs = (2.0 * n * c.ion_charge.powi(2) / (c.ion_mass * c.radius.powi(3))).sqrt();
        assert!((cs / w - 1.0).abs() < 1e-13);
    }
}
