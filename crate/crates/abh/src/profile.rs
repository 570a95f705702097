//! Velocity profiles, collapse schedule, null coordinates and Hawking temperatures.
//!
//! Two backgrounds live here. The ring profile is piecewise linear in the
//! angle θ with a Gaussian collapse of its extrema; its sound speed follows
//! from the local ion density. The line profile is piecewise linear in x and
//! switched on with σ(t) = tanh(t/τ); it works in units with c = 1.

use std::f64::consts::PI;

use serde::Serialize;

use crate::params::{ConfigDoc, PhysicalConfig};
use crate::specfun::{integrate, QuadOptions};
use crate::{Error, Result};

/// σ(t) = tanh(t/τ).
pub fn sigma(t: f64, tau: f64) -> f64 {
    (t / tau).tanh()
}

/// ∫₀ᵗ σ = τ ln cosh(t/τ), evaluated without overflow.
pub fn sigma_accumulated(t: f64, tau: f64) -> f64 {
    let u = (t / tau).abs();
    if u < 1.0 {
        // cosh² = 1 + sinh² keeps full relative accuracy as u → 0
        return tau * 0.5 * (u.sinh() * u.sinh()).ln_1p();
    }
    // ln cosh u = u + ln(1 + e^{-2u}) − ln 2
    tau * (u + (-2.0 * u).exp().ln_1p() - std::f64::consts::LN_2)
}

/// How v depends on θ inside one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum VelocityLaw {
    Min,
    Max,
    /// β + α (θ − center)/half_width, with `sign` = ±1.
    Ramp { center: f64, half_width: f64, sign: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub law: VelocityLaw,
}

/// Piecewise-linear ring profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingProfile {
    pub config: PhysicalConfig,
    segments: Vec<Segment>,
}

impl RingProfile {
    pub fn new(config: PhysicalConfig) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let two_pi = 2.0 * PI;
        let segments = vec![
            Segment {
                start: 0.0,
                end: c.theta_h - c.gamma1,
                law: VelocityLaw::Min,
            },
            Segment {
                start: c.theta_h - c.gamma1,
                end: c.theta_h + c.gamma1,
                law: VelocityLaw::Ramp {
                    center: c.theta_h,
                    half_width: c.gamma1,
                    sign: 1.0,
                },
            },
            Segment {
                start: c.theta_h + c.gamma1,
                end: two_pi - c.theta_h - c.gamma2,
                law: VelocityLaw::Max,
            },
            Segment {
                start: two_pi - c.theta_h - c.gamma2,
                end: two_pi - c.theta_h + c.gamma2,
                law: VelocityLaw::Ramp {
                    center: two_pi - c.theta_h,
                    half_width: c.gamma2,
                    sign: -1.0,
                },
            },
            Segment {
                start: two_pi - c.theta_h + c.gamma2,
                end: two_pi,
                law: VelocityLaw::Min,
            },
        ];
        Ok(RingProfile { config, segments })
    }

    /// Segments tiling [0, 2π); empty ones (zero width) are kept for bookkeeping.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment boundaries, where v has a derivative jump.
    pub fn kinks(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.start).collect()
    }

    /// (v_min(t), v_max(t)) under the Gaussian collapse law.
    pub fn extrema(&self, t: f64) -> (f64, f64) {
        let w = self.config.uniform_velocity();
        let tau = crate::params::COLLAPSE_FRACTION * self.config.period;
        let g = if t.is_infinite() { 0.0 } else { (-(t / tau).powi(2)).exp() };
        (
            self.config.v_min + (w - self.config.v_min) * g,
            self.config.v_max + (w - self.config.v_max) * g,
        )
    }

    fn eval_law(&self, law: VelocityLaw, theta: f64, t: f64) -> f64 {
        let (lo, hi) = self.extrema(t);
        match law {
            VelocityLaw::Min => lo,
            VelocityLaw::Max => hi,
            VelocityLaw::Ramp {
                center,
                half_width,
                sign,
            } => 0.5 * (hi + lo) + sign * 0.5 * (hi - lo) * (theta - center) / half_width,
        }
    }

    fn segment_of(&self, theta: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| theta >= s.start && theta < s.end)
            .unwrap_or(&self.segments[self.segments.len() - 1])
    }

    /// v(θ, t); θ is reduced to [0, 2π). `t = ∞` gives the asymptotic profile.
    pub fn velocity(&self, theta: f64, t: f64) -> f64 {
        let th = theta.rem_euclid(2.0 * PI);
        self.eval_law(self.segment_of(th).law, th, t)
    }

    /// K in c² = K/v, i.e. K = 2 N Q²/(m R³ T).
    pub fn sound_speed_constant(&self) -> f64 {
        let c = &self.config;
        2.0 * c.n_ions as f64 * c.ion_charge.powi(2) / (c.ion_mass * c.radius.powi(3) * c.period)
    }

    /// c(θ) = √(2 n Q²/(m R³)) with n = N/(v T).
    pub fn sound_speed(&self, theta: f64, t: f64) -> f64 {
        (self.sound_speed_constant() / self.velocity(theta, t)).sqrt()
    }

    /// Sonic points v = c at time t, sorted.
    pub fn horizons(&self, t: f64) -> Vec<f64> {
        let f = |th: f64| self.velocity(th, t) - self.sound_speed(th, t);
        let mut out = Vec::new();
        for s in &self.segments {
            if s.end <= s.start {
                continue;
            }
            // v − c is monotone on each segment, so a sign change brackets one root
            let (fa, fb) = (f(s.start), f(s.end - 1e-15 * s.end.max(1.0)));
            if fa == 0.0 {
                out.push(s.start);
            } else if fa * fb < 0.0 {
                if let Ok(r) = bisect(&f, s.start, s.end - 1e-15 * s.end.max(1.0), 1e-12) {
                    out.push(r);
                }
            }
        }
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        out
    }

    pub fn to_doc_string(&self) -> String {
        self.config.to_doc_string()
    }
}

/// Bisection for a sign change of `f` on [a, b] down to `tol` in x.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::Numeric(format!("root not bracketed on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol || m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Region of the line profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// x < −a
    Inner,
    /// |x| ≤ a
    Transition,
    /// x > a
    Outer,
}

/// v(x,t) = σ(t)·{v_min, 1 + κx, v_max} on x < −a, |x| ≤ a, x > a, with c = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineProfile {
    pub a: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub tau: f64,
    pub kappa: f64,
}

impl LineProfile {
    /// Continuity at ±a forces v_min = 1 − κa and v_max = 1 + κa.
    pub fn new(v_min: f64, v_max: f64, a: f64, tau: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config("a", format!("half-width must be positive, got {a}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::config("tau", format!("must be positive, got {tau}")));
        }
        if v_min > v_max {
            return Err(Error::config("v_min", "profile extrema inverted"));
        }
        if ((v_min + v_max) - 2.0).abs() > 1e-12 {
            return Err(Error::config(
                "v_max",
                format!("continuity needs v_min + v_max = 2 (sound speed 1), got {}", v_min + v_max),
            ));
        }
        Ok(LineProfile {
            a,
            v_min,
            v_max,
            tau,
            kappa: (v_max - v_min) / (2.0 * a),
        })
    }

    /// The configuration used throughout for the collapse figures:
    /// v_max = 1.1, v_min = 0.9, a = 1, τ = 1.
    pub fn reference() -> Self {
        LineProfile::new(0.9, 1.1, 1.0, 1.0).expect("valid")
    }

    pub fn from_doc(doc: &ConfigDoc) -> Result<Self> {
        let r = LineProfile::reference();
        LineProfile::new(
            doc.f64_or("line_v_min", r.v_min)?,
            doc.f64_or("line_v_max", r.v_max)?,
            doc.f64_or("line_a", r.a)?,
            doc.f64_or("line_tau", r.tau)?,
        )
    }

    pub fn to_doc_string(&self) -> String {
        format!(
            "line_v_min = {:e}\nline_v_max = {:e}\nline_a = {:e}\nline_tau = {:e}\n",
            self.v_min, self.v_max, self.a, self.tau
        )
    }

    pub fn region(&self, x: f64) -> Region {
        if x < -self.a {
            Region::Inner
        } else if x > self.a {
            Region::Outer
        } else {
            Region::Transition
        }
    }

    /// Spatial factor v(x, t)/σ(t).
    pub fn shape(&self, x: f64) -> f64 {
        match self.region(x) {
            Region::Inner => self.v_min,
            Region::Outer => self.v_max,
            // the interface values are pinned so that v(±a) is exact
            Region::Transition if x == self.a => self.v_max,
            Region::Transition if x == -self.a => self.v_min,
            Region::Transition => 1.0 + self.kappa * x,
        }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        sigma(t, self.tau)
    }

    /// f(t) = ∫₀ᵗ σ.
    pub fn f(&self, t: f64) -> f64 {
        sigma_accumulated(t, self.tau)
    }

    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        self.sigma(t) * self.shape(x)
    }

    /// Δv = v_max − v_min.
    pub fn delta_v(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// Σv = v_max + v_min.
    pub fn sigma_v(&self) -> f64 {
        self.v_max + self.v_min
    }

    pub fn hawking_temperature(&self) -> f64 {
        hawking_temperature_line(self.v_max, self.v_min, self.a)
    }
}

/// T_H = |v_max − v_min|/(4π a), natural units.
pub fn hawking_temperature_line(v_max: f64, v_min: f64, a: f64) -> f64 {
    (v_max - v_min).abs() / (2.0 * PI * 2.0 * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NullBranch {
    /// x_u = ∫ dx/(c + v)
    U,
    /// x_v = ∫ dx/(c − v), singular where v = c
    V,
}

/// x_{u/v}(x) = ∫₀ˣ dx'/(c ± v) by quadrature.
///
/// For the v branch the integrand is singular at each horizon; the interval
/// [h − ε, h + ε] around every horizon h is removed from the path. With
/// `epsilon = None` a horizon on the path is an error. Points in `kinks`
/// (derivative discontinuities of v, e.g. segment boundaries) split the
/// path; adaptive error estimates are unreliable across them.
pub fn null_coordinate<V, C>(
    x: f64,
    branch: NullBranch,
    v: V,
    c: C,
    horizons: &[f64],
    epsilon: Option<f64>,
    kinks: &[f64],
) -> Result<f64>
where
    V: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
{
    let (lo, hi, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
    let integrand = |y: f64| match branch {
        NullBranch::U => 1.0 / (c(y) + v(y)),
        NullBranch::V => 1.0 / (c(y) - v(y)),
    };
    let opts = QuadOptions::mixed(1e-13, 1e-12);
    let mut pieces = vec![(lo, hi)];
    if branch == NullBranch::V {
        for &h in horizons {
            let eps = match epsilon {
                Some(e) if e > 0.0 => e,
                _ => {
                    if h >= lo && h <= hi {
                        return Err(Error::Domain(format!(
                            "x_v integrand is singular at the horizon θ = {h}; supply an exclusion half-width"
                        )));
                    }
                    continue;
                }
            };
            let mut next = Vec::new();
            for (a, b) in pieces {
                let (ea, eb) = (h - eps, h + eps);
                if eb <= a || ea >= b {
                    next.push((a, b));
                    continue;
                }
                if ea > a {
                    next.push((a, ea));
                }
                if eb < b {
                    next.push((eb, b));
                }
            }
            pieces = next;
        }
    }
    let mut total = 0.0;
    for (a, b) in pieces {
        let mut cuts: Vec<f64> = kinks.iter().copied().filter(|&k| k > a && k < b).collect();
        cuts.sort_by(f64::total_cmp);
        let mut left = a;
        for k in cuts.into_iter().chain(std::iter::once(b)) {
            total += integrate(integrand, left, k, &opts)?.value;
            left = k;
        }
    }
    Ok(sign * total)
}

/// Closed-form null coordinates on the ring.
///
/// With c² = K/v, ∫ dv/(c ± v) = ±(2/3) ln|√K ± v^{3/2}| on each linear ramp,
/// so x_u and x_v are exact up to rounding. Used by the V-coefficients,
/// which need x(θ) at many points.
#[derive(Debug, Clone)]
pub struct RingNullMap {
    profile: RingProfile,
    t: f64,
    branch: NullBranch,
    epsilon: f64,
    horizons: Vec<f64>,
    // cumulative value at the start of each piece
    pieces: Vec<(f64, f64, f64)>,
}

impl RingNullMap {
    pub fn new(profile: &RingProfile, t: f64, branch: NullBranch, epsilon: f64) -> Result<Self> {
        let horizons = profile.horizons(t);
        if branch == NullBranch::V && !(epsilon > 0.0) && !horizons.is_empty() {
            return Err(Error::Domain(format!(
                "x_v integrand is singular at the horizon θ = {}; supply an exclusion half-width",
                horizons[0]
            )));
        }
        let mut map = RingNullMap {
            profile: profile.clone(),
            t,
            branch,
            epsilon,
            horizons,
            pieces: Vec::new(),
        };
        let mut acc = 0.0;
        let mut pieces = Vec::new();
        for (a, b) in map.path_pieces(0.0, 2.0 * PI) {
            pieces.push((a, b, acc));
            acc += map.exact_piece(a, b);
        }
        pieces.push((2.0 * PI, 2.0 * PI, acc));
        map.pieces = pieces;
        Ok(map)
    }

    fn path_pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = vec![lo, hi];
        for s in self.profile.segments() {
            for x in [s.start, s.end] {
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut pieces: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect();
        if self.branch == NullBranch::V {
            for &h in &self.horizons {
                let (ea, eb) = (h - self.epsilon, h + self.epsilon);
                let mut next = Vec::new();
                for (a, b) in pieces {
                    if eb <= a || ea >= b {
                        next.push((a, b));
                        continue;
                    }
                    if ea > a {
                        next.push((a, ea));
                    }
                    if eb < b {
                        next.push((eb, b));
                    }
                }
                pieces = next;
            }
        }
        pieces
    }

    /// ∫ₐᵇ dθ/(c ± v) on a piece lying inside one segment.
    fn exact_piece(&self, a: f64, b: f64) -> f64 {
        let p = &self.profile;
        let k = p.sound_speed_constant();
        let sk = k.sqrt();
        let (va, vb) = (p.velocity(a, self.t), p.velocity(0.5 * (a + b), self.t));
        let vb_end = {
            // value at b from the same segment's law (b may be the next segment's start)
            let mid = 0.5 * (a + b);
            let seg = p.segment_of(mid);
            p.eval_law(seg.law, b, self.t)
        };
        let slope = (vb_end - va) / (b - a);
        let sgn = match self.branch {
            NullBranch::U => 1.0,
            NullBranch::V => -1.0,
        };
        if slope.abs() < 1e-12 * va.abs().max(1.0) {
            let c = (k / vb).sqrt();
            return (b - a) / (c + sgn * vb);
        }
        let prim = |v: f64| -> f64 {
            let w = v.powf(1.5);
            match self.branch {
                NullBranch::U => (2.0 / 3.0) * (sk + w).ln(),
                NullBranch::V => -(2.0 / 3.0) * (sk - w).abs().ln(),
            }
        };
        (prim(vb_end) - prim(va)) / slope
    }

    /// x(θ) measured from θ = 0; θ inside an excluded window maps to the value
    /// at the window's lower edge.
    pub fn eval(&self, theta: f64) -> f64 {
        let th = theta.clamp(0.0, 2.0 * PI);
        let n = self.pieces.len();
        // last piece whose start ≤ θ
        let idx = match self.pieces[..n - 1].binary_search_by(|p| p.0.total_cmp(&th)) {
            Ok(i) => i,
            Err(0) => return 0.0,
            Err(i) => i - 1,
        };
        let (a, b, acc) = self.pieces[idx];
        acc + self.exact_piece(a, th.min(b))
    }

    /// x over the whole circumference.
    pub fn circumference(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].2
    }

    pub fn horizons(&self) -> &[f64] {
        &self.horizons
    }
}

/// Hawking temperature at the sonic point of `v − c` inside `bracket`:
/// T_H = ħ/(4π v k_B) · d(v² − c²)/dθ at the horizon.
///
/// The horizon is located by bisection to 10⁻¹²; the derivative is a central
/// difference refined by Richardson extrapolation. `step` must stay inside
/// the smooth piece around the horizon.
pub fn hawking_temperature<V, C>(
    v: V,
    c: C,
    bracket: (f64, f64),
    step: f64,
    hbar: f64,
    k_b: f64,
) -> Result<(f64, f64)>
where
    V: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
{
    let g = |x: f64| v(x) - c(x);
    let h = bisect(&g, bracket.0, bracket.1, 1e-12)
        .map_err(|_| Error::Domain(format!("no horizon in [{}, {}]", bracket.0, bracket.1)))?;
    let f = |x: f64| v(x).powi(2) - c(x).powi(2);
    let d = richardson_derivative(&f, h, step);
    Ok((h, hbar * d / (4.0 * PI * v(h) * k_b)))
}

/// Central differences at h, h/2, h/4, h/8 combined by Richardson's scheme.
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    const LEVELS: usize = 4;
    let mut table = [[0.0; LEVELS]; LEVELS];
    let mut step = h;
    for i in 0..LEVELS {
        table[i][0] = (f(x + step) - f(x - step)) / (2.0 * step);
        let mut p = 4.0;
        for j in 1..=i {
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (p - 1.0);
            p *= 4.0;
        }
        step *= 0.5;
    }
    table[LEVELS - 1][LEVELS - 1]
}

/// Hawking temperature of the asymptotic ring at each horizon (signed: the
/// inner horizon has the opposite slope).
pub fn hawking_temperatures_ring(profile: &RingProfile) -> Result<Vec<(f64, f64)>> {
    let t = f64::INFINITY;
    let hs = profile.horizons(t);
    if hs.is_empty() {
        return Err(Error::Domain("ring profile has no horizon".into()));
    }
    let c = &profile.config;
    let mut out = Vec::new();
    for h in hs {
        let seg = profile.segment_of(h);
        let room = (h - seg.start).min(seg.end - h);
        let step = if room > 1e-6 { 0.5 * room } else { 0.25 * c.gamma1.min(c.gamma2) };
        let (pos, th) = hawking_temperature(
            |x| profile.velocity(x, t),
            |x| profile.sound_speed(x, t),
            (h - 1e-9, h + 1e-9),
            step,
            c.hbar,
            c.k_boltzmann,
        )?;
        out.push((pos, th));
    }
    Ok(out)
}

/// |T_H| at the first (black-hole) horizon of the asymptotic ring.
pub fn hawking_temperature_ring(profile: &RingProfile) -> Result<f64> {
    Ok(hawking_temperatures_ring(profile)?[0].1.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ring() -> RingProfile {
        RingProfile::new(PhysicalConfig::default()).unwrap()
    }

    #[test]
    fn ring_velocity_branches() {
        let p = ring();
        let w = p.config.uniform_velocity();
        for th in [0.0, 1.0, 2.0, 3.0, 5.0, 6.2] {
            assert_relative_eq!(p.velocity(th, 0.0), w, max_relative = 1e-15);
        }
        let plateau = 0.5 * (p.config.theta_h + p.config.gamma1 + 2.0 * PI - p.config.theta_h - p.config.gamma2);
        assert_eq!(p.velocity(plateau, 100.0), p.config.v_max);
        let beta = 0.5 * (p.config.v_max + p.config.v_min);
        assert_relative_eq!(p.velocity(p.config.theta_h, 100.0), beta, max_relative = 1e-15);
    }

    #[test]
    fn ring_is_continuous_and_periodic() {
        let p = ring();
        for t in [0.0, 0.02, 0.05, 1.0] {
            for s in p.segments() {
                let l = p.velocity(s.end - 1e-12, t);
                let r = p.velocity(s.end + 1e-12, t);
                assert!((l - r).abs() < 1e-9, "jump at {}: {l} vs {r}", s.end);
            }
            assert!((p.velocity(0.0, t) - p.velocity(2.0 * PI - 1e-14, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_horizons_at_theta_h() {
        let p = ring();
        let hs = p.horizons(f64::INFINITY);
        assert_eq!(hs.len(), 2);
        assert!((hs[0] - p.config.theta_h).abs() < 1e-10);
        assert!((hs[1] - (2.0 * PI - p.config.theta_h)).abs() < 1e-10);
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0.0, 1.0), 0.0);
        assert!((sigma(10.0, 1.0) - 1.0).abs() < 1e-8);
        let e2 = 1f64.exp().powi(2);
        assert_relative_eq!(sigma(1.0, 1.0), (e2 - 1.0) / (e2 + 1.0), max_relative = 1e-15);
    }

    #[test]
    fn sigma_accumulated_values() {
        assert_eq!(sigma_accumulated(0.0, 1.0), 0.0);
        assert!((sigma_accumulated(100.0, 1.0) - (100.0 - 2f64.ln())).abs() < 1e-13);
        assert!((sigma_accumulated(40.0, 2.0) - (40.0 - 2.0 * 2f64.ln())).abs() < 1e-6);
        let q = integrate(|s| sigma(s, 0.7), 0.0, 3.0, &QuadOptions::absolute(1e-14)).unwrap();
        assert_relative_eq!(sigma_accumulated(3.0, 0.7), q.value, max_relative = 1e-13);
    }

    #[test]
    fn sigma_accumulated_derivative_is_sigma() {
        let tau = 1.3;
        for i in 1..=100 {
            let t = 0.05 * i as f64;
            let h = 1e-5;
            let d = (sigma_accumulated(t + h, tau) - sigma_accumulated(t - h, tau)) / (2.0 * h);
            assert_relative_eq!(d, sigma(t, tau), max_relative = 1e-6);
        }
    }

    #[test]
    fn line_profile_continuity() {
        let p = LineProfile::reference();
        assert!((p.kappa - 0.1).abs() < 1e-15);
        for t in [0.0, 0.5, 3.0] {
            let s = p.sigma(t);
            assert_eq!(p.velocity(-p.a, t), s * p.v_min);
            assert_eq!(p.velocity(p.a, t), s * p.v_max);
            assert!((p.velocity(-p.a - 1e-12, t) - p.velocity(-p.a, t)).abs() < 1e-12);
        }
        assert!(LineProfile::new(0.8, 1.1, 1.0, 1.0).is_err());
        assert!(LineProfile::new(0.9, 1.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn null_coordinate_flat_and_additive() {
        let xu = null_coordinate(2.0, NullBranch::U, |_| 0.0, |_| 2.0, &[], None, &[]).unwrap();
        assert_relative_eq!(xu, 1.0, max_relative = 1e-14);
        let p = ring();
        let t = f64::INFINITY;
        let v = |x: f64| p.velocity(x, t);
        let c = |x: f64| p.sound_speed(x, t);
        let b = null_coordinate(4.0, NullBranch::U, v, c, &[], None, &[]).unwrap();
        let m = null_coordinate(2.5, NullBranch::U, v, c, &[], None, &[]).unwrap();
        let rest = integrate(|x| 1.0 / (c(x) + v(x)), 2.5, 4.0, &QuadOptions::absolute(1e-14)).unwrap();
        assert_relative_eq!(b, m + rest.value, max_relative = 1e-10);
    }

    #[test]
    fn null_coordinate_v_needs_epsilon() {
        let p = ring();
        let t = f64::INFINITY;
        let hs = p.horizons(t);
        let kinks = p.kinks();
        let v = |x: f64| p.velocity(x, t);
        let c = |x: f64| p.sound_speed(x, t);
        let e = null_coordinate(3.0, NullBranch::V, v, c, &hs, None, &[]).unwrap_err();
        assert!(e.to_string().contains("horizon"));
        let delta = 2.0 * PI / p.config.n_ions as f64;
        let a = null_coordinate(3.0, NullBranch::V, v, c, &hs, Some(delta), &kinks).unwrap();
        let b = null_coordinate(3.0, NullBranch::V, v, c, &hs, Some(2.0 * delta), &kinks).unwrap();
        assert!(a.is_finite() && b.is_finite());
        // log divergence: halving ε shifts x_v by a finite, O(1) amount
        assert!((a - b).abs() < 1.0);
    }

    #[test]
    fn closed_form_null_map_matches_quadrature() {
        let p = ring();
        let t = f64::INFINITY;
        let hs = p.horizons(t);
        let kinks = p.kinks();
        let delta = 2.0 * PI / p.config.n_ions as f64;
        let v = |x: f64| p.velocity(x, t);
        let c = |x: f64| p.sound_speed(x, t);
        for branch in [NullBranch::U, NullBranch::V] {
            let map = RingNullMap::new(&p, t, branch, delta).unwrap();
            for th in [0.3, 1.5, 1.7, 2.0, 3.5, 4.6, 4.75, 6.0, 2.0 * PI] {
                let q = null_coordinate(th, branch, v, c, &hs, Some(delta), &kinks).unwrap();
                assert_relative_eq!(map.eval(th), q, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
        let u = RingNullMap::new(&p, t, NullBranch::U, 0.0).unwrap();
        assert!(u.circumference() > 0.0);
        assert!(RingNullMap::new(&p, t, NullBranch::V, 0.0).is_err());
    }

    #[test]
    fn hawking_linear_data() {
        // v² − c² = s (x − 1) near x = 1 with v = c = 2 there
        let s = 0.8;
        let v = |x: f64| (4.0 + s * (x - 1.0)).sqrt();
        let (h, th) = hawking_temperature(v, |_| 2.0, (0.0, 3.0), 0.1, 1.0, 1.0).unwrap();
        assert!((h - 1.0).abs() < 1e-11);
        assert_relative_eq!(th, s / (4.0 * PI * 2.0), max_relative = 1e-9);
        let v2 = |x: f64| (4.0 + 2.0 * s * (x - 1.0)).sqrt();
        let (_, th2) = hawking_temperature(v2, |_| 2.0, (0.0, 3.0), 0.1, 1.0, 1.0).unwrap();
        assert_relative_eq!(th2, 2.0 * th, max_relative = 1e-9);
        assert!(hawking_temperature(|_| 1.0, |_| 2.0, (0.0, 1.0), 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn ring_horizons_have_equal_magnitude() {
        let p = ring();
        let ts = hawking_temperatures_ring(&p).unwrap();
        assert_eq!(ts.len(), 2);
        assert_relative_eq!(ts[0].1, -ts[1].1, max_relative = 1e-8);
        // analytic: T_H = 3ħ v'/(4π k_B) with v' = α/γ₁
        let alpha = 0.5 * (p.config.v_max - p.config.v_min);
        assert_relative_eq!(ts[0].1, 3.0 * alpha / p.config.gamma1 / (4.0 * PI), max_relative = 1e-8);
    }

    #[test]
    fn line_temperature() {
        assert_relative_eq!(hawking_temperature_line(1.1, 0.9, 1.0), 0.2 / (4.0 * PI), max_relative = 1e-14);
        assert_eq!(hawking_temperature_line(1.0, 1.0, 1.0), 0.0);
        assert_relative_eq!(
            hawking_temperature_line(1.1, 0.9, 2.0),
            0.5 * hawking_temperature_line(1.1, 0.9, 1.0)
        );
        // the same number from the generic routine on the linearised profile
        let p = LineProfile::reference();
        let (_, th) = hawking_temperature(|x| 1.0 + p.kappa * x, |_| 1.0, (-0.5, 0.5), 0.25, 1.0, 1.0).unwrap();
        assert_relative_eq!(th, p.hawking_temperature(), max_relative = 1e-6);
    }
}
