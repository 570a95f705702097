//! Method of characteristics for the collapsing line profile.
//!
//! Left movers follow dx/dt = v − 1 and carry the field unchanged. Right
//! movers of the auxiliary field follow dx/dt = v + 1 and pick up the factor
//! e^{−∫∂ₓv dt}, which is e^{−κ∫σ} while inside the transition region.
//!
//! Curves are traced with an adaptive Dormand–Prince 5(4) pair. Crossings of
//! x = ±a are located on the dense output by bisection and the integration
//! restarts there with the neighbouring region's velocity law.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{LineProfile, Region};
use crate::specfun::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Left,
    Right,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Left => -1.0,
            Branch::Right => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Left => "left",
            Branch::Right => "right",
        }
    }
}

pub fn region_name(r: Region) -> &'static str {
    match r {
        Region::Inner => "inner",
        Region::Transition => "transition",
        Region::Outer => "outer",
    }
}

/// A characteristic through (x, t), traced back to t = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicMap {
    pub branch: Branch,
    pub x: f64,
    pub t: f64,
    /// Regions visited, in forward time, with the time each was entered.
    pub region_history: Vec<(Region, f64)>,
    pub x0: f64,
    /// e^{−κ∫σ} over the time spent in the transition region (right movers);
    /// always 1 for left movers.
    pub amplitude_factor: f64,
}

/// Accuracy of the tracer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { rel_tol: 1e-14, abs_tol: 1e-14, event_tol: 1e-14 }
    }
}

// Dormand–Prince 5(4) tableau with Hairer's dense-output coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
struct Dense {
    t0: f64,
    h: f64,
    r: [f64; 5],
}

impl Dense {
    fn eval(&self, t: f64) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        self.r[0] + th * (self.r[1] + th1 * (self.r[2] + th * (self.r[3] + th1 * self.r[4])))
    }
}

/// One DP45 attempt: (x1, k7, error estimate, dense output).
fn dp45_step<F: Fn(f64, f64) -> f64>(f: &F, t: f64, x: f64, k1: f64, h: f64) -> (f64, f64, f64, Dense) {
    let k2 = f(t + C2 * h, x + h * A21 * k1);
    let k3 = f(t + C3 * h, x + h * (A31 * k1 + A32 * k2));
    let k4 = f(t + C4 * h, x + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(t + C5 * h, x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = f(t + h, x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let x1 = x + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    let k7 = f(t + h, x1);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    let dx = x1 - x;
    let bspl = h * k1 - dx;
    let dense = Dense {
        t0: t,
        h,
        r: [
            x,
            dx,
            bspl,
            dx - h * k7 - bspl,
            h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
        ],
    };
    (x1, k7, err, dense)
}

fn region_bounds(r: Region, a: f64) -> (f64, f64) {
    match r {
        Region::Inner => (f64::NEG_INFINITY, -a),
        Region::Transition => (-a, a),
        Region::Outer => (a, f64::INFINITY),
    }
}

/// Velocity law of one region, continued smoothly beyond its bounds.
fn region_shape(p: &LineProfile, r: Region, x: f64) -> f64 {
    match r {
        Region::Inner => p.v_min,
        Region::Transition => 1.0 + p.kappa * x,
        Region::Outer => p.v_max,
    }
}

fn characteristic_rhs(p: &LineProfile, branch: Branch, r: Region, t: f64, x: f64) -> f64 {
    p.sigma(t) * region_shape(p, r, x) + branch.sign()
}

/// Region for a point, resolving x = ±a by where the curve heads next.
fn region_at(p: &LineProfile, branch: Branch, x: f64, t: f64, forward: bool) -> Region {
    let r = p.region(x);
    if x != p.a && x != -p.a {
        return r;
    }
    let speed = p.sigma(t) * p.shape(x) + branch.sign();
    let moving_right = if forward { speed > 0.0 } else { speed < 0.0 };
    match (x == p.a, moving_right) {
        (true, true) => Region::Outer,
        (true, false) => Region::Transition,
        (false, true) => Region::Transition,
        (false, false) => Region::Inner,
    }
}

/// Result of integrating one characteristic between two times.
#[derive(Debug, Clone)]
struct Path {
    x_end: f64,
    /// (region, time at which it was entered along the direction of travel)
    visits: Vec<(Region, f64)>,
    /// ∫σ over the time spent in the transition region
    transition_sigma: f64,
}

fn evolve(
    p: &LineProfile,
    branch: Branch,
    x_start: f64,
    t_start: f64,
    t_end: f64,
    opts: &TraceOptions,
) -> Result<Path> {
    const MAX_STEPS: usize = 200_000;
    const MAX_EVENTS: usize = 1000;
    let forward = t_end >= t_start;
    let dir = if forward { 1.0 } else { -1.0 };
    let mut t = t_start;
    let mut x = x_start;
    let mut region = region_at(p, branch, x, t, forward);
    let mut visits = vec![(region, t)];
    let mut transition_sigma = 0.0;
    let mut h = dir * (0.01 * p.tau).min((t_end - t_start).abs()).max(1e-6);
    let mut events = 0;
    let mut steps = 0;
    while (t_end - t) * dir > 0.0 {
        let rhs = |tt: f64, xx: f64| characteristic_rhs(p, branch, region, tt, xx);
        let mut k1 = rhs(t, x);
        let (lo, hi) = region_bounds(region, p.a);
        let region_start = t;
        let mut crossed = None;
        while (t_end - t) * dir > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Numeric("characteristic tracer exceeded its step budget".into()));
            }
            if (t + h - t_end) * dir > 0.0 {
                h = t_end - t;
            }
            let (x1, k7, err, dense) = dp45_step(&rhs, t, x, k1, h);
            let scale = opts.abs_tol + opts.rel_tol * x.abs().max(x1.abs());
            let e = (err / scale).abs();
            if e > 1.0 || !x1.is_finite() {
                h *= (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
                if h.abs() < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Numeric(format!("step size underflow at t = {t}")));
                }
                continue;
            }
            let t1 = t + h;
            if x1 > hi || x1 < lo {
                // locate the crossing on the dense output
                let bound = if x1 > hi { hi } else { lo };
                let g = |tt: f64| dense.eval(tt) - bound;
                let (mut ta, mut tb) = (t, t1);
                let ga = g(ta);
                for _ in 0..200 {
                    if (tb - ta).abs() <= opts.event_tol * t1.abs().max(1.0) {
                        break;
                    }
                    let tm = 0.5 * (ta + tb);
                    if (g(tm) > 0.0) == (ga > 0.0) {
                        ta = tm;
                    } else {
                        tb = tm;
                    }
                }
                crossed = Some((tb, bound));
                break;
            }
            t = t1;
            x = x1;
            k1 = k7;
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        }
        let t_leave = crossed.map_or(t, |c| c.0);
        if region == Region::Transition {
            transition_sigma += (p.f(t_leave) - p.f(region_start)).abs();
        }
        match crossed {
            None => break,
            Some((tc, bound)) => {
                events += 1;
                if events > MAX_EVENTS {
                    return Err(Error::Numeric("characteristic keeps crossing an interface".into()));
                }
                t = tc;
                x = bound;
                let next = region_at(p, branch, x, t, forward);
                region = if next == region {
                    // grazing contact: step across anyway
                    match (region, bound > 0.0) {
                        (Region::Transition, true) => Region::Outer,
                        (Region::Transition, false) => Region::Inner,
                        _ => Region::Transition,
                    }
                } else {
                    next
                };
                visits.push((region, t));
            }
        }
    }
    Ok(Path { x_end: x, visits, transition_sigma })
}

/// Traces the characteristic through (x, t) back to t = 0.
pub fn trace_characteristic(x: f64, t: f64, branch: Branch, profile: &LineProfile) -> Result<CharacteristicMap> {
    trace_characteristic_with(x, t, branch, profile, &TraceOptions::default())
}

pub fn trace_characteristic_with(
    x: f64,
    t: f64,
    branch: Branch,
    profile: &LineProfile,
    opts: &TraceOptions,
) -> Result<CharacteristicMap> {
    if !(t >= 0.0) || !t.is_finite() || !x.is_finite() {
        return Err(Error::Domain(format!("need finite x and t ≥ 0 (x = {x}, t = {t})")));
    }
    let path = evolve(profile, branch, x, t, 0.0, opts)?;
    // visits are in backward order with exit times; convert to forward entry times
    let n = path.visits.len();
    let mut history = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let entry = if i + 1 < n { path.visits[i + 1].1 } else { 0.0 };
        history.push((path.visits[i].0, entry));
    }
    let amplitude_factor = match branch {
        Branch::Left => 1.0,
        Branch::Right => (-profile.kappa * path.transition_sigma).exp(),
    };
    Ok(CharacteristicMap { branch, x, t, region_history: history, x0: path.x_end, amplitude_factor })
}

/// Forward evolution of the characteristic starting at x0: (x(t), amplitude).
pub fn evolve_characteristic(x0: f64, t: f64, branch: Branch, profile: &LineProfile) -> Result<(f64, f64)> {
    evolve_characteristic_with(x0, t, branch, profile, &TraceOptions::default())
}

pub fn evolve_characteristic_with(
    x0: f64,
    t: f64,
    branch: Branch,
    profile: &LineProfile,
    opts: &TraceOptions,
) -> Result<(f64, f64)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("need finite t ≥ 0, got {t}")));
    }
    let path = evolve(profile, branch, x0, 0.0, t, opts)?;
    let amp = match branch {
        Branch::Left => 1.0,
        Branch::Right => (-profile.kappa * path.transition_sigma).exp(),
    };
    Ok((path.x_end, amp))
}

/// ∫₀ᵗ w(s) e^{−κ f(s)} ds, with f the accumulated switch-on.
fn weighted_decay_integral<W: Fn(f64) -> f64>(p: &LineProfile, t: f64, w: W) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions::mixed(1e-15, 1e-13);
    // the switch-on happens over a few τ; split there
    let knee = (10.0 * p.tau).min(t);
    let g = |s: f64| w(s) * (-p.kappa * p.f(s)).exp();
    let mut v = integrate(g, 0.0, knee, &opts)?.value;
    if t > knee {
        v += integrate(g, knee, t, &opts)?.value;
    }
    Ok(v)
}

/// Checks that the forward curve from x0 stays in |x| ≤ a up to t.
fn require_transition(x0: f64, t: f64, branch: Branch, p: &LineProfile) -> Result<()> {
    if x0.abs() > p.a {
        return Err(Error::Domain(format!("x0 = {x0} is outside the transition region |x| ≤ {}", p.a)));
    }
    let path = evolve(p, branch, x0, 0.0, t, &TraceOptions::default())?;
    if path.visits.len() > 1 {
        return Err(Error::RegionExit { exit_time: path.visits[1].1 });
    }
    Ok(())
}

/// Left characteristic inside |x| ≤ a:
/// x(t) = e^{κ∫σ}(x₀ − ∫₀ᵗ (1 − σ(s)) e^{−κ∫₀ˢσ} ds).
pub fn left_characteristic(x0: f64, t: f64, profile: &LineProfile) -> Result<f64> {
    require_transition(x0, t, Branch::Left, profile)?;
    let i = weighted_decay_integral(profile, t, |s| 1.0 - profile.sigma(s))?;
    Ok((profile.kappa * profile.f(t)).exp() * (x0 - i))
}

/// Right characteristic inside |x| ≤ a with its amplitude factor:
/// x(t) = e^{κ∫σ}(x₀ + ∫₀ᵗ (σ(s) + 1) e^{−κ∫₀ˢσ} ds), factor e^{−κ∫σ}.
pub fn right_characteristic(x0: f64, t: f64, profile: &LineProfile) -> Result<(f64, f64)> {
    require_transition(x0, t, Branch::Right, profile)?;
    let i = weighted_decay_integral(profile, t, |s| 1.0 + profile.sigma(s))?;
    let kf = profile.kappa * profile.f(t);
    Ok((kf.exp() * (x0 + i), (-kf).exp()))
}

/// x₀(x, t) of a left mover inside the transition region, by the inverse
/// of [`left_characteristic`] (no exit check).
pub fn left_x0_transition(x: f64, t: f64, profile: &LineProfile) -> Result<f64> {
    let i = weighted_decay_integral(profile, t, |s| 1.0 - profile.sigma(s))?;
    Ok(x * (-profile.kappa * profile.f(t)).exp() + i)
}

/// Long-time matched x₀ of a left mover:
/// a e^{(x + t − f v_max − a)/a} for x > a, −a e^{−(x + t − f v_min − a)/a}
/// for x < −a, and x e^{−κt} in between.
pub fn left_x0_asymptotic(x: f64, t: f64, profile: &LineProfile) -> f64 {
    let (a, f) = (profile.a, profile.f(t));
    match profile.region(x) {
        Region::Outer => a * ((x + t - f * profile.v_max - a) / a).exp(),
        Region::Inner => -a * (-(x + t - f * profile.v_min - a) / a).exp(),
        Region::Transition => x * (-profile.kappa * t).exp(),
    }
}

/// x±(t) = ±a(1 + κτ ln cosh(t/τ)).
pub fn entanglement_boundary(t: f64, profile: &LineProfile) -> (f64, f64) {
    let xp = profile.a * (1.0 + profile.kappa * profile.f(t));
    (-xp, xp)
}

/// Time at which x₊ reaches |x|, by bisection to 10⁻¹⁰ τ.
pub fn entanglement_onset_time(x: f64, profile: &LineProfile) -> Result<f64> {
    let target = x.abs();
    if !(target > profile.a) || !target.is_finite() {
        return Err(Error::Domain(format!(
            "|x| = {target} ≤ a = {}: the boundary starts there, onset is t = 0 by convention",
            profile.a
        )));
    }
    let g = |t: f64| entanglement_boundary(t, profile).1 - target;
    let mut hi = profile.tau;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric("onset time not bracketed".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * profile.tau {
        let m = 0.5 * (lo + hi);
        if g(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The right-mover correction ∫₀ᵗ exp(−2ik g(s) − κ f(s)) ds with
/// g(s) = ∫₀ˢ e^{−κ f}.
fn right_mover_integral(k: f64, t: f64, p: &LineProfile) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let opts = QuadOptions::mixed(1e-14, 1e-12);
    let decay = |s: f64| (-p.kappa * p.f(s)).exp();
    // g grows at most like s, so the phase 2k g advances ≤ 2k per unit time
    let pieces = ((2.0 * k.abs() * t / PI).ceil() as usize + 1).max((t / p.tau).ceil() as usize).min(100_000);
    let h = t / pieces as f64;
    let mut g0 = 0.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..pieces {
        let a = i as f64 * h;
        let b = a + h;
        let g_at = |s: f64| g0 + integrate(decay, a, s, &opts).map(|r| r.value).unwrap_or(f64::NAN);
        let re = integrate(|s| (-2.0 * k * g_at(s)).cos() * decay(s), a, b, &opts)?.value;
        let im = integrate(|s| (-2.0 * k * g_at(s)).sin() * decay(s), a, b, &opts)?.value;
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Numeric("right-mover phase integral failed".into()));
        }
        acc += Complex64::new(re, im);
        g0 += integrate(decay, a, b, &opts)?.value;
    }
    Ok(acc)
}

/// u_k(x, t) = e^{ik x₀(x,t)}/√(2|k|) · {1 − Θ(k) 2i|k| ∫₀ᵗ e^{−2ik g(s) − κ f(s)} ds}.
///
/// x₀ comes from the traced left characteristic. k < 0 is taken to be a
/// pure left mover, so only k > 0 carries the right-mover term; that term is
/// the transition-region solution and is position independent.
pub fn mode_function(k: f64, x: f64, t: f64, profile: &LineProfile) -> Result<Complex64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::Domain(format!("mode normalisation is singular at k = {k}")));
    }
    let x0 = trace_characteristic(x, t, Branch::Left, profile)?.x0;
    let norm = 1.0 / (2.0 * k.abs()).sqrt();
    let left = Complex64::from_polar(norm, k * x0);
    if k < 0.0 {
        return Ok(left);
    }
    let j = right_mover_integral(k, t, profile)?;
    Ok(left * (Complex64::new(1.0, 0.0) - Complex64::new(0.0, 2.0 * k) * j))
}

/// One sample of a characteristic fan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FanPoint {
    pub t: f64,
    pub x: f64,
    pub region: Region,
    pub branch: Branch,
}

/// Characteristics from each x₀ sampled at `n_t` equally spaced times up to `t_max`.
pub fn characteristic_fan(
    x0s: &[f64],
    t_max: f64,
    n_t: usize,
    branch: Branch,
    profile: &LineProfile,
) -> Result<Vec<FanPoint>> {
    if !(t_max > 0.0) || n_t < 2 {
        return Err(Error::Domain("fan needs t_max > 0 and at least two samples".into()));
    }
    let mut out = Vec::with_capacity(x0s.len() * n_t);
    for &x0 in x0s {
        let mut x = x0;
        let mut t_prev = 0.0;
        for i in 0..n_t {
            let t = t_max * i as f64 / (n_t - 1) as f64;
            if t > t_prev {
                x = evolve(profile, branch, x, t_prev, t, &TraceOptions::default())?.x_end;
            }
            t_prev = t;
            out.push(FanPoint { t, x, region: profile.region(x), branch });
        }
    }
    Ok(out)
}

pub fn fan_to_csv(points: &[FanPoint]) -> String {
    let mut s = String::from("t,x,region,branch\n");
    for p in points {
        s.push_str(&format!("{:e},{:e},{},{}\n", p.t, p.x, region_name(p.region), p.branch.name()));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line() -> LineProfile {
        LineProfile::reference()
    }

    #[test]
    fn closed_forms_at_origin_and_flat() {
        let p = line();
        assert_eq!(left_characteristic(0.3, 0.0, &p).unwrap(), 0.3);
        assert_eq!(right_characteristic(0.3, 0.0, &p).unwrap(), (0.3, 1.0));
        // before the switch-on bites, left movers drift at unit speed
        let x = left_characteristic(0.5, 1e-3, &p).unwrap();
        assert_relative_eq!(x, 0.5 - 1e-3, epsilon = 1e-6);
    }

    #[test]
    fn closed_form_matches_tracer() {
        let p = line();
        for (x0, t) in [(0.4, 0.8), (-0.2, 0.5), (0.9, 1.0)] {
            let c = left_characteristic(x0, t, &p).unwrap();
            let (e, _) = evolve_characteristic(x0, t, Branch::Left, &p).unwrap();
            assert_relative_eq!(c, e, max_relative = 1e-10, epsilon = 1e-12);
        }
        let (c, amp) = right_characteristic(-0.9, 0.7, &p).unwrap();
        let (e, amp_e) = evolve_characteristic(-0.9, 0.7, Branch::Right, &p).unwrap();
        assert_relative_eq!(c, e, max_relative = 1e-10, epsilon = 1e-12);
        assert_relative_eq!(amp, amp_e, max_relative = 1e-12);
    }

    #[test]
    fn region_exit_reports_time() {
        let p = line();
        match left_characteristic(-0.9, 1.0, &p) {
            Err(Error::RegionExit { exit_time }) => assert!(exit_time > 0.0 && exit_time < 1.0),
            other => panic!("expected exit, got {other:?}"),
        }
        assert!(left_characteristic(1.5, 0.1, &p).is_err());
    }

    #[test]
    fn right_amplitude() {
        let flat = LineProfile::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(right_characteristic(0.0, 0.5, &flat).unwrap().1, 1.0);
        let p = line();
        let (_, amp) = right_characteristic(-0.99, 0.9, &p).unwrap();
        assert_relative_eq!(amp, (-p.kappa * p.f(0.9)).exp(), max_relative = 1e-15);
    }

    #[test]
    fn long_time_transition_characteristic() {
        // x ≈ x₀ e^{κt} holds once x₀ dwarfs the O(τ) drift
        let p = LineProfile::new(0.9, 1.1, 200.0, 1.0).unwrap();
        let (x0, t) = (150.0, 20.0);
        let x = left_characteristic(x0, t, &p).unwrap();
        assert!((x / (x0 * (p.kappa * t).exp()) - 1.0).abs() < 0.01);
        // and the exact long-time form has the τ ln 2 delay and a finite shift
        let shift = weighted_decay_integral(&p, 60.0, |s| 1.0 - p.sigma(s)).unwrap();
        let asym = (p.kappa * (t - p.tau * std::f64::consts::LN_2)).exp() * (x0 - shift);
        assert_relative_eq!(x, asym, max_relative = 1e-9);
    }

    #[test]
    fn trace_round_trip_and_history() {
        let p = line();
        for (x, t) in [(5.0, 100.0), (-4.0, 100.0), (0.3, 3.0), (12.0, 50.0)] {
            for b in [Branch::Left, Branch::Right] {
                let m = trace_characteristic(x, t, b, &p).unwrap();
                let (back, amp) = evolve_characteristic(m.x0, t, b, &p).unwrap();
                assert_relative_eq!(back, x, max_relative = 1e-8, epsilon = 1e-9);
                assert_relative_eq!(amp, m.amplitude_factor, max_relative = 1e-8);
                assert_eq!(m.region_history[0].1, 0.0);
                for w in m.region_history.windows(2) {
                    assert!(w[1].1 > w[0].1);
                    assert_ne!(w[0].0, w[1].0);
                }
            }
        }
    }

    #[test]
    fn boundary_values() {
        let p = LineProfile::new(0.9, 1.1, 1.0, 1.0).unwrap();
        assert_eq!(entanglement_boundary(0.0, &p), (-1.0, 1.0));
        let (xm, xp) = entanglement_boundary(100.0, &p);
        assert_eq!(xm, -xp);
        assert_relative_eq!(xp, 1.0 + 0.1 * (100.0 - std::f64::consts::LN_2), max_relative = 1e-14);
        let (_, far) = entanglement_boundary(1000.0, &p);
        assert!((far / 1000.0 / (p.a * p.kappa) - 1.0).abs() < 0.01);
    }

    #[test]
    fn onset_time() {
        let p = line();
        let x = p.a * (1.0 + p.kappa * p.tau * 1f64.cosh().ln());
        assert_relative_eq!(entanglement_onset_time(x, &p).unwrap(), p.tau, max_relative = 1e-9);
        assert!(entanglement_onset_time(p.a + 1e-9, &p).unwrap() < 0.01);
        let t = entanglement_onset_time(10.93, &p).unwrap();
        assert!((t / 100.0 - 1.0).abs() < 1e-3);
        assert!(matches!(entanglement_onset_time(0.5, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn modes() {
        let p = line();
        let u = mode_function(2.0, 0.7, 0.0, &p).unwrap();
        let pw = Complex64::from_polar(0.5, 1.4);
        assert_relative_eq!((u - pw).norm(), 0.0, epsilon = 1e-14);
        for (x, t) in [(0.3, 1.0), (-5.0, 40.0), (7.0, 100.0)] {
            let u = mode_function(-1.3, x, t, &p).unwrap();
            assert_relative_eq!(u.norm(), 1.0 / 2.6f64.sqrt(), max_relative = 1e-14);
        }
        assert!(mode_function(0.0, 0.0, 1.0, &p).is_err());
    }

    /// [(∂t + ∂x v)(∂t + v∂x) − ∂x²]u by central differences.
    fn residual(k: f64, x: f64, t: f64, h: f64, p: &LineProfile) -> f64 {
        let u = |x: f64, t: f64| mode_function(k, x, t, p).unwrap();
        let v = |x: f64, t: f64| p.velocity(x, t);
        // w = (∂t + v∂x)u
        let w = |x: f64, t: f64| {
            (u(x, t + h) - u(x, t - h)) / (2.0 * h) + v(x, t) * (u(x + h, t) - u(x - h, t)) / (2.0 * h)
        };
        let wt = (w(x, t + h) - w(x, t - h)) / (2.0 * h);
        let vw_x = (w(x + h, t) * v(x + h, t) - w(x - h, t) * v(x - h, t)) / (2.0 * h);
        let uxx = (u(x + h, t) - 2.0 * u(x, t) + u(x - h, t)) / (h * h);
        (wt + vw_x - uxx).norm()
    }

    #[test]
    fn modes_solve_the_wave_equation() {
        let p = line();
        for k in [-1.5, 1.5] {
            let r: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| residual(k, -0.5, 1.0, h, &p)).collect();
            let o1 = (r[0] / r[1]).log2();
            let o2 = (r[1] / r[2]).log2();
            assert!(o1 > 1.7 && o2 > 1.7, "k = {k}: residuals {r:?}");
        }
    }

    #[test]
    fn fan_csv() {
        let p = line();
        let fan = characteristic_fan(&[-0.5, 0.5], 10.0, 5, Branch::Left, &p).unwrap();
        assert_eq!(fan.len(), 10);
        let csv = fan_to_csv(&fan);
        assert!(csv.starts_with("t,x,region,branch\n"));
        assert_eq!(csv.lines().count(), 11);
    }
}
