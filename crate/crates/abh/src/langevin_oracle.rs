//! Stochastic lattice oracle for the momentum correlations.
//!
//! The field lives on a periodic lattice through its Riemann variables
//! G = (Π + ∂ₓφ)/2 and H = (Π − ∂ₓφ)/2. The wave operator decouples them
//! into conservative transport
//!
//!   ∂ₜG + ∂ₓ((v − 1)G) = 0,   ∂ₜH + ∂ₓ((v + 1)H) = 0,
//!
//! so G is the left-moving momentum Π_L. The bath acts on Π = G + H in its
//! memoryless limit, ∂ₜΠ ⊃ −λ²Π + ξ with ⟨ξξ⟩ = 2λ²k_BT₀ δ(x − x′)δ(t − t′).
//!
//! Transport is Crank–Nicolson with centred differences (a cyclic
//! tridiagonal solve per step), Strang-split around an Euler–Maruyama bath
//! kick. Random numbers come from ChaCha8 keyed by (seed, realization) with
//! one stream per step, so every trajectory is reproducible on its own.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::correlations::{label_and_momentum, CorrelationGrid, CorrelationMethod, ModeSource};
use crate::environment::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::profile::LineProfile;

/// Largest Courant number accepted, dt ≤ MAX_COURANT·h/(1 + max|v|), also
/// the default. Crank–Nicolson is stable beyond it but loses phase accuracy.
pub const MAX_COURANT: f64 = 0.5;

/// Gaussian roll-off of the initial spectrum, as a fraction of π/h. Modes
/// near the grid scale are badly dispersed by the centred scheme.
pub const SPECTRAL_CUTOFF: f64 = 0.15;

/// Velocity field seen by the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Background {
    /// Static uniform flow.
    Uniform(f64),
    /// The collapsing line profile. Near the ends of the periodic box the
    /// velocity ramps linearly over `ramp` to the sound speed so that it is
    /// continuous across the wrap. That makes a second (white-hole) horizon
    /// at the wrap, where left movers pile up at the grid scale; an absorbing
    /// layer of width `sponge` at each end removes them before the centred
    /// scheme sends them back with the wrong group velocity.
    Line { profile: LineProfile, ramp: f64, sponge: f64 },
}

/// Peak damping rate of the absorbing layer.
pub const SPONGE_RATE: f64 = 2.0;

impl Background {
    pub fn line(profile: LineProfile) -> Self {
        Background::Line { profile, ramp: 4.0 * profile.a, sponge: 6.0 * profile.a }
    }

    /// Damping rate of the absorbing layer at x, quadratic in the depth.
    pub fn absorption(&self, x: f64, length: f64) -> f64 {
        match *self {
            Background::Uniform(_) => 0.0,
            Background::Line { sponge, .. } => {
                let depth = (x.abs() - (0.5 * length - sponge)) / sponge;
                if depth > 0.0 { SPONGE_RATE * depth.min(1.0).powi(2) } else { 0.0 }
            }
        }
    }

    /// v at position x of a box [−L/2, L/2).
    pub fn velocity(&self, x: f64, t: f64, length: f64) -> f64 {
        match *self {
            Background::Uniform(v) => v,
            Background::Line { profile, ramp, .. } => {
                let edge = 0.5 * length - ramp;
                let shape = if x > edge {
                    profile.v_max + (1.0 - profile.v_max) * (x - edge) / ramp
                } else if x < -edge {
                    profile.v_min + (1.0 - profile.v_min) * (-edge - x) / ramp
                } else {
                    profile.shape(x)
                };
                profile.sigma(t) * shape
            }
        }
    }

    /// Upper bound of |v| over all times.
    fn max_speed(&self) -> f64 {
        match *self {
            Background::Uniform(v) => v.abs(),
            Background::Line { profile, .. } => profile.v_max.abs().max(profile.v_min.abs()).max(1.0),
        }
    }
}

/// Friction λ² and white-noise strength q of the memoryless bath.
///
/// For J(ν) = γ̃²ν f(ν/Λ) the friction is ∫₀^∞ l D(l) dl = (π/2)γ̃²; q follows
/// from fluctuation–dissipation, q = 2λ²k_BT₀.
pub fn memoryless_bath(env: &EnvironmentSpec) -> (f64, f64) {
    let lambda2 = 0.5 * PI * env.coupling_eff * env.coupling_eff;
    (lambda2, 2.0 * lambda2 * env.k_boltzmann * env.bath_temperature)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeState {
    pub n: usize,
    pub h: f64,
    /// Left-moving momentum G = (Π + ∂ₓφ)/2.
    pub left: Vec<f64>,
    /// Right-moving momentum H = (Π − ∂ₓφ)/2.
    pub right: Vec<f64>,
    pub time: f64,
    pub step: u64,
    pub seed: u64,
    pub realization_id: u64,
}

impl LatticeState {
    pub fn new(left: Vec<f64>, right: Vec<f64>, h: f64, seed: u64, realization_id: u64) -> Result<Self> {
        let n = left.len();
        if n < 4 || right.len() != n {
            return Err(Error::Domain(format!("need ≥ 4 sites and matching components, got {n}/{}", right.len())));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("lattice spacing must be positive, got {h}")));
        }
        if left.iter().chain(&right).any(|v| !v.is_finite()) {
            return Err(Error::Domain("initial data must be finite".into()));
        }
        Ok(LatticeState { n, h, left, right, time: 0.0, step: 0, seed, realization_id })
    }

    /// Thermal (or vacuum, T₀ = 0) initial data for a flat, static medium.
    ///
    /// Each component is Σ_k A_k cos kx + B_k sin kx over the lattice
    /// wavenumbers 0 < k ≤ π/h with A, B ~ N(0, [`mode_weight`]), so that
    /// ⟨G(x)G(x′)⟩ is [`lattice_correlation`], a smoothed version of
    /// ∫₀^∞ k coth(k/2T₀) cos k(x − x′) dk.
    pub fn thermal(n: usize, h: f64, temperature: f64, seed: u64, realization_id: u64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Domain(format!("thermal sampling needs an even site count ≥ 4, got {n}")));
        }
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::Domain(format!("temperature must be finite and ≥ 0, got {temperature}")));
        }
        let mut rng = realization_rng(seed, realization_id, 0);
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
        let mut sample = || {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            for m in 1..=n / 2 {
                let s = mode_weight(m, n, h, temperature).sqrt();
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                if m == n / 2 {
                    z[m] = Complex64::new(s * a, 0.0);
                } else {
                    z[m] = Complex64::new(0.5 * s * a, -0.5 * s * b);
                    z[n - m] = z[m].conj();
                }
            }
            fft.process(&mut z);
            z.into_iter().map(|c| c.re).collect::<Vec<f64>>()
        };
        let left = sample();
        let right = sample();
        LatticeState::new(left, right, h, seed, realization_id)
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// x_j = −L/2 + j h.
    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.length() + j as f64 * self.h
    }

    /// Site nearest to x (periodic).
    pub fn site(&self, x: f64) -> usize {
        let j = ((x + 0.5 * self.length()) / self.h).round() as i64;
        j.rem_euclid(self.n as i64) as usize
    }

    pub fn momentum(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(g, h)| g + h).collect()
    }

    pub fn field_gradient(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(g, h)| g - h).collect()
    }

    /// ∫ (Π² + (∂ₓφ)²)/2 dx = ∫ (G² + H²) dx.
    pub fn energy(&self) -> f64 {
        self.h * self.left.iter().chain(&self.right).map(|v| v * v).sum::<f64>()
    }
}

/// Variance of the cosine (and sine) amplitude of lattice mode m:
/// Δk·k coth(k/2T₀)·exp(−(k/k_c)²) with k_c = [`SPECTRAL_CUTOFF`]·π/h. The
/// Nyquist mode carries only a cosine and gets half weight.
pub fn mode_weight(m: usize, n: usize, h: f64, temperature: f64) -> f64 {
    let dk = 2.0 * PI / (n as f64 * h);
    let k = m as f64 * dk;
    let kc = SPECTRAL_CUTOFF * PI / h;
    let occ = if temperature > 0.0 { 1.0 / (0.5 * k / temperature).tanh() } else { 1.0 };
    let w = dk * k * occ * (-(k / kc).powi(2)).exp();
    if 2 * m == n { 0.5 * w } else { w }
}

/// Exact ⟨G(x)G(x + Δ)⟩ of [`LatticeState::thermal`] when Δ is a multiple of h.
/// There is no uniform mode, which offsets the thermal part by about −T₀Δk.
pub fn lattice_correlation(n: usize, h: f64, temperature: f64, delta: f64) -> f64 {
    let dk = 2.0 * PI / (n as f64 * h);
    (1..=n / 2)
        .map(|m| mode_weight(m, n, h, temperature) * (m as f64 * dk * delta).cos())
        .sum()
}

/// Zero-coupling prediction for the ensemble of [`estimate_correlation`]:
/// X₁′X₂′·C(X₂ − X₁) with X(x, t) from traced characteristics and C the
/// spectrum of [`lattice_correlation`] at arbitrary separation. This is what
/// the lattice should reproduce up to discretization error.
pub fn traced_lattice_prediction(
    x1: f64,
    x2: &[f64],
    t: f64,
    params: &EnsembleParams,
    temperature: f64,
    p: &LineProfile,
) -> Result<Vec<f64>> {
    let (l1, d1) = label_and_momentum(x1, t, p, ModeSource::Traced)?;
    x2.iter()
        .map(|&x| {
            let (l2, d2) = label_and_momentum(x, t, p, ModeSource::Traced)?;
            Ok(d1 * d2 * lattice_correlation(params.sites, params.h, temperature, l2 - l1))
        })
        .collect()
}

fn realization_rng(seed: u64, realization: u64, stream: u64) -> ChaCha8Rng {
    // splitmix-style mixing keeps nearby (seed, realization) pairs apart
    let mut z = seed ^ realization.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    let mut rng = ChaCha8Rng::seed_from_u64(z ^ (z >> 31));
    rng.set_stream(stream);
    rng
}

/// Standard-normal draws for one (seed, realization, step), one per site.
pub fn noise_draws(seed: u64, realization: u64, step: u64, sites: usize) -> Vec<f64> {
    // stream 0 is the initial data
    let mut rng = realization_rng(seed, realization, step + 1);
    (0..sites).map(|_| rng.sample(StandardNormal)).collect()
}

/// Largest stable dt for the given background (Courant number `courant`).
pub fn stable_dt(h: f64, background: &Background, courant: f64) -> f64 {
    courant * h / (1.0 + background.max_speed())
}

/// Scratch space for the cyclic tridiagonal solves.
#[derive(Debug, Clone, Default)]
struct Cyclic {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    c: Vec<f64>,
    z: Vec<f64>,
}

impl Cyclic {
    fn new(n: usize) -> Self {
        let v = vec![0.0; n];
        Cyclic { lower: v.clone(), diag: v.clone(), upper: v.clone(), rhs: v.clone(), c: v.clone(), z: v }
    }

    /// Solves lower_j y_{j−1} + diag_j y_j + upper_j y_{j+1} = rhs_j (indices
    /// mod n) into `out`. Sherman–Morrison removes the corner entries
    /// lower_0 and upper_{n−1}; `diag` is overwritten.
    fn solve(&mut self, out: &mut [f64]) {
        let n = self.rhs.len();
        let gamma = -self.diag[0];
        let alpha = self.upper[n - 1];
        let beta = self.lower[0];
        self.diag[0] -= gamma;
        self.diag[n - 1] -= alpha * beta / gamma;
        // forward sweep shared by both right-hand sides
        let (l, d, u, c) = (&self.lower, &self.diag, &self.upper, &mut self.c);
        let z = &mut self.z;
        z.iter_mut().for_each(|v| *v = 0.0);
        z[0] = gamma;
        z[n - 1] = alpha;
        let mut m = d[0];
        c[0] = u[0] / m;
        out[0] = self.rhs[0] / m;
        z[0] /= m;
        for j in 1..n {
            m = d[j] - l[j] * c[j - 1];
            c[j] = u[j] / m;
            out[j] = (self.rhs[j] - l[j] * out[j - 1]) / m;
            z[j] = (z[j] - l[j] * z[j - 1]) / m;
        }
        for j in (0..n - 1).rev() {
            out[j] -= c[j] * out[j + 1];
            z[j] -= c[j] * z[j + 1];
        }
        let v = beta / gamma;
        let factor = (out[0] + v * out[n - 1]) / (1.0 + z[0] + v * z[n - 1]);
        for (o, zj) in out.iter_mut().zip(z.iter()) {
            *o -= factor * zj;
        }
    }
}

#[cfg(test)]
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mut w = Cyclic::new(rhs.len());
    w.lower.copy_from_slice(lower);
    w.diag.copy_from_slice(diag);
    w.upper.copy_from_slice(upper);
    w.rhs.copy_from_slice(rhs);
    let mut out = vec![0.0; rhs.len()];
    w.solve(&mut out);
    out
}

/// Precomputed geometry plus scratch buffers for repeated steps.
struct Stepper {
    h: f64,
    /// v(x, t) = sigma(t)·shape(x).
    shape: Vec<f64>,
    sigma: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    absorption: Vec<f64>,
    speed: Vec<f64>,
    work: Cyclic,
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(state: &LatticeState, background: &Background) -> Self {
        let (n, length) = (state.n, state.length());
        let shape = (0..n).map(|j| background.velocity(state.position(j), f64::INFINITY, length)).collect();
        let absorption = (0..n).map(|j| background.absorption(state.position(j), length)).collect();
        let sigma: Box<dyn Fn(f64) -> f64 + Send + Sync> = match *background {
            Background::Uniform(_) => Box::new(|_| 1.0),
            Background::Line { profile, .. } => Box::new(move |t| profile.sigma(t)),
        };
        Stepper { h: state.h, shape, sigma, absorption, speed: vec![0.0; n], work: Cyclic::new(n), tmp: vec![0.0; n] }
    }

    /// One Crank–Nicolson step of ∂ₜw + ∂ₓ(u w) = 0, u = v(x, t) + sign.
    ///
    /// The face flux is ū·w̄ with both factors averaged to the face. Unlike
    /// the plain centred flux this does not amplify the grid-scale mode
    /// where the flow expands, and it keeps the scheme conservative.
    fn transport(&mut self, w: &mut [f64], t: f64, sign: f64, dt: f64) {
        let n = w.len();
        let s = (self.sigma)(t);
        for (u, v) in self.speed.iter_mut().zip(&self.shape) {
            *u = s * v + sign;
        }
        let c = dt / (8.0 * self.h);
        let (u, k) = (&self.speed, &mut self.work);
        for j in 0..n {
            let jm = if j == 0 { n - 1 } else { j - 1 };
            let jp = if j + 1 == n { 0 } else { j + 1 };
            let (a, d, b) = (-c * (u[jm] + u[j]), c * (u[jp] - u[jm]), c * (u[j] + u[jp]));
            k.rhs[j] = w[j] - (a * w[jm] + d * w[j] + b * w[jp]);
            k.lower[j] = a;
            k.diag[j] = 1.0 + d;
            k.upper[j] = b;
        }
        k.solve(&mut self.tmp);
        w.copy_from_slice(&self.tmp);
    }

    fn advance(&mut self, state: &mut LatticeState, dt: f64, lambda2: f64, q: f64) -> Result<()> {
        let (n, h, t0) = (state.n, state.h, state.time);
        let before = state.left.iter().chain(&state.right).fold(0.0f64, |m, v| m.max(v.abs()));
        let half = 0.5 * dt;
        self.transport(&mut state.left, t0 + 0.25 * dt, -1.0, half);
        self.transport(&mut state.right, t0 + 0.25 * dt, 1.0, half);

        if lambda2 > 0.0 || q > 0.0 {
            let amp = (q * dt / h).sqrt();
            let xi = if q > 0.0 { noise_draws(state.seed, state.realization_id, state.step, n) } else { vec![0.0; n] };
            for j in 0..n {
                let kick = -lambda2 * (state.left[j] + state.right[j]) * dt + amp * xi[j];
                state.left[j] += 0.5 * kick;
                state.right[j] += 0.5 * kick;
            }
        }
        for (j, mu) in self.absorption.iter().enumerate() {
            if *mu > 0.0 {
                let damp = (-mu * dt).exp();
                state.left[j] *= damp;
                state.right[j] *= damp;
            }
        }

        self.transport(&mut state.left, t0 + 0.75 * dt, -1.0, half);
        self.transport(&mut state.right, t0 + 0.75 * dt, 1.0, half);
        state.time = t0 + dt;
        state.step += 1;
        let after = state.left.iter().chain(&state.right).fold(0.0f64, |m, v| m.max(v.abs()));
        if !after.is_finite() || after > 1e3 * before.max(1.0) {
            return Err(Error::Numeric(format!(
                "lattice blew up at t = {} (max |G|,|H| {before:e} → {after:e})",
                state.time
            )));
        }
        Ok(())
    }
}

fn check_dt(dt: f64, h: f64, background: &Background) -> Result<()> {
    let limit = stable_dt(h, background, MAX_COURANT);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("dt = {dt} outside (0, {limit}] (Courant bound)")));
    }
    Ok(())
}

/// Advances the state by dt: half transport, bath kick, half transport.
pub fn step(state: &LatticeState, dt: f64, background: &Background, env: &EnvironmentSpec) -> Result<LatticeState> {
    check_dt(dt, state.h, background)?;
    let (lambda2, q) = memoryless_bath(env);
    let mut next = state.clone();
    Stepper::new(state, background).advance(&mut next, dt, lambda2, q)?;
    Ok(next)
}

/// Steps until `t_end`, shortening the last step to land on it.
pub fn evolve(mut state: LatticeState, t_end: f64, dt: f64, background: &Background, env: &EnvironmentSpec) -> Result<LatticeState> {
    check_dt(dt, state.h, background)?;
    let (lambda2, q) = memoryless_bath(env);
    let mut stepper = Stepper::new(&state, background);
    while state.time < t_end - 1e-12 * dt {
        let d = dt.min(t_end - state.time);
        stepper.advance(&mut state, d, lambda2, q)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleParams {
    pub realizations: usize,
    pub sites: usize,
    pub h: f64,
    /// None picks [`MAX_COURANT`].
    pub dt: Option<f64>,
    pub seed: u64,
    /// Batches for the error bars; realizations are split evenly.
    pub batches: usize,
    /// Stop early once every sample's relative standard error is below this.
    pub target_rel_error: Option<f64>,
}

impl EnsembleParams {
    /// 512 sites at h = 1/16 (box length 32).
    pub fn reduced(realizations: usize, seed: u64) -> Self {
        EnsembleParams { realizations, sites: 512, h: 0.0625, dt: None, seed, batches: 8, target_rel_error: None }
    }
}

/// Sufficient statistics of G(x₁)G(x₂) over realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub realizations: usize,
    pub x2: Vec<f64>,
    /// Per batch: (count, Σ product per x₂, Σ product² per x₂).
    pub batches: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

impl Ensemble {
    pub fn mean(&self) -> Vec<f64> {
        let m = self.x2.len();
        let mut s = vec![0.0; m];
        for (_, sum, _) in &self.batches {
            for i in 0..m {
                s[i] += sum[i];
            }
        }
        s.iter().map(|v| v / self.realizations as f64).collect()
    }

    /// Standard error of the mean from the per-realization spread.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.realizations as f64;
        let mean = self.mean();
        let mut s2 = vec![0.0; self.x2.len()];
        for (_, _, sq) in &self.batches {
            for i in 0..s2.len() {
                s2[i] += sq[i];
            }
        }
        s2.iter()
            .zip(&mean)
            .map(|(q, m)| ((q / n - m * m).max(0.0) / (n - 1.0).max(1.0)).sqrt())
            .collect()
    }

    pub fn batch_means(&self) -> Vec<Vec<f64>> {
        self.batches
            .iter()
            .filter(|b| b.0 > 0)
            .map(|(c, s, _)| s.iter().map(|v| v / *c as f64).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCorrelation {
    pub grid: CorrelationGrid,
    pub std_error: Vec<f64>,
    pub ensemble: Ensemble,
    /// False when `target_rel_error` was set and not reached.
    pub converged: bool,
}

/// Monte-Carlo ⟨Π_L(x₁,t)Π_L(x₂,t)⟩ on the lattice, x values snapped to sites.
pub fn estimate_correlation(
    params: &EnsembleParams,
    x1: f64,
    x2: &[f64],
    t: f64,
    temperature: f64,
    background: &Background,
    env: &EnvironmentSpec,
) -> Result<McCorrelation> {
    if params.realizations < 2 || params.batches == 0 {
        return Err(Error::Domain("need ≥ 2 realizations and ≥ 1 batch".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("need finite t ≥ 0, got {t}")));
    }
    let dt = params.dt.unwrap_or_else(|| stable_dt(params.h, background, MAX_COURANT));
    let probe = LatticeState::thermal(params.sites, params.h, 0.0, 0, 0)?;
    let j1 = probe.site(x1);
    let mut js: Vec<usize> = x2.iter().map(|&x| probe.site(x)).collect();
    js.dedup();
    let xs: Vec<f64> = js.iter().map(|&j| probe.position(j)).collect();

    let nb = params.batches.min(params.realizations);
    let per = params.realizations.div_ceil(nb);
    let run_batch = |b: usize| -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let (mut sum, mut sq) = (vec![0.0; js.len()], vec![0.0; js.len()]);
        let lo = b * per;
        let hi = ((b + 1) * per).min(params.realizations);
        for r in lo..hi {
            let s = LatticeState::thermal(params.sites, params.h, temperature, params.seed, r as u64)?;
            let s = evolve(s, t, dt, background, env)?;
            let g1 = s.left[j1];
            for (i, &j) in js.iter().enumerate() {
                let v = g1 * s.left[j];
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        Ok((hi.saturating_sub(lo), sum, sq))
    };
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(nb);
    let mut results: Vec<Option<Result<(usize, Vec<f64>, Vec<f64>)>>> = (0..nb).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in results.chunks_mut(nb.div_ceil(threads)).enumerate() {
            let run = &run_batch;
            let first = w * nb.div_ceil(threads);
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run(first + i));
                }
            });
        }
    });
    let batches = results
        .into_iter()
        .map(|r| r.expect("every batch ran"))
        .collect::<Result<Vec<_>>>()?;
    let realizations = batches.iter().map(|b| b.0).sum();
    let ensemble = Ensemble { realizations, x2: xs.clone(), batches };
    let mean = ensemble.mean();
    let err = ensemble.std_error();
    let converged = match params.target_rel_error {
        Some(target) => mean.iter().zip(&err).all(|(m, e)| *e <= target * m.abs()),
        None => true,
    };
    let grid = CorrelationGrid::new(
        t,
        probe.position(j1),
        xs.into_iter().zip(mean).collect(),
        CorrelationMethod::MonteCarlo,
        temperature,
    )?;
    Ok(McCorrelation { grid, std_error: err, ensemble, converged })
}

/// Peak location of |mean| with its spread over batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McPeak {
    pub location: f64,
    /// Standard error of the location from the batch-wise maxima.
    pub statistical: f64,
    /// Lattice spacing of the x₂ samples.
    pub spacing: f64,
}

pub fn mc_peak_location(mc: &McCorrelation) -> McPeak {
    let argmax = |v: &[f64]| (0..v.len()).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
    let xs = &mc.ensemble.x2;
    let location = xs[argmax(&mc.ensemble.mean())];
    let locs: Vec<f64> = mc.ensemble.batch_means().iter().map(|m| xs[argmax(m)]).collect();
    let nb = locs.len() as f64;
    let statistical = if locs.len() > 1 {
        let mu = locs.iter().sum::<f64>() / nb;
        (locs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt()
    } else {
        0.0
    };
    let spacing = if xs.len() > 1 { (xs[1] - xs[0]).abs() } else { 0.0 };
    McPeak { location, statistical, spacing }
}
