//! Adaptive Gauss–Kronrod quadrature and an oscillatory tail integrator.
//!
//! The basic rule is the 7-point Gauss / 15-point Kronrod pair. Intervals are
//! kept in a max-heap keyed by their error estimate and the worst one is
//! bisected until the global estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::{Error, Result};

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_subdivisions: 4000,
        }
    }
}

impl QuadOptions {
    pub fn absolute(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            ..Default::default()
        }
    }

    pub fn relative(tol: f64) -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: tol,
            ..Default::default()
        }
    }

    /// Stop when either tolerance is met.
    pub fn mixed(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One GK15 panel: (Kronrod estimate, error estimate).
///
/// The error uses the QUADPACK scaling of |K − G| against the mean absolute
/// deviation of f on the panel, which is far less optimistic than |K − G|
/// alone when the integrand has a kink.
fn gk15<F: FnMut(f64) -> f64 + ?Sized>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [(0.0, 0.0); 7];
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[i] = (f1, f2);
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * k;
    let mut asc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        asc += WGK[i] * ((fv[i].0 - mean).abs() + (fv[i].1 - mean).abs());
    }
    let asc = asc * h.abs();
    let mut err = ((k - g) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    (k * h, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn integrate_finite<F: FnMut(f64) -> f64 + ?Sized>(
    f: &mut F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 1,
        });
    }
    let (v0, e0) = gk15(f, a, b);
    let mut evals = 15;
    if !v0.is_finite() {
        return Err(Error::Quadrature {
            msg: format!("non-finite integrand on [{a}, {b}]"),
            partial: v0,
            error_estimate: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        err: e0,
    });
    let mut total = v0;
    let mut err = e0;
    let mut splits = 0;
    while err > opts.target(total) {
        if splits >= opts.max_subdivisions {
            return Err(Error::Quadrature {
                msg: format!("{splits} subdivisions on [{a}, {b}]"),
                partial: total,
                error_estimate: err,
            });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval at machine resolution; accept what we have
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        splits += 1;
        if !(v1 + v2).is_finite() {
            return Err(Error::Quadrature {
                msg: format!("non-finite integrand near [{}, {}]", p.a, p.b),
                partial: total,
                error_estimate: err,
            });
        }
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            err: e2,
        });
        // resum to avoid drift from repeated subtraction
        if splits % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        } else {
            total += v1 + v2 - p.value;
            err += e1 + e2 - p.err;
        }
    }
    total = heap.iter().map(|p| p.value).sum();
    err = heap.iter().map(|p| p.err).sum();
    Ok(QuadratureResult {
        value: total,
        error_estimate: err,
        evaluations: evals,
    })
}

/// ∫ₐᵇ f(x) dx. Either limit may be infinite; infinite ranges are mapped onto
/// finite ones with x = a + t/(1 − t).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    integrate_dyn(&mut f, a, b, opts)
}

fn integrate_dyn(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::Domain("NaN integration limit".into()));
    }
    if a > b {
        return integrate_dyn(f, b, a, opts).map(|r| QuadratureResult {
            value: -r.value,
            ..r
        });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, opts),
        (true, false) => {
            let mut g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let u = 1.0 - t;
                let v = f(a + t / u) / (u * u);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            integrate_finite(&mut g, 0.0, 1.0, opts)
        }
        (false, true) => {
            let mut g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let u = 1.0 - t;
                let v = f(b - t / u) / (u * u);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            integrate_finite(&mut g, 0.0, 1.0, opts)
        }
        (false, false) => {
            let half = QuadOptions {
                abs_tol: 0.5 * opts.abs_tol,
                ..*opts
            };
            let l = integrate_dyn(f, f64::NEG_INFINITY, 0.0, &half)?;
            let r = integrate_dyn(f, 0.0, f64::INFINITY, &half)?;
            Ok(QuadratureResult {
                value: l.value + r.value,
                error_estimate: l.error_estimate + r.error_estimate,
                evaluations: l.evaluations + r.evaluations,
            })
        }
    }
}

/// [`integrate`] with an absolute tolerance.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    integrate(f, a, b, &QuadOptions::absolute(tol))
}

/// Wynn's epsilon algorithm on a sequence of partial sums.
///
/// Returns the most advanced even-column estimate and the difference to the
/// previous one as an error proxy.
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    if n == 0 {
        return (0.0, f64::INFINITY);
    }
    if n < 3 {
        let e = if n == 2 { (s[1] - s[0]).abs() } else { f64::INFINITY };
        return (s[n - 1], e);
    }
    // e[k] holds column k for the current anti-diagonal
    let mut prev_col: Vec<f64> = vec![0.0; n + 1]; // eps_{-1}
    let mut col: Vec<f64> = s.to_vec(); // eps_0
    let mut best = s[n - 1];
    let mut best_err = (s[n - 1] - s[n - 2]).abs();
    let mut k = 0;
    while col.len() > 1 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for j in 0..col.len() - 1 {
            let d = col[j + 1] - col[j];
            let v = if d == 0.0 {
                f64::INFINITY
            } else {
                prev_col[j + 1] + 1.0 / d
            };
            next.push(v);
        }
        k += 1;
        prev_col = col;
        col = next;
        if k % 2 == 0 && !col.is_empty() {
            let m = col.len();
            let last = col[m - 1];
            if !last.is_finite() {
                break;
            }
            if m >= 2 && col[m - 2].is_finite() {
                best = last;
                best_err = (col[m - 1] - col[m - 2]).abs();
            }
        }
        if col.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    (best, best_err)
}

/// ∫ₐ^∞ f(x) dx for a slowly decaying oscillatory integrand.
///
/// The range is cut into segments of one `period`; the partial sums are
/// accelerated with [`wynn_epsilon`]. `breakpoints` (sorted, > a) are
/// honoured as extra segment boundaries, which helps when the integrand has
/// a local feature.
pub fn integrate_oscillatory<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    period: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    if !(period > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "oscillatory quadrature needs finite start and positive period (a = {a}, period = {period})"
        )));
    }
    const MIN_SEGMENTS: usize = 12;
    const MAX_SEGMENTS: usize = 4000;
    let seg_opts = QuadOptions {
        abs_tol: 0.1 * opts.abs_tol,
        rel_tol: 0.1 * opts.rel_tol,
        ..*opts
    };
    let mut partial = Vec::new();
    let mut sum = 0.0;
    let mut evals = 0;
    let mut quad_err = 0.0;
    let mut lo = a;
    let mut bp = breakpoints.iter().copied().filter(|&x| x > a).peekable();
    let mut last_est = f64::NAN;
    let mut stable = 0;
    for n in 0..MAX_SEGMENTS {
        let mut hi = a + (n + 1) as f64 * period;
        // pull in breakpoints that fall before the next period edge
        while let Some(&p) = bp.peek() {
            if p <= lo {
                bp.next();
                continue;
            }
            if p < hi {
                let r = integrate(&mut f, lo, p, &seg_opts)?;
                sum += r.value;
                quad_err += r.error_estimate;
                evals += r.evaluations;
                lo = p;
                bp.next();
            } else {
                break;
            }
        }
        if hi <= lo {
            hi = lo + period;
        }
        let r = integrate(&mut f, lo, hi, &seg_opts)?;
        sum += r.value;
        quad_err += r.error_estimate;
        evals += r.evaluations;
        lo = hi;
        partial.push(sum);
        if partial.len() >= MIN_SEGMENTS && bp.peek().is_none() {
            // extrapolate over a sliding window to keep the table small
            let w = partial.len().min(40);
            let (est, e) = wynn_epsilon(&partial[partial.len() - w..]);
            let tol = opts.target(est);
            if e <= tol && (est - last_est).abs() <= tol {
                stable += 1;
                if stable >= 2 {
                    return Ok(QuadratureResult {
                        value: est,
                        error_estimate: e + quad_err,
                        evaluations: evals,
                    });
                }
            } else {
                stable = 0;
            }
            last_est = est;
        }
    }
    Err(Error::Quadrature {
        msg: format!("oscillatory tail did not settle after {MAX_SEGMENTS} periods"),
        partial: last_est,
        error_estimate: f64::INFINITY,
    })
}
