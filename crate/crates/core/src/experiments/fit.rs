//! Levenberg–Marquardt least squares for the trace models.
//!
//! All models take `x` in µs, so frequencies come out in MHz.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

pub const MAX_ITERATIONS: usize = 200;
pub const RESTARTS: usize = 5;
/// Smallest acceptable singular-value ratio of the scaled Jacobian.
pub const IDENTIFIABILITY_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1σ uncertainties, present only when the fit converged.
    pub sigmas: Option<Vec<f64>>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    fn failed(model: &str, names: &[&str], reason: &str) -> Self {
        log::debug!("{model} fit not attempted: {reason}");
        Self {
            model: model.into(),
            names: names.iter().map(|s| s.to_string()).collect(),
            params: vec![f64::NAN; names.len()],
            sigmas: None,
            residual_norm: f64::NAN,
            converged: false,
            iterations: 0,
        }
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        let i = self.index(name)?;
        self.sigmas.as_ref().map(|s| s[i])
    }
}

struct Outcome {
    params: Vec<f64>,
    ssr: f64,
    converged: bool,
    iterations: usize,
}

fn residuals(model: &dyn Fn(&[f64], f64) -> f64, p: &[f64], x: &[f64], y: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(xi, yi)| model(p, *xi) - yi))
}

fn jacobian(model: &dyn Fn(&[f64], f64) -> f64, p: &[f64], x: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(1e-3);
        q[k] = p[k] + h;
        let up: Vec<f64> = x.iter().map(|xi| model(&q, *xi)).collect();
        q[k] = p[k] - h;
        for (i, xi) in x.iter().enumerate() {
            j[(i, k)] = (up[i] - model(&q, *xi)) / (2.0 * h);
        }
        q[k] = p[k];
    }
    j
}

fn levenberg_marquardt(
    model: &dyn Fn(&[f64], f64) -> f64,
    x: &[f64],
    y: &[f64],
    p0: &[f64],
) -> Outcome {
    let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut p = p0.to_vec();
    let mut r = residuals(model, &p, x, y);
    let mut ssr = r.norm_squared();
    let mut lambda = 1e-3;
    if !ssr.is_finite() {
        return Outcome {
            params: p,
            ssr,
            converged: false,
            iterations: 0,
        };
    }
    for it in 1..=MAX_ITERATIONS {
        if ssr <= 1e-28 * scale {
            return Outcome {
                params: p,
                ssr,
                converged: true,
                iterations: it - 1,
            };
        }
        let j = jacobian(model, &p, x);
        let jt = j.transpose();
        let h = &jt * &j;
        let g = &jt * &r;
        let mut accepted = false;
        while lambda < 1e14 {
            let mut a = h.clone();
            for k in 0..p.len() {
                a[(k, k)] += lambda * h[(k, k)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let r_new = residuals(model, &trial, x, y);
            let ssr_new = r_new.norm_squared();
            if ssr_new.is_finite() && ssr_new < ssr {
                let small_step = delta
                    .iter()
                    .zip(&p)
                    .all(|(d, v)| d.abs() <= 1e-10 * (v.abs() + 1e-10));
                let small_gain = ssr - ssr_new <= 1e-14 * ssr;
                p = trial;
                r = r_new;
                ssr = ssr_new;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if small_step || small_gain {
                    return Outcome {
                        params: p,
                        ssr,
                        converged: true,
                        iterations: it,
                    };
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left at working precision
            return Outcome {
                params: p,
                ssr,
                converged: true,
                iterations: it,
            };
        }
    }
    Outcome {
        params: p,
        ssr,
        converged: false,
        iterations: MAX_ITERATIONS,
    }
}

/// Runs LM from `p0`, retrying from jittered starts, then checks that every
/// parameter is identifiable and derives uncertainties.
fn fit_model(
    name: &str,
    names: &[&str],
    model: &dyn Fn(&[f64], f64) -> f64,
    x: &[f64],
    y: &[f64],
    p0: &[f64],
) -> (FitResult, Option<DMatrix<f64>>) {
    let mut best = levenberg_marquardt(model, x, y, p0);
    let mut attempt = 0;
    while !best.converged && attempt < RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt as u64);
        let start: Vec<f64> = p0
            .iter()
            .map(|v| {
                let n: f64 = StandardNormal.sample(&mut rng);
                v * (1.0 + 0.2 * n) + 0.01 * n
            })
            .collect();
        let o = levenberg_marquardt(model, x, y, &start);
        if o.converged || o.ssr < best.ssr {
            best = o;
        }
        attempt += 1;
    }
    let mut result = FitResult {
        model: name.into(),
        names: names.iter().map(|s| s.to_string()).collect(),
        params: best.params.clone(),
        sigmas: None,
        residual_norm: best.ssr.sqrt(),
        converged: best.converged && best.params.iter().all(|v| v.is_finite()),
        iterations: best.iterations,
    };
    if !result.converged {
        return (result, None);
    }
    let j = jacobian(model, &best.params, x);
    let mut scaled = j.clone();
    for (k, v) in best.params.iter().enumerate() {
        let s = v.abs().max(1e-6);
        scaled.column_mut(k).scale_mut(s);
    }
    let sv = scaled.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin / smax < IDENTIFIABILITY_LIMIT {
        result.converged = false;
        return (result, None);
    }
    let dof = (x.len() as f64 - best.params.len() as f64).max(1.0);
    let cov = (j.transpose() * &j)
        .pseudo_inverse(1e-300)
        .map(|m| m * (best.ssr / dof))
        .ok();
    result.sigmas = cov.as_ref().map(|c| {
        (0..best.params.len())
            .map(|k| c[(k, k)].max(0.0).sqrt())
            .collect()
    });
    (result, cov)
}

/// Least-squares coefficients of `y` on the columns of `basis` and the SSR.
fn linear_ls(basis: &DMatrix<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let svd = basis.clone().svd(true, true);
    let c = svd.solve(y, 1e-12).ok()?;
    let ssr = (basis * &c - y).norm_squared();
    Some((c, ssr))
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Dominant frequency of the linearly detrended trace, from a zero-padded
/// FFT with parabolic peak interpolation. Assumes uniform spacing.
pub fn spectral_peak(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 4 {
        return None;
    }
    let dt = (x[n - 1] - x[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return None;
    }
    let basis = DMatrix::from_fn(n, 2, |i, k| if k == 0 { 1.0 } else { x[i] });
    let yv = DVector::from_column_slice(y);
    let (c, _) = linear_ls(&basis, &yv)?;
    let npad = (16 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..npad)
        .map(|i| {
            if i < n {
                Complex::new(y[i] - c[0] - c[1] * x[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(npad).process(&mut buf);
    let mag: Vec<f64> = buf[..npad / 2].iter().map(|z| z.norm()).collect();
    let k = (1..mag.len() - 1).max_by(|a, b| mag[*a].total_cmp(&mag[*b]))?;
    let (m0, m1, m2) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = m0 - 2.0 * m1 + m2;
    let shift = if denom.abs() > 0.0 {
        0.5 * (m0 - m2) / denom
    } else {
        0.0
    };
    Some((k as f64 + shift.clamp(-0.5, 0.5)) / (npad as f64 * dt))
}

/// Best envelope from `candidates` with `f` fixed; returns `[A, env, f, φ, c]`.
fn cosine_start(
    x: &[f64],
    y: &[f64],
    f: f64,
    envelope: &dyn Fn(f64, f64) -> f64,
    candidates: &[f64],
) -> Vec<f64> {
    let yv = DVector::from_column_slice(y);
    let mut best = (f64::INFINITY, vec![0.0, candidates[0], f, 0.0, 0.0]);
    for &e in candidates {
        let basis = DMatrix::from_fn(x.len(), 3, |i, k| {
            let w = envelope(e, x[i]);
            match k {
                0 => w * (TAU * f * x[i]).cos(),
                1 => w * (TAU * f * x[i]).sin(),
                _ => 1.0,
            }
        });
        if let Some((c, ssr)) = linear_ls(&basis, &yv) {
            if ssr < best.0 {
                let amp = c[0].hypot(c[1]);
                best = (ssr, vec![amp, e, f, (-c[1]).atan2(c[0]), c[2]]);
            }
        }
    }
    best.1
}

const COSINE_NAMES: [&str; 5] = ["amplitude", "decay_rate", "frequency", "phase", "offset"];

/// `A·e^{−γx}·cos(2πfx + φ) + c`; the decay time is `1/γ`.
pub fn fit_damped_cosine(x: &[f64], y: &[f64]) -> FitResult {
    let model_name = "damped_cosine";
    if x.len() < 8 || x.len() != y.len() {
        return FitResult::failed(model_name, &COSINE_NAMES, "need at least 8 points");
    }
    let Some(f0) = spectral_peak(x, y) else {
        return FitResult::failed(model_name, &COSINE_NAMES, "no spectral peak");
    };
    let span = x[x.len() - 1] - x[0];
    let mut rates: Vec<f64> = vec![0.0];
    rates.extend(logspace(0.01 / span, 20.0 / span, 40));
    let p0 = cosine_start(x, y, f0, &|g, t| (-g * t).exp(), &rates);
    let model = |p: &[f64], t: f64| p[0] * (-p[1] * t).exp() * (TAU * p[2] * t + p[3]).cos() + p[4];
    fit_model(model_name, &COSINE_NAMES, &model, x, y, &p0).0
}

const GAUSS_NAMES: [&str; 5] = ["amplitude", "t2_star", "frequency", "phase", "offset"];

/// `A·exp(−(x/T2*)² − x/T2)·cos(2πfx + φ) + c` with `T2` held fixed.
pub fn fit_gaussian_cosine(x: &[f64], y: &[f64], t2_fixed: f64) -> FitResult {
    let model_name = "gaussian_cosine";
    if x.len() < 8 || x.len() != y.len() {
        return FitResult::failed(model_name, &GAUSS_NAMES, "need at least 8 points");
    }
    let Some(f0) = spectral_peak(x, y) else {
        return FitResult::failed(model_name, &GAUSS_NAMES, "no spectral peak");
    };
    let span = x[x.len() - 1] - x[0];
    let inv_t2 = if t2_fixed.is_finite() && t2_fixed > 0.0 {
        1.0 / t2_fixed
    } else {
        0.0
    };
    let taus: Vec<f64> = logspace(span / 20.0, 20.0 * span, 40).collect();
    let envelope = move |tau: f64, t: f64| (-(t / tau).powi(2) - t * inv_t2).exp();
    let p0 = cosine_start(x, y, f0, &envelope, &taus);
    let model =
        move |p: &[f64], t: f64| p[0] * envelope(p[1], t) * (TAU * p[2] * t + p[3]).cos() + p[4];
    let mut r = fit_model(model_name, &GAUSS_NAMES, &model, x, y, &p0).0;
    r.params[1] = r.params[1].abs();
    r
}

const EXP_NAMES: [&str; 3] = ["amplitude", "time_constant", "offset"];

/// `A·e^{−x/T} + c` with `T = e^u` kept positive.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> FitResult {
    let model_name = "exponential";
    if x.len() < 5 || x.len() != y.len() {
        return FitResult::failed(model_name, &EXP_NAMES, "need at least 5 points");
    }
    let span = x[x.len() - 1] - x[0];
    if !(span > 0.0) {
        return FitResult::failed(model_name, &EXP_NAMES, "zero span");
    }
    let dt = span / (x.len() - 1) as f64;
    let yv = DVector::from_column_slice(y);
    let mut best = (f64::INFINITY, vec![0.0, span.ln(), 0.0]);
    for t in logspace(dt / 2.0, 10.0 * span, 60) {
        let basis = DMatrix::from_fn(
            x.len(),
            2,
            |i, k| if k == 0 { (-x[i] / t).exp() } else { 1.0 },
        );
        if let Some((c, ssr)) = linear_ls(&basis, &yv) {
            if ssr < best.0 {
                best = (ssr, vec![c[0], t.ln(), c[1]]);
            }
        }
    }
    let model = |p: &[f64], t: f64| p[0] * (-t / p[1].exp()).exp() + p[2];
    let (mut r, _) = fit_model(model_name, &EXP_NAMES, &model, x, y, &best.1);
    let u = r.params[1];
    r.params[1] = u.exp();
    if let Some(s) = r.sigmas.as_mut() {
        s[1] *= r.params[1];
    }
    r
}

/// Location of the largest excursion from the trace's edge baseline,
/// refined by a parabola through the neighbouring points.
pub fn peak_location(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 3 || n != y.len() {
        return None;
    }
    let baseline = 0.5 * (y[0] + y[n - 1]);
    let k = (0..n).max_by(|a, b| {
        (y[*a] - baseline)
            .abs()
            .total_cmp(&(y[*b] - baseline).abs())
    })?;
    if k == 0 || k == n - 1 {
        return Some(x[k]);
    }
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom.abs() > 0.0 {
        0.5 * (y0 - y2) / denom
    } else {
        0.0
    };
    let h = x[k + 1] - x[k];
    Some(x[k] + shift.clamp(-1.0, 1.0) * h)
}
