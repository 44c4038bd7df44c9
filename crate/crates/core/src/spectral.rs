//! FFT plumbing: periodic spectral derivatives and the discrete principal-value sum.
//!
//! The principal value `pv[u](p_i) = integral u(q) / (p_i - q) dq` of a band-limited
//! sample sequence is exactly `sum_j u_j w_{i-j}` with `w_m = 2/m` for odd `m` and zero
//! otherwise (integrate each sinc cardinal function against the Cauchy kernel). The sum
//! is a linear, not circular, convolution; it is evaluated by FFT on a buffer of twice
//! the length so no periodic images enter.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Axis, Field};

type Plan = Arc<dyn Fft<f64>>;

struct Plans {
    planner: FftPlanner<f64>,
    pv_kernels: HashMap<usize, Arc<Vec<Complex64>>>,
}

fn plans() -> &'static Mutex<Plans> {
    static PLANS: OnceLock<Mutex<Plans>> = OnceLock::new();
    PLANS.get_or_init(|| {
        Mutex::new(Plans {
            planner: FftPlanner::new(),
            pv_kernels: HashMap::new(),
        })
    })
}

fn fft_pair(n: usize) -> (Plan, Plan) {
    let mut guard = plans().lock().expect("fft plan cache poisoned");
    let fwd = guard.planner.plan_fft_forward(n);
    let inv = guard.planner.plan_fft_inverse(n);
    (fwd, inv)
}

/// Spectrum of the zero-padded principal-value kernel for `n` samples (length `2n`).
fn pv_kernel(n: usize) -> Arc<Vec<Complex64>> {
    if let Some(k) = plans().lock().expect("fft plan cache poisoned").pv_kernels.get(&n) {
        return k.clone();
    }
    let m = 2 * n;
    let mut k = vec![Complex64::new(0.0, 0.0); m];
    for d in (1..n).step_by(2) {
        let w = 2.0 / d as f64;
        k[d].re = w;
        k[m - d].re = -w;
    }
    let (fwd, _) = fft_pair(m);
    fwd.process(&mut k);
    let k = Arc::new(k);
    plans()
        .lock()
        .expect("fft plan cache poisoned")
        .pv_kernels
        .insert(n, k.clone());
    k
}

/// `sum_j u_j w_{i-j}` for every node `i`: the principal value `integral u(q)/(p_i - q) dq`
/// of the band-limited interpolant of `u`. No spacing factor appears.
pub fn pv_sum(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let m = 2 * n;
    let kernel = pv_kernel(n);
    let (fwd, inv) = fft_pair(m);
    let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(m, Complex64::new(0.0, 0.0));
    fwd.process(&mut buf);
    for (b, k) in buf.iter_mut().zip(kernel.iter()) {
        *b *= k;
    }
    inv.process(&mut buf);
    let scale = 1.0 / m as f64;
    buf[..n].iter().map(|c| c.re * scale).collect()
}

fn wavenumber(j: usize, n: usize, spacing: f64) -> f64 {
    let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * jj / (n as f64 * spacing)
}

fn apply_multiplier(u: &[f64], mult: impl Fn(usize, usize) -> Complex64) -> Vec<f64> {
    let n = u.len();
    let (fwd, inv) = fft_pair(n);
    let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (j, b) in buf.iter_mut().enumerate() {
        *b *= mult(j, n);
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// `d^order u / dp^order` of periodic samples via the Fourier multiplier `(ik)^order`.
/// The Nyquist mode is dropped for odd orders. Accurate only for data that decays to
/// zero at both ends of the window.
pub fn derivative(u: &[f64], spacing: f64, order: u32) -> Vec<f64> {
    if order == 0 {
        return u.to_vec();
    }
    apply_multiplier(u, |j, n| {
        if n % 2 == 0 && j == n / 2 && order % 2 == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, wavenumber(j, n, spacing)).powu(order)
        }
    })
}

/// Order of the spectral hyperviscosity: the damping rate at relative wavenumber `r`
/// (`r = 1` at Nyquist) is `rate * r^FILTER_ORDER`.
pub const FILTER_ORDER: i32 = 16;

fn filter_weight(j: usize, n: usize, strength: f64) -> f64 {
    let jj = if j <= n / 2 { j as f64 } else { n as f64 - j as f64 };
    let r = jj / (n as f64 / 2.0);
    (-strength * r.powi(FILTER_ORDER)).exp()
}

/// Multiplies mode `k` by `exp(-strength * (k / k_max)^FILTER_ORDER)`.
pub fn filter(u: &[f64], strength: f64) -> Vec<f64> {
    apply_multiplier(u, |j, n| Complex64::new(filter_weight(j, n, strength), 0.0))
}

/// Applies a 1-D transform to every x-column of a field.
fn map_columns(field: &Field, op: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Field {
    let (n_x, n_p) = (field.grid.x.n, field.grid.p.n);
    let cols: Vec<Vec<f64>> = (0..n_p)
        .into_par_iter()
        .map(|j| op(&(0..n_x).map(|i| field.values[i * n_p + j]).collect::<Vec<_>>()))
        .collect();
    let mut out = vec![0.0; field.values.len()];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out[i * n_p + j] = *v;
        }
    }
    Field {
        grid: field.grid,
        values: out,
    }
}

/// The exponential filter along x.
pub fn filter_x(field: &Field, strength: f64) -> Field {
    if strength == 0.0 {
        return field.clone();
    }
    map_columns(field, |c| filter(c, strength))
}

/// p-derivative of every row of a field.
pub fn d_dp(field: &Field, order: u32) -> Field {
    let h = field.grid.dp();
    let n_p = field.grid.p.n;
    let mut out = vec![0.0; field.values.len()];
    out.par_chunks_mut(n_p)
        .zip(field.values.par_chunks(n_p))
        .for_each(|(dst, src)| dst.copy_from_slice(&derivative(src, h, order)));
    Field {
        grid: field.grid,
        values: out,
    }
}

/// x-derivative of a field, one column at a time.
pub fn d_dx(field: &Field, order: u32) -> Field {
    let h = field.grid.dx();
    map_columns(field, |c| derivative(c, h, order))
}

/// Spectral x-derivative of a per-x series (one value per x-node).
pub fn d_dx_series(series: &[f64], axis: &Axis, order: u32) -> Vec<f64> {
    derivative(series, axis.spacing(), order)
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Whittaker (sinc) interpolant of decaying samples at an arbitrary point.
pub fn sinc_value(u: &[f64], axis: &Axis, p: f64) -> f64 {
    let h = axis.spacing();
    u.iter()
        .enumerate()
        .map(|(j, &v)| v * sinc((p - axis.node(j)) / h))
        .sum()
}

/// Principal value `integral u(q)/(p - q) dq` of the sinc interpolant at an arbitrary
/// point. Agrees with [`pv_sum`] on nodes.
pub fn sinc_pv(u: &[f64], axis: &Axis, p: f64) -> f64 {
    let h = axis.spacing();
    u.iter()
        .enumerate()
        .map(|(j, &v)| {
            let d = p - axis.node(j);
            let s = d / h;
            if s.abs() < 1e-8 {
                // (1 - cos(pi s)) / s -> pi^2 s / 2
                v * PI * PI * s / 2.0
            } else {
                // 1 - cos(x) = 2 sin^2(x/2), no cancellation
                v * 2.0 * (0.5 * PI * s).sin().powi(2) / s
            }
        })
        .sum()
}
