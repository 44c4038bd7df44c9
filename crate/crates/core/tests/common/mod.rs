//! Reference values computed without the library: plain quadratures on closures.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Tanh-sinh quadrature on `[a, b]`; tolerates integrable endpoint singularities.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let r = 0.5 * (b - a);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    for k in -448i32..=448 {
        let t = k as f64 * h;
        let s = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / s.cosh().powi(2);
        if w < 1e-300 {
            continue;
        }
        // distances 1 + tanh s and 1 - tanh s without cancellation
        let node = if s < 0.0 {
            a + r * 2.0 / (1.0 + (-2.0 * s).exp())
        } else {
            b - r * 2.0 / (1.0 + (2.0 * s).exp())
        };
        if node <= a || node >= b {
            continue;
        }
        sum += w * f(node);
    }
    sum * r * h
}

/// `D(x) = exp(-x^2) integral_0^x exp(t^2) dt`.
pub fn dawson(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let s = x.signum();
    let x = x.abs();
    // substitute t = x - u so the integrand exp(-2xu + u^2) is bounded by 1
    s * tanh_sinh(|u| (-2.0 * x * u + u * u).exp(), 0.0, x)
}

/// `pv integral u(q) / (p - q) dq` by the midpoint rule on nodes offset by half a
/// spacing from `p`, truncated at `|q - p| <= width`.
pub fn pv_midpoint(u: impl Fn(f64) -> f64, p: f64, h: f64, width: f64) -> f64 {
    let m = (width / h).ceil() as i64;
    let mut s = 0.0;
    for k in 0..m {
        let d = (k as f64 + 0.5) * h;
        s += (u(p - d) - u(p + d)) / d;
    }
    h * s
}

/// `1/2 integral integral log|p - q| f(p) f(q) dp dq + 1/2 integral p^2 f dp`, in the
/// rotated variables `u = p - q`, `v = p + q`: trapezoid in `v`, tanh-sinh in `u`.
pub fn potential_oracle(f: impl Fn(f64) -> f64 + Copy, width: f64) -> f64 {
    let hv = 0.02;
    let nv = (2.0 * width / hv).ceil() as i64;
    let inner = |u: f64| -> f64 {
        let mut s = 0.0;
        for k in -nv..=nv {
            let v = k as f64 * hv;
            s += f(0.5 * (v + u)) * f(0.5 * (v - u));
        }
        s * hv
    };
    // dp dq = du dv / 2, and the integrand is even in u
    let log_part = tanh_sinh(|u| u.ln() * inner(u), 0.0, width);
    let h = 0.01;
    let n = (width / h).ceil() as i64;
    let quad: f64 = (-n..=n).map(|k| {
        let p = k as f64 * h;
        p * p * f(p)
    }).sum::<f64>() * h;
    0.5 * log_part + 0.5 * quad
}

/// Central difference of a functional along a direction.
pub fn directional(functional: impl Fn(&[f64]) -> f64, f: &[f64], v: &[f64], s: f64) -> f64 {
    let shift = |sign: f64| -> Vec<f64> { f.iter().zip(v).map(|(a, b)| a + sign * s * b).collect() };
    (functional(&shift(1.0)) - functional(&shift(-1.0))) / (2.0 * s)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
