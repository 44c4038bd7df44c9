//! Moments `A^k = integral p^k f dp` and the two hydrodynamic metrics in moment form.

use crate::error::{Error, Result};
use crate::frobenius::{intersection_form, FrobeniusPoint};
use crate::grid::{MomentVector, Profile, DECAY_TOL};
use crate::spectral;

/// Default highest moment index.
pub const DEFAULT_ORDER: usize = 6;

/// `A^0..A^K` by the rectangle rule. Fails when `p^K f` is not negligible at the edges.
pub fn moments(f: &Profile, order: usize) -> Result<MomentVector> {
    let nodes = f.nodes();
    let weighted = Profile::new(
        f.axis,
        f.values
            .iter()
            .zip(&nodes)
            .map(|(v, p)| v * p.powi(order as i32))
            .collect(),
    );
    weighted.require_decay(&format!("moments: p^{order} f"), DECAY_TOL)?;
    Ok(raw_moments(f, order))
}

/// Moments without the decay check (used on already-validated slices).
pub(crate) fn raw_moments(f: &Profile, order: usize) -> MomentVector {
    let h = f.spacing();
    let mut values = vec![0.0; order + 1];
    for (j, &v) in f.values.iter().enumerate() {
        let p = f.axis.node(j);
        let mut w = v * h;
        for a in values.iter_mut() {
            *a += w;
            w *= p;
        }
    }
    MomentVector { values }
}

/// `eta^{kn} = (k + n) A^{k+n-1}`.
pub fn km_metric(a: &MomentVector, k: usize, n: usize) -> Result<f64> {
    if k + n > a.order() + 1 {
        return Err(Error::BadConfig(format!(
            "km_metric: index {k}+{n}-1 exceeds moment order {}",
            a.order()
        )));
    }
    Ok((k + n) as f64 * a.get(k as isize + n as isize - 1))
}

/// Terms of the second metric in moment coordinates, returned separately so that
/// callers can form a magnitude scale.
fn g_terms(a: &MomentVector, k: usize, n: usize) -> Vec<f64> {
    let (k, n) = (k as isize, n as isize);
    let mut t = vec![
        (k * n) as f64 * a.get(k - 1) * a.get(n - 1),
        (k + n + 2) as f64 * a.get(k + n),
    ];
    for i in 0..n {
        t.push((k + i) as f64 * a.get(k + i - 1) * a.get(n - i - 1));
    }
    for i in 0..(n - 1).max(0) {
        t.push(-((n - i - 1) as f64) * a.get(k + i) * a.get(n - i - 2));
    }
    t
}

/// `g^{kn} = k n A^{k-1} A^{n-1} + (k+n+2) A^{k+n} + sum_{i<n} (k+i) A^{k+i-1} A^{n-i-1}
///  - sum_{i<n-1} (n-i-1) A^{k+i} A^{n-i-2}`.
pub fn g_metric_moments(a: &MomentVector, k: usize, n: usize) -> Result<f64> {
    if k + n > a.order() {
        return Err(Error::BadConfig(format!(
            "g_metric_moments: index {k}+{n} exceeds moment order {}",
            a.order()
        )));
    }
    Ok(g_terms(a, k, n).iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BridgeReport {
    pub k: usize,
    pub n: usize,
    pub eta_kernel: f64,
    pub eta_moment: f64,
    pub g_kernel: f64,
    pub g_moment: f64,
    /// Magnitude scales for relative residuals: integral of `|p^{k+n} f'|`, and the moment
    /// formula's terms summed in absolute value with `integral |p^j f|` in place of `A^j`.
    pub eta_scale: f64,
    pub g_scale: f64,
}

impl BridgeReport {
    pub fn eta_residual(&self) -> f64 {
        (self.eta_kernel - self.eta_moment).abs()
    }

    pub fn g_residual(&self) -> f64 {
        (self.g_kernel - self.g_moment).abs()
    }

    pub fn eta_relative(&self) -> f64 {
        relative(self.eta_residual(), self.eta_scale)
    }

    pub fn g_relative(&self) -> f64 {
        relative(self.g_residual(), self.g_scale)
    }
}

fn relative(abs: f64, scale: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else if scale > 0.0 {
        abs / scale
    } else {
        abs
    }
}

/// Kernel-quadrature evaluations of both metrics on monomial covectors `p^k`, `q^n`,
/// against their moment formulas.
pub fn metric_bridge(f: &Profile, k: usize, n: usize) -> Result<BridgeReport> {
    if k > 3 || n > 3 {
        return Err(Error::BadConfig(format!("metric_bridge: k, n must be <= 3 (got {k}, {n})")));
    }
    let point = FrobeniusPoint::new(f)?;
    let a = moments(f, k + n)?;
    let h = f.spacing();
    let fp = spectral::derivative(&f.values, h, 1);
    let nodes = f.nodes();
    let (mut eta_kernel, mut eta_scale) = (0.0, 0.0);
    for (p, d) in nodes.iter().zip(&fp) {
        let w = p.powi((k + n) as i32) * d * h;
        eta_kernel -= w;
        eta_scale += w.abs();
    }
    let ak = Profile::from_fn(f.axis, |p| p.powi(k as i32));
    let bn = Profile::from_fn(f.axis, |p| p.powi(n as i32));
    let g_kernel = intersection_form(&ak, &bn, &point);
    let eta_moment = km_metric(&a, k, n)?;
    let g_moment = g_metric_moments(&a, k, n)?;
    // absolute moments bound every term, also when symmetry makes the signed ones vanish
    let b = MomentVector {
        values: (0..=k + n)
            .map(|i| {
                f.values
                    .iter()
                    .zip(&nodes)
                    .map(|(v, p)| (v * p.powi(i as i32)).abs())
                    .sum::<f64>()
                    * h
            })
            .collect(),
    };
    let g_scale = g_terms(&b, k, n).iter().map(|t| t.abs()).sum();
    Ok(BridgeReport {
        k,
        n,
        eta_kernel,
        eta_moment,
        g_kernel,
        g_moment,
        eta_scale,
        g_scale,
    })
}
