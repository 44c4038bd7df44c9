//! The plane curve `gamma(p) = (-pi f, -lambda)`, canonical coordinates from its
//! Legendre-type transform, and flat coordinates `w = f^{-1}` on a monotone branch.
//!
//! Off-grid values come from the sinc interpolant of `f` and the exact principal value of
//! that interpolant, so a polished root is a root of the same function the nodes sample.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Axis, Profile, DECAY_TOL};
use crate::singular::{lambda_of, LambdaProfile};
use crate::spectral;

/// Slopes are masked where `|f'| <= DERIV_FLOOR * max |f'|`.
pub const DERIV_FLOOR: f64 = 1e-8;
const NEWTON_MAX: usize = 60;
const BISECT_MAX: usize = 200;
/// Zeros of `f'` and `lambda'` closer than this are one stationary point.
const PAIR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct CurveSample {
    pub p: Vec<f64>,
    /// `(-pi f, -lambda)`
    pub points: Vec<[f64; 2]>,
    /// `(-pi f', -lambda')`
    pub tangents: Vec<[f64; 2]>,
}

pub fn plane_curve(f: &Profile, lambda: &LambdaProfile) -> CurveSample {
    let fp = spectral::derivative(&f.values, f.spacing(), 1);
    CurveSample {
        p: f.nodes(),
        points: f
            .values
            .iter()
            .zip(lambda.values())
            .map(|(a, l)| [-PI * a, -l])
            .collect(),
        tangents: fp.iter().zip(lambda.prime()).map(|(a, l)| [-PI * a, -l]).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Slope {
    pub p: Vec<f64>,
    /// `m = lambda' / (pi f')`, `None` where `f'` is below the floor.
    pub values: Vec<Option<f64>>,
}

impl Slope {
    pub fn masked(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

pub fn slope_function(f: &Profile, lambda: &LambdaProfile) -> Result<Slope> {
    let fp = spectral::derivative(&f.values, f.spacing(), 1);
    let floor = DERIV_FLOOR * fp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let values: Vec<Option<f64>> = fp
        .iter()
        .zip(lambda.prime())
        .map(|(&d, &l)| (d.abs() > floor && floor > 0.0).then(|| l / (PI * d)))
        .collect();
    if values.iter().all(Option::is_none) {
        return Err(Error::DegenerateDerivative("f' vanishes at every node".into()));
    }
    Ok(Slope { p: f.nodes(), values })
}

/// `f`, `lambda` and their first two derivatives anywhere on the axis.
pub struct OffGrid {
    axis: Axis,
    f: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
}

impl OffGrid {
    pub fn new(f: &Profile) -> Result<Self> {
        f.require_decay("coords: f", DECAY_TOL)?;
        let h = f.spacing();
        Ok(OffGrid {
            axis: f.axis,
            f: f.values.clone(),
            f1: spectral::derivative(&f.values, h, 1),
            f2: spectral::derivative(&f.values, h, 2),
        })
    }

    pub fn f(&self, p: f64) -> f64 {
        spectral::sinc_value(&self.f, &self.axis, p)
    }
    pub fn fp(&self, p: f64) -> f64 {
        spectral::sinc_value(&self.f1, &self.axis, p)
    }
    pub fn fpp(&self, p: f64) -> f64 {
        spectral::sinc_value(&self.f2, &self.axis, p)
    }
    pub fn lambda(&self, p: f64) -> f64 {
        p + spectral::sinc_pv(&self.f, &self.axis, p)
    }
    pub fn lambda_p(&self, p: f64) -> f64 {
        1.0 + spectral::sinc_pv(&self.f1, &self.axis, p)
    }
    pub fn lambda_pp(&self, p: f64) -> f64 {
        spectral::sinc_pv(&self.f2, &self.axis, p)
    }
    pub fn slope(&self, p: f64) -> f64 {
        self.lambda_p(p) / (PI * self.fp(p))
    }
}

/// Fritsch-Carlson monotone cubic through `(x_i, y_i)` with `x` strictly increasing.
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                    let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = delta[0];
            d[n - 1] = delta[n - 2];
        }
        Pchip { x, y, d }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s).powi(2), s * (1.0 - s).powi(2));
        let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// Samples of `g` at the nodes inside `[a, b]` plus both ends, with increasing `p`.
fn window_samples(axis: &Axis, a: f64, b: f64, g: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![a];
    p.extend(axis.nodes().into_iter().filter(|&q| q > a && q < b));
    p.push(b);
    let v = p.iter().map(|&q| g(q)).collect();
    (p, v)
}

fn strictly_monotone(v: &[f64]) -> Option<f64> {
    let s = (v[v.len() - 1] - v[0]).signum();
    (s != 0.0 && v.windows(2).all(|w| (w[1] - w[0]) * s > 0.0)).then_some(s)
}

fn check_window(axis: &Axis, window: (f64, f64), what: &str) -> Result<()> {
    let (a, b) = window;
    let lo = axis.node(0);
    let hi = axis.node(axis.n - 1);
    if !(a < b && a >= lo && b <= hi) {
        return Err(Error::BadConfig(format!("{what}: must be an increasing interval inside the p axis")));
    }
    Ok(())
}

/// Safeguarded Newton for `g(p) = 0` on a bracket `[lo, hi]` with a sign change.
fn polish(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, start: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let glo = g(lo);
    let mut p = start.clamp(lo, hi);
    for it in 0..NEWTON_MAX {
        let v = g(p);
        if v.abs() <= tol {
            return Ok(p);
        }
        if (v > 0.0) == (glo > 0.0) {
            lo = p;
        } else {
            hi = p;
        }
        let mut next = p - v / dg(p);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - p).abs() <= 4.0 * f64::EPSILON * p.abs().max(1.0) {
            return Ok(next);
        }
        p = next;
        if it + 1 == NEWTON_MAX {
            return Err(Error::NoConvergence {
                iterations: NEWTON_MAX,
                residual: g(p).abs(),
            });
        }
    }
    unreachable!()
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..BISECT_MAX {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign changes of `g` between consecutive nodes, each refined by bisection.
fn zeros(axis: &Axis, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let nodes = axis.nodes();
    let vals: Vec<f64> = nodes.iter().map(|&p| g(p)).collect();
    let mut out = Vec::new();
    for i in 0..nodes.len() - 1 {
        if vals[i] == 0.0 {
            out.push(nodes[i]);
        } else if vals[i] * vals[i + 1] < 0.0 {
            out.push(bisect(&g, nodes[i], nodes[i + 1]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StationaryPoint {
    pub p: f64,
    /// `-alpha_0 pi f(p) + lambda(p)`
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ChartOptions {
    pub window: (f64, f64),
    /// Defaults to `m(window)` pulled in by `ALPHA_MARGIN` of its length at each end.
    pub alpha_range: Option<(f64, f64)>,
    pub alpha_nodes: usize,
    pub alpha0: f64,
    pub tol: f64,
}

pub const ALPHA_MARGIN: f64 = 0.02;

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            window: (0.2, 1.5),
            alpha_range: None,
            alpha_nodes: 41,
            alpha0: 0.0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalChart {
    /// Chebyshev-Lobatto nodes, increasing.
    pub alpha: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `-alpha pi f(kappa) + lambda(kappa)`
    pub r: Vec<f64>,
    /// `|-alpha pi f'(kappa) + lambda'(kappa)|`
    pub residual: Vec<f64>,
    /// `-pi f(kappa)`, the envelope slope `dr/dalpha`
    pub envelope: Vec<f64>,
    pub alpha0: f64,
    pub stationary: Vec<StationaryPoint>,
}

impl CanonicalChart {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// `max |dr/dalpha + pi f(kappa)|` with `dr/dalpha` from Chebyshev differentiation.
    pub fn envelope_residual(&self) -> f64 {
        let d = chebyshev_diff(&self.alpha);
        let dr = &d * nalgebra::DVector::from_column_slice(&self.r);
        dr.iter().zip(&self.envelope).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Lobatto nodes of `[a, b]`, increasing.
pub fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let c = -(PI * j as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * c
        })
        .collect()
}

/// Differentiation matrix on arbitrary distinct nodes from barycentric weights.
pub fn chebyshev_diff(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = w[j] / w[i] / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

pub fn canonical_chart(f: &Profile, opts: &ChartOptions) -> Result<CanonicalChart> {
    check_window(&f.axis, opts.window, "window")?;
    if opts.alpha_nodes < 2 {
        return Err(Error::BadConfig("alpha_nodes: must be >= 2".into()));
    }
    let g = OffGrid::new(f)?;
    let fp_max = f.axis.nodes().iter().fold(0.0f64, |a, &p| a.max(g.fp(p).abs()));
    if fp_max == 0.0 {
        return Err(Error::DegenerateDerivative("f' vanishes identically".into()));
    }
    let (a, b) = opts.window;
    let (ps, fps) = window_samples(&f.axis, a, b, |p| g.fp(p));
    if fps.iter().any(|v| v.abs() <= DERIV_FLOOR * fp_max) {
        return Err(Error::DegenerateDerivative(format!("f' vanishes inside the window [{a}, {b}]")));
    }
    let ms: Vec<f64> = ps.iter().map(|&p| g.slope(p)).collect();
    let sign = strictly_monotone(&ms).ok_or_else(|| Error::NonMonotone(format!("slope m on [{a}, {b}]")))?;
    let (m_lo, m_hi) = (ms[0].min(ms[ms.len() - 1]), ms[0].max(ms[ms.len() - 1]));
    let (al, ah) = match opts.alpha_range {
        Some(r) => r,
        None => {
            let pad = ALPHA_MARGIN * (m_hi - m_lo);
            (m_lo + pad, m_hi - pad)
        }
    };
    if !(al < ah && al >= m_lo && ah <= m_hi) {
        return Err(Error::BadConfig(format!("alpha_range: must lie inside m(window) = [{m_lo}, {m_hi}]")));
    }
    // kappa = m^{-1}, interpolated in increasing m
    let (mut mx, mut px) = (ms.clone(), ps.clone());
    if sign < 0.0 {
        mx.reverse();
        px.reverse();
    }
    let inverse = Pchip::new(mx, px);
    let alpha = chebyshev_nodes(al, ah, opts.alpha_nodes);
    let mut kappa = Vec::with_capacity(alpha.len());
    for &al in &alpha {
        // root of -alpha pi f' + lambda'; scaled by 1/(pi f') it is m - alpha
        let res = |p: f64| -al * PI * g.fp(p) + g.lambda_p(p);
        let dres = |p: f64| -al * PI * g.fpp(p) + g.lambda_pp(p);
        let scale = (al * PI * fp_max).abs().max(1.0);
        kappa.push(polish(res, dres, inverse.eval(al), a, b, 1e-3 * opts.tol * scale)?);
    }
    let residual: Vec<f64> = alpha
        .iter()
        .zip(&kappa)
        .map(|(&al, &k)| (-al * PI * g.fp(k) + g.lambda_p(k)).abs())
        .collect();
    if let Some(worst) = residual.iter().cloned().reduce(f64::max).filter(|&w| w > opts.tol) {
        return Err(Error::NoConvergence {
            iterations: NEWTON_MAX,
            residual: worst,
        });
    }
    let r = alpha
        .iter()
        .zip(&kappa)
        .map(|(&al, &k)| -al * PI * g.f(k) + g.lambda(k))
        .collect();
    let envelope = kappa.iter().map(|&k| -PI * g.f(k)).collect();
    Ok(CanonicalChart {
        alpha,
        kappa,
        r,
        residual,
        envelope,
        alpha0: opts.alpha0,
        stationary: stationary_points(&g, opts.alpha0),
    })
}

/// Points where `f'` and `lambda'` vanish together.
pub fn stationary_points(g: &OffGrid, alpha0: f64) -> Vec<StationaryPoint> {
    let zf = zeros(&g.axis, |p| g.fp(p));
    let zl = zeros(&g.axis, |p| g.lambda_p(p));
    zf.into_iter()
        .filter(|&p| zl.iter().any(|&q| (p - q).abs() <= PAIR_TOL))
        .map(|p| StationaryPoint {
            p,
            r: -alpha0 * PI * g.f(p) + g.lambda(p),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatCoordinate {
    pub mu: Vec<f64>,
    pub w: Vec<f64>,
    /// `|f(w) - mu|`
    pub residual: Vec<f64>,
}

impl FlatCoordinate {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// `w(mu) = f^{-1}(mu)` on the branch `[a, b]`, where `f` must be strictly monotone.
pub fn flat_coordinate(f: &Profile, branch: (f64, f64), mu: &[f64]) -> Result<FlatCoordinate> {
    check_window(&f.axis, branch, "branch")?;
    let g = OffGrid::new(f)?;
    let (a, b) = branch;
    let (ps, fs) = window_samples(&f.axis, a, b, |p| g.f(p));
    let sign = strictly_monotone(&fs).ok_or_else(|| Error::NonMonotone(format!("f on [{a}, {b}]")))?;
    let (lo, hi) = (fs[0].min(fs[fs.len() - 1]), fs[0].max(fs[fs.len() - 1]));
    if let Some(bad) = mu.iter().find(|&&m| !(m >= lo && m <= hi)) {
        return Err(Error::BadConfig(format!("mu: {bad} outside f(branch) = [{lo}, {hi}]")));
    }
    let (mut fx, mut px) = (fs, ps);
    if sign < 0.0 {
        fx.reverse();
        px.reverse();
    }
    let inverse = Pchip::new(fx, px);
    let tol = 1e-3 * 1e-10 * hi.abs().max(lo.abs()).max(1.0);
    let w = mu
        .iter()
        .map(|&m| polish(|p| g.f(p) - m, |p| g.fp(p), inverse.eval(m), a, b, tol))
        .collect::<Result<Vec<_>>>()?;
    let residual = w.iter().zip(mu).map(|(&p, &m)| (g.f(p) - m).abs()).collect();
    Ok(FlatCoordinate {
        mu: mu.to_vec(),
        w,
        residual,
    })
}

/// Convenience: curve, slope and chart of one profile.
pub fn curve_of(f: &Profile) -> Result<(CurveSample, Slope)> {
    let lambda = lambda_of(f)?;
    let curve = plane_curve(f, &lambda);
    let slope = slope_function(f, &lambda)?;
    Ok((curve, slope))
}
