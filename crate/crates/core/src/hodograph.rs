//! Implicit solutions from the hodograph condition
//! `x + y p + t (p^2 + 2 A^0) = dK/df(p)` with `K = integral k(f, lambda) dp`.
//!
//! The condition is imposed in a weighted norm with window `|f| + WINDOW_EPS`: the left
//! side grows like `p^2`, so a pointwise identity on a truncated grid only makes sense
//! where `f` lives.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Profile, DECAY_TOL};
use crate::hierarchy::ScalarFn;
use crate::moments::raw_moments;
use crate::singular::pv_decaying;
use crate::spectral;

pub const WINDOW_EPS: f64 = 1e-8;
/// Relaxation of the fixed-point fallback.
pub const FIXED_POINT_RELAXATION: f64 = 0.1;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// One separable term `coef * h(mu) nu^n / n!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTerm {
    pub h: ScalarFn,
    pub n: usize,
    #[serde(default = "one")]
    pub coef: f64,
}

fn one() -> f64 {
    1.0
}

/// `k(mu, nu)` as a sum of separable terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSpec {
    pub terms: Vec<KTerm>,
}

/// `k` and its partial derivatives at one node.
#[derive(Debug, Clone, Copy, Default)]
struct KPartials {
    k: f64,
    k1: f64,
    k2: f64,
    k11: f64,
    k12: f64,
    k22: f64,
}

fn nu_power(nu: f64, n: isize) -> f64 {
    // nu^n / n!, zero for negative n
    if n < 0 {
        return 0.0;
    }
    (1..=n).fold(1.0, |acc, k| acc * nu / k as f64)
}

impl KSpec {
    /// `h_a(mu) + eps mu nu^2 / 2` with the entropy `h_a(mu) = mu - mu ln(mu / a)`. For
    /// `t > eps / 2` the condition has a Gaussian-like solution of the sign of `a`, unique
    /// for `a > 0`. For `a < 0` the self-consistency in `A^0` has a root only when `|a|` is
    /// small: at `eps = 0` it reads `s e^{-s} = -2 t a e^{-x} (pi/t)^{1/2} e^{y^2/4t}`.
    pub fn entropy(a: f64, eps: f64) -> Self {
        let mut terms = vec![KTerm {
            h: ScalarFn::Entropy { a },
            n: 0,
            coef: 1.0,
        }];
        if eps != 0.0 {
            terms.push(KTerm {
                h: ScalarFn::power(1),
                n: 2,
                coef: eps,
            });
        }
        KSpec { terms }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            let p = format!("{path}.terms[{i}]");
            t.h.validate(&format!("{p}.h"))?;
            if !t.coef.is_finite() {
                return Err(Error::BadConfig(format!("{p}.coef: must be finite")));
            }
            if t.h.value(0.0) != 0.0 {
                return Err(Error::BadConfig(format!("{p}.h: must vanish at 0")));
            }
        }
        Ok(())
    }

    fn partials(&self, mu: f64, nu: f64) -> KPartials {
        let mut out = KPartials::default();
        for t in &self.terms {
            let n = t.n as isize;
            let (h, h1, h2) = (t.h.value(mu), t.h.d1(mu), t.h.d2(mu));
            let (v0, v1, v2) = (nu_power(nu, n), nu_power(nu, n - 1), nu_power(nu, n - 2));
            out.k += t.coef * h * v0;
            out.k1 += t.coef * h1 * v0;
            out.k2 += t.coef * h * v1;
            out.k11 += t.coef * h2 * v0;
            out.k12 += t.coef * h1 * v1;
            out.k22 += t.coef * h * v2;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Initial Newton step length (1 = full step).
    pub damping: f64,
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 60,
            damping: 1.0,
            tol: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::BadConfig(format!("{path}.max_iter: must be >= 1")));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::BadConfig(format!("{path}.damping: must lie in (0, 1]")));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::BadConfig(format!("{path}.tol: must be positive")));
        }
        Ok(())
    }
}

/// Point in the `(x, y, t)` space of the hierarchy times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct HodographProblem {
    pub k: KSpec,
    pub points: Vec<Point>,
    pub guess: Profile,
    pub options: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct PointSolution {
    pub point: Point,
    pub f: Profile,
    /// `max |(|f| + eps) r|` at exit.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations that fell back to the relaxed fixed-point update.
    pub fallbacks: usize,
    /// Extreme eigenvalues of the window-scaled second variation `W J W` along the Newton
    /// path. The raw spectrum is dominated by `1/f` in the tails.
    pub hessian_min: f64,
    pub hessian_max: f64,
}

#[derive(Debug, Clone)]
pub struct HodographSolution {
    pub points: Vec<PointSolution>,
}

impl HodographSolution {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

/// `pv` as a dense matrix: `(P u)_i = sum_j w_{i-j} u_j` with `w_m = 2/m` for odd `m`.
fn pv_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let m = i as isize - j as isize;
        if m % 2 != 0 {
            2.0 / m as f64
        } else {
            0.0
        }
    })
}

struct Evaluation {
    r: Vec<f64>,
    partials: Vec<KPartials>,
    lambda: Vec<f64>,
}

fn evaluate(f: &Profile, pt: Point, k: &KSpec) -> Evaluation {
    let axis = f.axis;
    let nodes = axis.nodes();
    let pv_f = spectral::pv_sum(&f.values);
    let lambda: Vec<f64> = nodes.iter().zip(&pv_f).map(|(p, v)| p + v).collect();
    let partials: Vec<KPartials> = f
        .values
        .iter()
        .zip(&lambda)
        .map(|(&mu, &nu)| k.partials(mu, nu))
        .collect();
    let k2 = Profile::new(axis, partials.iter().map(|q| q.k2).collect());
    let pv_k2 = pv_decaying(&k2).values;
    let a0 = f.integral();
    let r = (0..f.len())
        .map(|j| {
            let p = nodes[j];
            pt.x + pt.y * p + pt.t * (p * p + 2.0 * a0) - partials[j].k1 + pv_k2[j]
        })
        .collect();
    Evaluation { r, partials, lambda }
}

/// `r(p) = x + y p + t (p^2 + 2 A^0) - dK/df(p)` with
/// `dK/df = d1 k(f, lambda) - pv(d2 k(f, lambda))`. Unweighted.
pub fn hodograph_residual(f: &Profile, pt: Point, k: &KSpec) -> Result<Profile> {
    k.validate("k")?;
    f.require_decay("hodograph_residual: f", DECAY_TOL)?;
    Ok(Profile::new(f.axis, evaluate(f, pt, k).r))
}

fn window(f: &Profile) -> Vec<f64> {
    f.values.iter().map(|v| v.abs() + WINDOW_EPS).collect()
}

/// `max |(|f| + eps) r|`.
pub fn weighted_residual(f: &Profile, r: &[f64]) -> f64 {
    window(f)
        .iter()
        .zip(r)
        .map(|(w, v)| (w * v).abs())
        .fold(0.0, f64::max)
}

fn jacobian_from(e: &Evaluation, h: f64, t: f64, pv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = e.r.len();
    let col = |g: &dyn Fn(&KPartials) -> f64| DVector::from_iterator(n, e.partials.iter().map(g));
    let (k11, k12, k22) = (col(&|q| q.k11), col(&|q| q.k12), col(&|q| q.k22));
    // P diag(k22) P
    let mut pdp = pv.clone();
    for (j, mut c) in pdp.column_iter_mut().enumerate() {
        c *= k22[j];
    }
    let pdp = &pdp * pv;
    let mut jac = DMatrix::from_element(n, n, 2.0 * t * h);
    for i in 0..n {
        for j in 0..n {
            jac[(i, j)] += -k12[i] * pv[(i, j)] + pv[(i, j)] * k12[j] + pdp[(i, j)];
        }
        jac[(i, i)] -= k11[i];
    }
    jac
}

/// Dense Jacobian `dr_i/df_j` (the second variation of the functional, symmetric):
/// `2 t h 11^T - diag(k11) - diag(k12) P + P diag(k12) + P diag(k22) P`.
pub fn jacobian(f: &Profile, pt: Point, k: &KSpec) -> Result<DMatrix<f64>> {
    k.validate("k")?;
    let e = evaluate(f, pt, k);
    Ok(jacobian_from(&e, f.spacing(), pt.t, &pv_matrix(f.len())))
}

/// `A^0 x + A^1 y + (A^2 + (A^0)^2) t - integral k(f, lambda) dp`, whose gradient is the
/// hodograph residual.
pub fn functional_value(f: &Profile, pt: Point, k: &KSpec) -> f64 {
    let a = raw_moments(f, 2).values;
    let e = evaluate(f, pt, k);
    let big_k: f64 = e.partials.iter().map(|q| q.k).sum::<f64>() * f.spacing();
    let _ = e.lambda;
    a[0] * pt.x + a[1] * pt.y + (a[2] + a[0] * a[0]) * pt.t - big_k
}

fn merit(w: &[f64], r: &[f64]) -> f64 {
    0.5 * w.iter().zip(r).map(|(w, v)| (w * v).powi(2)).sum::<f64>()
}

fn finite(r: &[f64]) -> bool {
    r.iter().all(|v| v.is_finite())
}

/// Damped Newton with Armijo backtracking on `1/2 |W r|^2`; a relaxed fixed-point update
/// `f <- f - FIXED_POINT_RELAXATION (|f| + eps) r` stands in when the Jacobian is singular
/// or the line search fails.
pub fn solve_point(k: &KSpec, pt: Point, guess: &Profile, opts: &SolverOptions) -> Result<PointSolution> {
    k.validate("k")?;
    opts.validate("options")?;
    guess.require_decay("hodograph guess", DECAY_TOL)?;
    let n = guess.len();
    let h = guess.spacing();
    let pv = pv_matrix(n);
    let mut f = guess.clone();
    let mut e = evaluate(&f, pt, k);
    if !finite(&e.r) {
        return Err(Error::BadConfig("hodograph guess: residual not finite (sign of f against k?)".into()));
    }
    let (mut hmin, mut hmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut fallbacks = 0;
    let mut iterations = 0;
    let mut res = weighted_residual(&f, &e.r);
    while res > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let jac = jacobian_from(&e, h, pt.t, &pv);
        let w = window(&f);
        let wjw = DMatrix::from_fn(n, n, |i, j| 0.5 * w[i] * (jac[(i, j)] + jac[(j, i)]) * w[j]);
        let eig = SymmetricEigen::new(wjw).eigenvalues;
        hmin = hmin.min(eig.min());
        hmax = hmax.max(eig.max());
        // rows scaled by the window so that pivoting sees comparable magnitudes
        let mut a = jac;
        for (i, mut row) in a.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let rhs = DVector::from_iterator(n, (0..n).map(|i| -w[i] * e.r[i]));
        let step = a.lu().solve(&rhs).filter(|d| d.iter().all(|v| v.is_finite()));
        // the window is frozen at the current iterate so the Newton step is a descent direction
        let m0 = merit(&w, &e.r);
        let mut accepted = false;
        if let Some(d) = step {
            // directional derivative of the merit along d is -2 m0 for an exact Newton step
            let mut s = opts.damping;
            for _ in 0..MAX_BACKTRACKS {
                let trial = Profile::new(f.axis, (0..n).map(|i| f.values[i] + s * d[i]).collect());
                let te = evaluate(&trial, pt, k);
                if finite(&te.r) && merit(&w, &te.r) <= (1.0 - 2.0 * ARMIJO_C * s) * m0 {
                    f = trial;
                    e = te;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
        }
        if !accepted {
            fallbacks += 1;
            let w = window(&f);
            let trial = Profile::new(
                f.axis,
                (0..n)
                    .map(|i| f.values[i] - FIXED_POINT_RELAXATION * w[i] * e.r[i])
                    .collect(),
            );
            let te = evaluate(&trial, pt, k);
            if !finite(&te.r) {
                break;
            }
            f = trial;
            e = te;
        }
        res = weighted_residual(&f, &e.r);
    }
    let converged = res <= opts.tol;
    if converged {
        f.require_decay("hodograph solution", DECAY_TOL)?;
    }
    Ok(PointSolution {
        point: pt,
        f,
        residual: res,
        iterations,
        converged,
        fallbacks,
        hessian_min: hmin,
        hessian_max: hmax,
    })
}

/// Solves every point of the problem in parallel from the common guess. Points that do
/// not converge are flagged; the first hard error aborts.
pub fn solve(problem: &HodographProblem) -> Result<HodographSolution> {
    let points = problem
        .points
        .par_iter()
        .map(|&pt| solve_point(&problem.k, pt, &problem.guess, &problem.options))
        .collect::<Result<Vec<_>>>()?;
    Ok(HodographSolution { points })
}

/// Like [`solve_point`] but a non-converged result is an error.
pub fn solve_converged(k: &KSpec, pt: Point, guess: &Profile, opts: &SolverOptions) -> Result<PointSolution> {
    let s = solve_point(k, pt, guess, opts)?;
    if !s.converged {
        return Err(Error::NoConvergence {
            iterations: s.iterations,
            residual: s.residual,
        });
    }
    Ok(s)
}

/// Leading-order solution for the entropy family `KSpec::entropy(a, eps)`:
/// `f0 = a exp(-x - y p - (t - eps/2) p^2)`, corrected to first order in the amplitude by
/// `f0 (1 - (2t - eps) A^0[f0])`.
pub fn entropy_first_order(axis: Axis, a: f64, eps: f64, pt: Point) -> Profile {
    let f0 = Profile::from_fn(axis, |p| a * (-pt.x - pt.y * p - (pt.t - 0.5 * eps) * p * p).exp());
    let c = (2.0 * pt.t - eps) * f0.integral();
    f0.map(|v| v * (1.0 - c))
}

/// Central finite-difference directional derivatives of `functional_value` along
/// `count` seeded random directions `f q(p) exp(-p^2/8)`, `q` a random cubic.
pub fn stationarity(f: &Profile, pt: Point, k: &KSpec, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = f.nodes();
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = f
                .values
                .iter()
                .zip(&nodes)
                .map(|(fv, p)| fv / scale * (c[0] + p * (c[1] + p * (c[2] + p * c[3]))) * (-p * p / 8.0).exp())
                .collect();
            let s = 1e-5 * scale;
            let shift = |sign: f64| Profile::new(f.axis, f.values.iter().zip(&v).map(|(a, b)| a + sign * s * b).collect());
            (functional_value(&shift(1.0), pt, k) - functional_value(&shift(-1.0), pt, k)) / (2.0 * s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowInvariance {
    pub delta: f64,
    /// `|| f_y - (p f_x - A^0_x f_p) ||_2 / ||f||_2`
    pub benney: f64,
    /// `|| f_t - ((p^2 + A^0) f_x - (A^0_x p + A^1_x) f_p) ||_2 / ||f||_2`
    pub second: f64,
}

/// Solves on the seven-point stencil `pt`, `pt +- delta e_{x,y,t}` (warm-started from
/// the centre) and evaluates both kinetic flows with centred differences in the times and
/// spectral `p`-derivatives.
pub fn flow_invariance(k: &KSpec, pt: Point, guess: &Profile, delta: f64, opts: &SolverOptions) -> Result<FlowInvariance> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::BadConfig("delta: must be positive".into()));
    }
    let centre = solve_converged(k, pt, guess, opts)?;
    let shifted = |dx: f64, dy: f64, dt: f64| {
        solve_converged(
            k,
            Point {
                x: pt.x + dx,
                y: pt.y + dy,
                t: pt.t + dt,
            },
            &centre.f,
            opts,
        )
        .map(|s| s.f)
    };
    let d = delta;
    let stencil: Vec<(f64, f64, f64)> = vec![(d, 0.0, 0.0), (-d, 0.0, 0.0), (0.0, d, 0.0), (0.0, -d, 0.0), (0.0, 0.0, d), (0.0, 0.0, -d)];
    let sols = stencil
        .par_iter()
        .map(|&(a, b, c)| shifted(a, b, c))
        .collect::<Result<Vec<_>>>()?;
    let diff = |a: &Profile, b: &Profile| -> Vec<f64> { a.values.iter().zip(&b.values).map(|(u, v)| (u - v) / (2.0 * d)).collect() };
    let (fx, fy, ft) = (diff(&sols[0], &sols[1]), diff(&sols[2], &sols[3]), diff(&sols[4], &sols[5]));
    let moment = |f: &Profile, k: usize| raw_moments(f, 1).values[k];
    let a0x = (moment(&sols[0], 0) - moment(&sols[1], 0)) / (2.0 * d);
    let a1x = (moment(&sols[0], 1) - moment(&sols[1], 1)) / (2.0 * d);
    let f = &centre.f;
    let a0 = f.integral();
    let fp = spectral::derivative(&f.values, f.spacing(), 1);
    let nodes = f.nodes();
    let norm = f.l2().max(f64::MIN_POSITIVE);
    let h = f.spacing();
    let l2 = |v: Vec<f64>| (v.iter().map(|a| a * a).sum::<f64>() * h).sqrt() / norm;
    let benney = l2((0..f.len()).map(|j| fy[j] - (nodes[j] * fx[j] - a0x * fp[j])).collect());
    let second = l2(
        (0..f.len())
            .map(|j| {
                let p = nodes[j];
                ft[j] - ((p * p + a0) * fx[j] - (a0x * p + a1x) * fp[j])
            })
            .collect(),
    );
    Ok(FlowInvariance { delta, benney, second })
}
