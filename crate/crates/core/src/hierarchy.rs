//! Principal-hierarchy densities `H_{h,n} = (1/n!) integral h(f) lambda^n dp`, their
//! variational derivatives, vector fields and flows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::{FrobeniusPoint, TangentCoefficient};
use crate::grid::{require_p_decay, Field, Profile, DECAY_TOL};
use crate::singular::{lambda_trusted, pv_decaying, pv_integral, LambdaProfile};
use crate::spectral;

/// A smooth scalar function of one variable with its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    /// `coef * mu^m`
    Power { coef: f64, m: u32 },
    /// `mu - mu ln(mu / a)`, defined for `mu / a > 0`.
    Entropy { a: f64 },
    /// Cubic Hermite interpolant of values and slopes on increasing nodes.
    Tabulated { mu: Vec<f64>, h: Vec<f64>, dh: Vec<f64> },
}

impl ScalarFn {
    pub fn power(m: u32) -> Self {
        ScalarFn::Power { coef: 1.0, m }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            ScalarFn::Power { coef, .. } if !coef.is_finite() => {
                Err(Error::BadConfig(format!("{path}.coef: must be finite")))
            }
            ScalarFn::Entropy { a } if !(a.is_finite() && *a != 0.0) => {
                Err(Error::BadConfig(format!("{path}.a: must be finite and nonzero")))
            }
            ScalarFn::Tabulated { mu, h, dh } => {
                if mu.len() < 2 || h.len() != mu.len() || dh.len() != mu.len() {
                    return Err(Error::BadConfig(format!(
                        "{path}: tabulated mu, h, dh need equal lengths >= 2"
                    )));
                }
                if mu.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::BadConfig(format!("{path}.mu: must be strictly increasing")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether `h(0) = 0` with `h` smooth at 0, so that `h(f)` decays with `f`.
    pub fn smooth_zero(&self) -> bool {
        match self {
            ScalarFn::Power { m, .. } => *m >= 1,
            ScalarFn::Entropy { .. } => false,
            ScalarFn::Tabulated { mu, .. } => {
                mu[0] <= 0.0 && *mu.last().unwrap() >= 0.0 && self.value(0.0).abs() < 1e-14
            }
        }
    }

    fn hermite(&self, x: f64) -> (f64, f64, f64) {
        let ScalarFn::Tabulated { mu, h, dh } = self else {
            unreachable!()
        };
        let k = match mu.partition_point(|&m| m <= x) {
            0 => 0,
            i if i >= mu.len() => mu.len() - 2,
            i => i - 1,
        };
        let w = mu[k + 1] - mu[k];
        let t = (x - mu[k]) / w;
        let (y0, y1, m0, m1) = (h[k], h[k + 1], dh[k] * w, dh[k + 1] * w);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        let dd = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1;
        (v, d / w, dd / (w * w))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Power { coef, m } => coef * x.powi(*m as i32),
            ScalarFn::Entropy { a } => {
                if x == 0.0 {
                    0.0
                } else {
                    x - x * (x / a).ln()
                }
            }
            ScalarFn::Tabulated { .. } => self.hermite(x).0,
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Power { coef, m } => match m {
                0 => 0.0,
                _ => coef * *m as f64 * x.powi(*m as i32 - 1),
            },
            ScalarFn::Entropy { a } => -(x / a).ln(),
            ScalarFn::Tabulated { .. } => self.hermite(x).1,
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Power { coef, m } => match m {
                0 | 1 => 0.0,
                _ => coef * (*m * (*m - 1)) as f64 * x.powi(*m as i32 - 2),
            },
            ScalarFn::Entropy { .. } => -1.0 / x,
            ScalarFn::Tabulated { .. } => self.hermite(x).2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub h: ScalarFn,
    pub n: usize,
}

impl DensitySpec {
    pub fn new(h: ScalarFn, n: usize) -> Self {
        DensitySpec { h, n }
    }

    /// `h = f^m` at level `n`.
    pub fn power(m: u32, n: usize) -> Self {
        DensitySpec::new(ScalarFn::power(m), n)
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        self.h.validate(&format!("{path}.h"))?;
        if !self.h.smooth_zero() {
            return Err(Error::BadConfig(format!(
                "{path}.h: must vanish at 0 and be smooth there"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HierarchyField {
    pub spec: DensitySpec,
    /// Coefficient `-dH/df` of the vector field `X = -dH/df . f'`.
    pub coefficient: TangentCoefficient,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(1/n!) integral h(f) lambda^n dp`.
pub fn density(f: &Profile, lambda: &LambdaProfile, spec: &DensitySpec) -> Result<f64> {
    density_with(f, lambda, spec, true)
}

pub(crate) fn density_with(f: &Profile, lambda: &LambdaProfile, spec: &DensitySpec, checked: bool) -> Result<f64> {
    let integrand = Profile::new(
        f.axis,
        f.values
            .iter()
            .zip(lambda.values())
            .map(|(&v, &l)| spec.h.value(v) * l.powi(spec.n as i32))
            .collect(),
    );
    if checked {
        integrand.require_decay("density: h(f) lambda^n", DECAY_TOL)?;
    }
    Ok(integrand.integral() / factorial(spec.n))
}

/// Variational derivative of `H_{h,m}` and its p-derivative:
/// `u = h'(f) lambda^m / m! - pv(h(f) lambda^{m-1}) / (m-1)!`,
/// `u' = h'' f' lambda^m / m! + h' lambda^{m-1} lambda' / (m-1)!
///       - pv(h' f' lambda^{m-1} + (m-1) h lambda^{m-2} lambda') / (m-1)!`.
fn gradient_with_slope(
    f: &Profile,
    lambda: &LambdaProfile,
    h: &ScalarFn,
    m: usize,
    checked: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pv = |u: &Profile| -> Result<Vec<f64>> {
        if checked {
            Ok(pv_integral(u)?.values)
        } else {
            Ok(pv_decaying(u).values)
        }
    };
    let n = f.len();
    let fp = spectral::derivative(&f.values, f.spacing(), 1);
    let (lam, lp) = (lambda.values(), lambda.prime());
    let hv: Vec<f64> = f.values.iter().map(|&v| h.value(v)).collect();
    let h1: Vec<f64> = f.values.iter().map(|&v| h.d1(v)).collect();
    let h2: Vec<f64> = f.values.iter().map(|&v| h.d2(v)).collect();
    let mf = factorial(m);
    let powi = |x: f64, k: usize| x.powi(k as i32);
    let mut u: Vec<f64> = (0..n).map(|j| h1[j] * powi(lam[j], m) / mf).collect();
    let mut up: Vec<f64> = (0..n).map(|j| h2[j] * fp[j] * powi(lam[j], m) / mf).collect();
    if m >= 1 {
        let m1f = factorial(m - 1);
        let a = Profile::new(f.axis, (0..n).map(|j| hv[j] * powi(lam[j], m - 1)).collect());
        let pv_a = pv(&a)?;
        let b = Profile::new(
            f.axis,
            (0..n)
                .map(|j| {
                    let mut v = h1[j] * fp[j] * powi(lam[j], m - 1);
                    if m >= 2 {
                        v += (m - 1) as f64 * hv[j] * powi(lam[j], m - 2) * lp[j];
                    }
                    v
                })
                .collect(),
        );
        let pv_b = pv(&b)?;
        for j in 0..n {
            u[j] -= pv_a[j] / m1f;
            up[j] += (h1[j] * powi(lam[j], m - 1) * lp[j] - pv_b[j]) / m1f;
        }
    }
    Ok((u, up))
}

/// `dH_{h,n}/df(p) = (1/n!) h'(f) lambda^n - (1/(n-1)!) pv(h(f) lambda^{n-1})`.
pub fn var_derivative(f: &Profile, lambda: &LambdaProfile, spec: &DensitySpec) -> Result<Profile> {
    let (u, _) = gradient_with_slope(f, lambda, &spec.h, spec.n, true)?;
    Ok(Profile::new(f.axis, u))
}

pub fn hierarchy_vf(f: &Profile, lambda: &LambdaProfile, spec: &DensitySpec) -> Result<HierarchyField> {
    hierarchy_vf_with(f, lambda, spec, true)
}

fn hierarchy_vf_with(f: &Profile, lambda: &LambdaProfile, spec: &DensitySpec, checked: bool) -> Result<HierarchyField> {
    let (u, up) = gradient_with_slope(f, lambda, &spec.h, spec.n, checked)?;
    let coefficient = TangentCoefficient::new(
        Profile::new(f.axis, u.iter().map(|v| -v).collect()),
        Profile::new(f.axis, up.iter().map(|v| -v).collect()),
    );
    Ok(HierarchyField {
        spec: spec.clone(),
        coefficient,
    })
}

/// Applies `op` to every x-slice after checking the decay of the field as a whole.
pub(crate) fn map_slices<T: Send>(field: &Field, op: impl Fn(Profile) -> Result<T> + Sync) -> Result<Vec<T>> {
    require_p_decay(field, "field: decay in p")?;
    (0..field.grid.x.n)
        .into_par_iter()
        .map(|i| op(field.slice(i)))
        .collect()
}

/// `u = dH_{h,level}/df` and `u_p` on every slice, as fields.
pub(crate) fn gradient_fields(field: &Field, h: &ScalarFn, level: usize) -> Result<(Field, Field)> {
    let grads = map_slices(field, |f| {
        let lambda = lambda_trusted(&f);
        gradient_with_slope(&f, &lambda, h, level, false)
    })?;
    let grid = field.grid;
    let mut u = Vec::with_capacity(grid.len());
    let mut up = Vec::with_capacity(grid.len());
    for (a, b) in grads {
        u.extend(a);
        up.extend(b);
    }
    Ok((Field { grid, values: u }, Field { grid, values: up }))
}

/// Canonical-bracket flow generated by `H_{h,level}`:
/// `f_t = u_p f_x - u_x f_p` with `u = dH/df` per slice.
pub fn level_flow_rhs(field: &Field, h: &ScalarFn, level: usize) -> Result<Field> {
    let (u, up) = gradient_fields(field, h, level)?;
    let grid = field.grid;
    let ux = spectral::d_dx(&u, 1);
    let fx = spectral::d_dx(field, 1);
    let fp = spectral::d_dp(field, 1);
    let values = (0..grid.len())
        .map(|k| up.values[k] * fx.values[k] - ux.values[k] * fp.values[k])
        .collect();
    Ok(Field { grid, values })
}

/// `d f / d t_{h,n} = {f, H_{h,n+1}}`.
pub fn hamiltonian_rhs(field: &Field, spec: &DensitySpec) -> Result<Field> {
    spec.validate("spec")?;
    level_flow_rhs(field, &spec.h, spec.n + 1)
}

/// The same flow through the Frobenius product: per slice, `V_X f_x` with `X` the
/// hierarchy field of `(h, n)`.
pub fn kernel_rhs(field: &Field, spec: &DensitySpec) -> Result<Field> {
    spec.validate("spec")?;
    let fx = spectral::d_dx(field, 1);
    let rows = map_slices(field, |f| {
        let point = FrobeniusPoint::trusted(&f);
        let x = hierarchy_vf_with(&f, &point.lambda, spec, false)?;
        let v = point.kernel_of(&x.coefficient)?;
        Ok(v)
    })?;
    let n_p = field.grid.p.n;
    let values: Vec<f64> = rows
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, v)| v.apply(&fx.values[i * n_p..(i + 1) * n_p]))
        .collect();
    Ok(Field {
        grid: field.grid,
        values,
    })
}
