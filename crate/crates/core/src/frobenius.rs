//! The Frobenius structure at one x-slice: metric, product, unity, Euler field,
//! intersection form and potential.
//!
//! Tangent vectors of the form `X = h f'` are stored through their coefficient `h`,
//! so no kernel ever divides by `f'`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Axis, Profile, DECAY_TOL};
use crate::singular::{lambda_of, lambda_second_trusted, lambda_trusted, pv_integral, LambdaProfile};
use crate::spectral;

/// `zeta'(-2)`, `zeta'(-4)`: endpoint-correction constants of the log-weighted trapezoid rule.
const ZETA_PRIME_M2: f64 = -0.030_448_457_058_393_27;
const ZETA_PRIME_M4: f64 = 0.007_983_811_450_268_625;

/// Relative noise level of a spectral derivative, used to separate round-off from
/// genuine lack of decay.
const ROUNDOFF_FLOOR: f64 = 1e3 * f64::EPSILON;

/// Fraction of nodes dropped at each end when comparing the potential's gradient with lambda.
pub const POTENTIAL_INTERIOR_CUT: f64 = 0.10;

/// A slice `f` together with the derived profiles every Frobenius operation needs.
#[derive(Debug, Clone)]
pub struct FrobeniusPoint {
    pub f: Profile,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub lambda: LambdaProfile,
    pub lambda_pp: Vec<f64>,
    /// Built from a slice of a field checked as a whole: per-slice decay checks are skipped.
    trusted: bool,
}

impl FrobeniusPoint {
    pub fn new(f: &Profile) -> Result<Self> {
        let lambda = lambda_of(f)?;
        Self::with_lambda(f, lambda)
    }

    pub fn with_lambda(f: &Profile, lambda: LambdaProfile) -> Result<Self> {
        f.require_decay("frobenius point: f", DECAY_TOL)?;
        Ok(Self::build(f, lambda, false))
    }

    pub(crate) fn trusted(f: &Profile) -> Self {
        Self::build(f, lambda_trusted(f), true)
    }

    fn build(f: &Profile, lambda: LambdaProfile, trusted: bool) -> Self {
        let h = f.spacing();
        FrobeniusPoint {
            fp: spectral::derivative(&f.values, h, 1),
            fpp: spectral::derivative(&f.values, h, 2),
            lambda_pp: lambda_second_trusted(f).values,
            lambda,
            f: f.clone(),
            trusted,
        }
    }

    pub fn axis(&self) -> Axis {
        self.f.axis
    }

    fn spacing(&self) -> f64 {
        self.f.spacing()
    }

    fn profile(&self, values: Vec<f64>) -> Profile {
        Profile::new(self.axis(), values)
    }

    /// Principal value of an integrand already known to decay: a polynomially weighted
    /// multiple of `f'` or `f''`. Such products sit on the spectral round-off floor of the
    /// derivative at the edges, which is not a resolution failure, so no proxy check here.
    fn pv(&self, values: Vec<f64>) -> Result<Vec<f64>> {
        Ok(spectral::pv_sum(&values))
    }

    /// Checks the tangent-vector invariant: `h f'` satisfies the decay proxy. Edge values
    /// at the round-off floor of the spectral `f'` (times `|h|`) are accepted, since a
    /// polynomially growing `h` lifts that floor without any loss of resolution.
    pub fn require_tangent(&self, x: &TangentCoefficient, what: &str) -> Result<()> {
        if self.trusted {
            return Ok(());
        }
        let v = self.vector(x);
        let peak = crate::grid::max_abs(&v);
        if !v.iter().all(|a| a.is_finite()) {
            return Err(Error::under_resolved(format!("{what}: non-finite"), f64::INFINITY, DECAY_TOL));
        }
        if peak == 0.0 {
            return Ok(());
        }
        let floor = ROUNDOFF_FLOOR * crate::grid::max_abs(&self.fp);
        let band = self.axis().boundary_nodes();
        let n = v.len();
        let mut worst = 0.0f64;
        for j in (0..band).chain(n - band..n) {
            let excess = v[j].abs() - floor * x.h.values[j].abs();
            worst = worst.max(excess / peak);
        }
        if worst > DECAY_TOL {
            return Err(Error::under_resolved(what, worst, DECAY_TOL));
        }
        Ok(())
    }

    /// The vector `h f'` represented by a coefficient.
    pub fn vector(&self, x: &TangentCoefficient) -> Vec<f64> {
        x.h.values.iter().zip(&self.fp).map(|(h, d)| h * d).collect()
    }

    /// Discrete L2 norm of the vector `h f'`.
    pub fn norm(&self, x: &TangentCoefficient) -> f64 {
        crate::grid::l2(&self.vector(x), self.spacing())
    }

    /// `eta(X, Y) = -integral h_X h_Y f' dp`.
    pub fn eta_pair(&self, x: &TangentCoefficient, y: &TangentCoefficient) -> f64 {
        -self.spacing()
            * (0..self.fp.len())
                .map(|j| x.h.values[j] * y.h.values[j] * self.fp[j])
                .sum::<f64>()
    }

    /// Difference quotient `(h(p) - h(q)) / (p - q)` with diagonal `h'(p)`.
    fn quotient_row<'a>(&self, x: &'a TangentCoefficient, i: usize) -> impl Iterator<Item = f64> + 'a {
        let axis = self.axis();
        let hi = x.h.values[i];
        let pi = axis.node(i);
        let dhi = x.dh.values[i];
        let hv = &x.h.values;
        (0..hv.len()).map(move |j| {
            if j == i {
                dhi
            } else {
                (hi - hv[j]) / (pi - axis.node(j))
            }
        })
    }

    /// Coefficient of the collapsed delta part of `V_X`: `pv(h f') - h lambda'`.
    fn delta_part(&self, x: &TangentCoefficient) -> Result<Vec<f64>> {
        let pvx = self.pv(self.vector(x))?;
        Ok(pvx
            .iter()
            .zip(&x.h.values)
            .zip(self.lambda.prime())
            .map(|((a, h), l)| a - h * l)
            .collect())
    }

    /// Coefficient of `X o Y`:
    /// `h_Z(p) = integral (h_X(p) - h_X(q))/(p - q) h_Y(q) f'(q) dq + h_Y(p) (pv(h_X f')(p) - h_X(p) lambda'(p))`.
    pub fn product(&self, x: &TangentCoefficient, y: &TangentCoefficient) -> Result<TangentCoefficient> {
        self.require_tangent(x, "product: X")?;
        self.require_tangent(y, "product: Y")?;
        let dp = self.spacing();
        let n = self.fp.len();
        let g = self.vector(y);
        let delta = self.delta_part(x)?;
        let smooth: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| dp * self.quotient_row(x, i).zip(&g).map(|(q, gj)| q * gj).sum::<f64>())
            .collect();
        let h: Vec<f64> = (0..n).map(|i| smooth[i] + y.h.values[i] * delta[i]).collect();
        let dh = self.product_derivative(x, y)?;
        Ok(TangentCoefficient {
            h: self.profile(h),
            dh: self.profile(dh),
        })
    }

    /// `d/dp` of the product coefficient, from its equivalent principal-value form
    /// `h_X pv(h_Y f') + h_Y pv(h_X f') - pv(h_X h_Y f') - h_X h_Y lambda'`.
    fn product_derivative(&self, x: &TangentCoefficient, y: &TangentCoefficient) -> Result<Vec<f64>> {
        let n = self.fp.len();
        let (hx, dhx) = (&x.h.values, &x.dh.values);
        let (hy, dhy) = (&y.h.values, &y.dh.values);
        let (fp, fpp) = (&self.fp, &self.fpp);
        let pv_a = self.pv((0..n).map(|j| hy[j] * fp[j]).collect())?;
        let pv_da = self.pv((0..n).map(|j| dhy[j] * fp[j] + hy[j] * fpp[j]).collect())?;
        let pv_b = self.pv((0..n).map(|j| hx[j] * fp[j]).collect())?;
        let pv_db = self.pv((0..n).map(|j| dhx[j] * fp[j] + hx[j] * fpp[j]).collect())?;
        let pv_dc = self.pv(
            (0..n)
                .map(|j| (dhx[j] * hy[j] + hx[j] * dhy[j]) * fp[j] + hx[j] * hy[j] * fpp[j])
                .collect(),
        )?;
        let lp = self.lambda.prime();
        Ok((0..n)
            .map(|j| {
                dhx[j] * pv_a[j] + hx[j] * pv_da[j] + dhy[j] * pv_b[j] + hy[j] * pv_db[j]
                    - pv_dc[j]
                    - (dhx[j] * hy[j] + hx[j] * dhy[j]) * lp[j]
                    - hx[j] * hy[j] * self.lambda_pp[j]
            })
            .collect())
    }

    /// Assembles `V_X`, the operator `Y -> X o Y` acting on raw vectors.
    pub fn kernel_of(&self, x: &TangentCoefficient) -> Result<KernelOperator> {
        self.require_tangent(x, "kernel_of: X")?;
        let n = self.fp.len();
        let mut smooth = DMatrix::<f64>::zeros(n, n);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| self.quotient_row(x, i).map(|q| q * self.fp[i]).collect())
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                smooth[(i, j)] = *v;
            }
        }
        Ok(KernelOperator {
            smooth,
            diag: self.profile(self.delta_part(x)?),
        })
    }

    /// `E = f - p f'`.
    pub fn euler(&self) -> RawVector {
        let nodes = self.axis().nodes();
        RawVector {
            values: self.profile(
                (0..self.fp.len())
                    .map(|j| self.f.values[j] - nodes[j] * self.fp[j])
                    .collect(),
            ),
        }
    }
}

/// Coefficient `h` of the tangent vector `h f'`, with its derivative (needed on the
/// diagonal of difference quotients).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoefficient {
    pub h: Profile,
    pub dh: Profile,
}

impl TangentCoefficient {
    pub fn new(h: Profile, dh: Profile) -> Self {
        assert_eq!(h.len(), dh.len());
        TangentCoefficient { h, dh }
    }

    pub fn from_fn(axis: Axis, h: impl Fn(f64) -> f64, dh: impl Fn(f64) -> f64) -> Self {
        TangentCoefficient {
            h: Profile::from_fn(axis, h),
            dh: Profile::from_fn(axis, dh),
        }
    }

    /// `h(p) = sum_i coeffs[i] p^i`.
    pub fn polynomial(axis: Axis, coeffs: &[f64]) -> Self {
        let eval = |p: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * p + c);
        let dcoeffs: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let deval = |p: f64| dcoeffs.iter().rev().fold(0.0, |acc, c| acc * p + c);
        Self::from_fn(axis, eval, deval)
    }

    /// Coefficient known only by samples; the derivative comes from an eighth-order
    /// central difference (the values need not decay, so no spectral derivative).
    pub fn from_values(h: Profile) -> Self {
        let dh = Profile::new(h.axis, finite_difference(&h.values, h.spacing()));
        TangentCoefficient { h, dh }
    }

    pub fn constant(axis: Axis, c: f64) -> Self {
        Self::from_fn(axis, |_| c, |_| 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        TangentCoefficient {
            h: self.h.scale(s),
            dh: self.dh.scale(s),
        }
    }
}

/// A vector of `S` that need not lie in `V = { h f' }`, e.g. the Euler field.
#[derive(Debug, Clone, PartialEq)]
pub struct RawVector {
    pub values: Profile,
}

/// `(V g)(p) = sum_q smooth(p, q) g(q) dq + diag(p) g(p)`.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    pub smooth: DMatrix<f64>,
    pub diag: Profile,
}

impl KernelOperator {
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let dp = self.diag.spacing();
        let n = g.len();
        (0..n)
            .map(|i| {
                let row = self.smooth.row(i);
                dp * row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() + self.diag.values[i] * g[i]
            })
            .collect()
    }
}

fn finite_difference(v: &[f64], h: f64) -> Vec<f64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = v.len();
    (0..n)
        .map(|i| {
            if i >= 4 && i + 4 < n {
                C.iter()
                    .enumerate()
                    .map(|(k, c)| c * (v[i + k + 1] - v[i - k - 1]))
                    .sum::<f64>()
                    / h
            } else if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// `-integral h_X h_Y f' dp`.
pub fn eta_pair(x: &TangentCoefficient, y: &TangentCoefficient, f: &Profile) -> f64 {
    let fp = spectral::derivative(&f.values, f.spacing(), 1);
    -f.spacing() * (0..fp.len()).map(|j| x.h.values[j] * y.h.values[j] * fp[j]).sum::<f64>()
}

pub fn product(
    x: &TangentCoefficient,
    y: &TangentCoefficient,
    f: &Profile,
    lambda: &LambdaProfile,
) -> Result<TangentCoefficient> {
    FrobeniusPoint::with_lambda(f, lambda.clone())?.product(x, y)
}

pub fn kernel_of(x: &TangentCoefficient, f: &Profile, lambda: &LambdaProfile) -> Result<KernelOperator> {
    FrobeniusPoint::with_lambda(f, lambda.clone())?.kernel_of(x)
}

/// `e = -f'`, i.e. the constant coefficient `-1`.
pub fn unity(f: &Profile) -> TangentCoefficient {
    TangentCoefficient::constant(f.axis, -1.0)
}

pub fn euler(f: &Profile) -> RawVector {
    let fp = spectral::derivative(&f.values, f.spacing(), 1);
    let nodes = f.nodes();
    RawVector {
        values: Profile::new(
            f.axis,
            (0..fp.len()).map(|j| f.values[j] - nodes[j] * fp[j]).collect(),
        ),
    }
}

/// `integral integral a(p) b(q) g^{(pq)} dp dq` with
/// `g^{(pq)} = f'(p) f'(q) - (f(p) f'(q) - f(q) f'(p))/(p - q) + delta(p - q)(f lambda' - f' lambda)`.
/// The quotient's diagonal limit is `f'^2 - f f''`.
pub fn intersection_form(a: &Profile, b: &Profile, point: &FrobeniusPoint) -> f64 {
    let axis = point.axis();
    let (f, fp, fpp) = (&point.f.values, &point.fp, &point.fpp);
    let (lam, lp) = (point.lambda.values(), point.lambda.prime());
    let dp = axis.spacing();
    let n = f.len();
    let double: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = axis.node(i);
            let mut row = 0.0;
            for j in 0..n {
                let q = if i == j {
                    fp[i] * fp[i] - f[i] * fpp[i]
                } else {
                    (f[i] * fp[j] - f[j] * fp[i]) / (pi - axis.node(j))
                };
                row += (fp[i] * fp[j] - q) * b.values[j];
            }
            a.values[i] * row
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let single: f64 = (0..n)
        .map(|j| a.values[j] * b.values[j] * (f[j] * lp[j] - fp[j] * lam[j]))
        .sum();
    dp * dp * double + dp * single
}

/// [`intersection_form`] with every term replaced by its absolute value: the scale for
/// relative comparisons, which stays meaningful when symmetry cancels the signed form.
pub fn intersection_scale(a: &Profile, b: &Profile, point: &FrobeniusPoint) -> f64 {
    let axis = point.axis();
    let (f, fp, fpp) = (&point.f.values, &point.fp, &point.fpp);
    let (lam, lp) = (point.lambda.values(), point.lambda.prime());
    let dp = axis.spacing();
    let n = f.len();
    let double: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = axis.node(i);
            let mut row = 0.0;
            for j in 0..n {
                let q = if i == j {
                    fp[i] * fp[i] - f[i] * fpp[i]
                } else {
                    (f[i] * fp[j] - f[j] * fp[i]) / (pi - axis.node(j))
                };
                row += ((fp[i] * fp[j]).abs() + q.abs()) * b.values[j].abs();
            }
            a.values[i].abs() * row
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let single: f64 = (0..n)
        .map(|j| (a.values[j] * b.values[j]).abs() * ((f[j] * lp[j]).abs() + (fp[j] * lam[j]).abs()))
        .sum();
    dp * dp * double + dp * single
}

/// The same form assembled from the Euler field, the product and the first metric:
/// `g^{(pq)} = (f'(p) E(q) - f'(q) E(p))/(p - q) + delta(p - q)(lambda' E - f' pv(E))`.
/// Diagonal limit of the quotient: `f'' E - f' E'` with `E' = -p f''`.
pub fn intersection_via_euler(a: &Profile, b: &Profile, point: &FrobeniusPoint) -> Result<f64> {
    let axis = point.axis();
    let (fp, fpp) = (&point.fp, &point.fpp);
    let e = point.euler().values;
    let pv_e = pv_integral(&e)?.values;
    let lp = point.lambda.prime();
    let dp = axis.spacing();
    let n = fp.len();
    let ev = &e.values;
    let double: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = axis.node(i);
            let mut row = 0.0;
            for j in 0..n {
                let q = if i == j {
                    fpp[i] * ev[i] + fp[i] * pi * fpp[i]
                } else {
                    (fp[i] * ev[j] - fp[j] * ev[i]) / (pi - axis.node(j))
                };
                row += q * b.values[j];
            }
            a.values[i] * row
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let single: f64 = (0..n)
        .map(|j| a.values[j] * b.values[j] * (lp[j] * ev[j] - fp[j] * pv_e[j]))
        .sum();
    Ok(dp * dp * double + dp * single)
}

/// `L(p_i) = integral log|p_i - q| g(q) dq` for decaying samples.
///
/// Trapezoid rule with the singular node removed, plus the generalized
/// Euler-Maclaurin corrections for a logarithmic singularity: the local term
/// `h g_i ln(h / 2 pi)` and two derivative terms weighted by `zeta'(-2)`, `zeta'(-4)`.
pub fn log_convolution(g: &[f64], axis: &Axis) -> Vec<f64> {
    let h = axis.spacing();
    let n = g.len();
    let g2 = spectral::derivative(g, h, 2);
    let g4 = spectral::derivative(g, h, 4);
    let local = (h / (2.0 * std::f64::consts::PI)).ln();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for (j, gj) in g.iter().enumerate() {
                if j != i {
                    s += ((i as f64 - j as f64).abs() * h).ln() * gj;
                }
            }
            h * s
                + h * g[i] * local
                + ZETA_PRIME_M2 * h.powi(3) * g2[i]
                + ZETA_PRIME_M4 * h.powi(5) * g4[i] / 12.0
        })
        .collect()
}

/// Splits the potential into its logarithmic and quadratic parts.
pub fn potential_parts(f: &Profile) -> Result<(f64, f64)> {
    f.require_decay("potential: f", DECAY_TOL)?;
    let h = f.spacing();
    let l = log_convolution(&f.values, &f.axis);
    let log_part = 0.5 * h * l.iter().zip(&f.values).map(|(a, b)| a * b).sum::<f64>();
    let quad = 0.5 * h * f.values.iter().zip(f.nodes()).map(|(v, p)| v * p * p).sum::<f64>();
    Ok((log_part, quad))
}

/// `F = 1/2 integral integral log|p - q| f(p) f(q) dp dq + 1/2 integral p^2 f dp`.
pub fn potential(f: &Profile) -> Result<f64> {
    let (a, b) = potential_parts(f)?;
    Ok(a + b)
}

/// Interior relative residual of `d/dp (dF/df) = lambda`, where
/// `dF/df = integral log|p - q| f(q) dq + p^2/2`. The p-derivative is moved onto `f`
/// inside the convolution, since `dF/df` itself grows at the edges.
/// Normalised by `||lambda - p||` on the interior, or by `||lambda||` when `f = 0`.
pub fn potential_identity_residual(f: &Profile, lambda: &LambdaProfile) -> Result<f64> {
    f.require_decay("potential identity: f", DECAY_TOL)?;
    let axis = f.axis;
    let fp = spectral::derivative(&f.values, axis.spacing(), 1);
    let l = log_convolution(&fp, &axis);
    let range = axis.interior(POTENTIAL_INTERIOR_CUT);
    let (mut num, mut rem, mut full) = (0.0, 0.0, 0.0);
    for i in range {
        let p = axis.node(i);
        let lam = lambda.values()[i];
        num += (l[i] + p - lam).powi(2);
        rem += (lam - p).powi(2);
        full += lam * lam;
    }
    if num == 0.0 {
        return Ok(0.0);
    }
    let scale = if rem > 0.0 { rem } else { full };
    Ok((num / scale).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::singular::lambda_of;
    use std::f64::consts::PI;

    fn axis() -> Axis {
        Axis::new(-12.0, 12.0, 256, "p").unwrap()
    }

    fn gaussian() -> Profile {
        Profile::from_fn(axis(), |p| (-p * p).exp())
    }

    #[test]
    fn eta_pair_examples() {
        let f = gaussian();
        let one = TangentCoefficient::constant(axis(), 1.0);
        let p = TangentCoefficient::polynomial(axis(), &[0.0, 1.0]);
        assert!(eta_pair(&one, &one, &f).abs() < 1e-14);
        assert!((eta_pair(&p, &one, &f) - PI.sqrt()).abs() < 1e-13);
        assert_eq!(eta_pair(&p, &one, &Profile::zeros(axis())), 0.0);
    }

    #[test]
    fn unity_is_identity() {
        let f = gaussian();
        let pt = FrobeniusPoint::new(&f).unwrap();
        let e = unity(&f);
        assert!(e.h.values.iter().all(|&v| v == -1.0));
        let y = TangentCoefficient::polynomial(axis(), &[0.3, -1.0, 0.5, 0.2]);
        let z = pt.product(&e, &y).unwrap();
        let (vz, vy) = (pt.vector(&z), pt.vector(&y));
        for (a, b) in vz.iter().zip(&vy) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(pt.eta_pair(&e, &e).abs() < 1e-14);
    }

    #[test]
    fn zero_slice_kernel_is_minus_h() {
        let f = Profile::zeros(axis());
        let pt = FrobeniusPoint::new(&f).unwrap();
        let x = TangentCoefficient::polynomial(axis(), &[1.0, 2.0]);
        let k = pt.kernel_of(&x).unwrap();
        let g: Vec<f64> = axis().nodes().iter().map(|p| (-p * p).exp()).collect();
        let out = k.apply(&g);
        for (j, p) in axis().nodes().iter().enumerate() {
            assert!((out[j] + (1.0 + 2.0 * p) * g[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn euler_of_gaussian() {
        let e = euler(&gaussian());
        for (v, p) in e.values.values.iter().zip(axis().nodes()) {
            assert!((v - (1.0 + 2.0 * p * p) * (-p * p).exp()).abs() < 1e-12);
        }
        assert!((e.values.integral() - 2.0 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn potential_of_zero_and_gaussian() {
        assert_eq!(potential(&Profile::zeros(axis())).unwrap(), 0.0);
        let exact = -(PI / 4.0) * (0.577_215_664_901_532_9 + 2f64.ln()) + PI.sqrt() / 4.0;
        let got = potential(&gaussian()).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn potential_identity_for_zero() {
        let z = Profile::zeros(axis());
        let l = lambda_of(&z).unwrap();
        assert!(potential_identity_residual(&z, &l).unwrap() <= 1e-12);
    }

    #[test]
    fn fd8_on_cubic() {
        let a = axis();
        let h = Profile::from_fn(a, |p| p * p * p - p);
        let t = TangentCoefficient::from_values(h);
        for i in 4..a.n - 4 {
            let p = a.node(i);
            assert!((t.dh.values[i] - (3.0 * p * p - 1.0)).abs() < 1e-9);
        }
    }
}
