//! Hilbert transform, principal values, the Lax function and its boundary pair.
//!
//! Convention: `Hilb[u](p) = (1/pi) pv integral u(q)/(q - p) dq`, so that
//! `pv_integral(u)(p) = pv integral u(q)/(p - q) dq = -pi Hilb[u](p)` and
//! `lambda = p + pv_integral(f)`.
//!
//! Hilbert images decay only like `1/p`. Each image therefore carries its algebraic
//! tail ([`FarField`]) computed from the moments of the input. A second transform
//! subtracts a rational carrier with the same tail (simple poles in the lower half
//! plane, whose transform is known in closed form) and transforms the decaying
//! remainder on the grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, FarField, Profile, DECAY_TOL};
use crate::spectral;

/// Number of tail coefficients kept on a Hilbert image.
pub const FAR_FIELD_TERMS: usize = 22;

/// Number of carrier poles used to absorb a tail.
const CARRIER_POLES: usize = 22;

/// Allowed edge mismatch (relative to the peak) between a tailed profile and its carrier.
const CARRIER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaProfile {
    /// `lambda(p) = p + pv integral f(q)/(p-q) dq`
    pub base: Profile,
    /// `lambda'(p) = 1 + pv integral f'(q)/(p-q) dq`
    pub derivative: Profile,
}

impl LambdaProfile {
    pub fn values(&self) -> &[f64] {
        &self.base.values
    }

    pub fn prime(&self) -> &[f64] {
        &self.derivative.values
    }

    /// Max-norm gap between the stored derivative and the spectral derivative of
    /// `lambda - p`, relative to `max |lambda' - 1|` (absolute when that is 0).
    /// `lambda - p` only decays like `1/p`, so its tail is first removed with the
    /// rational carrier built from the moments of `f`.
    pub fn derivative_consistency(&self, f: &Profile) -> Result<f64> {
        let axis = self.base.axis;
        let tail = FarField {
            coeffs: window_moments(&f.values, &axis, FAR_FIELD_TERMS),
        };
        let carrier = Carrier::fit(&axis, &tail)?;
        let rem: Vec<f64> = self
            .base
            .values
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let p = axis.node(j);
                l - p - carrier.value(p)
            })
            .collect();
        let d = spectral::derivative(&rem, axis.spacing(), 1);
        let scale = self
            .derivative
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        let gap = d
            .iter()
            .enumerate()
            .zip(&self.derivative.values)
            .fold(0.0f64, |m, ((j, a), b)| {
                m.max((1.0 + a + carrier.slope(axis.node(j)) - b).abs())
            });
        Ok(if scale > 0.0 { gap / scale } else { gap })
    }
}

/// Boundary values `plus = -pi f - i lambda`, `minus = pi f - i lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct RHPair {
    pub axis: Axis,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
}

impl RHPair {
    pub fn jump(&self) -> Vec<Complex64> {
        self.plus.iter().zip(&self.minus).map(|(a, b)| a - b).collect()
    }
}

fn window_moments(values: &[f64], axis: &Axis, count: usize) -> Vec<f64> {
    let h = axis.spacing();
    let mut out = vec![0.0; count];
    for (j, v) in values.iter().enumerate() {
        let p = axis.node(j);
        let mut w = v * h;
        for m in out.iter_mut() {
            *m += w;
            w *= p;
        }
    }
    out
}

/// Principal value of a decaying profile, with the `1/p` tail of the result attached.
pub(crate) fn pv_decaying(u: &Profile) -> Profile {
    let pv = spectral::pv_sum(&u.values);
    // pv(p) = sum_k M_{k-1} / p^k for |p| beyond the support
    let coeffs = window_moments(&u.values, &u.axis, FAR_FIELD_TERMS);
    Profile::new(u.axis, pv).with_far_field(FarField { coeffs })
}

struct Carrier {
    poles: Vec<Complex64>,
    residues: Vec<Complex64>,
}

impl Carrier {
    /// `Re sum beta_m / (p - z_m)` with poles in the lower half plane, matching the given
    /// tail coefficients in the least-squares minimal-norm sense.
    fn fit(axis: &Axis, tail: &FarField) -> Result<Carrier> {
        let k = tail.coeffs.len().min(FAR_FIELD_TERMS);
        let m = CARRIER_POLES;
        let half_width = 0.5 * axis.length();
        let rho = (25.0 * axis.spacing()).max(0.25 * half_width);
        let (lo, hi) = (-PI + 0.4, -0.4);
        let poles: Vec<Complex64> = (0..m)
            .map(|i| Complex64::from_polar(rho, lo + (hi - lo) * i as f64 / (m - 1) as f64))
            .collect();
        // rows scaled by rho^-r so that every coefficient weighs alike
        let mut a = DMatrix::<f64>::zeros(k, 2 * m);
        for (c, z) in poles.iter().enumerate() {
            let mut zj = Complex64::new(1.0, 0.0);
            for r in 0..k {
                a[(r, c)] = zj.re;
                a[(r, m + c)] = -zj.im;
                zj *= z / rho;
            }
        }
        let b = DVector::from_iterator(k, tail.coeffs[..k].iter().enumerate().map(|(r, c)| c / rho.powi(r as i32)));
        let svd = a.svd(true, true);
        let x = svd
            .solve(&b, 1e-14)
            .map_err(|e| Error::under_resolved(format!("far-field carrier fit failed: {e}"), f64::INFINITY, CARRIER_TOL))?;
        let residues = (0..m).map(|c| Complex64::new(x[c], x[m + c])).collect();
        Ok(Carrier { poles, residues })
    }

    fn value(&self, p: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(z, b)| (b / (p - z)).re)
            .sum()
    }

    fn slope(&self, p: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(z, b)| (-b / ((p - z) * (p - z))).re)
            .sum()
    }

    /// Hilbert transform of the carrier: the carrier is the real part of a function
    /// analytic in the upper half plane, so its transform is `Re sum i beta / (p - z)`.
    fn hilbert(&self, p: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(z, b)| (Complex64::i() * b / (p - z)).re)
            .sum()
    }

    /// Tail coefficients of [`Carrier::hilbert`].
    fn hilbert_tail(&self, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        for (z, b) in self.poles.iter().zip(&self.residues) {
            let mut term = Complex64::i() * b;
            for c in out.iter_mut() {
                *c += term.re;
                term *= z;
            }
        }
        out
    }
}

/// Principal value of a profile with an algebraic tail.
fn pv_tailed(g: &Profile, tail: &FarField) -> Result<Profile> {
    if !g.is_finite() {
        return Err(Error::under_resolved("non-finite profile", f64::INFINITY, CARRIER_TOL));
    }
    let axis = g.axis;
    let carrier = Carrier::fit(&axis, tail)?;
    let rem: Vec<f64> = g
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v - carrier.value(axis.node(j)))
        .collect();
    let peak = g.max_abs().max(f64::MIN_POSITIVE);
    let band = axis.boundary_nodes();
    let n = rem.len();
    let edge = rem[..band]
        .iter()
        .chain(&rem[n - band..])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if edge / peak > CARRIER_TOL {
        return Err(Error::under_resolved(
            "profile tail does not match its far-field expansion",
            edge / peak,
            CARRIER_TOL,
        ));
    }
    let pv_rem = spectral::pv_sum(&rem);
    let values = pv_rem
        .iter()
        .enumerate()
        .map(|(j, v)| v - PI * carrier.hilbert(axis.node(j)))
        .collect();
    let rem_moments = window_moments(&rem, &axis, FAR_FIELD_TERMS);
    let coeffs = carrier
        .hilbert_tail(FAR_FIELD_TERMS)
        .iter()
        .zip(&rem_moments)
        .map(|(c, m)| -PI * c + m)
        .collect();
    Ok(Profile::new(axis, values).with_far_field(FarField { coeffs }))
}

/// `pv integral u(q)/(p - q) dq` at every node.
pub fn pv_integral(u: &Profile) -> Result<Profile> {
    match &u.far_field {
        Some(tail) => pv_tailed(u, tail),
        None => {
            u.require_decay("principal-value input", DECAY_TOL)?;
            Ok(pv_decaying(u))
        }
    }
}

/// `Hilb[u](p) = (1/pi) pv integral u(q)/(q - p) dq` at every node.
pub fn hilbert(profile: &Profile) -> Result<Profile> {
    let pv = pv_integral(profile)?;
    let s = -1.0 / PI;
    let far_field = pv.far_field.as_ref().map(|ff| FarField {
        coeffs: ff.coeffs.iter().map(|c| s * c).collect(),
    });
    Ok(Profile {
        axis: pv.axis,
        values: pv.values.iter().map(|v| s * v).collect(),
        far_field,
    })
}

/// `lambda = p + pv(f)` and `lambda' = 1 + pv(f')`.
pub fn lambda_of(f: &Profile) -> Result<LambdaProfile> {
    f.require_decay("lambda_of: f", DECAY_TOL)?;
    Ok(lambda_trusted(f))
}

/// `lambda` of a slice whose decay was established at the level of the whole field.
/// A slice far out in `x` carries nothing but round-off, so its own edge-to-peak ratio
/// says nothing about resolution.
pub(crate) fn lambda_trusted(f: &Profile) -> LambdaProfile {
    let axis = f.axis;
    let fp = Profile::new(axis, spectral::derivative(&f.values, axis.spacing(), 1));
    let pv_f = pv_decaying(f);
    let pv_fp = pv_decaying(&fp);
    let nodes = axis.nodes();
    let base = Profile {
        axis,
        values: pv_f.values.iter().zip(&nodes).map(|(v, p)| p + v).collect(),
        far_field: None,
    };
    let derivative = Profile::new(axis, pv_fp.values.iter().map(|v| 1.0 + v).collect());
    LambdaProfile { base, derivative }
}

/// `lambda'' = pv(f'')`.
pub fn lambda_second(f: &Profile) -> Result<Profile> {
    f.require_decay("lambda_second: f", DECAY_TOL)?;
    Ok(lambda_second_trusted(f))
}

pub(crate) fn lambda_second_trusted(f: &Profile) -> Profile {
    let fpp = Profile::new(f.axis, spectral::derivative(&f.values, f.spacing(), 2));
    let mut out = pv_decaying(&fpp);
    out.far_field = None;
    out
}

/// Relative residual of `Hilb[a Hilb b + Hilb a . b] = Hilb a . Hilb b - a b`, in the
/// discrete L2 norm, normalised by `||Hilb a Hilb b|| + ||a b||`. Zero inputs give 0.
pub fn tricomi_residual(a: &Profile, b: &Profile) -> Result<f64> {
    let ha = hilbert(a)?;
    let hb = hilbert(b)?;
    let mixed = Profile::new(
        a.axis,
        (0..a.len())
            .map(|j| a.values[j] * hb.values[j] + ha.values[j] * b.values[j])
            .collect(),
    );
    let lhs = hilbert(&mixed)?;
    let hh = ha.zip_with(&hb, |x, y| x * y);
    let ab = a.zip_with(b, |x, y| x * y);
    let diff = Profile::new(
        a.axis,
        (0..a.len())
            .map(|j| lhs.values[j] - (hh.values[j] - ab.values[j]))
            .collect(),
    );
    let abs = diff.l2();
    if abs == 0.0 {
        return Ok(0.0);
    }
    let scale = hh.l2() + ab.l2();
    Ok(if scale > 0.0 { abs / scale } else { abs })
}

pub fn rh_pair(f: &Profile) -> Result<RHPair> {
    let lambda = lambda_of(f)?;
    let (plus, minus) = f
        .values
        .iter()
        .zip(lambda.values())
        .map(|(&fv, &l)| (Complex64::new(-PI * fv, -l), Complex64::new(PI * fv, -l)))
        .unzip();
    Ok(RHPair {
        axis: f.axis,
        plus,
        minus,
    })
}

/// `e^{i theta} - 1` without cancellation for small `theta`.
fn expm1_i(theta: Complex64) -> Complex64 {
    let (a, b) = (theta.re, theta.im);
    let decay = (-b).exp();
    let re = (-b).exp_m1() * a.cos() - 2.0 * (0.5 * a).sin().powi(2);
    Complex64::new(re, decay * a.sin())
}

/// `integral f(q) / (z - q) dq` for `z` off the real axis, integrating each sinc cardinal
/// function of the samples exactly.
pub fn cauchy_extension(f: &Profile, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::BadConfig(format!(
            "cauchy_extension: z = {z} must lie off the real axis"
        )));
    }
    let h = f.spacing();
    let sign = z.im.signum();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &v) in f.values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let w = z - f.axis.node(j);
        // integral sinc((q-c)/h) / (z - q) dq = h (1 - e^{+-i pi w/h}) / w
        let theta = Complex64::i() * sign * PI * w / h;
        let t = -expm1_i(theta / Complex64::i());
        let basis = if (w / h).norm() < 1e-6 {
            -Complex64::i() * sign * PI * (1.0 + 0.5 * theta)
        } else {
            h * t / w
        };
        acc += v * basis;
    }
    Ok(acc)
}
