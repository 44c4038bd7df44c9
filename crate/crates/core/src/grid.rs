//! Uniform phase-space lattices and the sampled densities that live on them.
//!
//! Grids are left-closed: an axis with `n` nodes on `[min, max)` has nodes
//! `min + i * (max - min) / n` for `i in 0..n`, so `max` itself is never sampled
//! and the axis is exactly one period of its periodic extension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold for the boundary-decay proxy of Schwartz-class membership.
pub const DECAY_TOL: f64 = 1e-10;

/// Fraction of nodes at each end of an axis inspected by the decay proxy.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize, name: &str) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::BadConfig(format!("{name}: bounds must be finite")));
        }
        if max <= min {
            return Err(Error::BadConfig(format!(
                "{name}: max ({max}) must exceed min ({min})"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::BadConfig(format!(
                "{name}: need at least {MIN_NODES} nodes, got {n}"
            )));
        }
        Ok(Axis { min, max, n })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Period of the periodic extension (`n * spacing`).
    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    /// Number of boundary nodes examined at each end by the decay proxy.
    pub fn boundary_nodes(&self) -> usize {
        ((BOUNDARY_FRACTION * self.n as f64).ceil() as usize).max(1)
    }

    /// Interior index range with `fraction` of the nodes removed at each end.
    pub fn interior(&self, fraction: f64) -> std::ops::Range<usize> {
        let cut = (fraction * self.n as f64).ceil() as usize;
        cut..self.n - cut
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x: Axis,
    pub p: Axis,
}

impl PhaseGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, p_min: f64, p_max: f64, n_p: usize) -> Result<Self> {
        Ok(PhaseGrid {
            x: Axis::new(x_min, x_max, n_x, "grid.x")?,
            p: Axis::new(p_min, p_max, n_p, "grid.p")?,
        })
    }

    /// The `[-12, 12]^2`, 256 x 256 lattice used throughout the test suites.
    pub fn reference() -> Self {
        PhaseGrid::new(-12.0, 12.0, 256, -12.0, 12.0, 256).expect("reference grid is valid")
    }

    pub fn dx(&self) -> f64 {
        self.x.spacing()
    }

    pub fn dp(&self) -> f64 {
        self.p.spacing()
    }

    pub fn len(&self) -> usize {
        self.x.n * self.p.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Algebraic tail of a slowly decaying profile: `values(p) ~ sum_k coeffs[k-1] / p^k`
/// for `|p|` beyond the grid window.
///
/// Hilbert images of decaying profiles decay only like `1/p`; the tail records what the
/// window cuts off so that the image can be transformed again.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub coeffs: Vec<f64>,
}

impl FarField {
    pub fn eval(&self, p: f64) -> f64 {
        let inv = 1.0 / p;
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = (acc + c) * inv;
        }
        acc
    }
}

/// A function of `p` sampled on one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub far_field: Option<FarField>,
}

impl Profile {
    pub fn new(axis: Axis, values: Vec<f64>) -> Self {
        assert_eq!(axis.n, values.len(), "profile length must match its axis");
        Profile {
            axis,
            values,
            far_field: None,
        }
    }

    pub fn zeros(axis: Axis) -> Self {
        Profile::new(axis, vec![0.0; axis.n])
    }

    pub fn from_fn(axis: Axis, f: impl Fn(f64) -> f64) -> Self {
        Profile::new(axis, axis.nodes().into_iter().map(f).collect())
    }

    pub fn with_far_field(mut self, far_field: FarField) -> Self {
        self.far_field = Some(far_field);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.axis.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.axis.nodes()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Boundary-decay ratio: largest magnitude on the outer 5% of nodes over the global
    /// maximum (0 for an identically zero profile).
    pub fn boundary_ratio(&self) -> f64 {
        boundary_ratio(&self.values, self.axis.boundary_nodes())
    }

    pub fn require_decay(&self, what: &str, tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::under_resolved(format!("{what}: non-finite values"), f64::INFINITY, tol));
        }
        let ratio = self.boundary_ratio();
        if ratio > tol {
            return Err(Error::under_resolved(what, ratio, tol));
        }
        Ok(())
    }

    /// Trapezoid (rectangle) rule on the uniform grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile::new(self.axis, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Profile, f: impl Fn(f64, f64) -> f64) -> Profile {
        assert_eq!(self.len(), other.len());
        Profile::new(
            self.axis,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Profile {
        self.map(|v| s * v)
    }

    /// Discrete L2 norm `sqrt(sum v^2 dp)`.
    pub fn l2(&self) -> f64 {
        l2(&self.values, self.spacing())
    }
}

/// Sampled `f(x, p)`, row-major with `x` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "field payload has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n_p = grid.p.n;
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(n_p).enumerate().for_each(|(i, row)| {
            let x = grid.x.node(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x, grid.p.node(j));
            }
        });
        Field { grid, values }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n_p = self.grid.p.n;
        &self.values[i * n_p..(i + 1) * n_p]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.grid.p.n)
    }

    /// The p-profile at x-node `i`.
    pub fn slice(&self, i: usize) -> Profile {
        Profile::new(self.grid.p, self.row(i).to_vec())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.p.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn l2(&self) -> f64 {
        l2(&self.values, self.grid.dx() * self.grid.dp())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dp()
    }
}

/// Values `A^0..A^K` of the p-moments of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub values: Vec<f64>,
}

impl MomentVector {
    /// Highest moment index `K`.
    pub fn order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// `A^k`, with `A^k = 0` for negative `k` (convenient in the metric formulas).
    pub fn get(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.values.get(k as usize).copied().unwrap_or(f64::NAN)
        }
    }
}

/// Initial-condition families for [`sample_initial`].
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Zero,
    /// `a * exp(-((x - x0)/sx)^2 - ((p - p0)/sp)^2)`
    GaussianProduct {
        amplitude: f64,
        x_width: f64,
        p_width: f64,
        x_center: f64,
        p_center: f64,
    },
    Sum(Vec<InitialSpec>),
    /// Row-major samples, x slow.
    Tabulated(Vec<f64>),
}

impl InitialSpec {
    pub fn gaussian(amplitude: f64, x_width: f64, p_width: f64) -> Self {
        InitialSpec::GaussianProduct {
            amplitude,
            x_width,
            p_width,
            x_center: 0.0,
            p_center: 0.0,
        }
    }

    /// The reference datum `-0.5 exp(-x^2 - p^2)`.
    pub fn reference() -> Self {
        InitialSpec::gaussian(-0.5, 1.0, 1.0)
    }

    fn eval(&self, x: f64, p: f64) -> f64 {
        match self {
            InitialSpec::Zero | InitialSpec::Tabulated(_) => 0.0,
            InitialSpec::GaussianProduct {
                amplitude,
                x_width,
                p_width,
                x_center,
                p_center,
            } => {
                let u = (x - x_center) / x_width;
                let v = (p - p_center) / p_width;
                amplitude * (-u * u - v * v).exp()
            }
            InitialSpec::Sum(terms) => terms.iter().map(|t| t.eval(x, p)).sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialSpec::GaussianProduct { x_width, p_width, amplitude, .. } => {
                if !(*x_width > 0.0 && *p_width > 0.0) {
                    return Err(Error::BadConfig("initial: widths must be positive".into()));
                }
                if !amplitude.is_finite() {
                    return Err(Error::BadConfig("initial.amplitude: must be finite".into()));
                }
                Ok(())
            }
            InitialSpec::Sum(terms) => terms.iter().try_for_each(|t| t.validate()),
            _ => Ok(()),
        }
    }
}

pub fn make_grid(x_min: f64, x_max: f64, n_x: usize, p_min: f64, p_max: f64, n_p: usize) -> Result<PhaseGrid> {
    PhaseGrid::new(x_min, x_max, n_x, p_min, p_max, n_p)
}

/// Samples an initial-condition family on `grid`, rejecting data that does not decay
/// at the grid edges.
pub fn sample_initial(spec: &InitialSpec, grid: &PhaseGrid) -> Result<Field> {
    spec.validate()?;
    let field = match spec {
        InitialSpec::Tabulated(values) => Field::new(*grid, values.clone())?,
        _ => Field::from_fn(*grid, |x, p| spec.eval(x, p)),
    };
    let report = decay_report(&field, DECAY_TOL);
    if !report.pass {
        return Err(Error::under_resolved(
            "initial field does not decay at the grid boundary",
            report.x_ratio.max(report.p_ratio),
            DECAY_TOL,
        ));
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub pass: bool,
    pub tol: f64,
    /// Largest magnitude on the outer x-boundary band over the global maximum.
    pub x_ratio: f64,
    /// Same for the p-boundary band.
    pub p_ratio: f64,
}

/// Field-level decay check in `p` (edge values against the global peak). This is what
/// the per-slice principal values need; decay in `x` is a separate matter.
pub(crate) fn require_p_decay(field: &Field, what: &str) -> Result<()> {
    let r = decay_report(field, DECAY_TOL);
    if r.p_ratio > DECAY_TOL {
        Err(Error::under_resolved(what, r.p_ratio, DECAY_TOL))
    } else {
        Ok(())
    }
}

pub fn decay_report(field: &Field, decay_tol: f64) -> DecayReport {
    let peak = field.max_abs();
    if peak == 0.0 || !peak.is_finite() {
        let bad = !peak.is_finite();
        return DecayReport {
            pass: !bad,
            tol: decay_tol,
            x_ratio: if bad { f64::INFINITY } else { 0.0 },
            p_ratio: if bad { f64::INFINITY } else { 0.0 },
        };
    }
    let (n_x, n_p) = (field.grid.x.n, field.grid.p.n);
    let bx = field.grid.x.boundary_nodes();
    let bp = field.grid.p.boundary_nodes();
    let mut x_edge = 0.0f64;
    let mut p_edge = 0.0f64;
    for i in 0..n_x {
        let row = field.row(i);
        let in_x_band = i < bx || i >= n_x - bx;
        for (j, v) in row.iter().enumerate() {
            let a = v.abs();
            if in_x_band {
                x_edge = x_edge.max(a);
            }
            if j < bp || j >= n_p - bp {
                p_edge = p_edge.max(a);
            }
        }
    }
    let x_ratio = x_edge / peak;
    let p_ratio = p_edge / peak;
    DecayReport {
        pass: x_ratio <= decay_tol && p_ratio <= decay_tol,
        tol: decay_tol,
        x_ratio,
        p_ratio,
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub(crate) fn l2(values: &[f64], weight: f64) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() * weight).sqrt()
}

pub(crate) fn boundary_ratio(values: &[f64], band: usize) -> f64 {
    let peak = max_abs(values);
    if peak == 0.0 {
        return 0.0;
    }
    let n = values.len();
    let edge = values[..band]
        .iter()
        .chain(&values[n - band..])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    edge / peak
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_spacing() {
        let g = make_grid(-12.0, 12.0, 256, -12.0, 12.0, 256).unwrap();
        assert_eq!(g.dx(), 0.09375);
        assert_eq!(g.dp(), 0.09375);
    }

    #[test]
    fn minimal_grid_and_errors() {
        assert!(make_grid(-1.0, 1.0, 8, -1.0, 1.0, 8).is_ok());
        assert!(matches!(make_grid(0.0, 0.0, 8, -1.0, 1.0, 8), Err(Error::BadConfig(_))));
        assert!(matches!(make_grid(-1.0, 1.0, 7, -1.0, 1.0, 8), Err(Error::BadConfig(_))));
        assert!(matches!(make_grid(-1.0, 1.0, 8, 2.0, 1.0, 8), Err(Error::BadConfig(_))));
    }

    #[test]
    fn left_closed_nodes() {
        let g = PhaseGrid::reference();
        assert_eq!(g.x.node(0), -12.0);
        assert_eq!(g.x.node(255), 12.0 - g.dx());
    }

    #[test]
    fn gaussian_peak_and_zero() {
        let g = PhaseGrid::reference();
        let f = sample_initial(&InitialSpec::reference(), &g).unwrap();
        assert_eq!(f.max_abs(), 0.5);
        assert_eq!(f.get(128, 128), -0.5);
        let z = sample_initial(&InitialSpec::Zero, &g).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wide_gaussian_is_under_resolved() {
        let g = PhaseGrid::reference();
        let spec = InitialSpec::gaussian(1.0, 1.0, 20.0);
        assert!(matches!(sample_initial(&spec, &g), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = PhaseGrid::reference();
        let spec = InitialSpec::Sum(vec![
            InitialSpec::reference(),
            InitialSpec::GaussianProduct {
                amplitude: 0.2,
                x_width: 0.7,
                p_width: 1.3,
                x_center: 1.0,
                p_center: -0.5,
            },
        ]);
        let a = sample_initial(&spec, &g).unwrap();
        let b = sample_initial(&spec, &g).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn decay_report_cases() {
        let g = PhaseGrid::reference();
        let f = sample_initial(&InitialSpec::reference(), &g).unwrap();
        let r = decay_report(&f, DECAY_TOL);
        assert!(r.pass);
        // Oracle: the largest boundary-band sample is the Gaussian at the innermost band node.
        let band = g.p.boundary_nodes();
        let inner = g.p.node(g.p.n - band).abs().min(g.p.node(band - 1).abs());
        let expected = (-inner * inner).exp();
        assert!((r.p_ratio - expected).abs() <= 1e-12 * expected);
        assert!(r.p_ratio < 1e-12);

        let one = Field::from_fn(g, |_, _| 1.0);
        let r = decay_report(&one, DECAY_TOL);
        assert!(!r.pass);
        assert_eq!(r.x_ratio, 1.0);
        assert_eq!(r.p_ratio, 1.0);

        let r = decay_report(&Field::zeros(g), DECAY_TOL);
        assert!(r.pass);
        assert_eq!(r.x_ratio, 0.0);
    }

    #[test]
    fn far_field_horner() {
        let ff = FarField { coeffs: vec![2.0, -3.0, 0.5] };
        let p = 4.0;
        assert!((ff.eval(p) - (2.0 / p - 3.0 / (p * p) + 0.5 / (p * p * p))).abs() < 1e-15);
    }
}
