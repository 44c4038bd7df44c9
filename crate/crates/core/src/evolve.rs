//! Method-of-lines integration of the kinetic flows and the dynamical checks built on it.
//!
//! `y` and `t` are the second and third times of the hierarchy: the Benney flow moves
//! `y`, the second flow moves `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{decay_report, DecayReport, Field, DECAY_TOL};
use crate::hierarchy::{density_with, gradient_fields, map_slices, DensitySpec, ScalarFn};
use crate::moments::raw_moments;
use crate::singular::lambda_trusted;
use crate::spectral;

pub const CFL_LIMIT: f64 = 0.5;

/// Highest moment index recorded by the monitors (the second-flow chain at `k = 2`
/// needs `A^4`; one spare).
pub const MONITOR_MOMENTS: usize = 5;

/// Default gradient-catastrophe threshold: `max |f_x|` relative to its initial value.
pub const CATASTROPHE_FACTOR: f64 = 1e3;

/// Damping rate of the spectral hyperviscosity (in x only) at the Nyquist wavenumber. At
/// a third of Nyquist the rate is below `1e-3`.
pub const HYPERVISCOSITY: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowSpec {
    Benney,
    Second,
    General(DensitySpec),
}

impl FlowSpec {
    pub fn id(&self) -> String {
        match self {
            FlowSpec::Benney => "benney".into(),
            FlowSpec::Second => "second".into(),
            FlowSpec::General(spec) => match &spec.h {
                ScalarFn::Power { coef, m } if *coef == 1.0 => format!("general(f^{m},{})", spec.n),
                _ => format!("general(custom,{})", spec.n),
            },
        }
    }
}

/// `A^k(x)` for `k = 0..=order`, indexed `[k][x]`.
pub fn moment_series(field: &Field, order: usize) -> Vec<Vec<f64>> {
    let per_x: Vec<Vec<f64>> = (0..field.grid.x.n)
        .into_par_iter()
        .map(|i| raw_moments(&field.slice(i), order).values)
        .collect();
    (0..=order)
        .map(|k| per_x.iter().map(|a| a[k]).collect())
        .collect()
}

/// Advection speeds of a flow written as `f_t = a_x f_x + a_p f_p`.
struct Speeds {
    ax: Field,
    ap: Field,
}

fn speeds(field: &Field, flow: &FlowSpec) -> Result<Speeds> {
    let grid = field.grid;
    let (n_x, n_p) = (grid.x.n, grid.p.n);
    let p = grid.p.nodes();
    let per_x = |make: &dyn Fn(usize, usize) -> f64| Field {
        grid,
        values: (0..grid.len()).map(|k| make(k / n_p, k % n_p)).collect(),
    };
    match flow {
        FlowSpec::Benney => {
            let a = moment_series(field, 0);
            let a0x = spectral::d_dx_series(&a[0], &grid.x, 1);
            Ok(Speeds {
                ax: per_x(&|_, j| p[j]),
                ap: per_x(&|i, _| -a0x[i]),
            })
        }
        FlowSpec::Second => {
            let a = moment_series(field, 1);
            let a0x = spectral::d_dx_series(&a[0], &grid.x, 1);
            let a1x = spectral::d_dx_series(&a[1], &grid.x, 1);
            Ok(Speeds {
                ax: per_x(&|i, j| p[j] * p[j] + a[0][i]),
                ap: per_x(&|i, j| -(a0x[i] * p[j] + a1x[i])),
            })
        }
        FlowSpec::General(spec) => {
            spec.validate("flow.general")?;
            let (u, up) = gradient_fields(field, &spec.h, spec.n + 1)?;
            let ux = spectral::d_dx(&u, 1);
            debug_assert_eq!(n_x * n_p, ux.values.len());
            Ok(Speeds {
                ax: up,
                ap: Field {
                    grid,
                    values: ux.values.iter().map(|v| -v).collect(),
                },
            })
        }
    }
}

fn transport(field: &Field, s: &Speeds) -> Field {
    let fx = spectral::d_dx(field, 1);
    let fp = spectral::d_dp(field, 1);
    Field {
        grid: field.grid,
        values: (0..field.values.len())
            .map(|k| s.ax.values[k] * fx.values[k] + s.ap.values[k] * fp.values[k])
            .collect(),
    }
}

/// `p f_x - A^0_x f_p`.
pub fn benney_rhs(field: &Field) -> Result<Field> {
    Ok(transport(field, &speeds(field, &FlowSpec::Benney)?))
}

/// `(p^2 + A^0) f_x - (A^0_x p + A^1_x) f_p`.
pub fn second_rhs(field: &Field) -> Result<Field> {
    Ok(transport(field, &speeds(field, &FlowSpec::Second)?))
}

pub fn flow_rhs(field: &Field, flow: &FlowSpec) -> Result<Field> {
    Ok(transport(field, &speeds(field, flow)?))
}

fn courant_rate(field: &Field, s: &Speeds) -> f64 {
    s.ax.max_abs() / field.grid.dx() + s.ap.max_abs() / field.grid.dp()
}

/// `|dt| (max |a_x| / dx + max |a_p| / dp)` at the current state.
pub fn courant_number(field: &Field, flow: &FlowSpec, dt: f64) -> Result<f64> {
    Ok(dt.abs() * courant_rate(field, &speeds(field, flow)?))
}

/// One fourth-order Runge-Kutta step with the spectral hyperviscosity taken in
/// integrating-factor form. Negative `dt` integrates the transport backwards; the
/// hyperviscosity damps in both directions.
///
/// With `f < 0` of sufficient size the Benney flow is not hyperbolic (the linearised
/// dispersion relation has complex phase speeds), so grid-scale round-off grows at a
/// rate proportional to the wavenumber. The hyperviscosity holds that band down.
pub fn step_rk4(field: &Field, flow: &FlowSpec, dt: f64) -> Result<Field> {
    let s1 = speeds(field, flow)?;
    let courant = dt.abs() * courant_rate(field, &s1);
    if courant > CFL_LIMIT {
        return Err(Error::CflViolation {
            courant,
            limit: CFL_LIMIT,
        });
    }
    // Integrating-factor form: the hyperviscosity is applied exactly through the
    // half-step factor `e`, the transport by the classical four stages.
    let half = 0.5 * HYPERVISCOSITY * dt.abs();
    let e = |f: &Field| spectral::filter_x(f, half);
    let k1 = transport(field, &s1);
    let eu = e(field);
    let k2 = flow_rhs(&e(&field.axpy(0.5 * dt, &k1)), flow)?;
    let k3 = flow_rhs(&eu.axpy(0.5 * dt, &k2), flow)?;
    let k4 = flow_rhs(&e(&eu.axpy(dt, &k3)), flow)?;
    let (ek1, e23) = (e(&e(&k1)), e(&k2.axpy(1.0, &k3)));
    let eeu = e(&eu);
    let w = dt / 6.0;
    let values = (0..field.values.len())
        .map(|k| eeu.values[k] + w * (ek1.values[k] + 2.0 * e23.values[k] + k4.values[k]))
        .collect();
    let out = Field {
        grid: field.grid,
        values,
    };
    // Only a field that was resolved before the step can lose resolution during it.
    if decay_report(field, DECAY_TOL).pass {
        let after = decay_report(&out, DECAY_TOL);
        if !after.pass {
            return Err(Error::under_resolved(
                "solution reached the grid boundary",
                after.x_ratio.max(after.p_ratio),
                DECAY_TOL,
            ));
        }
    }
    Ok(out)
}

/// Integrates over `duration` (either sign) with the fewest equal RK4 sub-steps whose
/// initial Courant number stays below 90% of the limit.
pub fn advance(field: &Field, flow: &FlowSpec, duration: f64) -> Result<Field> {
    if duration == 0.0 {
        return Ok(field.clone());
    }
    let rate = courant_rate(field, &speeds(field, flow)?);
    let steps = ((duration.abs() * rate / (0.9 * CFL_LIMIT)).ceil() as usize).max(1);
    let dt = duration / steps as f64;
    let mut f = field.clone();
    for _ in 0..steps {
        f = step_rk4(&f, flow, dt)?;
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Monitor every this many steps (the initial and final states are always recorded).
    pub monitor_every: usize,
    /// Keep a snapshot every this many monitors (`None`: keep none beyond the final field).
    pub snapshot_every: Option<usize>,
    pub densities: Vec<DensitySpec>,
    pub catastrophe_factor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            monitor_every: 1,
            snapshot_every: None,
            densities: (0..4).map(|n| DensitySpec::power(1, n)).collect(),
            catastrophe_factor: CATASTROPHE_FACTOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub flow: FlowSpec,
    pub times: Vec<f64>,
    /// `moments[t][k][x]`
    pub moments: Vec<Vec<Vec<f64>>>,
    pub density_specs: Vec<DensitySpec>,
    /// `densities[t][s]`: the x-integrated density of spec `s`.
    pub densities: Vec<Vec<f64>>,
    /// Magnitude `integral integral |h(f)| |lambda|^n / n!` of each density at t = 0.
    pub density_scales: Vec<f64>,
    /// `integral integral f dp dx`
    pub mass: Vec<f64>,
    pub decay: Vec<DecayReport>,
    pub snapshots: Vec<(f64, Field)>,
    pub last: Field,
    /// Set when the run stopped at a gradient catastrophe.
    pub catastrophe_at: Option<f64>,
}

fn x_integrated_densities(field: &Field, specs: &[DensitySpec]) -> Result<(Vec<f64>, Vec<f64>)> {
    let dx = field.grid.dx();
    let per_x: Vec<(Vec<f64>, Vec<f64>)> = map_slices(field, |f| {
            let lambda = lambda_trusted(&f);
            let mut vals = Vec::with_capacity(specs.len());
            let mut mags = Vec::with_capacity(specs.len());
            for s in specs {
                vals.push(density_with(&f, &lambda, s, false)?);
                let fact: f64 = (1..=s.n).map(|k| k as f64).product();
                mags.push(
                    f.values
                        .iter()
                        .zip(lambda.values())
                        .map(|(&v, &l)| (s.h.value(v) * l.powi(s.n as i32)).abs())
                        .sum::<f64>()
                        * f.spacing()
                        / fact,
                );
            }
            Ok((vals, mags))
        })?;
    let mut vals = vec![0.0; specs.len()];
    let mut mags = vec![0.0; specs.len()];
    for (v, m) in &per_x {
        for s in 0..specs.len() {
            vals[s] += v[s] * dx;
            mags[s] += m[s] * dx;
        }
    }
    Ok((vals, mags))
}

/// `integral integral h(f) lambda^n / n! dp dx` for each spec.
pub fn integrated_densities(field: &Field, specs: &[DensitySpec]) -> Result<Vec<f64>> {
    for (i, s) in specs.iter().enumerate() {
        s.validate(&format!("densities[{i}]"))?;
    }
    Ok(x_integrated_densities(field, specs)?.0)
}

/// Densities together with their magnitudes `integral integral |h(f)| |lambda|^n / n!`, the
/// scale against which drifts are relative.
pub fn densities_with_scales(field: &Field, specs: &[DensitySpec]) -> Result<(Vec<f64>, Vec<f64>)> {
    for (i, s) in specs.iter().enumerate() {
        s.validate(&format!("densities[{i}]"))?;
    }
    x_integrated_densities(field, specs)
}

fn max_fx(field: &Field) -> f64 {
    spectral::d_dx(field, 1).max_abs()
}

pub fn evolve(field: &Field, flow: &FlowSpec, t_end: f64, dt: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::BadConfig("time.dt: must be positive".into()));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::BadConfig("time.t_end: must be non-negative".into()));
    }
    if opts.monitor_every == 0 {
        return Err(Error::BadConfig("time.monitor_every: must be >= 1".into()));
    }
    let steps = (t_end / dt).round() as usize;
    if ((steps as f64) * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::BadConfig("time.t_end: must be a whole number of steps".into()));
    }
    let (d0, scales) = x_integrated_densities(field, &opts.densities)?;
    let mut traj = Trajectory {
        flow: flow.clone(),
        times: vec![],
        moments: vec![],
        density_specs: opts.densities.clone(),
        densities: vec![],
        density_scales: scales,
        mass: vec![],
        decay: vec![],
        snapshots: vec![],
        last: field.clone(),
        catastrophe_at: None,
    };
    let fx0 = max_fx(field);
    let record = |traj: &mut Trajectory, f: &Field, t: f64, d: Option<Vec<f64>>| -> Result<()> {
        let d = match d {
            Some(d) => d,
            None => x_integrated_densities(f, &opts.densities)?.0,
        };
        if let Some(every) = opts.snapshot_every {
            if every > 0 && traj.times.len().is_multiple_of(every) {
                traj.snapshots.push((t, f.clone()));
            }
        }
        traj.times.push(t);
        traj.moments.push(moment_series(f, MONITOR_MOMENTS));
        traj.densities.push(d);
        traj.mass.push(f.integral());
        traj.decay.push(decay_report(f, DECAY_TOL));
        Ok(())
    };
    record(&mut traj, field, 0.0, Some(d0))?;
    let mut f = field.clone();
    for s in 1..=steps {
        f = step_rk4(&f, flow, dt)?;
        let t = s as f64 * dt;
        let fx = max_fx(&f);
        let broke = fx0 > 0.0 && fx > opts.catastrophe_factor * fx0;
        if s % opts.monitor_every == 0 || s == steps || broke {
            record(&mut traj, &f, t, None)?;
        }
        if broke {
            traj.catastrophe_at = Some(t);
            break;
        }
    }
    traj.last = f;
    Ok(traj)
}

impl Trajectory {
    /// Largest relative drift of each monitored density over the run, relative to
    /// `max(|H(0)|, integral integral |h(f)| |lambda|^n / n!)`.
    pub fn density_drift(&self) -> Vec<f64> {
        (0..self.density_specs.len())
            .map(|s| {
                let h0 = self.densities[0][s];
                let scale = h0.abs().max(self.density_scales[s]);
                let worst = self
                    .densities
                    .iter()
                    .map(|d| (d[s] - h0).abs())
                    .fold(0.0f64, f64::max);
                if worst == 0.0 {
                    0.0
                } else {
                    worst / scale
                }
            })
            .collect()
    }

    /// Relative drift of `integral integral f`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        let worst = self.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        if worst == 0.0 {
            0.0
        } else {
            worst / m0.abs().max(f64::MIN_POSITIVE)
        }
    }

    fn x_axis(&self) -> crate::grid::Axis {
        self.last.grid.x
    }

    /// Centered time differences of the monitors, at interior monitor indices, fed to `form`
    /// with `(A, A_t)` and returning the discrete L2-in-x norm of the residual.
    fn chain_residual(&self, form: impl Fn(&[Vec<f64>], &[Vec<f64>]) -> Vec<f64>) -> Vec<f64> {
        let dx = self.x_axis().spacing();
        (1..self.times.len().saturating_sub(1))
            .map(|m| {
                let dt = self.times[m + 1] - self.times[m - 1];
                let at: Vec<Vec<f64>> = (0..=MONITOR_MOMENTS)
                    .map(|k| {
                        self.moments[m + 1][k]
                            .iter()
                            .zip(&self.moments[m - 1][k])
                            .map(|(a, b)| (a - b) / dt)
                            .collect()
                    })
                    .collect();
                let r = form(&self.moments[m], &at);
                (r.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
            })
            .collect()
    }
}

fn x_derivatives(a: &[Vec<f64>], axis: &crate::grid::Axis) -> Vec<Vec<f64>> {
    a.iter().map(|s| spectral::d_dx_series(s, axis, 1)).collect()
}

/// `|| A^k_t - A^{k+1}_x - k A^{k-1} A^0_x ||` at each interior monitor time.
pub fn benney_moment_residual(traj: &Trajectory, k: usize) -> Result<Vec<f64>> {
    if k > 3 {
        return Err(Error::BadConfig(format!("benney_moment_residual: k = {k} > 3")));
    }
    let axis = traj.x_axis();
    Ok(traj.chain_residual(|a, at| {
        let ax = x_derivatives(a, &axis);
        (0..axis.n)
            .map(|i| {
                let lower = if k >= 1 { k as f64 * a[k - 1][i] * ax[0][i] } else { 0.0 };
                at[k][i] - ax[k + 1][i] - lower
            })
            .collect()
    }))
}

/// `|| A^k_t - A^{k+2}_x - A^0 A^k_x - (k+1) A^k A^0_x - k A^{k-1} A^1_x ||`.
pub fn second_moment_residual(traj: &Trajectory, k: usize) -> Result<Vec<f64>> {
    if k > 2 {
        return Err(Error::BadConfig(format!("second_moment_residual: k = {k} > 2")));
    }
    let axis = traj.x_axis();
    Ok(traj.chain_residual(|a, at| {
        let ax = x_derivatives(a, &axis);
        (0..axis.n)
            .map(|i| {
                let lower = if k >= 1 { k as f64 * a[k - 1][i] * ax[1][i] } else { 0.0 };
                at[k][i]
                    - ax[k + 2][i]
                    - a[0][i] * ax[k][i]
                    - (k + 1) as f64 * a[k][i] * ax[0][i]
                    - lower
            })
            .collect()
    }))
}

/// `|| d_x(A^0_t - A^0 A^0_x) - A^0_yy ||` at the origin of a `(y, t)` stencil built by
/// running the Benney flow by `+-dy` and the second flow by `+-dt`.
pub fn dkp_residual(field0: &Field, dt: f64, dy: f64) -> Result<f64> {
    let axis = field0.grid.x;
    let a0 = |f: &Field| moment_series(f, 0).swap_remove(0);
    let (yp, ym, tp, tm) = (
        advance(field0, &FlowSpec::Benney, dy)?,
        advance(field0, &FlowSpec::Benney, -dy)?,
        advance(field0, &FlowSpec::Second, dt)?,
        advance(field0, &FlowSpec::Second, -dt)?,
    );
    let (c, ayp, aym, atp, atm) = (a0(field0), a0(&yp), a0(&ym), a0(&tp), a0(&tm));
    let cx = spectral::d_dx_series(&c, &axis, 1);
    let inner: Vec<f64> = (0..axis.n)
        .map(|i| (atp[i] - atm[i]) / (2.0 * dt) - c[i] * cx[i])
        .collect();
    let inner_x = spectral::d_dx_series(&inner, &axis, 1);
    let r: Vec<f64> = (0..axis.n)
        .map(|i| inner_x[i] - (ayp[i] - 2.0 * c[i] + aym[i]) / (dy * dy))
        .collect();
    Ok((r.iter().map(|v| v * v).sum::<f64>() * axis.spacing()).sqrt())
}

/// `|| B_y S_t f - S_t B_y f || / || f ||` for one RK4 step of each flow.
pub fn commutativity_defect(field0: &Field, dt: f64, dy: f64) -> Result<f64> {
    let norm = field0.l2();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let yt = step_rk4(&step_rk4(field0, &FlowSpec::Benney, dy)?, &FlowSpec::Second, dt)?;
    let ty = step_rk4(&step_rk4(field0, &FlowSpec::Second, dt)?, &FlowSpec::Benney, dy)?;
    Ok(yt.sub(&ty).l2() / norm)
}
