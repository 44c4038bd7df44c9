use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dkp_core::coords::{canonical_chart, curve_of, flat_coordinate, ChartOptions, OffGrid};
use dkp_core::evolve::{
    benney_moment_residual, densities_with_scales, evolve, second_moment_residual, EvolveOptions, FlowSpec,
    Trajectory,
};
use dkp_core::frobenius::{
    intersection_form, intersection_scale, intersection_via_euler, potential, potential_identity_residual, unity,
    FrobeniusPoint, TangentCoefficient,
};
use dkp_core::grid::{sample_initial, Field, Profile};
use dkp_core::hierarchy::{hamiltonian_rhs, kernel_rhs};
use dkp_core::hodograph::{
    entropy_first_order, flow_invariance, solve, stationarity, HodographProblem,
};
use dkp_core::moments::metric_bridge;
use dkp_core::singular::{hilbert, lambda_of, tricomi_residual};
use dkp_core::snapshot::{read_field, write_field, write_profile};
use dkp_core::{Error, Result as CoreResult};
use serde_json::{json, Value};

use crate::config::{GuessSpec, RunConfig};
use crate::report::{num, opt, Check, Table};
use crate::CliError;

pub type Outcome = Result<(Vec<Check>, BTreeMap<String, Value>), CliError>;

const STATIONARITY_SEED: u64 = 0x5eed;
const STATIONARITY_DIRECTIONS: usize = 5;

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that it fails its check
    values.into_iter().fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn sup(v: &[f64]) -> f64 {
    max(v.iter().map(|x| x.abs()))
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    max(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

fn relative(abs: f64, scale: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else {
        abs / scale
    }
}

fn profile(cfg: &RunConfig) -> CoreResult<Profile> {
    cfg.profile.sample(cfg.grid.p)
}

fn mkdir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(Error::from)?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Outcome {
    let time = cfg
        .time
        .as_ref()
        .ok_or_else(|| Error::BadConfig("time: required".into()))?;
    let field = sample_initial(&cfg.initial, &cfg.grid)?;
    let opts = EvolveOptions {
        monitor_every: time.monitor_every,
        snapshot_every: (cfg.output.snapshot_stride > 0).then_some(cfg.output.snapshot_stride),
        densities: cfg.densities.clone(),
        ..EvolveOptions::default()
    };
    let traj = evolve(&field, &cfg.flow, time.t_end, time.dt, &opts)?;
    mkdir(out)?;
    write_monitors(cfg, &traj, &out.join("monitors.csv"))?;
    let snaps = out.join("snapshots");
    if !traj.snapshots.is_empty() {
        mkdir(&snaps)?;
    }
    let id = cfg.flow.id();
    for (i, (t, f)) in traj.snapshots.iter().enumerate() {
        write_field(&snaps.join(format!("snap_{i:04}")), f, *t, &id)?;
    }
    let t_last = *traj.times.last().expect("the initial state is always recorded");
    write_field(&out.join("final"), &traj.last, t_last, &id)?;

    let decay = max(traj.decay.iter().map(|d| d.x_ratio.max(d.p_ratio)));
    let checks = vec![
        Check::new("density_drift", max(traj.density_drift()), cfg.tol("density_drift")),
        Check::new("mass_drift", traj.mass_drift(), cfg.tol("mass_drift")),
        Check::new("decay", decay, cfg.tol("decay")),
    ];
    let mut info = BTreeMap::new();
    info.insert("flow".into(), json!(id));
    info.insert("t_final".into(), json!(t_last));
    info.insert("monitors".into(), json!(traj.times.len()));
    info.insert("catastrophe_at".into(), json!(traj.catastrophe_at));
    Ok((checks, info))
}

fn chain(traj: &Trajectory) -> CoreResult<Vec<Vec<f64>>> {
    match traj.flow {
        FlowSpec::Benney => (0..=3).map(|k| benney_moment_residual(traj, k)).collect(),
        FlowSpec::Second => (0..=2).map(|k| second_moment_residual(traj, k)).collect(),
        FlowSpec::General(_) => Ok(Vec::new()),
    }
}

fn write_monitors(cfg: &RunConfig, traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let axis = cfg.grid.x;
    let probes: Vec<(f64, usize)> = cfg
        .output
        .probes
        .iter()
        .map(|&x| {
            let i = ((x - axis.min) / axis.spacing()).round().clamp(0.0, (axis.n - 1) as f64) as usize;
            (axis.node(i), i)
        })
        .collect();
    let chains = chain(traj)?;
    let mut header = vec!["time".to_string()];
    for (x, _) in &probes {
        header.extend((0..=3).map(|k| format!("A{k}(x={x})")));
    }
    header.extend((0..traj.density_specs.len()).map(|s| format!("H{s}")));
    header.push("mass".into());
    header.extend((0..chains.len()).map(|k| format!("chain{k}")));
    header.extend(["decay_x".into(), "decay_p".into()]);
    let mut table = Table::new(&header)?;
    for (m, &t) in traj.times.iter().enumerate() {
        let mut row = vec![num(t)];
        for (_, i) in &probes {
            row.extend((0..=3).map(|k| num(traj.moments[m][k][*i])));
        }
        row.extend(traj.densities[m].iter().map(|&d| num(d)));
        row.push(num(traj.mass[m]));
        // chain residuals live on interior monitors only
        for c in &chains {
            let v = m.checked_sub(1).and_then(|j| c.get(j)).copied();
            row.push(opt(v));
        }
        row.push(num(traj.decay[m].x_ratio));
        row.push(num(traj.decay[m].p_ratio));
        table.row(row)?;
    }
    table.save(path)
}

fn resolve(cfg_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        cfg_dir.join(p)
    }
}

pub fn invariants(cfg: &RunConfig, cfg_dir: &Path, out: &Path) -> Outcome {
    let fields: Vec<(String, f64, Field)> = if cfg.snapshots.is_empty() {
        vec![("initial".into(), 0.0, sample_initial(&cfg.initial, &cfg.grid)?)]
    } else {
        cfg.snapshots
            .iter()
            .map(|s| {
                let stem = resolve(cfg_dir, s);
                let (h, f) = read_field(&stem).map_err(|e| match e {
                    Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", stem.display()))),
                    e => e,
                })?;
                Ok((s.display().to_string(), h.time, f))
            })
            .collect::<CoreResult<_>>()?
    };
    let ns = cfg.densities.len();
    let mut header = vec!["snapshot".to_string(), "time".into()];
    header.extend((0..ns).map(|s| format!("H{s}")));
    header.extend((0..ns).map(|s| format!("recursion{s}")));
    let mut table = Table::new(&header)?;
    let mut values = Vec::new();
    let mut scales = vec![0.0f64; ns];
    let mut recursion = 0.0f64;
    for (name, t, f) in &fields {
        let (d, sc) = densities_with_scales(f, &cfg.densities)?;
        for (a, b) in scales.iter_mut().zip(&sc) {
            *a = a.max(*b);
        }
        let mut rec = Vec::with_capacity(ns);
        for spec in &cfg.densities {
            let h = hamiltonian_rhs(f, spec)?;
            let k = kernel_rhs(f, spec)?;
            rec.push(relative(k.sub(&h).l2(), h.l2()));
        }
        recursion = max(rec.iter().copied().chain([recursion]));
        let mut row = vec![name.clone(), num(*t)];
        row.extend(d.iter().map(|&v| num(v)));
        row.extend(rec.iter().map(|&v| num(v)));
        table.row(row)?;
        values.push(d);
    }
    mkdir(out)?;
    table.save(&out.join("invariants.csv"))?;
    let spread = max((0..ns).map(|s| {
        let col: Vec<f64> = values.iter().map(|d| d[s]).collect();
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        relative(hi - lo, scales[s].max(sup(&col)))
    }));
    let checks = vec![
        Check::new("density_spread", spread, cfg.tol("density_spread")),
        Check::new("recursion", recursion, cfg.tol("recursion")),
    ];
    let mut info = BTreeMap::new();
    info.insert("snapshots".into(), json!(fields.len()));
    Ok((checks, info))
}

/// Polynomial coefficients of the tangent vectors used by the algebra checks.
const ALGEBRA_POLYS: &[&[f64]] = &[
    &[1.0],
    &[0.0, 1.0],
    &[0.5, -1.0, 0.3],
    &[0.2, 0.1, -0.4, 0.25],
    &[0.0, 0.0, 0.0, 1.0],
];

pub fn frobenius_check(cfg: &RunConfig, out: &Path) -> Outcome {
    let f = profile(cfg)?;
    let axis = f.axis;
    let nf = f.l2();
    let hh = hilbert(&hilbert(&f)?)?;
    let involution = relative(hh.zip_with(&f, |a, b| a + b).l2(), nf);
    let g = f.zip_with(&Profile::from_fn(axis, |p| p), |a, p| a * p);
    let tricomi = max([tricomi_residual(&f, &f)?, tricomi_residual(&f, &g)?]);
    let lambda = lambda_of(&f)?;
    let lambda_derivative = lambda.derivative_consistency(&f)?;
    let point = FrobeniusPoint::with_lambda(&f, lambda.clone())?;

    let mut bridges = Table::new(["k", "n", "eta_kernel", "eta_moment", "eta_rel", "g_kernel", "g_moment", "g_rel"])?;
    let (mut bridge_eta, mut bridge_g) = (0.0f64, 0.0f64);
    for k in 0..=3 {
        for n in 0..=3 {
            let b = metric_bridge(&f, k, n)?;
            bridge_eta = max([bridge_eta, b.eta_relative()]);
            bridge_g = max([bridge_g, b.g_relative()]);
            bridges.row(vec![
                k.to_string(),
                n.to_string(),
                num(b.eta_kernel),
                num(b.eta_moment),
                num(b.eta_relative()),
                num(b.g_kernel),
                num(b.g_moment),
                num(b.g_relative()),
            ])?;
        }
    }

    let t: Vec<TangentCoefficient> = ALGEBRA_POLYS
        .iter()
        .map(|c| TangentCoefficient::polynomial(axis, c))
        .collect();
    let e = unity(&f);
    let (mut u, mut c, mut a, mut inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let dp = axis.spacing();
    for x in &t {
        let vx = point.vector(x);
        u = max([u, relative(gap(&point.vector(&point.product(&e, x)?), &vx), sup(&vx))]);
        for y in &t {
            let xy = point.product(x, y)?;
            let yx = point.product(y, x)?;
            let vxy = point.vector(&xy);
            c = max([c, relative(gap(&vxy, &point.vector(&yx)), sup(&vxy))]);
            for z in &t {
                let yz = point.product(y, z)?;
                let l = point.vector(&point.product(&xy, z)?);
                let r = point.vector(&point.product(x, &yz)?);
                a = max([a, relative(gap(&l, &r), sup(&l))]);
                let scale = dp
                    * (0..point.fp.len())
                        .map(|j| (xy.h.values[j] * z.h.values[j] * point.fp[j]).abs())
                        .sum::<f64>();
                inv = max([inv, relative((point.eta_pair(&xy, z) - point.eta_pair(x, &yz)).abs(), scale)]);
            }
        }
    }

    let mut intersection = 0.0f64;
    for k in 0..=3 {
        for n in 0..=3 {
            let ak = Profile::from_fn(axis, |p| p.powi(k));
            let bn = Profile::from_fn(axis, |p| p.powi(n));
            let direct = intersection_form(&ak, &bn, &point);
            let euler = intersection_via_euler(&ak, &bn, &point)?;
            intersection = max([intersection, relative((direct - euler).abs(), intersection_scale(&ak, &bn, &point))]);
        }
    }
    let potential_identity = potential_identity_residual(&f, &lambda)?;

    mkdir(out)?;
    bridges.save(&out.join("bridges.csv"))?;
    let checks = vec![
        Check::new("hilbert_involution", involution, cfg.tol("hilbert_involution")),
        Check::new("tricomi", tricomi, cfg.tol("tricomi")),
        Check::new("lambda_derivative", lambda_derivative, cfg.tol("lambda_derivative")),
        Check::new("bridge_eta", bridge_eta, cfg.tol("bridge_eta")),
        Check::new("bridge_g", bridge_g, cfg.tol("bridge_g")),
        Check::new("unity", u, cfg.tol("unity")),
        Check::new("commutativity", c, cfg.tol("commutativity")),
        Check::new("associativity", a, cfg.tol("associativity")),
        Check::new("eta_invariance", inv, cfg.tol("eta_invariance")),
        Check::new("intersection", intersection, cfg.tol("intersection")),
        Check::new("potential_identity", potential_identity, cfg.tol("potential_identity")),
    ];
    let mut info = BTreeMap::new();
    info.insert("potential".into(), json!(potential(&f)?));
    Ok((checks, info))
}

pub fn hodograph(cfg: &RunConfig, out: &Path) -> Outcome {
    let hc = &cfg.hodograph;
    let axis = cfg.grid.p;
    let guess = match &hc.guess {
        GuessSpec::FirstOrder { a, eps } => entropy_first_order(axis, *a, *eps, hc.points[0]),
        GuessSpec::Profile(p) => p.sample(axis)?,
    };
    let problem = HodographProblem {
        k: hc.k.clone(),
        points: hc.points.clone(),
        guess: guess.clone(),
        options: hc.options,
    };
    let sol = solve(&problem)?;
    mkdir(out)?;
    let mut table = Table::new([
        "point",
        "x",
        "y",
        "t",
        "residual",
        "iterations",
        "converged",
        "fallbacks",
        "hessian_min",
        "hessian_max",
        "stationarity",
    ])?;
    let mut worst_stat = 0.0f64;
    for (i, s) in sol.points.iter().enumerate() {
        let stat = if s.converged {
            sup(&stationarity(&s.f, s.point, &hc.k, STATIONARITY_DIRECTIONS, STATIONARITY_SEED))
        } else {
            f64::NAN
        };
        worst_stat = max([worst_stat, stat]);
        table.row(vec![
            i.to_string(),
            num(s.point.x),
            num(s.point.y),
            num(s.point.t),
            num(s.residual),
            s.iterations.to_string(),
            s.converged.to_string(),
            s.fallbacks.to_string(),
            num(s.hessian_min),
            num(s.hessian_max),
            num(stat),
        ])?;
        write_profile(&out.join(format!("solution_{i:03}")), &s.f, s.point.t, "hodograph")?;
    }
    table.save(&out.join("hodograph.csv"))?;
    let unconverged = sol.points.iter().filter(|s| !s.converged).count();
    let mut checks = vec![
        Check::new("converged", unconverged as f64, 0.0),
        Check::new(
            "hodograph_residual",
            max(sol.points.iter().map(|s| s.residual)),
            cfg.tol("hodograph_residual"),
        ),
        Check::new("stationarity", worst_stat, cfg.tol("stationarity")),
    ];
    let mut info = BTreeMap::new();
    if let Some(delta) = hc.delta {
        let pt = hc.points[0];
        let coarse = flow_invariance(&hc.k, pt, &guess, delta, &hc.options)?;
        let fine = flow_invariance(&hc.k, pt, &guess, delta / 2.0, &hc.options)?;
        let order = max([
            (coarse.benney / fine.benney / 4.0 - 1.0).abs(),
            (coarse.second / fine.second / 4.0 - 1.0).abs(),
        ]);
        checks.push(Check::new("flow_order", order, cfg.tol("flow_order")));
        info.insert("flow_invariance".into(), json!([coarse, fine]));
    }
    Ok((checks, info))
}

pub fn coords(cfg: &RunConfig, out: &Path) -> Outcome {
    let cc = &cfg.coords;
    let f = profile(cfg)?;
    let (curve, slope) = curve_of(&f)?;
    let opts = ChartOptions {
        window: cc.window,
        alpha_range: cc.alpha_range,
        alpha_nodes: cc.alpha_nodes,
        alpha0: cc.alpha0,
        ..ChartOptions::default()
    };
    let chart = canonical_chart(&f, &opts)?;
    let mu = if cc.mu.is_empty() {
        let g = OffGrid::new(&f)?;
        let (fa, fb) = (g.f(cc.branch.0), g.f(cc.branch.1));
        (1..=16).map(|i| fa + (fb - fa) * i as f64 / 17.0).collect()
    } else {
        cc.mu.clone()
    };
    let flat = flat_coordinate(&f, cc.branch, &mu)?;

    mkdir(out)?;
    let mut t = Table::new(["p", "curve_x", "curve_y", "tangent_x", "tangent_y", "slope"])?;
    for i in 0..curve.p.len() {
        t.row(vec![
            num(curve.p[i]),
            num(curve.points[i][0]),
            num(curve.points[i][1]),
            num(curve.tangents[i][0]),
            num(curve.tangents[i][1]),
            opt(slope.values[i]),
        ])?;
    }
    t.save(&out.join("curve.csv"))?;
    let mut t = Table::new(["alpha", "kappa", "r", "residual", "envelope"])?;
    for i in 0..chart.alpha.len() {
        t.row(vec![
            num(chart.alpha[i]),
            num(chart.kappa[i]),
            num(chart.r[i]),
            num(chart.residual[i]),
            num(chart.envelope[i]),
        ])?;
    }
    t.save(&out.join("chart.csv"))?;
    let mut t = Table::new(["p", "r", "alpha0"])?;
    for s in &chart.stationary {
        t.row(vec![num(s.p), num(s.r), num(chart.alpha0)])?;
    }
    t.save(&out.join("stationary.csv"))?;
    let mut t = Table::new(["mu", "w", "residual"])?;
    for i in 0..flat.mu.len() {
        t.row(vec![num(flat.mu[i]), num(flat.w[i]), num(flat.residual[i])])?;
    }
    t.save(&out.join("flat.csv"))?;

    let checks = vec![
        Check::new("chart_stationarity", chart.max_residual(), cfg.tol("chart_stationarity")),
        Check::new("envelope", chart.envelope_residual(), cfg.tol("envelope")),
        Check::new("flat_round_trip", flat.max_residual(), cfg.tol("flat_round_trip")),
    ];
    let mut info = BTreeMap::new();
    info.insert("alpha0".into(), json!(chart.alpha0));
    info.insert("stationary_points".into(), json!(chart.stationary.len()));
    info.insert("masked_slope_nodes".into(), json!(slope.masked()));
    Ok((checks, info))
}
