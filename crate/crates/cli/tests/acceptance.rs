//! The acceptance suite: one line per criterion, measured on the reference setup
//! (`[-12, 12]^2`, 256 x 256, `f0 = -0.5 exp(-x^2 - p^2)`) unless a line says otherwise.
//!
//! Runs without the libtest harness so that every line is printed. The process fails if a
//! criterion fails other than the one known to be unattainable as stated.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{dawson, potential_oracle, pv_midpoint, rel};
use dkp_core::coords::{canonical_chart, flat_coordinate, ChartOptions};
use dkp_core::evolve::{
    benney_moment_residual, benney_rhs, commutativity_defect, dkp_residual, evolve, flow_rhs, second_moment_residual,
    second_rhs, step_rk4, EvolveOptions, FlowSpec,
};
use dkp_core::frobenius::{
    intersection_form, intersection_scale, intersection_via_euler, potential, potential_identity_residual, unity,
    FrobeniusPoint, TangentCoefficient,
};
use dkp_core::grid::{sample_initial, Axis, Field, InitialSpec, PhaseGrid, Profile};
use dkp_core::hierarchy::{density, hamiltonian_rhs, kernel_rhs, level_flow_rhs, DensitySpec, ScalarFn};
use dkp_core::hodograph::{
    entropy_first_order, flow_invariance, hodograph_residual, jacobian, solve_converged, KSpec, Point, SolverOptions,
};
use dkp_core::moments::{metric_bridge, moments};
use dkp_core::singular::{hilbert, lambda_of, tricomi_residual};
use dkp_core::snapshot::{read_field, write_field};
use dkp_core::spectral::sinc_value;
use dkp_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Residuals both below this are round-off, and their ratio carries no order information.
const CHAIN_FLOOR: f64 = 1e-11;
const COMMUTATOR_FLOOR: f64 = 1e-13;

#[derive(Default)]
struct Tally {
    parts: Vec<String>,
    failed: Vec<String>,
    /// Extra lines printed under the criterion.
    notes: Vec<String>,
}

impl Tally {
    fn le(&mut self, label: &str, value: f64, tol: f64) {
        self.record(label, value <= tol, format!("{label} {value:.2e} <= {tol:.0e}"));
    }

    fn ge(&mut self, label: &str, value: f64, min: f64) {
        self.record(label, value >= min, format!("{label} {value:.2e} >= {min:e}"));
    }

    fn within(&mut self, label: &str, value: f64, lo: f64, hi: f64) {
        self.record(label, (lo..=hi).contains(&value), format!("{label} {value:.3} in [{lo}, {hi}]"));
    }

    /// Second-order convergence: successive ratios within 4 +- 25%, or both values at round-off.
    fn order2(&mut self, label: &str, values: &[f64], floor: f64) {
        for (i, w) in values.windows(2).enumerate() {
            let l = format!("{label}[{i}]");
            if w[0] <= floor && w[1] <= floor {
                self.record(&l, true, format!("{l} {:.1e}, {:.1e} at round-off", w[0], w[1]));
            } else {
                self.within(&l, w[0] / w[1], 3.0, 5.0);
            }
        }
    }

    fn record(&mut self, label: &str, ok: bool, text: String) {
        if !ok {
            self.failed.push(label.to_string());
        }
        self.parts.push(text);
    }

    fn pass(&self) -> bool {
        self.failed.is_empty()
    }
}

fn axis(n: usize) -> Axis {
    Axis::new(-12.0, 12.0, n, "p").unwrap()
}

/// `a exp(-(p - c)^2 / w)`
const FAMILY: [(f64, f64, f64); 4] = [(1.0, 0.0, 1.0), (-0.5, 0.3, 1.0), (0.8, -0.7, 0.5), (0.3, 0.4, 2.0)];

fn gauss(a: f64, c: f64, w: f64) -> impl Fn(f64) -> f64 + Copy {
    move |p: f64| a * (-(p - c) * (p - c) / w).exp()
}

fn family(n: usize) -> Vec<Profile> {
    FAMILY.iter().map(|&(a, c, w)| Profile::from_fn(axis(n), gauss(a, c, w))).collect()
}

fn reference_field() -> Field {
    sample_initial(&InitialSpec::reference(), &PhaseGrid::reference()).unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn field_rel(a: &Field, b: &Field) -> f64 {
    a.sub(b).l2() / b.l2()
}

fn hilbert_involution(t: &mut Tally) {
    let worst = family(256)
        .iter()
        .map(|f| hilbert(&hilbert(f).unwrap()).unwrap().zip_with(f, |a, b| a + b).l2() / f.l2())
        .fold(0.0, f64::max);
    t.le("|Hilb^2 f + f| / |f|", worst, 1e-8);
}

fn tricomi(t: &mut Tally) {
    let fam = family(256);
    let mut worst = 0.0f64;
    for a in &fam {
        for b in &fam {
            worst = worst.max(tricomi_residual(a, b).unwrap());
        }
    }
    t.le("tricomi residual", worst, 1e-6);
}

fn lambda_dawson(t: &mut Tally) {
    let ax = axis(256);
    let l = lambda_of(&Profile::from_fn(ax, |p| (-p * p).exp())).unwrap();
    let nodes = ax.nodes();
    let dawson_err = nodes
        .iter()
        .zip(l.values())
        .map(|(&p, &v)| (v - (p + 2.0 * PI.sqrt() * dawson(p))).abs())
        .fold(0.0, f64::max);
    t.le("max |lambda - p - 2 sqrt(pi) D|", dawson_err, 1e-7);
    let midpoint_err = (0..256)
        .step_by(5)
        .map(|j| (l.values()[j] - nodes[j] - pv_midpoint(|q| (-q * q).exp(), nodes[j], 0.005, 40.0)).abs())
        .fold(0.0, f64::max);
    t.le("max |lambda - p - midpoint pv|", midpoint_err, 1e-7);
}

fn metric_bridges(t: &mut Tally) {
    let (mut eta, mut g) = (0.0f64, 0.0f64);
    for f in family(256) {
        for k in 0..=3 {
            for n in 0..=3 {
                let b = metric_bridge(&f, k, n).unwrap();
                eta = eta.max(b.eta_relative());
                g = g.max(b.g_relative());
            }
        }
    }
    t.le("eta bridge", eta, 1e-6);
    t.le("g bridge", g, 1e-6);
}

fn gap_rel(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if d == 0.0 {
        0.0
    } else {
        d / sup(a)
    }
}

fn frobenius_algebra(t: &mut Tally) {
    let polys: [&[f64]; 5] = [&[1.0], &[0.0, 1.0], &[0.5, -1.0, 0.3], &[0.2, 0.1, -0.4, 0.25], &[0.0, 0.0, 0.0, 1.0]];
    let (mut u, mut c, mut a, mut inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for f in family(256) {
        let ax = f.axis;
        let pt = FrobeniusPoint::new(&f).unwrap();
        let tv: Vec<TangentCoefficient> = polys.iter().map(|c| TangentCoefficient::polynomial(ax, c)).collect();
        let e = unity(&f);
        for x in &tv {
            u = u.max(gap_rel(&pt.vector(x), &pt.vector(&pt.product(&e, x).unwrap())));
            for y in &tv {
                let xy = pt.product(x, y).unwrap();
                c = c.max(gap_rel(&pt.vector(&xy), &pt.vector(&pt.product(y, x).unwrap())));
                for z in &tv {
                    let yz = pt.product(y, z).unwrap();
                    let l = pt.vector(&pt.product(&xy, z).unwrap());
                    a = a.max(gap_rel(&l, &pt.vector(&pt.product(x, &yz).unwrap())));
                    let scale: f64 = (0..pt.fp.len())
                        .map(|j| (xy.h.values[j] * z.h.values[j] * pt.fp[j]).abs())
                        .sum::<f64>()
                        * ax.spacing();
                    inv = inv.max((pt.eta_pair(&xy, z) - pt.eta_pair(x, &yz)).abs() / scale);
                }
            }
        }
    }
    t.le("unity", u, 1e-5);
    t.le("commutativity", c, 1e-5);
    t.le("associativity", a, 1e-5);
    t.le("eta invariance", inv, 1e-5);
}

fn intersection(t: &mut Tally) {
    let mut worst = 0.0f64;
    for f in family(256) {
        let pt = FrobeniusPoint::new(&f).unwrap();
        for k in 0..=3 {
            for n in 0..=3 {
                let a = Profile::from_fn(f.axis, |p| p.powi(k));
                let b = Profile::from_fn(f.axis, |p| p.powi(n));
                let d = intersection_form(&a, &b, &pt) - intersection_via_euler(&a, &b, &pt).unwrap();
                worst = worst.max(d.abs() / intersection_scale(&a, &b, &pt));
            }
        }
    }
    t.le("direct vs Euler", worst, 1e-6);
}

fn potential_identity(t: &mut Tally) {
    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
    let mut oracle = 0.0f64;
    for &(a, c, w) in &FAMILY {
        let r = |n: usize| {
            let f = Profile::from_fn(axis(n), gauss(a, c, w));
            potential_identity_residual(&f, &lambda_of(&f).unwrap()).unwrap()
        };
        coarse = coarse.max(r(128));
        fine = fine.max(r(256));
        let got = potential(&Profile::from_fn(axis(256), gauss(a, c, w))).unwrap();
        oracle = oracle.max(rel(got, potential_oracle(gauss(a, c, w), 12.0)));
    }
    t.le("interior residual (256)", fine, 1e-5);
    t.ge("refinement ratio 128->256", coarse / fine, 16.0);
    t.le("F vs 2-D log quadrature", oracle, 1e-6);
}

fn classical_densities(t: &mut Tally) {
    let (mut h1, mut h2) = (0.0f64, 0.0f64);
    for f in family(256) {
        let l = lambda_of(&f).unwrap();
        let m = moments(&f, 2).unwrap().values;
        h1 = h1.max((density(&f, &l, &DensitySpec::power(1, 1)).unwrap() - m[1]).abs());
        let cube: f64 = f.values.iter().map(|v| v.powi(3)).sum::<f64>() * f.spacing();
        let want = 0.5 * m[2] + 0.5 * m[0] * m[0] + PI * PI / 6.0 * cube;
        h2 = h2.max(rel(density(&f, &l, &DensitySpec::power(1, 2)).unwrap(), want));
    }
    t.le("|H1 - A1|", h1, 1e-8);
    t.le("H2 vs A2/2 + (A0)^2/2 + pi^2/6 int f^3", h2, 1e-6);
}

/// The literal `General(f, 2) = Second` identity is false (the density carries an extra
/// `f^3 lambda` term); the corrected `General(f, 2) = Second/2 + (pi^2/6) flow(f^3 lambda)`
/// is reported on its own line.
fn recursion(t: &mut Tally) {
    let field = reference_field();
    for spec in [
        DensitySpec::power(1, 0),
        DensitySpec::power(1, 1),
        DensitySpec::power(1, 2),
        DensitySpec::power(2, 0),
        DensitySpec::power(2, 1),
    ] {
        let h = hamiltonian_rhs(&field, &spec).unwrap();
        let k = kernel_rhs(&field, &spec).unwrap();
        t.le(&format!("kernel vs hamiltonian (f^{},{})", h_power(&spec), spec.n), field_rel(&k, &h), 1e-6);
    }
    let g1 = flow_rhs(&field, &FlowSpec::General(DensitySpec::power(1, 1))).unwrap();
    t.le("General(f,1) vs Benney", field_rel(&g1, &benney_rhs(&field).unwrap()), 1e-6);
    let g2 = flow_rhs(&field, &FlowSpec::General(DensitySpec::power(1, 2))).unwrap();
    let second = second_rhs(&field).unwrap();
    t.le("General(f,2) vs Second", field_rel(&g2, &second), 1e-6);
    let cubic = level_flow_rhs(&field, &ScalarFn::power(3), 1).unwrap();
    let want = second.scale_add(0.5, &cubic, PI * PI / 6.0);
    let mut corrected = Tally::default();
    corrected.le("General(f,2) vs Second/2 + (pi^2/6) flow(f^3 lambda)", field_rel(&g2, &want), 1e-6);
    let status = if corrected.pass() { "PASS" } else { "FAIL" };
    t.notes.push(format!("{status} corrected identity: {}", corrected.parts.join("; ")));
    if !corrected.pass() {
        t.failed.push("corrected identity".into());
    }
}

fn h_power(spec: &DensitySpec) -> u32 {
    match spec.h {
        ScalarFn::Power { m, .. } => m,
        _ => 0,
    }
}

trait ScaleAdd {
    fn scale_add(&self, s: f64, other: &Field, r: f64) -> Field;
}

impl ScaleAdd for Field {
    fn scale_add(&self, s: f64, other: &Field, r: f64) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| s * a + r * b).collect();
        Field::new(self.grid, values).unwrap()
    }
}

fn max_of(v: Vec<f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// `f(x, p) -> f(x, p + s)` through the sinc interpolant of each row: the exact flow of
/// `f_t = f_p` on the lattice.
fn translate_p(field: &Field, s: f64) -> Field {
    let ax = field.grid.p;
    let nodes = ax.nodes();
    let values = field
        .rows()
        .flat_map(|row| nodes.iter().map(|&p| sinc_value(row, &ax, p + s)).collect::<Vec<_>>())
        .collect();
    Field::new(field.grid, values).unwrap()
}

fn dynamics(t: &mut Tally) {
    let field = reference_field();
    let reference = evolve(&field, &FlowSpec::Benney, 0.5, 1.0 / 512.0, &EvolveOptions::default()).unwrap();
    t.le("density drift H0..H3 to t = 0.5", max_of(reference.density_drift()), 1e-5);

    let bare = EvolveOptions {
        densities: vec![],
        ..EvolveOptions::default()
    };
    let mut benney = vec![Vec::new(); 4];
    for dt in [1.0 / 512.0, 1.0 / 1024.0] {
        let tr = evolve(&field, &FlowSpec::Benney, 0.125, dt, &bare).unwrap();
        for (k, r) in benney.iter_mut().enumerate() {
            r.push(max_of(benney_moment_residual(&tr, k).unwrap()));
        }
    }
    for (k, r) in benney.iter().enumerate() {
        t.order2(&format!("Benney chain k={k}"), r, CHAIN_FLOOR);
    }
    let mut second = vec![Vec::new(); 3];
    for dt in [1.0 / 4096.0, 1.0 / 8192.0] {
        let tr = evolve(&field, &FlowSpec::Second, 1.0 / 64.0, dt, &bare).unwrap();
        for (k, r) in second.iter_mut().enumerate() {
            r.push(max_of(second_moment_residual(&tr, k).unwrap()));
        }
    }
    for (k, r) in second.iter().enumerate() {
        t.order2(&format!("second chain k={k}"), r, CHAIN_FLOOR);
    }

    let steps = [2e-2, 1e-2, 5e-3];
    let dkp: Vec<f64> = steps.iter().map(|&d| dkp_residual(&field, d, d).unwrap()).collect();
    t.order2("dKP residual", &dkp, CHAIN_FLOOR);

    let steps = [3e-4, 1.5e-4, 7.5e-5];
    let comm: Vec<f64> = steps.iter().map(|&d| commutativity_defect(&field, d, d).unwrap()).collect();
    t.order2("y/t commutativity defect", &comm, COMMUTATOR_FLOOR);
    // a pair that does not commute, to show the defect measure is sensitive
    let control: Vec<f64> = steps
        .iter()
        .map(|&d| {
            let a = translate_p(&step_rk4(&field, &FlowSpec::Benney, d).unwrap(), d);
            let b = step_rk4(&translate_p(&field, d), &FlowSpec::Benney, d).unwrap();
            a.sub(&b).l2() / field.l2()
        })
        .collect();
    t.order2("control defect (Benney vs p-translation)", &control, COMMUTATOR_FLOOR);
    t.ge("control defect magnitude", control[0], 1e3 * COMMUTATOR_FLOOR);

    let run = |n: usize| evolve(&field, &FlowSpec::Benney, 0.125, 0.125 / n as f64, &bare).unwrap().last;
    let (a, b, c) = (run(35), run(70), run(140));
    let order = (a.sub(&b).l2() / b.sub(&c).l2()).log2();
    t.within("RK4 self-convergence order", order, 3.2, 4.8);
}

fn hodograph(t: &mut Tally) {
    let ax = axis(128);
    let pt = Point { x: 0.3, y: 0.1, t: 0.5 };
    let k = KSpec::entropy(0.5, 0.2);
    let opts = SolverOptions::default();
    let guess = entropy_first_order(ax, 0.5, 0.2, pt);
    let s = solve_converged(&k, pt, &guess, &opts).unwrap();
    t.le("weighted residual", s.residual, 1e-8);

    let f = &s.f;
    let jac = jacobian(f, pt, &k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nodes = ax.nodes();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..ax.n)
            .map(|i| {
                let p = nodes[i];
                f.values[i] * (c[0] + p * (c[1] + p * (c[2] + p * c[3]))) * (-p * p / 8.0).exp()
            })
            .collect();
        let step = 1e-6;
        let r = |sign: f64| {
            let g = Profile::new(ax, f.values.iter().zip(&v).map(|(a, b)| a + sign * step * b).collect());
            hodograph_residual(&g, pt, &k).unwrap().values
        };
        let (rp, rm) = (r(1.0), r(-1.0));
        let fd: Vec<f64> = (0..ax.n).map(|i| (rp[i] - rm[i]) / (2.0 * step)).collect();
        let jv: Vec<f64> = (0..ax.n).map(|i| (0..ax.n).map(|j| jac[(i, j)] * v[j]).sum()).collect();
        // measured in the solver's window, where the residual is imposed
        let wf: Vec<f64> = (0..ax.n).map(|i| (f.values[i].abs() + 1e-8) * fd[i]).collect();
        let wj: Vec<f64> = (0..ax.n).map(|i| (f.values[i].abs() + 1e-8) * jv[i]).collect();
        worst = worst.max(gap_rel(&wf, &wj));
    }
    t.le("Jacobian vs finite differences", worst, 1e-6);

    let coarse = flow_invariance(&k, pt, &guess, 0.02, &opts).unwrap();
    let fine = flow_invariance(&k, pt, &guess, 0.01, &opts).unwrap();
    t.order2("Benney residual over lattice", &[coarse.benney, fine.benney], 0.0);
    t.order2("second-flow residual over lattice", &[coarse.second, fine.second], 0.0);
}

fn coordinates(t: &mut Tally) {
    let f = Profile::from_fn(axis(256), |p| (-p * p).exp());
    let chart = canonical_chart(&f, &ChartOptions::default()).unwrap();
    t.le("chart stationarity", chart.max_residual(), 1e-8);
    t.le("envelope dr/dalpha + pi f(kappa)", chart.envelope_residual(), 1e-6);
    let mu: Vec<f64> = (1..20).map(|k| (-(0.1 + 0.15 * k as f64).powi(2)).exp()).collect();
    let flat = flat_coordinate(&f, (0.1, 3.0), &mu).unwrap();
    t.le("flat round trip", flat.max_residual(), 1e-10);
    let w = flat_coordinate(&f, (0.1, 3.0), &[(-1.0f64).exp()]).unwrap().w[0];
    t.le("|w(1/e) - 1|", (w - 1.0).abs(), 1e-10);
}

fn dkp(args: &[&str], cfg: &Path, out: &Path) -> (i32, serde_json::Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_dkp"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap();
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    (status.status.code().unwrap_or(-1), serde_json::from_str(&report).unwrap())
}

fn same_tree(a: &Path, b: &Path) -> bool {
    let list = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    la.len() == lb.len()
        && la.iter().zip(&lb).all(|(x, y)| {
            x.file_name() == y.file_name()
                && if x.is_dir() {
                    same_tree(x, y)
                } else {
                    fs::read(x).unwrap() == fs::read(y).unwrap()
                }
        })
}

fn plumbing(t: &mut Tally) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let field = reference_field();
    let stem = d.join("ref");
    write_field(&stem, &field, 0.25, "benney").unwrap();
    let (header, back) = read_field(&stem).unwrap();
    let exact = back.grid == field.grid
        && header.time == 0.25
        && back.values.iter().zip(&field.values).all(|(a, b)| a.to_bits() == b.to_bits());
    t.record("snapshot bit-exact", exact, format!("snapshot round trip bit-exact: {exact}"));
    let payload = fs::read(stem.with_extension("f64")).unwrap();
    fs::write(stem.with_extension("f64"), &payload[..payload.len() - 8]).unwrap();
    let truncated = matches!(read_field(&stem), Err(Error::Format(_)));
    t.record("truncated payload", truncated, format!("truncated payload -> FormatError: {truncated}"));

    let grid = r#""grid": {"x_min": -12, "x_max": 12, "n_x": 128, "p_min": -12, "p_max": 12, "n_p": 128}"#;
    let write = |name: &str, body: &str| {
        let p = d.join(name);
        fs::write(&p, format!("{{{grid}{body}}}")).unwrap();
        p
    };
    let sim = write(
        "sim.json",
        r#", "time": {"t_end": 0.03125, "dt": 0.00390625, "monitor_every": 2}, "output": {"snapshot_stride": 1, "probes": [0, 1]}"#,
    );
    let (c1, _) = dkp(&["simulate"], &sim, &d.join("run1"));
    let (c2, _) = dkp(&["simulate"], &sim, &d.join("run2"));
    let identical = c1 == 0 && c2 == 0 && same_tree(&d.join("run1"), &d.join("run2"));
    t.record("byte-identical rerun", identical, format!("simulate rerun byte-identical: {identical}"));

    let full = r#""grid": {"x_min": -12, "x_max": 12, "n_x": 256, "p_min": -12, "p_max": 12, "n_p": 256}"#;
    let pass = d.join("frob.json");
    fs::write(&pass, format!("{{{full}}}")).unwrap();
    let (code, rep) = dkp(&["frobenius-check"], &pass, &d.join("pass"));
    t.record("pass case", code == 0 && rep["status"] == "pass", format!("frobenius-check on reference: exit {code}"));

    let cases = [
        ("frobenius-check", format!(r#"{{{full}, "checks": {{"tricomi": 1e-30}}}}"#), 1, "fail", None),
        ("simulate", format!(r#"{{{grid}, "time": {{"t_end": 0.5, "dt": 0.5}}}}"#), 2, "error", Some("CFLViolation")),
        ("coords", format!(r#"{{{full}, "profile": {{"kind": "zero"}}}}"#), 2, "error", Some("DegenerateDerivative")),
    ];
    for (i, (sub, body, want_code, want_status, want_kind)) in cases.into_iter().enumerate() {
        let cfg = d.join(format!("fail{i}.json"));
        fs::write(&cfg, body).unwrap();
        let (code, rep) = dkp(&[sub], &cfg, &d.join(format!("fail{i}")));
        let kind_ok = want_kind.is_none_or(|k| rep["error"]["kind"] == k);
        let ok = code == want_code && rep["status"] == want_status && kind_ok;
        let what = want_kind.unwrap_or("tolerance miss");
        t.record(&format!("fail case {sub}"), ok, format!("{sub} {what}: exit {code}"));
    }
}

type Criterion = fn(&mut Tally);

fn main() {
    let criteria: [(&str, Criterion); 13] = [
        ("Hilbert involution", hilbert_involution),
        ("Tricomi identity", tricomi),
        ("lambda vs Dawson oracle", lambda_dawson),
        ("metric bridges", metric_bridges),
        ("Frobenius algebra", frobenius_algebra),
        ("intersection-form consistency", intersection),
        ("potential identity", potential_identity),
        ("classical densities", classical_densities),
        ("recursion certificate", recursion),
        ("dynamics", dynamics),
        ("hodograph", hodograph),
        ("coordinates", coordinates),
        ("plumbing", plumbing),
    ];
    // criterion -> failures documented as unattainable
    let known: [(usize, &str); 1] = [(9, "General(f,2) vs Second")];
    let mut unexpected = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let mut t = Tally::default();
        run(&mut t);
        let secs = start.elapsed().as_secs_f64();
        let status = if t.pass() { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {name} ({secs:.1}s): {}", t.parts.join("; "));
        for note in &t.notes {
            println!("             {note}");
        }
        if t.failed.iter().any(|f| !known.contains(&(n, f.as_str()))) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: criteria {unexpected:?}");
        std::process::exit(1);
    }
}
