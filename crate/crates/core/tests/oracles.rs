mod common;

use std::f64::consts::PI;

use common::*;
use dkp_core::coords::{canonical_chart, flat_coordinate, slope_function, ChartOptions};
use dkp_core::frobenius::{potential, potential_identity_residual};
use dkp_core::grid::{Axis, Profile};
use dkp_core::hierarchy::{density, var_derivative, DensitySpec};
use dkp_core::moments::moments;
use dkp_core::singular::{hilbert, lambda_of, pv_integral, tricomi_residual};

fn axis(n: usize) -> Axis {
    Axis::new(-12.0, 12.0, n, "p").unwrap()
}

/// `a exp(-(p - c)^2 / w)`
fn family() -> Vec<(f64, f64, f64)> {
    vec![(1.0, 0.0, 1.0), (-0.5, 0.3, 1.0), (0.8, -0.7, 0.5), (0.3, 0.4, 2.0)]
}

fn gauss(a: f64, c: f64, w: f64) -> impl Fn(f64) -> f64 + Copy {
    move |p: f64| a * (-(p - c) * (p - c) / w).exp()
}

#[test]
fn oracle_self_checks() {
    // tabulated D(1), D(2.5)
    assert!((dawson(1.0) - 0.538_079_506_912_768_4).abs() < 1e-14);
    assert!((dawson(2.5) - 0.223_083_722_167_435_5).abs() < 1e-13);
    assert!((dawson(-1.0) + dawson(1.0)).abs() < 1e-15);
    // E ln|Z| for a standard normal: -(gamma + ln 2) / 2
    let gamma = 0.577_215_664_901_532_9;
    let exact = -PI * (gamma + 2f64.ln()) / 4.0 + PI.sqrt() / 4.0;
    let got = potential_oracle(gauss(1.0, 0.0, 1.0), 12.0);
    assert!(rel(got, exact) < 1e-10, "{got} vs {exact}");
    let pv = pv_midpoint(gauss(1.0, 0.0, 1.0), 0.7, 0.01, 12.0);
    assert!((pv - 2.0 * PI.sqrt() * dawson(0.7)).abs() < 1e-12);
}

#[test]
fn lambda_matches_dawson() {
    let ax = axis(256);
    let l = lambda_of(&Profile::from_fn(ax, |p| (-p * p).exp())).unwrap();
    let err = ax
        .nodes()
        .iter()
        .zip(l.values())
        .map(|(&p, &v)| (v - (p + 2.0 * PI.sqrt() * dawson(p))).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-7, "{err:e}");
}

#[test]
fn principal_value_matches_midpoint_oracle() {
    let ax = axis(256);
    for (a, c, w) in family() {
        let g = gauss(a, c, w);
        let pv = pv_integral(&Profile::from_fn(ax, g)).unwrap();
        for j in (0..256).step_by(7) {
            let p = ax.node(j);
            let o = pv_midpoint(g, p, 0.005, 40.0);
            assert!((pv.values[j] - o).abs() <= 1e-9 * a.abs(), "{a} {c} {w} at {p}: {} vs {o}", pv.values[j]);
        }
    }
    // a non-Gaussian profile
    let s = |p: f64| 1.0 / (p * 1.7).cosh().powi(2);
    let pv = pv_integral(&Profile::from_fn(ax, s)).unwrap();
    for j in (0..256).step_by(11) {
        let o = pv_midpoint(s, ax.node(j), 0.005, 40.0);
        assert!((pv.values[j] - o).abs() <= 1e-9, "{}", pv.values[j] - o);
    }
}

#[test]
fn hilbert_involution_and_tricomi_on_family() {
    let ax = axis(256);
    for (a, c, w) in family() {
        let f = Profile::from_fn(ax, gauss(a, c, w));
        let hh = hilbert(&hilbert(&f).unwrap()).unwrap();
        let r = hh.zip_with(&f, |x, y| x + y).l2() / f.l2();
        assert!(r <= 1e-8, "{r:e}");
        let g = Profile::from_fn(ax, gauss(0.6, -c, 1.3));
        let t = tricomi_residual(&f, &g).unwrap();
        assert!(t <= 1e-6, "{t:e}");
    }
}

#[test]
fn potential_matches_two_dimensional_oracle() {
    let ax = axis(256);
    for (a, c, w) in family() {
        let g = gauss(a, c, w);
        let got = potential(&Profile::from_fn(ax, g)).unwrap();
        let want = potential_oracle(g, 12.0);
        assert!(rel(got, want) <= 1e-6, "{a} {c} {w}: {got} vs {want}");
    }
}

#[test]
fn potential_identity_refines_at_fourth_order() {
    let g = gauss(-0.5, 0.3, 1.0);
    let r = |n: usize| {
        let f = Profile::from_fn(axis(n), g);
        potential_identity_residual(&f, &lambda_of(&f).unwrap()).unwrap()
    };
    let (coarse, fine) = (r(128), r(256));
    assert!(fine <= 1e-5, "{fine:e}");
    assert!(coarse / fine >= 16.0 || fine <= 1e-12, "{coarse:e} -> {fine:e}");
}

#[test]
fn classical_densities() {
    let ax = axis(256);
    for (a, c, w) in family() {
        let f = Profile::from_fn(ax, gauss(a, c, w));
        let l = lambda_of(&f).unwrap();
        let m = moments(&f, 2).unwrap().values;
        let h1 = density(&f, &l, &DensitySpec::power(1, 1)).unwrap();
        assert!((h1 - m[1]).abs() <= 1e-8, "{h1} vs {}", m[1]);
        let h2 = density(&f, &l, &DensitySpec::power(1, 2)).unwrap();
        let cube: f64 = f.values.iter().map(|v| v.powi(3)).sum::<f64>() * f.spacing();
        let want = 0.5 * m[2] + 0.5 * m[0] * m[0] + PI * PI / 6.0 * cube;
        assert!(rel(h2, want) <= 1e-6, "{h2} vs {want}");
    }
}

#[test]
fn variational_derivative_matches_finite_differences() {
    let ax = axis(128);
    let f = Profile::from_fn(ax, gauss(0.7, 0.2, 1.0));
    let nodes = ax.nodes();
    let dirs: Vec<Vec<f64>> = vec![
        nodes.iter().map(|&p| gauss(1.0, -0.5, 0.7)(p)).collect(),
        nodes.iter().map(|&p| p * (-p * p).exp()).collect(),
    ];
    for spec in [DensitySpec::power(1, 2), DensitySpec::power(2, 1), DensitySpec::power(3, 0), DensitySpec::power(1, 3)] {
        let d = var_derivative(&f, &lambda_of(&f).unwrap(), &spec).unwrap();
        for v in &dirs {
            let functional = |vals: &[f64]| {
                let g = Profile::new(ax, vals.to_vec());
                density(&g, &lambda_of(&g).unwrap(), &spec).unwrap()
            };
            let fd = directional(functional, &f.values, v, 1e-4);
            let pairing: f64 = d.values.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * ax.spacing();
            assert!((fd - pairing).abs() <= 1e-7 * fd.abs().max(1.0), "{spec:?}: {fd} vs {pairing}");
        }
    }
}

#[test]
fn slope_at_one_matches_dawson_composition() {
    let ax = axis(256);
    let f = Profile::from_fn(ax, |p| (-p * p).exp());
    let s = slope_function(&f, &lambda_of(&f).unwrap()).unwrap();
    let nodes = ax.nodes();
    let j = nodes.iter().enumerate().min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs())).unwrap().0;
    let p = nodes[j];
    // lambda' = 1 + 2 sqrt(pi) D'(p), D' = 1 - 2 p D
    let lp = 1.0 + 2.0 * PI.sqrt() * (1.0 - 2.0 * p * dawson(p));
    let want = lp / (PI * -2.0 * p * (-p * p).exp());
    assert!((s.values[j].unwrap() - want).abs() <= 1e-9 * want.abs());
}

#[test]
fn chart_and_flat_coordinate_on_gaussian() {
    let f = Profile::from_fn(axis(256), |p| (-p * p).exp());
    let c = canonical_chart(&f, &ChartOptions::default()).unwrap();
    assert!(c.max_residual() <= 1e-8);
    assert!(c.envelope_residual() <= 1e-6, "{:e}", c.envelope_residual());
    let mu: Vec<f64> = (1..20).map(|k| (-(0.1 + 0.15 * k as f64).powi(2)).exp()).collect();
    let fc = flat_coordinate(&f, (0.1, 3.0), &mu).unwrap();
    for (w, m) in fc.w.iter().zip(&mu) {
        assert!((w - (-m.ln()).sqrt()).abs() <= 1e-10);
    }
}
