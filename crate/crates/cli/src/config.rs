//! Run configuration: one JSON object, validated field by field so that every error
//! names the offending path.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dkp_core::evolve::FlowSpec;
use dkp_core::grid::{Axis, InitialSpec, PhaseGrid, Profile};
use dkp_core::hierarchy::{DensitySpec, ScalarFn};
use dkp_core::hodograph::{KSpec, Point, SolverOptions};
use dkp_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeBlock {
    pub t_end: f64,
    pub dt: f64,
    pub monitor_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub directory: Option<PathBuf>,
    /// Keep a snapshot every this many monitors; 0 keeps only the final field.
    pub snapshot_stride: usize,
    /// `x` positions at which moments are reported.
    pub probes: Vec<f64>,
}

/// One-dimensional profile sampled on the `p` axis of the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Zero,
    /// `amplitude exp(-((p - center)/width)^2)`
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Sum(Vec<ProfileSpec>),
    Tabulated(Vec<f64>),
}

impl ProfileSpec {
    fn eval(&self, p: f64) -> f64 {
        match self {
            ProfileSpec::Zero | ProfileSpec::Tabulated(_) => 0.0,
            ProfileSpec::Gaussian { amplitude, center, width } => {
                let u = (p - center) / width;
                amplitude * (-u * u).exp()
            }
            ProfileSpec::Sum(terms) => terms.iter().map(|t| t.eval(p)).sum(),
        }
    }

    pub fn sample(&self, axis: Axis) -> Result<Profile> {
        match self {
            ProfileSpec::Tabulated(v) if v.len() != axis.n => Err(Error::BadConfig(format!(
                "profile.values: {} values for {} nodes",
                v.len(),
                axis.n
            ))),
            ProfileSpec::Tabulated(v) => Ok(Profile::new(axis, v.clone())),
            _ => Ok(Profile::from_fn(axis, |p| self.eval(p))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GuessSpec {
    /// First-order solution of the entropy family.
    FirstOrder { a: f64, eps: f64 },
    Profile(ProfileSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodographBlock {
    pub k: KSpec,
    pub points: Vec<Point>,
    pub guess: GuessSpec,
    pub options: SolverOptions,
    /// Stencil spacing for the flow-invariance check; `None` skips it.
    pub delta: Option<f64>,
}

impl Default for HodographBlock {
    fn default() -> Self {
        HodographBlock {
            k: KSpec::entropy(0.5, 0.2),
            points: vec![Point { x: 0.3, y: 0.1, t: 0.5 }],
            guess: GuessSpec::FirstOrder { a: 0.5, eps: 0.2 },
            options: SolverOptions::default(),
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordsBlock {
    pub window: (f64, f64),
    pub alpha_range: Option<(f64, f64)>,
    pub alpha_nodes: usize,
    pub alpha0: f64,
    pub branch: (f64, f64),
    /// Sample values of `f` for the flat coordinate; empty picks 16 inside `f(branch)`.
    pub mu: Vec<f64>,
}

impl Default for CoordsBlock {
    fn default() -> Self {
        CoordsBlock {
            window: (0.2, 1.5),
            alpha_range: None,
            alpha_nodes: 41,
            alpha0: 0.0,
            branch: (0.1, 3.0),
            mu: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: PhaseGrid,
    pub initial: InitialSpec,
    pub flow: FlowSpec,
    pub time: Option<TimeBlock>,
    /// Tolerance overrides by check name.
    pub checks: BTreeMap<String, f64>,
    pub output: OutputBlock,
    pub densities: Vec<DensitySpec>,
    pub profile: ProfileSpec,
    pub hodograph: HodographBlock,
    pub coords: CoordsBlock,
    /// Snapshot stems examined by `invariants`; empty means the initial field.
    pub snapshots: Vec<PathBuf>,
}

/// Every check any subcommand knows, with its default tolerance.
pub const CHECKS: &[(&str, f64)] = &[
    ("density_drift", 1e-5),
    ("mass_drift", 1e-8),
    ("decay", 1e-10),
    ("density_spread", 1e-5),
    ("recursion", 1e-6),
    ("hilbert_involution", 1e-8),
    ("tricomi", 1e-6),
    ("lambda_derivative", 1e-8),
    ("bridge_eta", 1e-6),
    ("bridge_g", 1e-6),
    ("unity", 1e-5),
    ("commutativity", 1e-5),
    ("associativity", 1e-5),
    ("eta_invariance", 1e-5),
    ("intersection", 1e-6),
    ("potential_identity", 1e-5),
    ("hodograph_residual", 1e-8),
    ("stationarity", 1e-7),
    ("flow_order", 0.25),
    ("chart_stationarity", 1e-8),
    ("envelope", 1e-6),
    ("flat_round_trip", 1e-10),
];

impl RunConfig {
    pub fn tol(&self, name: &str) -> f64 {
        self.checks.get(name).copied().unwrap_or_else(|| {
            CHECKS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| *t)
                .expect("check names are listed in CHECKS")
        })
    }
}

struct Node<'a> {
    v: &'a Value,
    path: String,
}

fn bad(path: &str, msg: &str) -> Error {
    Error::BadConfig(format!("{path}: {msg}"))
}

impl<'a> Node<'a> {
    fn child(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn obj(&self) -> Result<&'a Map<String, Value>> {
        self.v.as_object().ok_or_else(|| bad(&self.path, "must be an object"))
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        for k in self.obj()?.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(bad(&self.child(k), "unknown field"));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Result<Option<Node<'a>>> {
        Ok(self.obj()?.get(key).filter(|v| !v.is_null()).map(|v| Node {
            v,
            path: self.child(key),
        }))
    }

    fn req(&self, key: &str) -> Result<Node<'a>> {
        self.get(key)?.ok_or_else(|| bad(&self.child(key), "required"))
    }

    fn f64(&self) -> Result<f64> {
        self.v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(&self.path, "must be a finite number"))
    }

    fn usize(&self) -> Result<usize> {
        match self.v.as_i64() {
            Some(i) if i < 0 => Err(bad(&self.path, "must be >= 0")),
            Some(i) => Ok(i as usize),
            None => Err(bad(&self.path, "must be an integer")),
        }
    }

    fn str(&self) -> Result<&'a str> {
        self.v.as_str().ok_or_else(|| bad(&self.path, "must be a string"))
    }

    fn arr(&self) -> Result<Vec<Node<'a>>> {
        let a = self.v.as_array().ok_or_else(|| bad(&self.path, "must be an array"))?;
        Ok(a.iter()
            .enumerate()
            .map(|(i, v)| Node {
                v,
                path: format!("{}[{i}]", self.path),
            })
            .collect())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key)?.map_or(Ok(default), |n| n.f64())
    }

    fn pair(&self) -> Result<(f64, f64)> {
        let a = self.arr()?;
        if a.len() != 2 {
            return Err(bad(&self.path, "must be a pair [lo, hi]"));
        }
        Ok((a[0].f64()?, a[1].f64()?))
    }

    fn serde<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.v.clone()).map_err(|e| bad(&self.path, &e.to_string()))
    }
}

fn parse_grid(n: &Node) -> Result<PhaseGrid> {
    n.allow(&["x_min", "x_max", "n_x", "p_min", "p_max", "n_p"])?;
    PhaseGrid::new(
        n.req("x_min")?.f64()?,
        n.req("x_max")?.f64()?,
        n.req("n_x")?.usize()?,
        n.req("p_min")?.f64()?,
        n.req("p_max")?.f64()?,
        n.req("n_p")?.usize()?,
    )
}

fn parse_initial(n: &Node) -> Result<InitialSpec> {
    match n.req("kind")?.str()? {
        "zero" => {
            n.allow(&["kind"])?;
            Ok(InitialSpec::Zero)
        }
        "gaussian" => {
            n.allow(&["kind", "amplitude", "x_width", "p_width", "x_center", "p_center"])?;
            let width = |k: &str| -> Result<f64> {
                let w = n.f64_or(k, 1.0)?;
                if w > 0.0 {
                    Ok(w)
                } else {
                    Err(bad(&n.child(k), "must be positive"))
                }
            };
            Ok(InitialSpec::GaussianProduct {
                amplitude: n.req("amplitude")?.f64()?,
                x_width: width("x_width")?,
                p_width: width("p_width")?,
                x_center: n.f64_or("x_center", 0.0)?,
                p_center: n.f64_or("p_center", 0.0)?,
            })
        }
        "sum" => {
            n.allow(&["kind", "terms"])?;
            Ok(InitialSpec::Sum(
                n.req("terms")?.arr()?.iter().map(parse_initial).collect::<Result<_>>()?,
            ))
        }
        "tabulated" => {
            n.allow(&["kind", "values"])?;
            Ok(InitialSpec::Tabulated(
                n.req("values")?.arr()?.iter().map(|v| v.f64()).collect::<Result<_>>()?,
            ))
        }
        other => Err(bad(&n.child("kind"), &format!("unknown initial kind '{other}'"))),
    }
}

fn parse_profile(n: &Node) -> Result<ProfileSpec> {
    match n.req("kind")?.str()? {
        "zero" => {
            n.allow(&["kind"])?;
            Ok(ProfileSpec::Zero)
        }
        "gaussian" => {
            n.allow(&["kind", "amplitude", "center", "width"])?;
            let width = n.f64_or("width", 1.0)?;
            if width <= 0.0 {
                return Err(bad(&n.child("width"), "must be positive"));
            }
            Ok(ProfileSpec::Gaussian {
                amplitude: n.f64_or("amplitude", 1.0)?,
                center: n.f64_or("center", 0.0)?,
                width,
            })
        }
        "sum" => {
            n.allow(&["kind", "terms"])?;
            Ok(ProfileSpec::Sum(
                n.req("terms")?.arr()?.iter().map(parse_profile).collect::<Result<_>>()?,
            ))
        }
        "tabulated" => {
            n.allow(&["kind", "values"])?;
            Ok(ProfileSpec::Tabulated(
                n.req("values")?.arr()?.iter().map(|v| v.f64()).collect::<Result<_>>()?,
            ))
        }
        other => Err(bad(&n.child("kind"), &format!("unknown profile kind '{other}'"))),
    }
}

fn parse_density(n: &Node) -> Result<DensitySpec> {
    n.allow(&["h", "n"])?;
    let h: ScalarFn = n.req("h")?.serde()?;
    let spec = DensitySpec::new(h, n.req("n")?.usize()?);
    spec.validate(&n.path)?;
    Ok(spec)
}

fn parse_flow(n: &Node) -> Result<FlowSpec> {
    if let Some(s) = n.v.as_str() {
        return match s {
            "benney" => Ok(FlowSpec::Benney),
            "second" => Ok(FlowSpec::Second),
            other => Err(bad(&n.path, &format!("unknown flow '{other}'"))),
        };
    }
    n.allow(&["general"])?;
    Ok(FlowSpec::General(parse_density(&n.req("general")?)?))
}

fn parse_time(n: &Node) -> Result<TimeBlock> {
    n.allow(&["t_end", "dt", "monitor_every"])?;
    let dt = n.req("dt")?.f64()?;
    if dt <= 0.0 {
        return Err(bad(&n.child("dt"), "must be positive"));
    }
    let t_end = n.req("t_end")?.f64()?;
    if t_end < 0.0 {
        return Err(bad(&n.child("t_end"), "must be >= 0"));
    }
    let monitor_every = n.get("monitor_every")?.map_or(Ok(1), |m| m.usize())?;
    if monitor_every == 0 {
        return Err(bad(&n.child("monitor_every"), "must be >= 1"));
    }
    Ok(TimeBlock { t_end, dt, monitor_every })
}

fn parse_checks(n: &Node) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in n.obj()? {
        let path = n.child(k);
        if !CHECKS.iter().any(|(c, _)| c == k) {
            return Err(bad(&path, "unknown check"));
        }
        let tol = Node { v, path: path.clone() }.f64()?;
        if tol <= 0.0 {
            return Err(bad(&path, "tolerance must be positive"));
        }
        out.insert(k.clone(), tol);
    }
    Ok(out)
}

fn parse_output(n: &Node) -> Result<OutputBlock> {
    n.allow(&["directory", "snapshot_stride", "probes"])?;
    Ok(OutputBlock {
        directory: n.get("directory")?.map(|d| d.str().map(PathBuf::from)).transpose()?,
        snapshot_stride: n.get("snapshot_stride")?.map_or(Ok(0), |s| s.usize())?,
        probes: match n.get("probes")? {
            Some(p) => p.arr()?.iter().map(|v| v.f64()).collect::<Result<_>>()?,
            None => vec![0.0],
        },
    })
}

fn parse_hodograph(n: &Node) -> Result<HodographBlock> {
    n.allow(&["k", "points", "guess", "options", "delta"])?;
    let mut b = HodographBlock::default();
    if let Some(k) = n.get("k")? {
        b.k = k.serde()?;
        b.k.validate(&k.path)?;
    }
    if let Some(p) = n.get("points")? {
        b.points = p
            .arr()?
            .iter()
            .map(|q| {
                q.allow(&["x", "y", "t"])?;
                Ok(Point {
                    x: q.f64_or("x", 0.0)?,
                    y: q.f64_or("y", 0.0)?,
                    t: q.f64_or("t", 0.0)?,
                })
            })
            .collect::<Result<_>>()?;
        if b.points.is_empty() {
            return Err(bad(&p.path, "must not be empty"));
        }
    }
    if let Some(g) = n.get("guess")? {
        b.guess = if g.req("kind")?.str()? == "first_order" {
            g.allow(&["kind", "a", "eps"])?;
            GuessSpec::FirstOrder {
                a: g.req("a")?.f64()?,
                eps: g.f64_or("eps", 0.0)?,
            }
        } else {
            GuessSpec::Profile(parse_profile(&g)?)
        };
    }
    if let Some(o) = n.get("options")? {
        b.options = o.serde()?;
        b.options.validate(&o.path)?;
    }
    if let Some(d) = n.get("delta")? {
        let v = d.f64()?;
        if v <= 0.0 {
            return Err(bad(&d.path, "must be positive"));
        }
        b.delta = Some(v);
    }
    Ok(b)
}

fn parse_coords(n: &Node) -> Result<CoordsBlock> {
    n.allow(&["window", "alpha_range", "alpha_nodes", "alpha0", "branch", "mu"])?;
    let mut b = CoordsBlock::default();
    if let Some(w) = n.get("window")? {
        b.window = w.pair()?;
    }
    if let Some(a) = n.get("alpha_range")? {
        b.alpha_range = Some(a.pair()?);
    }
    if let Some(a) = n.get("alpha_nodes")? {
        b.alpha_nodes = a.usize()?;
        if b.alpha_nodes < 2 {
            return Err(bad(&a.path, "must be >= 2"));
        }
    }
    b.alpha0 = n.f64_or("alpha0", 0.0)?;
    if let Some(br) = n.get("branch")? {
        b.branch = br.pair()?;
    }
    if let Some(m) = n.get("mu")? {
        b.mu = m.arr()?.iter().map(|v| v.f64()).collect::<Result<_>>()?;
    }
    Ok(b)
}

/// Parses and validates a configuration. Only `grid` is required; every other block
/// has the defaults used by the acceptance suite.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::BadConfig(format!("config: {e}")))?;
    let root = Node {
        v: &value,
        path: String::new(),
    };
    root.obj().map_err(|_| Error::BadConfig("config: must be a JSON object".into()))?;
    root.allow(&[
        "grid",
        "initial",
        "flow",
        "time",
        "checks",
        "output",
        "densities",
        "profile",
        "hodograph",
        "coords",
        "snapshots",
    ])?;
    let grid = parse_grid(&root.req("grid")?)?;
    Ok(RunConfig {
        grid,
        initial: root.get("initial")?.map_or(Ok(InitialSpec::reference()), |n| parse_initial(&n))?,
        flow: root.get("flow")?.map_or(Ok(FlowSpec::Benney), |n| parse_flow(&n))?,
        time: root.get("time")?.map(|n| parse_time(&n)).transpose()?,
        checks: root.get("checks")?.map_or(Ok(BTreeMap::new()), |n| parse_checks(&n))?,
        output: root.get("output")?.map_or(
            Ok(OutputBlock {
                directory: None,
                snapshot_stride: 0,
                probes: vec![0.0],
            }),
            |n| parse_output(&n),
        )?,
        densities: match root.get("densities")? {
            Some(n) => n.arr()?.iter().map(parse_density).collect::<Result<_>>()?,
            None => (0..4).map(|n| DensitySpec::power(1, n)).collect(),
        },
        profile: root.get("profile")?.map_or(
            Ok(ProfileSpec::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                width: 1.0,
            }),
            |n| parse_profile(&n),
        )?,
        hodograph: root.get("hodograph")?.map_or(Ok(HodographBlock::default()), |n| parse_hodograph(&n))?,
        coords: root.get("coords")?.map_or(Ok(CoordsBlock::default()), |n| parse_coords(&n))?,
        snapshots: match root.get("snapshots")? {
            Some(n) => n.arr()?.iter().map(|s| s.str().map(PathBuf::from)).collect::<Result<_>>()?,
            None => Vec::new(),
        },
    })
}
