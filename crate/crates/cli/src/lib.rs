//! Command-line front end: argument parsing, dispatch and artifact output.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod params;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use gapmaps_core::atlas::{
    self, CanonicalFamily, DiagramConfig, InitialCondition, MapFamily, StsFamily, TongueSetOptions, Window,
};
use gapmaps_core::canonical::CanonicalParams;
use gapmaps_core::cherry::{self, CherryParams, IntegrationOptions};
use gapmaps_core::sts::{self, StsParams};
use gapmaps_core::Lift;

pub use dataset::{read_dataset, write_dataset, Cell, Dataset};
pub use params::{ParamSpec, WindowSpec};

pub const SEED_GRID_ENV: &str = "GAPMAPS_SEED_GRID";

#[derive(Parser, Debug, Serialize)]
#[command(name = "gapmaps", version, about = "Circle maps with gaps: rotation numbers, tongues, diagrams and torus flows")]
pub struct Cli {
    /// Output directory for CSV, JSON and SVG files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Relative integration tolerance for the torus-flow commands.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Also write an SVG plot.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Evaluate the lift and its derivative on a grid of x.
    MapEval {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "0:1:0.01")]
        x: ParamSpec,
    },
    /// Rotation number, optionally over a range of one parameter.
    Rotnum {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 10_000)]
        iterations: u64,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
    },
    /// Periodic orbits of type (p, q).
    Orbit {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: u32,
    },
    /// Saddle-node and border-collision points of the tongues in a window.
    Tongues {
        #[command(flatten)]
        family: FamilyArgs,
        /// For example `beta=0:1.4,alpha=0:1.5`.
        #[arg(long)]
        window: WindowSpec,
        #[arg(long, default_value_t = 2)]
        q_max: u32,
        #[arg(long, default_value_t = 8)]
        levels: usize,
    },
    /// Orbit samples after a transient over a one-parameter sweep.
    Diagram {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1000)]
        transient: u64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        x0: f64,
        /// Start each parameter from the final state of the previous one.
        #[arg(long)]
        follow: bool,
    },
    /// Edges of the multi-gap wedge of the threshold system.
    StsWedge {
        #[arg(long, default_value = "1.3")]
        alpha: ParamSpec,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
    },
    /// Crossing of the type I (1,1) and type II (2,1) border collisions.
    StsCodim2 {
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 6.0)]
        alpha_max: f64,
    },
    /// Return map of the torus flow on the section x = 0.
    CherryReturn {
        #[command(flatten)]
        base: CherryArgs,
        #[arg(long, default_value_t = 1.0 / 70.0, allow_negative_numbers = true)]
        mu: f64,
    },
    /// Slope growth, gap widths and edge exponents over a list of mu.
    CherryScaling {
        #[command(flatten)]
        base: CherryArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
              default_values_t = vec![1.0 / 40.0, 1.0 / 70.0, 1.0 / 120.0, -1.0 / 70.0, -1.0 / 200.0, -1.0 / 1000.0])]
        mu: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MapEval { .. } => "map-eval",
            Command::Rotnum { .. } => "rotnum",
            Command::Orbit { .. } => "orbit",
            Command::Tongues { .. } => "tongues",
            Command::Diagram { .. } => "diagram",
            Command::StsWedge { .. } => "sts-wedge",
            Command::StsCodim2 { .. } => "sts-codim2",
            Command::CherryReturn { .. } => "cherry-return",
            Command::CherryScaling { .. } => "cherry-scaling",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    /// Sinusoidal threshold system (alpha, beta, gamma).
    Sts,
    /// Canonical square-root family F_n (n, a, b, c).
    Canonical,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value = "sts")]
    pub family: FamilyKind,
    #[arg(long, default_value = "0.5")]
    pub gamma: ParamSpec,
    #[arg(long, default_value = "0.6")]
    pub alpha: ParamSpec,
    #[arg(long, default_value = "0.2")]
    pub beta: ParamSpec,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value = "0.1", allow_negative_numbers = true)]
    pub a: ParamSpec,
    #[arg(long, default_value = "0.7")]
    pub b: ParamSpec,
    #[arg(long, default_value = "0.2")]
    pub c: ParamSpec,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct CherryArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long = "a", default_value_t = 45.0)]
    pub a: f64,
    #[arg(long = "b", default_value_t = 0.66 * 0.375)]
    pub b: f64,
    #[arg(long = "c", default_value_t = 0.25)]
    pub c: f64,
}

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; exit status 1.
    Config(String),
    /// Failure inside a computation; exit status 2.
    Numerical(gapmaps_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Config(m) => json!({"error": "config", "message": m}),
            CliError::Numerical(e) => json!({"error": "numerical", "kind": format!("{e:?}"), "message": e.to_string()}),
            CliError::Io(e) => json!({"error": "io", "message": e.to_string()}),
        }
    }
}

impl From<gapmaps_core::Error> for CliError {
    fn from(e: gapmaps_core::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn config<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

/// Datasets and summary produced by one command.
pub struct Output {
    pub datasets: Vec<(String, Dataset)>,
    pub summary: Value,
    pub plot: Option<String>,
}

/// Grid override from the environment, if set.
pub fn seed_grid(default: usize) -> Result<usize, CliError> {
    match std::env::var(SEED_GRID_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 2 => Ok(n),
            _ => Err(CliError::Config(format!("{SEED_GRID_ENV} must be an integer >= 2, got '{s}'"))),
        },
        Err(_) => Ok(default),
    }
}

impl FamilyArgs {
    /// Parameter names of the family in constructor order.
    fn named(&self) -> Vec<(&'static str, ParamSpec)> {
        match self.family {
            FamilyKind::Sts => vec![("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)],
            FamilyKind::Canonical => vec![("a", self.a), ("b", self.b), ("c", self.c)],
        }
    }

    fn lift_at(&self, v: [f64; 3]) -> Result<Lift, CliError> {
        match self.family {
            FamilyKind::Sts => Ok(config(StsParams::new(v[0], v[1], v[2]))?.lift()),
            FamilyKind::Canonical => Ok(config(CanonicalParams::new(self.n, v[0], v[1], v[2]))?.lift()),
        }
    }

    fn scalars(&self) -> Result<[f64; 3], CliError> {
        let named = self.named();
        let mut v = [0.0; 3];
        for (i, (name, spec)) in named.iter().enumerate() {
            v[i] = config(spec.scalar(name))?;
        }
        Ok(v)
    }

    fn single_lift(&self) -> Result<Lift, CliError> {
        self.lift_at(self.scalars()?)
    }

    /// The one ranged parameter (index, name, values) and the lifts along it,
    /// all validated up front.
    fn sweep(&self) -> Result<(&'static str, Vec<f64>, Vec<Lift>), CliError> {
        let named = self.named();
        let ranged: Vec<usize> = (0..3).filter(|&i| named[i].1.is_range()).collect();
        let idx = match ranged.as_slice() {
            [] => 0,
            [i] => *i,
            _ => return Err(CliError::Config("at most one parameter may be a range".into())),
        };
        let values = config(named[idx].1.values())?;
        let mut base = [0.0; 3];
        for (i, (name, spec)) in named.iter().enumerate() {
            if i != idx {
                base[i] = config(spec.scalar(name))?;
            }
        }
        let lifts = values
            .iter()
            .map(|&v| {
                let mut p = base;
                p[idx] = v;
                self.lift_at(p)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((named[idx].0, values, lifts))
    }

    fn plane_family(&self) -> Result<Box<dyn MapFamily>, CliError> {
        match self.family {
            FamilyKind::Sts => {
                let gamma = config(self.gamma.scalar("gamma"))?;
                if !(gamma > 0.0) {
                    return Err(CliError::Config("gamma must be positive".into()));
                }
                Ok(Box::new(StsFamily { gamma }))
            }
            FamilyKind::Canonical => {
                let b = config(self.b.scalar("b"))?;
                config(CanonicalParams::new(self.n, 0.0, b, 0.0))?;
                Ok(Box::new(CanonicalFamily { n: self.n, b }))
            }
        }
    }

    /// Plane parameter specs in the order used by the plane family.
    fn plane_specs(&self) -> [(&'static str, ParamSpec); 2] {
        match self.family {
            FamilyKind::Sts => [("beta", self.beta), ("alpha", self.alpha)],
            FamilyKind::Canonical => [("a", self.a), ("c", self.c)],
        }
    }
}

fn cherry_params(base: &CherryArgs, mu: f64) -> Result<CherryParams, CliError> {
    config(CherryParams::new(base.lambda, base.a, base.b, base.c, mu))
}

fn f(v: f64) -> Cell {
    Cell::Float(v)
}

fn map_eval(family: &FamilyArgs, x: &ParamSpec) -> Result<Output, CliError> {
    let lift = family.single_lift()?;
    let xs = config(x.values())?;
    let mut d = Dataset::new(&["x", "f", "df"]);
    let rows: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let fx = lift.eval(x).unwrap_or(f64::NAN);
            let dfx = lift.eval_derivative(x).unwrap_or(f64::NAN);
            (x, fx, dfx)
        })
        .collect();
    for (x, fx, dfx) in &rows {
        d.push(vec![f(*x), f(*fx), f(*dfx)]);
    }
    let pts = rows.iter().map(|r| (r.0, r.1, 0)).collect::<Vec<_>>();
    Ok(Output {
        datasets: vec![("map-eval".into(), d)],
        summary: json!({"points": rows.len()}),
        plot: Some(svg::scatter(&pts, "x", "F(x)")),
    })
}

fn rotnum(family: &FamilyArgs, iterations: u64, x0: f64) -> Result<Output, CliError> {
    if iterations == 0 {
        return Err(CliError::Config("iterations must be positive".into()));
    }
    let (name, values, lifts) = family.sweep()?;
    let est = lifts.par_iter().map(|l| l.rotation_number(x0, iterations)).collect::<Result<Vec<_>, _>>()?;
    let mut d = Dataset::new(&[name, "rho", "error_bound", "non_monotone"]);
    for (v, e) in values.iter().zip(&est) {
        d.push(vec![f(*v), f(e.value), f(e.error_bound), Cell::Int(e.non_monotone as i64)]);
    }
    let monotone = est.windows(2).all(|w| w[1].value >= w[0].value - w[0].error_bound - w[1].error_bound);
    let pts = values.iter().zip(&est).map(|(v, e)| (*v, e.value, 0)).collect::<Vec<_>>();
    Ok(Output {
        datasets: vec![("rotnum".into(), d)],
        summary: json!({"parameter": name, "points": values.len(), "non_decreasing": monotone}),
        plot: Some(svg::scatter(&pts, name, "rotation number")),
    })
}

fn orbit(family: &FamilyArgs, p: i64, q: u32) -> Result<Output, CliError> {
    if q == 0 {
        return Err(CliError::Config("q must be positive".into()));
    }
    let lift = family.single_lift()?;
    let grid = seed_grid(gapmaps_core::lift::DEFAULT_GRID)?;
    let orbits = lift.find_periodic_orbits_on(p, q, grid)?;
    let mut d = Dataset::new(&["orbit", "point", "x", "p", "q", "multiplier"]);
    for (i, o) in orbits.iter().enumerate() {
        for (j, x) in o.points.iter().enumerate() {
            d.push(vec![Cell::Int(i as i64), Cell::Int(j as i64), f(*x), Cell::Int(o.p), Cell::from(o.q), f(o.multiplier)]);
        }
    }
    Ok(Output {
        datasets: vec![("orbit".into(), d)],
        summary: json!({"orbits": orbits.len(), "multipliers": orbits.iter().map(|o| o.multiplier.to_string()).collect::<Vec<_>>()}),
        plot: None,
    })
}

fn tongues(family: &FamilyArgs, window: &WindowSpec, q_max: u32, levels: usize) -> Result<Output, CliError> {
    let fam = family.plane_family()?;
    let names = fam.param_names();
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for i in 0..2 {
        let (a, b) = window
            .bounds(names[i])
            .ok_or_else(|| CliError::Config(format!("window must give bounds for {} and {}", names[0], names[1])))?;
        lo[i] = a;
        hi[i] = b;
    }
    if levels == 0 || q_max == 0 {
        return Err(CliError::Config("levels and q-max must be positive".into()));
    }
    let opts = TongueSetOptions { levels, samples: seed_grid(120)?, q_max };
    let pts = atlas::tongue_set(fam.as_ref(), &Window::new(lo, hi), &opts)?;
    let mut d = Dataset::new(&["p1", "p2", "x", "p", "q", "kind"]);
    for t in &pts {
        d.push(vec![f(t.params[0]), f(t.params[1]), f(t.x), Cell::Int(t.p), Cell::from(t.q), Cell::from(t.kind.label())]);
    }
    let plot_pts = pts.iter().map(|t| (t.params[0], t.params[1], t.kind as usize)).collect::<Vec<_>>();
    Ok(Output {
        datasets: vec![("tongues".into(), d)],
        summary: json!({"points": pts.len(), "p1": names[0], "p2": names[1], "options": opts}),
        plot: Some(svg::scatter(&plot_pts, names[0], names[1])),
    })
}

fn diagram(family: &FamilyArgs, transient: u64, samples: usize, x0: f64, follow: bool) -> Result<Output, CliError> {
    let fam = family.plane_family()?;
    let specs = family.plane_specs();
    let idx = match (specs[0].1.is_range(), specs[1].1.is_range()) {
        (true, false) => 0,
        (false, true) => 1,
        _ => {
            return Err(CliError::Config(format!(
                "diagram needs exactly one of --{} and --{} as a range",
                specs[0].0, specs[1].0
            )))
        }
    };
    let ParamSpec::Range { lo, hi, step } = specs[idx].1 else { unreachable!() };
    let fixed_value = config(specs[1 - idx].1.scalar(specs[1 - idx].0))?;
    let cfg = DiagramConfig {
        sweep_index: idx,
        fixed_value,
        lo,
        hi,
        step,
        transient,
        samples,
        initial: if follow { InitialCondition::Continue(x0) } else { InitialCondition::Fixed(x0) },
    };
    config(cfg.validate())?;
    for v in cfg.values() {
        let mut p = [fixed_value; 2];
        p[idx] = v;
        config(fam.lift(p))?;
    }
    let rows = atlas::sweep_bifurcation_diagram(fam.as_ref(), &cfg)?;
    let mut d = Dataset::new(&[specs[idx].0, "x"]);
    let mut pts = Vec::new();
    for r in &rows {
        for &x in &r.samples {
            d.push(vec![f(r.param), f(x)]);
            pts.push((r.param, x, 0));
        }
    }
    let holes: Vec<f64> = rows.iter().map(|r| atlas::max_hole(&r.samples)).collect();
    Ok(Output {
        datasets: vec![("diagram".into(), d)],
        summary: json!({"parameters": rows.len(), "max_hole": holes}),
        plot: Some(svg::scatter(&pts, specs[idx].0, "x")),
    })
}

fn sts_wedge(alpha: &ParamSpec, gamma: f64) -> Result<Output, CliError> {
    let alphas = config(alpha.values())?;
    for &a in &alphas {
        config(StsParams::new(a, 0.3, gamma))?;
    }
    let wedges = alphas.par_iter().map(|&a| sts::wedge_boundaries_near(a, gamma, None)).collect::<Result<Vec<_>, _>>()?;
    let mut d = Dataset::new(&["alpha", "gamma", "beta_left", "beta_right", "x_left", "x_right"]);
    for w in &wedges {
        d.push(vec![f(w.alpha), f(w.gamma), f(w.left.beta), f(w.right.beta), f(w.left.x_turn), f(w.right.x_turn)]);
    }
    Ok(Output { datasets: vec![("sts-wedge".into(), d)], summary: json!({"rows": wedges.len()}), plot: None })
}

fn sts_codim2(gamma: f64, alpha_max: f64) -> Result<Output, CliError> {
    if !(gamma > 0.0) || !(alpha_max > gamma) {
        return Err(CliError::Config("need gamma > 0 and alpha-max > gamma".into()));
    }
    let c = sts::codim2_locate_in(gamma, alpha_max)?;
    let res = c.residuals();
    let mut d = Dataset::new(&["alpha", "beta", "gamma", "c0", "c1", "x0", "slope_product"]);
    d.push(vec![f(c.alpha), f(c.beta), f(c.gamma), f(c.c0), f(c.c1), f(c.x0), f(c.slope_product())]);
    Ok(Output {
        datasets: vec![("sts-codim2".into(), d)],
        summary: json!({"residuals": res, "max_residual": res.iter().fold(0.0f64, |a, b| a.max(b.abs()))}),
        plot: None,
    })
}

fn cherry_return(base: &CherryArgs, mu: f64, tol: Option<f64>) -> Result<Output, CliError> {
    let p = cherry_params(base, mu)?;
    let mut opts = IntegrationOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1e-2) {
            return Err(CliError::Config("tol must lie in (0, 1e-2)".into()));
        }
        opts.rtol = t;
    }
    let n = seed_grid(2000)?;
    let ys: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let map = cherry::build_return_map_with(&p, &ys, &opts)?;
    let ids = map.branch_ids();
    let mut d = Dataset::new(&["y_n", "y_{n+1}", "branch_id"]);
    let mut pts = Vec::new();
    for (e, id) in map.entries.iter().zip(&ids) {
        d.push(vec![f(e.0), f(e.1), Cell::from(*id)]);
        pts.push((e.0, e.1, *id as usize));
    }
    Ok(Output {
        datasets: vec![("cherry-return".into(), d)],
        summary: json!({
            "params": p,
            "gap": map.gap,
            "max_slope": map.max_slope,
            "max_slope_at": map.max_slope_at,
            "captured": map.captured,
            "k_epsilon": map.k_epsilon,
        }),
        plot: Some(svg::scatter(&pts, "y_n", "y_{n+1}")),
    })
}

fn cherry_scaling(base: &CherryArgs, mus: &[f64]) -> Result<Output, CliError> {
    if mus.is_empty() {
        return Err(CliError::Config("need at least one mu".into()));
    }
    for &mu in mus {
        if mu == 0.0 {
            return Err(CliError::Config("mu = 0 is excluded".into()));
        }
        cherry_params(base, mu)?;
    }
    let p = cherry_params(base, mus[0])?;
    let r = cherry::scaling_analysis_on(&p, mus, seed_grid(2000)?)?;
    let mut slopes = Dataset::new(&["mu", "max_slope", "normalized"]);
    for s in &r.slopes {
        slopes.push(vec![f(s.mu), f(s.max_slope), f(s.normalized)]);
    }
    let mut gaps = Dataset::new(&["mu", "lower", "upper", "width"]);
    for g in &r.gaps {
        gaps.push(vec![f(g.mu), f(g.lower), f(g.upper), f(g.width)]);
    }
    let mut exps = Dataset::new(&["mu", "lower_edge", "upper_edge", "predicted"]);
    for e in &r.exponents {
        exps.push(vec![f(e.mu), f(e.lower_edge), f(e.upper_edge), f(e.predicted)]);
    }
    Ok(Output {
        datasets: vec![
            ("cherry-scaling-slopes".into(), slopes),
            ("cherry-scaling-gaps".into(), gaps),
            ("cherry-scaling-exponents".into(), exps),
        ],
        summary: json!({
            "kappa": r.kappa,
            "kappa_intercept": r.kappa_intercept,
            "kappa_over_lambda_pi": r.kappa_normalized,
            "gap_limit": r.gap_limit,
            "k_epsilon": r.k_epsilon,
        }),
        plot: None,
    })
}

/// Runs one command and returns its outputs without touching the disk.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::MapEval { family, x } => map_eval(family, x),
        Command::Rotnum { family, iterations, x0 } => rotnum(family, *iterations, *x0),
        Command::Orbit { family, p, q } => orbit(family, *p, *q),
        Command::Tongues { family, window, q_max, levels } => tongues(family, window, *q_max, *levels),
        Command::Diagram { family, transient, samples, x0, follow } => diagram(family, *transient, *samples, *x0, *follow),
        Command::StsWedge { alpha, gamma } => sts_wedge(alpha, *gamma),
        Command::StsCodim2 { gamma, alpha_max } => sts_codim2(*gamma, *alpha_max),
        Command::CherryReturn { base, mu } => cherry_return(base, *mu, cli.tol),
        Command::CherryScaling { base, mu } => cherry_scaling(base, mu),
    }
}

fn write_outputs(cli: &Cli, out: &Output, started: &str, elapsed: f64) -> Result<Vec<PathBuf>, CliError> {
    let dir: &Path = &cli.out;
    let mut written = Vec::new();
    for (stem, d) in &out.datasets {
        let path = dir.join(format!("{stem}.csv"));
        write_dataset(d, &path)?;
        written.push(path);
    }
    if cli.plot {
        if let Some(s) = &out.plot {
            let path = dir.join(format!("{}.svg", cli.command.name()));
            dataset::write_text(&path, s)?;
            written.push(path);
        }
    }
    let meta = json!({
        "config": cli,
        "version": env!("CARGO_PKG_VERSION"),
        "started": started,
        "elapsed_s": elapsed,
        "summary": out.summary,
    });
    let path = dir.join(format!("{}.json", cli.command.name()));
    dataset::write_text(&path, &serde_json::to_string_pretty(&meta).expect("metadata serializes"))?;
    written.push(path);
    Ok(written)
}

/// Runs the command and writes its artifacts; returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let started = chrono::Utc::now().to_rfc3339();
    let t0 = Instant::now();
    let result = (|| {
        if let Some(t) = cli.tol {
            if !(t > 0.0) {
                return Err(CliError::Config("tol must be positive".into()));
            }
        }
        std::fs::create_dir_all(&cli.out)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cli.out.display())))?;
        let out = match cli.jobs {
            Some(0) => return Err(CliError::Config("jobs must be positive".into())),
            Some(n) => {
                let pool = config(rayon::ThreadPoolBuilder::new().num_threads(n).build())?;
                pool.install(|| execute(cli))?
            }
            None => execute(cli)?,
        };
        write_outputs(cli, &out, &started, t0.elapsed().as_secs_f64())
    })();
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Parses arguments and runs; usage errors exit with status 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
