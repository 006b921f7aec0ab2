//! Flat `key = value` scenario configuration.
//!
//! One pair per line, `#` starts a comment, lists are comma separated and
//! numbers may be written as fractions (`1/4`). Parsing collects every problem
//! instead of stopping at the first one.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::kinetic::{ModelParams, ProbLaw, VelocityGrid};
use crate::solver::{Boundary, EpsilonModel, FluxKind, Mesh1D, OvershootPolicy};
use crate::stability::PressureFn;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    FundamentalDiagram,
    DiffusionProfile,
    Bump,
    Riemann,
    Stopgo,
    MicroCompare,
    WspaceBump,
}

impl Scenario {
    const NAMES: [(&'static str, Scenario); 7] = [
        ("fundamental_diagram", Scenario::FundamentalDiagram),
        ("diffusion_profile", Scenario::DiffusionProfile),
        ("bump", Scenario::Bump),
        ("riemann", Scenario::Riemann),
        ("stopgo", Scenario::Stopgo),
        ("micro_compare", Scenario::MicroCompare),
        ("wspace_bump", Scenario::WspaceBump),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, s)| *s == self).map(|(n, _)| *n).unwrap_or("?")
    }

    /// Table-only scenarios: no mesh, no time integration.
    pub fn is_static(self) -> bool {
        matches!(self, Scenario::FundamentalDiagram | Scenario::DiffusionProfile)
    }

    fn uses_bump(self) -> bool {
        matches!(self, Scenario::Bump | Scenario::Stopgo | Scenario::MicroCompare | Scenario::WspaceBump)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Boltzmann,
    Bgk,
    ModifiedBgk,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Boltzmann => "boltzmann",
            Model::Bgk => "bgk",
            Model::ModifiedBgk => "modified_bgk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicroUeq {
    /// Mean speed of the kinetic Maxwellian table.
    Table,
    /// `U = 1 - rho`
    Greenshields,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicroInteraction {
    PressureChain,
    Classical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroConfig {
    pub n_vehicles: usize,
    pub interaction: MicroInteraction,
    pub u_eq: MicroUeq,
    pub seed: u64,
}

/// One problem found while parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// A resolved key with its value as echoed in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub defaulted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub model: Model,
    pub n_speeds: usize,
    pub delta_a: f64,
    /// One braking jump per table to build (several for `r = 1, 2, ...`).
    pub delta_b: Vec<f64>,
    /// Ratios `delta_a / delta_b` when given as `r`.
    pub r: Option<Vec<usize>>,
    pub jump_rounding: bool,
    pub prob_law: ProbLaw,
    pub n_rho: usize,
    pub mesh: Option<Mesh1D>,
    pub eps: EpsilonModel,
    pub cfl: f64,
    pub flux: FluxKind,
    pub overshoot: OvershootPolicy,
    /// Bump `rho0 = a + b exp(-8 x^2)`.
    pub bump: Option<(f64, f64)>,
    pub riemann: Option<(f64, f64)>,
    pub pressure: Option<PressureFn>,
    pub output_times: Vec<f64>,
    pub write_nodes: bool,
    pub output_dir: Option<PathBuf>,
    pub micro: Option<MicroConfig>,
    pub w_refine: usize,
    pub w_margin: usize,
    pub entries: Vec<Entry>,
    pub warnings: Vec<ConfigIssue>,
}

impl ScenarioConfig {
    pub fn model_params(&self, delta_b: f64) -> Result<ModelParams> {
        let grid = if self.jump_rounding {
            VelocityGrid::with_rounded_jumps(self.n_speeds, self.delta_a, delta_b)?
        } else {
            VelocityGrid::new(self.n_speeds, self.delta_a, delta_b)?
        };
        ModelParams::new(grid, self.prob_law)
    }

    pub fn t_final(&self) -> f64 {
        self.output_times.last().copied().unwrap_or(0.0)
    }

    pub fn rho0(&self, x: f64) -> f64 {
        match (self.bump, self.riemann) {
            (Some((a, b)), _) => a + b * (-8.0 * x * x).exp(),
            (None, Some((l, r))) => {
                if x < 0.0 {
                    l
                } else {
                    r
                }
            }
            _ => 0.0,
        }
    }

    /// `key = value` lines with every default marked.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            if e.defaulted {
                s.push_str(&format!("{} = {}  # default\n", e.key, e.value));
            } else {
                s.push_str(&format!("{} = {}\n", e.key, e.value));
            }
        }
        s
    }
}

pub fn render_issues(issues: &[ConfigIssue]) -> String {
    let lines: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    format!("{} configuration problem(s):\n  {}", issues.len(), lines.join("\n  "))
}

const KEYS: &[&str] = &[
    "scenario",
    "model",
    "n_speeds",
    "delta_a",
    "delta_b",
    "r",
    "jump_rounding",
    "p_law",
    "gamma",
    "n_rho",
    "x_min",
    "x_max",
    "n_cells",
    "boundary",
    "eps.kind",
    "eps.value",
    "eps.cap",
    "cfl",
    "flux",
    "on_overshoot",
    "a",
    "b",
    "rho_l",
    "rho_r",
    "pressure.c",
    "pressure.m",
    "t_final",
    "n_outputs",
    "output_times",
    "write_nodes",
    "output_dir",
    "seed",
    "n_vehicles",
    "micro.interaction",
    "micro.u_eq",
    "w_refine",
    "w_margin",
];

struct Raw {
    line: usize,
    value: String,
}

struct Reader {
    raw: BTreeMap<String, Raw>,
    used: Vec<String>,
    errors: Vec<ConfigIssue>,
    warnings: Vec<ConfigIssue>,
    entries: Vec<Entry>,
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((n, d)) => n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl Reader {
    fn line(&self, key: &str) -> Option<usize> {
        self.raw.get(key).map(|r| r.line)
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        let line = self.line(key);
        self.errors.push(ConfigIssue { line, key: key.into(), message: message.into() });
    }

    fn warn(&mut self, key: &str, message: impl Into<String>) {
        let line = self.line(key);
        let issue = ConfigIssue { line, key: key.into(), message: message.into() };
        log::warn!("{issue}");
        self.warnings.push(issue);
    }

    fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    /// Takes the raw string for `key`, marking it as consumed.
    fn take(&mut self, key: &str) -> Option<String> {
        let v = self.raw.get(key).map(|r| r.value.clone());
        if v.is_some() {
            self.used.push(key.into());
        }
        v
    }

    fn record(&mut self, key: &str, value: String, defaulted: bool) {
        if defaulted {
            log::info!("default {key} = {value}");
        }
        self.entries.push(Entry { key: key.into(), value, defaulted });
    }

    fn typed<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let s = self.take(key)?;
        match parse(&s) {
            Some(v) => {
                self.record(key, s.trim().to_string(), false);
                Some(v)
            }
            None => {
                self.error(key, format!("expected {what}, got `{s}`"));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        if self.has(key) {
            self.typed(key, "a number", parse_number).unwrap_or(default)
        } else {
            self.record(key, fmt_num(default), true);
            default
        }
    }

    fn f64_req(&mut self, key: &str, why: &str) -> Option<f64> {
        if !self.has(key) {
            self.errors.push(ConfigIssue { line: None, key: key.into(), message: format!("missing (required {why})") });
            return None;
        }
        self.typed(key, "a number", parse_number)
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        if self.has(key) {
            self.typed(key, "a non-negative integer", |s| s.trim().parse::<usize>().ok()).unwrap_or(default)
        } else {
            self.record(key, default.to_string(), true);
            default
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        if self.has(key) {
            self.typed(key, "true or false", |s| match s.trim() {
                "true" | "yes" | "1" => Some(true),
                "false" | "no" | "0" => Some(false),
                _ => None,
            })
            .unwrap_or(default)
        } else {
            self.record(key, default.to_string(), true);
            default
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: T) -> T {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        let what = format!("one of {}", names.join(", "));
        self.typed(key, &what, |s| options.iter().find(|(n, _)| *n == s.trim()).map(|(_, v)| *v)).unwrap_or(default)
    }

    fn list<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
        self.typed(key, what, |s| {
            let items: Option<Vec<T>> = s.split(',').map(|p| parse(p.trim())).collect();
            items.filter(|v| !v.is_empty())
        })
    }

    /// Flags keys that are known but irrelevant to this run.
    fn unused(&mut self, key: &str, reason: &str) {
        if self.has(key) {
            self.used.push(key.into());
            self.error(key, format!("not used {reason}"));
        }
    }
}

/// Enumerated option with its default recorded in the echo.
fn pick<T: Copy + PartialEq>(rd: &mut Reader, key: &str, options: &[(&str, T)], default: T) -> T {
    if rd.has(key) {
        rd.choice(key, options, default)
    } else {
        let name = options.iter().find(|(_, v)| *v == default).map(|(n, _)| *n).unwrap_or("?");
        rd.record(key, name.into(), true);
        default
    }
}

fn tokenize(text: &str) -> (BTreeMap<String, Raw>, Vec<ConfigIssue>) {
    let mut raw = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(ConfigIssue { line: Some(n), key: content.into(), message: "expected `key = value`".into() });
            continue;
        };
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            errors.push(ConfigIssue { line: Some(n), key, message: "unknown key".into() });
            continue;
        }
        if let Some(prev) = raw.get(&key) {
            let prev: &Raw = prev;
            errors.push(ConfigIssue {
                line: Some(n),
                key: key.clone(),
                message: format!("duplicate key (first set on line {})", prev.line),
            });
            continue;
        }
        raw.insert(key, Raw { line: n, value: v.trim().to_string() });
    }
    (raw, errors)
}

/// Parses and validates a configuration, returning all problems at once.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let (raw, errors) = tokenize(text);
    let mut rd = Reader { raw, used: Vec::new(), errors, warnings: Vec::new(), entries: Vec::new() };

    let scenario = if rd.has("scenario") {
        rd.typed("scenario", "a scenario name", |s| Scenario::NAMES.iter().find(|(n, _)| *n == s.trim()).map(|(_, v)| *v))
    } else {
        rd.errors.push(ConfigIssue { line: None, key: "scenario".into(), message: "missing (required)".into() });
        None
    };
    let Some(scenario) = scenario else {
        return Err(Error::Invalid(rd.errors));
    };
    let sc = scenario.name();

    let model_default = match scenario {
        Scenario::MicroCompare | Scenario::WspaceBump => Model::ModifiedBgk,
        _ => Model::Boltzmann,
    };
    let model = pick(
        &mut rd,
        "model",
        &[("boltzmann", Model::Boltzmann), ("bgk", Model::Bgk), ("modified_bgk", Model::ModifiedBgk)],
        model_default,
    );
    if matches!(scenario, Scenario::WspaceBump | Scenario::MicroCompare) && model == Model::Boltzmann {
        rd.error("model", format!("scenario {sc} runs in w-space and needs bgk or modified_bgk"));
    }
    if matches!(scenario, Scenario::Bump | Scenario::Riemann | Scenario::Stopgo) && model == Model::ModifiedBgk {
        rd.error("model", format!("modified_bgk runs in w-space; use scenario wspace_bump instead of {sc}"));
    }

    // velocity grid
    let n_speeds = rd.usize_or("n_speeds", if scenario.is_static() { 49 } else { 5 });
    let delta_a = rd.f64_or("delta_a", 0.25);
    let many = scenario.is_static();
    let (delta_b, r) = match (rd.has("delta_b"), rd.has("r")) {
        (true, true) => {
            rd.take("delta_b");
            rd.take("r");
            rd.error("delta_b, r", "give either delta_b or r, not both");
            (vec![delta_a], None)
        }
        (true, false) => {
            let v = rd.list("delta_b", "a number or a list of numbers", parse_number).unwrap_or(vec![delta_a]);
            (v, None)
        }
        (false, has_r) => {
            let r = if has_r {
                rd.list("r", "a positive integer or a list of them", |s| s.parse::<usize>().ok().filter(|&r| r > 0))
                    .unwrap_or(vec![1])
            } else {
                let d = if many { vec![1, 2, 3, 4] } else { vec![1] };
                rd.record("r", d.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "), true);
                d
            };
            (r.iter().map(|&r| delta_a / r as f64).collect(), Some(r))
        }
    };
    if !many && delta_b.len() > 1 {
        let key = if r.is_some() { "r" } else { "delta_b" };
        rd.error(key, format!("scenario {sc} takes a single value"));
    }
    let jump_rounding = rd.bool_or("jump_rounding", false);
    for &db in &delta_b {
        let grid = if jump_rounding {
            VelocityGrid::with_rounded_jumps(n_speeds, delta_a, db)
        } else {
            VelocityGrid::new(n_speeds, delta_a, db)
        };
        if let Err(Error::Config { field, message }) = grid {
            let key = field.split(", ").next().unwrap_or("n_speeds").to_string();
            let line = rd.line(&key).or(rd.line("n_speeds"));
            rd.errors.push(ConfigIssue { line, key: field, message });
        }
    }

    let p_law = pick(&mut rd, "p_law", &[("linear", 0u8), ("power", 1u8)], 0u8);
    let prob_law = if p_law == 1 {
        match rd.f64_req("gamma", "when p_law = power") {
            Some(g) if g > 0.0 => ProbLaw::Power { gamma: g },
            Some(g) => {
                rd.error("gamma", format!("must be positive, got {g}"));
                ProbLaw::Linear
            }
            None => ProbLaw::Linear,
        }
    } else {
        rd.unused("gamma", "with p_law = linear");
        ProbLaw::Linear
    };
    let n_rho = rd.usize_or("n_rho", 101);
    if n_rho < 3 {
        rd.error("n_rho", format!("need at least 3 density samples, got {n_rho}"));
    }

    // pressure
    let needs_pressure = model == Model::ModifiedBgk || scenario == Scenario::MicroCompare;
    let pressure = if needs_pressure {
        let why = if scenario == Scenario::MicroCompare { "by scenario micro_compare" } else { "by model modified_bgk" };
        let c = rd.f64_req("pressure.c", why);
        let m = rd.f64_req("pressure.m", why);
        match (c, m) {
            (Some(c), Some(m)) => {
                let p = PressureFn::power(c, m);
                if let Err(Error::Config { field, message }) = p.validate() {
                    rd.error(&field, message);
                }
                Some(p)
            }
            _ => None,
        }
    } else {
        let why = "unless model = modified_bgk or scenario = micro_compare";
        rd.unused("pressure.c", why);
        rd.unused("pressure.m", why);
        None
    };

    let mut mesh = None;
    let mut bump = None;
    let mut riemann = None;
    let mut output_times = Vec::new();
    let mut micro = None;
    let eps;
    let write_nodes;
    let (mut cfl, mut flux, mut overshoot) = (0.9, FluxKind::Global, OvershootPolicy::Abort);
    let (mut w_refine, mut w_margin) = (1, 1);

    if scenario.is_static() {
        let why = format!("by scenario {sc}");
        for key in KEYS.iter().skip_while(|k| **k != "x_min") {
            if !matches!(*key, "output_dir" | "pressure.c" | "pressure.m" | "gamma" | "write_nodes") {
                rd.unused(key, &why);
            }
        }
        write_nodes = rd.bool_or("write_nodes", false);
        eps = EpsilonModel::Constant(0.01);
    } else {
        let x_min = rd.f64_or("x_min", -1.0);
        let x_max = rd.f64_or("x_max", 1.0);
        let n_cells = rd.usize_or("n_cells", 200);
        let bdefault = if scenario == Scenario::Riemann { Boundary::FreeOutflow } else { Boundary::Periodic };
        let boundary =
            pick(&mut rd, "boundary", &[("periodic", Boundary::Periodic), ("outflow", Boundary::FreeOutflow)], bdefault);
        match Mesh1D::new(x_min, x_max, n_cells, boundary) {
            Ok(m) => mesh = Some(m),
            Err(Error::Config { field, message }) => {
                let key = if rd.has("n_cells") { "n_cells" } else { "x_min" };
                rd.error(key, format!("{field}: {message}"));
            }
            Err(e) => rd.error("n_cells", e.to_string()),
        }
        if scenario == Scenario::MicroCompare && boundary != Boundary::Periodic {
            rd.error("boundary", "micro_compare runs on a ring and needs periodic");
        }

        let kind = pick(&mut rd, "eps.kind", &[("constant", 0u8), ("variable", 1u8)], 0u8);
        if kind == 1 {
            rd.unused("eps.value", "with eps.kind = variable");
            let cap = rd.f64_or("eps.cap", 0.99);
            eps = EpsilonModel::Variable { cap };
            if scenario == Scenario::MicroCompare {
                rd.error("eps.kind", "micro_compare needs a constant relaxation rate");
            }
        } else {
            rd.unused("eps.cap", "with eps.kind = constant");
            eps = EpsilonModel::Constant(rd.f64_or("eps.value", 0.01));
            if scenario == Scenario::Stopgo {
                rd.warn("eps.kind", "stopgo is meant to be run with eps.kind = variable; running with a constant rate");
            }
        }
        if let Err(Error::Config { field, message }) = eps.validate() {
            rd.error(&field, message);
        }

        cfl = rd.f64_or("cfl", 0.9);
        if !(cfl > 0.0 && cfl <= 1.0) {
            rd.error("cfl", format!("must lie in (0, 1], got {cfl}"));
        }
        flux = pick(&mut rd, "flux", &[("global", FluxKind::Global), ("local", FluxKind::Local)], FluxKind::Global);
        overshoot = pick(
            &mut rd,
            "on_overshoot",
            &[("abort", OvershootPolicy::Abort), ("record", OvershootPolicy::Record)],
            OvershootPolicy::Abort,
        );

        if scenario.uses_bump() {
            let why = format!("by scenario {sc}");
            let a = rd.f64_req("a", &why);
            let b = rd.f64_req("b", &why);
            if let (Some(a), Some(b)) = (a, b) {
                if !(a >= 0.0 && b >= 0.0 && a + b <= 1.0) {
                    rd.error("a, b", format!("need a, b >= 0 and a + b <= 1, got a={a}, b={b}"));
                }
                bump = Some((a, b));
            }
            rd.unused("rho_l", &why);
            rd.unused("rho_r", &why);
        } else {
            let l = rd.f64_or("rho_l", 0.2);
            let r = rd.f64_or("rho_r", 0.9);
            for (k, v) in [("rho_l", l), ("rho_r", r)] {
                if !(0.0..=1.0).contains(&v) {
                    rd.error(k, format!("must lie in [0, 1], got {v}"));
                }
            }
            riemann = Some((l, r));
            rd.unused("a", "by scenario riemann");
            rd.unused("b", "by scenario riemann");
            if boundary == Boundary::Periodic {
                rd.warn("boundary", "a periodic Riemann problem also has a jump at the domain ends");
            }
        }

        if rd.has("output_times") {
            if rd.has("t_final") || rd.has("n_outputs") {
                rd.take("t_final");
                rd.take("n_outputs");
                rd.error("output_times", "give either output_times or t_final/n_outputs");
            }
            let times = rd.list("output_times", "a list of times", parse_number).unwrap_or_default();
            if times.iter().any(|&t| t < 0.0) {
                rd.error("output_times", "times must be non-negative");
            }
            output_times = times;
            output_times.sort_by(f64::total_cmp);
            output_times.dedup();
        } else {
            let t_final = rd.f64_or("t_final", if scenario == Scenario::Stopgo { 10.0 } else { 1.0 });
            let n_out = rd.usize_or("n_outputs", 10);
            if !(t_final > 0.0) {
                rd.error("t_final", format!("must be positive, got {t_final}"));
            }
            if n_out == 0 {
                rd.error("n_outputs", "need at least one output");
            }
            output_times = (0..=n_out).map(|i| t_final * i as f64 / n_out.max(1) as f64).collect();
        }
        write_nodes = rd.bool_or("write_nodes", false);

        if matches!(scenario, Scenario::WspaceBump | Scenario::MicroCompare) {
            w_refine = rd.usize_or("w_refine", 1);
            w_margin = rd.usize_or("w_margin", 1);
            if w_refine == 0 {
                rd.error("w_refine", "must be at least 1");
            }
        } else {
            let why = format!("by scenario {sc}");
            rd.unused("w_refine", &why);
            rd.unused("w_margin", &why);
        }

        if scenario == Scenario::MicroCompare {
            let n_vehicles = rd.usize_or("n_vehicles", 2000);
            if n_vehicles < 2 {
                rd.error("n_vehicles", "need at least 2 vehicles");
            }
            let interaction = pick(
                &mut rd,
                "micro.interaction",
                &[("pressure_chain", MicroInteraction::PressureChain), ("classical", MicroInteraction::Classical)],
                MicroInteraction::PressureChain,
            );
            let u_eq = pick(
                &mut rd,
                "micro.u_eq",
                &[("table", MicroUeq::Table), ("greenshields", MicroUeq::Greenshields)],
                MicroUeq::Table,
            );
            let seed = rd.usize_or("seed", 0) as u64;
            micro = Some(MicroConfig { n_vehicles, interaction, u_eq, seed });
        } else {
            let why = format!("by scenario {sc}");
            for key in ["seed", "n_vehicles", "micro.interaction", "micro.u_eq"] {
                rd.unused(key, &why);
            }
        }
    }

    let output_dir = rd.take("output_dir").map(|s| {
        rd.record("output_dir", s.clone(), false);
        PathBuf::from(s)
    });

    let leftover: Vec<String> = rd.raw.keys().filter(|k| !rd.used.contains(k)).cloned().collect();
    for key in leftover {
        rd.error(&key, format!("not used by scenario {sc} with these settings"));
    }

    if !rd.errors.is_empty() {
        rd.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(Error::Invalid(rd.errors));
    }
    Ok(ScenarioConfig {
        scenario,
        model,
        n_speeds,
        delta_a,
        delta_b,
        r,
        jump_rounding,
        prob_law,
        n_rho,
        mesh,
        eps,
        cfl,
        flux,
        overshoot,
        bump,
        riemann,
        pressure,
        output_times,
        write_nodes,
        output_dir,
        micro,
        w_refine,
        w_margin,
        entries: rd.entries,
        warnings: rd.warnings,
    })
}
