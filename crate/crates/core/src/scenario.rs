//! Runs a parsed [`ScenarioConfig`] and writes its data files, `manifest.txt`
//! and `summary.txt` into an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analysis::{l1_distance, peak, total_variation, transition_width};
use crate::config::{MicroInteraction, MicroUeq, Model, Scenario, ScenarioConfig};
use crate::equilibrium::{build_maxwellian_table, fundamental_diagram, sci, MaxwellianTable, TableOptions};
use crate::kinetic::ModelParams;
use crate::micro::{equilibrium_state, macro_profile, sample_profile, Interaction, MicroParams, MicroSim, TRAJECTORY_HEADER};
use crate::solver::{Boundary, CollisionModel, Diagnostics, KineticField, KineticSolver, Mesh1D, SolverOptions};
use crate::stability::{DiffusionProfile, SpeedLaw};
use crate::wspace::{GField, WGrid, WOptions, WSolver};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a run produced, besides the files themselves.
#[derive(Debug, Clone, Default)]
pub struct ScenarioReport {
    /// Data files, relative to the output directory, in write order.
    pub files: Vec<String>,
    /// `key = value` scalars written to `summary.txt`.
    pub summary: Vec<(String, String)>,
    pub diagnostics: Vec<(String, Diagnostics)>,
}

impl ScenarioReport {
    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// SHA-256 of the resolved configuration echo.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.echo().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Out<'a> {
    dir: &'a Path,
    report: ScenarioReport,
}

impl Out<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.report.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the scenario. On failure a `failure.txt` with the error and the
/// configuration is left in `out_dir` before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioReport> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let start = Instant::now();
    let mut out = Out { dir: out_dir, report: ScenarioReport::default() };
    let result = match cfg.scenario {
        Scenario::FundamentalDiagram => run_fundamental(cfg, &mut out),
        Scenario::DiffusionProfile => run_diffusion(cfg, &mut out),
        Scenario::Bump | Scenario::Riemann | Scenario::Stopgo => run_kinetic(cfg, &mut out),
        Scenario::WspaceBump => run_wspace(cfg, &mut out),
        Scenario::MicroCompare => run_micro(cfg, &mut out),
    };
    let wall = start.elapsed().as_secs_f64();
    if let Err(e) = result {
        let text = format!(
            "status = failed\nerror = {e}\nversion = {VERSION}\nconfig_sha256 = {}\nwall_time_s = {wall:.3}\n\n[config]\n{}",
            config_hash(cfg),
            cfg.echo()
        );
        write_text(&out_dir.join("failure.txt"), &text)?;
        return Err(e);
    }
    let report = out.report;
    let mut summary = String::new();
    for (k, v) in &report.summary {
        summary.push_str(&format!("{k} = {v}\n"));
    }
    write_text(&out_dir.join("summary.txt"), &summary)?;
    write_text(&out_dir.join("manifest.txt"), &manifest(cfg, &report, wall))?;
    Ok(report)
}

fn manifest(cfg: &ScenarioConfig, report: &ScenarioReport, wall: f64) -> String {
    let mut s = format!(
        "kinetra {VERSION}\nscenario = {}\nconfig_sha256 = {}\nwall_time_s = {wall:.3}\nthreads = {}\n\n[config]\n{}",
        cfg.scenario.name(),
        config_hash(cfg),
        rayon::current_num_threads(),
        cfg.echo()
    );
    for w in &cfg.warnings {
        s.push_str(&format!("\n[warning]\n{w}\n"));
    }
    for (label, d) in &report.diagnostics {
        s.push_str(&format!("\n[diagnostics {label}]\n{}", d.report()));
    }
    s.push_str("\n[files]\n");
    for f in &report.files {
        s.push_str(f);
        s.push('\n');
    }
    s
}

fn table_for(cfg: &ScenarioConfig, delta_b: f64) -> Result<(ModelParams, Arc<MaxwellianTable>)> {
    let params = cfg.model_params(delta_b)?;
    let table = build_maxwellian_table(&params, &TableOptions { n_rho: cfg.n_rho, ..TableOptions::default() })?;
    Ok((params, Arc::new(table)))
}

fn table_labels(cfg: &ScenarioConfig) -> Vec<String> {
    match &cfg.r {
        Some(r) => r.iter().map(|r| format!("r{r}")).collect(),
        None => (0..cfg.delta_b.len()).map(|i| format!("db{i}")).collect(),
    }
}

fn build_all(cfg: &ScenarioConfig) -> Result<Vec<(ModelParams, Arc<MaxwellianTable>)>> {
    cfg.delta_b.par_iter().map(|&db| table_for(cfg, db)).collect()
}

fn run_fundamental(cfg: &ScenarioConfig, out: &mut Out) -> Result<()> {
    let tables = build_all(cfg)?;
    let labels = table_labels(cfg);
    let mut caps = Vec::new();
    for ((params, table), label) in tables.iter().zip(&labels) {
        let fd = fundamental_diagram(table);
        fd.write_csv(out.create(&format!("fundamental_{label}.csv"))?)?;
        if cfg.write_nodes {
            table.write_csv(out.create(&format!("maxwellian_{label}.csv"))?)?;
        }
        out.report.put(format!("delta_b.{label}"), params.grid.delta_b());
        out.report.put(format!("rho_c.{label}"), format!("{:.6}", fd.rho_c));
        out.report.put(format!("capacity.{label}"), format!("{:.6}", fd.capacity));
        out.report.put(format!("interior_maxima.{label}"), fd.interior_maxima());
        caps.push((params.grid.delta_b(), fd.capacity, label.clone()));
    }
    caps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = caps.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1);
    let mut listed = caps.clone();
    listed.sort_by(|a, b| b.1.total_cmp(&a.1));
    let listing: Vec<String> = listed.iter().map(|(_, c, l)| format!("{l}:{c:.6}")).collect();
    out.report.put("capacities_descending", listing.join(", "));
    out.report.put("capacity_decreases_with_delta_b", decreasing);
    Ok(())
}

fn run_diffusion(cfg: &ScenarioConfig, out: &mut Out) -> Result<()> {
    let tables = build_all(cfg)?;
    let labels = table_labels(cfg);
    for ((_, table), label) in tables.iter().zip(&labels) {
        let fd = fundamental_diagram(table);
        out.report.put(format!("rho_c.{label}"), format!("{:.6}", fd.rho_c));
        let mut profiles = vec![("bgk", DiffusionProfile::bgk(table))];
        if let Some(p) = &cfg.pressure {
            profiles.push(("modified", DiffusionProfile::modified(table, p)?));
        }
        for (name, prof) in profiles {
            prof.write_csv(out.create(&format!("diffusion_{name}_{label}.csv"))?)?;
            out.report.put(format!("classification.{name}.{label}"), prof.classification);
            let iv: Vec<String> = prof.negative_intervals.iter().map(|i| format!("({:.6}, {:.6})", i.lo, i.hi)).collect();
            let iv = if iv.is_empty() { "none".to_string() } else { iv.join(" ") };
            out.report.put(format!("negative_intervals.{name}.{label}"), iv);
        }
    }
    Ok(())
}

/// Shape of a density series over the output times.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub t: Vec<f64>,
    /// Peak positions, unwrapped across a periodic boundary.
    pub peak_x: Vec<f64>,
    pub peak_rho: Vec<f64>,
    pub tv: Vec<f64>,
    pub max_rho: Vec<f64>,
}

impl Track {
    pub fn new(mesh: &Mesh1D, t: &[f64], rho: &[Vec<f64>]) -> Self {
        let x = mesh.centers();
        let periodic = mesh.boundary == Boundary::Periodic;
        let mut tr = Track { t: t.to_vec(), peak_x: vec![], peak_rho: vec![], tv: vec![], max_rho: vec![] };
        for r in rho {
            let (mut px, ph) = peak(&x, r, periodic);
            if let (true, Some(&prev)) = (periodic, tr.peak_x.last()) {
                let l = mesh.length();
                px += l * ((prev - px) / l).round();
            }
            tr.peak_x.push(px);
            tr.peak_rho.push(ph);
            tr.tv.push(total_variation(r, periodic));
            tr.max_rho.push(r.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)));
        }
        tr
    }

    /// Sign of the least-squares slope of the peak trajectory.
    pub fn drift_sign(&self) -> &'static str {
        sign_word(ls_slope(&self.t, &self.peak_x))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "peak_x", "peak_rho", "total_variation", "max_rho"])?;
        for i in 0..self.t.len() {
            wr.write_record([sci(self.t[i]), sci(self.peak_x[i]), sci(self.peak_rho[i]), sci(self.tv[i]), sci(self.max_rho[i])])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    fn summarize(&self, report: &mut ScenarioReport) {
        let last = self.t.len() - 1;
        report.put("peak_drift_sign", self.drift_sign());
        report.put("peak_position_trend", trend(&self.peak_x));
        report.put("peak_height_trend", trend(&self.peak_rho));
        report.put("peak_x_initial", format!("{:.6}", self.peak_x[0]));
        report.put("peak_x_final", format!("{:.6}", self.peak_x[last]));
        report.put("peak_rho_initial", format!("{:.6}", self.peak_rho[0]));
        report.put("peak_rho_final", format!("{:.6}", self.peak_rho[last]));
        report.put("total_variation_initial", format!("{:.6}", self.tv[0]));
        report.put("total_variation_final", format!("{:.6}", self.tv[last]));
        report.put("max_density", format!("{:.10}", self.max_rho.iter().fold(0.0f64, |a, &b| a.max(b))));
    }
}

fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn sign_word(v: f64) -> &'static str {
    if v > 1e-12 {
        "positive"
    } else if v < -1e-12 {
        "negative"
    } else {
        "zero"
    }
}

/// `increasing`/`decreasing` when strictly monotone, else `mixed`.
pub fn trend(v: &[f64]) -> &'static str {
    if v.windows(2).all(|w| w[1] > w[0]) {
        "increasing"
    } else if v.windows(2).all(|w| w[1] < w[0]) {
        "decreasing"
    } else {
        "mixed"
    }
}

fn put_table_scalars(report: &mut ScenarioReport, table: &MaxwellianTable) {
    let fd = fundamental_diagram(table);
    report.put("rho_c", format!("{:.6}", fd.rho_c));
    report.put("capacity", format!("{:.6}", fd.capacity));
}

fn put_diagnostics(report: &mut ScenarioReport, d: &Diagnostics) {
    report.put("steps", d.steps);
    report.put("max_relative_mass_drift", format!("{:e}", d.max_mass_drift));
    report.put("max_collision_density_change", format!("{:e}", d.max_collision_density_change));
    report.put("negativity_events", d.negativity_events);
    report.put("overshoot_events", d.overshoot_events);
}

fn run_kinetic(cfg: &ScenarioConfig, out: &mut Out) -> Result<()> {
    let mesh = cfg.mesh.clone().ok_or_else(|| Error::config("n_cells", "scenario needs a mesh"))?;
    let (params, table) = table_for(cfg, cfg.delta_b[0])?;
    let collision = match cfg.model {
        Model::Boltzmann => CollisionModel::Boltzmann,
        Model::Bgk => CollisionModel::Bgk,
        Model::ModifiedBgk => return Err(Error::config("model", "modified_bgk runs through wspace_bump")),
    };
    let opts = SolverOptions { collision, eps: cfg.eps, cfl: cfg.cfl, flux: cfg.flux, overshoot: cfg.overshoot, ..SolverOptions::default() };
    let field = KineticField::maxwellian(mesh.clone(), &table, |x| cfg.rho0(x))?;
    let mut solver = KineticSolver::new(params, table.clone(), opts)?;
    let run = solver.run(field, &cfg.output_times)?;
    for (i, snap) in run.snapshots.iter().enumerate() {
        snap.write_csv(&mesh, cfg.write_nodes, out.create(&format!("snapshot_{i:03}.csv"))?)?;
    }
    let t: Vec<f64> = run.snapshots.iter().map(|s| s.t).collect();
    let rho: Vec<Vec<f64>> = run.snapshots.iter().map(|s| s.rho.clone()).collect();
    let track = Track::new(&mesh, &t, &rho);
    track.write_csv(out.create("peaks.csv")?)?;
    put_table_scalars(&mut out.report, &table);
    track.summarize(&mut out.report);
    if let Some((l, r)) = cfg.riemann {
        let x = mesh.centers();
        let (lo, hi) = (l.min(r), l.max(r));
        let widths: Vec<Option<f64>> = rho.iter().map(|r| transition_width(&x, r, lo, hi)).collect();
        let shown: Vec<String> = widths.iter().map(|w| w.map_or("none".into(), |w| format!("{w:.6}"))).collect();
        out.report.put("transition_widths", shown.join(", "));
        let vals: Vec<f64> = widths.iter().flatten().copied().collect();
        let nonincreasing = vals.len() == widths.len() && vals.windows(2).all(|w| w[1] <= w[0]);
        out.report.put("transition_width_nonincreasing", nonincreasing);
    }
    put_diagnostics(&mut out.report, &run.diagnostics);
    out.report.diagnostics.push(("kinetic".into(), run.diagnostics));
    Ok(())
}

fn wspace_setup(cfg: &ScenarioConfig, table: &Arc<MaxwellianTable>) -> Result<(WSolver, GField)> {
    let mesh = cfg.mesh.clone().ok_or_else(|| Error::config("n_cells", "scenario needs a mesh"))?;
    let pressure = if cfg.model == Model::ModifiedBgk { cfg.pressure.clone() } else { None };
    let wgrid = WGrid::for_table(table, pressure.as_ref(), cfg.w_refine, cfg.w_margin)?;
    let field = GField::equilibrium(mesh, wgrid, table, pressure.as_ref(), |x| cfg.rho0(x))?;
    let opts = WOptions { eps: cfg.eps, cfl: cfg.cfl, flux: cfg.flux, overshoot: cfg.overshoot };
    Ok((WSolver::new(table.clone(), pressure, opts)?, field))
}

fn run_wspace(cfg: &ScenarioConfig, out: &mut Out) -> Result<()> {
    let (_, table) = table_for(cfg, cfg.delta_b[0])?;
    let (mut solver, field) = wspace_setup(cfg, &table)?;
    let mesh = field.mesh.clone();
    out.report.put("w_nodes", field.n_nodes());
    out.report.put("w_min", sci(field.wgrid.w_min));
    out.report.put("w_max", sci(field.wgrid.w_max()));
    let run = solver.run(field, &cfg.output_times)?;
    for (i, snap) in run.snapshots.iter().enumerate() {
        snap.write_csv(&mesh, cfg.write_nodes, out.create(&format!("snapshot_{i:03}.csv"))?)?;
    }
    let t: Vec<f64> = run.snapshots.iter().map(|s| s.t).collect();
    let rho: Vec<Vec<f64>> = run.snapshots.iter().map(|s| s.rho.clone()).collect();
    let track = Track::new(&mesh, &t, &rho);
    track.write_csv(out.create("peaks.csv")?)?;
    put_table_scalars(&mut out.report, &table);
    track.summarize(&mut out.report);
    put_diagnostics(&mut out.report, &run.diagnostics);
    out.report.diagnostics.push(("wspace".into(), run.diagnostics));
    Ok(())
}

fn run_micro(cfg: &ScenarioConfig, out: &mut Out) -> Result<()> {
    let mc = cfg.micro.as_ref().ok_or_else(|| Error::config("n_vehicles", "micro settings missing"))?;
    let pressure = cfg.pressure.clone().ok_or_else(|| Error::config("pressure.c", "micro_compare needs a pressure"))?;
    let (_, table) = table_for(cfg, cfg.delta_b[0])?;
    let (mut solver, field) = wspace_setup(cfg, &table)?;
    let mesh = field.mesh.clone();
    let eps = match cfg.eps {
        crate::solver::EpsilonModel::Constant(e) => e,
        _ => return Err(Error::config("eps.kind", "micro_compare needs a constant relaxation rate")),
    };
    let (x, l) = sample_profile(|x| cfg.rho0(x), &mesh, mc.n_vehicles, mc.seed)?;
    let u_eq = match mc.u_eq {
        MicroUeq::Table => SpeedLaw::Table(table.clone()),
        MicroUeq::Greenshields => SpeedLaw::Greenshields,
    };
    let mut params = MicroParams {
        pressure,
        u_eq,
        eps,
        interaction: Interaction::PressureChain,
        vehicle_length: l,
        ring_length: mesh.length(),
        v_max: 1.0,
    };
    if mc.interaction == MicroInteraction::Classical {
        params.interaction = params
            .classical_for_power()
            .ok_or_else(|| Error::config("micro.interaction", "classical mode needs a power-law pressure"))?;
    }
    let state = equilibrium_state(&params, x)?;
    let mut sim = MicroSim::new(params, state)?;
    out.report.put("vehicle_length", sci(l));

    let meso = solver.run(field, &cfg.output_times)?;
    let mut traj = csv::Writer::from_writer(out.create("trajectory.csv")?);
    traj.write_record(TRAJECTORY_HEADER)?;
    let mut l1 = Vec::new();
    let dx = mesh.dx();
    for (i, snap) in meso.snapshots.iter().enumerate() {
        sim.run_until(snap.t)?;
        sim.write_trajectory_rows(&mut traj)?;
        let (rho, u) = macro_profile(&sim, &mesh)?;
        let micro_snap = crate::solver::Snapshot {
            t: sim.t,
            step: sim.stats.steps,
            values: vec![],
            flux: rho.iter().zip(&u).map(|(r, u)| r * u).collect(),
            rho: rho.clone(),
            eps: vec![eps; mesh.n_cells],
        };
        micro_snap.write_csv(&mesh, false, out.create(&format!("micro_{i:03}.csv"))?)?;
        snap.write_csv(&mesh, cfg.write_nodes, out.create(&format!("meso_{i:03}.csv"))?)?;
        l1.push(l1_distance(&rho, &snap.rho, dx));
    }
    traj.flush().map_err(|e| Error::io("trajectory.csv", e))?;
    drop(traj);
    let shown: Vec<String> = l1.iter().map(|v| format!("{v:.6}")).collect();
    out.report.put("micro_meso_l1", shown.join(", "));
    out.report.put("quantization_bound", format!("{:.6}", mesh.n_cells as f64 * l));
    out.report.put("micro_steps", sim.stats.steps);
    out.report.put("clamp_events", sim.stats.clamp_events);
    put_table_scalars(&mut out.report, &table);
    put_diagnostics(&mut out.report, &meso.diagnostics);
    out.report.diagnostics.push(("wspace".into(), meso.diagnostics));
    Ok(())
}

/// Output directory for a config file: `--out`, else the config's
/// `output_dir`, else `$KINETRA_OUT/<stem>` (or `./out/<stem>`).
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &ScenarioConfig, config_path: &Path, env: Option<&str>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output_dir {
        return p.clone();
    }
    let stem = config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    PathBuf::from(env.unwrap_or("out")).join(stem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn trends_and_slopes() {
        assert_eq!(trend(&[0.1, 0.2, 0.4]), "increasing");
        assert_eq!(trend(&[0.4, 0.2, 0.1]), "decreasing");
        assert_eq!(trend(&[0.1, 0.1, 0.2]), "mixed");
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
        assert_eq!(sign_word(ls_slope(&[0.0, 1.0], &[2.0, 2.0])), "zero");
    }

    #[test]
    fn peak_track_unwraps_across_the_boundary() {
        let mesh = Mesh1D::new(-1.0, 1.0, 100, Boundary::Periodic).unwrap();
        let x = mesh.centers();
        let at = |c: f64| -> Vec<f64> {
            x.iter()
                .map(|&x| {
                    let d = (x - c + 1.0).rem_euclid(2.0) - 1.0;
                    0.2 + (-50.0 * d * d).exp()
                })
                .collect()
        };
        let centres = [0.8, 0.95, -0.9, -0.75];
        let rho: Vec<Vec<f64>> = centres.iter().map(|&c| at(c)).collect();
        let tr = Track::new(&mesh, &[0.0, 1.0, 2.0, 3.0], &rho);
        assert_eq!(tr.drift_sign(), "positive");
        assert_eq!(trend(&tr.peak_x), "increasing");
        assert!((tr.peak_x[3] - 1.25).abs() < 0.02, "{:?}", tr.peak_x);
    }

    #[test]
    fn output_directory_precedence() {
        let cfg = parse_config("scenario = bump\na = 0.2\nb = 0.2\n").unwrap();
        let path = Path::new("runs/free.cfg");
        assert_eq!(resolve_out_dir(Some(Path::new("x")), &cfg, path, Some("env")), PathBuf::from("x"));
        assert_eq!(resolve_out_dir(None, &cfg, path, Some("env")), PathBuf::from("env/free"));
        assert_eq!(resolve_out_dir(None, &cfg, path, None), PathBuf::from("out/free"));
        let cfg = parse_config("scenario = bump\na = 0.2\nb = 0.2\noutput_dir = here\n").unwrap();
        assert_eq!(resolve_out_dir(None, &cfg, path, Some("env")), PathBuf::from("here"));
    }

    #[test]
    fn hash_tracks_resolved_values() {
        let a = parse_config("scenario = bump\na = 0.2\nb = 0.2\n").unwrap();
        let b = parse_config("# same run\nscenario = bump\nb = 0.2\na = 0.2\n").unwrap();
        let c = parse_config("scenario = bump\na = 0.2\nb = 0.3\n").unwrap();
        assert_eq!(config_hash(&a).len(), 64);
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
