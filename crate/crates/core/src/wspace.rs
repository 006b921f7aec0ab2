//! Modified BGK model in the desired-speed variable `w = v + p(rho)`:
//! transport at speed `w - p(rho)` and relaxation towards a Maxwellian `M_g`
//! obtained by translating `M_f` by `p(rho)`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::equilibrium::{sci, MaxwellianTable};
use crate::error::{Error, Result};
use crate::solver::{
    check_state, eval_epsilon, gradient, llf_update, normalize_times, relaxation_target, Diagnostics,
    EpsilonModel, FluxKind, Mesh1D, OvershootPolicy, OVERSHOOT_TOL,
};
use crate::stability::PressureFn;

/// Deposition positions this close to a node (in node units) land on it exactly.
const SNAP_TOL: f64 = 1e-9;

/// Equidistant desired speeds `w_k = w_min + k / denom`.
#[derive(Debug, Clone, PartialEq)]
pub struct WGrid {
    pub w_min: f64,
    /// Nodes per unit speed; a multiple of the v-grid's `n - 1`.
    denom: usize,
    nodes: Vec<f64>,
}

impl WGrid {
    /// Grid for `table` and `pressure` with `refine` w-nodes per v-spacing.
    ///
    /// `w_min` is the smallest deposited speed over the table samples
    /// (`p(rho_1)` for `rho_1` the first positive sample), or 0 without a
    /// pressure. The top node lies `margin_nodes` above `V_M + p(rho_max)`.
    pub fn for_table(
        table: &MaxwellianTable,
        pressure: Option<&PressureFn>,
        refine: usize,
        margin_nodes: usize,
    ) -> Result<Self> {
        let w_min = match pressure {
            None => 0.0,
            Some(p) => {
                let rho1 = table.rho_samples.iter().copied().find(|r| *r > 0.0).unwrap_or(table.rho_max());
                table.nodes[0] + p.eval(rho1)
            }
        };
        let v_max = table.nodes.iter().fold(0.0f64, |a, v| a.max(*v));
        let top = v_max + pressure.map_or(0.0, |p| p.eval(table.rho_max()));
        Self::new(w_min, top, table.n_speeds(), refine, margin_nodes, pressure.is_some())
    }

    /// Explicit grid from `w_min` up to at least `top` plus `margin_nodes`.
    pub fn new(
        w_min: f64,
        top: f64,
        n_speeds: usize,
        refine: usize,
        margin_nodes: usize,
        with_pressure: bool,
    ) -> Result<Self> {
        if refine == 0 || n_speeds < 2 {
            return Err(Error::config("w_refine", "need a positive refinement and at least 2 speeds"));
        }
        if with_pressure && !(w_min > 0.0) {
            return Err(Error::config("w_min", format!("must be positive, got {w_min}")));
        }
        if !(w_min >= 0.0 && top > w_min) {
            return Err(Error::config("w_min", format!("empty w-range [{w_min}, {top}]")));
        }
        let denom = refine * (n_speeds - 1);
        let span = ((top - w_min) * denom as f64 - SNAP_TOL).ceil().max(1.0) as usize;
        let nodes = (0..=span + margin_nodes).map(|k| w_min + k as f64 / denom as f64).collect();
        Ok(Self { w_min, denom, nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.denom as f64
    }

    pub fn w_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// w-node holding speed node `k` of the v-grid when there is no shift.
    pub fn v_index(&self, k: usize, n_speeds: usize) -> usize {
        k * (self.denom / (n_speeds - 1))
    }
}

/// Writes `M_g(.; rho)` onto the w-grid by depositing each Maxwellian weight at
/// `v_k + p(rho)` onto its two bracketing nodes, linearly in distance.
pub fn build_mg(
    table: &MaxwellianTable,
    pressure: Option<&PressureFn>,
    rho: f64,
    wgrid: &WGrid,
    out: &mut [f64],
) -> Result<()> {
    let n = table.n_speeds();
    let mut m = vec![0.0; n];
    relaxation_target(table, rho, &mut m)?;
    deposit(&m, &table.nodes, pressure.map_or(0.0, |p| p.eval(rho)), pressure.is_some(), wgrid, out)
}

fn deposit(m: &[f64], v: &[f64], shift: f64, shifted: bool, wgrid: &WGrid, out: &mut [f64]) -> Result<()> {
    out.iter_mut().for_each(|g| *g = 0.0);
    let last = wgrid.len() - 1;
    for (k, (&weight, &vk)) in m.iter().zip(v).enumerate() {
        if !shifted {
            out[wgrid.v_index(k, v.len())] += weight;
            continue;
        }
        if weight == 0.0 {
            continue;
        }
        let w = vk + shift;
        let s = (w - wgrid.w_min) * wgrid.denom as f64;
        let nearest = s.round();
        if (s - nearest).abs() < SNAP_TOL && nearest >= 0.0 && nearest as usize <= last {
            out[nearest as usize] += weight;
            continue;
        }
        if s < 0.0 || s > last as f64 {
            return Err(Error::config(
                "w_min, w_margin",
                format!("w-grid [{}, {}] too narrow for deposit at w = {w}", wgrid.w_min, wgrid.w_max()),
            ));
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        out[i] += (1.0 - t) * weight;
        out[i + 1] += t * weight;
    }
    Ok(())
}

/// Zeroth and first w-moments `(rho, q)` of one cell.
pub fn w_moments(g: &[f64], wgrid: &WGrid) -> (f64, f64) {
    g.iter().zip(wgrid.nodes()).fold((0.0, 0.0), |(r, q), (gk, w)| (r + gk, q + w * gk))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GField {
    pub mesh: Mesh1D,
    pub wgrid: WGrid,
    pub values: Vec<f64>,
}

impl GField {
    /// `M_g(rho0(x_j))` in every cell.
    pub fn equilibrium(
        mesh: Mesh1D,
        wgrid: WGrid,
        table: &MaxwellianTable,
        pressure: Option<&PressureFn>,
        rho0: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let n = wgrid.len();
        let mut values = vec![0.0; mesh.n_cells * n];
        for (j, cell) in values.chunks_mut(n).enumerate() {
            build_mg(table, pressure, rho0(mesh.center(j)), &wgrid, cell)?;
        }
        Ok(Self { mesh, wgrid, values })
    }

    pub fn n_nodes(&self) -> usize {
        self.wgrid.len()
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let n = self.n_nodes();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn densities(&self) -> Vec<f64> {
        self.values.chunks(self.n_nodes()).map(|c| c.iter().sum()).collect()
    }

    pub fn q(&self) -> Vec<f64> {
        self.values.chunks(self.n_nodes()).map(|c| w_moments(c, &self.wgrid).1).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.mesh.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WOptions {
    pub eps: EpsilonModel,
    pub cfl: f64,
    pub flux: FluxKind,
    pub overshoot: OvershootPolicy,
}

impl Default for WOptions {
    fn default() -> Self {
        Self { eps: EpsilonModel::Constant(0.01), cfl: 0.9, flux: FluxKind::Global, overshoot: OvershootPolicy::Abort }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WSnapshot {
    pub t: f64,
    pub step: usize,
    pub values: Vec<f64>,
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub eps: Vec<f64>,
    /// Macroscopic speed `q/rho - p(rho)`.
    pub u: Vec<f64>,
}

impl WSnapshot {
    /// `x,rho,q,u,eps` and optionally `g_0..`.
    pub fn write_csv<W: Write>(&self, mesh: &Mesh1D, with_nodes: bool, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = if self.rho.is_empty() { 0 } else { self.values.len() / self.rho.len() };
        let mut header: Vec<String> = ["x", "rho", "q", "u", "eps"].iter().map(|s| s.to_string()).collect();
        if with_nodes {
            header.extend((0..n).map(|k| format!("g_{k}")));
        }
        wr.write_record(&header)?;
        for j in 0..self.rho.len() {
            let mut row = vec![sci(mesh.center(j)), sci(self.rho[j]), sci(self.q[j]), sci(self.u[j]), sci(self.eps[j])];
            if with_nodes {
                row.extend(self.values[j * n..(j + 1) * n].iter().map(|v| sci(*v)));
            }
            wr.write_record(&row)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WRunOutput {
    pub snapshots: Vec<WSnapshot>,
    pub diagnostics: Diagnostics,
    pub field: GField,
}

pub struct WSolver {
    pub table: Arc<MaxwellianTable>,
    pub pressure: Option<PressureFn>,
    pub opts: WOptions,
    rho_max: f64,
    scratch_in: Vec<f64>,
    scratch_out: Vec<f64>,
    flux_buf: Vec<f64>,
}

impl WSolver {
    pub fn new(table: Arc<MaxwellianTable>, pressure: Option<PressureFn>, opts: WOptions) -> Result<Self> {
        opts.eps.validate()?;
        if let Some(p) = &pressure {
            p.validate()?;
        }
        if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
            return Err(Error::config("cfl", format!("must lie in (0, 1], got {}", opts.cfl)));
        }
        let rho_max = table.rho_max();
        Ok(Self { table, pressure, opts, rho_max, scratch_in: Vec::new(), scratch_out: Vec::new(), flux_buf: Vec::new() })
    }

    fn p(&self, rho: f64) -> f64 {
        self.pressure.as_ref().map_or(0.0, |p| p.eval(rho))
    }

    /// Worst-case step: `|w - p| <= w_max` since `0 <= p` and `w >= 0`.
    pub fn max_dt(&self, field: &GField) -> f64 {
        self.opts.cfl * field.mesh.dx() / field.wgrid.w_max()
    }

    pub fn transport_step(&mut self, field: &mut GField, dt: f64) -> Result<()> {
        let mesh = field.mesh;
        let limit = mesh.dx() / field.wgrid.w_max();
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, required: limit });
        }
        let n = field.n_nodes();
        let nc = mesh.n_cells;
        let lambda = dt / mesh.dx();
        let p: Vec<f64> = field.densities().iter().map(|&r| self.p(r)).collect();
        let nodes = field.wgrid.nodes().to_vec();
        let alpha_floor = match self.opts.flux {
            FluxKind::Local => 0.0,
            FluxKind::Global => {
                let (p_lo, p_hi) = p.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
                nodes.iter().fold(0.0f64, |a, w| a.max((w - p_lo).abs()).max((w - p_hi).abs()))
            }
        };
        self.scratch_in.resize(nc, 0.0);
        self.scratch_out.resize(nc, 0.0);
        for (k, &w) in nodes.iter().enumerate() {
            for j in 0..nc {
                self.scratch_in[j] = field.values[j * n + k];
            }
            if self.scratch_in.iter().all(|v| *v == 0.0) {
                continue;
            }
            llf_update(&mesh, &self.scratch_in, |j| w - p[j], alpha_floor, lambda, &mut self.flux_buf, &mut self.scratch_out);
            for j in 0..nc {
                field.values[j * n + k] = self.scratch_out[j];
            }
        }
        Ok(())
    }

    pub fn epsilon_field(&self, field: &GField) -> Vec<f64> {
        let rho = field.densities();
        match self.opts.eps {
            EpsilonModel::Constant(e) => vec![e; rho.len()],
            model => {
                let grad = gradient(&field.mesh, &rho);
                rho.iter().zip(&grad).map(|(&r, &g)| eval_epsilon(&model, r, g)).collect()
            }
        }
    }

    /// `g' = M_g + (g - M_g) exp(-dt/eps)`. Returns the largest density change.
    pub fn relax_step(&self, field: &mut GField, dt: f64, eps: &[f64]) -> Result<f64> {
        let n = field.n_nodes();
        let (table, pressure, wgrid) = (&*self.table, self.pressure.as_ref(), &field.wgrid);
        field
            .values
            .par_chunks_mut(n)
            .zip(eps.par_iter())
            .map(|(cell, &e)| {
                let rho: f64 = cell.iter().sum();
                let mut m = vec![0.0; n];
                build_mg(table, pressure, rho, wgrid, &mut m)?;
                let decay = (-dt / e).exp();
                for k in 0..n {
                    cell[k] = m[k] + (cell[k] - m[k]) * decay;
                }
                Ok((cell.iter().sum::<f64>() - rho).abs())
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    }

    fn snapshot(&self, field: &GField, t: f64, step: usize, eps: &[f64]) -> WSnapshot {
        let rho = field.densities();
        let q = field.q();
        let u = rho.iter().zip(&q).map(|(&r, &qq)| if r > 0.0 { qq / r - self.p(r) } else { 0.0 }).collect();
        WSnapshot { t, step, values: field.values.clone(), rho, q, eps: eps.to_vec(), u }
    }

    pub fn run(&mut self, mut field: GField, output_times: &[f64]) -> Result<WRunOutput> {
        let times = normalize_times(output_times)?;
        let n = field.n_nodes();
        let mut diag = Diagnostics::start(field.mass(), check_state(&field.values, n, 0, self.rho_max, true)?);
        let abort = self.opts.overshoot == OvershootPolicy::Abort;
        let dt_cfl = self.max_dt(&field);
        let mut snapshots = Vec::with_capacity(times.len());
        let mut t = 0.0;
        let mut eps = self.epsilon_field(&field);
        for &t_out in &times {
            while t_out - t > 1e-12 * t_out.max(1.0) {
                let dt = dt_cfl.min(t_out - t);
                self.transport_step(&mut field, dt)?;
                eps = self.epsilon_field(&field);
                let change = self.relax_step(&mut field, dt, &eps)?;
                t += dt;
                let max_rho = check_state(&field.values, n, diag.steps + 1, self.rho_max, abort)?;
                if max_rho > self.rho_max + OVERSHOOT_TOL {
                    diag.overshoot_events += 1;
                }
                diag.max_collision_density_change = diag.max_collision_density_change.max(change);
                diag.record_step(dt, field.mass(), max_rho);
            }
            t = t.max(t_out);
            snapshots.push(self.snapshot(&field, t, diag.steps, &eps));
        }
        Ok(WRunOutput { snapshots, diagnostics: diag, field })
    }
}
