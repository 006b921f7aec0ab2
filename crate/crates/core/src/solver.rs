//! First-order finite-volume solver for the space-dependent kinetic models:
//! local Lax-Friedrichs transport per speed node followed by a collision step
//! (penalised Boltzmann or exact BGK relaxation) in each cell.

use std::sync::Arc;

use rayon::prelude::*;

use crate::equilibrium::{sci, MaxwellianTable};
use crate::error::{Error, Result};
use crate::kinetic::{collision_with_probability, moments_of, InteractionTables, ModelParams};

/// Cell densities may exceed `rho_max` by this much before the run aborts.
pub const OVERSHOOT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells.
    FreeOutflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

impl Mesh1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::config("n_cells", format!("need at least 4 cells, got {n_cells}")));
        }
        if !(x_max > x_min) {
            return Err(Error::config("x_min, x_max", format!("empty domain [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, n_cells, boundary })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    /// Index of the left/right neighbour, `None` past a free-outflow edge.
    fn left(&self, j: usize) -> Option<usize> {
        match (j, self.boundary) {
            (0, Boundary::Periodic) => Some(self.n_cells - 1),
            (0, Boundary::FreeOutflow) => None,
            _ => Some(j - 1),
        }
    }

    fn right(&self, j: usize) -> Option<usize> {
        match (j + 1 == self.n_cells, self.boundary) {
            (true, Boundary::Periodic) => Some(0),
            (true, Boundary::FreeOutflow) => None,
            _ => Some(j + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonModel {
    Constant(f64),
    /// Density- and gradient-dependent rate with threshold `cap` on the density branch.
    Variable { cap: f64 },
}

impl EpsilonModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsilonModel::Constant(e) if e.is_finite() && e > 0.0 => Ok(()),
            EpsilonModel::Constant(e) => Err(Error::config("eps.value", format!("must be positive, got {e}"))),
            EpsilonModel::Variable { cap } if cap > 0.0 && cap < 1.0 => Ok(()),
            EpsilonModel::Variable { cap } => Err(Error::config("eps.cap", format!("must lie in (0, 1), got {cap}"))),
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, EpsilonModel::Variable { .. })
    }
}

/// `eps(rho, rho_x) = 1 / max{ 1/(1 - min(rho, cap)^2), 1 + max(rho_x, 0)^2 }`
pub fn eval_epsilon(model: &EpsilonModel, rho: f64, rho_x: f64) -> f64 {
    match *model {
        EpsilonModel::Constant(e) => e,
        EpsilonModel::Variable { cap } => {
            let m = rho.min(cap);
            let g = rho_x.max(0.0);
            1.0 / (1.0 / (1.0 - m * m)).max(1.0 + g * g)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    /// Dissipation `alpha = max |a|` over the two cells of each interface.
    Local,
    /// One dissipation coefficient, the largest speed on the grid, for all nodes.
    Global,
}

/// Distribution values on mesh x speed nodes, stored cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub mesh: Mesh1D,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl KineticField {
    pub fn zeros(mesh: Mesh1D, nodes: Vec<f64>) -> Self {
        let values = vec![0.0; mesh.n_cells * nodes.len()];
        Self { mesh, nodes, values }
    }

    /// Local Maxwellian at every cell centre for the density profile `rho0`.
    pub fn maxwellian(mesh: Mesh1D, table: &MaxwellianTable, rho0: impl Fn(f64) -> f64) -> Result<Self> {
        let mut field = Self::zeros(mesh, table.nodes.clone());
        let n = field.n_speeds();
        for (j, cell) in field.values.chunks_mut(n).enumerate() {
            table.maxwellian_into(rho0(mesh.center(j)), cell)?;
        }
        Ok(field)
    }

    pub fn n_speeds(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let n = self.n_speeds();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn densities(&self) -> Vec<f64> {
        self.values.chunks(self.n_speeds()).map(|c| c.iter().sum()).collect()
    }

    pub fn fluxes(&self) -> Vec<f64> {
        self.values.chunks(self.n_speeds()).map(|c| moments_of(c, &self.nodes).flux).collect()
    }

    /// Total mass `dx * sum f`, summed in a fixed order.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.mesh.dx()
    }
}

/// Central-difference density gradient; one-sided at free-outflow edges.
pub fn gradient(mesh: &Mesh1D, rho: &[f64]) -> Vec<f64> {
    let dx = mesh.dx();
    (0..mesh.n_cells)
        .map(|j| match (mesh.left(j), mesh.right(j)) {
            (Some(l), Some(r)) => (rho[r] - rho[l]) / (2.0 * dx),
            (None, Some(r)) => (rho[r] - rho[j]) / dx,
            (Some(l), None) => (rho[j] - rho[l]) / dx,
            (None, None) => 0.0,
        })
        .collect()
}

pub fn compute_rho_x(field: &KineticField) -> Vec<f64> {
    gradient(&field.mesh, &field.densities())
}

/// Conservative LLF update of one scalar slice `u` with cell-wise advection
/// speed `speed(j)`. Writes the new values into `out`.
///
/// The interface flux is `((a_l + alpha) u_l + (a_r - alpha) u_r) / 2`; with
/// `alpha = |a|` and constant `a >= 0` it reduces to `a u_l` without roundoff.
pub(crate) fn llf_update(
    mesh: &Mesh1D,
    u: &[f64],
    speed: impl Fn(usize) -> f64,
    alpha_floor: f64,
    lambda: f64,
    flux_buf: &mut Vec<f64>,
    out: &mut [f64],
) {
    let n = mesh.n_cells;
    let interface = |ul: f64, al: f64, ur: f64, ar: f64| {
        let alpha = al.abs().max(ar.abs()).max(alpha_floor);
        0.5 * ((al + alpha) * ul + (ar - alpha) * ur)
    };
    // flux_buf[i] is the flux through the left face of cell i; index n is the right edge
    flux_buf.clear();
    for j in 0..n {
        let f = match mesh.left(j) {
            Some(l) => interface(u[l], speed(l), u[j], speed(j)),
            None => interface(u[j], speed(j), u[j], speed(j)),
        };
        flux_buf.push(f);
    }
    let right_edge = match mesh.boundary {
        Boundary::Periodic => flux_buf[0],
        Boundary::FreeOutflow => interface(u[n - 1], speed(n - 1), u[n - 1], speed(n - 1)),
    };
    flux_buf.push(right_edge);
    for j in 0..n {
        out[j] = u[j] - lambda * (flux_buf[j + 1] - flux_buf[j]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionModel {
    Boltzmann,
    Bgk,
    /// Collisionless transport only.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub collision: CollisionModel,
    pub eps: EpsilonModel,
    pub cfl: f64,
    pub flux: FluxKind,
    /// Floor of the penalisation coefficient `beta = max(rho, beta_min)`.
    pub beta_min: f64,
    pub overshoot: OvershootPolicy,
}

/// What to do when a cell density exceeds `rho_max` by more than [`OVERSHOOT_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OvershootPolicy {
    #[default]
    Abort,
    /// Keep integrating and count the offending steps in the diagnostics.
    Record,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { collision: CollisionModel::Boltzmann, eps: EpsilonModel::Constant(0.01), cfl: 0.9, flux: FluxKind::Global, beta_min: 0.1, overshoot: OvershootPolicy::Abort }
    }
}

/// Running conservation and positivity diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Largest `|mass_n - mass_0| / mass_0` seen at any step.
    pub max_mass_drift: f64,
    /// Largest per-cell density change caused by a collision step.
    pub max_collision_density_change: f64,
    pub negativity_events: usize,
    /// Steps after which some cell exceeded the density ceiling.
    pub overshoot_events: usize,
    pub max_density: f64,
}

impl Diagnostics {
    pub(crate) fn start(mass: f64, max_density: f64) -> Self {
        Self { dt_min: f64::INFINITY, initial_mass: mass, final_mass: mass, max_density, ..Default::default() }
    }

    pub(crate) fn record_step(&mut self, dt: f64, mass: f64, max_density: f64) {
        self.steps += 1;
        self.dt_min = self.dt_min.min(dt);
        self.dt_max = self.dt_max.max(dt);
        self.final_mass = mass;
        if self.initial_mass > 0.0 {
            self.max_mass_drift = self.max_mass_drift.max((mass - self.initial_mass).abs() / self.initial_mass);
        }
        self.max_density = self.max_density.max(max_density);
    }

    pub fn report(&self) -> String {
        format!(
            "steps = {}\ndt_min = {:e}\ndt_max = {:e}\ninitial_mass = {:.17e}\nfinal_mass = {:.17e}\nmax_relative_mass_drift = {:e}\nmax_collision_density_change = {:e}\nnegativity_events = {}\novershoot_events = {}\nmax_density = {:.17e}\n",
            self.steps,
            self.dt_min,
            self.dt_max,
            self.initial_mass,
            self.final_mass,
            self.max_mass_drift,
            self.max_collision_density_change,
            self.negativity_events,
            self.overshoot_events,
            self.max_density
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub values: Vec<f64>,
    pub rho: Vec<f64>,
    pub flux: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Snapshot {
    pub fn speed(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.flux).map(|(&r, &q)| if r > 0.0 { q / r } else { 0.0 }).collect()
    }

    /// `x,rho,flux,u,eps` and optionally `f_0..`.
    pub fn write_csv<W: std::io::Write>(&self, mesh: &Mesh1D, with_nodes: bool, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = if self.rho.is_empty() { 0 } else { self.values.len() / self.rho.len() };
        let mut header: Vec<String> = ["x", "rho", "flux", "u", "eps"].iter().map(|s| s.to_string()).collect();
        if with_nodes {
            header.extend((0..n).map(|k| format!("f_{k}")));
        }
        wr.write_record(&header)?;
        let u = self.speed();
        for j in 0..self.rho.len() {
            let mut row = vec![sci(mesh.center(j)), sci(self.rho[j]), sci(self.flux[j]), sci(u[j]), sci(self.eps[j])];
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
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Diagnostics,
    pub field: KineticField,
}

/// Checks non-negativity and, when `abort_on_overshoot`, the density ceiling
/// of a cell-major buffer. Returns the largest cell density.
pub(crate) fn check_state(values: &[f64], n: usize, step: usize, rho_max: f64, abort_on_overshoot: bool) -> Result<f64> {
    let mut max_rho = 0.0f64;
    for (j, cell) in values.chunks(n).enumerate() {
        let mut rho = 0.0;
        for (k, &v) in cell.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Negativity { cell: j, node: k, step, value: v });
            }
            rho += v;
        }
        if abort_on_overshoot && rho > rho_max + OVERSHOOT_TOL {
            return Err(Error::Overshoot { cell: j, step, rho });
        }
        max_rho = max_rho.max(rho);
    }
    Ok(max_rho)
}

/// Sorted, de-duplicated output times ending at the final time.
pub(crate) fn normalize_times(times: &[f64]) -> Result<Vec<f64>> {
    let mut t: Vec<f64> = times.to_vec();
    if t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::config("output_times", "times must be finite and non-negative"));
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    if t.is_empty() {
        return Err(Error::config("output_times", "need at least one output time"));
    }
    Ok(t)
}

pub struct KineticSolver {
    pub params: ModelParams,
    pub tables: InteractionTables,
    pub table: Arc<MaxwellianTable>,
    pub opts: SolverOptions,
    scratch_in: Vec<f64>,
    scratch_out: Vec<f64>,
    flux_buf: Vec<f64>,
}

impl KineticSolver {
    pub fn new(params: ModelParams, table: Arc<MaxwellianTable>, opts: SolverOptions) -> Result<Self> {
        opts.eps.validate()?;
        if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
            return Err(Error::config("cfl", format!("must lie in (0, 1], got {}", opts.cfl)));
        }
        if table.n_speeds() != params.grid.len() {
            return Err(Error::config("table", "Maxwellian table does not match the velocity grid"));
        }
        let tables = InteractionTables::new(&params.grid);
        Ok(Self { params, tables, table, opts, scratch_in: Vec::new(), scratch_out: Vec::new(), flux_buf: Vec::new() })
    }

    /// Largest stable step for the mesh.
    pub fn max_dt(&self, mesh: &Mesh1D) -> f64 {
        self.opts.cfl * mesh.dx() / self.params.grid.v_max()
    }

    /// LLF transport of every speed node over `dt`.
    pub fn transport_step(&mut self, field: &mut KineticField, dt: f64) -> Result<()> {
        let mesh = field.mesh;
        let limit = mesh.dx() / self.params.grid.v_max();
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, required: limit });
        }
        let n = field.n_speeds();
        let nc = mesh.n_cells;
        let lambda = dt / mesh.dx();
        let alpha_floor = match self.opts.flux {
            FluxKind::Local => 0.0,
            FluxKind::Global => self.params.grid.v_max(),
        };
        self.scratch_in.resize(nc, 0.0);
        self.scratch_out.resize(nc, 0.0);
        for k in 0..n {
            for j in 0..nc {
                self.scratch_in[j] = field.values[j * n + k];
            }
            let v = field.nodes[k];
            llf_update(&mesh, &self.scratch_in, |_| v, alpha_floor, lambda, &mut self.flux_buf, &mut self.scratch_out);
            for j in 0..nc {
                field.values[j * n + k] = self.scratch_out[j];
            }
        }
        Ok(())
    }

    /// Per-cell relaxation rates from the current densities.
    pub fn epsilon_field(&self, field: &KineticField) -> Vec<f64> {
        let rho = field.densities();
        match self.opts.eps {
            EpsilonModel::Constant(e) => vec![e; rho.len()],
            model => {
                let grad = gradient(&field.mesh, &rho);
                rho.iter().zip(&grad).map(|(&r, &g)| eval_epsilon(&model, r, g)).collect()
            }
        }
    }

    /// Penalised Boltzmann step: the stiff part `beta (M - f)` is implicit, the
    /// remainder `Q - beta (M - f)` explicit. With the density frozen by the
    /// collisions both evaluations of `M` coincide and cancel, leaving
    /// `f' = (f + lambda (Q[f,f] + beta f)) / (1 + lambda beta)`, which is
    /// non-negative whenever `beta >= rho`.
    pub fn collision_step_boltzmann(&self, field: &mut KineticField, dt: f64, eps: &[f64]) -> f64 {
        let n = field.n_speeds();
        let (params, tables, beta_min) = (&self.params, &self.tables, self.opts.beta_min);
        field
            .values
            .par_chunks_mut(n)
            .zip(eps.par_iter())
            .map(|(cell, &e)| {
                let rho: f64 = cell.iter().sum();
                if rho == 0.0 {
                    return 0.0;
                }
                let mut q = vec![0.0; n];
                collision_with_probability(cell, params.prob_accel(rho), tables, &mut q);
                let lambda = dt / e;
                let beta = rho.max(beta_min);
                let denom = 1.0 + lambda * beta;
                for k in 0..n {
                    cell[k] = (cell[k] + lambda * (q[k] + beta * cell[k])) / denom;
                }
                (cell.iter().sum::<f64>() - rho).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Exact BGK relaxation `f' = M + (f - M) exp(-dt/eps)` per cell.
    pub fn collision_step_bgk(&self, field: &mut KineticField, dt: f64, eps: &[f64]) -> Result<f64> {
        bgk_relax(&self.table, &mut field.values, field.nodes.len(), dt, eps)
    }

    /// One transport + collision step. Returns the collision density change.
    pub fn step(&mut self, field: &mut KineticField, dt: f64) -> Result<(f64, Vec<f64>)> {
        self.transport_step(field, dt)?;
        let eps = self.epsilon_field(field);
        let change = match self.opts.collision {
            CollisionModel::Boltzmann => self.collision_step_boltzmann(field, dt, &eps),
            CollisionModel::Bgk => self.collision_step_bgk(field, dt, &eps)?,
            CollisionModel::None => 0.0,
        };
        Ok((change, eps))
    }

    /// Integrates to the last output time, recording a snapshot at each output
    /// time (steps are shortened to land on them exactly).
    pub fn run(&mut self, mut field: KineticField, output_times: &[f64]) -> Result<RunOutput> {
        let times = normalize_times(output_times)?;
        let n = field.n_speeds();
        let rho_max = self.params.rho_max;
        let mut diag = Diagnostics::start(field.mass(), check_state(&field.values, n, 0, rho_max, true)?);
        let abort = self.opts.overshoot == OvershootPolicy::Abort;
        let dt_cfl = self.max_dt(&field.mesh);
        let mut snapshots = Vec::with_capacity(times.len());
        let mut t = 0.0;
        let mut eps = self.epsilon_field(&field);
        for &t_out in &times {
            while t_out - t > 1e-12 * t_out.max(1.0) {
                let dt = dt_cfl.min(t_out - t);
                let (change, e) = self.step(&mut field, dt)?;
                eps = e;
                t += dt;
                let max_rho = check_state(&field.values, n, diag.steps + 1, rho_max, abort)?;
                if max_rho > rho_max + OVERSHOOT_TOL {
                    diag.overshoot_events += 1;
                }
                diag.max_collision_density_change = diag.max_collision_density_change.max(change);
                diag.record_step(dt, field.mass(), max_rho);
            }
            t = t.max(t_out);
            snapshots.push(Snapshot {
                t,
                step: diag.steps,
                values: field.values.clone(),
                rho: field.densities(),
                flux: field.fluxes(),
                eps: eps.clone(),
            });
        }
        Ok(RunOutput { snapshots, diagnostics: diag, field })
    }
}

/// Tabulated Maxwellian at `rho`; above `rho_max` the ceiling shape is scaled
/// to carry the cell's mass so relaxation still conserves density.
pub(crate) fn relaxation_target(table: &MaxwellianTable, rho: f64, m: &mut [f64]) -> Result<()> {
    table.maxwellian_into(rho.min(table.rho_max()), m)?;
    if rho > table.rho_max() {
        let s = rho / m.iter().sum::<f64>();
        m.iter_mut().for_each(|w| *w *= s);
    }
    Ok(())
}

/// Exact exponential relaxation towards the tabulated Maxwellian of each cell.
pub(crate) fn bgk_relax(table: &MaxwellianTable, values: &mut [f64], n: usize, dt: f64, eps: &[f64]) -> Result<f64> {
    values
        .par_chunks_mut(n)
        .zip(eps.par_iter())
        .map(|(cell, &e)| {
            let rho: f64 = cell.iter().sum();
            let mut m = vec![0.0; n];
            relaxation_target(table, rho, &mut m)?;
            let decay = (-dt / e).exp();
            for k in 0..n {
                cell[k] = m[k] + (cell[k] - m[k]) * decay;
            }
            Ok((cell.iter().sum::<f64>() - rho).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// First-order LLF solver for the scalar equilibrium law
/// `rho_t + F_eq(rho)_x = 0` with the tabulated flux. With [`FluxKind::Local`]
/// `alpha` is the maximum of `|F'_eq|` over the two cells of each interface;
/// [`FluxKind::Global`] uses the largest tabulated speed, which is what the
/// kinetic scheme reduces to when every cell is at equilibrium.
pub fn solve_equilibrium_law(
    mesh: &Mesh1D,
    table: &MaxwellianTable,
    rho0: &[f64],
    t_final: f64,
    cfl: f64,
    kind: FluxKind,
) -> Result<Vec<f64>> {
    let v_max = table.nodes.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let char_speed = crate::equilibrium::fundamental_diagram(table).char_speed;
    let h = table.d_rho();
    let dfdr = |rho: f64| {
        let s = (rho / h).clamp(0.0, (char_speed.len() - 1) as f64);
        let i = (s.floor() as usize).min(char_speed.len() - 2);
        let t = s - i as f64;
        (1.0 - t) * char_speed[i] + t * char_speed[i + 1]
    };
    let dt_cfl = cfl * mesh.dx();
    let n = mesh.n_cells;
    let mut rho = rho0.to_vec();
    let mut flux = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut t = 0.0;
    while t_final - t > 1e-12 * t_final.max(1.0) {
        let dt = dt_cfl.min(t_final - t);
        for j in 0..n {
            flux[j] = table.flux(rho[j].clamp(0.0, table.rho_max()))?;
            alpha[j] = match kind {
                FluxKind::Local => dfdr(rho[j]).abs(),
                FluxKind::Global => v_max,
            };
        }
        let face = |l: usize, r: usize| 0.5 * (flux[l] + flux[r]) - 0.5 * alpha[l].max(alpha[r]) * (rho[r] - rho[l]);
        let faces: Vec<f64> = (0..=n)
            .map(|i| match (i, mesh.boundary) {
                (0, Boundary::Periodic) => face(n - 1, 0),
                (0, Boundary::FreeOutflow) => face(0, 0),
                (i, Boundary::Periodic) if i == n => face(n - 1, 0),
                (i, Boundary::FreeOutflow) if i == n => face(n - 1, n - 1),
                (i, _) => face(i - 1, i),
            })
            .collect();
        let lambda = dt / mesh.dx();
        for j in 0..n {
            rho[j] -= lambda * (faces[j + 1] - faces[j]);
        }
        t += dt;
    }
    Ok(rho)
}
