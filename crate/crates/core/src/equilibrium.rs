//! Space-homogeneous equilibria (Maxwellians) of the Boltzmann operator,
//! tabulated over a density sweep, and the fundamental diagram derived from them.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinetic::{collision_with_probability, moments_of, InteractionTables, KineticState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    /// Convergence threshold on `||Q[f,f]||_inf`.
    pub tol: f64,
    pub max_steps: usize,
    /// Upper bound on the Euler step; the step is `min(0.9/rho, dt_cap)`.
    pub dt_cap: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_steps: 1_000_000, dt_cap: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxed {
    pub state: KineticState,
    pub steps: usize,
    pub residual: f64,
}

/// Integrates `df/dt = Q[f,f]` with explicit Euler until the collision residual
/// drops below `opts.tol`, then keeps stepping while the residual still halves
/// (at most [`POLISH_STEPS`] more steps) so the result is a fixed point to
/// near roundoff. The step `dt <= 0.9/rho` keeps the loss term from driving
/// any weight negative.
pub const POLISH_STEPS: usize = 1000;

pub fn relax_to_equilibrium(
    params: &ModelParams,
    tables: &InteractionTables,
    init: &KineticState,
    opts: &RelaxOptions,
) -> Result<Relaxed> {
    relax_at(params, tables, init, init.weights().iter().sum(), opts)
}

/// Relaxes with `P` frozen at `rho` rather than at the roundoff-perturbed
/// weight sum; near `rho_max` a power law with `gamma < 1` is too steep for that.
fn relax_at(
    params: &ModelParams,
    tables: &InteractionTables,
    init: &KineticState,
    rho: f64,
    opts: &RelaxOptions,
) -> Result<Relaxed> {
    let mut f = init.weights().to_vec();
    if rho > params.rho_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("density {rho} exceeds rho_max")));
    }
    if rho == 0.0 {
        return Ok(Relaxed { state: KineticState::zeros(f.len()), steps: 0, residual: 0.0 });
    }
    let p = params.prob_accel(rho);
    let dt = (0.9 / rho).min(opts.dt_cap);
    let mut q = vec![0.0; f.len()];
    let mut steps = 0;
    let euler = |f: &mut [f64], q: &[f64]| {
        for (w, dq) in f.iter_mut().zip(q) {
            *w = (*w + dt * dq).max(0.0);
        }
    };
    let mut residual;
    loop {
        collision_with_probability(&f, p, tables, &mut q);
        residual = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual <= opts.tol {
            break;
        }
        if steps >= opts.max_steps {
            return Err(Error::NonConvergence { rho, steps, residual });
        }
        euler(&mut f, &q);
        steps += 1;
    }
    let mut trial = f.clone();
    for _ in 0..POLISH_STEPS {
        euler(&mut trial, &q);
        collision_with_probability(&trial, p, tables, &mut q);
        let r = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r > 0.5 * residual {
            break;
        }
        f.copy_from_slice(&trial);
        residual = r;
    }
    // collision updates drift the sum by roundoff only; restore it exactly
    let drift: f64 = f.iter().sum::<f64>() / rho;
    f.iter_mut().for_each(|w| *w /= drift);
    Ok(Relaxed { state: KineticState::new(f)?, steps, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub n_rho: usize,
    pub relax: RelaxOptions,
    /// Start each density from the previous sample's Maxwellian (sequential).
    pub warm_start: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { n_rho: 101, relax: RelaxOptions::default(), warm_start: false }
    }
}

/// Maxwellians `M_f(v_k; rho_i)` on the uniform density samples `rho_i = i/(n_rho-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxwellianTable {
    pub nodes: Vec<f64>,
    pub rho_samples: Vec<f64>,
    pub maxwellians: Vec<KineticState>,
    pub f_eq: Vec<f64>,
    /// Mean speed; the vacuum sample holds the `rho -> 0` limit (extrapolated)
    /// so that derivatives near zero density stay consistent.
    pub u_eq: Vec<f64>,
    pub energy_eq: Vec<f64>,
    pub variance_eq: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Unit-mass limit of `M_f/rho` as `rho -> 0`; fixes the vacuum-end
    /// derivatives exactly (`F'(0) = <v>`, `E'(0) = <v^2>`).
    pub vacuum_shape: Option<Vec<f64>>,
    /// Provenance of the initial state handed to the relaxation.
    pub initializer: String,
}

pub fn build_maxwellian_table(params: &ModelParams, opts: &TableOptions) -> Result<MaxwellianTable> {
    if opts.n_rho < 3 {
        return Err(Error::config("n_rho", format!("need at least 3 samples, got {}", opts.n_rho)));
    }
    let n = params.grid.len();
    let tables = InteractionTables::new(&params.grid);
    let rho_samples: Vec<f64> =
        (0..opts.n_rho).map(|i| i as f64 / (opts.n_rho - 1) as f64 * params.rho_max).collect();

    let solve = |init: KineticState, rho: f64| relax_at(params, &tables, &init, rho, &opts.relax);
    let results: Vec<Result<Relaxed>> = if opts.warm_start {
        let mut out = Vec::with_capacity(rho_samples.len());
        let mut prev: Option<KineticState> = None;
        for &rho in &rho_samples {
            let init = match &prev {
                Some(m) if m.density() > 0.0 => {
                    let scale = rho / m.density();
                    KineticState::new(m.weights().iter().map(|w| w * scale).collect())?
                }
                _ => KineticState::uniform(n, rho),
            };
            let r = solve(init, rho);
            if let Ok(r) = &r {
                prev = Some(r.state.clone());
            }
            out.push(r);
        }
        out
    } else {
        rho_samples.par_iter().map(|&rho| solve(KineticState::uniform(n, rho), rho)).collect()
    };

    let mut failed = Vec::new();
    let mut maxwellians = Vec::with_capacity(results.len());
    let mut residuals = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                residuals.push(r.residual);
                maxwellians.push(r.state);
            }
            Err(Error::NonConvergence { residual, .. }) => failed.push((rho_samples[i], residual)),
            Err(e) => return Err(e),
        }
    }
    if let Some(&(rho, residual)) = failed.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        log::error!("{} density samples failed to converge: {:?}", failed.len(), failed);
        return Err(Error::NonConvergence { rho, steps: opts.relax.max_steps, residual });
    }
    let initializer = if opts.warm_start { "warm-start from previous sample" } else { "uniform in v" };
    let mut table = MaxwellianTable::from_parts(params.grid.nodes().to_vec(), rho_samples, maxwellians, residuals, initializer);
    table.set_vacuum_shape(vacuum_shape(params, &tables, &opts.relax)?);
    Ok(table)
}

/// Normalised equilibrium shape in the limit `rho -> 0`.
///
/// `Q` is quadratic, so `M = rho * s` with `s` a unit-mass fixed point of the
/// operator with `P` frozen at `P(rho)`; the limit shape only needs `P(0)`.
pub fn vacuum_shape(params: &ModelParams, tables: &InteractionTables, opts: &RelaxOptions) -> Result<Vec<f64>> {
    let n = params.grid.len();
    let p = params.prob_accel(0.0);
    let mut s = vec![1.0 / n as f64; n];
    let mut q = vec![0.0; n];
    for steps in 0..=opts.max_steps {
        collision_with_probability(&s, p, tables, &mut q);
        if q.iter().all(|v| v.abs() <= opts.tol) {
            let total: f64 = s.iter().sum();
            s.iter_mut().for_each(|w| *w /= total);
            return Ok(s);
        }
        if steps == opts.max_steps {
            let residual = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return Err(Error::NonConvergence { rho: 0.0, steps, residual });
        }
        for (w, dq) in s.iter_mut().zip(&q) {
            *w = (*w + 0.9 * dq).max(0.0);
        }
    }
    unreachable!()
}

impl MaxwellianTable {
    /// Assembles a table and derives all moment columns from the weights.
    /// The vacuum mean speed is extrapolated until a vacuum shape is set.
    pub fn from_parts(
        nodes: Vec<f64>,
        rho_samples: Vec<f64>,
        maxwellians: Vec<KineticState>,
        residuals: Vec<f64>,
        initializer: &str,
    ) -> Self {
        let m: Vec<_> = maxwellians.iter().map(|s| moments_of(s.weights(), &nodes)).collect();
        let mut u_eq: Vec<f64> = m.iter().map(|m| m.mean_speed).collect();
        if rho_samples[0] == 0.0 && u_eq.len() >= 4 {
            u_eq[0] = 3.0 * u_eq[1] - 3.0 * u_eq[2] + u_eq[3];
        }
        Self {
            f_eq: m.iter().map(|m| m.flux).collect(),
            energy_eq: m.iter().map(|m| m.energy).collect(),
            variance_eq: m.iter().map(|m| m.variance).collect(),
            u_eq,
            nodes,
            rho_samples,
            maxwellians,
            residuals,
            vacuum_shape: None,
            initializer: initializer.to_string(),
        }
    }

    pub fn set_vacuum_shape(&mut self, shape: Vec<f64>) {
        if self.rho_samples[0] == 0.0 {
            self.u_eq[0] = moments_of(&shape, &self.nodes).mean_speed;
        }
        self.vacuum_shape = Some(shape);
    }

    pub fn len(&self) -> usize {
        self.rho_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_samples.is_empty()
    }

    pub fn n_speeds(&self) -> usize {
        self.nodes.len()
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_samples[self.len() - 1]
    }

    pub fn d_rho(&self) -> f64 {
        self.rho_samples[1] - self.rho_samples[0]
    }

    /// Locates `rho` between samples: (lower index, weight of the upper sample).
    fn bracket(&self, rho: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.rho_samples[0], self.rho_max());
        if !(rho >= lo - 1e-12 && rho <= hi * (1.0 + 1e-8)) {
            return Err(Error::Domain(format!("density {rho} outside table range [{lo}, {hi}]")));
        }
        let s = ((rho - lo) / self.d_rho()).clamp(0.0, (self.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.len() - 2);
        Ok((i, s - i as f64))
    }

    /// Maxwellian at an arbitrary density: per-node linear interpolation between
    /// samples, rescaled so the weights sum to `rho` exactly.
    pub fn maxwellian_into(&self, rho: f64, out: &mut [f64]) -> Result<()> {
        let (i, t) = self.bracket(rho)?;
        let (a, b) = (self.maxwellians[i].weights(), self.maxwellians[i + 1].weights());
        let mut sum = 0.0;
        for k in 0..out.len() {
            out[k] = (1.0 - t) * a[k] + t * b[k];
            sum += out[k];
        }
        if sum > 0.0 {
            let scale = rho / sum;
            out.iter_mut().for_each(|w| *w *= scale);
        } else {
            out.iter_mut().for_each(|w| *w = 0.0);
        }
        Ok(())
    }

    pub fn maxwellian(&self, rho: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_speeds()];
        self.maxwellian_into(rho, &mut out)?;
        Ok(out)
    }

    fn interp(&self, column: &[f64], rho: f64) -> Result<f64> {
        let (i, t) = self.bracket(rho)?;
        Ok((1.0 - t) * column[i] + t * column[i + 1])
    }

    /// Equilibrium flux `F_eq(rho)` by linear interpolation.
    pub fn flux(&self, rho: f64) -> Result<f64> {
        self.interp(&self.f_eq, rho)
    }

    pub fn speed(&self, rho: f64) -> Result<f64> {
        self.interp(&self.u_eq, rho)
    }

    /// Derivative columns at every sample, see [`derivative_samples`].
    pub fn derivative_columns(&self) -> DerivativeColumns {
        let h = self.d_rho();
        let mut cols = DerivativeColumns {
            d_flux: derivative_samples(&self.f_eq, h),
            d_energy: derivative_samples(&self.energy_eq, h),
            d_variance: derivative_samples(&self.variance_eq, h),
            d_speed: derivative_samples(&self.u_eq, h),
        };
        if let (Some(shape), 0.0) = (&self.vacuum_shape, self.rho_samples[0]) {
            let m = moments_of(shape, &self.nodes);
            cols.d_flux[0] = m.flux;
            cols.d_energy[0] = m.energy;
            cols.d_variance[0] = m.variance;
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["rho".to_string()];
        header.extend((0..self.n_speeds()).map(|k| format!("v_{k}")));
        header.extend(["F_eq", "U_eq", "energy", "variance"].map(String::from));
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![sci(self.rho_samples[i])];
            row.extend(self.maxwellians[i].weights().iter().map(|&w| sci(w)));
            row.extend([self.f_eq[i], self.u_eq[i], self.energy_eq[i], self.variance_eq[i]].map(sci));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<maxwellian table>", e))?;
        Ok(())
    }

    /// Reads a table written by [`MaxwellianTable::write_csv`]; moment columns
    /// are recomputed from the weights.
    pub fn read_csv<R: Read>(r: R, nodes: &[f64]) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let n = nodes.len();
        let expected = n + 5;
        let mut rho_samples = Vec::new();
        let mut maxwellians = Vec::new();
        let mut u_vacuum = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != expected {
                return Err(Error::Domain(format!("row {}: expected {expected} columns, got {}", line + 2, rec.len())));
            }
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Domain(format!("row {}: {e}", line + 2)))?;
            if line == 0 {
                u_vacuum = Some(vals[n + 2]);
            }
            rho_samples.push(vals[0]);
            maxwellians.push(KineticState::new(vals[1..=n].to_vec())?);
        }
        if rho_samples.len() < 3 {
            return Err(Error::Domain("table needs at least 3 rows".into()));
        }
        let residuals = vec![f64::NAN; rho_samples.len()];
        let u_vacuum = u_vacuum.unwrap_or(0.0);
        let mut table = Self::from_parts(nodes.to_vec(), rho_samples, maxwellians, residuals, "read from csv");
        if table.rho_samples[0] == 0.0 {
            table.u_eq[0] = u_vacuum;
        }
        Ok(table)
    }
}

/// 17 significant digits, round-trip exact.
pub(crate) fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Central differences in the interior, second-order one-sided at both ends.
pub fn derivative_samples(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "need at least 3 samples");
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeColumns {
    pub d_flux: Vec<f64>,
    pub d_energy: Vec<f64>,
    pub d_variance: Vec<f64>,
    pub d_speed: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoDerivatives {
    pub d_flux: f64,
    pub d_energy: f64,
    pub d_variance: f64,
    pub d_speed: f64,
}

/// Density derivatives of the equilibrium moments. Exact sample values of the
/// difference formulas at table nodes, linear interpolation in between.
pub fn d_rho_moments(table: &MaxwellianTable, rho: f64) -> Result<RhoDerivatives> {
    if !(0.0..=table.rho_max()).contains(&rho) {
        return Err(Error::Domain(format!("density {rho} outside [0, {}]", table.rho_max())));
    }
    let cols = table.derivative_columns();
    Ok(cols.at(table, rho)?)
}

impl DerivativeColumns {
    pub fn at(&self, table: &MaxwellianTable, rho: f64) -> Result<RhoDerivatives> {
        let (i, t) = table.bracket(rho)?;
        let lerp = |c: &[f64]| if t == 0.0 { c[i] } else { (1.0 - t) * c[i] + t * c[i + 1] };
        Ok(RhoDerivatives {
            d_flux: lerp(&self.d_flux),
            d_energy: lerp(&self.d_energy),
            d_variance: lerp(&self.d_variance),
            d_speed: lerp(&self.d_speed),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalDiagram {
    pub rho_samples: Vec<f64>,
    pub flux: Vec<f64>,
    /// `F'_eq(rho)`, the characteristic speed of the equilibrium law.
    pub char_speed: Vec<f64>,
    pub rho_c: f64,
    pub capacity: f64,
}

pub fn fundamental_diagram(table: &MaxwellianTable) -> FundamentalDiagram {
    let flux = table.f_eq.clone();
    let h = table.d_rho();
    let char_speed = table.derivative_columns().d_flux;
    let imax = flux.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let (mut rho_c, mut capacity) = (table.rho_samples[imax], flux[imax]);
    if imax > 0 && imax + 1 < flux.len() {
        let (a, b, c) = (flux[imax - 1], flux[imax], flux[imax + 1]);
        let curv = a - 2.0 * b + c;
        if curv < 0.0 {
            let offset = 0.5 * (a - c) / curv;
            rho_c += offset * h;
            capacity = b - 0.25 * (a - c) * offset;
        }
    }
    FundamentalDiagram { rho_samples: table.rho_samples.clone(), flux, char_speed, rho_c, capacity }
}

impl FundamentalDiagram {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["rho", "F_eq", "dF_eq"])?;
        for i in 0..self.rho_samples.len() {
            wtr.write_record([sci(self.rho_samples[i]), sci(self.flux[i]), sci(self.char_speed[i])])?;
        }
        wtr.flush().map_err(|e| Error::io("<fundamental diagram>", e))?;
        Ok(())
    }

    /// Number of strict local maxima of the flux over the interior samples,
    /// treating plateaus of equal values as one.
    pub fn interior_maxima(&self) -> usize {
        let f = &self.flux;
        let mut count = 0;
        let mut i = 1;
        while i + 1 < f.len() {
            if f[i] > f[i - 1] {
                let mut j = i;
                while j + 1 < f.len() && f[j + 1] == f[i] {
                    j += 1;
                }
                if j + 1 < f.len() && f[j + 1] < f[i] {
                    count += 1;
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        count
    }
}
