//! Follow-the-leader / Bando vehicles on a ring road:
//! `x_i' = w_i - p(rho_i)`, `w_i' = (U_eq(rho_i) + p(rho_i) - w_i) / eps`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::sci;
use crate::error::{Error, Result};
use crate::solver::Mesh1D;
use crate::stability::{PressureFn, SpeedLaw};

/// How the pressure felt by each vehicle is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interaction {
    /// `p_i = p(l / headway_i)` evaluated from the current positions.
    PressureChain,
    /// `p_i` is its own state with `p_i' = -c (v_{i+1} - v_i) / headway^(gamma+1)`.
    Classical { c_gamma: f64, gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct MicroParams {
    pub pressure: PressureFn,
    pub u_eq: SpeedLaw,
    pub eps: f64,
    pub interaction: Interaction,
    pub vehicle_length: f64,
    pub ring_length: f64,
    pub v_max: f64,
}

impl MicroParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        self.pressure.validate()?;
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::config("micro.eps", format!("must be positive, got {}", self.eps)));
        }
        if !(self.vehicle_length > 0.0) {
            return Err(Error::config("vehicle_length", format!("must be positive, got {}", self.vehicle_length)));
        }
        if !(self.ring_length >= n as f64 * self.vehicle_length) {
            return Err(Error::config("ring_length", "ring shorter than the vehicles it carries"));
        }
        if let Interaction::Classical { c_gamma, gamma } = self.interaction {
            if !(c_gamma > 0.0 && gamma > 0.0) {
                return Err(Error::config("c_gamma, gamma", "both must be positive"));
            }
        }
        Ok(())
    }

    /// Classical interaction constant reproducing `p = c rho^m` exactly:
    /// `C = m c l^m`, exponent `m`.
    pub fn classical_for_power(&self) -> Option<Interaction> {
        match self.pressure {
            PressureFn::Power { c, m } => {
                Some(Interaction::Classical { c_gamma: m * c * self.vehicle_length.powf(m), gamma: m })
            }
            PressureFn::Table { .. } => None,
        }
    }
}

/// Vehicles ordered so that `i + 1` leads `i`; vehicle 0 leads the last one
/// across the ring. Positions are stored unwrapped (`x_0 < ... < x_{n-1} < x_0 + L`).
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleArray {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// Pressure state, used by [`Interaction::Classical`] only.
    pub p: Vec<f64>,
}

impl VehicleArray {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Front-to-front distance to the leader.
    pub fn headway(&self, i: usize, ring: f64) -> f64 {
        if i + 1 == self.x.len() {
            self.x[0] + ring - self.x[i]
        } else {
            self.x[i + 1] - self.x[i]
        }
    }

    pub fn wrapped(&self, i: usize, ring: f64) -> f64 {
        self.x[i].rem_euclid(ring)
    }
}

/// `rho_i = l / headway`, clipped to `[0, 1]`.
pub fn local_density(v: &VehicleArray, params: &MicroParams, i: usize) -> Result<f64> {
    let h = v.headway(i, params.ring_length);
    if !(h > 0.0) {
        return Err(Error::Collision { index: i, headway: h });
    }
    Ok((params.vehicle_length / h).min(1.0))
}

/// Equidistant vehicles at mean density `rho_bar` in equilibrium.
pub fn uniform_ring(params: &MicroParams, n: usize, rho_bar: f64) -> Result<VehicleArray> {
    if n < 2 {
        return Err(Error::config("n_vehicles", format!("need at least 2 vehicles, got {n}")));
    }
    let spacing = params.ring_length / n as f64;
    let x: Vec<f64> = (0..n).map(|i| i as f64 * spacing).collect();
    let w0 = params.u_eq.eval(rho_bar) + params.pressure.eval(rho_bar);
    Ok(VehicleArray { x, w: vec![w0; n], p: vec![params.pressure.eval(rho_bar); n] })
}

/// Vehicles at positions `x` (increasing, within one ring length) with every
/// `w_i` at the equilibrium `U_eq(rho_i) + p(rho_i)` of its own headway.
pub fn equilibrium_state(params: &MicroParams, x: Vec<f64>) -> Result<VehicleArray> {
    let n = x.len();
    let mut v = VehicleArray { x, w: vec![0.0; n], p: vec![0.0; n] };
    for i in 0..n {
        let rho = local_density(&v, params, i)?;
        v.p[i] = params.pressure.eval(rho);
        v.w[i] = params.u_eq.eval(rho) + v.p[i];
    }
    Ok(v)
}

/// Places `n` vehicles at the quantiles `(i + s) / n` of `rho0` on the mesh
/// extent (one shared offset `s` drawn from `seed`). Returns the vehicles in
/// equilibrium and the vehicle length `l = (integral of rho0) / n`.
pub fn sample_profile(
    rho0: impl Fn(f64) -> f64,
    mesh: &Mesh1D,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if n < 2 {
        return Err(Error::config("n_vehicles", format!("need at least 2 vehicles, got {n}")));
    }
    let sub = 20_000;
    let h = mesh.length() / sub as f64;
    let mut cdf = Vec::with_capacity(sub + 1);
    cdf.push(0.0);
    for k in 0..sub {
        let a = mesh.x_min + k as f64 * h;
        let c = cdf[k] + 0.5 * h * (rho0(a) + rho0(a + h));
        cdf.push(c);
    }
    let mass = cdf[sub];
    if !(mass > 0.0) {
        return Err(Error::config("rho0", "profile has no mass"));
    }
    let offset: f64 = ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..1.0);
    let mut x = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let target = (i as f64 + offset) / n as f64 * mass;
        while k + 1 < sub && cdf[k + 1] < target {
            k += 1;
        }
        let t = (target - cdf[k]) / (cdf[k + 1] - cdf[k]);
        x.push(mesh.x_min + (k as f64 + t) * h);
    }
    Ok((x, mass / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MicroStats {
    pub steps: usize,
    /// Speed evaluations that had to be clamped into `[0, v_max]`.
    pub clamp_events: usize,
}

pub struct MicroSim {
    pub params: MicroParams,
    pub state: VehicleArray,
    pub t: f64,
    pub stats: MicroStats,
}

struct Rates {
    dx: Vec<f64>,
    dw: Vec<f64>,
    dp: Vec<f64>,
}

impl MicroSim {
    pub fn new(params: MicroParams, state: VehicleArray) -> Result<Self> {
        params.validate(state.len())?;
        if state.len() < 2 || state.w.len() != state.len() || state.p.len() != state.len() {
            return Err(Error::config("vehicles", "need at least 2 vehicles with matching x, w, p"));
        }
        for i in 0..state.len() {
            local_density(&state, &params, i)?;
        }
        Ok(Self { params, state, t: 0.0, stats: MicroStats::default() })
    }

    /// `min(0.1 * min headway / v_max, eps / 5)`
    pub fn default_dt(&self) -> f64 {
        let ring = self.params.ring_length;
        let h = (0..self.state.len()).map(|i| self.state.headway(i, ring)).fold(f64::INFINITY, f64::min);
        (0.1 * h / self.params.v_max).min(self.params.eps / 5.0)
    }

    fn pressure_of(&self, s: &VehicleArray, i: usize, rho: f64) -> f64 {
        match self.params.interaction {
            Interaction::PressureChain => self.params.pressure.eval(rho),
            Interaction::Classical { .. } => s.p[i],
        }
    }

    /// Speeds actually driven, `clamp(w - p, 0, v_max)`.
    pub fn speeds(&self, s: &VehicleArray) -> Result<Vec<f64>> {
        let mut clamps = 0;
        self.speeds_counted(s, &mut clamps)
    }

    fn speeds_counted(&self, s: &VehicleArray, clamps: &mut usize) -> Result<Vec<f64>> {
        (0..s.len())
            .map(|i| {
                let rho = local_density(s, &self.params, i)?;
                let raw = s.w[i] - self.pressure_of(s, i, rho);
                let v = raw.clamp(0.0, self.params.v_max);
                if v != raw {
                    *clamps += 1;
                }
                Ok(v)
            })
            .collect()
    }

    fn rates(&self, s: &VehicleArray, clamps: &mut usize) -> Result<Rates> {
        let n = s.len();
        let v = self.speeds_counted(s, clamps)?;
        let mut dw = Vec::with_capacity(n);
        let mut dp = vec![0.0; n];
        for i in 0..n {
            let rho = local_density(s, &self.params, i)?;
            let p = self.pressure_of(s, i, rho);
            dw.push((self.params.u_eq.eval(rho) + p - s.w[i]) / self.params.eps);
            if let Interaction::Classical { c_gamma, gamma } = self.params.interaction {
                let lead = (i + 1) % n;
                dp[i] = -c_gamma * (v[lead] - v[i]) / s.headway(i, self.params.ring_length).powf(gamma + 1.0);
            }
        }
        Ok(Rates { dx: v, dw, dp })
    }

    fn advance(s: &VehicleArray, r: &Rates, h: f64) -> VehicleArray {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, d)| x + h * d).collect();
        VehicleArray { x: add(&s.x, &r.dx), w: add(&s.w, &r.dw), p: add(&s.p, &r.dp) }
    }

    /// One explicit midpoint step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        let mut clamps = 0;
        let k1 = self.rates(&self.state, &mut clamps)?;
        let mid = Self::advance(&self.state, &k1, 0.5 * dt);
        let k2 = self.rates(&mid, &mut clamps)?;
        let next = Self::advance(&self.state, &k2, dt);
        for i in 0..next.len() {
            local_density(&next, &self.params, i)?;
        }
        self.state = next;
        self.t += dt;
        self.stats.steps += 1;
        self.stats.clamp_events += clamps;
        Ok(())
    }

    /// Steps with [`MicroSim::default_dt`] (shortened to land on `t_end`).
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        while t_end - self.t > 1e-12 * t_end.max(1.0) {
            let dt = self.default_dt().min(t_end - self.t);
            self.step(dt)?;
        }
        Ok(())
    }

    pub fn mean_speed(&self) -> Result<f64> {
        let v = self.speeds(&self.state)?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Rows `t,i,x,v,w` for the current state (positions wrapped into the ring).
    pub fn write_trajectory_rows<W: Write>(&self, wr: &mut csv::Writer<W>) -> Result<()> {
        let v = self.speeds(&self.state)?;
        for i in 0..self.state.len() {
            wr.write_record([
                sci(self.t),
                i.to_string(),
                sci(self.state.wrapped(i, self.params.ring_length)),
                sci(v[i]),
                sci(self.state.w[i]),
            ])?;
        }
        Ok(())
    }
}

pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "i", "x", "v", "w"];

/// Per-cell `(rho, u)` by counting vehicles: `rho = l * count / dx`, `u` the
/// mean driven speed (0 in empty cells). The ring is mapped onto the mesh extent.
pub fn macro_profile(sim: &MicroSim, mesh: &Mesh1D) -> Result<(Vec<f64>, Vec<f64>)> {
    let ring = sim.params.ring_length;
    if (mesh.length() - ring).abs() > 1e-9 * ring {
        return Err(Error::config("ring_length", "ring length must equal the mesh extent"));
    }
    let v = sim.speeds(&sim.state)?;
    let mut count = vec![0usize; mesh.n_cells];
    let mut speed = vec![0.0; mesh.n_cells];
    for i in 0..sim.state.len() {
        let pos = mesh.x_min + (sim.state.x[i] - mesh.x_min).rem_euclid(ring);
        let j = (((pos - mesh.x_min) / mesh.dx()) as usize).min(mesh.n_cells - 1);
        count[j] += 1;
        speed[j] += v[i];
    }
    let l = sim.params.vehicle_length;
    let rho = count.iter().map(|&c| l * c as f64 / mesh.dx()).collect();
    let u = count.iter().zip(&speed).map(|(&c, &s)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    Ok((rho, u))
}
