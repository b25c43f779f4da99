//! Strang splitting `N(dt/2) L(dt) N(dt/2)` for `i u_t + Δu + μ w |u|^α u = 0`.
//!
//! `L` is exact on Cartesian grids (a phase per Fourier mode) and
//! Crank–Nicolson on radial grids; `N` is the exact pointwise flow
//! `u ↦ u·exp(iμ w |u|^α τ)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{InlsError, Result};
use crate::field::{
    abs_pow, forward, gradient_sq_integral, inverse, ordered_sum, sup_abs, FieldState, Grid, RadialLaplacian,
    SingularWeight,
};
use crate::model::ModelParams;

/// Default cap on `‖∇u(t)‖² / ‖∇u(0)‖²`.
pub const DEFAULT_KINETIC_RATIO_CAP: f64 = 1e3;
/// Default cap on `sup |u|`; also the overflow guard of the nonlinear substep.
pub const DEFAULT_SUP_CAP: f64 = 1e8;
/// Halvings allowed before a run is declared blow-up-suspected.
pub const MAX_HALVINGS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    /// Radius where damping starts, as a fraction of the half width.
    pub inner_fraction: f64,
    /// Damping rate at the boundary: the mask there is `1 − strength·dt`.
    pub strength: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DtControl {
    Off,
    /// Reject and halve the step when ‖∇u‖² grows by at least `gamma` in it.
    Halve {
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub kinetic_ratio: f64,
    pub sup_abs: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            kinetic_ratio: DEFAULT_KINETIC_RATIO_CAP,
            sup_abs: DEFAULT_SUP_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    /// Step size magnitude; the direction follows `t_end − t0`.
    pub dt: f64,
    /// Absolute end time.
    pub t_end: f64,
    pub sponge: Option<Sponge>,
    pub dt_control: DtControl,
    /// Steps of size `dt` between probe calls.
    pub checkpoint_stride: usize,
    pub caps: Caps,
    /// 2/3-rule truncation before every nonlinear substep.
    pub dealias: bool,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            sponge: None,
            dt_control: DtControl::Off,
            checkpoint_stride: 1,
            caps: Caps::default(),
            dealias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("evolve: dt = {} must be positive", self.dt));
        }
        if !self.t_end.is_finite() {
            errs.push("evolve: t_end must be finite".to_string());
        }
        if self.checkpoint_stride == 0 {
            errs.push("evolve: checkpoint_stride must be at least 1".to_string());
        }
        if let Some(s) = self.sponge {
            if !(s.inner_fraction > 0.0 && s.inner_fraction < 1.0) {
                errs.push(format!(
                    "evolve: sponge inner fraction {} outside (0, 1)",
                    s.inner_fraction
                ));
            }
            if !(s.strength >= 0.0) || s.strength * self.dt > 1.0 {
                errs.push(format!("evolve: sponge strength {} must lie in [0, 1/dt]", s.strength));
            }
        }
        if let DtControl::Halve { gamma } = self.dt_control {
            if !(gamma > 1.0) {
                errs.push(format!("evolve: dt-control gamma {gamma} must exceed 1"));
            }
        }
        if !(self.caps.kinetic_ratio > 1.0) || !(self.caps.sup_abs > 0.0) {
            errs.push("evolve: caps must be positive (kinetic ratio > 1)".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(InlsError::Config(errs))
        }
    }
}

/// `û(k) ← e^{−i|k|²τ} û(k)`: the free flow `e^{iτΔ}` (Crank–Nicolson on
/// radial grids).
pub fn linear_substep(u: &mut FieldState, tau: f64) -> Result<()> {
    if tau == 0.0 {
        return Ok(());
    }
    let lin = Linear::new(u.grid(), tau)?;
    lin.apply(u);
    Ok(())
}

/// `u ← u·exp(iμ w |u|^α τ)`, refusing fields above [`DEFAULT_SUP_CAP`].
pub fn nonlinear_substep(u: &mut FieldState, w: &SingularWeight, params: &ModelParams, tau: f64) -> Result<()> {
    nonlinear_substep_guarded(u, w, params, tau, DEFAULT_SUP_CAP)
}

pub fn nonlinear_substep_guarded(
    u: &mut FieldState,
    w: &SingularWeight,
    params: &ModelParams,
    tau: f64,
    guard: f64,
) -> Result<()> {
    u.check_same_grid(w.grid())?;
    let sup = sup_abs(u);
    if !sup.is_finite() {
        return Err(InlsError::NumericalFailure(u.time()));
    }
    if sup > guard {
        return Err(InlsError::BlowUpOverflow { sup, time: u.time() });
    }
    let alpha = params.alpha();
    let scale = params.mu() * tau;
    u.samples_mut()
        .par_iter_mut()
        .zip(w.samples().par_iter())
        .for_each(|(z, &wi)| {
            let amp = abs_pow(*z, alpha);
            if amp > 0.0 {
                *z *= Complex64::cis(scale * wi * amp);
            }
        });
    Ok(())
}

/// Zeroes every Fourier mode with some |k_j| above two thirds of the grid's
/// band limit.
pub fn dealias(u: &mut FieldState) -> Result<()> {
    let grid = u.grid().clone();
    grid.require_cartesian("dealiasing")?;
    let k_cut = 2.0 / 3.0 * std::f64::consts::PI / grid.spacing();
    let ks = grid.wavenumbers();
    let data = u.samples_mut();
    forward(&grid, data);
    data.par_iter_mut().enumerate().for_each(|(i, z)| {
        let m = grid.unravel(i);
        if (0..grid.dims()).any(|a| ks[m[a]].abs() > k_cut) {
            *z = Complex64::new(0.0, 0.0);
        }
    });
    inverse(&grid, data);
    Ok(())
}

/// Multiplies u by `1 − strength·dt·S((|x| − r_in)/(L − r_in))`, with S the
/// quintic smoothstep; the mask is 1 inside `r_in` and never exceeds 1.
pub fn apply_sponge(u: &mut FieldState, sponge: &Sponge, dt: f64) {
    let mask = sponge_mask(u.grid(), sponge, dt);
    u.samples_mut()
        .par_iter_mut()
        .zip(mask.par_iter())
        .for_each(|(z, &m)| *z *= m);
}

fn sponge_mask(grid: &Grid, sponge: &Sponge, dt: f64) -> Vec<f64> {
    let l = grid.half_width();
    let r_in = sponge.inner_fraction * l;
    let depth = sponge.strength * dt.abs();
    (0..grid.len())
        .map(|i| {
            let r = grid.radius_sq(i).sqrt();
            1.0 - depth * crate::groundstate::smoothstep((r - r_in) / (l - r_in))
        })
        .collect()
}

enum Linear {
    Spectral(Vec<Complex64>),
    Radial(RadialLaplacian),
}

impl Linear {
    fn new(grid: &Grid, tau: f64) -> Result<Self> {
        if grid.is_radial() {
            Ok(Linear::Radial(RadialLaplacian::new(grid, tau)?))
        } else {
            Ok(Linear::Spectral(
                grid.k_squared()
                    .par_iter()
                    .map(|&k2| Complex64::cis(-k2 * tau))
                    .collect(),
            ))
        }
    }

    /// Applies the flow and returns ‖∇u‖² of the result.
    fn apply(&self, u: &mut FieldState) -> f64 {
        match self {
            Linear::Spectral(phase) => {
                let grid = u.grid().clone();
                let data = u.samples_mut();
                forward(&grid, data);
                data.par_iter_mut().zip(phase.par_iter()).for_each(|(z, p)| *z *= p);
                // the phase leaves |û| alone, so the kinetic term is free here
                let k2 = grid.k_squared();
                let kinetic =
                    ordered_sum(data.len(), |i| k2[i] * data[i].norm_sqr()) * grid.cell_volume() / grid.len() as f64;
                inverse(&grid, data);
                kinetic
            }
            Linear::Radial(cn) => {
                cn.apply(u.samples_mut());
                gradient_sq_integral(u)
            }
        }
    }
}

/// One Strang step of fixed signed size, with the linear propagator cached.
pub struct Stepper<'a> {
    weight: &'a SingularWeight,
    params: ModelParams,
    dt: f64,
    linear: Linear,
    guard: f64,
    dealias: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &Grid, weight: &'a SingularWeight, params: &ModelParams, dt: f64) -> Result<Self> {
        Ok(Self {
            weight,
            params: *params,
            dt,
            linear: Linear::new(grid, dt)?,
            guard: DEFAULT_SUP_CAP,
            dealias: false,
        })
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn half_nonlinear(&self, u: &mut FieldState) -> Result<()> {
        if self.dealias {
            dealias(u)?;
        }
        nonlinear_substep_guarded(u, self.weight, &self.params, 0.5 * self.dt, self.guard)
    }

    /// Advances `u` by `dt` and returns ‖∇u‖² after the linear substep,
    /// which is what step control and the kinetic cap look at.
    pub fn step(&self, u: &mut FieldState) -> Result<f64> {
        self.half_nonlinear(u)?;
        let kinetic = self.linear.apply(u);
        self.half_nonlinear(u)?;
        u.set_time(u.time() + self.dt);
        if !u.is_finite() || !kinetic.is_finite() {
            return Err(InlsError::NumericalFailure(u.time()));
        }
        Ok(kinetic)
    }
}

/// Single Strang step `N(dt/2) L(dt) N(dt/2)`.
pub fn strang_step(u: &mut FieldState, w: &SingularWeight, params: &ModelParams, dt: f64) -> Result<()> {
    Stepper::new(u.grid(), w, params, dt)?.step(u).map(|_| ())
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeAction {
    Continue,
    Halt(String),
}

/// Receives the state at t0, at every checkpoint, and at a halt.
pub trait Probe {
    fn observe(&mut self, u: &FieldState) -> Result<ProbeAction>;
}

impl<F: FnMut(&FieldState) -> Result<ProbeAction>> Probe for F {
    fn observe(&mut self, u: &FieldState) -> Result<ProbeAction> {
        self(u)
    }
}

/// Probe that ignores everything.
pub struct NoProbe;

impl Probe for NoProbe {
    fn observe(&mut self, _: &FieldState) -> Result<ProbeAction> {
        Ok(ProbeAction::Continue)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HaltStatus {
    Completed,
    /// A kinetic or sup cap fired, or dt was halved too often.
    BlowUpSuspected {
        reason: String,
    },
    BlowUpOverflow {
        sup: f64,
    },
    NumericalFailure,
    ProbeHalt {
        reason: String,
    },
}

impl HaltStatus {
    pub fn is_blowup(&self) -> bool {
        matches!(
            self,
            HaltStatus::BlowUpSuspected { .. } | HaltStatus::BlowUpOverflow { .. }
        )
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub state: FieldState,
    pub status: HaltStatus,
    pub steps: u64,
    pub halvings: u32,
    pub final_dt: f64,
}

/// Evolves from `u0.time()` to `cfg.t_end`. Checkpoints fall every
/// `checkpoint_stride·dt` regardless of step halving.
pub fn evolve(
    u0: FieldState,
    cfg: &EvolveConfig,
    weight: &SingularWeight,
    params: &ModelParams,
    probe: &mut dyn Probe,
) -> Result<EvolveOutcome> {
    cfg.validate()?;
    u0.check_same_grid(weight.grid())?;
    let t0 = u0.time();
    let span = cfg.t_end - t0;
    let sign = if span < 0.0 { -1.0 } else { 1.0 };
    let total_steps = (span.abs() / cfg.dt).round() as u64;
    if ((total_steps as f64) * cfg.dt - span.abs()).abs() > 1e-9 * cfg.dt.max(span.abs()) {
        return Err(InlsError::Config(vec![format!(
            "evolve: t_end − t0 = {span} is not a multiple of dt = {}",
            cfg.dt
        )]));
    }

    // time is tracked in ticks of dt / 2^MAX_HALVINGS so checkpoints stay exact
    let full: u64 = 1 << MAX_HALVINGS;
    let end_tick = total_steps * full;
    let checkpoint_ticks = cfg.checkpoint_stride as u64 * full;
    let tick_dt = cfg.dt / full as f64;
    let time_at = |tick: u64| t0 + sign * tick_dt * tick as f64;

    let mut u = u0;
    let mut status = HaltStatus::Completed;
    let mut halvings = 0u32;
    let mut steps = 0u64;
    let mut tick = 0u64;
    let mut last_observed = 0u64;

    if let ProbeAction::Halt(reason) = probe.observe(&u)? {
        return Ok(EvolveOutcome {
            state: u,
            status: HaltStatus::ProbeHalt { reason },
            steps,
            halvings,
            final_dt: cfg.dt,
        });
    }
    if end_tick == 0 {
        return Ok(EvolveOutcome {
            state: u,
            status,
            steps,
            halvings,
            final_dt: cfg.dt,
        });
    }

    let kinetic0 = gradient_sq_integral(&u);
    let mut kinetic = kinetic0;
    let make = |h: u32| -> Result<(Stepper, Option<Vec<f64>>)> {
        let dt = sign * cfg.dt / (1u64 << h) as f64;
        let stepper = Stepper::new(weight.grid(), weight, params, dt)?
            .with_guard(cfg.caps.sup_abs)
            .with_dealias(cfg.dealias);
        let mask = cfg.sponge.map(|s| sponge_mask(weight.grid(), &s, dt));
        Ok((stepper, mask))
    };
    let (mut stepper, mut mask) = make(0)?;

    while tick < end_tick {
        let mut next = u.clone();
        let new_kinetic = match stepper.step(&mut next) {
            Ok(k) => k,
            Err(InlsError::BlowUpOverflow { sup, .. }) => {
                status = HaltStatus::BlowUpOverflow { sup };
                break;
            }
            Err(InlsError::NumericalFailure(_)) => {
                status = HaltStatus::NumericalFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(m) = &mask {
            next.samples_mut()
                .par_iter_mut()
                .zip(m.par_iter())
                .for_each(|(z, &f)| *z *= f);
        }
        if let DtControl::Halve { gamma } = cfg.dt_control {
            if kinetic > 0.0 && new_kinetic >= gamma * kinetic {
                if halvings == MAX_HALVINGS {
                    status = HaltStatus::BlowUpSuspected {
                        reason: format!("dt halved {MAX_HALVINGS} times"),
                    };
                    break;
                }
                halvings += 1;
                (stepper, mask) = make(halvings)?;
                continue;
            }
        }
        u = next;
        // keep the clock on the tick lattice rather than accumulating dt
        tick += full >> halvings;
        u.set_time(time_at(tick));
        steps += 1;
        kinetic = new_kinetic;

        let sup = sup_abs(&u);
        let cap_reason = if sup >= cfg.caps.sup_abs {
            Some(format!("sup|u| = {sup:.3e} reached the cap"))
        } else if kinetic0 > 0.0 && kinetic >= cfg.caps.kinetic_ratio * kinetic0 {
            Some(format!("kinetic ratio {:.3e} reached the cap", kinetic / kinetic0))
        } else {
            None
        };
        if let Some(reason) = cap_reason {
            status = HaltStatus::BlowUpSuspected { reason };
            break;
        }
        if tick.is_multiple_of(checkpoint_ticks) || tick == end_tick {
            last_observed = tick;
            if let ProbeAction::Halt(reason) = probe.observe(&u)? {
                status = HaltStatus::ProbeHalt { reason };
                break;
            }
        }
    }
    if status != HaltStatus::Completed && last_observed != tick && !matches!(status, HaltStatus::ProbeHalt { .. }) {
        probe.observe(&u)?;
    }
    Ok(EvolveOutcome {
        state: u,
        status,
        steps,
        halvings,
        final_dt: stepper.dt().abs(),
    })
}
