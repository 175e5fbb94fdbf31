//! Time integration: the compressible system through its exact linear
//! propagator, the Duhamel fixed-point iteration, and the incompressible
//! reference flow.

use crate::error::{Error, Result};
use crate::linear::{mode_block, EtdWeights, HeatWeights, LinearParams, Scheme};
use crate::littlewood_paley::{bochner, DyadicFilterBank, Flavor, NormSpec, ShellProfile, TimeSeries, Truncation};
use crate::nonlinear::{advection, forcing, min_density, PressureLaw, VACUUM_FLOOR};
use crate::spectral::{derivative, helmholtz_p, DerivOp, FlowState, Grid, Rank, SpectralField};

/// Everything needed to advance a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub params: LinearParams,
    pub pressure: PressureLaw,
    pub grid: Grid,
    /// Step size; `None` selects [`default_dt`] from the initial state.
    pub dt: Option<f64>,
    /// Final time `T`.
    pub horizon: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
    pub vacuum_floor: f64,
    /// Abort when `‖v‖_{FB^{2/p-1}_{p,1}}` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Integrability index of the monitored norms.
    pub p: f64,
    /// Switch off `(𝒜, 𝒱_ε)`; the run is then the linear flow.
    pub nonlinear: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            params: LinearParams::default(),
            pressure: PressureLaw::default(),
            grid: Grid::default_box(),
            dt: None,
            horizon: 2.0,
            scheme: Scheme::Etdrk2,
            snapshot_stride: 10,
            vacuum_floor: VACUUM_FLOOR,
            blowup_factor: 1e3,
            p: 2.0,
            nonlinear: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.pressure.validate()?;
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Parameter(format!("dt = {dt} must be positive")));
            }
            if !(self.horizon >= dt) {
                return Err(Error::Parameter(format!(
                    "horizon {} must be at least dt = {dt}",
                    self.horizon
                )));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parameter(format!("horizon {} must be positive", self.horizon)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Parameter("snapshot_stride must be at least 1".into()));
        }
        if !(self.vacuum_floor >= 0.0 && self.vacuum_floor < 1.0) {
            return Err(Error::Parameter("vacuum_floor must lie in [0, 1)".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::Parameter("blowup_factor must exceed 1".into()));
        }
        if !(2.0..4.0).contains(&self.p) {
            return Err(Error::Parameter(format!("p = {} must lie in [2, 4)", self.p)));
        }
        Ok(())
    }

    /// Step size and step count that land exactly on the horizon.
    pub fn time_grid(&self, initial_v: &SpectralField) -> (f64, usize) {
        let target = self.dt.unwrap_or_else(|| default_dt(&self.grid, &self.params, initial_v));
        let n = (self.horizon / target - 1e-9).ceil().max(1.0) as usize;
        (self.horizon / n as f64, n)
    }
}

/// `0.25 (L/N) / max(1, ‖v‖_∞)`, clipped to a tenth of the shortest acoustic
/// period among retained modes.
pub fn default_dt(grid: &Grid, params: &LinearParams, v: &SpectralField) -> f64 {
    let vmax = v
        .to_samples()
        .map(|s| s.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .unwrap_or(0.0);
    let mut dt = 0.25 * grid.spacing() / vmax.max(1.0);
    let mut omega = 0.0f64;
    for idx in 0..grid.len() {
        if grid.is_retained(idx) && !grid.is_nyquist(idx) {
            let ev = mode_block(params, grid.wavevector(idx)).eigenvalues();
            omega = omega.max(ev[0].im.abs());
        }
    }
    if omega > 0.0 {
        dt = dt.min(0.1 * 2.0 * std::f64::consts::PI / omega);
    }
    dt
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    VacuumAbort,
    BlowupAbort,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::VacuumAbort => "vacuum_abort",
            RunStatus::BlowupAbort => "blowup_abort",
        }
    }
}

/// One row of `diagnostics.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub norm_a: f64,
    pub norm_eps_grad_a: f64,
    pub norm_v: f64,
    pub energy: f64,
    pub min_density: f64,
}

impl DiagRow {
    pub const HEADER: &'static str = "t,norm_a,norm_eps_grad_a,norm_v,energy,min_density";
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub series: TimeSeries<FlowState>,
    pub diagnostics: Vec<DiagRow>,
    pub status: RunStatus,
    pub dt: f64,
    pub steps: usize,
    pub message: Option<String>,
}

/// `‖f‖²_{L²}` through Parseval.
pub fn l2_squared(f: &SpectralField) -> f64 {
    f.l2_norm_squared() * f.grid().dual_cell()
}

/// `½(‖a‖² + ‖v‖² + κ‖ε∇a‖²)`.
pub fn flow_energy(state: &FlowState, params: &LinearParams) -> f64 {
    0.5 * (l2_squared(&state.a)
        + l2_squared(&state.v)
        + params.kappa * l2_squared(&state.eps_grad_a(params.eps)))
}

fn diag_row(bank: &DyadicFilterBank, t: f64, x: &FlowState, cfg: &SolverConfig) -> Result<DiagRow> {
    let spec = NormSpec::fourier_besov(2.0 / cfg.p - 1.0, cfg.p, 1.0);
    Ok(DiagRow {
        t,
        norm_a: bank.norm(&x.a, &spec)?,
        norm_eps_grad_a: bank.norm(&x.eps_grad_a(cfg.params.eps), &spec)?,
        norm_v: bank.norm(&x.v, &spec)?,
        energy: flow_energy(x, &cfg.params),
        min_density: min_density(&x.a, cfg.params.eps),
    })
}

fn nonlinear_forcing(x: &FlowState, cfg: &SolverConfig) -> Result<FlowState> {
    if cfg.nonlinear {
        forcing(x, &cfg.params, &cfg.pressure, cfg.vacuum_floor)
    } else {
        Ok(FlowState::zeros(*x.grid()))
    }
}

/// One step of `ẋ = -Mx - F(x)` with precomputed weights.
pub fn nsk_step(state: &FlowState, weights: &EtdWeights, cfg: &SolverConfig) -> Result<FlowState> {
    let f0 = nonlinear_forcing(state, cfg)?;
    match cfg.scheme {
        Scheme::ExpEuler => weights.step(state, &f0, None),
        Scheme::Etdrk2 => {
            let pred = weights.step(state, &f0, None)?;
            let f1 = nonlinear_forcing(&pred, cfg)?;
            weights.step(state, &f0, Some(&f1))
        }
    }
}

/// Callback invoked with `(step, t, state)` at `t = 0` and after every step.
pub type Observer<'a> = dyn FnMut(usize, f64, &FlowState) -> Result<()> + 'a;

/// Integrate to the horizon or to an abort.
pub fn nsk_solve(initial: &FlowState, cfg: &SolverConfig) -> Result<RunResult> {
    nsk_solve_with(initial, cfg, &mut |_, _, _| Ok(()))
}

pub fn nsk_solve_with(
    initial: &FlowState,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<RunResult> {
    cfg.validate()?;
    if !initial.grid().same_as(&cfg.grid) {
        return Err(Error::GridMismatch);
    }
    let bank = DyadicFilterBank::new(cfg.grid)?;
    let (dt, steps) = cfg.time_grid(&initial.v);
    let weights = EtdWeights::new(cfg.grid, cfg.params, dt)?;
    let mut series = TimeSeries::default();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    let mut x = initial.clone();
    let first = diag_row(&bank, 0.0, &x, cfg)?;
    let ceiling = cfg.blowup_factor * first.norm_v;
    let abort = |status: RunStatus, msg: String, series, diagnostics, k| RunResult {
        series,
        diagnostics,
        status,
        dt,
        steps: k,
        message: Some(msg),
    };
    diagnostics.push(first);
    series.push(0.0, x.clone())?;
    if first.min_density <= cfg.vacuum_floor {
        let msg = format!("initial density {} at or below the vacuum floor", first.min_density);
        return Ok(abort(RunStatus::VacuumAbort, msg, series, diagnostics, 0));
    }
    observer(0, 0.0, &x)?;
    for k in 1..=steps {
        let t = k as f64 * dt;
        x = match nsk_step(&x, &weights, cfg) {
            Ok(y) => y,
            Err(e @ Error::Vacuum { .. }) => {
                return Ok(abort(RunStatus::VacuumAbort, e.to_string(), series, diagnostics, k - 1));
            }
            Err(e) => return Err(e),
        };
        let row = diag_row(&bank, t, &x, cfg)?;
        diagnostics.push(row);
        if k % cfg.snapshot_stride == 0 || k == steps {
            series.push(t, x.clone())?;
        }
        if !row.norm_v.is_finite() || (ceiling > 0.0 && row.norm_v > ceiling) {
            let msg = format!("velocity norm {} exceeded ceiling {ceiling} at t = {t}", row.norm_v);
            if series.last().map(|(s, _)| s) != Some(t) {
                series.push(t, x.clone())?;
            }
            return Ok(abort(RunStatus::BlowupAbort, msg, series, diagnostics, k));
        }
        if row.min_density <= cfg.vacuum_floor {
            let msg = format!("density {} at or below the vacuum floor at t = {t}", row.min_density);
            return Ok(abort(RunStatus::VacuumAbort, msg, series, diagnostics, k));
        }
        observer(k, t, &x)?;
    }
    Ok(RunResult {
        series,
        diagnostics,
        status: RunStatus::Completed,
        dt,
        steps,
        message: None,
    })
}

/// Shell profiles entering the `Z_T` norm at one instant.
#[derive(Clone, Debug)]
pub struct ZProfiles {
    pub a: ShellProfile,
    pub eps_grad_a: ShellProfile,
    pub v: ShellProfile,
}

pub fn z_profiles(bank: &DyadicFilterBank, x: &FlowState, eps: f64, p: f64) -> Result<ZProfiles> {
    let fb = Flavor::FourierBesov;
    Ok(ZProfiles {
        a: bank.profile(&x.a, fb, p)?,
        eps_grad_a: bank.profile(&x.eps_grad_a(eps), fb, p)?,
        v: bank.profile(&x.v, fb, p)?,
    })
}

/// `‖a‖_{L²FB^{2/p}} + ‖ε∇a‖_{L²FB^{2/p}} + ‖ε∇a‖_{L^∞FB^{2/p-1}}
///  + ‖v‖_{L²FB^{2/p}} + ‖v‖_{L¹FB^{2/p+1}}`, all with `σ = 1`.
pub fn z_norm(times: &[f64], profiles: &[ZProfiles], p: f64) -> Result<f64> {
    let s = 2.0 / p;
    let none = Truncation::None;
    let pick = |f: fn(&ZProfiles) -> &ShellProfile| -> Vec<ShellProfile> {
        profiles.iter().map(|z| f(z).clone()).collect()
    };
    let (pa, pg, pv) = (pick(|z| &z.a), pick(|z| &z.eps_grad_a), pick(|z| &z.v));
    Ok(bochner(times, &pa, s, 2.0, 1.0, none)?
        + bochner(times, &pg, s, 2.0, 1.0, none)?
        + bochner(times, &pg, s - 1.0, f64::INFINITY, 1.0, none)?
        + bochner(times, &pv, s, 2.0, 1.0, none)?
        + bochner(times, &pv, s + 1.0, 1.0, 1.0, none)?)
}

/// `Z_T` norm of a trajectory sampled at `times`.
pub fn trajectory_z_norm(
    bank: &DyadicFilterBank,
    times: &[f64],
    traj: &[FlowState],
    eps: f64,
    p: f64,
) -> Result<f64> {
    let prof = traj
        .iter()
        .map(|x| z_profiles(bank, x, eps, p))
        .collect::<Result<Vec<_>>>()?;
    z_norm(times, &prof, p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    pub times: Vec<f64>,
    /// Final iterate.
    pub trajectory: Vec<FlowState>,
    /// `Z_T` norm of each iterate, starting with the linear flow.
    pub norms: Vec<f64>,
    /// `d(x_{k+1}, x_k)` in `Z_T`.
    pub distances: Vec<f64>,
    /// `d(x_{k+1}, x_k) / d(x_k, x_{k-1})`.
    pub ratios: Vec<f64>,
    pub contracted: bool,
    pub iterations: usize,
}

/// Apply the discrete Duhamel map to a trajectory: the forcing of `x` is
/// integrated against the exact propagator with linear interpolation in time.
pub fn duhamel_map(
    initial: &FlowState,
    traj: &[FlowState],
    weights: &EtdWeights,
    cfg: &SolverConfig,
) -> Result<Vec<FlowState>> {
    let f: Vec<FlowState> = traj
        .iter()
        .map(|x| nonlinear_forcing(x, cfg))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(traj.len());
    out.push(initial.clone());
    for k in 1..traj.len() {
        let next = weights.step(&out[k - 1], &f[k - 1], Some(&f[k]))?;
        out.push(next);
    }
    Ok(out)
}

/// Relative `Z_T` distance at which successive Picard iterates count as equal.
pub const PICARD_ROUNDOFF: f64 = 1e-14;

/// Picard iteration `x_{k+1} = Φ[x_k]` from the linear trajectory, on the
/// time grid [`nsk_solve`] would use. Iteration stops once successive iterates
/// agree to [`PICARD_ROUNDOFF`]; that last distance is recorded but forms no
/// ratio, since it measures rounding rather than contraction.
pub fn picard_iterate(initial: &FlowState, cfg: &SolverConfig, n_iters: usize) -> Result<PicardReport> {
    cfg.validate()?;
    let bank = DyadicFilterBank::new(cfg.grid)?;
    let (dt, steps) = cfg.time_grid(&initial.v);
    let weights = EtdWeights::new(cfg.grid, cfg.params, dt)?;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let (eps, p) = (cfg.params.eps, cfg.p);
    let mut x = Vec::with_capacity(steps + 1);
    x.push(initial.clone());
    for k in 1..=steps {
        let next = weights.propagate(&x[k - 1]);
        x.push(next);
    }
    let mut norms = vec![trajectory_z_norm(&bank, &times, &x, eps, p)?];
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut above_one = 0;
    let mut contracted = true;
    let mut iterations = 0;
    for _ in 0..n_iters {
        let y = duhamel_map(initial, &x, &weights, cfg)?;
        iterations += 1;
        let diff: Vec<FlowState> = y
            .iter()
            .zip(&x)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        let d = trajectory_z_norm(&bank, &times, &diff, eps, p)?;
        norms.push(trajectory_z_norm(&bank, &times, &y, eps, p)?);
        x = y;
        let converged = d <= PICARD_ROUNDOFF * norms.last().copied().unwrap_or(0.0);
        if converged {
            distances.push(d);
            break;
        }
        if let Some(&prev) = distances.last() {
            let r: f64 = if prev > 0.0 { d / prev } else { 0.0 };
            ratios.push(r);
            above_one = if r > 1.0 { above_one + 1 } else { 0 };
        }
        distances.push(d);
        if above_one >= 3 {
            contracted = false;
            break;
        }
    }
    Ok(PicardReport {
        times,
        trajectory: x,
        norms,
        distances,
        ratios,
        contracted,
        iterations,
    })
}

/// `F(w) = -ℙ[(w·∇)w]`.
pub fn ns_forcing(w: &SpectralField) -> Result<SpectralField> {
    Ok(helmholtz_p(&advection(w)?)?.scale(-1.0))
}

/// One exponential step of `∂ₜw - μΔw = -ℙ[(w·∇)w]`.
pub fn ns_step(w: &SpectralField, weights: &HeatWeights, scheme: Scheme) -> Result<SpectralField> {
    let f0 = ns_forcing(w)?;
    let pred = weights.step(w, Some(&f0), None);
    match scheme {
        Scheme::ExpEuler => Ok(pred),
        Scheme::Etdrk2 => {
            let f1 = ns_forcing(&pred)?;
            Ok(weights.step(w, Some(&f0), Some(&f1)))
        }
    }
}

/// Per-step energy bookkeeping of the incompressible run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsEnergyRow {
    pub t: f64,
    /// `½‖w‖²`.
    pub energy: f64,
    /// `μ‖∇w‖²`.
    pub dissipation: f64,
    /// `|ΔE + h(D₀+D₁)/2| / (h(D₀+D₁)/2)` over the step ending at `t`; 0 on the first row.
    pub residual: f64,
    /// `‖div w‖_∞`.
    pub max_div: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NsRun {
    pub series: TimeSeries<SpectralField>,
    pub energy: Vec<NsEnergyRow>,
    pub status: RunStatus,
    pub dt: f64,
    pub steps: usize,
}

impl NsRun {
    pub fn max_div(&self) -> f64 {
        self.energy.iter().fold(0.0, |m, r| m.max(r.max_div))
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.energy.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

fn ns_row(w: &SpectralField, mu: f64, t: f64) -> Result<NsEnergyRow> {
    let grad2: f64 = (0..2)
        .map(|c| Ok(l2_squared(&derivative(&w.component_field(c), DerivOp::Grad)?)))
        .sum::<Result<f64>>()?;
    let div = derivative(w, DerivOp::Div)?.to_samples()?;
    Ok(NsEnergyRow {
        t,
        energy: 0.5 * l2_squared(w),
        dissipation: mu * grad2,
        residual: 0.0,
        max_div: div.iter().fold(0.0, |m, x| m.max(x.abs())),
    })
}

/// Divergence-free tolerance on the initial velocity.
pub const DIV_TOL: f64 = 1e-10;

/// Incompressible reference run with the viscosity `μ` and time grid of `cfg`.
pub fn ns_solve(w0: &SpectralField, cfg: &SolverConfig) -> Result<NsRun> {
    ns_solve_with(w0, cfg, &mut |_, _, _| Ok(()))
}

pub fn ns_solve_with(
    w0: &SpectralField,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(usize, f64, &SpectralField) -> Result<()>,
) -> Result<NsRun> {
    cfg.validate()?;
    if w0.rank() != Rank::Vector2 {
        return Err(Error::Rank("incompressible run needs a vector field".into()));
    }
    let mu = cfg.params.mu;
    let first = ns_row(w0, mu, 0.0)?;
    if first.max_div > DIV_TOL {
        return Err(Error::Parameter(format!(
            "initial velocity has divergence {} above {DIV_TOL}",
            first.max_div
        )));
    }
    let (dt, steps) = cfg.time_grid(w0);
    let hw = HeatWeights::new(*w0.grid(), mu, dt)?;
    let bank = DyadicFilterBank::new(*w0.grid())?;
    let spec = NormSpec::fourier_besov(2.0 / cfg.p - 1.0, cfg.p, 1.0);
    let ceiling = cfg.blowup_factor * bank.norm(w0, &spec)?;
    let mut series = TimeSeries::default();
    series.push(0.0, w0.clone())?;
    let mut rows = vec![first];
    let mut w = w0.clone();
    observer(0, 0.0, &w)?;
    for k in 1..=steps {
        let t = k as f64 * dt;
        w = ns_step(&w, &hw, cfg.scheme)?;
        let mut row = ns_row(&w, mu, t)?;
        let prev = rows[k - 1];
        let diss = 0.5 * dt * (prev.dissipation + row.dissipation);
        row.residual = if diss > 0.0 {
            ((row.energy - prev.energy) + diss).abs() / diss
        } else {
            (row.energy - prev.energy).abs()
        };
        rows.push(row);
        if k % cfg.snapshot_stride == 0 || k == steps {
            series.push(t, w.clone())?;
        }
        let n = bank.norm(&w, &spec)?;
        if !n.is_finite() || (ceiling > 0.0 && n > ceiling) {
            return Ok(NsRun {
                series,
                energy: rows,
                status: RunStatus::BlowupAbort,
                dt,
                steps: k,
            });
        }
        observer(k, t, &w)?;
    }
    Ok(NsRun {
        series,
        energy: rows,
        status: RunStatus::Completed,
        dt,
        steps,
    })
}

/// Single-shell solenoidal field `(sin k₁x cos k₂y, -(k₁/k₂) cos k₁x sin k₂y)` with unit peak.
pub fn taylor_green(grid: Grid, m1: usize, m2: usize, amplitude: f64) -> Result<SpectralField> {
    let k1 = 2.0 * std::f64::consts::PI * m1 as f64 / grid.side();
    let k2 = 2.0 * std::f64::consts::PI * m2 as f64 / grid.side();
    let n = grid.len();
    let mut s = vec![0.0; 2 * n];
    for i in 0..n {
        let [x, y] = grid.position(i);
        s[i] = amplitude * (k1 * x).sin() * (k2 * y).cos();
        s[n + i] = -amplitude * (k1 / k2) * (k1 * x).cos() * (k2 * y).sin();
    }
    let w = SpectralField::from_samples(grid, Rank::Vector2, &s)?;
    // remove rounding-level divergence
    helmholtz_p(&w)
}
