//! Reproducible studies built on the solvers and norm machinery.

use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{
    heat_maxreg_probe, log_log_fit, propagate, strichartz_probe, verify_decay, EtdWeights, HeatProbe,
    HeatWeights, LinearParams, Scheme, StrichartzSpec,
};
use crate::littlewood_paley::{
    chemin_lerner, random_band_field, DyadicFilterBank, Flavor, NormSpec, ShellProfile, Truncation,
};
use crate::nonlinear::{advection, composition_probe, Composition};
use crate::solvers::{
    ns_step, nsk_solve, nsk_solve_with, picard_iterate, RunStatus, SolverConfig,
};
use crate::spectral::{helmholtz_p, helmholtz_q, FlowState, Grid, Rank, SpectralField, C64};

/// Shell-weighted random spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataProfile {
    /// Target regularity `s₀`.
    pub s0: f64,
    /// Amplitude `A`; shell `j` carries `A 2^{-j(s₀+1)}`. The default gives
    /// physical peaks near 0.4 on the default box.
    pub amplitude: f64,
    pub j_lo: i32,
    pub j_hi: i32,
    /// Share of the velocity placed in its solenoidal part; `None` keeps the raw draw.
    pub solenoidal_fraction: Option<f64>,
    /// Integrability index used for the design target.
    pub p: f64,
}

impl Default for DataProfile {
    fn default() -> Self {
        Self {
            s0: 0.0,
            amplitude: 20.0,
            j_lo: -2,
            j_hi: 0,
            solenoidal_fraction: None,
            p: 2.0,
        }
    }
}

fn envelope(profile: &DataProfile, bank: &DyadicFilterBank) -> Result<Vec<f64>> {
    if profile.j_lo > profile.j_hi || profile.j_lo < bank.j_min() || profile.j_hi > bank.j_max() {
        return Err(Error::ShellIndex {
            j: if profile.j_lo < bank.j_min() { profile.j_lo } else { profile.j_hi },
            min: bank.j_min(),
            max: bank.j_max(),
        });
    }
    let grid = bank.grid();
    let mut env = vec![0.0; grid.len()];
    for j in profile.j_lo..=profile.j_hi {
        let w = profile.amplitude * (-(j as f64) * (profile.s0 + 1.0)).exp2();
        for (idx, m) in bank.multiplier(j)? {
            env[idx] += w * m;
        }
    }
    for (idx, e) in env.iter_mut().enumerate() {
        if !grid.is_retained(idx) || grid.is_nyquist(idx) {
            *e = 0.0;
        }
    }
    Ok(env)
}

/// Random field with `|f̂| = env · |z|`, `z` standard complex Gaussian, Hermitian.
fn gaussian_field(grid: Grid, env: &[f64], rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(grid, Rank::Scalar);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for idx in 0..grid.len() {
        let m = grid.mirror(idx);
        if m < idx {
            continue;
        }
        let g1: f64 = StandardNormal.sample(rng);
        let g2: f64 = StandardNormal.sample(rng);
        if env[idx] == 0.0 {
            continue;
        }
        if m == idx {
            f.coeffs_mut()[idx] = C64::new(env[idx] * g1, 0.0);
        } else {
            let z = C64::new(g1 * h, g2 * h) * env[idx];
            f.coeffs_mut()[idx] = z;
            f.coeffs_mut()[m] = z.conj();
        }
    }
    f
}

/// Random initial data `(a₀, v₀)` reproducible from `seed`.
pub fn synthesize_data(profile: &DataProfile, bank: &DyadicFilterBank, seed: u64) -> Result<FlowState> {
    let env = envelope(profile, bank)?;
    let grid = *bank.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_field(grid, &env, &mut rng);
    let v1 = gaussian_field(grid, &env, &mut rng);
    let v2 = gaussian_field(grid, &env, &mut rng);
    let mut v = SpectralField::vector(&v1, &v2)?;
    if let Some(f) = profile.solenoidal_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Parameter(format!("solenoidal fraction {f} outside [0, 1]")));
        }
        v = helmholtz_p(&v)?.scale(2.0 * f).add(&helmholtz_q(&v)?.scale(2.0 * (1.0 - f)))?;
    }
    FlowState::new(a, v)
}

/// Expected `‖a₀‖_{FB^{s₀}_{p,1}}`: the envelope norm times `(E|z|^{p'})^{1/p'}`.
pub fn design_target(profile: &DataProfile, bank: &DyadicFilterBank) -> Result<f64> {
    let env = envelope(profile, bank)?;
    let grid = *bank.grid();
    let f = SpectralField::from_coeffs(
        grid,
        Rank::Scalar,
        env.iter().map(|&e| C64::new(e, 0.0)).collect(),
    )?;
    let q = crate::littlewood_paley::conjugate(profile.p);
    let moment = if q.is_infinite() {
        1.0
    } else {
        libm::tgamma(1.0 + q / 2.0).powf(1.0 / q)
    };
    Ok(moment * bank.norm(&f, &NormSpec::fourier_besov(profile.s0, profile.p, 1.0))?)
}

/// Shell-localised packet `â = φ̂_{j₀}(ξ) e^{-ic·ξ}` centred in the box, scaled to physical peak `amplitude`; `v = 0`.
pub fn wave_packet(bank: &DyadicFilterBank, j0: i32, amplitude: f64) -> Result<FlowState> {
    let grid = *bank.grid();
    let c = grid.side() / 2.0;
    let mut a = SpectralField::zeros(grid, Rank::Scalar);
    for (idx, m) in bank.multiplier(j0)? {
        if grid.is_nyquist(idx) || !grid.is_retained(idx) {
            continue;
        }
        let xi = grid.wavevector(idx);
        a.coeffs_mut()[idx] = C64::from_polar(m, -c * (xi[0] + xi[1]));
    }
    a.symmetrize();
    let peak = a.to_samples()?.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let a = if peak > 0.0 { a.scale(amplitude / peak) } else { a };
    FlowState::new(a, SpectralField::zeros(grid, Rank::Vector2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    LowMachSweep,
    StrichartzSlope,
    LinearDecay,
    LemmaProbe,
    ContractionStudy,
}

impl PlanKind {
    pub fn name(self) -> &'static str {
        match self {
            PlanKind::LowMachSweep => "low_mach_sweep",
            PlanKind::StrichartzSlope => "strichartz_slope",
            PlanKind::LinearDecay => "linear_decay",
            PlanKind::LemmaProbe => "lemma_probe",
            PlanKind::ContractionStudy => "contraction_study",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            PlanKind::LowMachSweep,
            PlanKind::StrichartzSlope,
            PlanKind::LinearDecay,
            PlanKind::LemmaProbe,
            PlanKind::ContractionStudy,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// A study description. Fields not used by `kind` are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub kind: PlanKind,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    /// Extra norms of the initial data, reported per row.
    pub norm_specs: Vec<NormSpec>,
    pub seed: u64,
    pub profile: DataProfile,
    /// Base solver settings; `params.eps` is replaced per row.
    pub solver: SolverConfig,
    /// Target exponent `q` of the mixed norm in the low-Mach sweep.
    pub q: f64,
    /// Time exponent `r` of the mixed norm in the low-Mach sweep.
    pub r: f64,
    /// Rows re-run at `dt/2` and at `2N`.
    pub refine_eps: Vec<f64>,
    /// Time exponents of the Strichartz study.
    pub strichartz_r: Vec<f64>,
    pub strichartz_p: f64,
    pub strichartz_q: f64,
    pub strichartz_s: f64,
    pub strichartz_horizon: f64,
    /// Shell of the Strichartz wave packet.
    pub packet_shell: i32,
    /// Picard iterations in the contraction study.
    pub iterations: usize,
    /// Target `Z_T` norm of the contraction-study data.
    pub z_target: f64,
    /// Corpus size of the randomized probes.
    pub corpus: usize,
    /// Times checked by the decay study.
    pub decay_times: Vec<f64>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            kind: PlanKind::LowMachSweep,
            eps_list: vec![0.4, 0.2, 0.1, 0.05],
            norm_specs: Vec::new(),
            seed: 1,
            profile: DataProfile::default(),
            solver: SolverConfig::default(),
            q: 4.0,
            r: 2.0,
            refine_eps: Vec::new(),
            strichartz_r: vec![4.0, f64::INFINITY],
            strichartz_p: 2.0,
            strichartz_q: f64::INFINITY,
            strichartz_s: 0.0,
            strichartz_horizon: 4.0,
            packet_shell: 1,
            iterations: 8,
            z_target: 1e-3,
            corpus: 100,
            decay_times: vec![0.1, 1.0, 10.0],
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::Parameter("eps_list must not be empty".into()));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Parameter("every epsilon must be positive".into()));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Parameter("eps_list must be strictly decreasing".into()));
        }
        for s in &self.norm_specs {
            s.validate()?;
        }
        self.solver.validate()?;
        if !(self.q > self.solver.p) || !(self.r > 1.0 && self.r.is_finite()) {
            return Err(Error::Parameter("mixed norm needs q > p and 1 < r < infinity".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub eps: f64,
    pub quantity: String,
    pub value: f64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeEntry {
    pub quantity: String,
    pub slope: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub run_id: String,
    pub seed: u64,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub kind: PlanKind,
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<Verdict>,
    pub slopes: Vec<SlopeEntry>,
    pub provenance: Provenance,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Values of one quantity in row order.
    pub fn series(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| (r.eps, r.value))
            .collect()
    }

    fn push(&mut self, eps: f64, quantity: &str, value: f64, status: &str) {
        self.rows.push(ReportRow {
            eps,
            quantity: quantity.to_string(),
            value,
            status: status.to_string(),
        });
    }

    fn verdict(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }
}

/// Quantities measured along one low-Mach run.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub status: RunStatus,
    /// `‖(a, ℚv)‖_{L̃^r Ḃ^{2/q-1+2/r}_{q,1}}`.
    pub mixed: f64,
    /// `‖ℙv - w‖_{L̃^∞ FB^{2/p-1}_{p,1}}`.
    pub pv_w_linf: f64,
    /// `‖ℙv - w‖_{L¹ FB^{2/p+1}_{p,1}}`.
    pub pv_w_l1: f64,
    /// `‖ε∇a‖_{L̃^∞ FB^{2/p-1}_{p,1}}`.
    pub eps_grad_a: f64,
    /// `‖ε∇ã‖_{L̃^∞ FB^{2/p-1}_{p,1}}` of the auxiliary linear flow.
    pub eps_grad_a_linear: f64,
    /// `‖(A, ε∇A, V)‖_{L̃^∞FB^{2/p-1} ∩ L¹FB^{2/p+1}}`.
    pub perturbation: f64,
    /// The same norm of `(a, ε∇a, v)`.
    pub solution: f64,
    pub dt: f64,
    pub steps: usize,
}

impl SweepRow {
    pub fn pv_w(&self) -> f64 {
        self.pv_w_linf + self.pv_w_l1
    }

    /// The three headline quantities.
    pub fn headline(&self) -> [(&'static str, f64); 3] {
        [
            ("mixed_a_qv", self.mixed),
            ("pv_minus_w", self.pv_w()),
            ("eps_grad_a", self.eps_grad_a),
        ]
    }
}

#[derive(Default)]
struct Profiles {
    times: Vec<f64>,
    besov_a: Vec<ShellProfile>,
    besov_qv: Vec<ShellProfile>,
    pvw: Vec<ShellProfile>,
    eg: Vec<ShellProfile>,
    eg_lin: Vec<ShellProfile>,
    pert: [Vec<ShellProfile>; 3],
    sol: [Vec<ShellProfile>; 3],
}

fn linf_l1(times: &[f64], prof: &[ShellProfile], p: f64) -> Result<f64> {
    let s = 2.0 / p;
    let none = Truncation::None;
    Ok(chemin_lerner(times, prof, s - 1.0, f64::INFINITY, 1.0, none)?
        + chemin_lerner(times, prof, s + 1.0, 1.0, 1.0, none)?)
}

/// Run the compressible, incompressible and auxiliary linear flows in
/// lockstep from `x0` and measure the sweep quantities.
pub fn sweep_row(x0: &FlowState, cfg: &SolverConfig, q: f64, r: f64) -> Result<SweepRow> {
    let grid = cfg.grid;
    let bank = DyadicFilterBank::new(grid)?;
    let (dt, _) = cfg.time_grid(&x0.v);
    let cfg = SolverConfig {
        dt: Some(dt),
        snapshot_stride: usize::MAX / 2,
        ..cfg.clone()
    };
    let (eps, p) = (cfg.params.eps, cfg.p);
    let hw = HeatWeights::new(grid, cfg.params.mu, dt)?;
    let lw = EtdWeights::new(grid, cfg.params, dt)?;
    let lin_force = |w: &SpectralField| -> Result<FlowState> {
        let g = if cfg.nonlinear {
            helmholtz_q(&advection(w)?)?
        } else {
            SpectralField::zeros(grid, Rank::Vector2)
        };
        FlowState::new(SpectralField::zeros(grid, Rank::Scalar), g)
    };
    let mut w = helmholtz_p(&x0.v)?;
    let mut lin = FlowState::new(x0.a.clone(), helmholtz_q(&x0.v)?)?;
    let mut f_prev = lin_force(&w)?;
    let mut acc = Profiles::default();
    let fb = Flavor::FourierBesov;
    let run = nsk_solve_with(x0, &cfg, &mut |k, t, x| {
        if k > 0 {
            w = if cfg.nonlinear {
                ns_step(&w, &hw, cfg.scheme)?
            } else {
                hw.step(&w, None, None)
            };
            let f_next = lin_force(&w)?;
            lin = match cfg.scheme {
                Scheme::ExpEuler => lw.step(&lin, &f_prev, None)?,
                Scheme::Etdrk2 => lw.step(&lin, &f_prev, Some(&f_next))?,
            };
            f_prev = f_next;
        }
        acc.times.push(t);
        let qv = helmholtz_q(&x.v)?;
        let pv = x.v.sub(&qv)?;
        acc.besov_a.push(bank.profile(&x.a, Flavor::Besov, q)?);
        acc.besov_qv.push(bank.profile(&qv, Flavor::Besov, q)?);
        acc.pvw.push(bank.profile(&pv.sub(&w)?, fb, p)?);
        let eg = x.eps_grad_a(eps);
        acc.eg.push(bank.profile(&eg, fb, p)?);
        acc.eg_lin.push(bank.profile(&lin.eps_grad_a(eps), fb, p)?);
        let big_a = x.a.sub(&lin.a)?;
        let big_v = x.v.sub(&w)?.sub(&lin.v)?;
        acc.pert[0].push(bank.profile(&big_a, fb, p)?);
        acc.pert[1].push(bank.profile(&FlowState::new(big_a, big_v.clone())?.eps_grad_a(eps), fb, p)?);
        acc.pert[2].push(bank.profile(&big_v, fb, p)?);
        acc.sol[0].push(bank.profile(&x.a, fb, p)?);
        acc.sol[1].push(bank.profile(&eg, fb, p)?);
        acc.sol[2].push(bank.profile(&x.v, fb, p)?);
        Ok(())
    })?;
    let none = Truncation::None;
    let t = &acc.times;
    if t.len() < 2 {
        return Ok(SweepRow {
            eps,
            status: run.status,
            mixed: f64::NAN,
            pv_w_linf: f64::NAN,
            pv_w_l1: f64::NAN,
            eps_grad_a: f64::NAN,
            eps_grad_a_linear: f64::NAN,
            perturbation: f64::NAN,
            solution: f64::NAN,
            dt,
            steps: run.steps,
        });
    }
    let reg = 2.0 / q - 1.0 + 2.0 / r;
    let s = 2.0 / p;
    let sum3 = |v: &[Vec<ShellProfile>; 3]| -> Result<f64> {
        Ok(linf_l1(t, &v[0], p)? + linf_l1(t, &v[1], p)? + linf_l1(t, &v[2], p)?)
    };
    Ok(SweepRow {
        eps,
        status: run.status,
        mixed: chemin_lerner(t, &acc.besov_a, reg, r, 1.0, none)?
            + chemin_lerner(t, &acc.besov_qv, reg, r, 1.0, none)?,
        pv_w_linf: chemin_lerner(t, &acc.pvw, s - 1.0, f64::INFINITY, 1.0, none)?,
        pv_w_l1: chemin_lerner(t, &acc.pvw, s + 1.0, 1.0, 1.0, none)?,
        eps_grad_a: chemin_lerner(t, &acc.eg, s - 1.0, f64::INFINITY, 1.0, none)?,
        eps_grad_a_linear: chemin_lerner(t, &acc.eg_lin, s - 1.0, f64::INFINITY, 1.0, none)?,
        perturbation: sum3(&acc.pert)?,
        solution: sum3(&acc.sol)?,
        dt,
        steps: run.steps,
    })
}

/// `‖(A, ε∇A, V)‖_{L̃^∞FB^{2/p-1} ∩ L¹FB^{2/p+1}}` from three stored runs on a common time grid.
pub fn perturbation_norms(
    bank: &DyadicFilterBank,
    times: &[f64],
    nsk: &[FlowState],
    ns: &[SpectralField],
    linear: &[FlowState],
    eps: f64,
    p: f64,
) -> Result<f64> {
    if nsk.len() != times.len() || ns.len() != times.len() || linear.len() != times.len() {
        return Err(Error::Usage("runs must share the snapshot times".into()));
    }
    let fb = Flavor::FourierBesov;
    let mut pr: [Vec<ShellProfile>; 3] = Default::default();
    for k in 0..times.len() {
        let big_a = nsk[k].a.sub(&linear[k].a)?;
        let big_v = nsk[k].v.sub(&ns[k])?.sub(&linear[k].v)?;
        let st = FlowState::new(big_a, big_v)?;
        pr[0].push(bank.profile(&st.a, fb, p)?);
        pr[1].push(bank.profile(&st.eps_grad_a(eps), fb, p)?);
        pr[2].push(bank.profile(&st.v, fb, p)?);
    }
    Ok(linf_l1(times, &pr[0], p)? + linf_l1(times, &pr[1], p)? + linf_l1(times, &pr[2], p)?)
}

fn provenance(plan: &ExperimentPlan) -> Provenance {
    let text = crate::config::plan_to_text(plan);
    Provenance {
        run_id: crate::io::run_id(&text),
        seed: plan.seed,
        code_version: crate::CODE_VERSION.to_string(),
    }
}

fn empty_report(plan: &ExperimentPlan) -> SweepReport {
    SweepReport {
        kind: plan.kind,
        rows: Vec::new(),
        verdicts: Vec::new(),
        slopes: Vec::new(),
        provenance: provenance(plan),
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
}

fn data_for(plan: &ExperimentPlan, grid: Grid) -> Result<FlowState> {
    let bank = DyadicFilterBank::new(grid)?;
    synthesize_data(&plan.profile, &bank, plan.seed)
}

fn config_for(plan: &ExperimentPlan, eps: f64) -> SolverConfig {
    SolverConfig {
        params: plan.solver.params.with_eps(eps),
        ..plan.solver.clone()
    }
}

fn report_norm_specs(report: &mut SweepReport, plan: &ExperimentPlan, x0: &FlowState, eps: f64) -> Result<()> {
    let bank = DyadicFilterBank::new(*x0.grid())?;
    for spec in &plan.norm_specs {
        let label = crate::config::format_norm_spec(spec);
        report.push(eps, &format!("initial_a[{label}]"), bank.norm(&x0.a, spec)?, "completed");
        report.push(eps, &format!("initial_v[{label}]"), bank.norm(&x0.v, spec)?, "completed");
    }
    Ok(())
}

/// Low Mach number sweep over `plan.eps_list`.
pub fn low_mach_sweep(plan: &ExperimentPlan) -> Result<SweepReport> {
    plan.validate()?;
    let mut report = empty_report(plan);
    let x0 = data_for(plan, plan.solver.grid)?;
    report_norm_specs(&mut report, plan, &x0, plan.eps_list[0])?;
    let rows: Vec<SweepRow> = plan
        .eps_list
        .par_iter()
        .map(|&eps| sweep_row(&x0, &config_for(plan, eps), plan.q, plan.r))
        .collect::<Result<_>>()?;
    for row in &rows {
        let eps = row.eps;
        let st = row.status.name();
        for (name, v) in row.headline() {
            report.push(eps, name, v, st);
        }
        report.push(eps, "pv_minus_w_linf", row.pv_w_linf, st);
        report.push(eps, "pv_minus_w_l1", row.pv_w_l1, st);
        report.push(eps, "eps_grad_a_linear", row.eps_grad_a_linear, st);
        report.push(eps, "perturbation", row.perturbation, st);
        report.push(eps, "solution", row.solution, st);
        report.push(eps, "dt", row.dt, st);
    }
    let all_ok = rows.iter().all(|r| r.status == RunStatus::Completed);
    report.verdict(
        "runs_completed",
        all_ok,
        rows.iter()
            .map(|r| format!("{}:{}", r.eps, r.status.name()))
            .collect::<Vec<_>>()
            .join(" "),
    );
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    for k in 0..3 {
        let name = rows[0].headline()[k].0;
        let vals: Vec<f64> = rows.iter().map(|r| r.headline()[k].1).collect();
        let dec = strictly_decreasing(&vals);
        let ratio = vals[vals.len() - 1] / vals[0];
        report.verdict(
            format!("{name}_decreasing"),
            all_ok && dec,
            format!("values {vals:?}"),
        );
        report.verdict(
            format!("{name}_last_over_first"),
            all_ok && ratio < 0.5,
            format!("ratio {ratio}"),
        );
        if vals.len() >= 2 && vals.iter().all(|v| *v > 0.0 && v.is_finite()) {
            let (slope, _, r2) = log_log_fit(&eps, &vals);
            report.slopes.push(SlopeEntry {
                quantity: name.to_string(),
                slope,
                r_squared: r2,
            });
        }
    }
    let pert: Vec<f64> = rows.iter().map(|r| r.perturbation).collect();
    let last = rows.last().expect("eps_list is non-empty");
    report.verdict(
        "perturbation_small",
        last.perturbation < 0.2 * last.solution,
        format!("perturbation {} vs solution {}", last.perturbation, last.solution),
    );
    report.verdict("perturbation_decreasing", strictly_decreasing(&pert), format!("values {pert:?}"));
    for &eps in &plan.refine_eps {
        let Some(base) = rows.iter().find(|r| (r.eps - eps).abs() <= 1e-12 * eps) else {
            return Err(Error::Parameter(format!("refine_eps {eps} is not in eps_list")));
        };
        for (label, row) in refinement_rows(plan, &x0, base)? {
            let mut worst = 0.0f64;
            for ((name, a), (_, b)) in base.headline().iter().zip(row.headline()) {
                let d = (b - a).abs() / a.abs();
                worst = worst.max(d);
                report.push(eps, &format!("{name}@{label}"), b, row.status.name());
            }
            report.verdict(
                format!("refinement_{label}_eps_{eps}"),
                row.status == RunStatus::Completed && worst < 0.1,
                format!("max relative change {worst}"),
            );
        }
    }
    Ok(report)
}

/// The same row at half the step and at twice the resolution.
pub fn refinement_rows(
    plan: &ExperimentPlan,
    x0: &FlowState,
    base: &SweepRow,
) -> Result<Vec<(&'static str, SweepRow)>> {
    let cfg = config_for(plan, base.eps);
    let half = SolverConfig {
        dt: Some(base.dt / 2.0),
        ..cfg.clone()
    };
    let fine_grid = Grid::new(cfg.grid.side(), 2 * cfg.grid.n())?;
    let fine = SolverConfig {
        grid: fine_grid,
        dt: Some(base.dt),
        ..cfg
    };
    let x_fine = FlowState::new(x0.a.resample(fine_grid)?, x0.v.resample(fine_grid)?)?;
    Ok(vec![
        ("dt_half", sweep_row(x0, &half, plan.q, plan.r)?),
        ("n_double", sweep_row(&x_fine, &fine, plan.q, plan.r)?),
    ])
}

/// `‖ε∇ã‖_{L̃^∞(0,T; FB^{2/p-1}_{p,1})}` of the homogeneous linear flow for each `ε`.
pub fn eps_grad_a_exhibit(
    data: &FlowState,
    base: &LinearParams,
    eps_list: &[f64],
    horizon: f64,
    samples: usize,
    p: f64,
) -> Result<Vec<f64>> {
    let bank = DyadicFilterBank::new(*data.grid())?;
    let times: Vec<f64> = (0..=samples).map(|k| horizon * k as f64 / samples as f64).collect();
    eps_list
        .iter()
        .map(|&eps| {
            let params = base.with_eps(eps);
            let prof = times
                .iter()
                .map(|&t| {
                    let x = propagate(data, &params, t)?;
                    bank.profile(&x.eps_grad_a(eps), Flavor::FourierBesov, p)
                })
                .collect::<Result<Vec<_>>>()?;
            chemin_lerner(&times, &prof, 2.0 / p - 1.0, f64::INFINITY, 1.0, Truncation::None)
        })
        .collect()
}

/// Default fast-time sampling of the Strichartz study.
pub fn strichartz_fast_times(eps_min: f64, horizon: f64) -> Vec<f64> {
    StrichartzSpec::graded_fast_times(0.05, 4.0, 1.03, horizon / eps_min)
}

/// Strichartz slope study on a wave packet.
pub fn strichartz_slope_study(plan: &ExperimentPlan) -> Result<SweepReport> {
    plan.validate()?;
    let mut report = empty_report(plan);
    let bank = DyadicFilterBank::new(plan.solver.grid)?;
    let data = wave_packet(&bank, plan.packet_shell, plan.profile.amplitude)?;
    let eps_min = *plan.eps_list.last().expect("non-empty");
    for &r in &plan.strichartz_r {
        let spec = StrichartzSpec {
            r,
            p: plan.strichartz_p,
            q: plan.strichartz_q,
            s: plan.strichartz_s,
            sigma: 1.0,
            horizon: plan.strichartz_horizon,
            fast_times: strichartz_fast_times(eps_min, plan.strichartz_horizon),
        };
        let rep = strichartz_probe(&bank, &data, &plan.solver.params, &plan.eps_list, &spec)?;
        let name = format!("strichartz_lhs_r{}", fmt_exp(r));
        for (e, v) in rep.eps.iter().zip(&rep.values) {
            report.push(*e, &name, *v, "completed");
        }
        let expected = if r.is_infinite() { 0.0 } else { 1.0 / r };
        report.slopes.push(SlopeEntry {
            quantity: name.clone(),
            slope: rep.slope,
            r_squared: rep.r_squared,
        });
        report.verdict(
            format!("{name}_slope"),
            (rep.slope - expected).abs() <= 0.05,
            format!("slope {} expected {expected}", rep.slope),
        );
        report.verdict(
            format!("{name}_r_squared"),
            rep.r_squared >= 0.98,
            format!("R^2 {}", rep.r_squared),
        );
    }
    Ok(report)
}

fn fmt_exp(r: f64) -> String {
    if r.is_infinite() {
        "inf".into()
    } else {
        crate::config::fmt_f64(r)
    }
}

/// Homogeneous decay check on synthesized data for each `ε`.
pub fn linear_decay_study(plan: &ExperimentPlan) -> Result<SweepReport> {
    plan.validate()?;
    let mut report = empty_report(plan);
    let x0 = data_for(plan, plan.solver.grid)?;
    report_norm_specs(&mut report, plan, &x0, plan.eps_list[0])?;
    for &eps in &plan.eps_list {
        let params = plan.solver.params.with_eps(eps);
        let mut times = vec![0.0];
        times.extend(plan.decay_times.iter().copied());
        let rep = verify_decay(&x0, &params, &times)?;
        report.push(eps, "decay_worst_margin", rep.worst_margin, "completed");
        report.verdict(
            format!("decay_eps_{eps}"),
            rep.pass,
            format!("worst margin {} over {} mode-times", rep.worst_margin, rep.modes_tested),
        );
    }
    Ok(report)
}

/// Random heat-probe corpus: ratio per sample, evaluated on `grid`.
pub fn heat_corpus(grid: Grid, size: usize, seed: u64) -> Result<Vec<f64>> {
    let bank = DyadicFilterBank::new(grid)?;
    let j_lo = bank.j_min() + 1;
    let j_hi = (j_lo + 2).min(bank.j_max());
    heat_corpus_on(&bank, size, seed, j_lo, j_hi)
}

/// Corpus on a bank, drawing data on the coarsest grid's shells so that
/// refinement sees identical content.
pub fn heat_corpus_on(bank: &DyadicFilterBank, size: usize, seed: u64, j_lo: i32, j_hi: i32) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exps = [(1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (1.0, f64::INFINITY), (2.0, f64::INFINITY)];
    let mut out = Vec::with_capacity(size);
    for k in 0..size {
        let u0 = random_band_field(bank, j_lo, j_hi, &mut rng);
        let g1 = random_band_field(bank, j_lo, j_hi, &mut rng);
        let g2 = random_band_field(bank, j_lo, j_hi, &mut rng);
        let (r1, r) = exps[k % exps.len()];
        let omega = 1.0 + (k % 7) as f64;
        let forcing = move |t: f64| -> SpectralField {
            g1.scale((omega * t).cos()).axpy(t, &g2).expect("same grid")
        };
        let probe = HeatProbe {
            mu: 1.0,
            r1,
            r,
            s: 0.0,
            p: 2.0 + (k % 3) as f64,
            sigma: 1.0 + (k % 2) as f64,
            horizon: 1.0,
            steps: 100,
        };
        let rep = heat_maxreg_probe(bank, &u0, Some(&forcing), &probe)?;
        out.push(rep.ratio);
    }
    Ok(out)
}

fn max_finite(v: &[f64]) -> (f64, bool) {
    (v.iter().copied().fold(0.0, f64::max), v.iter().all(|x| x.is_finite()))
}

/// Composition-probe corpus on a bank; data are drawn on the given shells.
pub fn composition_corpus(
    bank: &DyadicFilterBank,
    size: usize,
    seed: u64,
    j_lo: i32,
    j_hi: i32,
    which: Composition,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = NormSpec::fourier_besov(1.0, 2.0, 1.0);
    let unit = NormSpec::fourier_besov(1.0, 2.0, 1.0);
    (0..size)
        .map(|k| {
            let u = random_band_field(bank, j_lo, j_hi, &mut rng);
            let n = bank.norm(&u, &unit)?;
            let u = u.scale(0.05 * (1.0 + (k % 5) as f64) / n);
            composition_probe(bank, &u, which, &Default::default(), &spec, 1.0)
        })
        .collect()
}

/// Randomised probes of the heat maximal-regularity and composition estimates,
/// each on the plan grid and on a grid with twice the resolution.
pub fn lemma_probe_study(plan: &ExperimentPlan) -> Result<SweepReport> {
    plan.validate()?;
    let mut report = empty_report(plan);
    let g1 = plan.solver.grid;
    let g2 = Grid::new(g1.side(), 2 * g1.n())?;
    let (b1, b2) = (DyadicFilterBank::new(g1)?, DyadicFilterBank::new(g2)?);
    let j_lo = b1.j_min() + 1;
    let j_hi = (j_lo + 2).min(b1.j_max() - 1);
    let eps = plan.solver.params.eps;
    let drift_check = |report: &mut SweepReport, name: &str, a: Vec<f64>, b: Vec<f64>| {
        let (ma, fa) = max_finite(&a);
        let (mb, fb) = max_finite(&b);
        report.push(eps, &format!("{name}_max_n{}", g1.n()), ma, "completed");
        report.push(eps, &format!("{name}_max_n{}", g2.n()), mb, "completed");
        let drift = (mb - ma).abs() / ma;
        report.verdict(format!("{name}_finite"), fa && fb, format!("{} samples", a.len()));
        report.verdict(format!("{name}_refinement"), drift < 0.05, format!("drift {drift}"));
    };
    let h1 = heat_corpus_on(&b1, plan.corpus, plan.seed, j_lo, j_hi)?;
    let h2 = heat_corpus_on(&b2, plan.corpus, plan.seed, j_lo, j_hi)?;
    drift_check(&mut report, "heat_ratio", h1, h2);
    for (which, name) in [(Composition::J, "composition_j"), (Composition::K, "composition_k")] {
        let c1 = composition_corpus(&b1, plan.corpus, plan.seed, j_lo, j_hi, which)?;
        let c2 = composition_corpus(&b2, plan.corpus, plan.seed, j_lo, j_hi, which)?;
        drift_check(&mut report, name, c1, c2);
    }
    Ok(report)
}

/// Contraction of the Duhamel iteration and agreement with the time stepper.
pub fn contraction_study(plan: &ExperimentPlan) -> Result<SweepReport> {
    plan.validate()?;
    let mut report = empty_report(plan);
    let eps = plan.eps_list[0];
    let cfg = SolverConfig {
        snapshot_stride: 1,
        ..config_for(plan, eps)
    };
    let bank = DyadicFilterBank::new(cfg.grid)?;
    let raw = data_for(plan, cfg.grid)?;
    let (dt, steps) = cfg.time_grid(&raw.v);
    let cfg = SolverConfig { dt: Some(dt), ..cfg };
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let traj: Vec<FlowState> = times
        .iter()
        .map(|&t| propagate(&raw, &cfg.params, t))
        .collect::<Result<_>>()?;
    let z0 = crate::solvers::trajectory_z_norm(&bank, &times, &traj, eps, cfg.p)?;
    let x0 = if z0 > 0.0 { raw.scale(plan.z_target / z0) } else { raw };
    let rep = picard_iterate(&x0, &cfg, plan.iterations)?;
    for (k, r) in rep.ratios.iter().enumerate() {
        report.push(eps, &format!("ratio_{}", k + 1), *r, "completed");
    }
    for (k, d) in rep.distances.iter().enumerate() {
        report.push(eps, &format!("distance_{k}"), *d, "completed");
    }
    report.push(eps, "z_norm_linear", rep.norms[0], "completed");
    let below = rep.ratios.iter().all(|&r| r < 0.9);
    let nonincreasing = rep.ratios.windows(2).all(|w| w[1] <= w[0]);
    report.verdict("contracted", rep.contracted, format!("{} iterations", rep.iterations));
    report.verdict("ratios_below_0.9", below && !rep.ratios.is_empty(), format!("{:?}", rep.ratios));
    report.verdict("ratios_nonincreasing", nonincreasing, format!("{:?}", rep.ratios));
    let run = nsk_solve(&x0, &cfg)?;
    let spec = NormSpec::fourier_besov(2.0 / cfg.p - 1.0, cfg.p, 1.0);
    let mut gap = 0.0f64;
    for (t, x) in run.series.times().iter().zip(run.series.states()) {
        let k = (t / dt).round() as usize;
        let d = x.sub(&rep.trajectory[k])?;
        let g = bank.norm(&d.a, &spec)? + bank.norm(&d.eps_grad_a(eps), &spec)? + bank.norm(&d.v, &spec)?;
        gap = gap.max(g);
    }
    report.push(eps, "fixed_point_gap", gap, run.status.name());
    report.verdict("fixed_point_matches_stepper", gap < 1e-6, format!("sup gap {gap}"));
    Ok(report)
}

/// Dispatch on `plan.kind`.
pub fn run_plan(plan: &ExperimentPlan) -> Result<SweepReport> {
    match plan.kind {
        PlanKind::LowMachSweep => low_mach_sweep(plan),
        PlanKind::StrichartzSlope => strichartz_slope_study(plan),
        PlanKind::LinearDecay => linear_decay_study(plan),
        PlanKind::LemmaProbe => lemma_probe_study(plan),
        PlanKind::ContractionStudy => contraction_study(plan),
    }
}
