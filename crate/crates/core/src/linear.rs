//! Exact per-mode propagator of the linearised system, exponential-integrator
//! weights, the energy functional, the heat semigroup and the acoustic wave
//! propagator.
//!
//! For `ξ ≠ 0` the velocity splits into `m̂ = ξ·v̂/|ξ|` and
//! `û⊥ = ξ⊥·v̂/|ξ|` with `ξ⊥ = (-ξ₂, ξ₁)`. The pair `(â, m̂)` obeys
//! `ẋ = -M∥ x` with
//!
//! ```text
//! M∥ = [[0, i|ξ|/ε], [i|ξ|(1/ε + κε|ξ|²), ν|ξ|²]]
//! ```
//!
//! and `û⊥` decays at rate `μ|ξ|²`. Every matrix function of `M∥` used here
//! has the form `αI + β(M∥ - (ν|ξ|²/2)I)` with real `α, β`, so its diagonal is
//! real and its off-diagonal purely imaginary. Weights are stored in that
//! compressed form, which keeps Hermitian symmetry exact.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::littlewood_paley::{chemin_lerner, DyadicFilterBank, Flavor, ShellProfile, Truncation};
use crate::spectral::{helmholtz_q, FlowState, Grid, Rank, SpectralField, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Physical parameters of the linearised operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearParams {
    pub eps: f64,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            eps: 0.1,
            mu: 0.5,
            lambda: 0.0,
            kappa: 1.0,
        }
    }
}

impl LinearParams {
    pub fn new(eps: f64, mu: f64, lambda: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            eps,
            mu,
            lambda,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Parameter(format!("epsilon = {} must be positive", self.eps)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Parameter(format!("mu = {} must be positive", self.mu)));
        }
        if !(self.nu() > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "nu = 2 mu + lambda = {} must be positive",
                self.nu()
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Parameter(format!("kappa = {} must be nonnegative", self.kappa)));
        }
        Ok(())
    }

    /// `ν = 2μ + λ`.
    pub fn nu(&self) -> f64 {
        2.0 * self.mu + self.lambda
    }

    /// `δ = min(1/2, κ/2)`.
    pub fn delta(&self) -> f64 {
        (0.5f64).min(self.kappa / 2.0)
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

/// Compressed 2×2 block `[[d11, i·o12], [i·o21, d22]]` with real entries.
pub type Blk = [f64; 4];

pub const BLK_ID: Blk = [1.0, 0.0, 0.0, 1.0];

/// Dense complex 2×2 matrix, row major.
pub type Mat2 = [[C64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_add(a: &Mat2, b: &Mat2, s: f64) -> Mat2 {
    let mut c = *a;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] += b[i][j] * s;
        }
    }
    c
}

fn mat_scale(a: &Mat2, s: C64) -> Mat2 {
    let mut c = *a;
    c.iter_mut().flatten().for_each(|x| *x *= s);
    c
}

fn mat_id() -> Mat2 {
    [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]]
}

fn mat_inv(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

fn mat_norm_inf(a: &Mat2) -> f64 {
    (a[0][0].norm() + a[0][1].norm()).max(a[1][0].norm() + a[1][1].norm())
}

/// Keep only the structurally nonzero parts.
pub fn compress(a: &Mat2) -> Blk {
    [a[0][0].re, a[0][1].im, a[1][0].im, a[1][1].re]
}

pub fn expand(b: &Blk) -> Mat2 {
    [
        [C64::new(b[0], 0.0), C64::new(0.0, b[1])],
        [C64::new(0.0, b[2]), C64::new(b[3], 0.0)],
    ]
}

#[inline]
pub fn blk_apply(b: &Blk, x: C64, y: C64) -> (C64, C64) {
    (b[0] * x + I * b[1] * y, I * b[2] * x + b[3] * y)
}

/// Linear dynamics of one Fourier mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeBlock {
    pub xi: [f64; 2],
    /// `|ξ|`.
    pub r: f64,
    /// Upper off-diagonal magnitude `|ξ|/ε`.
    pub upper: f64,
    /// Lower off-diagonal magnitude `|ξ|(1/ε + κε|ξ|²)`.
    pub lower: f64,
    /// `ν|ξ|²`.
    pub damping: f64,
    /// `μ|ξ|²`, the rate of the transverse velocity.
    pub perp_rate: f64,
}

pub fn mode_block(params: &LinearParams, xi: [f64; 2]) -> ModeBlock {
    let r = xi[0].hypot(xi[1]);
    let r2 = r * r;
    let e = params.eps;
    ModeBlock {
        xi,
        r,
        upper: r / e,
        lower: r * (1.0 / e + params.kappa * e * r2),
        damping: params.nu() * r2,
        perp_rate: params.mu * r2,
    }
}

impl ModeBlock {
    pub fn matrix(&self) -> Mat2 {
        [
            [ZERO, C64::new(0.0, self.upper)],
            [C64::new(0.0, self.lower), C64::new(self.damping, 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.damping
    }

    pub fn det(&self) -> f64 {
        self.upper * self.lower
    }

    /// `tr² - 4 det`.
    pub fn discriminant(&self) -> f64 {
        self.damping * self.damping - 4.0 * self.det()
    }

    pub fn eigenvalues(&self) -> [C64; 2] {
        let c = self.damping / 2.0;
        let q = c * c - self.det();
        let s = if q >= 0.0 {
            C64::new(q.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-q).sqrt())
        };
        [C64::new(c, 0.0) + s, C64::new(c, 0.0) - s]
    }

    /// `exp(-t M∥)` in compressed form.
    pub fn exp_neg(&self, t: f64) -> Blk {
        let half = self.damping / 2.0;
        let (f, g) = cosh_sinh_damped(half, half * half - self.det(), t);
        // f I - g N with N = M∥ - half·I = [[-half, iA], [iB, half]]
        [f + g * half, -g * self.upper, -g * self.lower, f - g * half]
    }

    /// `(exp(Z), φ₁(Z), φ₂(Z))` for `Z = -h M∥`.
    pub fn phi(&self, h: f64) -> [Blk; 3] {
        let z = mat_scale(&self.matrix(), C64::new(-h, 0.0));
        let e = self.exp_neg(h);
        if mat_norm_inf(&z) < 0.5 {
            let (p1, p2) = phi_series(&z);
            [e, compress(&p1), compress(&p2)]
        } else {
            let zi = mat_inv(&z);
            let id = mat_id();
            let p1 = mat_mul(&zi, &mat_add(&expand(&e), &id, -1.0));
            let p2 = mat_mul(&zi, &mat_add(&p1, &id, -1.0));
            [e, compress(&p1), compress(&p2)]
        }
    }
}

/// `(e^{-ct} cosh(√q t), e^{-ct} sinh(√q t)/√q)` with the usual analytic
/// continuation for `q ≤ 0`. Small `q t²` (including the degenerate
/// `q = 0` Jordan case) uses the even/odd power series.
fn cosh_sinh_damped(c: f64, q: f64, t: f64) -> (f64, f64) {
    if t == 0.0 {
        return (1.0, 0.0);
    }
    let x = q * t * t;
    if x.abs() < 1.0 {
        let damp = (-c * t).exp();
        let (mut f, mut g) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 0..30 {
            // term = x^k / (2k)!
            f += term;
            let odd = term / (2 * k + 1) as f64;
            g += odd;
            term = odd * x / (2 * k + 2) as f64;
            if term.abs() < 1e-18 * f.abs() {
                f += term;
                g += term / (2 * k + 3) as f64;
                break;
            }
        }
        return (damp * f, damp * g * t);
    }
    if q > 0.0 {
        let s = q.sqrt();
        let grow = ((s - c) * t).exp();
        let fall = (-(s + c) * t).exp();
        (0.5 * (grow + fall), 0.5 * (grow - fall) / s)
    } else {
        let w = (-q).sqrt();
        let damp = (-c * t).exp();
        let (sn, cs) = (w * t).sin_cos();
        (damp * cs, damp * sn / w)
    }
}

/// Taylor series `φ_k(Z) = Σ_n Zⁿ/(n+k)!` for `k = 1, 2`; requires `‖Z‖ < 1/2`.
fn phi_series(z: &Mat2) -> (Mat2, Mat2) {
    let mut p1 = [[ZERO; 2]; 2];
    let mut p2 = [[ZERO; 2]; 2];
    let mut pow = mat_id();
    let mut fact1 = 1.0; // (n+1)!
    let mut fact2 = 2.0; // (n+2)!
    for n in 0..40 {
        p1 = mat_add(&p1, &pow, 1.0 / fact1);
        p2 = mat_add(&p2, &pow, 1.0 / fact2);
        pow = mat_mul(&pow, z);
        fact1 *= (n + 2) as f64;
        fact2 *= (n + 3) as f64;
        if mat_norm_inf(&pow) / fact1 < 1e-20 {
            break;
        }
    }
    (p1, p2)
}

/// `(e^z, φ₁(z), φ₂(z))` for a real scalar `z`.
pub fn phi_scalar(z: f64) -> [f64; 3] {
    if z.abs() < 0.5 {
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut pow = 1.0;
        let (mut f1, mut f2) = (1.0, 2.0);
        for n in 0..30 {
            p1 += pow / f1;
            p2 += pow / f2;
            pow *= z;
            f1 *= (n + 2) as f64;
            f2 *= (n + 3) as f64;
        }
        [z.exp(), p1, p2]
    } else {
        let em1 = z.exp_m1();
        let p1 = em1 / z;
        [z.exp(), p1, (p1 - 1.0) / z]
    }
}

/// Time-stepping scheme for the Duhamel integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    ExpEuler,
    Etdrk2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExpEuler => "exp_euler",
            Scheme::Etdrk2 => "etdrk2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exp_euler" => Some(Scheme::ExpEuler),
            "etdrk2" => Some(Scheme::Etdrk2),
            _ => None,
        }
    }
}

/// Per-mode weights: `[E, φ₁, φ₂]` on the `(â, m̂)` block and `[e, φ₁, φ₂]` on `û⊥`.
#[derive(Clone, Copy, Debug)]
pub struct ModeWeights {
    pub par: [Blk; 3],
    pub perp: [f64; 3],
}

/// Which weight to apply in [`combine`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Exp,
    Phi1,
    Phi2,
}

impl Weight {
    fn slot(self) -> usize {
        match self {
            Weight::Exp => 0,
            Weight::Phi1 => 1,
            Weight::Phi2 => 2,
        }
    }
}

/// Evaluate `Σ coeff · W(ξ) x(ξ)` mode by mode.
fn combine<W>(grid: Grid, weights: W, terms: &[(Weight, f64, &FlowState)]) -> FlowState
where
    W: Fn(usize) -> ModeWeights + Sync,
{
    let m = grid.len();
    let out: Vec<[C64; 3]> = (0..m)
        .into_par_iter()
        .map(|idx| {
            if grid.is_nyquist(idx) {
                return [ZERO; 3];
            }
            let xi = grid.wavevector(idx);
            let r = xi[0].hypot(xi[1]);
            let w = weights(idx);
            let (mut a, mut mm, mut u) = (ZERO, ZERO, ZERO);
            for &(kind, coeff, x) in terms {
                let xa = x.a.coeffs()[idx];
                let v1 = x.v.coeffs()[idx];
                let v2 = x.v.coeffs()[m + idx];
                let (xm, xu) = if r > 0.0 {
                    ((xi[0] * v1 + xi[1] * v2) / r, (xi[0] * v2 - xi[1] * v1) / r)
                } else {
                    (v1, v2)
                };
                let k = kind.slot();
                let (na, nm) = if r > 0.0 {
                    blk_apply(&w.par[k], xa, xm)
                } else {
                    // ξ = 0: M∥ = 0, so E = I, φ₁ = I, φ₂ = I/2
                    let s = [1.0, 1.0, 0.5][k];
                    (xa * s, xm * s)
                };
                let nu = if r > 0.0 { xu * w.perp[k] } else { xu * [1.0, 1.0, 0.5][k] };
                a += na * coeff;
                mm += nm * coeff;
                u += nu * coeff;
            }
            if r > 0.0 {
                [a, (xi[0] * mm - xi[1] * u) / r, (xi[1] * mm + xi[0] * u) / r]
            } else {
                [a, mm, u]
            }
        })
        .collect();
    let mut a = SpectralField::zeros(grid, Rank::Scalar);
    let mut v = SpectralField::zeros(grid, Rank::Vector2);
    {
        let ac = a.coeffs_mut();
        for (idx, o) in out.iter().enumerate() {
            ac[idx] = o[0];
        }
    }
    let vc = v.coeffs_mut();
    for (idx, o) in out.iter().enumerate() {
        vc[idx] = o[1];
        vc[m + idx] = o[2];
    }
    FlowState { a, v }
}

fn mode_weights(params: &LinearParams, xi: [f64; 2], h: f64) -> ModeWeights {
    let b = mode_block(params, xi);
    ModeWeights {
        par: b.phi(h),
        perp: phi_scalar(-h * b.perp_rate),
    }
}

/// The semigroup `𝒢(t)` applied to a state.
pub fn propagate(state: &FlowState, params: &LinearParams, t: f64) -> Result<FlowState> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("propagation time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let grid = *state.grid();
    let w = |idx: usize| {
        let b = mode_block(params, grid.wavevector(idx));
        ModeWeights {
            par: [b.exp_neg(t), BLK_ID, BLK_ID],
            perp: [(-b.perp_rate * t).exp(), 1.0, 1.0],
        }
    };
    Ok(combine(grid, w, &[(Weight::Exp, 1.0, state)]))
}

/// Precomputed exponential-integrator weights for a fixed grid, parameter set and step.
#[derive(Clone, Debug)]
pub struct EtdWeights {
    grid: Grid,
    params: LinearParams,
    dt: f64,
    modes: Vec<ModeWeights>,
}

impl EtdWeights {
    pub fn new(grid: Grid, params: LinearParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step {dt} must be positive")));
        }
        let modes = (0..grid.len())
            .into_par_iter()
            .map(|idx| mode_weights(&params, grid.wavevector(idx), dt))
            .collect();
        Ok(Self {
            grid,
            params,
            dt,
            modes,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &LinearParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `Σ coeff · W x` over the given terms.
    pub fn combine(&self, terms: &[(Weight, f64, &FlowState)]) -> FlowState {
        combine(self.grid, |idx| self.modes[idx], terms)
    }

    /// `𝒢(dt) x`.
    pub fn propagate(&self, x: &FlowState) -> FlowState {
        self.combine(&[(Weight::Exp, 1.0, x)])
    }

    /// One step of `ẋ = -Mx - F(t)` with `F` given at the left node and,
    /// for the second-order scheme, at the right node.
    pub fn step(&self, x0: &FlowState, f0: &FlowState, f1: Option<&FlowState>) -> Result<FlowState> {
        let h = self.dt;
        match f1 {
            None => Ok(self.combine(&[(Weight::Exp, 1.0, x0), (Weight::Phi1, -h, f0)])),
            Some(f1) => {
                let df = f1.sub(f0)?;
                Ok(self.combine(&[
                    (Weight::Exp, 1.0, x0),
                    (Weight::Phi1, -h, f0),
                    (Weight::Phi2, -h, &df),
                ]))
            }
        }
    }
}

/// One Duhamel step `x(t+dt) = 𝒢(dt)x - ∫₀^dt 𝒢(dt-τ)F(τ)dτ`.
/// `forcing` holds `F` at the left node, and for `Etdrk2` also at the right node.
pub fn duhamel_step(
    state: &FlowState,
    forcing: &[FlowState],
    params: &LinearParams,
    dt: f64,
    scheme: Scheme,
) -> Result<FlowState> {
    let need = match scheme {
        Scheme::ExpEuler => 1,
        Scheme::Etdrk2 => 2,
    };
    if forcing.len() < need {
        return Err(Error::Usage(format!(
            "{} needs forcing at {need} nodes, got {}",
            scheme.name(),
            forcing.len()
        )));
    }
    let w = EtdWeights::new(*state.grid(), *params, dt)?;
    w.step(state, &forcing[0], forcing.get(1).filter(|_| need == 2))
}

/// Per-mode `V̂²(ξ)`.
pub fn energy_functional(state: &FlowState, params: &LinearParams) -> Vec<f64> {
    let grid = *state.grid();
    let m = grid.len();
    let (k, e, d) = (params.kappa, params.eps, params.delta());
    (0..m)
        .map(|idx| {
            let xi = grid.wavevector(idx);
            mode_energy(
                state.a.coeffs()[idx],
                [state.v.coeffs()[idx], state.v.coeffs()[m + idx]],
                xi,
                k,
                e,
                d,
            )
        })
        .collect()
}

/// `|â|² + |v̂|² + κ|εiξâ|² + 2δ Re⟨iεξâ, v̂⟩`.
pub fn mode_energy(a: C64, v: [C64; 2], xi: [f64; 2], kappa: f64, eps: f64, delta: f64) -> f64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    let xv = v[0].conj() * xi[0] + v[1].conj() * xi[1];
    let cross = (I * eps * a * xv).re;
    a.norm_sqr() + v[0].norm_sqr() + v[1].norm_sqr() + kappa * eps * eps * r2 * a.norm_sqr()
        + 2.0 * delta * cross
}

/// `|(â, v̂)|² + κ|εiξâ|²`, the quadratic form bracketing `V̂²`.
pub fn mode_energy_reference(a: C64, v: [C64; 2], xi: [f64; 2], kappa: f64, eps: f64) -> f64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    a.norm_sqr() + v[0].norm_sqr() + v[1].norm_sqr() + kappa * eps * eps * r2 * a.norm_sqr()
}

/// Outcome of a homogeneous decay check.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    /// `min over modes, times of e^{-(δ/2)|ξ|²t}V̂(0) - V̂(t)`.
    pub worst_margin: f64,
    pub modes_tested: usize,
    pub pass: bool,
}

/// Absolute slack allowed by [`verify_decay`].
pub const DECAY_SLACK: f64 = 1e-9;

/// Check `V̂(t,ξ) ≤ e^{-(δ/2)|ξ|²t} V̂(0,ξ)` for every mode and time in `times`.
pub fn verify_decay(state0: &FlowState, params: &LinearParams, times: &[f64]) -> Result<DecayReport> {
    let grid = *state0.grid();
    let v0 = energy_functional(state0, params);
    let d = params.delta();
    let mut worst = f64::INFINITY;
    let mut tested = 0;
    for &t in times {
        let st = propagate(state0, params, t)?;
        let vt = energy_functional(&st, params);
        for idx in 0..grid.len() {
            if grid.is_nyquist(idx) {
                continue;
            }
            let r2 = grid.wavenumber(idx).powi(2);
            let bound = (-0.5 * d * r2 * t).exp() * v0[idx].max(0.0).sqrt();
            worst = worst.min(bound - vt[idx].max(0.0).sqrt());
            tested += 1;
        }
    }
    if tested == 0 {
        worst = 0.0;
    }
    Ok(DecayReport {
        worst_margin: worst,
        modes_tested: tested,
        pass: worst >= -DECAY_SLACK,
    })
}

/// Check `½R ≤ V̂² ≤ (3/2)R` with `R` from [`mode_energy_reference`] on random
/// modes and parameters (`κ ∈ [0, κ_max)`, `ε ∈ [10⁻³, 2)`, `δ = min(½, κ/2)`).
/// The margin is relative to `R`; rounding of a few ulps is tolerated.
pub fn verify_equivalence(samples: usize, kappa_max: f64, xi_max: f64, seed: u64) -> DecayReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let kappa = rng.gen_range(0.0..kappa_max);
        let eps = rng.gen_range(1e-3..2.0);
        let d = (0.5f64).min(kappa / 2.0);
        let xi = [rng.gen_range(-xi_max..xi_max), rng.gen_range(-xi_max..xi_max)];
        let mut z = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (a, v) = (z(), [z(), z()]);
        let e = mode_energy(a, v, xi, kappa, eps, d);
        let r = mode_energy_reference(a, v, xi, kappa, eps);
        if r > 0.0 {
            worst = worst.min((e - 0.5 * r).min(1.5 * r - e) / r);
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    DecayReport {
        worst_margin: worst,
        modes_tested: samples,
        pass: worst >= -8.0 * f64::EPSILON,
    }
}

/// Heat semigroup `e^{μtΔ}`.
pub fn heat_propagate(field: &SpectralField, mu: f64, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("propagation time {t} must be nonnegative")));
    }
    let rank = field.rank();
    Ok(field.map_modes(rank, |_, xi, c| {
        let f = (-mu * (xi[0] * xi[0] + xi[1] * xi[1]) * t).exp();
        [c[0] * f, c[1] * f]
    }))
}

/// Exponential-integrator weights for `u̇ = μΔu + f`.
#[derive(Clone, Debug)]
pub struct HeatWeights {
    grid: Grid,
    dt: f64,
    w: Vec<[f64; 3]>,
}

impl HeatWeights {
    pub fn new(grid: Grid, mu: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(mu > 0.0) {
            return Err(Error::Domain("heat weights need mu > 0 and dt > 0".into()));
        }
        let w = (0..grid.len())
            .map(|idx| phi_scalar(-dt * mu * grid.wavenumber(idx).powi(2)))
            .collect();
        Ok(Self { grid, dt, w })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `u₁ = e u₀ + h φ₁ f₀ + h φ₂ (f₁ - f₀)`; first order when `f1` is `None`.
    pub fn step(
        &self,
        u0: &SpectralField,
        f0: Option<&SpectralField>,
        f1: Option<&SpectralField>,
    ) -> SpectralField {
        let m = self.grid.len();
        let h = self.dt;
        let mut out = u0.clone();
        for c in 0..u0.rank().components() {
            let dst = out.component_mut(c);
            for idx in 0..m {
                let [e, p1, p2] = self.w[idx];
                let mut x = dst[idx] * e;
                if let Some(f0) = f0 {
                    let a = f0.coeffs()[c * m + idx];
                    x += a * (h * p1);
                    if let Some(f1) = f1 {
                        x += (f1.coeffs()[c * m + idx] - a) * (h * p2);
                    }
                }
                dst[idx] = if self.grid.is_nyquist(idx) { ZERO } else { x };
            }
        }
        out
    }
}

/// Exponents of a heat maximal-regularity probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatProbe {
    pub mu: f64,
    pub r1: f64,
    pub r: f64,
    pub s: f64,
    pub p: f64,
    pub sigma: f64,
    /// Final time `T`.
    pub horizon: f64,
    /// Number of uniform time steps on `[0, T]`.
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl ProbeRatio {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
        Self { lhs, rhs, ratio }
    }
}

/// `‖u‖_{L̃^r FB^{s+2/r}} / (‖u₀‖_{FB^s} + ‖f‖_{L̃^{r₁} FB^{s-2+2/r₁}})` for
/// `∂_t u - μΔu = f`. The forcing is sampled at the time nodes and treated as
/// piecewise linear; the solution is advanced exactly for such forcing.
pub fn heat_maxreg_probe(
    bank: &DyadicFilterBank,
    u0: &SpectralField,
    forcing: Option<&(dyn Fn(f64) -> SpectralField + Sync)>,
    probe: &HeatProbe,
) -> Result<ProbeRatio> {
    let HeatProbe { mu, r1, r, s, p, sigma, horizon, steps } = *probe;
    if !(1.0 <= r1 && r1 <= r) {
        return Err(Error::Parameter(format!("need 1 <= r1 <= r, got r1 = {r1}, r = {r}")));
    }
    if steps == 0 || !(horizon > 0.0) {
        return Err(Error::Parameter("heat probe needs T > 0 and at least one step".into()));
    }
    let dt = horizon / steps as f64;
    let hw = HeatWeights::new(*bank.grid(), mu, dt)?;
    let fb = Flavor::FourierBesov;
    let mut times = Vec::with_capacity(steps + 1);
    let mut up = Vec::with_capacity(steps + 1);
    let mut fp = Vec::with_capacity(steps + 1);
    let mut u = u0.clone();
    let mut f_prev = forcing.map(|f| f(0.0));
    for k in 0..=steps {
        let t = k as f64 * dt;
        times.push(t);
        up.push(bank.profile(&u, fb, p)?);
        if let Some(f) = &f_prev {
            fp.push(bank.profile(f, fb, p)?);
        }
        if k == steps {
            break;
        }
        let f_next = forcing.map(|f| f(t + dt));
        u = hw.step(&u, f_prev.as_ref(), f_next.as_ref());
        f_prev = f_next;
    }
    let none = Truncation::None;
    let lhs = chemin_lerner(&times, &up, s + 2.0 / r, r, sigma, none)?;
    let mut rhs = bank.profile(u0, fb, p)?.combine(s, sigma, none);
    if !fp.is_empty() {
        rhs += chemin_lerner(&times, &fp, s - 2.0 + 2.0 / r1, r1, sigma, none)?;
    }
    Ok(ProbeRatio::new(lhs, rhs))
}

/// Rotation `U(t)`: `(â, ṽ) ↦ (cos θ â - sin θ ṽ, sin θ â + cos θ ṽ)`, `θ = |ξ|t`.
pub fn wave_propagate(
    a: &SpectralField,
    vt: &SpectralField,
    t: f64,
) -> Result<(SpectralField, SpectralField)> {
    if a.rank() != Rank::Scalar || vt.rank() != Rank::Scalar {
        return Err(Error::Rank("wave propagator acts on a pair of scalars".into()));
    }
    crate::spectral::ensure_same_grid(a, vt)?;
    let grid = *a.grid();
    let mut na = a.clone();
    let mut nv = vt.clone();
    for idx in 0..grid.len() {
        let (s, c) = (grid.wavenumber(idx) * t).sin_cos();
        let (x, y) = (a.coeffs()[idx], vt.coeffs()[idx]);
        na.coeffs_mut()[idx] = x * c - y * s;
        nv.coeffs_mut()[idx] = x * s + y * c;
    }
    Ok((na, nv))
}

/// Result of a log-log regression.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SlopeReport {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `ln y = slope · ln x + intercept`. When the `ln y`
/// are all equal the fit is exact and `R²` is reported as 1.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sst: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    let r2 = if sst <= 1e-300 { 1.0 } else { 1.0 - sse / sst };
    (slope, intercept, r2)
}

/// Exponents and time sampling of a Strichartz probe.
#[derive(Clone, Debug, PartialEq)]
pub struct StrichartzSpec {
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub sigma: f64,
    /// Final time `T`.
    pub horizon: f64,
    /// Sample points in the fast time `τ = t/ε`, starting at 0 and increasing.
    /// Each run uses the points with `ετ < T` followed by `T` itself.
    pub fast_times: Vec<f64>,
}

impl StrichartzSpec {
    pub fn admissible(&self) -> Result<()> {
        let (p, q, r) = (self.p, self.q, self.r);
        let ok = 2.0 <= p && p <= q && r >= 1.0 && 1.0 / r <= 0.5 * (1.0 / p - 1.0 / q) + 1e-12;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "exponents (p, q, r) = ({p}, {q}, {r}) are not admissible"
            )))
        }
    }

    /// Geometric-tail sampling: step `h0` up to `tau_knee`, then steps growing by `ratio`.
    pub fn graded_fast_times(h0: f64, tau_knee: f64, ratio: f64, tau_max: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut t = 0.0;
        let mut h = h0;
        while t < tau_max {
            if t >= tau_knee {
                h *= ratio;
            }
            t += h;
            out.push(t);
        }
        out
    }
}

/// `‖(a_ε, Qv_ε)‖_{L̃^r(0,T; Ḃ^{2/q+1/r+s}_{q,σ})}` of the homogeneous linear
/// flow from `data`, for each `ε` in `eps_list`, with the log-log slope.
pub fn strichartz_probe(
    bank: &DyadicFilterBank,
    data: &FlowState,
    base: &LinearParams,
    eps_list: &[f64],
    spec: &StrichartzSpec,
) -> Result<SlopeReport> {
    spec.admissible()?;
    let reg = 2.0 / spec.q + 1.0 / spec.r + spec.s;
    let values = eps_list
        .iter()
        .map(|&eps| {
            let params = base.with_eps(eps);
            params.validate()?;
            let mut times: Vec<f64> = spec
                .fast_times
                .iter()
                .map(|tau| tau * eps)
                .filter(|&t| t < spec.horizon)
                .collect();
            times.push(spec.horizon);
            let profiles: Vec<(ShellProfile, ShellProfile)> = times
                .iter()
                .map(|&t| {
                    let st = propagate(data, &params, t)?;
                    let qv = helmholtz_q(&st.v)?;
                    Ok((
                        bank.profile(&st.a, Flavor::Besov, spec.q)?,
                        bank.profile(&qv, Flavor::Besov, spec.q)?,
                    ))
                })
                .collect::<Result<_>>()?;
            let (pa, pq): (Vec<_>, Vec<_>) = profiles.into_iter().unzip();
            let none = Truncation::None;
            Ok(chemin_lerner(&times, &pa, reg, spec.r, spec.sigma, none)?
                + chemin_lerner(&times, &pq, reg, spec.r, spec.sigma, none)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.iter().all(|&v| v == 0.0) {
        return Ok(SlopeReport {
            eps: eps_list.to_vec(),
            values,
            slope: 0.0,
            intercept: f64::NEG_INFINITY,
            r_squared: 1.0,
        });
    }
    let (slope, intercept, r_squared) = log_log_fit(eps_list, &values);
    Ok(SlopeReport {
        eps: eps_list.to_vec(),
        values,
        slope,
        intercept,
        r_squared,
    })
}

/// Homogeneous linear estimate probe: `‖(a, ε∇a, v)(T)‖_{FB^s_{p,σ}}` over
/// `‖(a₀, ε∇a₀, v₀)‖_{FB^s_{p,σ}}`.
pub fn linear_estimate_probe(
    bank: &DyadicFilterBank,
    data: &FlowState,
    params: &LinearParams,
    horizon: f64,
    s: f64,
    p: f64,
    sigma: f64,
) -> Result<ProbeRatio> {
    let spec = crate::littlewood_paley::NormSpec::fourier_besov(s, p, sigma);
    let tuple = |x: &FlowState| -> Result<f64> {
        Ok(bank.norm(&x.a, &spec)? + bank.norm(&x.eps_grad_a(params.eps), &spec)?
            + bank.norm(&x.v, &spec)?)
    };
    let end = propagate(data, params, horizon)?;
    Ok(ProbeRatio::new(tuple(&end)?, tuple(data)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Independent oracle: diagonalise M∥ with complex eigenvectors.
    fn eig_exp(b: &ModeBlock, t: f64) -> Mat2 {
        let m = b.matrix();
        let [l1, l2] = b.eigenvalues();
        // eigenvector of [[0, iA],[iB, C]] for λ: (iA, λ)
        let v = |l: C64| [m[0][1], l];
        let (p, q) = (v(l1), v(l2));
        let pm: Mat2 = [[p[0], q[0]], [p[1], q[1]]];
        let d: Mat2 = [[(-l1 * t).exp(), ZERO], [ZERO, (-l2 * t).exp()]];
        mat_mul(&mat_mul(&pm, &d), &mat_inv(&pm))
    }

    #[test]
    fn eigenvalue_examples() {
        let p = LinearParams::new(1.0, 0.5, 0.0, 0.0).unwrap();
        let b = mode_block(&p, [1.0, 0.0]);
        let ev = b.eigenvalues();
        assert!((ev[0] - c(0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
        assert!((ev[1] - c(0.5, -(3f64.sqrt()) / 2.0)).norm() < 1e-15);
        let p = LinearParams::new(1.0, 0.5, 0.0, 0.75).unwrap();
        let b = mode_block(&p, [0.0, 1.0]);
        assert!((b.det() - 1.75).abs() < 1e-15);
        assert!((b.eigenvalues()[0] - c(0.5, 6f64.sqrt() / 2.0)).norm() < 1e-15);
        assert_eq!(LinearParams::new(1.0, 1.0, 0.0, 2.0).unwrap().delta(), 0.5);
        assert_eq!(LinearParams::new(1.0, 1.0, 0.0, 0.5).unwrap().delta(), 0.25);
    }

    #[test]
    fn invalid_params() {
        assert!(LinearParams::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(LinearParams::new(0.1, 1.0, -2.5, 1.0).is_err());
        assert!(LinearParams::new(0.1, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn exp_matches_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let p = LinearParams::new(
                rng.gen_range(0.01..1.0),
                rng.gen_range(0.05..2.0),
                rng.gen_range(-0.05..1.0),
                rng.gen_range(0.0..3.0),
            )
            .unwrap();
            let r = rng.gen_range(0.05..6.0);
            let b = mode_block(&p, [r, 0.0]);
            if b.discriminant().abs() < 1e-3 * b.trace().powi(2) {
                continue;
            }
            let t = rng.gen_range(0.0..2.0);
            let e = expand(&b.exp_neg(t));
            let o = eig_exp(&b, t);
            let scale = mat_norm_inf(&o).max(1e-300);
            let diff = mat_norm_inf(&mat_add(&e, &o, -1.0));
            assert!(diff < 1e-9 * scale, "diff {diff} scale {scale}");
        }
    }

    #[test]
    fn degenerate_discriminant_is_continuous() {
        // ν|ξ|² = 2|ξ|/ε at κ = 0: choose ε so the discriminant vanishes at |ξ| = 1
        let eps = 0.5;
        let p = LinearParams::new(eps, 2.0, 0.0, 0.0).unwrap(); // ν = 4 = 2/ε
        let b = mode_block(&p, [1.0, 0.0]);
        assert!(b.discriminant().abs() < 1e-12);
        let t = 0.7;
        let e0 = b.exp_neg(t);
        // Jordan formula e^{-ct}(I - t(M - cI))
        let cc = b.trace() / 2.0;
        let jord = [
            (-cc * t).exp() * (1.0 + t * cc),
            -(-cc * t).exp() * t * b.upper,
            -(-cc * t).exp() * t * b.lower,
            (-cc * t).exp() * (1.0 - t * cc),
        ];
        for k in 0..4 {
            assert!((e0[k] - jord[k]).abs() < 1e-14);
        }
        for d in [1e-12, 1e-9, 1e-6, 1e-3] {
            let bp = mode_block(&p, [1.0 + d, 0.0]);
            let bm = mode_block(&p, [1.0 - d, 0.0]);
            let (ep, em) = (bp.exp_neg(t), bm.exp_neg(t));
            for k in 0..4 {
                assert!((ep[k] - em[k]).abs() < 10.0 * d + 1e-14);
            }
        }
    }

    #[test]
    fn stiff_modes_do_not_overflow() {
        let p = LinearParams::new(1e-3, 1.0, 0.0, 0.0).unwrap();
        let b = mode_block(&p, [5.0, 0.0]);
        let e = b.exp_neg(100.0);
        assert!(e.iter().all(|x| x.is_finite()));
        let p = LinearParams::new(10.0, 10.0, 0.0, 0.0).unwrap();
        let b = mode_block(&p, [3.0, 0.0]);
        let e = b.exp_neg(50.0);
        assert!(e.iter().all(|x| x.is_finite() && x.abs() < 1.0));
    }

    #[test]
    fn phi_functions_match_both_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let p = LinearParams::new(rng.gen_range(0.05..1.0), rng.gen_range(0.1..1.0), 0.0, 1.0)
                .unwrap();
            let b = mode_block(&p, [rng.gen_range(0.05..2.0), 0.0]);
            let z = mat_scale(&b.matrix(), c(-1.0, 0.0));
            let nz = mat_norm_inf(&z);
            // step so that ‖hM‖ straddles 1/2
            for h in [0.49 / nz, 0.51 / nz] {
                let [e, p1, p2] = b.phi(h);
                let zh = mat_scale(&z, c(h, 0.0));
                let id = mat_id();
                // Z φ₁ = E - I and Z φ₂ = φ₁ - I
                let r1 = mat_add(&mat_mul(&zh, &expand(&p1)), &mat_add(&expand(&e), &id, -1.0), -1.0);
                let r2 = mat_add(&mat_mul(&zh, &expand(&p2)), &mat_add(&expand(&p1), &id, -1.0), -1.0);
                assert!(mat_norm_inf(&r1) < 1e-14);
                assert!(mat_norm_inf(&r2) < 1e-14);
            }
        }
        let [e, p1, p2] = phi_scalar(0.0);
        assert_eq!((e, p1, p2), (1.0, 1.0, 0.5));
        for z in [-0.49f64, -0.51, -3.0, -40.0] {
            let [e, p1, p2] = phi_scalar(z);
            assert!((z * p1 - (e - 1.0)).abs() < 1e-15);
            assert!((z * p2 - (p1 - 1.0)).abs() < 1e-15);
        }
    }

    fn random_state(grid: Grid, seed: u64) -> FlowState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..3 * grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = SpectralField::from_samples(grid, Rank::Scalar, &s[..grid.len()]).unwrap();
        let v = SpectralField::from_samples(grid, Rank::Vector2, &s[grid.len()..]).unwrap();
        FlowState::new(a.dealias(), v.dealias()).unwrap()
    }

    fn rel(a: &FlowState, b: &FlowState) -> f64 {
        a.sub(b).unwrap().max_abs() / b.max_abs()
    }

    #[test]
    fn semigroup_and_identity() {
        let g = Grid::new(20.0, 32).unwrap();
        let x = random_state(g, 1);
        let p = LinearParams::new(0.1, 0.3, 0.1, 0.5).unwrap();
        assert_eq!(propagate(&x, &p, 0.0).unwrap(), x);
        let (t, s) = (0.37, 1.21);
        let a = propagate(&propagate(&x, &p, s).unwrap(), &p, t).unwrap();
        let b = propagate(&x, &p, t + s).unwrap();
        assert!(rel(&a, &b) < 1e-10);
        assert!(propagate(&x, &p, -1.0).is_err());
    }

    #[test]
    fn hermitian_symmetry_preserved() {
        let g = Grid::new(20.0, 32).unwrap();
        let x = random_state(g, 2);
        let p = LinearParams::default();
        let y = propagate(&x, &p, 0.8).unwrap();
        assert!(y.hermitian_defect() < 1e-12);
        let w = EtdWeights::new(g, p, 0.05).unwrap();
        let z = w.step(&x, &y, Some(&x)).unwrap();
        assert!(z.hermitian_defect() < 1e-12);
    }

    #[test]
    fn solenoidal_field_decays_as_heat() {
        let g = Grid::new(20.0, 32).unwrap();
        let x = random_state(g, 3);
        let w = crate::spectral::helmholtz_p(&x.v).unwrap();
        let st = FlowState::new(SpectralField::zeros(g, Rank::Scalar), w.clone()).unwrap();
        let p = LinearParams::new(0.05, 0.7, 0.2, 1.0).unwrap();
        let y = propagate(&st, &p, 0.9).unwrap();
        let h = heat_propagate(&w, p.mu, 0.9).unwrap();
        assert!(y.v.sub(&h).unwrap().max_abs() < 1e-14 * w.max_abs());
        assert!(y.a.max_abs() < 1e-14 * w.max_abs());
    }

    #[test]
    fn duhamel_zero_forcing_is_propagation() {
        let g = Grid::new(20.0, 32).unwrap();
        let x = random_state(g, 4);
        let p = LinearParams::default();
        let z = FlowState::zeros(g);
        let a = duhamel_step(&x, &[z.clone(), z], &p, 0.1, Scheme::Etdrk2).unwrap();
        assert_eq!(a, propagate(&x, &p, 0.1).unwrap());
        assert!(duhamel_step(&x, &[], &p, 0.1, Scheme::ExpEuler).is_err());
    }

    #[test]
    fn energy_equivalence_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let kappa = rng.gen_range(0.0..5.0);
            let eps = rng.gen_range(0.001..2.0);
            let d = (0.5f64).min(kappa / 2.0);
            let xi = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let mut z = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let a = z();
            let v = [z(), z()];
            let e = mode_energy(a, v, xi, kappa, eps, d);
            let r = mode_energy_reference(a, v, xi, kappa, eps);
            assert!(0.5 * r <= e * (1.0 + 1e-14) && e <= 1.5 * r * (1.0 + 1e-14));
        }
        let e = mode_energy(c(0.3, 0.1), [ZERO, ZERO], [1.0, 2.0], 0.7, 0.2, 0.35);
        let want = 0.1 + 0.7 * 0.04 * 5.0 * 0.1;
        assert!((e - want).abs() < 1e-15);
    }

    #[test]
    fn equivalence_check_passes_and_counts() {
        let rep = verify_equivalence(2000, 5.0, 10.0, 3);
        assert!(rep.pass, "margin {}", rep.worst_margin);
        assert_eq!(rep.modes_tested, 2000);
        assert!(rep.worst_margin < 0.5);
    }

    #[test]
    fn decay_holds_in_unit_viscosity_regime() {
        let g = Grid::new(2.0 * std::f64::consts::PI * 4.0, 32).unwrap();
        let x = random_state(g, 5);
        let p = LinearParams::new(0.1, 0.5, 0.0, 1.0).unwrap();
        let rep = verify_decay(&x, &p, &[0.0, 0.1, 1.0, 10.0]).unwrap();
        assert!(rep.pass, "margin {}", rep.worst_margin);
        let rep0 = verify_decay(&x, &p, &[0.0]).unwrap();
        assert_eq!(rep0.worst_margin, 0.0);
        let p = LinearParams::new(0.1, 0.5, 0.0, 10.0).unwrap();
        assert!(verify_decay(&x, &p, &[1.0]).unwrap().pass);
    }

    #[test]
    fn wave_rotation() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let x = random_state(g, 6);
        let (a, v) = (x.a.clone(), x.v.component_field(0));
        let (a0, v0) = wave_propagate(&a, &v, 0.0).unwrap();
        assert_eq!((a0, v0), (a.clone(), v.clone()));
        // mode k = (1, 0) has |ξ| = 1; θ = π/2 swaps with a sign
        let idx = g.index(1, 0);
        let (a1, v1) = wave_propagate(&a, &v, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((a1.coeffs()[idx] + v.coeffs()[idx]).norm() < 1e-15);
        assert!((v1.coeffs()[idx] - a.coeffs()[idx]).norm() < 1e-15);
    }

    #[test]
    fn log_log_fit_recovers_power_law() {
        let x = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(0.25)).collect();
        let (s, b, r2) = log_log_fit(&x, &y);
        assert!((s - 0.25).abs() < 1e-12 && (b - 3f64.ln()).abs() < 1e-12 && r2 > 0.999_999);
        let (s, _, r2) = log_log_fit(&x, &[2.0; 4]);
        assert_eq!((s, r2), (0.0, 1.0));
    }

    #[test]
    fn strichartz_rejects_inadmissible() {
        let spec = StrichartzSpec {
            r: 2.0,
            p: 2.0,
            q: f64::INFINITY,
            s: 0.0,
            sigma: 1.0,
            horizon: 1.0,
            fast_times: vec![0.0, 1.0],
        };
        assert!(spec.admissible().is_err());
        let ok = StrichartzSpec { r: 4.0, ..spec };
        assert!(ok.admissible().is_ok());
    }
}
