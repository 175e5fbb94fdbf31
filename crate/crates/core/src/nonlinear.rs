//! Pressure laws and the nonlinear forcing `(𝒜, 𝒱_ε)`.
//!
//! Products and compositions are formed pointwise on the physical grid,
//! transformed back and truncated by the 2/3 rule.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linear::LinearParams;
use crate::littlewood_paley::{DyadicFilterBank, NormSpec};
use crate::spectral::{derivative, forward_transform, DerivOp, FlowState, Rank, SpectralField};

/// Default lower bound on the density `1 + εa`.
pub const VACUUM_FLOOR: f64 = 1e-6;

/// Barotropic pressure law, normalised so that `P'(1) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum PressureLaw {
    /// `P(ρ) = ρ^γ/γ`.
    Gamma(f64),
    /// `P'(1+s) = Σ cₖ sᵏ` with `c₀ = 1`, valid for `|s| < radius`.
    Series { coeffs: Vec<f64>, radius: f64 },
}

impl Default for PressureLaw {
    fn default() -> Self {
        PressureLaw::Gamma(1.4)
    }
}

impl PressureLaw {
    pub fn gamma(g: f64) -> Result<Self> {
        let p = PressureLaw::Gamma(g);
        p.validate()?;
        Ok(p)
    }

    pub fn series(coeffs: Vec<f64>, radius: f64) -> Result<Self> {
        let p = PressureLaw::Series { coeffs, radius };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PressureLaw::Gamma(g) if !(*g >= 1.0 && g.is_finite()) => {
                Err(Error::Parameter(format!("gamma = {g} must be at least 1")))
            }
            PressureLaw::Series { coeffs, radius } => {
                if coeffs.first() != Some(&1.0) {
                    return Err(Error::Parameter(
                        "pressure series must start with P'(1) = 1".into(),
                    ));
                }
                if !(*radius > 0.0) || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Parameter(
                        "pressure series needs finite coefficients and a positive radius".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Radius of convergence of `P'` about `ρ = 1`.
    pub fn radius(&self) -> f64 {
        match self {
            PressureLaw::Gamma(g) if (*g - 1.0).abs() < f64::EPSILON || (*g - 2.0).abs() < f64::EPSILON => {
                f64::INFINITY
            }
            PressureLaw::Gamma(_) => 1.0,
            PressureLaw::Series { radius, .. } => *radius,
        }
    }

    /// `P'(ρ)`.
    pub fn dp(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => rho.powf(g - 1.0),
            PressureLaw::Series { coeffs, .. } => {
                let s = rho - 1.0;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
        }
    }

    /// `𝒦(s) = P'(1+s)/(1+s) - 1`.
    pub fn k(&self, s: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) if *g == 2.0 => 0.0,
            PressureLaw::Gamma(g) => ((g - 2.0) * s.ln_1p()).exp_m1(),
            _ => self.dp(1.0 + s) / (1.0 + s) - 1.0,
        }
    }
}

/// `𝒥(s) = s/(1+s)`.
pub fn j_fn(s: f64) -> f64 {
    s / (1.0 + s)
}

/// Composition selector for the probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Composition {
    J,
    K,
}

fn check_vacuum(s: &[f64], floor: f64) -> Result<()> {
    let (index, min) = s
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &x)| if 1.0 + x < acc.1 { (i, 1.0 + x) } else { acc });
    if min <= floor {
        return Err(Error::Vacuum {
            min_density: min,
            index,
            floor,
        });
    }
    Ok(())
}

fn compose(
    s: &SpectralField,
    floor: f64,
    f: impl Fn(f64) -> f64 + Sync,
    radius: f64,
) -> Result<SpectralField> {
    if s.rank() != Rank::Scalar {
        return Err(Error::Rank("compositions act on scalar fields".into()));
    }
    let x = s.to_samples()?;
    check_vacuum(&x, floor)?;
    if radius.is_finite() {
        if let Some(bad) = x.iter().find(|v| v.abs() >= radius) {
            return Err(Error::Domain(format!(
                "|s| = {} outside the pressure series radius {radius}",
                bad.abs()
            )));
        }
    }
    let y: Vec<f64> = x.par_iter().map(|&v| f(v)).collect();
    Ok(forward_transform(&y, *s.grid())?.dealias())
}

/// `𝒥(s)` evaluated pointwise, dealiased.
pub fn cal_j(s: &SpectralField, floor: f64) -> Result<SpectralField> {
    compose(s, floor, j_fn, f64::INFINITY)
}

/// `𝒦(s)` evaluated pointwise, dealiased.
pub fn cal_k(s: &SpectralField, pressure: &PressureLaw, floor: f64) -> Result<SpectralField> {
    compose(s, floor, |v| pressure.k(v), pressure.radius())
}

fn samples(f: &SpectralField) -> Vec<f64> {
    f.to_samples_unchecked()
}

/// `𝒜[a,v] = div(av)`.
pub fn cal_a(a: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    if a.rank() != Rank::Scalar || v.rank() != Rank::Vector2 {
        return Err(Error::Rank("A[a, v] needs scalar a and vector v".into()));
    }
    crate::spectral::ensure_same_grid(a, v)?;
    let grid = *a.grid();
    let m = grid.len();
    let (xa, xv) = (samples(a), samples(v));
    let mut av = vec![0.0; 2 * m];
    av.par_chunks_mut(m).enumerate().for_each(|(c, out)| {
        for i in 0..m {
            out[i] = xa[i] * xv[c * m + i];
        }
    });
    let prod = forward_transform(&av, grid)?.dealias();
    derivative(&prod, DerivOp::Div)
}

/// The three parts of `𝒱_ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct VTerms {
    /// `(v·∇)v`.
    pub advection: SpectralField,
    /// `𝒥(εa)𝓛v`.
    pub viscous: SpectralField,
    /// `(1/ε)𝒦(εa)∇a`.
    pub pressure: SpectralField,
}

impl VTerms {
    pub fn total(&self) -> SpectralField {
        self.advection
            .add(&self.viscous)
            .and_then(|s| s.add(&self.pressure))
            .expect("terms share grid and rank")
    }
}

/// `𝓛v = μΔv + (μ+λ)∇div v`.
pub fn lame(v: &SpectralField, params: &LinearParams) -> Result<SpectralField> {
    let (mu, ml) = (params.mu, params.mu + params.lambda);
    if v.rank() != Rank::Vector2 {
        return Err(Error::Rank("the Lamé operator acts on vectors".into()));
    }
    Ok(v.map_modes(Rank::Vector2, |_, xi, c| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        let dot = c[0] * xi[0] + c[1] * xi[1];
        [
            c[0] * (-mu * r2) - dot * (ml * xi[0]),
            c[1] * (-mu * r2) - dot * (ml * xi[1]),
        ]
    }))
}

/// `(v·∇)v` alone.
pub fn advection(v: &SpectralField) -> Result<SpectralField> {
    if v.rank() != Rank::Vector2 {
        return Err(Error::Rank("advection needs a vector field".into()));
    }
    let grid = *v.grid();
    let m = grid.len();
    let xv = samples(v);
    let grads: Vec<Vec<f64>> = (0..2)
        .map(|c| Ok(samples(&derivative(&v.component_field(c), DerivOp::Grad)?)))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; 2 * m];
    out.par_chunks_mut(m).enumerate().for_each(|(c, o)| {
        let g = &grads[c];
        for i in 0..m {
            o[i] = xv[i] * g[i] + xv[m + i] * g[m + i];
        }
    });
    Ok(forward_transform(&out, grid)?.dealias())
}

/// `𝒱_ε[a,v]` split into its three parts.
pub fn cal_v_terms(
    a: &SpectralField,
    v: &SpectralField,
    params: &LinearParams,
    pressure: &PressureLaw,
    floor: f64,
) -> Result<VTerms> {
    if a.rank() != Rank::Scalar {
        return Err(Error::Rank("V[a, v] needs scalar a".into()));
    }
    crate::spectral::ensure_same_grid(a, v)?;
    let grid = *a.grid();
    let m = grid.len();
    let eps = params.eps;
    let s: Vec<f64> = samples(a).into_iter().map(|x| eps * x).collect();
    check_vacuum(&s, floor)?;
    let radius = pressure.radius();
    if radius.is_finite() {
        if let Some(bad) = s.iter().find(|v| v.abs() >= radius) {
            return Err(Error::Domain(format!(
                "|eps a| = {} outside the pressure series radius {radius}",
                bad.abs()
            )));
        }
    }
    let adv = advection(v)?;
    let lv = samples(&lame(v, params)?);
    let ga = samples(&derivative(a, DerivOp::Grad)?);
    let mut vis = vec![0.0; 2 * m];
    let mut pre = vec![0.0; 2 * m];
    vis.par_chunks_mut(m)
        .zip(pre.par_chunks_mut(m))
        .enumerate()
        .for_each(|(c, (vo, po))| {
            for i in 0..m {
                let si = s[i];
                vo[i] = j_fn(si) * lv[c * m + i];
                po[i] = pressure.k(si) * ga[c * m + i] / eps;
            }
        });
    Ok(VTerms {
        advection: adv,
        viscous: forward_transform(&vis, grid)?.dealias(),
        pressure: forward_transform(&pre, grid)?.dealias(),
    })
}

/// `𝒱_ε[a,v]`.
pub fn cal_v(
    a: &SpectralField,
    v: &SpectralField,
    params: &LinearParams,
    pressure: &PressureLaw,
    floor: f64,
) -> Result<SpectralField> {
    Ok(cal_v_terms(a, v, params, pressure, floor)?.total())
}

/// Forcing `F = (𝒜, 𝒱_ε)` of the state.
pub fn forcing(
    state: &FlowState,
    params: &LinearParams,
    pressure: &PressureLaw,
    floor: f64,
) -> Result<FlowState> {
    FlowState::new(
        cal_a(&state.a, &state.v)?,
        cal_v(&state.a, &state.v, params, pressure, floor)?,
    )
}

/// Smallest density `1 + εa` on the physical grid.
pub fn min_density(a: &SpectralField, eps: f64) -> f64 {
    samples(a).into_iter().fold(f64::INFINITY, |m, x| m.min(1.0 + eps * x))
}

/// `‖F(u)‖/‖u‖` in the requested norm, for `u` small in `FB^{2/p}_{p,1}`.
pub fn composition_probe(
    bank: &DyadicFilterBank,
    u: &SpectralField,
    which: Composition,
    pressure: &PressureLaw,
    spec: &NormSpec,
    threshold: f64,
) -> Result<f64> {
    regime(bank, u, spec.p, threshold)?;
    let nu = bank.norm(u, spec)?;
    if nu == 0.0 {
        return Ok(0.0);
    }
    let fu = apply(u, which, pressure)?;
    Ok(bank.norm(&fu, spec)? / nu)
}

/// `‖F(u) - F(w)‖/‖u - w‖`.
pub fn composition_lipschitz_probe(
    bank: &DyadicFilterBank,
    u: &SpectralField,
    w: &SpectralField,
    which: Composition,
    pressure: &PressureLaw,
    spec: &NormSpec,
    threshold: f64,
) -> Result<f64> {
    regime(bank, u, spec.p, threshold)?;
    regime(bank, w, spec.p, threshold)?;
    let d = bank.norm(&u.sub(w)?, spec)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    let fd = apply(u, which, pressure)?.sub(&apply(w, which, pressure)?)?;
    Ok(bank.norm(&fd, spec)? / d)
}

fn apply(u: &SpectralField, which: Composition, pressure: &PressureLaw) -> Result<SpectralField> {
    match which {
        Composition::J => cal_j(u, VACUUM_FLOOR),
        Composition::K => cal_k(u, pressure, VACUUM_FLOOR),
    }
}

fn regime(bank: &DyadicFilterBank, u: &SpectralField, p: f64, threshold: f64) -> Result<()> {
    let n = bank.norm(u, &NormSpec::fourier_besov(2.0 / p, p, 1.0))?;
    if n > threshold {
        return Err(Error::OutOfRegime { norm: n, threshold });
    }
    Ok(())
}

/// Physical samples of a field assumed real.
pub fn physical(f: &SpectralField) -> Vec<f64> {
    samples(f)
}
