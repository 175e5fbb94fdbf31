//! Dyadic filter bank, Besov and Fourier-Besov norms (plain, truncated and
//! time-integrated), and Bony's paraproduct decomposition.
//!
//! The radial profile is `θ̂(ξ) = χ(|ξ|)` with the smooth plateau
//! `χ = 1` on `[0,1]`, `χ = 0` on `[2,∞)`, and
//! `φ̂_j(ξ) = θ̂(2^{-j}ξ) - θ̂(2^{1-j}ξ)`, supported in `2^{j-1} ≤ |ξ| ≤ 2^{j+1}`.
//! The sum over `j_min..=j_max` telescopes to exactly one on
//! `2^{j_min} ≤ |ξ| ≤ 2^{j_max}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{ensure_same_grid, Grid, Rank, SpectralField, C64};

fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth plateau: 1 on `[0,1]`, 0 on `[2,∞)`, monotone in between.
pub fn plateau(rho: f64) -> f64 {
    if rho <= 1.0 {
        return 1.0;
    }
    if rho >= 2.0 {
        return 0.0;
    }
    let a = bump(2.0 - rho);
    let b = bump(rho - 1.0);
    a / (a + b)
}

/// `φ̂_0` as a function of `|ξ|`.
pub fn phi0(rho: f64) -> f64 {
    plateau(rho) - plateau(2.0 * rho)
}

#[derive(Clone, Debug)]
struct Shell {
    idx: Vec<u32>,
    w: Vec<f64>,
}

/// Discretised Littlewood-Paley multipliers on a grid, stored sparsely.
#[derive(Clone, Debug)]
pub struct DyadicFilterBank {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    shells: Vec<Shell>,
}

/// Resolvable shell range of a grid: `j_min = ⌊log₂(2π/L)⌋`,
/// `j_max = ⌊log₂ ξ_Nyquist⌋ - 1`.
pub fn shell_range(grid: &Grid) -> (i32, i32) {
    let j_min = grid.dk().log2().floor() as i32;
    let j_max = grid.nyquist_wavenumber().log2().floor() as i32 - 1;
    (j_min, j_max)
}

impl DyadicFilterBank {
    pub fn new(grid: Grid) -> Result<Self> {
        let (j_min, j_max) = shell_range(&grid);
        let shells = (j_max - j_min + 1).max(0) as usize;
        if shells < 4 {
            return Err(Error::InsufficientResolution { shells });
        }
        let mut bank: Vec<Shell> = (0..shells)
            .map(|_| Shell {
                idx: Vec::new(),
                w: Vec::new(),
            })
            .collect();
        for idx in 1..grid.len() {
            if grid.is_nyquist(idx) {
                continue;
            }
            let r = grid.wavenumber(idx);
            for (s, shell) in bank.iter_mut().enumerate() {
                let j = j_min + s as i32;
                let x = r * (-j as f64).exp2();
                let w = plateau(x) - plateau(2.0 * x);
                if w > 0.0 {
                    shell.idx.push(idx as u32);
                    shell.w.push(w);
                }
            }
        }
        Ok(Self {
            grid,
            j_min,
            j_max,
            shells: bank,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn shell_count(&self) -> usize {
        self.shells.len()
    }

    pub fn js(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    fn shell(&self, j: i32) -> Result<&Shell> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::ShellIndex {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok(&self.shells[(j - self.j_min) as usize])
    }

    /// Nonzero entries `(flat index, φ̂_j)` of shell `j`.
    pub fn multiplier(&self, j: i32) -> Result<impl Iterator<Item = (usize, f64)> + '_> {
        let s = self.shell(j)?;
        Ok(s.idx.iter().map(|&i| i as usize).zip(s.w.iter().copied()))
    }

    /// `Σ_j φ̂_j` at each grid mode.
    pub fn partition_sum(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.grid.len()];
        for shell in &self.shells {
            for (&i, &w) in shell.idx.iter().zip(&shell.w) {
                sum[i as usize] += w;
            }
        }
        sum
    }

    fn check(&self, f: &SpectralField) -> Result<()> {
        if f.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `Δ_j f`.
    pub fn delta(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check(f)?;
        let shell = self.shell(j)?;
        let m = self.grid.len();
        let mut out = SpectralField::zeros(self.grid, f.rank());
        for c in 0..f.rank().components() {
            let src = f.component(c);
            let dst = &mut out.coeffs_mut()[c * m..(c + 1) * m];
            for (&i, &w) in shell.idx.iter().zip(&shell.w) {
                dst[i as usize] = src[i as usize] * w;
            }
        }
        Ok(out)
    }

    /// `S_j f = Σ_{j_min ≤ j' ≤ j} Δ_{j'} f`; zero when `j < j_min`.
    pub fn low_pass(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check(f)?;
        if j > self.j_max {
            return Err(Error::ShellIndex {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        let m = self.grid.len();
        let mut out = SpectralField::zeros(self.grid, f.rank());
        for jj in self.j_min..=j {
            let shell = self.shell(jj)?;
            for c in 0..f.rank().components() {
                let src = f.component(c);
                let dst = &mut out.coeffs_mut()[c * m..(c + 1) * m];
                for (&i, &w) in shell.idx.iter().zip(&shell.w) {
                    dst[i as usize] += src[i as usize] * w;
                }
            }
        }
        Ok(out)
    }

    /// Unweighted per-shell norms `‖Δ_j f‖` in the requested flavor.
    pub fn profile(&self, f: &SpectralField, flavor: Flavor, p: f64) -> Result<ShellProfile> {
        self.check(f)?;
        let values: Vec<f64> = self
            .js()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&j| self.shell_norm(f, j, flavor, p))
            .collect::<Result<_>>()?;
        Ok(ShellProfile {
            j_min: self.j_min,
            values,
        })
    }

    fn shell_norm(&self, f: &SpectralField, j: i32, flavor: Flavor, p: f64) -> Result<f64> {
        let shell = self.shell(j)?;
        let m = self.grid.len();
        let comps = f.rank().components();
        match flavor {
            Flavor::FourierBesov => {
                let q = conjugate(p);
                let mags = shell.idx.iter().zip(&shell.w).map(|(&i, &w)| {
                    let i = i as usize;
                    let s: f64 = (0..comps).map(|c| f.coeffs()[c * m + i].norm_sqr()).sum();
                    w * s.sqrt()
                });
                Ok(lp(mags, q, self.grid.dual_cell()))
            }
            Flavor::Besov => {
                let d = self.delta(f, j)?;
                let x = d.to_samples_unchecked();
                let mags = (0..m).map(|i| {
                    let s: f64 = (0..comps).map(|c| x[c * m + i].powi(2)).sum();
                    s.sqrt()
                });
                Ok(lp(mags, p, self.grid.cell_area()))
            }
        }
    }

    /// Norm of a single field. Fails with a usage error if `spec.time_r` is set.
    pub fn norm(&self, f: &SpectralField, spec: &NormSpec) -> Result<f64> {
        spec.validate()?;
        if spec.time_r.is_some() {
            return Err(Error::Usage(
                "a time exponent needs a time series, not a single field".into(),
            ));
        }
        Ok(self
            .profile(f, spec.flavor, spec.p)?
            .combine(spec.s, spec.sigma, spec.truncation))
    }

    /// Chemin-Lerner norm `L̃^r(I; B)` of a time series.
    pub fn norm_series(&self, series: &TimeSeries<SpectralField>, spec: &NormSpec) -> Result<f64> {
        spec.validate()?;
        let r = spec.time_r.ok_or_else(|| {
            Error::Usage("time series norm requires a time exponent r".into())
        })?;
        let profiles = series
            .states()
            .iter()
            .map(|f| self.profile(f, spec.flavor, spec.p))
            .collect::<Result<Vec<_>>>()?;
        chemin_lerner(series.times(), &profiles, spec.s, r, spec.sigma, spec.truncation)
    }

    /// `T_f g = Σ_k S_{k-3} f Δ_k g`, dealiased.
    pub fn paraproduct_t(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        let (fs, gs) = self.shell_samples_pair(f, g)?;
        let m = self.grid.len();
        let n = self.shells.len();
        let mut acc = vec![0.0; m];
        let mut low = vec![0.0; m];
        for k in 0..n {
            if k >= 3 {
                for (l, x) in low.iter_mut().zip(&fs[k - 3]) {
                    *l += x;
                }
                for i in 0..m {
                    acc[i] += low[i] * gs[k][i];
                }
            }
        }
        self.finish(&acc)
    }

    /// `R(f,g) = Σ_{|k-j| ≤ 2} Δ_k f Δ_j g`, dealiased.
    pub fn remainder_r(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        let (fs, gs) = self.shell_samples_pair(f, g)?;
        let m = self.grid.len();
        let n = self.shells.len() as i64;
        let mut acc = vec![0.0; m];
        for k in 0..n {
            for j in (k - 2).max(0)..=(k + 2).min(n - 1) {
                let (a, b) = (&fs[k as usize], &gs[j as usize]);
                for i in 0..m {
                    acc[i] += a[i] * b[i];
                }
            }
        }
        self.finish(&acc)
    }

    fn finish(&self, samples: &[f64]) -> Result<SpectralField> {
        let mut out = SpectralField::from_samples(self.grid, Rank::Scalar, samples)?;
        out.dealias_in_place();
        Ok(out)
    }

    fn shell_samples_pair(
        &self,
        f: &SpectralField,
        g: &SpectralField,
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        ensure_same_grid(f, g)?;
        self.check(f)?;
        if f.rank() != Rank::Scalar || g.rank() != Rank::Scalar {
            return Err(Error::Rank("paraproducts act on scalar fields".into()));
        }
        Ok((self.shell_samples(f)?, self.shell_samples(g)?))
    }

    fn shell_samples(&self, f: &SpectralField) -> Result<Vec<Vec<f64>>> {
        self.js()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&j| Ok(self.delta(f, j)?.to_samples_unchecked()))
            .collect()
    }
}

/// Build the filter bank of a grid.
pub fn build_filter_bank(grid: Grid) -> Result<DyadicFilterBank> {
    DyadicFilterBank::new(grid)
}

/// Hölder conjugate `p' = p/(p-1)`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Riemann-sum `L^p` norm of magnitudes with cell measure `cell`.
fn lp(values: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else if p == 2.0 {
        (values.map(|x| x * x).sum::<f64>() * cell).sqrt()
    } else if p == 1.0 {
        values.sum::<f64>() * cell
    } else {
        (values.map(|x| x.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `ℓ^σ` norm of a finite sequence.
pub fn l_sigma(values: impl Iterator<Item = f64>, sigma: f64) -> f64 {
    if sigma.is_infinite() {
        values.fold(0.0, f64::max)
    } else if sigma == 1.0 {
        values.sum()
    } else {
        values.map(|x| x.powf(sigma)).sum::<f64>().powf(1.0 / sigma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Besov,
    FourierBesov,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Besov => "besov",
            Flavor::FourierBesov => "fourier_besov",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "besov" | "B" => Some(Flavor::Besov),
            "fourier_besov" | "FB" => Some(Flavor::FourierBesov),
            _ => None,
        }
    }
}

/// Restriction of the shell sum: low `2^j < α`, mid `α ≤ 2^j < β`, high `2^j ≥ β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    None,
    Low(f64),
    Mid(f64, f64),
    High(f64),
}

impl Truncation {
    pub fn admits(self, j: i32) -> bool {
        let x = (j as f64).exp2();
        match self {
            Truncation::None => true,
            Truncation::Low(a) => x < a,
            Truncation::Mid(a, b) => a <= x && x < b,
            Truncation::High(b) => x >= b,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Truncation::None => "none",
            Truncation::Low(_) => "low",
            Truncation::Mid(..) => "mid",
            Truncation::High(_) => "high",
        }
    }

    pub fn alpha(self) -> Option<f64> {
        match self {
            Truncation::Low(a) | Truncation::Mid(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn beta(self) -> Option<f64> {
        match self {
            Truncation::Mid(_, b) | Truncation::High(b) => Some(b),
            _ => None,
        }
    }
}

/// A norm request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub flavor: Flavor,
    pub s: f64,
    pub p: f64,
    pub sigma: f64,
    pub truncation: Truncation,
    pub time_r: Option<f64>,
}

impl NormSpec {
    pub fn new(flavor: Flavor, s: f64, p: f64, sigma: f64) -> Self {
        Self {
            flavor,
            s,
            p,
            sigma,
            truncation: Truncation::None,
            time_r: None,
        }
    }

    pub fn fourier_besov(s: f64, p: f64, sigma: f64) -> Self {
        Self::new(Flavor::FourierBesov, s, p, sigma)
    }

    pub fn besov(s: f64, p: f64, sigma: f64) -> Self {
        Self::new(Flavor::Besov, s, p, sigma)
    }

    pub fn truncated(mut self, t: Truncation) -> Self {
        self.truncation = t;
        self
    }

    pub fn in_time(mut self, r: f64) -> Self {
        self.time_r = Some(r);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let exp_ok = |x: f64| x >= 1.0 && !x.is_nan();
        if !exp_ok(self.p) {
            return Err(Error::Parameter(format!("p = {} outside [1, ∞]", self.p)));
        }
        if !exp_ok(self.sigma) {
            return Err(Error::Parameter(format!("sigma = {} outside [1, ∞]", self.sigma)));
        }
        if let Some(r) = self.time_r {
            if !exp_ok(r) {
                return Err(Error::Parameter(format!("r = {r} outside [1, ∞]")));
            }
        }
        if !self.s.is_finite() {
            return Err(Error::Parameter("s must be finite".into()));
        }
        match self.truncation {
            Truncation::Mid(a, b) if !(0.0 < a && a < b) => Err(Error::Parameter(format!(
                "mid truncation needs 0 < alpha < beta, got ({a}, {b})"
            ))),
            Truncation::Low(a) | Truncation::High(a) if !(a > 0.0) => Err(Error::Parameter(
                format!("truncation threshold {a} must be positive"),
            )),
            _ => Ok(()),
        }
    }
}

/// Per-shell norms `‖Δ_j f‖` (unweighted) for `j = j_min, j_min+1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellProfile {
    pub j_min: i32,
    pub values: Vec<f64>,
}

impl ShellProfile {
    pub fn j(&self, i: usize) -> i32 {
        self.j_min + i as i32
    }

    /// `‖{2^{js} ‖Δ_j f‖}_{j admitted}‖_{ℓ^σ}`.
    pub fn combine(&self, s: f64, sigma: f64, trunc: Truncation) -> f64 {
        l_sigma(self.weighted(s, trunc), sigma)
    }

    fn weighted(&self, s: f64, trunc: Truncation) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(move |(i, _)| trunc.admits(self.j(*i)))
            .map(move |(i, v)| (s * self.j(i) as f64).exp2() * v)
    }

    /// Sum of two profiles, shell by shell.
    pub fn add(&self, other: &ShellProfile) -> ShellProfile {
        ShellProfile {
            j_min: self.j_min,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }
}

/// `(∫ g^r dt)^{1/r}` by the trapezoidal rule; `r = ∞` is the max.
pub fn time_lr(times: &[f64], values: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        acc += 0.5 * h * (values[k - 1].powf(r) + values[k].powf(r));
    }
    if r == 1.0 {
        acc
    } else {
        acc.powf(1.0 / r)
    }
}

fn check_series(times: &[f64], n: usize) -> Result<()> {
    if times.len() != n {
        return Err(Error::Dimension {
            expected: times.len(),
            got: n,
        });
    }
    if times.len() < 2 {
        return Err(Error::Usage("time-integrated norms need at least two samples".into()));
    }
    Ok(())
}

/// Chemin-Lerner norm `L̃^r(I; B^s_{·,σ})`: time-`L^r` per shell, then `ℓ^σ`.
pub fn chemin_lerner(
    times: &[f64],
    profiles: &[ShellProfile],
    s: f64,
    r: f64,
    sigma: f64,
    trunc: Truncation,
) -> Result<f64> {
    check_series(times, profiles.len())?;
    let shells = profiles[0].values.len();
    let per_shell = ShellProfile {
        j_min: profiles[0].j_min,
        values: (0..shells)
            .map(|i| {
                let g: Vec<f64> = profiles.iter().map(|p| p.values[i]).collect();
                time_lr(times, &g, r)
            })
            .collect(),
    };
    Ok(per_shell.combine(s, sigma, trunc))
}

/// Bochner norm `L^r(I; B^s_{·,σ})`: `ℓ^σ` at each time, then time-`L^r`.
pub fn bochner(
    times: &[f64],
    profiles: &[ShellProfile],
    s: f64,
    r: f64,
    sigma: f64,
    trunc: Truncation,
) -> Result<f64> {
    check_series(times, profiles.len())?;
    let g: Vec<f64> = profiles.iter().map(|p| p.combine(s, sigma, trunc)).collect();
    Ok(time_lr(times, &g, r))
}

/// Snapshot times and matching states.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    times: Vec<f64>,
    states: Vec<T>,
}

impl<T> Default for TimeSeries<T> {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
        }
    }
}

impl<T> TimeSeries<T> {
    pub fn new(times: Vec<f64>, states: Vec<T>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                got: states.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("snapshot times must increase strictly".into()));
        }
        Ok(Self { times, states })
    }

    pub fn push(&mut self, t: f64, state: T) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Parameter(format!("time {t} does not follow {last}")));
            }
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[T] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &T)> {
        self.times.last().map(|&t| (t, self.states.last().unwrap()))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> TimeSeries<U> {
        TimeSeries {
            times: self.times.clone(),
            states: self.states.iter().map(f).collect(),
        }
    }
}

/// Inequality probed by [`probe_product_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProductCase {
    /// `‖T_f g‖_{B^{s1+s2}_{p,σ}} ≤ C ‖f‖_{B^{s1}_{p1,1}} ‖g‖_{B^{s2}_{p2,σ}}`, `s1 ≤ 0`.
    Paraproduct { s1: f64, s2: f64, p1: f64, p2: f64, sigma: f64 },
    /// `‖R(f,g)‖_{B^{s1+s2}_{p,σ}} ≤ C ‖f‖_{B^{s1}_{p1,σ1}} ‖g‖_{B^{s2}_{p2,σ2}}`, `s1+s2 > 0`.
    Remainder { s1: f64, s2: f64, p1: f64, p2: f64, sigma: f64, sigma1: f64, sigma2: f64 },
    /// General product estimate with shifts `α1, α2 ≥ 0`.
    Product { s: f64, p: f64, p1: f64, p2: f64, sigma: f64, alpha1: f64, alpha2: f64 },
    /// Low-frequency truncated paraproduct: `ℓ;β` on the left, `ℓ;β` and `ℓ;4β` on the right.
    ParaproductLow { s1: f64, s2: f64, p1: f64, p2: f64, sigma: f64, beta: f64 },
    /// High-frequency truncated paraproduct: `h;β` on the left, `h;β/4` for `g`.
    ParaproductHigh { s1: f64, s2: f64, p1: f64, p2: f64, sigma: f64, beta: f64 },
}

fn combined_p(p1: f64, p2: f64) -> Result<f64> {
    let inv = 1.0 / p1 + 1.0 / p2;
    if inv > 1.0 + 1e-15 {
        return Err(Error::Parameter(format!(
            "1/p1 + 1/p2 = {inv} exceeds 1"
        )));
    }
    Ok(if inv == 0.0 { f64::INFINITY } else { 1.0 / inv })
}

/// LHS/RHS of a product or paraproduct inequality for one pair of fields.
/// Returns 0 when both sides vanish.
pub fn probe_product_estimate(
    bank: &DyadicFilterBank,
    f: &SpectralField,
    g: &SpectralField,
    case: ProductCase,
    flavor: Flavor,
) -> Result<f64> {
    let n = |x: &SpectralField, s: f64, p: f64, sigma: f64, t: Truncation| {
        bank.norm(x, &NormSpec::new(flavor, s, p, sigma).truncated(t))
    };
    let none = Truncation::None;
    let (lhs, rhs) = match case {
        ProductCase::Paraproduct { s1, s2, p1, p2, sigma } => {
            if s1 > 0.0 {
                return Err(Error::Parameter("paraproduct estimate needs s1 <= 0".into()));
            }
            let p = combined_p(p1, p2)?;
            let t = bank.paraproduct_t(f, g)?;
            (
                n(&t, s1 + s2, p, sigma, none)?,
                n(f, s1, p1, 1.0, none)? * n(g, s2, p2, sigma, none)?,
            )
        }
        ProductCase::Remainder { s1, s2, p1, p2, sigma, sigma1, sigma2 } => {
            if s1 + s2 <= 0.0 {
                return Err(Error::Parameter("remainder estimate needs s1 + s2 > 0".into()));
            }
            if 1.0 / sigma > 1.0 / sigma1 + 1.0 / sigma2 {
                return Err(Error::Parameter("needs 1/sigma <= 1/sigma1 + 1/sigma2".into()));
            }
            let p = combined_p(p1, p2)?;
            let r = bank.remainder_r(f, g)?;
            (
                n(&r, s1 + s2, p, sigma, none)?,
                n(f, s1, p1, sigma1, none)? * n(g, s2, p2, sigma2, none)?,
            )
        }
        ProductCase::Product { s, p, p1, p2, sigma, alpha1, alpha2 } => {
            if alpha1 < 0.0 || alpha2 < 0.0 {
                return Err(Error::Parameter("alpha1, alpha2 must be nonnegative".into()));
            }
            if s + (2.0 / p1).min(2.0 / conjugate(p)) <= 0.0 {
                return Err(Error::Parameter("needs s + min(2/p1, 2/p') > 0".into()));
            }
            let fg = crate::spectral::multiply(f, g)?;
            (
                n(&fg, s, p, sigma, none)?,
                n(f, 2.0 / p1 - alpha1, p1, 1.0, none)? * n(g, s + alpha1, p, sigma, none)?
                    + n(f, s + alpha2, p, sigma, none)? * n(g, 2.0 / p2 - alpha2, p2, 1.0, none)?,
            )
        }
        ProductCase::ParaproductLow { s1, s2, p1, p2, sigma, beta } => {
            if s1 > 0.0 || beta <= 0.0 {
                return Err(Error::Parameter("needs s1 <= 0 and beta > 0".into()));
            }
            let p = combined_p(p1, p2)?;
            let t = bank.paraproduct_t(f, g)?;
            (
                n(&t, s1 + s2, p, sigma, Truncation::Low(beta))?,
                n(f, s1, p1, 1.0, Truncation::Low(beta))?
                    * n(g, s2, p2, sigma, Truncation::Low(4.0 * beta))?,
            )
        }
        ProductCase::ParaproductHigh { s1, s2, p1, p2, sigma, beta } => {
            if s1 > 0.0 || beta <= 0.0 {
                return Err(Error::Parameter("needs s1 <= 0 and beta > 0".into()));
            }
            let p = combined_p(p1, p2)?;
            let t = bank.paraproduct_t(f, g)?;
            (
                n(&t, s1 + s2, p, sigma, Truncation::High(beta))?,
                n(f, s1, p1, 1.0, none)? * n(g, s2, p2, sigma, Truncation::High(beta / 4.0))?,
            )
        }
    };
    if lhs == 0.0 && rhs == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs / rhs)
}

/// Random real scalar field supported on the given shells (zero mean,
/// no Nyquist content), for probes and tests.
pub fn random_band_field(
    bank: &DyadicFilterBank,
    j_lo: i32,
    j_hi: i32,
    rng: &mut impl rand::Rng,
) -> SpectralField {
    let grid = *bank.grid();
    let lo = (j_lo as f64 - 1.0).exp2();
    let hi = (j_hi as f64 + 1.0).exp2();
    let mut f = SpectralField::zeros(grid, Rank::Scalar);
    for idx in 1..grid.len() {
        let r = grid.wavenumber(idx);
        if r >= lo && r <= hi && !grid.is_nyquist(idx) && grid.is_retained(idx) {
            f.coeffs_mut()[idx] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    f.symmetrize();
    f
}

/// Result of one bank self-check: a residual and the tolerance it is held to.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub tested: usize,
}

impl IntegrityCheck {
    pub fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Partition of unity on the interior band, Bony reconstruction, Besov vs
/// Fourier-Besov at `p = 2`, and exact recombination of truncated norms.
pub fn integrity_checks(bank: &DyadicFilterBank, rng: &mut impl rand::Rng) -> Result<Vec<IntegrityCheck>> {
    let g = *bank.grid();
    let sum = bank.partition_sum();
    let (lo, hi) = ((bank.j_min() as f64).exp2(), (bank.j_max() as f64).exp2());
    let mut pu = 0.0f64;
    let mut tested = 0;
    for idx in 1..g.len() {
        let r = g.wavenumber(idx);
        if r >= lo && r <= hi && !g.is_nyquist(idx) {
            pu = pu.max((sum[idx] - 1.0).abs());
            tested += 1;
        }
    }
    let mut out = vec![IntegrityCheck {
        name: "partition_of_unity",
        residual: pu,
        tolerance: 1e-10,
        tested,
    }];

    let f = random_band_field(bank, bank.j_min(), bank.j_max() - 1, rng);
    let h = random_band_field(bank, bank.j_min(), bank.j_max() - 1, rng);
    let fh = crate::spectral::multiply(&f, &h)?;
    let bony = bank
        .paraproduct_t(&f, &h)?
        .add(&bank.paraproduct_t(&h, &f)?)?
        .add(&bank.remainder_r(&f, &h)?)?;
    let den = fh.l2_norm_squared().sqrt();
    out.push(IntegrityCheck {
        name: "bony_reconstruction",
        residual: if den > 0.0 { bony.sub(&fh)?.l2_norm_squared().sqrt() / den } else { 0.0 },
        tolerance: 1e-8,
        tested: g.len(),
    });

    let mut worst = 0.0f64;
    for s in [-0.5, 0.0, 1.0] {
        for sigma in [1.0, 2.0, f64::INFINITY] {
            let b = bank.norm(&f, &NormSpec::besov(s, 2.0, sigma))?;
            let fb = bank.norm(&f, &NormSpec::fourier_besov(s, 2.0, sigma))?;
            worst = worst.max((b - fb).abs() / fb.max(f64::MIN_POSITIVE));
        }
    }
    out.push(IntegrityCheck {
        name: "besov_equals_fourier_besov_p2",
        residual: worst,
        tolerance: 1e-8,
        tested: 9,
    });

    let base = NormSpec::fourier_besov(0.3, 3.0, 1.0);
    let full = bank.norm(&f, &base)?;
    let (a, b) = ((bank.j_min() as f64 + 1.5).exp2(), (bank.j_max() as f64 - 0.5).exp2());
    let parts: f64 = [Truncation::Low(a), Truncation::Mid(a, b), Truncation::High(b)]
        .iter()
        .map(|&t| bank.norm(&f, &base.truncated(t)))
        .sum::<Result<f64>>()?;
    out.push(IntegrityCheck {
        name: "truncation_recombination",
        residual: (parts - full).abs(),
        tolerance: 4.0 * f64::EPSILON * full,
        tested: 3,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn bank(n: usize) -> DyadicFilterBank {
        DyadicFilterBank::new(Grid::new(2.0 * PI * 16.0, n).unwrap()).unwrap()
    }

    #[test]
    fn integrity_checks_pass_and_name_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let checks = integrity_checks(&bank(64), &mut rng).unwrap();
        let names: Vec<&str> = checks.iter().map(|c| c.name).collect();
        assert!(names.contains(&"partition_of_unity") && names.contains(&"bony_reconstruction"));
        for c in &checks {
            assert!(c.pass(), "{} residual {} > {}", c.name, c.residual, c.tolerance);
            assert!(c.tested > 0);
        }
        let bad = IntegrityCheck { name: "x", residual: 2.0, tolerance: 1.0, tested: 1 };
        assert!(!bad.pass());
    }

    #[test]
    fn profile_shape() {
        assert_eq!(plateau(0.5), 1.0);
        assert_eq!(plateau(2.5), 0.0);
        assert!((plateau(1.5) - 0.5).abs() < 1e-15);
        for k in 0..200 {
            let r = 0.01 * k as f64;
            let v = phi0(r);
            assert!((0.0..=1.0).contains(&v));
            if r <= 0.5 || r >= 2.0 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn default_grid_range() {
        let b = bank(256);
        assert_eq!((b.j_min(), b.j_max()), (-4, 2));
        // enumerate nonzero multipliers: every shell is populated
        for j in b.js() {
            assert!(b.multiplier(j).unwrap().count() > 0);
        }
        assert!(b.delta(&SpectralField::zeros(*b.grid(), Rank::Scalar), 3).is_err());
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = Grid::new(2.0 * PI * 16.0, 16).unwrap();
        assert!(matches!(
            DyadicFilterBank::new(g),
            Err(Error::InsufficientResolution { .. })
        ));
    }

    #[test]
    fn partition_of_unity() {
        for n in [64, 128, 256] {
            let b = bank(n);
            let sum = b.partition_sum();
            let (lo, hi) = ((b.j_min() as f64).exp2(), (b.j_max() as f64).exp2());
            let g = b.grid();
            let mut tested = 0;
            for idx in 1..g.len() {
                let r = g.wavenumber(idx);
                if r >= lo && r <= hi && !g.is_nyquist(idx) {
                    assert!((sum[idx] - 1.0).abs() < 1e-10);
                    tested += 1;
                }
            }
            assert!(tested > 100);
        }
    }

    #[test]
    fn non_adjacent_shells_disjoint() {
        let b = bank(128);
        let m = b.grid().len();
        let dense = |j| {
            let mut v = vec![0.0; m];
            for (i, w) in b.multiplier(j).unwrap() {
                v[i] = w;
            }
            v
        };
        for j in b.js() {
            for jj in (j + 2)..=b.j_max() {
                let (a, c) = (dense(j), dense(jj));
                assert!(a.iter().zip(&c).all(|(x, y)| x * y == 0.0));
            }
        }
    }

    #[test]
    fn narrow_band_hits_three_shells() {
        let b = bank(256);
        let g = *b.grid();
        let f = SpectralField::from_fn(g, Rank::Scalar, |idx, _| {
            let r = g.wavenumber(idx);
            let v = if (0.9..=1.1).contains(&r) { 1.0 } else { 0.0 };
            [C64::new(v, 0.0), C64::new(0.0, 0.0)]
        });
        for j in b.js() {
            let d = b.delta(&f, j).unwrap();
            assert_eq!(d.is_zero(), !(-1..=1).contains(&j), "j={j}");
        }
    }

    #[test]
    fn shell_sum_and_low_pass_reconstruct() {
        let b = bank(128);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_band_field(&b, b.j_min() + 1, b.j_max() - 1, &mut rng);
        let mut acc = SpectralField::zeros(*b.grid(), Rank::Scalar);
        for j in b.js() {
            acc = acc.add(&b.delta(&f, j).unwrap()).unwrap();
        }
        assert!(acc.sub(&f).unwrap().max_abs() < 1e-10 * f.max_abs());
        let s = b.low_pass(&f, b.j_max()).unwrap();
        assert!(s.sub(&f).unwrap().max_abs() < 1e-10 * f.max_abs());
    }

    #[test]
    fn besov_matches_fourier_besov_at_p2() {
        let b = bank(128);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_band_field(&b, b.j_min(), b.j_max(), &mut rng);
        for (s, sigma) in [(0.0, 1.0), (0.5, 2.0), (-1.0, f64::INFINITY)] {
            let x = b.norm(&f, &NormSpec::besov(s, 2.0, sigma)).unwrap();
            let y = b.norm(&f, &NormSpec::fourier_besov(s, 2.0, sigma)).unwrap();
            assert!((x - y).abs() < 1e-8 * x);
        }
    }

    #[test]
    fn single_shell_quadrature() {
        let b = bank(128);
        let g = *b.grid();
        let f = SpectralField::from_fn(g, Rank::Scalar, |idx, _| {
            [C64::new(phi0(g.wavenumber(idx)), 0.0), C64::new(0.0, 0.0)]
        })
        .map_modes(Rank::Scalar, |_, _, c| c);
        let got = b.norm(&f, &NormSpec::fourier_besov(0.0, 2.0, 1.0)).unwrap();
        // independent quadrature: Σ_j (L⁻² Σ_ξ (φ̂_j φ̂_0)²)^{1/2}
        let mut want = 0.0;
        for j in -1..=1 {
            let mut acc = 0.0;
            for idx in 1..g.len() {
                if g.is_nyquist(idx) {
                    continue;
                }
                let r = g.wavenumber(idx);
                let w = phi0(r * (-j as f64).exp2());
                acc += (w * phi0(r)).powi(2);
            }
            want += (acc * g.dual_cell()).sqrt();
        }
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let b = bank(64);
        let z = SpectralField::zeros(*b.grid(), Rank::Vector2);
        for fl in [Flavor::Besov, Flavor::FourierBesov] {
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                assert_eq!(b.norm(&z, &NormSpec::new(fl, 0.5, p, 1.0)).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn time_exponent_on_single_field_is_usage_error() {
        let b = bank(64);
        let z = SpectralField::zeros(*b.grid(), Rank::Scalar);
        let spec = NormSpec::fourier_besov(0.0, 2.0, 1.0).in_time(2.0);
        assert!(matches!(b.norm(&z, &spec), Err(Error::Usage(_))));
    }

    #[test]
    fn truncations_recombine() {
        let b = bank(128);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_band_field(&b, b.j_min(), b.j_max(), &mut rng);
        let base = NormSpec::fourier_besov(0.3, 3.0, 1.0);
        let full = b.norm(&f, &base).unwrap();
        let (a, be) = (0.25, 1.0);
        let parts: f64 = [Truncation::Low(a), Truncation::Mid(a, be), Truncation::High(be)]
            .iter()
            .map(|&t| b.norm(&f, &base.truncated(t)).unwrap())
            .sum();
        assert!((parts - full).abs() <= 4.0 * f64::EPSILON * full);
    }

    #[test]
    fn bony_identity() {
        let b = bank(64);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_band_field(&b, b.j_min(), b.j_max() - 1, &mut rng);
        let g = random_band_field(&b, b.j_min(), b.j_max() - 1, &mut rng);
        let fg = crate::spectral::multiply(&f, &g).unwrap();
        let sum = b
            .paraproduct_t(&f, &g)
            .unwrap()
            .add(&b.paraproduct_t(&g, &f).unwrap())
            .unwrap()
            .add(&b.remainder_r(&f, &g).unwrap())
            .unwrap();
        let res = sum.sub(&fg).unwrap().l2_norm_squared().sqrt() / fg.l2_norm_squared().sqrt();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn separated_shells() {
        let b = bank(256);
        let g = *b.grid();
        let shell_field = |j: i32| {
            SpectralField::from_fn(g, Rank::Scalar, |idx, _| {
                let w = phi0(g.wavenumber(idx) * (-j as f64).exp2());
                [C64::new(w, 0.0), C64::new(0.0, 0.0)]
            })
            .map_modes(Rank::Scalar, |_, _, c| c)
        };
        let f = shell_field(-2);
        let h = shell_field(1);
        // shells -3..=-1 versus 0..=2: no pair within distance 2 except (-1, 0), (-1, 1)
        let far_f = shell_field(-3);
        let far_h = shell_field(2);
        assert!(b.remainder_r(&far_f, &far_h).unwrap().max_abs() < 1e-12);
        assert!(b.paraproduct_t(&far_h, &far_f).unwrap().max_abs() < 1e-12);
        assert!(!b.paraproduct_t(&f, &h).unwrap().is_zero());
        let z = SpectralField::zeros(g, Rank::Scalar);
        assert!(b.paraproduct_t(&f, &z).unwrap().is_zero());
        assert!(b.remainder_r(&f, &z).unwrap().is_zero());
    }

    #[test]
    fn chemin_lerner_versus_bochner() {
        let times = [0.0, 0.5, 1.0];
        let profiles = vec![
            ShellProfile { j_min: 0, values: vec![1.0, 0.0] },
            ShellProfile { j_min: 0, values: vec![0.5, 0.5] },
            ShellProfile { j_min: 0, values: vec![0.0, 1.0] },
        ];
        let n = Truncation::None;
        let cl = chemin_lerner(&times, &profiles, 0.0, 1.0, 1.0, n).unwrap();
        let bo = bochner(&times, &profiles, 0.0, 1.0, 1.0, n).unwrap();
        assert!((cl - 1.0).abs() < 1e-15 && (bo - 1.0).abs() < 1e-15);
        let cl = chemin_lerner(&times, &profiles, 0.0, f64::INFINITY, 1.0, n).unwrap();
        let bo = bochner(&times, &profiles, 0.0, f64::INFINITY, 1.0, n).unwrap();
        assert_eq!((cl, bo), (2.0, 1.0));
        assert!(chemin_lerner(&times[..1], &profiles[..1], 0.0, 1.0, 1.0, n).is_err());
    }

    #[test]
    fn product_probe_symmetry_and_scaling() {
        let b = bank(64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_band_field(&b, b.j_min(), b.j_max() - 1, &mut rng);
        let g = random_band_field(&b, b.j_min(), b.j_max() - 1, &mut rng);
        let case = ProductCase::Remainder {
            s1: 0.5, s2: 0.5, p1: 4.0, p2: 4.0, sigma: 1.0, sigma1: 1.0, sigma2: 1.0,
        };
        let x = probe_product_estimate(&b, &f, &g, case, Flavor::FourierBesov).unwrap();
        let y = probe_product_estimate(&b, &g, &f, case, Flavor::FourierBesov).unwrap();
        assert!((x - y).abs() < 1e-10 * x);
        let t = ProductCase::Paraproduct { s1: 0.0, s2: 1.0, p1: 4.0, p2: 4.0, sigma: 1.0 };
        let a = probe_product_estimate(&b, &f, &g, t, Flavor::FourierBesov).unwrap();
        let c = probe_product_estimate(&b, &f.scale(2.0), &g, t, Flavor::FourierBesov).unwrap();
        assert!((a - c).abs() < 1e-12 * a);
        let bad = ProductCase::Paraproduct { s1: 0.5, s2: 1.0, p1: 4.0, p2: 4.0, sigma: 1.0 };
        assert!(probe_product_estimate(&b, &f, &g, bad, Flavor::Besov).is_err());
    }
}
