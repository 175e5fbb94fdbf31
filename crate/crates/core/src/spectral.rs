//! Periodic grid, discrete Fourier transforms, spectral derivatives and the
//! Helmholtz decomposition.
//!
//! Coefficients follow a Riemann-sum discretisation of the continuum
//! transform pair on the torus `[0, L)²`:
//!
//! ```text
//! f̂(ξ_k) = (L/N)² Σ_x e^{-i x·ξ_k} f(x),      f(x) = L⁻² Σ_k e^{i x·ξ_k} f̂(ξ_k)
//! ```
//!
//! with `ξ_k = 2πk/L`, `k ∈ [-N/2, N/2)²`. Storage is row-major with the
//! first axis (x₁) outermost: flat index `i1 * N + i2`. Vector fields store
//! their two components as consecutive blocks of `N²` coefficients.
//!
//! Every spectral operator returns a field whose Nyquist row and column are
//! zero; those modes have no well-defined direction and break Hermitian
//! symmetry under odd symbols.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative tolerance on the Hermitian defect accepted by [`inverse_transform`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Uniform periodic grid on `[0, side)²` with `n` modes per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    side: f64,
    n: usize,
}

impl Grid {
    pub fn new(side: f64, n: usize) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidGrid(format!("side length {side} must be positive")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "mode count {n} must be a power of two >= 4"
            )));
        }
        Ok(Self { side, n })
    }

    /// The default box `L = 2π·16`, `N = 256`.
    pub fn default_box() -> Self {
        Self {
            side: 2.0 * PI * 16.0,
            n: 256,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Number of grid points (and of Fourier modes) per scalar component.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.side
    }

    /// Largest resolved wavenumber per axis, `dk · N/2`.
    pub fn nyquist_wavenumber(&self) -> f64 {
        self.dk() * (self.n / 2) as f64
    }

    /// Signed mode number of storage index `i` along one axis.
    #[inline]
    pub fn mode_number(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n + i2
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n, idx % self.n)
    }

    /// Integer mode vector `k` of a flat index.
    #[inline]
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        let (i1, i2) = self.split(idx);
        (self.mode_number(i1), self.mode_number(i2))
    }

    /// Wavevector `ξ_k = 2πk/L` of a flat index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let (k1, k2) = self.mode(idx);
        let dk = self.dk();
        [dk * k1 as f64, dk * k2 as f64]
    }

    #[inline]
    pub fn wavenumber(&self, idx: usize) -> f64 {
        let [x1, x2] = self.wavevector(idx);
        x1.hypot(x2)
    }

    /// True when either mode number sits on the Nyquist frequency `-N/2`.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let (i1, i2) = self.split(idx);
        i1 == self.n / 2 || i2 == self.n / 2
    }

    /// Flat index of the mode `-k`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let (i1, i2) = self.split(idx);
        self.index((self.n - i1) % self.n, (self.n - i2) % self.n)
    }

    /// True when the mode survives the 2/3 rule, `max(|k₁|,|k₂|) ≤ N/3`.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let (k1, k2) = self.mode(idx);
        let n = self.n as i64;
        3 * k1.abs() <= n && 3 * k2.abs() <= n
    }

    /// Physical coordinates of a flat index.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (i1, i2) = self.split(idx);
        let h = self.spacing();
        [i1 as f64 * h, i2 as f64 * h]
    }

    /// Area of one physical cell, `(L/N)²`.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Measure of one Fourier cell in the dual normalisation `dξ/(2π)²`, i.e. `1/L²`.
    pub fn dual_cell(&self) -> f64 {
        1.0 / (self.side * self.side)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.side == other.side
    }
}

/// Scalar or two-component vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rank {
    Scalar,
    Vector2,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::Vector2 => "vector2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scalar" => Some(Rank::Scalar),
            "vector2" => Some(Rank::Vector2),
            _ => None,
        }
    }
}

struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Fft2> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Fft2 {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Fft2 {
    /// Unnormalised 2-D transform of an `n × n` block, in place.
    fn run(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        let fft = if inverse { &self.inverse } else { &self.forward };
        let scratch_len = fft.get_inplace_scratch_len();
        let rows = |buf: &mut [C64]| {
            buf.par_chunks_mut(n)
                .for_each_init(|| vec![ZERO; scratch_len], |scratch, row| {
                    fft.process_with_scratch(row, scratch)
                });
        };
        rows(data);
        let mut t = vec![ZERO; n * n];
        transpose(data, &mut t, n);
        rows(&mut t);
        transpose(&t, data, n);
    }
}

fn transpose(src: &[C64], dst: &mut [C64], n: usize) {
    dst.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * n + j];
        }
    });
}

/// Complex Fourier coefficients of a scalar or vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    rank: Rank,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid, rank: Rank) -> Self {
        Self {
            grid,
            rank,
            coeffs: vec![ZERO; grid.len() * rank.components()],
        }
    }

    pub fn from_coeffs(grid: Grid, rank: Rank, coeffs: Vec<C64>) -> Result<Self> {
        let expected = grid.len() * rank.components();
        if coeffs.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, rank, coeffs })
    }

    /// Build a field coefficient-by-coefficient from `f(flat_index, ξ) -> [c; components]`.
    pub fn from_fn<F>(grid: Grid, rank: Rank, f: F) -> Self
    where
        F: Fn(usize, [f64; 2]) -> [C64; 2],
    {
        let m = grid.len();
        let mut out = Self::zeros(grid, rank);
        for idx in 0..m {
            let vals = f(idx, grid.wavevector(idx));
            for c in 0..rank.components() {
                out.coeffs[c * m + idx] = vals[c];
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[C64] {
        let m = self.grid.len();
        &self.coeffs[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        let m = self.grid.len();
        &mut self.coeffs[c * m..(c + 1) * m]
    }

    /// Extract component `c` as a scalar field.
    pub fn component_field(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            rank: Rank::Scalar,
            coeffs: self.component(c).to_vec(),
        }
    }

    /// Assemble a vector field from two scalar fields.
    pub fn vector(x: &SpectralField, y: &SpectralField) -> Result<SpectralField> {
        if x.rank != Rank::Scalar || y.rank != Rank::Scalar {
            return Err(Error::Rank("vector() expects two scalar fields".into()));
        }
        ensure_same_grid(x, y)?;
        let mut coeffs = Vec::with_capacity(2 * x.grid.len());
        coeffs.extend_from_slice(&x.coeffs);
        coeffs.extend_from_slice(&y.coeffs);
        Ok(SpectralField {
            grid: x.grid,
            rank: Rank::Vector2,
            coeffs,
        })
    }

    /// Forward transform of physical samples, see [`forward_transform`].
    pub fn from_samples(grid: Grid, rank: Rank, samples: &[f64]) -> Result<Self> {
        let m = grid.len();
        let expected = m * rank.components();
        if samples.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: samples.len(),
            });
        }
        let plan = plans(grid.n());
        let scale = grid.cell_area();
        let mut coeffs: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
        for block in coeffs.chunks_mut(m) {
            plan.run(block, false);
            for c in block.iter_mut() {
                *c *= scale;
            }
        }
        let mut out = Self { grid, rank, coeffs };
        out.symmetrize();
        Ok(out)
    }

    /// Inverse transform with a Hermitian-symmetry check, see [`inverse_transform`].
    pub fn to_samples(&self) -> Result<Vec<f64>> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::SymmetryViolation { defect });
        }
        Ok(self.to_samples_unchecked())
    }

    /// Inverse transform keeping only the real part, without checking symmetry.
    pub(crate) fn to_samples_unchecked(&self) -> Vec<f64> {
        let m = self.grid.len();
        let plan = plans(self.grid.n());
        let scale = self.grid.dual_cell();
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut buf = vec![ZERO; m];
        for block in self.coeffs.chunks(m) {
            buf.copy_from_slice(block);
            plan.run(&mut buf, true);
            out.extend(buf.iter().map(|c| c.re * scale));
        }
        out
    }

    /// `max_k |c(k) - conj(c(-k))|` relative to `max_k |c(k)|`; zero for real fields.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.grid.len();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for block in self.coeffs.chunks(m) {
            for idx in 0..m {
                let d = (block[idx] - block[self.grid.mirror(idx)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    /// Project onto the Hermitian-symmetric subspace, `c ← (c(k) + conj c(-k))/2`.
    pub fn symmetrize(&mut self) {
        let m = self.grid.len();
        let grid = self.grid;
        for block in self.coeffs.chunks_mut(m) {
            for idx in 0..m {
                let mir = grid.mirror(idx);
                if mir < idx {
                    continue;
                }
                let avg = (block[idx] + block[mir].conj()) * 0.5;
                block[idx] = avg;
                block[mir] = avg.conj();
            }
        }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(-1.0, other)
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<SpectralField> {
        ensure_same_grid(self, other)?;
        if self.rank != other.rank {
            return Err(Error::Rank("operands have different ranks".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b * s)
            .collect();
        Ok(SpectralField {
            grid: self.grid,
            rank: self.rank,
            coeffs,
        })
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `‖f‖²_{L²}` via Parseval, `L⁻² Σ_k |f̂(k)|²` (summed over components).
    pub fn l2_norm_squared(&self) -> f64 {
        self.grid.dual_cell() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Zero mode of component `c`.
    pub fn mean_coeff(&self, c: usize) -> C64 {
        self.component(c)[0]
    }

    /// Apply a per-mode map `f(idx, ξ, coeffs_in) -> coeffs_out` producing a field of `rank`.
    pub fn map_modes<F>(&self, rank: Rank, f: F) -> SpectralField
    where
        F: Fn(usize, [f64; 2], [C64; 2]) -> [C64; 2] + Sync,
    {
        let grid = self.grid;
        let m = grid.len();
        let nin = self.rank.components();
        let nout = rank.components();
        let src = &self.coeffs;
        let vals: Vec<[C64; 2]> = (0..m)
            .into_par_iter()
            .map(|idx| {
                if grid.is_nyquist(idx) {
                    return [ZERO; 2];
                }
                let mut input = [ZERO; 2];
                for (c, slot) in input.iter_mut().enumerate().take(nin) {
                    *slot = src[c * m + idx];
                }
                f(idx, grid.wavevector(idx), input)
            })
            .collect();
        let mut coeffs = vec![ZERO; m * nout];
        for (idx, v) in vals.iter().enumerate() {
            for c in 0..nout {
                coeffs[c * m + idx] = v[c];
            }
        }
        SpectralField { grid, rank, coeffs }
    }

    /// Apply a spectral differential operator, see [`derivative`].
    pub fn derivative(&self, op: DerivOp) -> Result<SpectralField> {
        derivative(self, op)
    }

    pub fn helmholtz_p(&self) -> Result<SpectralField> {
        helmholtz_p(self)
    }

    pub fn helmholtz_q(&self) -> Result<SpectralField> {
        helmholtz_q(self)
    }

    pub fn dealias(&self) -> SpectralField {
        dealias(self)
    }

    pub fn dealias_in_place(&mut self) {
        let m = self.grid.len();
        let grid = self.grid;
        for block in self.coeffs.chunks_mut(m) {
            for (idx, c) in block.iter_mut().enumerate() {
                if !grid.is_retained(idx) {
                    *c = ZERO;
                }
            }
        }
    }

    /// Same continuum field on another grid with the same side length:
    /// zero-padding when refining, truncation when coarsening.
    pub fn resample(&self, target: Grid) -> Result<SpectralField> {
        if target.side() != self.grid.side() {
            return Err(Error::GridMismatch);
        }
        let mut out = SpectralField::zeros(target, self.rank);
        let (ms, mt) = (self.grid.len(), target.len());
        let half = (self.grid.n().min(target.n()) / 2) as i64;
        for idx in 0..ms {
            let (k1, k2) = self.grid.mode(idx);
            if k1.abs() >= half || k2.abs() >= half {
                continue;
            }
            let wrap = |k: i64| -> usize {
                if k >= 0 {
                    k as usize
                } else {
                    (k + target.n() as i64) as usize
                }
            };
            let t = target.index(wrap(k1), wrap(k2));
            for c in 0..self.rank.components() {
                out.coeffs[c * mt + t] = self.coeffs[c * ms + idx];
            }
        }
        Ok(out)
    }
}

pub(crate) fn ensure_same_grid(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.grid.same_as(&b.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Forward transform of real samples. The rank is inferred from the
/// sample count: `N²` values give a scalar, `2N²` a vector field.
pub fn forward_transform(samples: &[f64], grid: Grid) -> Result<SpectralField> {
    let rank = if samples.len() == grid.len() {
        Rank::Scalar
    } else if samples.len() == 2 * grid.len() {
        Rank::Vector2
    } else {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: samples.len(),
        });
    };
    SpectralField::from_samples(grid, rank, samples)
}

/// Inverse transform to real samples; rejects coefficients whose Hermitian
/// defect exceeds [`HERMITIAN_TOL`].
pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    field.to_samples()
}

/// Spectral differential operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivOp {
    /// `∂₁^α₁ ∂₂^α₂`, applied componentwise.
    Partial(u32, u32),
    /// Gradient of a scalar, symbol `iξ`.
    Grad,
    /// Divergence of a vector field, symbol `iξ·`.
    Div,
    /// Laplacian, symbol `-|ξ|²`.
    Laplacian,
    /// `∇div`, symbol `-ξ(ξ·)`.
    GradDiv,
    /// `|∇|`, symbol `|ξ|`.
    AbsGrad,
    /// `|∇|⁻¹div`, symbol `iξᵀ/|ξ|`, zero at `ξ = 0`.
    InvAbsGradDiv,
}

/// Multiply by the symbol of `op`. Nyquist rows/columns of the output are zero.
pub fn derivative(field: &SpectralField, op: DerivOp) -> Result<SpectralField> {
    let i = C64::new(0.0, 1.0);
    let rank = field.rank();
    let need = |want: Rank| -> Result<()> {
        if rank == want {
            Ok(())
        } else {
            Err(Error::Rank(format!(
                "{op:?} expects a {} field, got {}",
                want.name(),
                rank.name()
            )))
        }
    };
    let out = match op {
        DerivOp::Partial(a1, a2) => {
            let f = move |_: usize, xi: [f64; 2], c: [C64; 2]| {
                let s = (i * xi[0]).powu(a1) * (i * xi[1]).powu(a2);
                [c[0] * s, c[1] * s]
            };
            field.map_modes(rank, f)
        }
        DerivOp::Grad => {
            need(Rank::Scalar)?;
            field.map_modes(Rank::Vector2, move |_, xi, c| {
                [i * xi[0] * c[0], i * xi[1] * c[0]]
            })
        }
        DerivOp::Div => {
            need(Rank::Vector2)?;
            field.map_modes(Rank::Scalar, move |_, xi, c| {
                [i * (xi[0] * c[0] + xi[1] * c[1]), ZERO]
            })
        }
        DerivOp::Laplacian => field.map_modes(rank, |_, xi, c| {
            let s = -(xi[0] * xi[0] + xi[1] * xi[1]);
            [c[0] * s, c[1] * s]
        }),
        DerivOp::GradDiv => {
            need(Rank::Vector2)?;
            field.map_modes(Rank::Vector2, |_, xi, c| {
                let d = xi[0] * c[0] + xi[1] * c[1];
                [-xi[0] * d, -xi[1] * d]
            })
        }
        DerivOp::AbsGrad => field.map_modes(rank, |_, xi, c| {
            let s = xi[0].hypot(xi[1]);
            [c[0] * s, c[1] * s]
        }),
        DerivOp::InvAbsGradDiv => {
            need(Rank::Vector2)?;
            field.map_modes(Rank::Scalar, move |_, xi, c| {
                let r = xi[0].hypot(xi[1]);
                if r == 0.0 {
                    return [ZERO; 2];
                }
                [i * (xi[0] * c[0] + xi[1] * c[1]) / r, ZERO]
            })
        }
    };
    Ok(out)
}

/// Solenoidal projection `P̂ = I - ξξᵀ/|ξ|²`; the zero mode passes through unchanged.
pub fn helmholtz_p(v: &SpectralField) -> Result<SpectralField> {
    if v.rank() != Rank::Vector2 {
        return Err(Error::Rank("Helmholtz projection needs a vector field".into()));
    }
    Ok(v.map_modes(Rank::Vector2, |_, xi, c| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2 == 0.0 {
            return c;
        }
        let d = (xi[0] * c[0] + xi[1] * c[1]) / r2;
        [c[0] - xi[0] * d, c[1] - xi[1] * d]
    }))
}

/// Gradient part `Q = I - P`.
pub fn helmholtz_q(v: &SpectralField) -> Result<SpectralField> {
    let p = helmholtz_p(v)?;
    v.sub(&p)
}

/// 2/3-rule truncation: zero every mode with `max(|k₁|,|k₂|) > N/3`.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    out.dealias_in_place();
    out
}

/// Pseudospectral product of two scalar fields, dealiased.
pub fn multiply(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    ensure_same_grid(f, g)?;
    if f.rank() != Rank::Scalar || g.rank() != Rank::Scalar {
        return Err(Error::Rank("multiply expects scalar fields".into()));
    }
    let a = f.to_samples_unchecked();
    let b = g.to_samples_unchecked();
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let mut out = SpectralField::from_samples(*f.grid(), Rank::Scalar, &prod)?;
    out.dealias_in_place();
    Ok(out)
}

/// Compressible state: density perturbation `a` and velocity `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub a: SpectralField,
    pub v: SpectralField,
}

impl FlowState {
    pub fn new(a: SpectralField, v: SpectralField) -> Result<Self> {
        if a.rank() != Rank::Scalar || v.rank() != Rank::Vector2 {
            return Err(Error::Rank("flow state needs scalar a and vector v".into()));
        }
        ensure_same_grid(&a, &v)?;
        Ok(Self { a, v })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            a: SpectralField::zeros(grid, Rank::Scalar),
            v: SpectralField::zeros(grid, Rank::Vector2),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }

    /// `ε∇a`.
    pub fn eps_grad_a(&self, eps: f64) -> SpectralField {
        derivative(&self.a, DerivOp::Grad)
            .expect("a is scalar")
            .scale(eps)
    }

    pub fn scale(&self, s: f64) -> FlowState {
        FlowState {
            a: self.a.scale(s),
            v: self.v.scale(s),
        }
    }

    pub fn axpy(&self, s: f64, other: &FlowState) -> Result<FlowState> {
        Ok(FlowState {
            a: self.a.axpy(s, &other.a)?,
            v: self.v.axpy(s, &other.v)?,
        })
    }

    pub fn sub(&self, other: &FlowState) -> Result<FlowState> {
        self.axpy(-1.0, other)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.a.hermitian_defect().max(self.v.hermitian_defect())
    }

    pub fn max_abs(&self) -> f64 {
        self.a.max_abs().max(self.v.max_abs())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.v.is_zero()
    }
}
