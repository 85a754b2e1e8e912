//! Phase-space density estimation from quadrature samples by filtered
//! back-projection.
//!
//! A quadrature measured at LO phase `θ` is the projection
//! `x_θ = q cos θ + p sin θ` of a phase-space point `(q, p)`. The sample
//! histogram at each phase bin estimates the marginal of the density along
//! that direction; inverting the Radon transform recovers the density:
//!
//! ```text
//! W(q, p) = 1/(2π) ∫₀^π (g_θ ⋆ h)(q cos θ + p sin θ) dθ
//! ```
//!
//! with `h` the ramp filter `|ω|`, band-limited here by a hard cutoff at a
//! fraction of the Nyquist frequency of the quadrature bins. The cutoff sets
//! the trade-off between resolution and the noise-driven ringing that can
//! make a positive density look negative.

use rand::Rng;

use crate::analysis::{scatter_vs_phase, ScatterMode};
use crate::apparatus::Apparatus;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stream::{Executor, Stream};

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_PHASE_BINS: usize = 20;
/// Keeps ringing on the default grid near 3% of a unit-variance peak.
pub const DEFAULT_FILTER_CUTOFF: f64 = 0.25;

/// One quadrature reading, folded so that `theta ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample<T> {
    pub theta: T,
    pub x: T,
}

impl<T: Real> QuadratureSample<T> {
    /// Folds `(θ + π, x)` onto `(θ, −x)`.
    pub fn new(theta: T, x: T) -> Self {
        let mut t = theta % T::TAU();
        if t < T::zero() {
            t = t + T::TAU();
        }
        let mut x = x;
        if t >= T::PI() {
            t = t - T::PI();
            x = -x;
        }
        // Rounding in the subtraction can land exactly on π or just below 0.
        if t >= T::PI() || t < T::zero() {
            t = T::zero();
        }
        Self { theta: t, x }
    }
}

/// Binning and output-grid geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub n_x: usize,
    pub n_p: usize,
    /// Grid covers `[-x_extent, x_extent] × [-p_extent, p_extent]`.
    pub x_extent: T,
    pub p_extent: T,
    pub phase_bins: usize,
    pub quadrature_bins: usize,
    /// Quadrature histograms cover `[-quadrature_extent, quadrature_extent)`.
    pub quadrature_extent: T,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            n_x: 64,
            n_p: 64,
            x_extent: T::lit(4.0),
            p_extent: T::lit(4.0),
            phase_bins: 40,
            quadrature_bins: 64,
            quadrature_extent: T::lit(4.0) * T::SQRT_2(),
        }
    }
}

impl<T: Real> GridSpec<T> {
    fn validate(&self) -> Result<()> {
        if self.n_x < 2 || self.n_p < 2 || self.quadrature_bins < 2 {
            return Err(Error::InvalidConfig("tomography grids need at least 2 cells per axis".into()));
        }
        for (name, v) in [
            ("x_extent", self.x_extent),
            ("p_extent", self.p_extent),
            ("quadrature_extent", self.quadrature_extent),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("tomography {name} = {v} must be positive")));
            }
        }
        if self.phase_bins < MIN_PHASE_BINS {
            return Err(Error::InsufficientCoverage {
                populated: self.phase_bins,
                required: MIN_PHASE_BINS,
            });
        }
        Ok(())
    }

    pub fn cell_x(&self, i: usize) -> T {
        cell_center(self.x_extent, self.n_x, i)
    }

    pub fn cell_p(&self, j: usize) -> T {
        cell_center(self.p_extent, self.n_p, j)
    }

    pub fn quadrature_width(&self) -> T {
        T::lit(2.0) * self.quadrature_extent / T::from_usize(self.quadrature_bins).expect("bins fit scalar")
    }
}

fn cell_center<T: Real>(extent: T, n: usize, i: usize) -> T {
    let w = T::lit(2.0) * extent / T::from_usize(n).expect("size fits scalar");
    -extent + w * (T::from_usize(i).expect("index fits scalar") + T::lit(0.5))
}

/// Reconstructed density on a regular `(x, p)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid<T> {
    pub spec: GridSpec<T>,
    /// Row-major, `values[i * n_p + j]` at `(cell_x(i), cell_p(j))`.
    pub values: Vec<T>,
    /// Propagated counting variance of each cell.
    pub variance: Vec<T>,
    pub cell_area: T,
    pub filter_cutoff: T,
    pub n_samples: usize,
    pub populated_phase_bins: usize,
    /// Phase bins with no samples; skipped in the back-projection.
    pub empty_phase_bins: Vec<usize>,
}

impl<T: Real> WignerGrid<T> {
    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.spec.n_p + j]
    }

    pub fn sigma(&self, i: usize, j: usize) -> T {
        self.variance[i * self.spec.n_p + j].sqrt()
    }

    /// `Σ values · cell_area`.
    pub fn integral(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &v| a + v) * self.cell_area
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |a, &v| a.max(v))
    }

    /// Bilinear interpolation at `(q, p)`; zero outside the grid.
    pub fn interpolate(&self, q: T, p: T) -> T {
        let s = &self.spec;
        let fx = (q + s.x_extent) / (T::lit(2.0) * s.x_extent) * T::from_usize(s.n_x).unwrap() - T::lit(0.5);
        let fp = (p + s.p_extent) / (T::lit(2.0) * s.p_extent) * T::from_usize(s.n_p).unwrap() - T::lit(0.5);
        let last_x = T::from_usize(s.n_x - 1).unwrap();
        let last_p = T::from_usize(s.n_p - 1).unwrap();
        if !(fx >= T::zero() && fx <= last_x && fp >= T::zero() && fp <= last_p) {
            return T::zero();
        }
        let i0 = fx.floor().to_usize().unwrap().min(s.n_x - 2);
        let j0 = fp.floor().to_usize().unwrap().min(s.n_p - 2);
        let tx = fx - T::from_usize(i0).unwrap();
        let tp = fp - T::from_usize(j0).unwrap();
        let one = T::one();
        self.value(i0, j0) * (one - tx) * (one - tp)
            + self.value(i0 + 1, j0) * tx * (one - tp)
            + self.value(i0, j0 + 1) * (one - tx) * tp
            + self.value(i0 + 1, j0 + 1) * tx * tp
    }
}

/// Ramp-filter taps `h(mΔ)·Δ` for `m = 0..n`, band-limited to
/// `|ω| ≤ cutoff·π/Δ`.
fn ramp_taps<T: Real>(n: usize, delta: T, cutoff: T) -> Vec<T> {
    let w = cutoff * T::PI() / delta;
    let pi = T::PI();
    (0..n)
        .map(|m| {
            let h = if m == 0 {
                w * w / (T::lit(2.0) * pi)
            } else {
                let s = T::from_usize(m).unwrap() * delta;
                ((w * s).sin() * w / s + ((w * s).cos() - T::one()) / (s * s)) / pi
            };
            h * delta
        })
        .collect()
}

/// Filtered back-projection of quadrature samples.
pub fn radon_reconstruct<T: Real>(
    samples: &[QuadratureSample<T>],
    spec: &GridSpec<T>,
    filter_cutoff: T,
) -> Result<WignerGrid<T>> {
    spec.validate()?;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            min: MIN_SAMPLES,
        });
    }
    if !(filter_cutoff > T::zero() && filter_cutoff <= T::one()) {
        return Err(Error::InvalidConfig(format!(
            "filter cutoff {filter_cutoff} outside (0, 1]"
        )));
    }

    let k_bins = spec.phase_bins;
    let j_bins = spec.quadrature_bins;
    let dq = spec.quadrature_width();
    let q_ext = spec.quadrature_extent;
    let phase_width = T::PI() / T::from_usize(k_bins).unwrap();

    // Marginal histograms; samples outside the quadrature range still count
    // towards their phase bin's normalisation.
    let mut counts = vec![0u64; k_bins * j_bins];
    let mut per_phase = vec![0u64; k_bins];
    for s in samples {
        let folded = QuadratureSample::new(s.theta, s.x);
        let k = (folded.theta / phase_width).to_usize().unwrap_or(0).min(k_bins - 1);
        per_phase[k] += 1;
        let f = (folded.x + q_ext) / dq;
        if f >= T::zero() {
            if let Some(j) = f.to_usize().filter(|&j| j < j_bins) {
                counts[k * j_bins + j] += 1;
            }
        }
    }

    let empty: Vec<usize> = (0..k_bins).filter(|&k| per_phase[k] == 0).collect();
    let populated = k_bins - empty.len();
    if populated < MIN_PHASE_BINS {
        return Err(Error::InsufficientCoverage {
            populated,
            required: MIN_PHASE_BINS,
        });
    }

    let taps = ramp_taps(j_bins, dq, filter_cutoff);
    let tap = |d: isize| taps[d.unsigned_abs()];

    // Filtered projections and their variances at the quadrature bin centres.
    // Every populated bin is normalised by the same expected count, which
    // keeps the estimator linear in the sample set.
    let n_k = T::from_usize(samples.len()).unwrap() / T::from_usize(populated).unwrap();
    let mut filtered = vec![T::zero(); k_bins * j_bins];
    let mut filtered_var = vec![T::zero(); k_bins * j_bins];
    for k in 0..k_bins {
        if per_phase[k] == 0 {
            continue;
        }
        let row = &counts[k * j_bins..(k + 1) * j_bins];
        for i in 0..j_bins {
            let mut acc = T::zero();
            let mut var = T::zero();
            for (j, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let cf = T::from_u64(c).unwrap();
                let h = tap(i as isize - j as isize);
                acc = acc + cf * h;
                var = var + cf * h * h;
            }
            filtered[k * j_bins + i] = acc / (n_k * dq);
            filtered_var[k * j_bins + i] = var / (n_k * n_k * dq * dq);
        }
    }

    // Back-projection: each populated phase bin contributes (π/K)/(2π).
    let weight = T::one() / (T::lit(2.0) * T::from_usize(populated).unwrap());
    let angles: Vec<(usize, T, T)> = (0..k_bins)
        .filter(|&k| per_phase[k] > 0)
        .map(|k| {
            let th = phase_width * (T::from_usize(k).unwrap() + T::lit(0.5));
            (k, th.cos(), th.sin())
        })
        .collect();
    let last = T::from_usize(j_bins - 1).unwrap();
    let mut values = vec![T::zero(); spec.n_x * spec.n_p];
    let mut variance = vec![T::zero(); spec.n_x * spec.n_p];
    for i in 0..spec.n_x {
        let q = spec.cell_x(i);
        for j in 0..spec.n_p {
            let p = spec.cell_p(j);
            let mut acc = T::zero();
            let mut var = T::zero();
            for &(k, c, s) in &angles {
                let pos = (q * c + p * s + q_ext) / dq - T::lit(0.5);
                if !(pos >= T::zero() && pos <= last) {
                    continue;
                }
                let m = pos.floor().to_usize().unwrap().min(j_bins - 2);
                let t = pos - T::from_usize(m).unwrap();
                let base = k * j_bins + m;
                acc = acc + filtered[base] * (T::one() - t) + filtered[base + 1] * t;
                var = var + filtered_var[base] * (T::one() - t) + filtered_var[base + 1] * t;
            }
            values[i * spec.n_p + j] = acc * weight;
            variance[i * spec.n_p + j] = var * weight * weight;
        }
    }

    let cell_area = (T::lit(2.0) * spec.x_extent / T::from_usize(spec.n_x).unwrap())
        * (T::lit(2.0) * spec.p_extent / T::from_usize(spec.n_p).unwrap());
    Ok(WignerGrid {
        spec: spec.clone(),
        values,
        variance,
        cell_area,
        filter_cutoff,
        n_samples: samples.len(),
        populated_phase_bins: populated,
        empty_phase_bins: empty,
    })
}

/// Smallest cell of a grid and where it sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMin<T> {
    pub value: T,
    pub x: T,
    pub p: T,
}

impl<T: Real> DensityMin<T> {
    /// Negative beyond the artifact level `epsilon`.
    pub fn is_negative(&self, epsilon: T) -> bool {
        self.value < -epsilon
    }
}

pub fn min_density<T: Real>(grid: &WignerGrid<T>) -> DensityMin<T> {
    let (idx, &value) = grid
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite densities"))
        .expect("non-empty grid");
    let n_p = grid.spec.n_p;
    DensityMin {
        value,
        x: grid.spec.cell_x(idx / n_p),
        p: grid.spec.cell_p(idx % n_p),
    }
}

/// Vacuum-like samples: uniform phase, `x ~ Normal(0, ½)`, whose density is
/// `exp(−(x² + p²))/π`.
pub fn vacuum_samples<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<QuadratureSample<T>> {
    let sd = T::FRAC_1_SQRT_2();
    (0..n)
        .map(|_| {
            let theta = T::PI() * T::unit(rng);
            QuadratureSample::new(theta, sd * T::standard_normal(rng))
        })
        .collect()
}

/// Arm-A readings at uniformly random LO phases, each voltage divided by
/// `normalization`.
pub fn simulated_quadratures<T: Real>(
    app: &Apparatus<T>,
    n_trials: u64,
    normalization: T,
    stream: Stream,
    exec: &Executor,
) -> Result<Vec<QuadratureSample<T>>> {
    if !(normalization > T::zero() && normalization.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "quadrature normalization {normalization} must be positive"
        )));
    }
    Ok(scatter_vs_phase(app, n_trials, &ScatterMode::Random, stream, exec)?
        .into_iter()
        .map(|(theta, x)| QuadratureSample::new(theta, x / normalization))
        .collect())
}

/// `exp(−(x² + p²))/π`.
pub fn vacuum_density<T: Real>(x: T, p: T) -> T {
    (-(x * x + p * p)).exp() / T::PI()
}

/// Artifact bound for negativity: three times the deepest negative cell of
/// a reconstruction of `n` vacuum-like samples with the same geometry.
pub fn calibrate_negativity_epsilon<T: Real, R: Rng + ?Sized>(
    n: usize,
    spec: &GridSpec<T>,
    filter_cutoff: T,
    rng: &mut R,
) -> Result<T> {
    let samples = vacuum_samples(n, rng);
    let grid = radon_reconstruct(&samples, spec, filter_cutoff)?;
    Ok(T::lit(3.0) * (-min_density(&grid).value).max(T::zero()))
}
