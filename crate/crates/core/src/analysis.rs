//! Statistical reductions of simulated homodyne data: phase-averaged
//! histograms, phase/voltage scatter, singles rates and coincidence curves.

use crate::apparatus::Apparatus;
use crate::belltest::{simulate_with_settings, CoincidenceCounts, OutcomeClass, Registration};
use crate::error::{Error, Result};
use crate::scalar::{reduce_phase, uniform_phase, Real};
use crate::stream::{Executor, Stream};

pub const MIN_HISTOGRAM_TRIALS: u64 = 10_000;
pub const MIN_HISTOGRAM_BINS: usize = 20;
pub const MIN_SCATTER_TRIALS: u64 = 1_000;

/// Fixed-range histogram with explicit under/overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    edges: Vec<T>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
    n_total: u64,
}

impl<T: Real> Histogram<T> {
    /// `bins` equal-width bins on `[lo, hi)`.
    pub fn uniform(lo: T, hi: T, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "histogram range [{lo}, {hi}) with {bins} bins"
            )));
        }
        let width = (hi - lo) / T::from_usize(bins).expect("bin count fits scalar");
        let mut edges: Vec<T> = (0..bins)
            .map(|i| lo + width * T::from_usize(i).expect("index fits scalar"))
            .collect();
        edges.push(hi);
        Ok(Self {
            counts: vec![0; bins],
            edges,
            underflow: 0,
            overflow: 0,
            n_total: 0,
        })
    }

    pub fn add(&mut self, x: T) {
        self.n_total += 1;
        let lo = self.edges[0];
        let hi = *self.edges.last().expect("at least two edges");
        if x < lo {
            self.underflow += 1;
        } else if x >= hi {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let width = (hi - lo) / T::from_usize(bins).expect("bin count fits scalar");
            let mut i = ((x - lo) / width).to_usize().unwrap_or(0).min(bins - 1);
            // Keep the bin consistent with the stored edges at rounding boundaries.
            if x < self.edges[i] {
                i -= 1;
            } else if x >= self.edges[i + 1] && i + 1 < bins {
                i += 1;
            }
            self.counts[i] += 1;
        }
    }

    /// Bin-wise sum; both histograms must share edges.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.edges, other.edges, "cannot merge histograms with different edges");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.n_total += other.n_total;
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn bin_center(&self, i: usize) -> T {
        (self.edges[i] + self.edges[i + 1]) * T::lit(0.5)
    }

    /// Probability density estimate of bin `i`.
    pub fn density(&self, i: usize) -> T {
        if self.n_total == 0 {
            return T::zero();
        }
        let w = self.edges[i + 1] - self.edges[i];
        T::from_u64(self.counts[i]).expect("count fits scalar")
            / (T::from_u64(self.n_total).expect("count fits scalar") * w)
    }
}

/// Default symmetric histogram half-width `X_max + 5σ√2` for arm A.
pub fn default_histogram_half_width<T: Real>(app: &Apparatus<T>) -> T {
    app.x_max_a() + T::lit(5.0) * app.arm_a.noise_sigma * T::SQRT_2()
}

/// Histogram of arm-A difference voltages with the LO phase drawn uniformly
/// on `(-π, π]` per trial. Only event-ready pairs are binned.
pub fn phase_averaged_histogram<T: Real>(
    app: &Apparatus<T>,
    n_trials: u64,
    bins: usize,
    half_width: Option<T>,
    stream: Stream,
    exec: &Executor,
) -> Result<Histogram<T>> {
    if n_trials < MIN_HISTOGRAM_TRIALS {
        return Err(Error::TooFewSamples {
            got: n_trials as usize,
            min: MIN_HISTOGRAM_TRIALS as usize,
        });
    }
    if bins < MIN_HISTOGRAM_BINS {
        return Err(Error::InvalidConfig(format!(
            "histogram needs at least {MIN_HISTOGRAM_BINS} bins, got {bins}"
        )));
    }
    let h = half_width.unwrap_or_else(|| default_histogram_half_width(app));
    let empty = Histogram::uniform(-h, h, bins)?;
    let parts = exec.map_chunk_streams(stream, n_trials, |chunk, range| {
        let mut hist = empty.clone();
        Apparatus::<T>::for_chunk(chunk, range, |_, rngs| {
            let theta = uniform_phase(&mut rngs.arm_a);
            let settings = app.arm_a.at_phase(theta);
            if let Some((_, out)) = app.single(&settings, rngs) {
                hist.add(out.x);
            }
        });
        hist
    });
    let mut total = empty;
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// How the applied phase is chosen per trial in [`scatter_vs_phase`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScatterMode<T> {
    /// Linear ramp `θ_i = −π + 2π(i + ½)/n` across the run.
    Ramp,
    /// Uniform on `(-π, π]`.
    Random,
    /// Cycles through the given phases.
    Columns(Vec<T>),
}

/// Applied phase and difference voltage for every event-ready trial.
pub fn scatter_vs_phase<T: Real>(
    app: &Apparatus<T>,
    n_trials: u64,
    mode: &ScatterMode<T>,
    stream: Stream,
    exec: &Executor,
) -> Result<Vec<(T, T)>> {
    if n_trials < MIN_SCATTER_TRIALS {
        return Err(Error::TooFewSamples {
            got: n_trials as usize,
            min: MIN_SCATTER_TRIALS as usize,
        });
    }
    if let ScatterMode::Columns(c) = mode {
        if c.is_empty() {
            return Err(Error::InvalidConfig("scatter columns must not be empty".into()));
        }
    }
    let n = T::from_u64(n_trials).expect("trial count fits scalar");
    let parts = exec.map_chunk_streams(stream, n_trials, |chunk, range| {
        let mut pts = Vec::with_capacity((range.end - range.start) as usize);
        Apparatus::<T>::for_chunk(chunk, range, |i, rngs| {
            let theta = match mode {
                ScatterMode::Ramp => {
                    let k = T::from_u64(i).expect("index fits scalar") + T::lit(0.5);
                    -T::PI() + T::TAU() * k / n
                }
                ScatterMode::Random => uniform_phase(&mut rngs.arm_a),
                ScatterMode::Columns(c) => c[(i % c.len() as u64) as usize],
            };
            let settings = app.arm_a.at_phase(theta);
            if let Some((_, out)) = app.single(&settings, rngs) {
                pts.push((theta, out.x));
            }
        });
        pts
    });
    Ok(parts.concat())
}

/// A binomial rate estimate at one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub theta: T,
    pub rate: T,
    pub stderr: T,
    pub n: u64,
}

impl<T: Real> CurvePoint<T> {
    pub fn from_counts(theta: T, k: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                theta,
                rate: T::zero(),
                stderr: T::zero(),
                n,
            };
        }
        let nf = T::from_u64(n).expect("count fits scalar");
        let rate = T::from_u64(k).expect("count fits scalar") / nf;
        Self {
            theta,
            rate,
            stderr: (rate * (T::one() - rate) / nf).sqrt(),
            n,
        }
    }
}

/// `n` phases on `(-π, π)` offset by half a step, so none is a multiple of π.
pub fn default_theta_grid<T: Real>(n: usize) -> Vec<T> {
    let nf = T::from_usize(n).expect("grid size fits scalar");
    (0..n)
        .map(|k| -T::PI() + T::TAU() * (T::from_usize(k).expect("index fits scalar") + T::lit(0.5)) / nf)
        .collect()
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    for &t in grid {
        let r = reduce_phase(t);
        if r == T::zero() || r == T::PI() || !r.is_finite() {
            return Err(Error::UndefinedAtBoundary { theta: t.as_f64() });
        }
    }
    Ok(())
}

/// Fraction of `+1` outcomes on arm A at each phase.
pub fn singles_rate<T: Real>(
    app: &Apparatus<T>,
    theta_grid: &[T],
    n_per_point: u64,
    stream: Stream,
    exec: &Executor,
) -> Result<Vec<CurvePoint<T>>> {
    check_grid(theta_grid)?;
    let mut out = Vec::with_capacity(theta_grid.len());
    for (k, &theta) in theta_grid.iter().enumerate() {
        let settings = app.arm_a.at_phase(theta);
        let (plus, n) = exec
            .map_chunk_streams(stream.child(k as u64), n_per_point, |chunk, range| {
                let (mut plus, mut n) = (0u64, 0u64);
                Apparatus::<T>::for_chunk(chunk, range, |_, rngs| {
                    if let Some((_, o)) = app.single(&settings, rngs) {
                        n += 1;
                        plus += u64::from(o.sign == 1);
                    }
                });
                (plus, n)
            })
            .into_iter()
            .fold((0, 0), |(p, n), (a, b)| (p + a, n + b));
        out.push(CurvePoint::from_counts(theta, plus, n));
    }
    Ok(out)
}

/// Coincidence counts at one `θ_B` of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidencePoint<T> {
    pub theta_b: T,
    pub counts: CoincidenceCounts,
}

impl<T: Real> CoincidencePoint<T> {
    /// Rate of one outcome class over the event-ready pairs.
    pub fn point(&self, class: OutcomeClass) -> CurvePoint<T> {
        CurvePoint::from_counts(self.theta_b, self.counts.get(class), self.counts.n_ab)
    }
}

/// Full-pipeline coincidence estimates with arm A fixed at `theta_a` and
/// arm B swept over `theta_b_grid`; each grid point runs on its own stream.
pub fn coincidence_curve<T: Real>(
    app: &Apparatus<T>,
    theta_a: T,
    theta_b_grid: &[T],
    n_per_point: u64,
    stream: Stream,
    exec: &Executor,
) -> Result<Vec<CoincidencePoint<T>>> {
    check_grid(&[theta_a])?;
    check_grid(theta_b_grid)?;
    let a = app.arm_a.at_phase(theta_a);
    Ok(theta_b_grid
        .iter()
        .enumerate()
        .map(|(k, &tb)| {
            let b = app.arm_b.at_phase(tb);
            CoincidencePoint {
                theta_b: tb,
                counts: simulate_with_settings(
                    app,
                    &a,
                    &b,
                    n_per_point,
                    Registration::All,
                    stream.child(k as u64),
                    exec,
                ),
            }
        })
        .collect())
}

/// `(θ_B, rate)` pairs of one outcome class, ready for
/// [`visibility`](crate::belltest::visibility).
pub fn class_curve<T: Real>(points: &[CoincidencePoint<T>], class: OutcomeClass) -> Vec<(T, T)> {
    points
        .iter()
        .map(|p| {
            let c = p.point(class);
            (c.theta, c.rate)
        })
        .collect()
}
