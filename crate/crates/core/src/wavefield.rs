//! Classical beamsplitter and balanced-homodyne algebra.
//!
//! A test beam of amplitude `E` and a local oscillator of amplitude `E_L`,
//! offset in phase by `θ`, are mixed at a lossless 50/50 beamsplitter with a
//! π/2 shift on reflection. With intensity taken as amplitude squared the
//! two output intensities are
//!
//! ```text
//! I_r = ½ (E² + E_L² + 2 E E_L sin θ)
//! I_t = ½ (E² + E_L² − 2 E E_L sin θ)
//! ```
//!
//! so the balanced difference is `2 E E_L sin θ`. The carrier phase `ωt`
//! drops out of these closed forms; [`oracle_difference_real`] keeps it and
//! averages real-valued fields over one period as an independent check.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{reduce_phase, sin_reduced, Real};

/// Test-beam and local-oscillator amplitudes plus their relative phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPair<T> {
    e_test: T,
    e_lo: T,
    theta: T,
}

impl<T: Real> FieldPair<T> {
    /// Builds a field pair, reducing `theta` to `(-π, π]`.
    ///
    /// Negative or non-finite amplitudes are rejected.
    pub fn new(e_test: T, e_lo: T, theta: T) -> Result<Self> {
        if !(e_test >= T::zero() && e_test.is_finite()) || !(e_lo >= T::zero() && e_lo.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "field amplitudes must be finite and non-negative (E = {e_test}, E_L = {e_lo})"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidConfig("phase must be finite".into()));
        }
        Ok(Self {
            e_test,
            e_lo,
            theta: reduce_phase(theta),
        })
    }

    pub fn e_test(&self) -> T {
        self.e_test
    }

    pub fn e_lo(&self) -> T {
        self.e_lo
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    /// Interference term `2 E E_L sin θ`.
    pub fn interference(&self) -> T {
        T::lit(2.0) * self.e_test * self.e_lo * sin_reduced(self.theta)
    }

    /// `E² + E_L²`.
    pub fn total_intensity(&self) -> T {
        self.e_test * self.e_test + self.e_lo * self.e_lo
    }
}

/// Raw photodetector intensities, difference voltage and its digitized sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneReading<T> {
    pub i_r: T,
    pub i_t: T,
    pub x: T,
    pub sign: i8,
}

/// Output intensities of the reflected and transmitted ports.
pub fn beamsplitter_intensities<T: Real>(f: &FieldPair<T>) -> (T, T) {
    let half = T::lit(0.5);
    let total = f.total_intensity();
    let cross = f.interference();
    // Rounding can push a dark port a few ulp below zero.
    let i_r = (half * (total + cross)).max(T::zero());
    let i_t = (half * (total - cross)).max(T::zero());
    (i_r, i_t)
}

/// Balanced homodyne reading with independent Gaussian noise of standard
/// deviation `noise_sigma` on each photodetector voltage.
///
/// The difference therefore carries noise of standard deviation
/// `noise_sigma·√2`.
pub fn homodyne_difference<T: Real, R: Rng + ?Sized>(
    f: &FieldPair<T>,
    gain: T,
    noise_sigma: T,
    rng: &mut R,
) -> HomodyneReading<T> {
    let (i_r, i_t) = beamsplitter_intensities(f);
    let (v_r, v_t) = photodetector_voltages(i_r, i_t, gain, noise_sigma, rng);
    let x = v_r - v_t;
    HomodyneReading {
        i_r,
        i_t,
        x,
        sign: digitize(x, rng),
    }
}

/// Photodetector voltages `gain·I + n` with independent Gaussian `n` per
/// detector. Draws nothing when `noise_sigma` is zero.
pub fn photodetector_voltages<T: Real, R: Rng + ?Sized>(
    i_r: T,
    i_t: T,
    gain: T,
    noise_sigma: T,
    rng: &mut R,
) -> (T, T) {
    debug_assert!(gain > T::zero(), "gain must be positive");
    debug_assert!(noise_sigma >= T::zero(), "noise must be non-negative");
    if noise_sigma > T::zero() {
        let n_r = noise_sigma * T::standard_normal(rng);
        let n_t = noise_sigma * T::standard_normal(rng);
        (gain * i_r + n_r, gain * i_t + n_t)
    } else {
        (gain * i_r, gain * i_t)
    }
}

/// Minimum number of quadrature points accepted by [`oracle_difference_real`].
pub const ORACLE_MIN_SAMPLES: usize = 16;

/// Intensity difference from explicit real fields.
///
/// The test beam `E cos φ` and local oscillator `E_L cos(φ + θ)` are combined
/// into
///
/// ```text
/// E_r = (−E sin φ + E_L cos(φ + θ)) / √2
/// E_t = ( E cos φ − E_L sin(φ + θ)) / √2
/// ```
///
/// and the squares are averaged over `n_samples` equally spaced carrier
/// phases in `[0, 2π)`. The mean square is doubled to match the
/// amplitude-squared intensity convention of [`beamsplitter_intensities`].
pub fn oracle_difference_real<T: Real>(e_test: T, e_lo: T, theta: T, n_samples: usize) -> Result<T> {
    if n_samples < ORACLE_MIN_SAMPLES {
        return Err(Error::QuadratureTooCoarse {
            got: n_samples,
            min: ORACLE_MIN_SAMPLES,
        });
    }
    let inv_sqrt2 = T::FRAC_1_SQRT_2();
    let n = T::from_usize(n_samples).expect("sample count fits scalar");
    let mut sum_r = T::zero();
    let mut sum_t = T::zero();
    for k in 0..n_samples {
        let phi = T::TAU() * T::from_usize(k).expect("index fits scalar") / n;
        let e_r = inv_sqrt2 * (-e_test * phi.sin() + e_lo * (phi + theta).cos());
        let e_t = inv_sqrt2 * (e_test * phi.cos() - e_lo * (phi + theta).sin());
        sum_r = sum_r + e_r * e_r;
        sum_t = sum_t + e_t * e_t;
    }
    Ok(T::lit(2.0) * (sum_r - sum_t) / n)
}

/// Digitizes a difference voltage to ±1.
///
/// An exact zero is resolved by a fair coin drawn from `rng`.
///
/// # Panics
///
/// Panics if `x` is not finite.
pub fn digitize<T: Real, R: Rng + ?Sized>(x: T, rng: &mut R) -> i8 {
    assert!(x.is_finite(), "cannot digitize non-finite voltage {x}");
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else if rng.random::<bool>() {
        1
    } else {
        -1
    }
}
