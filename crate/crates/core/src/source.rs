//! Down-converted pulse pairs and event-ready selection.
//!
//! Each pulse pair carries a phase class `α ∈ {0, π}` shared by both arms,
//! a common carrier frequency, an optional detuning split symmetrically
//! between the arms, and one amplitude per arm. Before reaching the homodyne
//! detectors each beam passes an unbalanced beamsplitter whose reflected
//! fraction feeds a threshold photodetector; only pairs where both taps fire
//! are analysed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{uniform_phase, Real};

/// How the per-pair hidden phase is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseMode {
    /// `α ∈ {0, π}`.
    #[default]
    TwoClass,
    /// Phase uniform on `(-π, π]`, identical for both arms.
    Uniform,
}

impl std::str::FromStr for PhaseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_class" => Ok(Self::TwoClass),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidConfig(format!("unknown phase mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for PhaseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::TwoClass => "two_class",
            Self::Uniform => "uniform",
        })
    }
}

/// One down-converted event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePair<T> {
    /// Hidden phase: `0` or `π` in two-class mode, uniform in uniform mode.
    pub alpha: T,
    /// Carrier angular frequency shared with the local oscillators (rad/s).
    pub omega: T,
    /// Detuning; arm A runs at `ω + δω/2`, arm B at `ω − δω/2`.
    pub delta_omega: T,
    pub e_a: T,
    pub e_b: T,
}

impl<T: Real> PulsePair<T> {
    pub fn omega_a(&self) -> T {
        self.omega + self.delta_omega * T::lit(0.5)
    }

    pub fn omega_b(&self) -> T {
        self.omega - self.delta_omega * T::lit(0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig<T> {
    pub p_alpha_zero: T,
    pub omega_mean: T,
    pub omega_sigma: T,
    pub delta_omega_sigma: T,
    pub amplitude_mean: T,
    pub amplitude_sigma: T,
    /// Correlation of the underlying normal variates of the two log-amplitudes.
    pub amplitude_correlation: T,
    pub tap_ratio: T,
    pub pd_threshold: T,
    pub phase_mode: PhaseMode,
}

impl<T: Real> Default for SourceConfig<T> {
    fn default() -> Self {
        Self {
            p_alpha_zero: T::lit(0.5),
            // 800 nm carrier.
            omega_mean: T::lit(2.354_564_459_136_066e15),
            omega_sigma: T::zero(),
            delta_omega_sigma: T::zero(),
            amplitude_mean: T::one(),
            amplitude_sigma: T::zero(),
            amplitude_correlation: T::zero(),
            tap_ratio: T::lit(0.1),
            pd_threshold: T::zero(),
            phase_mode: PhaseMode::TwoClass,
        }
    }
}

impl<T: Real> SourceConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let in_unit = |v: T| v >= T::zero() && v <= T::one();
        if !in_unit(self.p_alpha_zero) {
            return bad(format!("source.p_alpha_zero = {} outside [0, 1]", self.p_alpha_zero));
        }
        if !(self.omega_mean > T::zero() && self.omega_mean.is_finite()) {
            return bad(format!("source.omega_mean = {} must be positive", self.omega_mean));
        }
        for (name, v) in [
            ("source.omega_sigma", self.omega_sigma),
            ("source.delta_omega_sigma", self.delta_omega_sigma),
            ("source.amplitude_sigma", self.amplitude_sigma),
            ("source.pd_threshold", self.pd_threshold),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if !(self.amplitude_mean > T::zero() && self.amplitude_mean.is_finite()) {
            return bad(format!(
                "source.amplitude_mean = {} must be positive",
                self.amplitude_mean
            ));
        }
        if !in_unit(self.amplitude_correlation) {
            return bad(format!(
                "source.amplitude_correlation = {} outside [0, 1]",
                self.amplitude_correlation
            ));
        }
        if !(self.tap_ratio > T::zero() && self.tap_ratio < T::one()) {
            return bad(format!("source.tap_ratio = {} outside (0, 1)", self.tap_ratio));
        }
        Ok(())
    }

    /// Amplitude reaching a homodyne detector for a pulse of the mean amplitude.
    pub fn nominal_transmitted_amplitude(&self) -> T {
        self.amplitude_mean * (T::one() - self.tap_ratio).sqrt()
    }
}

/// A validated source.
#[derive(Debug, Clone, PartialEq)]
pub struct Source<T> {
    cfg: SourceConfig<T>,
    ln_mu: T,
    ln_sigma: T,
}

impl<T: Real> Source<T> {
    pub fn new(cfg: SourceConfig<T>) -> Result<Self> {
        cfg.validate()?;
        // Lognormal with the requested mean m and standard deviation s:
        // σ² = ln(1 + s²/m²), μ = ln m − σ²/2.
        let ratio = cfg.amplitude_sigma / cfg.amplitude_mean;
        let ln_var = (T::one() + ratio * ratio).ln();
        let ln_mu = cfg.amplitude_mean.ln() - ln_var * T::lit(0.5);
        Ok(Self {
            ln_mu,
            ln_sigma: ln_var.sqrt(),
            cfg,
        })
    }

    pub fn config(&self) -> &SourceConfig<T> {
        &self.cfg
    }

    pub fn draw_pulse_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> PulsePair<T> {
        let cfg = &self.cfg;
        let alpha = match cfg.phase_mode {
            PhaseMode::TwoClass => {
                if T::unit(rng) < cfg.p_alpha_zero {
                    T::zero()
                } else {
                    T::PI()
                }
            }
            PhaseMode::Uniform => uniform_phase(rng),
        };

        let omega = if cfg.omega_sigma > T::zero() {
            loop {
                let w = cfg.omega_mean + cfg.omega_sigma * T::standard_normal(rng);
                if w > T::zero() {
                    break w;
                }
            }
        } else {
            cfg.omega_mean
        };

        let delta_omega = if cfg.delta_omega_sigma > T::zero() {
            cfg.delta_omega_sigma * T::standard_normal(rng)
        } else {
            T::zero()
        };

        let (e_a, e_b) = if cfg.amplitude_sigma > T::zero() {
            let z1 = T::standard_normal(rng);
            let z2 = T::standard_normal(rng);
            let rho = cfg.amplitude_correlation;
            let w = rho * z1 + (T::one() - rho * rho).sqrt() * z2;
            (
                (self.ln_mu + self.ln_sigma * z1).exp(),
                (self.ln_mu + self.ln_sigma * w).exp(),
            )
        } else {
            (cfg.amplitude_mean, cfg.amplitude_mean)
        };

        PulsePair {
            alpha,
            omega,
            delta_omega,
            e_a,
            e_b,
        }
    }

    /// Tapped intensities seen by the event-ready photodetectors.
    pub fn tap_intensities(&self, pair: &PulsePair<T>) -> (T, T) {
        let r = self.cfg.tap_ratio;
        (r * pair.e_a * pair.e_a, r * pair.e_b * pair.e_b)
    }

    /// Whether both event-ready detectors fire. Depends only on the pair.
    pub fn is_event_ready(&self, pair: &PulsePair<T>) -> bool {
        let (ta, tb) = self.tap_intensities(pair);
        ta >= self.cfg.pd_threshold && tb >= self.cfg.pd_threshold
    }

    /// Applies the unbalanced taps. Returns the pair with its transmitted
    /// amplitudes when both event-ready detectors fire.
    pub fn event_ready_select(&self, pair: &PulsePair<T>) -> Option<PulsePair<T>> {
        if !self.is_event_ready(pair) {
            return None;
        }
        let keep = (T::one() - self.cfg.tap_ratio).sqrt();
        Some(PulsePair {
            e_a: pair.e_a * keep,
            e_b: pair.e_b * keep,
            ..*pair
        })
    }

    /// Draws one pair and applies event-ready selection.
    pub fn draw_selected<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<PulsePair<T>> {
        let pair = self.draw_pulse_pair(rng);
        self.event_ready_select(&pair)
    }
}
