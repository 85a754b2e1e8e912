//! One balanced homodyne arm.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{reduce_phase, Real};
use crate::wavefield::{beamsplitter_intensities, digitize, photodetector_voltages, FieldPair};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Which arm setting is authoritative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettingMode {
    /// The applied local-oscillator phase shift is used directly.
    #[default]
    Phase,
    /// The phase is `ω·ΔL/c` for the LO-vs-test path difference `ΔL`.
    Path,
}

impl std::str::FromStr for SettingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(Self::Phase),
            "path" => Ok(Self::Path),
            other => Err(Error::InvalidConfig(format!("unknown setting mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for SettingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Phase => "phase",
            Self::Path => "path",
        })
    }
}

/// How registered events are decided in the discriminator experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DiscriminatorMode<T> {
    /// Registered when `|x| ≥ threshold`.
    #[default]
    Difference,
    /// Each photodiode voltage is compared with `offset + threshold/2`;
    /// registered when exactly one channel fires.
    TwoChannel { offset: T },
}

/// Settings for one homodyne arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSettings<T> {
    pub mode: SettingMode,
    /// Applied LO phase shift (rad), authoritative in [`SettingMode::Phase`].
    pub theta_setting: T,
    /// LO-vs-test path difference (m), authoritative in [`SettingMode::Path`].
    pub path_delta: T,
    /// Fixed path difference on top of which [`at_phase`](Self::at_phase)
    /// adds the setting in path mode.
    pub path_offset: T,
    /// Reference frequency for converting a phase setting to a path.
    pub omega_ref: T,
    pub lo_amplitude: T,
    pub gain: T,
    pub noise_sigma: T,
    pub discriminator_threshold: T,
    pub discriminator_mode: DiscriminatorMode<T>,
}

impl<T: Real> Default for ArmSettings<T> {
    fn default() -> Self {
        Self {
            mode: SettingMode::Phase,
            theta_setting: T::zero(),
            path_delta: T::zero(),
            path_offset: T::zero(),
            omega_ref: T::one(),
            lo_amplitude: T::one(),
            gain: T::one(),
            noise_sigma: T::zero(),
            discriminator_threshold: T::zero(),
            discriminator_mode: DiscriminatorMode::Difference,
        }
    }
}

impl<T: Real> ArmSettings<T> {
    pub fn validate(&self, arm: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{arm}: {msg}")));
        if !(self.lo_amplitude > T::zero() && self.lo_amplitude.is_finite()) {
            return bad(format!("lo_amplitude = {} must be positive", self.lo_amplitude));
        }
        if !(self.gain > T::zero() && self.gain.is_finite()) {
            return bad(format!("gain = {} must be positive", self.gain));
        }
        if !(self.noise_sigma >= T::zero() && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma = {} must be non-negative", self.noise_sigma));
        }
        if !(self.discriminator_threshold >= T::zero() && self.discriminator_threshold.is_finite()) {
            return bad(format!(
                "discriminator_threshold = {} must be non-negative",
                self.discriminator_threshold
            ));
        }
        if self.mode == SettingMode::Path && !(self.omega_ref > T::zero()) {
            return bad("path mode needs a positive omega_ref".into());
        }
        for v in [self.theta_setting, self.path_delta, self.path_offset] {
            if !v.is_finite() {
                return bad("settings must be finite".into());
            }
        }
        Ok(())
    }

    /// Returns settings realising the phase `theta`: directly in phase mode,
    /// or as `path_offset + θ·c/ω_ref` in path mode.
    pub fn at_phase(&self, theta: T) -> Self {
        let mut s = self.clone();
        s.theta_setting = theta;
        if s.mode == SettingMode::Path {
            s.path_delta = s.path_offset + theta * T::lit(SPEED_OF_LIGHT) / s.omega_ref;
        }
        s
    }

    /// Peak noise-free difference `gain·2·E·E_L` for test amplitude `e_test`.
    pub fn x_max(&self, e_test: T) -> T {
        self.gain * T::lit(2.0) * e_test * self.lo_amplitude
    }
}

/// Result of one arm measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmOutcome<T> {
    pub v_r: T,
    pub v_t: T,
    pub x: T,
    pub sign: i8,
    /// Whether the discriminator registered the event.
    pub discriminated: bool,
}

/// Phase of the test beam relative to the local oscillator,
/// `reduce(θ_setting − α)`, with the setting replaced by `ω·ΔL/c` in path mode.
pub fn effective_phase<T: Real>(arm_omega: T, settings: &ArmSettings<T>, alpha: T) -> T {
    let authoritative = match settings.mode {
        SettingMode::Phase => settings.theta_setting,
        SettingMode::Path => reduce_phase(arm_omega * settings.path_delta / T::lit(SPEED_OF_LIGHT)),
    };
    reduce_phase(authoritative - alpha)
}

/// Measures one arm of a pulse pair.
///
/// Reads only this arm's amplitude, frequency and settings plus the shared
/// hidden phase.
pub fn measure_arm<T: Real, R: Rng + ?Sized>(
    amplitude: T,
    arm_omega: T,
    settings: &ArmSettings<T>,
    alpha: T,
    rng: &mut R,
) -> ArmOutcome<T> {
    let theta = effective_phase(arm_omega, settings, alpha);
    let field = FieldPair::new(amplitude, settings.lo_amplitude, theta)
        .expect("validated amplitudes and finite phase");
    let (i_r, i_t) = beamsplitter_intensities(&field);
    let (v_r, v_t) = photodetector_voltages(i_r, i_t, settings.gain, settings.noise_sigma, rng);
    let x = v_r - v_t;
    let sign = digitize(x, rng);
    let mut outcome = ArmOutcome {
        v_r,
        v_t,
        x,
        sign,
        discriminated: true,
    };
    outcome.discriminated = registers(&outcome, settings);
    outcome
}

/// `|x| ≥ threshold`.
pub fn discriminate<T: Real>(outcome: &ArmOutcome<T>, threshold: T) -> bool {
    outcome.x.abs() >= threshold
}

fn registers<T: Real>(outcome: &ArmOutcome<T>, settings: &ArmSettings<T>) -> bool {
    let threshold = settings.discriminator_threshold;
    match settings.discriminator_mode {
        DiscriminatorMode::Difference => discriminate(outcome, threshold),
        DiscriminatorMode::TwoChannel { offset } => {
            let level = offset + threshold * T::lit(0.5);
            (outcome.v_r >= level) != (outcome.v_t >= level)
        }
    }
}
