//! The full two-arm set-up: source, event-ready taps and two homodyne arms.
//!
//! Randomness is split three ways per trial chunk: one stream for the
//! source, one per arm. An arm therefore consumes the same random numbers
//! whatever happens at the other arm.

use std::ops::Range;

use rand_chacha::ChaCha8Rng;

use crate::detector::{measure_arm, ArmOutcome, ArmSettings};
use crate::error::Result;
use crate::scalar::Real;
use crate::source::{PulsePair, Source, SourceConfig};
use crate::stream::Stream;

const SOURCE_TAG: u64 = 0;
const ARM_A_TAG: u64 = 1;
const ARM_B_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus<T> {
    pub source: Source<T>,
    pub arm_a: ArmSettings<T>,
    pub arm_b: ArmSettings<T>,
}

/// One event-ready pair and both arm outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial<T> {
    pub pair: PulsePair<T>,
    pub a: ArmOutcome<T>,
    pub b: ArmOutcome<T>,
}

/// Per-chunk random streams.
pub struct ChunkRngs {
    pub source: ChaCha8Rng,
    pub arm_a: ChaCha8Rng,
    pub arm_b: ChaCha8Rng,
}

impl ChunkRngs {
    pub fn new(chunk: Stream) -> Self {
        Self {
            source: chunk.child(SOURCE_TAG).rng(),
            arm_a: chunk.child(ARM_A_TAG).rng(),
            arm_b: chunk.child(ARM_B_TAG).rng(),
        }
    }
}

impl<T: Real> Apparatus<T> {
    pub fn new(source: SourceConfig<T>, arm_a: ArmSettings<T>, arm_b: ArmSettings<T>) -> Result<Self> {
        arm_a.validate("arm_a")?;
        arm_b.validate("arm_b")?;
        Ok(Self {
            source: Source::new(source)?,
            arm_a,
            arm_b,
        })
    }

    /// Nominal peak difference voltage of arm A for a mean-amplitude pulse.
    pub fn x_max_a(&self) -> T {
        self.arm_a
            .x_max(self.source.config().nominal_transmitted_amplitude())
    }

    pub fn x_max_b(&self) -> T {
        self.arm_b
            .x_max(self.source.config().nominal_transmitted_amplitude())
    }

    /// Draws one pair and, if event-ready, measures both arms with the
    /// given settings.
    pub fn trial(&self, a: &ArmSettings<T>, b: &ArmSettings<T>, rngs: &mut ChunkRngs) -> Option<Trial<T>> {
        let pair = self.source.draw_pulse_pair(&mut rngs.source);
        let pair = self.source.event_ready_select(&pair)?;
        let out_a = measure_arm(pair.e_a, pair.omega_a(), a, pair.alpha, &mut rngs.arm_a);
        let out_b = measure_arm(pair.e_b, pair.omega_b(), b, pair.alpha, &mut rngs.arm_b);
        Some(Trial {
            pair,
            a: out_a,
            b: out_b,
        })
    }

    /// Draws one pair and, if event-ready, measures arm A only.
    pub fn single(&self, a: &ArmSettings<T>, rngs: &mut ChunkRngs) -> Option<(PulsePair<T>, ArmOutcome<T>)> {
        let pair = self.source.draw_pulse_pair(&mut rngs.source);
        let pair = self.source.event_ready_select(&pair)?;
        let out = measure_arm(pair.e_a, pair.omega_a(), a, pair.alpha, &mut rngs.arm_a);
        Some((pair, out))
    }

    /// Runs `f` on every trial index of a chunk with fresh chunk streams.
    pub fn for_chunk<F>(chunk: Stream, range: Range<u64>, mut f: F)
    where
        F: FnMut(u64, &mut ChunkRngs),
    {
        let mut rngs = ChunkRngs::new(chunk);
        for i in range {
            f(i, &mut rngs);
        }
    }
}
