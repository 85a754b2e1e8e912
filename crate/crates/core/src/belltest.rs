//! Coincidence counting, correlation estimators and the CHSH statistic.
//!
//! Two estimators are provided. The fair one divides by `N_AB`, the number
//! of event-ready pairs, whether or not both arms registered. The
//! conventional one divides by the number of observed coincidences and is
//! biased whenever registration depends on the settings.

use std::ops::{Add, AddAssign};

use crate::apparatus::Apparatus;
use crate::detector::ArmSettings;
use crate::error::{Error, Result};
use crate::scalar::{reduce_phase, Real};
use crate::stream::{Executor, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct CoincidenceCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    /// Event-ready pairs analysed for this setting pair.
    pub n_ab: u64,
}

impl CoincidenceCounts {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64, n_ab: u64) -> Self {
        debug_assert!(n_pp + n_pm + n_mp + n_mm <= n_ab);
        Self {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
            n_ab,
        }
    }

    /// Sum of the four coincidence classes.
    pub fn observed(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }

    /// Records one event-ready pair; `None` marks an arm that did not register.
    pub fn record(&mut self, a: Option<i8>, b: Option<i8>) {
        self.n_ab += 1;
        match (a, b) {
            (Some(1), Some(1)) => self.n_pp += 1,
            (Some(1), Some(_)) => self.n_pm += 1,
            (Some(_), Some(1)) => self.n_mp += 1,
            (Some(_), Some(_)) => self.n_mm += 1,
            _ => {}
        }
    }

    pub fn get(&self, class: OutcomeClass) -> u64 {
        match class {
            OutcomeClass::PlusPlus => self.n_pp,
            OutcomeClass::PlusMinus => self.n_pm,
            OutcomeClass::MinusPlus => self.n_mp,
            OutcomeClass::MinusMinus => self.n_mm,
        }
    }

    fn agreement(&self) -> i64 {
        (self.n_pp + self.n_mm) as i64 - (self.n_pm + self.n_mp) as i64
    }
}

impl Add for CoincidenceCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            n_pp: self.n_pp + o.n_pp,
            n_pm: self.n_pm + o.n_pm,
            n_mp: self.n_mp + o.n_mp,
            n_mm: self.n_mm + o.n_mm,
            n_ab: self.n_ab + o.n_ab,
        }
    }
}

impl AddAssign for CoincidenceCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeClass {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 4] = [
        OutcomeClass::PlusPlus,
        OutcomeClass::PlusMinus,
        OutcomeClass::MinusPlus,
        OutcomeClass::MinusMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OutcomeClass::PlusPlus => "pp",
            OutcomeClass::PlusMinus => "pm",
            OutcomeClass::MinusPlus => "mp",
            OutcomeClass::MinusMinus => "mm",
        }
    }
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub sigma: T,
}

fn count<T: Real>(n: u64) -> T {
    T::from_u64(n).expect("count fits scalar")
}

/// `E = (N++ + N−− − N+− − N−+) / N_AB`.
pub fn correlation_fair<T: Real>(c: &CoincidenceCounts) -> Result<T> {
    if c.n_ab == 0 {
        return Err(Error::UndefinedEstimator("no event-ready pairs (N_AB = 0)"));
    }
    Ok(T::from_i64(c.agreement()).expect("count fits scalar") / count(c.n_ab))
}

/// `E = (N++ + N−− − N+− − N−+) / (N++ + N+− + N−+ + N−−)`.
pub fn correlation_conventional<T: Real>(c: &CoincidenceCounts) -> Result<T> {
    let observed = c.observed();
    if observed == 0 {
        return Err(Error::UndefinedEstimator("no observed coincidences"));
    }
    Ok(T::from_i64(c.agreement()).expect("count fits scalar") / count(observed))
}

/// Fair correlation with the standard error of a mean of `{−1, 0, +1}` draws.
pub fn correlation_fair_estimate<T: Real>(c: &CoincidenceCounts) -> Result<Estimate<T>> {
    let e: T = correlation_fair(c)?;
    let n = count::<T>(c.n_ab);
    let q = count::<T>(c.observed()) / n;
    Ok(Estimate {
        value: e,
        sigma: ((q - e * e).max(T::zero()) / n).sqrt(),
    })
}

/// Conventional correlation with its binomial standard error.
pub fn correlation_conventional_estimate<T: Real>(c: &CoincidenceCounts) -> Result<Estimate<T>> {
    let e: T = correlation_conventional(c)?;
    let n = count::<T>(c.observed());
    Ok(Estimate {
        value: e,
        sigma: ((T::one() - e * e).max(T::zero()) / n).sqrt(),
    })
}

/// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
pub fn chsh<T: Real>(e_ab: T, e_abp: T, e_apb: T, e_apbp: T) -> T {
    e_ab - e_abp + e_apb + e_apbp
}

/// The four CHSH detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings<T> {
    pub a: T,
    pub a_prime: T,
    pub b: T,
    pub b_prime: T,
}

impl<T: Real> Default for ChshSettings<T> {
    /// `a = π/8, a′ = 5π/8, b = 3π/8, b′ = 7π/8`: every setting lies in
    /// `(0, π)`, so the two-class model gives `S = 2`, and neighbouring
    /// settings are π/4 apart, so a uniformly distributed phase also gives
    /// `S = 2`.
    fn default() -> Self {
        let p8 = T::PI() / T::lit(8.0);
        Self {
            a: p8,
            a_prime: p8 * T::lit(5.0),
            b: p8 * T::lit(3.0),
            b_prime: p8 * T::lit(7.0),
        }
    }
}

impl<T: Real> ChshSettings<T> {
    /// Setting pairs in CHSH order: `(a,b), (a,b′), (a′,b), (a′,b′)`.
    pub fn pairs(&self) -> [(T, T); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }

    pub const PAIR_LABELS: [&'static str; 4] = ["a_b", "a_bp", "ap_b", "ap_bp"];
}

/// Counts for the four setting pairs of one CHSH run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshRun<T> {
    pub settings: ChshSettings<T>,
    pub counts: [CoincidenceCounts; 4],
}

impl<T: Real> ChshRun<T> {
    fn combine(&self, per_pair: impl Fn(&CoincidenceCounts) -> Result<Estimate<T>>) -> Result<Estimate<T>> {
        let mut es = [Estimate {
            value: T::zero(),
            sigma: T::zero(),
        }; 4];
        for (e, c) in es.iter_mut().zip(&self.counts) {
            *e = per_pair(c)?;
        }
        let var = es.iter().fold(T::zero(), |acc, e| acc + e.sigma * e.sigma);
        Ok(Estimate {
            value: chsh(es[0].value, es[1].value, es[2].value, es[3].value),
            sigma: var.sqrt(),
        })
    }

    /// `S` from the fair estimator, with σ_S from the four binomial errors
    /// added in quadrature.
    pub fn s_fair(&self) -> Result<Estimate<T>> {
        self.combine(correlation_fair_estimate)
    }

    pub fn s_conventional(&self) -> Result<Estimate<T>> {
        self.combine(correlation_conventional_estimate)
    }

    /// Fraction of event-ready pairs where both arms registered.
    pub fn kept_fraction(&self) -> T {
        let (obs, all) = self
            .counts
            .iter()
            .fold((0u64, 0u64), |(o, a), c| (o + c.observed(), a + c.n_ab));
        if all == 0 {
            T::zero()
        } else {
            count::<T>(obs) / count(all)
        }
    }
}

/// Which arm outcomes enter the coincidence counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Registration {
    /// Every digitized outcome counts (the event-ready Bell test).
    #[default]
    All,
    /// Only outcomes passing the arm's discriminator count.
    Discriminated,
}

/// Monte Carlo coincidence counts for one setting pair over `n_trials`
/// drawn pulse pairs.
pub fn simulate_setting_pair<T: Real>(
    app: &Apparatus<T>,
    theta_a: T,
    theta_b: T,
    n_trials: u64,
    registration: Registration,
    stream: Stream,
    exec: &Executor,
) -> CoincidenceCounts {
    let a = app.arm_a.at_phase(theta_a);
    let b = app.arm_b.at_phase(theta_b);
    simulate_with_settings(app, &a, &b, n_trials, registration, stream, exec)
}

pub(crate) fn simulate_with_settings<T: Real>(
    app: &Apparatus<T>,
    a: &ArmSettings<T>,
    b: &ArmSettings<T>,
    n_trials: u64,
    registration: Registration,
    stream: Stream,
    exec: &Executor,
) -> CoincidenceCounts {
    exec.map_chunk_streams(stream, n_trials, |chunk, range| {
        let mut c = CoincidenceCounts::default();
        Apparatus::<T>::for_chunk(chunk, range, |_, rngs| {
            if let Some(t) = app.trial(a, b, rngs) {
                match registration {
                    Registration::All => c.record(Some(t.a.sign), Some(t.b.sign)),
                    Registration::Discriminated => c.record(
                        t.a.discriminated.then_some(t.a.sign),
                        t.b.discriminated.then_some(t.b.sign),
                    ),
                }
            }
        });
        c
    })
    .into_iter()
    .fold(CoincidenceCounts::default(), Add::add)
}

/// Runs the four setting pairs on disjoint trial blocks, each on its own
/// child stream, `n_trials` drawn pulse pairs per block.
pub fn simulate_chsh<T: Real>(
    app: &Apparatus<T>,
    settings: &ChshSettings<T>,
    n_trials: u64,
    registration: Registration,
    stream: Stream,
    exec: &Executor,
) -> ChshRun<T> {
    let mut counts = [CoincidenceCounts::default(); 4];
    for (i, (ta, tb)) in settings.pairs().into_iter().enumerate() {
        counts[i] = simulate_setting_pair(app, ta, tb, n_trials, registration, stream.child(i as u64), exec);
    }
    ChshRun {
        settings: *settings,
        counts,
    }
}

fn check_off_boundary<T: Real>(theta: T) -> Result<T> {
    let r = reduce_phase(theta);
    if r == T::zero() || r == T::PI() || !r.is_finite() {
        return Err(Error::UndefinedAtBoundary { theta: theta.as_f64() });
    }
    Ok(r)
}

/// Deterministic noise-free outcome `+1` for `θ − α ∈ (0, π)`.
fn plus_given_alpha<T: Real>(theta_reduced: T, alpha_is_zero: bool) -> bool {
    // θ ∈ (−π, π] and off the boundaries, so θ − π ∈ (0, π) ⇔ θ ∈ (−π, 0).
    if alpha_is_zero {
        theta_reduced > T::zero()
    } else {
        theta_reduced < T::zero()
    }
}

/// Closed-form coincidence probabilities `(P++, P+−, P−+, P−−)` of the
/// noise-free two-class model with `P(α = 0) = p_alpha_zero`.
pub fn analytic_coincidence<T: Real>(theta_a: T, theta_b: T, p_alpha_zero: T) -> Result<[T; 4]> {
    let ta = check_off_boundary(theta_a)?;
    let tb = check_off_boundary(theta_b)?;
    if !(p_alpha_zero >= T::zero() && p_alpha_zero <= T::one()) {
        return Err(Error::InvalidConfig(format!(
            "p_alpha_zero = {p_alpha_zero} outside [0, 1]"
        )));
    }
    let mut p = [T::zero(); 4];
    for (alpha_zero, weight) in [(true, p_alpha_zero), (false, T::one() - p_alpha_zero)] {
        let a = plus_given_alpha(ta, alpha_zero);
        let b = plus_given_alpha(tb, alpha_zero);
        let idx = match (a, b) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        p[idx] = p[idx] + weight;
    }
    Ok(p)
}

/// `(max − min) / (max + min)` over the rates of a curve.
pub fn visibility<T: Real>(curve: &[(T, T)]) -> Result<T> {
    if curve.len() < 2 {
        return Err(Error::UndefinedVisibility("need at least two points"));
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &(_, r) in curve {
        if !(r >= T::zero()) {
            return Err(Error::UndefinedVisibility("rates must be non-negative"));
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if hi + lo <= T::zero() {
        return Err(Error::UndefinedVisibility("all rates are zero"));
    }
    Ok((hi - lo) / (hi + lo))
}
