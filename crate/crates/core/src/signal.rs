//! Reference trajectories, pressure waveforms and pseudo-differentials.
//!
//! A [`ReferenceSpec`] is a plain description of a waveform; [`Reference`]
//! is its compiled, sampleable form. Sampling is a pure function of the
//! spec and the query time, so two episodes running at different rates see
//! identical values at shared timestamps.
//!
//! [`DiffState`] turns a stream of reference samples into the order-0/1/2
//! pseudo-differentials consumed by the feedforward path and the adaptive
//! tuner: a backward difference divided by `dt`, followed by first-order
//! exponential smoothing. The second order is the same estimator applied to
//! the smoothed first order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// `offset + Σ aᵢ·sin(2π fᵢ t + φᵢ)`.
    MultiSine,
    /// Half-cosine transitions between seeded random levels.
    PiecewiseSine,
    /// Repeating triangle rising from `offset` to `offset + a` and back.
    TriangularPressure,
}

/// One `(amplitude, frequency, phase)` component. The amplitude is in
/// degrees for bending references and kPa for pressure waveforms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    pub amplitude: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl SineTerm {
    pub fn new(amplitude: f64, frequency_hz: f64, phase_rad: f64) -> Self {
        SineTerm {
            amplitude,
            frequency_hz,
            phase_rad,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub kind: ReferenceKind,
    pub duration_s: f64,
    pub offset: f64,
    pub terms: Vec<SineTerm>,
    #[serde(default)]
    pub seed: u64,
}

impl ReferenceSpec {
    /// 30 s reference with rapid variations: three sines with periods of
    /// 10 s, 6 s and 3.3 s spanning 5 to 55 deg.
    pub fn rapid_30s() -> Self {
        ReferenceSpec {
            kind: ReferenceKind::MultiSine,
            duration_s: 30.0,
            offset: 30.2,
            terms: vec![
                SineTerm::new(14.76, 1.0 / 10.0, 3.36),
                SineTerm::new(10.8, 1.0 / 6.0, 3.51),
                SineTerm::new(2.58, 1.0 / 3.3, 0.27),
            ],
            seed: 0,
        }
    }

    /// 120 s reference with gradual changes: two sines with periods of
    /// 60 s and 35 s spanning 5 to 55 deg.
    pub fn gradual_120s() -> Self {
        ReferenceSpec {
            kind: ReferenceKind::MultiSine,
            duration_s: 120.0,
            offset: 28.2,
            terms: vec![
                SineTerm::new(16.6, 1.0 / 60.0, 0.0),
                SineTerm::new(11.07, 1.0 / 35.0, 0.0),
            ],
            seed: 0,
        }
    }

    /// Single pressure triangle `base → base + peak → base` over `duration_s`.
    pub fn pressure_triangle(base_kpa: f64, peak_rise_kpa: f64, duration_s: f64) -> Self {
        ReferenceSpec {
            kind: ReferenceKind::TriangularPressure,
            duration_s,
            offset: base_kpa,
            terms: vec![SineTerm::new(peak_rise_kpa, 1.0 / duration_s, 0.0)],
            seed: 0,
        }
    }

    /// Constant reference (all amplitudes zero).
    pub fn constant(value: f64, duration_s: f64) -> Self {
        ReferenceSpec {
            kind: ReferenceKind::MultiSine,
            duration_s,
            offset: value,
            terms: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    start: f64,
    duration: f64,
    from: f64,
    to: f64,
}

/// A validated, sampleable reference.
#[derive(Clone, Debug)]
pub struct Reference {
    spec: ReferenceSpec,
    segments: Vec<Segment>,
}

impl Reference {
    pub fn new(spec: &ReferenceSpec) -> Result<Self> {
        check_spec(spec)?;
        let segments = match spec.kind {
            ReferenceKind::PiecewiseSine => build_segments(spec),
            _ => Vec::new(),
        };
        Ok(Reference {
            spec: spec.clone(),
            segments,
        })
    }

    pub fn spec(&self) -> &ReferenceSpec {
        &self.spec
    }

    pub fn duration(&self) -> f64 {
        self.spec.duration_s
    }

    /// Value at time `t`; errors when `t` lies outside `[0, duration]`.
    pub fn sample(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.spec.duration_s).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                duration: self.spec.duration_s,
            });
        }
        Ok(self.eval(t))
    }

    fn eval(&self, t: f64) -> f64 {
        let spec = &self.spec;
        match spec.kind {
            ReferenceKind::MultiSine => {
                spec.offset
                    + spec
                        .terms
                        .iter()
                        .map(|s| s.amplitude * (2.0 * PI * s.frequency_hz * t + s.phase_rad).sin())
                        .sum::<f64>()
            }
            ReferenceKind::TriangularPressure => {
                let term = &spec.terms[0];
                let x = term.frequency_hz * t + term.phase_rad / (2.0 * PI);
                let frac = x - x.floor();
                spec.offset + term.amplitude * (1.0 - (2.0 * frac - 1.0).abs())
            }
            ReferenceKind::PiecewiseSine => {
                let idx = self.segments.partition_point(|s| s.start <= t).saturating_sub(1);
                let seg = &self.segments[idx];
                let phase = ((t - seg.start) / seg.duration).clamp(0.0, 1.0);
                let blend = 0.5 * (1.0 - (PI * phase).cos());
                seg.from + (seg.to - seg.from) * blend
            }
        }
    }

    /// Smallest and largest value over the tick grid `k·dt`, `k = 0..=n`.
    pub fn range_on_grid(&self, dt: f64) -> (f64, f64) {
        let n = tick_count(self.spec.duration_s, dt);
        (0..=n)
            .map(|k| self.eval(k as f64 * dt))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// Samples `spec` at `t`. Convenience wrapper around [`Reference`].
pub fn gen_reference(spec: &ReferenceSpec, t: f64) -> Result<f64> {
    Reference::new(spec)?.sample(t)
}

/// Number of ticks after the initial one; `duration = n·dt`.
pub(crate) fn tick_count(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}

fn check_spec(spec: &ReferenceSpec) -> Result<()> {
    if !(spec.duration_s.is_finite() && spec.duration_s > 0.0) {
        return Err(Error::validation("reference.duration_s", "must be finite and > 0"));
    }
    if !spec.offset.is_finite() {
        return Err(Error::validation("reference.offset", "must be finite"));
    }
    for (i, term) in spec.terms.iter().enumerate() {
        let finite = term.amplitude.is_finite() && term.frequency_hz.is_finite() && term.phase_rad.is_finite();
        if !finite || term.frequency_hz < 0.0 {
            return Err(Error::validation(
                format!("reference.terms[{i}]"),
                "amplitude, frequency and phase must be finite; frequency >= 0",
            ));
        }
    }
    match spec.kind {
        ReferenceKind::TriangularPressure if spec.terms.len() != 1 => Err(Error::validation(
            "reference.terms",
            "triangular_pressure takes exactly one term",
        )),
        ReferenceKind::PiecewiseSine if spec.terms.is_empty() || spec.terms.iter().any(|t| t.frequency_hz <= 0.0) => {
            Err(Error::validation(
                "reference.terms",
                "piecewise_sine needs at least one term with frequency > 0",
            ))
        }
        _ => Ok(()),
    }
}

// Each segment lasts half the period of a randomly chosen term and moves to
// a level drawn from offset ± Σ|a|.
fn build_segments(spec: &ReferenceSpec) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let spread: f64 = spec.terms.iter().map(|t| t.amplitude.abs()).sum();
    let mut segments = Vec::new();
    let mut start = 0.0;
    let mut level = spec.offset;
    while start <= spec.duration_s {
        let term = &spec.terms[rng.random_range(0..spec.terms.len())];
        let duration = 0.5 / term.frequency_hz;
        let to = spec.offset + spread * rng.random_range(-1.0..=1.0);
        segments.push(Segment {
            start,
            duration,
            from: level,
            to,
        });
        level = to;
        start += duration;
    }
    segments
}

/// Reference value and its smoothed first and second pseudo-differentials.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Derivatives {
    /// deg
    pub value: f64,
    /// deg/s
    pub first: f64,
    /// deg/s²
    pub second: f64,
}

/// Streaming pseudo-differentiator.
///
/// The first two ticks report zero for orders 1 and 2. Smoothed estimates
/// are seeded with the first raw difference rather than with zero, so a
/// reference that starts in motion produces no artificial acceleration.
#[derive(Clone, Debug)]
pub struct DiffState {
    alpha: f64,
    prev_sample: f64,
    first: f64,
    second: f64,
    ticks: u64,
}

impl DiffState {
    /// `alpha` is the smoothing coefficient in `(0, 1]`; 1 disables smoothing.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::validation("smoothing", "must lie in (0, 1]"));
        }
        Ok(DiffState {
            alpha,
            prev_sample: 0.0,
            first: 0.0,
            second: 0.0,
            ticks: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&mut self, sample: f64, dt: f64) -> Result<Derivatives> {
        if !sample.is_finite() {
            return Err(Error::Input(format!("non-finite reference sample {sample}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Input(format!("time step must be positive, got {dt}")));
        }
        if self.ticks == 0 {
            self.prev_sample = sample;
        }
        let raw_first = (sample - self.prev_sample) / dt;
        self.prev_sample = sample;
        match self.ticks {
            0 => {}
            1 => self.first = raw_first,
            _ => {
                let prev_first = self.first;
                self.first += self.alpha * (raw_first - self.first);
                let raw_second = (self.first - prev_first) / dt;
                if self.ticks == 2 {
                    self.second = raw_second;
                } else {
                    self.second += self.alpha * (raw_second - self.second);
                }
            }
        }
        self.ticks += 1;
        if self.ticks <= 2 {
            return Ok(Derivatives {
                value: sample,
                first: 0.0,
                second: 0.0,
            });
        }
        Ok(Derivatives {
            value: sample,
            first: self.first,
            second: self.second,
        })
    }
}

/// Advances `state` by one sample.
pub fn pseudo_diff_step(state: &mut DiffState, sample: f64, dt: f64) -> Result<Derivatives> {
    state.step(sample, dt)
}
