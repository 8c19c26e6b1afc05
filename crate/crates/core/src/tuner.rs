//! 2-DoF anti-hysteresis tuner.
//!
//! Each tick, both dynamic gains (the outer proportional gain `K_P` and the
//! feedforward gain `K_ff`) receive a modulation `ΔG` computed from the
//! reference kinematics alone:
//!
//! ```text
//! D  = −sign(θ̃_d¹·θ̃_d²)
//! ΔG = M₁·θ̃_d·|θ̃_d²| / ((b₁+|θ̃_d¹|)(c₁+|θ̃_d²|))·D        if θ̃_d² < 0
//! ΔG = M₂·(Θ−θ̃_d)·|θ̃_d²| / ((b₂+|θ̃_d¹|)(c₂+|θ̃_d²|))·D    if θ̃_d² > 0
//! ΔG = 0                                                     otherwise
//! ```
//!
//! `D = +1` while the reference decelerates towards a U-turn, `−1` while it
//! speeds away from one. The feedback channel scales `ΔG` by an error term
//! `f` and a gain-centering term `g`; the feedforward channel amplifies
//! decreases by `1 + μ`. Both gains are floored at their initial values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Derivatives;

/// Controller variant compared in the tracking experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Cascade PID, no feedforward.
    Pid,
    /// PID plus constant feedforward gain.
    FfStatic,
    /// PID plus adaptive feedforward gain.
    FfAdaptive,
    /// Constant feedforward plus adaptive feedback gain.
    FbAdaptive,
    /// Both gains adaptive.
    TwoDof,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Pid,
        Mode::FfStatic,
        Mode::FfAdaptive,
        Mode::FbAdaptive,
        Mode::TwoDof,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pid => "pid",
            Mode::FfStatic => "ff_static",
            Mode::FfAdaptive => "ff_adaptive",
            Mode::FbAdaptive => "fb_adaptive",
            Mode::TwoDof => "two_dof",
        }
    }

    pub fn uses_feedforward(self) -> bool {
        self != Mode::Pid
    }

    pub fn adapts_feedback(self) -> bool {
        matches!(self, Mode::FbAdaptive | Mode::TwoDof)
    }

    pub fn adapts_feedforward(self) -> bool {
        matches!(self, Mode::FfAdaptive | Mode::TwoDof)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            Error::validation(
                "tuner.mode",
                format!("unknown mode `{s}`; expected pid, ff_static, ff_adaptive, fb_adaptive or two_dof"),
            )
        })
    }
}

/// One `(M, b, c)` modulation triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub m: f64,
    /// deg/s
    pub b: f64,
    /// deg/s²
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerParams {
    pub mode: Mode,
    /// kPa/(deg·s)
    pub m_fb: f64,
    pub b_fb: f64,
    pub c_fb: f64,
    /// kPa/deg
    pub m_ff: f64,
    pub b_ff: f64,
    pub c_ff: f64,
    /// Θ, deg
    pub theta_max: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Separate triple for the feedback channel when θ̃_d² > 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fb_rising: Option<Modulation>,
    /// Separate triple for the feedforward channel when θ̃_d² > 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ff_rising: Option<Modulation>,
    /// Use `h = (1 + (1−D)/2·μ)·D` verbatim instead of the magnitude-only
    /// multiplier.
    pub literal_h: bool,
}

impl Default for TunerParams {
    fn default() -> Self {
        TunerParams {
            mode: Mode::TwoDof,
            m_fb: 1.4,
            b_fb: 20.0,
            c_fb: 3.5e5,
            m_ff: 0.15,
            b_ff: 30.0,
            c_ff: 2.0e5,
            theta_max: 60.0,
            kappa: 1.0,
            lambda: 0.20,
            mu: 0.60,
            fb_rising: None,
            ff_rising: None,
            literal_h: false,
        }
    }
}

impl TunerParams {
    pub fn fb_falling(&self) -> Modulation {
        Modulation {
            m: self.m_fb,
            b: self.b_fb,
            c: self.c_fb,
        }
    }

    pub fn fb_rising(&self) -> Modulation {
        self.fb_rising.unwrap_or_else(|| self.fb_falling())
    }

    pub fn ff_falling(&self) -> Modulation {
        Modulation {
            m: self.m_ff,
            b: self.b_ff,
            c: self.c_ff,
        }
    }

    pub fn ff_rising(&self) -> Modulation {
        self.ff_rising.unwrap_or_else(|| self.ff_falling())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_fb", self.m_fb),
            ("b_fb", self.b_fb),
            ("c_fb", self.c_fb),
            ("m_ff", self.m_ff),
            ("b_ff", self.b_ff),
            ("c_ff", self.c_ff),
            ("theta_max", self.theta_max),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("tuner.{key}"), "must be finite and > 0"));
            }
        }
        for (key, v) in [("kappa", self.kappa), ("lambda", self.lambda), ("mu", self.mu)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(format!("tuner.{key}"), "must be finite and >= 0"));
            }
        }
        for (key, m) in [("fb_rising", self.fb_rising), ("ff_rising", self.ff_rising)] {
            if let Some(m) = m {
                if !(m.m > 0.0 && m.b > 0.0 && m.c > 0.0 && m.m.is_finite() && m.b.is_finite() && m.c.is_finite()) {
                    return Err(Error::validation(
                        format!("tuner.{key}"),
                        "m, b and c must be finite and > 0",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Direction modulator `D = −sign(θ̃_d¹·θ̃_d²)`.
#[inline]
pub fn direction(velocity: f64, acceleration: f64) -> i8 {
    -(sign(velocity) * sign(acceleration))
}

/// Gain modulation `ΔG` before stabilization. `falling` applies when the
/// reference acceleration is negative, `rising` when it is positive.
pub fn raw_gain_delta(diffs: &Derivatives, falling: &Modulation, rising: &Modulation, theta_max: f64, d: i8) -> f64 {
    let acc = diffs.second.abs();
    let vel = diffs.first.abs();
    let (p, angle) = if diffs.second < 0.0 {
        (falling, diffs.value)
    } else if diffs.second > 0.0 {
        (rising, theta_max - diffs.value)
    } else {
        return 0.0;
    };
    p.m * angle * acc / ((p.b + vel) * (p.c + acc)) * f64::from(d)
}

/// Feedback stabilization `ΔK_P·f(e, D, κ)·g(K_P, D, λ)`.
pub fn fb_stabilize(delta: f64, e: f64, kp_prev: f64, kp0: f64, kappa: f64, lambda: f64, d: i8) -> f64 {
    let d = f64::from(d);
    let f = e.abs().max(1.0).powf(-kappa * d);
    let g = (kp0 / kp_prev).powf(lambda * d);
    delta * f * g
}

/// Feedforward stabilization: decreases (`D = −1`) are amplified by `1 + μ`.
pub fn ff_stabilize(delta: f64, mu: f64, d: i8) -> f64 {
    match d {
        -1 => delta * (1.0 + mu),
        _ => delta,
    }
}

/// `ΔK_ff·h(D, μ)` with `h = (1 + (1−D)/2·μ)·D` taken literally.
pub fn ff_stabilize_literal(delta: f64, mu: f64, d: i8) -> f64 {
    let d = f64::from(d);
    delta * (1.0 + (1.0 - d) / 2.0 * mu) * d
}

/// Cutoff `G = max{G(0), G(t−1) + ΔG'}`.
#[inline]
pub fn cutoff_update(g_prev: f64, delta: f64, g0: f64) -> f64 {
    g0.max(g_prev + delta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TunerState {
    pub kp: f64,
    pub kff: f64,
    pub kp0: f64,
    pub kff0: f64,
    pub direction: i8,
}

impl TunerState {
    /// `kff0` is ignored (forced to zero) in [`Mode::Pid`].
    pub fn new(mode: Mode, kp0: f64, kff0: f64) -> Self {
        let kff0 = if mode.uses_feedforward() { kff0 } else { 0.0 };
        TunerState {
            kp: kp0,
            kff: kff0,
            kp0,
            kff0,
            direction: 0,
        }
    }
}

/// One tuner tick. Returns the live `(K_P(t), K_ff(t))`.
pub fn tuner_step(state: &mut TunerState, params: &TunerParams, diffs: &Derivatives, e: f64) -> (f64, f64) {
    let d = direction(diffs.first, diffs.second);
    state.direction = d;
    if params.mode.adapts_feedback() {
        let raw = raw_gain_delta(diffs, &params.fb_falling(), &params.fb_rising(), params.theta_max, d);
        let delta = fb_stabilize(raw, e, state.kp, state.kp0, params.kappa, params.lambda, d);
        state.kp = cutoff_update(state.kp, delta, state.kp0);
    }
    if params.mode.adapts_feedforward() {
        let raw = raw_gain_delta(diffs, &params.ff_falling(), &params.ff_rising(), params.theta_max, d);
        let delta = if params.literal_h {
            ff_stabilize_literal(raw, params.mu, d)
        } else {
            ff_stabilize(raw, params.mu, d)
        };
        state.kff = cutoff_update(state.kff, delta, state.kff0);
    }
    (state.kp, state.kff)
}
