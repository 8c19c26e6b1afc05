//! Simulated pneumatic bending actuator.
//!
//! Three stages, integrated with explicit Euler at the control tick:
//!
//! 1. valve → pressure: `P ← clamp(P + k_v·(u − u₀)·dt, P_min, P_max)`;
//! 2. pressure → quasi-static angle: a bank of asymmetric play operators
//!    plus a linear term, `θ_qs = q·P + Σ w_j·y_j`;
//! 3. quasi-static angle → bending angle: first-order lag with time
//!    constant `τ`.
//!
//! Operator `j` keeps its state inside `[P − r_plus, P + r_minus]`, so on a
//! rising pressure it trails by `r_plus` and on a falling pressure it leads
//! by `r_minus`. The quasi-static map is rate independent: it depends only
//! on the sequence of pressures, never on the time between them.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Valve command range, volts.
pub const U_MIN: f64 = 0.0;
pub const U_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayOperator {
    /// deg/kPa
    pub weight: f64,
    /// Band above the pressure, kPa.
    pub r_minus: f64,
    /// Band below the pressure, kPa.
    pub r_plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub p_min_kpa: f64,
    pub p_max_kpa: f64,
    /// kPa/(V·s)
    pub valve_gain: f64,
    pub neutral_voltage: f64,
    /// q, deg/kPa
    pub linear_gain: f64,
    pub operators: Vec<PlayOperator>,
    pub lag_tau_s: f64,
    pub noise_std_deg: f64,
    pub quantization_deg: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        const R_MINUS: [f64; 5] = [0.0, 20.0, 40.0, 60.0, 80.0];
        const R_PLUS: [f64; 5] = [0.0, 50.0, 90.0, 130.0, 170.0];
        const WEIGHTS: [f64; 5] = [0.0487, 0.0539, 0.0118, 0.0109, 0.0001];
        PlantParams {
            p_min_kpa: 0.0,
            p_max_kpa: 500.0,
            valve_gain: 80.0,
            neutral_voltage: 5.0,
            linear_gain: 0.005,
            operators: (0..5)
                .map(|j| PlayOperator {
                    weight: WEIGHTS[j],
                    r_minus: R_MINUS[j],
                    r_plus: R_PLUS[j],
                })
                .collect(),
            lag_tau_s: 0.05,
            noise_std_deg: 0.0,
            quantization_deg: 0.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(format!("plant.{key}"), "must be finite"))
            }
        };
        finite("p_min_kpa", self.p_min_kpa)?;
        finite("p_max_kpa", self.p_max_kpa)?;
        if self.p_max_kpa <= self.p_min_kpa {
            return Err(Error::validation("plant.p_max_kpa", "must exceed plant.p_min_kpa"));
        }
        finite("valve_gain", self.valve_gain)?;
        if self.valve_gain <= 0.0 {
            return Err(Error::validation("plant.valve_gain", "must be > 0"));
        }
        finite("neutral_voltage", self.neutral_voltage)?;
        if !(U_MIN..=U_MAX).contains(&self.neutral_voltage) {
            return Err(Error::validation("plant.neutral_voltage", "must lie in [0, 10] V"));
        }
        finite("linear_gain", self.linear_gain)?;
        if self.linear_gain < 0.0 {
            return Err(Error::validation("plant.linear_gain", "must be >= 0"));
        }
        for (j, op) in self.operators.iter().enumerate() {
            let key = |f: &str| format!("plant.operators[{j}].{f}");
            if !(op.weight.is_finite() && op.weight >= 0.0) {
                return Err(Error::validation(key("weight"), "must be finite and >= 0"));
            }
            if !(op.r_minus.is_finite() && op.r_minus >= 0.0) {
                return Err(Error::validation(key("r_minus"), "must be finite and >= 0"));
            }
            if !(op.r_plus.is_finite() && op.r_plus >= op.r_minus) {
                return Err(Error::validation(key("r_plus"), "must be finite and >= r_minus"));
            }
        }
        finite("lag_tau_s", self.lag_tau_s)?;
        if self.lag_tau_s <= 0.0 {
            return Err(Error::validation("plant.lag_tau_s", "must be > 0"));
        }
        if !(self.noise_std_deg.is_finite() && self.noise_std_deg >= 0.0) {
            return Err(Error::validation("plant.noise_std_deg", "must be finite and >= 0"));
        }
        if !(self.quantization_deg.is_finite() && self.quantization_deg >= 0.0) {
            return Err(Error::validation("plant.quantization_deg", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Quasi-static angle on the loading branch from rest, i.e. after a
    /// monotone pressure rise from `p_min` to `pressure`.
    pub fn loading_curve(&self, pressure: f64) -> f64 {
        let mut state = PlantState::at_rest(self);
        state.set_pressure(pressure, self);
        state.theta_qs
    }

    /// Quasi-static angle reached once `p_max` is held.
    pub fn saturated_angle(&self) -> f64 {
        self.loading_curve(self.p_max_kpa)
    }

    /// Copy of these parameters with every play radius set to zero.
    pub fn without_hysteresis(&self) -> Self {
        let mut p = self.clone();
        for op in &mut p.operators {
            op.r_minus = 0.0;
            op.r_plus = 0.0;
        }
        p
    }
}

/// One asymmetric play operator update.
#[inline]
pub fn play_update(y_prev: f64, pressure: f64, r_minus: f64, r_plus: f64) -> f64 {
    (pressure - r_plus).max((pressure + r_minus).min(y_prev))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    /// kPa
    pub pressure: f64,
    /// Play operator states, kPa.
    pub play: Vec<f64>,
    /// deg
    pub theta_qs: f64,
    /// deg
    pub theta: f64,
    /// s
    pub t: f64,
}

impl PlantState {
    /// Straight actuator at `p_min` with relaxed operators.
    pub fn at_rest(params: &PlantParams) -> Self {
        let p = params.p_min_kpa;
        let play: Vec<f64> = params
            .operators
            .iter()
            .map(|op| play_update(0.0, p, op.r_minus, op.r_plus))
            .collect();
        let mut state = PlantState {
            pressure: p,
            play,
            theta_qs: 0.0,
            theta: 0.0,
            t: 0.0,
        };
        state.theta_qs = hysteresis_output(params, &state);
        state.theta = state.theta_qs;
        state
    }

    /// Settled state reached by loading monotonically from rest until the
    /// quasi-static angle equals `theta`.
    pub fn loaded_to_angle(params: &PlantParams, theta: f64) -> Result<Self> {
        let (lo_angle, hi_angle) = (params.loading_curve(params.p_min_kpa), params.saturated_angle());
        if !(lo_angle..=hi_angle).contains(&theta) {
            return Err(Error::Input(format!(
                "initial angle {theta} deg is unreachable on the loading branch [{lo_angle}, {hi_angle}]"
            )));
        }
        let (mut lo, mut hi) = (params.p_min_kpa, params.p_max_kpa);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if params.loading_curve(mid) < theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = if (params.loading_curve(hi) - theta).abs() < (params.loading_curve(lo) - theta).abs() {
            hi
        } else {
            lo
        };
        let mut state = PlantState::at_rest(params);
        state.set_pressure(p, params);
        state.theta = state.theta_qs;
        Ok(state)
    }

    /// Prescribes the pressure directly, bypassing the valve. Updates the
    /// operators and `theta_qs`; the lagged angle and the clock are untouched.
    pub fn set_pressure(&mut self, pressure: f64, params: &PlantParams) {
        self.pressure = pressure.clamp(params.p_min_kpa, params.p_max_kpa);
        for (y, op) in self.play.iter_mut().zip(&params.operators) {
            *y = play_update(*y, self.pressure, op.r_minus, op.r_plus);
        }
        self.theta_qs = hysteresis_output(params, self);
    }

    /// Advances the plant by one tick under valve command `u`.
    pub fn step(&mut self, u: f64, dt: f64, params: &PlantParams) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::Input(format!("non-finite valve command {u}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Input(format!("time step must be positive, got {dt}")));
        }
        let u = u.clamp(U_MIN, U_MAX);
        let p = self.pressure + params.valve_gain * (u - params.neutral_voltage) * dt;
        self.set_pressure(p, params);
        self.theta += dt / params.lag_tau_s * (self.theta_qs - self.theta);
        self.t += dt;
        Ok(())
    }
}

/// `θ_qs = q·P + Σ w_j·y_j`.
pub fn hysteresis_output(params: &PlantParams, state: &PlantState) -> f64 {
    params.linear_gain * state.pressure
        + params
            .operators
            .iter()
            .zip(&state.play)
            .map(|(op, y)| op.weight * y)
            .sum::<f64>()
}

/// Functional form of [`PlantState::step`].
pub fn step_plant(state: &PlantState, u: f64, dt: f64, params: &PlantParams) -> Result<PlantState> {
    let mut next = state.clone();
    next.step(u, dt, params)?;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorReading {
    pub theta_deg: f64,
    pub pressure_kpa: f64,
}

/// Angle reading with additive Gaussian noise and optional quantization;
/// the pressure is read exactly. Draws from `rng` only when noise is on.
pub fn read_sensors<R: Rng + ?Sized>(state: &PlantState, params: &PlantParams, rng: &mut R) -> SensorReading {
    let mut theta = state.theta;
    if params.noise_std_deg > 0.0 {
        let normal = Normal::new(0.0, params.noise_std_deg).expect("validated std");
        theta += normal.sample(rng);
    }
    if params.quantization_deg > 0.0 {
        theta = (theta / params.quantization_deg).round() * params.quantization_deg;
    }
    SensorReading {
        theta_deg: theta,
        pressure_kpa: state.pressure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn play_rest_point() {
        for (rm, rp) in [(0.0, 0.0), (10.0, 40.0), (80.0, 170.0)] {
            assert_eq!(play_update(0.0, 0.0, rm, rp), 0.0);
        }
    }

    #[test]
    fn play_clamps_to_lower_edge_on_loading() {
        assert_eq!(play_update(0.0, 100.0, 10.0, 40.0), 60.0);
    }

    #[test]
    fn play_holds_inside_band() {
        let y = play_update(0.0, 200.0, 10.0, 40.0);
        assert_eq!(y, 160.0);
        assert_eq!(play_update(y, 180.0, 10.0, 40.0), 160.0);
    }

    #[test]
    fn all_zero_state_is_straight() {
        let params = PlantParams::default();
        let s = PlantState::at_rest(&params);
        assert_eq!(hysteresis_output(&params, &s), 0.0);
    }

    #[test]
    fn saturated_angle_matches_closed_form() {
        let params = PlantParams::default();
        let closed: f64 = params.linear_gain * params.p_max_kpa
            + params
                .operators
                .iter()
                .map(|op| op.weight * (params.p_max_kpa - op.r_plus))
                .sum::<f64>();
        assert_relative_eq!(params.saturated_angle(), closed, max_relative = 1e-12);
        assert!((closed - 60.0).abs() <= 0.02 * 60.0, "{closed}");
    }

    #[test]
    fn neutral_valve_holds_pressure() {
        let params = PlantParams::default();
        let mut s = PlantState::loaded_to_angle(&params, 30.0).unwrap();
        let p0 = s.pressure;
        for _ in 0..2000 {
            s.step(params.neutral_voltage, 0.002, &params).unwrap();
        }
        assert_eq!(s.pressure, p0);
    }

    #[test]
    fn euler_fills_at_valve_gain() {
        let params = PlantParams::default();
        let mut s = PlantState::at_rest(&params);
        for _ in 0..500 {
            s.step(params.neutral_voltage + 1.0, 0.002, &params).unwrap();
        }
        assert_relative_eq!(s.pressure, 80.0, max_relative = 1e-9);
        assert_relative_eq!(s.t, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn lag_settles_within_three_time_constants() {
        let params = PlantParams::default();
        let mut s = PlantState::at_rest(&params);
        s.set_pressure(300.0, &params);
        let gap0 = (s.theta_qs - s.theta).abs();
        let ticks = (3.0 * params.lag_tau_s / 0.002).round() as usize;
        for _ in 0..ticks {
            s.step(params.neutral_voltage, 0.002, &params).unwrap();
        }
        assert!((s.theta - s.theta_qs).abs() < 0.051 * gap0);
    }

    #[test]
    fn pressure_is_clamped() {
        let params = PlantParams::default();
        let mut s = PlantState::at_rest(&params);
        for _ in 0..10_000 {
            s.step(10.0, 0.002, &params).unwrap();
        }
        assert_eq!(s.pressure, params.p_max_kpa);
        for _ in 0..10_000 {
            s.step(0.0, 0.002, &params).unwrap();
        }
        assert_eq!(s.pressure, params.p_min_kpa);
    }

    #[test]
    fn non_finite_command_is_an_error() {
        let params = PlantParams::default();
        let s = PlantState::at_rest(&params);
        assert!(matches!(step_plant(&s, f64::NAN, 0.002, &params), Err(Error::Input(_))));
    }

    #[test]
    fn sensors_pass_through_without_noise() {
        let params = PlantParams::default();
        let s = PlantState::loaded_to_angle(&params, 21.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = read_sensors(&s, &params, &mut rng);
        assert_eq!(r.theta_deg, s.theta);
        assert_eq!(r.pressure_kpa, s.pressure);
    }

    #[test]
    fn sensors_quantize() {
        let params = PlantParams {
            quantization_deg: 0.1,
            ..PlantParams::default()
        };
        let mut s = PlantState::at_rest(&params);
        s.theta = 12.34;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_relative_eq!(read_sensors(&s, &params, &mut rng).theta_deg, 12.3, epsilon = 1e-12);
    }

    #[test]
    fn sensor_noise_statistics() {
        let params = PlantParams {
            noise_std_deg: 0.02,
            ..PlantParams::default()
        };
        let s = PlantState::at_rest(&params);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100_000)
                .map(|_| read_sensors(&s, &params, &mut rng).theta_deg)
                .collect::<Vec<_>>()
        };
        let a = draw(42);
        assert_eq!(a, draw(42));
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 4e-4).abs() <= 0.05 * 4e-4, "{var}");
    }

    #[test]
    fn validation_rejects_inverted_radii() {
        let mut params = PlantParams::default();
        params.operators[2].r_plus = 10.0;
        let err = params.validate().unwrap_err();
        assert!(err.to_string().contains("plant.operators[2].r_plus"), "{err}");
        assert!(PlantParams::default().validate().is_ok());
    }

    #[test]
    fn loaded_state_reproduces_requested_angle() {
        let params = PlantParams::default();
        for theta in [0.0, 5.0, 27.3, 55.0] {
            let s = PlantState::loaded_to_angle(&params, theta).unwrap();
            assert!((s.theta_qs - theta).abs() < 1e-9, "{theta} -> {}", s.theta_qs);
            assert_eq!(s.theta, s.theta_qs);
        }
        assert!(PlantState::loaded_to_angle(&params, 70.0).is_err());
    }

    proptest! {
        #[test]
        fn play_update_is_idempotent(y in -500.0f64..500.0, p in 0.0f64..500.0, rm in 0.0f64..100.0, extra in 0.0f64..100.0) {
            let once = play_update(y, p, rm, rm + extra);
            prop_assert_eq!(play_update(once, p, rm, rm + extra), once);
            prop_assert!(once >= p - (rm + extra) && once <= p + rm);
        }

        #[test]
        fn plant_invariants_hold(us in proptest::collection::vec(0.0f64..=10.0, 1..400)) {
            let params = PlantParams::default();
            let mut s = PlantState::at_rest(&params);
            for u in us {
                s.step(u, 0.002, &params).unwrap();
                prop_assert!(s.pressure >= params.p_min_kpa && s.pressure <= params.p_max_kpa);
                for (y, op) in s.play.iter().zip(&params.operators) {
                    prop_assert!(*y >= s.pressure - op.r_plus && *y <= s.pressure + op.r_minus);
                }
                prop_assert!(s.theta_qs >= 0.0 && s.theta_qs <= 60.0 * 1.02);
            }
        }

        #[test]
        fn loading_branch_is_monotone(a in 0.0f64..500.0, b in 0.0f64..500.0) {
            let params = PlantParams::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let mut s = PlantState::at_rest(&params);
            s.set_pressure(lo, &params);
            let first = s.theta_qs;
            s.set_pressure(hi, &params);
            prop_assert!(s.theta_qs >= first);
        }
    }
}
