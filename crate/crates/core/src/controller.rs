//! Two-loop cascade: an outer bending-angle loop that integrates pressure
//! increments into the inner-loop reference `P_d`, and an inner pressure
//! loop that drives the valve.
//!
//! ```text
//! P_d(t) = clamp(P_d(t−1) + ΔP_ff(t) + ΔP_fb(t), P_min, P_max)
//! ΔP_ff(t) = K_ff(t)·θ̃_d¹(t)
//! u(t) = clamp(u₀ + PID(P_d − P), 0, 10)
//! ```
//!
//! `ΔP_fb` comes from one of two outer laws, see [`OuterLaw`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{PlantParams, U_MAX, U_MIN};
use crate::signal::Derivatives;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        PidGains { kp, ki, kd }
    }

    pub fn validate(&self, section: &str) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    format!("{section}.{name}"),
                    "must be finite and >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// Incremental PID: returns the change of a positional PID output.
///
/// `Δy = K_P·(e − e₋₁) + K_I·e·dt + K_D·(e − 2e₋₁ + e₋₂)/dt`
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VelocityPid {
    e1: f64,
    e2: f64,
}

impl VelocityPid {
    pub fn update(&mut self, e: f64, gains: &PidGains, dt: f64) -> f64 {
        let delta = gains.kp * (e - self.e1) + gains.ki * e * dt + gains.kd * (e - 2.0 * self.e1 + self.e2) / dt;
        self.e2 = self.e1;
        self.e1 = e;
        delta
    }

    pub fn previous_errors(&self) -> (f64, f64) {
        (self.e1, self.e2)
    }
}

/// Positional PID around a bias, with optional output limits and
/// conditional integration.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionalPid {
    bias: f64,
    limits: Option<(f64, f64)>,
    integral: f64,
    prev_error: f64,
}

impl PositionalPid {
    pub fn new(bias: f64, limits: Option<(f64, f64)>) -> Self {
        PositionalPid {
            bias,
            limits,
            integral: 0.0,
            prev_error: 0.0,
        }
    }

    pub fn unbounded() -> Self {
        Self::new(0.0, None)
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn update(&mut self, e: f64, gains: &PidGains, dt: f64) -> f64 {
        let derivative = gains.kd * (e - self.prev_error) / dt;
        self.prev_error = e;
        let proportional = self.bias + gains.kp * e + derivative;
        let candidate = self.integral + e * dt;
        let raw = proportional + gains.ki * candidate;
        let Some((lo, hi)) = self.limits else {
            self.integral = candidate;
            return raw;
        };
        // freeze the integrator while saturated and the error pushes further out
        let winding = (raw > hi && e > 0.0) || (raw < lo && e < 0.0);
        if !winding {
            self.integral = candidate;
        }
        (proportional + gains.ki * self.integral).clamp(lo, hi)
    }
}

/// Feedforward pressure increment for one tick, kPa.
#[inline]
pub fn ff_delta(k_ff: f64, ref_velocity: f64) -> f64 {
    k_ff * ref_velocity
}

/// Velocity-form feedback pressure increment for one tick, kPa.
pub fn fb_delta(state: &mut VelocityPid, e: f64, gains: &PidGains, dt: f64) -> f64 {
    state.update(e, gains, dt)
}

/// How the outer feedback PID produces `ΔP_fb`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterLaw {
    /// `ΔP_fb = K_P·e + K_I·∫e dt + K_D·ė` added every tick, so `P_d`
    /// integrates the PID output.
    #[default]
    Incremental,
    /// `ΔP_fb` from [`fb_delta`], so `P_d` follows a positional PID.
    Velocity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    /// kPa/deg, kPa/(deg·s), kPa·s/deg
    pub outer: PidGains,
    /// V/kPa, V/(kPa·s), V·s/kPa
    pub inner: PidGains,
    /// Initial feedforward gain K_ff(0), kPa·s/deg.
    pub kff: f64,
    pub outer_law: OuterLaw,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            outer: PidGains::new(1.0e-1, 1.0e-5, 0.0),
            inner: PidGains::new(8.0e-2, 2.0e-5, 0.0),
            kff: 5.0e-3,
            outer_law: OuterLaw::Incremental,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        self.outer.validate("controller.outer")?;
        self.inner.validate("controller.inner")?;
        if self.outer.kp <= 0.0 {
            return Err(Error::validation("controller.outer.kp", "must be > 0"));
        }
        if !(self.kff.is_finite() && self.kff > 0.0) {
            return Err(Error::validation("controller.kff", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Controller memory carried between ticks.
#[derive(Clone, Debug)]
pub struct CascadeController {
    outer_gains: PidGains,
    inner_gains: PidGains,
    law: OuterLaw,
    outer_velocity: VelocityPid,
    outer_positional: PositionalPid,
    inner: PositionalPid,
    p_min: f64,
    p_max: f64,
    p_ref: f64,
    u: f64,
    last_ff: f64,
    last_fb: f64,
}

impl CascadeController {
    /// `initial_pressure` seeds `P_d(0)`.
    pub fn new(params: &ControllerParams, plant: &PlantParams, initial_pressure: f64) -> Self {
        CascadeController {
            outer_gains: params.outer,
            inner_gains: params.inner,
            law: params.outer_law,
            outer_velocity: VelocityPid::default(),
            outer_positional: PositionalPid::unbounded(),
            inner: PositionalPid::new(plant.neutral_voltage, Some((U_MIN, U_MAX))),
            p_min: plant.p_min_kpa,
            p_max: plant.p_max_kpa,
            p_ref: initial_pressure.clamp(plant.p_min_kpa, plant.p_max_kpa),
            u: plant.neutral_voltage,
            last_ff: 0.0,
            last_fb: 0.0,
        }
    }

    pub fn pressure_ref(&self) -> f64 {
        self.p_ref
    }

    pub fn valve_command(&self) -> f64 {
        self.u
    }

    /// `(ΔP_ff, ΔP_fb)` applied on the most recent outer step.
    pub fn last_deltas(&self) -> (f64, f64) {
        (self.last_ff, self.last_fb)
    }

    /// Outer loop: returns the new reference pressure `P_d(t)`.
    pub fn outer_step(
        &mut self,
        theta_ref: f64,
        theta_meas: f64,
        diffs: &Derivatives,
        kp_live: f64,
        kff_live: f64,
        dt: f64,
    ) -> f64 {
        let e = theta_ref - theta_meas;
        let gains = PidGains {
            kp: kp_live,
            ..self.outer_gains
        };
        let fb = match self.law {
            OuterLaw::Incremental => self.outer_positional.update(e, &gains, dt),
            OuterLaw::Velocity => fb_delta(&mut self.outer_velocity, e, &gains, dt),
        };
        let ff = ff_delta(kff_live, diffs.first);
        self.last_ff = ff;
        self.last_fb = fb;
        self.p_ref = (self.p_ref + ff + fb).clamp(self.p_min, self.p_max);
        self.p_ref
    }

    /// Inner loop: returns the valve command `u(t)` in volts.
    pub fn inner_step(&mut self, p_ref: f64, p_meas: f64, dt: f64) -> f64 {
        self.u = self.inner.update(p_ref - p_meas, &self.inner_gains, dt);
        self.u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const DT: f64 = 0.002;

    fn plant() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn ff_delta_examples() {
        assert_eq!(ff_delta(5.0e-3, 0.0), 0.0);
        assert_relative_eq!(ff_delta(5.0e-3, 40.0), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn fb_delta_examples() {
        let mut s = VelocityPid::default();
        assert_eq!(fb_delta(&mut s, 0.0, &PidGains::new(0.1, 1e-5, 1e-3), DT), 0.0);

        let p_only = PidGains::new(0.1, 0.0, 0.0);
        let mut s = VelocityPid::default();
        fb_delta(&mut s, 1.0, &p_only, DT);
        assert_relative_eq!(fb_delta(&mut s, 2.0, &p_only, DT), 0.1, max_relative = 1e-12);

        let mut s = VelocityPid::default();
        let first = fb_delta(&mut s, 3.0, &p_only, DT);
        assert_relative_eq!(first, 0.3, max_relative = 1e-12);
        for _ in 0..10 {
            assert_eq!(fb_delta(&mut s, 3.0, &p_only, DT), 0.0);
        }
    }

    #[test]
    fn inner_loop_examples() {
        let params = ControllerParams::default();
        let mut c = CascadeController::new(&params, &plant(), 100.0);
        assert_eq!(c.inner_step(100.0, 100.0, DT), 5.0);

        let mut c = CascadeController::new(
            &ControllerParams {
                inner: PidGains::new(8e-2, 0.0, 0.0),
                ..params.clone()
            },
            &plant(),
            0.0,
        );
        assert_relative_eq!(c.inner_step(110.0, 100.0, DT), 5.8, max_relative = 1e-12);
    }

    #[test]
    fn inner_integrator_freezes_when_saturated() {
        let gains = PidGains::new(8e-2, 0.5, 0.0);
        let mut pid = PositionalPid::new(5.0, Some((U_MIN, U_MAX)));
        let mut frozen_at = None;
        for k in 0..1000 {
            let u = pid.update(200.0, &gains, DT);
            assert!((U_MIN..=U_MAX).contains(&u));
            if u == U_MAX {
                let i = pid.integral();
                if let Some(prev) = frozen_at {
                    assert_eq!(i, prev, "tick {k}");
                }
                frozen_at = Some(i);
            }
        }
        assert!(frozen_at.is_some());
        // unwinding starts immediately when the error reverses
        let before = pid.integral();
        pid.update(-1.0, &gains, DT);
        assert!(pid.integral() < before);
    }

    #[test]
    fn zero_deltas_hold_reference_pressure() {
        let params = ControllerParams::default();
        let mut c = CascadeController::new(&params, &plant(), 123.0);
        let p = c.outer_step(20.0, 20.0, &Derivatives::default(), 0.1, 5e-3, DT);
        assert_eq!(p, 123.0);
    }

    #[test]
    fn reference_pressure_saturates() {
        let params = ControllerParams {
            outer: PidGains::new(1.0, 0.0, 0.0),
            ..ControllerParams::default()
        };
        let mut c = CascadeController::new(&params, &plant(), 499.0);
        let p = c.outer_step(5.0, 0.0, &Derivatives::default(), 1.0, 0.0, DT);
        assert_eq!(p, 500.0);
    }

    #[test]
    fn rising_reference_with_positive_error_raises_pressure() {
        for law in [OuterLaw::Incremental, OuterLaw::Velocity] {
            let params = ControllerParams {
                outer_law: law,
                ..ControllerParams::default()
            };
            let mut c = CascadeController::new(&params, &plant(), 200.0);
            let diffs = Derivatives {
                value: 30.0,
                first: 12.0,
                second: 0.0,
            };
            let p = c.outer_step(30.0, 29.0, &diffs, 0.1, 5e-3, DT);
            assert!(p > 200.0, "{law:?}");
        }
    }

    #[test]
    fn velocity_form_accumulates_to_positional_pid() {
        let gains = PidGains::new(0.7, 3.0, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut vel = VelocityPid::default();
        let mut pos = PositionalPid::unbounded();
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let e: f64 = rng.random_range(-10.0..10.0);
            sum += vel.update(e, &gains, DT);
            let y = pos.update(e, &gains, DT);
            assert!((sum - y).abs() <= 1e-9 * y.abs().max(1.0), "{sum} vs {y}");
        }
    }

    proptest! {
        #[test]
        fn loop_outputs_stay_in_range(
            errs in proptest::collection::vec((-60.0f64..60.0, -500.0f64..500.0, -300.0f64..300.0), 1..300),
            kp in 0.0f64..5.0,
        ) {
            let params = ControllerParams::default();
            let plant = plant();
            let mut c = CascadeController::new(&params, &plant, 250.0);
            for (e, p_err, vel) in errs {
                let diffs = Derivatives { value: 30.0, first: vel, second: 0.0 };
                let pd = c.outer_step(30.0 + e, 30.0, &diffs, kp, 5e-3, DT);
                prop_assert!(pd >= plant.p_min_kpa && pd <= plant.p_max_kpa);
                let u = c.inner_step(pd, pd - p_err, DT);
                prop_assert!((U_MIN..=U_MAX).contains(&u));
            }
        }
    }
}
