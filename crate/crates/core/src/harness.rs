//! Closed-loop episodes, the five-method comparison and the pressure-loop
//! identification run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::controller::{CascadeController, PidGains, PositionalPid};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics_from, MetricsReport};
use crate::plant::{read_sensors, PlantState, U_MAX, U_MIN};
use crate::signal::{tick_count, DiffState, Reference};
use crate::tuner::{tuner_step, Mode, TunerState};

/// One logged tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    /// s
    pub t: f64,
    /// deg
    pub theta_ref: f64,
    /// deg
    pub theta_meas: f64,
    /// `theta_ref − theta_meas`, deg
    pub error: f64,
    /// kPa
    pub p_ref: f64,
    /// kPa
    pub p_meas: f64,
    /// V
    pub u: f64,
    /// kPa/deg
    pub kp: f64,
    /// kPa·s/deg
    pub kff: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub samples: Vec<TraceSample>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn compute_metrics(trace: &EpisodeTrace) -> Result<MetricsReport> {
    let refs: Vec<f64> = trace.samples.iter().map(|s| s.theta_ref).collect();
    let errs: Vec<f64> = trace.samples.iter().map(|s| s.error).collect();
    compute_metrics_from(&refs, &errs)
}

/// Runs one tracking episode in `cfg.tuner.mode`.
pub fn run_episode(cfg: &RunConfig) -> Result<EpisodeTrace> {
    cfg.validate()?;
    let reference = Reference::new(&cfg.reference)?;
    let dt = cfg.dt;
    let n = cfg.ticks();
    let plant = &cfg.plant;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut state = PlantState::loaded_to_angle(plant, reference.sample(0.0)?)?;
    let mut controller = CascadeController::new(&cfg.controller, plant, state.pressure);
    let mut diff = DiffState::new(cfg.smoothing)?;
    let mode = cfg.tuner.mode;
    let mut tuner = TunerState::new(mode, cfg.controller.outer.kp, cfg.controller.kff);

    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        let theta_ref = reference.sample(t)?;
        let sensed = read_sensors(&state, plant, &mut rng);
        let diffs = diff.step(theta_ref, dt)?;
        let e = theta_ref - sensed.theta_deg;
        let (kp, kff) = tuner_step(&mut tuner, &cfg.tuner, &diffs, e);
        let p_ref = controller.outer_step(theta_ref, sensed.theta_deg, &diffs, kp, kff, dt);
        let u = controller.inner_step(p_ref, sensed.pressure_kpa, dt);
        samples.push(TraceSample {
            t,
            theta_ref,
            theta_meas: sensed.theta_deg,
            error: e,
            p_ref,
            p_meas: sensed.pressure_kpa,
            u,
            kp,
            kff,
        });
        if k < n {
            state.step(u, dt, plant)?;
        }
    }
    Ok(EpisodeTrace { samples })
}

/// One row of a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodResult {
    pub mode: Mode,
    pub metrics: MetricsReport,
    pub trace: EpisodeTrace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// Ordered as the requested modes.
    pub rows: Vec<MethodResult>,
    /// Index into `rows` of the best entry for each metric column (smallest
    /// magnitude).
    pub best: [usize; 5],
}

impl Comparison {
    pub fn get(&self, mode: Mode) -> Option<&MethodResult> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn reports(&self) -> Vec<(Mode, MetricsReport)> {
        self.rows.iter().map(|r| (r.mode, r.metrics)).collect()
    }
}

/// Runs one episode per mode, concurrently, with identical seeds.
pub fn compare_methods(cfg: &RunConfig, modes: &[Mode]) -> Result<Comparison> {
    if modes.is_empty() {
        return Err(Error::Input("no modes to compare".into()));
    }
    cfg.validate()?;
    let results: Vec<Result<MethodResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&mode| {
                let mut run = cfg.clone();
                run.tuner.mode = mode;
                scope.spawn(move || {
                    let trace = run_episode(&run)?;
                    let metrics = compute_metrics(&trace)?;
                    Ok(MethodResult { mode, metrics, trace })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("episode thread panicked"))
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = [0usize; 5];
    for (col, slot) in best.iter_mut().enumerate() {
        *slot = (0..rows.len())
            .min_by(|&a, &b| {
                let va = rows[a].metrics.values()[col].abs();
                let vb = rows[b].metrics.values()[col].abs();
                va.total_cmp(&vb)
            })
            .expect("nonempty");
    }
    Ok(Comparison { rows, best })
}

/// One sample of the identification run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopPoint {
    /// s
    pub t: f64,
    /// kPa
    pub p_ref: f64,
    /// kPa
    pub pressure: f64,
    /// Measured angle, deg.
    pub theta: f64,
    /// Quasi-static angle before the actuator lag, deg.
    pub theta_qs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HysteresisLoop {
    pub points: Vec<LoopPoint>,
    /// Index of the highest measured pressure.
    pub reversal: usize,
}

/// Dead-zone widths at the two reversals, kPa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeadZones {
    /// From rest, before the loading branch steepens.
    pub lower: f64,
    /// After the top reversal, before the unloading branch steepens.
    pub upper: f64,
}

impl HysteresisLoop {
    /// `−∮θ dP`, trapezoidal; positive when the unloading branch lies above
    /// the loading branch. deg·kPa.
    pub fn loop_area(&self) -> f64 {
        let pts = &self.points;
        let mut closed = 0.0;
        for w in pts.windows(2) {
            closed += 0.5 * (w[0].theta + w[1].theta) * (w[1].pressure - w[0].pressure);
        }
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            closed += 0.5 * (last.theta + first.theta) * (first.pressure - last.pressure);
        }
        -closed
    }

    /// Pressure excursion from each reversal until the quasi-static branch
    /// slope, measured over `window` kPa, first reaches `fraction` of the
    /// steepest loading slope. `None` for a degenerate loop.
    pub fn dead_zone_widths(&self, window: f64, fraction: f64) -> Option<DeadZones> {
        let loading = &self.points[..=self.reversal];
        let unloading = &self.points[self.reversal..];
        let load_slopes = branch_slopes(loading, window);
        let max_slope = load_slopes.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        if max_slope.is_nan() || max_slope <= 0.0 {
            return None;
        }
        let threshold = fraction * max_slope;
        let width = |slopes: &[(f64, f64)]| slopes.iter().find(|s| s.1 >= threshold).map(|s| s.0);
        let lower = width(&load_slopes)?;
        let upper = width(&branch_slopes(unloading, window))?;
        Some(DeadZones { lower, upper })
    }
}

/// `(excursion at window start, dθ_qs/dP)` over consecutive windows of at
/// least `window` kPa measured from the branch start.
fn branch_slopes(branch: &[LoopPoint], window: f64) -> Vec<(f64, f64)> {
    let Some(start) = branch.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut anchor = start;
    for p in branch {
        let dp = p.pressure - anchor.pressure;
        if dp.abs() >= window {
            let dtheta = p.theta_qs - anchor.theta_qs;
            out.push(((anchor.pressure - start.pressure).abs(), dtheta / dp));
            anchor = p;
        }
    }
    out
}

/// Drives the identification triangle through the inner pressure loop from
/// rest and records the `(P, θ)` loop. The outer loop is idle.
pub fn identify_hysteresis(cfg: &RunConfig) -> Result<HysteresisLoop> {
    cfg.validate()?;
    let spec = cfg.identify.reference();
    let triangle = Reference::new(&spec)?;
    let dt = cfg.dt;
    let n = tick_count(spec.duration_s, dt);
    let plant = &cfg.plant;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut state = PlantState::at_rest(plant);
    state.set_pressure(cfg.identify.base_kpa, plant);
    state.theta = state.theta_qs;
    let inner_gains: PidGains = cfg.controller.inner;
    let mut inner = PositionalPid::new(plant.neutral_voltage, Some((U_MIN, U_MAX)));

    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        let p_ref = triangle.sample(t)?;
        let sensed = read_sensors(&state, plant, &mut rng);
        let u = inner.update(p_ref - sensed.pressure_kpa, &inner_gains, dt);
        points.push(LoopPoint {
            t,
            p_ref,
            pressure: sensed.pressure_kpa,
            theta: sensed.theta_deg,
            theta_qs: state.theta_qs,
        });
        if k < n {
            state.step(u, dt, plant)?;
        }
    }
    let reversal = points.iter().enumerate().fold(
        0,
        |best, (i, p)| if p.pressure > points[best].pressure { i } else { best },
    );
    Ok(HysteresisLoop { points, reversal })
}
