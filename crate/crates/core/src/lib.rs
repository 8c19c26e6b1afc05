//! Simulation of a soft bending actuator with rate-independent hysteresis,
//! a cascade angle/pressure controller and a 2-DoF adaptive gain tuner.
//!
//! ```
//! use softbend::{compute_metrics, run_episode, Mode, RunConfig};
//!
//! let mut cfg = RunConfig::default();
//! cfg.reference.duration_s = 2.0;
//! cfg.tuner.mode = Mode::TwoDof;
//! let trace = run_episode(&cfg).unwrap();
//! assert_eq!(trace.len(), 1001);
//! let m = compute_metrics(&trace).unwrap();
//! assert!(m.rmse >= 0.0);
//! ```

pub mod config;
pub mod controller;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod plant;
pub mod signal;
pub mod tuner;

pub use config::{dump_config, load_config, IdentifyParams, OutputParams, RunConfig};
pub use controller::{CascadeController, ControllerParams, OuterLaw, PidGains, PositionalPid, VelocityPid};
pub use error::{Error, Result};
pub use harness::{
    compare_methods, compute_metrics, identify_hysteresis, run_episode, Comparison, DeadZones, EpisodeTrace,
    HysteresisLoop, LoopPoint, MethodResult, TraceSample,
};
pub use metrics::{compute_metrics_from, MetricsReport};
pub use plant::{read_sensors, step_plant, PlantParams, PlantState, PlayOperator, SensorReading};
pub use signal::{
    gen_reference, pseudo_diff_step, Derivatives, DiffState, Reference, ReferenceKind, ReferenceSpec, SineTerm,
};
pub use tuner::{tuner_step, Mode, Modulation, TunerParams, TunerState};
