use softbend::io::{read_metrics, read_trace, write_metrics, write_trace};
use softbend::{compute_metrics, dump_config, load_config, run_episode, Mode, ReferenceSpec, RunConfig};

fn short(mode: Mode) -> RunConfig {
    let mut cfg = RunConfig {
        reference: ReferenceSpec::constant(20.0, 1.0),
        ..RunConfig::default()
    };
    cfg.tuner.mode = mode;
    cfg.plant.noise_std_deg = 0.1;
    cfg
}

#[test]
fn trace_survives_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = run_episode(&short(Mode::TwoDof)).unwrap();
    let path = dir.path().join("nested/trace.csv");
    write_trace(&trace, &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back.len(), trace.len());
    for (a, b) in trace.samples.iter().zip(&back.samples) {
        // nine significant digits
        assert!((a.theta_meas - b.theta_meas).abs() <= 1e-8 * a.theta_meas.abs().max(1.0));
        assert!((a.kp - b.kp).abs() <= 1e-9 * a.kp.abs());
    }
}

#[test]
fn metrics_survive_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = compute_metrics(&run_episode(&short(Mode::Pid)).unwrap()).unwrap();
    let path = dir.path().join("m.csv");
    write_metrics(&[("pid", m)], &path).unwrap();
    let back = read_metrics(&path).unwrap();
    assert_eq!(back.len(), 1);
    assert!((back[0].1.rmse - m.rmse).abs() <= 1e-9 * m.rmse);
}

#[test]
fn config_survives_toml() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(Mode::FfAdaptive);
    cfg.tuner.kappa = 0.7;
    cfg.seed = 99;
    let path = dir.path().join("c.toml");
    dump_config(&cfg, &path).unwrap();
    assert_eq!(load_config(&path).unwrap(), cfg);
}

#[test]
fn missing_trace_is_io_error() {
    let err = read_trace(std::path::Path::new("/nonexistent/trace.csv")).unwrap_err();
    assert!(!err.is_config_error());
}
