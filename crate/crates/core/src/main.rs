use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use softbend::io::{fmt_g9, write_loop, write_metrics, write_text, write_trace};
use softbend::{
    compare_methods, compute_metrics, identify_hysteresis, load_config, run_episode, Error, MetricsReport, Mode,
    ReferenceSpec, Result, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "softbend",
    version,
    about = "Soft bending actuator simulator and adaptive controller"
)]
struct Cli {
    /// TOML config file; defaults are used for anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed, overriding the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceChoice {
    /// The config's own `[reference]`.
    Config,
    Rapid30,
    Gradual120,
}

#[derive(Subcommand)]
enum Command {
    /// Drive the pressure triangle through the inner loop and record the (P, θ) loop.
    Identify,
    /// Run one tracking episode.
    Track {
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Run all five methods on one reference and tabulate the metrics.
    Compare {
        #[arg(long, value_enum, default_value = "config")]
        reference: ReferenceChoice,
    },
    /// Re-run an episode for each value of one dotted config key.
    Sweep {
        /// Dotted key such as `tuner.kappa` or `plant.operators.2.weight`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Print the effective config, or write it to PATH.
    DumpConfig { path: Option<PathBuf> },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn metrics_line(m: &MetricsReport) -> String {
    format!(
        "e_max={} e_min={} |e|_ave={}% rmse={} var={}",
        fmt_g9(m.e_max),
        fmt_g9(m.e_min),
        fmt_g9(m.abs_e_ave_pct),
        fmt_g9(m.rmse),
        fmt_g9(m.var)
    )
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli, mut cfg: RunConfig) -> Result<()> {
    let out = cfg.output.dir.clone();
    match &cli.command {
        Command::Identify => {
            let lp = identify_hysteresis(&cfg)?;
            ensure_dir(&out)?;
            let path = out.join("identify_loop.csv");
            write_loop(&lp, &path)?;
            println!("loop area: {} deg*kPa", fmt_g9(lp.loop_area()));
            match lp.dead_zone_widths(cfg.identify.slope_window_kpa, cfg.identify.slope_fraction) {
                Some(dz) => println!(
                    "dead zone: lower {} kPa, upper {} kPa (ratio {})",
                    fmt_g9(dz.lower),
                    fmt_g9(dz.upper),
                    fmt_g9(dz.upper / dz.lower)
                ),
                None => println!("dead zone: n/a (degenerate loop)"),
            }
            println!("wrote {}", path.display());
        }
        Command::Track { mode } => {
            if let Some(mode) = mode {
                cfg.tuner.mode = *mode;
            }
            let trace = run_episode(&cfg)?;
            let metrics = compute_metrics(&trace)?;
            ensure_dir(&out)?;
            let name = cfg.tuner.mode.as_str();
            let trace_path = out.join(format!("trace_{name}.csv"));
            write_trace(&trace, &trace_path)?;
            write_metrics(&[(name, metrics)], &out.join(format!("metrics_{name}.csv")))?;
            println!("{name}: {}", metrics_line(&metrics));
            println!("wrote {}", trace_path.display());
        }
        Command::Compare { reference } => {
            match reference {
                ReferenceChoice::Config => {}
                ReferenceChoice::Rapid30 => cfg.reference = ReferenceSpec::rapid_30s(),
                ReferenceChoice::Gradual120 => cfg.reference = ReferenceSpec::gradual_120s(),
            }
            let cmp = compare_methods(&cfg, &Mode::ALL)?;
            ensure_dir(&out)?;
            for row in &cmp.rows {
                write_trace(&row.trace, &out.join(format!("trace_{}.csv", row.mode)))?;
            }
            let reports = cmp.reports();
            let named: Vec<(&str, MetricsReport)> = reports.iter().map(|(m, r)| (m.as_str(), *r)).collect();
            write_metrics(&named, &out.join("metrics.csv"))?;

            println!(
                "{:<12} {:>14} {:>14} {:>14} {:>14} {:>14}",
                "method", "e_max_deg", "e_min_deg", "abs_e_ave_pct", "rmse_deg", "var_deg2"
            );
            for (i, row) in cmp.rows.iter().enumerate() {
                let cells: Vec<String> = row
                    .metrics
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(col, v)| {
                        let flag = if cmp.best[col] == i { "*" } else { " " };
                        format!("{:>13}{flag}", format!("{v:.4}"))
                    })
                    .collect();
                println!("{:<12} {}", row.mode.as_str(), cells.join(" "));
            }
            println!("* best in column; wrote {}", out.join("metrics.csv").display());
        }
        Command::Sweep { param, values, mode } => {
            if let Some(mode) = mode {
                cfg.tuner.mode = *mode;
            }
            let mut lines = vec![format!("param,value,method,{}", MetricsReport::COLUMNS.join(","))];
            for &v in values {
                let run_cfg = cfg.with_override(param, v)?;
                let metrics = compute_metrics(&run_episode(&run_cfg)?)?;
                println!("{param}={}: {}", fmt_g9(v), metrics_line(&metrics));
                let cells: Vec<String> = metrics.values().into_iter().map(fmt_g9).collect();
                lines.push(format!(
                    "{param},{},{},{}",
                    fmt_g9(v),
                    run_cfg.tuner.mode,
                    cells.join(",")
                ));
            }
            let path = out.join("sweep.csv");
            write_text(&path, &(lines.join("\n") + "\n"))?;
            println!("wrote {}", path.display());
        }
        Command::DumpConfig { path } => {
            cfg.validate()?;
            let text = cfg.to_toml_string();
            match path {
                Some(path) => write_text(path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
