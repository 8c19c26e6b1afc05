//! CSV output and the matching readers.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{EpisodeTrace, HysteresisLoop, TraceSample};
use crate::metrics::MetricsReport;

pub const TRACE_HEADER: [&str; 9] = [
    "t_s",
    "theta_ref_deg",
    "theta_meas_deg",
    "error_deg",
    "p_ref_kpa",
    "p_meas_kpa",
    "u_v",
    "kp_gain",
    "kff_gain",
];

pub const METRICS_HEADER: [&str; 6] = [
    "method",
    "e_max_deg",
    "e_min_deg",
    "abs_e_ave_pct",
    "rmse_deg",
    "var_deg2",
];

pub const LOOP_HEADER: [&str; 5] = ["t_s", "p_ref_kpa", "p_kpa", "theta_deg", "theta_qs_deg"];

/// Formats like C's `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(io_err(dir)),
        None => Ok(()),
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    create_parent(path)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Input(format!(
            "{}: unexpected header `{}`",
            path.display(),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.records().map(|rec| rec.map_err(csv_err(path))).collect()
}

fn parse_field(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::Input(format!(
            "{}: line {}: cannot parse `{raw}` as a number",
            path.display(),
            rec.position().map_or(0, |p| p.line())
        ))
    })
}

pub fn write_trace(trace: &EpisodeTrace, path: &Path) -> Result<()> {
    write_rows(
        path,
        &TRACE_HEADER,
        trace.samples.iter().map(|s| {
            [
                s.t,
                s.theta_ref,
                s.theta_meas,
                s.error,
                s.p_ref,
                s.p_meas,
                s.u,
                s.kp,
                s.kff,
            ]
            .into_iter()
            .map(fmt_g9)
            .collect()
        }),
    )
}

pub fn read_trace(path: &Path) -> Result<EpisodeTrace> {
    let samples = read_rows(path, &TRACE_HEADER)?
        .iter()
        .map(|rec| {
            let v = |i| parse_field(path, rec, i);
            Ok(TraceSample {
                t: v(0)?,
                theta_ref: v(1)?,
                theta_meas: v(2)?,
                error: v(3)?,
                p_ref: v(4)?,
                p_meas: v(5)?,
                u: v(6)?,
                kp: v(7)?,
                kff: v(8)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EpisodeTrace { samples })
}

/// One row per `(method, report)`.
pub fn write_metrics<S: AsRef<str>>(reports: &[(S, MetricsReport)], path: &Path) -> Result<()> {
    write_rows(
        path,
        &METRICS_HEADER,
        reports.iter().map(|(name, m)| {
            std::iter::once(name.as_ref().to_string())
                .chain(m.values().into_iter().map(fmt_g9))
                .collect()
        }),
    )
}

pub fn read_metrics(path: &Path) -> Result<Vec<(String, MetricsReport)>> {
    read_rows(path, &METRICS_HEADER)?
        .iter()
        .map(|rec| {
            let v = |i| parse_field(path, rec, i);
            Ok((
                rec.get(0).unwrap_or("").to_string(),
                MetricsReport {
                    e_max: v(1)?,
                    e_min: v(2)?,
                    abs_e_ave_pct: v(3)?,
                    rmse: v(4)?,
                    var: v(5)?,
                },
            ))
        })
        .collect()
}

pub fn write_loop(lp: &HysteresisLoop, path: &Path) -> Result<()> {
    write_rows(
        path,
        &LOOP_HEADER,
        lp.points.iter().map(|p| {
            [p.t, p.p_ref, p.pressure, p.theta, p.theta_qs]
                .into_iter()
                .map(fmt_g9)
                .collect()
        }),
    )
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
