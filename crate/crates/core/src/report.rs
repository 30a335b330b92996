//! CSV emission. Floats are written with 17 significant digits so that equal
//! values always print identically.
//!
//! `aggregate.csv`:
//! `schema_version,policy,model_id,K,T,replications,mean_regret,stderr_regret,mean_pulls_arm_0..`
//! with one pull column per arm of the widest model (blank where a model has
//! fewer arms). Trace files: `t,cumulative_pseudo_regret`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::simulator::{AggregateStats, CellOutcome, RunTrace};
use crate::verification::Check;

/// `%.17g`-style formatting.
pub fn fmt_f64(x: f64) -> String {
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
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_fraction(&fixed)
    } else {
        let m = trim_fraction(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn aggregate_csv(stats: &[&AggregateStats<f64>]) -> String {
    let width = stats.iter().map(|s| s.num_arms).max().unwrap_or(0);
    let mut out = String::from("schema_version,policy,model_id,K,T,replications,mean_regret,stderr_regret");
    for a in 0..width {
        let _ = write!(out, ",mean_pulls_arm_{a}");
    }
    out.push('\n');
    for s in stats {
        let _ = write!(
            out,
            "{SCHEMA_VERSION},{},{},{},{},{},{},{}",
            csv_field(&s.policy),
            csv_field(&s.model_id),
            s.num_arms,
            s.horizon,
            s.replications,
            fmt_f64(s.mean_regret),
            fmt_f64(s.stderr_regret)
        );
        for a in 0..width {
            out.push(',');
            if let Some(&p) = s.mean_pulls.get(a) {
                out.push_str(&fmt_f64(p));
            }
        }
        out.push('\n');
    }
    out
}

pub fn trace_csv(trace: &RunTrace<f64>) -> String {
    let mut out = String::from("t,cumulative_pseudo_regret\n");
    for c in &trace.checkpoints {
        let _ = writeln!(out, "{},{}", c.round, fmt_f64(c.regret));
    }
    out
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut out = String::from("suite,name,passed,observed,limit,detail\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.suite,
            csv_field(&c.name),
            c.passed,
            fmt_f64(c.observed),
            fmt_f64(c.limit),
            csv_field(&c.detail)
        );
    }
    out
}

pub fn trace_file_name(cell: usize, rep: usize) -> String {
    format!("trace_{cell}_{rep}.csv")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `aggregate.csv` and one trace file per replication. Returns the
/// written paths, aggregate first.
pub fn write_experiment(dir: &Path, outcomes: &[CellOutcome<f64>]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let aggregate = dir.join("aggregate.csv");
    let stats: Vec<_> = outcomes.iter().map(|o| &o.stats).collect();
    write_file(&aggregate, &aggregate_csv(&stats))?;
    written.push(aggregate);
    for o in outcomes {
        for (rep, trace) in o.traces.iter().enumerate() {
            let path = dir.join(trace_file_name(o.cell.index, rep));
            fs::write(&path, trace_csv(trace)).map_err(|source| Error::CellIo {
                cell: o.cell.index,
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
    }
    Ok(written)
}
