//! Trace CSV files.
//!
//! ```text
//! # frequency_hz=6.28e9
//! # probe_state=e
//! # sequence_id=holeburn-n200
//! # tls_population=2.5e-1
//! time_s,population,population_std
//! 1e-7,9.5e-1,1e-2
//! ```
//!
//! Metadata lines are optional. The time column may be `time_s`, `time_ms`,
//! `time_us` or `time_ns`; values are converted to seconds on read.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Provenance, TraceBundle};
use crate::dynamics::{DecayTrace, TraceMeta};
use crate::error::{Error, Result};
use crate::units::TWO_PI;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Writes `trace` in the CSV schema. Numbers use the shortest exact
/// representation, so a read returns the identical values.
pub fn write_trace_csv<W: Write>(trace: &DecayTrace, mut out: W) -> Result<()> {
    let meta = &trace.meta;
    if let Some(f) = meta.frequency {
        writeln!(out, "# frequency_hz={:e}", f / TWO_PI)?;
    }
    if let Some(s) = meta.probe_state {
        writeln!(out, "# probe_state={}", s.label())?;
    }
    if let Some(id) = &meta.sequence_id {
        writeln!(out, "# sequence_id={id}")?;
    }
    if let Some(p) = meta.tls_population {
        writeln!(out, "# tls_population={p:e}")?;
    }
    match &trace.population_std {
        Some(std) => {
            writeln!(out, "time_s,population,population_std")?;
            for ((t, p), s) in trace.times.iter().zip(&trace.p_q).zip(std) {
                writeln!(out, "{t:e},{p:e},{s:e}")?;
            }
        }
        None => {
            writeln!(out, "time_s,population")?;
            for (t, p) in trace.times.iter().zip(&trace.p_q) {
                writeln!(out, "{t:e},{p:e}")?;
            }
        }
    }
    Ok(())
}

fn number(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{what} {:?} is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

/// Reads one trace; line numbers in errors are 1-based.
pub fn read_trace_csv<R: Read>(input: R) -> Result<DecayTrace> {
    let mut meta = TraceMeta::default();
    let mut header: Option<(f64, bool)> = None;
    let mut times = Vec::new();
    let mut p_q = Vec::new();
    let mut std = Vec::new();
    let mut last_line = 0;
    let mut first_row_line = 0;

    for (i, line) in BufReader::new(input).lines().enumerate() {
        let n = i + 1;
        last_line = n;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if header.is_some() {
                return Err(parse_err(n, "metadata must precede the header"));
            }
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "frequency_hz" => meta.frequency = Some(number(value, n, "frequency_hz")? * TWO_PI),
                "probe_state" => {
                    meta.probe_state =
                        Some(value.parse().map_err(|e: Error| parse_err(n, e.to_string()))?)
                }
                "sequence_id" => meta.sequence_id = Some(value.to_string()),
                "tls_population" => meta.tls_population = Some(number(value, n, "tls_population")?),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        match header {
            None => {
                let scale = match fields[0] {
                    "time_s" => 1.0,
                    "time_ms" => 1e-3,
                    "time_us" => 1e-6,
                    "time_ns" => 1e-9,
                    other => {
                        return Err(parse_err(
                            n,
                            format!("expected a time_s/time_ms/time_us/time_ns column, got {other:?}"),
                        ))
                    }
                };
                let with_std = match &fields[1..] {
                    ["population"] => false,
                    ["population", "population_std"] => true,
                    _ => {
                        return Err(parse_err(
                            n,
                            "header must be time,population[,population_std]",
                        ))
                    }
                };
                header = Some((scale, with_std));
            }
            Some((scale, with_std)) => {
                let width = if with_std { 3 } else { 2 };
                if fields.len() != width {
                    return Err(parse_err(
                        n,
                        format!("expected {width} columns, found {}", fields.len()),
                    ));
                }
                let t = number(fields[0], n, "time")? * scale;
                if let Some(&prev) = times.last() {
                    if t <= prev {
                        return Err(parse_err(n, "times must be strictly increasing"));
                    }
                } else {
                    first_row_line = n;
                }
                times.push(t);
                p_q.push(number(fields[1], n, "population")?);
                if with_std {
                    let s = number(fields[2], n, "population_std")?;
                    if s < 0.0 {
                        return Err(parse_err(n, "population_std must be >= 0"));
                    }
                    std.push(s);
                }
            }
        }
    }
    let Some((_, with_std)) = header else {
        return Err(parse_err(last_line.max(1), "missing header"));
    };
    if times.is_empty() {
        return Err(parse_err(last_line.max(1), "no samples"));
    }
    let mut trace = DecayTrace::new(times, p_q)
        .map_err(|e| parse_err(first_row_line, e.to_string()))?
        .with_meta(meta);
    if with_std {
        trace.population_std = Some(std);
    }
    Ok(trace)
}

/// One trace from a file, or every `.csv` file in a directory (sorted by
/// name).
pub fn ingest_traces(path: &Path) -> Result<TraceBundle> {
    let files = if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let traces = files
        .iter()
        .map(|f| {
            read_trace_csv(fs::File::open(f)?).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{}: {message}", f.display()),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceBundle {
        traces,
        provenance: Provenance::Ingested(path.display().to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ProbeState;

    fn sample() -> DecayTrace {
        let mut t = DecayTrace::new(vec![1e-7, 2.5e-7, 1.0 / 3.0], vec![0.9, 0.1 + 0.2, 0.028])
            .unwrap()
            .with_meta(TraceMeta {
                frequency: Some(TWO_PI * 6.28e9),
                probe_state: Some(ProbeState::Excited),
                sequence_id: Some("holeburn-n200".into()),
                tls_population: Some(0.25),
            });
        t.population_std = Some(vec![0.01, 0.02, 0.03]);
        t
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_trace_csv(&sample(), &mut buf).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.times, sample().times);
        assert_eq!(back.p_q, sample().p_q);
        assert_eq!(back.population_std, sample().population_std);
        assert_eq!(back.meta.probe_state, Some(ProbeState::Excited));
        let f = back.meta.frequency.unwrap();
        assert!((f / (TWO_PI * 6.28e9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(read_trace_csv(&b""[..]), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn microsecond_column() {
        let t = read_trace_csv(&b"time_us,population\n1,0.5\n2,0.4\n"[..]).unwrap();
        assert_eq!(t.times, vec![1e-6, 2e-6]);
    }

    #[test]
    fn bad_row_reports_its_line() {
        let mut text = String::from("# probe_state=g\ntime_s,population\n");
        for i in 0..20 {
            if i == 14 {
                text.push_str("oops,0.3\n");
            } else {
                text.push_str(&format!("{},0.3\n", i + 1));
            }
        }
        match read_trace_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 17),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nan_rejected() {
        let err = read_trace_csv(&b"time_s,population\n1,NaN\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
