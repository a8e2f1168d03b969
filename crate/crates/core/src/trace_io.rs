//! Trace serialization.
//!
//! CSV layout is pinned: header
//! `iter,f_value,fw_gap,grad_calls,coord_calls,bits_sent,elapsed_ms`,
//! decimal columns printed with 17 significant digits (exact f64
//! round-trip), LF line endings.

use std::io::Write;
use std::path::Path;

use crate::driver::{IterationRecord, Trace};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "iter,f_value,fw_gap,grad_calls,coord_calls,bits_sent,elapsed_ms";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(trace: &Trace) -> Result<String> {
    if trace.records.is_empty() {
        return Err(Error::InvalidParam {
            name: "trace",
            msg: "empty trace".into(),
        });
    }
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.f_value),
            fmt_f64(r.fw_gap),
            r.grad_calls,
            r.coord_calls,
            r.bits_sent,
            fmt_f64(r.elapsed_ms),
        ));
    }
    Ok(out)
}

pub fn emit_csv(trace: &Trace, path: &Path) -> Result<()> {
    let body = csv_string(trace)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Trace> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header `{header}`"),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected 7 columns, got {}", cols.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("bad float `{s}`"),
            })
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("bad integer `{s}`"),
            })
        };
        records.push(IterationRecord {
            k: parse_u(cols[0])? as usize,
            f_value: parse_f(cols[1])?,
            fw_gap: parse_f(cols[2])?,
            grad_calls: parse_u(cols[3])?,
            coord_calls: parse_u(cols[4])?,
            bits_sent: parse_u(cols[5])?,
            elapsed_ms: parse_f(cols[6])?,
        });
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no records".into(),
        });
    }
    Ok(Trace {
        records,
        f_star: None,
    })
}

pub fn read_csv(path: &Path) -> Result<Trace> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize) -> IterationRecord {
        IterationRecord {
            k,
            f_value: 0.1234567890123456789 * (k + 1) as f64,
            fw_gap: 1e-17 + k as f64,
            grad_calls: 10 * k as u64,
            coord_calls: k as u64,
            bits_sent: 96 * k as u64,
            elapsed_ms: 0.5 * k as f64,
        }
    }

    #[test]
    fn one_record_two_lines() {
        let trace = Trace {
            records: vec![record(0)],
            f_star: None,
        };
        let body = csv_string(&trace).unwrap();
        assert_eq!(body.lines().count(), 2);
        assert!(body.starts_with(CSV_HEADER));
        assert!(!body.contains('\r'));
    }

    #[test]
    fn round_trip_is_exact() {
        let trace = Trace {
            records: (0..5).map(record).collect(),
            f_star: None,
        };
        let body = csv_string(&trace).unwrap();
        let parsed = parse_csv(&body).unwrap();
        assert_eq!(parsed.records, trace.records);
    }

    #[test]
    fn counters_monotone_in_emitted_order() {
        let trace = Trace {
            records: (0..5).map(record).collect(),
            f_star: None,
        };
        let parsed = parse_csv(&csv_string(&trace).unwrap()).unwrap();
        for w in parsed.records.windows(2) {
            assert!(w[0].grad_calls <= w[1].grad_calls);
            assert!(w[0].k < w[1].k);
        }
    }

    #[test]
    fn empty_trace_rejected() {
        assert!(csv_string(&Trace::default()).is_err());
    }
}
