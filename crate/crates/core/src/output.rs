//! CSV writers for every table the tools produce.
//!
//! All tables have a header row and LF line endings. Floats are written
//! with 17 significant digits, enough to round-trip an `f64` exactly.
//! Missing values are empty fields.

use std::io::Write;

use crate::ctmc::{OutbreakMarker, TimeSeriesRow};
use crate::limitproc::CycleRecord;
use crate::stats::Histogram;
use crate::verify::Report;

pub const ARG_VALUE_HEADER: [&str; 2] = ["arg", "value"];
pub const PATH_HEADER: [&str; 2] = ["t", "s"];
pub const CYCLE_HEADER: [&str; 3] = ["t_jump", "x", "t_star"];
pub const TIME_SERIES_HEADER: [&str; 5] = ["t", "s", "i", "r", "n_total"];
pub const MARKER_HEADER: [&str; 5] = ["k", "t_k", "u_k", "s_min", "s_max"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_lo", "bin_hi", "mass"];
pub const REPORT_HEADER: [&str; 6] = ["check", "n", "estimate", "ci_lo", "ci_hi", "target"];

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn table<W: Write>(w: W, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_arg_value<W: Write>(w: W, rows: &[(f64, Option<f64>)]) -> csv::Result<()> {
    let mut out = table(w, &ARG_VALUE_HEADER)?;
    for &(arg, value) in rows {
        out.write_record([fmt_f64(arg), fmt_opt(value)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_path<W: Write>(w: W, rows: &[(f64, f64)]) -> csv::Result<()> {
    let mut out = table(w, &PATH_HEADER)?;
    for &(t, s) in rows {
        out.write_record([fmt_f64(t), fmt_f64(s)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_cycles<W: Write>(w: W, cycles: &[CycleRecord<f64>]) -> csv::Result<()> {
    let mut out = table(w, &CYCLE_HEADER)?;
    for c in cycles {
        out.write_record([fmt_f64(c.t_jump), fmt_f64(c.x), fmt_f64(c.t_star)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_time_series<W: Write>(w: W, rows: &[TimeSeriesRow]) -> csv::Result<()> {
    let mut out = table(w, &TIME_SERIES_HEADER)?;
    for r in rows {
        out.write_record([
            fmt_f64(r.t),
            r.s.to_string(),
            r.i.to_string(),
            r.r.to_string(),
            r.n_total.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_markers<W: Write>(w: W, markers: &[OutbreakMarker]) -> csv::Result<()> {
    let mut out = table(w, &MARKER_HEADER)?;
    for m in markers {
        out.write_record([
            m.k.to_string(),
            fmt_f64(m.t_k),
            fmt_f64(m.u_k),
            fmt_f64(m.s_min),
            fmt_f64(m.s_max),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes one row per bin; a histogram with no mass is written as a header alone.
pub fn write_histogram<W: Write>(w: W, h: &Histogram<f64>) -> csv::Result<()> {
    let mut out = table(w, &HISTOGRAM_HEADER)?;
    if h.total() > 0.0 {
        for (k, &m) in h.masses().iter().enumerate() {
            let (lo, hi) = h.bin_bounds(k);
            out.write_record([fmt_f64(lo), fmt_f64(hi), fmt_f64(m)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(w: W, report: &Report) -> csv::Result<()> {
    let mut out = table(w, &REPORT_HEADER)?;
    for r in &report.rows {
        out.write_record([
            r.check.clone(),
            fmt_f64(r.n),
            fmt_f64(r.estimate),
            fmt_opt(r.ci_lo),
            fmt_opt(r.ci_hi),
            fmt_f64(r.target),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 0.7968121300200207, 1e-300, -2.5e10] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn header_and_lf() {
        let mut buf = Vec::new();
        write_arg_value(&mut buf, &[(1.0, Some(2.0)), (2.0, None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "arg,value");
        assert_eq!(lines[2], "2.0000000000000000e0,");
    }

    #[test]
    fn empty_histogram_is_header_only() {
        let mut buf = Vec::new();
        write_histogram(&mut buf, &Histogram::uniform(0.0, 1.0, 5)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin_lo,bin_hi,mass\n");
    }
}
