//! Plain-text file formats.
//!
//! Reals are written with Rust's shortest round-trip formatting, so every
//! file parses back to bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hotspot_core::{DiagnosticsRecord, Field, Grid, Verdict};

use crate::error::HarnessError;
use crate::experiments::{GammaReport, SweepReport, SweepRow};

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn real(what: &'static str, line: usize, s: &str) -> Result<f64, HarnessError> {
    s.trim().parse().map_err(|_| HarnessError::format(what, line, format!("not a real: {s:?}")))
}

/// Snapshot: a header line `nx ny lx ly t`, then one row of `nx` values per
/// grid row, `j = 0` first.
pub fn format_field(field: &Field, t: f64) -> String {
    let g = field.grid;
    let mut out = format!("{} {} {} {} {}\n", g.nx, g.ny, g.lx, g.ly, t);
    for row in field.values.chunks(g.nx) {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_field(text: &str) -> Result<(Field, f64), HarnessError> {
    const WHAT: &str = "field";
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| HarnessError::format(WHAT, 1, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 {
        return Err(HarnessError::format(WHAT, 1, "header must be `nx ny lx ly t`"));
    }
    let size = |s: &str| s.parse::<usize>().map_err(|_| HarnessError::format(WHAT, 1, format!("bad size {s:?}")));
    let (nx, ny) = (size(h[0])?, size(h[1])?);
    let grid = Grid::new(nx, ny, real(WHAT, 1, h[2])?, real(WHAT, 1, h[3])?)?;
    let t = real(WHAT, 1, h[4])?;
    let mut values = Vec::with_capacity(grid.len());
    for (idx, line) in lines.enumerate() {
        let row: Vec<f64> = line.split_whitespace().map(|s| real(WHAT, idx + 2, s)).collect::<Result<_, _>>()?;
        if row.len() != nx {
            return Err(HarnessError::format(WHAT, idx + 2, format!("expected {nx} values, got {}", row.len())));
        }
        values.extend(row);
    }
    if values.len() != grid.len() {
        return Err(HarnessError::format(WHAT, ny + 1, format!("expected {ny} rows")));
    }
    Ok((Field::new(grid, values)?, t))
}

fn record_header(r: &DiagnosticsRecord) -> Vec<String> {
    let mut h: Vec<String> = ["t", "mass_u", "mass_v", "linf_u", "linf_v", "min_v"].map(String::from).to_vec();
    h.extend(r.lp_v.iter().map(|(p, _)| format!("lp_v:{p}")));
    h.extend(["grad_v_lq", "int_u2", "int_u2g"].map(String::from));
    h.extend(r.grad_vp2.iter().map(|(p, _)| format!("grad_vp2:{p}")));
    h.extend(["grad_ln_u", "cum_u2", "cum_u2g"].map(String::from));
    h.extend(r.cum_grad_vp2.iter().map(|(p, _)| format!("cum_grad_vp2:{p}")));
    h.push("cum_grad_ln_u".into());
    h
}

fn record_row(r: &DiagnosticsRecord) -> Vec<f64> {
    let mut row = vec![r.t, r.mass_u, r.mass_v, r.linf_u, r.linf_v, r.min_v];
    row.extend(r.lp_v.iter().map(|x| x.1));
    row.extend([r.grad_v_lq, r.int_u2, r.int_u2g]);
    row.extend(r.grad_vp2.iter().map(|x| x.1));
    row.extend([r.grad_ln_u, r.cum_u2, r.cum_u2g]);
    row.extend(r.cum_grad_vp2.iter().map(|x| x.1));
    row.push(r.cum_grad_ln_u);
    row
}

fn csv_error(what: &'static str, e: csv::Error) -> HarnessError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    HarnessError::format(what, line, e.to_string())
}

fn write_csv<I, R>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let run = || -> Result<Vec<u8>, Box<dyn std::error::Error>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    };
    // Writing into memory cannot fail.
    String::from_utf8(run().expect("in-memory csv write")).expect("csv output is utf-8")
}

/// Numeric rows tagged with their line number.
type Rows = Vec<(usize, Vec<f64>)>;

/// Reads the header and every row as reals.
fn read_csv(what: &'static str, text: &str) -> Result<(Vec<String>, Rows), HarnessError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| csv_error(what, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(what, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let vals = rec.iter().map(|s| real(what, line, s)).collect::<Result<_, _>>()?;
        rows.push((line, vals));
    }
    Ok((header, rows))
}

fn reals(row: Vec<f64>) -> impl Iterator<Item = String> {
    row.into_iter().map(|x| x.to_string())
}

/// Diagnostics CSV: one header row, one row per record. Per-exponent
/// columns are named `<field>:<p>`.
pub fn format_diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    write_csv(&record_header(first), records.iter().map(|r| reals(record_row(r))))
}

pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRecord>, HarnessError> {
    const WHAT: &str = "diagnostics";
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let (cols, rows) = read_csv(WHAT, text)?;
    let exps = |prefix: &str| -> Result<Vec<f64>, HarnessError> {
        cols.iter()
            .filter_map(|c| c.strip_prefix(prefix))
            .map(|p| real(WHAT, 1, p))
            .collect()
    };
    let (lp, gp, cgp) = (exps("lp_v:")?, exps("grad_vp2:")?, exps("cum_grad_vp2:")?);
    let template = DiagnosticsRecord {
        t: 0.0,
        mass_u: 0.0,
        mass_v: 0.0,
        linf_u: 0.0,
        linf_v: 0.0,
        min_v: 0.0,
        lp_v: lp.iter().map(|&p| (p, 0.0)).collect(),
        grad_v_lq: 0.0,
        int_u2: 0.0,
        int_u2g: 0.0,
        grad_vp2: gp.iter().map(|&p| (p, 0.0)).collect(),
        grad_ln_u: 0.0,
        cum_u2: 0.0,
        cum_u2g: 0.0,
        cum_grad_vp2: cgp.iter().map(|&p| (p, 0.0)).collect(),
        cum_grad_ln_u: 0.0,
    };
    if record_header(&template) != cols {
        return Err(HarnessError::format(WHAT, 1, "unexpected header"));
    }
    let mut records = Vec::new();
    for (line_no, vals) in rows {
        if vals.len() != cols.len() {
            return Err(HarnessError::format(WHAT, line_no, format!("expected {} columns", cols.len())));
        }
        let mut it = vals.into_iter();
        let mut next = || it.next().unwrap_or(f64::NAN);
        let mut r = template.clone();
        r.t = next();
        r.mass_u = next();
        r.mass_v = next();
        r.linf_u = next();
        r.linf_v = next();
        r.min_v = next();
        r.lp_v.iter_mut().for_each(|x| x.1 = next());
        r.grad_v_lq = next();
        r.int_u2 = next();
        r.int_u2g = next();
        r.grad_vp2.iter_mut().for_each(|x| x.1 = next());
        r.grad_ln_u = next();
        r.cum_u2 = next();
        r.cum_u2g = next();
        r.cum_grad_vp2.iter_mut().for_each(|x| x.1 = next());
        r.cum_grad_ln_u = next();
        records.push(r);
    }
    Ok(records)
}

pub fn format_verdicts(verdicts: &[Verdict]) -> String {
    verdicts.iter().fold(String::new(), |mut out, v| {
        let _ = writeln!(out, "{v}");
        out
    })
}

pub const SWEEP_HEADER: &str = "eps_hi,eps_lo,d_lnu,d_v,d_gradv,d_u_lp";

fn header(cols: &str) -> Vec<String> {
    cols.split(',').map(String::from).collect()
}

pub fn format_sweep_csv(report: &SweepReport) -> String {
    let rows = report.rows.iter().map(|r| reals(vec![r.eps_hi, r.eps_lo, r.d_lnu, r.d_v, r.d_gradv, r.d_u_lp]));
    write_csv(&header(SWEEP_HEADER), rows)
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, HarnessError> {
    const WHAT: &str = "sweep";
    let (cols, rows) = read_csv(WHAT, text)?;
    if cols != header(SWEEP_HEADER) {
        return Err(HarnessError::format(WHAT, 1, format!("header must be {SWEEP_HEADER}")));
    }
    rows.into_iter()
        .map(|(line, v)| match v[..] {
            [eps_hi, eps_lo, d_lnu, d_v, d_gradv, d_u_lp] => Ok(SweepRow { eps_hi, eps_lo, d_lnu, d_v, d_gradv, d_u_lp }),
            _ => Err(HarnessError::format(WHAT, line, "expected 6 columns")),
        })
        .collect()
}

/// Columns `gamma,horizon,sup_linf_u,sup_linf_v,status`; `status` is `ok`
/// or the failure message.
pub fn format_gamma_csv(report: &GammaReport) -> String {
    let rows = report.rows.iter().map(|r| {
        let mut row: Vec<String> = reals(vec![r.gamma, r.horizon, r.sup_linf_u, r.sup_linf_v]).collect();
        row.push(r.failure.clone().unwrap_or_else(|| "ok".into()));
        row
    });
    write_csv(&header("gamma,horizon,sup_linf_u,sup_linf_v,status"), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hotspot_core::diagnostics::Sense;

    #[test]
    fn field_round_trip() {
        let g = Grid::new(3, 2, 1.5, 0.25).unwrap();
        let f = Field::new(g, vec![0.1, 1.0 / 3.0, 2e-300, 5.0, 0.0, 1e10]).unwrap();
        let text = format_field(&f, 0.7);
        assert!(text.starts_with("3 2 1.5 0.25 0.7\n"));
        let (back, t) = parse_field(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(t, 0.7);
    }

    #[test]
    fn field_parse_errors() {
        assert!(parse_field("").is_err());
        assert!(parse_field("2 2 1 1 0\n1 2\n").is_err());
        assert!(parse_field("2 2 1 1 0\n1 2 3\n4 5\n").is_err());
        assert!(parse_field("2 2 1 1 0\n1 x\n3 4\n").is_err());
    }

    #[test]
    fn verdict_lines() {
        let v = Verdict::new("l1", Sense::Upper, 2.0, 1.5, 0.0);
        let text = format_verdicts(&[v]);
        assert!(text.starts_with("CHECK l1 bound=2 observed=1.5 margin=0.5"), "{text}");
        assert!(text.trim_end().ends_with("PASS"));
    }

    #[test]
    fn sweep_header_checked() {
        assert!(parse_sweep_csv("a,b\n").is_err());
        assert!(parse_sweep_csv(&format!("{SWEEP_HEADER}\n1,2,3\n")).is_err());
        assert_eq!(parse_sweep_csv(&format!("{SWEEP_HEADER}\n")).unwrap(), vec![]);
    }
}
