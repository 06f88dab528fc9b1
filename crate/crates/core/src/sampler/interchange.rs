//! Draw interchange format.
//!
//! Comma-separated text with header `sigma2,w0,w1,...,wm`, optionally
//! followed by `lambda1,...,lambdam,tau` and then `eta1,...,etam`. One row
//! per draw; numbers are written with 17 significant digits so the text
//! round-trips exactly. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::DrawSet;
use crate::error::{Error, Result};

fn header(m: usize, scales: bool, eta: bool) -> Vec<String> {
    let mut h = vec!["sigma2".to_string()];
    h.extend((0..=m).map(|j| format!("w{j}")));
    if scales {
        h.extend((1..=m).map(|j| format!("lambda{j}")));
        h.push("tau".to_string());
        if eta {
            h.extend((1..=m).map(|j| format!("eta{j}")));
        }
    }
    h
}

pub fn write_draws<W: Write>(dr: &DrawSet, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let m = dr.m();
    let scales = dr.lambda.is_some() && dr.tau.is_some();
    let eta = scales && dr.eta.is_some();
    writeln!(out, "{}", header(m, scales, eta).join(","))?;
    let mut line = String::new();
    for s in 0..dr.draws() {
        line.clear();
        push_num(&mut line, dr.sigma2[s]);
        for v in dr.weights.row(s).iter() {
            line.push(',');
            push_num(&mut line, *v);
        }
        if scales {
            for v in dr.lambda.as_ref().unwrap().row(s).iter() {
                line.push(',');
                push_num(&mut line, *v);
            }
            line.push(',');
            push_num(&mut line, dr.tau.as_ref().unwrap()[s]);
            if eta {
                for v in dr.eta.as_ref().unwrap().row(s).iter() {
                    line.push(',');
                    push_num(&mut line, *v);
                }
            }
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

fn push_num(line: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(line, "{v:.16e}");
}

pub fn export_draws(dr: &DrawSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_draws(dr, file).map_err(|e| Error::io(path, e))
}

fn schema_error(message: impl Into<String>) -> Error {
    Error::DrawFormat {
        row: 0,
        message: message.into(),
    }
}

/// Parses draws for a model with `m` predictors.
pub fn read_draws<R: BufRead>(input: R, m: usize) -> Result<DrawSet> {
    let mut lines = input.lines().map(|l| l.map_err(|e| Error::io("<draws>", e)));
    let mut next_content = || -> Result<Option<String>> {
        for line in lines.by_ref() {
            let line = line?;
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(Some(t.to_string()));
            }
        }
        Ok(None)
    };

    let head = next_content()?.ok_or_else(|| schema_error("empty draw file"))?;
    let names: Vec<&str> = split(&head);
    let (scales, eta) = match names.len() {
        n if n == m + 2 => (false, false),
        n if n == 2 * m + 3 => (true, false),
        n if n == 3 * m + 3 => (true, true),
        n => {
            return Err(schema_error(format!(
                "{n} columns do not fit m = {m} (expected {}, {} or {})",
                m + 2,
                2 * m + 3,
                3 * m + 3
            )))
        }
    };
    let expected = header(m, scales, eta);
    for (got, want) in names.iter().zip(&expected) {
        if got != want {
            return Err(schema_error(format!(
                "header column `{got}` where `{want}` was expected"
            )));
        }
    }

    let width = names.len();
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0;
    while let Some(line) = next_content()? {
        rows += 1;
        let fields = split(&line);
        if fields.len() != width {
            return Err(Error::DrawFormat {
                row: rows,
                message: format!("expected {width} values, found {}", fields.len()),
            });
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::DrawFormat {
                row: rows,
                message: format!("non-numeric value `{f}`"),
            })?;
            values.push(v);
        }
    }
    if rows == 0 {
        return Err(schema_error("no draws"));
    }
    let all = DMatrix::from_row_slice(rows, width, &values);
    let sigma2: Vec<f64> = all.column(0).iter().copied().collect();
    if let Some(r) = sigma2.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::DrawFormat {
            row: r + 1,
            message: format!("sigma2 must be positive, got {}", sigma2[r]),
        });
    }
    let weights = all.columns(1, m + 1).into_owned();
    let mut dr = DrawSet::new(weights, sigma2)?;
    if scales {
        let lambda = all.columns(m + 2, m).into_owned();
        let tau = all.column(2 * m + 2).iter().copied().collect();
        let eta_m = eta.then(|| all.columns(2 * m + 3, m).into_owned());
        dr = dr.with_scales(lambda, tau, eta_m)?;
    }
    Ok(dr)
}

fn split(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

pub fn import_draws(path: impl AsRef<Path>, m: usize) -> Result<DrawSet> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_draws(BufReader::new(file), m)
}
