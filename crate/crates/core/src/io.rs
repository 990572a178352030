//! Plain-text readers and writers. Parsers take file contents and report
//! one-based line numbers; blank lines and `#` comments are skipped.

use crate::error::{Error, Result};
use crate::functionals::TiltProfile;
use crate::kernel::{StepKernel, SymmetricMatrix};
use crate::tilt::FiniteBaseMeasure;
use crate::ustat::DataVector;

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn parse_num(field: &str, line: usize) -> Result<f64> {
    let t = field.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    t.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse { line, msg: format!("'{t}' is not a finite number") })
}

/// Non-empty, non-comment lines split on commas, with line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split(',').map(str::trim).collect()))
    })
}

fn is_header(fields: &[&str]) -> bool {
    fields.iter().any(|f| f.parse::<f64>().is_err() && !f.eq_ignore_ascii_case("inf") && !f.eq_ignore_ascii_case("-inf"))
        && fields.iter().all(|f| f.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_'))
}

fn numeric_rows(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    records(text)
        .map(|(line, fields)| Ok((line, fields.iter().map(|f| parse_num(f, line)).collect::<Result<Vec<_>>>()?)))
        .collect()
}

/// `n` rows of `n` comma-separated values.
pub fn parse_matrix(text: &str) -> Result<SymmetricMatrix<f64>> {
    let rows = numeric_rows(text)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse { line: 1, msg: "empty matrix".into() });
    }
    let mut entries = Vec::with_capacity(n * n);
    for (line, row) in rows {
        if row.len() != n {
            return Err(Error::Parse { line, msg: format!("expected {n} columns, found {}", row.len()) });
        }
        entries.extend(row);
    }
    SymmetricMatrix::new(n, entries)
}

/// `m` rows of `m` block values, optionally preceded by a row of `m + 1`
/// breakpoints from 0 to 1. Without one the blocks are uniform.
pub fn parse_kernel(text: &str) -> Result<StepKernel<f64>> {
    let mut rows = numeric_rows(text)?;
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty kernel".into() });
    }
    let breakpoints = if rows.len() > 1 && rows[0].1.len() == rows.len() && rows[1].1.len() + 1 == rows.len() {
        Some(rows.remove(0).1)
    } else {
        None
    };
    let m = rows.len();
    let mut values = Vec::with_capacity(m * m);
    for (line, row) in rows {
        if row.len() != m {
            return Err(Error::Parse { line, msg: format!("expected {m} block values, found {}", row.len()) });
        }
        values.extend(row);
    }
    match breakpoints {
        Some(bp) => StepKernel::new(bp, values),
        None => StepKernel::uniform(m, values),
    }
}

/// `atom,prob` rows, optionally under an `atom,prob` header.
pub fn parse_measure(text: &str) -> Result<FiniteBaseMeasure<f64>> {
    let mut atoms = Vec::new();
    let mut probs = Vec::new();
    for (idx, (line, fields)) in records(text).enumerate() {
        if idx == 0 && is_header(&fields) {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::Parse { line, msg: format!("expected 'atom,prob', found {} fields", fields.len()) });
        }
        atoms.push(parse_num(fields[0], line)?);
        probs.push(parse_num(fields[1], line)?);
    }
    FiniteBaseMeasure::new(atoms, probs)
}

/// Atom indices in `0..k`, comma- or line-separated.
pub fn parse_data(text: &str, k: usize) -> Result<DataVector> {
    let mut idx = Vec::new();
    for (line, fields) in records(text) {
        for f in fields {
            let v: usize = f.parse().map_err(|_| Error::Parse { line, msg: format!("'{f}' is not an atom index") })?;
            if v >= k {
                return Err(Error::Parse { line, msg: format!("atom index {v} is not below {k}") });
            }
            idx.push(v);
        }
    }
    DataVector::new(idx, k)
}

/// One row per block: a single column (real profile) or `c` columns of
/// colour probabilities. A header row is skipped.
pub fn parse_profile(text: &str) -> Result<TiltProfile<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, (line, fields)) in records(text).enumerate() {
        if idx == 0 && is_header(&fields) {
            continue;
        }
        let row = fields.iter().map(|f| parse_num(f, line)).collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse { line, msg: format!("expected {w} columns, found {}", row.len()) })
            }
            _ => {}
        }
        rows.push(row);
    }
    match width {
        None => Err(Error::Parse { line: 1, msg: "empty profile".into() }),
        Some(1) => TiltProfile::real(rows.into_iter().map(|r| r[0]).collect()),
        Some(c) => TiltProfile::potts(c, rows.concat()),
    }
}

/// Table values in odometer order (last index fastest), any line layout.
pub fn parse_phi_table(text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = numeric_rows(text)?.into_iter().flat_map(|(_, r)| r).collect();
    if values.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty φ table".into() });
    }
    Ok(values)
}

/// Profile as CSV, one row per block.
pub fn profile_csv(widths: &[f64], channels: usize, values: &[f64]) -> String {
    let mut s = String::from("block,width");
    if channels == 1 {
        s.push_str(",value");
    } else {
        for r in 0..channels {
            s.push_str(&format!(",p{r}"));
        }
    }
    s.push('\n');
    for (u, w) in widths.iter().enumerate() {
        s.push_str(&format!("{u},{}", fmt12(*w)));
        for r in 0..channels {
            s.push_str(&format!(",{}", fmt12(values[u * channels + r])));
        }
        s.push('\n');
    }
    s
}

/// Header plus rows of numbers.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.iter().map(|&x| fmt12(x)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}
