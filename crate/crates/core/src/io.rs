//! Reading and writing `.tns` coordinate files.
//!
//! Each data line holds `N` whitespace-separated 1-based indices followed
//! by one value. Lines starting with `#` are comments, except that a
//! `# dims: I1 ... IN` line fixes the tensor shape; without it the shape is
//! the per-mode maximum index.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::CooTensor;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses `.tns` text from any reader; `path` is only used in messages.
pub fn parse_tns<V: Scalar, R: BufRead>(reader: R, path: &Path) -> Result<CooTensor<V>> {
    let mut dims: Option<Vec<u32>> = None;
    let mut inds: Vec<Vec<u32>> = Vec::new();
    let mut vals: Vec<V> = Vec::new();
    let mut arity: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(rest) = comment.trim_start().strip_prefix("dims:") {
                let d: Vec<u32> = rest
                    .split_whitespace()
                    .map(|t| t.parse::<u32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(path, lineno, format!("bad dims header: {e}")))?;
                if d.is_empty() || d.contains(&0) {
                    return Err(parse_err(path, lineno, "dims header needs positive sizes"));
                }
                dims = Some(d);
            }
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(parse_err(
                path,
                lineno,
                "expected indices followed by a value",
            ));
        }
        let order = tokens.len() - 1;
        match arity {
            None => {
                arity = Some(order);
                inds = vec![Vec::new(); order];
            }
            Some(a) if a != order => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("{order} indices where earlier lines have {a}"),
                ));
            }
            Some(_) => {}
        }
        for (m, tok) in tokens[..order].iter().enumerate() {
            let idx: i64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad index '{tok}'")))?;
            if idx <= 0 {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("index {idx} is not 1-based"),
                ));
            }
            if idx > u32::MAX as i64 {
                return Err(parse_err(path, lineno, format!("index {idx} too large")));
            }
            inds[m].push((idx - 1) as u32);
        }
        let tok = tokens[order];
        let v: f64 = tok
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad value '{tok}'")))?;
        vals.push(V::from_f64(v));
    }

    let dims = match (dims, arity) {
        (Some(d), Some(a)) if d.len() != a => {
            return Err(parse_err(
                path,
                0,
                format!("dims header has {} modes, entries have {a}", d.len()),
            ))
        }
        (Some(d), _) => d,
        (None, Some(_)) => inds
            .iter()
            .map(|arr| arr.iter().max().map_or(1, |&m| m + 1))
            .collect(),
        (None, None) => return Err(parse_err(path, 0, "no entries and no dims header")),
    };
    if inds.is_empty() {
        inds = vec![Vec::new(); dims.len()];
    }
    CooTensor::from_parts(dims, inds, vals)
}

pub fn read_tns<V: Scalar>(path: &Path) -> Result<CooTensor<V>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tns(BufReader::new(file), path)
}

/// Formats like C's `%.9g`.
pub fn format_g9(v: f64) -> String {
    const P: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..P).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the dims header and one line per nonzero in lexicographic order.
pub fn write_tns_to<V: Scalar, W: Write>(t: &CooTensor<V>, mut w: W) -> std::io::Result<()> {
    let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
    writeln!(w, "# dims: {}", dims.join(" "))?;
    let natural: Vec<usize> = (0..t.order()).collect();
    let mut perm: Vec<usize> = (0..t.nnz()).collect();
    perm.sort_by(|&a, &b| t.cmp_entries(&natural, a, b));
    let mut line = String::new();
    for x in perm {
        line.clear();
        for m in 0..t.order() {
            line.push_str(&(t.inds(m)[x] as u64 + 1).to_string());
            line.push(' ');
        }
        line.push_str(&format_g9(t.vals()[x].to_f64()));
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn write_tns<V: Scalar>(t: &CooTensor<V>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_tns_to(t, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
