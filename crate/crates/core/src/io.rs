//! Text formats for tensors and samples.
//!
//! Tensor CSV:
//!
//! ```text
//! # p=16 k=3
//! 1,2,3,1
//! 1,4,9,-0.5
//! ```
//!
//! one hyperedge per line with strictly increasing 1-based node ids followed by
//! the weight. Samples CSV holds one observation per line, each entry exactly
//! `1` or `-1`, with an optional `# p=<p> n=<n> seed=<seed>` header.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sampler::SampleMatrix;
use crate::tensor::InteractionTensor;

fn header_fields(line: &str) -> Vec<(&str, &str)> {
    line.trim_start_matches('#')
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .collect()
}

fn parse_header_usize(value: &str, key: &str, line: usize) -> Result<usize> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("header field {key}={value} is not a non-negative integer"),
    })
}

pub fn read_tensor<R: BufRead>(reader: R) -> Result<InteractionTensor> {
    let mut dims: Option<(usize, usize)> = None;
    let mut tensor: Option<InteractionTensor> = None;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            let fields = header_fields(line);
            let p = fields.iter().find(|(k, _)| *k == "p");
            let k = fields.iter().find(|(k, _)| *k == "k");
            if let (Some((_, p)), Some((_, k))) = (p, k) {
                if tensor.is_some() {
                    return Err(Error::Parse { line: lineno, message: "header after data".into() });
                }
                let p = parse_header_usize(p, "p", lineno)?;
                let k = parse_header_usize(k, "k", lineno)?;
                tensor = Some(InteractionTensor::new(p, k).map_err(|e| Error::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?);
                dims = Some((p, k));
            }
            continue;
        }
        let (p, k) = dims.ok_or_else(|| Error::Parse {
            line: lineno,
            message: "missing `# p=<p> k=<k>` header before first hyperedge".into(),
        })?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != k + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} node ids and a weight, got {} fields", k, fields.len()),
            });
        }
        let mut nodes = Vec::with_capacity(k);
        for f in &fields[..k] {
            let id: usize = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("node id `{f}` is not a positive integer"),
            })?;
            if id == 0 || id > p {
                return Err(Error::Parse { line: lineno, message: format!("node id {id} outside 1..={p}") });
            }
            nodes.push(id - 1);
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse {
                line: lineno,
                message: "node ids must be strictly increasing".into(),
            });
        }
        let weight: f64 = fields[k].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("weight `{}` is not a number", fields[k]),
        })?;
        if !weight.is_finite() {
            return Err(Error::Parse { line: lineno, message: "weight is not finite".into() });
        }
        if !seen.insert(nodes.clone()) {
            return Err(Error::Parse { line: lineno, message: "duplicate hyperedge".into() });
        }
        tensor
            .as_mut()
            .expect("header parsed")
            .set(&nodes, weight)
            .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
    }
    tensor.ok_or_else(|| Error::Parse { line: 1, message: "missing `# p=<p> k=<k>` header".into() })
}

pub fn write_tensor<W: Write>(mut writer: W, j: &InteractionTensor) -> Result<()> {
    let mut buf = format!("# p={} k={}\n", j.p(), j.k());
    for (nodes, w) in j.edges() {
        for s in nodes {
            write!(buf, "{},", s + 1).unwrap();
        }
        writeln!(buf, "{w}").unwrap();
    }
    writer.write_all(buf.as_bytes())?;
    writer.flush()?;
    Ok(())
}

pub fn read_samples<R: BufRead>(reader: R) -> Result<SampleMatrix> {
    let mut p: Option<usize> = None;
    let mut data: Vec<i8> = Vec::new();
    let mut n = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((_, v)) = header_fields(line).into_iter().find(|(k, _)| *k == "p") {
                if n > 0 {
                    return Err(Error::Parse { line: lineno, message: "header after data".into() });
                }
                p = Some(parse_header_usize(v, "p", lineno)?);
            }
            continue;
        }
        let start = data.len();
        for field in line.split(',') {
            let v = match field.trim() {
                "1" | "+1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("entry `{other}` is not 1 or -1"),
                    })
                }
            };
            data.push(v);
        }
        let width = data.len() - start;
        match p {
            Some(p) if p != width => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {p} entries, got {width}"),
                })
            }
            None => p = Some(width),
            _ => {}
        }
        n += 1;
    }
    let p = p.ok_or_else(|| Error::Parse { line: 1, message: "no samples".into() })?;
    SampleMatrix::new(n, p, data).map_err(|e| Error::Parse { line: 1, message: e.to_string() })
}

pub fn write_samples<W: Write>(mut writer: W, x: &SampleMatrix, seed: Option<u64>) -> Result<()> {
    let mut buf = String::with_capacity(x.n() * (x.p() * 3 + 1) + 32);
    match seed {
        Some(seed) => writeln!(buf, "# p={} n={} seed={}", x.p(), x.n(), seed).unwrap(),
        None => writeln!(buf, "# p={} n={}", x.p(), x.n()).unwrap(),
    }
    for row in x.rows() {
        for (s, v) in row.iter().enumerate() {
            if s > 0 {
                buf.push(',');
            }
            buf.push_str(if *v == 1 { "1" } else { "-1" });
        }
        buf.push('\n');
    }
    writer.write_all(buf.as_bytes())?;
    writer.flush()?;
    Ok(())
}
