//! Plain-text and binary dumps of sampled instances.
//!
//! CSV is long format, one value per line under the header
//! `block,row,col,value`, where `block` is `Y<k><l>`, `side<k>` or `truth<k>`
//! (1-based). The binary format is one JSON header line followed by
//! little-endian `f64` values in the same order, each matrix row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::instance::Observations;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct BinaryHeader {
    sizes: Vec<usize>,
    side: Vec<bool>,
    truth: bool,
}

fn entries(obs: &Observations, with_truth: bool) -> Vec<(String, &[f64], usize)> {
    let k = obs.groups();
    let mut out = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let y = obs.block(a, b);
            let data = y.as_slice().expect("blocks are standard layout");
            out.push((format!("Y{}{}", a + 1, b + 1), data, y.ncols()));
        }
    }
    for (g, s) in obs.side.iter().enumerate() {
        if let Some(v) = s {
            out.push((format!("side{}", g + 1), v.as_slice().expect("contiguous"), 1));
        }
    }
    if with_truth {
        for (g, x) in obs.truth.iter().enumerate() {
            out.push((format!("truth{}", g + 1), x.as_slice().expect("contiguous"), 1));
        }
    }
    out
}

pub fn write_csv(obs: &Observations, path: &Path, with_truth: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "block,row,col,value")?;
    for (name, data, cols) in entries(obs, with_truth) {
        for (i, v) in data.iter().enumerate() {
            writeln!(w, "{name},{},{},{v}", i / cols, i % cols)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary(obs: &Observations, path: &Path, with_truth: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = BinaryHeader {
        sizes: obs.sizes.clone(),
        side: obs.side.iter().map(Option::is_some).collect(),
        truth: with_truth,
    };
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    for (_, data, _) in entries(obs, with_truth) {
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("malformed instance dump: {}", msg.into()))
}

/// Read a binary dump. Missing truth comes back as empty vectors.
pub fn read_binary(path: &Path) -> Result<Observations> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: BinaryHeader = serde_json::from_str(line.trim_end()).map_err(|e| bad(e.to_string()))?;
    let k = header.sizes.len();
    if header.side.len() != k {
        return Err(bad("side flags do not match group count"));
    }
    let mut next = |len: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; len * 8];
        r.read_exact(&mut buf).map_err(|_| bad("truncated data"))?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    };
    let mut blocks = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let (na, nb) = (header.sizes[a], header.sizes[b]);
            blocks.push(Array2::from_shape_vec((na, nb), next(na * nb)?).expect("length matches shape"));
        }
    }
    let mut side = Vec::with_capacity(k);
    for g in 0..k {
        side.push(if header.side[g] { Some(Array1::from(next(header.sizes[g])?)) } else { None });
    }
    let mut truth = Vec::with_capacity(k);
    for g in 0..k {
        truth.push(if header.truth { Array1::from(next(header.sizes[g])?) } else { Array1::zeros(0) });
    }
    Ok(Observations {
        sizes: header.sizes,
        blocks,
        side,
        truth,
    })
}

/// Read a CSV dump. Group sizes are recovered from the diagonal blocks.
pub fn read_csv(path: &Path) -> Result<Observations> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "block,row,col,value" => {}
        _ => return Err(bad("missing header")),
    }
    let mut records: Vec<(String, usize, usize, f64)> = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line?;
        let mut it = line.split(',');
        let (Some(name), Some(row), Some(col), Some(val), None) = (it.next(), it.next(), it.next(), it.next(), it.next())
        else {
            return Err(bad(format!("line {} has the wrong number of fields", no + 2)));
        };
        let parse_err = |_| bad(format!("line {}", no + 2));
        records.push((
            name.to_string(),
            row.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            col.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            val.parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?,
        ));
    }
    let group_of = |name: &str, prefix: &str| -> Option<Vec<usize>> {
        name.strip_prefix(prefix)
            .map(|rest| rest.chars().filter_map(|c| c.to_digit(10)).map(|d| d as usize - 1).collect())
    };
    let mut sizes: Vec<usize> = Vec::new();
    for (name, row, _, _) in &records {
        if let Some(ix) = group_of(name, "Y") {
            if ix.len() == 2 && ix[0] == ix[1] {
                if sizes.len() <= ix[0] {
                    sizes.resize(ix[0] + 1, 0);
                }
                sizes[ix[0]] = sizes[ix[0]].max(row + 1);
            }
        }
    }
    let k = sizes.len();
    if k == 0 || sizes.contains(&0) {
        return Err(bad("no diagonal blocks found"));
    }
    let mut blocks: Vec<Array2<f64>> = (0..k * k).map(|i| Array2::zeros((sizes[i / k], sizes[i % k]))).collect();
    let mut side: Vec<Option<Array1<f64>>> = vec![None; k];
    let mut truth: Vec<Array1<f64>> = vec![Array1::zeros(0); k];
    for (name, row, col, val) in records {
        let out_of_range = || bad(format!("entry {name}[{row},{col}] is out of range"));
        if let Some(ix) = group_of(&name, "Y") {
            let (a, b) = (ix[0], ix[1]);
            *blocks
                .get_mut(a * k + b)
                .and_then(|m| m.get_mut((row, col)))
                .ok_or_else(out_of_range)? = val;
        } else if let Some(ix) = group_of(&name, "side") {
            let g = ix[0];
            let v = side.get_mut(g).ok_or_else(out_of_range)?.get_or_insert_with(|| Array1::zeros(sizes[g]));
            *v.get_mut(row).ok_or_else(out_of_range)? = val;
        } else if let Some(ix) = group_of(&name, "truth") {
            let g = ix[0];
            let v = truth.get_mut(g).ok_or_else(out_of_range)?;
            if v.is_empty() {
                *v = Array1::zeros(sizes[g]);
            }
            *v.get_mut(row).ok_or_else(out_of_range)? = val;
        } else {
            return Err(bad(format!("unknown block name {name}")));
        }
    }
    Ok(Observations {
        sizes,
        blocks,
        side,
        truth,
    })
}
