//! Plain-text parameter checkpoints.
//!
//! ```text
//! resopt-params 1
//! meta <key> <value...>
//! param <name> <extent>x<extent>...
//! <value> <value> ...
//! end
//! ```
//!
//! Values are written with the shortest decimal representation that
//! round-trips, so reading a checkpoint back reproduces every bit. A scalar
//! parameter uses the extent list `-`. Metadata values run to end of line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{ParamStore, Tensor, TensorError};

pub const CHECKPOINT_FORMAT: &str = "resopt-params";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub params: ParamStore,
}

fn err(line: usize, msg: impl std::fmt::Display) -> TensorError {
    TensorError::Checkpoint(format!("line {line}: {msg}"))
}

pub fn write_checkpoint<W: Write>(mut w: W, ckpt: &Checkpoint) -> std::io::Result<()> {
    writeln!(w, "{CHECKPOINT_FORMAT} {CHECKPOINT_VERSION}")?;
    for (k, v) in &ckpt.meta {
        writeln!(w, "meta {k} {v}")?;
    }
    for (_, name, t) in ckpt.params.iter() {
        let dims = if t.shape().is_empty() {
            "-".to_string()
        } else {
            t.shape().iter().map(usize::to_string).collect::<Vec<_>>().join("x")
        };
        writeln!(w, "param {name} {dims}")?;
        let values: Vec<String> = t.data().iter().map(f64::to_string).collect();
        writeln!(w, "{}", values.join(" "))?;
    }
    writeln!(w, "end")
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Checkpoint, TensorError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), TensorError> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((n, Err(e))) => Err(err(n, e)),
            None => Err(TensorError::Checkpoint(format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, header) = next("header")?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(CHECKPOINT_FORMAT) {
        return Err(err(n, format!("not a {CHECKPOINT_FORMAT} file")));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(n, "missing version"))?;
    if version != CHECKPOINT_VERSION {
        return Err(err(n, format!("unsupported version {version}")));
    }
    let mut ckpt = Checkpoint::default();
    loop {
        let (n, line) = next("`end`")?;
        let line = line.trim();
        if line == "end" {
            return Ok(ckpt);
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            ckpt.meta.insert(k.to_string(), v.to_string());
        } else if let Some(rest) = line.strip_prefix("param ") {
            let mut f = rest.split_whitespace();
            let (Some(name), Some(dims), None) = (f.next(), f.next(), f.next()) else {
                return Err(err(n, "expected `param <name> <dims>`"));
            };
            let shape: Vec<usize> = if dims == "-" {
                vec![]
            } else {
                dims.split('x')
                    .map(|d| d.parse().map_err(|_| err(n, format!("bad extent {d:?}"))))
                    .collect::<Result<_, _>>()?
            };
            let (vn, vline) = next("parameter values")?;
            let data: Vec<f64> = vline
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| err(vn, format!("bad value {x:?}"))))
                .collect::<Result<_, _>>()?;
            let t = Tensor::new(shape, data).map_err(|e| err(vn, e))?;
            ckpt.params.add(name, t).map_err(|e| err(n, e))?;
        } else if !line.is_empty() {
            return Err(err(n, format!("unrecognized line {line:?}")));
        }
    }
}
