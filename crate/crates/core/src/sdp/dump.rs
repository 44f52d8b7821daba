//! Plain-text dump of an embedded program.
//!
//! ```text
//! chanbox-sdp 1
//! vars <n>
//! negated <true|false>
//! offset <f>
//! cones <k>
//! zero <rows> | nonneg <rows> | psd <side>      (k lines)
//! objective <nnz>
//! <col> <value>                                 (nnz lines)
//! a <nnz>
//! <row> <col> <value>                           (nnz lines)
//! b <nnz>
//! <row> <value>                                 (nnz lines)
//! end
//! ```
//!
//! Rows of the PSD cones hold the column-major upper triangle with
//! off-diagonal entries scaled by √2. Numbers round-trip exactly.

use std::fmt::Write;

use thiserror::Error;

use super::embed::{RealCone, RealProgram};

const HEADER: &str = "chanbox-sdp 1";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct DumpError {
    pub line: usize,
    pub message: String,
}

impl RealProgram {
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "vars {}", self.num_vars);
        let _ = writeln!(out, "negated {}", self.negated);
        let _ = writeln!(out, "offset {}", self.offset);
        let _ = writeln!(out, "cones {}", self.cones.len());
        for cone in &self.cones {
            let _ = match cone {
                RealCone::Zero(m) => writeln!(out, "zero {m}"),
                RealCone::Nonneg(m) => writeln!(out, "nonneg {m}"),
                RealCone::PsdTriangle(n) => writeln!(out, "psd {n}"),
            };
        }
        let objective: Vec<(usize, f64)> =
            self.objective.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
        let _ = writeln!(out, "objective {}", objective.len());
        for (j, v) in objective {
            let _ = writeln!(out, "{j} {v}");
        }
        let _ = writeln!(out, "a {}", self.a.len());
        for (i, j, v) in &self.a {
            let _ = writeln!(out, "{i} {j} {v}");
        }
        let b: Vec<(usize, f64)> = self.b.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
        let _ = writeln!(out, "b {}", b.len());
        for (i, v) in b {
            let _ = writeln!(out, "{i} {v}");
        }
        out.push_str("end\n");
        out
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<Vec<&'a str>, DumpError> {
        loop {
            let (n, line) = self
                .inner
                .next()
                .ok_or(DumpError { line: self.current + 1, message: "unexpected end of input".into() })?;
            self.current = n + 1;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Ok(trimmed.split_whitespace().collect());
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> DumpError {
        DumpError { line: self.current, message: message.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, DumpError> {
        let fields = self.next_fields()?;
        match fields.as_slice() {
            [k, v] if *k == key => Ok(v),
            _ => Err(self.err(format!("expected `{key} <value>`"))),
        }
    }

    fn count(&mut self, key: &str, limit: usize) -> Result<usize, DumpError> {
        let raw = self.keyed(key)?;
        let n: usize = raw.parse().map_err(|_| self.err(format!("bad count `{raw}`")))?;
        if n > limit {
            return Err(self.err(format!("count {n} exceeds limit {limit}")));
        }
        Ok(n)
    }

    fn index(&self, raw: &str, bound: usize) -> Result<usize, DumpError> {
        let i: usize = raw.parse().map_err(|_| self.err(format!("bad index `{raw}`")))?;
        if i >= bound {
            return Err(self.err(format!("index {i} out of range {bound}")));
        }
        Ok(i)
    }

    fn number(&self, raw: &str) -> Result<f64, DumpError> {
        let v: f64 = raw.parse().map_err(|_| self.err(format!("bad number `{raw}`")))?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        Ok(v)
    }
}

/// Upper bound on any declared size, to keep hostile inputs cheap.
const MAX_SIZE: usize = 1 << 22;

/// Parses the format written by [`RealProgram::dump`].
pub fn parse_dump(text: &str) -> Result<RealProgram, DumpError> {
    let mut lines = Lines { inner: text.lines().enumerate(), current: 0 };
    let header = lines.next_fields()?;
    if header.join(" ") != HEADER {
        return Err(lines.err("missing header"));
    }
    let num_vars = lines.count("vars", MAX_SIZE)?;
    let negated = match lines.keyed("negated")? {
        "true" => true,
        "false" => false,
        other => return Err(lines.err(format!("bad flag `{other}`"))),
    };
    let raw_offset = lines.keyed("offset")?;
    let offset = lines.number(raw_offset)?;
    let cone_count = lines.count("cones", MAX_SIZE)?;
    let mut cones = Vec::with_capacity(cone_count.min(1024));
    let mut num_rows = 0usize;
    for _ in 0..cone_count {
        let fields = lines.next_fields()?;
        let [kind, size] = fields.as_slice() else {
            return Err(lines.err("expected `<cone> <size>`"));
        };
        let size: usize = size.parse().map_err(|_| lines.err("bad cone size"))?;
        if size == 0 || size > 4096 {
            return Err(lines.err("cone size out of range"));
        }
        let cone = match *kind {
            "zero" => RealCone::Zero(size),
            "nonneg" => RealCone::Nonneg(size),
            "psd" => RealCone::PsdTriangle(size),
            other => return Err(lines.err(format!("unknown cone `{other}`"))),
        };
        num_rows += cone.rows();
        if num_rows > MAX_SIZE {
            return Err(lines.err("too many rows"));
        }
        cones.push(cone);
    }
    let mut objective = vec![0.0; num_vars];
    let nnz = lines.count("objective", num_vars)?;
    for _ in 0..nnz {
        let fields = lines.next_fields()?;
        let [j, v] = fields.as_slice() else { return Err(lines.err("expected `<col> <value>`")) };
        let j = lines.index(j, num_vars)?;
        objective[j] = lines.number(v)?;
    }
    let nnz = lines.count("a", MAX_SIZE)?;
    let mut a = Vec::with_capacity(nnz.min(1 << 16));
    for _ in 0..nnz {
        let fields = lines.next_fields()?;
        let [i, j, v] = fields.as_slice() else { return Err(lines.err("expected `<row> <col> <value>`")) };
        a.push((lines.index(i, num_rows)?, lines.index(j, num_vars)?, lines.number(v)?));
    }
    let mut b = vec![0.0; num_rows];
    let nnz = lines.count("b", num_rows)?;
    for _ in 0..nnz {
        let fields = lines.next_fields()?;
        let [i, v] = fields.as_slice() else { return Err(lines.err("expected `<row> <value>`")) };
        let i = lines.index(i, num_rows)?;
        b[i] = lines.number(v)?;
    }
    let end = lines.next_fields()?;
    if end.as_slice() != ["end"] {
        return Err(lines.err("expected `end`"));
    }
    Ok(RealProgram { num_vars, objective, offset, negated, cones, a, b })
}
