//! JSON input formats. Complex numbers are `[re, im]` pairs, matrices are
//! lists of rows, and every dimension is given explicitly.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{from_pairs, to_pairs, CMatrix};
use crate::qobjects::{CQBox, Channel, ChannelBox, QState, Superchannel};

/// Largest Choi dimension `d_in·d_out` accepted from a spec.
pub const MAX_SPEC_CHOI_DIM: usize = 256;

/// Largest superchannel Choi dimension accepted from a file.
pub const MAX_SUPERCHANNEL_DIM: usize = 4096;

pub type Rows = Vec<Vec<[f64; 2]>>;

/// A malformed input, located by JSON path and, for syntax errors, by line
/// and column.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{}: {message}", location(path, *line, *column))]
pub struct InputError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

fn location(path: &str, line: Option<usize>, column: Option<usize>) -> String {
    // serde_path_to_error marks a segment it could not name with `?`.
    let path = path.trim_end_matches('?').trim_end_matches('.');
    let path = if path.is_empty() { "<root>" } else { path };
    match (line, column) {
        (Some(l), Some(c)) => format!("{path} (line {l}, column {c})"),
        _ => path.to_string(),
    }
}

impl InputError {
    fn at(path: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self { path: path.into(), line: None, column: None, message: err.to_string() }
    }
}

type InputResult<T> = std::result::Result<T, InputError>;

/// Deserializes `text`, reporting the JSON path of the first failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> InputResult<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = if inner.line() > 0 { (Some(inner.line()), Some(inner.column())) } else { (None, None) };
        InputError { path, line, column, message: inner.to_string() }
    })?;
    de.end().map_err(|e| InputError {
        path: String::new(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    })?;
    Ok(value)
}

fn matrix(rows: &Rows, nrows: usize, ncols: usize, path: &str) -> InputResult<CMatrix> {
    let m = from_pairs(rows).map_err(|e| InputError::at(path, e))?;
    if m.nrows() != nrows || m.ncols() != ncols {
        return Err(InputError::at(
            path,
            format!("expected a {nrows}×{ncols} matrix, got {}×{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m)
}

fn state(rows: &Rows, dim: usize, path: &str) -> InputResult<QState> {
    QState::from_matrix(matrix(rows, dim, dim, path)?).map_err(|e| InputError::at(path, e))
}

fn choi_dim(in_dim: usize, out_dim: usize, path: &str) -> InputResult<usize> {
    if in_dim == 0 || out_dim == 0 {
        return Err(InputError::at(path, "dimensions must be positive"));
    }
    match in_dim.checked_mul(out_dim) {
        Some(d) if d <= MAX_SPEC_CHOI_DIM => Ok(d),
        _ => Err(InputError::at(
            path,
            Error::DimensionCap { dim: in_dim.saturating_mul(out_dim), cap: MAX_SPEC_CHOI_DIM },
        )),
    }
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

/// A channel given by Kraus operators, its Choi operator, the state a
/// replacer outputs, the states of a classical-quantum channel, or a unitary.
/// `data` is decoded according to `kind`, so errors inside it keep their path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub in_dim: usize,
    pub out_dim: usize,
    pub data: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// List of `out_dim × in_dim` operators.
    Kraus,
    Choi,
    /// The output state.
    Replacer,
    /// One output state per input basis vector.
    Cq,
    Unitary,
}

fn decode<T: DeserializeOwned>(value: &serde_json::Value, path: &str) -> InputResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let full = if inner == "." {
            path.to_string()
        } else {
            format!("{path}{}{inner}", if inner.starts_with('[') { "" } else { "." })
        };
        InputError::at(full, e.into_inner())
    })
}

impl ChannelSpec {
    /// Choi form of an existing channel.
    pub fn from_channel(ch: &Channel) -> Self {
        let data = serde_json::to_value(to_pairs(ch.choi().matrix())).expect("finite entries");
        ChannelSpec { kind: ChannelKind::Choi, in_dim: ch.in_dim(), out_dim: ch.out_dim(), data }
    }

    pub fn build(&self) -> InputResult<Channel> {
        self.build_at("")
    }

    fn build_at(&self, prefix: &str) -> InputResult<Channel> {
        let data = join(prefix, "data");
        let (in_dim, out_dim) = (self.in_dim, self.out_dim);
        let d = choi_dim(in_dim, out_dim, prefix)?;
        match self.kind {
            ChannelKind::Kraus => {
                let ops: Vec<Rows> = decode(&self.data, &data)?;
                if ops.is_empty() {
                    return Err(InputError::at(&data, "empty Kraus list"));
                }
                let kraus = ops
                    .iter()
                    .enumerate()
                    .map(|(k, rows)| matrix(rows, out_dim, in_dim, &format!("{data}[{k}]")))
                    .collect::<InputResult<Vec<_>>>()?;
                Channel::from_kraus(&kraus, in_dim, out_dim).map_err(|e| InputError::at(&data, e))
            }
            ChannelKind::Choi => {
                let rows: Rows = decode(&self.data, &data)?;
                Channel::from_choi(matrix(&rows, d, d, &data)?, in_dim, out_dim).map_err(|e| InputError::at(&data, e))
            }
            ChannelKind::Replacer => {
                let rows: Rows = decode(&self.data, &data)?;
                Ok(Channel::replacer(&state(&rows, out_dim, &data)?, in_dim))
            }
            ChannelKind::Cq => {
                let states: Vec<Rows> = decode(&self.data, &data)?;
                if states.len() != in_dim {
                    return Err(InputError::at(&data, format!("expected {in_dim} states, got {}", states.len())));
                }
                let states = states
                    .iter()
                    .enumerate()
                    .map(|(x, rows)| state(rows, out_dim, &format!("{data}[{x}]")))
                    .collect::<InputResult<Vec<_>>>()?;
                Channel::classical_quantum(&states).map_err(|e| InputError::at(&data, e))
            }
            ChannelKind::Unitary => {
                if in_dim != out_dim {
                    return Err(InputError::at(join(prefix, "out_dim"), "a unitary needs out_dim = in_dim"));
                }
                let rows: Rows = decode(&self.data, &data)?;
                Channel::unitary(&matrix(&rows, in_dim, in_dim, &data)?).map_err(|e| InputError::at(&data, e))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub first: ChannelSpec,
    pub second: ChannelSpec,
}

impl BoxSpec {
    pub fn from_box(b: &ChannelBox) -> Self {
        Self { first: ChannelSpec::from_channel(&b.first), second: ChannelSpec::from_channel(&b.second) }
    }

    pub fn build(&self) -> InputResult<ChannelBox> {
        let first = self.first.build_at("first")?;
        let second = self.second.build_at("second")?;
        ChannelBox::new(first, second).map_err(|e| InputError::at("second", e))
    }
}

/// `{"dim": d, "rho": ..., "sigma": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePairSpec {
    pub dim: usize,
    pub rho: Rows,
    pub sigma: Rows,
}

impl StatePairSpec {
    pub fn from_states(rho: &QState, sigma: &QState) -> Self {
        Self { dim: rho.dim(), rho: to_pairs(rho.matrix()), sigma: to_pairs(sigma.matrix()) }
    }

    pub fn build(&self) -> InputResult<(QState, QState)> {
        choi_dim(self.dim, 1, "dim")?;
        Ok((state(&self.rho, self.dim, "rho")?, state(&self.sigma, self.dim, "sigma")?))
    }
}

/// `{"out_dim": d, "pairs": [[ρ⁰, σ⁰], [ρ¹, σ¹], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqSpec {
    pub out_dim: usize,
    pub pairs: Vec<[Rows; 2]>,
}

impl CqSpec {
    pub fn from_cq(cq: &CQBox) -> Self {
        let pairs = cq.pairs().iter().map(|(r, s)| [to_pairs(r.matrix()), to_pairs(s.matrix())]).collect();
        Self { out_dim: cq.out_dim(), pairs }
    }

    pub fn build(&self) -> InputResult<CQBox> {
        choi_dim(self.pairs.len().max(1), self.out_dim, "out_dim")?;
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .map(|(x, [r, s])| {
                Ok((
                    state(r, self.out_dim, &format!("pairs[{x}][0]"))?,
                    state(s, self.out_dim, &format!("pairs[{x}][1]"))?,
                ))
            })
            .collect::<InputResult<Vec<_>>>()?;
        CQBox::new(pairs).map_err(|e| InputError::at("pairs", e))
    }
}

pub fn parse_channel(text: &str) -> InputResult<Channel> {
    parse_json::<ChannelSpec>(text)?.build()
}

pub fn parse_box(text: &str) -> InputResult<ChannelBox> {
    parse_json::<BoxSpec>(text)?.build()
}

pub fn parse_state_pair(text: &str) -> InputResult<(QState, QState)> {
    parse_json::<StatePairSpec>(text)?.build()
}

pub fn parse_cq(text: &str) -> InputResult<CQBox> {
    parse_json::<CqSpec>(text)?.build()
}

/// Reads `{"dims": [dC, dB, dA, dD], "choi": ...}`; the physical
/// constraints are left to [`crate::qobjects::validate_superchannel`].
pub fn parse_superchannel(text: &str) -> InputResult<Superchannel> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Wire {
        dims: [usize; 4],
        choi: Rows,
    }
    let wire: Wire = parse_json(text)?;
    let total = wire.dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let d = match total {
        Some(d) if d > 0 && d <= MAX_SUPERCHANNEL_DIM => d,
        Some(0) => return Err(InputError::at("dims", "dimensions must be positive")),
        _ => return Err(InputError::at("dims", format!("total dimension exceeds {MAX_SUPERCHANNEL_DIM}"))),
    };
    let choi = matrix(&wire.choi, d, d, "choi")?;
    Superchannel::new(choi, wire.dims).map_err(|e| InputError::at("choi", e))
}

#[cfg(test)]
mod tests;
