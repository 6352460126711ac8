//! JSON file format for matrices and state vectors:
//! `{"dims": [d1, ...], "entries": [[re, im], ...]}`.
//!
//! With `D = ∏ dims`, a state carries `D` entries and a matrix `D²` entries in
//! row-major order. Non-finite numbers are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::state::{PureState, Register};
use num_complex::Complex64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dims: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

/// Parsed payload of a [`MatrixFile`].
#[derive(Clone, Debug)]
pub enum Payload {
    State(ComplexVector),
    Matrix(ComplexMatrix),
}

impl MatrixFile {
    pub fn from_matrix(dims: Vec<usize>, m: &ComplexMatrix) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        Self { dims, entries }
    }

    pub fn from_state(state: &PureState) -> Self {
        Self {
            dims: state.registers().iter().map(|r| r.dim).collect(),
            entries: state.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        // serde_json refuses NaN/Infinity literals already; overflowed
        // literals such as 1e999 are caught below.
        let file: MatrixFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Parse("dims must be a nonempty list of positive integers".into()));
        }
        if let Some(i) = self.entries.iter().position(|e| !e[0].is_finite() || !e[1].is_finite()) {
            return Err(Error::Parse(format!("entry {i} is not finite")));
        }
        let d: usize = self.dims.iter().product();
        if self.entries.len() != d && self.entries.len() != d * d {
            return Err(Error::Parse(format!(
                "{} entries; expected {d} (state) or {} (matrix)",
                self.entries.len(),
                d * d
            )));
        }
        Ok(())
    }

    pub fn payload(&self) -> Payload {
        let d: usize = self.dims.iter().product();
        let values: Vec<Complex64> = self.entries.iter().map(|e| Complex64::new(e[0], e[1])).collect();
        if values.len() == d && d != 1 {
            Payload::State(ComplexVector::from_vec(values))
        } else {
            Payload::Matrix(ComplexMatrix::from_row_slice(d, d, &values))
        }
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        match self.payload() {
            Payload::Matrix(m) => Ok(m),
            Payload::State(_) => Err(Error::Parse("file holds a state, not a matrix".into())),
        }
    }

    /// State on registers named `labels` (one per dim).
    pub fn state(&self, labels: &[&str]) -> Result<PureState> {
        if labels.len() != self.dims.len() {
            return Err(Error::Parse("one label per dimension required".into()));
        }
        match self.payload() {
            Payload::State(v) => PureState::new(
                labels
                    .iter()
                    .zip(&self.dims)
                    .map(|(l, &d)| Register::new(*l, d))
                    .collect(),
                v,
            ),
            Payload::Matrix(_) => Err(Error::Parse("file holds a matrix, not a state".into())),
        }
    }
}
