//! Textual state files.
//!
//! A state file is a JSON document
//!
//! ```json
//! { "dims": [2, 2], "kind": "pure", "data": [[re, im], ...] }
//! ```
//!
//! with `kind` either `"pure"` (`D` amplitudes) or `"density"` (`D^2`
//! entries, row-major). Reals are written with 17 significant digits so that
//! a read-back reproduces every entry bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

use crate::bound::{purity_table, purity_table_pure, PurityTable};
use crate::error::{Error, Result};
use crate::hilbert::HilbertStructure;
use crate::states::{DensityMatrix, PureState};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStateFile {
    dims: Vec<usize>,
    kind: String,
    data: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFile {
    Pure(PureState),
    Density(DensityMatrix),
}

/// A real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl StateFile {
    pub fn structure(&self) -> &HilbertStructure {
        match self {
            StateFile::Pure(psi) => psi.structure(),
            StateFile::Density(rho) => rho.structure(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StateFile::Pure(_) => "pure",
            StateFile::Density(_) => "density",
        }
    }

    /// Parses and validates. Malformed text yields [`Error::Parse`]; a
    /// well-formed but unphysical state yields [`Error::InvalidState`].
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawStateFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let structure = HilbertStructure::new(raw.dims).map_err(|e| match e {
            Error::Capacity(_) => e,
            other => Error::Parse(format!("bad dims: {other}")),
        })?;
        let d = structure.dim();
        let entries: Vec<Complex64> = raw.data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        match raw.kind.as_str() {
            "pure" => {
                if entries.len() != d {
                    return Err(Error::Parse(format!("pure state needs {d} amplitudes, found {}", entries.len())));
                }
                Ok(StateFile::Pure(PureState::new(structure, DVector::from_vec(entries))?))
            }
            "density" => {
                if entries.len() != d * d {
                    return Err(Error::Parse(format!(
                        "density matrix needs {} entries, found {}",
                        d * d,
                        entries.len()
                    )));
                }
                let matrix = DMatrix::from_row_slice(d, d, &entries);
                Ok(StateFile::Density(DensityMatrix::new(structure, matrix)?))
            }
            other => Err(Error::Parse(format!("unknown state kind {other:?}"))),
        }
    }

    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.structure().dims().iter().map(|d| d.to_string()).collect();
        let entries: Vec<Complex64> = match self {
            StateFile::Pure(psi) => psi.amplitudes().iter().copied().collect(),
            StateFile::Density(rho) => {
                let m = rho.matrix();
                (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect()
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"dims\": [{}],", dims.join(", "));
        let _ = writeln!(out, "  \"kind\": \"{}\",", self.kind());
        let _ = writeln!(out, "  \"data\": [");
        for (i, z) in entries.iter().enumerate() {
            let sep = if i + 1 == entries.len() { "" } else { "," };
            let _ = writeln!(out, "    [{}, {}]{sep}", format_real(z.re), format_real(z.im));
        }
        let _ = writeln!(out, "  ]");
        let _ = writeln!(out, "}}");
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Density matrix of the state (formed from the amplitudes when pure).
    pub fn density(&self) -> DensityMatrix {
        match self {
            StateFile::Pure(psi) => psi.to_density(),
            StateFile::Density(rho) => rho.clone(),
        }
    }

    /// Purity lattice, using the amplitude path for pure states.
    pub fn purity_table(&self) -> Result<PurityTable> {
        match self {
            StateFile::Pure(psi) => purity_table_pure(psi),
            StateFile::Density(rho) => purity_table(rho),
        }
    }
}
