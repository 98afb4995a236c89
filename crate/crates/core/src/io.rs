//! JSON file formats for matrices, POVMs and reports.
//!
//! Doubles are written in shortest round-trip form, so `save` followed by
//! `load` reproduces every entry bit for bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{BipartiteOperator, CMatrix, C64};
use crate::measurement::Povm;
use crate::state::DensityMatrix;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `{"rows", "cols", "re", "im", "split_N"}`; a missing `im` means a real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
    #[serde(rename = "split_N", default, skip_serializing_if = "Option::is_none")]
    pub split_n: Option<usize>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = m.nrows();
        let cols = m.ncols();
        let grid = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..rows).map(|i| (0..cols).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixFile {
            rows,
            cols,
            re: grid(|z| z.re),
            im: Some(grid(|z| z.im)),
            split_n: None,
        }
    }

    pub fn bipartite(at: &BipartiteOperator) -> Self {
        MatrixFile {
            split_n: Some(at.n()),
            ..Self::from_matrix(at.matrix())
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_shape("re", &self.re, self.rows, self.cols)?;
        if let Some(im) = &self.im {
            check_shape("im", im, self.rows, self.cols)?;
        }
        let m = CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            C64::new(self.re[i][j], im)
        });
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::parse("re/im", "non-finite entry"));
        }
        Ok(m)
    }

    pub fn to_bipartite(&self) -> Result<BipartiteOperator> {
        let n = self
            .split_n
            .ok_or_else(|| Error::parse("split_N", "required for a bipartite operator"))?;
        BipartiteOperator::new(self.to_matrix()?, n)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_matrix()?)
    }
}

fn check_shape(field: &str, grid: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if grid.len() != rows {
        return Err(Error::parse(
            "rows",
            format!("declared {rows} but \"{field}\" has {} rows", grid.len()),
        ));
    }
    if let Some((i, r)) = grid.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::parse(
            "cols",
            format!("declared {cols} but \"{field}\" row {i} has {} entries", r.len()),
        ));
    }
    Ok(())
}

/// `{"dim", "elements": [MatrixFile]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub elements: Vec<MatrixFile>,
}

impl PovmFile {
    pub fn from_povm(povm: &Povm) -> Self {
        PovmFile {
            dim: povm.dim(),
            elements: povm.elements().iter().map(MatrixFile::from_matrix).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let elements = self
            .elements
            .iter()
            .map(MatrixFile::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        let povm = Povm::new(elements)?;
        if povm.dim() != self.dim {
            return Err(Error::parse(
                "dim",
                format!("declared {} but elements are {}x{}", self.dim, povm.dim(), povm.dim()),
            ));
        }
        Ok(povm)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        // serde reports the offending field inside backticks.
        let field = msg.split('`').nth(1).unwrap_or("<document>").to_string();
        Error::Parse { field, message: msg }
    })
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<MatrixFile> {
    load_json(path)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &MatrixFile) -> Result<()> {
    save_json(path, m)
}

pub fn load_povm(path: impl AsRef<Path>) -> Result<Povm> {
    load_json::<PovmFile>(path)?.to_povm()
}

pub fn save_povm(path: impl AsRef<Path>, povm: &Povm) -> Result<()> {
    save_json(path, &PovmFile::from_povm(povm))
}

pub fn load_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    load_json(path)
}

pub fn save_report<T: Serialize>(path: impl AsRef<Path>, report: &T) -> Result<()> {
    save_json(path, report)
}
