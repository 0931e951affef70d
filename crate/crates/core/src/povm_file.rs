//! JSON form of a POVM: `{"dim": n, "effects": [[[re, im], …], …], "labels": [...]}`.
//!
//! Each effect is a list of rows; each entry is a `[re, im]` pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmatrix::{ComplexMatrix, C64};
use crate::states::{index_labels, povm_violations, validate_povm, Povm, Violation};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub dim: usize,
    pub effects: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m.get(r, c).re, m.get(r, c).im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<ComplexMatrix> {
    let converted: Vec<Vec<C64>> = rows
        .iter()
        .map(|row| row.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .collect();
    ComplexMatrix::from_rows(&converted)
}

impl PovmFile {
    pub fn from_povm(povm: &Povm) -> Self {
        Self {
            dim: povm.dim(),
            effects: povm.effects().iter().map(matrix_to_json).collect(),
            labels: Some(povm.labels().to_vec()),
        }
    }

    fn parts(&self) -> Result<(Vec<ComplexMatrix>, Vec<String>)> {
        let effects = self
            .effects
            .iter()
            .enumerate()
            .map(|(g, e)| {
                let m = matrix_from_json(e).map_err(|err| Error::Parse(format!("effect {g}: {err}")))?;
                if m.rows() != self.dim || m.cols() != self.dim {
                    return Err(Error::Dimension(format!(
                        "effect {g} is {}x{}, declared dim is {}",
                        m.rows(),
                        m.cols(),
                        self.dim
                    )));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = self.labels.clone().unwrap_or_else(|| index_labels(effects.len()));
        Ok((effects, labels))
    }

    /// Every invariant violation of the described POVM.
    pub fn violations(&self) -> Result<Vec<Violation>> {
        let (effects, labels) = self.parts()?;
        Ok(povm_violations(&effects, &labels))
    }

    pub fn into_povm(self) -> Result<Povm> {
        let (effects, labels) = self.parts()?;
        validate_povm(effects, labels)
    }
}

pub fn parse_povm_file(text: &str) -> Result<PovmFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("POVM JSON: {e}")))
}

pub fn parse_povm(text: &str) -> Result<Povm> {
    parse_povm_file(text)?.into_povm()
}

pub fn povm_to_json(povm: &Povm) -> String {
    serde_json::to_string_pretty(&PovmFile::from_povm(povm)).expect("plain data serializes")
}
