//! JSON file formats: matrices, rows of matrices and Pick systems.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};
use crate::operator::RowOperator;
use crate::pick::PickSystem;

/// `{rows, cols, entries: [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixFile { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.validate()?;
        Ok(CMatrix::from_row_iterator(self.rows, self.cols, self.entries.iter().map(|&[re, im]| c(re, im))))
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        if self.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Format("matrix entries must be finite".into()));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f: MatrixFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        f.validate()?;
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate()?;
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    MatrixFile::read(path)?.to_matrix()
}

pub fn write_matrix(m: &CMatrix, path: &Path) -> Result<()> {
    MatrixFile::from_matrix(m).write(path)
}

/// A row operator on disk: `{"blocks": [...]}`, a bare array of matrices, or
/// a single matrix (`n = 1`).
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RowOperatorFile {
    Blocks { blocks: Vec<MatrixFile> },
    Array(Vec<MatrixFile>),
    Single(MatrixFile),
}

pub fn read_row_operator(path: &Path) -> Result<RowOperator> {
    let parsed: RowOperatorFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let files = match parsed {
        RowOperatorFile::Blocks { blocks } | RowOperatorFile::Array(blocks) => blocks,
        RowOperatorFile::Single(m) => vec![m],
    };
    if files.is_empty() {
        return Err(Error::Format("row operator file has no blocks".into()));
    }
    RowOperator::new(files.iter().map(MatrixFile::to_matrix).collect::<Result<_>>()?)
}

pub fn write_row_operator(t: &RowOperator, path: &Path) -> Result<()> {
    let blocks: Vec<MatrixFile> = t.blocks().iter().map(MatrixFile::from_matrix).collect();
    std::fs::write(path, serde_json::to_string(&serde_json::json!({ "blocks": blocks }))?)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetEntry {
    Scalar([f64; 2]),
    Matrix(MatrixFile),
}

/// `{"nodes": [[[re, im], ...], ...], "targets": [[re, im] | matrix, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickFile {
    pub nodes: Vec<Vec<[f64; 2]>>,
    pub targets: Vec<TargetEntry>,
}

impl PickFile {
    pub fn to_system(&self) -> Result<PickSystem> {
        let nodes = self.nodes.iter().map(|p| p.iter().map(|&[re, im]| c(re, im)).collect()).collect();
        let targets = self
            .targets
            .iter()
            .map(|t| match t {
                TargetEntry::Scalar([re, im]) => Ok(CMatrix::from_element(1, 1, c(*re, *im))),
                TargetEntry::Matrix(m) => m.to_matrix(),
            })
            .collect::<Result<_>>()?;
        PickSystem::new(nodes, targets)
    }

    pub fn scalar(nodes: &[Vec<C64>], targets: &[C64]) -> Self {
        PickFile {
            nodes: nodes.iter().map(|p| p.iter().map(|z| [z.re, z.im]).collect()).collect(),
            targets: targets.iter().map(|z| TargetEntry::Scalar([z.re, z.im])).collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut rng = sampling::rng(1);
        let mut m = sampling::complex_matrix(&mut rng, 3, 4);
        m[(0, 0)] = c(-0.0, 1e-310);
        m[(1, 1)] = c(f64::MAX, f64::MIN_POSITIVE);
        m[(2, 3)] = c(0.1 + 0.2, -1.0 / 3.0);
        write_matrix(&m, &path).unwrap();
        let back = read_matrix(&path).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn row_major_layout() {
        let f: MatrixFile = serde_json::from_str(r#"{"rows":2,"cols":2,"entries":[[1,0],[2,0],[3,0],[4,1]]}"#).unwrap();
        let m = f.to_matrix().unwrap();
        assert_eq!(m[(0, 1)], c(2.0, 0.0));
        assert_eq!(m[(1, 1)], c(4.0, 1.0));
    }

    #[test]
    fn rejects_wrong_length() {
        let f = MatrixFile { rows: 2, cols: 2, entries: vec![[0.0, 0.0]; 3] };
        assert!(matches!(f.to_matrix(), Err(Error::Format(_))));
    }

    #[test]
    fn row_operator_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = sampling::rng(2);
        let t = sampling::free_row(&mut rng, 2, 3, 0.5);
        let path = dir.path().join("t.json");
        write_row_operator(&t, &path).unwrap();
        let back = read_row_operator(&path).unwrap();
        assert_eq!(back.blocks(), t.blocks());
        let single = dir.path().join("s.json");
        write_matrix(t.block(0), &single).unwrap();
        assert_eq!(read_row_operator(&single).unwrap().n(), 1);
        let arr = dir.path().join("a.json");
        let blocks: Vec<MatrixFile> = t.blocks().iter().map(MatrixFile::from_matrix).collect();
        std::fs::write(&arr, serde_json::to_string(&blocks).unwrap()).unwrap();
        assert_eq!(read_row_operator(&arr).unwrap().n(), 2);
    }

    #[test]
    fn pick_file_parses_both_target_kinds() {
        let text = r#"{"nodes": [[[0,0]], [[0.5,0]]], "targets": [[0,0], [0.5,0]]}"#;
        let sys = serde_json::from_str::<PickFile>(text).unwrap().to_system().unwrap();
        assert_eq!(sys.len(), 2);
        let text = r#"{"nodes": [[[0,0]]], "targets": [{"rows":1,"cols":1,"entries":[[0.25,0]]}]}"#;
        let sys = serde_json::from_str::<PickFile>(text).unwrap().to_system().unwrap();
        assert_eq!(sys.targets()[0][(0, 0)], c(0.25, 0.0));
    }
}
