use std::fs;
use std::io::BufWriter;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelParams, NnError};
use crate::data::matrix::{read_framed, write_framed};
use crate::data::DataError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    /// Payload order; each matrix is row-major.
    pub shapes: Vec<ShapeEntry>,
    pub config: ModelConfig,
    pub seed: u64,
    pub epoch: usize,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> NnError + '_ {
    move |source| {
        NnError::Data(DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Writes `params` narrowed to `f32` behind a JSON header line.
pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    config: &ModelConfig,
    seed: u64,
    epoch: usize,
) -> Result<(), NnError> {
    let named = params.named();
    let header = CheckpointHeader {
        shapes: named
            .iter()
            .map(|(name, m)| ShapeEntry {
                name: name.clone(),
                rows: m.nrows(),
                cols: m.ncols(),
            })
            .collect(),
        config: config.clone(),
        seed,
        epoch,
    };
    let file = fs::File::create(path).map_err(io_err(path))?;
    let values = named.iter().flat_map(|(_, m)| m.iter().map(|&x| x as f32));
    write_framed(BufWriter::new(file), &header, values).map_err(io_err(path))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, ModelParams), NnError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let (header, values): (CheckpointHeader, Vec<f32>) = read_framed(file).map_err(io_err(path))?;
    let expected: usize = header.shapes.iter().map(|s| s.rows * s.cols).sum();
    if expected != values.len() {
        return Err(NnError::Checkpoint(format!(
            "header describes {expected} values, payload has {}",
            values.len()
        )));
    }
    let mut offset = 0;
    let mut items = Vec::with_capacity(header.shapes.len());
    for s in &header.shapes {
        let len = s.rows * s.cols;
        let data = values[offset..offset + len]
            .iter()
            .map(|&x| f64::from(x))
            .collect();
        offset += len;
        let m = Array2::from_shape_vec((s.rows, s.cols), data).expect("length checked");
        items.push((s.name.clone(), m));
    }
    let params = ModelParams::from_named(items)?;
    Ok((header, params))
}
