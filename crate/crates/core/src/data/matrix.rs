//! Framed binary payloads: one line of compact JSON header, then raw
//! little-endian `f32` values. Dense matrices and model checkpoints share it.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::DataError;

pub fn write_framed<H: Serialize>(
    mut out: impl Write,
    header: &H,
    values: impl IntoIterator<Item = f32>,
) -> io::Result<()> {
    let json = serde_json::to_string(header).map_err(io::Error::other)?;
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    let mut buf = Vec::new();
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

pub fn read_framed<H: DeserializeOwned>(input: impl Read) -> io::Result<(H, Vec<f32>)> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header = serde_json::from_str(line.trim_end())
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("bad header: {e}")))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "payload is not a whole number of f32 values",
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
}

/// Writes `m` row-major, narrowed to `f32`.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<(), DataError> {
    let header = MatrixHeader {
        rows: m.nrows(),
        cols: m.ncols(),
    };
    let file = fs::File::create(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_framed(
        io::BufWriter::new(file),
        &header,
        m.iter().map(|&x| x as f32),
    )
    .map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>, DataError> {
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let (header, values): (MatrixHeader, Vec<f32>) = read_framed(file).map_err(io_err)?;
    if values.len() != header.rows * header.cols {
        return Err(DataError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            reason: format!(
                "header says {}x{} but payload holds {} values",
                header.rows,
                header.cols,
                values.len()
            ),
        });
    }
    Ok(Array2::from_shape_vec(
        (header.rows, header.cols),
        values.into_iter().map(f64::from).collect(),
    )
    .expect("length checked"))
}
