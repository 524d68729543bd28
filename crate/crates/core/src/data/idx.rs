//! Big-endian IDX files as distributed with MNIST and Fashion-MNIST.

use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

const MNIST_CLASSES: usize = 10;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

struct Header<'a> {
    dims: Vec<usize>,
    body: &'a [u8],
}

fn parse_header<'a>(path: &Path, bytes: &'a [u8], magic: u32, ndims: usize) -> Result<Header<'a>> {
    if bytes.len() < 4 {
        return Err(parse_err(path, format!("truncated header ({} bytes)", bytes.len())));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let found = word(0);
    if found != magic {
        return Err(parse_err(
            path,
            format!("bad magic number 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    let header_len = 4 * (1 + ndims);
    if bytes.len() < header_len {
        return Err(parse_err(path, format!("truncated header ({} bytes)", bytes.len())));
    }
    let dims = (1..=ndims).map(|i| word(i) as usize).collect();
    Ok(Header {
        dims,
        body: &bytes[header_len..],
    })
}

/// Reads an IDX3 image file, returning `(rows*cols, pixels scaled to [0,1])`.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = read_file(path)?;
    let header = parse_header(path, &bytes, IDX_IMAGE_MAGIC, 3)?;
    let (n, rows, cols) = (header.dims[0], header.dims[1], header.dims[2]);
    let expected = n * rows * cols;
    if header.body.len() < expected {
        return Err(parse_err(
            path,
            format!(
                "truncated: header promises {expected} pixel bytes, found {}",
                header.body.len()
            ),
        ));
    }
    let pixels = header.body[..expected].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok((n, rows * cols, pixels))
}

/// Reads an IDX1 label file.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let header = parse_header(path, &bytes, IDX_LABEL_MAGIC, 1)?;
    let n = header.dims[0];
    if header.body.len() < n {
        return Err(parse_err(
            path,
            format!("truncated: header promises {n} labels, found {}", header.body.len()),
        ));
    }
    Ok(header.body[..n].to_vec())
}

/// Loads a paired image/label IDX dataset with ten classes.
pub fn load_idx(image_path: &Path, label_path: &Path) -> Result<Dataset> {
    let (n, dim, pixels) = read_idx_images(image_path)?;
    let labels = read_idx_labels(label_path)?;
    if labels.len() != n {
        return Err(parse_err(
            label_path,
            format!("{} labels but {} has {n} images", labels.len(), image_path.display()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= MNIST_CLASSES) {
        return Err(parse_err(label_path, format!("label {bad} outside 0..{MNIST_CLASSES}")));
    }
    Dataset::new(dim, MNIST_CLASSES, pixels, labels)
}
