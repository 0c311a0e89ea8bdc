//! IDX (MNIST) file reader.
//!
//! Images: magic `0x00000803`, then `N`, `rows`, `cols` as big-endian `u32`,
//! then `N·rows·cols` unsigned bytes. Labels: magic `0x00000801`, then `N`,
//! then `N` bytes. Gzip input is detected by its `1F 8B` prefix.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::types::Sample;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

fn read_maybe_gz(path: &Path, field: &str) -> Result<Vec<u8>> {
    let raw = fs::read(path)
        .map_err(|e| Error::ingestion(field, format!("{}: {e}", path.display())))?;
    if raw.starts_with(&[0x1F, 0x8B]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::ingestion(field, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, field: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::ingestion(field, "truncated header"))
}

/// Decoded image block: `(rows, cols, pixels)` with one `Vec<u8>` per image.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<u8>>)> {
    let field = "images";
    let magic = be_u32(bytes, 0, field)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::ingestion(field, format!("bad magic 0x{magic:08x}")));
    }
    let n = be_u32(bytes, 4, field)? as usize;
    let rows = be_u32(bytes, 8, field)? as usize;
    let cols = be_u32(bytes, 12, field)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < n * size {
        return Err(Error::ingestion(
            field,
            format!("truncated file: expected {} pixel bytes, found {}", n * size, body.len()),
        ));
    }
    let images = body[..n * size].chunks_exact(size.max(1)).take(n).map(<[u8]>::to_vec).collect();
    Ok((rows, cols, images))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let field = "labels";
    let magic = be_u32(bytes, 0, field)?;
    if magic != LABELS_MAGIC {
        return Err(Error::ingestion(field, format!("bad magic 0x{magic:08x}")));
    }
    let n = be_u32(bytes, 4, field)? as usize;
    let body = &bytes[8..];
    if body.len() < n {
        return Err(Error::ingestion(
            field,
            format!("truncated file: expected {n} labels, found {}", body.len()),
        ));
    }
    Ok(body[..n].to_vec())
}

/// Build a dataset from raw IDX payloads. Pixels are rescaled to `[0, 1]`.
pub fn dataset_from_idx(name: &str, images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let (rows, cols, pixels) = parse_images(images)?;
    let labels = parse_labels(labels)?;
    if pixels.len() != labels.len() {
        return Err(Error::ingestion(
            "labels",
            format!("count mismatch: {} images, {} labels", pixels.len(), labels.len()),
        ));
    }
    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    let k = MNIST_CLASSES.max(max_label + 1);
    let samples = pixels
        .into_iter()
        .zip(labels)
        .map(|(img, l)| Sample::new(img.into_iter().map(|p| p as f64 / 255.0).collect(), l as usize))
        .collect();
    Dataset::new(name, samples, k, rows * cols)
}

/// Load an image/label IDX pair (plain or gzip).
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = read_maybe_gz(images_path, "images")?;
    let labels = read_maybe_gz(labels_path, "labels")?;
    let name = images_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    dataset_from_idx(&name, &images, &labels)
}

/// Which half of the standard MNIST file pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Locate `{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]` inside `dir`.
pub fn mnist_paths(dir: &Path, split: Split) -> Result<(PathBuf, PathBuf)> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let find = |stem: String, field: &str| -> Result<PathBuf> {
        [stem.clone(), format!("{stem}.gz")]
            .into_iter()
            .map(|n| dir.join(n))
            .find(|p| p.is_file())
            .ok_or_else(|| Error::ingestion(field, format!("{stem}[.gz] not found in {}", dir.display())))
    };
    Ok((
        find(format!("{prefix}-images-idx3-ubyte"), "images")?,
        find(format!("{prefix}-labels-idx1-ubyte"), "labels")?,
    ))
}

pub fn load_mnist_dir(dir: &Path, split: Split) -> Result<Dataset> {
    let (images, labels) = mnist_paths(dir, split)?;
    load_idx(&images, &labels)
}

/// Encode images in IDX layout (used to produce fixtures).
pub fn encode_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
