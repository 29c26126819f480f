//! Reading IDX files (optionally gzip-compressed) and writing model files.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use ebmlp_core::data::parse_idx;
use ebmlp_core::{IdxFile, LabeledImages, Params};
use flate2::read::GzDecoder;

use crate::error::{AppError, Result};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Returns the file contents, inflating them first if they start with the
/// gzip magic bytes.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| AppError::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| AppError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn read_idx(path: &Path) -> Result<IdxFile> {
    let bytes = read_maybe_gzip(path)?;
    parse_idx(&bytes).map_err(|e| AppError::Data {
        path: path.to_owned(),
        source: e.into(),
    })
}

/// Standard MNIST file stems; `.gz` variants are found as well.
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Resolves `stem` inside `dir`, accepting the uncompressed name, the `.gz`
/// name, and the `images.idx3-ubyte` spelling some mirrors use.
pub fn find_idx(dir: &Path, stem: &str) -> Result<PathBuf> {
    let dotted = stem.replacen("-idx", ".idx", 1);
    let candidates = [
        stem.to_owned(),
        format!("{stem}.gz"),
        dotted.clone(),
        format!("{dotted}.gz"),
    ];
    candidates
        .iter()
        .map(|c| dir.join(c))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            AppError::io(
                dir.join(stem),
                std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found (also tried .gz)"),
            )
        })
}

pub fn load_split(images: &Path, labels: &Path) -> Result<LabeledImages> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    LabeledImages::from_idx(&img, &lab).map_err(|e| AppError::Data {
        path: images.to_owned(),
        source: e.into(),
    })
}

/// Train and test splits from a directory holding the four MNIST files.
pub fn load_mnist(dir: &Path) -> Result<(LabeledImages, LabeledImages)> {
    let train = load_split(&find_idx(dir, TRAIN_IMAGES)?, &find_idx(dir, TRAIN_LABELS)?)?;
    let test = load_split(&find_idx(dir, TEST_IMAGES)?, &find_idx(dir, TEST_LABELS)?)?;
    Ok((train, test))
}

/// Where the MNIST files are looked for when no directory is configured:
/// `$MNIST_DIR`, else `data/mnist` under the workspace root.
pub fn default_mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn write_model(path: &Path, params: &Params) -> Result<()> {
    fs::write(path, params.to_bytes()).map_err(|e| AppError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<Params> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Params::from_bytes(&bytes).map_err(|e| AppError::Data {
        path: path.to_owned(),
        source: e,
    })
}
