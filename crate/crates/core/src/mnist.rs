//! Big-endian IDX file ingestion for MNIST-style image/label pairs.

use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::TruncatedFile {
            needed: end,
            had: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Parses an IDX image file: returns (count, rows, cols, pixels in [0,1]).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>)> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic {
            got: magic,
            expected: IMAGES_MAGIC,
        });
    }
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let needed = 16 + count * rows * cols;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            had: bytes.len(),
        });
    }
    let pixels = bytes[16..needed]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Ok((count, rows, cols, pixels))
}

/// Parses an IDX label file: returns the raw digit labels.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic {
            got: magic,
            expected: LABELS_MAGIC,
        });
    }
    let count = read_u32(bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            had: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Maps raw digit labels to the one-vs-rest binary task for `digit`.
pub fn one_vs_rest(labels: &[u8], digit: u8) -> Vec<u8> {
    labels.iter().map(|&l| u8::from(l == digit)).collect()
}

/// Loads an images/labels IDX pair as a dataset whose observed labels
/// are the one-vs-rest task for `digit`.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path, digit: u8) -> Result<Dataset> {
    let image_bytes = std::fs::read(images_path)?;
    let label_bytes = std::fs::read(labels_path)?;
    let (count, rows, cols, pixels) = parse_idx_images(&image_bytes)?;
    let labels = parse_idx_labels(&label_bytes)?;
    if labels.len() != count {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: count,
        });
    }
    Dataset::new(pixels, rows * cols, one_vs_rest(&labels, digit), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two 2x2 images with pixel values 0..=7, labels [1, 7].
    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let mut images = Vec::new();
        images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        images.extend_from_slice(&2u32.to_be_bytes());
        images.extend_from_slice(&2u32.to_be_bytes());
        images.extend_from_slice(&2u32.to_be_bytes());
        images.extend_from_slice(&[0, 51, 102, 153, 204, 255, 10, 20]);
        let mut labels = Vec::new();
        labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        labels.extend_from_slice(&2u32.to_be_bytes());
        labels.extend_from_slice(&[1, 7]);
        (images, labels)
    }

    #[test]
    fn parses_fixture() {
        let (images, labels) = fixture();
        let (count, rows, cols, pixels) = parse_idx_images(&images).unwrap();
        assert_eq!((count, rows, cols), (2, 2, 2));
        assert_eq!(pixels.len(), 8);
        assert_eq!(pixels[1], 0.2);
        assert_eq!(pixels[5], 1.0);
        assert_eq!(parse_idx_labels(&labels).unwrap(), vec![1, 7]);
    }

    #[test]
    fn fixture_to_dataset() {
        let (images, labels) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("images.idx");
        let lp = dir.path().join("labels.idx");
        std::fs::write(&ip, &images).unwrap();
        std::fs::write(&lp, &labels).unwrap();
        let d = load_mnist_idx(&ip, &lp, 1).unwrap();
        assert_eq!((d.n(), d.m()), (2, 4));
        assert_eq!(d.observed_labels(), &[1, 0]);
    }

    #[test]
    fn wrong_magic() {
        let (mut images, mut labels) = fixture();
        images[3] = 0x05;
        labels[3] = 0x05;
        assert!(matches!(
            parse_idx_images(&images),
            Err(Error::BadMagic { .. })
        ));
        assert!(matches!(
            parse_idx_labels(&labels),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn truncated() {
        let (images, labels) = fixture();
        assert!(matches!(
            parse_idx_images(&images[..20]),
            Err(Error::TruncatedFile { .. })
        ));
        assert!(matches!(
            parse_idx_labels(&labels[..9]),
            Err(Error::TruncatedFile { .. })
        ));
    }

    #[test]
    fn digit_filter() {
        assert_eq!(one_vs_rest(&[1, 7, 1], 1), vec![1, 0, 1]);
    }
}
