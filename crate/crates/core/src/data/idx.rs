//! IDX container (the format MNIST ships in): big-endian magic
//! `0x00 0x00 <type> <ndims>`, one big-endian `u32` per dimension, then the
//! row-major payload. Only unsigned-byte payloads with 1 (labels) or 3
//! (images) dimensions are accepted.

use crate::error::{Error, Result};

pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxArray {
    Labels(Vec<u8>),
    /// `pixels` holds `count` images of `rows * cols` bytes each, row-major.
    Images { count: usize, rows: usize, cols: usize, pixels: Vec<u8> },
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| parse_err(bytes.len(), format!("file ends inside {what}")))
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    let magic = read_u32(bytes, 0, "magic number")?;
    if magic >> 16 != 0 {
        return Err(parse_err(0, format!("magic {magic:#010x} does not start with two zero bytes")));
    }
    if (magic >> 8) & 0xff != 0x08 {
        return Err(parse_err(2, format!("unsupported element type {:#04x}", (magic >> 8) & 0xff)));
    }
    let ndims = match magic {
        LABELS_MAGIC => 1,
        IMAGES_MAGIC => 3,
        _ => return Err(parse_err(3, format!("unsupported dimension count {}", magic & 0xff))),
    };
    let mut dims = Vec::with_capacity(ndims);
    for i in 0..ndims {
        let offset = 4 + 4 * i;
        let d = read_u32(bytes, offset, &format!("dimension {i}"))? as usize;
        if d == 0 && i > 0 {
            return Err(parse_err(offset, format!("dimension {i} is zero")));
        }
        dims.push(d);
    }
    let header = 4 + 4 * ndims;
    let payload = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&p| p.checked_add(header).is_some())
        .ok_or_else(|| parse_err(4, format!("dimensions {dims:?} overflow the address space")))?;
    let end = header + payload;
    if bytes.len() < end {
        return Err(parse_err(
            bytes.len(),
            format!("payload truncated: header declares {payload} bytes, {} present", bytes.len() - header),
        ));
    }
    if bytes.len() > end {
        return Err(parse_err(end, format!("{} trailing bytes after payload", bytes.len() - end)));
    }
    let data = bytes[header..].to_vec();
    Ok(match ndims {
        1 => IdxArray::Labels(data),
        _ => IdxArray::Images { count: dims[0], rows: dims[1], cols: dims[2], pixels: data },
    })
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn encode_images(count: usize, rows: usize, cols: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != count * rows * cols {
        return Err(Error::Shape(format!("{} pixels for {count} images of {rows}x{cols}", pixels.len())));
    }
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for d in [count, rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn offset_of(r: Result<IdxArray>) -> usize {
        match r {
            Err(Error::Parse { offset, .. }) => offset,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn labels_example() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 2, 7, 3];
        assert_eq!(parse_idx(&bytes).unwrap(), IdxArray::Labels(vec![7, 3]));
    }

    #[test]
    fn short_payload_reports_end_of_file() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 5, 7, 3];
        assert_eq!(offset_of(parse_idx(&bytes)), 10);
    }

    #[test]
    fn canonical_train_image_size() {
        assert_eq!(16 + 60000 * 784, 47_040_016);
        let header = encode_images(60000, 28, 28, &vec![0; 60000 * 784]).unwrap();
        assert_eq!(header.len(), 47_040_016);
    }

    proptest! {
        #[test]
        fn labels_roundtrip(labels in proptest::collection::vec(0u8..10, 0..200)) {
            prop_assert_eq!(parse_idx(&encode_labels(&labels)).unwrap(), IdxArray::Labels(labels));
        }

        #[test]
        fn images_roundtrip(count in 1usize..5, rows in 1usize..6, cols in 1usize..6, seed in any::<u8>()) {
            let pixels: Vec<u8> = (0..count * rows * cols).map(|i| (i as u8).wrapping_mul(31) ^ seed).collect();
            let parsed = parse_idx(&encode_images(count, rows, cols, &pixels).unwrap()).unwrap();
            prop_assert_eq!(parsed, IdxArray::Images { count, rows, cols, pixels });
        }
    }
}
