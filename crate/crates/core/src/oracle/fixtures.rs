//! Malformed IDX files, each with the byte offset the parser must report.

use crate::data::{encode_images, encode_labels};

#[derive(Debug, Clone)]
pub struct CorruptIdx {
    pub name: &'static str,
    pub bytes: Vec<u8>,
    pub offset: usize,
}

/// Five labels (13 bytes) and two 3x4 images (40 bytes) to damage.
pub fn clean_idx_files() -> (Vec<u8>, Vec<u8>) {
    let labels = encode_labels(&[3, 1, 4, 1, 5]);
    let pixels: Vec<u8> = (0..24).map(|i| i * 10).collect();
    let images = encode_images(2, 3, 4, &pixels).expect("pixel count matches");
    (labels, images)
}

pub fn corrupted_idx_variants() -> Vec<CorruptIdx> {
    let (labels, images) = clean_idx_files();
    let with = |base: &[u8], at: usize, value: u8| {
        let mut b = base.to_vec();
        b[at] = value;
        b
    };
    let mut overflow = images.clone();
    overflow[4..16].fill(0xff);
    let mut trailing = labels.clone();
    trailing.extend_from_slice(&[0, 0, 0]);
    vec![
        CorruptIdx { name: "empty file", bytes: Vec::new(), offset: 0 },
        CorruptIdx { name: "nonzero leading magic byte", bytes: with(&labels, 0, 1), offset: 0 },
        CorruptIdx { name: "signed-byte element type", bytes: with(&labels, 2, 0x09), offset: 2 },
        CorruptIdx { name: "two dimensions", bytes: with(&images, 3, 2), offset: 3 },
        CorruptIdx { name: "header cut inside dimension 2", bytes: images[..14].to_vec(), offset: 14 },
        CorruptIdx { name: "label payload one byte short", bytes: labels[..12].to_vec(), offset: 12 },
        CorruptIdx { name: "image payload five bytes short", bytes: images[..35].to_vec(), offset: 35 },
        CorruptIdx { name: "trailing bytes after labels", bytes: trailing, offset: 13 },
        CorruptIdx { name: "zero image rows", bytes: with(&images, 11, 0), offset: 8 },
        CorruptIdx { name: "dimension product overflows", bytes: overflow, offset: 4 },
    ]
}
