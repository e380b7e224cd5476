//! Atlas checkpoints and snapshot images.
//!
//! A checkpoint is a `u32` little-endian header length, a JSON header, then
//! every face color as three little-endian `f32` values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{LogoRegion, TextureAtlas, TopologySignature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub topology: TopologySignature,
    /// SHA-256 of the region's `.faces` text.
    pub region_hash: String,
    pub epoch: usize,
    pub faces: usize,
}

pub fn region_hash(region: &LogoRegion) -> String {
    hex::encode(Sha256::digest(region.to_faces_text().as_bytes()))
}

pub fn encode_checkpoint(atlas: &TextureAtlas, region: &LogoRegion, epoch: usize) -> Result<Vec<u8>> {
    atlas.check_len(region.mesh_face_count())?;
    let header = CheckpointHeader {
        topology: region.topology(),
        region_hash: region_hash(region),
        epoch,
        faces: atlas.len(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(4 + json.len() + 12 * atlas.len());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for c in atlas.colors() {
        for v in c {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(CheckpointHeader, TextureAtlas)> {
    let bad = |m: &str| Error::Dataset(format!("atlas checkpoint: {m}"));
    let len = bytes
        .get(..4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        .ok_or_else(|| bad("truncated header"))?;
    let json = bytes.get(4..4 + len).ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(json).map_err(|e| bad(&e.to_string()))?;
    let body = &bytes[4 + len..];
    if body.len() != 12 * header.faces {
        return Err(bad(&format!("expected {} face colors, found {} bytes", header.faces, body.len())));
    }
    let colors = body
        .chunks_exact(12)
        .map(|c| [0, 1, 2].map(|k| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64))
        .collect();
    Ok((header, TextureAtlas::from_colors(colors)))
}

pub fn save_checkpoint(path: impl AsRef<Path>, atlas: &TextureAtlas, region: &LogoRegion, epoch: usize) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(atlas, region, epoch)?).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint and checks it belongs to `region`.
pub fn load_checkpoint(path: impl AsRef<Path>, region: &LogoRegion) -> Result<(CheckpointHeader, TextureAtlas)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, atlas) = decode_checkpoint(&bytes)?;
    if header.topology != region.topology() {
        return Err(Error::TopologyMismatch {
            expected: region.topology().to_string(),
            found: header.topology.to_string(),
        });
    }
    if header.region_hash != region_hash(region) {
        return Err(Error::Dataset(format!(
            "{}: atlas was trained on a different logo region",
            path.display()
        )));
    }
    Ok((header, atlas))
}

/// Region face colors as a row-major grid of `cell × cell` squares, as
/// `(width, height, rgb8)`.
pub fn snapshot_image(atlas: &TextureAtlas, region: &LogoRegion, cell: usize) -> (u32, u32, Vec<u8>) {
    let n = region.len().max(1);
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let (w, h) = (cols * cell, rows * cell);
    let mut rgb = vec![0u8; 3 * w * h];
    for (i, &f) in region.face_ids().iter().enumerate() {
        let c = atlas.get(f as usize).map(|v| (v * 255.0).round() as u8);
        let (r, q) = (i / cols, i % cols);
        for y in r * cell..(r + 1) * cell {
            for x in q * cell..(q + 1) * cell {
                rgb[3 * (y * w + x)..3 * (y * w + x) + 3].copy_from_slice(&c);
            }
        }
    }
    (w as u32, h as u32, rgb)
}

/// Several snapshots side by side, separated by one-cell gaps.
pub fn snapshot_strip(atlases: &[&TextureAtlas], region: &LogoRegion, cell: usize) -> (u32, u32, Vec<u8>) {
    let tiles: Vec<_> = atlases.iter().map(|a| snapshot_image(a, region, cell)).collect();
    let Some(&(tw, th, _)) = tiles.first() else {
        return (0, 0, Vec::new());
    };
    let (tw, th) = (tw as usize, th as usize);
    let gap = cell;
    let w = tiles.len() * tw + (tiles.len() - 1) * gap;
    let mut rgb = vec![255u8; 3 * w * th];
    for (k, (_, _, tile)) in tiles.iter().enumerate() {
        let x0 = k * (tw + gap);
        for y in 0..th {
            let dst = 3 * (y * w + x0);
            rgb[dst..dst + 3 * tw].copy_from_slice(&tile[3 * y * tw..3 * (y + 1) * tw]);
        }
    }
    (w as u32, th as u32, rgb)
}
