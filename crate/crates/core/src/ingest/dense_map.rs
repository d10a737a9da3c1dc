//! Binary dense η maps: `"OMID"`, then little-endian u32 version, width and
//! height, then `width * height` f32 values in row-major order. NaN is
//! no-data.

use super::IngestError;
use crate::types::DenseMiDMap;

pub const DENSE_MAP_MAGIC: &[u8; 4] = b"OMID";
pub const DENSE_MAP_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, IngestError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4-byte slice")))
        .ok_or_else(|| IngestError::MalformedBinary {
            offset,
            reason: "truncated header".into(),
        })
}

/// The binary header has no frame index, so the caller supplies it.
pub fn parse_dense_map(bytes: &[u8], frame_index: u32) -> Result<DenseMiDMap, IngestError> {
    if bytes.get(..4) != Some(DENSE_MAP_MAGIC.as_slice()) {
        return Err(IngestError::MalformedBinary {
            offset: 0,
            reason: "missing OMID magic".into(),
        });
    }
    let version = read_u32(bytes, 4)?;
    if version != DENSE_MAP_VERSION {
        return Err(IngestError::MalformedBinary {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let width = read_u32(bytes, 8)?;
    let height = read_u32(bytes, 12)?;
    let expected = u128::from(width) * u128::from(height) * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u128 != expected {
        return Err(IngestError::MalformedBinary {
            offset: HEADER_LEN,
            reason: format!(
                "{} payload bytes for a {width}x{height} grid (expected {})",
                payload.len(),
                expected
            ),
        });
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_nan() && !(v.is_finite() && **v > 0.0))
    {
        return Err(IngestError::MalformedBinary {
            offset: HEADER_LEN + 4 * i,
            reason: format!("value {v} is neither > 0 nor NaN"),
        });
    }
    DenseMiDMap::new(frame_index, width, height, values).map_err(|e| IngestError::MalformedBinary {
        offset: HEADER_LEN,
        reason: e.to_string(),
    })
}

pub fn write_dense_map(map: &DenseMiDMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * map.values().len());
    out.extend_from_slice(DENSE_MAP_MAGIC);
    out.extend_from_slice(&DENSE_MAP_VERSION.to_le_bytes());
    out.extend_from_slice(&map.width().to_le_bytes());
    out.extend_from_slice(&map.height().to_le_bytes());
    for v in map.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_by_two_lookup() {
        let values: Vec<f32> = (0..8).map(|i| 0.9 + 0.01 * i as f32).collect();
        let map = DenseMiDMap::new(7, 4, 2, values.clone()).unwrap();
        let back = parse_dense_map(&write_dense_map(&map), 7).unwrap();
        for row in 0..2 {
            for col in 0..4 {
                assert_eq!(
                    back.get(col, row).unwrap().to_bits(),
                    values[(row * 4 + col) as usize].to_bits()
                );
            }
        }
    }

    #[test]
    fn header_layout() {
        let map = DenseMiDMap::new(0, 1, 1, vec![f32::NAN]).unwrap();
        let bytes = write_dense_map(&map);
        assert_eq!(&bytes[..4], b"OMID");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes.len(), 20);
        assert!(parse_dense_map(&bytes, 0).unwrap().get(0, 0).unwrap().is_nan());
    }

    #[test]
    fn malformed_maps() {
        let map = DenseMiDMap::new(0, 2, 1, vec![1.0, 1.0]).unwrap();
        let good = write_dense_map(&map);
        assert!(parse_dense_map(&good[..10], 0).is_err());
        assert!(parse_dense_map(&good[..good.len() - 1], 0).is_err());
        assert!(parse_dense_map(b"PNG\0", 0).is_err());
        let mut v2 = good.clone();
        v2[4] = 2;
        assert!(parse_dense_map(&v2, 0).is_err());
        let mut neg = good.clone();
        neg[20..24].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert_eq!(
            parse_dense_map(&neg, 0).unwrap_err(),
            IngestError::MalformedBinary {
                offset: 20,
                reason: "value -1 is neither > 0 nor NaN".into()
            }
        );
        let mut huge = good.clone();
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(parse_dense_map(&huge, 0).is_err());
    }
}
