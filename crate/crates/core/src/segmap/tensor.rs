//! Raw class-field tensors.
//!
//! Layout (all little-endian):
//!
//! | offset | size      | content                         |
//! |--------|-----------|---------------------------------|
//! | 0      | 4         | magic `SPSG`                    |
//! | 4      | 1         | version, always 1               |
//! | 5      | 12        | `u32` C, H, W                   |
//! | 17     | 8·C·H·W   | `f64` values in (c, row, col)   |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{ClassField, FieldKind};

pub const TENSOR_MAGIC: &[u8; 4] = b"SPSG";
pub const TENSOR_VERSION: u8 = 1;
pub const TENSOR_HEADER_LEN: usize = 17;

pub fn encode_tensor(field: &ClassField) -> Result<Vec<u8>> {
    let (c, h, w) = field.dims();
    let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.push(TENSOR_VERSION);
    for dim in [c, h, w] {
        let dim = u32::try_from(dim).map_err(|_| Error::InvalidInput(format!("dimension {dim} exceeds u32")))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decode a tensor as a [`FieldKind::Logit`] field; use
/// [`ClassField::into_kind`] to assert a stronger invariant.
pub fn decode_tensor(bytes: &[u8]) -> Result<ClassField> {
    if bytes.len() < TENSOR_HEADER_LEN {
        return Err(Error::Format(format!("tensor header truncated at {} bytes", bytes.len())));
    }
    if &bytes[..4] != TENSOR_MAGIC {
        return Err(Error::Format("bad tensor magic".into()));
    }
    if bytes[4] != TENSOR_VERSION {
        return Err(Error::Format(format!("unsupported tensor version {}", bytes[4])));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[5 + 4 * i..9 + 4 * i].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    let count = c
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .ok_or_else(|| Error::Format("tensor dimensions overflow".into()))?;
    let payload = &bytes[TENSOR_HEADER_LEN..];
    if payload.len() != count * 8 {
        return Err(Error::Format(format!(
            "tensor payload is {} bytes, expected {}",
            payload.len(),
            count * 8
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ClassField::new(h, w, c, FieldKind::Logit, values)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<ClassField> {
    decode_tensor(&fs::read(path)?)
}

pub fn save_tensor(field: &ClassField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tensor(field)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field() -> ClassField {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        ClassField::from_fn(3, 4, 2, FieldKind::Logit, |_, _, _| rng.gen_range(-5.0..5.0)).unwrap()
    }

    #[test]
    fn header_layout() {
        let f = random_field();
        let bytes = encode_tensor(&f).unwrap();
        assert_eq!(bytes.len(), 17 + 2 * 3 * 4 * 8);
        assert_eq!(&bytes[..5], b"SPSG\x01");
        assert_eq!(&bytes[5..17], &[2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0]);
        assert_eq!(&bytes[17..25], &f.get(0, 0, 0).to_le_bytes());
    }

    #[test]
    fn round_trip_exact() {
        let f = random_field();
        assert_eq!(decode_tensor(&encode_tensor(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn decode_errors() {
        let bytes = encode_tensor(&random_field()).unwrap();
        assert!(matches!(decode_tensor(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(decode_tensor(&bytes[..10]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_tensor(&bad), Err(Error::Format(_))));
        let mut bad = bytes;
        bad[4] = 2;
        assert!(matches!(decode_tensor(&bad), Err(Error::Format(_))));
    }
}
