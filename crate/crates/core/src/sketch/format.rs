//! On-disk blob layout, all integers little-endian:
//!
//! ```text
//! "ISKB" | algo u8 | semantics u8 | k u16 | epsilon f64 | delta f64 | n u64 | d u32
//!        | seed u64 | payload bit length u64 | payload, LSB-first, zero padded
//! ```
//!
//! For median-boost blobs the high nibble of the algo byte holds the base algorithm.

use std::io::{Read, Write};

use super::{size, Algo, Result, Semantics, SketchBlob, SketchError, SketchParams};
use crate::bits::BitString;

pub const BLOB_MAGIC: &[u8; 4] = b"ISKB";
pub const BLOB_HEADER_BYTES: usize = 4 + 1 + 1 + 2 + 8 + 8 + 8 + 4 + 8 + 8;

pub fn write_blob<W: Write>(blob: &SketchBlob, mut w: W) -> Result<()> {
    let p = &blob.params;
    p.validate()?;
    let algo_byte = match (blob.algo, blob.base) {
        (Algo::MedianBoost, Some(base)) => Algo::MedianBoost as u8 | (base as u8) << 4,
        (Algo::MedianBoost, None) => {
            return Err(SketchError::Format(
                "median-boost blob without a base algorithm".into(),
            ))
        }
        (algo, _) => algo as u8,
    };
    let mut header = Vec::with_capacity(BLOB_HEADER_BYTES);
    header.extend_from_slice(BLOB_MAGIC);
    header.push(algo_byte);
    header.push(blob.semantics as u8);
    header.extend_from_slice(&(p.k as u16).to_le_bytes());
    header.extend_from_slice(&p.epsilon.to_le_bytes());
    header.extend_from_slice(&p.delta.to_le_bytes());
    header.extend_from_slice(&p.n.to_le_bytes());
    header.extend_from_slice(&(p.d as u32).to_le_bytes());
    header.extend_from_slice(&blob.seed.to_le_bytes());
    header.extend_from_slice(&(blob.payload.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    w.write_all(&blob.payload.to_bytes())?;
    Ok(())
}

fn take<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(SketchError::Format("truncated header".into()));
    }
    let (head, rest) = buf.split_at(n);
    *buf = rest;
    Ok(head)
}

fn arr<const N: usize>(buf: &mut &[u8]) -> Result<[u8; N]> {
    Ok(take(buf, N)?.try_into().expect("length checked"))
}

/// Parse and validate a blob, including the closed-form payload length.
pub fn read_blob<R: Read>(mut r: R) -> Result<SketchBlob> {
    let mut header = [0u8; BLOB_HEADER_BYTES];
    r.read_exact(&mut header)
        .map_err(|_| SketchError::Format("truncated header".into()))?;
    let mut buf: &[u8] = &header;
    if take(&mut buf, 4)? != BLOB_MAGIC {
        return Err(SketchError::Format("bad magic, expected ISKB".into()));
    }
    let [algo_byte] = arr::<1>(&mut buf)?;
    let [sem_byte] = arr::<1>(&mut buf)?;
    let algo = Algo::from_u8(algo_byte & 0x0f)
        .ok_or_else(|| SketchError::Format(format!("unknown algorithm tag {algo_byte}")))?;
    let base = if algo == Algo::MedianBoost {
        match Algo::from_u8(algo_byte >> 4) {
            Some(b) if b != Algo::MedianBoost => Some(b),
            _ => {
                return Err(SketchError::Format(format!(
                    "bad base algorithm in tag {algo_byte:#04x}"
                )))
            }
        }
    } else {
        None
    };
    let semantics = Semantics::from_u8(sem_byte)
        .ok_or_else(|| SketchError::Format(format!("unknown semantics tag {sem_byte}")))?;
    let k = u16::from_le_bytes(arr(&mut buf)?) as usize;
    let epsilon = f64::from_le_bytes(arr(&mut buf)?);
    let delta = f64::from_le_bytes(arr(&mut buf)?);
    let n = u64::from_le_bytes(arr(&mut buf)?);
    let d = u32::from_le_bytes(arr(&mut buf)?) as usize;
    let seed = u64::from_le_bytes(arr(&mut buf)?);
    let len = u64::from_le_bytes(arr(&mut buf)?);
    let params = SketchParams::new(k, epsilon, delta, n, d)?;

    match base {
        Some(b) => {
            let sub = size::payload_bits(b, Semantics::ForEachEstimator, &params)?;
            if sub == 0 || !(len as u128).is_multiple_of(sub) {
                return Err(SketchError::Format(format!(
                    "boosted payload of {len} bits is not a multiple of {sub}"
                )));
            }
        }
        None => {
            let expected = size::payload_bits(algo, semantics, &params)?;
            if len as u128 != expected {
                return Err(SketchError::Format(format!(
                    "{algo} payload declares {len} bits, expected {expected}"
                )));
            }
        }
    }

    let nbytes = len.div_ceil(8) as usize;
    let mut bytes = vec![0u8; nbytes];
    r.read_exact(&mut bytes)
        .map_err(|_| SketchError::Format(format!("payload shorter than {nbytes} bytes")))?;
    let payload = BitString::from_bytes(&bytes, len as usize)
        .ok_or_else(|| SketchError::Format("payload too short".into()))?;
    Ok(SketchBlob {
        algo,
        base,
        semantics,
        params,
        seed,
        payload,
    })
}
