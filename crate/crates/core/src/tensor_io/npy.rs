//! Minimal reader and writer for the numpy `.npy` format.
//!
//! Only what embedding dumps need is supported: little-endian `f4`/`f8`
//! payloads in C order, header versions 1.0, 2.0 and 3.0. Values are always
//! returned widened to `f64`.

use std::io::{Read, Write};

use crate::error::{DseError, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub data: Vec<f64>,
}

#[derive(Debug)]
struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

pub fn read<R: Read>(reader: &mut R) -> Result<NpyArray> {
    let mut magic = [0u8; 6];
    reader
        .read_exact(&mut magic)
        .map_err(|_| DseError::Format("file too short for npy magic".into()))?;
    if &magic != MAGIC {
        return Err(DseError::Format("missing \\x93NUMPY magic".into()));
    }
    let mut version = [0u8; 2];
    read_exact(reader, &mut version)?;
    let header_len = match version[0] {
        1 => {
            let mut len = [0u8; 2];
            read_exact(reader, &mut len)?;
            u16::from_le_bytes(len) as usize
        }
        2 | 3 => {
            let mut len = [0u8; 4];
            read_exact(reader, &mut len)?;
            u32::from_le_bytes(len) as usize
        }
        v => return Err(DseError::Format(format!("unsupported npy version {v}.{}", version[1]))),
    };
    let mut raw = vec![0u8; header_len];
    read_exact(reader, &mut raw)?;
    let text = std::str::from_utf8(&raw)
        .map_err(|_| DseError::Format("npy header is not valid text".into()))?;
    let header = parse_header(text)?;

    if header.fortran_order {
        return Err(DseError::Format("fortran-order arrays are not supported".into()));
    }
    let dtype = match header.descr.as_str() {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        other => {
            return Err(DseError::Format(format!(
                "unsupported dtype {other:?} (expected '<f4' or '<f8')"
            )))
        }
    };

    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| DseError::Format("shape overflows".into()))?;
    let mut bytes = vec![0u8; count * dtype.size()];
    reader
        .read_exact(&mut bytes)
        .map_err(|_| DseError::Format(format!("payload shorter than shape {:?}", header.shape)))?;
    let data = match dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    };
    Ok(NpyArray {
        shape: header.shape,
        dtype,
        data,
    })
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| DseError::Format("truncated npy header".into()))
}

/// Writes `data` (C order) with the given shape. Uses a version 1.0 header
/// unless the header does not fit in 65535 bytes.
pub fn write<W: Write>(writer: &mut W, shape: &[usize], dtype: Dtype, data: &[f64]) -> std::io::Result<()> {
    let expected: usize = shape.iter().product();
    assert_eq!(expected, data.len(), "shape {shape:?} does not match {} values", data.len());

    let shape_str = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        dtype.descr(),
        shape_str
    );

    // magic + version + length field + dict + padding + '\n' is a multiple of 64
    let mut version = 1u8;
    let mut prefix = MAGIC.len() + 2 + 2;
    if dict.len() + 1 + prefix > u16::MAX as usize {
        version = 2;
        prefix = MAGIC.len() + 2 + 4;
    }
    let unpadded = prefix + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = dict.len() + padding + 1;

    writer.write_all(MAGIC)?;
    writer.write_all(&[version, 0])?;
    if version == 1 {
        writer.write_all(&(header_len as u16).to_le_bytes())?;
    } else {
        writer.write_all(&(header_len as u32).to_le_bytes())?;
    }
    writer.write_all(dict.as_bytes())?;
    writer.write_all(&vec![b' '; padding])?;
    writer.write_all(b"\n")?;

    match dtype {
        Dtype::F32 => {
            for &v in data {
                writer.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Dtype::F64 => {
            for &v in data {
                writer.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn parse_header(text: &str) -> Result<Header> {
    let text = text.trim_end_matches(['\n', ' ', '\0']).trim();
    let body = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| DseError::Format(format!("npy header is not a dict: {text:?}")))?;

    let mut descr = None;
    let mut fortran_order = None;
    let mut shape = None;

    let mut rest = body.trim();
    while !rest.is_empty() {
        let (key, after) = parse_quoted(rest)?;
        let after = after
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| DseError::Format(format!("expected ':' after key {key:?}")))?
            .trim_start();
        let remaining = match key.as_str() {
            "descr" => {
                let (value, r) = parse_quoted(after)?;
                descr = Some(value);
                r
            }
            "fortran_order" => {
                if let Some(r) = after.strip_prefix("False") {
                    fortran_order = Some(false);
                    r
                } else if let Some(r) = after.strip_prefix("True") {
                    fortran_order = Some(true);
                    r
                } else {
                    return Err(DseError::Format("fortran_order must be True or False".into()));
                }
            }
            "shape" => {
                let (value, r) = parse_shape(after)?;
                shape = Some(value);
                r
            }
            other => return Err(DseError::Format(format!("unexpected header key {other:?}"))),
        };
        rest = remaining.trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }

    Ok(Header {
        descr: descr.ok_or_else(|| DseError::Format("header lacks 'descr'".into()))?,
        fortran_order: fortran_order
            .ok_or_else(|| DseError::Format("header lacks 'fortran_order'".into()))?,
        shape: shape.ok_or_else(|| DseError::Format("header lacks 'shape'".into()))?,
    })
}

fn parse_quoted(s: &str) -> Result<(String, &str)> {
    let quote = s
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| DseError::Format(format!("expected quoted string at {s:?}")))?;
    let inner = &s[1..];
    let end = inner
        .find(quote)
        .ok_or_else(|| DseError::Format("unterminated string in npy header".into()))?;
    Ok((inner[..end].to_string(), &inner[end + 1..]))
}

fn parse_shape(s: &str) -> Result<(Vec<usize>, &str)> {
    let inner = s
        .strip_prefix('(')
        .ok_or_else(|| DseError::Format("shape must be a tuple".into()))?;
    let end = inner
        .find(')')
        .ok_or_else(|| DseError::Format("unterminated shape tuple".into()))?;
    let dims = inner[..end]
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim_end_matches('L')
                .parse::<usize>()
                .map_err(|_| DseError::Format(format!("bad shape entry {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dims, &inner[end + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_npy(version: u8, dict: &str, payload: &[u8]) -> Vec<u8> {
        let len_field = if version == 1 { 2 } else { 4 };
        let pad = (64 - (MAGIC.len() + 2 + len_field + dict.len() + 1) % 64) % 64;
        let header_len = dict.len() + pad + 1;
        let mut bytes = MAGIC.to_vec();
        bytes.extend([version, 0]);
        if version == 1 {
            bytes.extend((header_len as u16).to_le_bytes());
        } else {
            bytes.extend((header_len as u32).to_le_bytes());
        }
        bytes.extend(dict.as_bytes());
        bytes.extend(std::iter::repeat_n(b' ', pad));
        bytes.push(b'\n');
        bytes.extend(payload);
        bytes
    }

    #[test]
    fn header_is_64_byte_aligned() {
        let mut buf = Vec::new();
        write(&mut buf, &[2, 4, 8], Dtype::F32, &vec![0.5; 64]).unwrap();
        let header_len = u16::from_le_bytes([buf[8], buf[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(buf[10 + header_len - 1], b'\n');
        assert_eq!(buf.len(), 10 + header_len + 64 * 4);
    }

    #[test]
    fn parses_numpy_written_header() {
        // numpy's own rendering of np.arange(6.0).reshape(2, 3)
        let payload: Vec<u8> = (0..6).flat_map(|i| (i as f64).to_le_bytes()).collect();
        let bytes = raw_npy(
            1,
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }",
            &payload,
        );
        let arr = read(&mut bytes.as_slice()).unwrap();
        assert_eq!(arr.shape, vec![2, 3]);
        assert_eq!(arr.dtype, Dtype::F64);
        assert_eq!(arr.data, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn reads_version_two_header() {
        let payload: Vec<u8> = [1.5f32, -2.0, 3.25].iter().flat_map(|v| v.to_le_bytes()).collect();
        let bytes = raw_npy(2, "{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }", &payload);
        let arr = read(&mut bytes.as_slice()).unwrap();
        assert_eq!(arr.shape, vec![3]);
        assert_eq!(arr.data, vec![1.5, -2.0, 3.25]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(read(&mut &b"not an npy file"[..]), Err(DseError::Format(_))));

        let payload = [0u8; 16];
        for dict in [
            "{'descr': '>f8', 'fortran_order': False, 'shape': (2,), }",
            "{'descr': '<i8', 'fortran_order': False, 'shape': (2,), }",
            "{'descr': '<f8', 'fortran_order': True, 'shape': (2,), }",
            "{'descr': '<f8', 'shape': (2,), }",
            "['descr', '<f8']",
        ] {
            let bytes = raw_npy(1, dict, &payload);
            assert!(
                matches!(read(&mut bytes.as_slice()), Err(DseError::Format(_))),
                "accepted {dict}"
            );
        }

        let truncated = raw_npy(1, "{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }", &[0u8; 13]);
        assert!(matches!(read(&mut truncated.as_slice()), Err(DseError::Format(_))));
    }
}
