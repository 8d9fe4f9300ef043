//! The DVFT dense tensor format.
//!
//! ```text
//! offset  size       field
//! 0       4          magic, ASCII "DVFT"
//! 4       2          version, u16 LE (currently 1)
//! 6       1          dtype code: 0 = f32 LE, 1 = f64 LE
//! 7       1          ndim, 1..=4
//! 8       4          header length in bytes, u32 LE (= 12 + 8 * ndim)
//! 12      8 * ndim   dims, u64 LE each, every dim >= 1
//! ...                payload, row-major, product(dims) * dtype size bytes
//! ```
//!
//! Nothing follows the payload; trailing bytes are rejected.

use std::fs;
use std::path::Path;

use ndarray::{ArrayD, ArrayViewD, IxDyn};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DVFT";
pub const VERSION: u16 = 1;
pub const MAX_NDIM: usize = 4;
const PREAMBLE_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::Format(format!("unsupported dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorHeader {
    pub version: u16,
    pub dtype: Dtype,
    pub dims: Vec<usize>,
}

impl TensorHeader {
    pub fn new(dtype: Dtype, dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(TensorHeader {
            version: VERSION,
            dtype,
            dims: dims.to_vec(),
        })
    }

    pub fn header_len(&self) -> usize {
        PREAMBLE_LEN + 8 * self.dims.len()
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn payload_len(&self) -> usize {
        self.element_count() * self.dtype.size()
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.push(self.dtype.code());
        out.push(self.dims.len() as u8);
        out.extend_from_slice(&(self.header_len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }

    /// Parses and validates the header at the start of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < PREAMBLE_LEN {
            return Err(Error::Format("truncated header".into()));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dtype = Dtype::from_code(bytes[6])?;
        let ndim = bytes[7] as usize;
        if ndim == 0 || ndim > MAX_NDIM {
            return Err(Error::Format(format!("ndim out of range: {ndim}")));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if header_len != PREAMBLE_LEN + 8 * ndim {
            return Err(Error::Format(format!(
                "header length {header_len} inconsistent with ndim {ndim}"
            )));
        }
        if bytes.len() < header_len {
            return Err(Error::Format("truncated header".into()));
        }
        let mut dims = Vec::with_capacity(ndim);
        for k in 0..ndim {
            let at = PREAMBLE_LEN + 8 * k;
            let d = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            let d = usize::try_from(d)
                .map_err(|_| Error::Format(format!("dimension {d} exceeds address space")))?;
            dims.push(d);
        }
        check_dims(&dims)?;
        dims.iter()
            .try_fold(dtype.size(), |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        Ok(TensorHeader {
            version,
            dtype,
            dims,
        })
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > MAX_NDIM {
        return Err(Error::Format(format!("ndim out of range: {}", dims.len())));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::Format(format!("dimension {pos} is zero")));
    }
    Ok(())
}

pub fn encode_tensor(tensor: ArrayViewD<'_, f64>, dtype: Dtype) -> Result<Vec<u8>> {
    let header = TensorHeader::new(dtype, tensor.shape())?;
    let mut out = Vec::with_capacity(header.header_len() + header.payload_len());
    header.encode_into(&mut out);
    // `iter` walks in logical row-major order regardless of memory layout.
    match dtype {
        Dtype::F32 => tensor
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        Dtype::F64 => tensor
            .iter()
            .for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<(TensorHeader, ArrayD<f64>)> {
    let header = TensorHeader::decode(bytes)?;
    let payload = &bytes[header.header_len()..];
    let expected = header.payload_len();
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "trailing bytes: expected {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let values: Vec<f64> = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    let array = ArrayD::from_shape_vec(IxDyn(&header.dims), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((header, array))
}

pub fn write_tensor(
    path: impl AsRef<Path>,
    tensor: ArrayViewD<'_, f64>,
    dtype: Dtype,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_tensor(tensor, dtype)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<ArrayD<f64>> {
    read_tensor_with_header(path).map(|(_, a)| a)
}

/// Reads only the header of a tensor file.
pub fn read_header(path: impl AsRef<Path>) -> Result<TensorHeader> {
    use std::io::Read;
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = vec![0u8; PREAMBLE_LEN];
    file.read_exact(&mut bytes)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    let total = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if total > PREAMBLE_LEN && total <= PREAMBLE_LEN + 8 * MAX_NDIM {
        bytes.resize(total, 0);
        file.read_exact(&mut bytes[PREAMBLE_LEN..])
            .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    }
    TensorHeader::decode(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_tensor_with_header(path: impl AsRef<Path>) -> Result<(TensorHeader, ArrayD<f64>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, ArrayD};
    use proptest::prelude::*;

    #[test]
    fn identity_f32_layout() {
        let eye = arr2(&[[1.0, 0.0], [0.0, 1.0]]).into_dyn();
        let bytes = encode_tensor(eye.view(), Dtype::F32).unwrap();
        assert_eq!(bytes.len(), 44);
        assert_eq!(&bytes[..4], b"DVFT");
        let payload: Vec<f32> = bytes[28..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(payload, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_dims_rejected() {
        let scalar = ArrayD::<f64>::zeros(IxDyn(&[]));
        let err = encode_tensor(scalar.view(), Dtype::F64).unwrap_err();
        assert!(err.to_string().contains("ndim out of range"), "{err}");
        let five = ArrayD::<f64>::zeros(IxDyn(&[1, 1, 1, 1, 1]));
        assert!(encode_tensor(five.view(), Dtype::F64).is_err());
    }

    #[test]
    fn bad_magic() {
        let t = arr2(&[[1.0]]).into_dyn();
        let mut bytes = encode_tensor(t.view(), Dtype::F64).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        let err = decode_tensor(&bytes).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn truncated_payload() {
        let t = arr2(&[[1.0, 2.0], [3.0, 4.0]]).into_dyn();
        let bytes = encode_tensor(t.view(), Dtype::F32).unwrap();
        let err = decode_tensor(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(err.to_string().contains("truncated payload"));
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_tensor(&long)
            .unwrap_err()
            .to_string()
            .contains("trailing"));
    }

    #[test]
    fn unsupported_version_and_dtype() {
        let t = arr2(&[[1.0]]).into_dyn();
        let good = encode_tensor(t.view(), Dtype::F64).unwrap();
        let mut v = good.clone();
        v[4] = 9;
        assert!(decode_tensor(&v)
            .unwrap_err()
            .to_string()
            .contains("version"));
        let mut d = good.clone();
        d[6] = 7;
        assert!(decode_tensor(&d).unwrap_err().to_string().contains("dtype"));
        let mut z = good;
        z[12..20].copy_from_slice(&0u64.to_le_bytes());
        assert!(decode_tensor(&z).is_err());
    }

    #[test]
    fn read_back_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dvft");
        let t = ArrayD::from_shape_fn(IxDyn(&[3, 4, 5]), |ix| {
            (ix[0] as f64 * 0.37 - ix[1] as f64).sin() * 1e3 + ix[2] as f64 * 1e-9
        });
        write_tensor(&path, t.view(), Dtype::F64).unwrap();
        let raw = std::fs::read(&path).unwrap();
        let back = read_tensor(&path).unwrap();
        let back_bytes = encode_tensor(back.view(), Dtype::F64).unwrap();
        assert_eq!(raw, back_bytes);
        assert_eq!(read_header(&path).unwrap().dims, vec![3, 4, 5]);
        assert!(read_tensor(dir.path().join("missing.dvft")).is_err());
    }

    fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..6, 1..=4)
    }

    proptest! {
        #[test]
        fn roundtrip_f64_bit_exact(dims in dims_strategy(), seed in any::<u64>()) {
            let n: usize = dims.iter().product();
            let vals: Vec<f64> = (0..n as u64)
                .map(|i| f64::from_bits(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i.wrapping_mul(0xD1B5_4A32_D192_ED03)) & 0x7FEF_FFFF_FFFF_FFFF))
                .collect();
            let t = ArrayD::from_shape_vec(IxDyn(&dims), vals).unwrap();
            let bytes = encode_tensor(t.view(), Dtype::F64).unwrap();
            let (h, back) = decode_tensor(&bytes).unwrap();
            prop_assert_eq!(bytes.len(), h.header_len() + n * 8);
            prop_assert_eq!(&h.dims, &dims);
            for (a, b) in t.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn header_arithmetic_matches_file_size(dims in dims_strategy(), f32_dtype in any::<bool>()) {
            let dtype = if f32_dtype { Dtype::F32 } else { Dtype::F64 };
            let t = ArrayD::<f64>::ones(IxDyn(&dims));
            let bytes = encode_tensor(t.view(), dtype).unwrap();
            let h = TensorHeader::decode(&bytes).unwrap();
            prop_assert_eq!(bytes.len(), 12 + 8 * dims.len() + h.element_count() * dtype.size());
            // Any shortening of the file must be detected.
            prop_assert!(decode_tensor(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}
