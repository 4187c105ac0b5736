//! Little-endian byte cursor and builder shared by the container formats.

use crate::error::FormatError;

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.bytes(magic);
        w.u16(version);
        w
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    /// Appends the CRC32 of everything written so far.
    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    /// Checks magic and version, leaving the cursor after the version field.
    pub fn open(buf: &'a [u8], magic: &[u8; 4], version: u16) -> Result<Self, FormatError> {
        if buf.len() < 4 || &buf[..4] != magic {
            return Err(FormatError::BadMagic {
                expected: *magic,
                found: buf[..buf.len().min(4)].to_vec(),
            });
        }
        let mut r = Self { buf, pos: 4 };
        let found = r.u16()?;
        if found != version {
            return Err(FormatError::UnsupportedVersion(found));
        }
        Ok(r)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.buf.len() => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            _ => Err(FormatError::Truncated {
                needed: self.pos.saturating_add(n),
                available: self.buf.len(),
            }),
        }
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().expect("slice of length N"))
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        self.array().map(u16::from_le_bytes)
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        self.array().map(u32::from_le_bytes)
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        self.array().map(u64::from_le_bytes)
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        self.array().map(f32::from_le_bytes)
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        self.array().map(f64::from_le_bytes)
    }

    pub fn bool(&mut self) -> Result<bool, FormatError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(FormatError::Malformed(format!("flag byte {other} is not 0 or 1"))),
        }
    }

    /// `count` little-endian f64 values, checked against the remaining bytes
    /// before allocating.
    pub fn f64s(&mut self, count: usize) -> Result<Vec<f64>, FormatError> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn f32s(&mut self, count: usize) -> Result<Vec<f32>, FormatError> {
        let bytes = self.take(count.checked_mul(4).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }

    /// Requires exactly the trailing CRC32 to remain and verifies it against
    /// everything before it.
    pub fn finish(mut self) -> Result<(), FormatError> {
        match self.remaining() {
            4 => {}
            r if r < 4 => {
                return Err(FormatError::Truncated {
                    needed: self.pos + 4,
                    available: self.buf.len(),
                })
            }
            r => return Err(FormatError::TrailingBytes(r - 4)),
        }
        let body = self.pos;
        let stored = self.u32()?;
        let computed = crc32fast::hash(&self.buf[..body]);
        if stored != computed {
            return Err(FormatError::CrcMismatch { stored, computed });
        }
        Ok(())
    }
}

pub(crate) fn overflow() -> FormatError {
    FormatError::Malformed("size field overflows".into())
}

/// Product of dimensions, or a format error on overflow.
pub(crate) fn element_count(dims: &[usize]) -> Result<usize, FormatError> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(overflow)
}

pub(crate) fn dim_u32(value: usize) -> Result<u32, FormatError> {
    u32::try_from(value)
        .map_err(|_| FormatError::Malformed(format!("dimension {value} does not fit in 32 bits")))
}
