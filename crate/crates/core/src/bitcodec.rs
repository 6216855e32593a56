//! Unaligned PER (ITU-T X.691) bit primitives.
//!
//! Only the subset the message profile needs is provided: constrained whole
//! numbers, the unfragmented general length determinant, SEQUENCE preamble
//! bitmaps, extension bits, and fixed-size bit/octet strings. Multi-bit
//! fields are written MSB first.

use thiserror::Error;

/// Every failure the UPER layer and the message codec can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("RangeViolation: {value} outside [{lo}, {hi}]")]
    RangeViolation { value: i128, lo: i64, hi: i64 },
    #[error("Truncated: needed {needed} bits, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("Unsupported: {0}")]
    Unsupported(&'static str),
    #[error("UnsupportedExtension: extension bit set at bit {0}")]
    UnsupportedExtension(usize),
    #[error("PaddingNonZero: {0} trailing bits are not a zero pad")]
    PaddingNonZero(usize),
    #[error("UnknownMessageId: {0}")]
    UnknownMessageId(u8),
    #[error("InvalidMessage: {}", format_violations(.0))]
    InvalidMessage(Vec<crate::its_types::Violation>),
}

fn format_violations(v: &[crate::its_types::Violation]) -> String {
    v.iter()
        .map(|v| format!("{}: {}", v.path, v.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

impl CodecError {
    /// Short taxonomy name, e.g. `"Truncated"`.
    pub fn kind(&self) -> &'static str {
        match self {
            CodecError::RangeViolation { .. } => "RangeViolation",
            CodecError::Truncated { .. } => "Truncated",
            CodecError::Unsupported(_) => "Unsupported",
            CodecError::UnsupportedExtension(_) => "UnsupportedExtension",
            CodecError::PaddingNonZero(_) => "PaddingNonZero",
            CodecError::UnknownMessageId(_) => "UnknownMessageId",
            CodecError::InvalidMessage(_) => "InvalidMessage",
        }
    }
}

pub type CodecResult<T> = Result<T, CodecError>;

/// Number of bits a constrained whole number in `[lo, hi]` occupies.
pub fn constrained_width(lo: i64, hi: i64) -> u32 {
    let span = (hi as i128 - lo as i128) as u64;
    64 - span.leading_zeros()
}

/// Growable bit sequence with a read cursor.
///
/// Writing appends at the end; reading consumes from the cursor and never
/// mutates the stored bits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitBuffer {
    bytes: Vec<u8>,
    len: usize,
    cursor: usize,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_bytes(n: usize) -> Self {
        BitBuffer {
            bytes: Vec::with_capacity(n),
            len: 0,
            cursor: 0,
        }
    }

    /// Buffer holding all bits of `bytes`, cursor at 0.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        BitBuffer {
            bytes: bytes.to_vec(),
            len: bytes.len() * 8,
            cursor: 0,
        }
    }

    /// Parses a string of `'0'`/`'1'` characters; any other character is ignored.
    pub fn from_bit_str(s: &str) -> Self {
        let mut buf = BitBuffer::new();
        for c in s.chars() {
            match c {
                '0' => buf.push_bit(false),
                '1' => buf.push_bit(true),
                _ => {}
            }
        }
        buf
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.len - self.cursor
    }

    /// All bits as a `'0'`/`'1'` string.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.bit_at(i) { '1' } else { '0' })
            .collect()
    }

    /// The bits packed MSB first, final partial octet zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bytes.clone()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    fn bit_at(&self, i: usize) -> bool {
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let idx = self.len / 8;
            self.bytes[idx] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        let mut left = n;
        while left > 0 {
            let used = (self.len % 8) as u32;
            if used == 0 {
                self.bytes.push(0);
            }
            let free = 8 - used;
            let take = free.min(left);
            let shift = left - take;
            let chunk = ((value >> shift) & ((1u64 << take) - 1)) as u8;
            let idx = self.len / 8;
            self.bytes[idx] |= chunk << (free - take);
            self.len += take as usize;
            left -= take;
        }
    }

    fn ensure(&self, n: usize) -> CodecResult<()> {
        if self.remaining() < n {
            Err(CodecError::Truncated {
                needed: n,
                available: self.remaining(),
            })
        } else {
            Ok(())
        }
    }

    pub fn read_bit(&mut self) -> CodecResult<bool> {
        self.ensure(1)?;
        let bit = self.bit_at(self.cursor);
        self.cursor += 1;
        Ok(bit)
    }

    /// Reads `n` bits (at most 64) as an unsigned big-endian value.
    pub fn read_bits(&mut self, n: u32) -> CodecResult<u64> {
        debug_assert!(n <= 64);
        self.ensure(n as usize)?;
        let mut left = n;
        let mut out = 0u64;
        while left > 0 {
            let used = (self.cursor % 8) as u32;
            let avail = 8 - used;
            let take = avail.min(left);
            let byte = self.bytes[self.cursor / 8] as u64;
            let chunk = (byte >> (avail - take)) & ((1u64 << take) - 1);
            out = (out << take) | chunk;
            self.cursor += take as usize;
            left -= take;
        }
        Ok(out)
    }

    pub fn write_constrained_int(&mut self, value: i64, lo: i64, hi: i64) -> CodecResult<()> {
        if lo > hi || value < lo || value > hi {
            return Err(CodecError::RangeViolation {
                value: value as i128,
                lo,
                hi,
            });
        }
        let offset = (value as i128 - lo as i128) as u64;
        self.write_bits(offset, constrained_width(lo, hi));
        Ok(())
    }

    /// Inverse of [`write_constrained_int`](Self::write_constrained_int).
    ///
    /// An offset that fits the field width but exceeds `hi - lo` is a
    /// `RangeViolation`.
    pub fn read_constrained_int(&mut self, lo: i64, hi: i64) -> CodecResult<i64> {
        let offset = self.read_bits(constrained_width(lo, hi))?;
        let value = lo as i128 + offset as i128;
        if value > hi as i128 {
            return Err(CodecError::RangeViolation { value, lo, hi });
        }
        Ok(value as i64)
    }

    /// Unconstrained general length determinant, unfragmented form only.
    pub fn write_length_determinant(&mut self, n: usize) -> CodecResult<()> {
        if n < 128 {
            self.push_bit(false);
            self.write_bits(n as u64, 7);
            Ok(())
        } else if n < 16384 {
            self.write_bits(0b10, 2);
            self.write_bits(n as u64, 14);
            Ok(())
        } else {
            Err(CodecError::Unsupported("fragmented length determinant"))
        }
    }

    pub fn read_length_determinant(&mut self) -> CodecResult<usize> {
        if !self.read_bit()? {
            return Ok(self.read_bits(7)? as usize);
        }
        if !self.read_bit()? {
            return Ok(self.read_bits(14)? as usize);
        }
        Err(CodecError::Unsupported("fragmented length determinant"))
    }

    /// SEQUENCE preamble: one bit per OPTIONAL field, 1 = present.
    pub fn write_optional_flags(&mut self, present: &[bool]) {
        for &p in present {
            self.push_bit(p);
        }
    }

    pub fn read_optional_flags<const N: usize>(&mut self) -> CodecResult<[bool; N]> {
        self.ensure(N)?;
        let mut out = [false; N];
        for flag in out.iter_mut() {
            *flag = self.read_bit()?;
        }
        Ok(out)
    }

    /// Extension marker of an extensible type; root values always carry 0.
    pub fn write_extension_bit(&mut self) {
        self.push_bit(false);
    }

    pub fn read_extension_bit(&mut self) -> CodecResult<()> {
        let at = self.cursor;
        if self.read_bit()? {
            return Err(CodecError::UnsupportedExtension(at));
        }
        Ok(())
    }

    /// ENUMERATED without extension: the index as a constrained whole number.
    pub fn write_enumerated(&mut self, index: usize, count: usize) -> CodecResult<()> {
        self.write_constrained_int(index as i64, 0, count as i64 - 1)
    }

    pub fn read_enumerated(&mut self, count: usize) -> CodecResult<usize> {
        Ok(self.read_constrained_int(0, count as i64 - 1)? as usize)
    }

    /// Fixed-size octet string, written unaligned.
    pub fn write_octets(&mut self, octets: &[u8]) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(octets);
            self.len += octets.len() * 8;
        } else {
            for &b in octets {
                self.write_bits(b as u64, 8);
            }
        }
    }

    pub fn read_octets(&mut self, n: usize) -> CodecResult<Vec<u8>> {
        self.ensure(n * 8)?;
        (0..n).map(|_| Ok(self.read_bits(8)? as u8)).collect()
    }

    /// Succeeds when what is left after the cursor is the zero padding of
    /// the final octet.
    pub fn expect_zero_padding(&mut self) -> CodecResult<()> {
        let rest = self.remaining();
        if rest >= 8 {
            return Err(CodecError::PaddingNonZero(rest));
        }
        if rest > 0 && self.read_bits(rest as u32)? != 0 {
            return Err(CodecError::PaddingNonZero(rest));
        }
        Ok(())
    }
}
