//! The four-letter nucleotide alphabet and its 2-bit code.

use std::fmt;

/// A nucleotide. The discriminant is the 2-bit code (A:00, C:01, G:10, T:11).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Base {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    #[inline]
    pub fn code(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn from_code(code: u8) -> Base {
        match code & 3 {
            0 => Base::A,
            1 => Base::C,
            2 => Base::G,
            _ => Base::T,
        }
    }

    /// Case-insensitive ASCII decode; `None` for anything outside ACGT.
    #[inline]
    pub fn from_ascii(byte: u8) -> Option<Base> {
        match byte {
            b'A' | b'a' => Some(Base::A),
            b'C' | b'c' => Some(Base::C),
            b'G' | b'g' => Some(Base::G),
            b'T' | b't' => Some(Base::T),
            _ => None,
        }
    }

    #[inline]
    pub fn to_ascii(self) -> u8 {
        b"ACGT"[self as usize]
    }

    #[inline]
    pub fn complement(self) -> Base {
        Base::from_code(3 - self.code())
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ascii() as char)
    }
}

/// Offending byte and its position when decoding a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InvalidBase {
    pub position: usize,
    pub byte: u8,
}

impl fmt::Display for InvalidBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid base {:?} at position {}",
            self.byte as char, self.position
        )
    }
}

impl std::error::Error for InvalidBase {}

/// Decode an ASCII sequence, rejecting anything outside ACGT (N included).
pub fn encode_seq(seq: &[u8]) -> Result<Vec<Base>, InvalidBase> {
    seq.iter()
        .enumerate()
        .map(|(position, &byte)| Base::from_ascii(byte).ok_or(InvalidBase { position, byte }))
        .collect()
}

pub fn decode_seq(seq: &[Base]) -> String {
    seq.iter().map(|b| b.to_ascii() as char).collect()
}

pub fn reverse_complement(seq: &[Base]) -> Vec<Base> {
    seq.iter().rev().map(|b| b.complement()).collect()
}
