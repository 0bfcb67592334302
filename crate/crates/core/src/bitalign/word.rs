use std::fmt::Debug;
use std::ops::{BitAnd, BitOr, Not};

/// A machine word used as an m-bit status bitvector.
pub trait BitWord:
    Copy + Eq + Debug + BitAnd<Output = Self> + BitOr<Output = Self> + Not<Output = Self>
{
    const BITS: usize;
    const ZERO: Self;
    const ONES: Self;

    /// Left shift that yields zero once `n` reaches the word width.
    fn shl(self, n: usize) -> Self;

    fn bit(self, i: usize) -> bool;

    fn clear_bit(self, i: usize) -> Self;

    fn count_zeros_below(self, n: usize) -> usize;
}

macro_rules! impl_bitword {
    ($t:ty) => {
        impl BitWord for $t {
            const BITS: usize = <$t>::BITS as usize;
            const ZERO: Self = 0;
            const ONES: Self = !0;

            #[inline(always)]
            fn shl(self, n: usize) -> Self {
                if n >= <Self as BitWord>::BITS {
                    0
                } else {
                    self << n
                }
            }

            #[inline(always)]
            fn bit(self, i: usize) -> bool {
                (self >> i) & 1 == 1
            }

            #[inline(always)]
            fn clear_bit(self, i: usize) -> Self {
                self & !(1 << i)
            }

            #[inline]
            fn count_zeros_below(self, n: usize) -> usize {
                let mask = if n >= <Self as BitWord>::BITS {
                    !0
                } else {
                    (1 << n) - 1
                };
                ((!self) & mask).count_ones() as usize
            }
        }
    };
}

impl_bitword!(u64);
impl_bitword!(u128);
