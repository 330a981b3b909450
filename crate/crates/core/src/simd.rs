//! Fixed 128-bit vector abstraction used by the GEMV kernels.
//!
//! [`VectorUnit`] names the handful of operations the kernels need: 16-byte
//! loads, per-lane byte shifts, a widening multiply-accumulate into four
//! 32-bit lanes, and a horizontal sum. [`Portable`] emulates them on arrays and
//! defines the semantics; [`Sse2`] is the accelerated x86-64 path and must agree
//! with it lane for lane. [`Counting`] wraps another unit and tallies loads.

use std::cell::Cell;

/// Sixteen signed byte lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct I8x16(pub [i8; 16]);

impl I8x16 {
    pub fn from_bytes(src: &[u8]) -> Self {
        let mut lanes = [0i8; 16];
        for (lane, byte) in lanes.iter_mut().zip(&src[..16]) {
            *lane = *byte as i8;
        }
        I8x16(lanes)
    }

    pub fn from_slice(src: &[i8]) -> Self {
        let mut lanes = [0i8; 16];
        lanes.copy_from_slice(&src[..16]);
        I8x16(lanes)
    }

    /// Logical shift left of every lane; bits shifted past bit 7 are lost.
    pub fn shl_lanes(self, amount: u32) -> Self {
        I8x16(self.0.map(|lane| ((lane as u8) << amount) as i8))
    }

    /// Arithmetic shift right of every lane.
    pub fn sar_lanes(self, amount: u32) -> Self {
        I8x16(self.0.map(|lane| lane >> amount))
    }
}

/// Four 32-bit accumulator lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Acc32x4(pub [i32; 4]);

impl Acc32x4 {
    /// Adds the 16 products of `a` and `b`. Products are formed at 16 bits and
    /// summed in pairs: lane `j` receives products `2j, 2j+1, 8+2j, 8+2j+1`.
    pub fn mac(self, a: I8x16, b: I8x16) -> Self {
        let p = |l: usize| a.0[l] as i16 as i32 * b.0[l] as i16 as i32;
        let mut lanes = self.0;
        for (j, lane) in lanes.iter_mut().enumerate() {
            let lo = p(2 * j) + p(2 * j + 1);
            let hi = p(8 + 2 * j) + p(8 + 2 * j + 1);
            *lane = lane.wrapping_add(lo).wrapping_add(hi);
        }
        Acc32x4(lanes)
    }

    pub fn horizontal_sum(self) -> i32 {
        self.0.iter().fold(0i32, |acc, lane| acc.wrapping_add(*lane))
    }
}

/// Which GEMV operand a load reads. Only instrumentation looks at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Weights,
    Activations,
}

/// Operations the kernels are written against.
///
/// Loads read the first 16 elements of `src`. `load_packed` is used for
/// operands in the packed layout and `load_plain` for 8-bit operands; the two
/// behave identically and exist separately so loads can be counted per operand.
pub trait VectorUnit {
    type Vec: Copy;
    type Acc: Copy;

    fn load_packed(&self, src: &[u8], role: Role) -> Self::Vec;
    fn load_plain(&self, src: &[i8], role: Role) -> Self::Vec;
    fn shl(&self, v: Self::Vec, amount: u32) -> Self::Vec;
    fn sar(&self, v: Self::Vec, amount: u32) -> Self::Vec;
    fn zero(&self) -> Self::Acc;
    fn mac(&self, acc: Self::Acc, a: Self::Vec, b: Self::Vec) -> Self::Acc;
    fn horizontal_sum(&self, acc: Self::Acc) -> i32;

    /// Lane view, used to compare backends.
    fn lanes(&self, v: Self::Vec) -> [i8; 16];
    fn acc_lanes(&self, acc: Self::Acc) -> [i32; 4];
}

/// Array-based emulation; the reference semantics for every other unit.
#[derive(Debug, Clone, Copy, Default)]
pub struct Portable;

impl VectorUnit for Portable {
    type Vec = I8x16;
    type Acc = Acc32x4;

    #[inline]
    fn load_packed(&self, src: &[u8], _role: Role) -> I8x16 {
        I8x16::from_bytes(src)
    }

    #[inline]
    fn load_plain(&self, src: &[i8], _role: Role) -> I8x16 {
        I8x16::from_slice(src)
    }

    #[inline]
    fn shl(&self, v: I8x16, amount: u32) -> I8x16 {
        v.shl_lanes(amount)
    }

    #[inline]
    fn sar(&self, v: I8x16, amount: u32) -> I8x16 {
        v.sar_lanes(amount)
    }

    #[inline]
    fn zero(&self) -> Acc32x4 {
        Acc32x4::default()
    }

    #[inline]
    fn mac(&self, acc: Acc32x4, a: I8x16, b: I8x16) -> Acc32x4 {
        acc.mac(a, b)
    }

    #[inline]
    fn horizontal_sum(&self, acc: Acc32x4) -> i32 {
        acc.horizontal_sum()
    }

    fn lanes(&self, v: I8x16) -> [i8; 16] {
        v.0
    }

    fn acc_lanes(&self, acc: Acc32x4) -> [i32; 4] {
        acc.0
    }
}

/// Wraps a unit and counts loads per operand and storage kind.
#[derive(Debug, Default)]
pub struct Counting<U> {
    inner: U,
    // [weights, activations] x [packed, plain]
    loads: [[Cell<usize>; 2]; 2],
}

impl<U: VectorUnit> Counting<U> {
    pub fn new(inner: U) -> Self {
        Self { inner, loads: Default::default() }
    }

    fn bump(&self, role: Role, plain: bool) {
        let cell = &self.loads[role as usize][plain as usize];
        cell.set(cell.get() + 1);
    }

    /// Loads issued against `role`, packed and plain together.
    pub fn loads(&self, role: Role) -> usize {
        self.loads[role as usize].iter().map(Cell::get).sum()
    }

    pub fn packed_loads(&self) -> usize {
        self.loads.iter().map(|r| r[0].get()).sum()
    }

    pub fn plain_loads(&self) -> usize {
        self.loads.iter().map(|r| r[1].get()).sum()
    }
}

impl<U: VectorUnit> VectorUnit for Counting<U> {
    type Vec = U::Vec;
    type Acc = U::Acc;

    fn load_packed(&self, src: &[u8], role: Role) -> U::Vec {
        self.bump(role, false);
        self.inner.load_packed(src, role)
    }

    fn load_plain(&self, src: &[i8], role: Role) -> U::Vec {
        self.bump(role, true);
        self.inner.load_plain(src, role)
    }

    fn shl(&self, v: U::Vec, amount: u32) -> U::Vec {
        self.inner.shl(v, amount)
    }

    fn sar(&self, v: U::Vec, amount: u32) -> U::Vec {
        self.inner.sar(v, amount)
    }

    fn zero(&self) -> U::Acc {
        self.inner.zero()
    }

    fn mac(&self, acc: U::Acc, a: U::Vec, b: U::Vec) -> U::Acc {
        self.inner.mac(acc, a, b)
    }

    fn horizontal_sum(&self, acc: U::Acc) -> i32 {
        self.inner.horizontal_sum(acc)
    }

    fn lanes(&self, v: U::Vec) -> [i8; 16] {
        self.inner.lanes(v)
    }

    fn acc_lanes(&self, acc: U::Acc) -> [i32; 4] {
        self.inner.acc_lanes(acc)
    }
}

#[cfg(target_arch = "x86_64")]
pub use sse2::Sse2;

#[cfg(target_arch = "x86_64")]
mod sse2 {
    use std::arch::x86_64::*;

    use super::{Role, VectorUnit};

    /// SSE2 implementation. SSE2 is part of the x86-64 baseline, so this unit
    /// is always available on that architecture.
    #[derive(Debug, Clone, Copy, Default)]
    pub struct Sse2;

    impl VectorUnit for Sse2 {
        type Vec = __m128i;
        type Acc = __m128i;

        #[inline(always)]
        fn load_packed(&self, src: &[u8], _role: Role) -> __m128i {
            assert!(src.len() >= 16);
            // SAFETY: bounds checked above; unaligned load.
            unsafe { _mm_loadu_si128(src.as_ptr() as *const __m128i) }
        }

        #[inline(always)]
        fn load_plain(&self, src: &[i8], _role: Role) -> __m128i {
            assert!(src.len() >= 16);
            // SAFETY: bounds checked above; unaligned load.
            unsafe { _mm_loadu_si128(src.as_ptr() as *const __m128i) }
        }

        #[inline(always)]
        fn shl(&self, v: __m128i, amount: u32) -> __m128i {
            // No byte shift in SSE2: shift 16-bit lanes, then clear bits that
            // crossed in from the neighbouring byte.
            // SAFETY: SSE2 is part of the x86-64 baseline.
            unsafe {
                let count = _mm_cvtsi32_si128(amount as i32);
                let mask = _mm_set1_epi8((0xFFu8 << amount) as i8);
                _mm_and_si128(_mm_sll_epi16(v, count), mask)
            }
        }

        #[inline(always)]
        fn sar(&self, v: __m128i, amount: u32) -> __m128i {
            // Put each byte in the high half of a 16-bit lane, shift, repack.
            // SAFETY: SSE2 is part of the x86-64 baseline.
            unsafe {
                let count = _mm_cvtsi32_si128(8 + amount as i32);
                let lo = _mm_sra_epi16(_mm_unpacklo_epi8(v, v), count);
                let hi = _mm_sra_epi16(_mm_unpackhi_epi8(v, v), count);
                _mm_packs_epi16(lo, hi)
            }
        }

        #[inline(always)]
        fn zero(&self) -> __m128i {
            // SAFETY: SSE2 is part of the x86-64 baseline.
            unsafe { _mm_setzero_si128() }
        }

        #[inline(always)]
        fn mac(&self, acc: __m128i, a: __m128i, b: __m128i) -> __m128i {
            // SAFETY: SSE2 is part of the x86-64 baseline.
            unsafe {
                let a_lo = _mm_srai_epi16::<8>(_mm_unpacklo_epi8(a, a));
                let a_hi = _mm_srai_epi16::<8>(_mm_unpackhi_epi8(a, a));
                let b_lo = _mm_srai_epi16::<8>(_mm_unpacklo_epi8(b, b));
                let b_hi = _mm_srai_epi16::<8>(_mm_unpackhi_epi8(b, b));
                let lo = _mm_madd_epi16(a_lo, b_lo);
                let hi = _mm_madd_epi16(a_hi, b_hi);
                _mm_add_epi32(acc, _mm_add_epi32(lo, hi))
            }
        }

        #[inline(always)]
        fn horizontal_sum(&self, acc: __m128i) -> i32 {
            // SAFETY: SSE2 is part of the x86-64 baseline.
            unsafe {
                let swapped = _mm_shuffle_epi32::<0b01_00_11_10>(acc);
                let pairs = _mm_add_epi32(acc, swapped);
                let swapped = _mm_shuffle_epi32::<0b10_11_00_01>(pairs);
                _mm_cvtsi128_si32(_mm_add_epi32(pairs, swapped))
            }
        }

        fn lanes(&self, v: __m128i) -> [i8; 16] {
            let mut out = [0i8; 16];
            // SAFETY: `out` is 16 bytes; unaligned store.
            unsafe { _mm_storeu_si128(out.as_mut_ptr() as *mut __m128i, v) };
            out
        }

        fn acc_lanes(&self, acc: __m128i) -> [i32; 4] {
            let mut out = [0i32; 4];
            // SAFETY: `out` is 16 bytes; unaligned store.
            unsafe { _mm_storeu_si128(out.as_mut_ptr() as *mut __m128i, acc) };
            out
        }
    }
}

/// Whether an accelerated unit exists for the host architecture.
pub const fn hardware_available() -> bool {
    cfg!(target_arch = "x86_64")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(seed: u8) -> [u8; 16] {
        std::array::from_fn(|i| (i as u8).wrapping_mul(37).wrapping_add(seed))
    }

    #[test]
    fn portable_shifts() {
        let v = I8x16::from_bytes(&[0x9A; 16]);
        assert_eq!(v.shl_lanes(4).0[0] as u8, 0xA0);
        assert_eq!(v.sar_lanes(4).0[0], -7);
        assert_eq!(v.shl_lanes(4).sar_lanes(4).0[0], -6);
    }

    #[test]
    fn mac_lane_assignment() {
        let ones = I8x16([1; 16]);
        let idx = I8x16(std::array::from_fn(|i| i as i8));
        let acc = Acc32x4::default().mac(ones, idx);
        assert_eq!(acc.0, [1 + 8 + 9, 2 + 3 + 10 + 11, 4 + 5 + 12 + 13, 6 + 7 + 14 + 15]);
        assert_eq!(acc.horizontal_sum(), 120);
    }

    #[test]
    fn counting_tallies_per_operand() {
        let unit = Counting::new(Portable);
        unit.load_packed(&[0u8; 16], Role::Weights);
        unit.load_plain(&[0i8; 16], Role::Activations);
        unit.load_plain(&[0i8; 16], Role::Activations);
        assert_eq!((unit.packed_loads(), unit.plain_loads()), (1, 2));
        assert_eq!((unit.loads(Role::Weights), unit.loads(Role::Activations)), (1, 2));
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn sse2_matches_portable_on_every_shift() {
        for seed in 0..=255u8 {
            let bytes = pattern(seed);
            let p = Portable.load_packed(&bytes, Role::Weights);
            let s = Sse2.load_packed(&bytes, Role::Weights);
            for amount in 0..8 {
                assert_eq!(Sse2.lanes(Sse2.shl(s, amount)), Portable.lanes(Portable.shl(p, amount)));
                assert_eq!(Sse2.lanes(Sse2.sar(s, amount)), Portable.lanes(Portable.sar(p, amount)));
            }
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn sse2_mac_matches_portable_lanewise() {
        let extremes = [[-128i8; 16], [127i8; 16]];
        for a_seed in 0..64u8 {
            let a = pattern(a_seed);
            let b = pattern(a_seed.wrapping_mul(7).wrapping_add(3));
            let pa = Portable.load_packed(&a, Role::Weights);
            let pb = Portable.load_packed(&b, Role::Weights);
            let sa = Sse2.load_packed(&a, Role::Weights);
            let sb = Sse2.load_packed(&b, Role::Weights);
            let pacc = Portable.mac(Portable.mac(Portable.zero(), pa, pb), pb, pb);
            let sacc = Sse2.mac(Sse2.mac(Sse2.zero(), sa, sb), sb, sb);
            assert_eq!(Sse2.acc_lanes(sacc), Portable.acc_lanes(pacc));
            assert_eq!(Sse2.horizontal_sum(sacc), Portable.horizontal_sum(pacc));
        }
        for a in extremes {
            for b in extremes {
                let p = Portable.mac(
                    Portable.zero(),
                    Portable.load_plain(&a, Role::Weights),
                    Portable.load_plain(&b, Role::Weights),
                );
                let s = Sse2.mac(Sse2.zero(), Sse2.load_plain(&a, Role::Weights), Sse2.load_plain(&b, Role::Weights));
                assert_eq!(Sse2.acc_lanes(s), Portable.acc_lanes(p));
            }
        }
    }
}
