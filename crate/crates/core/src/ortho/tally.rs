//! Operation accounting for the apply kernels.
//!
//! Kernels are generic over [`OpCounter`]; the public apply paths pass `()`,
//! which compiles the bookkeeping away.

pub trait OpCounter {
    fn mul_adds(&mut self, count: u64);
    /// Records a scratch buffer of `elems` scalar slots.
    fn scratch(&mut self, elems: usize);
}

impl OpCounter for () {
    #[inline(always)]
    fn mul_adds(&mut self, _count: u64) {}
    #[inline(always)]
    fn scratch(&mut self, _elems: usize) {}
}

/// Counts multiply-adds and tracks the largest scratch buffer.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpTally {
    pub mul_adds: u64,
    pub max_scratch: usize,
    pub scratch_allocations: usize,
}

impl OpCounter for OpTally {
    #[inline]
    fn mul_adds(&mut self, count: u64) {
        self.mul_adds += count;
    }

    #[inline]
    fn scratch(&mut self, elems: usize) {
        self.scratch_allocations += 1;
        self.max_scratch = self.max_scratch.max(elems);
    }
}
