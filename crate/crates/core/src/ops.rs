//! Per-thread field-operation counters.
//!
//! The vector kernels in [`crate::gfield`] record every nonzero multiply and
//! add they perform. Callers bracket a region with [`snapshot`] to attribute
//! work to it; a trial runs on one thread so counts never interleave.

use std::cell::Cell;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub mul: u64,
    pub add: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.mul + self.add
    }
}

impl std::ops::Sub for OpCount {
    type Output = OpCount;
    fn sub(self, rhs: OpCount) -> OpCount {
        OpCount {
            mul: self.mul - rhs.mul,
            add: self.add - rhs.add,
        }
    }
}

impl std::ops::AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        self.mul += rhs.mul;
        self.add += rhs.add;
    }
}

thread_local! {
    static MUL: Cell<u64> = const { Cell::new(0) };
    static ADD: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn record(mul: u64, add: u64) {
    MUL.with(|c| c.set(c.get() + mul));
    ADD.with(|c| c.set(c.get() + add));
}

/// Current cumulative counts on this thread.
pub fn snapshot() -> OpCount {
    OpCount {
        mul: MUL.with(Cell::get),
        add: ADD.with(Cell::get),
    }
}

/// Runs `f` and returns its result with the operations it performed.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCount) {
    let before = snapshot();
    let out = f();
    (out, snapshot() - before)
}

/// Runs `f` without charging its operations to the enclosing region.
pub fn uncounted<T>(f: impl FnOnce() -> T) -> T {
    let before = snapshot();
    let out = f();
    MUL.with(|c| c.set(before.mul));
    ADD.with(|c| c.set(before.add));
    out
}
