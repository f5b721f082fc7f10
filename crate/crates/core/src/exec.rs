//! Global execution mode.
//!
//! Every parallel kernel in the crate partitions work so that each output
//! element is produced by the same sequence of floating point operations
//! regardless of scheduling, so serial and parallel runs agree bit for bit.
//! Serial mode simply keeps everything on the calling thread.

use std::sync::atomic::{AtomicBool, Ordering};

static SERIAL: AtomicBool = AtomicBool::new(false);

/// Force all kernels onto the calling thread.
pub fn set_serial(serial: bool) {
    SERIAL.store(serial, Ordering::Relaxed);
}

pub fn is_serial() -> bool {
    SERIAL.load(Ordering::Relaxed)
}

/// Work size (roughly flops) below which kernels stay serial.
pub(crate) const PAR_THRESHOLD: usize = 1 << 16;

pub(crate) fn parallel_for(work: usize) -> bool {
    !is_serial() && work >= PAR_THRESHOLD && rayon::current_num_threads() > 1
}
