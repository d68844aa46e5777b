//! Minimal stderr logger controlled by `RICCATI_NONOSC_LOG`
//! (error | info | debug; default error).

use std::sync::atomic::{AtomicU8, Ordering};

const ERROR: u8 = 0;
const INFO: u8 = 1;
const DEBUG: u8 = 2;

static LEVEL: AtomicU8 = AtomicU8::new(ERROR);

pub fn init_from_env() {
    let level = match std::env::var("RICCATI_NONOSC_LOG").as_deref() {
        Ok("debug") => DEBUG,
        Ok("info") => INFO,
        _ => ERROR,
    };
    LEVEL.store(level, Ordering::Relaxed);
}

pub fn info(msg: &str) {
    if LEVEL.load(Ordering::Relaxed) >= INFO {
        eprintln!("[info] {msg}");
    }
}

#[allow(dead_code)]
pub fn debug(msg: &str) {
    if LEVEL.load(Ordering::Relaxed) >= DEBUG {
        eprintln!("[debug] {msg}");
    }
}
