//! Records every buffer the untrusted host handles: ingest file contents,
//! channel traffic in both directions, and result file contents. Used to
//! check that nothing readable leaks in sealed mode.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TapPoint {
    IngestRead,
    ChannelRequest,
    ChannelReply,
    ResultWrite,
}

#[derive(Default)]
pub struct ByteTap {
    enabled: AtomicBool,
    buffers: Mutex<Vec<(TapPoint, Vec<u8>)>>,
}

impl ByteTap {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn enabled() -> Self {
        let tap = Self::default();
        tap.enabled.store(true, Ordering::Relaxed);
        tap
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled.load(Ordering::Relaxed)
    }

    pub fn record(&self, point: TapPoint, bytes: &[u8]) {
        if self.is_enabled() {
            self.buffers
                .lock()
                .expect("tap lock")
                .push((point, bytes.to_vec()));
        }
    }

    pub fn buffers(&self) -> Vec<(TapPoint, Vec<u8>)> {
        self.buffers.lock().expect("tap lock").clone()
    }

    pub fn count(&self, point: TapPoint) -> usize {
        self.buffers
            .lock()
            .expect("tap lock")
            .iter()
            .filter(|(p, _)| *p == point)
            .count()
    }

    pub fn total_bytes(&self) -> usize {
        self.buffers
            .lock()
            .expect("tap lock")
            .iter()
            .map(|(_, b)| b.len())
            .sum()
    }

    /// Number of positions, over all recorded buffers, where one of the
    /// needles occurs.
    pub fn occurrences(&self, needles: &HashSet<[u8; 8]>) -> usize {
        let buffers = self.buffers.lock().expect("tap lock");
        buffers
            .iter()
            .flat_map(|(_, b)| b.windows(8))
            .filter(|w| needles.contains(<&[u8; 8]>::try_from(*w).expect("window of 8")))
            .count()
    }
}
