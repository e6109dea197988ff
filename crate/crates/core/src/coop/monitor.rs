/// Credits useful bytes to fixed-width virtual-time windows.
#[derive(Debug, Clone)]
pub struct GoodputMonitor {
    window: f64,
    origin: f64,
    cap: u64,
    credited: u64,
    buckets: Vec<u64>,
}

impl GoodputMonitor {
    /// Total credit is capped at `cap` bytes (the file length), so padding never counts.
    pub fn new(window: f64, cap: u64) -> Self {
        Self { window, origin: 0.0, cap, credited: 0, buckets: Vec::new() }
    }

    pub fn start(&mut self, origin: f64) {
        self.origin = origin;
    }

    pub fn credit(&mut self, now: f64, bytes: u64) {
        let bytes = bytes.min(self.cap - self.credited);
        if bytes == 0 {
            return;
        }
        let idx = ((now - self.origin).max(0.0) / self.window) as usize;
        if self.buckets.len() <= idx {
            self.buckets.resize(idx + 1, 0);
        }
        self.buckets[idx] += bytes;
        self.credited += bytes;
    }

    pub fn credited(&self) -> u64 {
        self.credited
    }

    /// Bytes per second in each window.
    pub fn timeline(&self) -> Vec<f64> {
        self.buckets.iter().map(|&b| b as f64 / self.window).collect()
    }
}
