/// Integer percent-complete reporting in steps of at least five points.
#[derive(Debug, Clone)]
pub struct ProgressTracker {
    total: usize,
    last: Option<u32>,
}

const STEP: u32 = 5;

impl ProgressTracker {
    pub fn new(total: usize) -> Self {
        Self { total, last: None }
    }

    /// Percentage to report after `done` items, if it is due.
    pub fn update(&mut self, done: usize) -> Option<u32> {
        if self.total == 0 {
            return None;
        }
        let pct = (done.min(self.total) * 100 / self.total) as u32;
        let due = match self.last {
            None => true,
            Some(last) => pct >= last + STEP || (pct == 100 && last < 100),
        };
        if due {
            self.last = Some(pct);
            Some(pct)
        } else {
            None
        }
    }

    /// Emits 100 if it has not been reported yet.
    pub fn finish(&mut self) -> Option<u32> {
        if self.last == Some(100) {
            return None;
        }
        self.last = Some(100);
        Some(100)
    }
}
