use serde::{Deserialize, Serialize};
use web_time::Instant;

/// Stopping rule for anytime solvers. Whichever limit is hit first ends the run;
/// tests use iteration limits so results do not depend on the machine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iters: Option<u64>,
    pub time_ms: Option<u64>,
}

impl Budget {
    pub fn iterations(n: u64) -> Self {
        Budget {
            max_iters: Some(n),
            time_ms: None,
        }
    }

    pub fn millis(ms: u64) -> Self {
        Budget {
            max_iters: None,
            time_ms: Some(ms),
        }
    }

    pub fn unlimited() -> Self {
        Budget {
            max_iters: None,
            time_ms: None,
        }
    }

    pub fn with_iterations(mut self, n: u64) -> Self {
        self.max_iters = Some(n);
        self
    }

    pub(crate) fn start(self) -> Clock {
        Clock {
            budget: self,
            started: Instant::now(),
        }
    }
}

pub(crate) struct Clock {
    budget: Budget,
    started: Instant,
}

impl Clock {
    pub fn elapsed_ms(&self) -> f64 {
        self.started.elapsed().as_secs_f64() * 1e3
    }

    /// True once `iters` completed iterations or the wall-clock limit exhaust the budget.
    pub fn exhausted(&self, iters: u64) -> bool {
        if let Some(max) = self.budget.max_iters {
            if iters >= max {
                return true;
            }
        }
        match self.budget.time_ms {
            Some(ms) => self.elapsed_ms() >= ms as f64,
            None => false,
        }
    }
}
