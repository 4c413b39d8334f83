//! Bounded exponential backoff shared by the embedding and chat clients.

use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Same retry count, no sleeping. Used with mocks and in tests.
    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (0-based): base, 2x base, 4x base...
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << retry.min(16))
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent. Returns the value and the number of retries used.
    pub fn run<T, E>(
        &self,
        mut op: impl FnMut() -> Result<T, E>,
        retryable: impl Fn(&E) -> bool,
    ) -> Result<(T, u32), (E, u32)> {
        let mut retries = 0;
        loop {
            match op() {
                Ok(v) => return Ok((v, retries)),
                Err(e) if retries < self.max_retries && retryable(&e) => {
                    let wait = self.delay(retries);
                    tracing::warn!(retry = retries + 1, ?wait, "transient failure, retrying");
                    if !wait.is_zero() {
                        std::thread::sleep(wait);
                    }
                    retries += 1;
                }
                Err(e) => return Err((e, retries)),
            }
        }
    }
}
