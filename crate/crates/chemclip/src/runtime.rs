//! Process-wide worker-pool setup.

use std::sync::OnceLock;

static POOL_INIT: OnceLock<usize> = OnceLock::new();

/// Initialize the global worker pool, honoring the `CHEMCLIP_THREADS`
/// environment variable (default: all available cores). Safe to call more
/// than once; only the first call takes effect. Returns the thread count.
pub fn init_threads() -> usize {
    *POOL_INIT.get_or_init(|| {
        let requested = std::env::var("CHEMCLIP_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0);
        match requested {
            Some(n) => {
                // Ignore failure: a pool may already exist (e.g. under a test
                // harness); computations are deterministic either way.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
                n
            }
            None => rayon::current_num_threads(),
        }
    })
}
