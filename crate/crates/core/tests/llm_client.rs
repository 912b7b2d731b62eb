use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use hnstkit::captioner::{
    Backend, BackendError, ClientConfig, ImagePayload, LlmClient, LlmRequest, MockBackend, RateLimit, RetryPolicy, TemplateSet,
};
use rayon::prelude::*;

struct Slow {
    delay: Duration,
    calls: AtomicUsize,
}

impl Backend for Slow {
    fn id(&self) -> &str {
        "slow"
    }
    fn send(&self, r: &LlmRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(self.delay);
        Ok(format!("echo {}", r.prompt.len()))
    }
}

fn category(i: usize) -> BTreeMap<&'static str, String> {
    BTreeMap::from([("category", format!("object {i}"))])
}

#[test]
fn thousand_cached_calls_issue_no_requests() {
    let dir = tempfile::tempdir().unwrap();
    let config = ClientConfig {
        cache_dir: Some(dir.path().to_path_buf()),
        logical_clock: true,
        ..ClientConfig::default()
    };
    let warm = LlmClient::new(Arc::new(MockBackend::default()), TemplateSet::builtin(), config.clone());
    let img = ImagePayload::reference("img-1");
    for i in 0..1000 {
        warm.call_named("color_a", &category(i), Some(&img)).unwrap();
    }
    let backend = Arc::new(MockBackend::default());
    let cold = LlmClient::new(backend.clone(), TemplateSet::builtin(), config);
    (0..1000).into_par_iter().for_each(|i| {
        let t = cold.call_named("color_a", &category(i), Some(&img)).unwrap();
        assert!(t.cached);
    });
    assert_eq!(backend.calls(), 0);
    assert_eq!(cold.counters.requests(), 0);
    assert_eq!(cold.counters.cache_hits(), 1000);
}

#[test]
fn in_flight_bound_holds() {
    let backend = Arc::new(Slow {
        delay: Duration::from_millis(5),
        calls: AtomicUsize::new(0),
    });
    let client = LlmClient::new(
        backend.clone(),
        TemplateSet::builtin(),
        ClientConfig {
            max_in_flight: 3,
            ..ClientConfig::default()
        },
    );
    let pool = rayon::ThreadPoolBuilder::new().num_threads(12).build().unwrap();
    pool.install(|| {
        (0..60).into_par_iter().for_each(|i| {
            client.call_named("color_a", &category(i), None).unwrap();
        })
    });
    assert_eq!(backend.calls.load(Ordering::SeqCst), 60);
    assert!(client.counters.max_in_flight() <= 3);
    assert!(client.counters.max_in_flight() >= 2, "pool never overlapped");
}

#[test]
fn rate_window_holds() {
    let interval = Duration::from_millis(200);
    let client = LlmClient::new(
        Arc::new(Slow {
            delay: Duration::ZERO,
            calls: AtomicUsize::new(0),
        }),
        TemplateSet::builtin(),
        ClientConfig {
            max_in_flight: 8,
            rate: Some(RateLimit { requests: 5, interval }),
            retry: RetryPolicy::default(),
            ..ClientConfig::default()
        },
    );
    (0..15).into_par_iter().for_each(|i| {
        client.call_named("color_b", &category(i), None).unwrap();
    });
    let mut starts = client.counters.request_starts();
    starts.sort();
    assert_eq!(starts.len(), 15);
    for w in starts.windows(6) {
        assert!(w[5].duration_since(w[0]) >= interval, "6 requests inside one window");
    }
}
