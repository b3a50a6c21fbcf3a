//! Peak count of live length-n buffers during moment extraction.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use specquad::moments::{chebyshev_moments, lanczos, modified_moments};
use specquad::operators::diagonal_operator;
use specquad::ReferenceMeasure;

const N: usize = 100_000;
const BIG: usize = N * std::mem::size_of::<f64>();

struct Counting;

static TRACKING: AtomicBool = AtomicBool::new(false);
static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
// the counters are global; run the measured sections one at a time
static SERIAL: Mutex<()> = Mutex::new(());

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if TRACKING.load(Ordering::SeqCst) && layout.size() >= BIG {
            let now = LIVE.fetch_add(1, Ordering::SeqCst) + 1;
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        if TRACKING.load(Ordering::SeqCst) && layout.size() >= BIG {
            LIVE.fetch_sub(1, Ordering::SeqCst);
        }
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn peak_of(f: impl FnOnce()) -> usize {
    LIVE.store(0, Ordering::SeqCst);
    PEAK.store(0, Ordering::SeqCst);
    TRACKING.store(true, Ordering::SeqCst);
    f();
    TRACKING.store(false, Ordering::SeqCst);
    PEAK.load(Ordering::SeqCst)
}

fn setup() -> (specquad::operators::DiagonalOperator, Vec<f64>) {
    let a = diagonal_operator((0..N).map(|i| -1.0 + 2.0 * i as f64 / N as f64).collect()).unwrap();
    let v = vec![1.0 / (N as f64).sqrt(); N];
    (a, v)
}

#[test]
fn recurrence_moments_use_at_most_four_vectors() {
    let _g = SERIAL.lock().unwrap();
    let (a, v) = setup();
    let mu = ReferenceMeasure::chebyshev_u(-1.0, 1.0).unwrap();
    let peak = peak_of(|| {
        modified_moments(&a, &v, 40, &mu).unwrap();
    });
    assert!(peak <= 4, "peak {peak}");
}

#[test]
fn chebyshev_moments_use_at_most_four_vectors() {
    let _g = SERIAL.lock().unwrap();
    let (a, v) = setup();
    let peak = peak_of(|| {
        chebyshev_moments(&a, &v, 40, -1.0, 1.0).unwrap();
    });
    assert!(peak <= 4, "peak {peak}");
}

#[test]
fn plain_lanczos_uses_at_most_four_vectors() {
    let _g = SERIAL.lock().unwrap();
    let (a, v) = setup();
    let peak = peak_of(|| {
        lanczos(&a, &v, 40, false).unwrap();
    });
    assert!(peak <= 4, "peak {peak}");
    // the reorthogonalized variant stores its basis
    let stored = peak_of(|| {
        lanczos(&a, &v, 10, true).unwrap();
    });
    assert!(stored > 10, "peak {stored}");
}
