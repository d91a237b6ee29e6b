//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the maps below run on the rayon pool unless
//! [`set_sequential`] forced the sequential path. Results are always collected
//! in input order and reductions use a fixed pairwise tree, so the output is
//! bit-identical whichever path runs.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::linalg::Mat;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force (or release) the sequential path at runtime.
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// True when maps will be dispatched to rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Sum of matrices by pairwise reduction in a fixed tree shape.
pub fn tree_sum(mut items: Vec<Mat>) -> Option<Mat> {
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        let odd = if items.len() % 2 == 1 { items.pop() } else { None };
        let pairs: Vec<(Mat, Mat)> = {
            let mut it = items.into_iter();
            let mut out = Vec::new();
            while let (Some(a), Some(b)) = (it.next(), it.next()) {
                out.push((a, b));
            }
            out
        };
        items = map(&pairs, |(a, b)| a + b);
        if let Some(last) = odd {
            items.push(last);
        }
    }
    items.pop()
}
