//! Deterministic parallel reductions.
//!
//! Work is split into fixed-size chunks whose partial results are combined in
//! index order, so results do not depend on the number of worker threads.

use rayon::prelude::*;

pub(crate) const CHUNK: usize = 4096;

/// Folds `0..n` in fixed chunks with `f`, then reduces the partials
/// pairwise in chunk order.
pub(crate) fn chunked_sum<const K: usize, F>(n: usize, f: F) -> [f64; K]
where
    F: Fn(std::ops::Range<usize>) -> [f64; K] + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<[f64; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect();
    pairwise(&partials)
}

fn pairwise<const K: usize>(xs: &[[f64; K]]) -> [f64; K] {
    match xs.len() {
        0 => [0.0; K],
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            let (a, b) = (pairwise(a), pairwise(b));
            std::array::from_fn(|i| a[i] + b[i])
        }
    }
}

/// `sum_i v_i * a_i * b_i` with deterministic ordering.
pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    chunked_sum::<1, _>(w.len(), |r| {
        let mut s = 0.0;
        for i in r {
            s += w[i] * a[i] * b[i];
        }
        [s]
    })[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_of_thread_count() {
        let v: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.37).sin()).collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| chunked_sum::<1, _>(v.len(), |r| [v[r].iter().sum()]));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| chunked_sum::<1, _>(v.len(), |r| [v[r].iter().sum()]));
        assert_eq!(one[0].to_bits(), four[0].to_bits());
    }
}
