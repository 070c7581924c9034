//! Batch helpers that run on rayon when the `parallel` feature is enabled
//! and fall back to plain iteration otherwise. Output order always equals
//! input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential reference path, kept unconditionally so benches can compare
/// it against `map_batch` in a single build.
pub fn map_batch_serial<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Splits `items` into at most `chunks` contiguous slices of near-equal
/// size. The chunk count is independent of the worker count so that
/// chunk-wise reductions sum in a fixed order on any machine.
pub fn fixed_chunks<T>(items: &[T], chunks: usize) -> Vec<&[T]> {
    let chunks = chunks.max(1).min(items.len().max(1));
    let base = items.len() / chunks;
    let extra = items.len() % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let len = base + usize::from(c < extra);
        out.push(&items[start..start + len]);
        start += len;
    }
    out
}

#[cfg(feature = "parallel")]
pub fn map_chunks<T, R, F>(chunks: Vec<&[T]>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    chunks.into_par_iter().map(|c| f(c)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, R, F>(chunks: Vec<&[T]>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    chunks.into_iter().map(|c| f(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_batch_preserves_order() {
        let xs: Vec<usize> = (0..97).collect();
        let ys = map_batch(&xs, |x| x * 2);
        assert_eq!(ys, xs.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn fixed_chunks_cover_input() {
        let xs: Vec<usize> = (0..10).collect();
        for chunks in 1..=12 {
            let cs = fixed_chunks(&xs, chunks);
            let flat: Vec<usize> = cs.iter().flat_map(|c| c.iter().copied()).collect();
            assert_eq!(flat, xs);
        }
    }
}
