//! Data-parallel loop helpers.
//!
//! With the `parallel` feature (default) the loops run on the rayon pool;
//! without it the same closures run sequentially. Reductions always split the
//! input into [`CHUNK`]-sized pieces and add the partial sums in order, so a
//! reduction gives bit-identical results for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Work unit for element-wise loops and reductions.
pub const CHUNK: usize = 4096;

/// Calls `f(offset, chunk)` for every `chunk`-sized piece of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i * chunk, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i * chunk, c));
}

/// Like [`for_each_chunk_mut`] but hands out the same index range of several
/// equally long buffers at once.
pub fn for_each_chunk_group_mut<T, F>(columns: &mut [Vec<T>], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [&mut [T]]) + Sync + Send,
{
    let chunk = chunk.max(1);
    let len = columns.first().map_or(0, Vec::len);
    debug_assert!(columns.iter().all(|c| c.len() == len));
    let n_chunks = len.div_ceil(chunk);
    let mut groups: Vec<Vec<&mut [T]>> = (0..n_chunks)
        .map(|_| Vec::with_capacity(columns.len()))
        .collect();
    for col in columns.iter_mut() {
        for (i, c) in col.chunks_mut(chunk).enumerate() {
            groups[i].push(c);
        }
    }
    #[cfg(feature = "parallel")]
    groups
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, g)| f(i * chunk, g));
    #[cfg(not(feature = "parallel"))]
    groups
        .iter_mut()
        .enumerate()
        .for_each(|(i, g)| f(i * chunk, g));
}

/// Deterministic chunked sum of `f(offset, chunk)` over `data`.
pub fn sum_chunks<T, F>(data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &[T]) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = data
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(i, c)| f(i * CHUNK, c))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = data
        .chunks(CHUNK)
        .enumerate()
        .map(|(i, c)| f(i * CHUNK, c))
        .collect();
    partials.iter().sum()
}

/// Maps `f` over `0..n`, results in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return (0..n).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..n).map(f).collect();
}

/// Number of worker threads the helpers will use.
pub fn current_num_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    return 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_group_visits_every_index_once() {
        let mut cols = vec![vec![0u32; 10_000], vec![0u32; 10_000]];
        for_each_chunk_group_mut(&mut cols, 3000, |off, g| {
            for (j, c) in g.iter_mut().enumerate() {
                for (i, v) in c.iter_mut().enumerate() {
                    *v += (off + i) as u32 + j as u32;
                }
            }
        });
        assert!(cols[0].iter().enumerate().all(|(i, &v)| v == i as u32));
        assert!(cols[1].iter().enumerate().all(|(i, &v)| v == i as u32 + 1));
    }

    #[test]
    fn chunked_sum_matches_sequential_order() {
        let data: Vec<f64> = (0..20_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let expect: f64 = data
            .chunks(CHUNK)
            .map(|c| c.iter().sum::<f64>())
            .sum();
        let got = sum_chunks(&data, |_, c| c.iter().sum());
        assert_eq!(got.to_bits(), expect.to_bits());
    }

    #[test]
    fn map_indexed_keeps_order() {
        assert_eq!(map_indexed(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
