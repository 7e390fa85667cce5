//! Fixed-order reductions over row blocks.
//!
//! Rows are split into blocks of [`BLOCK_ROWS`]. Each block is accumulated
//! sequentially in `f64`, blocks are evaluated in parallel, and the block
//! partials are combined with a pairwise tree whose shape depends only on the
//! number of blocks. Results are therefore bitwise identical for any thread
//! count.

use rayon::prelude::*;

use crate::embed_io::EmbeddingMatrix;

/// Rows per reduction block.
pub const BLOCK_ROWS: usize = 256;

/// Pairwise (tree) summation of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn tree_combine_vectors(mut parts: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; dim];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some(mut left) = iter.next() {
            if let Some(right) = iter.next() {
                for (l, r) in left.iter_mut().zip(&right) {
                    *l += r;
                }
            }
            next.push(left);
        }
        parts = next;
    }
    parts.pop().unwrap_or_else(|| vec![0.0; dim])
}

/// Column sums of a matrix, accumulated in `f64`.
pub fn column_sums(m: &EmbeddingMatrix) -> Vec<f64> {
    let dim = m.dim();
    let parts: Vec<Vec<f64>> = m
        .values()
        .par_chunks(BLOCK_ROWS * dim)
        .map(|block| {
            let mut acc = vec![0.0f64; dim];
            for row in block.chunks_exact(dim) {
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += v as f64;
                }
            }
            acc
        })
        .collect();
    tree_combine_vectors(parts, dim)
}

/// Sum of `f(row_index, row)` over all rows.
pub fn sum_rows<F>(m: &EmbeddingMatrix, f: F) -> f64
where
    F: Fn(usize, &[f32]) -> f64 + Sync,
{
    let dim = m.dim();
    let parts: Vec<f64> = m
        .values()
        .par_chunks(BLOCK_ROWS * dim)
        .enumerate()
        .map(|(b, block)| {
            let base = b * BLOCK_ROWS;
            let mut acc = 0.0f64;
            for (i, row) in block.chunks_exact(dim).enumerate() {
                acc += f(base + i, row);
            }
            acc
        })
        .collect();
    pairwise_sum(&parts)
}

/// Sum of `f(i)` for `i` in `0..len`, blocked like [`sum_rows`].
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = len.div_ceil(BLOCK_ROWS);
    let parts: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_ROWS;
            let end = (start + BLOCK_ROWS).min(len);
            let mut acc = 0.0f64;
            for i in start..end {
                acc += f(i);
            }
            acc
        })
        .collect();
    pairwise_sum(&parts)
}

#[inline]
pub fn dot_f32_f64(row: &[f32], v: &[f64]) -> f64 {
    row.iter().zip(v).map(|(&a, &b)| a as f64 * b).sum()
}

#[inline]
pub fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

#[inline]
pub fn sq_norm_f32(a: &[f32]) -> f64 {
    a.iter().map(|&x| (x as f64) * (x as f64)).sum()
}

#[inline]
pub fn sq_dist_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

#[inline]
pub fn sq_dist_f32_f64(a: &[f32], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn column_sums_independent_of_thread_count() {
        let rows = 1000;
        let dim = 7;
        let values: Vec<f32> = (0..rows * dim).map(|i| ((i * 37 % 101) as f32).sin()).collect();
        let m = EmbeddingMatrix::new(rows, dim, values).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| column_sums(&m));
        let b = four.install(|| column_sums(&m));
        assert_eq!(a, b);
        let s1 = one.install(|| sum_rows(&m, |_, r| sq_norm_f32(r)));
        let s4 = four.install(|| sum_rows(&m, |_, r| sq_norm_f32(r)));
        assert_eq!(s1.to_bits(), s4.to_bits());
    }
}
