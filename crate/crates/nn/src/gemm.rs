//! Deterministic, optionally parallel wrappers over the sgemm microkernel.
//!
//! Parallelism only ever partitions disjoint output regions; the reduction
//! over the shared k dimension happens inside a single kernel call per
//! output element, so results are bit-identical for any thread count.

/// C[m,n] += A[m,k] * B[k,n] with arbitrary (row, col) strides, sequential.
#[allow(clippy::too_many_arguments)]
fn sgemm_raw(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    rsa: isize,
    csa: isize,
    b: &[f32],
    rsb: isize,
    csb: isize,
    c: &mut [f32],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// Row-major matmul C[m,n] = A[m,k] . B[k,n], parallel over row blocks.
pub(crate) fn matmul(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let run = |rows: std::ops::Range<usize>, c_chunk: &mut [f32]| {
        sgemm_raw(
            rows.len(),
            k,
            n,
            &a[rows.start * k..rows.end * k],
            k as isize,
            1,
            b,
            n as isize,
            1,
            c_chunk,
            n as isize,
            1,
        );
    };
    #[cfg(feature = "parallel")]
    {
        let threads = rayon::current_num_threads().max(1);
        if threads > 1 && m >= 2 * threads {
            use rayon::prelude::*;
            let chunk_rows = m.div_ceil(threads);
            c.par_chunks_mut(chunk_rows * n)
                .enumerate()
                .for_each(|(i, c_chunk)| {
                    let start = i * chunk_rows;
                    let end = (start + chunk_rows).min(m);
                    run(start..end, c_chunk);
                });
            return;
        }
    }
    run(0..m, c);
}

/// C[m,n] = A^T[m,k] . B[k,n] where `a` is stored row-major [k, m].
/// Parallel over row blocks of C (columns of `a`).
pub(crate) fn matmul_at_b(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let run = |rows: std::ops::Range<usize>, c_chunk: &mut [f32]| {
        // A^T rows are columns of `a`: element (i, l) = a[l * m + i]
        sgemm_raw(
            rows.len(),
            k,
            n,
            &a[rows.start..],
            1,
            m as isize,
            b,
            n as isize,
            1,
            c_chunk,
            n as isize,
            1,
        );
    };
    #[cfg(feature = "parallel")]
    {
        let threads = rayon::current_num_threads().max(1);
        if threads > 1 && m >= 2 * threads {
            use rayon::prelude::*;
            let chunk_rows = m.div_ceil(threads);
            c.par_chunks_mut(chunk_rows * n)
                .enumerate()
                .for_each(|(i, c_chunk)| {
                    let start = i * chunk_rows;
                    let end = (start + chunk_rows).min(m);
                    run(start..end, c_chunk);
                });
            return;
        }
    }
    run(0..m, c);
}

/// C[m,n] = A[m,k] . B^T[k,n] where `b` is stored row-major [n, k].
pub(crate) fn matmul_a_bt(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    let run = |rows: std::ops::Range<usize>, c_chunk: &mut [f32]| {
        // B^T element (l, j) = b[j * k + l]
        sgemm_raw(
            rows.len(),
            k,
            n,
            &a[rows.start * k..rows.end * k],
            k as isize,
            1,
            b,
            1,
            k as isize,
            c_chunk,
            n as isize,
            1,
        );
    };
    #[cfg(feature = "parallel")]
    {
        let threads = rayon::current_num_threads().max(1);
        if threads > 1 && m >= 2 * threads {
            use rayon::prelude::*;
            let chunk_rows = m.div_ceil(threads);
            c.par_chunks_mut(chunk_rows * n)
                .enumerate()
                .for_each(|(i, c_chunk)| {
                    let start = i * chunk_rows;
                    let end = (start + chunk_rows).min(m);
                    run(start..end, c_chunk);
                });
            return;
        }
    }
    run(0..m, c);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fill(n: usize, seed: u64) -> Vec<f32> {
        let mut s = seed | 1;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                ((s >> 40) as f32 / (1u64 << 24) as f32) - 0.5
            })
            .collect()
    }

    #[test]
    fn matmul_matches_naive() {
        let (m, k, n) = (7, 13, 5);
        let a = fill(m * k, 3);
        let b = fill(k * n, 5);
        let mut c = vec![0.0f32; m * n];
        matmul(m, k, n, &a, &b, &mut c);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0f32;
                for l in 0..k {
                    acc += a[i * k + l] * b[l * n + j];
                }
                assert!((acc - c[i * n + j]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn transposed_variants_match_naive() {
        let (m, k, n) = (6, 9, 4);
        let at = fill(k * m, 11); // stored [k, m]
        let b = fill(k * n, 13);
        let mut c = vec![0.0f32; m * n];
        matmul_at_b(m, k, n, &at, &b, &mut c);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0f32;
                for l in 0..k {
                    acc += at[l * m + i] * b[l * n + j];
                }
                assert!((acc - c[i * n + j]).abs() < 1e-4);
            }
        }

        let a = fill(m * k, 17);
        let bt = fill(n * k, 19); // stored [n, k]
        let mut c = vec![0.0f32; m * n];
        matmul_a_bt(m, k, n, &a, &bt, &mut c);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0f32;
                for l in 0..k {
                    acc += a[i * k + l] * bt[j * k + l];
                }
                assert!((acc - c[i * n + j]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn bitwise_deterministic_across_thread_counts() {
        let (m, k, n) = (257, 300, 67);
        let a = fill(m * k, 21);
        let b = fill(k * n, 23);
        let mut reference: Option<Vec<f32>> = None;
        for threads in [1usize, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let mut c = vec![0.0f32; m * n];
            pool.install(|| matmul(m, k, n, &a, &b, &mut c));
            match &reference {
                None => reference = Some(c),
                Some(r) => assert_eq!(r, &c, "thread count {threads} changed bits"),
            }
        }
    }
}
