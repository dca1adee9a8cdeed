//! Batch-invariant `A·Bᵀ` kernel used by every forward pass.
//!
//! Each output element is accumulated in eight interleaved lanes over `k`,
//! then reduced in a fixed tree. The 2x4 register tiling only shares loads
//! between outputs; it never changes an individual output's arithmetic, so
//! results are bit-identical for any `m` and any row position.

use num_traits::Float;

const LANES: usize = 8;

#[inline(always)]
fn reduce<T: Float>(acc: &[T; LANES]) -> T {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

#[inline(always)]
fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); LANES];
    let (ac, bc) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for l in 0..LANES {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    let mut s = reduce(&acc);
    for (&x, &y) in ar.iter().zip(br) {
        s = s + x * y;
    }
    s
}

#[inline(always)]
fn tile_2x4<T: Float>(a0: &[T], a1: &[T], b: [&[T]; 4], out: &mut [[T; 4]; 2]) {
    let k = a0.len();
    let body = k - k % LANES;
    let mut acc = [[[T::zero(); LANES]; 4]; 2];
    let chunks = a0[..body]
        .chunks_exact(LANES)
        .zip(a1[..body].chunks_exact(LANES))
        .zip(b[0][..body].chunks_exact(LANES))
        .zip(b[1][..body].chunks_exact(LANES))
        .zip(b[2][..body].chunks_exact(LANES))
        .zip(b[3][..body].chunks_exact(LANES));
    for (((((x0, x1), y0), y1), y2), y3) in chunks {
        let ys = [y0, y1, y2, y3];
        for j in 0..4 {
            for l in 0..LANES {
                acc[0][j][l] = acc[0][j][l] + x0[l] * ys[j][l];
                acc[1][j][l] = acc[1][j][l] + x1[l] * ys[j][l];
            }
        }
    }
    for j in 0..4 {
        let (mut s0, mut s1) = (reduce(&acc[0][j]), reduce(&acc[1][j]));
        for q in body..k {
            s0 = s0 + a0[q] * b[j][q];
            s1 = s1 + a1[q] * b[j][q];
        }
        out[0][j] = s0;
        out[1][j] = s1;
    }
}

#[inline(always)]
fn gemm_nt_body<T: Float>(m: usize, n: usize, k: usize, a: &[T], b: &[T], c: &mut [T]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n, "gemm_nt operand too small");
    let n4 = n - n % 4;
    let m2 = m - m % 2;
    // Column blocks keep a slab of B hot in cache while all rows stream past it.
    const JB: usize = 32;
    let mut j0 = 0;
    while j0 < n4 {
        let j1 = (j0 + JB).min(n4);
        let mut i = 0;
        while i < m2 {
            let (a0, a1) = (&a[i * k..(i + 1) * k], &a[(i + 1) * k..(i + 2) * k]);
            let mut j = j0;
            while j < j1 {
                let bs = [&b[j * k..(j + 1) * k], &b[(j + 1) * k..(j + 2) * k], &b[(j + 2) * k..(j + 3) * k], &b[(j + 3) * k..(j + 4) * k]];
                let mut out = [[T::zero(); 4]; 2];
                tile_2x4(a0, a1, bs, &mut out);
                c[i * n + j..i * n + j + 4].copy_from_slice(&out[0]);
                c[(i + 1) * n + j..(i + 1) * n + j + 4].copy_from_slice(&out[1]);
                j += 4;
            }
            i += 2;
        }
        for i in m2..m {
            for j in j0..j1 {
                c[i * n + j] = dot(&a[i * k..(i + 1) * k], &b[j * k..(j + 1) * k]);
            }
        }
        j0 = j1;
    }
    for i in 0..m {
        for j in n4..n {
            c[i * n + j] = dot(&a[i * k..(i + 1) * k], &b[j * k..(j + 1) * k]);
        }
    }
}

pub(crate) fn gemm_nt_portable<T: Float>(m: usize, n: usize, k: usize, a: &[T], b: &[T], c: &mut [T]) {
    gemm_nt_body(m, n, k, a, b, c)
}

/// Single-precision entry point. The AVX path performs the same lane-wise
/// multiply then add as the portable path, so both give identical bits.
pub(crate) fn gemm_nt_f32(m: usize, n: usize, k: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx") {
            assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n, "gemm_nt operand too small");
            // SAFETY: feature detected at runtime; operand sizes checked above.
            return unsafe { avx::gemm_nt(m, n, k, a, b, c) };
        }
    }
    gemm_nt_body(m, n, k, a, b, c)
}

#[cfg(target_arch = "x86_64")]
mod avx {
    use super::{dot, reduce, LANES};
    use std::arch::x86_64::*;

    #[inline(always)]
    unsafe fn hsum(v: __m256) -> f32 {
        let mut lanes = [0.0f32; LANES];
        _mm256_storeu_ps(lanes.as_mut_ptr(), v);
        reduce(&lanes)
    }

    #[target_feature(enable = "avx")]
    unsafe fn tile_2x4(a0: *const f32, a1: *const f32, b: [*const f32; 4], k: usize, out: &mut [[f32; 4]; 2]) {
        let body = k - k % LANES;
        let mut acc0 = [_mm256_setzero_ps(); 4];
        let mut acc1 = [_mm256_setzero_ps(); 4];
        let mut p = 0;
        while p < body {
            let x0 = _mm256_loadu_ps(a0.add(p));
            let x1 = _mm256_loadu_ps(a1.add(p));
            for j in 0..4 {
                let y = _mm256_loadu_ps(b[j].add(p));
                acc0[j] = _mm256_add_ps(acc0[j], _mm256_mul_ps(x0, y));
                acc1[j] = _mm256_add_ps(acc1[j], _mm256_mul_ps(x1, y));
            }
            p += LANES;
        }
        for j in 0..4 {
            let (mut s0, mut s1) = (hsum(acc0[j]), hsum(acc1[j]));
            for q in body..k {
                s0 += *a0.add(q) * *b[j].add(q);
                s1 += *a1.add(q) * *b[j].add(q);
            }
            out[0][j] = s0;
            out[1][j] = s1;
        }
    }

    #[target_feature(enable = "avx")]
    unsafe fn dot_avx(a: *const f32, b: *const f32, k: usize) -> f32 {
        let body = k - k % LANES;
        let mut acc = _mm256_setzero_ps();
        let mut p = 0;
        while p < body {
            acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a.add(p)), _mm256_loadu_ps(b.add(p))));
            p += LANES;
        }
        let mut s = hsum(acc);
        for q in body..k {
            s += *a.add(q) * *b.add(q);
        }
        s
    }

    #[target_feature(enable = "avx")]
    pub(super) unsafe fn gemm_nt(m: usize, n: usize, k: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
        let (ap, bp) = (a.as_ptr(), b.as_ptr());
        let n4 = n - n % 4;
        let m2 = m - m % 2;
        const JB: usize = 32;
        let mut j0 = 0;
        while j0 < n4 {
            let j1 = (j0 + JB).min(n4);
            let mut i = 0;
            while i < m2 {
                let mut j = j0;
                while j < j1 {
                    let bs = [bp.add(j * k), bp.add((j + 1) * k), bp.add((j + 2) * k), bp.add((j + 3) * k)];
                    let mut out = [[0.0f32; 4]; 2];
                    tile_2x4(ap.add(i * k), ap.add((i + 1) * k), bs, k, &mut out);
                    c[i * n + j..i * n + j + 4].copy_from_slice(&out[0]);
                    c[(i + 1) * n + j..(i + 1) * n + j + 4].copy_from_slice(&out[1]);
                    j += 4;
                }
                i += 2;
            }
            for i in m2..m {
                for j in j0..j1 {
                    c[i * n + j] = dot_avx(ap.add(i * k), bp.add(j * k), k);
                }
            }
            j0 = j1;
        }
        for i in 0..m {
            for j in n4..n {
                c[i * n + j] = dot(&a[i * k..(i + 1) * k], &b[j * k..(j + 1) * k]);
            }
        }
    }
}
