//! Unscrambled Sobol points (Joe–Kuo direction numbers, Gray-code order).
//!
//! The origin is not emitted: the first point is `(0.5, …, 0.5)`.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;
const BITS: usize = 32;

/// `(degree s, coefficient a, initial m_1..m_s)` for dimensions 2..=16.
const PRIMITIVES: [(u32, u32, &[u32]); MAX_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

/// Direction numbers `v_k` for one dimension, left-aligned in 32 bits.
pub fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = PRIMITIVES[dim_index - 1];
    let s = s as usize;
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut vk = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                vk ^= v[k - j];
            }
        }
        v[k] = vk;
    }
    v
}

/// The first `n` points of the `d`-dimensional sequence, skipping the origin.
pub fn sobol_points(n: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    if d > MAX_DIM {
        return Err(Error::DimensionTooLarge { got: d, max: MAX_DIM });
    }
    if d == 0 {
        return Err(Error::InvalidInput("Sobol dimension must be at least 1".into()));
    }
    let dirs: Vec<[u32; BITS]> = (0..d).map(direction_numbers).collect();
    let mut state = vec![0u32; d];
    let norm = 1.0 / (1u64 << BITS) as f64;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        // Gray-code update: flip the direction at the lowest zero bit of i-1.
        let c = (i - 1).trailing_ones() as usize;
        for (s, dir) in state.iter_mut().zip(&dirs) {
            *s ^= dir[c];
        }
        out.push(state.iter().map(|&s| s as f64 * norm).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_point(i: u64, d: usize) -> Vec<f64> {
        let gray = i ^ (i >> 1);
        (0..d)
            .map(|j| {
                let v = direction_numbers(j);
                let mut acc = 0u32;
                for (k, vk) in v.iter().enumerate() {
                    if (gray >> k) & 1 == 1 {
                        acc ^= vk;
                    }
                }
                acc as f64 / 4294967296.0
            })
            .collect()
    }

    #[test]
    fn first_points_one_dimension() {
        let p = sobol_points(3, 1).unwrap();
        assert_eq!(p, vec![vec![0.5], vec![0.75], vec![0.25]]);
    }

    #[test]
    fn incremental_matches_direct_gray_construction() {
        let p = sobol_points(300, MAX_DIM).unwrap();
        for (i, pt) in p.iter().enumerate() {
            assert_eq!(pt, &reference_point(i as u64 + 1, MAX_DIM));
        }
    }

    #[test]
    fn dyadic_cells_hold_one_point() {
        // The skipped origin completes the first 64-point block.
        let mut p = sobol_points(63, 2).unwrap();
        p.push(vec![0.0, 0.0]);
        let mut counts = [[0u32; 8]; 8];
        for pt in &p {
            counts[(pt[0] * 8.0) as usize][(pt[1] * 8.0) as usize] += 1;
        }
        assert!(counts.iter().flatten().all(|&c| c == 1));
    }

    #[test]
    fn coordinates_in_unit_interval() {
        let p = sobol_points(1000, MAX_DIM).unwrap();
        assert!(p.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn dimension_limit() {
        assert!(matches!(
            sobol_points(4, 17),
            Err(Error::DimensionTooLarge { got: 17, .. })
        ));
    }
}
