//! Standard JPEG zigzag scan over an 8x8 block.

/// Row-major index of the coefficient at each zigzag position.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, //
    17, 24, 32, 25, 18, 11, 4, 5, //
    12, 19, 26, 33, 40, 48, 41, 34, //
    27, 20, 13, 6, 7, 14, 21, 28, //
    35, 42, 49, 56, 57, 50, 43, 36, //
    29, 22, 15, 23, 30, 37, 44, 51, //
    58, 59, 52, 45, 38, 31, 39, 46, //
    53, 60, 61, 54, 47, 55, 62, 63, //
];

/// Zigzag position of each row-major index; the inverse of [`ZIGZAG`].
pub const UNZIGZAG: [usize; 64] = {
    let mut inv = [0usize; 64];
    let mut k = 0;
    while k < 64 {
        inv[ZIGZAG[k]] = k;
        k += 1;
    }
    inv
};

/// `(row, col)` of zigzag position `k`.
///
/// Panics if `k > 63`.
pub fn zigzag_position(k: usize) -> (usize, usize) {
    assert!(k < 64, "zigzag index {k} out of range");
    let idx = ZIGZAG[k];
    (idx / 8, idx % 8)
}

/// Zigzag position of the cell at `(row, col)`.
pub fn zigzag_index(row: usize, col: usize) -> usize {
    assert!(row < 8 && col < 8, "cell ({row}, {col}) out of range");
    UNZIGZAG[row * 8 + col]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Walks the anti-diagonals, alternating direction, without consulting the table.
    fn walk_zigzag() -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(64);
        for s in 0..15usize {
            let lo = s.saturating_sub(7);
            let hi = s.min(7);
            let cells: Vec<(usize, usize)> = (lo..=hi).map(|r| (r, s - r)).collect();
            if s % 2 == 0 {
                // up-right: row decreasing
                out.extend(cells.into_iter().rev());
            } else {
                out.extend(cells);
            }
        }
        out
    }

    #[test]
    fn endpoints() {
        assert_eq!(zigzag_position(0), (0, 0));
        assert_eq!(zigzag_position(1), (0, 1));
        assert_eq!(zigzag_position(2), (1, 0));
        assert_eq!(zigzag_position(63), (7, 7));
    }

    #[test]
    fn table_matches_diagonal_walk() {
        let walk = walk_zigzag();
        for (k, cell) in walk.iter().enumerate() {
            assert_eq!(zigzag_position(k), *cell, "k = {k}");
        }
    }

    #[test]
    fn bijection() {
        let mut seen = [false; 64];
        for k in 0..64 {
            let (r, c) = zigzag_position(k);
            assert!(!seen[r * 8 + c]);
            seen[r * 8 + c] = true;
            assert_eq!(zigzag_index(r, c), k);
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    #[should_panic]
    fn out_of_range_panics() {
        zigzag_position(64);
    }
}
