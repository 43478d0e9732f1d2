//! Exactly reversible per-block downsampling of cell properties.
//!
//! Blocks follow the ceil-halved partition of the cell grid: coarse cell
//! (I, J, K) covers fine cells (2I..2I+2, 2J.., 2K..) clipped to the grid, so
//! a block holds m in {1, 2, 4, 8} values. The anchor is the block's first
//! member in (di, dj, dk) row-major order.
//!
//! Continuous fields use a division-free sum scheme: the approximation is the
//! block sum and each non-anchor detail is `m * p_n - sum`, so every detail
//! plus the sum is divisible by m and the fine values reconstruct exactly.
//! Approximations therefore grow by the block size per level; display values
//! divide by the cell's base-footprint count as a linear post-processing.
//!
//! Categorical fields use the mode as the approximation with sign-controlled
//! differences per cell: a negative difference whose mirror value
//! `2*mode - p_n` falls outside the class universe is stored with flipped
//! sign, which reconstruction detects because adding such a detail directly
//! would leave the universe. The mode alone cannot pin any single cell, so
//! every cell of the block carries a detail.

use crate::error::{Error, Result};
use crate::grid::GridDims;

/// Offsets of block members, anchor first, di fastest.
pub const BLOCK_OFFSETS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (1, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (0, 1, 1),
    (1, 1, 1),
];

/// Extent (1 or 2) of coarse cell index `c` along an axis of `n` fine cells.
#[inline]
pub fn block_extent(c: usize, n: usize) -> usize {
    if 2 * c + 1 < n {
        2
    } else {
        1
    }
}

/// Fine cells of block (bi, bj, bk), anchor first.
pub fn block_cells(
    dims: &GridDims,
    bi: usize,
    bj: usize,
    bk: usize,
) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    let (wi, wj, wk) = (
        block_extent(bi, dims.ni),
        block_extent(bj, dims.nj),
        block_extent(bk, dims.nk),
    );
    BLOCK_OFFSETS
        .into_iter()
        .filter(move |&(di, dj, dk)| di < wi && dj < wj && dk < wk)
        .map(move |(di, dj, dk)| (2 * bi + di, 2 * bj + dj, 2 * bk + dk))
}

/// Number of base-level cells under coarse cell index `c` along an axis of
/// `n` base cells, after `depth` coarsenings.
fn footprint_extent(c: usize, n: usize, depth: u32) -> usize {
    let span = 1usize << depth;
    let start = c * span;
    ((start + span).min(n)).saturating_sub(start)
}

/// Base-cell count under coarse cell (ci, cj, ck) after `depth` levels:
/// the product of per-level block sizes along its history.
pub fn footprint(base: &GridDims, depth: u32, ci: usize, cj: usize, ck: usize) -> usize {
    footprint_extent(ci, base.ni, depth)
        * footprint_extent(cj, base.nj, depth)
        * footprint_extent(ck, base.nk, depth)
}

fn to_i64(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::OverflowRisk("property transform intermediate".into()))
}

/// Sum-based analysis of one block: approximation is the sum, details are
/// `m * p_n - sum` for every non-anchor member.
pub fn haar_analyze_block(values: &[i64]) -> Result<(i64, Vec<i64>)> {
    let m = values.len() as i128;
    let sum: i128 = values.iter().map(|&v| v as i128).sum();
    let details = values[1..]
        .iter()
        .map(|&v| to_i64(m * v as i128 - sum))
        .collect::<Result<Vec<_>>>()?;
    Ok((to_i64(sum)?, details))
}

/// Exact inverse of [`haar_analyze_block`].
pub fn haar_synthesize_block(approx: i64, details: &[i64]) -> Result<Vec<i64>> {
    let m = details.len() as i64 + 1;
    let mut values = Vec::with_capacity(m as usize);
    values.push(0);
    let mut rest_sum: i128 = 0;
    for &d in details {
        let num = d as i128 + approx as i128;
        if num.rem_euclid(m as i128) != 0 {
            return Err(Error::CorruptDetail(format!(
                "sum-scheme detail {d} with approximation {approx} not divisible by {m}"
            )));
        }
        let v = to_i64(num / m as i128)?;
        rest_sum += v as i128;
        values.push(v);
    }
    values[0] = to_i64(approx as i128 - rest_sum)?;
    Ok(values)
}

/// Rescale a stored approximation to its true mean: divide by the fixed-point
/// scale and the cell's base footprint.
pub fn haar_display_value(approx: i64, scale_exp: u8, footprint: usize) -> f64 {
    approx as f64 / (10f64.powi(scale_exp as i32) * footprint as f64)
}

#[inline]
fn in_universe(universe: &[i64], v: i64) -> bool {
    universe.binary_search(&v).is_ok()
}

/// Modal value of a block with deterministic tie-breaking: tied classes are
/// re-scored over the first-order shell of fine cells surrounding the block,
/// and a remaining tie picks the lowest class value.
pub fn modelet_mode(values: &[i64], shell: &[i64]) -> i64 {
    let mut counts: Vec<(i64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        match counts.iter_mut().find(|(c, _)| *c == v) {
            Some((_, n)) => *n += 1,
            None => counts.push((v, 1)),
        }
    }
    let best = counts.iter().map(|&(_, n)| n).max().unwrap();
    let mut tied: Vec<i64> = counts
        .iter()
        .filter(|&&(_, n)| n == best)
        .map(|&(c, _)| c)
        .collect();
    if tied.len() > 1 {
        let shell_count = |class: i64| shell.iter().filter(|&&s| s == class).count();
        let best_shell = tied.iter().map(|&c| shell_count(c)).max().unwrap();
        tied.retain(|&c| shell_count(c) == best_shell);
    }
    *tied.iter().min().unwrap()
}

/// Sign-controlled detail for one cell given the block mode.
#[inline]
pub fn modelet_detail(value: i64, mode: i64, universe: &[i64]) -> i64 {
    let diff = value - mode;
    if diff < 0 && !in_universe(universe, 2 * mode - value) {
        -diff
    } else {
        diff
    }
}

/// Inverse of [`modelet_detail`]: the flip is self-detecting because a
/// flipped detail added directly always leaves the universe.
#[inline]
pub fn modelet_reconstruct(mode: i64, detail: i64, universe: &[i64]) -> Result<i64> {
    let direct = mode + detail;
    if in_universe(universe, direct) {
        Ok(direct)
    } else {
        let flipped = mode - detail;
        if in_universe(universe, flipped) {
            Ok(flipped)
        } else {
            Err(Error::Unreconstructible {
                approx: mode,
                detail,
            })
        }
    }
}

/// Mode plus one sign-controlled detail per block member.
pub fn modelet_analyze_block(
    values: &[i64],
    shell: &[i64],
    universe: &[i64],
) -> Result<(i64, Vec<i64>)> {
    for &v in values {
        if !in_universe(universe, v) {
            return Err(Error::ValueOutsideUniverse(v));
        }
    }
    let mode = modelet_mode(values, shell);
    let details = values
        .iter()
        .map(|&v| modelet_detail(v, mode, universe))
        .collect();
    Ok((mode, details))
}

/// Exact inverse of [`modelet_analyze_block`].
pub fn modelet_synthesize_block(mode: i64, details: &[i64], universe: &[i64]) -> Result<Vec<i64>> {
    details
        .iter()
        .map(|&d| modelet_reconstruct(mode, d, universe))
        .collect()
}

/// First-order shell around block (bi, bj, bk): fine cells adjacent to the
/// block (one-cell ring, clipped at grid borders), block members excluded.
/// The accessor form lets slab-windowed callers share the exact traversal.
pub fn gather_shell(
    dims: &GridDims,
    get: &impl Fn(usize, usize, usize) -> i64,
    bi: usize,
    bj: usize,
    bk: usize,
) -> Vec<i64> {
    let (wi, wj, wk) = (
        block_extent(bi, dims.ni),
        block_extent(bj, dims.nj),
        block_extent(bk, dims.nk),
    );
    let (i0, j0, k0) = (2 * bi, 2 * bj, 2 * bk);
    let lo = |v: usize| v.saturating_sub(1);
    let mut shell = Vec::new();
    for k in lo(k0)..(k0 + wk + 1).min(dims.nk) {
        for j in lo(j0)..(j0 + wj + 1).min(dims.nj) {
            for i in lo(i0)..(i0 + wi + 1).min(dims.ni) {
                let inside =
                    i >= i0 && i < i0 + wi && j >= j0 && j < j0 + wj && k >= k0 && k < k0 + wk;
                if !inside {
                    shell.push(get(i, j, k));
                }
            }
        }
    }
    shell
}

pub fn block_shell(
    dims: &GridDims,
    values: &[i64],
    bi: usize,
    bj: usize,
    bk: usize,
) -> Vec<i64> {
    gather_shell(dims, &|i, j, k| values[dims.cell_index(i, j, k)], bi, bj, bk)
}

/// Block member values in anchor-first order via an accessor.
pub fn gather_block(
    dims: &GridDims,
    get: &impl Fn(usize, usize, usize) -> i64,
    bi: usize,
    bj: usize,
    bk: usize,
) -> Vec<i64> {
    block_cells(dims, bi, bj, bk)
        .map(|(i, j, k)| get(i, j, k))
        .collect()
}

/// One analyzed property level: the coarse field plus the flat detail vector
/// in block order (K, J, I outermost to innermost, members in block order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyLevel {
    pub coarse: Vec<i64>,
    pub details: Vec<i64>,
}

/// Analyze one level of a continuous field over the ceil-halved partition.
pub fn haar_analyze_level(dims: &GridDims, values: &[i64]) -> Result<PropertyLevel> {
    let coarse_dims = dims.coarsened();
    let mut coarse = vec![0i64; coarse_dims.cell_count()];
    let mut details = Vec::with_capacity(dims.cell_count() - coarse_dims.cell_count());
    let mut block = Vec::with_capacity(8);
    for bk in 0..coarse_dims.nk {
        for bj in 0..coarse_dims.nj {
            for bi in 0..coarse_dims.ni {
                block.clear();
                block.extend(
                    block_cells(dims, bi, bj, bk).map(|(i, j, k)| values[dims.cell_index(i, j, k)]),
                );
                let (p, d) = haar_analyze_block(&block)?;
                coarse[coarse_dims.cell_index(bi, bj, bk)] = p;
                details.extend(d);
            }
        }
    }
    Ok(PropertyLevel { coarse, details })
}

/// Exact inverse of [`haar_analyze_level`].
pub fn haar_synthesize_level(
    fine_dims: &GridDims,
    level: &PropertyLevel,
) -> Result<Vec<i64>> {
    let coarse_dims = fine_dims.coarsened();
    let mut values = vec![0i64; fine_dims.cell_count()];
    let mut cursor = 0usize;
    for bk in 0..coarse_dims.nk {
        for bj in 0..coarse_dims.nj {
            for bi in 0..coarse_dims.ni {
                let cells: Vec<_> = block_cells(fine_dims, bi, bj, bk).collect();
                let m = cells.len();
                let p = level.coarse[coarse_dims.cell_index(bi, bj, bk)];
                let block = haar_synthesize_block(p, &level.details[cursor..cursor + m - 1])?;
                cursor += m - 1;
                for (&(i, j, k), &v) in cells.iter().zip(&block) {
                    values[fine_dims.cell_index(i, j, k)] = v;
                }
            }
        }
    }
    if cursor != level.details.len() {
        return Err(Error::CorruptDetail(format!(
            "continuous detail count {} does not match partition ({} consumed)",
            level.details.len(),
            cursor
        )));
    }
    Ok(values)
}

/// Analyze one level of a categorical field. Tie contexts are drawn from the
/// same level's fine field.
pub fn modelet_analyze_level(
    dims: &GridDims,
    values: &[i64],
    universe: &[i64],
) -> Result<PropertyLevel> {
    let coarse_dims = dims.coarsened();
    let mut coarse = vec![0i64; coarse_dims.cell_count()];
    let mut details = Vec::with_capacity(dims.cell_count());
    let mut block = Vec::with_capacity(8);
    for bk in 0..coarse_dims.nk {
        for bj in 0..coarse_dims.nj {
            for bi in 0..coarse_dims.ni {
                block.clear();
                block.extend(
                    block_cells(dims, bi, bj, bk).map(|(i, j, k)| values[dims.cell_index(i, j, k)]),
                );
                let shell = block_shell(dims, values, bi, bj, bk);
                let (mode, d) = modelet_analyze_block(&block, &shell, universe)?;
                coarse[coarse_dims.cell_index(bi, bj, bk)] = mode;
                details.extend(d);
            }
        }
    }
    Ok(PropertyLevel { coarse, details })
}

/// Exact inverse of [`modelet_analyze_level`].
pub fn modelet_synthesize_level(
    fine_dims: &GridDims,
    level: &PropertyLevel,
    universe: &[i64],
) -> Result<Vec<i64>> {
    let coarse_dims = fine_dims.coarsened();
    let mut values = vec![0i64; fine_dims.cell_count()];
    let mut cursor = 0usize;
    for bk in 0..coarse_dims.nk {
        for bj in 0..coarse_dims.nj {
            for bi in 0..coarse_dims.ni {
                let cells: Vec<_> = block_cells(fine_dims, bi, bj, bk).collect();
                let m = cells.len();
                let mode = level.coarse[coarse_dims.cell_index(bi, bj, bk)];
                let block =
                    modelet_synthesize_block(mode, &level.details[cursor..cursor + m], universe)?;
                cursor += m;
                for (&(i, j, k), &v) in cells.iter().zip(&block) {
                    values[fine_dims.cell_index(i, j, k)] = v;
                }
            }
        }
    }
    if cursor != level.details.len() {
        return Err(Error::CorruptDetail(format!(
            "categorical detail count {} does not match partition ({} consumed)",
            level.details.len(),
            cursor
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn haar_full_block_example() {
        // p' = 36; details 8*p_n - 36 for n = 2..8.
        let (p, d) = haar_analyze_block(&[1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        assert_eq!(p, 36);
        assert_eq!(d, vec![-20, -12, -4, 4, 12, 20, 28]);
        assert_eq!(
            haar_synthesize_block(p, &d).unwrap(),
            vec![1, 2, 3, 4, 5, 6, 7, 8]
        );
    }

    #[test]
    fn haar_constant_and_border_blocks() {
        let (p, d) = haar_analyze_block(&[5, 5, 5, 5, 5, 5, 5, 5]).unwrap();
        assert_eq!(p, 40);
        assert!(d.iter().all(|&x| x == 0));

        let (p, d) = haar_analyze_block(&[10, 14]).unwrap();
        assert_eq!(p, 24);
        assert_eq!(d, vec![4]);
        assert_eq!(haar_synthesize_block(p, &d).unwrap(), vec![10, 14]);
    }

    #[test]
    fn haar_roundtrip_random_blocks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20_000 {
            let m = *[1usize, 2, 4, 8].iter().nth(rng.gen_range(0..4)).unwrap();
            let block: Vec<i64> = (0..m).map(|_| rng.gen_range(-1_000_000..=1_000_000)).collect();
            let (p, d) = haar_analyze_block(&block).unwrap();
            assert_eq!(p, block.iter().sum::<i64>());
            for &x in &d {
                assert_eq!((x + p).rem_euclid(m as i64), 0);
            }
            assert_eq!(haar_synthesize_block(p, &d).unwrap(), block);
        }
    }

    #[test]
    fn haar_corrupt_divisibility() {
        assert!(matches!(
            haar_synthesize_block(36, &[-20, -12, -4, 4, 12, 20, 27]),
            Err(Error::CorruptDetail(_))
        ));
    }

    #[test]
    fn display_value_examples() {
        assert_eq!(haar_display_value(8 * 234_500, 6, 8), 0.2345);
        assert_eq!(haar_display_value(64 * 1_000_000, 6, 64), 1.0);
        // Border cell with block-size history 8 then 2.
        assert_eq!(haar_display_value(16 * 500_000, 6, 16), 0.5);
        let base = GridDims::new(5, 1, 1).unwrap();
        // Coarse cell 1 after two levels covers base cells 4..5 only.
        assert_eq!(footprint(&base, 2, 1, 0, 0), 1);
        assert_eq!(footprint(&base, 2, 0, 0, 0), 4);
    }

    #[test]
    fn modelet_flip_predicate() {
        let omega = [0i64, 1, 2, 3];
        // Raw -2, mirror 2*3-1 = 5 outside: stored +2.
        assert_eq!(modelet_detail(1, 3, &omega), 2);
        assert_eq!(modelet_reconstruct(3, 2, &omega).unwrap(), 1);
        // Raw positive never flips.
        let omega2 = [0i64, 1, 2];
        assert_eq!(modelet_detail(2, 0, &omega2), 2);
        assert_eq!(modelet_reconstruct(0, 2, &omega2).unwrap(), 2);
        // Negative with in-range mirror stays negative.
        let omega3 = [0i64, 1, 2, 3, 4];
        assert_eq!(modelet_detail(1, 2, &omega3), -1);
        assert_eq!(modelet_reconstruct(2, -1, &omega3).unwrap(), 1);
    }

    #[test]
    fn modelet_exhaustive_universes() {
        // Every universe in {0..7}, every (mode, value) pair: the per-cell map
        // round-trips and the flip never strands a detail.
        for mask in 1u16..256 {
            let omega: Vec<i64> = (0..8).filter(|&b| mask & (1 << b) != 0).collect();
            for &mode in &omega {
                for &v in &omega {
                    let d = modelet_detail(v, mode, &omega);
                    assert_eq!(modelet_reconstruct(mode, d, &omega).unwrap(), v);
                    if v < mode && in_universe(&omega, 2 * mode - v) {
                        assert!(d <= 0, "unflipped negative must stay negative");
                    }
                    assert_eq!(d.abs(), (v - mode).abs(), "flip never changes |d|");
                }
            }
        }
    }

    #[test]
    fn modelet_mode_tiebreak() {
        // counts {0:3, 1:2, 2:3}; shell favors 2.
        let block = [0, 0, 0, 1, 1, 2, 2, 2];
        let shell = [2, 2, 0];
        assert_eq!(modelet_mode(&block, &shell), 2);
        // Tie in block and empty shell: lowest class.
        assert_eq!(modelet_mode(&[0, 0, 2, 2], &[]), 0);
        // Uniform block.
        assert_eq!(modelet_mode(&[3; 8], &[]), 3);
    }

    #[test]
    fn modelet_unreconstructible_detected() {
        let omega = [0i64, 1];
        assert!(matches!(
            modelet_reconstruct(0, 5, &omega),
            Err(Error::Unreconstructible { .. })
        ));
    }

    #[test]
    fn level_roundtrips_and_sum_conservation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let dims = GridDims::new(
                rng.gen_range(1..=9),
                rng.gen_range(1..=9),
                rng.gen_range(1..=9),
            )
            .unwrap();
            let n = dims.cell_count();
            let cont: Vec<i64> = (0..n).map(|_| rng.gen_range(-10_000..=10_000)).collect();
            let lvl = haar_analyze_level(&dims, &cont).unwrap();
            assert_eq!(
                lvl.coarse.iter().map(|&v| v as i128).sum::<i128>(),
                cont.iter().map(|&v| v as i128).sum::<i128>()
            );
            assert_eq!(haar_synthesize_level(&dims, &lvl).unwrap(), cont);

            let omega: Vec<i64> = (0..rng.gen_range(1..=6)).collect();
            let cat: Vec<i64> = (0..n)
                .map(|_| omega[rng.gen_range(0..omega.len())])
                .collect();
            let lvl = modelet_analyze_level(&dims, &cat, &omega).unwrap();
            // Nesting: coarse values are a subset of the fine value set.
            for v in &lvl.coarse {
                assert!(cat.contains(v));
            }
            assert_eq!(
                modelet_synthesize_level(&dims, &lvl, &omega).unwrap(),
                cat
            );
        }
    }

    #[test]
    fn multi_level_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let dims = GridDims::new(7, 6, 5).unwrap();
        let n = dims.cell_count();
        let cont: Vec<i64> = (0..n).map(|_| rng.gen_range(-500..=500)).collect();
        let mut stack = Vec::new();
        let mut d = dims;
        let mut cur = cont.clone();
        for _ in 0..4 {
            let lvl = haar_analyze_level(&d, &cur).unwrap();
            cur = lvl.coarse.clone();
            stack.push((d, lvl));
            d = d.coarsened();
        }
        for (fd, lvl) in stack.iter().rev() {
            let mut l = lvl.clone();
            l.coarse = cur;
            cur = haar_synthesize_level(fd, &l).unwrap();
        }
        assert_eq!(cur, cont);
    }
}
