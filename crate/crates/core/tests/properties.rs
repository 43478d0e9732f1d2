//! Property tests for the core algebraic invariants.

use hexashrink::grid::{zcorn_to_nodez, nodez_to_zcorn, GridDims, HorizontalFaultPolicy};
use hexashrink::lift;
use hexashrink::props;
use proptest::prelude::*;

proptest! {
    /// Perfect reconstruction and count preservation for arbitrary signals.
    #[test]
    fn lift_roundtrip(z in prop::collection::vec(-1_000_000i64..1_000_000, 1..130)) {
        let pair = lift::analyze_1d(&z);
        prop_assert_eq!(pair.approx.len() + pair.details.len(), z.len());
        prop_assert_eq!(pair.approx[0], z[0]);
        prop_assert_eq!(*pair.approx.last().unwrap(), *z.last().unwrap());
        prop_assert_eq!(lift::synthesize_1d(&pair).unwrap(), z.clone());

        let np = lift::node_lift(&z);
        prop_assert_eq!(lift::node_unlift(&np).unwrap(), z);
    }

    /// Constant signals are annihilated by the prediction step.
    #[test]
    fn lift_constant_annihilation(c in -100_000i64..100_000, n in 1usize..80) {
        let z = vec![c; n];
        let pair = lift::analyze_1d(&z);
        prop_assert!(pair.details.iter().all(|&d| d == 0));
        prop_assert!(pair.approx.iter().all(|&a| a == c));
    }

    /// Sum-scheme blocks: divisibility, sum conservation, exact inverse.
    #[test]
    fn haar_block_roundtrip(block in prop::collection::vec(-1_000_000i64..1_000_000, 1..9)) {
        let (p, d) = props::haar_analyze_block(&block).unwrap();
        prop_assert_eq!(p, block.iter().sum::<i64>());
        let m = block.len() as i64;
        for &x in &d {
            prop_assert_eq!((x + p).rem_euclid(m), 0);
        }
        prop_assert_eq!(props::haar_synthesize_block(p, &d).unwrap(), block);
    }

    /// Modelet blocks round-trip for any universe and any members drawn
    /// from it; the flip never changes a detail's magnitude.
    #[test]
    fn modelet_block_roundtrip(
        universe_mask in 1u16..=255,
        picks in prop::collection::vec(0usize..8, 1..9),
        shell_picks in prop::collection::vec(0usize..8, 0..16),
    ) {
        let omega: Vec<i64> = (0..8).filter(|&b| universe_mask & (1 << b) != 0).collect();
        let block: Vec<i64> = picks.iter().map(|&p| omega[p % omega.len()]).collect();
        let shell: Vec<i64> = shell_picks.iter().map(|&p| omega[p % omega.len()]).collect();
        let (mode, details) = props::modelet_analyze_block(&block, &shell, &omega).unwrap();
        prop_assert!(omega.contains(&mode));
        for (&v, &d) in block.iter().zip(&details) {
            prop_assert_eq!(d.abs(), (v - mode).abs());
        }
        prop_assert_eq!(
            props::modelet_synthesize_block(mode, &details, &omega).unwrap(),
            block
        );
    }

    /// Cell-corner arrays with consistent layer interfaces survive the node
    /// bridge bit-exactly.
    #[test]
    fn zcorn_roundtrip(
        ni in 1usize..4, nj in 1usize..4, nk in 1usize..4,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let dims = GridDims::new(ni, nj, nk).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // Node-consistent corners: one depth per (pillar corner, layer
        // boundary), duplicated into the adjacent cells' top/bottom slots.
        let mut zcorn = vec![0i64; 8 * dims.cell_count()];
        for cj in 0..nj {
            for ci in 0..ni {
                for b in 0..2 {
                    for a in 0..2 {
                        let mut depth = rng.gen_range(-1000i64..1000);
                        for k in 0..nk {
                            let step = rng.gen_range(1i64..100);
                            zcorn[hexashrink::grid::zcorn_index(&dims, ci, cj, k, a, b, 0)] = depth;
                            zcorn[hexashrink::grid::zcorn_index(&dims, ci, cj, k, a, b, 1)] =
                                depth + step;
                            depth += step;
                        }
                    }
                }
            }
        }
        let (field, side) = zcorn_to_nodez(&zcorn, &dims, HorizontalFaultPolicy::Reject).unwrap();
        prop_assert!(side.is_none());
        prop_assert_eq!(nodez_to_zcorn(&field, &dims, None).unwrap(), zcorn);
    }

    /// Quantize then dequantize lands within half an ulp of the scale (plus
    /// the f64 representation error of the product, which matters once
    /// |x| * 10^exp approaches 2^52).
    #[test]
    fn quantize_half_ulp(x in -1.0e6f64..1.0e6, exp in 0u8..=9) {
        let v = hexashrink::grid::quantize(x, exp).unwrap();
        let back = hexashrink::grid::dequantize(v, exp);
        let ulp = 10f64.powi(-(exp as i32));
        let float_slack = x.abs() * f64::EPSILON * 2.0;
        prop_assert!((back - x).abs() <= 0.5 * ulp + float_slack);
    }
}
