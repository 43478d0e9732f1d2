//! Deterministic synthetic corner-point models for tests and benchmarks.
//!
//! Fixtures are generator specs rather than data files: layered horizons with
//! an optional anticline dome and per-node jitter, vertical faults with a
//! prescribed throw, ACTNUM carving (exact-density sampling or an elliptic
//! boundary carve), layered rock-type categories with undulating boundaries,
//! and depth-correlated porosity. Everything derives from the seed, so a
//! fixture is reproducible from its spec alone.

use crate::error::{Error, Result};
use crate::grid::{
    quantize, ActnumField, CellPropertyField, CornerPointModel, GridDims, NodeZField, PillarSet,
    QuantizationParams, QUADRANTS,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultAxis {
    /// Fault plane at constant i (trace runs north-south).
    AtI,
    /// Fault plane at constant j (trace runs east-west).
    AtJ,
}

#[derive(Debug, Clone, Copy)]
pub struct FaultSpec {
    pub axis: FaultAxis,
    /// Node-line index of the fault plane, strictly inside the grid.
    pub index: usize,
    /// Depth offset added on the high-index side, in model units.
    pub throw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActnumSpec {
    Full,
    /// Exactly round(p * cells) active cells, chosen uniformly by seed.
    Density(f64),
    /// Columns outside an inscribed ellipse in the (i, j) plane are inactive.
    CarveEllipse,
}

#[derive(Debug, Clone)]
pub struct RockTypeSpec {
    /// Per-class volume proportions, summing to ~1.
    pub proportions: Vec<f64>,
    /// Boundary undulation amplitude in layers.
    pub wobble: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub ni: usize,
    pub nj: usize,
    pub nk: usize,
    pub origin: (f64, f64),
    pub spacing: (f64, f64),
    pub base_depth: f64,
    pub layer_thickness: f64,
    /// Dome amplitude in model units (0 = flat horizons).
    pub anticline: f64,
    /// Per-node depth jitter amplitude, kept below half a layer so columns
    /// stay monotone.
    pub jitter: f64,
    pub faults: Vec<FaultSpec>,
    pub actnum: ActnumSpec,
    pub rock_types: Option<RockTypeSpec>,
    pub porosity: bool,
    pub seed: u64,
}

impl GeneratorSpec {
    fn base(ni: usize, nj: usize, nk: usize) -> Self {
        GeneratorSpec {
            ni,
            nj,
            nk,
            origin: (1000.0, 2000.0),
            spacing: (100.0, 100.0),
            base_depth: 1500.0,
            layer_thickness: 20.0,
            anticline: 0.0,
            jitter: 0.0,
            faults: Vec::new(),
            actnum: ActnumSpec::Full,
            rock_types: None,
            porosity: false,
            seed: 1,
        }
    }

    /// Flat horizons, two rock types split by layer, everything active.
    pub fn flat_layered(ni: usize, nj: usize, nk: usize) -> Self {
        GeneratorSpec {
            rock_types: Some(RockTypeSpec {
                proportions: vec![0.5, 0.5],
                wobble: 0.0,
            }),
            ..Self::base(ni, nj, nk)
        }
    }

    /// One straight north-south fault at node line `at_i`.
    pub fn single_fault(ni: usize, nj: usize, nk: usize, at_i: usize, throw: f64) -> Self {
        GeneratorSpec {
            faults: vec![FaultSpec {
                axis: FaultAxis::AtI,
                index: at_i,
                throw,
            }],
            ..Self::base(ni, nj, nk)
        }
    }

    /// Adversarial fixture: jittered horizons, up to three faults, random
    /// activity, one continuous and one categorical property.
    pub fn randomized(
        ni: usize,
        nj: usize,
        nk: usize,
        n_faults: usize,
        act_density: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(7));
        let mut faults = Vec::new();
        if ni >= 2 && nj >= 2 && nk >= 2 {
            for _ in 0..n_faults {
                let axis = if rng.gen::<bool>() { FaultAxis::AtI } else { FaultAxis::AtJ };
                let extent = match axis {
                    FaultAxis::AtI => ni,
                    FaultAxis::AtJ => nj,
                };
                faults.push(FaultSpec {
                    axis,
                    index: rng.gen_range(1..extent.max(2)),
                    throw: rng.gen_range(5.0..80.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 },
                });
            }
        }
        GeneratorSpec {
            anticline: rng.gen_range(0.0..30.0),
            jitter: 4.0,
            faults,
            actnum: if act_density >= 1.0 {
                ActnumSpec::Full
            } else {
                ActnumSpec::Density(act_density)
            },
            rock_types: Some(RockTypeSpec {
                proportions: vec![0.4, 0.3, 0.2, 0.1],
                wobble: 1.5,
            }),
            porosity: true,
            seed,
            ..Self::base(ni, nj, nk)
        }
    }

    /// Smooth layered fixture: anticline dome, undulating rock-type layers in
    /// 0.4/0.3/0.2/0.1 proportions, depth-correlated porosity, all active.
    /// Boundary undulation scales with the k extent so coarse blocks sample
    /// boundary positions diversely.
    pub fn smooth(ni: usize, nj: usize, nk: usize) -> Self {
        GeneratorSpec {
            anticline: 60.0,
            rock_types: Some(RockTypeSpec {
                proportions: vec![0.4, 0.3, 0.2, 0.1],
                wobble: nk as f64 * 0.2,
            }),
            porosity: true,
            ..Self::base(ni, nj, nk)
        }
    }

    /// Boundary-carved fixture: inactive margin columns around an ellipse.
    pub fn carved(ni: usize, nj: usize, nk: usize) -> Self {
        GeneratorSpec {
            anticline: 40.0,
            actnum: ActnumSpec::CarveEllipse,
            porosity: true,
            ..Self::base(ni, nj, nk)
        }
    }

    /// Depths that are an affine map of small integers: dense decimal text
    /// that general-purpose coders already model well, so decomposition may
    /// not improve their ratio.
    pub fn interpolated(ni: usize, nj: usize, nk: usize) -> Self {
        GeneratorSpec {
            layer_thickness: 12.5,
            ..Self::base(ni, nj, nk)
        }
    }
}

/// Small deterministic position hash for jitter, independent of iteration
/// order (splitmix64 over the packed position).
fn position_noise(seed: u64, i: usize, j: usize, k: usize) -> f64 {
    let mut x = seed
        ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (j as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ (k as u64).wrapping_mul(0x94d0_49bb_1331_11eb);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    // Map to [-1, 1).
    (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn validate(spec: &GeneratorSpec) -> Result<()> {
    if spec.ni == 0 || spec.nj == 0 || spec.nk == 0 {
        return Err(Error::SpecInvalid("cell counts must be >= 1".into()));
    }
    if !spec.faults.is_empty() && (spec.ni < 2 || spec.nj < 2 || spec.nk < 2) {
        return Err(Error::SpecInvalid(
            "faulted fixtures need at least 2x2x2 cells".into(),
        ));
    }
    for f in &spec.faults {
        let extent = match f.axis {
            FaultAxis::AtI => spec.ni,
            FaultAxis::AtJ => spec.nj,
        };
        if f.index == 0 || f.index >= extent {
            return Err(Error::SpecInvalid(format!(
                "fault index {} not strictly inside 1..{extent}",
                f.index
            )));
        }
        if !f.throw.is_finite() {
            return Err(Error::SpecInvalid("fault throw must be finite".into()));
        }
    }
    if let ActnumSpec::Density(p) = spec.actnum {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::SpecInvalid(format!("ACTNUM density {p} outside [0, 1]")));
        }
    }
    if let Some(rt) = &spec.rock_types {
        if rt.proportions.is_empty() {
            return Err(Error::SpecInvalid("empty rock-type proportions".into()));
        }
        let sum: f64 = rt.proportions.iter().sum();
        if (sum - 1.0).abs() > 0.01 || rt.proportions.iter().any(|&p| p <= 0.0) {
            return Err(Error::SpecInvalid(
                "rock-type proportions must be positive and sum to 1".into(),
            ));
        }
    }
    if spec.layer_thickness <= 0.0 || spec.jitter < 0.0 || 2.0 * spec.jitter >= spec.layer_thickness
    {
        return Err(Error::SpecInvalid(
            "layer thickness must exceed twice the jitter".into(),
        ));
    }
    Ok(())
}

/// Build the model described by `spec`, quantized with `quant`.
pub fn generate(spec: &GeneratorSpec, quant: QuantizationParams) -> Result<CornerPointModel> {
    validate(spec)?;
    let dims = GridDims::new(spec.ni, spec.nj, spec.nk)?;
    let mut model = CornerPointModel::new(dims, quant);
    let ge = quant.geom_exp;
    let (ni, nj, nk) = (spec.ni, spec.nj, spec.nk);

    // Horizon depth at node (i, j), layer r, before fault offsets.
    let dome = |i: usize, j: usize| {
        if spec.anticline == 0.0 {
            0.0
        } else {
            let u = i as f64 / ni as f64 - 0.5;
            let v = j as f64 / nj as f64 - 0.5;
            spec.anticline * (-8.0 * (u * u + v * v)).exp()
        }
    };
    let horizon = |i: usize, j: usize, r: usize| {
        spec.base_depth + r as f64 * spec.layer_thickness - dome(i, j)
            + spec.jitter * position_noise(spec.seed, i, j, r)
    };
    // Depth offset of a cell column from the fault set.
    let fault_offset = |ci: usize, cj: usize| {
        spec.faults
            .iter()
            .map(|f| {
                let side = match f.axis {
                    FaultAxis::AtI => ci >= f.index,
                    FaultAxis::AtJ => cj >= f.index,
                };
                if side {
                    f.throw
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    };

    // Pillars: vertical, spanning the model with margin.
    let depth_span = spec.base_depth + nk as f64 * spec.layer_thickness
        + spec.faults.iter().map(|f| f.throw.abs()).sum::<f64>()
        + spec.anticline
        + 50.0;
    let mut pillars = PillarSet::zeroed(dims);
    for j in 0..=nj {
        for i in 0..=ni {
            let p = dims.pillar_index(i, j);
            let x = quantize(spec.origin.0 + i as f64 * spec.spacing.0, ge)?;
            let y = quantize(spec.origin.1 + j as f64 * spec.spacing.1, ge)?;
            pillars.planes[0][p] = x;
            pillars.planes[1][p] = y;
            pillars.planes[2][p] = quantize(spec.base_depth - spec.anticline - 50.0, ge)?;
            pillars.planes[3][p] = x;
            pillars.planes[4][p] = y;
            pillars.planes[5][p] = quantize(depth_span, ge)?;
        }
    }
    model.pillars = pillars;

    let mut nodez = NodeZField::zeroed(dims);
    for j in 0..=nj {
        for i in 0..=ni {
            for q in QUADRANTS {
                if let Some((ci, cj)) = q.cell_column(&dims, i, j) {
                    let off = fault_offset(ci, cj);
                    for r in 0..=nk {
                        nodez.set(q, i, j, r, quantize(horizon(i, j, r) + off, ge)?);
                    }
                }
            }
        }
    }
    model.nodez = nodez;

    model.actnum = build_actnum(spec, &dims);
    if let Some(rt) = &spec.rock_types {
        model.properties.push(build_rock_types(rt, &dims));
    }
    if spec.porosity {
        model.properties.push(build_porosity(spec, &dims, quant)?);
    }
    Ok(model)
}

fn build_actnum(spec: &GeneratorSpec, dims: &GridDims) -> ActnumField {
    match spec.actnum {
        ActnumSpec::Full => ActnumField::all_active(*dims),
        ActnumSpec::Density(p) => {
            let n = dims.cell_count();
            let target = (p * n as f64).round() as usize;
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xac71);
            order.shuffle(&mut rng);
            let mut values = vec![false; n];
            for &cell in order.iter().take(target) {
                values[cell] = true;
            }
            ActnumField { dims: *dims, values }
        }
        ActnumSpec::CarveEllipse => {
            let mut values = vec![false; dims.cell_count()];
            for k in 0..dims.nk {
                for j in 0..dims.nj {
                    for i in 0..dims.ni {
                        let u = (i as f64 + 0.5) / dims.ni as f64 - 0.5;
                        let v = (j as f64 + 0.5) / dims.nj as f64 - 0.5;
                        let inside = u * u / 0.25 + v * v / 0.25 <= 1.0;
                        values[dims.cell_index(i, j, k)] = inside;
                    }
                }
            }
            ActnumField { dims: *dims, values }
        }
    }
}

fn build_rock_types(rt: &RockTypeSpec, dims: &GridDims) -> CellPropertyField {
    // Class boundaries as fractional layer depths, undulating in (i, j) so
    // boundary blocks do not all resolve ties the same way.
    let n_classes = rt.proportions.len();
    let mut cum = Vec::with_capacity(n_classes);
    let mut acc = 0.0;
    for p in &rt.proportions {
        acc += p;
        cum.push(acc);
    }
    let mut values = vec![0i64; dims.cell_count()];
    let tau = 2.0 * std::f64::consts::PI;
    for j in 0..dims.nj {
        for i in 0..dims.ni {
            let u = i as f64 / dims.ni.max(1) as f64;
            let v = j as f64 / dims.nj.max(1) as f64;
            // Two harmonics with per-boundary phases: boundary surfaces must
            // vary at block scale, or coarse modes erase thin bands.
            let wob = |c: usize| {
                let p = 0.9 * c as f64;
                rt.wobble
                    * (0.6 * ((tau * (u + 0.31 * p)).sin() + (tau * (v + 0.17 * p)).cos())
                        + 0.4 * ((2.0 * tau * (u - 0.23 * p)).cos()
                            * (2.0 * tau * (v + 0.41 * p)).sin()))
            };
            for k in 0..dims.nk {
                let depth = k as f64 + 0.5;
                let mut class = 0usize;
                for c in 0..n_classes - 1 {
                    if depth > cum[c] * dims.nk as f64 + wob(c) {
                        class = c + 1;
                    }
                }
                values[dims.cell_index(i, j, k)] = class as i64;
            }
        }
    }
    // Universe derives from the values actually present, matching what a
    // reparse of the written file would declare.
    CellPropertyField::categorical("ROCKTYPE", values)
}

fn build_porosity(
    spec: &GeneratorSpec,
    dims: &GridDims,
    quant: QuantizationParams,
) -> Result<CellPropertyField> {
    let mut values = vec![0i64; dims.cell_count()];
    for k in 0..dims.nk {
        for j in 0..dims.nj {
            for i in 0..dims.ni {
                let depth_frac = (k as f64 + 0.5) / dims.nk as f64;
                let trend = 0.28 - 0.12 * depth_frac;
                let lateral = 0.04
                    * ((i as f64 / dims.ni as f64 * 3.1).sin()
                        * (j as f64 / dims.nj as f64 * 2.3).cos());
                let noise = 0.01 * position_noise(spec.seed ^ 0x90f0, i, j, k);
                let phi = (trend + lateral + noise).clamp(0.01, 0.40);
                values[dims.cell_index(i, j, k)] = quantize(phi, quant.prop_exp)?;
            }
        }
    }
    Ok(CellPropertyField::continuous("PORO", values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::derive_config_map;

    #[test]
    fn flat_fixture_is_fault_free() {
        let model = generate(
            &GeneratorSpec::flat_layered(8, 8, 4),
            QuantizationParams::default(),
        )
        .unwrap();
        let map = derive_config_map(&model.nodez, 0);
        assert!(map.configs.iter().all(|c| c.fault_free()));
        assert_eq!(model.properties.len(), 1);
    }

    #[test]
    fn deterministic_by_seed() {
        let spec = GeneratorSpec::randomized(6, 5, 4, 2, 0.5, 42);
        let a = generate(&spec, QuantizationParams::default()).unwrap();
        let b = generate(&spec, QuantizationParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_is_exact() {
        let mut spec = GeneratorSpec::base(16, 16, 8);
        spec.actnum = ActnumSpec::Density(0.2);
        let model = generate(&spec, QuantizationParams::default()).unwrap();
        let density = model.actnum.active_count() as f64 / model.dims.cell_count() as f64;
        assert!((density - 0.2).abs() <= 0.01, "density {density}");
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = GeneratorSpec::single_fault(1, 4, 4, 1, 10.0);
        assert!(matches!(
            generate(&spec, QuantizationParams::default()),
            Err(Error::SpecInvalid(_))
        ));
        spec = GeneratorSpec::single_fault(4, 4, 4, 4, 10.0);
        assert!(matches!(
            generate(&spec, QuantizationParams::default()),
            Err(Error::SpecInvalid(_))
        ));
    }

    #[test]
    fn columns_stay_monotone() {
        let spec = GeneratorSpec::randomized(7, 6, 5, 3, 1.0, 9);
        let model = generate(&spec, QuantizationParams::default()).unwrap();
        let findings = crate::grid::validate(&model);
        assert!(
            !findings
                .iter()
                .any(|f| matches!(f, crate::grid::Finding::MonotonicityViolation { .. })),
            "{findings:?}"
        );
    }
}
