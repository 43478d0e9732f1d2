//! In-memory corner-point grid model.
//!
//! All coordinates and continuous property values live in a signed fixed-point
//! integer domain (a value `v` at scale `10^e` represents the real `v / 10^e`).
//! The transforms in this crate are only exactly reversible on integers, so
//! quantization happens once at ingest and every later stage is
//! integer-to-integer.
//!
//! Geometry is carried in two pieces: a [`PillarSet`] with the (x, y, z)
//! endpoints of every pillar, and a [`NodeZField`] holding, per lattice node,
//! the depths of the up to four bottom vertices of the adjacent cell columns
//! (the north-west, north-east, south-west and south-east quadrants). Vertical
//! gaps between layers (horizontal faults) are assumed absent; ingest verifies
//! this and can divert offending top corners into a side channel.

use crate::error::{Error, Result};

/// Values whose magnitude exceeds this cannot safely pass through the
/// transforms (continuous approximations grow by the block size per level).
pub const WORKING_RANGE: i64 = 1 << 62;

/// Cell counts per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridDims {
    pub ni: usize,
    pub nj: usize,
    pub nk: usize,
}

impl GridDims {
    pub fn new(ni: usize, nj: usize, nk: usize) -> Result<Self> {
        if ni == 0 || nj == 0 || nk == 0 {
            return Err(Error::SpecInvalid("cell counts must be >= 1".into()));
        }
        Ok(GridDims { ni, nj, nk })
    }

    pub fn cell_count(&self) -> usize {
        self.ni * self.nj * self.nk
    }

    /// Node lattice extents: one more node than cells per axis.
    pub fn node_dims(&self) -> (usize, usize, usize) {
        (self.ni + 1, self.nj + 1, self.nk + 1)
    }

    pub fn node_count(&self) -> usize {
        (self.ni + 1) * (self.nj + 1) * (self.nk + 1)
    }

    pub fn pillar_count(&self) -> usize {
        (self.ni + 1) * (self.nj + 1)
    }

    /// Dims after one dyadic coarsening step (ceil-halved per axis).
    pub fn coarsened(&self) -> GridDims {
        GridDims {
            ni: self.ni.div_ceil(2),
            nj: self.nj.div_ceil(2),
            nk: self.nk.div_ceil(2),
        }
    }

    /// Deepest permitted decomposition: floor(log2(max dim)) + 1 levels.
    pub fn max_levels(&self) -> u32 {
        let m = self.ni.max(self.nj).max(self.nk) as u64;
        63 - m.leading_zeros() + 1
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.ni && j < self.nj && k < self.nk);
        i + self.ni * (j + self.nj * k)
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i <= self.ni && j <= self.nj && k <= self.nk);
        i + (self.ni + 1) * (j + (self.nj + 1) * k)
    }

    pub fn pillar_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.ni && j <= self.nj);
        i + (self.ni + 1) * j
    }
}

/// The four cell-column quadrants meeting at a lattice node, named by compass
/// direction in the (i, j) plane (i grows east, j grows north).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrant {
    Nw = 0,
    Ne = 1,
    Sw = 2,
    Se = 3,
}

pub const QUADRANTS: [Quadrant; 4] = [Quadrant::Nw, Quadrant::Ne, Quadrant::Sw, Quadrant::Se];

impl Quadrant {
    /// Cell column adjacent to node (i, j) in this quadrant, if it exists.
    pub fn cell_column(
        self,
        dims: &GridDims,
        i: usize,
        j: usize,
    ) -> Option<(usize, usize)> {
        let (ci, cj) = match self {
            Quadrant::Nw => (i.checked_sub(1)?, j),
            Quadrant::Ne => (i, j),
            Quadrant::Sw => (i.checked_sub(1)?, j.checked_sub(1)?),
            Quadrant::Se => (i, j.checked_sub(1)?),
        };
        (ci < dims.ni && cj < dims.nj).then_some((ci, cj))
    }

    /// Whether node (i, j) carries this quadrant on a lattice of `dims`.
    pub fn present(self, dims: &GridDims, i: usize, j: usize) -> bool {
        self.cell_column(dims, i, j).is_some()
    }
}

/// Quadrants present at node (i, j), in canonical NW, NE, SW, SE order.
pub fn present_quadrants(dims: &GridDims, i: usize, j: usize) -> impl Iterator<Item = Quadrant> + '_ {
    QUADRANTS
        .into_iter()
        .filter(move |q| q.present(dims, i, j))
}

/// Per-node bottom-vertex depths over the full node lattice.
///
/// One dense array per quadrant; slots whose quadrant is structurally absent
/// (lattice borders) are never read. Along k, index `r` holds the shared depth
/// of the top corner of cell layer `r` and the bottom corner of layer `r - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeZField {
    pub dims: GridDims,
    planes: [Vec<i64>; 4],
}

impl NodeZField {
    pub fn zeroed(dims: GridDims) -> Self {
        let n = dims.node_count();
        NodeZField {
            dims,
            planes: [vec![0; n], vec![0; n], vec![0; n], vec![0; n]],
        }
    }

    #[inline]
    pub fn get(&self, q: Quadrant, i: usize, j: usize, k: usize) -> i64 {
        self.planes[q as usize][self.dims.node_index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, q: Quadrant, i: usize, j: usize, k: usize, v: i64) {
        let idx = self.dims.node_index(i, j, k);
        self.planes[q as usize][idx] = v;
    }

    /// Whole storage plane of one quadrant (node-index order; structurally
    /// absent slots are zero).
    pub fn plane(&self, q: Quadrant) -> &[i64] {
        &self.planes[q as usize]
    }

    /// Full depth column of one quadrant along k (length nk + 1).
    pub fn column(&self, q: Quadrant, i: usize, j: usize) -> Vec<i64> {
        (0..=self.dims.nk).map(|k| self.get(q, i, j, k)).collect()
    }

    pub fn set_column(&mut self, q: Quadrant, i: usize, j: usize, col: &[i64]) {
        debug_assert_eq!(col.len(), self.dims.nk + 1);
        for (k, &v) in col.iter().enumerate() {
            self.set(q, i, j, k, v);
        }
    }
}

/// Pillar endpoint coordinates: six planes over the (ni+1) x (nj+1) lattice.
/// Ceil is the high (top) end of each pillar, floor the low end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PillarSet {
    pub dims: GridDims,
    /// [ceil x, ceil y, ceil z, floor x, floor y, floor z]
    pub planes: [Vec<i64>; 6],
}

pub const PILLAR_PLANE_NAMES: [&str; 6] = [
    "ceil_x", "ceil_y", "ceil_z", "floor_x", "floor_y", "floor_z",
];

impl PillarSet {
    pub fn zeroed(dims: GridDims) -> Self {
        let n = dims.pillar_count();
        PillarSet {
            dims,
            planes: std::array::from_fn(|_| vec![0; n]),
        }
    }

    pub fn ceil_point(&self, i: usize, j: usize) -> (i64, i64, i64) {
        let p = self.dims.pillar_index(i, j);
        (self.planes[0][p], self.planes[1][p], self.planes[2][p])
    }

    pub fn floor_point(&self, i: usize, j: usize) -> (i64, i64, i64) {
        let p = self.dims.pillar_index(i, j);
        (self.planes[3][p], self.planes[4][p], self.planes[5][p])
    }

    pub fn degenerate_pillar_count(&self) -> usize {
        (0..self.dims.pillar_count())
            .filter(|&p| (0..3).all(|c| self.planes[c][p] == self.planes[c + 3][p]))
            .count()
    }
}

/// Per-cell activity flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActnumField {
    pub dims: GridDims,
    pub values: Vec<bool>,
}

impl ActnumField {
    pub fn all_active(dims: GridDims) -> Self {
        ActnumField {
            dims,
            values: vec![true; dims.cell_count()],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.values[self.dims.cell_index(i, j, k)]
    }

    pub fn active_count(&self) -> usize {
        self.values.iter().filter(|&&a| a).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Continuous,
    Categorical,
}

/// A named scalar cell property.
///
/// Continuous values are fixed-point integers at the model's property scale;
/// categorical values are non-negative class indices drawn from the declared
/// universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPropertyField {
    pub name: String,
    pub kind: PropertyKind,
    pub values: Vec<i64>,
    /// Class universe for categorical fields (sorted, deduplicated). Empty for
    /// continuous fields.
    pub universe: Vec<i64>,
}

impl CellPropertyField {
    pub fn continuous(name: impl Into<String>, values: Vec<i64>) -> Self {
        CellPropertyField {
            name: name.into(),
            kind: PropertyKind::Continuous,
            values,
            universe: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<i64>) -> Self {
        let mut universe: Vec<i64> = values.to_vec();
        universe.sort_unstable();
        universe.dedup();
        CellPropertyField {
            name: name.into(),
            kind: PropertyKind::Categorical,
            values,
            universe,
        }
    }
}

/// Fixed-point scales, stored as powers of ten and recorded in every
/// serialized artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizationParams {
    /// Geometry scale exponent (default 3: millimetre resolution per metre unit).
    pub geom_exp: u8,
    /// Continuous-property scale exponent (default 6).
    pub prop_exp: u8,
}

impl Default for QuantizationParams {
    fn default() -> Self {
        QuantizationParams {
            geom_exp: 3,
            prop_exp: 6,
        }
    }
}

impl QuantizationParams {
    pub fn geom_scale(&self) -> i64 {
        10i64.pow(self.geom_exp as u32)
    }

    pub fn prop_scale(&self) -> i64 {
        10i64.pow(self.prop_exp as u32)
    }
}

/// Quantize a finite real to fixed point: round(x * 10^exp), half away from
/// zero, rejecting results outside the working range.
pub fn quantize(x: f64, exp: u8) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::OverflowRisk(format!("non-finite input {x}")));
    }
    let scaled = x * 10f64.powi(exp as i32);
    let rounded = scaled.round();
    if rounded.abs() >= WORKING_RANGE as f64 {
        return Err(Error::OverflowRisk(format!("{x} at scale 1e{exp}")));
    }
    Ok(rounded as i64)
}

/// Inverse of [`quantize`] up to half an ulp of the scale.
pub fn dequantize(v: i64, exp: u8) -> f64 {
    v as f64 / 10f64.powi(exp as i32)
}

/// Verbatim keyword block the parser does not interpret; re-emitted untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpaqueBlock {
    pub keyword: String,
    /// Raw text of the block, keyword included, up to and including its
    /// terminating slash.
    pub text: String,
}

/// A complete corner-point model in the quantized integer domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerPointModel {
    pub dims: GridDims,
    pub quant: QuantizationParams,
    pub pillars: PillarSet,
    pub nodez: NodeZField,
    pub actnum: ActnumField,
    pub properties: Vec<CellPropertyField>,
    /// Top-corner depths (the c = 0 half of ZCORN, cell-corner layout) kept
    /// untransformed when horizontal faults were tolerated at ingest.
    pub top_z_sidechannel: Option<Vec<i64>>,
    /// Unknown keyword blocks preserved verbatim.
    pub extras: Vec<OpaqueBlock>,
}

impl CornerPointModel {
    pub fn new(dims: GridDims, quant: QuantizationParams) -> Self {
        CornerPointModel {
            dims,
            quant,
            pillars: PillarSet::zeroed(dims),
            nodez: NodeZField::zeroed(dims),
            actnum: ActnumField::all_active(dims),
            properties: Vec::new(),
            top_z_sidechannel: None,
            extras: Vec::new(),
        }
    }
}

/// ZCORN linear index for cell (i, j, k), corner (a, b, c) with a along i,
/// b along j, c = 0 top / 1 bottom. i-pairs run fastest, then j-pairs, then
/// k-pairs, top face of a layer before its bottom face.
pub fn zcorn_index(dims: &GridDims, i: usize, j: usize, k: usize, a: usize, b: usize, c: usize) -> usize {
    let ci = 2 * i + a;
    let cj = 2 * j + b;
    let ck = 2 * k + c;
    ci + 2 * dims.ni * (cj + 2 * dims.nj * ck)
}

/// Node quadrant holding the corner (a, b) of cell column (ci, cj): returns
/// the node (i, j) and quadrant.
fn corner_node(ci: usize, cj: usize, a: usize, b: usize) -> (usize, usize, Quadrant) {
    let i = ci + a;
    let j = cj + b;
    let q = match (a, b) {
        (0, 0) => Quadrant::Ne,
        (1, 0) => Quadrant::Nw,
        (0, 1) => Quadrant::Se,
        (1, 1) => Quadrant::Sw,
        _ => unreachable!(),
    };
    (i, j, q)
}

/// Policy for cell stacks whose top corners do not meet the layer above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HorizontalFaultPolicy {
    /// Reject the field (default).
    #[default]
    Reject,
    /// Keep the untransformed top-corner array as a side channel.
    SideChannel,
}

/// Convert a cell-corner depth array (ZCORN layout) into the node-centric
/// field, verifying the no-horizontal-fault assumption.
///
/// Returns the node field plus the optional top-corner side channel (present
/// only when violations exist and the policy admits them).
pub fn zcorn_to_nodez(
    zcorn: &[i64],
    dims: &GridDims,
    policy: HorizontalFaultPolicy,
) -> Result<(NodeZField, Option<Vec<i64>>)> {
    let expected = 8 * dims.cell_count();
    if zcorn.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "ZCORN",
            expected,
            actual: zcorn.len(),
        });
    }

    let mut violation: Option<(usize, usize, usize)> = None;
    'scan: for k in 1..dims.nk {
        for cj in 0..dims.nj {
            for ci in 0..dims.ni {
                for b in 0..2 {
                    for a in 0..2 {
                        let top = zcorn[zcorn_index(dims, ci, cj, k, a, b, 0)];
                        let bottom_above = zcorn[zcorn_index(dims, ci, cj, k - 1, a, b, 1)];
                        if top != bottom_above {
                            violation = Some((ci, cj, k));
                            break 'scan;
                        }
                    }
                }
            }
        }
    }
    let sidechannel = match (violation, policy) {
        (Some((i, j, k)), HorizontalFaultPolicy::Reject) => {
            return Err(Error::HorizontalFaultViolation(i, j, k))
        }
        (Some(_), HorizontalFaultPolicy::SideChannel) => {
            // Whole top-corner half of ZCORN, in cell-corner layout.
            let mut tops = Vec::with_capacity(4 * dims.cell_count());
            for k in 0..dims.nk {
                for cj in 0..dims.nj {
                    for ci in 0..dims.ni {
                        for b in 0..2 {
                            for a in 0..2 {
                                tops.push(zcorn[zcorn_index(dims, ci, cj, k, a, b, 0)]);
                            }
                        }
                    }
                }
            }
            Some(tops)
        }
        (None, _) => None,
    };

    let mut field = NodeZField::zeroed(*dims);
    for cj in 0..dims.nj {
        for ci in 0..dims.ni {
            for b in 0..2 {
                for a in 0..2 {
                    let (i, j, q) = corner_node(ci, cj, a, b);
                    // Node layer r: bottom corner of cell layer r - 1 for
                    // r >= 1; the model top at r = 0.
                    field.set(q, i, j, 0, zcorn[zcorn_index(dims, ci, cj, 0, a, b, 0)]);
                    for r in 1..=dims.nk {
                        field.set(q, i, j, r, zcorn[zcorn_index(dims, ci, cj, r - 1, a, b, 1)]);
                    }
                }
            }
        }
    }
    Ok((field, sidechannel))
}

/// Exact inverse of [`zcorn_to_nodez`] on its image: regenerate the duplicated
/// top corners from the layer above's bottom corners (or from the side channel
/// when horizontal faults were tolerated).
pub fn nodez_to_zcorn(
    field: &NodeZField,
    dims: &GridDims,
    sidechannel: Option<&[i64]>,
) -> Result<Vec<i64>> {
    if field.dims != *dims {
        return Err(Error::DimensionMismatch {
            what: "NodeZField extent",
            expected: dims.cell_count(),
            actual: field.dims.cell_count(),
        });
    }
    if let Some(sc) = sidechannel {
        let expected = 4 * dims.cell_count();
        if sc.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "top-Z side channel",
                expected,
                actual: sc.len(),
            });
        }
    }

    let mut zcorn = vec![0i64; 8 * dims.cell_count()];
    let mut side = 0usize;
    for k in 0..dims.nk {
        for cj in 0..dims.nj {
            for ci in 0..dims.ni {
                for b in 0..2 {
                    for a in 0..2 {
                        let (i, j, q) = corner_node(ci, cj, a, b);
                        let top = match sidechannel {
                            Some(sc) => {
                                let v = sc[side];
                                side += 1;
                                v
                            }
                            None => field.get(q, i, j, k),
                        };
                        zcorn[zcorn_index(dims, ci, cj, k, a, b, 0)] = top;
                        zcorn[zcorn_index(dims, ci, cj, k, a, b, 1)] = field.get(q, i, j, k + 1);
                    }
                }
            }
        }
    }
    // Side-channel iteration above is (k, cj, ci, b, a) but the channel is
    // stored in the same order, so the single cursor lines up.
    Ok(zcorn)
}

/// One diagnostic finding from [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    MonotonicityViolation {
        quadrant: Quadrant,
        i: usize,
        j: usize,
        k: usize,
    },
    ExtentMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },
    CategoryOutOfUniverse {
        field: String,
        cell: usize,
        value: i64,
    },
    DegeneratePillars {
        count: usize,
    },
}

/// Report-only model validation; never mutates, never fails.
pub fn validate(model: &CornerPointModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    let dims = model.dims;

    if model.actnum.values.len() != dims.cell_count() {
        findings.push(Finding::ExtentMismatch {
            what: "ACTNUM".into(),
            expected: dims.cell_count(),
            actual: model.actnum.values.len(),
        });
    }
    for f in &model.properties {
        if f.values.len() != dims.cell_count() {
            findings.push(Finding::ExtentMismatch {
                what: f.name.clone(),
                expected: dims.cell_count(),
                actual: f.values.len(),
            });
        }
    }

    for j in 0..=dims.nj {
        for i in 0..=dims.ni {
            for q in present_quadrants(&dims, i, j) {
                for k in 0..dims.nk {
                    if model.nodez.get(q, i, j, k) > model.nodez.get(q, i, j, k + 1) {
                        findings.push(Finding::MonotonicityViolation { quadrant: q, i, j, k });
                    }
                }
            }
        }
    }

    for f in &model.properties {
        if f.kind == PropertyKind::Categorical {
            for (cell, &v) in f.values.iter().enumerate() {
                if f.universe.binary_search(&v).is_err() {
                    findings.push(Finding::CategoryOutOfUniverse {
                        field: f.name.clone(),
                        cell,
                        value: v,
                    });
                }
            }
        }
    }

    let degenerate = model.pillars.degenerate_pillar_count();
    if degenerate > 0 {
        findings.push(Finding::DegeneratePillars { count: degenerate });
    }

    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(ni: usize, nj: usize, nk: usize) -> GridDims {
        GridDims::new(ni, nj, nk).unwrap()
    }

    #[test]
    fn single_cell_identity_layout() {
        let d = dims(1, 1, 1);
        let zcorn = vec![0, 0, 0, 0, 100, 100, 100, 100];
        let (field, side) = zcorn_to_nodez(&zcorn, &d, HorizontalFaultPolicy::Reject).unwrap();
        assert!(side.is_none());
        // Each of the 8 lattice nodes carries exactly one quadrant value.
        for j in 0..=1 {
            for i in 0..=1 {
                let qs: Vec<_> = present_quadrants(&d, i, j).collect();
                assert_eq!(qs.len(), 1);
                assert_eq!(field.get(qs[0], i, j, 0), 0);
                assert_eq!(field.get(qs[0], i, j, 1), 100);
            }
        }
        let back = nodez_to_zcorn(&field, &d, None).unwrap();
        assert_eq!(back, zcorn);
    }

    #[test]
    fn node_lattice_extent() {
        let d = dims(5, 4, 3);
        assert_eq!(d.node_dims(), (6, 5, 4));
    }

    #[test]
    fn ceil_halved_levels() {
        let mut d = dims(80, 45, 26);
        let expect = [(40, 23, 13), (20, 12, 7), (10, 6, 4), (5, 3, 2)];
        for e in expect {
            d = d.coarsened();
            assert_eq!((d.ni, d.nj, d.nk), e);
        }
        assert_eq!(dims(80, 45, 26).max_levels(), 7);
        assert_eq!(dims(100, 100, 100).max_levels(), 7);
        assert_eq!(dims(1, 1, 1).max_levels(), 1);
    }

    #[test]
    fn faulted_node_hand_enumeration() {
        // 2x2x1 grid, central node (1,1) has west quadrants at 10 and east at
        // 20 on the top layer; flat elsewhere.
        let d = dims(2, 2, 1);
        let mut zcorn = vec![0i64; 8 * d.cell_count()];
        for k in 0..1 {
            for cj in 0..2 {
                for ci in 0..2 {
                    for b in 0..2 {
                        for a in 0..2 {
                            let (i, j, _) = corner_node(ci, cj, a, b);
                            let top = if (i, j) == (1, 1) {
                                if ci == 0 {
                                    10
                                } else {
                                    20
                                }
                            } else {
                                0
                            };
                            zcorn[zcorn_index(&d, ci, cj, k, a, b, 0)] = top;
                            zcorn[zcorn_index(&d, ci, cj, k, a, b, 1)] = 100;
                        }
                    }
                }
            }
        }
        let (field, _) = zcorn_to_nodez(&zcorn, &d, HorizontalFaultPolicy::Reject).unwrap();
        assert_eq!(field.get(Quadrant::Nw, 1, 1, 0), 10);
        assert_eq!(field.get(Quadrant::Sw, 1, 1, 0), 10);
        assert_eq!(field.get(Quadrant::Ne, 1, 1, 0), 20);
        assert_eq!(field.get(Quadrant::Se, 1, 1, 0), 20);
        let back = nodez_to_zcorn(&field, &d, None).unwrap();
        assert_eq!(back, zcorn);
    }

    #[test]
    fn horizontal_fault_detected_and_diverted() {
        let d = dims(1, 1, 2);
        let mut zcorn = vec![0i64; 16];
        // Layer 0: top 0, bottom 50. Layer 1: top 60 (gap!), bottom 100.
        for b in 0..2 {
            for a in 0..2 {
                zcorn[zcorn_index(&d, 0, 0, 0, a, b, 0)] = 0;
                zcorn[zcorn_index(&d, 0, 0, 0, a, b, 1)] = 50;
                zcorn[zcorn_index(&d, 0, 0, 1, a, b, 0)] = 60;
                zcorn[zcorn_index(&d, 0, 0, 1, a, b, 1)] = 100;
            }
        }
        assert!(matches!(
            zcorn_to_nodez(&zcorn, &d, HorizontalFaultPolicy::Reject),
            Err(Error::HorizontalFaultViolation(0, 0, 1))
        ));
        let (field, side) =
            zcorn_to_nodez(&zcorn, &d, HorizontalFaultPolicy::SideChannel).unwrap();
        let side = side.unwrap();
        let back = nodez_to_zcorn(&field, &d, Some(&side)).unwrap();
        assert_eq!(back, zcorn);
    }

    #[test]
    fn wrong_length_rejected() {
        let d = dims(2, 2, 2);
        assert!(matches!(
            zcorn_to_nodez(&[0; 8], &d, HorizontalFaultPolicy::Reject),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(1234.5678, 3).unwrap(), 1234568);
        assert_eq!(quantize(0.2345, 6).unwrap(), 234500);
        assert_eq!(quantize(-0.0005, 3).unwrap(), -1);
    }

    #[test]
    fn validate_reports() {
        let d = dims(2, 1, 1);
        let mut model = CornerPointModel::new(d, QuantizationParams::default());
        model.pillars.planes[5] = vec![1000; d.pillar_count()];
        assert!(validate(&model).is_empty());

        model
            .properties
            .push(CellPropertyField::categorical("ROCK", vec![0, 1]));
        model.properties[0].values[1] = 9;
        let findings = validate(&model);
        assert!(findings
            .iter()
            .any(|f| matches!(f, Finding::CategoryOutOfUniverse { value: 9, .. })));

        // Decreasing depth along one quadrant column.
        model.nodez.set(Quadrant::Ne, 0, 0, 0, 5);
        model.nodez.set(Quadrant::Ne, 0, 0, 1, 3);
        let findings2 = validate(&model);
        assert!(findings2
            .iter()
            .any(|f| matches!(f, Finding::MonotonicityViolation { .. })));
        // Pure: same report twice.
        assert_eq!(findings2, validate(&model));
    }
}
