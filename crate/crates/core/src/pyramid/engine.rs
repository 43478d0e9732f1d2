//! Slab-streaming level analysis.
//!
//! One transition (fine level to coarse level plus details) is computed by
//! feeding k-layers in order. Two passes over the slabs: the first
//! accumulates the fault configuration map (it ORs comparisons over all k),
//! the second drives the column lifters, residual planes, activity
//! reduction, and property block rows. All cross-slab context lives in O(1)
//! carries per column (the incremental lifter) or a four-layer window (the
//! categorical tie-break shell), so a slab plus the 2-D planes bounds the
//! engine's fine-level working set; a gauge records the peak.
//!
//! The whole-grid path is this engine with a single-slab plan, which is why
//! streamed and in-memory analyses produce identical payload vectors.

use crate::error::{Error, Result};
use crate::fault::{
    self, accumulate_config_layer, axis_groups, FaultConfig, FaultConfigMap, GeomLevel,
    GeometryDetail, LevelLayout,
};
use crate::grid::{CornerPointModel, GridDims, NodeZField, PillarSet, Quadrant};
use crate::lift::{LiftMode, LineLifter};
use crate::props::{self, block_extent, gather_block, gather_shell};
use crate::pyramid::{FieldInfo, LevelData, LevelDetail};
use crate::grid::PropertyKind;
use std::collections::VecDeque;
use std::ops::Range;

/// Contiguous k-ranges of cells covering the grid exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlabPlan {
    pub ranges: Vec<Range<usize>>,
}

impl SlabPlan {
    pub fn single(nk: usize) -> Self {
        SlabPlan { ranges: vec![0..nk] }
    }

    /// Split `nk` cell layers into `count` nearly equal contiguous slabs.
    pub fn split(nk: usize, count: usize) -> Self {
        let count = count.clamp(1, nk.max(1));
        let mut ranges = Vec::with_capacity(count);
        let mut start = 0usize;
        for s in 0..count {
            let end = nk * (s + 1) / count;
            if end > start {
                ranges.push(start..end);
                start = end;
            }
        }
        SlabPlan { ranges }
    }

    /// Contiguity, full coverage, and a minimum thickness of two cell layers
    /// whenever the grid is actually split (thinner slabs cannot carry the
    /// transforms' one-cell halos).
    pub fn validate(&self, nk: usize) -> Result<()> {
        if self.ranges.is_empty() {
            return Err(Error::SlabCoverageGap("empty plan".into()));
        }
        let mut expect = 0usize;
        for r in &self.ranges {
            if r.start != expect || r.end <= r.start {
                return Err(Error::SlabCoverageGap(format!(
                    "range {}..{} does not continue at layer {expect}",
                    r.start, r.end
                )));
            }
            if self.ranges.len() > 1 && r.end - r.start < 2 {
                return Err(Error::SlabCoverageGap(format!(
                    "slab {}..{} too thin for halo",
                    r.start, r.end
                )));
            }
            expect = r.end;
        }
        if expect != nk {
            return Err(Error::SlabCoverageGap(format!(
                "plan covers {expect} of {nk} layers"
            )));
        }
        Ok(())
    }
}

/// One slab's worth of fine-level data.
///
/// `nodez` covers node layers start ..= end (the closed span its cells
/// touch; the shared boundary layer is the declared halo), the cell arrays
/// cover exactly start .. end.
pub struct SlabData {
    pub cell_range: Range<usize>,
    /// Per node layer, per quadrant: (ni+1)*(nj+1) values.
    pub nodez: Vec<[Vec<i64>; 4]>,
    /// Per cell layer: ni*nj flags.
    pub actnum: Vec<Vec<bool>>,
    /// Per field, per cell layer: ni*nj values.
    pub props: Vec<Vec<Vec<i64>>>,
    /// Stored vertex activity per node layer (levels below the base carry it
    /// as data; the base derives it from ACTNUM instead).
    pub vert: Option<Vec<Vec<bool>>>,
}

impl SlabData {
    fn byte_size(&self) -> usize {
        let node2d = self.nodez.first().map_or(0, |l| l[0].len());
        let cell2d = self.actnum.first().map_or(0, |l| l.len());
        self.nodez.len() * 4 * node2d * 8
            + self.actnum.len() * cell2d
            + self.props.iter().map(|f| f.len() * cell2d * 8).sum::<usize>()
            + self.vert.as_ref().map_or(0, |v| v.len() * node2d)
    }
}

/// Source of fine-level data, read slab by slab (twice per transition).
pub trait SlabSource {
    fn dims(&self) -> GridDims;
    fn pillars(&self) -> PillarSet;
    fn read_slab(&self, range: Range<usize>) -> SlabData;
}

pub struct ModelSource<'a>(pub &'a CornerPointModel);

impl SlabSource for ModelSource<'_> {
    fn dims(&self) -> GridDims {
        self.0.dims
    }

    fn pillars(&self) -> PillarSet {
        self.0.pillars.clone()
    }

    fn read_slab(&self, range: Range<usize>) -> SlabData {
        let dims = self.0.dims;
        let (ni1, nj1, _) = dims.node_dims();
        let node_hi = range.end.min(dims.nk);
        let mut nodez = Vec::with_capacity(node_hi - range.start + 1);
        for k in range.start..=node_hi {
            let layer: [Vec<i64>; 4] = std::array::from_fn(|qi| {
                let q = crate::grid::QUADRANTS[qi];
                let mut plane = vec![0i64; ni1 * nj1];
                for j in 0..nj1 {
                    for i in 0..ni1 {
                        if q.present(&dims, i, j) {
                            plane[i + ni1 * j] = self.0.nodez.get(q, i, j, k);
                        }
                    }
                }
                plane
            });
            nodez.push(layer);
        }
        let cell2d = dims.ni * dims.nj;
        let actnum = range
            .clone()
            .map(|k| self.0.actnum.values[k * cell2d..(k + 1) * cell2d].to_vec())
            .collect();
        let props = self
            .0
            .properties
            .iter()
            .map(|f| {
                range
                    .clone()
                    .map(|k| f.values[k * cell2d..(k + 1) * cell2d].to_vec())
                    .collect()
            })
            .collect();
        SlabData {
            cell_range: range,
            nodez,
            actnum,
            props,
            vert: None,
        }
    }
}

pub struct LevelSource<'a>(pub &'a LevelData);

impl SlabSource for LevelSource<'_> {
    fn dims(&self) -> GridDims {
        self.0.geom.dims
    }

    fn pillars(&self) -> PillarSet {
        self.0.geom.pillars.clone()
    }

    fn read_slab(&self, range: Range<usize>) -> SlabData {
        let dims = self.0.geom.dims;
        let (ni1, nj1, _) = dims.node_dims();
        let node_hi = range.end.min(dims.nk);
        let mut nodez = Vec::with_capacity(node_hi - range.start + 1);
        let mut vert = Vec::with_capacity(node_hi - range.start + 1);
        for k in range.start..=node_hi {
            let layer: [Vec<i64>; 4] = std::array::from_fn(|qi| {
                let q = crate::grid::QUADRANTS[qi];
                let mut plane = vec![0i64; ni1 * nj1];
                for j in 0..nj1 {
                    for i in 0..ni1 {
                        if q.present(&dims, i, j) {
                            plane[i + ni1 * j] = self.0.geom.nodez.get(q, i, j, k);
                        }
                    }
                }
                plane
            });
            nodez.push(layer);
            let base = dims.node_index(0, 0, k);
            vert.push(self.0.geom.vert_act[base..base + ni1 * nj1].to_vec());
        }
        let cell2d = dims.ni * dims.nj;
        let actnum = range
            .clone()
            .map(|k| self.0.geom.actnum[k * cell2d..(k + 1) * cell2d].to_vec())
            .collect();
        let props = self
            .0
            .props
            .iter()
            .map(|f| {
                range
                    .clone()
                    .map(|k| f[k * cell2d..(k + 1) * cell2d].to_vec())
                    .collect::<Vec<_>>()
            })
            .collect();
        SlabData {
            cell_range: range,
            nodez,
            actnum,
            props,
            vert: Some(vert),
        }
    }
}

/// Peak-memory instrumentation for the streaming path.
#[derive(Debug, Default, Clone, Copy)]
pub struct Gauge {
    /// Largest single slab loaded, in bytes.
    pub peak_slab_bytes: usize,
    /// Number of slab reads performed.
    pub slab_reads: usize,
}

impl Gauge {
    fn note(&mut self, bytes: usize) {
        self.peak_slab_bytes = self.peak_slab_bytes.max(bytes);
        self.slab_reads += 1;
    }
}

/// Per-field streaming state for property block rows: a sliding window of at
/// most four fine layers (block pair plus shell halo on each side).
struct PropRows {
    window: VecDeque<(usize, Vec<i64>)>,
    next_row: usize,
    coarse: Vec<i64>,
    details: Vec<i64>,
}

impl PropRows {
    fn new(coarse_cells: usize) -> Self {
        PropRows {
            window: VecDeque::with_capacity(4),
            next_row: 0,
            coarse: vec![0i64; coarse_cells],
            details: Vec::new(),
        }
    }

    fn push_layer(
        &mut self,
        k: usize,
        values: Vec<i64>,
        dims: &GridDims,
        coarse_dims: &GridDims,
        info: &FieldInfo,
    ) -> Result<()> {
        self.window.push_back((k, values));
        loop {
            let row = self.next_row;
            if row >= coarse_dims.nk {
                break;
            }
            let wk = block_extent(row, dims.nk);
            // Deepest fine layer the row's blocks and shells reach.
            let need = (2 * row + wk).min(dims.nk - 1);
            if k < need {
                break;
            }
            self.emit_row(row, dims, coarse_dims, info)?;
            self.next_row += 1;
            // Layers shallower than the next row's shell are done.
            while self
                .window
                .front()
                .is_some_and(|&(fk, _)| fk + 1 < 2 * self.next_row)
            {
                self.window.pop_front();
            }
        }
        Ok(())
    }

    fn emit_row(
        &mut self,
        row: usize,
        dims: &GridDims,
        coarse_dims: &GridDims,
        info: &FieldInfo,
    ) -> Result<()> {
        let window = &self.window;
        let front = window.front().expect("window not empty").0;
        let get = |i: usize, j: usize, k: usize| window[k - front].1[i + dims.ni * j];
        for bj in 0..coarse_dims.nj {
            for bi in 0..coarse_dims.ni {
                let block = gather_block(dims, &get, bi, bj, row);
                let (approx, detail) = match info.kind {
                    PropertyKind::Continuous => props::haar_analyze_block(&block)?,
                    PropertyKind::Categorical => {
                        let shell = gather_shell(dims, &get, bi, bj, row);
                        props::modelet_analyze_block(&block, &shell, &info.universe)?
                    }
                };
                self.coarse[coarse_dims.cell_index(bi, bj, row)] = approx;
                self.details.extend(detail);
            }
        }
        Ok(())
    }
}

/// Analyze one level transition by streaming slabs in k order.
pub fn analyze_transition(
    src: &dyn SlabSource,
    fields: &[FieldInfo],
    plan: &SlabPlan,
    epsilon: i64,
    gauge: &mut Gauge,
) -> Result<(LevelData, LevelDetail)> {
    let dims = src.dims();
    plan.validate(dims.nk)?;
    let coarse_dims = dims.coarsened();
    let (ni1, nj1, nk1) = dims.node_dims();
    let node2d = ni1 * nj1;

    // Pass A: fault segmentation over all layers.
    let mut map = FaultConfigMap {
        ni1,
        nj1,
        configs: vec![FaultConfig::default(); node2d],
    };
    for range in &plan.ranges {
        let data = src.read_slab(range.clone());
        gauge.note(data.byte_size());
        let node_hi = if range.end == dims.nk { dims.nk } else { range.end - 1 };
        for k in range.start..=node_hi {
            let rel = k - range.start;
            let layer = &data.nodez[rel];
            accumulate_config_layer(
                &mut map,
                &dims,
                &|q: Quadrant, i: usize, j: usize| layer[q as usize][i + ni1 * j],
                epsilon,
            );
        }
    }
    let layout = LevelLayout::select(dims, &map);

    // Pillar endpoint planes are 2-D; lifted once.
    let (coarse_pillars, pillar_details) = fault::lift_pillars(&src.pillars(), dims);

    let n_slots = layout.coarse_slots.len();
    let n_res = layout.residual_slots.len();
    let mut lifters: Vec<LineLifter> = (0..n_slots)
        .map(|_| LineLifter::new(LiftMode::NodeAxis))
        .collect();
    let mut z_details = vec![0i64; layout.k_details * n_slots];
    let mut z_residuals = vec![0i64; nk1 * n_res];
    let mut coarse_nodez = NodeZField::zeroed(coarse_dims);
    let mut detail_pos = 0usize;
    let mut approx_pos = 0usize;

    let mut vert_bits: Vec<bool> = Vec::with_capacity(dims.node_count());
    let mut act_bits: Vec<bool> = Vec::with_capacity(dims.cell_count());
    let mut act_prev: Option<Vec<bool>> = None;

    let groups_k = axis_groups(nk1);
    let mut coarse_vert = vec![false; coarse_dims.node_count()];
    let mut vert_acc = vec![true; layout.ti * layout.tj];
    let mut cur_gk = 0usize;
    let mut in_group = 0usize;

    let mut prop_rows: Vec<PropRows> = fields
        .iter()
        .map(|_| PropRows::new(coarse_dims.cell_count()))
        .collect();

    let survivor_of_slot: Vec<(usize, usize)> = layout
        .coarse_slots
        .iter()
        .map(|&(gi, gj, _)| layout.survivor(gi, gj))
        .collect();
    let residual_survivors: Vec<(usize, usize)> = layout
        .residual_slots
        .iter()
        .map(|slot| {
            let (gi, gj) = (layout.group_of_i[slot.i], layout.group_of_j[slot.j]);
            layout.survivor(gi, gj)
        })
        .collect();

    // Pass B.
    for range in &plan.ranges {
        let data = src.read_slab(range.clone());
        gauge.note(data.byte_size());
        let node_hi = if range.end == dims.nk { dims.nk } else { range.end - 1 };
        for k in range.start..=node_hi {
            let rel = k - range.start;
            let layer = &data.nodez[rel];
            let get_z =
                |q: Quadrant, i: usize, j: usize| layer[q as usize][i + ni1 * j];

            // Surviving columns into the incremental lifters.
            let mut produced_detail = false;
            let mut produced_approx = false;
            for (slot, &(gi, gj, q)) in layout.coarse_slots.iter().enumerate() {
                let (si, sj) = survivor_of_slot[slot];
                let lifter = &mut lifters[slot];
                lifter.feed(get_z(q, si, sj));
                if let Some(d) = lifter.take_detail() {
                    z_details[detail_pos * n_slots + slot] = d;
                    produced_detail = true;
                }
                if let Some(a) = lifter.take_approx() {
                    coarse_nodez.set(q, gi, gj, approx_pos, a);
                    produced_approx = true;
                }
            }
            if produced_detail {
                detail_pos += 1;
            }
            if produced_approx {
                approx_pos += 1;
            }

            // Residual plane for this layer.
            for (w, slot) in layout.residual_slots.iter().enumerate() {
                let (si, sj) = residual_survivors[w];
                let reference = get_z(slot.ref_q, si, sj);
                z_residuals[k * n_res + w] = get_z(slot.q, slot.i, slot.j) - reference;
            }

            // Vertex activity: carried data below the base, derived from
            // ACTNUM at the base (any adjacent active cell).
            let current_act: Option<&Vec<bool>> = if k < dims.nk {
                Some(&data.actnum[k - range.start])
            } else {
                None
            };
            let vert_layer: Vec<bool> = match &data.vert {
                Some(v) => v[rel].clone(),
                None => {
                    let mut out = vec![false; node2d];
                    for j in 0..nj1 {
                        for i in 0..ni1 {
                            let mut active = false;
                            'cells: for layer in [act_prev.as_ref(), current_act]
                                .into_iter()
                                .flatten()
                            {
                                for cj in j.saturating_sub(1)..=j.min(dims.nj - 1) {
                                    for ci in i.saturating_sub(1)..=i.min(dims.ni - 1) {
                                        if layer[ci + dims.ni * cj] {
                                            active = true;
                                            break 'cells;
                                        }
                                    }
                                }
                            }
                            out[i + ni1 * j] = active;
                        }
                    }
                    out
                }
            };
            for gj in 0..layout.tj {
                for gi in 0..layout.ti {
                    let (si, sj) = layout.survivor(gi, gj);
                    if !vert_layer[si + ni1 * sj] {
                        vert_acc[gi + layout.ti * gj] = false;
                    }
                }
            }
            in_group += 1;
            if in_group == groups_k[cur_gk].1 {
                for gj in 0..layout.tj {
                    for gi in 0..layout.ti {
                        coarse_vert[coarse_dims.node_index(gi, gj, cur_gk)] =
                            vert_acc[gi + layout.ti * gj];
                    }
                }
                vert_acc.fill(true);
                cur_gk += 1;
                in_group = 0;
            }
            vert_bits.extend_from_slice(&vert_layer);
            act_prev = current_act.cloned();

            // Cell-layer payloads.
            if k < dims.nk {
                let cells = &data.actnum[k - range.start];
                act_bits.extend_from_slice(cells);
                for (f, rows) in prop_rows.iter_mut().enumerate() {
                    rows.push_layer(
                        k,
                        data.props[f][k - range.start].clone(),
                        &dims,
                        &coarse_dims,
                        &fields[f],
                    )?;
                }
            }
        }
    }

    // Tail approximations from the lifters.
    let mut tail_count = 0usize;
    for (slot, &(gi, gj, q)) in layout.coarse_slots.iter().enumerate() {
        let (tail_detail, tail) = lifters[slot].finish();
        debug_assert!(tail_detail.is_none(), "node lift stores no tail detail");
        for (t, &a) in tail.iter().enumerate() {
            coarse_nodez.set(q, gi, gj, approx_pos + t, a);
        }
        tail_count = tail.len();
    }
    approx_pos += tail_count;
    debug_assert_eq!(approx_pos, coarse_dims.nk + 1);
    debug_assert_eq!(detail_pos, layout.k_details);
    debug_assert_eq!(cur_gk, groups_k.len());

    // Coarse cell activity from the eight coarse corners.
    let mut coarse_act = vec![false; coarse_dims.cell_count()];
    for k in 0..coarse_dims.nk {
        for j in 0..coarse_dims.nj {
            for i in 0..coarse_dims.ni {
                let active = (k..=k + 1).all(|ck| {
                    (j..=j + 1).all(|cj| {
                        (i..=i + 1).all(|ci| coarse_vert[coarse_dims.node_index(ci, cj, ck)])
                    })
                });
                coarse_act[coarse_dims.cell_index(i, j, k)] = active;
            }
        }
    }

    let mut coarse_props = Vec::with_capacity(fields.len());
    let mut prop_details = Vec::with_capacity(fields.len());
    for rows in prop_rows {
        debug_assert_eq!(rows.next_row, coarse_dims.nk);
        coarse_props.push(rows.coarse);
        prop_details.push(rows.details);
    }

    let coarse = LevelData {
        geom: GeomLevel {
            dims: coarse_dims,
            nodez: coarse_nodez,
            pillars: coarse_pillars,
            vert_act: coarse_vert,
            actnum: coarse_act,
        },
        props: coarse_props,
    };
    let detail = LevelDetail {
        geometry: GeometryDetail {
            selection: layout.selection.clone(),
            z_details,
            z_residuals,
            pillar_details,
            vert_act: vert_bits,
            actnum: act_bits,
        },
        props: prop_details,
    };
    Ok((coarse, detail))
}
