//! Fault segmentation, morphological node selection, and geometry-level
//! analysis/synthesis.
//!
//! A node's fault configuration records, per cardinal axis, whether the two
//! quadrant depths on that side of the node disagree anywhere along k. Around
//! the four-cycle NW-NE-SE-SW an odd number of inequalities is impossible, so
//! exactly twelve configurations occur: fault-free, two straights, four
//! corners, four Ts, and the cross.
//!
//! Each coarsening step groups the node lattice into 2x2 cells (trailing
//! rows/columns degrade to pairs and singletons so coarse node extents track
//! ceil-halved cell counts). A predicted configuration is formed by OR-ing
//! each side of the group, and the member closest to the prediction in
//! Hamming distance survives. The survivor's depth columns are lifted along k
//! with the node-axis 5/3 transform; the other members store plain difference
//! columns against the survivor. Pillar endpoint planes are lifted separably
//! along i then j.
//!
//! Cell activity propagates through vertex activity: a coarse vertex is
//! active iff the selected parent vertices are active, and a coarse cell is
//! active iff all 16 of its parent vertices are (8 coarse corners times their
//! k-parents). That map is not invertible, so each level's fine vertex and
//! cell activity planes ride along as stored details.

use crate::error::{Error, Result};
use crate::grid::{present_quadrants, GridDims, NodeZField, PillarSet, Quadrant};
use crate::lift::{self, LiftMode, LiftPair};

/// Per-node fault configuration: a bitmask of active cardinal axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaultConfig(pub u8);

pub const NORTH: u8 = 1;
pub const SOUTH: u8 = 2;
pub const EAST: u8 = 4;
pub const WEST: u8 = 8;

impl FaultConfig {
    pub fn fault_free(self) -> bool {
        self.0 == 0
    }

    pub fn active_axes(self) -> u32 {
        self.0.count_ones()
    }

    /// Member of the twelve-state set: never exactly one active axis.
    pub fn is_valid_state(self) -> bool {
        self.active_axes() != 1
    }

    pub fn hamming(self, other: FaultConfig) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    pub fn has(self, axis: u8) -> bool {
        self.0 & axis != 0
    }
}

/// 2-D per-node configuration map (z-invariant by construction: per-layer
/// comparisons are OR-combined over all k).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultConfigMap {
    pub ni1: usize,
    pub nj1: usize,
    pub configs: Vec<FaultConfig>,
}

impl FaultConfigMap {
    pub fn get(&self, i: usize, j: usize) -> FaultConfig {
        self.configs[i + self.ni1 * j]
    }
}

/// Axis comparisons for one node at one layer. Missing border quadrants
/// compare equal, so lattice borders never spawn phantom faults.
fn layer_axes(
    dims: &GridDims,
    get: &impl Fn(Quadrant, usize, usize) -> i64,
    i: usize,
    j: usize,
    epsilon: i64,
) -> u8 {
    let value = |q: Quadrant| q.present(dims, i, j).then(|| get(q, i, j));
    let differ = |a: Option<i64>, b: Option<i64>| match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() > epsilon,
        _ => false,
    };
    let (nw, ne, sw, se) = (
        value(Quadrant::Nw),
        value(Quadrant::Ne),
        value(Quadrant::Sw),
        value(Quadrant::Se),
    );
    let mut axes = 0u8;
    if differ(nw, ne) {
        axes |= NORTH;
    }
    if differ(sw, se) {
        axes |= SOUTH;
    }
    if differ(ne, se) {
        axes |= EAST;
    }
    if differ(nw, sw) {
        axes |= WEST;
    }
    axes
}

/// Detect faults: per node, compare quadrant depths around the four-cycle at
/// every layer and OR the per-axis outcomes into one 2-D map.
pub fn derive_config_map(field: &NodeZField, epsilon: i64) -> FaultConfigMap {
    let dims = field.dims;
    let (ni1, nj1, nk1) = dims.node_dims();
    let mut configs = vec![FaultConfig::default(); ni1 * nj1];
    for k in 0..nk1 {
        let get = |q: Quadrant, i: usize, j: usize| field.get(q, i, j, k);
        for j in 0..nj1 {
            for i in 0..ni1 {
                configs[i + ni1 * j].0 |= layer_axes(&dims, &get, i, j, epsilon);
            }
        }
    }
    FaultConfigMap { ni1, nj1, configs }
}

/// Accumulate one layer's comparisons into an existing map (streaming form of
/// [`derive_config_map`]).
pub fn accumulate_config_layer(
    map: &mut FaultConfigMap,
    dims: &GridDims,
    get: &impl Fn(Quadrant, usize, usize) -> i64,
    epsilon: i64,
) {
    for j in 0..map.nj1 {
        for i in 0..map.ni1 {
            map.configs[i + map.ni1 * j].0 |= layer_axes(dims, get, i, j, epsilon);
        }
    }
}

/// Node-lattice grouping along one axis: (start, len) per coarse position.
/// Odd extents end in one singleton, even extents in two, so the group count
/// equals the ceil-halved cell count plus one.
pub fn axis_groups(n: usize) -> Vec<(usize, usize)> {
    if n == 1 {
        return vec![(0, 1)];
    }
    let mut groups = Vec::with_capacity(n / 2 + 1);
    if n % 2 == 1 {
        for s in (0..n - 1).step_by(2) {
            groups.push((s, 2));
        }
        groups.push((n - 1, 1));
    } else {
        for s in (0..n - 2).step_by(2) {
            groups.push((s, 2));
        }
        groups.push((n - 2, 1));
        groups.push((n - 1, 1));
    }
    groups
}

/// OR-prediction of the coarse configuration from a group of fine ones: each
/// side of the predicted node takes the OR of that side's members. The result
/// is only a distance target; it may fall outside the twelve-state set.
pub fn predict_config(members: &[(usize, usize, FaultConfig)], w: usize, h: usize) -> FaultConfig {
    let mut p = 0u8;
    for &(di, dj, c) in members {
        if di == 0 && c.has(WEST) {
            p |= WEST;
        }
        if di == w - 1 && c.has(EAST) {
            p |= EAST;
        }
        if dj == 0 && c.has(SOUTH) {
            p |= SOUTH;
        }
        if dj == h - 1 && c.has(NORTH) {
            p |= NORTH;
        }
    }
    FaultConfig(p)
}

/// Pick the group member closest to the prediction (Hamming distance over the
/// four axis bits); ties break to the lowest positional index di + 2*dj.
pub fn select_node(members: &[(usize, usize, FaultConfig)], predicted: FaultConfig) -> u8 {
    let mut best: Option<(u32, u8)> = None;
    for &(di, dj, c) in members {
        let s = (di + 2 * dj) as u8;
        let dist = c.hamming(predicted);
        if best.map_or(true, |(bd, bs)| dist < bd || (dist == bd && s < bs)) {
            best = Some((dist, s));
        }
    }
    best.expect("group has at least one member").1
}

/// One resolution level of the geometry: depth field, pillar endpoints, and
/// the vertex/cell activity planes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomLevel {
    pub dims: GridDims,
    pub nodez: NodeZField,
    pub pillars: PillarSet,
    /// Vertex activity over the node lattice, (i fastest, then j, then k).
    pub vert_act: Vec<bool>,
    /// Cell activity, cell-index order.
    pub actnum: Vec<bool>,
}

impl GeomLevel {
    pub fn vert(&self, i: usize, j: usize, k: usize) -> bool {
        self.vert_act[self.dims.node_index(i, j, k)]
    }
}

/// Derive level-0 vertex activity from cell activity: a vertex is active iff
/// any adjacent cell is active.
pub fn initial_vertex_activity(dims: &GridDims, actnum: &[bool]) -> Vec<bool> {
    let (ni1, nj1, nk1) = dims.node_dims();
    let mut vert = vec![false; ni1 * nj1 * nk1];
    for k in 0..nk1 {
        for j in 0..nj1 {
            for i in 0..ni1 {
                let mut active = false;
                'cells: for ck in k.saturating_sub(1)..=k.min(dims.nk - 1) {
                    for cj in j.saturating_sub(1)..=j.min(dims.nj - 1) {
                        for ci in i.saturating_sub(1)..=i.min(dims.ni - 1) {
                            if actnum[dims.cell_index(ci, cj, ck)] {
                                active = true;
                                break 'cells;
                            }
                        }
                    }
                }
                vert[dims.node_index(i, j, k)] = active;
            }
        }
    }
    vert
}

/// Where a residual column's reference comes from: the survivor's column for
/// the same quadrant when the coarse node carries it, else the survivor's
/// first coarse-present quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualSlot {
    pub i: usize,
    pub j: usize,
    pub q: Quadrant,
    pub ref_q: Quadrant,
}

/// Per-level 2-D structure shared by analysis and synthesis: groups,
/// selection, and the normative orders of detail payloads.
#[derive(Debug, Clone)]
pub struct LevelLayout {
    pub fine_dims: GridDims,
    pub coarse_dims: GridDims,
    /// Coarse node extent (Ti, Tj).
    pub ti: usize,
    pub tj: usize,
    pub groups_i: Vec<(usize, usize)>,
    pub groups_j: Vec<(usize, usize)>,
    /// Fine axis position -> group index.
    pub group_of_i: Vec<usize>,
    pub group_of_j: Vec<usize>,
    /// Selection index per coarse node, (J outer, I inner).
    pub selection: Vec<u8>,
    /// Surviving fine node per coarse node, same order.
    pub survivors: Vec<(usize, usize)>,
    /// Coarse-present quadrant slots, (J outer, I inner, quadrant order).
    pub coarse_slots: Vec<(usize, usize, Quadrant)>,
    /// Residual slots in fine scan order (j outer, i inner).
    pub residual_slots: Vec<ResidualSlot>,
    /// Stored k-detail count per surviving column.
    pub k_details: usize,
}

fn group_index_table(groups: &[(usize, usize)], n: usize) -> Vec<usize> {
    let mut table = vec![0usize; n];
    for (g, &(start, len)) in groups.iter().enumerate() {
        for p in start..start + len {
            table[p] = g;
        }
    }
    table
}

impl LevelLayout {
    /// Build the layout from a selection map (one entry per coarse node).
    pub fn from_selection(fine_dims: GridDims, selection: Vec<u8>) -> Result<Self> {
        let coarse_dims = fine_dims.coarsened();
        let (ni1, nj1, nk1) = fine_dims.node_dims();
        let groups_i = axis_groups(ni1);
        let groups_j = axis_groups(nj1);
        let (ti, tj) = (groups_i.len(), groups_j.len());
        debug_assert_eq!(ti, coarse_dims.ni + 1);
        debug_assert_eq!(tj, coarse_dims.nj + 1);
        if selection.len() != ti * tj {
            return Err(Error::CorruptDetail(format!(
                "selection plane has {} entries, expected {}",
                selection.len(),
                ti * tj
            )));
        }

        let mut survivors = Vec::with_capacity(ti * tj);
        for gj in 0..tj {
            for gi in 0..ti {
                let s = selection[gi + ti * gj];
                let (di, dj) = ((s & 1) as usize, (s >> 1) as usize);
                let (si, wi) = groups_i[gi];
                let (sj, wj) = groups_j[gj];
                if di >= wi || dj >= wj || s > 3 {
                    return Err(Error::CorruptDetail(format!(
                        "selection index {s} outside group ({wi}x{wj}) at ({gi}, {gj})"
                    )));
                }
                survivors.push((si + di, sj + dj));
            }
        }

        let mut coarse_slots = Vec::new();
        for gj in 0..tj {
            for gi in 0..ti {
                for q in present_quadrants(&coarse_dims, gi, gj) {
                    coarse_slots.push((gi, gj, q));
                }
            }
        }

        let group_of_i = group_index_table(&groups_i, ni1);
        let group_of_j = group_index_table(&groups_j, nj1);

        let mut residual_slots = Vec::new();
        for j in 0..nj1 {
            for i in 0..ni1 {
                let (gi, gj) = (group_of_i[i], group_of_j[j]);
                let survivor = survivors[gi + ti * gj];
                let coarse_qs: Vec<Quadrant> =
                    present_quadrants(&coarse_dims, gi, gj).collect();
                debug_assert!(!coarse_qs.is_empty());
                let ref_for = |q: Quadrant| {
                    if coarse_qs.contains(&q) {
                        q
                    } else {
                        coarse_qs[0]
                    }
                };
                if (i, j) == survivor {
                    // Quadrants the coarse lattice has no room for.
                    for q in present_quadrants(&fine_dims, i, j) {
                        if !coarse_qs.contains(&q) {
                            residual_slots.push(ResidualSlot {
                                i,
                                j,
                                q,
                                ref_q: ref_for(q),
                            });
                        }
                    }
                } else {
                    for q in present_quadrants(&fine_dims, i, j) {
                        residual_slots.push(ResidualSlot {
                            i,
                            j,
                            q,
                            ref_q: ref_for(q),
                        });
                    }
                }
            }
        }

        let k_details = lift::detail_len(nk1, LiftMode::NodeAxis);
        Ok(LevelLayout {
            fine_dims,
            coarse_dims,
            ti,
            tj,
            groups_i,
            groups_j,
            group_of_i,
            group_of_j,
            selection,
            survivors,
            coarse_slots,
            residual_slots,
            k_details,
        })
    }

    /// Derive configurations, predict per group, and pick survivors.
    pub fn select(fine_dims: GridDims, config_map: &FaultConfigMap) -> Self {
        let groups_i = axis_groups(config_map.ni1);
        let groups_j = axis_groups(config_map.nj1);
        let mut selection = Vec::with_capacity(groups_i.len() * groups_j.len());
        for &(sj, wj) in &groups_j {
            for &(si, wi) in &groups_i {
                let mut members = Vec::with_capacity(4);
                for dj in 0..wj {
                    for di in 0..wi {
                        members.push((di, dj, config_map.get(si + di, sj + dj)));
                    }
                }
                let predicted = predict_config(&members, wi, wj);
                selection.push(select_node(&members, predicted));
            }
        }
        LevelLayout::from_selection(fine_dims, selection)
            .expect("selection built from groups is consistent")
    }

    pub fn survivor(&self, gi: usize, gj: usize) -> (usize, usize) {
        self.survivors[gi + self.ti * gj]
    }
}

/// Lift all six pillar endpoint planes separably along i then j, returning
/// the coarse planes and the flat detail vector (per plane: stage-i details
/// then stage-j details, each in flat array order).
pub fn lift_pillars(pillars: &PillarSet, fine_dims: GridDims) -> (PillarSet, Vec<i64>) {
    let (ni1, nj1, _) = fine_dims.node_dims();
    let coarse_dims = fine_dims.coarsened();
    let mut coarse = PillarSet::zeroed(coarse_dims);
    let mut details = Vec::new();
    for (p, plane) in pillars.planes.iter().enumerate() {
        let si = lift::analyze_axis(plane, [ni1, nj1, 1], 0, LiftMode::NodeAxis);
        let sj = lift::analyze_axis(&si.approx, si.approx_extents, 1, LiftMode::NodeAxis);
        details.extend_from_slice(&si.details);
        details.extend_from_slice(&sj.details);
        coarse.planes[p] = sj.approx;
    }
    (coarse, details)
}

/// Exact inverse of [`lift_pillars`].
pub fn unlift_pillars(
    coarse: &PillarSet,
    fine_dims: GridDims,
    details: &[i64],
) -> Result<PillarSet> {
    let (ni1, nj1, _) = fine_dims.node_dims();
    let ti = lift::approx_len(ni1, LiftMode::NodeAxis);
    let tj = lift::approx_len(nj1, LiftMode::NodeAxis);
    let di = lift::detail_len(ni1, LiftMode::NodeAxis);
    let dj = lift::detail_len(nj1, LiftMode::NodeAxis);
    let stage_i_len = di * nj1;
    let stage_j_len = ti * dj;
    let expected = 6 * (stage_i_len + stage_j_len);
    if details.len() != expected {
        return Err(Error::CorruptDetail(format!(
            "pillar detail payload has {} values, expected {expected}",
            details.len()
        )));
    }
    let mut fine = PillarSet::zeroed(fine_dims);
    let mut cursor = 0usize;
    for p in 0..6 {
        let stage_i_details = &details[cursor..cursor + stage_i_len];
        cursor += stage_i_len;
        let stage_j_details = &details[cursor..cursor + stage_j_len];
        cursor += stage_j_len;
        let sj = lift::AxisLift {
            approx: coarse.planes[p].clone(),
            details: stage_j_details.to_vec(),
            approx_extents: [ti, tj, 1],
            detail_extents: [ti, dj, 1],
        };
        let mid = lift::synthesize_axis(&sj, 1, nj1, LiftMode::NodeAxis)?;
        let si = lift::AxisLift {
            approx: mid,
            details: stage_i_details.to_vec(),
            approx_extents: [ti, nj1, 1],
            detail_extents: [di, nj1, 1],
        };
        fine.planes[p] = lift::synthesize_axis(&si, 0, ni1, LiftMode::NodeAxis)?;
    }
    Ok(fine)
}

/// Detail data for one geometry level transition, flattened in the normative
/// payload orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometryDetail {
    /// Selection index per coarse node (J outer, I inner).
    pub selection: Vec<u8>,
    /// k-lift details of surviving columns: (detail index outermost, then
    /// coarse slot order).
    pub z_details: Vec<i64>,
    /// Residual columns: (fine k outermost, then residual slot order).
    pub z_residuals: Vec<i64>,
    /// Pillar plane details: per plane, stage-i details then stage-j details
    /// in their flat array orders.
    pub pillar_details: Vec<i64>,
    /// Fine vertex activity (node-index order).
    pub vert_act: Vec<bool>,
    /// Fine cell activity (cell-index order).
    pub actnum: Vec<bool>,
}

/// Analyze one geometry level: returns the coarse level and its details.
pub fn analyze_geometry_level(fine: &GeomLevel, epsilon: i64) -> (GeomLevel, GeometryDetail) {
    let config_map = derive_config_map(&fine.nodez, epsilon);
    let layout = LevelLayout::select(fine.dims, &config_map);
    let coarse_dims = layout.coarse_dims;
    let (_, _, nk1) = fine.dims.node_dims();

    // Surviving columns: node-axis lift along k.
    let mut coarse_nodez = NodeZField::zeroed(coarse_dims);
    let n_slots = layout.coarse_slots.len();
    let mut z_details = vec![0i64; layout.k_details * n_slots];
    for (slot, &(gi, gj, q)) in layout.coarse_slots.iter().enumerate() {
        let (si, sj) = layout.survivor(gi, gj);
        debug_assert!(q.present(&fine.dims, si, sj));
        let col = fine.nodez.column(q, si, sj);
        let pair = lift::node_lift(&col);
        coarse_nodez.set_column(q, gi, gj, &pair.approx);
        for (d, &v) in pair.details.iter().enumerate() {
            z_details[d * n_slots + slot] = v;
        }
    }

    // Residual columns, k outermost.
    let n_res = layout.residual_slots.len();
    let mut z_residuals = vec![0i64; nk1 * n_res];
    for k in 0..nk1 {
        for (w, slot) in layout.residual_slots.iter().enumerate() {
            let (gi, gj) = (layout.group_of_i[slot.i], layout.group_of_j[slot.j]);
            let (si, sj) = layout.survivor(gi, gj);
            let reference = fine.nodez.get(slot.ref_q, si, sj, k);
            z_residuals[k * n_res + w] = fine.nodez.get(slot.q, slot.i, slot.j, k) - reference;
        }
    }

    let (coarse_pillars, pillar_details) = lift_pillars(&fine.pillars, fine.dims);

    // Activity: coarse vertices from selected parents, coarse cells from
    // their eight coarse corners.
    let groups_k = axis_groups(nk1);
    debug_assert_eq!(groups_k.len(), coarse_dims.nk + 1);
    let mut coarse_vert = vec![false; coarse_dims.node_count()];
    for (gk, &(sk, wk)) in groups_k.iter().enumerate() {
        for gj in 0..layout.tj {
            for gi in 0..layout.ti {
                let (si, sj) = layout.survivor(gi, gj);
                let active = (sk..sk + wk).all(|k| fine.vert(si, sj, k));
                coarse_vert[coarse_dims.node_index(gi, gj, gk)] = active;
            }
        }
    }
    let mut coarse_act = vec![false; coarse_dims.cell_count()];
    for k in 0..coarse_dims.nk {
        for j in 0..coarse_dims.nj {
            for i in 0..coarse_dims.ni {
                let active = (k..=k + 1).all(|ck| {
                    (j..=j + 1).all(|cj| {
                        (i..=i + 1)
                            .all(|ci| coarse_vert[coarse_dims.node_index(ci, cj, ck)])
                    })
                });
                coarse_act[coarse_dims.cell_index(i, j, k)] = active;
            }
        }
    }

    let coarse = GeomLevel {
        dims: coarse_dims,
        nodez: coarse_nodez,
        pillars: coarse_pillars,
        vert_act: coarse_vert,
        actnum: coarse_act,
    };
    let detail = GeometryDetail {
        selection: layout.selection.clone(),
        z_details,
        z_residuals,
        pillar_details,
        vert_act: fine.vert_act.clone(),
        actnum: fine.actnum.clone(),
    };
    (coarse, detail)
}

/// Exact inverse of [`analyze_geometry_level`].
pub fn synthesize_geometry_level(
    coarse: &GeomLevel,
    fine_dims: GridDims,
    detail: &GeometryDetail,
) -> Result<GeomLevel> {
    if fine_dims.coarsened() != coarse.dims {
        return Err(Error::CorruptDetail(format!(
            "coarse dims {:?} do not ceil-halve fine dims {:?}",
            coarse.dims, fine_dims
        )));
    }
    let layout = LevelLayout::from_selection(fine_dims, detail.selection.clone())?;
    let (_, _, nk1) = fine_dims.node_dims();

    let n_slots = layout.coarse_slots.len();
    if detail.z_details.len() != layout.k_details * n_slots {
        return Err(Error::CorruptDetail(format!(
            "z detail payload has {} values, expected {}",
            detail.z_details.len(),
            layout.k_details * n_slots
        )));
    }
    let n_res = layout.residual_slots.len();
    if detail.z_residuals.len() != nk1 * n_res {
        return Err(Error::CorruptDetail(format!(
            "residual payload has {} values, expected {}",
            detail.z_residuals.len(),
            nk1 * n_res
        )));
    }
    if detail.vert_act.len() != fine_dims.node_count()
        || detail.actnum.len() != fine_dims.cell_count()
    {
        return Err(Error::CorruptDetail("activity plane extent".into()));
    }

    let mut fine_nodez = NodeZField::zeroed(fine_dims);

    // Surviving columns first: un-lift from the coarse field.
    for (slot, &(gi, gj, q)) in layout.coarse_slots.iter().enumerate() {
        let (si, sj) = layout.survivor(gi, gj);
        let pair = LiftPair {
            approx: coarse.nodez.column(q, gi, gj),
            details: (0..layout.k_details)
                .map(|d| detail.z_details[d * n_slots + slot])
                .collect(),
            input_len: nk1,
        };
        let col = lift::node_unlift(&pair)?;
        fine_nodez.set_column(q, si, sj, &col);
    }

    // Residuals against the reconstructed survivors.
    for k in 0..nk1 {
        for (w, slot) in layout.residual_slots.iter().enumerate() {
            let (gi, gj) = (layout.group_of_i[slot.i], layout.group_of_j[slot.j]);
            let (si, sj) = layout.survivor(gi, gj);
            let reference = fine_nodez.get(slot.ref_q, si, sj, k);
            fine_nodez.set(
                slot.q,
                slot.i,
                slot.j,
                k,
                reference + detail.z_residuals[k * n_res + w],
            );
        }
    }

    let fine_pillars = unlift_pillars(&coarse.pillars, fine_dims, &detail.pillar_details)?;

    Ok(GeomLevel {
        dims: fine_dims,
        nodez: fine_nodez,
        pillars: fine_pillars,
        vert_act: detail.vert_act.clone(),
        actnum: detail.actnum.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuantizationParams;
    use crate::synthetic::{self, GeneratorSpec};
    use rand::{Rng, SeedableRng};

    fn config_from_quads(nw: i64, ne: i64, sw: i64, se: i64) -> FaultConfig {
        let mut axes = 0u8;
        if nw != ne {
            axes |= NORTH;
        }
        if sw != se {
            axes |= SOUTH;
        }
        if ne != se {
            axes |= EAST;
        }
        if nw != sw {
            axes |= WEST;
        }
        FaultConfig(axes)
    }

    #[test]
    fn twelve_states_exhaustive() {
        // All assignments of up to four distinct labels to the quadrants:
        // derived configurations always land in the twelve-state set.
        let mut seen = std::collections::HashSet::new();
        for a in 0..4i64 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let cfg = config_from_quads(a, b, c, d);
                        assert!(cfg.is_valid_state(), "single-axis from ({a},{b},{c},{d})");
                        seen.insert(cfg.0);
                    }
                }
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn straight_east_west_from_quads() {
        // (NW,NE,SW,SE) = (5,5,7,7): north and south equal pairs, east and
        // west sides disagree.
        let cfg = config_from_quads(5, 5, 7, 7);
        assert_eq!(cfg.0, EAST | WEST);
    }

    #[test]
    fn predict_or_rule() {
        let free = FaultConfig(0);
        let ns = FaultConfig(NORTH | SOUTH);
        // Left pair {straight N-S, fault-free}, right pair fault-free.
        let members = [(0, 0, ns), (1, 0, free), (0, 1, free), (1, 1, free)];
        let p = predict_config(&members, 2, 2);
        assert!(!p.has(WEST));
        assert!(p.has(SOUTH));
        assert!(!p.has(NORTH));
        // Four crosses OR to a cross.
        let cross = FaultConfig(NORTH | SOUTH | EAST | WEST);
        let all = [(0, 0, cross), (1, 0, cross), (0, 1, cross), (1, 1, cross)];
        assert_eq!(predict_config(&all, 2, 2).0, cross.0);
        // Fault persistence: any member axis on a side survives into the
        // prediction on that side.
        assert!(predict_config(&[(0, 0, FaultConfig(WEST)), (1, 0, free), (0, 1, free), (1, 1, free)], 2, 2).has(WEST));
    }

    #[test]
    fn select_min_distance_and_tiebreak() {
        let free = FaultConfig(0);
        let ew = FaultConfig(EAST | WEST);
        let all_same = [(0, 0, free), (1, 0, free), (0, 1, free), (1, 1, free)];
        assert_eq!(select_node(&all_same, free), 0);
        // {fault-free, straight-EW, fault-free, fault-free} against EW:
        // distances 2,0,2,2.
        let group = [(0, 0, free), (1, 0, ew), (0, 1, free), (1, 1, free)];
        assert_eq!(select_node(&group, ew), 1);
        // Prediction equal to exactly one member picks it.
        let corner = FaultConfig(NORTH | EAST);
        let group2 = [(0, 0, free), (1, 0, corner), (0, 1, ew), (1, 1, free)];
        assert_eq!(select_node(&group2, corner), 1);
    }

    #[test]
    fn axis_group_shapes() {
        assert_eq!(axis_groups(1), vec![(0, 1)]);
        assert_eq!(axis_groups(2), vec![(0, 1), (1, 1)]);
        assert_eq!(axis_groups(5), vec![(0, 2), (2, 2), (4, 1)]);
        assert_eq!(axis_groups(6), vec![(0, 2), (2, 2), (4, 1), (5, 1)]);
        // Group count tracks ceil-halved cells: n nodes = n-1 cells.
        for n in 2..40 {
            assert_eq!(axis_groups(n).len(), (n - 1).div_ceil(2) + 1);
        }
    }

    #[test]
    fn flat_mesh_zero_details() {
        let spec = GeneratorSpec::flat_layered(6, 5, 4);
        let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
        let map = derive_config_map(&model.nodez, 0);
        assert!(map.configs.iter().all(|c| c.fault_free()));
        let level = GeomLevel {
            dims: model.dims,
            vert_act: initial_vertex_activity(&model.dims, &model.actnum.values),
            nodez: model.nodez.clone(),
            pillars: model.pillars.clone(),
            actnum: model.actnum.values.clone(),
        };
        let (coarse, detail) = analyze_geometry_level(&level, 0);
        assert!(detail.z_residuals.iter().all(|&r| r == 0));
        // Depth columns are ramps in k only when layer thickness is constant;
        // what must hold exactly is reconstruction.
        let back = synthesize_geometry_level(&coarse, level.dims, &detail).unwrap();
        assert_eq!(back, level);
    }

    #[test]
    fn single_fault_trace_survives() {
        let spec = GeneratorSpec::single_fault(16, 16, 8, 8, 50.0);
        let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
        let map = derive_config_map(&model.nodez, 0);
        for j in 1..16 {
            let c = map.get(8, j);
            assert!(c.has(NORTH) || c.has(SOUTH), "trace broken at j={j}");
        }
        let mut level = GeomLevel {
            dims: model.dims,
            vert_act: initial_vertex_activity(&model.dims, &model.actnum.values),
            nodez: model.nodez.clone(),
            pillars: model.pillars.clone(),
            actnum: model.actnum.values.clone(),
        };
        // The fault trace stays in the config map at each coarser level, and
        // the predicted configs along the trace retain the axes.
        let mut trace_i = 8usize;
        for _ in 0..3 {
            let map = derive_config_map(&level.nodez, 0);
            let layout = LevelLayout::select(level.dims, &map);
            let gi = layout.group_of_i[trace_i];
            for gj in 1..layout.tj - 1 {
                let (si, _) = layout.survivor(gi, gj);
                assert_eq!(si, trace_i, "survivor left the trace");
            }
            let (coarse, detail) = analyze_geometry_level(&level, 0);
            let back = synthesize_geometry_level(&coarse, level.dims, &detail).unwrap();
            assert_eq!(back, level);
            level = coarse;
            trace_i /= 2;
            let cmap = derive_config_map(&level.nodez, 0);
            let mut on_trace = 0;
            for j in 1..level.dims.nj {
                let c = cmap.get(trace_i, j);
                if c.has(NORTH) || c.has(SOUTH) {
                    on_trace += 1;
                }
            }
            assert!(on_trace >= level.dims.nj - 1, "fault lost after coarsening");
        }
    }

    #[test]
    fn randomized_roundtrip_with_faults_and_actnum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for trial in 0..60 {
            let ni = rng.gen_range(1..=9);
            let nj = rng.gen_range(1..=9);
            let nk = rng.gen_range(1..=9);
            let spec = GeneratorSpec::randomized(ni, nj, nk, rng.gen_range(0..=3), 0.2 + 0.8 * rng.gen::<f64>(), trial as u64);
            let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
            let mut level = GeomLevel {
                dims: model.dims,
                vert_act: initial_vertex_activity(&model.dims, &model.actnum.values),
                nodez: model.nodez.clone(),
                pillars: model.pillars.clone(),
                actnum: model.actnum.values.clone(),
            };
            let mut stack = Vec::new();
            for _ in 0..rng.gen_range(1..=4) {
                let (coarse, detail) = analyze_geometry_level(&level, 0);
                // Activity monotonicity.
                let fine_active = level.actnum.iter().filter(|&&a| a).count();
                let coarse_active = coarse.actnum.iter().filter(|&&a| a).count();
                assert!(coarse_active <= fine_active);
                stack.push((level.dims, detail));
                level = coarse;
            }
            let mut current = level;
            for (fine_dims, detail) in stack.into_iter().rev() {
                current = synthesize_geometry_level(&current, fine_dims, &detail).unwrap();
            }
            let expect_vert = initial_vertex_activity(&model.dims, &model.actnum.values);
            assert_eq!(current.nodez, model.nodez);
            assert_eq!(current.pillars, model.pillars);
            assert_eq!(current.actnum, model.actnum.values);
            assert_eq!(current.vert_act, expect_vert);
        }
    }
}
