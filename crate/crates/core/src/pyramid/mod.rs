//! Multi-level analysis and synthesis across all fields.
//!
//! A pyramid holds the base header (dims, quantization, field roster, class
//! universes), the coarsest-level approximations, and one detail set per
//! level transition. Detail sets are tagged by the fine level they
//! reconstruct: synthesizing level t consumes the approximations plus every
//! detail tagged -L+1 ..= t, which is what makes a truncated container still
//! reconstruct its coarser levels.
//!
//! Analysis streams the base level through a slab plan (one slab is the
//! degenerate whole-grid case); deeper levels re-run the same engine on the
//! in-memory coarse output, so the container bytes never depend on the plan.

pub mod engine;

use crate::codec::CodecId;
use crate::error::{Error, Result};
use crate::fault::{self, GeomLevel};
use crate::grid::{
    ActnumField, CellPropertyField, CornerPointModel, GridDims, OpaqueBlock, PropertyKind,
    QuantizationParams,
};
use crate::props;
pub use engine::{Gauge, SlabPlan};

/// Property roster entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldInfo {
    pub name: String,
    pub kind: PropertyKind,
    /// Class universe for categorical fields, sorted; empty for continuous.
    pub universe: Vec<i64>,
}

/// Codec assignment per payload kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    pub approx: CodecId,
    pub detail: CodecId,
    pub activity: CodecId,
    pub selection: CodecId,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            approx: CodecId::Deflate,
            detail: CodecId::Deflate,
            activity: CodecId::Deflate,
            selection: CodecId::Deflate,
        }
    }
}

impl CodecConfig {
    pub fn uniform(codec: CodecId) -> Self {
        CodecConfig {
            approx: codec,
            detail: codec,
            activity: codec,
            selection: codec,
        }
    }
}

/// A sidecar payload that may be absent from a truncated stream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Sidecar<T> {
    /// The model has no such data.
    #[default]
    None,
    Present(T),
    /// The directory lists it but the stream was truncated before its bytes.
    Missing,
}

impl<T> Sidecar<T> {
    pub fn as_option(&self) -> Option<&T> {
        match self {
            Sidecar::Present(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PyramidHeader {
    pub dims: GridDims,
    pub levels: u32,
    pub quant: QuantizationParams,
    /// Fault-equality tolerance in quantized z units (0 = exact).
    pub epsilon: i64,
    pub fields: Vec<FieldInfo>,
}

/// One resolution level's full data: geometry plus property fields.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelData {
    pub geom: GeomLevel,
    pub props: Vec<Vec<i64>>,
}

/// Details refining one level from the next-coarser one.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDetail {
    pub geometry: fault::GeometryDetail,
    pub props: Vec<Vec<i64>>,
}

/// Raw chunk of an unknown kind, preserved for forward compatibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawChunk {
    pub field: u16,
    pub level: i16,
    pub kind: u8,
    pub codec: u8,
    pub width: u8,
    pub raw_len: u64,
    pub compressed: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub header: PyramidHeader,
    /// Coarsest-level approximations (level -L).
    pub base: LevelData,
    /// Detail sets tagged -L+1 ..= 0, coarsest first. `None` marks a level
    /// whose chunks were truncated away.
    pub details: Vec<Option<LevelDetail>>,
    pub codecs: CodecConfig,
    /// Untransformed top corners when horizontal faults were tolerated.
    pub top_z: Sidecar<Vec<i64>>,
    /// Opaque GRDECL blocks carried through unchanged.
    pub extras: Sidecar<Vec<OpaqueBlock>>,
    /// Unknown trailing chunks preserved verbatim.
    pub unknown_chunks: Vec<RawChunk>,
}

/// Cell dims of the level `depth` steps below the base.
pub fn level_dims(base: GridDims, depth: u32) -> GridDims {
    let mut d = base;
    for _ in 0..depth {
        d = d.coarsened();
    }
    d
}

fn check_working_range(model: &CornerPointModel, levels: u32) -> Result<()> {
    const GEOM_LIMIT: i64 = 1 << 60;
    let mut max_z = 0i64;
    for plane in &model.nodez_planes_for_scan() {
        for &v in plane.iter() {
            max_z = max_z.max(v.abs());
        }
    }
    for plane in &model.pillars.planes {
        for &v in plane {
            max_z = max_z.max(v.abs());
        }
    }
    if max_z >= GEOM_LIMIT {
        return Err(Error::OverflowRisk(format!(
            "geometry magnitude {max_z} too large for lifting"
        )));
    }
    for f in &model.properties {
        if f.kind == PropertyKind::Continuous {
            let max_p = f.values.iter().map(|v| v.abs()).max().unwrap_or(0) as i128;
            // Sum-scheme approximations grow by up to 8x per level.
            let bound = max_p << (3 * levels.min(20));
            if bound >= 1i128 << 60 {
                return Err(Error::OverflowRisk(format!(
                    "field {} would exceed the working range after {levels} levels",
                    f.name
                )));
            }
        }
    }
    Ok(())
}

impl CornerPointModel {
    /// Quadrant planes exposed for range scanning. Structurally missing slots
    /// are zero, which only widens the scan conservatively.
    fn nodez_planes_for_scan(&self) -> [&[i64]; 4] {
        crate::grid::QUADRANTS.map(|q| self.nodez.plane(q))
    }
}

pub(crate) fn field_roster(model: &CornerPointModel) -> Vec<FieldInfo> {
    model
        .properties
        .iter()
        .map(|f| FieldInfo {
            name: f.name.clone(),
            kind: f.kind,
            universe: f.universe.clone(),
        })
        .collect()
}

/// Decompose a model `levels` steps, streaming the base level through
/// `plan`. The container bytes are identical for every valid plan.
pub fn analyze_streaming(
    model: &CornerPointModel,
    plan: &SlabPlan,
    levels: u32,
    epsilon: i64,
    gauge: Option<&mut Gauge>,
) -> Result<Pyramid> {
    let max = model.dims.max_levels();
    if levels == 0 || levels > max {
        return Err(Error::LevelOutOfRange {
            requested: -(levels as i32),
            max,
        });
    }
    check_working_range(model, levels)?;
    let fields = field_roster(model);

    let mut local_gauge = Gauge::default();
    let gauge = match gauge {
        Some(g) => g,
        None => &mut local_gauge,
    };

    let mut details_fine_first: Vec<Option<LevelDetail>> = Vec::with_capacity(levels as usize);
    let source = engine::ModelSource(model);
    let (mut current, detail) = engine::analyze_transition(&source, &fields, plan, epsilon, gauge)?;
    details_fine_first.push(Some(detail));
    for _ in 1..levels {
        let single = SlabPlan::single(current.geom.dims.nk);
        let src = engine::LevelSource(&current);
        let (coarse, detail) = engine::analyze_transition(&src, &fields, &single, epsilon, gauge)?;
        details_fine_first.push(Some(detail));
        current = coarse;
    }
    details_fine_first.reverse();

    Ok(Pyramid {
        header: PyramidHeader {
            dims: model.dims,
            levels,
            quant: model.quant,
            epsilon,
            fields,
        },
        base: current,
        details: details_fine_first,
        codecs: CodecConfig::default(),
        top_z: match &model.top_z_sidechannel {
            Some(v) => Sidecar::Present(v.clone()),
            None => Sidecar::None,
        },
        extras: if model.extras.is_empty() {
            Sidecar::None
        } else {
            Sidecar::Present(model.extras.clone())
        },
        unknown_chunks: Vec::new(),
    })
}

/// Whole-grid decomposition: the single-slab plan.
pub fn analyze_pyramid(model: &CornerPointModel, levels: u32) -> Result<Pyramid> {
    analyze_streaming(model, &SlabPlan::single(model.dims.nk), levels, 0, None)
}

fn detail_for_tag(pyramid: &Pyramid, idx: usize) -> Result<&LevelDetail> {
    pyramid.details[idx].as_ref().ok_or_else(|| {
        let tag = -(pyramid.header.levels as i32) + 1 + idx as i32;
        Error::MissingChunk(format!("detail chunks for level {tag}"))
    })
}

/// Reconstruct the model at level t (0 = bit-exact original, -L = stored
/// coarsest approximation). Uses only detail sets tagged at or below t.
pub fn synthesize_to_level(pyramid: &Pyramid, t: i32) -> Result<CornerPointModel> {
    let levels = pyramid.header.levels;
    if t > 0 || t < -(levels as i32) {
        return Err(Error::LevelOutOfRange {
            requested: t,
            max: levels,
        });
    }
    let transitions = (t + levels as i32) as usize;
    let mut geom = pyramid.base.geom.clone();
    let mut prop_values: Vec<Vec<i64>> = pyramid.base.props.clone();

    for idx in 0..transitions {
        let detail = detail_for_tag(pyramid, idx)?;
        let depth_of_fine = levels - 1 - idx as u32;
        let fine_dims = level_dims(pyramid.header.dims, depth_of_fine);
        geom = fault::synthesize_geometry_level(&geom, fine_dims, &detail.geometry)?;
        for (f, info) in pyramid.header.fields.iter().enumerate() {
            let level = props::PropertyLevel {
                coarse: std::mem::take(&mut prop_values[f]),
                details: detail.props[f].clone(),
            };
            prop_values[f] = match info.kind {
                PropertyKind::Continuous => props::haar_synthesize_level(&fine_dims, &level)?,
                PropertyKind::Categorical => {
                    props::modelet_synthesize_level(&fine_dims, &level, &info.universe)?
                }
            };
        }
    }

    let dims = geom.dims;
    let mut model = CornerPointModel::new(dims, pyramid.header.quant);
    model.pillars = geom.pillars;
    model.nodez = geom.nodez;
    model.actnum = ActnumField {
        dims,
        values: geom.actnum,
    };
    model.properties = pyramid
        .header
        .fields
        .iter()
        .zip(prop_values)
        .map(|(info, values)| CellPropertyField {
            name: info.name.clone(),
            kind: info.kind,
            values,
            universe: info.universe.clone(),
        })
        .collect();
    if t == 0 {
        model.top_z_sidechannel = match &pyramid.top_z {
            Sidecar::None => None,
            Sidecar::Present(v) => Some(v.clone()),
            Sidecar::Missing => {
                return Err(Error::MissingChunk("top-Z side channel".into()))
            }
        };
        model.extras = match &pyramid.extras {
            Sidecar::None => Vec::new(),
            Sidecar::Present(v) => v.clone(),
            Sidecar::Missing => return Err(Error::MissingChunk("document extras".into())),
        };
    }
    Ok(model)
}
