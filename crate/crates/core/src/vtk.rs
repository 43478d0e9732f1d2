//! Legacy-text VTK export of one resolution level.
//!
//! Emits an unstructured grid with one hexahedron per cell, eight dedicated
//! points each (corner-point cells are discontinuous across faults, so
//! points are not shared). Inactive cells are omitted unless kept by option;
//! degenerate collapsed cells pass through with repeated points. Continuous
//! cell data is rescaled to true means via the per-cell footprint divisor,
//! categorical data stays integer.

use crate::grid::{CornerPointModel, PropertyKind, Quadrant};
use crate::props::footprint;
use crate::pyramid::level_dims;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy)]
pub struct VtkOptions {
    /// Emit inactive cells too, with an ACTNUM cell-data array.
    pub keep_inactive: bool,
    /// Level tag of the model (0 = base); divisors derive from it.
    pub level: i32,
    /// Base dims of the pyramid the model came from (equal to the model's
    /// own dims at level 0).
    pub base_dims: Option<crate::grid::GridDims>,
}

impl Default for VtkOptions {
    fn default() -> Self {
        VtkOptions {
            keep_inactive: false,
            level: 0,
            base_dims: None,
        }
    }
}

/// Corner position: pillar line interpolated at the corner depth.
fn corner_position(
    model: &CornerPointModel,
    pi: usize,
    pj: usize,
    z: i64,
) -> (f64, f64, f64) {
    let scale = model.quant.geom_scale() as f64;
    let (x1, y1, z1) = model.pillars.ceil_point(pi, pj);
    let (x2, y2, z2) = model.pillars.floor_point(pi, pj);
    let zf = z as f64;
    let (x, y) = if z1 == z2 {
        (x1 as f64, y1 as f64)
    } else {
        let t = (zf - z1 as f64) / (z2 as f64 - z1 as f64);
        (
            x1 as f64 + t * (x2 as f64 - x1 as f64),
            y1 as f64 + t * (y2 as f64 - y1 as f64),
        )
    };
    (x / scale, y / scale, zf / scale)
}

/// The eight corners of cell (i, j, k): VTK hexahedron order, bottom face
/// counter-clockwise then top face (VTK z-up reads depth directly).
fn cell_corners(
    model: &CornerPointModel,
    i: usize,
    j: usize,
    k: usize,
) -> [(f64, f64, f64); 8] {
    let d = &model.dims;
    // Corner (a, b) of the cell column sits on pillar (i+a, j+b) in the
    // quadrant that points back at the cell.
    let q_for = |a: usize, b: usize| match (a, b) {
        (0, 0) => Quadrant::Ne,
        (1, 0) => Quadrant::Nw,
        (0, 1) => Quadrant::Se,
        _ => Quadrant::Sw,
    };
    let corner = |a: usize, b: usize, top: bool| {
        let (pi, pj) = (i + a, j + b);
        let layer = if top { k } else { k + 1 };
        let z = model.nodez.get(q_for(a, b), pi, pj, layer);
        corner_position(model, pi, pj, z)
    };
    let _ = d;
    [
        corner(0, 0, true),
        corner(1, 0, true),
        corner(1, 1, true),
        corner(0, 1, true),
        corner(0, 0, false),
        corner(1, 0, false),
        corner(1, 1, false),
        corner(0, 1, false),
    ]
}

/// Render the model as a legacy-text VTK unstructured grid.
pub fn export_vtk(model: &CornerPointModel, options: &VtkOptions) -> Vec<u8> {
    let dims = model.dims;
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    for k in 0..dims.nk {
        for j in 0..dims.nj {
            for i in 0..dims.ni {
                if options.keep_inactive || model.actnum.get(i, j, k) {
                    cells.push((i, j, k));
                }
            }
        }
    }

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(
        out,
        "hexashrink level {} of {}x{}x{} cells",
        options.level, dims.ni, dims.nj, dims.nk
    );
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");

    let _ = writeln!(out, "POINTS {} double", cells.len() * 8);
    for &(i, j, k) in &cells {
        for (x, y, z) in cell_corners(model, i, j, k) {
            let _ = writeln!(out, "{x} {y} {z}");
        }
    }

    let _ = writeln!(out, "CELLS {} {}", cells.len(), cells.len() * 9);
    for c in 0..cells.len() {
        let b = c * 8;
        let _ = writeln!(
            out,
            "8 {} {} {} {} {} {} {} {}",
            b,
            b + 1,
            b + 2,
            b + 3,
            b + 4,
            b + 5,
            b + 6,
            b + 7
        );
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    for _ in &cells {
        out.push_str("12\n");
    }

    if !model.properties.is_empty() || options.keep_inactive {
        let _ = writeln!(out, "CELL_DATA {}", cells.len());
    }
    if options.keep_inactive {
        out.push_str("SCALARS ACTNUM int 1\nLOOKUP_TABLE default\n");
        for &(i, j, k) in &cells {
            let _ = writeln!(out, "{}", i32::from(model.actnum.get(i, j, k)));
        }
    }
    let depth = options.level.unsigned_abs();
    let base = options.base_dims.unwrap_or(dims);
    debug_assert_eq!(level_dims(base, depth), dims);
    for field in &model.properties {
        match field.kind {
            PropertyKind::Categorical => {
                let _ = writeln!(out, "SCALARS {} long 1", field.name);
                out.push_str("LOOKUP_TABLE default\n");
                for &(i, j, k) in &cells {
                    let _ = writeln!(out, "{}", field.values[dims.cell_index(i, j, k)]);
                }
            }
            PropertyKind::Continuous => {
                let _ = writeln!(out, "SCALARS {} double 1", field.name);
                out.push_str("LOOKUP_TABLE default\n");
                for &(i, j, k) in &cells {
                    let v = field.values[dims.cell_index(i, j, k)];
                    let div = footprint(&base, depth, i, j, k);
                    let _ = writeln!(
                        out,
                        "{}",
                        crate::props::haar_display_value(v, model.quant.prop_exp, div)
                    );
                }
            }
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuantizationParams;
    use crate::synthetic::{self, GeneratorSpec};

    #[test]
    fn single_cell_export() {
        let model = synthetic::generate(
            &GeneratorSpec::flat_layered(1, 1, 1),
            QuantizationParams::default(),
        )
        .unwrap();
        let text = String::from_utf8(export_vtk(&model, &VtkOptions::default())).unwrap();
        assert!(text.contains("POINTS 8 double"), "{text}");
        assert!(text.contains("CELLS 1 9"));
        assert!(text.contains("CELL_TYPES 1"));
    }

    #[test]
    fn inactive_cells_dropped_by_default() {
        let mut spec = GeneratorSpec::flat_layered(4, 4, 2);
        spec.actnum = crate::synthetic::ActnumSpec::Density(0.25);
        let model = synthetic::generate(&spec, QuantizationParams::default()).unwrap();
        let active = model.actnum.active_count();
        let text = String::from_utf8(export_vtk(&model, &VtkOptions::default())).unwrap();
        assert!(text.contains(&format!("CELLS {active} ")));
        let kept = String::from_utf8(export_vtk(
            &model,
            &VtkOptions {
                keep_inactive: true,
                ..Default::default()
            },
        ))
        .unwrap();
        assert!(kept.contains(&format!("CELLS {} ", model.dims.cell_count())));
        assert!(kept.contains("SCALARS ACTNUM int 1"));
    }

    #[test]
    fn degenerate_cell_repeats_points() {
        // Collapse the whole first layer: top equals bottom.
        let mut model = synthetic::generate(
            &GeneratorSpec::flat_layered(2, 2, 2),
            QuantizationParams::default(),
        )
        .unwrap();
        let d = model.dims;
        for j in 0..=d.nj {
            for i in 0..=d.ni {
                for q in crate::grid::QUADRANTS {
                    if q.present(&d, i, j) {
                        let below = model.nodez.get(q, i, j, 1);
                        model.nodez.set(q, i, j, 0, below);
                    }
                }
            }
        }
        let text = String::from_utf8(export_vtk(&model, &VtkOptions::default())).unwrap();
        assert!(text.contains("CELLS 8 "));
    }
}
