//! Exactly reversible multiresolution decomposition of structured corner-point
//! hexahedral meshes.
//!
//! A corner-point model (geometry on pillars, an ACTNUM activity field, and
//! continuous or categorical cell properties) is decomposed into a pyramid of
//! dyadically coarsened meshes plus integer detail planes. Every stage is an
//! integer-to-integer map, so synthesis reconstructs the quantized input
//! bit-exactly. Pyramids are stored in a chunked container (`.hxs`) whose
//! payloads are squeezed through pluggable lossless byte compressors.
//!
//! The main entry points are:
//!
//! - [`grdecl::parse`] / [`grdecl::write`] to move between GRDECL text and the
//!   in-memory [`grid::CornerPointModel`],
//! - [`pyramid::analyze_pyramid`] / [`pyramid::synthesize_to_level`] for the
//!   multiresolution transform,
//! - [`container::serialize`] / [`container::deserialize`] for the `.hxs`
//!   archive,
//! - [`vtk::export_vtk`] for viewing a level in third-party tools.

pub mod codec;
pub mod container;
pub mod entropy;
pub mod error;
pub mod fault;
pub mod grdecl;
pub mod grid;
pub mod lift;
pub mod props;
pub mod pyramid;
pub mod synthetic;
pub mod vtk;

pub mod cli;

pub use error::{Error, Result};
pub use grid::{
    ActnumField, CellPropertyField, CornerPointModel, GridDims, NodeZField, PillarSet,
    PropertyKind, QuantizationParams,
};
