//! Fractional-derivative scale spaces of one-dimensional transient signals:
//! kernel families, spectral synthesis, level-set contours, Witkin trees and
//! parameter bifurcation scans.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! `f64` for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcations;
pub mod contours;
mod critical;
pub mod error;
pub mod kernels;
pub mod scalar;
pub mod spectral;
pub mod trees;

pub use bifurcations::{
    classify_index, invariant_table, locate_critical_point, morse_report, scan, scan_report_json, BifurcationEvent,
    EventKind, InvariantTable, LocateConfig, MorseReport, ParamScan, ScanAxis, ScanResult, Slice, SliceEdge,
    SliceGraph,
};
pub use contours::{
    classify_component, extract_level_set, genericity_check, orient_all, orient_and_energy, trace_level, ContourSet,
    CurveKind, LevelCurve,
};
pub use error::{Error, ErrorClass, Result};
pub use kernels::{eval_kernel, eval_kernel_wide, transfer, KernelParams, Parity, SeriesEvalConfig};
pub use scalar::Real;
pub use spectral::{
    estimate_decay_order, forward_transform, fractional_derivative, geometric_sigma_ladder, inverse_transform,
    pde_residual, synth_checked, synth_field, Deriv, FieldGrid, FieldStack, ScaleSpace, SignalGrid,
    SmoothnessBudget, Spectrum,
};
pub use trees::{build_tree, canonicalize, tree_equal, ScaleTree, TreeSignature};

pub type Params = KernelParams<f64>;
pub type Signal = SignalGrid<f64>;
pub type Field = FieldGrid<f64>;
pub type Space = ScaleSpace<f64>;
pub type Contours = ContourSet<f64>;
pub type Curve = LevelCurve<f64>;
pub type Tree = ScaleTree<f64>;
pub type Scan = ParamScan<f64>;
pub type Event = BifurcationEvent<f64>;
pub type Graph = SliceGraph<f64>;
