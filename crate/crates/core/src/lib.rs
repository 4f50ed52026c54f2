//! Feasible-operation-region engine for radial distribution grids.
//!
//! The crate models a medium-voltage benchmark grid with controllable
//! participants (loads, wind, PV, EV chargers), solves its AC power flow,
//! and sweeps the reachable active/reactive interchange at the HV slack
//! into a boundary polygon with per-point binding-constraint labels. On
//! top of that sit loss rasters over the region and payment curves for
//! pricing the offered flexibility.
//!
//! Everything numeric is generic over [`Scalar`], so the whole pipeline
//! runs in `f64` (the default) or `f32`. The `*64`/`*32` aliases at the
//! crate root pick the precision without spelling out type parameters.

pub mod aggregation;
pub mod flexibility;
pub mod geometry;
pub mod grid;
pub mod monetization;
pub mod num;
pub mod per_unit;
pub mod power_flow;
pub mod reference;
pub mod scenario;

pub use num::Scalar;

pub type Grid64 = grid::Grid<f64>;
pub type Grid32 = grid::Grid<f32>;
pub type PerUnitGrid64 = per_unit::PerUnitGrid<f64>;
pub type PerUnitGrid32 = per_unit::PerUnitGrid<f32>;
pub type PowerFlowSolution64 = power_flow::PowerFlowSolution<f64>;
pub type PowerFlowSolution32 = power_flow::PowerFlowSolution<f32>;
pub type PqPolygon64 = flexibility::PqPolygon<f64>;
pub type PqPolygon32 = flexibility::PqPolygon<f32>;
pub type Fpu64 = flexibility::Fpu<f64>;
pub type Fpu32 = flexibility::Fpu<f32>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type Scenario32 = scenario::Scenario<f32>;
pub type ForResult64 = aggregation::ForResult<f64>;
pub type ForResult32 = aggregation::ForResult<f32>;
pub type LossMap64 = aggregation::LossMap<f64>;
pub type LossMap32 = aggregation::LossMap<f32>;
pub type EpfCurve64 = monetization::EpfCurve<f64>;
pub type EpfCurve32 = monetization::EpfCurve<f32>;
