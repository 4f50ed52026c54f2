//! PQ-flexibility polygons: axis-aligned boxes for loads and DER, wedge-and-
//! cap capability regions for EV charging stations, and the FPU wrapper that
//! ties a polygon, an operating point, and an optional payment curve to a bus.
//!
//! Regions are unions of convex cells so that membership, projection, and
//! sampling stay cheap inside the sweep loops. Sign convention throughout:
//! consumption-positive P, inductive-positive Q, units MW/Mvar.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Pt};
use crate::monetization::EpfCurve;
use crate::num::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum FlexError {
    #[error("charger rating must be positive")]
    BadRating,
    #[error("rated-power ratio must be positive")]
    BadRatio,
    #[error("expected a {expected:?} charger spec")]
    WrongKind { expected: EvKind },
    #[error("box bounds are inverted")]
    InvertedBounds,
    #[error("polygon needs at least one cell with at least one vertex")]
    Empty,
    #[error("cell {0} is not convex")]
    NotConvex(usize),
    #[error("charger count must be at least 1")]
    BadCount,
    #[error("operating point lies outside the polygon")]
    OperatingPointOutside,
}

/// Union of convex cells, each a counterclockwise vertex ring. Degenerate
/// cells (single points, segments) are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct PqPolygon<T> {
    cells: Vec<Vec<Pt<T>>>,
    bbox: (Pt<T>, Pt<T>),
}

impl<T: Scalar> PqPolygon<T> {
    /// Normalizes each cell (consecutive duplicates dropped, counterclockwise
    /// orientation, collinear rings collapsed) and checks convexity.
    pub fn new(cells: Vec<Vec<Pt<T>>>) -> Result<Self, FlexError> {
        if cells.is_empty() {
            return Err(FlexError::Empty);
        }
        let mut normalized = Vec::with_capacity(cells.len());
        for (idx, cell) in cells.into_iter().enumerate() {
            if cell.is_empty() {
                return Err(FlexError::Empty);
            }
            let mut ring: Vec<Pt<T>> = Vec::with_capacity(cell.len());
            for v in cell {
                if ring.last() != Some(&v) {
                    ring.push(v);
                }
            }
            while ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() >= 3 {
                let area = geometry::signed_area(&ring);
                if area < T::zero() {
                    ring.reverse();
                } else if area == T::zero() {
                    ring = geometry::convex_hull(&ring);
                }
            }
            if ring.len() >= 3 {
                let scale = ring
                    .iter()
                    .map(|p| p[0].abs().max(p[1].abs()))
                    .fold(T::zero(), T::max);
                let eps = T::epsilon() * T::of(100.0) * scale * scale;
                let n = ring.len();
                for i in 0..n {
                    let e0 = geometry::sub(ring[(i + 1) % n], ring[i]);
                    let e1 = geometry::sub(ring[(i + 2) % n], ring[(i + 1) % n]);
                    if geometry::cross(e0, e1) < -eps {
                        return Err(FlexError::NotConvex(idx));
                    }
                }
            }
            normalized.push(ring);
        }
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for cell in &normalized {
            for p in cell {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        Ok(Self { cells: normalized, bbox: (lo, hi) })
    }

    pub fn cells(&self) -> &[Vec<Pt<T>>] {
        &self.cells
    }

    /// (min corner, max corner)
    pub fn bbox(&self) -> (Pt<T>, Pt<T>) {
        self.bbox
    }

    /// True iff the point lies in some cell or within `tol` of one.
    pub fn contains(&self, point: Pt<T>, tol: T) -> bool {
        self.cells.iter().any(|c| geometry::project_convex(c, point).0 <= tol * tol)
    }

    /// Euclidean-nearest point of the union. Ties go to the lower-indexed cell.
    pub fn project(&self, point: Pt<T>) -> Pt<T> {
        let mut best = (T::infinity(), point);
        for cell in &self.cells {
            let cand = geometry::project_convex(cell, point);
            if cand.0 < best.0 {
                best = cand;
            }
        }
        best.1
    }

    /// Uniform sample over the union via bounding-box rejection. Zero-area
    /// polygons fall back to sampling along cell vertices.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> Pt<T> {
        let (lo, hi) = self.bbox;
        let has_area = self
            .cells
            .iter()
            .any(|c| c.len() >= 3 && geometry::signed_area(c) > T::zero());
        if has_area {
            for _ in 0..100_000 {
                let p = [
                    T::of(rng.gen_range(0.0..=1.0)) * (hi[0] - lo[0]) + lo[0],
                    T::of(rng.gen_range(0.0..=1.0)) * (hi[1] - lo[1]) + lo[1],
                ];
                if self.contains(p, T::zero()) {
                    return p;
                }
            }
        }
        let cell = &self.cells[rng.gen_range(0..self.cells.len())];
        match cell.len() {
            1 => cell[0],
            _ => {
                let a = cell[rng.gen_range(0..cell.len())];
                let b = cell[rng.gen_range(0..cell.len())];
                let t = T::of(rng.gen_range(0.0..=1.0));
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            }
        }
    }

    /// Scales the region about the origin; models N identical units
    /// dispatched proportionally.
    pub fn scale(&self, factor: T) -> Self {
        assert!(factor > T::zero());
        let cells = self
            .cells
            .iter()
            .map(|c| c.iter().map(|p| [p[0] * factor, p[1] * factor]).collect())
            .collect();
        let (lo, hi) = self.bbox;
        Self {
            cells,
            bbox: ([lo[0] * factor, lo[1] * factor], [hi[0] * factor, hi[1] * factor]),
        }
    }

    /// Convex hull over every cell vertex.
    pub fn hull(&self) -> Vec<Pt<T>> {
        let pts: Vec<Pt<T>> = self.cells.iter().flatten().copied().collect();
        geometry::convex_hull(&pts)
    }
}

/// Single rectangular cell; degenerates to a segment or point when bounds
/// coincide.
pub fn box_polygon<T: Scalar>(
    p_min: T,
    p_max: T,
    q_min: T,
    q_max: T,
) -> Result<PqPolygon<T>, FlexError> {
    if p_min > p_max || q_min > q_max {
        return Err(FlexError::InvertedBounds);
    }
    PqPolygon::new(vec![vec![
        [p_min, q_min],
        [p_max, q_min],
        [p_max, q_max],
        [p_min, q_max],
    ]])
}

/// Minkowski sum of the convex hulls of the given polygons; the
/// grid-unconstrained outer bound on aggregate flexibility.
pub fn minkowski_sum<T: Scalar>(polys: &[PqPolygon<T>]) -> Result<PqPolygon<T>, FlexError> {
    let mut iter = polys.iter();
    let first = iter.next().ok_or(FlexError::Empty)?;
    let mut acc = first.hull();
    for p in iter {
        acc = geometry::minkowski_convex(&acc, &p.hull());
    }
    PqPolygon::new(vec![acc])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvKind {
    Ac,
    Dc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityShape {
    Circle,
    Square,
}

/// What the station may do with Q in the low-activity band where charging
/// standards leave reactive power unspecified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowBandPolicy {
    /// Q pinned to zero; the cautious choice for in-vehicle AC inverters.
    ZeroQ,
    /// Full capability-curve Q; DC stations with grid-side inverters can run
    /// as a static compensator even at zero charge power.
    FullCircle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + Scalar"))]
pub struct EvChargerSpec<T> {
    pub s_rated_kva: T,
    pub kind: EvKind,
    pub capability_shape: CapabilityShape,
    pub low_band_q_policy: LowBandPolicy,
    /// Rated active power as a fraction of s_rated.
    #[serde(default = "default_ratio")]
    pub p_n_ratio: T,
}

fn default_ratio<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> EvChargerSpec<T> {
    pub fn ac(s_rated_kva: T) -> Self {
        Self {
            s_rated_kva,
            kind: EvKind::Ac,
            capability_shape: CapabilityShape::Circle,
            low_band_q_policy: LowBandPolicy::ZeroQ,
            p_n_ratio: T::one(),
        }
    }

    pub fn dc(s_rated_kva: T) -> Self {
        Self {
            s_rated_kva,
            kind: EvKind::Dc,
            capability_shape: CapabilityShape::Circle,
            low_band_q_policy: LowBandPolicy::FullCircle,
            p_n_ratio: T::one(),
        }
    }

    /// Power-factor floor: AC stations above 13.8 kVA and all DC stations
    /// must hold cos phi 0.9; small AC stations 0.95.
    pub fn phi_limit(&self) -> T {
        match self.kind {
            EvKind::Ac if self.s_rated_kva <= T::of(13.8) => T::of(0.95),
            _ => T::of(0.9),
        }
    }

    /// Charging at full rating with cos phi 0.999, slightly inductive; the
    /// reference dispatch for a busy station. MW/Mvar.
    pub fn rated_operating_point(&self) -> Pt<T> {
        let s_mw = self.s_rated_kva / T::of(1e3);
        let pf = T::of(0.999);
        [s_mw * pf, s_mw * (T::one() - pf * pf).sqrt()]
    }
}

pub fn ev_ac_polygon<T: Scalar>(spec: &EvChargerSpec<T>) -> Result<PqPolygon<T>, FlexError> {
    if spec.kind != EvKind::Ac {
        return Err(FlexError::WrongKind { expected: EvKind::Ac });
    }
    charger_polygon(spec)
}

pub fn ev_dc_polygon<T: Scalar>(spec: &EvChargerSpec<T>) -> Result<PqPolygon<T>, FlexError> {
    if spec.kind != EvKind::Dc {
        return Err(FlexError::WrongKind { expected: EvKind::Dc });
    }
    charger_polygon(spec)
}

/// 64 segments per full turn keeps every arc chord inside the true circle.
const ARC_STEPS_PER_TURN: usize = 64;

fn charger_polygon<T: Scalar>(spec: &EvChargerSpec<T>) -> Result<PqPolygon<T>, FlexError> {
    if !(spec.s_rated_kva > T::zero()) {
        return Err(FlexError::BadRating);
    }
    if !(spec.p_n_ratio > T::zero()) {
        return Err(FlexError::BadRatio);
    }
    let s = spec.s_rated_kva / T::of(1e3);
    let pn = spec.p_n_ratio * s;
    let phi = spec.phi_limit();
    let tan = phi.acos().tan();
    let p_hi = T::of(0.05) * pn;
    let p_lo = -T::of(0.2) * pn;

    let charge = wedge_cell(p_hi, s, phi, tan, spec.capability_shape);
    let mut discharge = wedge_cell(-p_lo, s, phi, tan, spec.capability_shape);
    for v in &mut discharge {
        v[0] = -v[0];
    }
    discharge.reverse();

    let band = match spec.low_band_q_policy {
        LowBandPolicy::ZeroQ => vec![[p_lo, T::zero()], [p_hi, T::zero()]],
        LowBandPolicy::FullCircle => match spec.capability_shape {
            CapabilityShape::Square => {
                vec![[p_lo, -s], [p_hi, -s], [p_hi, s], [p_lo, s]]
            }
            CapabilityShape::Circle => {
                let a_hi = (p_hi / s).acos();
                let a_lo = (p_lo / s).acos();
                let mut ring = vec![circle_pt(s, -a_hi), circle_pt(s, a_hi)];
                ring.extend(arc_points(s, a_hi, a_lo, &[]));
                ring.extend(arc_points(s, -a_lo, -a_hi, &[]));
                ring
            }
        },
    };

    PqPolygon::new(vec![charge, discharge, band])
}

/// Convex cell of the charging-direction wedge |Q| <= P·tan, cut at
/// `p_start` and capped by the capability curve. Counterclockwise.
fn wedge_cell<T: Scalar>(
    p_start: T,
    s: T,
    phi: T,
    tan: T,
    shape: CapabilityShape,
) -> Vec<Pt<T>> {
    let mut ring = vec![[p_start, -p_start * tan]];
    match shape {
        CapabilityShape::Circle => {
            let alpha = phi.acos();
            let beta = T::of(0.999).acos();
            ring.extend(arc_points(s, -alpha, alpha, &[-beta, beta]));
        }
        CapabilityShape::Square => {
            ring.push([s, -s * tan]);
            ring.push([s, s * tan]);
        }
    }
    ring.push([p_start, p_start * tan]);
    ring
}

fn circle_pt<T: Scalar>(radius: T, angle: T) -> Pt<T> {
    [radius * angle.cos(), radius * angle.sin()]
}

/// Inscribed arc vertices from `from` to `to` (radians, ascending): both
/// endpoints, every multiple of the global step inside, and the given anchor
/// angles, so chosen operating directions land exactly on vertices.
fn arc_points<T: Scalar>(radius: T, from: T, to: T, anchors: &[T]) -> Vec<Pt<T>> {
    let step = T::of(2.0) * T::PI() / T::from_usize(ARC_STEPS_PER_TURN).unwrap();
    let mut angles = vec![from, to];
    let mut k = (from / step).floor() + T::one();
    while k * step < to {
        if k * step > from {
            angles.push(k * step);
        }
        k += T::one();
    }
    for &a in anchors {
        if a > from && a < to {
            angles.push(a);
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    angles.dedup_by(|a, b| (*a - *b).abs() < T::of(1e-12));
    angles.into_iter().map(|a| circle_pt(radius, a)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpuKind {
    ResidentialLoad,
    IndustrialLoad,
    Wind,
    Pv,
    EvAc,
    EvDc,
}

/// How an FPU's polygon was specified, kept so scenario files round-trip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FpuSource<T> {
    Bounds { p_min: T, p_max: T, q_min: T, q_max: T },
    Charger { spec: EvChargerSpec<T>, count: usize },
}

/// A flexibility-providing unit: one bus, one region, one operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct Fpu<T> {
    pub bus: usize,
    pub label: String,
    pub kind: FpuKind,
    pub polygon: PqPolygon<T>,
    /// MW/Mvar, consumption-positive; must lie inside the polygon.
    pub operating_point: Pt<T>,
    pub source: FpuSource<T>,
    pub cost: Option<EpfCurve<T>>,
}

impl<T: Scalar> Fpu<T> {
    pub fn from_bounds(
        bus: usize,
        label: impl Into<String>,
        kind: FpuKind,
        p_min: T,
        p_max: T,
        q_min: T,
        q_max: T,
        operating_point: Pt<T>,
    ) -> Result<Self, FlexError> {
        let fpu = Self {
            bus,
            label: label.into(),
            kind,
            polygon: box_polygon(p_min, p_max, q_min, q_max)?,
            operating_point,
            source: FpuSource::Bounds { p_min, p_max, q_min, q_max },
            cost: None,
        };
        fpu.validate()?;
        Ok(fpu)
    }

    /// `count` identical stations dispatched proportionally: the polygon and
    /// the rated operating point both scale by the count.
    pub fn from_charger(
        bus: usize,
        label: impl Into<String>,
        spec: EvChargerSpec<T>,
        count: usize,
        operating_point: Option<Pt<T>>,
    ) -> Result<Self, FlexError> {
        if count == 0 {
            return Err(FlexError::BadCount);
        }
        let single = charger_polygon(&spec)?;
        let n = T::from_usize(count).unwrap();
        let op = operating_point.unwrap_or_else(|| {
            let p = spec.rated_operating_point();
            [p[0] * n, p[1] * n]
        });
        let fpu = Self {
            bus,
            label: label.into(),
            kind: match spec.kind {
                EvKind::Ac => FpuKind::EvAc,
                EvKind::Dc => FpuKind::EvDc,
            },
            polygon: if count == 1 { single } else { single.scale(n) },
            operating_point: op,
            source: FpuSource::Charger { spec, count },
            cost: None,
        };
        fpu.validate()?;
        Ok(fpu)
    }

    pub fn with_cost(mut self, cost: EpfCurve<T>) -> Self {
        self.cost = Some(cost);
        self
    }

    pub fn validate(&self) -> Result<(), FlexError> {
        if self.polygon.contains(self.operating_point, T::of(1e-9)) {
            Ok(())
        } else {
            Err(FlexError::OperatingPointOutside)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KVAR: f64 = 1e-3; // Mvar per kvar
    const TAN_95: f64 = 0.3286841051788632; // tan(acos 0.95)
    const TAN_90: f64 = 0.48432210483785254; // tan(acos 0.9)

    /// Analytic membership per the defining rules, independent of the cell
    /// construction.
    fn analytic_ok(spec: &EvChargerSpec<f64>, p: f64, q: f64, slack: f64) -> bool {
        let s = spec.s_rated_kva / 1e3;
        let pn = spec.p_n_ratio * s;
        let cap = match spec.capability_shape {
            CapabilityShape::Circle => (p * p + q * q).sqrt() <= s + slack,
            CapabilityShape::Square => p.abs() <= s + slack && q.abs() <= s + slack,
        };
        if !cap {
            return false;
        }
        let tan = spec.phi_limit().acos().tan();
        if p >= 0.05 * pn {
            q.abs() <= p * tan + slack
        } else if p <= -0.2 * pn {
            q.abs() <= p.abs() * tan + slack
        } else {
            match spec.low_band_q_policy {
                LowBandPolicy::ZeroQ => q.abs() <= slack,
                LowBandPolicy::FullCircle => true,
            }
        }
    }

    #[test]
    fn small_ac_station_wedge_binds_before_the_circle() {
        let spec = EvChargerSpec::<f64>::ac(11.0);
        let poly = ev_ac_polygon(&spec).unwrap();
        let p = 10.0 * KVAR;
        let q_wedge = 10.0 * TAN_95 * KVAR;
        assert!((q_wedge - 3.286841051788632 * KVAR).abs() < 1e-18);
        let q_circle = (11.0f64.powi(2) - 10.0f64.powi(2)).sqrt() * KVAR;
        assert!((q_circle - 4.58257569495584 * KVAR).abs() < 1e-15);
        assert!(poly.contains([p, q_wedge], 1e-12));
        assert!(poly.contains([p, -q_wedge], 1e-12));
        assert!(!poly.contains([p, q_wedge + 1e-6], 1e-9));
        assert!(!poly.contains([p, q_circle], 1e-9));
    }

    #[test]
    fn zero_q_band_allows_only_the_p_axis() {
        let poly = ev_ac_polygon(&EvChargerSpec::ac(11.0)).unwrap();
        assert!(poly.contains([0.0, 0.0], 1e-12));
        assert!(!poly.contains([0.0, 2.0 * KVAR], 1e-9));
        assert!(!poly.contains([0.0, -2.0 * KVAR], 1e-9));
    }

    #[test]
    fn wedge_meets_circle_at_the_power_factor_point() {
        let spec = EvChargerSpec::<f64>::ac(20.0);
        let poly = ev_ac_polygon(&spec).unwrap();
        let p = 18.0 * KVAR;
        let q = 18.0 * TAN_90 * KVAR;
        assert!((q - 8.717797887081346 * KVAR).abs() < 1e-16);
        assert!(((p * p + q * q).sqrt() - 20.0 * KVAR).abs() < 1e-12);
        // tangency is an exact vertex
        assert!(poly
            .cells()
            .iter()
            .flatten()
            .any(|v| (v[0] - p).abs() < 1e-12 && (v[1] - q).abs() < 1e-12));
        assert!(poly.contains([p, q], 1e-12));
        assert!(!poly.contains([p, q + 1e-6], 1e-9));
    }

    #[test]
    fn dc_station_statcom_band_and_tangency() {
        let spec = EvChargerSpec::<f64>::dc(600.0);
        let poly = ev_dc_polygon(&spec).unwrap();
        let q540 = 540.0 * TAN_90 * KVAR;
        assert!((q540 - 261.53393661244036 * KVAR).abs() < 1e-14);
        assert!(poly.contains([0.54, q540], 1e-12));
        assert!(((0.54f64.powi(2) + q540 * q540).sqrt() - 0.6).abs() < 1e-12);
        // STATCOM band: at P = 0 the inscribed circle reaches +-600 kvar
        assert!(poly.contains([0.0, 0.5999], 1e-9));
        assert!(poly.contains([0.0, -0.5999], 1e-9));
        assert!(!poly.contains([0.0, 0.6001], 1e-9));
        // but active power in the band cannot exceed the band edge
        assert!(!poly.contains([0.1, 0.59], 1e-9));
    }

    #[test]
    fn square_capability_swaps_the_cap_not_the_wedge() {
        let mut spec = EvChargerSpec::<f64>::dc(600.0);
        spec.capability_shape = CapabilityShape::Square;
        let poly = ev_dc_polygon(&spec).unwrap();
        let q540 = 540.0 * TAN_90 * KVAR;
        assert!(poly.contains([0.54, q540], 1e-12));
        assert!(!poly.contains([0.54, q540 + 1e-6], 1e-9));
        // the square lets P run to the full rating
        assert!(poly.contains([0.6, 0.6 * TAN_90 - 1e-9], 1e-12));
        assert!(!poly.contains([0.6 + 1e-6, 0.0], 1e-9));
    }

    #[test]
    fn rated_operating_point_is_a_polygon_vertex() {
        for poly_spec in [EvChargerSpec::<f64>::ac(11.0), EvChargerSpec::dc(600.0)] {
            let poly = charger_polygon(&poly_spec).unwrap();
            let op = poly_spec.rated_operating_point();
            assert!(
                poly.cells()
                    .iter()
                    .flatten()
                    .any(|v| (v[0] - op[0]).abs() < 1e-15 && (v[1] - op[1]).abs() < 1e-15),
                "{poly_spec:?}"
            );
            assert!(poly.contains(op, 1e-12));
        }
        let op = EvChargerSpec::<f64>::dc(600.0).rated_operating_point();
        assert!((op[0] - 0.5994).abs() < 1e-15);
        assert!((op[1] - 0.02682610668732961).abs() < 1e-16);
    }

    #[test]
    fn charger_rejects_nonsense_specs() {
        assert_eq!(
            ev_ac_polygon(&EvChargerSpec::ac(0.0)),
            Err(FlexError::BadRating)
        );
        assert_eq!(
            ev_dc_polygon(&EvChargerSpec::dc(-5.0)),
            Err(FlexError::BadRating)
        );
        assert_eq!(
            ev_ac_polygon(&EvChargerSpec::dc(600.0)),
            Err(FlexError::WrongKind { expected: EvKind::Ac })
        );
        let mut bad = EvChargerSpec::ac(11.0);
        bad.p_n_ratio = 0.0;
        assert_eq!(ev_ac_polygon(&bad), Err(FlexError::BadRatio));
    }

    #[test]
    fn box_polygon_basics() {
        let b = box_polygon::<f64>(0.0, 0.5, -0.1, 0.1).unwrap();
        assert_eq!(b.cells().len(), 1);
        assert_eq!(b.cells()[0].len(), 4);
        assert!((crate::geometry::signed_area(&b.cells()[0]) - 0.1).abs() < 1e-15);

        let point = box_polygon(0.2, 0.2, 0.0, 0.0).unwrap();
        assert_eq!(point.cells()[0], vec![[0.2, 0.0]]);
        assert!(point.contains([0.2, 0.0], 0.0));
        assert!(!point.contains([0.2 + 1e-6, 0.0], 1e-9));

        let pv = box_polygon(-0.3, 0.0, -0.1, 0.1).unwrap();
        assert!(pv.cells()[0].iter().all(|v| v[0] <= 0.0));

        assert_eq!(box_polygon(1.0, 0.0, 0.0, 1.0), Err(FlexError::InvertedBounds));
    }

    #[test]
    fn containment_examples() {
        let b = box_polygon(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(b.contains([0.5, 0.5], 0.0));
        assert!(b.contains([1.0 + 1e-9, 0.5], 1e-6));
        assert!(!b.contains([1.0 + 1e-3, 0.5], 1e-6));
    }

    #[test]
    fn projection_examples_and_tie_break() {
        let b = box_polygon(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(b.project([0.5, 0.5]), [0.5, 0.5]);
        assert_eq!(b.project([2.0, 0.5]), [1.0, 0.5]);

        let two = PqPolygon::new(vec![vec![[0.0, 0.0]], vec![[2.0, 0.0]]]).unwrap();
        assert_eq!(two.project([1.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn minkowski_sum_examples() {
        let unit = || box_polygon(0.0, 1.0, 0.0, 1.0).unwrap();
        let sum = minkowski_sum(&[unit(), unit()]).unwrap();
        let expect = box_polygon(0.0, 2.0, 0.0, 2.0).unwrap();
        for v in &expect.cells()[0] {
            assert!(sum.contains(*v, 1e-12));
        }
        assert_eq!(sum.hull().len(), 4);
        assert!(!sum.contains([2.0 + 1e-6, 1.0], 1e-9));

        let single = minkowski_sum(&[unit()]).unwrap();
        assert_eq!(single.hull(), unit().hull());

        let h = box_polygon(0.0, 1.0, 0.0, 0.0).unwrap();
        let v = box_polygon(0.0, 0.0, 0.0, 1.0).unwrap();
        let sum = minkowski_sum(&[h, v]).unwrap();
        for corner in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            assert!(sum.contains(corner, 1e-12));
        }

        assert_eq!(minkowski_sum::<f64>(&[]), Err(FlexError::Empty));
    }

    #[test]
    fn samples_satisfy_the_analytic_rules() {
        let specs = [
            EvChargerSpec::ac(11.0),
            EvChargerSpec::ac(20.0),
            EvChargerSpec::dc(600.0),
            EvChargerSpec {
                capability_shape: CapabilityShape::Square,
                ..EvChargerSpec::dc(600.0)
            },
            EvChargerSpec {
                low_band_q_policy: LowBandPolicy::FullCircle,
                ..EvChargerSpec::ac(22.0)
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in specs {
            let poly = charger_polygon(&spec).unwrap();
            for _ in 0..10_000 {
                let [p, q] = poly.sample(&mut rng);
                assert!(analytic_ok(&spec, p, q, 1e-9), "{spec:?} ({p}, {q})");
            }
        }
    }

    #[test]
    fn projection_is_idempotent_and_lands_inside() {
        let polys = [
            charger_polygon(&EvChargerSpec::ac(11.0)).unwrap(),
            charger_polygon(&EvChargerSpec::dc(600.0)).unwrap(),
            box_polygon(-0.3, 0.0, -0.1, 0.1).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for poly in &polys {
            let (lo, hi) = poly.bbox();
            let w = hi[0] - lo[0];
            for _ in 0..2_000 {
                let p = [
                    rng.gen_range(lo[0] - w..hi[0] + w),
                    rng.gen_range(lo[1] - w..hi[1] + w),
                ];
                let once = poly.project(p);
                let twice = poly.project(once);
                assert!(crate::geometry::dist2(once, twice) < 1e-24);
                assert!(poly.contains(once, 1e-9));
            }
        }
    }

    #[test]
    fn charger_regions_are_symmetric_in_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for spec in [EvChargerSpec::ac(11.0), EvChargerSpec::ac(20.0), EvChargerSpec::dc(600.0)] {
            let poly = charger_polygon(&spec).unwrap();
            for _ in 0..2_000 {
                let [p, q] = poly.sample(&mut rng);
                assert!(poly.contains([p, -q], 1e-9), "{spec:?} ({p}, {q})");
            }
        }
    }

    #[test]
    fn every_vertex_respects_the_rating() {
        for spec in [
            EvChargerSpec::<f64>::ac(11.0),
            EvChargerSpec::ac(20.0),
            EvChargerSpec::dc(600.0),
            EvChargerSpec {
                capability_shape: CapabilityShape::Square,
                ..EvChargerSpec::dc(600.0)
            },
        ] {
            let poly = charger_polygon(&spec).unwrap();
            let s = spec.s_rated_kva / 1e3;
            for v in poly.cells().iter().flatten() {
                let norm = match spec.capability_shape {
                    CapabilityShape::Circle => (v[0] * v[0] + v[1] * v[1]).sqrt(),
                    CapabilityShape::Square => v[0].abs().max(v[1].abs()),
                };
                assert!(norm <= s + 1e-12, "{spec:?} vertex {v:?}");
            }
        }
    }

    #[test]
    fn bigger_rating_contains_smaller_at_fixed_rated_power() {
        // hold P_n fixed so the band edges and wedges coincide and only the
        // capability cap grows
        let cases = [
            (EvChargerSpec { p_n_ratio: 1.0, ..EvChargerSpec::ac(9.0) }, EvChargerSpec {
                p_n_ratio: 9.0 / 11.0,
                ..EvChargerSpec::ac(11.0)
            }),
            (EvChargerSpec { p_n_ratio: 1.0, ..EvChargerSpec::dc(400.0) }, EvChargerSpec {
                p_n_ratio: 400.0 / 600.0,
                ..EvChargerSpec::dc(600.0)
            }),
        ];
        for (small, big) in cases {
            assert_eq!(small.phi_limit(), big.phi_limit());
            let inner = charger_polygon(&small).unwrap();
            let outer = charger_polygon(&big).unwrap();
            for v in inner.cells().iter().flatten() {
                assert!(outer.contains(*v, 1e-9), "{small:?} vertex {v:?}");
            }
        }
    }

    #[test]
    fn scaling_models_a_fleet() {
        let poly = charger_polygon(&EvChargerSpec::<f64>::ac(11.0)).unwrap();
        let five = poly.scale(5.0);
        assert!(five.contains([0.05, 5.0 * 10.0 * TAN_95 * KVAR * 0.1], 1e-9));
        let (lo5, hi5) = five.bbox();
        let (lo, hi) = poly.bbox();
        assert!((hi5[0] - 5.0 * hi[0]).abs() < 1e-15);
        assert!((lo5[0] - 5.0 * lo[0]).abs() < 1e-15);
    }

    #[test]
    fn fpu_construction_validates_the_operating_point() {
        let ok = Fpu::from_bounds(2, "ind", FpuKind::IndustrialLoad, 0.0, 5.0, 0.0, 1.5, [1.0, 0.3])
            .unwrap();
        ok.validate().unwrap();
        assert_eq!(
            Fpu::from_bounds(2, "bad", FpuKind::IndustrialLoad, 0.0, 5.0, 0.0, 1.5, [6.0, 0.3]),
            Err(FlexError::OperatingPointOutside)
        );

        let fleet = Fpu::from_charger(103, "ev", EvChargerSpec::<f64>::ac(11.0), 5, None).unwrap();
        assert!((fleet.operating_point[0] - 5.0 * 0.011 * 0.999).abs() < 1e-12);
        fleet.validate().unwrap();
        assert_eq!(fleet.kind, FpuKind::EvAc);
        assert_eq!(
            Fpu::from_charger(103, "none", EvChargerSpec::ac(11.0), 0, None),
            Err(FlexError::BadCount)
        );
    }

    #[test]
    fn non_convex_cells_are_rejected() {
        let dent = vec![vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 2.0],
            [1.0, 0.5],
            [0.0, 2.0],
        ]];
        assert_eq!(PqPolygon::new(dent), Err(FlexError::NotConvex(0)));
        assert_eq!(PqPolygon::<f64>::new(vec![]), Err(FlexError::Empty));
    }
}
