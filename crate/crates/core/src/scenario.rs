//! Scenario ladder for the benchmark study: flexible industrial and
//! residential base loads, optional DER, and EV fleets in three penetration
//! steps, plus JSON scenario files that round-trip losslessly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flexibility::{EvChargerSpec, FlexError, Fpu, FpuKind, FpuSource};
use crate::grid::{lv_bus_id, Grid, LV_HOST_NODES};
use crate::monetization::EpfCurve;
use crate::num::Scalar;
use crate::per_unit::PerUnitGrid;
use crate::power_flow::OperatingLimits;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario id `{0}`")]
    UnknownScenario(String),
    #[error("ev fleet: {0}")]
    BadFleetSpec(&'static str),
    #[error("scenario references bus {0} missing from the grid")]
    MissingBus(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("scenario file: unknown fpu kind `{0}`")]
    UnknownFpuKind(String),
}

/// Household statistics behind one LV node, used to size the AC fleet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvPenetrationSpec<T> {
    /// Coincidence factor applied to the per-household peak.
    pub simultaneity: T,
    pub peak_household_power_kw: T,
    pub max_node_load_mw: T,
    /// Fraction of households owning a vehicle that charges here.
    pub ev_share: T,
    pub ev_ac_rating_kva: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FleetSize<T> {
    pub households: usize,
    pub evs: usize,
    pub total_ac_rating_kva: T,
}

/// Households behind an LV node from its peak load and the coincidence
/// factor, rounded up to a round ten; vehicle count from the ownership
/// share, one AC charger each.
pub fn derive_ev_fleet<T: Scalar>(
    spec: &EvPenetrationSpec<T>,
) -> Result<FleetSize<T>, ScenarioError> {
    if !(spec.simultaneity > T::zero() && spec.simultaneity <= T::one()) {
        return Err(ScenarioError::BadFleetSpec("simultaneity must be in (0, 1]"));
    }
    if !(spec.ev_share >= T::zero() && spec.ev_share <= T::one()) {
        return Err(ScenarioError::BadFleetSpec("ev_share must be in [0, 1]"));
    }
    if !(spec.peak_household_power_kw > T::zero()) {
        return Err(ScenarioError::BadFleetSpec("peak_household_power_kw must be positive"));
    }
    if !(spec.max_node_load_mw >= T::zero()) || !(spec.ev_ac_rating_kva >= T::zero()) {
        return Err(ScenarioError::BadFleetSpec("loads and ratings must be non-negative"));
    }
    let raw = spec.max_node_load_mw * T::of(1e3)
        / (spec.simultaneity * spec.peak_household_power_kw);
    let households = ((raw / T::of(10.0)).ceil() * T::of(10.0)).to_f64_lossy() as usize;
    let evs = (T::from_usize(households).unwrap() * spec.ev_share)
        .round()
        .to_f64_lossy() as usize;
    let total = T::from_usize(evs).unwrap() * spec.ev_ac_rating_kva;
    Ok(FleetSize { households, evs, total_ac_rating_kva: total })
}

/// The statistics used by the built-in ladder: 50 households per LV node
/// (0.5 MW peak at coincidence 0.7, 15 kW each), ownership share of
/// 10% per case step, 11 kVA AC charging per vehicle.
pub fn penetration_case<T: Scalar>(case: u8) -> EvPenetrationSpec<T> {
    EvPenetrationSpec {
        simultaneity: T::of(0.7),
        peak_household_power_kw: T::of(15.0),
        max_node_load_mw: T::of(0.5),
        ev_share: T::of(0.1) * T::from_u8(case).unwrap(),
        ev_ac_rating_kva: T::of(11.0),
    }
}

/// Allowed voltage window in pu. Line and transformer limits live in
/// [`OperatingLimits`]; scenario files carry only this band plus an
/// optional uniform line rating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoltageBand<T> {
    pub v_min: T,
    pub v_max: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub id: String,
    pub fpus: Vec<Fpu<T>>,
    pub limits: VoltageBand<T>,
    /// Uniform line rating in amps replacing the grid's own, when set.
    pub line_rating_override: Option<T>,
    pub der_available: bool,
    pub ev_case: u8,
}

impl<T: Scalar> Scenario<T> {
    /// Full operating limits against a concrete grid, override applied.
    pub fn grid_limits(&self, pu: &PerUnitGrid<T>) -> OperatingLimits<T> {
        let lim = OperatingLimits::from_grid(pu, self.limits.v_min, self.limits.v_max);
        match self.line_rating_override {
            Some(a) => lim.with_uniform_line_rating(a),
            None => lim,
        }
    }

    /// Checks every operating point against its capability polygon.
    pub fn validate(&self) -> Result<(), FlexError> {
        for f in &self.fpus {
            f.validate()?;
        }
        Ok(())
    }
}

/// MV industrial loads as (bus, p_max MW, q_max Mvar); the operating point
/// sits at 20% of both ranges. Reactive draw is held at a tenth of the
/// active range: the plants run compensated, close to unity power factor.
const INDUSTRIAL: [(usize, f64, f64); 6] = [
    (2, 5.0, 0.5),
    (4, 2.0, 0.2),
    (7, 4.0, 0.4),
    (9, 3.0, 0.3),
    (12, 4.0, 0.4),
    (13, 5.0, 0.5),
];

/// Wind turbines as (bus, p_min MW, q_min Mvar, q_max Mvar, operating p MW).
/// Wide injection range, narrow absorption: the converters are sized for
/// voltage support, not for soaking up surplus vars.
const WIND: [(usize, f64, f64, f64, f64); 2] =
    [(7, -6.0, -2.0, 0.45, -1.5), (13, -5.0, -1.5, 0.35, -1.0)];

/// MV nodes with photovoltaics, each [-3, 0] MW, vars -0.9 to +0.3.
const PV_NODES: [usize; 5] = [3, 5, 8, 10, 14];

/// MV nodes gaining a 600 kVA DC station; case n takes the first n.
const EV_DC_NODES: [usize; 3] = [2, 4, 7];

fn parse_ladder_id(id: &str) -> Option<(bool, u8)> {
    let (digits, der) = match id.strip_suffix('a') {
        Some(rest) => (rest, true),
        None => (id, false),
    };
    match digits {
        "0" => Some((der, 0)),
        "1" => Some((der, 1)),
        "2" => Some((der, 2)),
        "3" => Some((der, 3)),
        _ => None,
    }
}

/// Builds a ladder scenario on the given grid. Ids are "0".."3" with an
/// optional "a" suffix; the digit picks the EV penetration case (0 = none),
/// the suffix adds the DER. Base loads are always present.
pub fn build_scenario<T: Scalar>(id: &str, grid: &Grid<T>) -> Result<Scenario<T>, ScenarioError> {
    let (der_available, ev_case) =
        parse_ladder_id(id).ok_or_else(|| ScenarioError::UnknownScenario(id.to_string()))?;

    let mut fpus = Vec::new();
    for (bus, p_max, q_max) in INDUSTRIAL {
        fpus.push(
            Fpu::from_bounds(
                bus,
                format!("ind_{bus}"),
                FpuKind::IndustrialLoad,
                T::zero(),
                T::of(p_max),
                T::zero(),
                T::of(q_max),
                [T::of(0.2 * p_max), T::of(0.2 * q_max)],
            )
            .expect("industrial table is valid"),
        );
    }
    for mv in LV_HOST_NODES {
        let bus = lv_bus_id(mv);
        fpus.push(
            Fpu::from_bounds(
                bus,
                format!("res_{bus}"),
                FpuKind::ResidentialLoad,
                T::zero(),
                T::of(0.5),
                T::of(-0.15),
                T::of(0.05),
                [T::of(0.18), T::of(0.02)],
            )
            .expect("residential table is valid"),
        );
    }
    if der_available {
        for (bus, p_min, q_min, q_max, op_p) in WIND {
            fpus.push(
                Fpu::from_bounds(
                    bus,
                    format!("wind_{bus}"),
                    FpuKind::Wind,
                    T::of(p_min),
                    T::zero(),
                    T::of(q_min),
                    T::of(q_max),
                    [T::of(op_p), T::zero()],
                )
                .expect("wind table is valid"),
            );
        }
        for bus in PV_NODES {
            fpus.push(
                Fpu::from_bounds(
                    bus,
                    format!("pv_{bus}"),
                    FpuKind::Pv,
                    T::of(-3.0),
                    T::zero(),
                    T::of(-0.9),
                    T::of(0.3),
                    [T::of(-0.4), T::zero()],
                )
                .expect("pv table is valid"),
            );
        }
    }
    if ev_case > 0 {
        let fleet = derive_ev_fleet(&penetration_case::<T>(ev_case))?;
        for mv in LV_HOST_NODES {
            let bus = lv_bus_id(mv);
            fpus.push(
                Fpu::from_charger(
                    bus,
                    format!("ev_ac_{bus}"),
                    EvChargerSpec::ac(T::of(11.0)),
                    fleet.evs,
                    None,
                )
                .expect("ac fleet is valid"),
            );
        }
        for &bus in EV_DC_NODES.iter().take(ev_case as usize) {
            fpus.push(
                Fpu::from_charger(
                    bus,
                    format!("ev_dc_{bus}"),
                    EvChargerSpec::dc(T::of(600.0)),
                    1,
                    None,
                )
                .expect("dc stations are valid"),
            );
        }
    }

    for f in &fpus {
        if grid.bus_index(f.bus).is_none() {
            return Err(ScenarioError::MissingBus(f.bus));
        }
    }

    Ok(Scenario {
        id: id.to_string(),
        fpus,
        limits: VoltageBand { v_min: T::of(0.9), v_max: T::of(1.1) },
        line_rating_override: None,
        der_available,
        ev_case,
    })
}

#[derive(Serialize, Deserialize)]
struct BoundsEntry<T> {
    p_min: T,
    p_max: T,
    q_min: T,
    q_max: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + Scalar"))]
struct FpuEntry<T> {
    label: String,
    bus: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsEntry<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    charger: Option<EvChargerSpec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    operating_point: [T; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<EpfCurve<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + Scalar"))]
struct ScenarioFile<T> {
    id: String,
    limits: VoltageBand<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    i_rated_override: Option<T>,
    fpus: Vec<FpuEntry<T>>,
}

fn kind_name(kind: FpuKind) -> &'static str {
    match kind {
        FpuKind::ResidentialLoad => "residential_load",
        FpuKind::IndustrialLoad => "industrial_load",
        FpuKind::Wind => "wind",
        FpuKind::Pv => "pv",
        FpuKind::EvAc => "ev_ac",
        FpuKind::EvDc => "ev_dc",
    }
}

fn kind_from_name(name: &str) -> Option<FpuKind> {
    Some(match name {
        "residential_load" => FpuKind::ResidentialLoad,
        "industrial_load" => FpuKind::IndustrialLoad,
        "wind" => FpuKind::Wind,
        "pv" => FpuKind::Pv,
        "ev_ac" => FpuKind::EvAc,
        "ev_dc" => FpuKind::EvDc,
        _ => return None,
    })
}

fn to_file_model<T: Scalar>(s: &Scenario<T>) -> ScenarioFile<T> {
    let fpus = s
        .fpus
        .iter()
        .map(|f| {
            let (bounds, charger, count) = match f.source {
                FpuSource::Bounds { p_min, p_max, q_min, q_max } => {
                    (Some(BoundsEntry { p_min, p_max, q_min, q_max }), None, None)
                }
                FpuSource::Charger { spec, count } => (None, Some(spec), Some(count)),
            };
            FpuEntry {
                label: f.label.clone(),
                bus: f.bus,
                kind: kind_name(f.kind).to_string(),
                bounds,
                charger,
                count,
                operating_point: f.operating_point,
                cost: f.cost,
            }
        })
        .collect();
    ScenarioFile {
        id: s.id.clone(),
        limits: s.limits,
        i_rated_override: s.line_rating_override,
        fpus,
    }
}

fn from_file_model<T: Scalar>(file: ScenarioFile<T>) -> Result<Scenario<T>, ScenarioError> {
    let mut fpus = Vec::with_capacity(file.fpus.len());
    for e in file.fpus {
        let kind =
            kind_from_name(&e.kind).ok_or_else(|| ScenarioError::UnknownFpuKind(e.kind.clone()))?;
        let built = match (e.bounds, e.charger) {
            (Some(b), None) => Fpu::from_bounds(
                e.bus,
                e.label.clone(),
                kind,
                b.p_min,
                b.p_max,
                b.q_min,
                b.q_max,
                e.operating_point,
            ),
            (None, Some(spec)) => Fpu::from_charger(
                e.bus,
                e.label.clone(),
                spec,
                e.count.unwrap_or(1),
                Some(e.operating_point),
            ),
            _ => {
                return Err(ScenarioError::Parse(format!(
                    "fpu `{}`: exactly one of `bounds` or `charger` required",
                    e.label
                )))
            }
        }
        .map_err(|err| ScenarioError::Parse(format!("fpu `{}`: {err}", e.label)))?;
        if built.kind != kind {
            return Err(ScenarioError::Parse(format!(
                "fpu `{}`: kind `{}` does not match the charger type",
                e.label, e.kind
            )));
        }
        fpus.push(match e.cost {
            Some(c) => built.with_cost(c),
            None => built,
        });
    }
    // Ladder flags are recovered from the id; custom ids carry none.
    let (der_available, ev_case) = parse_ladder_id(&file.id).unwrap_or((false, 0));
    Ok(Scenario {
        id: file.id,
        fpus,
        limits: file.limits,
        line_rating_override: file.i_rated_override,
        der_available,
        ev_case,
    })
}

pub fn save_scenario_file<T: Scalar + Serialize>(
    scenario: &Scenario<T>,
    path: impl AsRef<Path>,
) -> Result<(), ScenarioError> {
    let text = serde_json::to_string_pretty(&to_file_model(scenario))
        .map_err(|e| ScenarioError::Parse(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_scenario_file<T: Scalar + serde::de::DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<Scenario<T>, ScenarioError> {
    let text = fs::read_to_string(path)?;
    parse_scenario_str(&text)
}

/// Same as [`load_scenario_file`] but from an in-memory string.
pub fn parse_scenario_str<T: Scalar + serde::de::DeserializeOwned>(
    text: &str,
) -> Result<Scenario<T>, ScenarioError> {
    let file: ScenarioFile<T> =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    from_file_model(file)
}
