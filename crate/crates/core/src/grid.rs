//! Network model: buses, lines, transformers, and the builder for the adapted
//! Cigré European MV benchmark grid (14 MV buses on two feeders, one HV/MV
//! transformer at the slack, LV buses behind MV/LV transformers at the
//! residential nodes).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Pq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoltageLevel {
    #[serde(rename = "HV")]
    Hv,
    #[serde(rename = "MV")]
    Mv,
    #[serde(rename = "LV")]
    Lv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus<T> {
    pub id: usize,
    pub name: String,
    /// Nominal line-to-line voltage, kV.
    pub nominal_voltage: T,
    pub kind: BusKind,
    pub level: VoltageLevel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub from_bus: usize,
    pub to_bus: usize,
    /// km
    pub length: T,
    /// Ω/km
    pub r_per_km: T,
    /// mH/km
    pub l_per_km: T,
    /// µF/km
    pub c_per_km: T,
    /// Thermal current rating, A.
    pub i_rated: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transformer<T> {
    pub hv_bus: usize,
    pub lv_bus: usize,
    /// kV
    pub v_hv: T,
    /// kV
    pub v_lv: T,
    /// MVA
    pub s_rated: T,
    /// Short-circuit voltage, %.
    pub v_sc: T,
    /// Copper losses, kW.
    pub p_cu: T,
    /// Open-circuit current, %.
    pub i_oc: T,
    /// Iron core losses, kW.
    pub p_fe: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub buses: Vec<Bus<T>>,
    pub lines: Vec<Line<T>>,
    pub transformers: Vec<Transformer<T>>,
    /// Hz
    pub frequency: T,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("bus id {0} appears more than once")]
    DuplicateBusId(usize),
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("branch endpoint references unknown bus id {0}")]
    UnknownBus(usize),
    #[error("line {0} has non-positive length")]
    ZeroLengthLine(usize),
    #[error("bus {0} has non-positive nominal voltage")]
    BadVoltage(usize),
    #[error("transformer {0} has invalid nameplate data")]
    BadTransformer(usize),
    #[error("grid graph is not connected (bus {0} unreachable from the slack)")]
    Disconnected(usize),
    #[error("s_base must be positive")]
    BadBase,
    #[error("line {0} endpoints coincide")]
    SelfLoop(usize),
}

impl<T: Scalar> Grid<T> {
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack(&self) -> Option<&Bus<T>> {
        self.buses.iter().find(|b| b.kind == BusKind::Slack)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for (i, b) in self.buses.iter().enumerate() {
            if self.buses[..i].iter().any(|o| o.id == b.id) {
                return Err(GridError::DuplicateBusId(b.id));
            }
            if b.nominal_voltage <= T::zero() {
                return Err(GridError::BadVoltage(b.id));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if slacks != 1 {
            return Err(GridError::SlackCount(slacks));
        }
        for (i, l) in self.lines.iter().enumerate() {
            for id in [l.from_bus, l.to_bus] {
                if self.bus_index(id).is_none() {
                    return Err(GridError::UnknownBus(id));
                }
            }
            if l.from_bus == l.to_bus {
                return Err(GridError::SelfLoop(i));
            }
            if l.length <= T::zero() {
                return Err(GridError::ZeroLengthLine(i));
            }
        }
        for (i, t) in self.transformers.iter().enumerate() {
            for id in [t.hv_bus, t.lv_bus] {
                if self.bus_index(id).is_none() {
                    return Err(GridError::UnknownBus(id));
                }
            }
            let pct_ok = t.v_sc > T::zero() && t.v_sc < T::of(100.0);
            if t.s_rated <= T::zero() || !pct_ok || t.p_cu < T::zero() || t.p_fe < T::zero() {
                return Err(GridError::BadTransformer(i));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<(), GridError> {
        let n = self.buses.len();
        if n == 0 {
            return Ok(());
        }
        let mut adj = vec![Vec::new(); n];
        let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
            let (ia, ib) = (self.bus_index(a).unwrap(), self.bus_index(b).unwrap());
            adj[ia].push(ib);
            adj[ib].push(ia);
        };
        for l in &self.lines {
            link(l.from_bus, l.to_bus, &mut adj);
        }
        for t in &self.transformers {
            link(t.hv_bus, t.lv_bus, &mut adj);
        }
        let start = self.buses.iter().position(|b| b.kind == BusKind::Slack).unwrap_or(0);
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(GridError::Disconnected(self.buses[i].id)),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchmarkConfig<T> {
    /// Uniform thermal rating for every line, A.
    pub i_rated: T,
    /// Hz
    pub frequency: T,
}

impl<T: Scalar> Default for BenchmarkConfig<T> {
    fn default() -> Self {
        Self { i_rated: T::of(220.0), frequency: T::of(50.0) }
    }
}

/// Feeder segments of the benchmark in radial operation (switch branches
/// open), as (from MV bus, to MV bus, length km). The 1-12 entry is the
/// busbar tie that puts feeder 2 behind the single HV/MV transformer.
const MV_SEGMENTS: [(usize, usize, f64); 13] = [
    (1, 2, 2.82),
    (2, 3, 4.42),
    (3, 4, 0.61),
    (4, 5, 0.56),
    (5, 6, 1.54),
    (7, 8, 1.67),
    (8, 9, 0.32),
    (9, 10, 0.77),
    (10, 11, 0.33),
    (3, 8, 1.30),
    (1, 12, 0.01),
    (12, 13, 4.89),
    (13, 14, 2.99),
];

/// MV nodes that carry a residential LV sub-network behind an MV/LV
/// transformer. The attached LV bus gets id `100 + mv_id`.
pub const LV_HOST_NODES: [usize; 8] = [3, 4, 5, 6, 8, 10, 11, 14];

pub fn lv_bus_id(mv_id: usize) -> usize {
    100 + mv_id
}

/// Builds the adapted benchmark grid: HV slack bus 0, MV buses 1-14,
/// uniform line parameters, one 25 MVA HV/MV transformer, and 2 MVA MV/LV
/// transformers at the residential nodes.
pub fn build_cigre_mv_grid<T: Scalar>(config: BenchmarkConfig<T>) -> Grid<T> {
    let mut buses = vec![Bus {
        id: 0,
        name: "HV".to_string(),
        nominal_voltage: T::of(110.0),
        kind: BusKind::Slack,
        level: VoltageLevel::Hv,
    }];
    for id in 1..=14 {
        buses.push(Bus {
            id,
            name: format!("MV{id}"),
            nominal_voltage: T::of(20.0),
            kind: BusKind::Pq,
            level: VoltageLevel::Mv,
        });
    }
    for mv in LV_HOST_NODES {
        buses.push(Bus {
            id: lv_bus_id(mv),
            name: format!("LV{mv}"),
            nominal_voltage: T::of(0.4),
            kind: BusKind::Pq,
            level: VoltageLevel::Lv,
        });
    }

    let lines = MV_SEGMENTS
        .iter()
        .map(|&(f, t, km)| Line {
            from_bus: f,
            to_bus: t,
            length: T::of(km),
            r_per_km: T::of(0.501),
            l_per_km: T::of(2.279),
            c_per_km: T::of(0.151),
            i_rated: config.i_rated,
        })
        .collect();

    let mut transformers = vec![Transformer {
        hv_bus: 0,
        lv_bus: 1,
        v_hv: T::of(110.0),
        v_lv: T::of(20.0),
        s_rated: T::of(25.0),
        v_sc: T::of(12.0),
        p_cu: T::of(25.0),
        i_oc: T::of(0.5),
        p_fe: T::of(0.0),
    }];
    for mv in LV_HOST_NODES {
        transformers.push(Transformer {
            hv_bus: mv,
            lv_bus: lv_bus_id(mv),
            v_hv: T::of(20.0),
            v_lv: T::of(0.4),
            s_rated: T::of(2.0),
            v_sc: T::of(8.0),
            p_cu: T::of(16.7),
            i_oc: T::of(0.2),
            p_fe: T::of(4.0),
        });
    }

    Grid { buses, lines, transformers, frequency: config.frequency }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_grid_is_valid_and_has_expected_shape() {
        let g: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        g.validate().unwrap();
        assert_eq!(g.buses.iter().filter(|b| b.level == VoltageLevel::Mv).count(), 14);
        assert_eq!(g.buses.iter().filter(|b| b.level == VoltageLevel::Lv).count(), 8);
        assert_eq!(g.transformers.len(), 9);
        assert_eq!(g.slack().unwrap().id, 0);
        assert_eq!(g.slack().unwrap().nominal_voltage, 110.0);
    }

    #[test]
    fn benchmark_uses_the_uniform_line_parameters() {
        let g: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        for l in &g.lines {
            assert_eq!(l.r_per_km, 0.501);
            assert_eq!(l.l_per_km, 2.279);
            assert_eq!(l.c_per_km, 0.151);
            assert_eq!(l.i_rated, 220.0);
        }
        let hv = &g.transformers[0];
        assert_eq!(
            (hv.s_rated, hv.v_sc, hv.p_cu, hv.i_oc, hv.p_fe),
            (25.0, 12.0, 25.0, 0.5, 0.0)
        );
        let lv = &g.transformers[1];
        assert_eq!(
            (lv.s_rated, lv.v_sc, lv.p_cu, lv.i_oc, lv.p_fe),
            (2.0, 8.0, 16.7, 0.2, 4.0)
        );
    }

    #[test]
    fn rating_override_changes_only_line_ratings() {
        let base: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        let alt: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig { i_rated: 680.0, ..Default::default() });
        for (a, b) in base.lines.iter().zip(&alt.lines) {
            assert_eq!(b.i_rated, 680.0);
            assert_eq!((a.from_bus, a.to_bus, a.length), (b.from_bus, b.to_bus, b.length));
            assert_eq!((a.r_per_km, a.l_per_km, a.c_per_km), (b.r_per_km, b.l_per_km, b.c_per_km));
        }
        assert_eq!(base.buses, alt.buses);
        assert_eq!(base.transformers, alt.transformers);
    }

    #[test]
    fn construction_is_deterministic() {
        let a: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        let b: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip_preserves_every_field() {
        let g: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        let s = serde_json::to_string_pretty(&g).unwrap();
        let back: Grid<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn validation_rejects_broken_grids() {
        let mut g: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        g.lines[0].length = 0.0;
        assert!(matches!(g.validate(), Err(GridError::ZeroLengthLine(0))));

        let mut g: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        g.lines.remove(10); // cut the feeder-2 tie
        assert!(matches!(g.validate(), Err(GridError::Disconnected(_))));

        let mut g: Grid<f64> = build_cigre_mv_grid(BenchmarkConfig::default());
        g.buses[3].kind = BusKind::Slack;
        assert!(matches!(g.validate(), Err(GridError::SlackCount(2))));
    }
}
