//! Expected payment curves for EV power flexibility, the reactive-power cost
//! factor rule, and occurrence-zone classification over normalized demand.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MonetizationError {
    #[error("normalized power must lie in [-1, 1]")]
    OutOfRange,
    #[error("cost factor must be non-negative")]
    NegativeCostFactor,
    #[error("zone breakpoints must rise strictly from -1 to 1")]
    BadBreakpoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpfKind {
    Linear,
    Quadratic,
    Cubic,
}

/// Payment curve over demanded active flexibility P normalized to [-1, 1]
/// (negative = feed-in). All curves pay c_p at P = 0, nothing at P = 1, and
/// 2 c_p at P = -1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpfCurve<T> {
    pub kind: EpfKind,
    /// Cost factor, currency per kWh.
    pub c_p: T,
}

impl<T: Scalar> EpfCurve<T> {
    pub fn new(kind: EpfKind, c_p: T) -> Result<Self, MonetizationError> {
        if c_p < T::zero() {
            return Err(MonetizationError::NegativeCostFactor);
        }
        Ok(Self { kind, c_p })
    }
}

pub fn epf_cost<T: Scalar>(curve: &EpfCurve<T>, p_norm: T) -> Result<T, MonetizationError> {
    if !(p_norm >= -T::one() && p_norm <= T::one()) {
        return Err(MonetizationError::OutOfRange);
    }
    let c = curve.c_p;
    Ok(match curve.kind {
        EpfKind::Linear => c * (T::one() - p_norm),
        EpfKind::Quadratic => {
            if p_norm < T::zero() {
                c * (p_norm * p_norm + T::one())
            } else {
                let d = p_norm - T::one();
                c * d * d
            }
        }
        EpfKind::Cubic => c * (T::one() - p_norm * p_norm * p_norm),
    })
}

/// c_q is one hundredth of c_p.
pub fn reactive_cost_factor<T: Scalar>(c_p: T) -> T {
    c_p / T::of(100.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl ZoneId {
    pub const ALL: [ZoneId; 7] =
        [ZoneId::I, ZoneId::II, ZoneId::III, ZoneId::IV, ZoneId::V, ZoneId::VI, ZoneId::VII];

    /// How often flexibility demand is expected to land in this zone.
    pub fn tier(self) -> LikelihoodTier {
        match self {
            ZoneId::I | ZoneId::V => LikelihoodTier::Low,
            ZoneId::II | ZoneId::IV | ZoneId::VI => LikelihoodTier::Mid,
            ZoneId::III | ZoneId::VII => LikelihoodTier::High,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodTier {
    Low,
    Mid,
    High,
}

/// One zone's slice of the normalized-P axis, closed on the left.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceZone<T> {
    pub zone: ZoneId,
    pub tier: LikelihoodTier,
    pub from: T,
    pub to: T,
}

/// Seven left-closed intervals partitioning [-1, 1]; the last is closed on
/// both ends. Breakpoint geometry is configurable, the tier mapping is not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig<T> {
    zones: [OccurrenceZone<T>; 7],
}

impl<T: Scalar> ZoneConfig<T> {
    /// Seven equal-width zones.
    pub fn equal_width() -> Self {
        let mut cuts = [T::zero(); 8];
        for (k, c) in cuts.iter_mut().enumerate() {
            *c = -T::one() + T::of(2.0) * T::from_usize(k).unwrap() / T::of(7.0);
        }
        cuts[7] = T::one();
        Self::new(cuts).expect("equal cuts are valid")
    }

    pub fn new(breakpoints: [T; 8]) -> Result<Self, MonetizationError> {
        if breakpoints[0] != -T::one() || breakpoints[7] != T::one() {
            return Err(MonetizationError::BadBreakpoints);
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MonetizationError::BadBreakpoints);
        }
        let mut zones = [OccurrenceZone {
            zone: ZoneId::I,
            tier: LikelihoodTier::Low,
            from: T::zero(),
            to: T::zero(),
        }; 7];
        for (k, id) in ZoneId::ALL.into_iter().enumerate() {
            zones[k] = OccurrenceZone {
                zone: id,
                tier: id.tier(),
                from: breakpoints[k],
                to: breakpoints[k + 1],
            };
        }
        Ok(Self { zones })
    }

    pub fn zones(&self) -> &[OccurrenceZone<T>; 7] {
        &self.zones
    }
}

impl<T: Scalar> Default for ZoneConfig<T> {
    fn default() -> Self {
        Self::equal_width()
    }
}

pub fn classify_zone<T: Scalar>(
    p_norm: T,
    config: &ZoneConfig<T>,
) -> Result<OccurrenceZone<T>, MonetizationError> {
    if !(p_norm >= -T::one() && p_norm <= T::one()) {
        return Err(MonetizationError::OutOfRange);
    }
    for z in &config.zones[..6] {
        if p_norm >= z.from && p_norm < z.to {
            return Ok(*z);
        }
    }
    Ok(config.zones[6])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curves(c_p: f64) -> [EpfCurve<f64>; 3] {
        [
            EpfCurve { kind: EpfKind::Linear, c_p },
            EpfCurve { kind: EpfKind::Quadratic, c_p },
            EpfCurve { kind: EpfKind::Cubic, c_p },
        ]
    }

    #[test]
    fn anchor_points_are_exact_for_every_curve() {
        for curve in curves(35.0) {
            assert_eq!(epf_cost(&curve, 0.0).unwrap(), 35.0);
            assert_eq!(epf_cost(&curve, 1.0).unwrap(), 0.0);
            assert_eq!(epf_cost(&curve, -1.0).unwrap(), 70.0);
        }
    }

    #[test]
    fn quadratic_branches_evaluate_per_definition() {
        let q = EpfCurve { kind: EpfKind::Quadratic, c_p: 1.0 };
        assert_eq!(epf_cost(&q, -0.5).unwrap(), 1.25);
        assert_eq!(epf_cost(&q, 0.5).unwrap(), 0.25);
        // both branch formulas meet at zero
        assert_eq!(1.0 * (0.0f64 * 0.0 + 1.0), 1.0 * (0.0f64 - 1.0) * (0.0 - 1.0));
    }

    #[test]
    fn cubic_endpoints() {
        let c = EpfCurve { kind: EpfKind::Cubic, c_p: 7.0 };
        assert_eq!(epf_cost(&c, 1.0).unwrap(), 0.0);
        assert_eq!(epf_cost(&c, -1.0).unwrap(), 14.0);
    }

    #[test]
    fn out_of_range_demand_is_rejected() {
        let c = EpfCurve { kind: EpfKind::Linear, c_p: 1.0 };
        assert_eq!(epf_cost(&c, 1.0 + 1e-9), Err(MonetizationError::OutOfRange));
        assert_eq!(epf_cost(&c, -1.0 - 1e-9), Err(MonetizationError::OutOfRange));
        assert_eq!(epf_cost(&c, f64::NAN), Err(MonetizationError::OutOfRange));
        assert_eq!(EpfCurve::new(EpfKind::Linear, -1.0), Err(MonetizationError::NegativeCostFactor));
    }

    #[test]
    fn curves_never_increase_over_the_range() {
        for curve in curves(3.5) {
            let mut last = f64::INFINITY;
            for k in 0..=2000 {
                let p = -1.0 + k as f64 * 1e-3;
                let c = epf_cost(&curve, p.min(1.0)).unwrap();
                assert!(c <= last + 1e-12, "{curve:?} rises at {p}");
                last = c;
            }
        }
    }

    #[test]
    fn reactive_factor_is_one_hundredth() {
        assert_eq!(reactive_cost_factor(35.0), 0.35);
        assert_eq!(reactive_cost_factor(0.0), 0.0);
        assert_eq!(reactive_cost_factor(50.0), 0.5);
    }

    #[test]
    fn default_zones_partition_evenly_with_fixed_tiers() {
        let cfg: ZoneConfig<f64> = ZoneConfig::default();
        let w = 2.0 / 7.0;
        for (k, z) in cfg.zones().iter().enumerate() {
            assert!((z.to - z.from - w).abs() < 1e-12);
            assert_eq!(z.zone, ZoneId::ALL[k]);
        }
        assert_eq!(classify_zone(-1.0, &cfg).unwrap().tier, LikelihoodTier::Low);
        let mid_iii = -1.0 + 2.5 * w;
        let z = classify_zone(mid_iii, &cfg).unwrap();
        assert_eq!(z.zone, ZoneId::III);
        assert_eq!(z.tier, LikelihoodTier::High);
    }

    #[test]
    fn breakpoints_belong_to_the_right_hand_zone() {
        let cfg: ZoneConfig<f64> = ZoneConfig::default();
        let cut = -1.0 + 2.0 / 7.0;
        assert_eq!(classify_zone(cut, &cfg).unwrap().zone, ZoneId::II);
        assert_eq!(classify_zone(1.0, &cfg).unwrap().zone, ZoneId::VII);
    }

    #[test]
    fn every_point_lands_in_exactly_one_zone() {
        let cfg: ZoneConfig<f64> = ZoneConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p: f64 = rng.gen_range(-1.0..=1.0);
            let z = classify_zone(p, &cfg).unwrap();
            let hits = cfg
                .zones()
                .iter()
                .filter(|c| p >= c.from && (p < c.to || (c.zone == ZoneId::VII && p <= c.to)))
                .count();
            assert_eq!(hits, 1);
            assert!(p >= z.from && p <= z.to);
        }
    }

    #[test]
    fn bad_breakpoints_are_rejected() {
        let mut cuts = [0.0f64; 8];
        for (k, c) in cuts.iter_mut().enumerate() {
            *c = -1.0 + k as f64 * 2.0 / 7.0;
        }
        cuts[7] = 1.0;
        let mut swapped = cuts;
        swapped.swap(2, 3);
        assert_eq!(ZoneConfig::new(swapped), Err(MonetizationError::BadBreakpoints));
        let mut short = cuts;
        short[7] = 0.9;
        assert_eq!(ZoneConfig::new(short), Err(MonetizationError::BadBreakpoints));
        assert!(ZoneConfig::new(cuts).is_ok());
    }
}
