//! Slow reference implementations the test suites use to cross-check the fast
//! paths. Nothing here is called by production code.

use num_complex::Complex;
use rand::Rng;

use crate::grid::{Bus, BusKind, Grid, Line, VoltageLevel};
use crate::num::Scalar;
use crate::per_unit::{NodalAdmittance, PerUnitGrid};
use crate::power_flow::InjectionSet;

/// Fixed-point Gauss-Seidel power flow. Independent of the Newton path: no
/// Jacobian, no linear solver, just repeated nodal voltage updates. Returns
/// bus voltages once successive sweeps differ by less than `tol`, or None.
pub fn gauss_seidel_voltages<T: Scalar>(
    pu: &PerUnitGrid<T>,
    y: &NodalAdmittance<T>,
    inj: &InjectionSet<T>,
    tol: T,
    max_sweeps: usize,
) -> Option<Vec<Complex<T>>> {
    let n = pu.n_bus();
    let s = pu.slack;
    let mut v = vec![Complex::new(T::one(), T::zero()); n];
    let s_inj: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(-inj.p_mw()[i] / pu.s_base, -inj.q_mvar()[i] / pu.s_base))
        .collect();
    for _ in 0..max_sweeps {
        let mut worst = T::zero();
        for i in 0..n {
            if i == s {
                continue;
            }
            let mut acc = (s_inj[i] / v[i]).conj();
            for j in 0..n {
                if j != i {
                    acc -= y.at(i, j) * v[j];
                }
            }
            let next = acc / y.at(i, i);
            worst = worst.max((next - v[i]).norm());
            v[i] = next;
        }
        if worst < tol {
            return Some(v);
        }
        if !worst.is_finite() {
            return None;
        }
    }
    None
}

/// Random radial MV network: bus 0 is the slack, every further bus hangs off
/// a uniformly chosen earlier bus. Uniform 20 kV, no transformers.
pub fn random_radial_grid<T: Scalar>(rng: &mut impl Rng, n_buses: usize) -> Grid<T> {
    assert!(n_buses >= 2);
    let mut buses = Vec::with_capacity(n_buses);
    for id in 0..n_buses {
        buses.push(Bus {
            id,
            name: format!("b{id}"),
            nominal_voltage: T::of(20.0),
            kind: if id == 0 { BusKind::Slack } else { BusKind::Pq },
            level: VoltageLevel::Mv,
        });
    }
    let mut lines = Vec::with_capacity(n_buses - 1);
    for id in 1..n_buses {
        let parent = rng.gen_range(0..id);
        lines.push(Line {
            from_bus: parent,
            to_bus: id,
            length: T::of(rng.gen_range(0.3..4.0)),
            r_per_km: T::of(rng.gen_range(0.2..0.8)),
            l_per_km: T::of(rng.gen_range(1.0..3.0)),
            c_per_km: T::of(rng.gen_range(0.05..0.3)),
            i_rated: T::of(220.0),
        });
    }
    Grid { buses, lines, transformers: vec![], frequency: T::of(50.0) }
}
