//! Per-unit normalization (system base + bus nominal voltages) and nodal
//! admittance assembly: pi-model lines, transformers as a series impedance
//! from v_sc/P_Cu with the magnetizing branch (i_oc/P_Fe) on the HV side.

use std::collections::HashMap;

use num_complex::Complex;

use crate::grid::{Grid, GridError};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchElement {
    Line(usize),
    Transformer(usize),
}

#[derive(Clone, Debug)]
pub struct PuBranch<T> {
    /// Bus indices into `bus_ids`, not bus ids.
    pub from: usize,
    pub to: usize,
    pub y_series: Complex<T>,
    pub y_shunt_from: Complex<T>,
    pub y_shunt_to: Complex<T>,
    pub element: BranchElement,
}

#[derive(Clone, Debug)]
pub struct PerUnitGrid<T> {
    /// MVA
    pub s_base: T,
    pub bus_ids: Vec<usize>,
    /// kV, per bus index.
    pub v_base_kv: Vec<T>,
    /// Index of the slack bus.
    pub slack: usize,
    pub branches: Vec<PuBranch<T>>,
    /// km, per line (parallel to `Grid.lines`).
    pub line_length_km: Vec<T>,
    /// A, per line: current that corresponds to 1.0 pu at that line's base.
    pub line_i_base_a: Vec<T>,
    /// A, per line.
    pub line_i_rated_a: Vec<T>,
    /// MVA, per transformer.
    pub trafo_s_rated_mva: Vec<T>,
    index_of_id: HashMap<usize, usize>,
}

impl<T: Scalar> PerUnitGrid<T> {
    pub fn n_bus(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.index_of_id.get(&id).copied()
    }
}

/// Power base used throughout the study runs, MVA.
pub const DEFAULT_S_BASE_MVA: f64 = 25.0;

/// Converts a grid to per-unit on `s_base` and the bus nominal voltages.
pub fn to_per_unit<T: Scalar>(grid: &Grid<T>, s_base: T) -> Result<PerUnitGrid<T>, GridError> {
    if s_base <= T::zero() {
        return Err(GridError::BadBase);
    }
    grid.validate()?;

    let bus_ids: Vec<usize> = grid.buses.iter().map(|b| b.id).collect();
    let index_of_id: HashMap<usize, usize> =
        bus_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let v_base_kv: Vec<T> = grid.buses.iter().map(|b| b.nominal_voltage).collect();
    let slack = grid
        .buses
        .iter()
        .position(|b| b.kind == crate::grid::BusKind::Slack)
        .expect("validated grid has a slack");

    let omega = T::of(2.0) * T::PI() * grid.frequency;
    let mut branches = Vec::with_capacity(grid.lines.len() + grid.transformers.len());
    let mut line_i_base_a = Vec::with_capacity(grid.lines.len());
    let mut line_length_km = Vec::with_capacity(grid.lines.len());
    let mut line_i_rated_a = Vec::with_capacity(grid.lines.len());

    for (i, l) in grid.lines.iter().enumerate() {
        let f = index_of_id[&l.from_bus];
        let t = index_of_id[&l.to_bus];
        let v_base = v_base_kv[f];
        let z_base = v_base * v_base / s_base; // Ω
        let r = l.r_per_km * l.length / z_base;
        let x = omega * l.l_per_km * T::of(1e-3) * l.length / z_base;
        let z = Complex::new(r, x);
        let y_series = if z.norm_sqr() > T::zero() {
            Complex::new(T::one(), T::zero()) / z
        } else {
            Complex::new(T::infinity(), T::zero()) // zero-length; admittance_matrix rejects
        };
        // total line charging ωC'·len, split per end, in pu: b_S · Z_base
        let b_half = omega * l.c_per_km * T::of(1e-6) * l.length * z_base / T::of(2.0);
        let y_sh = Complex::new(T::zero(), b_half);
        branches.push(PuBranch {
            from: f,
            to: t,
            y_series,
            y_shunt_from: y_sh,
            y_shunt_to: y_sh,
            element: BranchElement::Line(i),
        });
        line_i_base_a.push(s_base * T::of(1e3) / (T::of(3.0).sqrt() * v_base));
        line_length_km.push(l.length);
        line_i_rated_a.push(l.i_rated);
    }

    let mut trafo_s_rated_mva = Vec::with_capacity(grid.transformers.len());
    for (i, tr) in grid.transformers.iter().enumerate() {
        let f = index_of_id[&tr.hv_bus];
        let t = index_of_id[&tr.lv_bus];
        // series impedance on the transformer's own (S_r, V_hv) base
        let z_own = tr.v_sc / T::of(100.0);
        let r_own = tr.p_cu * T::of(1e-3) / tr.s_rated; // MW / MVA
        let x_own = (z_own * z_own - r_own * r_own).max(T::zero()).sqrt();
        // rebase: impedance scales with s_base/S_r and the voltage-base ratio
        let v_ratio = tr.v_hv / v_base_kv[f];
        let k_z = s_base / tr.s_rated * v_ratio * v_ratio;
        let z = Complex::new(r_own * k_z, x_own * k_z);
        let y_series = Complex::new(T::one(), T::zero()) / z;
        // magnetizing branch on the HV side, from i_oc and P_Fe
        let y_mag_own = tr.i_oc / T::of(100.0);
        let g_own = tr.p_fe * T::of(1e-3) / tr.s_rated;
        let b_own = -(y_mag_own * y_mag_own - g_own * g_own).max(T::zero()).sqrt();
        let k_y = T::one() / k_z;
        let y_mag = Complex::new(g_own * k_y, b_own * k_y);
        branches.push(PuBranch {
            from: f,
            to: t,
            y_series,
            y_shunt_from: y_mag,
            y_shunt_to: Complex::new(T::zero(), T::zero()),
            element: BranchElement::Transformer(i),
        });
        trafo_s_rated_mva.push(tr.s_rated);
    }

    Ok(PerUnitGrid {
        s_base,
        bus_ids,
        v_base_kv,
        slack,
        branches,
        line_length_km,
        line_i_base_a,
        line_i_rated_a,
        trafo_s_rated_mva,
        index_of_id,
    })
}

#[derive(Clone, Debug)]
pub struct NodalAdmittance<T> {
    pub n: usize,
    /// Row-major dense n x n, per-unit.
    pub y: Vec<Complex<T>>,
}

impl<T: Scalar> NodalAdmittance<T> {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex<T> {
        self.y[i * self.n + j]
    }
}

/// Assembles the bus admittance matrix from per-unit branches.
pub fn admittance_matrix<T: Scalar>(pu: &PerUnitGrid<T>) -> Result<NodalAdmittance<T>, GridError> {
    for (i, &len) in pu.line_length_km.iter().enumerate() {
        if len <= T::zero() {
            return Err(GridError::ZeroLengthLine(i));
        }
    }
    let n = pu.n_bus();
    // connectivity over branch endpoints
    {
        let mut adj = vec![Vec::new(); n];
        for b in &pu.branches {
            adj[b.from].push(b.to);
            adj[b.to].push(b.from);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![pu.slack];
        seen[pu.slack] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(GridError::Disconnected(pu.bus_ids[i]));
        }
    }

    let zero = Complex::new(T::zero(), T::zero());
    let mut y = vec![zero; n * n];
    for b in &pu.branches {
        let (f, t) = (b.from, b.to);
        y[f * n + f] = y[f * n + f] + b.y_series + b.y_shunt_from;
        y[t * n + t] = y[t * n + t] + b.y_series + b.y_shunt_to;
        y[f * n + t] = y[f * n + t] - b.y_series;
        y[t * n + f] = y[t * n + f] - b.y_series;
    }
    Ok(NodalAdmittance { n, y })
}
