//! Newton power flow in polar form with an analytic Jacobian, plus the
//! derived quantities the flexibility sweep needs: slack interchange, branch
//! flows, losses, and limit margins.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::per_unit::{BranchElement, NodalAdmittance, PerUnitGrid};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PfError {
    #[error("power flow did not converge")]
    NonConvergent,
    #[error("jacobian is singular at this operating point")]
    SingularJacobian,
    #[error("injection references unknown bus id {0}")]
    UnknownBus(usize),
    #[error("the slack bus cannot carry a specified injection")]
    SlackInjection,
    #[error("warm start voltage vector has the wrong length")]
    BadWarmStart,
}

/// Nodal powers in MW and Mvar, consumption-positive, dense over the per-unit
/// grid's bus order. The slack bus entry stays zero.
#[derive(Clone, Debug, PartialEq)]
pub struct InjectionSet<T> {
    p_mw: Vec<T>,
    q_mvar: Vec<T>,
    slack: usize,
}

impl<T: Scalar> InjectionSet<T> {
    pub fn zeros(pu: &PerUnitGrid<T>) -> Self {
        Self {
            p_mw: vec![T::zero(); pu.n_bus()],
            q_mvar: vec![T::zero(); pu.n_bus()],
            slack: pu.slack,
        }
    }

    pub fn set(
        &mut self,
        pu: &PerUnitGrid<T>,
        bus_id: usize,
        p_mw: T,
        q_mvar: T,
    ) -> Result<(), PfError> {
        let i = pu.bus_index(bus_id).ok_or(PfError::UnknownBus(bus_id))?;
        if i == self.slack {
            return Err(PfError::SlackInjection);
        }
        self.p_mw[i] = p_mw;
        self.q_mvar[i] = q_mvar;
        Ok(())
    }

    pub fn add(
        &mut self,
        pu: &PerUnitGrid<T>,
        bus_id: usize,
        p_mw: T,
        q_mvar: T,
    ) -> Result<(), PfError> {
        let i = pu.bus_index(bus_id).ok_or(PfError::UnknownBus(bus_id))?;
        if i == self.slack {
            return Err(PfError::SlackInjection);
        }
        self.p_mw[i] += p_mw;
        self.q_mvar[i] += q_mvar;
        Ok(())
    }

    /// Overwrite by pre-resolved bus index; the hot path for sweeps.
    #[inline]
    pub fn set_at(&mut self, index: usize, p_mw: T, q_mvar: T) {
        debug_assert!(index != self.slack);
        self.p_mw[index] = p_mw;
        self.q_mvar[index] = q_mvar;
    }

    #[inline]
    pub fn add_at(&mut self, index: usize, p_mw: T, q_mvar: T) {
        debug_assert!(index != self.slack);
        self.p_mw[index] += p_mw;
        self.q_mvar[index] += q_mvar;
    }

    pub fn p_mw(&self) -> &[T] {
        &self.p_mw
    }

    pub fn q_mvar(&self) -> &[T] {
        &self.q_mvar
    }

    pub fn total_consumption_mw(&self) -> T {
        self.p_mw.iter().copied().sum()
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions<T> {
    /// Largest allowed nodal power mismatch, pu.
    pub tol: T,
    pub max_iter: usize,
    /// Bus voltages of a previous solution to start from instead of flat start.
    pub warm_start: Option<Vec<Complex<T>>>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { tol: T::of(1e-8), max_iter: 50, warm_start: None }
    }
}

#[derive(Clone, Debug)]
pub struct PowerFlowSolution<T> {
    /// Complex bus voltages, pu.
    pub v: Vec<Complex<T>>,
    /// Current at the more loaded end of each line, A. Zero-filled when not converged.
    pub line_current_a: Vec<T>,
    /// Apparent power at the more loaded end of each transformer, MVA.
    pub trafo_loading_mva: Vec<T>,
    /// Net injection at the slack bus; positive means power flows down into the grid.
    pub slack_mw: T,
    pub slack_mvar: T,
    pub total_losses_mw: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Full Newton solve. Non-convergence is an ordinary result with
/// `converged == false`, so sweep layers can treat it as infeasible; only a
/// singular Jacobian or bad input is an error.
pub fn solve_power_flow<T: Scalar>(
    pu: &PerUnitGrid<T>,
    y: &NodalAdmittance<T>,
    inj: &InjectionSet<T>,
    options: &SolverOptions<T>,
) -> Result<PowerFlowSolution<T>, PfError> {
    let n = pu.n_bus();
    let s = pu.slack;
    let m = n - 1;
    let inv_sb = T::one() / pu.s_base;
    // generation-positive specified injections, pu
    let p_spec: Vec<T> = inj.p_mw.iter().map(|&p| -p * inv_sb).collect();
    let q_spec: Vec<T> = inj.q_mvar.iter().map(|&q| -q * inv_sb).collect();

    let mut th = vec![T::zero(); n];
    let mut vm = vec![T::one(); n];
    if let Some(ws) = &options.warm_start {
        if ws.len() != n {
            return Err(PfError::BadWarmStart);
        }
        for i in 0..n {
            th[i] = ws[i].im.atan2(ws[i].re);
            vm[i] = ws[i].norm();
        }
        th[s] = T::zero();
        vm[s] = T::one();
    }

    let unknown: Vec<usize> = (0..n).filter(|&i| i != s).collect();
    let dim = 2 * m;
    let mut vre = vec![T::zero(); n];
    let mut vim = vec![T::zero(); n];
    let mut p_calc = vec![T::zero(); n];
    let mut q_calc = vec![T::zero(); n];
    let mut jac = vec![T::zero(); dim * dim];
    let mut rhs = vec![T::zero(); dim];
    let mut iterations = 0;
    let mut converged = false;

    for it in 0..=options.max_iter {
        for i in 0..n {
            vre[i] = vm[i] * th[i].cos();
            vim[i] = vm[i] * th[i].sin();
        }
        for i in 0..n {
            let mut ire = T::zero();
            let mut iim = T::zero();
            for j in 0..n {
                let yij = y.at(i, j);
                ire += yij.re * vre[j] - yij.im * vim[j];
                iim += yij.re * vim[j] + yij.im * vre[j];
            }
            p_calc[i] = vre[i] * ire + vim[i] * iim;
            q_calc[i] = vim[i] * ire - vre[i] * iim;
        }
        let mut worst = T::zero();
        for (k, &i) in unknown.iter().enumerate() {
            let dp = p_spec[i] - p_calc[i];
            let dq = q_spec[i] - q_calc[i];
            rhs[k] = dp;
            rhs[m + k] = dq;
            worst = worst.max(dp.abs()).max(dq.abs());
        }
        iterations = it;
        if !worst.is_finite() {
            break;
        }
        if worst <= options.tol {
            converged = true;
            break;
        }
        if it == options.max_iter {
            break;
        }

        for (a, &i) in unknown.iter().enumerate() {
            for (b, &j) in unknown.iter().enumerate() {
                if i == j {
                    let yii = y.at(i, i);
                    jac[a * dim + b] = -q_calc[i] - yii.im * vm[i] * vm[i];
                    jac[a * dim + m + b] = p_calc[i] / vm[i] + yii.re * vm[i];
                    jac[(m + a) * dim + b] = p_calc[i] - yii.re * vm[i] * vm[i];
                    jac[(m + a) * dim + m + b] = q_calc[i] / vm[i] - yii.im * vm[i];
                } else {
                    let yij = y.at(i, j);
                    let c = vre[i] * vre[j] + vim[i] * vim[j];
                    let sg = vim[i] * vre[j] - vre[i] * vim[j];
                    let pb = yij.re * c + yij.im * sg;
                    let qb = yij.re * sg - yij.im * c;
                    jac[a * dim + b] = qb;
                    jac[a * dim + m + b] = pb / vm[j];
                    jac[(m + a) * dim + b] = -pb;
                    jac[(m + a) * dim + m + b] = qb / vm[j];
                }
            }
        }
        lu_solve(&mut jac, dim, &mut rhs)?;
        for (k, &i) in unknown.iter().enumerate() {
            th[i] += rhs[k];
            // keep magnitudes in a sane bracket so doomed iterates end as
            // non-convergence instead of numeric blowup
            vm[i] = (vm[i] + rhs[m + k]).max(T::of(1e-3)).min(T::of(10.0));
        }
    }

    let v: Vec<Complex<T>> = (0..n).map(|i| Complex::new(vre[i], vim[i])).collect();
    let n_lines = pu.line_i_base_a.len();
    let n_trafos = pu.trafo_s_rated_mva.len();
    if !converged {
        return Ok(PowerFlowSolution {
            v,
            line_current_a: vec![T::zero(); n_lines],
            trafo_loading_mva: vec![T::zero(); n_trafos],
            slack_mw: T::zero(),
            slack_mvar: T::zero(),
            total_losses_mw: T::zero(),
            iterations,
            converged: false,
        });
    }

    let mut line_current_a = vec![T::zero(); n_lines];
    let mut trafo_loading_mva = vec![T::zero(); n_trafos];
    let mut losses = T::zero();
    for br in &pu.branches {
        let vf = v[br.from];
        let vt = v[br.to];
        let i_f = br.y_series * (vf - vt) + br.y_shunt_from * vf;
        let i_t = br.y_series * (vt - vf) + br.y_shunt_to * vt;
        losses += (vf * i_f.conj()).re + (vt * i_t.conj()).re;
        match br.element {
            BranchElement::Line(k) => {
                line_current_a[k] = i_f.norm().max(i_t.norm()) * pu.line_i_base_a[k];
            }
            BranchElement::Transformer(k) => {
                let s_f = (vf * i_f.conj()).norm();
                let s_t = (vt * i_t.conj()).norm();
                trafo_loading_mva[k] = s_f.max(s_t) * pu.s_base;
            }
        }
    }
    let mut i_slack = Complex::new(T::zero(), T::zero());
    for j in 0..n {
        i_slack += y.at(s, j) * v[j];
    }
    let s_slack = v[s] * i_slack.conj();

    Ok(PowerFlowSolution {
        v,
        line_current_a,
        trafo_loading_mva,
        slack_mw: s_slack.re * pu.s_base,
        slack_mvar: s_slack.im * pu.s_base,
        total_losses_mw: losses * pu.s_base,
        iterations,
        converged: true,
    })
}

/// Dense LU with partial pivoting, eliminating the right-hand side in place.
fn lu_solve<T: Scalar>(a: &mut [T], n: usize, b: &mut [T]) -> Result<(), PfError> {
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for r in k + 1..n {
            let v = a[r * n + k].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > T::of(1e-12)) {
            return Err(PfError::SingularJacobian);
        }
        if p != k {
            for c in k..n {
                a.swap(p * n + c, k * n + c);
            }
            b.swap(p, k);
        }
        let inv = T::one() / a[k * n + k];
        for r in k + 1..n {
            let f = a[r * n + k] * inv;
            if f != T::zero() {
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
                b[r] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * b[c];
        }
        b[k] = acc / a[k * n + k];
    }
    Ok(())
}

/// Slack interchange (P_vert, Q_vert) in MW/Mvar; positive values mean power
/// flowing from the upstream level down into this grid.
pub fn vertical_interchange<T: Scalar>(sol: &PowerFlowSolution<T>) -> Result<(T, T), PfError> {
    if !sol.converged {
        return Err(PfError::NonConvergent);
    }
    Ok((sol.slack_mw, sol.slack_mvar))
}

pub fn total_losses<T: Scalar>(sol: &PowerFlowSolution<T>) -> Result<T, PfError> {
    if !sol.converged {
        return Err(PfError::NonConvergent);
    }
    Ok(sol.total_losses_mw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Undervoltage,
    Overvoltage,
    LineCurrent,
    TransformerLoading,
    /// A boundary point pinned by the dispatch polygons, not the grid; never
    /// produced by `evaluate_limits`.
    FpuLimit,
}

#[derive(Clone, Debug)]
pub struct OperatingLimits<T> {
    /// pu
    pub v_min: T,
    /// pu
    pub v_max: T,
    /// A, per line.
    pub line_i_limit_a: Vec<T>,
    /// MVA, per transformer.
    pub trafo_s_limit_mva: Vec<T>,
}

impl<T: Scalar> OperatingLimits<T> {
    pub fn from_grid(pu: &PerUnitGrid<T>, v_min: T, v_max: T) -> Self {
        assert!(T::zero() < v_min && v_min < v_max);
        Self {
            v_min,
            v_max,
            line_i_limit_a: pu.line_i_rated_a.clone(),
            trafo_s_limit_mva: pu.trafo_s_rated_mva.clone(),
        }
    }

    pub fn with_uniform_line_rating(mut self, i_rated_a: T) -> Self {
        for l in &mut self.line_i_limit_a {
            *l = i_rated_a;
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstMargin<T> {
    /// Bus, line, or transformer index depending on the category.
    pub element: usize,
    pub margin: T,
}

/// Relative margins per element and category. Margins are
/// (limit - value)/limit for upper limits and (value - limit)/limit for the
/// voltage floor, so feasible is exactly "all margins >= 0"; comparisons are
/// inclusive because flexibility-region boundary points sit on limits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintReport<T> {
    pub feasible: bool,
    /// Per bus.
    pub undervoltage: Vec<T>,
    /// Per bus.
    pub overvoltage: Vec<T>,
    /// Per line.
    pub line_current: Vec<T>,
    /// Per transformer.
    pub transformer_loading: Vec<T>,
}

impl<T: Scalar> ConstraintReport<T> {
    pub fn worst(&self, kind: ConstraintKind) -> Option<WorstMargin<T>> {
        let margins = match kind {
            ConstraintKind::Undervoltage => &self.undervoltage,
            ConstraintKind::Overvoltage => &self.overvoltage,
            ConstraintKind::LineCurrent => &self.line_current,
            ConstraintKind::TransformerLoading => &self.transformer_loading,
            ConstraintKind::FpuLimit => return None,
        };
        margins
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("margins are ordered"))
            .map(|(element, &margin)| WorstMargin { element, margin })
    }

    /// The grid category closest to (or deepest past) its limit.
    pub fn most_binding(&self) -> Option<(ConstraintKind, WorstMargin<T>)> {
        [
            ConstraintKind::Undervoltage,
            ConstraintKind::Overvoltage,
            ConstraintKind::LineCurrent,
            ConstraintKind::TransformerLoading,
        ]
        .into_iter()
        .filter_map(|k| self.worst(k).map(|w| (k, w)))
        .min_by(|a, b| a.1.margin.partial_cmp(&b.1.margin).expect("margins are ordered"))
    }
}

/// Margins for every bus, line, and transformer. A non-converged solution
/// comes back infeasible with empty margin lists.
pub fn evaluate_limits<T: Scalar>(
    sol: &PowerFlowSolution<T>,
    limits: &OperatingLimits<T>,
) -> ConstraintReport<T> {
    if !sol.converged {
        return ConstraintReport {
            feasible: false,
            undervoltage: vec![],
            overvoltage: vec![],
            line_current: vec![],
            transformer_loading: vec![],
        };
    }
    let undervoltage: Vec<T> =
        sol.v.iter().map(|v| (v.norm() - limits.v_min) / limits.v_min).collect();
    let overvoltage: Vec<T> =
        sol.v.iter().map(|v| (limits.v_max - v.norm()) / limits.v_max).collect();
    let line_current: Vec<T> = sol
        .line_current_a
        .iter()
        .zip(&limits.line_i_limit_a)
        .map(|(&i, &lim)| (lim - i) / lim)
        .collect();
    let transformer_loading: Vec<T> = sol
        .trafo_loading_mva
        .iter()
        .zip(&limits.trafo_s_limit_mva)
        .map(|(&s, &lim)| (lim - s) / lim)
        .collect();
    let feasible = undervoltage
        .iter()
        .chain(&overvoltage)
        .chain(&line_current)
        .chain(&transformer_loading)
        .all(|&margin| margin >= T::zero());
    ConstraintReport { feasible, undervoltage, overvoltage, line_current, transformer_loading }
}
