//! M-step: block connectivity by projected gradient ascent, proportions in
//! closed form.

use super::ascent::projected_ascent;
use super::objective::{BlockObjective, NonEdgeForm};
use super::FitConfig;
use crate::graph::Graph;
use crate::model::{Matrix, ModelParams, VariationalState, B_FLOOR};

/// Updated block matrix. Each symmetric entry `b_kl = b_lk` is optimized
/// separately on `[B_FLOOR, 1 - B_FLOOR]` with at most `cfg.inner_iters`
/// steps; the objective is separable across entries.
pub fn m_step_b(g: &Graph, state: &VariationalState, params: &ModelParams, cfg: &FitConfig) -> Matrix {
    m_step_b_with_form(g, state, params, cfg, cfg.nonedge_form())
}

pub(crate) fn m_step_b_with_form(
    g: &Graph,
    state: &VariationalState,
    params: &ModelParams,
    cfg: &FitConfig,
    form: NonEdgeForm,
) -> Matrix {
    let k = params.k;
    let mut b = params.b.clone();
    for r in 0..k {
        for c in r..k {
            let objective = BlockObjective::new(g, state, r, c, form);
            let updated = projected_ascent(
                params.block(r, c),
                (B_FLOOR, 1.0 - B_FLOOR),
                cfg.step_b,
                cfg.inner_iters,
                |v| objective.value(v),
                |v| objective.gradient(v),
            );
            b.set(r, c, updated);
            b.set(c, r, updated);
        }
    }
    b
}

/// Column means of the membership matrix.
pub fn m_step_pi(state: &VariationalState) -> Vec<f64> {
    let n = state.n_nodes();
    let mut pi = vec![0.0; state.k()];
    for i in 0..n {
        for (p, &x) in pi.iter_mut().zip(state.phi.row(i)) {
            *p += x;
        }
    }
    pi.iter_mut().for_each(|p| *p /= n as f64);
    pi
}
