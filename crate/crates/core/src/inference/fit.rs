//! The EM loop, restarts and MAP prediction.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::estep::{delta_sweep, phi_sweep, NonEdgeSampler};
use super::mstep::{m_step_b_with_form, m_step_pi};
use super::objective::{elbo_from_tables, Tables};
use super::{FitConfig, FitError, FitResult};
use crate::graph::Graph;
use crate::model::{LabeledAssignment, Matrix, ModelParams, VariationalState};
use crate::rng::stream;

const STREAM_INIT: u64 = 101;
const STREAM_NONEDGE: u64 = 102;

/// Fits the model with `cfg.restarts` independent initializations and keeps
/// the restart with the highest final objective (ties go to the lower
/// restart index). Restarts run in parallel; the result does not depend on
/// the thread count.
pub fn fit(g: &Graph, cfg: &FitConfig) -> Result<FitResult, FitError> {
    cfg.validate(g.n_nodes())?;
    let runs: Vec<Result<FitResult, FitError>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| fit_restart(g, cfg, r))
        .collect();
    let mut best: Option<FitResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.final_elbo() > b.final_elbo()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `argmax_k phi_ik` per node, ties to the smallest `k`.
pub fn predict(state: &VariationalState) -> LabeledAssignment {
    let z = (0..state.n_nodes())
        .map(|i| {
            let row = state.phi.row(i);
            let mut best = 0;
            for (c, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    LabeledAssignment::new(z)
}

fn initial_state(g: &Graph, cfg: &FitConfig, restart: usize) -> (VariationalState, ModelParams) {
    let n = g.n_nodes();
    let k = cfg.k;
    let mut rng = stream(cfg.seed, &[STREAM_INIT, restart as u64]);
    let mut phi = Matrix::zeros(n, k);
    for i in 0..n {
        // Normalized unit exponentials are a Dirichlet(1, ..., 1) draw.
        let row = phi.row_mut(i);
        row.iter_mut().for_each(|x| *x = rng.sample::<f64, _>(Exp1));
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
    }
    let state = VariationalState {
        phi,
        delta_bar: vec![0.0; n],
    };
    let density = g.density();
    let mut b = Matrix::filled(k, k, 0.5 * density);
    (0..k).for_each(|c| b.set(c, c, 1.5 * density));
    let params = ModelParams::new(m_step_pi(&state), b, cfg.lambda);
    (state, params)
}

fn fit_restart(g: &Graph, cfg: &FitConfig, restart: usize) -> Result<FitResult, FitError> {
    let form = cfg.nonedge_form();
    let eps = cfg.epsilon_for(g.n_nodes());
    let (mut state, mut params) = initial_state(g, cfg, restart);
    let mut sampler = cfg.nonedge_sample.map(|per_node| NonEdgeSampler {
        rng: stream(cfg.seed, &[STREAM_NONEDGE, restart as u64]),
        per_node,
    });

    let mut previous = elbo_from_tables(g, &state, &params, &Tables::new(&state, &params, form));
    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 1..=cfg.max_iters {
        if !cfg.sbm_baseline {
            let mut tables = Tables::new(&state, &params, form);
            delta_sweep(g, &mut state, &params, cfg, &mut tables, sampler.as_mut());
        }
        let mut tables = Tables::new(&state, &params, form);
        phi_sweep(g, &mut state, &params, &mut tables, sampler.as_mut());
        params.b = m_step_b_with_form(g, &state, &params, cfg, form);
        params.pi = m_step_pi(&state);

        let current = elbo_from_tables(g, &state, &params, &Tables::new(&state, &params, form));
        if !current.is_finite() {
            return Err(FitError::NonFinite { iteration, restart });
        }
        trace.push(current);
        log::trace!("restart {restart} iteration {iteration}: elbo {current}");
        if (current - previous).abs() < eps {
            converged = true;
            break;
        }
        previous = current;
    }
    log::debug!(
        "restart {restart}: {} iterations, converged {converged}, elbo {}",
        trace.len(),
        trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(FitResult {
        params,
        z_star: predict(&state),
        state,
        iterations: trace.len(),
        elbo_trace: trace,
        converged,
        restart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{sample, GenSpec};
    use crate::inference::objective::{elbo, elbo_with_form};

    fn two_blocks(seed: u64) -> crate::generators::Sample {
        let b = Matrix::from_rows(&[vec![0.6, 0.05], vec![0.05, 0.6]]);
        sample(&GenSpec::sbm(vec![15, 15], b, seed)).unwrap()
    }

    #[test]
    fn predict_breaks_ties_low() {
        let state = VariationalState {
            phi: Matrix::from_rows(&[vec![0.2, 0.8], vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]]),
            delta_bar: vec![0.0; 4],
        };
        assert_eq!(predict(&state).z, vec![1, 0, 1, 0]);
    }

    #[test]
    fn rejects_too_many_clusters() {
        let g = Graph::empty(3);
        assert_eq!(
            fit(&g, &FitConfig::new(4)),
            Err(FitError::TooManyClusters { k: 4, n_nodes: 3 })
        );
    }

    #[test]
    fn traces_are_non_decreasing() {
        for seed in 0..4 {
            let s = two_blocks(seed);
            for cfg in [FitConfig::new(2), FitConfig::new(2).baseline()] {
                let mut cfg = cfg.with_seed(seed);
                cfg.restarts = 2;
                let result = fit(&s.graph, &cfg).unwrap();
                for w in result.elbo_trace.windows(2) {
                    assert!(w[1] >= w[0] - 1e-6, "seed {seed}: {} -> {}", w[0], w[1]);
                }
                assert!(result
                    .state
                    .delta_bar
                    .iter()
                    .all(|&d| (0.0..=crate::model::DELTA_CAP).contains(&d)));
                for i in 0..result.state.n_nodes() {
                    assert!((result.state.phi.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn final_trace_entry_is_the_returned_objective() {
        let s = two_blocks(1);
        let result = fit(&s.graph, &FitConfig::new(2).with_seed(3)).unwrap();
        assert_eq!(result.final_elbo(), elbo(&s.graph, &result.state, &result.params));
        assert_eq!(result.iterations, result.elbo_trace.len());
        assert_eq!(result.z_star, predict(&result.state));
    }

    #[test]
    fn recovers_well_separated_blocks() {
        let s = two_blocks(5);
        let result = fit(&s.graph, &FitConfig::new(2).with_seed(5)).unwrap();
        let z = &result.z_star.z;
        let agree = (0..30)
            .filter(|&i| (z[i] == z[0]) == (s.truth.z[i] == s.truth.z[0]))
            .count();
        assert_eq!(agree, 30);
        assert!(result.converged);
    }

    #[test]
    fn baseline_keeps_decays_at_zero() {
        let s = two_blocks(2);
        let result = fit(&s.graph, &FitConfig::new(2).baseline()).unwrap();
        assert!(result.state.delta_bar.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn exact_log_baseline_traces_exact_objective() {
        let s = two_blocks(4);
        let mut cfg = FitConfig::new(2).baseline();
        cfg.exact_nonedge_log = true;
        let result = fit(&s.graph, &cfg).unwrap();
        let exact = elbo_with_form(
            &s.graph,
            &result.state,
            &result.params,
            crate::inference::NonEdgeForm::ExactLog,
        );
        assert_eq!(result.final_elbo(), exact);
        for w in result.elbo_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-6);
        }
    }

    #[test]
    fn identical_across_thread_counts() {
        let s = two_blocks(6);
        let cfg = FitConfig::new(2).with_seed(11);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit(&s.graph, &cfg).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one, four);
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&four).unwrap()
        );
    }

    #[test]
    fn restarts_pick_the_best_objective() {
        let s = two_blocks(7);
        let mut cfg = FitConfig::new(2).with_seed(8);
        cfg.restarts = 4;
        let best = fit(&s.graph, &cfg).unwrap();
        for r in 0..4 {
            let single = fit_restart(&s.graph, &cfg, r).unwrap();
            assert!(single.final_elbo() <= best.final_elbo());
        }
    }

    #[test]
    fn subsampled_fit_runs_and_recovers() {
        let s = two_blocks(9);
        let mut cfg = FitConfig::new(2).with_seed(2);
        cfg.nonedge_sample = Some(10);
        let result = fit(&s.graph, &cfg).unwrap();
        assert!(result.final_elbo().is_finite());
        let again = fit(&s.graph, &cfg).unwrap();
        assert_eq!(result, again);
    }
}
