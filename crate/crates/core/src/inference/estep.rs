//! Variational E-step: decay point estimates, then memberships, each swept
//! over nodes in ascending index order using the latest values of all other
//! nodes.

use rand::Rng;

use super::ascent::projected_ascent;
use super::objective::{unlinked_sums, DeltaObjective, NeighborSums, NonEdgeForm, Tables};
use super::FitConfig;
use crate::graph::Graph;
use crate::model::{ModelParams, VariationalState, DELTA_CAP};
use crate::rng::StreamRng;

/// Estimates each node's unlinked-pair sums from a uniform sample of its
/// non-neighbors, scaled up to the full non-neighbor count.
#[derive(Debug)]
pub(crate) struct NonEdgeSampler {
    pub rng: StreamRng,
    pub per_node: usize,
}

impl NonEdgeSampler {
    fn unlinked(
        &mut self,
        g: &Graph,
        state: &VariationalState,
        tables: &Tables,
        nb: &NeighborSums,
        i: usize,
    ) -> Vec<f64> {
        let n = g.n_nodes();
        let available = n - 1 - g.degree(i);
        if available <= self.per_node {
            return unlinked_sums(state, tables, nb, i);
        }
        let k = tables.k;
        let mut sums = vec![0.0; k * k];
        let mut drawn = 0;
        while drawn < self.per_node {
            let j = self.rng.random_range(0..n);
            if j == i || g.has_edge(i, j) {
                continue;
            }
            drawn += 1;
            let phi_j = state.phi.row(j);
            for (kl, &v) in tables.decay_row(j).iter().enumerate() {
                sums[kl] += phi_j[kl % k] * v;
            }
        }
        let scale = available as f64 / self.per_node as f64;
        sums.iter_mut().for_each(|s| *s *= scale);
        sums
    }
}

fn unlinked_for(
    sampler: &mut Option<&mut NonEdgeSampler>,
    g: &Graph,
    state: &VariationalState,
    tables: &Tables,
    nb: &NeighborSums,
    i: usize,
) -> Vec<f64> {
    match sampler {
        Some(s) => s.unlinked(g, state, tables, nb, i),
        None => unlinked_sums(state, tables, nb, i),
    }
}

/// Updates every node's decay by projected gradient ascent on
/// `[0, DELTA_CAP]`, at most `cfg.inner_iters` steps per node. A no-op in
/// SBM-baseline mode.
pub fn e_step_delta(g: &Graph, state: &mut VariationalState, params: &ModelParams, cfg: &FitConfig) {
    if cfg.sbm_baseline {
        return;
    }
    let mut tables = Tables::new(state, params, NonEdgeForm::Taylor);
    delta_sweep(g, state, params, cfg, &mut tables, None);
}

pub(crate) fn delta_sweep(
    g: &Graph,
    state: &mut VariationalState,
    params: &ModelParams,
    cfg: &FitConfig,
    tables: &mut Tables,
    mut sampler: Option<&mut NonEdgeSampler>,
) {
    for i in 0..state.n_nodes() {
        let nb = NeighborSums::new(g, state, tables, i);
        let unlinked = unlinked_for(&mut sampler, g, state, tables, &nb, i);
        let phi_i = state.phi.row(i).to_vec();
        let local = DeltaObjective::new(&phi_i, tables, &nb, unlinked, params.lambda);
        let current = state.delta_bar[i];
        let updated = projected_ascent(
            current,
            (0.0, DELTA_CAP),
            cfg.step_delta,
            cfg.inner_iters,
            |d| local.value(d),
            |d| local.gradient(d),
        );
        if updated != current {
            state.delta_bar[i] = updated;
            tables.set_delta(i, &phi_i, updated);
        }
    }
}

/// Unnormalized log memberships of node `i`:
/// `ln pi_k + sum_{j~i} sum_l (1 + d_i + d_j) phi_jl ln b_kl
///  - sum_{j not~i} sum_l phi_jl b_kl^(1 + d_i + d_j)`.
pub fn membership_log_weights(g: &Graph, state: &VariationalState, params: &ModelParams, i: usize) -> Vec<f64> {
    let tables = Tables::new(state, params, NonEdgeForm::Taylor);
    let nb = NeighborSums::new(g, state, &tables, i);
    let unlinked = unlinked_sums(state, &tables, &nb, i);
    log_weights(state, params, &tables, &nb, &unlinked, i)
}

fn log_weights(
    state: &VariationalState,
    params: &ModelParams,
    tables: &Tables,
    nb: &NeighborSums,
    unlinked: &[f64],
    i: usize,
) -> Vec<f64> {
    let k = tables.k;
    let boost = 1.0 + state.delta_bar[i];
    let decay_i = tables.decay_row(i);
    (0..k)
        .map(|c| {
            let mut linked = 0.0;
            let mut penalty = 0.0;
            for l in 0..k {
                let kl = c * k + l;
                linked += tables.ln_b[kl] * (boost * nb.phi[l] + nb.delta_phi[l]);
                penalty += tables.coef[kl] * decay_i[kl] * unlinked[kl];
            }
            params.pi[c].ln() + linked - penalty
        })
        .collect()
}

/// Replaces every membership row by its closed-form coordinate maximizer.
pub fn e_step_phi(g: &Graph, state: &mut VariationalState, params: &ModelParams) {
    let mut tables = Tables::new(state, params, NonEdgeForm::Taylor);
    phi_sweep(g, state, params, &mut tables, None);
}

pub(crate) fn phi_sweep(
    g: &Graph,
    state: &mut VariationalState,
    params: &ModelParams,
    tables: &mut Tables,
    mut sampler: Option<&mut NonEdgeSampler>,
) {
    for i in 0..state.n_nodes() {
        let nb = NeighborSums::new(g, state, tables, i);
        let unlinked = unlinked_for(&mut sampler, g, state, tables, &nb, i);
        let weights = log_weights(state, params, tables, &nb, &unlinked, i);
        let updated = softmax(&weights);
        let old = state.phi.row(i).to_vec();
        tables.set_phi_row(i, &old, &updated);
        state.phi.row_mut(i).copy_from_slice(&updated);
    }
}

fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::objective::{elbo, elbo_with_form};
    use crate::model::{LabeledAssignment, Matrix};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn cfg() -> FitConfig {
        FitConfig::new(2)
    }

    fn assortative(k: usize, intra: f64, inter: f64) -> Matrix {
        let mut b = Matrix::filled(k, k, inter);
        (0..k).for_each(|c| b.set(c, c, intra));
        b
    }

    fn random_state(n: usize, k: usize, seed: u64) -> VariationalState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut phi = Matrix::zeros(n, k);
        for i in 0..n {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().enumerate().for_each(|(c, v)| phi.set(i, c, v / s));
        }
        VariationalState {
            phi,
            delta_bar: (0..n).map(|_| rng.random::<f64>()).collect(),
        }
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let kept: Vec<_> = pairs.into_iter().filter(|_| rng.random::<f64>() < p).collect();
        Graph::from_pairs(n, kept).unwrap().0
    }

    #[test]
    fn baseline_leaves_decays_at_zero() {
        let g = random_graph(10, 0.3, 1);
        let mut state = random_state(10, 2, 2);
        state.delta_bar = vec![0.0; 10];
        let params = ModelParams::new(vec![0.5, 0.5], assortative(2, 0.4, 0.1), 0.01);
        let mut config = cfg();
        config.sbm_baseline = true;
        e_step_delta(&g, &mut state, &params, &config);
        assert!(state.delta_bar.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn delta_sweep_never_lowers_objective() {
        for seed in 0..10 {
            let g = random_graph(15, 0.25, seed);
            let mut state = random_state(15, 3, seed + 50);
            let params = ModelParams::new(vec![0.2, 0.3, 0.5], assortative(3, 0.5, 0.08), 0.01);
            let before = elbo(&g, &state, &params);
            e_step_delta(&g, &mut state, &params, &cfg());
            let after = elbo(&g, &state, &params);
            assert!(after >= before - 1e-9, "seed {seed}: {before} -> {after}");
            assert!(state.delta_bar.iter().all(|&d| (0.0..=DELTA_CAP).contains(&d)));
        }
    }

    #[test]
    fn huge_lambda_drives_decays_to_zero() {
        let g = random_graph(12, 0.3, 3);
        let mut state = random_state(12, 2, 4);
        let mut params = ModelParams::new(vec![0.5, 0.5], assortative(2, 0.4, 0.1), 1e4);
        params.lambda = 1e4;
        let mut config = cfg();
        config.inner_iters = 50;
        e_step_delta(&g, &mut state, &params, &config);
        assert!(state.delta_bar.iter().all(|&d| d == 0.0), "{:?}", state.delta_bar);
    }

    #[test]
    fn symmetric_pair_stays_uniform() {
        let g = Graph::empty(2);
        let mut state = VariationalState {
            phi: Matrix::filled(2, 2, 0.5),
            delta_bar: vec![0.0; 2],
        };
        let params = ModelParams::new(vec![0.5, 0.5], Matrix::filled(2, 2, 0.3), 0.01);
        e_step_phi(&g, &mut state, &params);
        for i in 0..2 {
            assert_abs_diff_eq!(state.phi.get(i, 0), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn linked_to_one_hot_cluster_attracts() {
        // Node 0 is linked to every member of cluster 1.
        let g = Graph::from_pairs(5, [(0, 3), (0, 4)]).unwrap().0;
        let z = LabeledAssignment::new(vec![0, 0, 0, 1, 1]);
        let mut state = VariationalState::from_assignment(&z, 2, vec![0.0; 5]);
        state.phi.row_mut(0).copy_from_slice(&[0.5, 0.5]);
        let params = ModelParams::new(vec![0.5, 0.5], assortative(2, 0.8, 0.01), 0.01);
        e_step_phi(&g, &mut state, &params);
        assert!(state.phi.get(0, 1) > 0.99, "{:?}", state.phi.row(0));
    }

    #[test]
    fn phi_row_update_is_the_simplex_maximizer() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for seed in 0..5u64 {
            let n = 4 + seed as usize % 3;
            let k = 2 + seed as usize % 2;
            let g = random_graph(n, 0.4, seed + 10);
            let state = random_state(n, k, seed + 20);
            let pi: Vec<f64> = (0..k).map(|_| 1.0 / k as f64).collect();
            let mut b = assortative(k, 0.6, 0.1);
            b.set(0, k - 1, 0.2);
            b.set(k - 1, 0, 0.2);
            let params = ModelParams::new(pi, b, 0.01);
            let i = seed as usize % n;
            let mut best = state.clone();
            let weights = membership_log_weights(&g, &best, &params, i);
            best.phi.row_mut(i).copy_from_slice(&softmax(&weights));
            let best_value = elbo(&g, &best, &params);
            let mut trial = state.clone();
            for _ in 0..10_000 {
                // Uniform point on the simplex via normalized exponentials.
                let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().ln()).collect();
                let s: f64 = raw.iter().sum();
                let row: Vec<f64> = raw.iter().map(|x| x / s).collect();
                trial.phi.row_mut(i).copy_from_slice(&row);
                assert!(elbo(&g, &trial, &params) <= best_value + 1e-8);
            }
            // The sweep itself lands on the same maximizer for the first node.
            if i == 0 {
                let mut swept = state.clone();
                e_step_phi(&g, &mut swept, &params);
                for c in 0..k {
                    assert_abs_diff_eq!(swept.phi.get(0, c), best.phi.get(0, c), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn incremental_sweeps_match_fresh_recomputation() {
        for seed in 0..5 {
            let g = random_graph(16, 0.25, seed + 30);
            let start = random_state(16, 3, seed + 31);
            let params = ModelParams::new(vec![0.2, 0.5, 0.3], assortative(3, 0.4, 0.06), 0.01);

            let mut swept = start.clone();
            e_step_phi(&g, &mut swept, &params);
            let mut fresh = start.clone();
            for i in 0..16 {
                let row = softmax(&membership_log_weights(&g, &fresh, &params, i));
                fresh.phi.row_mut(i).copy_from_slice(&row);
            }
            for i in 0..16 {
                for c in 0..3 {
                    assert_abs_diff_eq!(swept.phi.get(i, c), fresh.phi.get(i, c), epsilon = 1e-10);
                }
            }

            let mut swept = start.clone();
            e_step_delta(&g, &mut swept, &params, &cfg());
            let mut fresh = start.clone();
            for i in 0..16 {
                let tables = Tables::new(&fresh, &params, NonEdgeForm::Taylor);
                let nb = NeighborSums::new(&g, &fresh, &tables, i);
                let unlinked = unlinked_sums(&fresh, &tables, &nb, i);
                let phi_i = fresh.phi.row(i).to_vec();
                let local = DeltaObjective::new(&phi_i, &tables, &nb, unlinked, params.lambda);
                fresh.delta_bar[i] = projected_ascent(
                    fresh.delta_bar[i],
                    (0.0, DELTA_CAP),
                    cfg().step_delta,
                    cfg().inner_iters,
                    |d| local.value(d),
                    |d| local.gradient(d),
                );
            }
            for i in 0..16 {
                assert_abs_diff_eq!(swept.delta_bar[i], fresh.delta_bar[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn phi_sweep_never_lowers_objective() {
        for seed in 0..10 {
            let g = random_graph(14, 0.3, seed);
            let mut state = random_state(14, 3, seed + 5);
            let params = ModelParams::new(vec![0.3, 0.3, 0.4], assortative(3, 0.45, 0.07), 0.01);
            let before = elbo(&g, &state, &params);
            e_step_phi(&g, &mut state, &params);
            let after = elbo(&g, &state, &params);
            assert!(after >= before - 1e-9, "seed {seed}");
            for i in 0..14 {
                assert_abs_diff_eq!(state.phi.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn linked_neighbor_weight_scales_with_decays() {
        // A single linked pair has no unlinked terms, so the log weights of
        // node 0 are exactly ln pi_k + (1 + d_0 + d_1) ln b_{k, z_1}.
        let g = Graph::from_pairs(2, [(0, 1)]).unwrap().0;
        let z = LabeledAssignment::new(vec![0, 1]);
        let params = ModelParams::new(vec![0.4, 0.6], assortative(2, 0.7, 0.05), 0.01);
        for &(d0, d1) in &[(0.0, 0.0), (0.0, 1.3), (0.4, 2.5)] {
            let state = VariationalState::from_assignment(&z, 2, vec![d0, d1]);
            let w = membership_log_weights(&g, &state, &params, 0);
            for c in 0..2 {
                let expected = params.pi[c].ln() + (1.0 + d0 + d1) * params.block(c, 1).ln();
                assert_abs_diff_eq!(w[c], expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn sampled_sums_are_unbiased_on_average() {
        let g = random_graph(40, 0.2, 9);
        let state = random_state(40, 2, 10);
        let params = ModelParams::new(vec![0.5, 0.5], assortative(2, 0.3, 0.05), 0.01);
        let tables = Tables::new(&state, &params, NonEdgeForm::Taylor);
        let nb = NeighborSums::new(&g, &state, &tables, 5);
        let exact = unlinked_sums(&state, &tables, &nb, 5);
        let mut sampler = NonEdgeSampler {
            rng: crate::rng::stream(1, &[]),
            per_node: 5,
        };
        let reps = 4000;
        let mut mean = [0.0; 4];
        for _ in 0..reps {
            for (m, v) in mean.iter_mut().zip(sampler.unlinked(&g, &state, &tables, &nb, 5)) {
                *m += v / reps as f64;
            }
        }
        for (m, e) in mean.iter().zip(&exact) {
            assert!((m - e).abs() < 0.05 * e.abs(), "{m} vs {e}");
        }
    }

    #[test]
    fn exact_form_elbo_is_unaffected_by_phi_form_choice() {
        // Sanity: the exact form differs from the Taylor form only in unlinked terms.
        let g = Graph::from_pairs(3, [(0, 1), (1, 2), (0, 2)]).unwrap().0;
        let state = random_state(3, 2, 1);
        let mut state0 = state.clone();
        state0.delta_bar = vec![0.0; 3];
        let params = ModelParams::new(vec![0.5, 0.5], assortative(2, 0.6, 0.2), 0.01);
        assert_abs_diff_eq!(
            elbo(&g, &state0, &params),
            elbo_with_form(&g, &state0, &params, NonEdgeForm::ExactLog),
            epsilon = 1e-12
        );
    }
}
