//! The variational objective and its gradients.
//!
//! The non-edge term uses the first-order expansion `log(1 - x) ~ -x`, so
//! every unlinked pair contributes `-sum_kl phi_ik phi_jl b_kl^(1+d_i+d_j)`.
//! Writing `b^(1+d_i+d_j) = b * b^d_i * b^d_j` factorizes that sum over
//! pairs: per block `(k, l)` the all-pairs total is a product of per-node
//! column sums minus the diagonal, and the unlinked total is that minus the
//! edge contributions. Every quantity below is therefore `O((N + E) K^2)`
//! rather than `O(N^2 K^2)`.

use crate::graph::Graph;
use crate::model::{ModelParams, VariationalState};

/// How unlinked pairs enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonEdgeForm {
    /// `-b^(1 + d_i + d_j)`: the first-order expansion of `log(1 - p)`.
    #[default]
    Taylor,
    /// `log(1 - b)` exactly. Only meaningful with all decays fixed at zero.
    ExactLog,
}

/// `0 * log 0 := 0`.
#[inline]
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Per-block and per-node quantities derived from `(B, delta, phi)`.
///
/// `decay[i][kl] = b_kl^delta_i` and `col[kl] = sum_j phi_jl decay[j][kl]`.
/// Callers that change one node's `phi` or `delta` patch `decay` and `col`
/// through [`Tables::set_delta`] and [`Tables::set_phi_row`].
#[derive(Debug, Clone)]
pub(crate) struct Tables {
    pub k: usize,
    pub ln_b: Vec<f64>,
    /// Per-block weight of an unlinked pair before decay: `b` for the Taylor
    /// form, `-log(1 - b)` for the exact form.
    pub coef: Vec<f64>,
    pub decay: Vec<f64>,
    pub col: Vec<f64>,
}

impl Tables {
    pub fn new(state: &VariationalState, params: &ModelParams, form: NonEdgeForm) -> Self {
        let k = params.k;
        let kk = k * k;
        let b = params.b.as_slice();
        let ln_b: Vec<f64> = b.iter().map(|v| v.ln()).collect();
        let coef = match form {
            NonEdgeForm::Taylor => b.to_vec(),
            NonEdgeForm::ExactLog => b.iter().map(|v| -(-v).ln_1p()).collect(),
        };
        let n = state.n_nodes();
        let mut decay = vec![0.0; n * kk];
        for (i, row) in decay.chunks_mut(kk).enumerate() {
            fill_decay(row, &ln_b, state.delta_bar[i]);
        }
        let mut tables = Self {
            k,
            ln_b,
            coef,
            decay,
            col: vec![0.0; kk],
        };
        tables.recompute_columns(state);
        tables
    }

    pub fn recompute_columns(&mut self, state: &VariationalState) {
        let k = self.k;
        let kk = k * k;
        self.col.iter_mut().for_each(|c| *c = 0.0);
        for (i, decay) in self.decay.chunks(kk).enumerate() {
            let phi = state.phi.row(i);
            for kl in 0..kk {
                self.col[kl] += phi[kl % k] * decay[kl];
            }
        }
    }

    #[inline]
    pub fn decay_row(&self, i: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.decay[i * kk..(i + 1) * kk]
    }

    /// Replaces node `i`'s decay, patching the column sums.
    pub fn set_delta(&mut self, i: usize, phi_i: &[f64], delta: f64) {
        let k = self.k;
        let kk = k * k;
        let mut fresh = vec![0.0; kk];
        fill_decay(&mut fresh, &self.ln_b, delta);
        let row = &mut self.decay[i * kk..(i + 1) * kk];
        for kl in 0..kk {
            self.col[kl] += phi_i[kl % k] * (fresh[kl] - row[kl]);
        }
        row.copy_from_slice(&fresh);
    }

    /// Records a change of node `i`'s memberships, patching the column sums.
    pub fn set_phi_row(&mut self, i: usize, old: &[f64], new: &[f64]) {
        let k = self.k;
        let kk = k * k;
        for kl in 0..kk {
            let l = kl % k;
            self.col[kl] += (new[l] - old[l]) * self.decay[i * kk + kl];
        }
    }
}

#[inline]
fn fill_decay(row: &mut [f64], ln_b: &[f64], delta: f64) {
    for (slot, &lb) in row.iter_mut().zip(ln_b) {
        *slot = (delta * lb).exp();
    }
}

/// Sums over node `i`'s neighbors that the per-node updates need.
#[derive(Debug, Clone)]
pub(crate) struct NeighborSums {
    /// `sum_{j~i} phi_jl`
    pub phi: Vec<f64>,
    /// `sum_{j~i} delta_j phi_jl`
    pub delta_phi: Vec<f64>,
    /// `sum_{j~i} phi_jl b_kl^delta_j`, per block.
    pub decayed: Vec<f64>,
}

impl NeighborSums {
    pub fn new(g: &Graph, state: &VariationalState, tables: &Tables, i: usize) -> Self {
        let k = tables.k;
        let mut sums = Self {
            phi: vec![0.0; k],
            delta_phi: vec![0.0; k],
            decayed: vec![0.0; k * k],
        };
        for &j in g.neighbors(i) {
            let phi_j = state.phi.row(j);
            let delta_j = state.delta_bar[j];
            for l in 0..k {
                sums.phi[l] += phi_j[l];
                sums.delta_phi[l] += delta_j * phi_j[l];
            }
            let decay_j = tables.decay_row(j);
            for kl in 0..k * k {
                sums.decayed[kl] += phi_j[kl % k] * decay_j[kl];
            }
        }
        sums
    }
}

/// `sum_{j not linked to i, j != i} phi_jl b_kl^delta_j`, per block, from the
/// column sums.
pub(crate) fn unlinked_sums(state: &VariationalState, tables: &Tables, nb: &NeighborSums, i: usize) -> Vec<f64> {
    let k = tables.k;
    let phi_i = state.phi.row(i);
    let decay_i = tables.decay_row(i);
    (0..k * k)
        .map(|kl| tables.col[kl] - phi_i[kl % k] * decay_i[kl] - nb.decayed[kl])
        .collect()
}

/// The objective restricted to one node's decay, up to terms that do not
/// depend on it: `delta * C - sum_kl phi_ik coef_kl b_kl^delta U_kl - lambda * delta`.
#[derive(Debug, Clone)]
pub(crate) struct DeltaObjective<'a> {
    pub phi_i: &'a [f64],
    pub ln_b: &'a [f64],
    pub coef: &'a [f64],
    pub unlinked: Vec<f64>,
    /// `sum_{j~i} sum_kl phi_ik phi_jl ln b_kl`
    pub linked_slope: f64,
    pub lambda: f64,
}

impl<'a> DeltaObjective<'a> {
    pub fn new(phi_i: &'a [f64], tables: &'a Tables, nb: &NeighborSums, unlinked: Vec<f64>, lambda: f64) -> Self {
        let k = tables.k;
        let mut linked_slope = 0.0;
        for (kl, &lb) in tables.ln_b.iter().enumerate() {
            linked_slope += phi_i[kl / k] * nb.phi[kl % k] * lb;
        }
        Self {
            phi_i,
            ln_b: &tables.ln_b,
            coef: &tables.coef,
            unlinked,
            linked_slope,
            lambda,
        }
    }

    pub fn value(&self, delta: f64) -> f64 {
        let k = self.phi_i.len();
        let mut unlinked = 0.0;
        for kl in 0..k * k {
            unlinked += self.phi_i[kl / k] * self.coef[kl] * (delta * self.ln_b[kl]).exp() * self.unlinked[kl];
        }
        delta * self.linked_slope - unlinked - self.lambda * delta
    }

    pub fn gradient(&self, delta: f64) -> f64 {
        let k = self.phi_i.len();
        let mut unlinked = 0.0;
        for kl in 0..k * k {
            unlinked +=
                self.phi_i[kl / k] * self.coef[kl] * self.ln_b[kl] * (delta * self.ln_b[kl]).exp() * self.unlinked[kl];
        }
        self.linked_slope - unlinked - self.lambda
    }
}

/// Evidence lower bound with the first-order non-edge expansion.
pub fn elbo(g: &Graph, state: &VariationalState, params: &ModelParams) -> f64 {
    elbo_with_form(g, state, params, NonEdgeForm::Taylor)
}

pub fn elbo_with_form(g: &Graph, state: &VariationalState, params: &ModelParams, form: NonEdgeForm) -> f64 {
    let tables = Tables::new(state, params, form);
    elbo_from_tables(g, state, params, &tables)
}

pub(crate) fn elbo_from_tables(g: &Graph, state: &VariationalState, params: &ModelParams, tables: &Tables) -> f64 {
    let k = params.k;
    let kk = k * k;
    let n = state.n_nodes();

    let mut linked = 0.0;
    let mut unlinked_on_edges = 0.0;
    for &(i, j) in g.edges() {
        let (phi_i, phi_j) = (state.phi.row(i), state.phi.row(j));
        let (decay_i, decay_j) = (tables.decay_row(i), tables.decay_row(j));
        let mut log_term = 0.0;
        let mut pair_weight = 0.0;
        for kl in 0..kk {
            let w = phi_i[kl / k] * phi_j[kl % k];
            log_term += w * tables.ln_b[kl];
            pair_weight += w * tables.coef[kl] * decay_i[kl] * decay_j[kl];
        }
        linked += (1.0 + state.delta_bar[i] + state.delta_bar[j]) * log_term;
        unlinked_on_edges += pair_weight;
    }

    // sum over i != j of phi_ik phi_jl coef v_i v_j, per block, then halve:
    // B symmetric makes (i,j,k,l) and (j,i,l,k) identical terms.
    let mut diagonal = vec![0.0; kk];
    for i in 0..n {
        let phi_i = state.phi.row(i);
        let decay_i = tables.decay_row(i);
        for kl in 0..kk {
            diagonal[kl] += phi_i[kl / k] * phi_i[kl % k] * decay_i[kl] * decay_i[kl];
        }
    }
    let mut all_pairs = 0.0;
    for kl in 0..kk {
        let lk = (kl % k) * k + kl / k;
        all_pairs += tables.coef[kl] * (tables.col[lk] * tables.col[kl] - diagonal[kl]);
    }
    let unlinked = 0.5 * all_pairs - unlinked_on_edges;

    let mut membership = 0.0;
    for i in 0..n {
        for (c, &p) in state.phi.row(i).iter().enumerate() {
            membership += xlogy(p, params.pi[c]) - xlogy(p, p);
        }
    }
    let prior = n as f64 * params.lambda.ln() - params.lambda * state.delta_bar.iter().sum::<f64>();
    linked - unlinked + membership + prior
}

/// `(1 + d_i + d_j) sum_kl phi_ik phi_jl ln b_kl`: the objective's term for a
/// linked pair.
pub fn linked_pair_term(phi_i: &[f64], phi_j: &[f64], ln_b: &[f64], di: f64, dj: f64) -> f64 {
    let k = phi_i.len();
    let mut sum = 0.0;
    for kl in 0..k * k {
        sum += phi_i[kl / k] * phi_j[kl % k] * ln_b[kl];
    }
    (1.0 + di + dj) * sum
}

/// `sum_kl phi_ik phi_jl b_kl^(1 + d_i + d_j)`: the magnitude of the
/// objective's (negative) term for an unlinked pair.
pub fn unlinked_pair_term(phi_i: &[f64], phi_j: &[f64], b: &[f64], di: f64, dj: f64) -> f64 {
    let k = phi_i.len();
    let mut sum = 0.0;
    for kl in 0..k * k {
        sum += phi_i[kl / k] * phi_j[kl % k] * crate::model::edge_prob(b[kl], di, dj);
    }
    sum
}

/// Partial derivative of the objective with respect to node `i`'s decay.
pub fn grad_delta(g: &Graph, state: &VariationalState, params: &ModelParams, i: usize) -> f64 {
    let tables = Tables::new(state, params, NonEdgeForm::Taylor);
    let nb = NeighborSums::new(g, state, &tables, i);
    let unlinked = unlinked_sums(state, &tables, &nb, i);
    DeltaObjective::new(state.phi.row(i), &tables, &nb, unlinked, params.lambda).gradient(state.delta_bar[i])
}

/// Pair sums needed to evaluate the objective as a function of one
/// symmetric block entry `b_kl = b_lk` with everything else fixed.
#[derive(Debug, Clone)]
pub(crate) struct BlockObjective<'a> {
    state: &'a VariationalState,
    k: usize,
    l: usize,
    form: NonEdgeForm,
    /// `(i, j, w_ij)` for every edge with a nonzero block weight.
    edges: Vec<(usize, usize, f64)>,
    /// `sum_{linked} (1 + d_i + d_j) w_ij`
    linked_weight: f64,
}

impl<'a> BlockObjective<'a> {
    pub fn new(g: &Graph, state: &'a VariationalState, k: usize, l: usize, form: NonEdgeForm) -> Self {
        let mut linked_weight = 0.0;
        let mut edges = Vec::with_capacity(g.n_edges());
        for &(i, j) in g.edges() {
            let w = Self::pair_weight(state, k, l, i, j);
            if w != 0.0 {
                linked_weight += (1.0 + state.delta_bar[i] + state.delta_bar[j]) * w;
                edges.push((i, j, w));
            }
        }
        Self {
            state,
            k,
            l,
            form,
            edges,
            linked_weight,
        }
    }

    /// Weight of an unordered pair in block `{k, l}`.
    #[inline]
    fn pair_weight(state: &VariationalState, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let (pi, pj) = (state.phi.row(i), state.phi.row(j));
        if k == l {
            pi[k] * pj[k]
        } else {
            pi[k] * pj[l] + pi[l] * pj[k]
        }
    }

    /// `(sum over unlinked pairs of w_ij v_i v_j, same with (1 + d_i + d_j))`
    /// where `v_i = b^d_i`.
    fn unlinked_sums(&self, b: f64) -> (f64, f64) {
        let (k, l) = (self.k, self.l);
        let ln_b = b.ln();
        let state = self.state;
        let decay: Vec<f64> = match self.form {
            NonEdgeForm::Taylor => state.delta_bar.iter().map(|d| (d * ln_b).exp()).collect(),
            NonEdgeForm::ExactLog => vec![1.0; state.n_nodes()],
        };
        // Ordered sums over i != j of a_i c_j and of a_i c_j (1 + d_i + d_j),
        // with a_i = phi_ik v_i and c_j = phi_jl v_j.
        let (mut sa, mut sc, mut sad, mut scd) = (0.0, 0.0, 0.0, 0.0);
        let (mut diag, mut diag_d) = (0.0, 0.0);
        for (i, &v) in decay.iter().enumerate() {
            let d = state.delta_bar[i];
            let phi = state.phi.row(i);
            let (a, c) = (phi[k] * v, phi[l] * v);
            sa += a;
            sc += c;
            sad += a * d;
            scd += c * d;
            diag += a * c;
            diag_d += a * c * (1.0 + 2.0 * d);
        }
        let ordered = sa * sc - diag;
        let ordered_d = sa * sc + sad * sc + sa * scd - diag_d;
        let (mut on_edges, mut on_edges_d) = (0.0, 0.0);
        for &(i, j, w) in &self.edges {
            let w = w * decay[i] * decay[j];
            on_edges += w;
            on_edges_d += w * (1.0 + state.delta_bar[i] + state.delta_bar[j]);
        }
        let half = if k == l { 0.5 } else { 1.0 };
        (half * ordered - on_edges, half * ordered_d - on_edges_d)
    }

    pub fn value(&self, b: f64) -> f64 {
        let (unlinked, _) = self.unlinked_sums(b);
        let penalty = match self.form {
            NonEdgeForm::Taylor => b * unlinked,
            NonEdgeForm::ExactLog => -(-b).ln_1p() * unlinked,
        };
        self.linked_weight * b.ln() - penalty
    }

    pub fn gradient(&self, b: f64) -> f64 {
        let (unlinked, unlinked_d) = self.unlinked_sums(b);
        let penalty = match self.form {
            NonEdgeForm::Taylor => unlinked_d,
            NonEdgeForm::ExactLog => unlinked / (1.0 - b),
        };
        self.linked_weight / b - penalty
    }
}

/// Derivative of the objective with respect to the shared symmetric entry
/// `b_kl = b_lk`; for `k != l` this is the sum of both partials.
pub fn grad_b(g: &Graph, state: &VariationalState, params: &ModelParams, k: usize, l: usize) -> f64 {
    BlockObjective::new(g, state, k, l, NonEdgeForm::Taylor).gradient(params.block(k, l))
}
