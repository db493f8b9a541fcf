//! Parameter and variational-state containers plus the elementary likelihood
//! kernels shared by generation and inference.
//!
//! The edge probability between nodes `i` and `j` is
//! `b[z_i][z_j]^(1 + delta_i + delta_j)`: the block connectivity raised to a
//! power that grows with both endpoints' degree-decay variables.

use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Lower clamp for block probabilities; the upper clamp is `1 - B_FLOOR`.
pub const B_FLOOR: f64 = 1e-8;

/// Upper bound for fitted degree-decay values.
pub const DELTA_CAP: f64 = 50.0;

/// Dense row-major matrix, serialized as an array of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// # Panics
    /// If the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(Self::from_rows(&rows))
    }
}

/// Model parameters: cluster proportions, block connectivity, decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Matrix,
    pub lambda: f64,
}

impl ModelParams {
    /// Builds parameters, clamping `b` into `[B_FLOOR, 1 - B_FLOOR]`.
    ///
    /// # Panics
    /// On shape mismatches, a non-positive `lambda`, or an asymmetric `b`.
    pub fn new(pi: Vec<f64>, b: Matrix, lambda: f64) -> Self {
        let k = pi.len();
        assert!(k >= 1, "at least one cluster required");
        assert_eq!((b.rows(), b.cols()), (k, k), "B must be K x K");
        assert!(lambda > 0.0, "lambda must be positive");
        let mut params = Self { k, pi, b, lambda };
        for r in 0..k {
            for c in 0..k {
                assert!(params.b.get(r, c) == params.b.get(c, r), "B must be symmetric");
                params.b.set(r, c, clamp_prob(params.b.get(r, c)));
            }
        }
        params
    }

    #[inline]
    pub fn block(&self, k: usize, l: usize) -> f64 {
        self.b.get(k, l)
    }
}

/// Per-node membership probabilities `phi` (N x K, rows on the simplex) and
/// point estimates of the degree-decay variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub phi: Matrix,
    pub delta_bar: Vec<f64>,
}

impl VariationalState {
    pub fn n_nodes(&self) -> usize {
        self.phi.rows()
    }

    pub fn k(&self) -> usize {
        self.phi.cols()
    }

    /// One-hot memberships for a hard assignment with the given decays.
    pub fn from_assignment(z: &LabeledAssignment, k: usize, delta_bar: Vec<f64>) -> Self {
        let mut phi = Matrix::zeros(z.len(), k);
        for (i, &c) in z.z.iter().enumerate() {
            phi.set(i, c, 1.0);
        }
        Self { phi, delta_bar }
    }
}

/// Hard cluster indices, one per node, in `[0, K)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledAssignment {
    pub z: Vec<usize>,
}

impl LabeledAssignment {
    pub fn new(z: Vec<usize>) -> Self {
        Self { z }
    }

    /// Relabels arbitrary integer labels densely in ascending label order.
    /// Returns the assignment and the original label of each cluster index.
    pub fn from_labels(labels: &[i64]) -> (Self, Vec<i64>) {
        let mut values: Vec<i64> = labels.to_vec();
        values.sort_unstable();
        values.dedup();
        let z = labels
            .iter()
            .map(|l| values.binary_search(l).expect("label present"))
            .collect();
        (Self { z }, values)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Number of cluster indices in use, `max + 1`.
    pub fn n_clusters(&self) -> usize {
        self.z.iter().max().map_or(0, |m| m + 1)
    }
}

#[inline]
pub fn clamp_prob(b: f64) -> f64 {
    b.clamp(B_FLOOR, 1.0 - B_FLOOR)
}

/// `b^(1 + di + dj)` with `b` clamped to `[B_FLOOR, 1 - B_FLOOR]`.
///
/// Evaluated as `b * exp((di + dj) ln b)` so that zero decays return `b`
/// unchanged.
#[inline]
pub fn edge_prob(b: f64, di: f64, dj: f64) -> f64 {
    let b = clamp_prob(b);
    b * ((di + dj) * b.ln()).exp()
}

/// Log of one pair's Bernoulli likelihood under the decayed block probability.
#[inline]
pub fn pair_log_lik(linked: bool, b: f64, di: f64, dj: f64) -> f64 {
    if linked {
        (1.0 + di + dj) * clamp_prob(b).ln()
    } else {
        (-edge_prob(b, di, dj)).ln_1p()
    }
}

/// Log prior of one node: exponential density of its decay plus the log
/// proportion of its cluster.
#[inline]
pub fn node_log_prior(delta: f64, cluster_log_pi: f64, lambda: f64) -> f64 {
    lambda.ln() - lambda * delta + cluster_log_pi
}

/// Complete-data log probability `log p(Y, z, delta | pi, lambda, B)` summed
/// over unordered pairs.
///
/// # Panics
/// When `z` or `delta` do not have one entry per node.
pub fn joint_log_prob(g: &Graph, z: &LabeledAssignment, delta: &[f64], params: &ModelParams) -> f64 {
    let n = g.n_nodes();
    assert_eq!(z.len(), n, "assignment length must equal node count");
    assert_eq!(delta.len(), n, "delta length must equal node count");
    let mut pairs = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in (i + 1)..n {
            let b = params.block(z.z[i], z.z[j]);
            row += pair_log_lik(g.has_edge(i, j), b, delta[i], delta[j]);
        }
        pairs += row;
    }
    let prior: f64 = (0..n)
        .map(|i| node_log_prior(delta[i], params.pi[z.z[i]].ln(), params.lambda))
        .sum();
    pairs + prior
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(b: f64, lambda: f64) -> ModelParams {
        ModelParams::new(vec![1.0], Matrix::from_rows(&[vec![b]]), lambda)
    }

    #[test]
    fn edge_prob_examples() {
        assert_eq!(edge_prob(0.5, 0.0, 0.0), 0.5);
        assert_abs_diff_eq!(edge_prob(0.81, 1.0, 0.0), 0.6561, epsilon = 1e-14);
        assert_abs_diff_eq!(edge_prob(0.9, 3.0, 2.0), 0.531441, epsilon = 1e-14);
    }

    #[test]
    fn edge_prob_clamps_boundaries() {
        assert_eq!(edge_prob(1.0, 0.0, 0.0), 1.0 - B_FLOOR);
        assert_eq!(edge_prob(0.0, 0.0, 0.0), B_FLOOR);
        assert!(edge_prob(0.9, DELTA_CAP, DELTA_CAP) > 0.0);
    }

    #[test]
    fn edge_prob_decreases_in_decay() {
        for &b in &[0.05, 0.5, 0.95] {
            let mut last = edge_prob(b, 0.0, 0.3);
            for step in 1..50 {
                let p = edge_prob(b, step as f64 * 0.2, 0.3);
                assert!(p < last, "b={b} step={step}");
                last = p;
            }
        }
    }

    #[test]
    fn joint_log_prob_two_nodes() {
        let params = single(0.5, 1.0);
        let z = LabeledAssignment::new(vec![0, 0]);
        let (linked, _) = Graph::from_pairs(2, [(0, 1)]).unwrap();
        assert_abs_diff_eq!(
            joint_log_prob(&linked, &z, &[0.0, 0.0], &params),
            -std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        let empty = Graph::empty(2);
        assert_abs_diff_eq!(
            joint_log_prob(&empty, &z, &[0.0, 0.0], &params),
            -std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn joint_log_prob_prior_terms() {
        // One isolated pair, b=0.2, delta=(1, 0.5): log(1 - 0.2^2.5) + priors.
        let params = ModelParams::new(
            vec![0.25, 0.75],
            Matrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.6]]),
            0.5,
        );
        let z = LabeledAssignment::new(vec![0, 0]);
        let expected = (1.0 - 0.2f64.powf(2.5)).ln() + 2.0 * 0.5f64.ln() - 0.5 * 1.5 + 2.0 * 0.25f64.ln();
        assert_abs_diff_eq!(
            joint_log_prob(&Graph::empty(2), &z, &[1.0, 0.5], &params),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn labels_relabel_densely() {
        let (z, values) = LabeledAssignment::from_labels(&[12, 7, 9, 7]);
        assert_eq!(z.z, vec![2, 0, 1, 0]);
        assert_eq!(values, vec![7, 9, 12]);
        assert_eq!(z.n_clusters(), 3);
    }

    #[test]
    fn params_round_trip_json() {
        let params = ModelParams::new(
            vec![0.4, 0.6],
            Matrix::from_rows(&[vec![0.3, 0.05], vec![0.05, 2.0]]),
            0.01,
        );
        assert_eq!(params.block(1, 1), 1.0 - B_FLOOR);
        let json = serde_json::to_string(&params).unwrap();
        assert!(json.contains("\"K\":2") && json.contains("\"B\":[[0.3,0.05],["));
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
        assert!(serde_json::from_str::<Matrix>("[[1.0],[1.0,2.0]]").is_err());
    }
}
