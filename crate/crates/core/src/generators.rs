//! Seeded samplers for benchmark networks.
//!
//! * [`GenKind::Sbm`]: classic block model, pairs linked with `b[z_i][z_j]`.
//! * [`GenKind::PldSbm`]: each node draws a decay `delta_i ~ Exp(lambda)` and
//!   pairs are linked with `b[z_i][z_j]^(1 + delta_i + delta_j)`.
//! * [`GenKind::BaPlanted`]: every cluster grows by preferential attachment,
//!   then a fixed number of random node pairs per cluster pair are linked.
//!
//! All samplers are pure functions of the [`GenSpec`] including its seed.

use rand::seq::index;
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::model::{LabeledAssignment, Matrix};
use crate::rng::{derive_seed, stream, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid generator spec field `{field}`: {reason}")]
pub struct SpecError {
    pub field: &'static str,
    pub reason: String,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SpecError {
    SpecError {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Sbm,
    PldSbm,
    BaPlanted,
}

fn default_ba_m() -> usize {
    2
}

fn default_inter_pairs() -> usize {
    5
}

/// Generator configuration; the JSON form uses the same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub cluster_sizes: Vec<usize>,
    /// Block connectivity; required for `sbm` and `pld_sbm`.
    #[serde(rename = "B", alias = "b", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Edges added per new node in preferential attachment.
    #[serde(default = "default_ba_m")]
    pub ba_m: usize,
    /// Random inter-cluster node pairs linked per cluster pair.
    #[serde(default = "default_inter_pairs")]
    pub inter_pairs: usize,
    /// Draw memberships from `Multi(pi)` with `pi` proportional to
    /// `cluster_sizes` instead of assigning contiguous blocks.
    #[serde(default)]
    pub random_membership: bool,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub fn sbm(cluster_sizes: Vec<usize>, b: Matrix, seed: u64) -> Self {
        Self {
            kind: GenKind::Sbm,
            cluster_sizes,
            b: Some(b),
            lambda: None,
            ba_m: default_ba_m(),
            inter_pairs: default_inter_pairs(),
            random_membership: false,
            seed,
        }
    }

    pub fn pld_sbm(cluster_sizes: Vec<usize>, b: Matrix, lambda: f64, seed: u64) -> Self {
        Self {
            kind: GenKind::PldSbm,
            lambda: Some(lambda),
            ..Self::sbm(cluster_sizes, b, seed)
        }
    }

    pub fn ba_planted(cluster_sizes: Vec<usize>, ba_m: usize, inter_pairs: usize, seed: u64) -> Self {
        Self {
            kind: GenKind::BaPlanted,
            cluster_sizes,
            b: None,
            lambda: None,
            ba_m,
            inter_pairs,
            random_membership: false,
            seed,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }

    /// The same spec with the seed of replicate `r`.
    pub fn replicate(&self, r: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, &[0x5EED, r]),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.cluster_sizes.is_empty() {
            return Err(invalid("cluster_sizes", "at least one cluster is required"));
        }
        if let Some(pos) = self.cluster_sizes.iter().position(|&s| s == 0) {
            return Err(invalid("cluster_sizes", format!("cluster {pos} is empty")));
        }
        let k = self.cluster_sizes.len();
        match self.kind {
            GenKind::Sbm | GenKind::PldSbm => {
                let b = self.b.as_ref().ok_or_else(|| invalid("B", "required for this kind"))?;
                if (b.rows(), b.cols()) != (k, k) {
                    return Err(invalid("B", format!("expected {k}x{k}, got {}x{}", b.rows(), b.cols())));
                }
                for r in 0..k {
                    for c in 0..k {
                        let v = b.get(r, c);
                        if !(0.0..=1.0).contains(&v) {
                            return Err(invalid("B", format!("entry ({r},{c}) = {v} outside [0,1]")));
                        }
                        if v != b.get(c, r) {
                            return Err(invalid("B", format!("not symmetric at ({r},{c})")));
                        }
                    }
                }
                if self.kind == GenKind::PldSbm {
                    let lambda = self.lambda.ok_or_else(|| invalid("lambda", "required for pld_sbm"))?;
                    if !(lambda > 0.0 && lambda.is_finite()) {
                        return Err(invalid("lambda", format!("must be positive and finite, got {lambda}")));
                    }
                }
            }
            GenKind::BaPlanted => {
                if self.ba_m == 0 {
                    return Err(invalid("ba_m", "must be at least 1"));
                }
                if let Some(pos) = self.cluster_sizes.iter().position(|&s| s <= self.ba_m) {
                    return Err(invalid(
                        "cluster_sizes",
                        format!(
                            "cluster {pos} has {} nodes; preferential attachment needs more than ba_m = {}",
                            self.cluster_sizes[pos], self.ba_m
                        ),
                    ));
                }
                for a in 0..k {
                    for c in (a + 1)..k {
                        let available = self.cluster_sizes[a] * self.cluster_sizes[c];
                        if self.inter_pairs > available {
                            return Err(invalid(
                                "inter_pairs",
                                format!(
                                    "{} exceeds the {available} pairs between clusters {a} and {c}",
                                    self.inter_pairs
                                ),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A sampled network with its planted clusters and, for PLD-SBM, the latent
/// decay of each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub graph: Graph,
    pub truth: LabeledAssignment,
    pub delta: Option<Vec<f64>>,
}

const STREAM_MEMBERSHIP: u64 = 1;
const STREAM_DECAY: u64 = 2;
const STREAM_EDGES: u64 = 3;
const STREAM_BA_CLUSTER: u64 = 4;
const STREAM_BA_INTER: u64 = 5;

/// Dispatches on `spec.kind`.
pub fn sample(spec: &GenSpec) -> Result<Sample, SpecError> {
    match spec.kind {
        GenKind::Sbm => sample_sbm(spec),
        GenKind::PldSbm => sample_pld_sbm(spec),
        GenKind::BaPlanted => sample_ba_planted(spec),
    }
}

/// Samples `count` replicates in parallel; replicate `r` uses
/// `spec.replicate(r)`, so the output does not depend on the thread count.
pub fn sample_replicates(spec: &GenSpec, count: usize) -> Result<Vec<Sample>, SpecError> {
    spec.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|r| sample(&spec.replicate(r)))
        .collect()
}

fn memberships(spec: &GenSpec) -> LabeledAssignment {
    if spec.random_membership {
        let weights = WeightedIndex::new(&spec.cluster_sizes).expect("validated sizes");
        let mut rng = stream(spec.seed, &[STREAM_MEMBERSHIP]);
        LabeledAssignment::new((0..spec.n_nodes()).map(|_| weights.sample(&mut rng)).collect())
    } else {
        LabeledAssignment::new(
            spec.cluster_sizes
                .iter()
                .enumerate()
                .flat_map(|(c, &size)| std::iter::repeat_n(c, size))
                .collect(),
        )
    }
}

/// `b^(1 + extra)` without clamping, so that `b = 0` and `b = 1` stay exact.
#[inline]
fn decayed(b: f64, extra: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else if b >= 1.0 {
        1.0
    } else {
        b * (extra * b.ln()).exp()
    }
}

fn link_pairs(n: usize, seed: u64, prob: impl Fn(usize, usize) -> f64) -> Graph {
    let mut rng = stream(seed, &[STREAM_EDGES]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < prob(i, j) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_sorted_unique(n, edges)
}

pub fn sample_sbm(spec: &GenSpec) -> Result<Sample, SpecError> {
    expect_kind(spec, GenKind::Sbm)?;
    spec.validate()?;
    let b = spec.b.as_ref().expect("validated");
    let truth = memberships(spec);
    let graph = link_pairs(truth.len(), spec.seed, |i, j| b.get(truth.z[i], truth.z[j]));
    Ok(Sample {
        graph,
        truth,
        delta: None,
    })
}

pub fn sample_pld_sbm(spec: &GenSpec) -> Result<Sample, SpecError> {
    expect_kind(spec, GenKind::PldSbm)?;
    spec.validate()?;
    let b = spec.b.as_ref().expect("validated");
    let lambda = spec.lambda.expect("validated");
    let truth = memberships(spec);
    let exp = Exp::new(lambda).map_err(|e| invalid("lambda", e.to_string()))?;
    let mut rng = stream(spec.seed, &[STREAM_DECAY]);
    let delta: Vec<f64> = (0..truth.len()).map(|_| exp.sample(&mut rng)).collect();
    let graph = link_pairs(truth.len(), spec.seed, |i, j| {
        decayed(b.get(truth.z[i], truth.z[j]), delta[i] + delta[j])
    });
    Ok(Sample {
        graph,
        truth,
        delta: Some(delta),
    })
}

/// Preferential-attachment edges on `size` local nodes: `m + 1` fully
/// connected seed nodes, then each new node links to `m` distinct existing
/// nodes chosen with probability proportional to their degree.
fn grow_preferential(size: usize, m: usize, rng: &mut StreamRng) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(size * m);
    // One entry per edge endpoint; uniform draws from it are degree-weighted.
    let mut endpoints = Vec::with_capacity(2 * size * m);
    for i in 0..=m {
        for j in (i + 1)..=m {
            edges.push((i, j));
            endpoints.extend([i, j]);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for node in (m + 1)..size {
        targets.clear();
        while targets.len() < m {
            let candidate = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&candidate) {
                targets.push(candidate);
            }
        }
        for &t in &targets {
            edges.push((t, node));
            endpoints.extend([t, node]);
        }
    }
    edges
}

pub fn sample_ba_planted(spec: &GenSpec) -> Result<Sample, SpecError> {
    expect_kind(spec, GenKind::BaPlanted)?;
    spec.validate()?;
    let truth = memberships(spec);
    let sizes = &spec.cluster_sizes;
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect();

    let mut edges = Vec::new();
    for (c, &size) in sizes.iter().enumerate() {
        let mut rng = stream(spec.seed, &[STREAM_BA_CLUSTER, c as u64]);
        let base = offsets[c];
        edges.extend(
            grow_preferential(size, spec.ba_m, &mut rng)
                .into_iter()
                .map(|(a, b)| (base + a, base + b)),
        );
    }
    for a in 0..sizes.len() {
        for c in (a + 1)..sizes.len() {
            let mut rng = stream(spec.seed, &[STREAM_BA_INTER, a as u64, c as u64]);
            for flat in index::sample(&mut rng, sizes[a] * sizes[c], spec.inter_pairs) {
                edges.push((offsets[a] + flat / sizes[c], offsets[c] + flat % sizes[c]));
            }
        }
    }

    let (graph, _) = Graph::from_pairs(truth.len(), edges).expect("indices in range");
    if spec.random_membership {
        // Contiguous blocks are inherent to growing clusters independently.
        log::warn!("random_membership is ignored for ba_planted networks");
    }
    Ok(Sample {
        graph,
        truth,
        delta: None,
    })
}

fn expect_kind(spec: &GenSpec, kind: GenKind) -> Result<(), SpecError> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(invalid("kind", format!("expected {kind:?}, got {:?}", spec.kind)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_b(k: usize, intra: f64, inter: f64) -> Matrix {
        let mut b = Matrix::filled(k, k, inter);
        for c in 0..k {
            b.set(c, c, intra);
        }
        b
    }

    #[test]
    fn all_zero_b_gives_empty_graph() {
        let spec = GenSpec::sbm(vec![10, 10], Matrix::zeros(2, 2), 1);
        assert_eq!(sample_sbm(&spec).unwrap().graph.n_edges(), 0);
    }

    #[test]
    fn b_one_gives_complete_graph_for_any_lambda() {
        for &lambda in &[0.01, 1.0, 100.0] {
            let spec = GenSpec::pld_sbm(vec![6, 5], Matrix::filled(2, 2, 1.0), lambda, 3);
            let s = sample_pld_sbm(&spec).unwrap();
            assert_eq!(s.graph.n_edges(), 11 * 10 / 2);
        }
    }

    #[test]
    fn sbm_edge_count_concentrates() {
        // Binomial(19900, 0.5): mean 9950, sd = sqrt(19900 / 4) = 70.53.
        let spec = GenSpec::sbm(vec![200], Matrix::filled(1, 1, 0.5), 11);
        let edges = sample_sbm(&spec).unwrap().graph.n_edges() as f64;
        assert!((edges - 9950.0).abs() < 3.0 * 70.53, "{edges}");
    }

    #[test]
    fn huge_lambda_reduces_to_sbm_frequencies() {
        let spec = GenSpec::pld_sbm(vec![100, 100], uniform_b(2, 0.3, 0.05), 1e9, 5);
        let s = sample_pld_sbm(&spec).unwrap();
        let intra = s
            .graph
            .edges()
            .iter()
            .filter(|&&(i, j)| s.truth.z[i] == s.truth.z[j] && s.truth.z[i] == 0)
            .count() as f64;
        // Binomial(4950, 0.3): mean 1485, sd 32.24.
        assert!((intra - 1485.0).abs() < 3.0 * 32.24, "{intra}");
    }

    #[test]
    fn ba_smallest_cluster_is_one_edge() {
        let s = sample_ba_planted(&GenSpec::ba_planted(vec![2], 1, 0, 9)).unwrap();
        assert_eq!(s.graph.edges(), &[(0, 1)]);
    }

    #[test]
    fn ba_planted_structure() {
        let spec = GenSpec::ba_planted(vec![20, 20, 20], 2, 5, 17);
        let s = sample_ba_planted(&spec).unwrap();
        let inter = s
            .graph
            .edges()
            .iter()
            .filter(|&&(i, j)| s.truth.z[i] != s.truth.z[j])
            .count();
        assert_eq!(inter, 15);
        // Seed triangle plus 17 nodes with two links each, per cluster.
        assert_eq!(s.graph.n_edges() - inter, 3 * (3 + 17 * 2));
    }

    #[test]
    fn ba_cluster_too_small() {
        let err = sample_ba_planted(&GenSpec::ba_planted(vec![20, 2], 2, 1, 0)).unwrap_err();
        assert_eq!(err.field, "cluster_sizes");
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let mut spec = GenSpec::pld_sbm(vec![3, 3], uniform_b(2, 0.5, 0.1), 0.0, 0);
        assert_eq!(spec.validate().unwrap_err().field, "lambda");
        spec.lambda = Some(1.0);
        spec.b = Some(uniform_b(2, 1.5, 0.1));
        assert_eq!(spec.validate().unwrap_err().field, "B");
        spec.b = Some(Matrix::from_rows(&[vec![0.5, 0.1], vec![0.2, 0.5]]));
        assert_eq!(spec.validate().unwrap_err().field, "B");
        spec.b = Some(uniform_b(3, 0.5, 0.1));
        assert_eq!(spec.validate().unwrap_err().field, "B");
        spec.cluster_sizes = vec![3, 0];
        assert_eq!(spec.validate().unwrap_err().field, "cluster_sizes");
        assert_eq!(
            sample_sbm(&GenSpec::ba_planted(vec![5], 2, 0, 0)).unwrap_err().field,
            "kind"
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = GenSpec::pld_sbm(vec![30, 30], uniform_b(2, 0.6, 0.1), 0.5, 42);
        assert_eq!(sample(&spec).unwrap(), sample(&spec).unwrap());
        assert_ne!(sample(&spec).unwrap().graph, sample(&spec.replicate(1)).unwrap().graph);
        let ba = GenSpec::ba_planted(vec![20, 20, 20], 2, 5, 42);
        assert_eq!(sample(&ba).unwrap(), sample(&ba).unwrap());
    }

    #[test]
    fn random_membership_uses_all_clusters() {
        let mut spec = GenSpec::sbm(vec![50, 50], uniform_b(2, 0.5, 0.1), 8);
        spec.random_membership = true;
        let s = sample_sbm(&spec).unwrap();
        let ones = s.truth.z.iter().filter(|&&c| c == 1).count();
        assert!((20..80).contains(&ones), "{ones}");
    }

    #[test]
    fn spec_json_field_names() {
        let json = r#"{"kind":"pld_sbm","cluster_sizes":[4,4],"B":[[0.5,0.1],[0.1,0.5]],"lambda":0.01,"seed":3}"#;
        let spec: GenSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, GenKind::PldSbm);
        assert_eq!(spec.ba_m, 2);
        assert_eq!(spec.inter_pairs, 5);
        spec.validate().unwrap();
    }
}
