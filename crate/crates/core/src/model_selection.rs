//! Choosing the number of clusters with the integrated complete likelihood.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::inference::{fit, FitConfig, FitError, FitResult};
use crate::model::joint_log_prob;

/// `(K - 1)/2 * ln N + 1/2 * K(K + 1)/2 * ln(N(N - 1)/2)`: the complexity
/// penalty subtracted from the complete-data log probability.
pub fn icl_penalty(k: usize, n: usize) -> f64 {
    let (k, n) = (k as f64, n as f64);
    0.5 * (k - 1.0) * n.ln() + 0.5 * (k * (k + 1.0) / 2.0) * (n * (n - 1.0) / 2.0).ln()
}

/// Complete-data log probability at the fitted hard assignment and decays,
/// minus [`icl_penalty`].
pub fn icl_score(g: &Graph, result: &FitResult) -> f64 {
    let joint = joint_log_prob(g, &result.z_star, &result.state.delta_bar, &result.params);
    joint - icl_penalty(result.params.k, g.n_nodes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IclRecord {
    #[serde(rename = "K")]
    pub k: usize,
    pub icl: f64,
    pub fit: FitResult,
}

/// Per-K fits in strictly increasing K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IclSweep {
    pub records: Vec<IclRecord>,
}

impl IclSweep {
    /// Record with the highest ICL; ties go to the smaller K.
    pub fn best(&self) -> &IclRecord {
        let mut best = &self.records[0];
        for r in &self.records[1..] {
            if r.icl > best.icl {
                best = r;
            }
        }
        best
    }

    pub fn best_k(&self) -> usize {
        self.best().k
    }
}

/// Fits every K in `ks` (in parallel, all with `cfg`'s seed and restart
/// count) and scores each by ICL.
pub fn select_k(g: &Graph, ks: &[usize], cfg: &FitConfig) -> Result<IclSweep, FitError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(FitError::InvalidConfig {
            field: "k_range",
            reason: "must not be empty".into(),
        });
    }
    let records: Result<Vec<IclRecord>, FitError> = ks
        .par_iter()
        .map(|&k| {
            let cfg = FitConfig { k, ..cfg.clone() };
            let result = fit(g, &cfg)?;
            Ok(IclRecord {
                k,
                icl: icl_score(g, &result),
                fit: result,
            })
        })
        .collect();
    Ok(IclSweep { records: records? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{sample, GenSpec};
    use crate::model::{LabeledAssignment, Matrix, ModelParams, VariationalState, B_FLOOR};

    #[test]
    fn penalty_closed_form() {
        assert_eq!(icl_penalty(1, 3), 0.5 * 3f64.ln());
        for n in [3usize, 10, 500, 2000] {
            let pairs = (n * (n - 1) / 2) as f64;
            assert!((icl_penalty(1, n) - 0.5 * pairs.ln()).abs() < 1e-12);
            for k in 1..10 {
                assert!(icl_penalty(k + 1, n) > icl_penalty(k, n));
            }
        }
    }

    #[test]
    fn triangle_score() {
        let g = Graph::from_pairs(3, [(0, 1), (1, 2), (0, 2)]).unwrap().0;
        let z = LabeledAssignment::new(vec![0; 3]);
        let result = FitResult {
            params: ModelParams::new(vec![1.0], Matrix::filled(1, 1, 1.0), 0.01),
            state: VariationalState::from_assignment(&z, 1, vec![0.0; 3]),
            z_star: z,
            elbo_trace: vec![],
            converged: true,
            iterations: 0,
            restart: 0,
        };
        let expected = 3.0 * (1.0 - B_FLOOR).ln() + 3.0 * 0.01f64.ln() - 0.5 * 3f64.ln();
        assert!((icl_score(&g, &result) - expected).abs() < 1e-12);
        assert!((expected - (-13.815511 - 0.549306)).abs() < 1e-5);
    }

    #[test]
    fn single_k_and_tie_break() {
        let b = Matrix::from_rows(&[vec![0.7, 0.05], vec![0.05, 0.7]]);
        let s = sample(&GenSpec::sbm(vec![12, 12], b, 4)).unwrap();
        let mut cfg = FitConfig::new(1);
        cfg.restarts = 2;
        let sweep = select_k(&s.graph, &[2], &cfg).unwrap();
        assert_eq!(sweep.best_k(), 2);
        assert_eq!(sweep.records.len(), 1);

        let mut tied = sweep.clone();
        let mut other = tied.records[0].clone();
        other.k = 3;
        tied.records.push(other);
        assert_eq!(tied.best_k(), 2);
    }

    #[test]
    fn planted_blocks_prefer_true_k() {
        // Sparse blocks: the first-order non-edge term is accurate only for small b.
        let b = Matrix::from_rows(&[vec![0.25, 0.02], vec![0.02, 0.25]]);
        let s = sample(&GenSpec::sbm(vec![40, 40], b, 9)).unwrap();
        let mut cfg = FitConfig::new(1).with_seed(1);
        cfg.restarts = 3;
        let sweep = select_k(&s.graph, &[3, 1, 2], &cfg).unwrap();
        let ks: Vec<usize> = sweep.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![1, 2, 3]);
        assert_eq!(sweep.best_k(), 2);
        assert!(select_k(&s.graph, &[], &cfg).is_err());
        assert!(matches!(
            select_k(&s.graph, &[81], &cfg),
            Err(FitError::TooManyClusters { .. })
        ));
    }
}
