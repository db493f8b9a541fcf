use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix as Weights;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::model::LabeledAssignment;

/// Agreement between a true and a predicted labeling under the best
/// one-to-one matching of cluster labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub error_count: usize,
    pub error_rate: f64,
    pub nmi: f64,
    /// `confusion[t][p]`: nodes with true cluster `t` and predicted cluster `p`.
    pub confusion: Vec<Vec<usize>>,
    /// Predicted cluster matched to each true cluster, if any.
    pub matching: Vec<Option<usize>>,
}

/// `K_true x K_pred` contingency counts, with `K = max label + 1`.
pub fn confusion_matrix(truth: &LabeledAssignment, pred: &LabeledAssignment) -> Result<Vec<Vec<usize>>, EvalError> {
    check_lengths(truth, pred)?;
    let mut table = vec![vec![0; pred.n_clusters()]; truth.n_clusters()];
    for (&t, &p) in truth.z.iter().zip(&pred.z) {
        table[t][p] += 1;
    }
    Ok(table)
}

fn check_lengths(truth: &LabeledAssignment, pred: &LabeledAssignment) -> Result<(), EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Best one-to-one matching of true to predicted clusters, maximizing the
/// matched node count. Returns `(matched, matching)`.
fn best_matching(confusion: &[Vec<usize>], k_pred: usize) -> (usize, Vec<Option<usize>>) {
    let k_true = confusion.len();
    let transpose = k_true > k_pred;
    let (rows, cols) = if transpose { (k_pred, k_true) } else { (k_true, k_pred) };
    let weights = Weights::from_fn(rows, cols, |(r, c)| {
        let (t, p) = if transpose { (c, r) } else { (r, c) };
        confusion[t][p] as i64
    });
    let (total, assignment) = kuhn_munkres(&weights);
    let mut matching = vec![None; k_true];
    for (r, &c) in assignment.iter().enumerate() {
        if transpose {
            matching[c] = Some(r);
        } else {
            matching[r] = Some(c);
        }
    }
    (total as usize, matching)
}

/// Permutation-matched clustering error, NMI (arithmetic normalization) and
/// the confusion table.
pub fn clustering_error(truth: &LabeledAssignment, pred: &LabeledAssignment) -> Result<MetricReport, EvalError> {
    let confusion = confusion_matrix(truth, pred)?;
    let (matched, matching) = best_matching(&confusion, pred.n_clusters());
    let n = truth.len();
    let error_count = n - matched;
    Ok(MetricReport {
        n,
        error_count,
        error_rate: error_count as f64 / n as f64,
        nmi: nmi_from_confusion(&confusion, n, NmiNormalization::Arithmetic),
        confusion,
        matching,
    })
}

/// How mutual information is scaled into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmiNormalization {
    #[default]
    Arithmetic,
    Geometric,
    Min,
    Max,
}

impl std::str::FromStr for NmiNormalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arithmetic" => Ok(Self::Arithmetic),
            "geometric" => Ok(Self::Geometric),
            "min" => Ok(Self::Min),
            "max" => Ok(Self::Max),
            other => Err(format!(
                "unknown NMI normalization `{other}` (arithmetic|geometric|min|max)"
            )),
        }
    }
}

pub fn nmi(truth: &LabeledAssignment, pred: &LabeledAssignment) -> Result<f64, EvalError> {
    nmi_with(truth, pred, NmiNormalization::Arithmetic)
}

pub fn nmi_with(truth: &LabeledAssignment, pred: &LabeledAssignment, norm: NmiNormalization) -> Result<f64, EvalError> {
    let confusion = confusion_matrix(truth, pred)?;
    Ok(nmi_from_confusion(&confusion, truth.len(), norm))
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn nmi_from_confusion(confusion: &[Vec<usize>], n: usize, norm: NmiNormalization) -> f64 {
    let n_f = n as f64;
    let k_pred = confusion.first().map_or(0, Vec::len);
    let row_sums: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..k_pred).map(|p| confusion.iter().map(|r| r[p]).sum()).collect();
    let h_true = entropy(row_sums.iter().copied(), n_f);
    let h_pred = entropy(col_sums.iter().copied(), n_f);
    if h_true == 0.0 && h_pred == 0.0 {
        return 1.0;
    }
    if h_true == 0.0 || h_pred == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (t, row) in confusion.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n_f * (c * n_f / (row_sums[t] as f64 * col_sums[p] as f64)).ln();
            }
        }
    }
    let scale = match norm {
        NmiNormalization::Arithmetic => 0.5 * (h_true + h_pred),
        NmiNormalization::Geometric => (h_true * h_pred).sqrt(),
        NmiNormalization::Min => h_true.min(h_pred),
        NmiNormalization::Max => h_true.max(h_pred),
    };
    (mi / scale).clamp(0.0, 1.0)
}
