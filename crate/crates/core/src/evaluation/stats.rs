use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

/// Paired one-sided sign test of "first < second".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    /// Pairs where the first value is strictly smaller.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`; ties dropped.
    pub p_value: f64,
}

pub fn sign_test(first: &[f64], second: &[f64]) -> SignTest {
    assert_eq!(first.len(), second.len(), "sign test needs paired samples");
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (a, b) in first.iter().zip(second) {
        if a < b {
            wins += 1;
        } else if a > b {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    let n = (wins + losses) as u64;
    let p_value = if wins == 0 {
        1.0
    } else {
        Binomial::new(0.5, n).expect("valid binomial").sf(wins as u64 - 1)
    };
    SignTest {
        wins,
        losses,
        ties,
        p_value,
    }
}
