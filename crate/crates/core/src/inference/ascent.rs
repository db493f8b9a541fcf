//! Projected gradient ascent on a scalar with backtracking.

/// Maximum number of step halvings tried before a step is abandoned.
pub const MAX_HALVINGS: u32 = 30;

/// Relative move below which the search stops early.
const MIN_RELATIVE_MOVE: f64 = 1e-12;

/// Runs up to `max_steps` projected gradient steps on `[lo, hi]` starting
/// from `x0`. Each step projects `x + step * g` onto the interval and halves
/// the resulting displacement until the objective does not decrease. A step
/// accepted without halving doubles the next step length; otherwise the next
/// step length is the one actually taken. The returned point never has a
/// lower objective than `x0`.
pub fn projected_ascent(
    x0: f64,
    (lo, hi): (f64, f64),
    initial_step: f64,
    max_steps: usize,
    value: impl Fn(f64) -> f64,
    gradient: impl Fn(f64) -> f64,
) -> f64 {
    let mut x = x0.clamp(lo, hi);
    let mut fx = value(x);
    let mut step = initial_step;
    'outer: for _ in 0..max_steps {
        let g = gradient(x);
        if !g.is_finite() || g == 0.0 || (x <= lo && g < 0.0) || (x >= hi && g > 0.0) {
            break;
        }
        let target = (x + step * g).clamp(lo, hi);
        let mut displacement = target - x;
        for halving in 0..=MAX_HALVINGS {
            let candidate = if halving == 0 { target } else { x + displacement };
            if candidate == x {
                break 'outer;
            }
            let fc = value(candidate);
            if fc >= fx {
                let moved = (candidate - x).abs();
                x = candidate;
                fx = fc;
                if moved <= MIN_RELATIVE_MOVE * (1.0 + x.abs()) {
                    break 'outer;
                }
                step = if halving == 0 {
                    2.0 * step
                } else {
                    (displacement / g).abs()
                };
                continue 'outer;
            }
            displacement *= 0.5;
        }
        break;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let x = projected_ascent(
            0.0,
            (-10.0, 10.0),
            0.1,
            200,
            |x| -(x - 3.0) * (x - 3.0),
            |x| -2.0 * (x - 3.0),
        );
        assert!((x - 3.0).abs() < 1e-6, "{x}");
    }

    #[test]
    fn stops_at_bound() {
        let x = projected_ascent(0.5, (0.0, 1.0), 0.1, 50, |x| x, |_| 1.0);
        assert_eq!(x, 1.0);
        let x = projected_ascent(0.5, (0.0, 1.0), 0.1, 50, |x| -x, |_| -1.0);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn never_decreases_objective() {
        // Steep log barrier: early steps overshoot and must be halved.
        let f = |x: f64| 1e4 * x.ln() - 1e6 * x;
        let g = |x: f64| 1e4 / x - 1e6;
        let x0 = 1e-8;
        let x = projected_ascent(x0, (1e-8, 1.0 - 1e-8), 0.1, 40, f, g);
        assert!(f(x) >= f(x0));
        assert!((x - 0.01).abs() < 1e-4, "{x}");
    }
}
