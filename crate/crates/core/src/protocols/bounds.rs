use serde::{Deserialize, Serialize};

/// An analytic bound attached to a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub formula: String,
    pub value: f64,
}

/// Soundness per repetition of the EQ path protocol on a path of length `r`.
pub fn path_gap(r: usize) -> f64 {
    4.0 / (81.0 * (r * r) as f64)
}

/// `(1 − 4/(81 r²))^k`.
pub fn path_soundness_bound(r: usize, reps: usize) -> Bound {
    let value = (1.0 - path_gap(r)).powi(reps as i32);
    let formula = if reps == 1 {
        format!("1 - 4/(81*{r}^2)")
    } else {
        format!("(1 - 4/(81*{r}^2))^{reps}")
    };
    Bound { formula, value }
}

/// Lower bound `4/(81 r)` on the summed per-node rejection of a no-instance.
pub fn summed_rejection_bound(r: usize) -> f64 {
    4.0 / (81.0 * r as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert!((path_soundness_bound(2, 1).value - (1.0 - 1.0 / 81.0)).abs() < 1e-15);
        assert!((path_soundness_bound(3, 2).value - (1.0 - 4.0 / 729.0f64).powi(2)).abs() < 1e-15);
    }
}
