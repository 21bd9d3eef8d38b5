//! Choice-probability curves: a focal destination's probability as its
//! group travel time sweeps a grid, against a fixed competing set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Coefficients, utility};

/// Simulation setup for one curve.
///
/// The focal alternative and every background alternative share the
/// same restaurant count and non-major-station status; only the focal
/// travel time varies. At the grid point equal to the background time
/// the focal alternative is indistinguishable from the competitors and
/// its probability is exactly `1/(background_k + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    /// Restaurant count of every alternative.
    pub restaurant_count: u32,
    /// Focal travel times in minutes, strictly increasing.
    pub grid: Vec<f64>,
    /// Number of competing background alternatives.
    pub background_k: usize,
    /// Group travel time of each background alternative, minutes.
    pub background_time_min: f64,
}

impl CurveSpec {
    pub fn new(
        restaurant_count: u32,
        grid: Vec<f64>,
        background_k: usize,
        background_time_min: f64,
    ) -> Result<Self> {
        if restaurant_count == 0 {
            return Err(Error::Validation("curve restaurant count must be positive".into()));
        }
        if background_k == 0 {
            return Err(Error::Validation("curve needs at least one background alternative".into()));
        }
        if !(background_time_min.is_finite() && background_time_min >= 0.0) {
            return Err(Error::Validation(format!(
                "background travel time must be nonnegative, got {background_time_min}"
            )));
        }
        if grid.is_empty() {
            return Err(Error::EmptyInput("curve grid is empty"));
        }
        if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Validation("curve grid times must be nonnegative".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("curve grid must be strictly increasing".into()));
        }
        Ok(CurveSpec { restaurant_count, grid, background_k, background_time_min })
    }

    /// Whole-minute grid from 0 to 90 at the conventional defaults:
    /// 300 restaurants against 20 background alternatives.
    pub fn with_default_grid(background_time_min: f64) -> Result<Self> {
        CurveSpec::new(300, (0..=90).map(f64::from).collect(), 20, background_time_min)
    }
}

/// Focal-alternative choice probability at each grid time.
///
/// Probability of the focal alternative among itself and `k` identical
/// background alternatives: `1 / (1 + k·exp(V_bg − V_focal))`. With a
/// negative cost coefficient the curve is strictly decreasing.
pub fn probability_curve(beta: &Coefficients, spec: &CurveSpec) -> Result<Vec<(f64, f64)>> {
    let ln_count = f64::from(spec.restaurant_count).ln();
    let background = utility(beta, &[0.0, ln_count, spec.background_time_min])?;
    spec.grid
        .iter()
        .map(|&t| {
            let focal = utility(beta, &[0.0, ln_count, t])?;
            let p = 1.0 / (1.0 + spec.background_k as f64 * (background - focal).exp());
            Ok((t, p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_beta(cost: f64) -> Coefficients {
        Coefficients::new(vec![0.0093, 0.5590, cost]).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CurveSpec::new(300, vec![0.0, 1.0], 20, 25.0).is_ok());
        assert!(CurveSpec::new(0, vec![0.0, 1.0], 20, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![0.0, 1.0], 0, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![], 20, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![1.0, 1.0], 20, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![2.0, 1.0], 20, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![-1.0, 1.0], 20, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![0.0, f64::NAN], 20, 25.0).is_err());
        assert!(CurveSpec::new(300, vec![0.0, 1.0], 20, -3.0).is_err());
    }

    #[test]
    fn zero_cost_coefficient_gives_a_flat_curve() {
        let beta = reference_beta(0.0);
        let spec = CurveSpec::with_default_grid(25.0).unwrap();
        let curve = probability_curve(&beta, &spec).unwrap();
        assert_eq!(curve.len(), 91);
        for (_, p) in curve {
            assert_eq!(p, 1.0 / 21.0);
        }
    }

    #[test]
    fn symmetric_point_is_one_over_k_plus_one() {
        let beta = reference_beta(-0.2943);
        let spec = CurveSpec::new(300, vec![10.0, 25.0, 40.0], 20, 25.0).unwrap();
        let curve = probability_curve(&beta, &spec).unwrap();
        let (t, p) = curve[1];
        assert_eq!(t, 25.0);
        assert!((p - 1.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn negative_cost_curve_is_strictly_decreasing() {
        let beta = reference_beta(-0.2943);
        let spec = CurveSpec::with_default_grid(25.6).unwrap();
        let curve = probability_curve(&beta, &spec).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[1].1 < pair[0].1, "{pair:?}");
        }
        assert!(curve.iter().all(|(_, p)| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn hand_computed_grid_points() {
        // p(t) = 1 / (1 + 20·exp(−0.2943·(25.6 − t))) at 300 restaurants.
        let beta = reference_beta(-0.2943);
        let spec = CurveSpec::new(300, vec![10.0, 60.0], 20, 25.6).unwrap();
        let curve = probability_curve(&beta, &spec).unwrap();
        let by_hand = |t: f64| 1.0 / (1.0 + 20.0 * (-0.2943f64 * (25.6 - t)).exp());
        assert_relative_eq!(curve[0].1, by_hand(10.0), epsilon = 1e-12);
        assert_relative_eq!(curve[1].1, by_hand(60.0), epsilon = 1e-12);
        assert_relative_eq!(curve[0].1, 0.8314, epsilon = 5e-5);
    }

    #[test]
    fn steeper_cost_beta_crosses_below_past_the_shared_point() {
        let shallow = reference_beta(-0.1);
        let steep = reference_beta(-0.3);
        let spec = CurveSpec::new(300, vec![5.0, 25.0, 45.0], 20, 25.0).unwrap();
        let shallow_curve = probability_curve(&shallow, &spec).unwrap();
        let steep_curve = probability_curve(&steep, &spec).unwrap();
        // Equal at the symmetric point, steeper above before and below
        // after.
        assert!((shallow_curve[1].1 - steep_curve[1].1).abs() < 1e-12);
        assert!(steep_curve[0].1 > shallow_curve[0].1);
        assert!(steep_curve[2].1 < shallow_curve[2].1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn curves_stay_probabilities(
            cost in -0.6f64..0.0,
            count in 1u32..2000,
            background in 0.0f64..80.0,
        ) {
            let beta = reference_beta(cost);
            let spec = CurveSpec::new(count, (0..=30).map(|i| f64::from(i) * 3.0).collect(), 20, background).unwrap();
            let curve = probability_curve(&beta, &spec).unwrap();
            for (_, p) in &curve {
                prop_assert!((0.0..=1.0).contains(p));
            }
            for pair in curve.windows(2) {
                prop_assert!(pair[1].1 <= pair[0].1);
            }
        }
    }
}
