use crate::scalar::Real;

/// Quantile check loss ρ_τ(u) = u (τ − I(u ≤ 0)).
pub fn check_loss<T: Real>(u: T, tau: T) -> T {
    if u <= T::zero() {
        u * (tau - T::one())
    } else {
        u * tau
    }
}

/// argmin_u ρ_τ(u) + (κ/2)(u − v)².
pub fn prox_check<T: Real>(tau: T, kappa: T, v: T) -> T {
    let upper = tau / kappa;
    let lower = (tau - T::one()) / kappa;
    if v > upper {
        v - upper
    } else if v < lower {
        v - lower
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_argmin(tau: f64, kappa: f64, v: f64) -> f64 {
        let obj = |u: f64| check_loss(u, tau) + 0.5 * kappa * (u - v) * (u - v);
        (0..=100_000)
            .map(|k| -5.0 + 1e-4 * k as f64)
            .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn check_loss_values() {
        assert_eq!(check_loss(2.0, 0.5), 1.0);
        assert_eq!(check_loss(-1.0, 0.25), 0.75);
        for tau in [0.1, 0.5, 0.9] {
            assert_eq!(check_loss(0.0, tau), 0.0);
        }
    }

    #[test]
    fn prox_examples() {
        assert_eq!(prox_check(0.5, 1.0, 0.0), 0.0);
        assert_eq!(prox_check(0.5, 1.0, 2.0), 1.5);
        assert_eq!(prox_check(0.25, 2.0, -1.0), -0.625);
        assert!((grid_argmin(0.5, 1.0, 2.0) - 1.5).abs() < 1e-4);
        assert!((grid_argmin(0.25, 2.0, -1.0) + 0.625).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn prox_is_monotone_and_nonexpansive(
            tau in 0.01f64..0.99, kappa in 0.1f64..10.0, v in -5.0f64..5.0, dv in 0.0f64..2.0
        ) {
            let a = prox_check(tau, kappa, v);
            let b = prox_check(tau, kappa, v + dv);
            prop_assert!(b >= a);
            prop_assert!(b - a <= dv + 1e-15);
        }
    }
}
