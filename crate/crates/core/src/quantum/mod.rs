//! Finite-dimensional pre/post-selection calculus on path ⊗ polarization.
//!
//! The photon lives on the 4-dimensional space spanned by
//! `[A⊗H, A⊗V, B⊗H, B⊗V]`. This module provides the states, the arm
//! observables `Ŷ_i = |i><i| ⊗ 𝟙` and `X̂_i = |i><i| ⊗ σ₁`, weak values,
//! ABL conditionals for projective intermediate measurements, the strong
//! joint measurement, and an exactly-evolved qubit pointer.

mod measure;
mod operator;
mod state;

pub use measure::*;
pub use operator::*;
pub use state::*;

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn pair(theta: f64) -> PrePostPair {
        PrePostPair::new(pre_state(), post_state(theta).unwrap())
    }

    proptest! {
        #[test]
        fn spatial_sum_rule(theta in -180.0f64..180.0) {
            let p = pair(theta);
            prop_assume!(!p.is_orthogonal());
            let a = weak_value(&observable(ObservableKind::Spatial, Arm::A), &p).unwrap();
            let b = weak_value(&observable(ObservableKind::Spatial, Arm::B), &p).unwrap();
            // Near the orthogonal angle both terms grow like 1/<φ|ψ>.
            let scale = 1.0f64.max(a.norm());
            prop_assert!((a + b - C64::from(1.0)).norm() <= 1e-12 * scale);
        }

        #[test]
        fn diagonal_sum_rule(theta in -180.0f64..180.0) {
            let p = pair(theta);
            prop_assume!(p.overlap().norm() > 1e-3);
            let a = weak_value(&observable(ObservableKind::Diagonal, Arm::A), &p).unwrap();
            let b = weak_value(&observable(ObservableKind::Diagonal, Arm::B), &p).unwrap();
            let total = diagonal_total_weak_value(&p).unwrap();
            prop_assert!((a + b - total).norm() <= 1e-12 * 1.0f64.max(total.norm()));
        }

        #[test]
        fn projector_weak_values_real(theta in -180.0f64..180.0) {
            let p = pair(theta);
            prop_assume!(!p.is_orthogonal());
            for arm in [Arm::A, Arm::B] {
                let w = weak_value(&observable(ObservableKind::Spatial, arm), &p).unwrap();
                prop_assert_eq!(w.im, 0.0);
            }
        }

        #[test]
        fn abl_sums_to_one(theta in -180.0f64..180.0, kind in 0usize..4) {
            let op = match kind {
                0 => observable(ObservableKind::Spatial, Arm::A),
                1 => observable(ObservableKind::Diagonal, Arm::A),
                2 => observable(ObservableKind::Diagonal, Arm::B),
                _ => observable(ObservableKind::Diagonal, Arm::A) + observable(ObservableKind::Spatial, Arm::B),
            };
            if let Ok(dist) = abl_distribution(&op, &pair(theta)) {
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                prop_assert!(dist.iter().all(|(_, p)| (0.0..=1.0 + 1e-12).contains(p)));
            }
        }

        #[test]
        fn arm_a_qubit_never_excited(g in -10.0f64..10.0) {
            let e = qubit_pointer_excitation(Arm::A, g, &pair(0.0)).unwrap();
            prop_assert!(e.abs() <= 1e-12);
        }
    }
}
