use nalgebra::{Matrix2, SMatrix, SVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::operator::{observable, pauli_x, ObservableKind, SystemOperator, EIGEN_TOL};
use super::state::{Arm, Linear, SystemState, C64};
use crate::error::{Error, Result};
use crate::rng;

/// Default bound on `|<φ|ψ>|` below which post-selection counts as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Pre- and post-selected states with their cached overlap `<φ|ψ>`.
#[derive(Debug, Clone, Copy)]
pub struct PrePostPair {
    pre: SystemState,
    post: SystemState,
    overlap: C64,
    tolerance: f64,
}

impl PrePostPair {
    pub fn new(pre: SystemState, post: SystemState) -> Self {
        PrePostPair {
            overlap: post.inner(&pre),
            pre,
            post,
            tolerance: ORTHOGONALITY_TOL,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn pre(&self) -> &SystemState {
        &self.pre
    }

    pub fn post(&self) -> &SystemState {
        &self.post
    }

    pub fn overlap(&self) -> C64 {
        self.overlap
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_orthogonal(&self) -> bool {
        self.overlap.norm() <= self.tolerance
    }

    fn require_overlap(&self) -> Result<C64> {
        if self.is_orthogonal() {
            Err(Error::OrthogonalPostSelection {
                overlap: self.overlap.norm(),
            })
        } else {
            Ok(self.overlap)
        }
    }

    /// Fails when a post-selection probability is too small to condition on.
    /// Probabilities are squared amplitudes, so the bound is `tolerance²`.
    fn require_probability(&self, p: f64) -> Result<f64> {
        if p <= self.tolerance * self.tolerance {
            Err(Error::OrthogonalPostSelection { overlap: p.sqrt() })
        } else {
            Ok(p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    Unconditional,
    ConditionalOnPostselection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub outcomes: Vec<Outcome>,
    pub kind: Conditioning,
}

impl OutcomeDistribution {
    fn from_weights(labels: &[&str], weights: &[f64], kind: Conditioning) -> Self {
        let total: f64 = weights.iter().sum();
        OutcomeDistribution {
            outcomes: labels
                .iter()
                .zip(weights)
                .map(|(l, w)| Outcome {
                    label: (*l).to_string(),
                    probability: w / total,
                })
                .collect(),
            kind,
        }
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.outcomes
            .iter()
            .find(|o| o.label == label)
            .map(|o| o.probability)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }
}

/// `<φ|S|ψ>/<φ|ψ>`.
pub fn weak_value(op: &SystemOperator, pair: &PrePostPair) -> Result<C64> {
    let overlap = pair.require_overlap()?;
    Ok(op.sandwich(pair.post(), pair.pre()) / overlap)
}

/// ABL distribution over the eigenvalues of `op`: the probability of each
/// outcome of a projective intermediate measurement, given that the
/// post-selection succeeded afterwards.
///
/// Bayes: `P(k|φ) = P(k) P(φ|k) / Σ_j P(j) P(φ|j)` with
/// `P(k) P(φ|k) = |<φ|Π_k|ψ>|²`. The denominator is the post-selection
/// probability of the measured process, which generally differs from the
/// undisturbed `|<φ|ψ>|²`.
pub fn abl_distribution(op: &SystemOperator, pair: &PrePostPair) -> Result<Vec<(f64, f64)>> {
    let spaces = op.spectrum()?;
    let weights: Vec<f64> = spaces
        .iter()
        .map(|e| e.projector.sandwich(pair.post(), pair.pre()).norm_sqr())
        .collect();
    let total = pair.require_probability(weights.iter().sum())?;
    Ok(spaces
        .iter()
        .zip(weights)
        .map(|(e, w)| (e.value, w / total))
        .collect())
}

/// ABL conditional probability of obtaining `eigenvalue`.
pub fn abl_conditional(op: &SystemOperator, eigenvalue: f64, pair: &PrePostPair) -> Result<f64> {
    abl_distribution(op, pair)?
        .into_iter()
        .find(|(v, _)| (v - eigenvalue).abs() <= EIGEN_TOL)
        .map(|(_, p)| p)
        .ok_or(Error::NotAnEigenvalue { value: eigenvalue })
}

/// `P(k) P(φ|k) / |<φ|ψ>|²`: Bayes' ratio with the undisturbed
/// post-selection probability in the denominator.
///
/// Coincides with [`abl_conditional`] when the measurement leaves the
/// post-selection probability unchanged (e.g. `Ŷ_A` with the default
/// states). It is not a distribution in general: for `X̂_B` it gives 1/4,
/// 1/4 and 1 for the eigenvalues +1, -1 and 0.
pub fn undisturbed_bayes_ratio(
    op: &SystemOperator,
    eigenvalue: f64,
    pair: &PrePostPair,
) -> Result<f64> {
    let overlap = pair.require_overlap()?;
    let projector = op.eigenprojector(eigenvalue)?;
    let pk = projector.apply(pair.pre()).norm().powi(2);
    if pk == 0.0 {
        return Ok(0.0);
    }
    let collapsed = projector.apply(pair.pre());
    let p_post_given_k = pair.post().inner(&collapsed).norm_sqr() / pk;
    Ok(pk * p_post_given_k / overlap.norm_sqr())
}

/// Labels of the strong joint measurement of `Ŷ_A` (y pointer) and `X̂_B`
/// (x pointer).
pub const JOINT_LABELS: [&str; 3] = ["A", "B+", "B-"];

/// Joint projectors for the outcomes in [`JOINT_LABELS`]: photon in A
/// (y pointer shifted by g), photon in B diagonal (x pointer +g), photon in
/// B anti-diagonal (x pointer -g).
pub fn joint_projectors() -> [SystemOperator; 3] {
    let xb = observable(ObservableKind::Diagonal, Arm::B);
    let yb = observable(ObservableKind::Spatial, Arm::B);
    let half = C64::from(0.5);
    let plus = SystemOperator((yb.0 + xb.0) * half);
    let minus = SystemOperator((yb.0 - xb.0) * half);
    [observable(ObservableKind::Spatial, Arm::A), plus, minus]
}

/// Outcome distributions of the disturbing joint measurement, assuming
/// orthogonal shifted pointer states. Returns `(unconditional, conditional)`.
pub fn joint_disturbing_distribution(
    pair: &PrePostPair,
) -> Result<(OutcomeDistribution, OutcomeDistribution)> {
    let projectors = joint_projectors();
    let uncond: Vec<f64> = projectors
        .iter()
        .map(|p| p.apply(pair.pre()).norm().powi(2))
        .collect();
    let cond: Vec<f64> = projectors
        .iter()
        .map(|p| p.sandwich(pair.post(), pair.pre()).norm_sqr())
        .collect();
    pair.require_probability(cond.iter().sum())?;
    Ok((
        OutcomeDistribution::from_weights(&JOINT_LABELS, &uncond, Conditioning::Unconditional),
        OutcomeDistribution::from_weights(
            &JOINT_LABELS,
            &cond,
            Conditioning::ConditionalOnPostselection,
        ),
    ))
}

pub type Matrix8 = SMatrix<C64, 8, 8>;
pub type Vector8 = SVector<C64, 8>;

fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(
        C64::from(0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::from(0.0),
    )
}

/// `exp(-i g X̂_arm ⊗ σ₂)` on system ⊗ qubit, index `2*system + qubit`.
///
/// Uses `(X̂ ⊗ σ₂)² = Ŷ_arm ⊗ 𝟙`, so the exponential is
/// `𝟙 - Q + Q cos g - i (X̂ ⊗ σ₂) sin g` with `Q = Ŷ_arm ⊗ 𝟙`.
pub fn qubit_coupling_unitary(arm: Arm, g: f64) -> Matrix8 {
    let x = observable(ObservableKind::Diagonal, arm).0;
    let q = observable(ObservableKind::Spatial, arm).0;
    let sy = pauli_y();
    let (s, c) = g.sin_cos();
    Matrix8::from_fn(|r, col| {
        let (sr, qr) = (r / 2, r % 2);
        let (sc, qc) = (col / 2, col % 2);
        let id = if r == col {
            C64::from(1.0)
        } else {
            C64::from(0.0)
        };
        let qq = if qr == qc {
            q[(sr, sc)]
        } else {
            C64::from(0.0)
        };
        let xy = x[(sr, sc)] * sy[(qr, qc)];
        id - qq + qq * c - C64::new(0.0, 1.0) * xy * s
    })
}

/// `|ψ> ⊗ |0_q>`.
pub fn with_qubit_ground(s: &SystemState) -> Vector8 {
    Vector8::from_fn(|i, _| {
        if i % 2 == 0 {
            s.vector()[i / 2]
        } else {
            C64::from(0.0)
        }
    })
}

/// Qubit amplitudes `(<φ,0|Ψ>, <φ,1|Ψ>)` after post-selecting the system.
pub fn postselect_qubit(joint: &Vector8, post: &SystemState) -> (C64, C64) {
    let mut amps = (C64::from(0.0), C64::from(0.0));
    for s in 0..4 {
        let bra = post.vector()[s].conj();
        amps.0 += bra * joint[2 * s];
        amps.1 += bra * joint[2 * s + 1];
    }
    amps
}

/// Probability that a qubit pointer coupled to `X̂_arm` is found excited,
/// conditioned on post-selection.
pub fn qubit_pointer_excitation(arm: Arm, g: f64, pair: &PrePostPair) -> Result<f64> {
    let evolved = qubit_coupling_unitary(arm, g) * with_qubit_ground(pair.pre());
    let (ground, excited) = postselect_qubit(&evolved, pair.post());
    let total = pair.require_probability(ground.norm_sqr() + excited.norm_sqr())?;
    Ok(excited.norm_sqr() / total)
}

/// Un-normalized qubit amplitudes after a single polarization mode
/// `α|↗> + β|↘>` (real coefficients) is coupled with strength `g` and
/// post-selected on `|H>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitResponse {
    pub ground: f64,
    pub excited: f64,
}

impl QubitResponse {
    pub fn excitation_probability(&self) -> f64 {
        let total = self.ground * self.ground + self.excited * self.excited;
        if total == 0.0 {
            0.0
        } else {
            self.excited * self.excited / total
        }
    }
}

/// `((α+β) cos g, (α-β) sin g)`. Expects real `α² + β² = 1`.
pub fn single_mode_qubit_response(alpha: f64, beta: f64, g: f64) -> QubitResponse {
    let (s, c) = g.sin_cos();
    QubitResponse {
        ground: (alpha + beta) * c,
        excited: (alpha - beta) * s,
    }
}

/// `|α - β|²`.
pub fn net_diagonal_polarization(alpha: f64, beta: f64) -> f64 {
    (alpha - beta).powi(2)
}

/// Monte Carlo tally of projective measurement followed by post-selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveTally {
    pub eigenvalues: Vec<f64>,
    /// Post-selected runs per eigenvalue.
    pub counts: Vec<u64>,
    pub postselected: u64,
    pub trials: u64,
}

impl ProjectiveTally {
    pub fn frequency(&self, eigenvalue: f64) -> Option<f64> {
        let i = self
            .eigenvalues
            .iter()
            .position(|v| (v - eigenvalue).abs() <= EIGEN_TOL)?;
        Some(self.counts[i] as f64 / self.postselected as f64)
    }
}

/// Simulates `trials` runs of: measure `op` projectively on `|ψ>` (Born
/// rule), collapse, then attempt post-selection onto `|φ>`.
pub fn sample_projective_postselection(
    op: &SystemOperator,
    pair: &PrePostPair,
    trials: u64,
    seed: u64,
) -> Result<ProjectiveTally> {
    let spaces = op.spectrum()?;
    let branches: Vec<(f64, f64)> = spaces
        .iter()
        .map(|e| {
            let collapsed = e.projector.apply(pair.pre());
            let pk = collapsed.norm().powi(2);
            let pass = if pk > 0.0 {
                pair.post().inner(&collapsed).norm_sqr() / pk
            } else {
                0.0
            };
            (pk, pass)
        })
        .collect();

    let mut rng = rng::stream(seed, &[rng::domain::PROJECTIVE]);
    let mut counts = vec![0u64; spaces.len()];
    let mut postselected = 0;
    for _ in 0..trials {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = branches.len() - 1;
        for (i, (pk, _)) in branches.iter().enumerate() {
            acc += pk;
            if u < acc {
                k = i;
                break;
            }
        }
        if rng.random::<f64>() < branches[k].1 {
            counts[k] += 1;
            postselected += 1;
        }
    }
    Ok(ProjectiveTally {
        eigenvalues: spaces.iter().map(|e| e.value).collect(),
        counts,
        postselected,
        trials,
    })
}

/// `⟨φ|𝟙⊗σ₁|ψ⟩/⟨φ|ψ⟩`, the right-hand side of the diagonal sum rule.
pub fn diagonal_total_weak_value(pair: &PrePostPair) -> Result<C64> {
    weak_value(&SystemOperator::on_polarization(&pauli_x()), pair)
}

/// Diagonal (`|↗>`) and anti-diagonal (`|↘>`) polarization on `arm`.
pub fn diagonal_ket(arm: Arm, plus: bool) -> SystemState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let h = SystemState::basis(arm, Linear::H).amplitudes();
    let v = SystemState::basis(arm, Linear::V).amplitudes();
    let sign = if plus { 1.0 } else { -1.0 };
    let mut a = [C64::from(0.0); 4];
    for i in 0..4 {
        a[i] = (h[i] + v[i] * sign) * r;
    }
    SystemState::normalized(a).expect("basis combination is non-zero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::{post_state, pre_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn pair(theta: f64) -> PrePostPair {
        PrePostPair::new(pre_state(), post_state(theta).unwrap())
    }

    fn obs(kind: ObservableKind, arm: Arm) -> SystemOperator {
        observable(kind, arm)
    }

    #[test]
    fn weak_values_at_zero() {
        let p = pair(0.0);
        let cases = [
            (ObservableKind::Spatial, Arm::A, 1.0),
            (ObservableKind::Spatial, Arm::B, 0.0),
            (ObservableKind::Diagonal, Arm::B, 1.0),
            (ObservableKind::Diagonal, Arm::A, 0.0),
        ];
        for (k, a, want) in cases {
            let w = weak_value(&obs(k, a), &p).unwrap();
            assert_abs_diff_eq!(w.re, want, epsilon = 1e-12);
            assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_weak_value_is_one() {
        for theta in [0.0, 10.0, 30.0, 45.0, 60.0, 90.0, 123.0] {
            let w = weak_value(&SystemOperator::identity(), &pair(theta)).unwrap();
            assert_abs_diff_eq!((w - C64::from(1.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weak_value_at_thirty_degrees() {
        // Direct evaluation: <φ|Ŷ_A|ψ> = cos60°/2, <φ|ψ> = (cos60° + sin60°)/2.
        let c = 60f64.to_radians().cos();
        let s = 60f64.to_radians().sin();
        let want = c / (c + s);
        let w = weak_value(&obs(ObservableKind::Spatial, Arm::A), &pair(30.0)).unwrap();
        assert_abs_diff_eq!(w.re, want, epsilon = 1e-12);
        assert_abs_diff_eq!(w.re, 0.36603, epsilon = 1e-5);
    }

    #[test]
    fn orthogonal_postselection_rejected() {
        let err = weak_value(&obs(ObservableKind::Spatial, Arm::A), &pair(67.5)).unwrap_err();
        assert!(matches!(err, Error::OrthogonalPostSelection { .. }));
    }

    #[test]
    fn abl_spatial() {
        let p = pair(0.0);
        assert_abs_diff_eq!(
            abl_conditional(&obs(ObservableKind::Spatial, Arm::A), 1.0, &p).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            abl_conditional(&obs(ObservableKind::Spatial, Arm::B), 1.0, &p).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn abl_diagonal_matches_joint_conditional() {
        let p = pair(0.0);
        let xb = obs(ObservableKind::Diagonal, Arm::B);
        let plus = abl_conditional(&xb, 1.0, &p).unwrap();
        let minus = abl_conditional(&xb, -1.0, &p).unwrap();
        assert_abs_diff_eq!(plus, 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(minus, 1.0 / 6.0, epsilon = 1e-12);
        let (_, cond) = joint_disturbing_distribution(&p).unwrap();
        assert_abs_diff_eq!(cond.probability("B+").unwrap(), plus, epsilon = 1e-12);
    }

    #[test]
    fn undisturbed_ratio_reproduces_quarter() {
        let p = pair(0.0);
        let xb = obs(ObservableKind::Diagonal, Arm::B);
        assert_abs_diff_eq!(
            undisturbed_bayes_ratio(&xb, 1.0, &p).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            undisturbed_bayes_ratio(&xb, -1.0, &p).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        let ya = obs(ObservableKind::Spatial, Arm::A);
        assert_abs_diff_eq!(
            undisturbed_bayes_ratio(&ya, 1.0, &p).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn abl_errors() {
        let p = pair(0.0);
        let ya = obs(ObservableKind::Spatial, Arm::A);
        assert!(matches!(
            abl_conditional(&ya, 2.0, &p),
            Err(Error::NotAnEigenvalue { .. })
        ));
        // Post-selection onto |B,H> after the photon was prepared in |A,H>.
        let q = PrePostPair::new(
            SystemState::basis(Arm::A, Linear::H),
            SystemState::basis(Arm::B, Linear::H),
        );
        assert!(matches!(
            abl_conditional(&ya, 1.0, &q),
            Err(Error::OrthogonalPostSelection { .. })
        ));
    }

    #[test]
    fn joint_distribution_values() {
        let (u, c) = joint_disturbing_distribution(&pair(0.0)).unwrap();
        assert_abs_diff_eq!(u.probability("A").unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(u.probability("B+").unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(u.probability("B-").unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(u.total(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.probability("A").unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.probability("B-").unwrap(), 1.0 / 6.0, epsilon = 1e-12);
        assert_eq!(u.kind, Conditioning::Unconditional);
    }

    #[test]
    fn qubit_pointer_cases() {
        let p = pair(0.0);
        assert_abs_diff_eq!(
            qubit_pointer_excitation(Arm::A, FRAC_PI_4, &p).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            qubit_pointer_excitation(Arm::B, FRAC_PI_4, &p).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            qubit_pointer_excitation(Arm::B, 0.0, &p).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn qubit_unitary_is_unitary() {
        let u = qubit_coupling_unitary(Arm::B, 0.37);
        let d = u.adjoint() * u - Matrix8::identity();
        assert!(d.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn single_mode_response() {
        let r = FRAC_1_SQRT_2;
        let h = single_mode_qubit_response(r, r, FRAC_PI_4);
        assert_abs_diff_eq!(h.excited, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(net_diagonal_polarization(r, r), 0.0);
        let v = single_mode_qubit_response(r, -r, FRAC_PI_4);
        assert_abs_diff_eq!(v.excitation_probability(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(single_mode_qubit_response(0.6, 0.8, 0.0).excited, 0.0);
    }

    #[test]
    fn diagonal_kets_are_sigma1_eigenstates() {
        let xb = obs(ObservableKind::Diagonal, Arm::B);
        for (plus, ev) in [(true, 1.0), (false, -1.0)] {
            let k = diagonal_ket(Arm::B, plus);
            let out = xb.apply(&k);
            assert_abs_diff_eq!((out.inner(&k) - C64::from(ev)).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let p = pair(0.0);
        let xb = obs(ObservableKind::Diagonal, Arm::B);
        let a = sample_projective_postselection(&xb, &p, 2000, 5).unwrap();
        let b = sample_projective_postselection(&xb, &p, 2000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>(), a.postselected);
    }
}
