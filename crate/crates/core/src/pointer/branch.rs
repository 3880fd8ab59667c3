use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{basis_index, hwp_jones, Arm, Linear, ObservableKind, SystemState, C64};

/// Branches with `|coeff|` below this are dropped.
pub const PRUNE_TOL: f64 = 1e-15;

/// Shifts closer than this (µm) are treated as the same pointer mode.
const SHIFT_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            _ => Err(Error::InvalidInput(format!("unknown axis {s:?}"))),
        }
    }
}

/// Polarization carried by a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
    /// `|↗> = (|H> + |V>)/√2`
    Diag,
    /// `|↘> = (|H> - |V>)/√2`
    Anti,
}

impl Pol {
    /// Components in the `(H, V)` basis.
    pub fn jones(self) -> [f64; 2] {
        match self {
            Pol::H => [1.0, 0.0],
            Pol::V => [0.0, 1.0],
            Pol::Diag => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            Pol::Anti => [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        }
    }

    fn inner(self, other: Pol) -> f64 {
        let (a, b) = (self.jones(), other.jones());
        a[0] * b[0] + a[1] * b[1]
    }
}

/// System part of a branch. After post-selection the system factor is
/// projected out and every branch carries [`SystemLabel::PostSelected`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemLabel {
    Ket(Arm, Pol),
    PostSelected,
}

impl SystemLabel {
    pub fn ket(self) -> Option<SystemState> {
        match self {
            SystemLabel::Ket(arm, pol) => {
                let [h, v] = pol.jones();
                let mut a = [C64::from(0.0); 4];
                a[basis_index(arm, Linear::H)] = C64::from(h);
                a[basis_index(arm, Linear::V)] = C64::from(v);
                Some(SystemState::normalized(a).expect("polarization kets are unit vectors"))
            }
            SystemLabel::PostSelected => None,
        }
    }

    /// `<self|other>` on the system factor.
    pub fn inner(self, other: SystemLabel) -> f64 {
        match (self, other) {
            (SystemLabel::Ket(a1, p1), SystemLabel::Ket(a2, p2)) if a1 == a2 => p1.inner(p2),
            (SystemLabel::PostSelected, SystemLabel::PostSelected) => 1.0,
            _ => 0.0,
        }
    }

    fn arm(self) -> Option<Arm> {
        match self {
            SystemLabel::Ket(arm, _) => Some(arm),
            SystemLabel::PostSelected => None,
        }
    }
}

/// One term `coeff · |system> ⊗ |ξ_dx> ⊗ |ξ_dy>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub coeff: C64,
    pub system: SystemLabel,
    pub dx: f64,
    pub dy: f64,
}

impl Branch {
    pub fn shift(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx,
            Axis::Y => self.dy,
        }
    }

    fn shifted(mut self, axis: Axis, by: f64) -> Self {
        match axis {
            Axis::X => self.dx += by,
            Axis::Y => self.dy += by,
        }
        self
    }
}

/// Finite superposition of Gaussian pointer modes tagged with system states.
///
/// x and y pointers are independent products; each branch carries its own
/// displacement on both axes and all modes share `mode_sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub branches: Vec<Branch>,
    pub mode_sigma: f64,
    pub arm_phase: f64,
}

/// von Neumann coupler `exp(-i g O P)` with `O = Ŷ_arm` (spatial, acts on the
/// y pointer) or `O = X̂_arm` (diagonal, acts on the x pointer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub kind: ObservableKind,
    pub arm: Arm,
    /// Shift per unit eigenvalue, µm.
    pub g: f64,
}

impl CouplerSpec {
    pub fn spatial(arm: Arm, g: f64) -> Self {
        CouplerSpec {
            kind: ObservableKind::Spatial,
            arm,
            g,
        }
    }

    pub fn diagonal(arm: Arm, g: f64) -> Self {
        CouplerSpec {
            kind: ObservableKind::Diagonal,
            arm,
            g,
        }
    }

    pub fn axis(&self) -> Axis {
        match self.kind {
            ObservableKind::Spatial => Axis::Y,
            ObservableKind::Diagonal => Axis::X,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coupling g must be finite and >= 0, got {}",
                self.g
            )));
        }
        Ok(())
    }

    /// Diagnostic only: `g < σ/3`.
    pub fn is_weak(&self, sigma: f64) -> bool {
        self.g < sigma / 3.0
    }
}

/// Single optical element acting on one arm, used to build the diagonal
/// coupler from waveplates and beam displacers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    /// Half-wave plate, fast axis at `angle_deg`.
    HalfWavePlate { angle_deg: f64 },
    /// Polarizing beam displacer: the extraordinary ray is shifted by
    /// `shift` along x, the ordinary ray passes undeviated.
    Displacer { shift: f64, extraordinary: Linear },
}

/// Beam-order element list realizing `exp(-i g X̂ P_x)` on one arm:
/// HWP(π/8), displacer(+g), HWP(π/4), displacer(-g), HWP(π/4), HWP(π/8).
/// The inner four elements give `exp(-i g σ₃ P_x)`; the outer plates rotate
/// σ₃ into σ₁. The displacers shift the horizontal (extraordinary) ray.
pub fn composite_diagonal_coupler(g: f64) -> [OpticalElement; 6] {
    let e = Linear::H;
    [
        OpticalElement::HalfWavePlate { angle_deg: 22.5 },
        OpticalElement::Displacer {
            shift: g,
            extraordinary: e,
        },
        OpticalElement::HalfWavePlate { angle_deg: 45.0 },
        OpticalElement::Displacer {
            shift: -g,
            extraordinary: e,
        },
        OpticalElement::HalfWavePlate { angle_deg: 45.0 },
        OpticalElement::HalfWavePlate { angle_deg: 22.5 },
    ]
}

fn linear_components(pol: Pol) -> [(Pol, f64); 2] {
    let [h, v] = pol.jones();
    [(Pol::H, h), (Pol::V, v)]
}

fn diagonal_components(pol: Pol) -> [(Pol, f64); 2] {
    [
        (Pol::Diag, Pol::Diag.inner(pol)),
        (Pol::Anti, Pol::Anti.inner(pol)),
    ]
}

impl BranchState {
    /// `|pre> ⊗ |ξ_0> ⊗ |ξ_0>` expanded over the linear basis.
    pub fn from_system(pre: &SystemState, mode_sigma: f64) -> Self {
        let mut branches = Vec::new();
        for arm in [Arm::A, Arm::B] {
            for (lin, pol) in [(Linear::H, Pol::H), (Linear::V, Pol::V)] {
                let c = pre.amplitudes()[basis_index(arm, lin)];
                branches.push(Branch {
                    coeff: c,
                    system: SystemLabel::Ket(arm, pol),
                    dx: 0.0,
                    dy: 0.0,
                });
            }
        }
        BranchState {
            branches,
            mode_sigma,
            arm_phase: 0.0,
        }
        .simplified()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn is_postselected(&self) -> bool {
        self.branches
            .iter()
            .all(|b| b.system == SystemLabel::PostSelected)
    }

    /// Merges branches that share a system label and displacement, then
    /// prunes negligible coefficients. Order of first appearance is kept.
    pub fn simplified(mut self) -> Self {
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        for b in self.branches.drain(..) {
            match out.iter_mut().find(|o| {
                o.system == b.system
                    && (o.dx - b.dx).abs() <= SHIFT_MERGE_TOL
                    && (o.dy - b.dy).abs() <= SHIFT_MERGE_TOL
            }) {
                Some(o) => o.coeff += b.coeff,
                None => out.push(b),
            }
        }
        out.retain(|b| b.coeff.norm() >= PRUNE_TOL);
        self.branches = out;
        self
    }

    pub fn apply_coupler(&self, spec: &CouplerSpec) -> Self {
        let axis = spec.axis();
        let mut branches = Vec::with_capacity(self.branches.len() * 2);
        for b in &self.branches {
            match b.system {
                SystemLabel::Ket(arm, pol) if arm == spec.arm => match spec.kind {
                    ObservableKind::Spatial => branches.push(b.shifted(axis, spec.g)),
                    ObservableKind::Diagonal => {
                        for (p, amp) in diagonal_components(pol) {
                            let eigen = if p == Pol::Diag { 1.0 } else { -1.0 };
                            branches.push(Branch {
                                coeff: b.coeff * amp,
                                system: SystemLabel::Ket(arm, p),
                                ..b.shifted(axis, eigen * spec.g)
                            });
                        }
                    }
                },
                _ => branches.push(*b),
            }
        }
        BranchState {
            branches,
            ..self.clone()
        }
        .simplified()
    }

    pub fn apply_element(&self, arm: Arm, element: &OpticalElement) -> Self {
        let mut branches = Vec::with_capacity(self.branches.len() * 2);
        for b in &self.branches {
            let pol = match b.system {
                SystemLabel::Ket(a, pol) if a == arm => pol,
                _ => {
                    branches.push(*b);
                    continue;
                }
            };
            match *element {
                OpticalElement::HalfWavePlate { angle_deg } => {
                    let j = hwp_jones(angle_deg);
                    let [h, v] = pol.jones();
                    let out = [j[0][0] * h + j[0][1] * v, j[1][0] * h + j[1][1] * v];
                    for (p, amp) in [(Pol::H, out[0]), (Pol::V, out[1])] {
                        branches.push(Branch {
                            coeff: b.coeff * amp,
                            system: SystemLabel::Ket(arm, p),
                            ..*b
                        });
                    }
                }
                OpticalElement::Displacer {
                    shift,
                    extraordinary,
                } => {
                    for (p, amp) in linear_components(pol) {
                        let is_e = matches!(
                            (p, extraordinary),
                            (Pol::H, Linear::H) | (Pol::V, Linear::V)
                        );
                        let moved = if is_e { b.shifted(Axis::X, shift) } else { *b };
                        branches.push(Branch {
                            coeff: b.coeff * amp,
                            system: SystemLabel::Ket(arm, p),
                            ..moved
                        });
                    }
                }
            }
        }
        BranchState {
            branches,
            ..self.clone()
        }
        .simplified()
    }

    pub fn apply_elements(&self, arm: Arm, elements: &[OpticalElement]) -> Self {
        elements
            .iter()
            .fold(self.clone(), |s, e| s.apply_element(arm, e))
    }

    /// Re-expresses every branch in the linear basis and merges. Two states
    /// that represent the same vector have identical canonical forms up to
    /// rounding.
    pub fn canonical(&self) -> Self {
        let mut branches = Vec::new();
        for b in &self.branches {
            match b.system {
                SystemLabel::Ket(arm, pol) => {
                    for (p, amp) in linear_components(pol) {
                        branches.push(Branch {
                            coeff: b.coeff * amp,
                            system: SystemLabel::Ket(arm, p),
                            ..*b
                        });
                    }
                }
                SystemLabel::PostSelected => branches.push(*b),
            }
        }
        BranchState {
            branches,
            ..self.clone()
        }
        .simplified()
    }

    /// Sum of `|c_k - c'_k|` over the canonical forms of both states, a
    /// branch-by-branch distance that ignores Gaussian overlaps.
    pub fn coefficient_distance(&self, other: &BranchState) -> f64 {
        let a = self.canonical();
        let b = other.canonical();
        let diff = BranchState {
            branches: a
                .branches
                .iter()
                .cloned()
                .chain(b.branches.iter().map(|x| Branch {
                    coeff: -x.coeff,
                    ..*x
                }))
                .collect(),
            ..a.clone()
        };
        let mut merged: Vec<Branch> = Vec::new();
        for x in diff.branches {
            match merged.iter_mut().find(|o| {
                o.system == x.system
                    && (o.dx - x.dx).abs() <= SHIFT_MERGE_TOL
                    && (o.dy - x.dy).abs() <= SHIFT_MERGE_TOL
            }) {
                Some(o) => o.coeff += x.coeff,
                None => merged.push(x),
            }
        }
        merged.iter().map(|x| x.coeff.norm()).sum()
    }

    /// Projects the system factor onto `post`. Arm-B branches pick up
    /// `exp(i arm_phase)` first.
    pub fn postselect(&self, post: &SystemState) -> Self {
        let phase = C64::from_polar(1.0, self.arm_phase);
        let branches = self
            .branches
            .iter()
            .filter_map(|b| {
                let ket = b.system.ket()?;
                let mut c = b.coeff * post.inner(&ket);
                if b.system.arm() == Some(Arm::B) {
                    c *= phase;
                }
                Some(Branch {
                    coeff: c,
                    system: SystemLabel::PostSelected,
                    ..*b
                })
            })
            .collect();
        BranchState {
            branches,
            ..self.clone()
        }
        .simplified()
    }

    /// `<Ψ|Ψ>`, including Gaussian overlaps between branches.
    pub fn norm_sqr(&self) -> f64 {
        let s = self.mode_sigma;
        let mut total = 0.0;
        for k in &self.branches {
            for l in &self.branches {
                let sys = l.system.inner(k.system);
                if sys == 0.0 {
                    continue;
                }
                let o = super::mode::mode_overlap(k.dx - l.dx, s)
                    * super::mode::mode_overlap(k.dy - l.dy, s);
                total += (k.coeff * l.coeff.conj()).re * sys * o;
            }
        }
        total
    }
}

/// Pointer width and interferometer phase shared by a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerSetup {
    pub sigma: f64,
    pub arm_phase: f64,
}

impl Default for PointerSetup {
    fn default() -> Self {
        PointerSetup {
            sigma: super::mode::BEAM_SIGMA_UM,
            arm_phase: 0.0,
        }
    }
}

/// Evolves `pre ⊗ ξ_0 ⊗ ξ_0` through `couplers` without post-selecting.
pub fn evolve(
    pre: &SystemState,
    couplers: &[CouplerSpec],
    blocked_arm: Option<Arm>,
    setup: PointerSetup,
) -> Result<BranchState> {
    if !(setup.sigma > 0.0) || !setup.sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "pointer sigma must be > 0, got {}",
            setup.sigma
        )));
    }
    for (i, c) in couplers.iter().enumerate() {
        c.validate()?;
        if couplers[..i]
            .iter()
            .any(|o| o.kind == c.kind && o.arm == c.arm)
        {
            return Err(Error::ConflictingCouplers(match c.kind {
                ObservableKind::Spatial => "spatial",
                ObservableKind::Diagonal => "diagonal",
            }));
        }
    }
    let start = match blocked_arm {
        Some(arm) => pre.block_arm(arm),
        None => *pre,
    };
    if start.norm() == 0.0 {
        return Err(Error::EmptyState);
    }
    let mut state = BranchState::from_system(&start, setup.sigma);
    state.arm_phase = setup.arm_phase;
    Ok(couplers.iter().fold(state, |s, c| s.apply_coupler(c)))
}

/// Un-normalized post-selected pointer state.
pub fn evolve_and_postselect(
    pre: &SystemState,
    couplers: &[CouplerSpec],
    post: &SystemState,
    blocked_arm: Option<Arm>,
    setup: PointerSetup,
) -> Result<BranchState> {
    Ok(evolve(pre, couplers, blocked_arm, setup)?.postselect(post))
}

/// Spatial coupler on arm A and diagonal coupler on arm B, both of
/// strength `g`: the two pointers of the joint measurement.
pub fn joint_couplers(g: f64) -> [CouplerSpec; 2] {
    [
        CouplerSpec::spatial(Arm::A, g),
        CouplerSpec::diagonal(Arm::B, g),
    ]
}

/// `g · Re(weak value)`.
pub fn first_order_shift(weak_value: C64, g: f64) -> f64 {
    g * weak_value.re
}
