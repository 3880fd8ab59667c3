use std::fmt;

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the norm of states flagged as normalized.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

impl Arm {
    pub fn other(self) -> Arm {
        match self {
            Arm::A => Arm::B,
            Arm::B => Arm::A,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Arm::A => 0,
            Arm::B => 1,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::A => f.write_str("A"),
            Arm::B => f.write_str("B"),
        }
    }
}

/// Linear polarization basis states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Linear {
    H,
    V,
}

impl Linear {
    pub(crate) fn index(self) -> usize {
        match self {
            Linear::H => 0,
            Linear::V => 1,
        }
    }
}

/// Position of `|arm, pol>` in the frozen basis order `[A⊗H, A⊗V, B⊗H, B⊗V]`.
pub fn basis_index(arm: Arm, pol: Linear) -> usize {
    2 * arm.index() + pol.index()
}

/// Amplitude vector on path ⊗ polarization, basis order `[A⊗H, A⊗V, B⊗H, B⊗V]`.
///
/// `normalized` records whether the vector was constructed (and checked) as a
/// unit vector. Operations that zero out amplitudes or apply non-unitary
/// maps clear the flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    amps: Vector4<C64>,
    normalized: bool,
}

impl SystemState {
    /// Un-normalized state from raw amplitudes.
    pub fn from_amplitudes(amps: [C64; 4]) -> Self {
        SystemState {
            amps: Vector4::from(amps),
            normalized: false,
        }
    }

    /// Scales `amps` to unit norm and flags the result as normalized.
    pub fn normalized(amps: [C64; 4]) -> Result<Self> {
        let v = Vector4::from(amps);
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::EmptyState);
        }
        Ok(SystemState {
            amps: v / C64::from(n),
            normalized: true,
        })
    }

    pub fn basis(arm: Arm, pol: Linear) -> Self {
        let mut amps = [C64::from(0.0); 4];
        amps[basis_index(arm, pol)] = C64::from(1.0);
        SystemState {
            amps: Vector4::from(amps),
            normalized: true,
        }
    }

    pub(crate) fn from_vector(amps: Vector4<C64>, normalized: bool) -> Self {
        SystemState { amps, normalized }
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [self.amps[0], self.amps[1], self.amps[2], self.amps[3]]
    }

    pub fn vector(&self) -> &Vector4<C64> {
        &self.amps
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SystemState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Copy with the amplitudes of `arm` set to zero; the result is flagged
    /// un-normalized.
    pub fn block_arm(&self, arm: Arm) -> Self {
        let mut amps = self.amps;
        amps[basis_index(arm, Linear::H)] = C64::from(0.0);
        amps[basis_index(arm, Linear::V)] = C64::from(0.0);
        SystemState {
            amps,
            normalized: false,
        }
    }

    /// Multiplies the arm-B amplitudes by `exp(i phase)`.
    pub fn with_arm_phase(&self, phase: f64) -> Self {
        let mut amps = self.amps;
        let p = C64::from_polar(1.0, phase);
        amps[basis_index(Arm::B, Linear::H)] *= p;
        amps[basis_index(Arm::B, Linear::V)] *= p;
        SystemState {
            amps,
            normalized: self.normalized,
        }
    }
}

/// Jones matrix of a half-wave plate with fast axis at `theta_deg` from
/// horizontal: `[[cos 2θ, sin 2θ], [sin 2θ, -cos 2θ]]`.
pub fn hwp_jones(theta_deg: f64) -> [[f64; 2]; 2] {
    let t = 2.0 * theta_deg.to_radians();
    let (s, c) = t.sin_cos();
    [[c, s], [s, -c]]
}

/// Pre-selected state `(|A,H> + |B,V>)/√2`.
pub fn pre_state() -> SystemState {
    let r = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let z = C64::from(0.0);
    SystemState {
        amps: Vector4::new(r, z, z, r),
        normalized: true,
    }
}

/// Post-selected state `(|A> + |B>)/√2 ⊗ S(θ)|H>`.
pub fn post_state(theta_deg: f64) -> Result<SystemState> {
    if !theta_deg.is_finite() {
        return Err(Error::InvalidInput(format!(
            "theta must be finite, got {theta_deg}"
        )));
    }
    let j = hwp_jones(theta_deg);
    let (h, v) = (j[0][0], j[1][0]);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let a = [h * r, v * r, h * r, v * r].map(C64::from);
    Ok(SystemState {
        amps: Vector4::from(a),
        normalized: true,
    })
}
