use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::qcore::{Ket, C64, ZERO};

/// Relative phase between the |HHH⟩ and |VVV⟩ amplitudes (interferometer
/// phase plus source phase, combined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzParams {
    pub phase: f64,
}

impl GhzParams {
    pub const PLUS: GhzParams = GhzParams { phase: 0.0 };
    pub const MINUS: GhzParams = GhzParams { phase: PI };

    pub fn new(phase: f64) -> Self {
        Self { phase }
    }

    /// Phase reduced to [0, 2π).
    pub fn reduced_phase(&self) -> f64 {
        self.phase.rem_euclid(TAU)
    }
}

/// (|HHH⟩ + e^{iφ}|VVV⟩)/√2
pub fn make_ghz(params: GhzParams) -> Ket {
    let mut amps = vec![ZERO; 8];
    amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[7] = C64::from_polar(FRAC_1_SQRT_2, params.phase);
    Ket::new(amps).expect("non-zero amplitudes")
}
