use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{partial_trace, tensor_all, ComplexMatrix, DensityMatrix, Ket, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeraldOutcome {
    /// Projection onto |χ(β)⟩ = cos β|H⟩ + sin β|V⟩.
    Plus,
    /// Projection onto the orthogonal state −sin β|H⟩ + cos β|V⟩.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldSetting {
    pub beta: f64,
    pub outcome: HeraldOutcome,
}

impl HeraldSetting {
    pub fn new(beta: f64, outcome: HeraldOutcome) -> Result<Self> {
        if !(0.0..std::f64::consts::PI).contains(&beta) {
            return Err(Error::OutOfRange(format!("beta {beta} not in [0, pi)")));
        }
        Ok(Self { beta, outcome })
    }

    /// The single-photon state the herald is projected onto.
    pub fn projection_ket(&self) -> Ket {
        let (s, c) = self.beta.sin_cos();
        let amps = match self.outcome {
            HeraldOutcome::Plus => vec![C64::new(c, 0.0), C64::new(s, 0.0)],
            HeraldOutcome::Minus => vec![C64::new(-s, 0.0), C64::new(c, 0.0)],
        };
        Ket::new(amps).expect("unit vector")
    }
}

#[derive(Debug, Clone)]
pub struct HeraldedState {
    /// Normalized two-qubit state of the remaining modes, in mode order.
    /// `None` when the outcome has zero probability.
    pub state: Option<DensityMatrix>,
    pub probability: f64,
}

impl HeraldedState {
    pub fn is_degenerate(&self) -> bool {
        self.state.is_none()
    }
}

/// Projects qubit `mode` (0-based, mode 1 = 0) of a three-qubit state onto the
/// herald setting and returns the normalized conditional state of the other
/// two qubits with the outcome probability.
pub fn herald_project(rho3: &DensityMatrix, mode: usize, setting: HeraldSetting) -> Result<HeraldedState> {
    if rho3.dim() != 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: rho3.dim(),
        });
    }
    if mode > 2 {
        return Err(Error::InvalidSubsystem {
            index: mode,
            n_qubits: 3,
        });
    }
    let id = ComplexMatrix::identity(2);
    let proj = setting.projection_ket().projector();
    let factors: Vec<&ComplexMatrix> = (0..3).map(|q| if q == mode { &proj } else { &id }).collect();
    let big = tensor_all(factors);
    let projected = &(&big * rho3.matrix()) * &big;
    let probability = projected.trace().re.clamp(0.0, 1.0);
    if probability < 1e-14 {
        return Ok(HeraldedState {
            state: None,
            probability,
        });
    }
    let keep: Vec<usize> = (0..3).filter(|&q| q != mode).collect();
    // Unnormalized partial trace then renormalize.
    let unnormalized = DensityMatrix::from_matrix_unchecked(projected);
    let reduced = partial_trace(&unnormalized, &keep)?;
    let state = DensityMatrix::new(reduced.matrix().scale(1.0 / probability).hermitian_part())?;
    Ok(HeraldedState {
        state: Some(state),
        probability,
    })
}

/// Ideal heralded two-photon state for a GHZ state of the given phase:
/// cos β|HH⟩ + e^{iφ} sin β|VV⟩ for the plus outcome and
/// −sin β|HH⟩ + e^{iφ} cos β|VV⟩ for the minus outcome.
pub fn heralded_target(ghz_phase: f64, setting: HeraldSetting) -> Ket {
    let (s, c) = setting.beta.sin_cos();
    let (hh, vv) = match setting.outcome {
        HeraldOutcome::Plus => (c, s),
        HeraldOutcome::Minus => (-s, c),
    };
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    amps[0] = C64::new(hh, 0.0);
    amps[3] = C64::from_polar(vv, ghz_phase);
    Ket::new(amps).expect("unit vector")
}
