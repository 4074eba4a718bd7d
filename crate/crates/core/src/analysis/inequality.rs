use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    correlation_from_counts, correlation_from_probabilities, outcome_probabilities, Correlation, CountTable,
    MeasurementSetting, Settings,
};
use crate::qcore::{Axis, DensityMatrix};
use crate::tomography::TomographyDataset;

use super::derived_correlation;

/// Sign choice for the last two CHSH terms,
/// S = |E(a,b) − E(a,b′) ± E(a′,b) ± E(a′,b′)|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChshVariant {
    Plus,
    Minus,
}

impl ChshVariant {
    fn sign(self) -> f64 {
        match self {
            ChshVariant::Plus => 1.0,
            ChshVariant::Minus => -1.0,
        }
    }

    fn other(self) -> Self {
        match self {
            ChshVariant::Plus => ChshVariant::Minus,
            ChshVariant::Minus => ChshVariant::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inequality {
    /// a = b = c = σx, a′ = b′ = c′ = σy.
    Mermin,
    /// a = b = σx, a′ = b′ = σy, c = (σx − σy)/√2, c′ = (σx + σy)/√2.
    Svetlichny,
    /// a = σz, a′ = σx, b = (σz + σx)/√2, b′ = (σx − σz)/√2.
    Chsh(ChshVariant),
}

/// One correlation term of an inequality: `sign · E(settings)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSpec {
    pub label: &'static str,
    pub settings: Settings,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub sign: f64,
    pub correlation: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityResult {
    pub name: String,
    pub terms: Vec<Term>,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    /// Local hidden-variable bound.
    pub bound: f64,
    /// Largest value quantum mechanics allows.
    pub quantum_max: f64,
    /// Mermin only: values above 2√2 certify genuine tripartite
    /// entanglement device-independently.
    pub genuine_threshold: Option<f64>,
    /// CHSH only: S under the other sign variant.
    pub other_variant_s: Option<f64>,
    pub violation_sigmas: f64,
}

impl InequalityResult {
    /// Combines terms as S = |Σ sign·E| with σ_S = √Σσ².
    pub fn from_terms(inequality: Inequality, terms: Vec<Term>) -> Self {
        let s = terms.iter().map(|t| t.sign * t.correlation.value).sum::<f64>().abs();
        let sigma_s = terms.iter().map(|t| t.correlation.sigma.powi(2)).sum::<f64>().sqrt();
        let bound = inequality.bound();
        let violation_sigmas = if sigma_s > 0.0 {
            (s - bound) / sigma_s
        } else if s > bound {
            f64::INFINITY
        } else if s < bound {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        Self {
            name: inequality.name().into(),
            terms,
            s,
            sigma_s,
            bound,
            quantum_max: inequality.quantum_max(),
            genuine_threshold: matches!(inequality, Inequality::Mermin).then_some(2.0 * SQRT_2),
            other_variant_s: None,
            violation_sigmas,
        }
    }

    pub fn is_violated(&self) -> bool {
        self.s > self.bound
    }

    /// Term table `term,sign,E,sigma,N` followed by the S row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,sign,E,sigma,N\n");
        for t in &self.terms {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                t.label, t.sign, t.correlation.value, t.correlation.sigma, t.correlation.total
            )
            .unwrap();
        }
        let n: u64 = self.terms.iter().map(|t| t.correlation.total).sum();
        writeln!(out, "S,,{:.6},{:.6},{n}", self.s, self.sigma_s).unwrap();
        out
    }
}

fn x() -> MeasurementSetting {
    MeasurementSetting::x()
}

fn y() -> MeasurementSetting {
    MeasurementSetting::y()
}

impl Inequality {
    pub fn name(self) -> &'static str {
        match self {
            Inequality::Mermin => "mermin",
            Inequality::Svetlichny => "svetlichny",
            Inequality::Chsh(_) => "chsh",
        }
    }

    pub fn bound(self) -> f64 {
        match self {
            Inequality::Mermin | Inequality::Chsh(_) => 2.0,
            Inequality::Svetlichny => 4.0,
        }
    }

    pub fn quantum_max(self) -> f64 {
        match self {
            Inequality::Mermin => 4.0,
            Inequality::Svetlichny => 4.0 * SQRT_2,
            Inequality::Chsh(_) => 2.0 * SQRT_2,
        }
    }

    pub fn n_qubits(self) -> usize {
        match self {
            Inequality::Chsh(_) => 2,
            _ => 3,
        }
    }

    pub fn terms(self) -> Vec<TermSpec> {
        let t = |label, settings, sign| TermSpec { label, settings, sign };
        match self {
            Inequality::Mermin => vec![
                t("E(a,b,c)", Settings::triple(x(), x(), x()), -1.0),
                t("E(a,b',c')", Settings::triple(x(), y(), y()), 1.0),
                t("E(a',b,c')", Settings::triple(y(), x(), y()), 1.0),
                t("E(a',b',c)", Settings::triple(y(), y(), x()), 1.0),
            ],
            Inequality::Svetlichny => {
                let c = MeasurementSetting::combination(Axis::X, 1.0, Axis::Y, -1.0);
                let c2 = MeasurementSetting::combination(Axis::X, 1.0, Axis::Y, 1.0);
                vec![
                    t("E(a,b,c)", Settings::triple(x(), x(), c), 1.0),
                    t("E(a,b,c')", Settings::triple(x(), x(), c2), 1.0),
                    t("E(a,b',c)", Settings::triple(x(), y(), c), 1.0),
                    t("E(a,b',c')", Settings::triple(x(), y(), c2), -1.0),
                    t("E(a',b,c)", Settings::triple(y(), x(), c), 1.0),
                    t("E(a',b,c')", Settings::triple(y(), x(), c2), -1.0),
                    t("E(a',b',c)", Settings::triple(y(), y(), c), -1.0),
                    t("E(a',b',c')", Settings::triple(y(), y(), c2), -1.0),
                ]
            }
            Inequality::Chsh(variant) => {
                let (a, a2) = (MeasurementSetting::z(), x());
                let b = MeasurementSetting::combination(Axis::Z, 1.0, Axis::X, 1.0);
                let b2 = MeasurementSetting::combination(Axis::X, 1.0, Axis::Z, -1.0);
                let s = variant.sign();
                vec![
                    t("E(a,b)", Settings::pair(a, b), 1.0),
                    t("E(a,b')", Settings::pair(a, b2), -1.0),
                    t("E(a',b)", Settings::pair(a2, b), s),
                    t("E(a',b')", Settings::pair(a2, b2), s),
                ]
            }
        }
    }

    /// Evaluates from count tables. Tables may come in any order; tables of
    /// the same setting are pooled and unrelated tables ignored.
    pub fn evaluate(self, tables: &[CountTable]) -> Result<InequalityResult> {
        let correlations = self
            .terms()
            .iter()
            .map(|spec| {
                let mut pooled: Option<CountTable> = None;
                for t in tables.iter().filter(|t| t.settings.approx_eq(&spec.settings)) {
                    match pooled.as_mut() {
                        Some(p) => p.merge(t)?,
                        None => pooled = Some(t.clone()),
                    }
                }
                let table =
                    pooled.ok_or_else(|| Error::MissingSetting(format!("{} ({})", spec.label, spec.settings)))?;
                correlation_from_counts(&table)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(correlations))
    }

    /// Evaluates from given correlations, in the order of [`Inequality::terms`].
    pub fn from_correlations(self, correlations: &[Correlation]) -> Result<InequalityResult> {
        let n = self.terms().len();
        if correlations.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: correlations.len(),
            });
        }
        Ok(self.combine(correlations.to_vec()))
    }

    /// Evaluates from Pauli tomography data, expanding each term over the
    /// Pauli correlations it is built from.
    pub fn evaluate_from_paulis(self, data: &TomographyDataset) -> Result<InequalityResult> {
        let correlations = self
            .terms()
            .iter()
            .map(|spec| derived_correlation(data, &spec.settings))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(correlations))
    }

    /// Evaluates on exact Born probabilities of `rho`; uncertainties are zero.
    pub fn evaluate_exact(self, rho: &DensityMatrix) -> Result<InequalityResult> {
        let correlations = self
            .terms()
            .iter()
            .map(|spec| {
                let p = outcome_probabilities(rho, &spec.settings)?;
                Ok(Correlation {
                    value: correlation_from_probabilities(&p),
                    sigma: 0.0,
                    total: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(correlations))
    }

    fn combine(self, correlations: Vec<Correlation>) -> InequalityResult {
        let specs = self.terms();
        let terms: Vec<Term> = specs
            .iter()
            .zip(&correlations)
            .map(|(spec, c)| Term {
                label: spec.label.into(),
                sign: spec.sign,
                correlation: *c,
            })
            .collect();
        let mut result = InequalityResult::from_terms(self, terms);
        if let Inequality::Chsh(variant) = self {
            let other = Inequality::Chsh(variant.other()).terms();
            let s: f64 = other.iter().zip(&correlations).map(|(t, c)| t.sign * c.value).sum();
            result.other_variant_s = Some(s.abs());
        }
        result
    }
}

pub fn mermin(tables: &[CountTable]) -> Result<InequalityResult> {
    Inequality::Mermin.evaluate(tables)
}

pub fn svetlichny(tables: &[CountTable]) -> Result<InequalityResult> {
    Inequality::Svetlichny.evaluate(tables)
}

pub fn chsh(tables: &[CountTable], variant: ChshVariant) -> Result<InequalityResult> {
    Inequality::Chsh(variant).evaluate(tables)
}
