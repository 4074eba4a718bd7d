//! End-to-end simulated experiments: time tags → coincidences → count
//! tables → reconstruction and inequality tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    fit_sinusoid, heralding_metrics, ChshVariant, HeraldChannels, HeraldReport, HeraldTruth, Inequality,
    InequalityResult, ScanPoint, SinusoidFit,
};
use crate::coincidence::{
    count_table, delay_calibrate, find_triples, snr, standard_regions, CoincidenceParams, Histogram2D, Snr, Triple,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::measurement::{
    balanced_subsettings, correlation_from_counts, tomography_settings, CountTable, MeasurementSetting, Relabeling,
    Settings,
};
use crate::qcore::{fidelity, DensityMatrix, Ket, C64, ZERO};
use crate::statemodel::{heralded_target, make_ghz, noisy_ghz, GhzParams, HeraldOutcome, HeraldSetting, NoiseModel};
use crate::timetag::{
    simulate_setting, ExperimentConfig, RunRecord, SimulatedRun, StateDescriptor, TagStream, N_CHANNELS,
};
use crate::tomography::{mle_reconstruct, MleOptions, ReconstructionResult, TomographyDataset};

/// Windowed triples of the three-qubit tomography.
pub const MEASURED_TOMOGRAPHY_TRIPLES: u64 = 4798;
/// Triples of the Mermin settings within the tomography.
pub const MEASURED_MERMIN_TRIPLES: u64 = 674;
/// Triples over the eight Svetlichny settings.
pub const MEASURED_SVETLICHNY_TRIPLES: f64 = 1960.0;
/// Triples of the heralded two-photon tomography, both herald outcomes.
pub const MEASURED_HERALD_TRIPLES: f64 = 1632.0;
pub const MEASURED_HERALDED_PER_HOUR: f64 = 450.0;

/// Random substream blocks, one per kind of run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Calibration = 0,
    Tomography = 1,
    Svetlichny = 2,
    Herald = 3,
    PhaseScan = 4,
    Histogram = 5,
    Efficiency = 6,
}

impl Block {
    pub fn base(self) -> u64 {
        (self as u64) << 40
    }
}

fn detected_rate(c: &ExperimentConfig) -> f64 {
    c.triplet_rate * c.eta1 * c.eta2 * c.eta3
}

/// Experiment configurations of the reported runs, derived from one
/// configuration's detector parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRuns {
    /// 27 Pauli settings; also the Mermin data and the phase scan.
    pub tomography: ExperimentConfig,
    /// Eight settings sharing the tomography's triplet rate.
    pub svetlichny: ExperimentConfig,
    /// Triplet rate giving 450 heralded pairs per hour; nine settings.
    pub herald: ExperimentConfig,
}

impl ReferenceRuns {
    pub fn new(config: &Config, paper_exact: bool) -> Self {
        let tomography = config.experiment.clone();
        let svetlichny = ExperimentConfig {
            duration: MEASURED_SVETLICHNY_TRIPLES / 8.0 / detected_rate(&tomography),
            ..tomography.clone()
        };
        let e = &tomography;
        let herald_rate = MEASURED_HERALDED_PER_HOUR / 3600.0 / (e.eta1 * e.eta2 * e.eta3);
        let herald = ExperimentConfig {
            triplet_rate: herald_rate,
            duration: MEASURED_HERALD_TRIPLES / 9.0 / (MEASURED_HERALDED_PER_HOUR / 3600.0),
            ..tomography.clone()
        };
        let scale = |mut c: ExperimentConfig| {
            if !paper_exact {
                c.triplet_rate *= config.run.desk_speedup;
                c.duration /= config.run.desk_speedup;
            }
            c
        };
        Self {
            tomography: scale(tomography),
            svetlichny: scale(svetlichny),
            herald: scale(herald),
        }
    }
}

/// One simulated sub-run and what produced it.
#[derive(Debug, Clone)]
pub struct SimulatedSetting {
    pub record: RunRecord,
    pub run: SimulatedRun,
}

#[derive(Debug, Clone)]
pub struct SettingResult {
    /// Logical counts pooled over the balancing relabelings.
    pub table: CountTable,
    pub triplets_generated: u64,
    /// Raw runs, kept only when requested.
    pub runs: Vec<SimulatedSetting>,
}

/// Simulates settings through the whole acquisition chain.
#[derive(Debug, Clone)]
pub struct Acquirer {
    pub config: ExperimentConfig,
    pub state: StateDescriptor,
    pub params: CoincidenceParams,
    /// Split each setting over the 2ⁿ detector-output relabelings.
    pub balance: bool,
    pub keep_streams: bool,
    rho: DensityMatrix,
}

impl Acquirer {
    pub fn new(config: ExperimentConfig, state: StateDescriptor, params: CoincidenceParams) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        let rho = noisy_ghz(GhzParams::new(state.phase), &state.noise)?;
        Ok(Self {
            config,
            state,
            params,
            balance: true,
            keep_streams: false,
            rho,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// A σz run long enough for about `target_triples` detected triples.
    pub fn calibration_run(&self, target_triples: f64) -> Result<SimulatedRun> {
        let rate = detected_rate(&self.config);
        if !(rate > 0.0) {
            return Err(Error::NoPeak);
        }
        let config = ExperimentConfig {
            duration: target_triples / rate,
            ..self.config.clone()
        };
        let z = MeasurementSetting::z();
        simulate_setting(
            &config,
            &self.rho,
            &Settings::triple(z, z, z),
            Block::Calibration.base(),
        )
    }

    /// Sets the delay corrections from a dedicated calibration run.
    pub fn calibrate(&mut self, target_triples: f64) -> Result<[f64; N_CHANNELS]> {
        let run = self.calibration_run(target_triples)?;
        let delays = delay_calibrate(&run.stream, &self.params)?;
        self.params.delay_correction = delays;
        Ok(delays)
    }

    /// Simulates one logical setting. Sub-run `m` of setting `index` draws
    /// from substream `block + 8·index + m`.
    pub fn acquire(&self, logical: &Settings, block: Block, index: u64) -> Result<SettingResult> {
        let relabelings = if self.balance {
            balanced_subsettings(logical)
        } else {
            vec![Relabeling::IDENTITY]
        };
        let sub = ExperimentConfig {
            duration: self.config.duration / relabelings.len() as f64,
            ..self.config.clone()
        };
        let mut table = CountTable::zeros(logical.clone());
        let mut triplets_generated = 0;
        let mut runs = Vec::new();
        for r in relabelings {
            let physical = r.physical_settings(logical);
            let setting_index = block.base() + 8 * index + r.mask as u64;
            let run = simulate_setting(&sub, &self.rho, &physical, setting_index)?;
            let triples = find_triples(&run.stream, &self.params)?;
            table.merge(&count_table(&triples, &self.params, run.stream.tick_ps(), logical, r))?;
            triplets_generated += run.n_triplets;
            if self.keep_streams {
                runs.push(SimulatedSetting {
                    record: RunRecord {
                        config: sub.clone(),
                        setting_index,
                        settings: logical.clone(),
                        relabel_mask: r.mask,
                        state: self.state,
                        stream: None,
                    },
                    run,
                });
            }
        }
        Ok(SettingResult {
            table,
            triplets_generated,
            runs,
        })
    }

    /// Simulates settings concurrently; setting `i` uses index `i`.
    pub fn acquire_all(&self, settings: &[Settings], block: Block) -> Result<Vec<SettingResult>> {
        settings
            .par_iter()
            .enumerate()
            .map(|(i, s)| self.acquire(s, block, i as u64))
            .collect()
    }
}

fn ghz_target(phase: f64) -> Ket {
    make_ghz(GhzParams::new(phase))
}

#[derive(Debug, Clone)]
pub struct TomographyReport {
    pub tables: Vec<CountTable>,
    pub total_triples: u64,
    pub reconstruction: ReconstructionResult,
    pub fidelity: f64,
    pub mermin: InequalityResult,
}

/// Three-qubit tomography over the 27 Pauli settings. The Mermin test uses
/// four of the same tables.
pub fn run_tomography(acq: &Acquirer, mle: &MleOptions) -> Result<TomographyReport> {
    let settings = tomography_settings(3)?;
    let tables: Vec<CountTable> = acq
        .acquire_all(&settings, Block::Tomography)?
        .into_iter()
        .map(|r| r.table)
        .collect();
    tomography_report(tables, acq.state.phase, mle)
}

/// Reconstruction, fidelity with the ideal GHZ state of `phase` and the
/// Mermin test from 27 Pauli tables.
pub fn tomography_report(tables: Vec<CountTable>, phase: f64, mle: &MleOptions) -> Result<TomographyReport> {
    let data = TomographyDataset::from_count_tables(&tables)?;
    let reconstruction = mle_reconstruct(&data, mle)?.require_converged()?;
    let fidelity = reconstruction.fidelity(&ghz_target(phase))?;
    let mermin = Inequality::Mermin.evaluate(&tables)?;
    Ok(TomographyReport {
        total_triples: tables.iter().map(CountTable::total).sum(),
        tables,
        reconstruction,
        fidelity,
        mermin,
    })
}

pub fn run_svetlichny(acq: &Acquirer) -> Result<(Vec<CountTable>, InequalityResult)> {
    let settings: Vec<Settings> = Inequality::Svetlichny.terms().into_iter().map(|t| t.settings).collect();
    let tables: Vec<CountTable> = acq
        .acquire_all(&settings, Block::Svetlichny)?
        .into_iter()
        .map(|r| r.table)
        .collect();
    let result = Inequality::Svetlichny.evaluate(&tables)?;
    Ok((tables, result))
}

/// Heralded two-photon state of one herald outcome.
#[derive(Debug, Clone)]
pub struct HeraldedTomography {
    pub outcome: HeraldOutcome,
    pub tables: Vec<CountTable>,
    pub reconstruction: ReconstructionResult,
    /// Fidelity with the ideal heralded Bell state.
    pub fidelity: f64,
    pub chsh: InequalityResult,
}

#[derive(Debug, Clone)]
pub struct HeraldRunReport {
    pub d: HeraldedTomography,
    pub a: HeraldedTomography,
    /// Both outcomes pooled, i.e. the herald result ignored.
    pub mixed: ReconstructionResult,
    /// |⟨HH|ρ|VV⟩| of the pooled reconstruction.
    pub mixed_coherence: f64,
    /// Fidelity of the pooled reconstruction with ½(|HH⟩⟨HH| + |VV⟩⟨VV|).
    pub mixed_fidelity: f64,
    pub total_triples: u64,
}

/// The herald photon (`herald_mode`) is measured in the diagonal basis while
/// the other two photons go through two-qubit Pauli tomography.
pub fn herald_settings(herald_mode: usize) -> Result<Vec<Settings>> {
    if herald_mode > 2 {
        return Err(Error::InvalidSubsystem {
            index: herald_mode,
            n_qubits: 3,
        });
    }
    tomography_settings(2)?
        .iter()
        .map(|p| {
            let mut v: Vec<MeasurementSetting> = p.iter().copied().collect();
            v.insert(herald_mode, MeasurementSetting::x());
            Settings::new(v)
        })
        .collect()
}

pub fn run_herald(acq: &Acquirer, herald_mode: usize, mle: &MleOptions) -> Result<HeraldRunReport> {
    let settings = herald_settings(herald_mode)?;
    let tables: Vec<CountTable> = acq
        .acquire_all(&settings, Block::Herald)?
        .into_iter()
        .map(|r| r.table)
        .collect();
    herald_report(&tables, acq.state.phase, herald_mode, mle)
}

/// Splits three-qubit herald tables on the herald outcome. A |D⟩ herald
/// (plus outcome) is scored against the ideal heralded state and with the
/// plus CHSH variant, |A⟩ with the minus variant. CHSH correlations are
/// derived from the Pauli data.
pub fn herald_report(
    tables: &[CountTable],
    ghz_phase: f64,
    herald_mode: usize,
    mle: &MleOptions,
) -> Result<HeraldRunReport> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for t in tables {
        let (p, m) = t.split_on(herald_mode)?;
        plus.push(p);
        minus.push(m);
    }
    let total_triples = tables.iter().map(CountTable::total).sum();
    let heralded = |outcome, tables: Vec<CountTable>, variant| -> Result<HeraldedTomography> {
        let data = TomographyDataset::from_count_tables(&tables)?;
        let reconstruction = mle_reconstruct(&data, mle)?.require_converged()?;
        let setting = HeraldSetting::new(std::f64::consts::FRAC_PI_4, outcome)?;
        let fidelity = reconstruction.fidelity(&heralded_target(ghz_phase, setting))?;
        let chsh = Inequality::Chsh(variant).evaluate_from_paulis(&data)?;
        Ok(HeraldedTomography {
            outcome,
            tables,
            reconstruction,
            fidelity,
            chsh,
        })
    };
    let d = heralded(HeraldOutcome::Plus, plus, ChshVariant::Plus)?;
    let a = heralded(HeraldOutcome::Minus, minus, ChshVariant::Minus)?;
    let pooled =
        TomographyDataset::from_count_tables(&d.tables)?.merged(&TomographyDataset::from_count_tables(&a.tables)?)?;
    let mixed = mle_reconstruct(&pooled, mle)?.require_converged()?;
    let mixed_coherence = mixed.rho.get(0, 3).norm();
    let half = C64::new(0.5, 0.0);
    let target = DensityMatrix::new(crate::qcore::ComplexMatrix::diagonal(&[half, ZERO, ZERO, half]))?;
    let mixed_fidelity = fidelity(&mixed.rho, &target)?;
    Ok(HeraldRunReport {
        d,
        a,
        mixed,
        mixed_coherence,
        mixed_fidelity,
        total_triples,
    })
}

/// Heralding efficiency from one simulated run with the herald photon
/// measured in the diagonal basis, using simulation ground truth for the
/// conditioned efficiency.
pub fn run_heralding_efficiency(acq: &Acquirer, channels: &HeraldChannels) -> Result<HeraldReport> {
    let x = MeasurementSetting::x();
    let run = simulate_setting(
        &acq.config,
        acq.rho(),
        &Settings::triple(x, x, x),
        Block::Efficiency.base(),
    )?;
    heralding_metrics(
        &run.stream,
        &acq.params,
        channels,
        acq.config.duration,
        HeraldTruth::Labels(&run.origins),
    )
}

#[derive(Debug, Clone)]
pub struct PhaseScan {
    pub points: Vec<ScanPoint>,
    pub fit: SinusoidFit,
}

/// E(σx,σx,σx) measured at each source phase with the acquirer's detector
/// settings and noise, then fitted with A cos(φ + θ).
pub fn run_phase_scan(acq: &Acquirer, phases: &[f64]) -> Result<PhaseScan> {
    let x = MeasurementSetting::x();
    let xxx = Settings::triple(x, x, x);
    let points = phases
        .par_iter()
        .enumerate()
        .map(|(i, &phase)| {
            let state = StateDescriptor { phase, ..acq.state };
            let mut point = Acquirer::new(acq.config.clone(), state, acq.params.clone())?;
            point.balance = acq.balance;
            let table = point.acquire(&xxx, Block::PhaseScan, i as u64)?.table;
            let c = correlation_from_counts(&table)?;
            Ok(ScanPoint {
                phase,
                value: c.value,
                sigma: c.sigma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_sinusoid(&points)?;
    Ok(PhaseScan { points, fit })
}

#[derive(Debug, Clone)]
pub struct HistogramReport {
    /// Without delay correction.
    pub raw: Histogram2D,
    /// With the calibrated delays.
    pub calibrated: Histogram2D,
    pub delays: [f64; N_CHANNELS],
    pub snr: Snr,
    /// Fraction of fully detected triplets recovered as windowed triples.
    pub recall: f64,
    pub complete_triplets: usize,
    pub windowed_triples: usize,
}

/// One σz setting: time-difference histograms before and after delay
/// calibration, the peak-to-background ratio and the recall of triplets
/// whose three photons were all detected.
pub fn run_histogram(acq: &Acquirer) -> Result<HistogramReport> {
    let z = MeasurementSetting::z();
    let run = simulate_setting(
        &acq.config,
        acq.rho(),
        &Settings::triple(z, z, z),
        Block::Histogram.base(),
    )?;
    histogram_report(&run, &acq.params)
}

/// Time-difference histograms of one stream before and after delay
/// calibration, with the peak-to-background ratio of the calibrated one.
#[derive(Debug, Clone)]
pub struct StreamHistograms {
    pub raw: Histogram2D,
    pub calibrated: Histogram2D,
    pub delays: [f64; N_CHANNELS],
    pub snr: Snr,
    /// Triples found with the calibrated delays.
    pub triples: Vec<Triple>,
}

pub fn stream_histograms(stream: &TagStream, params: &CoincidenceParams) -> Result<StreamHistograms> {
    let tick_ps = stream.tick_ps();
    let uncorrected = CoincidenceParams {
        delay_correction: [0.0; N_CHANNELS],
        ..params.clone()
    };
    let raw = Histogram2D::from_triples(&find_triples(stream, &uncorrected)?, &uncorrected, tick_ps);
    let delays = delay_calibrate(stream, params)?;
    let corrected = params.clone().with_delays(delays);
    let triples = find_triples(stream, &corrected)?;
    let calibrated = Histogram2D::from_triples(&triples, &corrected, tick_ps);
    let (peak, background) = standard_regions(&calibrated, (0, 0), tick_ps);
    let snr = snr(&calibrated, &peak, &background)?;
    Ok(StreamHistograms {
        raw,
        calibrated,
        delays,
        snr,
        triples,
    })
}

pub fn histogram_report(run: &SimulatedRun, params: &CoincidenceParams) -> Result<HistogramReport> {
    let tick_ps = run.stream.tick_ps();
    let StreamHistograms {
        raw,
        calibrated,
        delays,
        snr,
        triples,
    } = stream_histograms(&run.stream, params)?;
    let corrected = params.clone().with_delays(delays);
    let windowed: std::collections::HashSet<[usize; 3]> = triples
        .iter()
        .filter(|t| t.is_windowed(&corrected, tick_ps))
        .map(|t| t.indices)
        .collect();
    let complete = run.complete_triplets();
    let found = complete.iter().filter(|c| windowed.contains(*c)).count();
    let recall = if complete.is_empty() {
        1.0
    } else {
        found as f64 / complete.len() as f64
    };
    Ok(HistogramReport {
        raw,
        calibrated,
        delays,
        snr,
        recall,
        complete_triplets: complete.len(),
        windowed_triples: windowed.len(),
    })
}

/// Source state of a configuration.
pub fn state_of(config: &Config) -> StateDescriptor {
    StateDescriptor {
        phase: config.source.phase,
        noise: config.noise,
    }
}

/// The herald runs use a GHZ⁺ source.
pub fn herald_state(noise: NoiseModel) -> StateDescriptor {
    StateDescriptor { phase: 0.0, noise }
}
