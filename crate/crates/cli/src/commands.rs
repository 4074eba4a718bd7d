use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cascade::analysis::{
    beta_sweep, fit_sinusoid, BetaPoint, ChshVariant, HeraldReport, Inequality, InequalityResult, ScanPoint,
    SinusoidFit, SweepOptions,
};
use cascade::coincidence::{delay_calibrate, Snr};
use cascade::config::Config;
use cascade::experiment::{
    herald_report, herald_settings, herald_state, run_herald, run_heralding_efficiency, run_histogram, run_phase_scan,
    run_svetlichny, state_of, stream_histograms, tomography_report, Acquirer, Block, HeraldRunReport, ReferenceRuns,
};
use cascade::measurement::{
    correlation_from_probabilities, outcome_probabilities, tomography_settings, CountTable, MeasurementSetting,
    Settings,
};
use cascade::qcore::io::write_density_matrix;
use cascade::qcore::Axis;
use cascade::statemodel::{make_ghz, noisy_ghz, optimal_compensation, visibility_vs_mismatch, GhzParams};
use cascade::timetag::{read_stream, write_stream, ExperimentConfig, RunRecord, StateDescriptor};
use cascade::tomography::{bootstrap, mle_reconstruct, write_dataset, BootstrapSummary, MleOptions, TomographyDataset};
use cascade::{Error, Result};

use crate::input::{self, Records, RECORDS};
use crate::output::{choose_dir, Output};
use crate::{Cli, Command, InequalityName, Variant};

/// Detected triples of the delay-calibration run preceding each simulation.
const CALIBRATION_TRIPLES: f64 = 2000.0;

struct Ctx<'a> {
    config: &'a Config,
    paper_exact: bool,
    runs: ReferenceRuns,
}

impl Ctx<'_> {
    fn mle(&self) -> MleOptions {
        MleOptions {
            max_iter: self.config.run.mle_max_iter,
            ..MleOptions::default()
        }
    }

    fn acquirer(&self, experiment: &ExperimentConfig, state: StateDescriptor) -> Result<Acquirer> {
        let mut acq = Acquirer::new(experiment.clone(), state, self.config.coincidence.clone())?;
        acq.calibrate(CALIBRATION_TRIPLES)?;
        Ok(acq)
    }
}

fn pipeline(command: &Command) -> &'static str {
    match command {
        Command::Simulate { .. } => "simulate",
        Command::Histogram { .. } => "histogram",
        Command::PhaseScan { .. } => "phase-scan",
        Command::Tomo { .. } => "tomo",
        Command::Inequality { .. } => "inequality",
        Command::Herald { .. } => "herald",
        Command::Dispersion { .. } => "dispersion",
        Command::Report => "report",
    }
}

pub fn run(cli: &Cli) -> Result<PathBuf> {
    let g = &cli.global;
    let mut config = match &g.config {
        Some(path) => Config::load(path)?,
        None => Config::reference(),
    };
    if let Some(seed) = g.seed {
        config.experiment.seed = seed;
    }
    let name = pipeline(&cli.command);
    let mut out = Output::create(choose_dir(g.out.as_deref(), name, &config, g.force)?)?;
    let ctx = Ctx {
        config: &config,
        paper_exact: g.paper_exact,
        runs: ReferenceRuns::new(&config, g.paper_exact),
    };
    match &cli.command {
        Command::Simulate { settings, balance } => simulate(&ctx, &mut out, settings, *balance)?,
        Command::Histogram { input, duration } => histogram(&ctx, &mut out, input.as_deref(), *duration)?,
        Command::PhaseScan { points, phases, exact } => phase_scan(&ctx, &mut out, *points, phases, *exact)?,
        Command::Tomo { input, bootstrap } => tomo(&ctx, &mut out, input.as_deref(), *bootstrap)?,
        Command::Inequality { name, input, variant } => inequality(&ctx, &mut out, *name, input.as_deref(), *variant)?,
        Command::Herald { input, mode, betas } => herald(&ctx, &mut out, input.as_deref(), *mode, betas)?,
        Command::Dispersion {
            min,
            max,
            points,
            mismatch,
        } => dispersion(&ctx, &mut out, *min, *max, *points, *mismatch)?,
        Command::Report => report(&ctx, &mut out)?,
    }
    out.finish(&config, g.config.as_deref(), name, g.paper_exact)
}

fn parse_paulis(spec: &str) -> Result<Vec<Settings>> {
    spec.split(',')
        .map(|word| {
            let axes = word
                .trim()
                .chars()
                .map(|c| match c.to_ascii_lowercase() {
                    'x' => Ok(Axis::X),
                    'y' => Ok(Axis::Y),
                    'z' => Ok(Axis::Z),
                    _ => Err(Error::Config(format!("unknown setting `{word}`; expected e.g. `xyy`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if axes.len() != 3 {
                return Err(Error::Config(format!("setting `{word}` needs one axis per photon")));
            }
            Ok(Settings::paulis(&axes))
        })
        .collect()
}

fn inequality_settings(inequality: Inequality) -> Vec<Settings> {
    inequality.terms().into_iter().map(|t| t.settings).collect()
}

fn simulate(ctx: &Ctx, out: &mut Output, spec: &str, balance: bool) -> Result<()> {
    let runs = &ctx.runs;
    let source = state_of(ctx.config);
    let (settings, experiment, state, block) = match spec {
        "tomography" => (tomography_settings(3)?, &runs.tomography, source, Block::Tomography),
        "mermin" => (
            inequality_settings(Inequality::Mermin),
            &runs.tomography,
            source,
            Block::Tomography,
        ),
        "svetlichny" => (
            inequality_settings(Inequality::Svetlichny),
            &runs.svetlichny,
            source,
            Block::Svetlichny,
        ),
        "herald" => (
            herald_settings(1)?,
            &runs.herald,
            herald_state(ctx.config.noise),
            Block::Herald,
        ),
        list => (parse_paulis(list)?, &runs.tomography, source, Block::Tomography),
    };
    let mut acq = Acquirer::new(experiment.clone(), state, ctx.config.coincidence.clone())?;
    acq.balance = balance;
    acq.keep_streams = true;

    let calibration = "streams/calibration.bin".to_string();
    let path = out.path(&calibration);
    std::fs::create_dir_all(path.parent().expect("has parent"))?;
    let run = acq.calibration_run(CALIBRATION_TRIPLES)?;
    write_stream(&run.stream, &path)?;
    acq.params.delay_correction = delay_calibrate(&run.stream, &acq.params)?;

    let results = acq.acquire_all(&settings, block)?;
    let mut records = Vec::new();
    for (i, r) in results.iter().enumerate() {
        for s in &r.runs {
            let name = if balance {
                format!("streams/setting_{i:02}_m{}.bin", s.record.relabel_mask)
            } else {
                format!("streams/setting_{i:02}.bin")
            };
            write_stream(&s.run.stream, &out.path(&name))?;
            records.push(RunRecord {
                stream: Some(name),
                ..s.record.clone()
            });
        }
    }
    out.write_toml(
        RECORDS,
        &Records {
            calibration,
            run: records,
        },
    )?;
    let tables: Vec<CountTable> = results.into_iter().map(|r| r.table).collect();
    // Complete Pauli sets double as a tomography dataset.
    match TomographyDataset::from_count_tables(&tables) {
        Ok(data) => write_dataset(&data, &out.path("counts"))?,
        Err(Error::IncompleteData(_)) => {}
        Err(e) => return Err(e),
    }
    let triples: u64 = tables.iter().map(CountTable::total).sum();
    println!(
        "{} settings, {triples} windowed triples, {} s per setting",
        tables.len(),
        experiment.duration
    );
    Ok(())
}

#[derive(Serialize)]
struct HistogramSummary {
    delays_ps: [f64; 6],
    snr: Snr,
    windowed_triples: usize,
    /// Simulated input only.
    recall: Option<f64>,
    complete_triplets: Option<usize>,
    raw_peak_bins: [i64; 2],
    calibrated_peak_bins: [i64; 2],
}

fn histogram(ctx: &Ctx, out: &mut Output, input: Option<&Path>, duration: f64) -> Result<()> {
    let params = &ctx.config.coincidence;
    let (raw, calibrated, summary) = match input {
        Some(path) => {
            let stream = read_stream(path)?;
            let tick = stream.tick_ps();
            let h = stream_histograms(&stream, params)?;
            let corrected = params.clone().with_delays(h.delays);
            let windowed = h.triples.iter().filter(|t| t.is_windowed(&corrected, tick)).count();
            let summary = HistogramSummary {
                delays_ps: h.delays,
                snr: h.snr,
                windowed_triples: windowed,
                recall: None,
                complete_triplets: None,
                raw_peak_bins: peak(&h.raw),
                calibrated_peak_bins: peak(&h.calibrated),
            };
            (h.raw, h.calibrated, summary)
        }
        None => {
            // Rates are never desk-scaled here: the peak-to-background ratio
            // depends on them.
            let experiment = ExperimentConfig {
                duration,
                ..ctx.config.experiment.clone()
            };
            let acq = Acquirer::new(experiment, state_of(ctx.config), params.clone())?;
            let h = run_histogram(&acq)?;
            let summary = HistogramSummary {
                delays_ps: h.delays,
                snr: h.snr,
                windowed_triples: h.windowed_triples,
                recall: Some(h.recall),
                complete_triplets: Some(h.complete_triplets),
                raw_peak_bins: peak(&h.raw),
                calibrated_peak_bins: peak(&h.calibrated),
            };
            (h.raw, h.calibrated, summary)
        }
    };
    out.write("histogram_raw.csv", raw.to_csv())?;
    out.write("histogram.csv", calibrated.to_csv())?;
    println!(
        "SNR {:.1}, {} windowed triples, delays {:?} ps",
        summary.snr.value, summary.windowed_triples, summary.delays_ps
    );
    out.write_toml("report.toml", &summary)
}

fn peak(h: &cascade::coincidence::Histogram2D) -> [i64; 2] {
    let (a, b, _) = h.argmax();
    [a, b]
}

#[derive(Serialize)]
struct ScanSummary {
    exact: bool,
    fit: SinusoidFit,
}

fn scan_csv(points: &[ScanPoint]) -> String {
    let mut s = String::from("phase_rad,E,sigma\n");
    for p in points {
        writeln!(s, "{:.6},{:.6},{:.6}", p.phase, p.value, p.sigma).unwrap();
    }
    s
}

fn phase_scan(ctx: &Ctx, out: &mut Output, n: usize, phases: &[f64], exact: bool) -> Result<()> {
    let phases: Vec<f64> = if phases.is_empty() {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    } else {
        phases.to_vec()
    };
    let (points, fit) = if exact {
        let x = MeasurementSetting::x();
        let xxx = Settings::triple(x, x, x);
        let points = phases
            .iter()
            .map(|&phase| {
                let rho = noisy_ghz(GhzParams::new(phase), &ctx.config.noise)?;
                Ok(ScanPoint {
                    phase,
                    value: correlation_from_probabilities(&outcome_probabilities(&rho, &xxx)?),
                    sigma: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fit = fit_sinusoid(&points)?;
        (points, fit)
    } else {
        let acq = ctx.acquirer(&ctx.runs.tomography, state_of(ctx.config))?;
        let scan = run_phase_scan(&acq, &phases)?;
        (scan.points, scan.fit)
    };
    out.write("phase_scan.csv", scan_csv(&points))?;
    println!(
        "amplitude {:.3} +- {:.3}, offset {:.3} rad{}",
        fit.amplitude,
        fit.amplitude_sigma,
        fit.phase_offset,
        if fit.significant { "" } else { " (not significant)" }
    );
    out.write_toml("report.toml", &ScanSummary { exact, fit })
}

fn load_or(ctx: &Ctx, input: Option<&Path>) -> Result<Option<input::Loaded>> {
    input.map(|p| input::load(p, &ctx.config.coincidence)).transpose()
}

#[derive(Serialize)]
struct TomoSummary {
    n_qubits: usize,
    total_counts: f64,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    purity: f64,
    /// Against the ideal GHZ state of `target_phase`; three qubits only.
    fidelity: Option<f64>,
    target_phase: Option<f64>,
    bootstrap: Option<BootstrapSummary>,
    mermin: Option<InequalityResult>,
}

fn tomo(ctx: &Ctx, out: &mut Output, input: Option<&Path>, resamples: Option<usize>) -> Result<()> {
    let (tables, phase) = match load_or(ctx, input)? {
        Some(l) => (l.tables, l.state.map_or(ctx.config.source.phase, |s| s.phase)),
        None => {
            let acq = ctx.acquirer(&ctx.runs.tomography, state_of(ctx.config))?;
            let results = acq.acquire_all(&tomography_settings(3)?, Block::Tomography)?;
            (results.into_iter().map(|r| r.table).collect(), ctx.config.source.phase)
        }
    };
    let data = TomographyDataset::from_count_tables(&tables)?;
    write_dataset(&data, &out.path("counts"))?;
    let n = data.n_qubits();
    let summary = if n == 3 {
        let r = tomography_report(tables, phase, &ctx.mle())?;
        out.write("rho.txt", write_density_matrix(&r.reconstruction.rho))?;
        out.write("mermin_terms.csv", r.mermin.to_csv())?;
        let resamples = resamples.unwrap_or(ctx.config.run.bootstrap_resamples);
        let boot = if resamples >= 2 {
            let target = make_ghz(GhzParams::new(phase));
            Some(bootstrap(
                &data,
                &target,
                resamples,
                ctx.config.experiment.seed,
                &ctx.mle(),
            )?)
        } else {
            None
        };
        println!(
            "{} triples, fidelity {:.3}, purity {:.3}, Mermin S = {:.2} +- {:.2}",
            r.total_triples, r.fidelity, r.reconstruction.purity, r.mermin.s, r.mermin.sigma_s
        );
        TomoSummary {
            n_qubits: n,
            total_counts: data.total(),
            log_likelihood: r.reconstruction.log_likelihood,
            iterations: r.reconstruction.iterations,
            converged: r.reconstruction.converged,
            purity: r.reconstruction.purity,
            fidelity: Some(r.fidelity),
            target_phase: Some(phase),
            bootstrap: boot,
            mermin: Some(r.mermin),
        }
    } else {
        let r = mle_reconstruct(&data, &ctx.mle())?.require_converged()?;
        out.write("rho.txt", write_density_matrix(&r.rho))?;
        println!("{n}-qubit state, purity {:.3}", r.purity);
        TomoSummary {
            n_qubits: n,
            total_counts: data.total(),
            log_likelihood: r.log_likelihood,
            iterations: r.iterations,
            converged: r.converged,
            purity: r.purity,
            fidelity: None,
            target_phase: None,
            bootstrap: None,
            mermin: None,
        }
    };
    out.write_toml("report.toml", &summary)
}

fn chsh_variant(v: Variant) -> ChshVariant {
    match v {
        Variant::Plus => ChshVariant::Plus,
        Variant::Minus => ChshVariant::Minus,
    }
}

/// CHSH from two-qubit tables: the CHSH settings themselves when present,
/// otherwise derived from Pauli data.
fn chsh_from_tables(tables: &[CountTable], variant: ChshVariant) -> Result<InequalityResult> {
    let inequality = Inequality::Chsh(variant);
    if tables.iter().any(|t| t.n_qubits() != 2) {
        return Err(Error::IncompleteData(
            "CHSH needs two-qubit tables; use `herald` for three-photon herald data".into(),
        ));
    }
    match inequality.evaluate(tables) {
        Err(Error::MissingSetting(_)) => {
            inequality.evaluate_from_paulis(&TomographyDataset::from_count_tables(tables)?)
        }
        r => r,
    }
}

fn inequality(ctx: &Ctx, out: &mut Output, name: InequalityName, input: Option<&Path>, variant: Variant) -> Result<()> {
    let loaded = load_or(ctx, input)?;
    let result = match (name, loaded) {
        (InequalityName::Mermin, Some(l)) => Inequality::Mermin.evaluate(&l.tables)?,
        (InequalityName::Svetlichny, Some(l)) => Inequality::Svetlichny.evaluate(&l.tables)?,
        (InequalityName::Chsh, Some(l)) => chsh_from_tables(&l.tables, chsh_variant(variant))?,
        (InequalityName::Mermin, None) => {
            let acq = ctx.acquirer(&ctx.runs.tomography, state_of(ctx.config))?;
            let settings = inequality_settings(Inequality::Mermin);
            let tables: Vec<CountTable> = acq
                .acquire_all(&settings, Block::Tomography)?
                .into_iter()
                .map(|r| r.table)
                .collect();
            Inequality::Mermin.evaluate(&tables)?
        }
        (InequalityName::Svetlichny, None) => {
            let acq = ctx.acquirer(&ctx.runs.svetlichny, state_of(ctx.config))?;
            run_svetlichny(&acq)?.1
        }
        (InequalityName::Chsh, None) => {
            let acq = ctx.acquirer(&ctx.runs.herald, herald_state(ctx.config.noise))?;
            let r = run_herald(&acq, 1, &ctx.mle())?;
            match variant {
                Variant::Plus => r.d.chsh,
                Variant::Minus => r.a.chsh,
            }
        }
    };
    out.write("terms.csv", result.to_csv())?;
    println!(
        "{}: S = {:.3} +- {:.3} (local bound {}, {:.1} sigma)",
        result.name, result.s, result.sigma_s, result.bound, result.violation_sigmas
    );
    out.write_toml("report.toml", &result)
}

#[derive(Serialize)]
struct HeraldedSummary {
    fidelity: f64,
    purity: f64,
    triples: u64,
    chsh: InequalityResult,
}

#[derive(Serialize)]
struct HeraldSummary {
    herald_mode: usize,
    total_triples: u64,
    d: HeraldedSummary,
    a: HeraldedSummary,
    mixed_coherence: f64,
    mixed_fidelity: f64,
    /// Simulated at the experiment's rates; absent for file input.
    efficiency: Option<HeraldReport>,
    sweep: Vec<BetaPoint>,
}

fn heralded_summary(h: &cascade::experiment::HeraldedTomography) -> HeraldedSummary {
    HeraldedSummary {
        fidelity: h.fidelity,
        purity: h.reconstruction.purity,
        triples: h.tables.iter().map(CountTable::total).sum(),
        chsh: h.chsh.clone(),
    }
}

fn table2_csv(r: &HeraldRunReport) -> String {
    let mut s = String::from("herald,term,sign,E,sigma,N\n");
    for (name, h) in [("D", &r.d), ("A", &r.a)] {
        for line in h.chsh.to_csv().lines().skip(1) {
            writeln!(s, "{name},{line}").unwrap();
        }
    }
    s
}

fn sweep_csv(points: &[BetaPoint]) -> String {
    let mut s = String::from("beta_rad,plus_fidelity,minus_fidelity,plus_probability,minus_probability\n");
    for p in points {
        writeln!(
            s,
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            p.beta, p.plus_fidelity, p.minus_fidelity, p.plus_probability, p.minus_probability
        )
        .unwrap();
    }
    s
}

/// Heralding efficiency at the experiment's rates, never desk-scaled.
fn efficiency(ctx: &Ctx) -> Result<HeraldReport> {
    let experiment = ReferenceRuns::new(ctx.config, true).herald;
    let acq = ctx.acquirer(&experiment, herald_state(ctx.config.noise))?;
    run_heralding_efficiency(&acq, &Default::default())
}

fn herald_outputs(
    ctx: &Ctx,
    out: &mut Output,
    r: &HeraldRunReport,
    mode: usize,
    efficiency: Option<HeraldReport>,
    betas: &[f64],
) -> Result<HeraldSummary> {
    out.write("rho_D.txt", write_density_matrix(&r.d.reconstruction.rho))?;
    out.write("rho_A.txt", write_density_matrix(&r.a.reconstruction.rho))?;
    out.write("rho_mixed.txt", write_density_matrix(&r.mixed.rho))?;
    out.write("table2.csv", table2_csv(r))?;
    let rho3 = noisy_ghz(GhzParams::new(ctx.config.source.phase), &ctx.config.noise)?;
    let options = SweepOptions {
        herald_mode: mode,
        ghz_phase: ctx.config.source.phase,
        ..SweepOptions::default()
    };
    let sweep = beta_sweep(&rho3, betas, &options)?;
    out.write("beta_sweep.csv", sweep_csv(&sweep))?;
    Ok(HeraldSummary {
        herald_mode: mode,
        total_triples: r.total_triples,
        d: heralded_summary(&r.d),
        a: heralded_summary(&r.a),
        mixed_coherence: r.mixed_coherence,
        mixed_fidelity: r.mixed_fidelity,
        efficiency,
        sweep,
    })
}

fn herald(ctx: &Ctx, out: &mut Output, input: Option<&Path>, mode: usize, betas: &[f64]) -> Result<()> {
    let (report, eff) = match load_or(ctx, input)? {
        Some(l) => {
            let phase = l.state.map_or(0.0, |s| s.phase);
            (herald_report(&l.tables, phase, mode, &ctx.mle())?, None)
        }
        None => {
            let acq = ctx.acquirer(&ctx.runs.herald, herald_state(ctx.config.noise))?;
            (run_herald(&acq, mode, &ctx.mle())?, Some(efficiency(ctx)?))
        }
    };
    let summary = herald_outputs(ctx, out, &report, mode, eff, betas)?;
    println!(
        "D: F = {:.3}, CHSH {:.2} +- {:.2}; A: F = {:.3}, CHSH {:.2} +- {:.2}; mixed |rho_03| = {:.3}",
        report.d.fidelity,
        report.d.chsh.s,
        report.d.chsh.sigma_s,
        report.a.fidelity,
        report.a.chsh.s,
        report.a.chsh.sigma_s,
        report.mixed_coherence
    );
    if let Some(e) = &summary.efficiency {
        println!(
            "heralding efficiency {:.2e}, conditioned {:.3}",
            e.heralding_efficiency, e.conditioned_efficiency
        );
    }
    out.write_toml("report.toml", &summary)
}

#[derive(Serialize)]
struct DispersionSummary {
    max_visibility: f64,
    mismatch_m: Option<f64>,
    best_added_length_m: Option<f64>,
    visibility_after: Option<f64>,
}

fn dispersion_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(min < max) {
        return Err(Error::Config(format!(
            "need min < max and at least 2 points, got [{min}, {max}] x {points}"
        )));
    }
    Ok((0..points)
        .map(|k| min + (max - min) * k as f64 / (points - 1) as f64)
        .collect())
}

fn dispersion_csv(ctx: &Ctx, grid: &[f64]) -> String {
    let mut s = String::from("dl_m,visibility\n");
    for &dl in grid {
        writeln!(s, "{dl:.6},{:.6}", visibility_vs_mismatch(dl, &ctx.config.dispersion)).unwrap();
    }
    s
}

fn dispersion(ctx: &Ctx, out: &mut Output, min: f64, max: f64, points: usize, mismatch: Option<f64>) -> Result<()> {
    let grid = dispersion_grid(min, max, points)?;
    out.write("dispersion.csv", dispersion_csv(ctx, &grid))?;
    let d = &ctx.config.dispersion;
    let best = mismatch.and_then(|m| optimal_compensation(m, &grid, d));
    let summary = DispersionSummary {
        max_visibility: visibility_vs_mismatch(0.0, d),
        mismatch_m: mismatch,
        best_added_length_m: best,
        visibility_after: mismatch.zip(best).map(|(m, b)| visibility_vs_mismatch(m - b, d)),
    };
    println!("V(0) = {:.3}", summary.max_visibility);
    if let Some(b) = best {
        println!("best added length {b:.3} m");
    }
    out.write_toml("report.toml", &summary)
}

#[derive(Serialize)]
struct FullReport {
    paper_exact: bool,
    tomography_triples: u64,
    ghz_fidelity: f64,
    ghz_purity: f64,
    mermin: InequalityResult,
    svetlichny: InequalityResult,
    phase_scan: SinusoidFit,
    histogram_snr: Snr,
    histogram_recall: f64,
    herald: HeraldSummary,
}

fn table1_csv(mermin: &InequalityResult, svetlichny: &InequalityResult) -> String {
    let mut s = String::from("test,term,sign,E,sigma,N\n");
    for r in [mermin, svetlichny] {
        for line in r.to_csv().lines().skip(1) {
            writeln!(s, "{},{line}", r.name).unwrap();
        }
    }
    s
}

fn report(ctx: &Ctx, out: &mut Output) -> Result<()> {
    let source = state_of(ctx.config);
    let acq = ctx.acquirer(&ctx.runs.tomography, source)?;
    let params = acq.params.clone();
    let tables: Vec<CountTable> = acq
        .acquire_all(&tomography_settings(3)?, Block::Tomography)?
        .into_iter()
        .map(|r| r.table)
        .collect();
    let tomo = tomography_report(tables, source.phase, &ctx.mle())?;
    out.write("rho_ghz.txt", write_density_matrix(&tomo.reconstruction.rho))?;

    let svet_acq = Acquirer::new(ctx.runs.svetlichny.clone(), source, params.clone())?;
    let (_, svetlichny) = run_svetlichny(&svet_acq)?;
    out.write("table1.csv", table1_csv(&tomo.mermin, &svetlichny))?;

    let phases: Vec<f64> = (0..12).map(|k| 2.0 * PI * k as f64 / 12.0).collect();
    let scan = run_phase_scan(&acq, &phases)?;
    out.write("phase_scan.csv", scan_csv(&scan.points))?;

    let hist_acq = Acquirer::new(
        ExperimentConfig {
            duration: 3600.0,
            ..ctx.config.experiment.clone()
        },
        source,
        params.clone(),
    )?;
    let hist = run_histogram(&hist_acq)?;
    out.write("histogram_raw.csv", hist.raw.to_csv())?;
    out.write("histogram.csv", hist.calibrated.to_csv())?;

    let herald_acq = Acquirer::new(ctx.runs.herald.clone(), herald_state(ctx.config.noise), params)?;
    let h = run_herald(&herald_acq, 1, &ctx.mle())?;
    let herald = herald_outputs(
        ctx,
        out,
        &h,
        1,
        Some(efficiency(ctx)?),
        &[std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_8, 0.0],
    )?;
    out.write("dispersion.csv", dispersion_csv(ctx, &dispersion_grid(-0.5, 0.5, 41)?))?;

    println!(
        "GHZ fidelity {:.3}, Mermin {:.2} +- {:.2}, Svetlichny {:.2} +- {:.2}, scan amplitude {:.2}, SNR {:.0}",
        tomo.fidelity,
        tomo.mermin.s,
        tomo.mermin.sigma_s,
        svetlichny.s,
        svetlichny.sigma_s,
        scan.fit.amplitude,
        hist.snr.value
    );
    out.write_toml(
        "report.toml",
        &FullReport {
            paper_exact: ctx.paper_exact,
            tomography_triples: tomo.total_triples,
            ghz_fidelity: tomo.fidelity,
            ghz_purity: tomo.reconstruction.purity,
            mermin: tomo.mermin,
            svetlichny,
            phase_scan: scan.fit,
            histogram_snr: hist.snr,
            histogram_recall: hist.recall,
            herald,
        },
    )
}
