use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use xjunction::compiler::{
    compile_individual_address_from, compile_reorder, net_permutation, totals, validate_sequence,
    CompileError, PrimitiveLibrary, SequenceDoc, ShuttleSequence,
};
use xjunction::constants::{BE9_MASS, ELEMENTARY_CHARGE};
use xjunction::dynamics::{
    check_table, row_sequence, simulate_sequence, two_ion_normal_modes, CoveredStep, ExcitationLedgerConfig, LedgerError, ModeLabel,
    MotionalState, OccupationDistribution, PhaseSources,
};
use xjunction::exec::Execution;
use xjunction::thermometry::{
    compare_distributions, expansion, fit as run_fit, initial_guess, synthesize_dataset, Crystal, DatasetError, FitError,
    FitOptions, FitResult, FlopModelParams, ParamId, Sampling, Sideband, SidebandDataset,
};
use xjunction::topology::{default_trap, parse_configuration, path_between, ZoneLabel};
use xjunction::waveform::{
    apply_filter, find_minimum, frequency_for_curvature, junction_well, minima_along, precompensate, separation_ramp,
    solve_voltages, weak_axis_frequency, well_rotation_ramp, write_waveform, curvature_for_frequency, ElectrodeBasis,
    FilterModel, PotentialConstraints, RampOptions, SeparationSpec, Shape, SolveOptions, Waveform, WaveformError,
    WellConstraint,
};
use xjunction::Uncertain;

use crate::args::{
    Cli, CrystalArg, DistributionArg, FitArgs, PlanArgs, PlanKind, RampArgs, SimulateArgs, SynthArgs, TopologyArgs,
    TopologyKind, WaveformArgs, WaveformKind,
};
use crate::{CliError, CliResult};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

/// JSON to `out`, or stdout.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult {
    let text = to_json(value);
    match out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_library(cli: &Cli) -> Result<PrimitiveLibrary, CliError> {
    PrimitiveLibrary::load(cli.table1.as_deref()).map_err(|e| match e {
        CompileError::Library(m) if m.contains("No such file") || m.contains("os error") => CliError::Io(m),
        other => CliError::Validation(other.to_string()),
    })
}

fn compile_err(e: CompileError) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn plan(cli: &Cli, args: &PlanArgs) -> CliResult {
    let lib = load_library(cli)?;
    let seq = match &args.kind {
        PlanKind::Reorder { ions } => {
            let &[a, b] = ions.as_slice() else {
                return Err(CliError::Validation(format!("reorder needs exactly two ions, got {}", ions.len())));
            };
            compile_reorder((a, b), &lib).map_err(compile_err)?
        }
        PlanKind::Address { target, ions } => {
            let &[i, j] = ions.as_slice() else {
                return Err(CliError::Validation(format!("address needs exactly two ions, got {}", ions.len())));
            };
            let start = parse_configuration(&format!("A_{i} B_{j}")).map_err(|e| CliError::Validation(e.to_string()))?;
            compile_individual_address_from(&start, *target, &lib).map_err(compile_err)?
        }
    };
    let report = validate_sequence(&seq);
    if !report.is_ok() {
        return Err(CliError::Validation(format!("compiled sequence is invalid: {report}")));
    }
    let doc = SequenceDoc::from_sequence(&seq);
    let t = totals(&seq);
    match &args.out {
        Some(p) => {
            emit(&doc, Some(p))?;
            println!("{}", doc.chain);
            println!("duration_us {}", t.duration_us);
            for (ion, d) in &t.distance_um {
                println!("distance_um {ion} {d}");
            }
            let perm = net_permutation(&seq);
            for (ion, pl) in &perm {
                println!("placement {ion} {}[{}] -> {}[{}]", pl.start.0, pl.start.1, pl.end.0, pl.end.1);
            }
            Ok(())
        }
        None => emit(&doc, None),
    }
}

fn parse_uncertain(s: &str) -> Result<Uncertain, CliError> {
    let bad = || CliError::Validation(format!("expected VALUE or VALUE:SIGMA, got {s:?}"));
    let (v, sg) = s.split_once(':').unwrap_or((s, "0"));
    Ok(Uncertain::new(v.trim().parse().map_err(|_| bad())?, sg.trim().parse().map_err(|_| bad())?))
}

fn parse_cover(s: &str) -> Result<CoveredStep, CliError> {
    match s.split_once(':') {
        None => Ok(CoveredStep { id: s.to_string(), reversed: false }),
        Some((id, "rev")) => Ok(CoveredStep { id: id.to_string(), reversed: true }),
        Some(_) => Err(CliError::Validation(format!("expected ID or ID:rev, got {s:?}"))),
    }
}

fn ledger_config(args: &SimulateArgs, lib: &PrimitiveLibrary, seq: &ShuttleSequence) -> Result<ExcitationLedgerConfig, CliError> {
    if let Some(p) = &args.config {
        return read_json(p);
    }
    let n_ions = seq.steps.first().map(|s| s.initial.ions().len()).unwrap_or(1);
    let prep = if n_ions >= 2 { &lib.preparation.two_ion } else { &lib.preparation.single_ion };
    let mut config = ExcitationLedgerConfig::with_baseline(MotionalState::thermal(prep.clone()));
    config.covered = args.cover.iter().map(|c| parse_cover(c)).collect::<Result<_, _>>()?;
    config.idle_heating_rate = args.idle_heating;
    if let Some(p) = &args.penalty {
        config.concatenation_penalty = parse_uncertain(p)?;
    }
    Ok(config)
}

fn summary_csv(report: &xjunction::dynamics::LedgerReport) -> String {
    let mut out = String::from("ion,mode,nbar,sigma,phase_rad\n");
    for (ion, modes) in &report.occupations {
        let phase = report.phase_rad.get(ion).copied().unwrap_or(0.0);
        for (mode, u) in modes {
            writeln!(out, "{ion},{mode},{},{},{phase}", u.value, u.sigma).unwrap();
        }
    }
    out
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> CliResult {
    let lib = load_library(cli)?;
    let graph = default_trap();
    lib.check_against(&graph).map_err(compile_err)?;
    let phases = match &args.phases {
        Some(p) => read_json(p)?,
        None => PhaseSources::none(),
    };
    let mut out = serde_json::Map::new();
    let mut failed = Vec::new();

    let seq = match (&args.seq, args.row) {
        (Some(p), _) => {
            let doc: SequenceDoc = read_json(p)?;
            Some(doc.resolve(&lib).map_err(compile_err)?)
        }
        (None, Some(r)) => {
            let row = lib.row(r).ok_or_else(|| CliError::Validation(format!("no table row {r}")))?;
            out.insert("row".into(), json!(r));
            Some(row_sequence(row, &lib).map_err(|e| CliError::Validation(e.to_string()))?)
        }
        (None, None) => None,
    };

    if let Some(seq) = &seq {
        let config = ledger_config(args, &lib, seq)?;
        match simulate_sequence(seq, &graph, &config, &phases) {
            Ok(report) => {
                if let Some(p) = &args.csv {
                    write_text(p, &summary_csv(&report))?;
                }
                out.insert("chain".into(), json!(seq.chain_string()));
                if seq.steps.is_empty() {
                    out.insert("baseline".into(), json!(config.baseline));
                }
                out.insert("report".into(), json!(report));
            }
            // A row whose baseline is another row's measurement carries
            // uncosted steps; its check below still applies.
            Err(LedgerError::Uncovered { .. }) if args.row.is_some() => {}
            Err(e @ LedgerError::Uncovered { .. }) => {
                return Err(CliError::Validation(format!("{e}; list baseline steps with --cover")))
            }
            Err(e) => return Err(CliError::Validation(e.to_string())),
        }
    }

    if args.check_table1 || args.row.is_some() {
        let checks = check_table(&lib, &graph).map_err(|e| CliError::Validation(e.to_string()))?;
        let checks: Vec<_> = checks.into_iter().filter(|c| args.row.is_none_or(|r| c.row == r)).collect();
        failed.extend(checks.iter().filter(|c| !c.passes()).map(|c| format!("row {} {}", c.row, c.mode)));
        out.insert("table_checks".into(), json!(checks));
        out.insert("all_pass".into(), json!(failed.is_empty()));
    }
    emit(&out, args.out.as_deref())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("table check failed: {}", failed.join(", "))))
    }
}

fn dataset_err(e: DatasetError) -> CliError {
    match e {
        DatasetError::Io { path, source } => io_err(&path, source),
        other => CliError::Validation(other.to_string()),
    }
}

fn parse_mode_values(items: &[String], bare: Option<ModeLabel>) -> Result<BTreeMap<ModeLabel, f64>, CliError> {
    let mut out = BTreeMap::new();
    for s in items {
        let (mode, value) = match s.split_once('=') {
            Some((m, v)) => (m.parse::<ModeLabel>().map_err(CliError::Validation)?, v),
            None => (bare.ok_or_else(|| CliError::Validation(format!("expected MODE=VALUE, got {s:?}")))?, s.as_str()),
        };
        let v: f64 = value.trim().parse().map_err(|_| CliError::Validation(format!("bad number in {s:?}")))?;
        out.insert(mode, v);
    }
    Ok(out)
}

fn fit_failure(e: FitError) -> (CliError, Option<FitResult>) {
    match e {
        FitError::Model(m) => (CliError::Validation(m.to_string()), None),
        FitError::NotConverged(best) => (CliError::Infeasible(format!("fit did not converge after {} iterations", best.iterations)), Some(*best)),
        FitError::Singular { directions, best } => {
            (CliError::Infeasible(format!("fit is degenerate along {directions:?}")), Some(*best))
        }
    }
}

fn residual_csv(datasets: &[SidebandDataset], r: &FitResult) -> Result<String, CliError> {
    let mut out = String::from("dataset,t_us,population,model,weighted_residual\n");
    for (k, ds) in datasets.iter().enumerate() {
        let model = expansion(&r.params, ds.crystal, ds.sideband).map_err(|e| CliError::Validation(e.to_string()))?;
        for (i, p) in ds.points.iter().enumerate() {
            let w = r.residuals.get(k).and_then(|v| v.get(i)).copied().unwrap_or(f64::NAN);
            writeln!(out, "{k},{},{},{},{w}", p.t * 1e6, p.population, model.eval(p.t, r.params.gamma)).unwrap();
        }
    }
    Ok(out)
}

pub fn fit(args: &FitArgs) -> CliResult {
    let datasets: Vec<SidebandDataset> =
        args.data.iter().map(|p| SidebandDataset::read(p)).collect::<Result<_, _>>().map_err(dataset_err)?;
    let mut eta = BTreeMap::new();
    for ds in &datasets {
        eta.extend(ds.eta.iter().map(|(m, v)| (*m, *v)));
    }
    eta.extend(parse_mode_values(&args.eta, None)?);
    for ds in &datasets {
        if !eta.contains_key(&ds.sideband.mode) {
            return Err(CliError::Validation(format!("no η for mode {}; pass --eta", ds.sideband.mode)));
        }
    }
    let user_nbar = parse_mode_values(&args.nbar, None)?;
    let placeholder = std::f64::consts::TAU * 100e3;
    let mut template = FlopModelParams {
        omega: args.omega_khz.map_or(placeholder, |k| std::f64::consts::TAU * k * 1e3),
        gamma: args.gamma,
        nbar: eta.keys().map(|m| (*m, 0.5)).collect(),
        eta,
        truncation: BTreeMap::new(),
        distribution: OccupationDistribution::Thermal,
    };
    let mut guess = initial_guess(&datasets, &template);
    if args.omega_khz.is_some() {
        guess.omega = template.omega;
    }
    for (m, v) in &user_nbar {
        guess.nbar.insert(*m, *v);
    }
    template = guess;

    let free: Vec<ParamId> = if args.free.is_empty() {
        let mut f = vec![ParamId::Omega, ParamId::Gamma];
        f.extend(template.nbar.keys().map(|m| ParamId::Nbar(*m)));
        f
    } else {
        args.free.iter().map(|s| s.parse().map_err(CliError::Validation)).collect::<Result<_, _>>()?
    };
    let options = FitOptions { max_iterations: args.max_iterations, ..FitOptions::default() };

    let (value, primary) = match args.distribution {
        DistributionArg::Thermal | DistributionArg::Coherent => {
            if args.distribution == DistributionArg::Coherent {
                template.distribution = OccupationDistribution::Coherent;
            }
            match run_fit(&datasets, &template, &free, &options) {
                Ok(r) => (json!(r), r),
                Err(e) => {
                    let (err, best) = fit_failure(e);
                    if let Some(b) = best {
                        emit(&json!({ "converged": false, "best": b }), args.out.as_deref())?;
                    }
                    return Err(err);
                }
            }
        }
        DistributionArg::Both => match compare_distributions(&datasets, &template, &free, &options) {
            Ok((t, c)) => {
                let dist = |r: &FitResult| (r.reduced_chi2 - 1.0).abs();
                let preferred = if dist(&t) <= dist(&c) { "thermal" } else { "coherent" };
                (json!({ "thermal": t, "coherent": c, "preferred": preferred }), t)
            }
            Err(e) => return Err(fit_failure(e).0),
        },
    };
    if let Some(p) = &args.residuals {
        write_text(p, &residual_csv(&datasets, &primary)?)?;
    }
    emit(&value, args.out.as_deref())
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let mode: ModeLabel = args.mode.parse().map_err(CliError::Validation)?;
    let crystal = match args.crystal {
        CrystalArg::OneIonOneMode => Crystal::OneIonOneMode,
        CrystalArg::OneIonTwoModes => Crystal::OneIonTwoModes,
        CrystalArg::TwoIonsSameSpecies => Crystal::TwoIonsSameSpecies,
    };
    if args.points == 0 || !(args.t_max_us >= 0.0) {
        return Err(CliError::Validation("need at least one point and t_max ≥ 0".into()));
    }
    let params = FlopModelParams {
        omega: std::f64::consts::TAU * args.omega_khz * 1e3,
        gamma: args.gamma,
        nbar: parse_mode_values(&args.nbar, Some(mode))?,
        eta: parse_mode_values(&args.eta, Some(mode))?,
        truncation: BTreeMap::new(),
        distribution: if args.coherent { OccupationDistribution::Coherent } else { OccupationDistribution::Thermal },
    };
    let times: Vec<f64> = (0..args.points)
        .map(|k| if args.points == 1 { 0.0 } else { args.t_max_us * 1e-6 * k as f64 / (args.points - 1) as f64 })
        .collect();
    let sampling = if args.analytic { Sampling::Analytic } else { Sampling::Binomial { seed: args.seed } };
    let sideband = Sideband { mode, kappa: args.kappa };
    let ds = synthesize_dataset(&params, crystal, sideband, &times, args.shots, sampling)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    ds.write(&args.out).map_err(dataset_err)
}

/// `310us`, `0.31ms`, `3.1e-4s`, `310 µs` → seconds.
pub fn parse_duration(s: &str) -> Result<f64, CliError> {
    let t = s.trim();
    let (num, scale) = [("µs", 1e-6), ("us", 1e-6), ("ms", 1e-3), ("ns", 1e-9), ("s", 1.0)]
        .iter()
        .find_map(|(u, k)| t.strip_suffix(u).map(|n| (n, *k)))
        .unwrap_or((t, 1.0));
    let v: f64 = num.trim().parse().map_err(|_| CliError::Validation(format!("bad duration {s:?}")))?;
    if !(v > 0.0) {
        return Err(CliError::Validation(format!("duration must be positive, got {s:?}")));
    }
    Ok(v * scale)
}

fn waveform_err(e: WaveformError) -> CliError {
    if e.is_infeasible() {
        CliError::Infeasible(e.to_string())
    } else {
        match e {
            WaveformError::Io(m) => CliError::Io(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn load_basis(path: Option<&Path>) -> Result<ElectrodeBasis, CliError> {
    match path {
        Some(p) => ElectrodeBasis::load(p).map_err(waveform_err),
        None => Ok(ElectrodeBasis::x_junction()),
    }
}

fn ramp_options(r: &RampArgs) -> Result<RampOptions, CliError> {
    Ok(RampOptions {
        steps: r.steps,
        duration_s: parse_duration(&r.duration)?,
        update_rate: r.rate,
        shape: if r.sine_squared { Shape::SineSquared } else { Shape::Linear },
        voltage_bound: r.bound,
        solve: SolveOptions::default(),
    })
}

/// Pre-compensate when a filter is given, then write CSV and header.
fn finish_waveform(w: Waveform, r: &RampArgs, summary: &mut serde_json::Map<String, serde_json::Value>) -> CliResult {
    let w = match r.filter_cutoff {
        Some(fc) => {
            let filter = FilterModel::new(fc, r.rate).map_err(waveform_err)?;
            let pre = precompensate(&w, &filter).map_err(waveform_err)?;
            let seen = apply_filter(&pre.waveform, &filter).map_err(waveform_err)?;
            let err = seen.samples.iter().flatten().zip(w.samples.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            summary.insert("filter".into(), json!({ "cutoff_hz": fc, "alpha": filter.alpha(), "clipped": pre.clipped.len(), "max_round_trip_error": err }));
            pre.waveform
        }
        None => w,
    };
    summary.insert("samples".into(), json!(w.len()));
    summary.insert("update_rate".into(), json!(w.update_rate));
    summary.insert("duration_us".into(), json!(w.duration_s() * 1e6));
    summary.insert("electrodes".into(), json!(w.electrodes.len()));
    write_waveform(&w, &r.out).map_err(waveform_err)
}

pub fn waveform(args: &WaveformArgs) -> CliResult {
    match &args.kind {
        WaveformKind::Separate { ramp, from_freq, to_freq, separation, bias, satellite_weight } => {
            let basis = load_basis(ramp.basis.as_deref())?;
            let center = [0.0, -710.0];
            let mut spec = SeparationSpec::symmetric(center, 0.0, *from_freq, *to_freq, separation / 2.0);
            spec.axial_bias = *bias;
            spec.satellite_weight = *satellite_weight;
            let opts = ramp_options(ramp)?;
            let r = separation_ramp(Execution::Parallel, &basis, &spec, &opts).map_err(waveform_err)?;
            let last = r.solutions.last().expect("at least one step");
            let minima: Vec<[f64; 2]> = minima_along(&basis, &last.voltages, center, [0.0, 1.0], separation * 1.2, 2.0)
                .into_iter()
                .map(|m| m.position)
                .collect();
            let mut summary = serde_json::Map::new();
            summary.insert("kind".into(), json!("separate"));
            summary.insert("schedule".into(), json!(r.steps));
            summary.insert("final_minima_um".into(), json!(minima));
            finish_waveform(r.waveform, ramp, &mut summary)?;
            emit(&summary, None)
        }
        WaveformKind::Rotate { ramp, from_deg, to_deg, weak_freq, transverse_freq, gap_threshold } => {
            let basis = load_basis(ramp.basis.as_deref())?;
            let well = junction_well(*weak_freq, *transverse_freq);
            let opts = ramp_options(ramp)?;
            let r = well_rotation_ramp(
                Execution::Parallel,
                &basis,
                &well,
                from_deg.to_radians(),
                to_deg.to_radians(),
                *gap_threshold,
                &opts,
            )
            .map_err(waveform_err)?;
            let mut summary = serde_json::Map::new();
            summary.insert("kind".into(), json!("rotate"));
            summary.insert("steps".into(), json!(r.steps));
            summary.insert("min_gap_hz".into(), json!(r.min_gap_hz));
            summary.insert("gap_flagged".into(), json!(r.flagged));
            finish_waveform(r.waveform, ramp, &mut summary)?;
            emit(&summary, None)
        }
        WaveformKind::Solve { position, freq, angle_deg, transverse_freq, quartic, bound, basis, out } => {
            let basis = load_basis(basis.as_deref())?;
            let &[x, z] = position.as_slice() else {
                return Err(CliError::Validation(format!("--position takes X,Z, got {} values", position.len())));
            };
            let p = [x, z];
            let mut well = WellConstraint::harmonic(p, *freq, angle_deg.to_radians());
            well.transverse_curvature = transverse_freq.map(|f| curvature_for_frequency(f, BE9_MASS, ELEMENTARY_CHARGE));
            well.quartic = *quartic;
            let constraints = PotentialConstraints { wells: vec![well], voltage_bound: *bound };
            let sol = solve_voltages(&basis, &constraints, SolveOptions::default()).map_err(waveform_err)?;
            let voltages: BTreeMap<String, f64> = basis.names().into_iter().zip(sol.voltages.iter().copied()).collect();
            let measured = find_minimum(&basis, &sol.voltages, p, 50.0).map(|m| {
                let f = m.curvatures.map(|c| frequency_for_curvature(c, basis.rf.mass_kg, ELEMENTARY_CHARGE));
                json!({
                    "position_um": m.position,
                    "frequencies_hz": f,
                    "weak_axis_hz": weak_axis_frequency(&basis, &sol.voltages, m.position),
                })
            });
            emit(
                &json!({ "voltages": voltages, "norm": sol.norm(), "constraints": sol.constraints, "at_bound": sol.at_bound, "measured": measured }),
                out.as_deref(),
            )
        }
        WaveformKind::Basis => {
            print!("{}", ElectrodeBasis::x_junction().to_json() + "\n");
            Ok(())
        }
    }
}

pub fn topology(args: &TopologyArgs) -> CliResult {
    let graph = default_trap();
    match &args.kind {
        TopologyKind::Show => {
            print!("{}\n", graph.to_json());
            Ok(())
        }
        TopologyKind::Path { from, to } => {
            let from: ZoneLabel = from.parse().map_err(CliError::Validation)?;
            let to: ZoneLabel = to.parse().map_err(CliError::Validation)?;
            let (path, len) = path_between(&graph, from, to).map_err(|e| CliError::Validation(e.to_string()))?;
            emit(&json!({ "path": path, "length_um": len }), None)
        }
        TopologyKind::Modes { freq_mhz } => {
            let (com, str_) = two_ion_normal_modes(*freq_mhz, (BE9_MASS, BE9_MASS)).map_err(|e| CliError::Validation(e.to_string()))?;
            emit(&json!({ "com": com, "str": str_, "ratio": str_.frequency_mhz / com.frequency_mhz }), None)
        }
    }
}
