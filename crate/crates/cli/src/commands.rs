use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pli_core::capacity::capacity_ebn0_db;
use pli_core::exit::{
    pexit_run, pli_exit_run, AnalysisKind, ExitSettings, MiTrajectory, ThresholdReport,
    ThresholdSearch,
};
use pli_core::lifting::{
    audit, degree_signature, lift_conventional, lift_pli, read_alist, remove_4_cycles, write_alist,
    PcmSidecar, Provenance, SparsePcm,
};
use pli_core::optimize::{
    derive_seed, optimize_multi_edge, optimize_single_edge_resumable, OptimizationBudget,
    OptimizationRecord,
};
use pli_core::protograph::{validate, EdgeIndex, PliProtograph, ProtographFile};
use pli_core::sim::{
    run_sweep, to_csv, DecoderConfig, SimPoint, StopRule, SweepConfig, CSV_HEADER,
};

use crate::manifest::{sha256_bytes, ManifestBuilder};
use crate::{AnalyzeArgs, CliError, LiftArgs, OptimizeArgs, PlotDataArgs, SimulateArgs};

type CliResult<T> = Result<T, CliError>;

/// Protograph read from disk with its display name.
struct Loaded {
    name: String,
    pli: PliProtograph,
}

fn load_protograph(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = ProtographFile::from_json(&text)
        .map_err(|e| CliError::Input(format!("{}: schema error: {e}", path.display())))?;
    let pli = file.to_pli().map_err(|e| CliError::core(path, e))?;
    let report = validate(&pli);
    if !report.is_valid() {
        return Err(CliError::Input(format!(
            "{}: invalid protograph:\n{report}",
            path.display()
        )));
    }
    let name = file.name.clone().unwrap_or_else(|| stem(path));
    Ok(Loaded { name, pli })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "code".into())
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

#[derive(Serialize)]
struct TrajectoryReport<'a> {
    code: &'a str,
    analysis: AnalysisKind,
    ebn0_db: f64,
    rate: f64,
    capacity_db: f64,
    trajectory: MiTrajectory,
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let Loaded { name, pli } = load_protograph(&args.protograph)?;
    let ctx = args.protograph.as_path();
    let exit = ExitSettings {
        max_iter: args.max_iter,
        conv_tol: args.conv_tol,
    };
    let rate = pli
        .design_rate()
        .map_err(|e| CliError::core(ctx, e))?
        .value();
    let capacity_db = capacity_ebn0_db(rate).map_err(|e| CliError::core(ctx, e))?;
    let mut manifest = ManifestBuilder::new("analyze", args);
    manifest.input(ctx).capacity(rate, capacity_db);
    let text = match args.ebn0 {
        Some(db) => {
            let analysis = AnalysisKind::for_protograph(&pli);
            let trajectory = match analysis {
                AnalysisKind::Pexit => pexit_run(pli.base(), db, &exit),
                AnalysisKind::PliExit => pli_exit_run(&pli, db, &exit),
            }
            .map_err(|e| CliError::core(ctx, e))?;
            eprintln!(
                "{name}: {} at {db} dB, converged {} after {} iterations",
                kind_label(analysis),
                trajectory.converged,
                trajectory.iterations.len()
            );
            to_json(&TrajectoryReport {
                code: &name,
                analysis,
                ebn0_db: db,
                rate,
                capacity_db,
                trajectory,
            })
        }
        None => {
            let search = ThresholdSearch {
                lo_db: args.lo,
                hi_db: args.hi,
                precision_db: args.precision,
                exit,
                expand_limit_db: args.expand_limit,
            };
            let report = ThresholdReport::compute(&name, &pli, &search)
                .map_err(|e| CliError::core(ctx, e))?;
            eprintln!(
                "{name}: {} threshold {:.4} dB, capacity {:.4} dB, gap {:.4} dB",
                kind_label(report.analysis),
                report.threshold_db,
                report.capacity_db,
                report.gap_to_capacity_db
            );
            to_json(&report)
        }
    };
    match &args.out {
        Some(out) => {
            write(out, &text)?;
            manifest.finish(&[out])
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn kind_label(kind: AnalysisKind) -> &'static str {
    match kind {
        AnalysisKind::Pexit => "PEXIT",
        AnalysisKind::PliExit => "PLI-EXIT",
    }
}

/// Parses a one-based `i,j` into a zero-based edge.
fn parse_edge(text: &str) -> CliResult<EdgeIndex> {
    let bad = || {
        CliError::Input(format!(
            "edge must look like `i,j` (one-based), got {text:?}"
        ))
    };
    let (i, j) = text.trim().split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

#[derive(Serialize)]
struct OptimizeReport {
    records: Vec<OptimizationRecord>,
    accepted_edges: Vec<(usize, usize)>,
    final_report: ThresholdReport,
}

pub fn optimize(args: &OptimizeArgs) -> CliResult<()> {
    let Loaded { name, pli } = load_protograph(&args.protograph)?;
    let ctx = args.protograph.as_path();
    let budget = OptimizationBudget {
        population: args.population,
        generations: args.generations,
        max_evaluations: args.max_evaluations,
        seed: args.seed,
        threshold_precision_db: args.precision,
        exit_max_iter: args.max_iter,
        conv_tol: args.conv_tol,
        d_max: args.d_max,
        mutation_sigma: args.mutation_sigma,
        insertion_rate: args.insertion_rate,
        max_sweeps: args.max_sweeps,
    };
    let mut manifest = ManifestBuilder::new("optimize", args);
    manifest.input(ctx).seed(args.seed);
    let (optimized, records, accepted) = match &args.edge {
        Some(edge) => {
            let edge = parse_edge(edge)?;
            if edge.0 >= pli.rows() || edge.1 >= pli.cols() {
                return Err(CliError::Input(format!(
                    "edge ({},{}) outside the {}x{} base matrix",
                    edge.0 + 1,
                    edge.1 + 1,
                    pli.rows(),
                    pli.cols()
                )));
            }
            let rec = optimize_single_edge_resumable(&pli, edge, &budget, args.log.as_deref())
                .map_err(|e| CliError::core(ctx, e))?;
            let improved = rec.best_threshold_db < rec.initial_threshold_db;
            let next = if improved {
                pli.with_dist(edge, rec.best())
                    .map_err(|e| CliError::core(ctx, e))?
            } else {
                pli.clone()
            };
            let accepted = if improved { vec![rec.edge] } else { Vec::new() };
            (next, vec![rec], accepted)
        }
        None => {
            let order = match &args.order {
                Some(text) => text
                    .split(';')
                    .map(parse_edge)
                    .collect::<CliResult<Vec<_>>>()?,
                None => pli.base().edges().collect(),
            };
            let result = optimize_multi_edge(&pli, &order, &budget, args.log.as_deref())
                .map_err(|e| CliError::core(ctx, e))?;
            let accepted = result.accepted.iter().map(|a| a.record.edge).collect();
            (result.protograph, result.records, accepted)
        }
    };
    let report = ThresholdReport::compute(&name, &optimized, &ThresholdSearch::default())
        .map_err(|e| CliError::core(ctx, e))?;
    manifest.capacity(report.rate, report.capacity_db);
    eprintln!(
        "{name}: optimized threshold {:.4} dB, gap to capacity {:.4} dB",
        report.threshold_db, report.gap_to_capacity_db
    );
    let out_text = ProtographFile::from_pli(&optimized, Some(name.clone()))
        .to_json()
        .map_err(|e| CliError::core(ctx, e))?;
    write(&args.out, &out_text)?;
    let record_path = args
        .record
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".record.json"));
    write(
        &record_path,
        &to_json(&OptimizeReport {
            records,
            accepted_edges: accepted,
            final_report: report,
        }),
    )?;
    manifest.finish(&[&args.out, &record_path])
}

pub fn lift(args: &LiftArgs) -> CliResult<()> {
    let Loaded { name, pli } = load_protograph(&args.protograph)?;
    let ctx = args.protograph.as_path();
    let mut pcm = if pli.is_regular() {
        lift_conventional(pli.base(), args.lifting, args.seed)
    } else {
        lift_pli(&pli, args.lifting, args.seed)
    }
    .map_err(|e| CliError::core(ctx, e))?;
    check_audit(&pcm, &pli, "after lifting")?;
    if args.girth6 {
        let before = degree_signature(&pcm);
        let out = remove_4_cycles(&pcm, args.max_swaps, derive_seed(args.seed, &[u64::MAX]));
        if degree_signature(&out.pcm) != before {
            return Err(CliError::Audit(
                "4-cycle removal changed block degrees".into(),
            ));
        }
        if out.residual > 0 {
            return Err(CliError::Audit(format!(
                "{} 4-cycles remain after {} attempts; raise --max-swaps",
                out.residual, out.attempts
            )));
        }
        eprintln!("removed {} 4-cycles with {} swaps", out.initial, out.swaps);
        pcm = out.pcm;
        check_audit(&pcm, &pli, "after 4-cycle removal")?;
    }
    let pcm = pcm.with_provenance(Provenance {
        protograph: name,
        lifting: args.lifting,
        seed: args.seed,
    });
    let sidecar = PcmSidecar::describe(&pcm);
    let sidecar_path = with_suffix(&args.out, ".json");
    write(&args.out, &write_alist(&pcm))?;
    write(&sidecar_path, &to_json(&sidecar))?;
    eprintln!(
        "{}x{} parity-check matrix, {} edges, {} 4-cycles",
        pcm.rows(),
        pcm.cols(),
        pcm.edge_count(),
        sidecar.four_cycles
    );
    let mut manifest = ManifestBuilder::new("lift", args);
    manifest.input(ctx).seed(args.seed);
    manifest.finish(&[&args.out, &sidecar_path])
}

fn check_audit(pcm: &SparsePcm, pli: &PliProtograph, stage: &str) -> CliResult<()> {
    let issues = audit(pcm, pli).map_err(|e| CliError::Audit(e.to_string()))?;
    if issues.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = issues.into_iter().map(|i| i.0).collect();
    Err(CliError::Audit(format!("{stage}:\n{}", lines.join("\n"))))
}

/// Parses `none` or a list of one-based columns and ranges like `1001-2000`.
fn parse_columns(text: &str, cols: usize) -> CliResult<Vec<usize>> {
    if text.trim().eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let bad = |part: &str| {
        CliError::Input(format!(
            "bad punctured column spec {part:?} (columns 1..={cols})"
        ))
    };
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse::<usize>(), b.trim().parse::<usize>()),
            None => (part.parse::<usize>(), part.parse::<usize>()),
        };
        let (a, b) = (a.map_err(|_| bad(part))?, b.map_err(|_| bad(part))?);
        if a == 0 || b < a || b > cols {
            return Err(bad(part));
        }
        out.extend(a - 1..b);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Conventions {
    codeword: String,
    schedule: String,
    ber_positions: String,
    frame_error: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulationReport {
    code: String,
    pcm_sha256: String,
    rate: f64,
    capacity_db: Option<f64>,
    conventions: Conventions,
    config: SweepConfig,
    points: Vec<SimPoint>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let ctx = args.alist.as_path();
    let text = std::fs::read_to_string(ctx).map_err(|e| CliError::io(ctx, e))?;
    let mut pcm = read_alist(&text).map_err(|e| CliError::core(ctx, e))?;
    let sidecar_path = args
        .sidecar
        .clone()
        .unwrap_or_else(|| with_suffix(&args.alist, ".json"));
    let sidecar = if sidecar_path.exists() {
        let s =
            std::fs::read_to_string(&sidecar_path).map_err(|e| CliError::io(&sidecar_path, e))?;
        Some(
            serde_json::from_str::<PcmSidecar>(&s)
                .map_err(|e| CliError::Input(format!("{}: {e}", sidecar_path.display())))?,
        )
    } else if args.sidecar.is_some() {
        return Err(CliError::Input(format!(
            "sidecar {} not found",
            sidecar_path.display()
        )));
    } else {
        None
    };
    let mut inputs = vec![args.alist.clone()];
    match (&args.punctured, &sidecar) {
        (Some(spec), _) => {
            let cols = parse_columns(spec, pcm.cols())?;
            pcm = pcm.with_punctured(cols).map_err(|e| CliError::core(ctx, e))?;
        }
        (None, Some(side)) => {
            pcm = side.apply(pcm).map_err(|e| CliError::core(&sidecar_path, e))?;
            inputs.push(sidecar_path.clone());
        }
        (None, None) => {
            return Err(CliError::Input(format!(
                "{}: no sidecar found and --punctured not given; pass --punctured none if nothing is punctured",
                ctx.display()
            )))
        }
    }
    let code = args
        .code_id
        .clone()
        .or_else(|| {
            sidecar
                .as_ref()
                .and_then(|s| s.provenance.as_ref())
                .map(|p| p.protograph.clone())
        })
        .unwrap_or_else(|| stem(&args.alist));
    let rate = match args.rate {
        Some(r) => r,
        None => {
            let sent = pcm.cols() - pcm.punctured().len();
            let r = (pcm.cols() as f64 - pcm.rows() as f64) / sent as f64;
            log::info!("rate {r} from dimensions and puncturing");
            r
        }
    };
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(CliError::Input(format!(
            "rate must lie in (0, 1], got {rate}"
        )));
    }
    let config = SweepConfig {
        rate,
        ebn0_db: args.ebn0_list.clone(),
        stop: StopRule {
            min_frame_errors: args.min_frame_errors,
            max_frames: args.max_frames,
        },
        decoder: DecoderConfig {
            max_iter: args.max_iter,
            llr_clamp: args.llr_clamp,
            early_stop: true,
        },
        seed: args.seed,
        batch: args.batch,
    };
    let points = run_sweep(&pcm, &config).map_err(|e| CliError::core(ctx, e))?;
    let capacity_db = if rate < 1.0 {
        capacity_ebn0_db(rate).ok()
    } else {
        None
    };
    let json_path = args.out.with_extension("json");
    if json_path == args.out {
        return Err(CliError::Input(
            "--out must not end in .json; the JSON report uses that name".into(),
        ));
    }
    let report = SimulationReport {
        code,
        pcm_sha256: sha256_bytes(text.as_bytes()),
        rate,
        capacity_db,
        conventions: Conventions {
            codeword: "all-zero, BPSK +1 for bit 0".into(),
            schedule: "flooding sum-product, early stop on zero syndrome, ties decide 1".into(),
            ber_positions: "all non-punctured columns".into(),
            frame_error: "any counted bit wrong or syndrome unsatisfied".into(),
        },
        config,
        points,
    };
    for p in &report.points {
        eprintln!(
            "{:>7.3} dB  fer {:.3e}  ber {:.3e}  ({} errors / {} frames)",
            p.ebn0_db, p.fer, p.ber, p.frame_errors, p.frames
        );
    }
    write(&args.out, &to_csv(&report.points))?;
    write(&json_path, &to_json(&report))?;
    let mut manifest = ManifestBuilder::new("simulate", args);
    for i in &inputs {
        manifest.input(i);
    }
    manifest.seed(args.seed);
    if let Some(c) = capacity_db {
        manifest.capacity(rate, c);
    }
    manifest.finish(&[&args.out, &json_path])
}

pub fn plot_data(args: &PlotDataArgs) -> CliResult<()> {
    let mut thresholds: BTreeMap<String, ThresholdReport> = BTreeMap::new();
    for path in &args.analysis {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let r: ThresholdReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        thresholds.insert(r.code.clone(), r);
    }
    let mut series: BTreeMap<String, (String, Vec<SimPoint>)> = BTreeMap::new();
    for path in &args.results {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let r: SimulationReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        match series.get_mut(&r.code) {
            Some((digest, points)) => {
                if *digest != r.pcm_sha256 {
                    return Err(CliError::Input(format!(
                        "code id {:?} appears with two different parity-check matrices",
                        r.code
                    )));
                }
                points.extend(r.points);
            }
            None => {
                series.insert(r.code, (r.pcm_sha256, r.points));
            }
        }
    }
    let mut out = format!("code,{CSV_HEADER},threshold_db,capacity_db,gap_db\n");
    for (code, (_, points)) in &mut series {
        points.sort_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
        let annot = match thresholds.get(code) {
            Some(t) => format!(
                "{},{},{}",
                t.threshold_db, t.capacity_db, t.gap_to_capacity_db
            ),
            None => ",,".into(),
        };
        for p in points.iter() {
            out.push_str(&format!("{code},{},{annot}\n", p.csv_row()));
        }
    }
    write(&args.out, &out)?;
    let mut manifest = ManifestBuilder::new("plot-data", args);
    for p in args.results.iter().chain(&args.analysis) {
        manifest.input(p);
    }
    manifest.finish(&[&args.out])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_one_based() {
        assert_eq!(parse_edge("3,4").unwrap(), (2, 3));
        assert_eq!(parse_edge(" 1 , 1 ").unwrap(), (0, 0));
        assert!(parse_edge("0,1").is_err());
        assert!(parse_edge("3").is_err());
    }

    #[test]
    fn column_specs() {
        assert_eq!(parse_columns("none", 5).unwrap(), Vec::<usize>::new());
        assert_eq!(parse_columns("1-3,5", 5).unwrap(), vec![0, 1, 2, 4]);
        assert!(parse_columns("4-2", 5).is_err());
        assert!(parse_columns("6", 5).is_err());
        assert!(parse_columns("0", 5).is_err());
    }
}
