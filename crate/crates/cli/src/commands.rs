use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use coarse_nw::builtins::{builtin, BUILTIN_NAMES};
use coarse_nw::export::{format_g9, Real};
use coarse_nw::finite::{CheckStatus, Fault};
use coarse_nw::sysfile::{Analysis, CostSpec, HorizonSpec, SourceSpec, SpecKind, TableSpec};
use coarse_nw::{
    diagram, export_levels_csv, find_wandering_certificates, render_svg, verify_lemmas, DiagramDocument,
    Error, ExtendedLevel, FiniteInstance, LoadedSystem, NegBoundary, SystemSpecFile,
};
use serde_json::json;

use crate::{Command, FaultArg};

/// Input errors and engine errors map to 2, oversized grids to 3.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(Error::GridTooLarge { .. }) = cause.downcast_ref::<Error>() {
            return 3;
        }
    }
    2
}

#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub fn run(command: Command, max_samples: usize) -> Result<u8> {
    match command {
        Command::Analyze {
            spec,
            out,
            matrix_out,
            no_horizon_check,
        } => {
            let sys = load(&spec, max_samples)?;
            let analysis = analyze(&sys, !no_horizon_check)?;
            let csv = export_levels_csv(&analysis.summary, sys.dynamics().space());
            emit(out.as_deref(), &csv)?;
            if let Some(path) = matrix_out {
                write(&path, &matrix_csv(&analysis))?;
            }
            Ok(0)
        }
        Command::Diagram {
            spec,
            eps_min,
            eps_max,
            eps_step,
            json,
            svg,
            width,
            height,
            closed_boundary,
            no_horizon_check,
        } => {
            let levels = diagram_levels(eps_min, eps_max, eps_step)?;
            let sys = load(&spec, max_samples)?;
            let analysis = analyze(&sys, !no_horizon_check)?;
            let summary = if closed_boundary {
                analysis.summary.clone().with_boundary(NegBoundary::Closed)
            } else {
                analysis.summary.clone()
            };
            let slices = diagram(&summary, &levels)?;
            let doc = DiagramDocument::new(sys.meta_with(&analysis), &summary, &slices, sys.dynamics().space())?;
            emit(json.as_deref(), &doc.to_json()?)?;
            if let Some(path) = svg {
                write(&path, &render_svg(&doc, width, height)?)?;
            }
            Ok(0)
        }
        Command::Detect {
            spec,
            min_gap,
            out,
            limit,
            no_horizon_check,
        } => detect(&spec, min_gap, out.as_deref(), limit, !no_horizon_check, max_samples),
        Command::Verify {
            seeds,
            first_seed,
            min_size,
            max_size,
            dump_failures,
            fault,
        } => verify(seeds, first_seed, min_size, max_size, dump_failures.as_deref(), fault),
        Command::Template { builtin } => {
            print!("{}", SystemSpecFile::for_builtin(&builtin)?.to_json()?);
            Ok(0)
        }
        Command::Builtins => {
            for name in BUILTIN_NAMES {
                let b = builtin(name)?;
                println!("{name}\t{}", b.description);
            }
            Ok(0)
        }
    }
}

fn load(path: &Path, max_samples: usize) -> Result<LoadedSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = SystemSpecFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let sys = spec.load(max_samples)?;
    let m = &sys.meta;
    let mut line = format!("system {} ({}): {} samples", m.name, m.kind, sys.dynamics().space().len());
    if let Some(h) = m.h {
        write!(line, ", h = {h}").unwrap();
    }
    if let Some(n) = m.n_max {
        write!(line, ", N_max = {n}").unwrap();
    }
    if let (Some(dt), Some(t), Some(t_max)) = (m.dt, m.t_min, m.t_max) {
        write!(line, ", dt = {dt}, T = {t}, t_max = {t_max}").unwrap();
    }
    write!(line, ", tau = {}", m.tau).unwrap();
    eprintln!("{line}");
    Ok(sys)
}

fn analyze(sys: &LoadedSystem, check_horizon: bool) -> Result<Analysis> {
    let analysis = sys.analyze(check_horizon)?;
    match &analysis.stability {
        Some(s) if s.is_stable() => eprintln!(
            "horizon check: stable (steps {}..={} vs {}..={})",
            s.full_window.first, s.full_window.last, s.half_window.first, s.half_window.last
        ),
        Some(s) => eprintln!(
            "horizon check: {} pairs change between steps {}..={} and {}..={}; results may depend on the horizon",
            s.changed_pairs.len(),
            s.full_window.first,
            s.full_window.last,
            s.half_window.first,
            s.half_window.last
        ),
        None => eprintln!("horizon check: skipped"),
    }
    Ok(analysis)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_csv(a: &Analysis) -> String {
    let mut s = String::from("x,y,level,start_index,steps,start_cost,end_cost\n");
    for &x in a.matrix.targets() {
        for &y in a.matrix.targets() {
            let w = a.matrix.witness(x, y).expect("covered pair");
            writeln!(
                s,
                "{x},{y},{},{},{},{},{}",
                format_g9(w.level),
                w.start_index,
                w.steps,
                format_g9(w.start_cost),
                format_g9(w.end_cost)
            )
            .unwrap();
        }
    }
    s
}

/// `(NEG, m)` descending, `-0`, `+0`, `(POS, m)` ascending, for
/// `m = eps_min + k eps_step <= eps_max`, `m > 0`.
fn diagram_levels(eps_min: f64, eps_max: f64, eps_step: f64) -> Result<Vec<ExtendedLevel>> {
    if !(eps_step > 0.0 && eps_step.is_finite()) {
        return Err(input(format!("--eps-step must be positive, got {eps_step}")));
    }
    if !(eps_min >= 0.0 && eps_min <= eps_max && eps_max.is_finite()) {
        return Err(input(format!(
            "need 0 <= --eps-min <= --eps-max < inf, got {eps_min} and {eps_max}"
        )));
    }
    let count = ((eps_max - eps_min) / eps_step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(input(format!("{count} levels requested; increase --eps-step")));
    }
    let mags: Vec<f64> = (0..=count)
        .map(|k| eps_min + k as f64 * eps_step)
        .filter(|&m| m > 0.0)
        .collect();
    let mut levels: Vec<ExtendedLevel> = mags.iter().rev().map(|&m| ExtendedLevel::neg(m)).collect();
    levels.extend([ExtendedLevel::NEG_ZERO, ExtendedLevel::POS_ZERO]);
    levels.extend(mags.iter().map(|&m| ExtendedLevel::pos(m)));
    Ok(levels)
}

fn detect(
    spec: &Path,
    min_gap: Option<f64>,
    out: Option<&Path>,
    limit: usize,
    check_horizon: bool,
    max_samples: usize,
) -> Result<u8> {
    if let Some(g) = min_gap {
        if !(g > 0.0) {
            return Err(input(format!("--min-gap must be positive, got {g}")));
        }
    }
    let sys = load(spec, max_samples)?;
    let analysis = analyze(&sys, check_horizon)?;
    let gap = min_gap.unwrap_or_else(|| coarse_nw::default_min_gap(&analysis.matrix));
    let certs = find_wandering_certificates(&analysis.matrix, gap)?;
    let shown = if limit == 0 { certs.len() } else { limit.min(certs.len()) };
    eprintln!("{} certificates with gap >= {gap}; showing {shown}", certs.len());
    let space = sys.dynamics().space();
    let coords = |i: usize| -> Vec<f64> { space.coords().map_or_else(Vec::new, |c| c.point(i).to_vec()) };
    let fmt_coords = |i: usize| {
        coords(i)
            .iter()
            .map(|v| format_g9(*v))
            .collect::<Vec<_>>()
            .join(" ")
    };
    if !certs.is_empty() {
        println!("x\tx_coords\tz\tz_coords\teps\tgap");
    }
    for c in &certs[..shown] {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.x,
            fmt_coords(c.x),
            c.z,
            fmt_coords(c.z),
            format_g9(c.eps),
            format_g9(c.gap)
        );
    }
    if let Some(path) = out {
        let list: Vec<_> = certs[..shown]
            .iter()
            .map(|c| {
                json!({
                    "x": c.x,
                    "x_coords": coords(c.x),
                    "z": c.z,
                    "z_coords": coords(c.z),
                    "eps": Real(c.eps),
                    "gap": Real(c.gap),
                    "witness": {
                        "start_index": c.witness_forward.start_index,
                        "steps": c.witness_forward.steps,
                        "start_cost": Real(c.witness_forward.start_cost),
                        "end_cost": Real(c.witness_forward.end_cost),
                    },
                })
            })
            .collect();
        let doc = json!({
            "schema_version": 1,
            "system": sys.meta_with(&analysis),
            "min_gap": gap,
            "total": certs.len(),
            "certificates": list,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write(path, &text)?;
    }
    Ok(if certs.is_empty() { 1 } else { 0 })
}

/// Finite instance as a table system file.
fn instance_spec(inst: &FiniteInstance) -> SystemSpecFile {
    let n = inst.size();
    SystemSpecFile {
        kind: SpecKind::Map,
        source: SourceSpec {
            builtin: None,
            params: None,
            table: Some(TableSpec {
                points: None,
                cost: CostSpec::Matrix(
                    (0..n)
                        .map(|x| (0..n).map(|y| Real(inst.cost(x, y))).collect())
                        .collect(),
                ),
                map: inst.map().to_vec(),
            }),
        },
        grid: None,
        horizon: Some(HorizonSpec {
            n_max: Some(inst.horizon()),
            ..HorizonSpec::default()
        }),
        tolerance: None,
    }
}

fn verify(
    seeds: u64,
    first_seed: u64,
    min_size: usize,
    max_size: usize,
    dump: Option<&Path>,
    fault: Option<FaultArg>,
) -> Result<u8> {
    if seeds == 0 {
        return Err(input("--seeds must be at least 1"));
    }
    if !(1..=coarse_nw::finite::MAX_FINITE_SIZE).contains(&max_size) || min_size == 0 || min_size > max_size {
        bail!(InputError(format!(
            "need 1 <= --min-size <= --max-size <= {}, got {min_size} and {max_size}",
            coarse_nw::finite::MAX_FINITE_SIZE
        )));
    }
    let fault = fault.map(|f| match f {
        FaultArg::LambdaStrict => Fault::LambdaStrict,
        FaultArg::BetaClosed => Fault::BetaClosed,
    });
    let end = first_seed
        .checked_add(seeds)
        .ok_or_else(|| input("seed range overflows"))?;
    let reports = (first_seed..end)
        .into_par_iter()
        .map(|seed| {
            let inst = FiniteInstance::random(seed, min_size..=max_size);
            verify_lemmas(&inst, fault).map(|r| (inst, r))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut tally: std::collections::BTreeMap<&str, [u64; 3]> = Default::default();
    let mut failing = 0u64;
    for (inst, report) in &reports {
        for c in &report.checks {
            let t = tally.entry(c.name).or_default();
            match &c.status {
                CheckStatus::Passed => t[0] += 1,
                CheckStatus::Skipped(_) => t[1] += 1,
                CheckStatus::Violated(w) => {
                    t[2] += 1;
                    println!("seed {}: {} violated: {w}", inst.seed().unwrap_or(0), c.name);
                }
            }
        }
        if !report.is_clean() {
            failing += 1;
            if let Some(dir) = dump {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let seed = inst.seed().unwrap_or(0);
                write(&dir.join(format!("seed-{seed}.json")), &instance_spec(inst).to_json()?)?;
                let mut notes = String::new();
                for c in report.violations() {
                    if let CheckStatus::Violated(w) = &c.status {
                        writeln!(notes, "{}: {w}", c.name).unwrap();
                    }
                }
                write(&dir.join(format!("seed-{seed}.violations.txt")), &notes)?;
            }
        }
    }
    for (name, [passed, skipped, violated]) in &tally {
        eprintln!("{name:<26} passed {passed:>6}  skipped {skipped:>6}  violated {violated:>6}");
    }
    eprintln!("{} instances, {failing} with violations", reports.len());
    Ok(if failing == 0 { 0 } else { 1 })
}
