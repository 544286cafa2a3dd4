//! Command dispatch and output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use purify_core::dynamics::{reach_boundary, working_range};
use purify_core::graphmc::MCResult;
use purify_core::oracle::{simulate_double_round_exact, simulate_single_round_exact};
use purify_core::{
    apply_map, build_double_tensor, build_single_tensor, fixed_points, mc_purification,
    upper_bound_first_order, yield_for_target, BellVector, BoundVariant, ChannelParams, Engine,
    MCConfig, PurificationMap, Scheme, TwoColorableGraph,
};
use serde::Serialize;

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;

/// Six decimals with trailing zeros removed; scientific below 1e-4.
pub fn short(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        return format!("{x:.3e}");
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), short)
}

#[derive(Serialize)]
struct JsonOutput<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, result: T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(
        &mut w,
        &JsonOutput {
            config: cfg,
            result,
        },
    )
    .map_err(|e| io_err(path, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(path, e))
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn emit<R: Serialize>(cfg: &RunConfig, rows: &[R]) -> Result<(), CliError> {
    match cfg.format {
        Format::Csv => write_csv(&cfg.out, rows),
        Format::Json => write_json(&cfg.out, cfg, rows),
    }
}

fn map_for(cfg: &RunConfig, scheme: Scheme) -> Result<PurificationMap, CliError> {
    let noise = cfg.noise_params()?;
    Ok(PurificationMap::with_engine(
        scheme,
        &noise,
        cfg.engine.unwrap_or_default(),
    ))
}

#[derive(Serialize)]
struct TensorRow {
    out: usize,
    source: usize,
    ancilla: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ancilla2: Option<usize>,
    value: f64,
}

fn tensor(cfg: &RunConfig) -> Result<String, CliError> {
    let scheme = cfg.scheme.expect("validated");
    let noise = cfg.noise_params()?;
    let exact = cfg.engine == Some(Engine::Exact);
    let mut rows = Vec::new();
    match scheme {
        Scheme::Single => {
            let t = if exact {
                simulate_single_round_exact(&noise)
            } else {
                build_single_tensor(&noise)
            };
            for (i, a) in t.s.iter().enumerate() {
                for (j, b) in a.iter().enumerate() {
                    for (k, &value) in b.iter().enumerate() {
                        rows.push(TensorRow {
                            out: i,
                            source: j,
                            ancilla: k,
                            ancilla2: None,
                            value,
                        });
                    }
                }
            }
        }
        Scheme::Double => {
            let t = if exact {
                simulate_double_round_exact(&noise)
            } else {
                build_double_tensor(&noise)
            };
            for (i, a) in t.d.iter().enumerate() {
                for (j, b) in a.iter().enumerate() {
                    for (k, c) in b.iter().enumerate() {
                        for (l, &value) in c.iter().enumerate() {
                            rows.push(TensorRow {
                                out: i,
                                source: j,
                                ancilla: k,
                                ancilla2: Some(l),
                                value,
                            });
                        }
                    }
                }
            }
        }
    }
    emit(cfg, &rows)?;
    let success: f64 = rows
        .iter()
        .filter(|r| r.source == 0 && r.ancilla == 0 && r.ancilla2.unwrap_or(0) == 0)
        .map(|r| r.value)
        .sum();
    Ok(format!(
        "tensor {scheme}: {} entries, success on target inputs = {}",
        rows.len(),
        short(success)
    ))
}

#[derive(Serialize)]
struct FixedPointRow {
    scheme: Scheme,
    f_max: Option<f64>,
    f_min: Option<f64>,
    f_mix: f64,
    reach_boundary: Option<f64>,
    converged: bool,
    iterations: usize,
}

/// JSON form; the vector does not fit a flat CSV record.
#[derive(Serialize)]
struct FixedPointEntry<'a> {
    #[serde(flatten)]
    row: &'a FixedPointRow,
    f_max_vector: Option<[f64; 4]>,
}

fn fixed_points_cmd(cfg: &RunConfig) -> Result<String, CliError> {
    let mut rows = Vec::new();
    let mut vectors = Vec::new();
    for scheme in cfg.schemes() {
        let m = map_for(cfg, scheme)?;
        let r = fixed_points(&m);
        vectors.push(r.f_max.map(|f| *f.as_array()));
        rows.push(FixedPointRow {
            scheme,
            f_max: r.f_max_fidelity(),
            f_min: r.f_min,
            f_mix: r.f_mix.fidelity(),
            reach_boundary: reach_boundary(&m),
            converged: r.converged,
            iterations: r.iterations,
        });
    }
    match cfg.format {
        Format::Csv => write_csv(&cfg.out, &rows)?,
        Format::Json => {
            let entries: Vec<FixedPointEntry> = rows
                .iter()
                .zip(vectors)
                .map(|(row, f_max_vector)| FixedPointEntry { row, f_max_vector })
                .collect();
            write_json(&cfg.out, cfg, &entries)?
        }
    }
    Ok(rows
        .iter()
        .map(|r| {
            format!(
                "{}: F_max = {}, F_min = {}, F_mix = {}",
                r.scheme,
                opt(r.f_max),
                opt(r.f_min),
                short(r.f_mix)
            )
        })
        .collect::<Vec<_>>()
        .join("; "))
}

#[derive(Serialize)]
struct CurveRow {
    scheme: Scheme,
    f_in: f64,
    f_out: f64,
    success: f64,
}

fn purify_curve(cfg: &RunConfig) -> Result<String, CliError> {
    let grid = cfg.fch.expect("defaulted").values();
    let mut rows = Vec::new();
    for scheme in cfg.schemes() {
        let m = map_for(cfg, scheme)?;
        for &f_in in &grid {
            let f = BellVector::from_channel(ChannelParams::new(f_in)?);
            let (out, success) = apply_map(&m, &f)?;
            rows.push(CurveRow {
                scheme,
                f_in,
                f_out: out.fidelity(),
                success,
            });
        }
    }
    emit(cfg, &rows)?;
    Ok(format!(
        "purify-curve: {} points for {}",
        grid.len(),
        scheme_list(cfg)
    ))
}

fn scheme_list(cfg: &RunConfig) -> String {
    cfg.schemes()
        .iter()
        .map(|s| s.name())
        .collect::<Vec<_>>()
        .join(" and ")
}

#[derive(Serialize)]
struct RangeRow {
    scheme: Scheme,
    p_m: f64,
    p_g_threshold: Option<f64>,
}

fn working_range_cmd(cfg: &RunConfig) -> Result<String, CliError> {
    let pg = cfg.pg.expect("validated").values();
    let pm = cfg.pm.expect("validated").values();
    let family = cfg.noise.expect("defaulted").family();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for scheme in cfg.schemes() {
        let points = working_range(scheme, &pg, &pm, family)?;
        summary.push(format!(
            "{scheme} p_g threshold at p_m = {}: {}",
            short(points[0].p_m),
            opt(points[0].p_g)
        ));
        rows.extend(points.into_iter().map(|p| RangeRow {
            scheme,
            p_m: p.p_m,
            p_g_threshold: p.p_g,
        }));
    }
    emit(cfg, &rows)?;
    Ok(summary.join("; "))
}

#[derive(Serialize)]
struct YieldRow {
    scheme: Scheme,
    target_f: f64,
    f_ch: f64,
    n_rounds: usize,
    #[serde(rename = "yield")]
    yield_value: f64,
}

fn yield_cmd(cfg: &RunConfig) -> Result<String, CliError> {
    let f_ch = ChannelParams::new(cfg.fch.and_then(|g| g.scalar()).expect("validated"))?;
    let target = cfg.target.expect("validated");
    let mut reports = Vec::new();
    for scheme in cfg.schemes() {
        reports.push((
            scheme,
            yield_for_target(&map_for(cfg, scheme)?, target, f_ch)?,
        ));
    }
    match cfg.format {
        Format::Csv => {
            let rows: Vec<YieldRow> = reports
                .iter()
                .map(|(scheme, r)| YieldRow {
                    scheme: *scheme,
                    target_f: r.target_f,
                    f_ch: r.f_ch,
                    n_rounds: r.n_rounds,
                    yield_value: r.yield_value,
                })
                .collect();
            write_csv(&cfg.out, &rows)?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Entry<'a> {
                scheme: Scheme,
                #[serde(flatten)]
                report: &'a purify_core::YieldReport,
            }
            let entries: Vec<Entry> = reports
                .iter()
                .map(|(scheme, report)| Entry {
                    scheme: *scheme,
                    report,
                })
                .collect();
            write_json(&cfg.out, cfg, &entries)?
        }
    }
    Ok(reports
        .iter()
        .map(|(s, r)| {
            format!(
                "{s}: n_rounds = {}, yield = {}",
                r.n_rounds,
                short(r.yield_value)
            )
        })
        .collect::<Vec<_>>()
        .join("; "))
}

#[derive(Serialize)]
struct BoundRow {
    variant: BoundVariant,
    f_upper: f64,
}

fn bounds(cfg: &RunConfig) -> Result<String, CliError> {
    let noise = cfg.noise_params()?;
    let rows: Vec<BoundRow> = [BoundVariant::A, BoundVariant::B]
        .into_iter()
        .map(|variant| BoundRow {
            variant,
            f_upper: upper_bound_first_order(&noise, variant),
        })
        .collect();
    emit(cfg, &rows)?;
    Ok(rows
        .iter()
        .map(|r| format!("F_upper = {} (variant {:?})", short(r.f_upper), r.variant))
        .collect::<Vec<_>>()
        .join(", "))
}

fn load_graph(spec: &str) -> Result<TwoColorableGraph, CliError> {
    match spec {
        "steane7" => Ok(TwoColorableGraph::steane7()),
        "bell-pair" => Ok(TwoColorableGraph::bell_pair()),
        path => {
            TwoColorableGraph::load(Path::new(path)).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

/// Sidecar path of the JSON summary written next to a CSV series.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn mc_graph(cfg: &RunConfig) -> Result<String, CliError> {
    let graph = load_graph(cfg.graph.as_deref().expect("defaulted"))?;
    let scheme = cfg.scheme.expect("validated");
    let f_ch = ChannelParams::new(cfg.fch.and_then(|g| g.scalar()).expect("validated"))?;
    let mut mc = MCConfig::new(graph, scheme, cfg.noise_params()?, f_ch);
    mc.rounds = cfg.rounds.expect("defaulted");
    mc.samples = cfg.samples.expect("defaulted");
    mc.seed = cfg.seed.expect("defaulted");
    mc.sampling = cfg.sampling.expect("defaulted");
    mc.sender = cfg.sender;
    let result: MCResult = mc_purification(&mc)?;
    match cfg.format {
        Format::Csv => {
            write_csv(&cfg.out, &result.rounds)?;
            write_json(&summary_path(&cfg.out), cfg, &result)?;
        }
        Format::Json => write_json(&cfg.out, cfg, &result)?,
    }
    let last = result.final_round();
    Ok(format!(
        "mc-graph {scheme}: fidelity {} +/- {} after {} rounds, yield {}",
        short(last.fidelity),
        short(last.stderr),
        last.round,
        short(result.yield_estimate)
    ))
}

/// Runs `cfg`, writes its output files and returns the one-line summary.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    match cfg.command {
        Command::Tensor => tensor(cfg),
        Command::FixedPoints => fixed_points_cmd(cfg),
        Command::PurifyCurve => purify_curve(cfg),
        Command::WorkingRange => working_range_cmd(cfg),
        Command::Yield => yield_cmd(cfg),
        Command::Bounds => bounds(cfg),
        Command::McGraph => mc_graph(cfg),
    }
}
