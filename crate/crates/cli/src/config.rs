//! Flag and config-file parsing into a resolved [`RunConfig`].

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, ValueEnum};
use purify_core::graphmc::Sampling;
use purify_core::{Engine, NoiseFamily, NoiseKind, NoiseParams, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PURIFY_OUT_DIR";

const GRID_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Transition tensor of one round.
    Tensor,
    /// F_max, F_min and F_mix of the purification map.
    FixedPoints,
    /// One-round output fidelity against channel fidelity.
    PurifyCurve,
    /// Threshold p_g for each p_m.
    WorkingRange,
    /// Rounds and yield to reach a target fidelity.
    Yield,
    /// First-order fidelity ceilings.
    Bounds,
    /// Monte Carlo purification of a graph state.
    McGraph,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tensor => "tensor",
            Command::FixedPoints => "fixed-points",
            Command::PurifyCurve => "purify-curve",
            Command::WorkingRange => "working-range",
            Command::Yield => "yield",
            Command::Bounds => "bounds",
            Command::McGraph => "mc-graph",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A single value or an inclusive `start:stop:step` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grid {
    Value(f64),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Value(v) => vec![v],
            Grid::Range { start, stop, step } => {
                let n = ((stop - start) / step + GRID_TOL).floor() as usize;
                (0..=n).map(|k| start + k as f64 * step).collect()
            }
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match *self {
            Grid::Value(v) => Some(v),
            Grid::Range { .. } => None,
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid number {t:?} in {s:?}"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts[..] {
            [v] => Ok(Grid::Value(num(v)?)),
            [a, b, c] => {
                let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                if step.is_nan()
                    || step <= 0.0
                    || stop < start
                    || !start.is_finite()
                    || !stop.is_finite()
                {
                    return Err(format!("grid {s:?} needs start <= stop and step > 0"));
                }
                Ok(Grid::Range { start, stop, step })
            }
            _ => Err(format!("grid {s:?} is not a value or start:stop:step")),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Value(v) => write!(f, "{v}"),
            Grid::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
        }
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Grid::Value(v) => s.serialize_f64(*v),
            Grid::Range { .. } => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Grid::Value(v)),
            Repr::Int(v) => Ok(Grid::Value(v as f64)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `ideal`, `uniform[:p_g]` or `kay[:p_g]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseSpec {
    Ideal,
    Family(NoiseFamily, Option<f64>),
}

impl NoiseSpec {
    pub fn family(&self) -> NoiseFamily {
        match self {
            NoiseSpec::Ideal => NoiseFamily::Uniform,
            NoiseSpec::Family(f, _) => *f,
        }
    }

    pub fn p_g(&self) -> Option<f64> {
        match self {
            NoiseSpec::Ideal => Some(0.0),
            NoiseSpec::Family(_, p) => *p,
        }
    }

    pub fn params(&self, p_m: f64) -> purify_core::Result<NoiseParams> {
        let p_g = self.p_g().unwrap_or(0.0);
        match self.family() {
            NoiseFamily::Uniform => NoiseParams::new(NoiseKind::Uniform { p_g }, p_m),
            NoiseFamily::Kay => NoiseParams::new(NoiseKind::kay_equal(p_g), p_m),
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "ideal" {
            return Ok(NoiseSpec::Ideal);
        }
        let (name, value) = match s.split_once(':') {
            Some((n, v)) => (n, Some(v)),
            None => (s, None),
        };
        let family = match name {
            "uniform" => NoiseFamily::Uniform,
            "kay" => NoiseFamily::Kay,
            _ => {
                return Err(format!(
                    "unknown noise {s:?}; expected ideal, uniform[:p_g] or kay[:p_g]"
                ))
            }
        };
        let p_g = value
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| format!("noise {s:?}: p_g must be a number in [0, 1]"))
            })
            .transpose()?;
        Ok(NoiseSpec::Family(family, p_g))
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |fam: &NoiseFamily| match fam {
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Kay => "kay",
        };
        match self {
            NoiseSpec::Ideal => f.write_str("ideal"),
            NoiseSpec::Family(fam, None) => f.write_str(name(fam)),
            NoiseSpec::Family(fam, Some(p)) => write!(f, "{}:{p}", name(fam)),
        }
    }
}

impl Serialize for NoiseSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NoiseSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

fn parse_core<T: FromStr<Err = purify_core::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: purify_core::Error| e.to_string())
}

/// Settings shared by the command line and the TOML file. File keys match
/// the long flag names; the file may also set `command`.
#[derive(Args, Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// single | double; both where omitted and allowed.
    #[arg(long, value_parser = parse_core::<Scheme>)]
    pub scheme: Option<Scheme>,
    /// ideal, uniform:P_G or kay:P_G (family only for working-range).
    #[arg(long)]
    pub noise: Option<NoiseSpec>,
    /// p_g grid for working-range.
    #[arg(long)]
    pub pg: Option<Grid>,
    /// Measurement error p_m, or a grid for working-range.
    #[arg(long)]
    pub pm: Option<Grid>,
    /// Channel fidelity, or a grid for purify-curve.
    #[arg(long)]
    pub fch: Option<Grid>,
    /// Target fidelity for yield.
    #[arg(long)]
    pub target: Option<f64>,
    /// tensor | exact, for bipartite commands.
    #[arg(long, value_parser = parse_core::<Engine>)]
    pub engine: Option<Engine>,
    /// steane7, bell-pair or a path to a graph JSON file.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// disjoint | bootstrap.
    #[arg(long, value_parser = parse_core::<Sampling>)]
    pub sampling: Option<Sampling>,
    /// Vertex whose qubit skips the channel.
    #[arg(long)]
    pub sender: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; defaults to <command>.<format> in $PURIFY_OUT_DIR or the
    /// working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Values in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(
            base, top, scheme, noise, pg, pm, fch, target, engine, graph, rounds, samples,
            sampling, sender, seed, out, format
        )
    }

    fn given(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! push {
            ($($f:ident),*) => { $(if self.$f.is_some() { v.push(stringify!($f)); })* };
        }
        push!(
            scheme, noise, pg, pm, fch, target, engine, graph, rounds, samples, sampling, sender,
            seed, out, format
        );
        v
    }
}

#[derive(Parser, Debug)]
#[command(name = "purify", version, about = "Entanglement purification analyses")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML file with default settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// Fully resolved run description, embedded in JSON outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    /// `None` runs both schemes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pg: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pm: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fch: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sender: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn schemes(&self) -> Vec<Scheme> {
        self.scheme.map_or(Scheme::ALL.to_vec(), |s| vec![s])
    }

    /// Scalar `p_m`, zero when absent.
    pub fn p_m(&self) -> f64 {
        self.pm.and_then(|g| g.scalar()).unwrap_or(0.0)
    }

    pub fn noise_params(&self) -> purify_core::Result<NoiseParams> {
        self.noise.unwrap_or(NoiseSpec::Ideal).params(self.p_m())
    }
}

/// Keys each command accepts; `out` and `format` are always allowed.
fn allowed(cmd: Command) -> &'static [&'static str] {
    match cmd {
        Command::Tensor => &["scheme", "noise", "pm", "engine"],
        Command::FixedPoints => &["scheme", "noise", "pm", "engine"],
        Command::PurifyCurve => &["scheme", "noise", "pm", "fch", "engine"],
        Command::WorkingRange => &["scheme", "noise", "pg", "pm"],
        Command::Yield => &["scheme", "noise", "pm", "fch", "target", "engine"],
        Command::Bounds => &["noise"],
        Command::McGraph => &[
            "scheme", "noise", "pm", "fch", "graph", "rounds", "samples", "sampling", "sender",
            "seed",
        ],
    }
}

fn read_file(path: &Path) -> Result<(Option<Command>, Settings), CliError> {
    let err = |e: &dyn fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| err(&e))?;
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| err(&e))?;
    let command = table
        .remove("command")
        .map(Command::deserialize)
        .transpose()
        .map_err(|e| err(&e))?;
    let settings = Settings::deserialize(toml::Value::Table(table)).map_err(|e| err(&e))?;
    Ok((command, settings))
}

fn required<T>(cmd: Command, name: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("{} requires --{name}", cmd.name())))
}

fn scalar(cmd: Command, name: &str, g: Option<Grid>) -> Result<Option<f64>, CliError> {
    match g {
        Some(Grid::Range { .. }) => Err(CliError::Config(format!(
            "{} takes a single --{name} value, not a grid",
            cmd.name()
        ))),
        other => Ok(other.and_then(|g| g.scalar())),
    }
}

fn check_range(name: &str, values: &[f64], lo: f64, hi: f64) -> Result<(), CliError> {
    match values.iter().find(|v| !(lo..=hi).contains(*v)) {
        Some(v) => Err(CliError::Config(format!(
            "--{name} value {v} outside [{lo}, {hi}]"
        ))),
        None => Ok(()),
    }
}

/// Parses `args` (including the program name) and an optional `--config`
/// file into a validated [`RunConfig`].
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliError::Usage)?;
    let (file_cmd, file_settings) = match &cli.config {
        Some(path) => read_file(path)?,
        None => (None, Settings::default()),
    };
    let command = match (cli.command, file_cmd) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!(
                "command {} conflicts with {} in the config file",
                a.name(),
                b.name()
            )))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(CliError::Config("no command given".into())),
    };
    resolve(command, file_settings.overlay(cli.settings))
}

fn resolve(cmd: Command, s: Settings) -> Result<RunConfig, CliError> {
    let ok = allowed(cmd);
    if let Some(key) = s
        .given()
        .into_iter()
        .find(|k| !ok.contains(k) && *k != "out" && *k != "format")
    {
        return Err(CliError::Config(format!(
            "--{key} does not apply to {}",
            cmd.name()
        )));
    }

    let format = match (s.format, s.out.as_ref().and_then(|p| p.extension())) {
        (Some(f), Some(ext)) if ext != f.extension() => {
            return Err(CliError::Config(format!(
                "--format {} conflicts with output file extension {:?}",
                f.extension(),
                ext
            )))
        }
        (Some(f), _) => f,
        (None, Some(ext)) if ext == "json" => Format::Json,
        _ => Format::Csv,
    };
    let out = s.out.clone().unwrap_or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        dir.join(format!("{}.{}", cmd.name(), format.extension()))
    });

    let mut cfg = RunConfig {
        command: cmd,
        scheme: s.scheme,
        noise: s.noise,
        pg: s.pg,
        pm: s.pm,
        fch: s.fch,
        target: s.target,
        engine: None,
        graph: None,
        rounds: None,
        samples: None,
        sampling: None,
        sender: None,
        seed: None,
        out,
        format,
    };

    if let Some(pm) = cfg.pm {
        check_range("pm", &pm.values(), 0.0, 0.5)?;
    }
    if let Some(f) = cfg.fch {
        check_range("fch", &f.values(), 0.25, 1.0)?;
    }

    match cmd {
        Command::WorkingRange => {
            if let Some(NoiseSpec::Family(_, Some(_)) | NoiseSpec::Ideal) = cfg.noise {
                return Err(CliError::Config(
                    "working-range takes a noise family (uniform or kay) without p_g; scan p_g with --pg".into(),
                ));
            }
            cfg.noise
                .get_or_insert(NoiseSpec::Family(NoiseFamily::Uniform, None));
            let pg = required(cmd, "pg", cfg.pg)?;
            check_range("pg", &pg.values(), 0.0, 1.0)?;
            required(cmd, "pm", cfg.pm)?;
        }
        _ => {
            let noise = required(cmd, "noise", cfg.noise)?;
            if noise.p_g().is_none() {
                return Err(CliError::Config(format!(
                    "{} needs a noise strength, e.g. uniform:0.02",
                    cmd.name()
                )));
            }
            scalar(cmd, "pm", cfg.pm)?;
        }
    }

    match cmd {
        Command::Tensor => {
            required(cmd, "scheme", cfg.scheme)?;
        }
        Command::PurifyCurve => {
            cfg.fch.get_or_insert(Grid::Range {
                start: 0.25,
                stop: 1.0,
                step: 0.01,
            });
        }
        Command::Yield => {
            scalar(cmd, "fch", required(cmd, "fch", cfg.fch).map(Some)?)?;
            let t = required(cmd, "target", cfg.target)?;
            check_range("target", &[t], 0.0, 1.0)?;
        }
        Command::McGraph => {
            required(cmd, "scheme", cfg.scheme)?;
            scalar(cmd, "fch", required(cmd, "fch", cfg.fch).map(Some)?)?;
            cfg.graph = Some(s.graph.unwrap_or_else(|| "steane7".into()));
            cfg.rounds = Some(s.rounds.unwrap_or(10));
            let samples = s
                .samples
                .unwrap_or(purify_core::graphmc::mc::DEFAULT_SAMPLES);
            if samples == 0 {
                return Err(CliError::Config("--samples must be at least 1".into()));
            }
            cfg.samples = Some(samples);
            cfg.sampling = Some(s.sampling.unwrap_or_default());
            cfg.sender = s.sender;
            cfg.seed = Some(s.seed.unwrap_or(0));
        }
        _ => {}
    }
    if matches!(
        cmd,
        Command::Tensor | Command::FixedPoints | Command::PurifyCurve | Command::Yield
    ) {
        cfg.engine = Some(s.engine.unwrap_or_default());
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<RunConfig, CliError> {
        parse_config(std::iter::once("purify").chain(args.split_whitespace()))
    }

    #[test]
    fn grid_syntax() {
        let g: Grid = "0:0.1:0.001".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 101);
        assert!((v[100] - 0.1).abs() < 1e-12);
        assert_eq!("0.3".parse::<Grid>().unwrap().values(), vec![0.3]);
        assert_eq!("0:1:0.3".parse::<Grid>().unwrap().values().len(), 4);
        for bad in ["1:0:0.1", "0:1:0", "0:1", "x", "0:1:-1"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn noise_syntax() {
        for text in ["ideal", "uniform:0.02", "kay:0.03", "uniform", "kay"] {
            assert_eq!(text.parse::<NoiseSpec>().unwrap().to_string(), text);
        }
        assert!("gauss:0.1".parse::<NoiseSpec>().is_err());
        assert!("uniform:1.5".parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn fixed_points_flags() {
        let cfg = parse("fixed-points --scheme double --noise uniform:0.02 --pm 0.02").unwrap();
        assert_eq!(cfg.command, Command::FixedPoints);
        assert_eq!(cfg.scheme, Some(Scheme::Double));
        assert_eq!(cfg.p_m(), 0.02);
        assert_eq!(cfg.engine, Some(Engine::Tensor));
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn working_range_grids() {
        let cfg =
            parse("working-range --scheme single --pg 0:0.1:0.001 --pm 0:0.05:0.001").unwrap();
        assert_eq!(cfg.pg.unwrap().values().len(), 101);
        assert_eq!(cfg.pm.unwrap().values().len(), 51);
        assert_eq!(
            cfg.noise,
            Some(NoiseSpec::Family(NoiseFamily::Uniform, None))
        );
    }

    #[test]
    fn configuration_errors() {
        for args in [
            "fixed-points --scheme single",
            "bounds --noise uniform:0.03 --target 0.9",
            "yield --scheme single --noise uniform:0.02 --fch 0.8",
            "mc-graph --scheme double --noise uniform:0.01 --fch 0.9 --engine exact",
            "fixed-points --noise uniform:0.02 --pm 0:0.1:0.01",
            "working-range --noise uniform:0.02 --pg 0:0.1:0.01 --pm 0",
            "bounds --noise uniform:0.03 --format json --out x.csv",
            "tensor --noise uniform:0.02",
            "purify-curve --noise uniform:0.02 --fch 0.1:1:0.1",
            "",
        ] {
            assert!(matches!(parse(args), Err(CliError::Config(_))), "{args}");
        }
    }

    #[test]
    fn format_follows_extension() {
        let cfg = parse("bounds --noise uniform:0.03 --out b.json").unwrap();
        assert_eq!(cfg.format, Format::Json);
    }
}
