//! Iteration of the purification maps: fixed points, working ranges,
//! yields and first-order fidelity bounds.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{BellVector, ChannelParams, NoiseKind, NoiseParams};
use crate::error::{Error, Result};
use crate::oracle::{simulate_double_round_exact, simulate_single_round_exact};
use crate::tensor::{build_double_tensor, build_single_tensor, DoubleTensor, SingleTensor};

/// Stop iterating once successive vectors differ by less than this in the
/// infinity norm.
pub const CONVERGENCE_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 10_000;
/// Resolution of the `F_min` bisection in channel fidelity.
pub const FIDELITY_BISECTION_TOL: f64 = 1e-9;
/// Resolution of noise-threshold bisections.
pub const THRESHOLD_BISECTION_TOL: f64 = 1e-4;
/// `F_max` must exceed `1/4` by this much to count as a non-trivial fixed point.
pub const INSIDE_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Single,
    Double,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Single, Scheme::Double];

    /// Raw pairs consumed per round, `N_A`.
    pub const fn copies_per_round(self) -> usize {
        match self {
            Scheme::Single => 2,
            Scheme::Double => 3,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Scheme::Single => "single",
            Scheme::Double => "double",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Scheme::Single),
            "double" => Ok(Scheme::Double),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Which backend produces the transition tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Tensor,
    Exact,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" => Ok(Engine::Tensor),
            "exact" => Ok(Engine::Exact),
            other => Err(Error::InvalidArgument(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum MapTensor {
    Single(SingleTensor),
    Double(Box<DoubleTensor>),
}

/// One round of a recurrence protocol as a map on Bell-diagonal vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PurificationMap {
    tensor: MapTensor,
}

impl PurificationMap {
    pub fn new(scheme: Scheme, noise: &NoiseParams) -> Self {
        Self::with_engine(scheme, noise, Engine::Tensor)
    }

    pub fn with_engine(scheme: Scheme, noise: &NoiseParams, engine: Engine) -> Self {
        match (scheme, engine) {
            (Scheme::Single, Engine::Tensor) => Self::from_single(build_single_tensor(noise)),
            (Scheme::Single, Engine::Exact) => {
                Self::from_single(simulate_single_round_exact(noise))
            }
            (Scheme::Double, Engine::Tensor) => Self::from_double(build_double_tensor(noise)),
            (Scheme::Double, Engine::Exact) => {
                Self::from_double(simulate_double_round_exact(noise))
            }
        }
    }

    pub fn from_single(t: SingleTensor) -> Self {
        Self {
            tensor: MapTensor::Single(t),
        }
    }

    pub fn from_double(t: DoubleTensor) -> Self {
        Self {
            tensor: MapTensor::Double(Box::new(t)),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.tensor {
            MapTensor::Single(_) => Scheme::Single,
            MapTensor::Double(_) => Scheme::Double,
        }
    }

    pub fn copies_per_round(&self) -> usize {
        self.scheme().copies_per_round()
    }

    /// Unnormalized output weights; their sum is the success probability.
    pub fn raw(&self, f: &BellVector) -> [f64; 4] {
        let f = f.as_array();
        let mut out = [0.0; 4];
        match &self.tensor {
            MapTensor::Single(t) => {
                for (i, o) in out.iter_mut().enumerate() {
                    for j in 0..4 {
                        for k in 0..4 {
                            *o += t.s[i][j][k] * f[j] * f[k];
                        }
                    }
                }
            }
            MapTensor::Double(t) => {
                for (i, o) in out.iter_mut().enumerate() {
                    for j in 0..4 {
                        for k in 0..4 {
                            let fjk = f[j] * f[k];
                            for l in 0..4 {
                                *o += t.d[i][j][k][l] * fjk * f[l];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One application of the map: normalized output and success probability.
pub fn apply_map(m: &PurificationMap, f: &BellVector) -> Result<(BellVector, f64)> {
    let raw = m.raw(f);
    let p: f64 = raw.iter().sum();
    if p <= 0.0 {
        return Err(Error::NeverSucceeds);
    }
    Ok((BellVector::normalize(raw)?, p.min(1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub state: BellVector,
    pub success: f64,
}

/// States after rounds `1..=steps.len()`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: BellVector,
    pub steps: Vec<Step>,
    pub converged: bool,
}

impl Trajectory {
    pub fn last(&self) -> &BellVector {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }
}

pub fn iterate(m: &PurificationMap, f0: &BellVector, max_rounds: usize) -> Result<Trajectory> {
    if max_rounds == 0 {
        return Err(Error::InvalidArgument(
            "max_rounds must be at least 1".into(),
        ));
    }
    let mut steps = Vec::new();
    let mut current = *f0;
    let mut converged = false;
    for _ in 0..max_rounds {
        let (next, success) = apply_map(m, &current)?;
        let delta = next.max_abs_diff(&current);
        steps.push(Step {
            state: next,
            success,
        });
        current = next;
        if delta < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }
    Ok(Trajectory {
        initial: *f0,
        steps,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub f_max: Option<BellVector>,
    /// Channel fidelity where one round stops lowering the fidelity.
    pub f_min: Option<f64>,
    pub f_mix: BellVector,
    pub converged: bool,
    pub iterations: usize,
}

impl FixedPointReport {
    pub fn f_max_fidelity(&self) -> Option<f64> {
        self.f_max.map(|f| f.fidelity())
    }
}

/// Channel fidelity deficit of the probe used when the pure state is fixed.
const PROBE_OFFSET: f64 = 1e-6;

/// Attracting fixed point reached from the pure state, or `None` when the
/// trajectory collapses.
fn attracting_point(m: &PurificationMap) -> (Option<BellVector>, bool, usize) {
    let Ok(mut t) = iterate(m, &BellVector::PURE, MAX_ITERATIONS) else {
        return (None, false, 0);
    };
    // Without gate noise the pure state is always fixed but may repel.
    if t.last().max_abs_diff(&BellVector::PURE) < CONVERGENCE_TOL {
        let probe =
            BellVector::from_channel(ChannelParams::new(1.0 - PROBE_OFFSET).expect("in range"));
        match iterate(m, &probe, MAX_ITERATIONS) {
            Ok(p) => t = p,
            Err(_) => return (None, false, 0),
        }
    }
    let f = *t.last();
    let present = f.fidelity() > 0.25 + INSIDE_MARGIN;
    (present.then_some(f), t.converged, t.steps.len())
}

/// Whether `(scheme, noise)` lies inside the working range.
pub fn is_inside(scheme: Scheme, noise: &NoiseParams) -> bool {
    attracting_point(&PurificationMap::new(scheme, noise))
        .0
        .is_some()
}

pub fn fixed_points(m: &PurificationMap) -> FixedPointReport {
    let (f_max, mut converged, iterations) = attracting_point(m);
    let mix = iterate(m, &BellVector::MIXED, MAX_ITERATIONS);
    let f_mix = mix.as_ref().map_or(BellVector::MIXED, |t| *t.last());
    converged &= mix.is_ok_and(|t| t.converged);
    let f_min = f_max.and_then(|_| basin_boundary(m));
    FixedPointReport {
        f_max,
        f_min,
        f_mix,
        converged,
        iterations,
    }
}

/// Step of the coarse scan that brackets diagonal crossings.
const CURVE_SCAN_STEP: f64 = 1e-3;

fn channel_vector(f_ch: f64) -> BellVector {
    BellVector::from_channel(ChannelParams::new(f_ch).expect("channel fidelity in range"))
}

/// `F_0' - F_ch` after one round on a channel-shaped input.
fn curve_gain(m: &PurificationMap, f_ch: f64) -> Option<f64> {
    apply_map(m, &channel_vector(f_ch))
        .ok()
        .map(|(f, _)| f.fidelity() - f_ch)
}

/// Lowest channel fidelity above which one round raises the fidelity: the
/// lower crossing of the purification curve with the diagonal.
fn basin_boundary(m: &PurificationMap) -> Option<f64> {
    let gain = |f: f64| curve_gain(m, f).unwrap_or(f64::NEG_INFINITY);
    let n = ((0.75 - CURVE_SCAN_STEP) / CURVE_SCAN_STEP).floor() as usize;
    let mut prev = 0.25 + CURVE_SCAN_STEP;
    for k in 2..=n {
        let next = 0.25 + k as f64 * CURVE_SCAN_STEP;
        if gain(prev) < 0.0 && gain(next) >= 0.0 {
            let (mut lo, mut hi) = (prev, next);
            while hi - lo > FIDELITY_BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if gain(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = next;
    }
    None
}

/// Lowest channel fidelity whose trajectory converges to `F_max`.
///
/// Lies above [`FixedPointReport::f_min`] when channel inputs just above the
/// crossing are caught by the period-2 orbit between `(1/2, 0, 0, 1/2)` and
/// `(1/2, 1/2, 0, 0)`-like states instead of purifying.
pub fn reach_boundary(m: &PurificationMap) -> Option<f64> {
    let f_max = attracting_point(m).0?.fidelity();
    let reaches = |f_ch: f64| {
        iterate(m, &channel_vector(f_ch), MAX_ITERATIONS)
            .is_ok_and(|t| t.converged && (t.last().fidelity() - f_max).abs() < 1e-6)
    };
    let (mut lo, mut hi) = (0.25, 1.0);
    if !reaches(hi) {
        return None;
    }
    while hi - lo > FIDELITY_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Maps a scalar gate error rate to a distribution of the 15 error terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Uniform,
    /// Kay distribution with equal `q_i = p_g / 3`.
    Kay,
}

impl NoiseFamily {
    pub fn kind(self, p_g: f64) -> NoiseKind {
        match self {
            NoiseFamily::Uniform => NoiseKind::Uniform { p_g },
            NoiseFamily::Kay => NoiseKind::kay_equal(p_g),
        }
    }

    pub fn noise(self, p_g: f64, p_m: f64) -> Result<NoiseParams> {
        NoiseParams::new(self.kind(p_g), p_m)
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseFamily::Uniform),
            "kay" => Ok(NoiseFamily::Kay),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise family {other:?}"
            ))),
        }
    }
}

fn check_monotone(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "{name} grid must be non-empty and increasing"
        )));
    }
    Ok(())
}

/// Bisects `inside` between a point known inside and one known outside.
fn bisect_edge(mut lo: f64, mut hi: f64, inside: impl Fn(f64) -> bool) -> f64 {
    while hi - lo > THRESHOLD_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub p_m: f64,
    /// Largest inside `p_g`; `None` when even the smallest grid value is
    /// outside. Equals the grid maximum when the whole grid is inside.
    pub p_g: Option<f64>,
}

/// Threshold curve `p_g(p_m)` of the working range.
///
/// The `p_g` grid brackets the edge, which is then bisected to
/// [`THRESHOLD_BISECTION_TOL`].
pub fn working_range(
    scheme: Scheme,
    p_g_grid: &[f64],
    p_m_grid: &[f64],
    family: NoiseFamily,
) -> Result<Vec<ThresholdPoint>> {
    check_monotone("p_g", p_g_grid)?;
    check_monotone("p_m", p_m_grid)?;
    for &p_m in p_m_grid {
        family.noise(*p_g_grid.last().unwrap(), p_m)?;
    }
    let points = p_m_grid
        .par_iter()
        .map(|&p_m| {
            let inside = |p_g: f64| family.noise(p_g, p_m).is_ok_and(|n| is_inside(scheme, &n));
            let p_g = match p_g_grid.iter().position(|&p| !inside(p)) {
                None => Some(*p_g_grid.last().unwrap()),
                Some(0) => None,
                Some(k) => Some(bisect_edge(p_g_grid[k - 1], p_g_grid[k], inside)),
            };
            ThresholdPoint { p_m, p_g }
        })
        .collect();
    Ok(points)
}

/// Largest `p_m` inside the working range at fixed `p_g`, bisected on
/// `[0, 1/2]`. `None` if `p_m = 0` is already outside.
pub fn p_m_threshold(scheme: Scheme, p_g: f64, family: NoiseFamily) -> Result<Option<f64>> {
    let inside = |p_m: f64| family.noise(p_g, p_m).is_ok_and(|n| is_inside(scheme, &n));
    family.noise(p_g, 0.0)?;
    if !inside(0.0) {
        return Ok(None);
    }
    if inside(0.5) {
        return Ok(Some(0.5));
    }
    Ok(Some(bisect_edge(0.0, 0.5, inside)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub p_g: f64,
    pub p_m: f64,
    pub scheme: Scheme,
    pub f_max: Option<f64>,
    pub f_min: Option<f64>,
    pub inside: bool,
}

/// Full fixed-point report on every `(p_g, p_m)` grid point, `p_g` major.
pub fn scan_grid(
    scheme: Scheme,
    p_g_grid: &[f64],
    p_m_grid: &[f64],
    family: NoiseFamily,
) -> Result<Vec<ScanRow>> {
    check_monotone("p_g", p_g_grid)?;
    check_monotone("p_m", p_m_grid)?;
    let points: Vec<(f64, f64)> = p_g_grid
        .iter()
        .flat_map(|&g| p_m_grid.iter().map(move |&m| (g, m)))
        .collect();
    points
        .par_iter()
        .map(|&(p_g, p_m)| {
            let noise = family.noise(p_g, p_m)?;
            let report = fixed_points(&PurificationMap::new(scheme, &noise));
            Ok(ScanRow {
                p_g,
                p_m,
                scheme,
                f_max: report.f_max_fidelity(),
                f_min: report.f_min,
                inside: report.f_max.is_some(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YieldReport {
    pub target_f: f64,
    pub f_ch: f64,
    pub n_rounds: usize,
    #[serde(rename = "yield")]
    pub yield_value: f64,
    pub per_round_success: Vec<f64>,
}

/// Rounds and yield needed to lift a channel-shaped input to `target_f`.
pub fn yield_for_target(
    m: &PurificationMap,
    target_f: f64,
    f_ch: ChannelParams,
) -> Result<YieldReport> {
    if !(0.0..=1.0).contains(&target_f) {
        return Err(Error::InvalidArgument(format!(
            "target fidelity {target_f} outside [0, 1]"
        )));
    }
    let n_a = m.copies_per_round() as f64;
    let mut current = BellVector::from_channel(f_ch);
    let mut per_round_success = Vec::new();
    let mut yield_value = 1.0;
    while current.fidelity() < target_f {
        if per_round_success.len() == MAX_ITERATIONS {
            return Err(Error::TargetUnreachable {
                target: target_f,
                reached: current.fidelity(),
            });
        }
        let (next, p) = apply_map(m, &current)?;
        let stalled = next.max_abs_diff(&current) < CONVERGENCE_TOL;
        per_round_success.push(p);
        yield_value *= p / n_a;
        if stalled && next.fidelity() < target_f {
            return Err(Error::TargetUnreachable {
                target: target_f,
                reached: next.fidelity(),
            });
        }
        current = next;
    }
    Ok(YieldReport {
        target_f,
        f_ch: f_ch.fidelity(),
        n_rounds: per_round_success.len(),
        yield_value,
        per_round_success,
    })
}

/// Which of the two final gates leaves its error undetected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundVariant {
    /// `1 - 2 (p_30 + sum_i p_i0)`.
    A,
    /// `1 - 2 (p_10 + sum_i p_i0)`.
    B,
}

pub fn upper_bound_first_order(noise: &NoiseParams, variant: BoundVariant) -> f64 {
    let control_only: f64 = (1..4).map(|i| noise.p(i, 0)).sum();
    let extra = match variant {
        BoundVariant::A => noise.p(3, 0),
        BoundVariant::B => noise.p(1, 0),
    };
    1.0 - 2.0 * (extra + control_only)
}

/// Predicted first-order gap `F_max^D - F_max^S` for uniform noise.
pub fn single_double_gap(p_g: f64) -> f64 {
    8.0 / 15.0 * p_g
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two paired points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("xs are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of `1 - F_max` against `p_g` for uniform noise at fixed `p_m`.
pub fn max_fidelity_slope(scheme: Scheme, p_g_values: &[f64], p_m: f64) -> Result<f64> {
    let deficits = p_g_values
        .par_iter()
        .map(|&p_g| {
            let noise = NoiseParams::uniform(p_g, p_m)?;
            let (f_max, _, _) = attracting_point(&PurificationMap::new(scheme, &noise));
            f_max.map(|f| 1.0 - f.fidelity()).ok_or_else(|| {
                Error::InvalidArgument(format!("p_g = {p_g} outside the working range"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    least_squares_slope(p_g_values, &deficits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ideal(scheme: Scheme) -> PurificationMap {
        PurificationMap::new(scheme, &NoiseParams::ideal())
    }

    fn channel(f: f64) -> BellVector {
        BellVector::from_channel(ChannelParams::new(f).unwrap())
    }

    #[test]
    fn pure_state_is_fixed() {
        for scheme in Scheme::ALL {
            let (f, p) = apply_map(&ideal(scheme), &BellVector::PURE).unwrap();
            assert!(f.max_abs_diff(&BellVector::PURE) < 1e-15);
            assert!((p - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_state_single() {
        let (f, p) = apply_map(&ideal(Scheme::Single), &BellVector::MIXED).unwrap();
        assert!(f.max_abs_diff(&BellVector::MIXED) < 1e-15);
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ideal_single_on_werner_input() {
        // Kept pairs before the exchange: (0,0),(3,3) -> 0; (0,3),(3,0) -> 3;
        // (1,1),(2,2) -> 1; (1,2),(2,1) -> 2. The exchange swaps 1 and 3.
        let f = [0.8, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0];
        let m = ideal(Scheme::Single);
        let raw = m.raw(&BellVector::new(f).unwrap());
        let e = 1.0 / 15.0;
        let expect = [0.8 * 0.8 + e * e, 2.0 * 0.8 * e, 2.0 * e * e, 2.0 * e * e];
        for i in 0..4 {
            assert!((raw[i] - expect[i]).abs() < 1e-14, "{raw:?} vs {expect:?}");
        }
    }

    #[test]
    fn never_succeeds_is_an_error() {
        let mut t = SingleTensor::zeros();
        t.s[0][1][1] = 1.0;
        let m = PurificationMap::from_single(t);
        assert_eq!(apply_map(&m, &BellVector::PURE), Err(Error::NeverSucceeds));
    }

    #[test]
    fn ideal_fixed_points() {
        for scheme in Scheme::ALL {
            let r = fixed_points(&ideal(scheme));
            assert!((r.f_max_fidelity().unwrap() - 1.0).abs() < 1e-6);
            assert!(
                (r.f_min.unwrap() - 0.5).abs() < 1e-6,
                "{scheme}: {:?}",
                r.f_min
            );
            assert!((r.f_mix.fidelity() - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn ideal_trajectory_converges_to_one() {
        // Not monotone round by round: phase errors surface as bit errors
        // only after the next exchange.
        let t = iterate(&ideal(Scheme::Single), &channel(0.6), MAX_ITERATIONS).unwrap();
        assert!(t.steps.iter().all(|s| s.state.fidelity() > 0.5));
        assert!(t.last().fidelity() > 1.0 - 1e-9);
    }

    #[test]
    fn ideal_period_two_orbit() {
        let m = ideal(Scheme::Single);
        let a = BellVector::new([0.5, 0.0, 0.0, 0.5]).unwrap();
        let (b, _) = apply_map(&m, &a).unwrap();
        assert!(b.max_abs_diff(&BellVector::new([0.5, 0.5, 0.0, 0.0]).unwrap()) < 1e-15);
        assert!(apply_map(&m, &b).unwrap().0.max_abs_diff(&a) < 1e-15);
        // Channel inputs just above F_min fall onto this orbit.
        let t = iterate(&m, &channel(0.52), MAX_ITERATIONS).unwrap();
        assert!(!t.converged && (t.last().fidelity() - 0.5).abs() < 1e-3);
        let edge = reach_boundary(&m).unwrap();
        assert!(edge > 0.53 && edge < 0.55, "{edge}");
    }

    #[test]
    fn heavy_noise_collapses() {
        let noise = NoiseParams::uniform(0.1, 0.1).unwrap();
        let t = iterate(
            &PurificationMap::new(Scheme::Single, &noise),
            &channel(0.95),
            MAX_ITERATIONS,
        )
        .unwrap();
        assert!(t.last().max_abs_diff(&BellVector::MIXED) < 1e-6);
        let r = fixed_points(&PurificationMap::new(
            Scheme::Double,
            &NoiseParams::uniform(0.2, 0.0).unwrap(),
        ));
        assert!(r.f_max.is_none() && r.f_min.is_none());
    }

    #[test]
    fn f_max_is_fixed() {
        let noise = NoiseParams::uniform(0.02, 0.02).unwrap();
        for scheme in Scheme::ALL {
            let m = PurificationMap::new(scheme, &noise);
            let f = fixed_points(&m).f_max.unwrap();
            let (g, _) = apply_map(&m, &f).unwrap();
            assert!(g.max_abs_diff(&f) < 1e-10);
        }
    }

    #[test]
    fn basin_ordering_with_noise() {
        let noise = NoiseParams::uniform(0.02, 0.01).unwrap();
        for scheme in Scheme::ALL {
            let r = fixed_points(&PurificationMap::new(scheme, &noise));
            let (hi, lo) = (r.f_max_fidelity().unwrap(), r.f_min.unwrap());
            assert!(hi > lo && lo > 0.25, "{scheme}: {hi} {lo}");
        }
    }

    #[test]
    fn round_counts() {
        for (p, n_s, n_d) in [(0.02, 4, 2), (0.04, 16, 4)] {
            let noise = NoiseParams::uniform(p, p).unwrap();
            let f_ch = ChannelParams::new(0.8).unwrap();
            let s =
                yield_for_target(&PurificationMap::new(Scheme::Single, &noise), 0.9, f_ch).unwrap();
            let d =
                yield_for_target(&PurificationMap::new(Scheme::Double, &noise), 0.9, f_ch).unwrap();
            assert_eq!((s.n_rounds, d.n_rounds), (n_s, n_d), "p = {p}");
            assert!(s.yield_value <= 0.5f64.powi(n_s as i32));
            assert!(d.yield_value <= (1.0f64 / 3.0).powi(n_d as i32));
        }
    }

    #[test]
    fn yield_already_at_target() {
        let r = yield_for_target(
            &ideal(Scheme::Double),
            0.8,
            ChannelParams::new(0.8).unwrap(),
        )
        .unwrap();
        assert_eq!(r.n_rounds, 0);
        assert_eq!(r.yield_value, 1.0);
    }

    #[test]
    fn yield_unreachable_target() {
        let noise = NoiseParams::uniform(0.04, 0.02).unwrap();
        let m = PurificationMap::new(Scheme::Single, &noise);
        let err = yield_for_target(&m, 0.99, ChannelParams::new(0.8).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TargetUnreachable { .. }));
    }

    #[test]
    fn bound_examples() {
        let noise = NoiseParams::uniform(0.03, 0.0).unwrap();
        let a = upper_bound_first_order(&noise, BoundVariant::A);
        let b = upper_bound_first_order(&noise, BoundVariant::B);
        assert!((a - 0.984).abs() < 1e-12 && (b - a).abs() < 1e-15);
        assert_eq!(
            upper_bound_first_order(&NoiseParams::ideal(), BoundVariant::A),
            1.0
        );
        assert!((single_double_gap(0.015) - 0.008).abs() < 1e-15);
        assert_eq!(single_double_gap(0.0), 0.0);
    }

    #[test]
    fn kay_bound_variants_differ_only_by_first_term() {
        let noise = NoiseParams::new(
            NoiseKind::Kay {
                q: [0.01, 0.002, 0.005],
            },
            0.0,
        )
        .unwrap();
        let a = upper_bound_first_order(&noise, BoundVariant::A);
        let b = upper_bound_first_order(&noise, BoundVariant::B);
        assert!((a - b - 2.0 * (0.01 - 0.005)).abs() < 1e-15);
    }

    #[test]
    fn double_saturates_first_order_bound() {
        let p_g = 1e-5;
        let noise = NoiseParams::uniform(p_g, 0.0).unwrap();
        let f = fixed_points(&PurificationMap::new(Scheme::Double, &noise))
            .f_max_fidelity()
            .unwrap();
        assert!(((1.0 - f) / p_g - 8.0 / 15.0).abs() < 1e-3);
    }

    #[test]
    fn single_first_order_deficit() {
        // Residual phase errors of the ancilla's own gate reach the source:
        // 1 - F_max = 20/15 p_g to first order.
        let p_g = 1e-5;
        let noise = NoiseParams::uniform(p_g, 0.0).unwrap();
        let f = fixed_points(&PurificationMap::new(Scheme::Single, &noise))
            .f_max_fidelity()
            .unwrap();
        assert!(((1.0 - f) / p_g - 20.0 / 15.0).abs() < 1e-3);
    }

    #[test]
    fn threshold_grid_brackets() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.01).collect();
        let curve = working_range(Scheme::Double, &grid, &[0.0], NoiseFamily::Uniform).unwrap();
        let t = curve[0].p_g.unwrap();
        let inside = |p| is_inside(Scheme::Double, &NoiseParams::uniform(p, 0.0).unwrap());
        assert!(inside(t) && !inside(t + 2.0 * THRESHOLD_BISECTION_TOL));
    }

    #[test]
    fn p_m_threshold_exists() {
        for scheme in Scheme::ALL {
            let t = p_m_threshold(scheme, 0.0, NoiseFamily::Uniform)
                .unwrap()
                .unwrap();
            assert!(t.is_finite() && t > 0.0 && t < 0.5);
        }
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(
            working_range(Scheme::Single, &[0.02, 0.01], &[0.0], NoiseFamily::Uniform).is_err()
        );
        assert!(iterate(&ideal(Scheme::Single), &BellVector::PURE, 0).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [3.0, 5.0, 7.0];
        assert!((least_squares_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn map_output_normalized(
            w in proptest::array::uniform4(0.0f64..1.0),
            p_g in 0.0f64..0.2,
            p_m in 0.0f64..0.1,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let f = BellVector::normalize(w).unwrap();
            let noise = NoiseParams::uniform(p_g, p_m).unwrap();
            for scheme in Scheme::ALL {
                let m = PurificationMap::new(scheme, &noise);
                let (g, p) = apply_map(&m, &f).unwrap();
                prop_assert!((g.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!((p - m.raw(&f).iter().sum::<f64>()).abs() < 1e-15);
                prop_assert!(p > 0.0 && p <= 1.0);
            }
        }

        #[test]
        fn ideal_single_increases_fidelity(f in 0.5001f64..0.9999) {
            let (g, _) = apply_map(&ideal(Scheme::Single), &channel(f)).unwrap();
            prop_assert!(g.fidelity() > f);
        }
    }
}
