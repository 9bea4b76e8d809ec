//! Generative growth model for outage patterns and calibration of the
//! degree-1 attachment probability.
//!
//! A pattern starts from one random line, draws its target size from the
//! fitted Zipf distribution, and grows one adjacent line at a time. When the
//! network offers lines at both degree-1 and degree-≥2 pattern buses, the
//! degree-1 side is chosen with probability `p_one_plus`; otherwise the only
//! available side is used. Finally each multi-circuit line in the pattern
//! may lose one more parallel circuit with probability `p_circuits`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::network::{BusId, Line, LineId, Network};
use crate::pattern::{degree_sequence, OnePlusTally, Pattern, Ratio};
use crate::rng::{derive_seed, substream};
use crate::zipf::ZipfModel;
use crate::{Error, Result};

/// How the initial line is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution {
    Uniform,
    /// Non-negative weight per network line, indexed by `LineId`.
    Weighted(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub p_one_plus: f64,
    pub p_circuits: f64,
    pub size_model: ZipfModel,
    pub initial: InitialDistribution,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(size_model: ZipfModel, p_one_plus: f64, p_circuits: f64, seed: u64) -> Result<Self> {
        let config = GeneratorConfig {
            p_one_plus,
            p_circuits,
            size_model,
            initial: InitialDistribution::Uniform,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_p_one_plus(&self, p_one_plus: f64) -> Self {
        GeneratorConfig { p_one_plus, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_one_plus", self.p_one_plus), ("p_circuits", self.p_circuits)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if let InitialDistribution::Weighted(w) = &self.initial {
            if w.iter().any(|&x| !x.is_finite() || x < 0.0) || !w.iter().any(|&x| x > 0.0) {
                return Err(Error::InvalidParameter("initial line weights".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedPattern {
    /// Single-line view of the outaged lines.
    pub pattern: Pattern,
    /// Lines where one additional parallel circuit also outaged.
    pub extra_circuits: BTreeSet<Line>,
    pub target_size: u64,
    pub achieved_size: u64,
}

impl GeneratedPattern {
    pub fn saturated(&self) -> bool {
        self.achieved_size < self.target_size
    }
}

fn choose<R: Rng + ?Sized>(set: &BTreeSet<Line>, rng: &mut R) -> Line {
    let k = rng.random_range(0..set.len());
    *set.iter().nth(k).expect("index in range")
}

fn initial_line<R: Rng + ?Sized>(network: &Network, config: &GeneratorConfig, rng: &mut R) -> Result<LineId> {
    let n = network.line_count();
    match &config.initial {
        InitialDistribution::Uniform => Ok(LineId(rng.random_range(0..n) as u32)),
        InitialDistribution::Weighted(w) => {
            if w.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "{} initial weights for {n} lines",
                    w.len()
                )));
            }
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, &x) in w.iter().enumerate() {
                if u < x {
                    return Ok(LineId(i as u32));
                }
                u -= x;
            }
            // rounding: last positive weight
            let last = w.iter().rposition(|&x| x > 0.0).expect("some weight positive");
            Ok(LineId(last as u32))
        }
    }
}

/// Grow one pattern.
pub fn generate_pattern<R: Rng + ?Sized>(
    network: &Network,
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<GeneratedPattern> {
    if network.line_count() == 0 {
        return Err(Error::InvalidNetwork("network has no lines".into()));
    }
    let first = network.line(initial_line(network, config, rng)?);
    let target = config
        .size_model
        .sample_size(rng, network.line_count() as u64);

    let mut lines: BTreeSet<Line> = BTreeSet::from([first]);
    let mut degree: BTreeMap<BusId, u32> = BTreeMap::new();
    let (a, b) = first.endpoints();
    degree.insert(a, 1);
    degree.insert(b, 1);

    while (lines.len() as u64) < target {
        let mut at_one = BTreeSet::new();
        let mut at_two = BTreeSet::new();
        for (&bus, &d) in &degree {
            for &id in network.incident(bus) {
                let line = network.line(id);
                if lines.contains(&line) {
                    continue;
                }
                if d == 1 {
                    at_one.insert(line);
                } else {
                    at_two.insert(line);
                }
            }
        }
        let side = match (at_one.is_empty(), at_two.is_empty()) {
            (true, true) => break,
            (false, true) => &at_one,
            (true, false) => &at_two,
            (false, false) => {
                if rng.random::<f64>() < config.p_one_plus {
                    &at_one
                } else {
                    &at_two
                }
            }
        };
        let added = choose(side, rng);
        lines.insert(added);
        let (a, b) = added.endpoints();
        *degree.entry(a).or_default() += 1;
        *degree.entry(b).or_default() += 1;
    }

    let mut extra_circuits = BTreeSet::new();
    for line in &lines {
        if network.line_multiplicity(*line) >= 2 && rng.random::<f64>() < config.p_circuits {
            extra_circuits.insert(*line);
        }
    }
    let achieved = lines.len() as u64;
    Ok(GeneratedPattern {
        pattern: Pattern::from_connected(lines),
        extra_circuits,
        target_size: target,
        achieved_size: achieved,
    })
}

/// Pattern `index` of the ensemble keyed by `seed`.
pub fn generate_indexed(
    network: &Network,
    config: &GeneratorConfig,
    seed: u64,
    index: u64,
) -> Result<GeneratedPattern> {
    let mut rng = substream(seed, index);
    generate_pattern(network, config, &mut rng)
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(count: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
fn fold_indices<T, F, M>(count: u64, f: F, merge: M) -> T
where
    T: Send + Default,
    F: Fn(u64) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    use rayon::prelude::*;
    // fixed chunking keeps the reduction tree independent of thread count
    const CHUNK: u64 = 4096;
    let chunks = count.div_ceil(CHUNK);
    let partials: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(count))
                .map(&f)
                .fold(T::default(), &merge)
        })
        .collect();
    partials.into_iter().fold(T::default(), merge)
}

#[cfg(not(feature = "parallel"))]
fn fold_indices<T, F, M>(count: u64, f: F, merge: M) -> T
where
    T: Default,
    F: Fn(u64) -> T,
    M: Fn(T, T) -> T,
{
    (0..count).map(f).fold(T::default(), merge)
}



/// `count` patterns; pattern `i` uses the substream `(config.seed, i)`.
pub fn generate_ensemble(
    network: &Network,
    config: &GeneratorConfig,
    count: u64,
) -> Result<Vec<GeneratedPattern>> {
    if count == 0 {
        return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
    }
    config.validate()?;
    map_indices(count, |i| generate_indexed(network, config, config.seed, i))
        .into_iter()
        .collect()
}

/// Degree-1 attachment estimate over generated patterns, by the same
/// estimator applied to observed patterns.
pub fn measure_p_one_plus_generated(patterns: &[GeneratedPattern]) -> Option<Ratio> {
    let mut tally = OnePlusTally::default();
    for p in patterns {
        tally.add(&degree_sequence(&p.pattern));
    }
    tally.ratio()
}

/// Generate `count` patterns and tally the estimator without keeping them.
pub fn measure_p_one_plus_streaming(
    network: &Network,
    config: &GeneratorConfig,
    count: u64,
) -> Result<Option<Ratio>> {
    config.validate()?;
    if network.line_count() == 0 {
        return Err(Error::InvalidNetwork("network has no lines".into()));
    }
    let tally = fold_indices(
        count,
        |i| {
            let mut t = OnePlusTally::default();
            let g = generate_indexed(network, config, config.seed, i)
                .expect("validated config on a non-empty network");
            t.add(&degree_sequence(&g.pattern));
            t
        },
        OnePlusTally::merge,
    );
    Ok(tally.ratio())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationStep {
    pub iteration: u32,
    pub p_one_plus: f64,
    pub generated: f64,
    /// Bracket after this step.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub p_one_plus: f64,
    pub generated: f64,
    pub converged: bool,
    pub trace: Vec<CalibrationStep>,
}

pub const CALIBRATION_MAX_ITERATIONS: u32 = 20;

/// Bisection on `p_one_plus` until the generated estimate is within
/// `tolerance` of `target`.
///
/// Every iterate uses the same ensemble seed (`base.seed`), so the estimates
/// are compared on common random numbers. The two endpoints are evaluated
/// first (iteration 0) and must bracket the target.
pub fn calibrate_p_one_plus(
    network: &Network,
    base: &GeneratorConfig,
    target: f64,
    ensemble_size: u64,
    tolerance: f64,
) -> Result<Calibration> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidParameter(format!("target {target} is not in [0, 1]")));
    }
    if ensemble_size == 0 {
        return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
    }
    let measure = |p: f64| -> Result<f64> {
        measure_p_one_plus_streaming(network, &base.with_p_one_plus(p), ensemble_size)?
            .map(|r| r.value())
            .ok_or(Error::InsufficientData(
                "no generated pattern has three or more lines",
            ))
    };
    let at_zero = measure(0.0)?;
    let at_one = measure(1.0)?;
    let mut trace = Vec::new();
    trace.push(CalibrationStep { iteration: 0, p_one_plus: 0.0, generated: at_zero, lower: 0.0, upper: 1.0 });
    trace.push(CalibrationStep { iteration: 0, p_one_plus: 1.0, generated: at_one, lower: 0.0, upper: 1.0 });

    for (p, g) in [(0.0, at_zero), (1.0, at_one)] {
        if (g - target).abs() <= tolerance {
            return Ok(Calibration { p_one_plus: p, generated: g, converged: true, trace });
        }
    }
    if (at_zero - target).signum() == (at_one - target).signum() {
        return Err(Error::UnreachableTarget { target, at_zero, at_one });
    }
    let increasing = at_one > at_zero;
    let (mut lower, mut upper) = (0.0f64, 1.0f64);
    let mut last = (0.5, f64::NAN);
    for iteration in 1..=CALIBRATION_MAX_ITERATIONS {
        let mid = 0.5 * (lower + upper);
        let g = measure(mid)?;
        last = (mid, g);
        let converged = (g - target).abs() <= tolerance;
        if !converged {
            if (g < target) == increasing {
                lower = mid;
            } else {
                upper = mid;
            }
        }
        trace.push(CalibrationStep { iteration, p_one_plus: mid, generated: g, lower, upper });
        if converged {
            return Ok(Calibration { p_one_plus: mid, generated: g, converged: true, trace });
        }
    }
    Ok(Calibration { p_one_plus: last.0, generated: last.1, converged: false, trace })
}

/// Seed of the ensemble generated in evaluation repetition `rep`.
pub(crate) fn repetition_seed(seed: u64, rep: u64, stream: u64) -> u64 {
    derive_seed(derive_seed(seed, rep), stream)
}
