//! Subcommands. Each reads its inputs, writes its outputs into `--out`, and
//! records everything in `manifest.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use protpat_core::ingest::AliasMap;
use protpat_core::network::build_network_from_outages;
use protpat_core::rng::derive_seed;
use protpat_core::zipf::fit_mle;
use protpat_core::{
    calibrate_p_one_plus, degree_sequence, empirical_distribution, estimate_p_circuits,
    evaluate_model, generate_ensemble, group_into_generations, p_one_plus_observed,
    size_histogram, split_into_patterns, wasserstein, GenerationGroup, GeneratorConfig, Network,
    Pattern, Ratio, SequenceGraph, ZipfModel,
};

use crate::error::{CliError, Result};
use crate::formats::{self, ModelConfig};
use crate::manifest::RunManifest;
use crate::outages::parse_outage_file;
use crate::synth::{history_seed, synth_history, synth_network, SynthKind};

/// Pmf entries shown in the fit report.
pub const PMF_ROW_LEN: u64 = 7;
/// Pattern size from which outages count as large.
pub const LARGE_CUTOFF: u64 = 4;

#[derive(Debug, Parser)]
#[command(name = "protpat", version, about = "Outage pattern statistics and generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random stream of the command.
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Never changes outputs.
    #[arg(long, default_value_t = 0, global = true)]
    pub threads: usize,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean outage records, deduce the network, group outages by minute.
    Ingest {
        #[arg(long)]
        outages: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[arg(long)]
        exclusions: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Split generations into connected patterns.
    Extract {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        generations: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the size distribution and estimate attachment and circuit rates.
    Fit {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        patterns: PathBuf,
        /// Generation groups, for the parallel-circuit rate.
        #[arg(long)]
        generations: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Find the attachment probability whose generated estimate matches the target.
    Calibrate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `p_one_plus_target` from the config.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        ensemble: u64,
        #[arg(long, default_value_t = 0.005)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic patterns.
    Generate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        count: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare generated and observed patterns.
    Evaluate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        patterns: PathBuf,
        #[arg(long, default_value_t = 100)]
        repetitions: u64,
        #[arg(long, default_value_t = 10_000)]
        permutations: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Build a synthetic network and optionally an outage history on it.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long)]
        lines: usize,
        #[arg(long, default_value_t = 0.0)]
        multi_circuit_fraction: f64,
        /// Number of generated patterns written as an outage history.
        #[arg(long)]
        history: Option<u64>,
        #[arg(long, default_value_t = 4.1)]
        s: f64,
        #[arg(long, default_value_t = 0.3)]
        p_one_plus: f64,
        #[arg(long, default_value_t = 0.07)]
        p_circuits: f64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Ingest { common, .. }
            | Command::Extract { common, .. }
            | Command::Fit { common, .. }
            | Command::Calibrate { common, .. }
            | Command::Generate { common, .. }
            | Command::Evaluate { common, .. }
            | Command::Synth { common, .. } => common,
        }
    }
}

fn ratio_text(r: Option<Ratio>) -> String {
    match r {
        Some(r) => format!("{:.5} ({}/{})", r.value(), r.numerator, r.denominator),
        None => "insufficient data".to_string(),
    }
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn read_input<T>(m: &mut RunManifest, path: &Path, read: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
    let value = read(path)?;
    m.input(path)?;
    Ok(value)
}

pub fn run(command: &Command) -> Result<()> {
    let common = command.common();
    prepare_out(&common.out)?;
    let name = match command {
        Command::Ingest { .. } => "ingest",
        Command::Extract { .. } => "extract",
        Command::Fit { .. } => "fit",
        Command::Calibrate { .. } => "calibrate",
        Command::Generate { .. } => "generate",
        Command::Evaluate { .. } => "evaluate",
        Command::Synth { .. } => "synth",
    };
    let mut m = RunManifest::new(name, common.seed, &common.out);
    let outcome = match command {
        Command::Ingest { outages, aliases, exclusions, .. } => {
            ingest(&mut m, outages, aliases.as_deref(), exclusions.as_deref())
        }
        Command::Extract { network, generations, .. } => extract(&mut m, network, generations),
        Command::Fit { network, patterns, generations, .. } => {
            fit(&mut m, network, patterns, generations.as_deref())
        }
        Command::Calibrate { network, config, target, ensemble, tolerance, common } => {
            calibrate(&mut m, network, config, *target, *ensemble, *tolerance, common.seed)
        }
        Command::Generate { network, config, count, common } => {
            generate(&mut m, network, config, *count, common.seed)
        }
        Command::Evaluate { network, config, patterns, repetitions, permutations, common } => {
            evaluate(&mut m, network, config, patterns, *repetitions, *permutations, common.seed)
        }
        Command::Synth { kind, lines, multi_circuit_fraction, history, s, p_one_plus, p_circuits, common } => {
            synth(&mut m, *kind, *lines, *multi_circuit_fraction, *history, (*s, *p_one_plus, *p_circuits), common.seed)
        }
    };
    // a failed calibration still leaves its trace behind
    if outcome.is_ok() || !m.outputs.is_empty() {
        m.write()?;
    }
    outcome
}

fn ingest(m: &mut RunManifest, outages: &Path, aliases: Option<&Path>, exclusions: Option<&Path>) -> Result<()> {
    let alias_map = match aliases {
        Some(p) => read_input(m, p, formats::read_aliases)?,
        None => AliasMap::new(),
    };
    let excluded = match exclusions {
        Some(p) => read_input(m, p, formats::read_exclusions)?,
        None => Vec::new(),
    };
    let (records, stats) = parse_outage_file(outages, &alias_map)?;
    m.input(outages)?;
    if records.is_empty() {
        return Err(CliError::Degenerate("no automatic outages".into()));
    }
    let (network, build) = build_network_from_outages(&records, &excluded)?;
    let groups = group_into_generations(&records);

    let mut report = String::new();
    let _ = writeln!(report, "rows = {}", stats.rows);
    let _ = writeln!(report, "kept = {}", stats.kept);
    let _ = writeln!(report, "non_automatic = {}", stats.non_automatic);
    let _ = writeln!(report, "self_loop_dropped = {}", stats.self_loop_dropped);
    let _ = writeln!(report, "excluded_lines = {}", build.excluded_lines);
    let _ = writeln!(report, "discarded_lines = {}", build.discarded_lines);
    let _ = writeln!(report, "discarded_buses = {}", build.discarded_buses);
    let _ = writeln!(report, "buses = {}", network.bus_count());
    let _ = writeln!(report, "lines = {}", network.line_count());
    let _ = writeln!(report, "circuits = {}", network.circuit_count());
    let _ = writeln!(report, "generations = {}", groups.len());

    formats::write_network(&m_path(m, "network.csv"), &network)?;
    m.record("network.csv")?;
    formats::write_generations(&m_path(m, "generations.csv"), &groups)?;
    m.record("generations.csv")?;
    m.emit("ingest_report.txt", report)
}

fn m_path(m: &RunManifest, name: &str) -> PathBuf {
    Path::new(&m.out).join(name)
}

/// Drop lines outside the network; returns the kept group (if any) and the
/// number of dropped lines.
pub fn restrict_to_network(group: &GenerationGroup, network: &Network) -> (Option<GenerationGroup>, usize) {
    let mut kept = group.clone();
    kept.lines.retain(|pair, _| network.find_line(pair).is_some());
    let dropped = group.len() - kept.len();
    ((!kept.is_empty()).then_some(kept), dropped)
}

/// Connected patterns of every generation, in chronological order.
pub fn extract_patterns(groups: &[GenerationGroup], network: &Network) -> Result<(Vec<Pattern>, usize)> {
    let mut patterns = Vec::new();
    let mut dropped = 0;
    for g in groups {
        let (kept, d) = restrict_to_network(g, network);
        dropped += d;
        if let Some(k) = kept {
            patterns.extend(split_into_patterns(&k, network)?);
        }
    }
    Ok((patterns, dropped))
}

fn extract(m: &mut RunManifest, network: &Path, generations: &Path) -> Result<()> {
    let net = read_input(m, network, formats::read_network)?;
    let groups = read_input(m, generations, formats::read_generations)?;
    let (patterns, dropped) = extract_patterns(&groups, &net)?;
    if patterns.is_empty() {
        return Err(CliError::Degenerate("no outage patterns on the network".into()));
    }
    let dist = empirical_distribution(patterns.iter().map(degree_sequence))?;
    let mut report = String::new();
    let _ = writeln!(report, "generations = {}", groups.len());
    let _ = writeln!(report, "patterns = {}", patterns.len());
    let _ = writeln!(report, "lines_outside_network = {dropped}");
    let _ = writeln!(report, "distinct_degree_sequences = {}", dist.support().len());
    let _ = writeln!(report, "p_circuits = {}", ratio_text(estimate_p_circuits(&groups, &net)));
    m.emit("patterns.txt", formats::format_patterns(&patterns, &net))?;
    formats::write_distribution(&m_path(m, "distribution.csv"), &dist)?;
    m.record("distribution.csv")?;
    m.emit("extract_report.txt", report)
}

/// The fit report text.
pub fn fit_report(model: &ZipfModel, sizes: &[u64], p_one_plus: Option<Ratio>, p_circuits: Option<Ratio>) -> Result<String> {
    let mut r = String::new();
    let _ = writeln!(r, "s = {}", model.s());
    let _ = writeln!(r, "pepsi = {:.5}", model.pepsi());
    let _ = writeln!(r, "sample_size = {}", sizes.len());
    let _ = writeln!(r, "std_error = {:.5}", model.standard_error(sizes.len()));
    let _ = writeln!(r, "log_likelihood = {:.5}", model.log_likelihood(sizes));
    let row: Vec<String> = (1..=PMF_ROW_LEN)
        .map(|k| model.pmf(k).map(|p| format!("{p:.5}")))
        .collect::<protpat_core::Result<_>>()?;
    let _ = writeln!(r, "pmf_1_to_{PMF_ROW_LEN} = {}", row.join(" "));
    let _ = writeln!(r, "p_large_{LARGE_CUTOFF} = {:.5}", model.p_large(LARGE_CUTOFF)?);
    let _ = writeln!(r, "p_one_plus_observed = {}", ratio_text(p_one_plus));
    let _ = writeln!(r, "p_circuits = {}", ratio_text(p_circuits));
    Ok(r)
}

fn fit(m: &mut RunManifest, network: &Path, patterns: &Path, generations: Option<&Path>) -> Result<()> {
    let net = read_input(m, network, formats::read_network)?;
    let observed = read_input(m, patterns, |p| formats::read_patterns(p, &net))?;
    if observed.is_empty() {
        return Err(CliError::Degenerate("no patterns to fit".into()));
    }
    let p_circuits = match generations {
        Some(g) => estimate_p_circuits(&read_input(m, g, formats::read_generations)?, &net),
        None => None,
    };
    let sizes: Vec<u64> = observed.iter().map(|p| p.len() as u64).collect();
    let model = fit_mle(&sizes)?;
    let p_one_plus = p_one_plus_observed(&observed);
    let hist = size_histogram(&observed)?;

    let mut hist_csv = String::from("size,count,frequency\n");
    for (size, count) in &hist.counts {
        let _ = writeln!(hist_csv, "{size},{count},{:.10}", *count as f64 / hist.total as f64);
    }
    let config = ModelConfig {
        s: model.s(),
        p_one_plus: None,
        p_one_plus_target: p_one_plus.map(|r| r.value()),
        p_circuits: p_circuits.map_or(0.0, |r| r.value()),
    };
    m.emit("fit_report.txt", fit_report(&model, &sizes, p_one_plus, p_circuits)?)?;
    m.emit("size_histogram.csv", hist_csv)?;
    m.emit("model.conf", config.render())
}

fn generator_config(config: &ModelConfig, seed: u64, path: &Path) -> Result<GeneratorConfig> {
    let p_one_plus = config
        .p_one_plus
        .ok_or_else(|| CliError::format(path, 0, "missing `p_one_plus`; run calibrate first"))?;
    Ok(GeneratorConfig::new(ZipfModel::new(config.s)?, p_one_plus, config.p_circuits, seed)?)
}

fn calibrate(
    m: &mut RunManifest,
    network: &Path,
    config: &Path,
    target: Option<f64>,
    ensemble: u64,
    tolerance: f64,
    seed: u64,
) -> Result<()> {
    let net = read_input(m, network, formats::read_network)?;
    let model = read_input(m, config, ModelConfig::read)?;
    let target = target
        .or(model.p_one_plus_target)
        .ok_or_else(|| CliError::Usage("no target: pass --target or fit a corpus with patterns of 3+ lines".into()))?;
    m.parameter("target", target);
    m.parameter("ensemble", ensemble);
    m.parameter("tolerance", tolerance);
    let base = GeneratorConfig::new(ZipfModel::new(model.s)?, 0.5, model.p_circuits, seed)?;
    let cal = calibrate_p_one_plus(&net, &base, target, ensemble, tolerance)?;

    let mut trace = String::from("iteration,p_one_plus,generated,lower,upper\n");
    for step in &cal.trace {
        let _ = writeln!(
            trace,
            "{},{:.10},{:.10},{:.10},{:.10}",
            step.iteration, step.p_one_plus, step.generated, step.lower, step.upper
        );
    }
    m.emit("calibration_trace.csv", trace)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "target = {target}");
    let _ = writeln!(summary, "p_one_plus = {}", cal.p_one_plus);
    let _ = writeln!(summary, "generated = {}", cal.generated);
    let _ = writeln!(summary, "converged = {}", cal.converged);
    let _ = writeln!(summary, "iterations = {}", cal.trace.last().map_or(0, |s| s.iteration));
    m.emit("calibration.txt", summary)?;
    if !cal.converged {
        return Err(CliError::Calibration(format!(
            "no convergence within tolerance {tolerance}; last p_one_plus {} gave {}",
            cal.p_one_plus, cal.generated
        )));
    }
    let calibrated = ModelConfig { p_one_plus: Some(cal.p_one_plus), p_one_plus_target: Some(target), ..model };
    m.emit("model.conf", calibrated.render())
}

fn generate(m: &mut RunManifest, network: &Path, config: &Path, count: u64, seed: u64) -> Result<()> {
    let net = read_input(m, network, formats::read_network)?;
    let model = read_input(m, config, ModelConfig::read)?;
    m.parameter("count", count);
    let cfg = generator_config(&model, seed, config)?;
    let patterns = generate_ensemble(&net, &cfg, count)?;
    m.emit("generated.txt", formats::format_generated(&patterns, &net))
}

fn evaluate(
    m: &mut RunManifest,
    network: &Path,
    config: &Path,
    patterns: &Path,
    repetitions: u64,
    permutations: u64,
    seed: u64,
) -> Result<()> {
    let net = read_input(m, network, formats::read_network)?;
    let model = read_input(m, config, ModelConfig::read)?;
    let observed = read_input(m, patterns, |p| formats::read_patterns(p, &net))?;
    if observed.is_empty() {
        return Err(CliError::Degenerate("no observed patterns".into()));
    }
    m.parameter("repetitions", repetitions);
    m.parameter("permutations", permutations);
    let cfg = generator_config(&model, seed, config)?;
    let report = evaluate_model(&observed, &net, &cfg, repetitions, permutations)?;

    let mut text = String::new();
    let _ = writeln!(text, "repetitions = {}", report.repetitions);
    let _ = writeln!(text, "permutations = {permutations}");
    let _ = writeln!(text, "samples = {}", observed.len());
    let _ = writeln!(text, "mean_distance = {:.6}", report.mean);
    let _ = writeln!(text, "variance_distance = {:.6}", report.variance);
    let _ = writeln!(text, "mean_line_changes = {:.1}", report.mean * observed.len() as f64);
    let _ = writeln!(text, "median_p_value = {:.4}", report.median_p);
    let _ = writeln!(text, "p_values_at_least_0.05 = {}", report.count_p_at_least_005);
    let mut rows = String::from("repetition,distance,p_value\n");
    for (i, (d, p)) in report.distances.iter().zip(&report.p_values).enumerate() {
        let _ = writeln!(rows, "{i},{d:.10},{p:.10}");
    }

    // log-log data: observed size frequencies against the configured pmf
    let hist = size_histogram(&observed)?;
    let zipf = ZipfModel::new(model.s)?;
    let mut loglog = String::from("size,empirical_probability,fitted_probability\n");
    for (size, freq) in hist.frequencies() {
        let _ = writeln!(loglog, "{size},{freq:.10},{:.10}", zipf.pmf(size as u64)?);
    }

    // one reference ensemble for the distribution and transport plan files
    let reference = generate_ensemble(&net, &cfg.with_seed(derive_seed(seed, u64::MAX)), observed.len() as u64)?;
    let p = empirical_distribution(observed.iter().map(degree_sequence))?;
    let q = empirical_distribution(reference.iter().map(|g| degree_sequence(&g.pattern)))?;
    let (_, plan) = wasserstein(&p, &q, &mut SequenceGraph::new())?;

    m.emit("evaluation.txt", text)?;
    m.emit("evaluation.csv", rows)?;
    m.emit("loglog.csv", loglog)?;
    formats::write_distribution(&m_path(m, "distribution_observed.csv"), &p)?;
    m.record("distribution_observed.csv")?;
    formats::write_distribution(&m_path(m, "distribution_generated.csv"), &q)?;
    m.record("distribution_generated.csv")?;
    formats::write_plan(&m_path(m, "plan.csv"), &plan)?;
    m.record("plan.csv")
}

fn synth(
    m: &mut RunManifest,
    kind: SynthKind,
    lines: usize,
    multi_circuit_fraction: f64,
    history: Option<u64>,
    (s, p_one_plus, p_circuits): (f64, f64, f64),
    seed: u64,
) -> Result<()> {
    m.parameter("kind", format!("{kind:?}"));
    m.parameter("lines", lines);
    m.parameter("multi_circuit_fraction", multi_circuit_fraction);
    let net = synth_network(kind, lines, multi_circuit_fraction, seed)?;
    formats::write_network(&m_path(m, "network.csv"), &net)?;
    m.record("network.csv")?;
    if let Some(count) = history {
        m.parameter("history", count);
        m.parameter("s", s);
        m.parameter("p_one_plus", p_one_plus);
        m.parameter("p_circuits", p_circuits);
        let cfg = GeneratorConfig::new(ZipfModel::new(s)?, p_one_plus, p_circuits, history_seed(seed))?;
        let (csv, _) = synth_history(&net, &cfg, count)?;
        m.emit("outages.csv", csv)?;
        let truth = ModelConfig { s, p_one_plus: Some(p_one_plus), p_one_plus_target: None, p_circuits };
        m.emit("truth.conf", truth.render())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use protpat_core::BusPair;
    use std::collections::{BTreeMap, BTreeSet};

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["protpat", "generate", "--network", "n.csv", "--config", "c", "--count", "5", "--seed", "7", "--threads", "2", "--out", "o"]).unwrap();
        assert_eq!(cli.command.common().seed, 7);
        assert_eq!(cli.command.common().threads, 2);
        assert!(Cli::try_parse_from(["protpat", "synth", "--kind", "hexagon", "--lines", "3"]).is_err());
    }

    #[test]
    fn restrict_drops_unknown_lines() {
        let net = Network::from_lines([(BusPair::new("A", "B").unwrap(), 1), (BusPair::new("B", "C").unwrap(), 1)]).unwrap();
        let g = GenerationGroup {
            minute: "2001-01-01 00:00".parse().unwrap(),
            lines: BTreeMap::from([
                (BusPair::new("A", "B").unwrap(), BTreeSet::from(["1".to_string()])),
                (BusPair::new("D", "E").unwrap(), BTreeSet::from(["1".to_string()])),
            ]),
        };
        let (kept, dropped) = restrict_to_network(&g, &net);
        assert_eq!(dropped, 1);
        assert_eq!(kept.unwrap().len(), 1);
        let (patterns, dropped) = extract_patterns(&[g], &net).unwrap();
        assert_eq!((patterns.len(), dropped), (1, 1));
    }

    #[test]
    fn fit_report_table_row() {
        let model = ZipfModel::new(4.091_221_411_912_548_5).unwrap();
        let report = fit_report(&model, &[1, 1, 1, 2, 3], Ratio::new(1, 5), None).unwrap();
        assert!(report.contains("pmf_1_to_7 = 0.92911 0.05451"), "{report}");
        assert!(report.contains("p_one_plus_observed = 0.20000 (1/5)"));
        assert!(report.contains("p_circuits = insufficient data"));
    }
}
