//! Synthetic networks and outage histories with known parameters.

use chrono::{Duration, NaiveDate};
use clap::ValueEnum;
use rand::Rng;

use protpat_core::generator::generate_indexed;
use protpat_core::rng::{derive_seed, substream};
use protpat_core::{BusPair, GeneratedPattern, GeneratorConfig, Network};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Rectangular grid, filled row by row.
    GridMesh,
    /// Each new bus attaches to a uniformly chosen earlier bus.
    RandomTree,
    /// Each new bus attaches to up to two buses chosen by degree.
    BaLike,
}

const TOPOLOGY_STREAM: u64 = 0;
const MULTIPLICITY_STREAM: u64 = 1;
const HISTORY_STREAM: u64 = 2;
const CIRCUIT_STREAM: u64 = 3;

fn grid_edges(lines: usize) -> Vec<(String, String)> {
    // smallest square-ish grid holding `lines` edges: w columns, enough rows
    let mut w = 2usize;
    while 2 * w * (w - 1) < lines {
        w += 1;
    }
    let name = |r: usize, c: usize| format!("R{r:03}C{c:03}");
    let mut edges = Vec::with_capacity(lines);
    'fill: for r in 0.. {
        for c in 0..w {
            if c > 0 {
                edges.push((name(r, c - 1), name(r, c)));
                if edges.len() == lines {
                    break 'fill;
                }
            }
            if r > 0 {
                edges.push((name(r - 1, c), name(r, c)));
                if edges.len() == lines {
                    break 'fill;
                }
            }
        }
    }
    edges
}

fn bus(i: usize) -> String {
    format!("B{i:05}")
}

fn tree_edges<R: Rng>(lines: usize, rng: &mut R) -> Vec<(String, String)> {
    (1..=lines).map(|v| (bus(rng.random_range(0..v)), bus(v))).collect()
}

fn ba_edges<R: Rng>(lines: usize, rng: &mut R) -> Vec<(String, String)> {
    let mut edges = vec![(bus(0), bus(1))];
    // every bus appears once per incident line
    let mut ends = vec![0usize, 1];
    let mut next = 2usize;
    while edges.len() < lines {
        let m = 2.min(lines - edges.len()).min(next);
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = ends[rng.random_range(0..ends.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for t in chosen {
            edges.push((bus(t), bus(next)));
            ends.extend([t, next]);
        }
        next += 1;
    }
    edges
}

/// A connected network with exactly `lines` lines; each line independently
/// has two circuits with probability `multi_circuit_fraction`.
pub fn synth_network(kind: SynthKind, lines: usize, multi_circuit_fraction: f64, seed: u64) -> Result<Network> {
    if lines == 0 {
        return Err(CliError::Usage("--lines must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&multi_circuit_fraction) {
        return Err(CliError::Usage("--multi-circuit-fraction must be in [0, 1]".into()));
    }
    let mut rng = substream(seed, TOPOLOGY_STREAM);
    let edges = match kind {
        SynthKind::GridMesh => grid_edges(lines),
        SynthKind::RandomTree => tree_edges(lines, &mut rng),
        SynthKind::BaLike => ba_edges(lines, &mut rng),
    };
    let mut rng = substream(seed, MULTIPLICITY_STREAM);
    let table = edges.into_iter().map(|(a, b)| {
        let m = if rng.random::<f64>() < multi_circuit_fraction { 2 } else { 1 };
        (BusPair::new(a, b).expect("distinct synthetic buses"), m)
    });
    Ok(Network::from_lines(table.collect::<Vec<_>>())?)
}

/// Seed of the generator run that produces a synthetic history.
pub fn history_seed(seed: u64) -> u64 {
    derive_seed(seed, HISTORY_STREAM)
}

/// Outage CSV with one distinct minute per generated pattern. Each line's
/// outaged circuit is uniform among its circuits; a doubled line adds a
/// second, distinct circuit.
pub fn synth_history(
    network: &Network,
    config: &GeneratorConfig,
    count: u64,
) -> Result<(String, Vec<GeneratedPattern>)> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid start date");
    let patterns = (0..count)
        .map(|i| generate_indexed(network, config, config.seed, i))
        .collect::<protpat_core::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(crate::outages::OUTAGE_COLUMNS).expect("memory write");
        for (i, g) in patterns.iter().enumerate() {
            let minute = (start + Duration::minutes(i as i64)).format("%Y-%m-%d %H:%M").to_string();
            let mut rng = substream(derive_seed(config.seed, CIRCUIT_STREAM), i as u64);
            let mut rows: Vec<(BusPair, u32)> = Vec::new();
            for line in g.pattern.lines() {
                let pair = network.bus_pair(*line);
                let m = network.line_multiplicity(*line);
                let primary = rng.random_range(1..=m);
                rows.push((pair.clone(), primary));
                if g.extra_circuits.contains(line) {
                    let mut other = rng.random_range(1..m);
                    if other >= primary {
                        other += 1;
                    }
                    rows.push((pair, other));
                }
            }
            rows.sort();
            for (pair, circuit) in rows {
                w.write_record([minute.as_str(), pair.first(), pair.second(), &circuit.to_string(), "auto"])
                    .expect("memory write");
            }
        }
        w.flush().expect("memory write");
    }
    Ok((String::from_utf8(buf).expect("utf-8 csv"), patterns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use protpat_core::ZipfModel;

    #[test]
    fn exact_line_counts_and_connectivity() {
        for kind in [SynthKind::GridMesh, SynthKind::RandomTree, SynthKind::BaLike] {
            for lines in [1, 2, 7, 60, 480] {
                let n = synth_network(kind, lines, 0.0, 5).unwrap();
                assert_eq!(n.line_count(), lines, "{kind:?}");
            }
        }
        let tree = synth_network(SynthKind::RandomTree, 50, 0.0, 1).unwrap();
        assert_eq!(tree.bus_count(), 51);
        let grid = synth_network(SynthKind::GridMesh, 420, 0.0, 1).unwrap();
        assert_eq!(grid.bus_count(), 225);
        assert!(synth_network(SynthKind::GridMesh, 0, 0.0, 1).is_err());
    }

    #[test]
    fn multi_circuit_fraction_is_binomial() {
        let n = synth_network(SynthKind::GridMesh, 2000, 0.1, 9).unwrap();
        let multi = n.lines().filter(|(id, _)| n.multiplicity(*id) == 2).count() as f64;
        let sd = (2000.0f64 * 0.1 * 0.9).sqrt();
        assert!((multi - 200.0).abs() < 4.0 * sd, "{multi}");
    }

    #[test]
    fn history_rows_match_patterns() {
        let n = synth_network(SynthKind::GridMesh, 60, 0.5, 2).unwrap();
        let config = GeneratorConfig::new(ZipfModel::new(2.0).unwrap(), 0.3, 0.5, history_seed(2)).unwrap();
        let (csv, patterns) = synth_history(&n, &config, 50).unwrap();
        let rows = csv.lines().count() - 1;
        let expected: usize = patterns.iter().map(|g| g.pattern.len() + g.extra_circuits.len()).sum();
        assert_eq!(rows, expected);
        assert!(csv.starts_with("timestamp,from_bus,to_bus,circuit_id,automatic\n2000-01-01 00:00,"));
        let (again, _) = synth_history(&n, &config, 50).unwrap();
        assert_eq!(csv, again);
    }
}
