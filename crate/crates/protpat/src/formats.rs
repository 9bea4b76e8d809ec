//! Text and CSV formats read and written by the commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use protpat_core::distance::PatternDistribution;
use protpat_core::ingest::AliasMap;
use protpat_core::pattern::format_pattern;
use protpat_core::{
    BusPair, DegreeSequence, GeneratedPattern, GenerationGroup, Line, Minute, Network, Pattern,
    TransportPlan,
};

use crate::error::{CliError, Result};
use crate::outages::{column_indices, csv_error, reader};

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Vec<u8>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).expect("writing to memory");
        fill(&mut w).expect("writing to memory");
        w.flush().expect("writing to memory");
    }
    buf
}

/// Rows of the named columns, each with its 1-based file line.
fn read_rows(path: &Path, columns: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let idx = column_indices(path, &header, columns)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        out.push((line, idx.iter().map(|&i| row.get(i).unwrap_or("").to_string()).collect()));
    }
    Ok(out)
}

fn pair(path: &Path, line: u64, a: &str, b: &str) -> Result<BusPair> {
    BusPair::new(a, b).map_err(|e| CliError::format(path, line, e.to_string()))
}

// network: from_bus,to_bus,multiplicity

pub fn write_network(path: &Path, network: &Network) -> Result<()> {
    let mut rows: Vec<(BusPair, u32)> = network
        .lines()
        .map(|(id, l)| (network.bus_pair(l), network.multiplicity(id)))
        .collect();
    rows.sort();
    let bytes = csv_bytes(&["from_bus", "to_bus", "multiplicity"], |w| {
        for (p, m) in &rows {
            w.write_record([p.first(), p.second(), &m.to_string()])?;
        }
        Ok(())
    });
    write_file(path, bytes)
}

pub fn read_network(path: &Path) -> Result<Network> {
    let mut lines = Vec::new();
    for (line, f) in read_rows(path, &["from_bus", "to_bus", "multiplicity"])? {
        let m: u32 = f[2]
            .parse()
            .map_err(|_| CliError::format(path, line, format!("bad multiplicity `{}`", f[2])))?;
        lines.push((pair(path, line, &f[0], &f[1])?, m));
    }
    Network::from_lines(lines).map_err(|e| CliError::format(path, 0, e.to_string()))
}

// exclusions: from_bus,to_bus

pub fn read_exclusions(path: &Path) -> Result<Vec<BusPair>> {
    let aliases = AliasMap::new();
    read_rows(path, &["from_bus", "to_bus"])?
        .into_iter()
        .map(|(line, f)| pair(path, line, &aliases.canonical(&f[0]), &aliases.canonical(&f[1])))
        .collect()
}

// aliases: raw_name,canonical_name

pub fn read_aliases(path: &Path) -> Result<AliasMap> {
    let mut map = AliasMap::new();
    for (_, f) in read_rows(path, &["raw_name", "canonical_name"])? {
        map.insert(&f[0], &f[1]);
    }
    Ok(map)
}

// generations: minute,from_bus,to_bus,circuit_id (one row per outaged circuit)

pub fn write_generations(path: &Path, groups: &[GenerationGroup]) -> Result<()> {
    let bytes = csv_bytes(&["minute", "from_bus", "to_bus", "circuit_id"], |w| {
        for g in groups {
            let minute = g.minute.to_string();
            for (p, circuits) in &g.lines {
                for c in circuits {
                    w.write_record([minute.as_str(), p.first(), p.second(), c])?;
                }
            }
        }
        Ok(())
    });
    write_file(path, bytes)
}

pub fn read_generations(path: &Path) -> Result<Vec<GenerationGroup>> {
    let mut by_minute: BTreeMap<Minute, BTreeMap<BusPair, BTreeSet<String>>> = BTreeMap::new();
    for (line, f) in read_rows(path, &["minute", "from_bus", "to_bus", "circuit_id"])? {
        let minute: Minute = f[0]
            .parse()
            .map_err(|e: protpat_core::Error| CliError::format(path, line, e.to_string()))?;
        let circuit = if f[3].is_empty() { "1".to_string() } else { f[3].clone() };
        by_minute
            .entry(minute)
            .or_default()
            .entry(pair(path, line, &f[1], &f[2])?)
            .or_default()
            .insert(circuit);
    }
    Ok(by_minute
        .into_iter()
        .map(|(minute, lines)| GenerationGroup { minute, lines })
        .collect())
}

// patterns: `A-B;B-C`, optionally followed by `|+A-B` per doubled line

fn parse_edge(edge: &str, network: &Network) -> Option<Line> {
    // bus names may contain '-', so try every split point
    edge.match_indices('-').find_map(|(i, _)| {
        let p = BusPair::new(edge[..i].trim(), edge[i + 1..].trim()).ok()?;
        network.find_line(&p)
    })
}

/// One pattern line: the pattern and the lines marked with an extra circuit.
pub fn parse_pattern_line(text: &str, network: &Network) -> std::result::Result<(Pattern, BTreeSet<Line>), String> {
    let mut parts = text.split('|');
    let body = parts.next().unwrap_or("");
    let mut lines = BTreeSet::new();
    for edge in body.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let l = parse_edge(edge, network).ok_or_else(|| format!("line `{edge}` is not in the network"))?;
        lines.insert(l);
    }
    let pattern = Pattern::new(lines).map_err(|e| e.to_string())?;
    let mut extras = BTreeSet::new();
    for extra in parts {
        let edge = extra
            .trim()
            .strip_prefix('+')
            .ok_or_else(|| format!("extra-circuit annotation `{extra}` must start with `+`"))?;
        let l = parse_edge(edge, network).ok_or_else(|| format!("line `{edge}` is not in the network"))?;
        if !pattern.contains(&l) {
            return Err(format!("extra circuit `{edge}` is not part of the pattern"));
        }
        extras.insert(l);
    }
    Ok((pattern, extras))
}

pub fn read_patterns(path: &Path, network: &Network) -> Result<Vec<Pattern>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let (p, _) = parse_pattern_line(raw, network)
            .map_err(|m| CliError::format(path, i as u64 + 1, m))?;
        out.push(p);
    }
    Ok(out)
}

pub fn format_patterns(patterns: &[Pattern], network: &Network) -> String {
    let mut s = String::new();
    for p in patterns {
        s.push_str(&format_pattern(p, network));
        s.push('\n');
    }
    s
}

pub fn format_generated(patterns: &[GeneratedPattern], network: &Network) -> String {
    let mut s = String::new();
    for g in patterns {
        s.push_str(&format_pattern(&g.pattern, network));
        let mut extras: Vec<String> = g.extra_circuits.iter().map(|l| network.bus_pair(*l).to_string()).collect();
        extras.sort();
        for e in extras {
            let _ = write!(s, "|+{e}");
        }
        s.push('\n');
    }
    s
}

// distribution: degree_sequence,probability

pub fn write_distribution(path: &Path, dist: &PatternDistribution) -> Result<()> {
    let bytes = csv_bytes(&["degree_sequence", "probability"], |w| {
        for (s, p) in dist.support().iter().zip(dist.probabilities()) {
            w.write_record([s.to_string(), format!("{p:.10}")])?;
        }
        Ok(())
    });
    write_file(path, bytes)
}

pub fn read_distribution(path: &Path) -> Result<PatternDistribution> {
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for (line, f) in read_rows(path, &["degree_sequence", "probability"])? {
        support.push(
            DegreeSequence::from_str(&f[0]).map_err(|e| CliError::format(path, line, e.to_string()))?,
        );
        probs.push(
            f[1].parse::<f64>()
                .map_err(|_| CliError::format(path, line, format!("bad probability `{}`", f[1])))?,
        );
    }
    // written at 10 decimals; renormalize the rounding away
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(CliError::format(path, 0, format!("probabilities sum to {total}")));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    PatternDistribution::new(support, probs).map_err(|e| CliError::format(path, 0, e.to_string()))
}

// plan: from_sequence,to_sequence,mass

pub fn write_plan(path: &Path, plan: &TransportPlan) -> Result<()> {
    let bytes = csv_bytes(&["from_sequence", "to_sequence", "mass"], |w| {
        for (a, b, m) in plan.entries() {
            if m > 0.0 {
                w.write_record([a.to_string(), b.to_string(), format!("{m:.10}")])?;
            }
        }
        Ok(())
    });
    write_file(path, bytes)
}

/// Generator parameters as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub s: f64,
    pub p_one_plus: Option<f64>,
    pub p_one_plus_target: Option<f64>,
    pub p_circuits: f64,
}

impl ModelConfig {
    pub fn render(&self) -> String {
        let mut out = format!("s = {}\n", self.s);
        if let Some(p) = self.p_one_plus {
            let _ = writeln!(out, "p_one_plus = {p}");
        }
        if let Some(t) = self.p_one_plus_target {
            let _ = writeln!(out, "p_one_plus_target = {t}");
        }
        let _ = writeln!(out, "p_circuits = {}", self.p_circuits);
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = read_key_values(path)?;
        let get = |key: &str| -> Result<Option<f64>> {
            kv.get(key)
                .map(|(line, v)| {
                    v.parse::<f64>()
                        .map_err(|_| CliError::format(path, *line, format!("`{key}` is not a number")))
                })
                .transpose()
        };
        Ok(ModelConfig {
            s: get("s")?.ok_or_else(|| CliError::format(path, 0, "missing `s`"))?,
            p_one_plus: get("p_one_plus")?,
            p_one_plus_target: get("p_one_plus_target")?,
            p_circuits: get("p_circuits")?.unwrap_or(0.0),
        })
    }
}

/// `key = value` lines; `#` starts a comment.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, (u64, String)>> {
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.split('#').next().unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| CliError::format(path, i as u64 + 1, "expected `key = value`"))?;
        out.insert(k.trim().to_string(), (i as u64 + 1, v.trim().to_string()));
    }
    Ok(out)
}
