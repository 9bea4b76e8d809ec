//! Connected outage patterns, their degree sequences, and the pattern-level
//! statistics used to fit the generative model.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ingest::{GenerationGroup, Minute};
use crate::network::{BusId, Line, Network};
use crate::{Error, Result};

/// A non-empty connected set of single lines.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    lines: BTreeSet<Line>,
    pub source_minute: Option<Minute>,
}

impl Pattern {
    pub fn new<I: IntoIterator<Item = Line>>(lines: I) -> Result<Self> {
        let lines: BTreeSet<Line> = lines.into_iter().collect();
        if lines.is_empty() {
            return Err(Error::InvalidPattern("pattern has no lines".into()));
        }
        if !is_connected(&lines) {
            return Err(Error::InvalidPattern("pattern is not connected".into()));
        }
        Ok(Pattern { lines, source_minute: None })
    }

    /// Caller guarantees the lines are non-empty and connected.
    pub(crate) fn from_connected(lines: BTreeSet<Line>) -> Self {
        debug_assert!(!lines.is_empty() && is_connected(&lines));
        Pattern { lines, source_minute: None }
    }

    pub fn with_minute(mut self, minute: Minute) -> Self {
        self.source_minute = Some(minute);
        self
    }

    pub fn lines(&self) -> impl ExactSizeIterator<Item = &Line> + '_ {
        self.lines.iter()
    }

    pub fn contains(&self, line: &Line) -> bool {
        self.lines.contains(line)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn buses(&self) -> BTreeSet<BusId> {
        self.lines
            .iter()
            .flat_map(|l| {
                let (a, b) = l.endpoints();
                [a, b]
            })
            .collect()
    }

    pub fn is_subgraph_of(&self, network: &Network) -> bool {
        self.lines.iter().all(|l| network.line_id(*l).is_some())
    }
}

fn find(parent: &mut BTreeMap<BusId, BusId>, x: BusId) -> BusId {
    let mut root = x;
    while let Some(&p) = parent.get(&root) {
        if p == root {
            break;
        }
        root = p;
    }
    let mut cur = x;
    while cur != root {
        let next = parent[&cur];
        parent.insert(cur, root);
        cur = next;
    }
    root
}

/// Group lines into connected components, each ordered by its smallest line.
fn components(lines: &BTreeSet<Line>) -> Vec<BTreeSet<Line>> {
    let mut parent: BTreeMap<BusId, BusId> = BTreeMap::new();
    for l in lines {
        let (a, b) = l.endpoints();
        parent.entry(a).or_insert(a);
        parent.entry(b).or_insert(b);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(ra.max(rb), ra.min(rb));
        }
    }
    let mut by_root: BTreeMap<BusId, BTreeSet<Line>> = BTreeMap::new();
    for l in lines {
        let root = find(&mut parent, l.endpoints().0);
        by_root.entry(root).or_default().insert(*l);
    }
    let mut out: Vec<BTreeSet<Line>> = by_root.into_values().collect();
    out.sort_by(|x, y| x.first().cmp(&y.first()));
    out
}

fn is_connected(lines: &BTreeSet<Line>) -> bool {
    components(lines).len() == 1
}

/// Connected components of the subgraph formed by a generation's lines.
pub fn split_into_patterns(group: &GenerationGroup, network: &Network) -> Result<Vec<Pattern>> {
    let mut lines = BTreeSet::new();
    for pair in group.lines.keys() {
        let line = network.find_line(pair).ok_or_else(|| {
            Error::InvalidPattern(format!("line {pair} at {} is not in the network", group.minute))
        })?;
        lines.insert(line);
    }
    Ok(components(&lines)
        .into_iter()
        .map(|c| Pattern::from_connected(c).with_minute(group.minute))
        .collect())
}

/// Bus degrees of a pattern in canonical descending order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeSequence(Vec<u32>);

impl DegreeSequence {
    /// Sorts into canonical order. Entries must be positive with an even sum.
    pub fn new(mut degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidSequence("empty sequence".into()));
        }
        if degrees.contains(&0) {
            return Err(Error::InvalidSequence("zero degree".into()));
        }
        if degrees.iter().map(|&d| u64::from(d)).sum::<u64>() % 2 != 0 {
            return Err(Error::InvalidSequence("odd degree sum".into()));
        }
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        Ok(DegreeSequence(degrees))
    }

    /// Caller guarantees canonical order and positive entries.
    pub(crate) fn from_canonical(degrees: Vec<u32>) -> Self {
        debug_assert!(degrees.windows(2).all(|w| w[0] >= w[1]));
        DegreeSequence(degrees)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn bus_count(&self) -> usize {
        self.0.len()
    }

    pub fn degree_sum(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for DegreeSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let degrees = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidSequence(format!("bad entry {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        let seq = DegreeSequence::new(degrees.clone())?;
        if seq.0 != degrees {
            return Err(Error::InvalidSequence(format!("{s:?} is not in descending order")));
        }
        Ok(seq)
    }
}

pub fn degree_sequence(pattern: &Pattern) -> DegreeSequence {
    let mut degree: BTreeMap<BusId, u32> = BTreeMap::new();
    for line in pattern.lines() {
        let (a, b) = line.endpoints();
        *degree.entry(a).or_default() += 1;
        *degree.entry(b).or_default() += 1;
    }
    let mut d: Vec<u32> = degree.into_values().collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    DegreeSequence(d)
}

/// Number of lines: half the degree sum.
pub fn line_count(sequence: &DegreeSequence) -> u32 {
    sequence.degree_sum() / 2
}

/// Line additions made at a degree-1 bus while assembling the pattern from
/// a single line: the number of degrees ≥ 2, with the triangle and the
/// 4-cycle corrected for the double-counted closing line.
pub fn n_one_plus(sequence: &DegreeSequence) -> u32 {
    match sequence.degrees() {
        [2, 2, 2] => 2,
        [2, 2, 2, 2] => 3,
        d => d.iter().filter(|&&x| x >= 2).count() as u32,
    }
}

/// A count ratio whose denominator is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Option<Self> {
        (denominator > 0).then_some(Ratio { numerator, denominator })
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Running sums for the degree-1 attachment estimator over patterns with at
/// least three lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OnePlusTally {
    pub at_degree_1: u64,
    pub additions: u64,
}

impl OnePlusTally {
    pub fn add(&mut self, sequence: &DegreeSequence) {
        let n = line_count(sequence);
        if n >= 3 {
            self.at_degree_1 += u64::from(n_one_plus(sequence)) - 1;
            self.additions += u64::from(n) - 2;
        }
    }

    pub fn merge(mut self, other: OnePlusTally) -> Self {
        self.at_degree_1 += other.at_degree_1;
        self.additions += other.additions;
        self
    }

    /// `None` when no pattern had three or more lines.
    pub fn ratio(&self) -> Option<Ratio> {
        Ratio::new(self.at_degree_1, self.additions)
    }
}

pub fn p_one_plus_of_sequences<'a, I>(sequences: I) -> Option<Ratio>
where
    I: IntoIterator<Item = &'a DegreeSequence>,
{
    let mut tally = OnePlusTally::default();
    for s in sequences {
        tally.add(s);
    }
    tally.ratio()
}

/// Empirical probability of attaching at a degree-1 bus, estimated from the
/// final shapes of patterns with three or more lines. `None` means no such
/// pattern exists.
pub fn p_one_plus_observed(patterns: &[Pattern]) -> Option<Ratio> {
    let sequences: Vec<DegreeSequence> = patterns.iter().map(degree_sequence).collect();
    p_one_plus_of_sequences(&sequences)
}

/// Generations with two or more outaged circuits of some multi-circuit line,
/// over generations touching any multi-circuit line. Lines absent from the
/// network are ignored.
pub fn estimate_p_circuits(groups: &[GenerationGroup], network: &Network) -> Option<Ratio> {
    let mut touched = 0u64;
    let mut doubled = 0u64;
    for group in groups {
        let mut any = false;
        let mut double = false;
        for (pair, circuits) in &group.lines {
            let Some(line) = network.find_line(pair) else { continue };
            if network.line_multiplicity(line) >= 2 {
                any = true;
                double |= circuits.len() >= 2;
            }
        }
        touched += u64::from(any);
        doubled += u64::from(double);
    }
    Ratio::new(doubled, touched)
}

/// Counts of patterns by number of lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
}

impl SizeHistogram {
    pub fn from_sizes<I: IntoIterator<Item = usize>>(sizes: I) -> Result<Self> {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for s in sizes {
            *counts.entry(s).or_default() += 1;
        }
        let total = counts.values().sum();
        if total == 0 {
            return Err(Error::EmptyInput("no patterns for size histogram"));
        }
        Ok(SizeHistogram { counts, total })
    }

    pub fn frequency(&self, size: usize) -> f64 {
        self.counts.get(&size).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.counts
            .iter()
            .map(move |(&k, &c)| (k, c as f64 / self.total as f64))
    }

    /// Every observed size, expanded; used to fit the size distribution.
    pub fn sizes(&self) -> Vec<u64> {
        self.counts
            .iter()
            .flat_map(|(&k, &c)| core::iter::repeat_n(k as u64, c as usize))
            .collect()
    }
}

pub fn size_histogram(patterns: &[Pattern]) -> Result<SizeHistogram> {
    SizeHistogram::from_sizes(patterns.iter().map(Pattern::len))
}

/// Render a pattern as `A-B;B-C` with each edge's bus names sorted.
pub fn format_pattern(pattern: &Pattern, network: &Network) -> String {
    let mut edges: Vec<String> = pattern
        .lines()
        .map(|l| format!("{}", network.bus_pair(*l)))
        .collect();
    edges.sort();
    edges.join(";")
}
