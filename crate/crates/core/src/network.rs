//! The single-line transmission network deduced from outage data.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ingest::{BusPair, OutageRecord};
use crate::pattern::Pattern;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineId(pub u32);

/// An unordered bus pair by index, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Line {
    a: BusId,
    b: BusId,
}

impl Line {
    /// Returns `None` for a self-loop.
    pub fn new(x: BusId, y: BusId) -> Option<Self> {
        match x.cmp(&y) {
            core::cmp::Ordering::Less => Some(Line { a: x, b: y }),
            core::cmp::Ordering::Greater => Some(Line { a: y, b: x }),
            core::cmp::Ordering::Equal => None,
        }
    }

    pub fn endpoints(&self) -> (BusId, BusId) {
        (self.a, self.b)
    }

    pub fn touches(&self, bus: BusId) -> bool {
        self.a == bus || self.b == bus
    }
}

/// Connected single-line network with per-line circuit multiplicity.
///
/// Buses are indexed in lexicographic name order and lines in `(a, b)`
/// order, so two networks built from the same data are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    buses: Vec<String>,
    bus_index: BTreeMap<String, BusId>,
    lines: Vec<Line>,
    multiplicity: Vec<u32>,
    line_index: BTreeMap<Line, LineId>,
    incident: Vec<Vec<LineId>>,
}

impl Network {
    /// Build from explicit lines. The result must be connected and free of
    /// duplicate lines.
    pub fn from_lines<I>(lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BusPair, u32)>,
    {
        let mut table: BTreeMap<BusPair, u32> = BTreeMap::new();
        for (pair, mult) in lines {
            if mult == 0 {
                return Err(Error::InvalidNetwork(format!("line {pair} has multiplicity 0")));
            }
            if table.insert(pair.clone(), mult).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate line {pair}")));
            }
        }
        if table.is_empty() {
            return Err(Error::EmptyInput("network has no lines"));
        }
        let network = Self::assemble(&table);
        if network.components().len() != 1 {
            return Err(Error::InvalidNetwork("network is not connected".into()));
        }
        Ok(network)
    }

    fn assemble(table: &BTreeMap<BusPair, u32>) -> Self {
        let names: BTreeSet<&str> = table
            .keys()
            .flat_map(|p| [p.first(), p.second()])
            .collect();
        let buses: Vec<String> = names.iter().map(|s| String::from(*s)).collect();
        let bus_index: BTreeMap<String, BusId> = buses
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), BusId(i as u32)))
            .collect();
        let mut entries: Vec<(Line, u32)> = table
            .iter()
            .map(|(pair, &m)| {
                let line = Line::new(bus_index[pair.first()], bus_index[pair.second()])
                    .expect("bus pairs are distinct");
                (line, m)
            })
            .collect();
        entries.sort();
        let mut incident = vec![Vec::new(); buses.len()];
        let mut line_index = BTreeMap::new();
        for (i, (line, _)) in entries.iter().enumerate() {
            let id = LineId(i as u32);
            incident[line.a.0 as usize].push(id);
            incident[line.b.0 as usize].push(id);
            line_index.insert(*line, id);
        }
        Network {
            buses,
            bus_index,
            lines: entries.iter().map(|e| e.0).collect(),
            multiplicity: entries.iter().map(|e| e.1).collect(),
            line_index,
            incident,
        }
    }

    /// Connected components as sets of bus ids.
    fn components(&self) -> Vec<Vec<BusId>> {
        let mut seen = vec![false; self.buses.len()];
        let mut out = Vec::new();
        for start in 0..self.buses.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([BusId(start as u32)]);
            while let Some(bus) = queue.pop_front() {
                comp.push(bus);
                for &l in &self.incident[bus.0 as usize] {
                    let other = self.other_end(l, bus);
                    if !seen[other.0 as usize] {
                        seen[other.0 as usize] = true;
                        queue.push_back(other);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn bus_name(&self, bus: BusId) -> &str {
        &self.buses[bus.0 as usize]
    }

    pub fn bus_id(&self, name: &str) -> Option<BusId> {
        self.bus_index.get(name).copied()
    }

    pub fn line(&self, id: LineId) -> Line {
        self.lines[id.0 as usize]
    }

    pub fn lines(&self) -> impl ExactSizeIterator<Item = (LineId, Line)> + '_ {
        self.lines
            .iter()
            .enumerate()
            .map(|(i, l)| (LineId(i as u32), *l))
    }

    pub fn line_id(&self, line: Line) -> Option<LineId> {
        self.line_index.get(&line).copied()
    }

    /// Look up a line by bus names, in either order.
    pub fn find_line(&self, pair: &BusPair) -> Option<Line> {
        let a = self.bus_id(pair.first())?;
        let b = self.bus_id(pair.second())?;
        let line = Line::new(a, b)?;
        self.line_index.contains_key(&line).then_some(line)
    }

    pub fn bus_pair(&self, line: Line) -> BusPair {
        BusPair::new(self.bus_name(line.a), self.bus_name(line.b)).expect("distinct buses")
    }

    pub fn multiplicity(&self, id: LineId) -> u32 {
        self.multiplicity[id.0 as usize]
    }

    pub fn line_multiplicity(&self, line: Line) -> u32 {
        self.line_id(line).map_or(0, |id| self.multiplicity(id))
    }

    pub fn incident(&self, bus: BusId) -> &[LineId] {
        &self.incident[bus.0 as usize]
    }

    pub fn other_end(&self, id: LineId, bus: BusId) -> BusId {
        let line = self.line(id);
        if line.a == bus {
            line.b
        } else {
            line.a
        }
    }

    /// Total circuits counting parallel circuits separately.
    pub fn circuit_count(&self) -> u64 {
        self.multiplicity.iter().map(|&m| u64::from(m)).sum()
    }
}

/// Summary of what network construction discarded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub excluded_lines: usize,
    pub discarded_lines: usize,
    pub discarded_buses: usize,
}

/// Deduce the network from outage records.
///
/// Multiplicity is the number of distinct circuit ids observed per bus pair.
/// Excluded lines are removed before the largest connected component (most
/// buses, then most lines, then smallest bus name) is kept.
pub fn build_network_from_outages(
    records: &[OutageRecord],
    exclusions: &[BusPair],
) -> Result<(Network, BuildReport)> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no outage records"));
    }
    let mut circuits: BTreeMap<BusPair, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        circuits.entry(r.line()).or_default().insert(&r.circuit_id);
    }
    let mut report = BuildReport::default();
    for ex in exclusions {
        if circuits.remove(ex).is_some() {
            report.excluded_lines += 1;
        }
    }
    if circuits.is_empty() {
        return Err(Error::EmptyInput("every outaged line was excluded"));
    }
    let table: BTreeMap<BusPair, u32> = circuits
        .into_iter()
        .map(|(pair, ids)| (pair, ids.len() as u32))
        .collect();
    let full = Network::assemble(&table);
    let comps = full.components();
    let keep = comps
        .iter()
        .max_by(|x, y| {
            let lines = |c: &Vec<BusId>| -> usize {
                c.iter().map(|&b| full.incident(b).len()).sum::<usize>() / 2
            };
            x.len()
                .cmp(&y.len())
                .then(lines(x).cmp(&lines(y)))
                // prefer the component holding the smaller bus id
                .then(y[0].cmp(&x[0]))
        })
        .expect("at least one component");
    if comps.len() == 1 {
        return Ok((full, report));
    }
    let keep: BTreeSet<BusId> = keep.iter().copied().collect();
    let reduced: BTreeMap<BusPair, u32> = full
        .lines()
        .filter(|(_, l)| keep.contains(&l.a))
        .map(|(id, l)| (full.bus_pair(l), full.multiplicity(id)))
        .collect();
    report.discarded_lines = full.line_count() - reduced.len();
    report.discarded_buses = full.bus_count() - keep.len();
    Ok((Network::assemble(&reduced), report))
}

/// Network lines outside a pattern that share a bus with it, split by the
/// pattern degree of the shared bus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Attachable {
    pub at_degree_1: BTreeSet<Line>,
    pub at_degree_2plus: BTreeSet<Line>,
}

impl Attachable {
    pub fn is_empty(&self) -> bool {
        self.at_degree_1.is_empty() && self.at_degree_2plus.is_empty()
    }
}

/// Lines available to grow `pattern`. A candidate touching both a degree-1
/// and a degree-≥2 pattern bus is listed on both sides.
pub fn attachable_lines(network: &Network, pattern: &Pattern) -> Result<Attachable> {
    let mut degree: BTreeMap<BusId, u32> = BTreeMap::new();
    for line in pattern.lines() {
        if network.line_id(*line).is_none() {
            return Err(Error::InvalidPattern(format!(
                "line {:?} is not in the network",
                line.endpoints()
            )));
        }
        *degree.entry(line.a).or_default() += 1;
        *degree.entry(line.b).or_default() += 1;
    }
    let mut out = Attachable::default();
    for (&bus, &d) in &degree {
        for &id in network.incident(bus) {
            let line = network.line(id);
            if pattern.contains(&line) {
                continue;
            }
            if d == 1 {
                out.at_degree_1.insert(line);
            } else {
                out.at_degree_2plus.insert(line);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ingest::Minute;
    use alloc::string::ToString;

    pub(crate) fn net(edges: &[(&str, &str)]) -> Network {
        Network::from_lines(
            edges
                .iter()
                .map(|(a, b)| (BusPair::new(*a, *b).unwrap(), 1)),
        )
        .unwrap()
    }

    pub(crate) fn pat(network: &Network, edges: &[(&str, &str)]) -> Pattern {
        Pattern::new(
            edges
                .iter()
                .map(|(a, b)| network.find_line(&BusPair::new(*a, *b).unwrap()).unwrap()),
        )
        .unwrap()
    }

    fn names(network: &Network, set: &BTreeSet<Line>) -> Vec<String> {
        set.iter().map(|l| network.bus_pair(*l).to_string()).collect()
    }

    fn record(a: &str, b: &str, c: &str) -> OutageRecord {
        OutageRecord {
            timestamp: Minute::new(2001, 1, 1, 0, 0).unwrap(),
            from_bus: a.into(),
            to_bus: b.into(),
            circuit_id: c.into(),
            automatic: true,
        }
    }

    #[test]
    fn largest_component_is_kept() {
        let records = [
            record("A", "B", "1"),
            record("B", "C", "1"),
            record("D", "E", "1"),
        ];
        let (n, report) = build_network_from_outages(&records, &[]).unwrap();
        assert_eq!(n.bus_count(), 3);
        assert_eq!(n.line_count(), 2);
        assert!(n.bus_id("D").is_none());
        assert_eq!(report.discarded_lines, 1);
        assert_eq!(report.discarded_buses, 2);
    }

    #[test]
    fn distinct_circuits_set_multiplicity() {
        let records = [record("A", "B", "1"), record("B", "A", "2"), record("A", "B", "1")];
        let (n, _) = build_network_from_outages(&records, &[]).unwrap();
        assert_eq!(n.line_count(), 1);
        assert_eq!(n.multiplicity(LineId(0)), 2);
        assert_eq!(n.circuit_count(), 2);
    }

    #[test]
    fn exclusions_are_removed_before_component_selection() {
        let records = [
            record("A", "B", "1"),
            record("B", "C", "1"),
            record("C", "D", "1"),
        ];
        let ex = [BusPair::new("C", "B").unwrap()];
        let (n, report) = build_network_from_outages(&records, &ex).unwrap();
        assert_eq!(report.excluded_lines, 1);
        // two single-line components; tie broken toward the smaller bus name
        assert_eq!(n.line_count(), 1);
        assert!(n.bus_id("A").is_some());
    }

    #[test]
    fn empty_records_error() {
        assert!(matches!(
            build_network_from_outages(&[], &[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn from_lines_rejects_disconnected_and_duplicates() {
        let ab = BusPair::new("A", "B").unwrap();
        let cd = BusPair::new("C", "D").unwrap();
        assert!(Network::from_lines([(ab.clone(), 1), (cd, 1)]).is_err());
        assert!(Network::from_lines([(ab.clone(), 1), (ab.clone(), 2)]).is_err());
        assert!(Network::from_lines([(ab, 0)]).is_err());
    }

    #[test]
    fn adjacency_lists_each_line_at_both_ends() {
        let n = net(&[("A", "B"), ("B", "C"), ("C", "A"), ("C", "D")]);
        let total: usize = (0..n.bus_count())
            .map(|b| n.incident(BusId(b as u32)).len())
            .sum();
        assert_eq!(total, 2 * n.line_count());
    }

    #[test]
    fn path_attaches_at_degree_one() {
        let n = net(&[("A", "B"), ("B", "C")]);
        let att = attachable_lines(&n, &pat(&n, &[("A", "B")])).unwrap();
        assert_eq!(names(&n, &att.at_degree_1), ["B-C"]);
        assert!(att.at_degree_2plus.is_empty());
    }

    #[test]
    fn star_attaches_at_center() {
        let n = net(&[("X", "a"), ("X", "b"), ("X", "c"), ("X", "d")]);
        let att = attachable_lines(&n, &pat(&n, &[("X", "a"), ("X", "b")])).unwrap();
        assert!(att.at_degree_1.is_empty());
        assert_eq!(names(&n, &att.at_degree_2plus), ["X-c", "X-d"]);
    }

    #[test]
    fn four_cycle_attachments() {
        let n = net(&[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")]);
        let att = attachable_lines(&n, &pat(&n, &[("A", "B"), ("B", "C")])).unwrap();
        assert_eq!(names(&n, &att.at_degree_1), ["A-D", "C-D"]);
        assert!(att.at_degree_2plus.is_empty());
    }

    #[test]
    fn line_touching_both_kinds_is_on_both_sides() {
        // pattern B-A, B-C, C-D: B has degree 2, A and D degree 1; line A-C
        // touches A (deg 1) and C (deg 2)
        let n = net(&[("A", "B"), ("B", "C"), ("C", "D"), ("A", "C")]);
        let att = attachable_lines(&n, &pat(&n, &[("A", "B"), ("B", "C"), ("C", "D")])).unwrap();
        assert_eq!(names(&n, &att.at_degree_1), ["A-C"]);
        assert_eq!(names(&n, &att.at_degree_2plus), ["A-C"]);
    }

    #[test]
    fn foreign_pattern_is_rejected() {
        let n = net(&[("A", "B"), ("B", "C")]);
        let other = net(&[("A", "B"), ("B", "C"), ("A", "C")]);
        let p = pat(&other, &[("A", "C")]);
        assert!(attachable_lines(&n, &p).is_err());
    }
}
