//! Edit distance between degree sequences and the Wasserstein distance
//! between distributions of degree sequences.
//!
//! Two sequences are adjacent when one is obtained from the other by adding
//! a single line, either between two existing buses or from an existing bus
//! to a new one, such that the result can still be realized as a connected
//! simple pattern. The distance is the shortest path length in that graph.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::pattern::{line_count, DegreeSequence};
use crate::transport;
use crate::{Error, Result};

/// Havel-Hakimi: can the degrees be realized by a simple graph?
///
/// Works on counts per degree value, so each reduction step costs the
/// number of distinct values it touches rather than a sort.
fn havel_hakimi(degrees: &[u32]) -> bool {
    let Some(&top) = degrees.iter().max() else {
        return true;
    };
    let mut count = vec![0usize; top as usize + 1];
    for &d in degrees {
        count[d as usize] += 1;
    }
    let mut moved: Vec<(usize, usize)> = Vec::new();
    let mut high = top as usize;
    loop {
        while high > 0 && count[high] == 0 {
            high -= 1;
        }
        if high == 0 {
            return true;
        }
        count[high] -= 1;
        // lower the `high` largest remaining degrees by one
        let mut need = high;
        let mut v = high;
        moved.clear();
        while need > 0 {
            if v == 0 {
                return false;
            }
            let take = count[v].min(need);
            if take > 0 {
                count[v] -= take;
                moved.push((v - 1, take));
                need -= take;
            }
            v -= 1;
        }
        for &(v, n) in &moved {
            count[v] += n;
        }
    }
}

/// True iff the degrees are positive, realizable as a simple graph, and have
/// enough lines for a connected realization (`sum >= 2 (buses - 1)`).
pub fn is_connected_graphical(degrees: &[u32]) -> bool {
    if degrees.is_empty() || degrees.contains(&0) {
        return false;
    }
    let sum: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    if !sum.is_multiple_of(2) || sum < 2 * (degrees.len() as u64 - 1) {
        return false;
    }
    havel_hakimi(degrees)
}

fn canonical(mut d: Vec<u32>) -> DegreeSequence {
    d.retain(|&x| x > 0);
    d.sort_unstable_by(|a, b| b.cmp(a));
    DegreeSequence::from_canonical(d)
}

/// Every valid sequence one line addition or removal away.
pub fn neighbors(sequence: &DegreeSequence) -> BTreeSet<DegreeSequence> {
    let d = sequence.degrees();
    let mut out = BTreeSet::new();
    let mut push = |candidate: Vec<u32>| {
        if is_connected_graphical(&candidate) {
            out.insert(canonical(candidate));
        }
    };
    for i in 0..d.len() {
        // equal values give identical results; skip repeats
        if i > 0 && d[i] == d[i - 1] {
            continue;
        }
        // line to a new bus
        let mut c = d.to_vec();
        c[i] += 1;
        c.push(1);
        push(c);
        for j in i + 1..d.len() {
            if j > i + 1 && d[j] == d[j - 1] {
                continue;
            }
            let mut c = d.to_vec();
            c[i] += 1;
            c[j] += 1;
            push(c);
            // removal; dropping two leaf buses at once is not an inverse addition
            if d[i] == 1 && d[j] == 1 {
                continue;
            }
            let mut c = d.to_vec();
            c[i] -= 1;
            c[j] -= 1;
            c.retain(|&x| x > 0);
            if !c.is_empty() {
                push(c);
            }
        }
    }
    out
}

/// Lower bound on the distance, from the sorted, zero-padded vectors.
///
/// A line addition adds 1 to two distinct entries, at least one of them
/// already positive, so the additions number at least half the total
/// increase, the largest single increase, and the count of new buses.
/// Removals mirror this, and additions minus removals is the line count
/// difference. The sorted alignment minimizes every one of these terms at
/// once, so no other matching of buses gives a smaller bound.
fn heuristic(a: &[u32], b: &[u32]) -> u32 {
    let len = a.len().max(b.len());
    let (mut up, mut down, mut max_up, mut max_down) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..len {
        let x = i64::from(a.get(i).copied().unwrap_or(0));
        let y = i64::from(b.get(i).copied().unwrap_or(0));
        if y > x {
            up += y - x;
            max_up = max_up.max(y - x);
        } else {
            down += x - y;
            max_down = max_down.max(x - y);
        }
    }
    let new_buses = b.len().saturating_sub(a.len()) as i64;
    let lost_buses = a.len().saturating_sub(b.len()) as i64;
    let net = (up - down) / 2;
    let additions = ((up + 1) / 2).max(max_up).max(new_buses);
    let removals = ((down + 1) / 2).max(max_down).max(lost_buses);
    (2 * additions.max(removals + net) - net) as u32
}

/// Sequences with at most this many lines keep their neighbor lists between
/// queries; larger ones are rare, have long lists, and are recomputed.
const CACHED_MAX_LINES: u32 = 16;

/// Lazily expanded graph of degree sequences. Neighbor lists of small
/// sequences and every computed distance are cached, so one instance should
/// serve many distance queries.
#[derive(Debug, Clone, Default)]
pub struct SequenceGraph {
    adjacency: BTreeMap<DegreeSequence, Vec<DegreeSequence>>,
    /// Distance and the cap it was computed under.
    distances: BTreeMap<(DegreeSequence, DegreeSequence), (u32, u32)>,
}

impl SequenceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of sequences whose neighbor lists are cached.
    pub fn expanded(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&mut self, sequence: &DegreeSequence) -> Vec<DegreeSequence> {
        if line_count(sequence) > CACHED_MAX_LINES {
            return neighbors(sequence).into_iter().collect();
        }
        self.adjacency
            .entry(sequence.clone())
            .or_insert_with(|| neighbors(sequence).into_iter().collect())
            .clone()
    }

    /// Shortest path length between `a` and `b` through sequences with at
    /// most `cap` lines.
    ///
    /// Unit edge weights; the search is Dijkstra ordered by distance plus an
    /// admissible lower bound, reopening a node whenever a shorter path to it
    /// appears, so the first time `b` is popped its distance is exact.
    pub fn distance(&mut self, a: &DegreeSequence, b: &DegreeSequence, cap: u32) -> Result<u32> {
        for s in [a, b] {
            if !is_connected_graphical(s.degrees()) {
                return Err(Error::InvalidSequence(format!(
                    "{s} is not a connected simple degree sequence"
                )));
            }
            if line_count(s) > cap {
                return Err(Error::CapExceeded { cap });
            }
        }
        if a == b {
            return Ok(0);
        }
        let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        if let Some(&(d, used)) = self.distances.get(&key) {
            // a path meeting the lower bound stays shortest under a looser cap
            if used == cap || (used < cap && d == heuristic(a.degrees(), b.degrees())) {
                return Ok(d);
            }
        }
        let d = self.search(a, b, cap)?;
        self.distances.insert(key, (d, cap));
        Ok(d)
    }

    fn search(&mut self, a: &DegreeSequence, b: &DegreeSequence, cap: u32) -> Result<u32> {
        let mut best: BTreeMap<DegreeSequence, u32> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(a.clone(), 0);
        // among equal estimates, expand the deepest node first
        heap.push(Reverse((heuristic(a.degrees(), b.degrees()), Reverse(0u32), a.clone())));
        while let Some(Reverse((_, Reverse(g), node))) = heap.pop() {
            if &node == b {
                return Ok(g);
            }
            if best.get(&node).is_some_and(|&known| known < g) {
                continue;
            }
            for nb in self.neighbors(&node) {
                if line_count(&nb) > cap {
                    continue;
                }
                let ng = g + 1;
                if best.get(&nb).is_some_and(|&known| known <= ng) {
                    continue;
                }
                best.insert(nb.clone(), ng);
                let f = ng + heuristic(nb.degrees(), b.degrees());
                heap.push(Reverse((f, Reverse(ng), nb)));
            }
        }
        Err(Error::CapExceeded { cap })
    }

    /// Pairwise distances among `support`, row-major, with the line cap set
    /// to the largest line count plus `CAP_SLACK`.
    pub fn distance_matrix(&mut self, support: &[DegreeSequence]) -> Result<Vec<u32>> {
        let cap = default_cap(support.iter());
        let k = support.len();
        let mut out = vec![0u32; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let d = self.distance(&support[i], &support[j], cap)?;
                out[i * k + j] = d;
                out[j * k + i] = d;
            }
        }
        Ok(out)
    }
}

/// Extra lines allowed above the largest sequence when searching paths.
pub const CAP_SLACK: u32 = 2;

pub fn default_cap<'a, I: Iterator<Item = &'a DegreeSequence>>(support: I) -> u32 {
    support.map(line_count).max().unwrap_or(1) + CAP_SLACK
}

/// One-shot distance with a fresh graph.
pub fn sequence_distance(a: &DegreeSequence, b: &DegreeSequence, cap: u32) -> Result<u32> {
    SequenceGraph::new().distance(a, b, cap)
}

/// Probability mass over distinct degree sequences, ordered by line count
/// then sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDistribution {
    support: Vec<DegreeSequence>,
    probabilities: Vec<f64>,
}

fn support_order(a: &DegreeSequence, b: &DegreeSequence) -> core::cmp::Ordering {
    line_count(a).cmp(&line_count(b)).then_with(|| a.cmp(b))
}

impl PatternDistribution {
    pub fn new(support: Vec<DegreeSequence>, probabilities: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probabilities.len() {
            return Err(Error::InvalidParameter(
                "distribution needs matching non-empty support and probabilities".into(),
            ));
        }
        if probabilities.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidParameter("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mut pairs: Vec<(DegreeSequence, f64)> = support.into_iter().zip(probabilities).collect();
        pairs.sort_by(|x, y| support_order(&x.0, &y.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate support entry".into()));
        }
        let (support, probabilities) = pairs.into_iter().unzip();
        Ok(PatternDistribution { support, probabilities })
    }

    pub fn support(&self) -> &[DegreeSequence] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, sequence: &DegreeSequence) -> f64 {
        self.support
            .iter()
            .position(|s| s == sequence)
            .map_or(0.0, |i| self.probabilities[i])
    }
}

/// Normalized counts of each degree sequence.
pub fn empirical_distribution<I>(sequences: I) -> Result<PatternDistribution>
where
    I: IntoIterator<Item = DegreeSequence>,
{
    let mut counts: BTreeMap<DegreeSequence, u64> = BTreeMap::new();
    let mut total = 0u64;
    for s in sequences {
        *counts.entry(s).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyInput("no patterns for empirical distribution"));
    }
    let (support, probabilities) = counts
        .into_iter()
        .map(|(s, c)| (s, c as f64 / total as f64))
        .unzip();
    PatternDistribution::new(support, probabilities)
}

/// Optimal transport plan between two pattern distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub sources: Vec<DegreeSequence>,
    pub targets: Vec<DegreeSequence>,
    /// Row-major `sources.len() x targets.len()` masses.
    pub mass: Vec<f64>,
    pub objective: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.targets.len() + j]
    }

    /// Non-zero entries as `(source, target, mass)`.
    pub fn entries(&self) -> impl Iterator<Item = (&DegreeSequence, &DegreeSequence, f64)> + '_ {
        let n = self.targets.len();
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(move |(k, &m)| (&self.sources[k / n], &self.targets[k % n], m))
    }
}

/// Exact Wasserstein distance under the sequence edit distance, with the
/// optimal plan.
pub fn wasserstein(
    p: &PatternDistribution,
    q: &PatternDistribution,
    graph: &mut SequenceGraph,
) -> Result<(f64, TransportPlan)> {
    let cap = default_cap(p.support().iter().chain(q.support()));
    let (m, n) = (p.support.len(), q.support.len());
    let mut cost = vec![0.0; m * n];
    for (i, a) in p.support.iter().enumerate() {
        for (j, b) in q.support.iter().enumerate() {
            cost[i * n + j] = f64::from(graph.distance(a, b, cap)?);
        }
    }
    let sol = transport::solve(&p.probabilities, &q.probabilities, &cost)?;
    Ok((
        sol.objective,
        TransportPlan {
            sources: p.support.clone(),
            targets: q.support.clone(),
            mass: sol.flow,
            objective: sol.objective,
        },
    ))
}

/// Wasserstein distance between two mass vectors on a shared support with a
/// precomputed metric. Mass common to both sides stays in place (the cost is
/// a metric), so only the signed difference is transported.
pub fn wasserstein_on_support(p: &[f64], q: &[f64], dist: &[u32]) -> Result<f64> {
    let k = p.len();
    if q.len() != k || dist.len() != k * k {
        return Err(Error::InvalidParameter("support size mismatch".into()));
    }
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut supply = Vec::new();
    let mut demand = Vec::new();
    for i in 0..k {
        let diff = p[i] - q[i];
        if diff > 0.0 {
            rows.push(i);
            supply.push(diff);
        } else if diff < 0.0 {
            cols.push(i);
            demand.push(-diff);
        }
    }
    if rows.is_empty() || cols.is_empty() {
        return Ok(0.0);
    }
    // float residue from the subtraction; rebalance onto the largest entry
    let gap: f64 = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
    let (idx, _) = demand
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
    demand[idx] += gap;
    if demand[idx] < 0.0 {
        demand[idx] = 0.0;
    }
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            cost.push(f64::from(dist[i * k + j]));
        }
    }
    Ok(transport::solve(&supply, &demand, &cost)?.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn seq(d: &[u32]) -> DegreeSequence {
        DegreeSequence::new(d.to_vec()).unwrap()
    }

    #[test]
    fn graphical_examples() {
        assert!(is_connected_graphical(&[2, 1, 1]));
        assert!(is_connected_graphical(&[3, 1, 1, 1]));
        assert!(!is_connected_graphical(&[3, 3, 1, 1]));
        assert!(!is_connected_graphical(&[1, 1, 1]));
        // two disjoint lines: graphical but not connectable
        assert!(!is_connected_graphical(&[1, 1, 1, 1]));
        assert!(is_connected_graphical(&[2, 2, 2]));
        assert!(!is_connected_graphical(&[2, 0, 2, 2]));
        assert!(!is_connected_graphical(&[]));
    }

    #[test]
    fn additions_of_two_line_path() {
        let got: Vec<_> = neighbors(&seq(&[2, 1, 1]))
            .into_iter()
            .filter(|s| line_count(s) == 3)
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, ["2,2,1,1", "2,2,2", "3,1,1,1"]);
    }

    #[test]
    fn single_line_has_no_removals() {
        let nb = neighbors(&seq(&[1, 1]));
        assert!(nb.iter().all(|s| line_count(s) == 2));
        assert!(nb.contains(&seq(&[2, 1, 1])));
    }

    #[test]
    fn triangle_removes_to_path_only() {
        let removals: Vec<_> = neighbors(&seq(&[2, 2, 2]))
            .into_iter()
            .filter(|s| line_count(s) == 2)
            .collect();
        assert_eq!(removals, [seq(&[2, 1, 1])]);
    }

    #[test]
    fn small_distances() {
        assert_eq!(sequence_distance(&seq(&[1, 1]), &seq(&[2, 1, 1]), 4).unwrap(), 1);
        assert_eq!(sequence_distance(&seq(&[2, 1, 1]), &seq(&[2, 1, 1]), 4).unwrap(), 0);
        assert_eq!(sequence_distance(&seq(&[2, 2, 1, 1]), &seq(&[2, 2, 2]), 6).unwrap(), 2);
        assert_eq!(sequence_distance(&seq(&[1, 1]), &seq(&[3, 1, 1, 1]), 5).unwrap(), 2);
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            sequence_distance(&seq(&[1, 1]), &seq(&[3, 1, 1, 1]), 2),
            Err(Error::CapExceeded { cap: 2 })
        );
        assert!(sequence_distance(&seq(&[3, 3, 1, 1]), &seq(&[1, 1]), 9).is_err());
    }

    #[test]
    fn heuristic_is_admissible_on_neighbors() {
        let s = seq(&[3, 2, 2, 1, 1, 1]);
        for nb in neighbors(&s) {
            assert!(heuristic(s.degrees(), nb.degrees()) <= 1);
        }
    }

    #[test]
    fn empirical_counts() {
        let d = empirical_distribution([seq(&[1, 1]), seq(&[2, 1, 1]), seq(&[1, 1])]).unwrap();
        assert_eq!(d.support(), &[seq(&[1, 1]), seq(&[2, 1, 1])]);
        assert!((d.probability(&seq(&[1, 1])) - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.probability(&seq(&[2, 1, 1])) - 1.0 / 3.0).abs() < 1e-15);
        let point = empirical_distribution([seq(&[2, 2, 2])]).unwrap();
        assert_eq!(point.probabilities(), &[1.0]);
        assert!(empirical_distribution(core::iter::empty()).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(PatternDistribution::new(vec![seq(&[1, 1])], vec![0.5]).is_err());
        assert!(PatternDistribution::new(
            vec![seq(&[1, 1]), seq(&[1, 1])],
            vec![0.5, 0.5]
        )
        .is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let mut g = SequenceGraph::new();
        let p = empirical_distribution([seq(&[1, 1])]).unwrap();
        let q = empirical_distribution([seq(&[2, 1, 1])]).unwrap();
        assert!((wasserstein(&p, &q, &mut g).unwrap().0 - 1.0).abs() < 1e-12);
        assert!(wasserstein(&p, &p, &mut g).unwrap().0.abs() < 1e-12);

        let q = PatternDistribution::new(vec![seq(&[1, 1]), seq(&[3, 1, 1, 1])], vec![0.9, 0.1])
            .unwrap();
        let (w, plan) = wasserstein(&p, &q, &mut g).unwrap();
        assert!((w - 0.2).abs() < 1e-12);
        assert!((plan.get(0, 0) - 0.9).abs() < 1e-12);
        assert!((plan.get(0, 1) - 0.1).abs() < 1e-12);
        assert_eq!(plan.entries().count(), 2);
    }

    #[test]
    fn shared_support_matches_full_lp() {
        let mut g = SequenceGraph::new();
        let support = [seq(&[1, 1]), seq(&[2, 1, 1]), seq(&[2, 2, 2]), seq(&[3, 1, 1, 1])];
        let dist = g.distance_matrix(&support).unwrap();
        let p = [0.5, 0.2, 0.2, 0.1];
        let q = [0.4, 0.1, 0.1, 0.4];
        let reduced = wasserstein_on_support(&p, &q, &dist).unwrap();
        let pd = PatternDistribution::new(support.to_vec(), p.to_vec()).unwrap();
        let qd = PatternDistribution::new(support.to_vec(), q.to_vec()).unwrap();
        let full = wasserstein(&pd, &qd, &mut g).unwrap().0;
        assert!((reduced - full).abs() < 1e-12);
        assert_eq!(wasserstein_on_support(&p, &p, &dist).unwrap(), 0.0);
    }
}
