//! Two-sample permutation test on degree-sequence distributions and
//! repeated generated-vs-observed evaluation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::distance::{wasserstein_on_support, SequenceGraph};
use crate::generator::{generate_indexed, map_indices, repetition_seed, GeneratorConfig};
use crate::network::Network;
use crate::pattern::{degree_sequence, DegreeSequence, Pattern};
use crate::rng::stream;
use crate::{Error, Result};

/// Permuted statistics within this of the observed one count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationTestResult {
    pub observed_statistic: f64,
    pub permutation_count: u64,
    pub p_value: f64,
    pub seed: u64,
}

/// Pooled samples as indices into a sorted support, with the distance matrix
/// over that support.
struct Pool {
    dist: Vec<u32>,
    /// Support index of every pooled sample, sorted.
    items: Vec<usize>,
    totals: Vec<u64>,
}

impl Pool {
    fn new(a: &[DegreeSequence], b: &[DegreeSequence], graph: &mut SequenceGraph) -> Result<(Self, Vec<u64>)> {
        let mut index: BTreeMap<&DegreeSequence, usize> = BTreeMap::new();
        for s in a.iter().chain(b) {
            index.insert(s, 0);
        }
        let support: Vec<DegreeSequence> = index.keys().map(|s| (*s).clone()).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let dist = graph.distance_matrix(&support)?;
        let mut totals = vec![0u64; support.len()];
        let mut counts_a = vec![0u64; support.len()];
        for s in a {
            counts_a[index[s]] += 1;
        }
        for s in a.iter().chain(b) {
            totals[index[s]] += 1;
        }
        let items = totals
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| core::iter::repeat_n(i, c as usize))
            .collect();
        Ok((Pool { dist, items, totals }, counts_a))
    }

    /// Distance between the group with `counts` (of size `k`) and the rest.
    fn statistic(&self, counts: &[u64], k: usize, scratch: &mut (Vec<f64>, Vec<f64>)) -> Result<f64> {
        let rest = (self.items.len() - k) as f64;
        let (p, q) = scratch;
        p.clear();
        q.clear();
        for (&c, &t) in counts.iter().zip(&self.totals) {
            p.push(c as f64 / k as f64);
            q.push((t - c) as f64 / rest);
        }
        wasserstein_on_support(p, q, &self.dist)
    }
}

/// Permutation test of `set_a` against `set_b` with the Wasserstein distance
/// between their empirical distributions as statistic.
///
/// The pool is sorted before shuffling, so the result does not depend on the
/// order of either input nor on which set is passed first.
pub fn permutation_test(
    set_a: &[DegreeSequence],
    set_b: &[DegreeSequence],
    permutations: u64,
    seed: u64,
    graph: &mut SequenceGraph,
) -> Result<PermutationTestResult> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::EmptyInput("permutation test sample"));
    }
    let (small, large) = if set_a.len() <= set_b.len() { (set_a, set_b) } else { (set_b, set_a) };
    let (pool, counts) = Pool::new(small, large, graph)?;
    let k = small.len();
    let mut scratch = (Vec::new(), Vec::new());
    let observed = pool.statistic(&counts, k, &mut scratch)?;

    let mut rng = stream(seed);
    let mut items = pool.items.clone();
    let mut perm_counts = vec![0u64; pool.totals.len()];
    let mut extreme = 0u64;
    for _ in 0..permutations {
        perm_counts.iter_mut().for_each(|c| *c = 0);
        // partial Fisher-Yates: the first k slots become the smaller group
        for i in 0..k {
            let j = rng.random_range(i..items.len());
            items.swap(i, j);
            perm_counts[items[i]] += 1;
        }
        if pool.statistic(&perm_counts, k, &mut scratch)? >= observed - TIE_TOLERANCE {
            extreme += 1;
        }
    }
    Ok(PermutationTestResult {
        observed_statistic: observed,
        permutation_count: permutations,
        p_value: (1 + extreme) as f64 / (permutations + 1) as f64,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub repetitions: u64,
    pub distances: Vec<f64>,
    pub p_values: Vec<f64>,
    pub mean: f64,
    /// Sample variance (divisor `n - 1`; 0 for a single repetition).
    pub variance: f64,
    pub median_p: f64,
    pub count_p_at_least_005: u64,
}

impl EvaluationReport {
    pub fn from_runs(distances: Vec<f64>, p_values: Vec<f64>) -> Result<Self> {
        if distances.is_empty() || distances.len() != p_values.len() {
            return Err(Error::InvalidParameter("evaluation runs are empty or ragged".into()));
        }
        let n = distances.len() as f64;
        let mean = distances.iter().sum::<f64>() / n;
        let variance = if distances.len() > 1 {
            distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = p_values.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median_p = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Ok(EvaluationReport {
            repetitions: distances.len() as u64,
            count_p_at_least_005: p_values.iter().filter(|&&p| p >= 0.05).count() as u64,
            distances,
            p_values,
            mean,
            variance,
            median_p,
        })
    }

    /// Average number of line changes per sample implied by each distance
    /// times the sample count.
    pub fn line_changes(&self, samples: usize) -> Vec<u64> {
        self.distances
            .iter()
            .map(|d| libm::round(d * samples as f64) as u64)
            .collect()
    }
}

/// One repetition: generate as many patterns as were observed, compare.
fn repetition(
    observed: &[DegreeSequence],
    network: &Network,
    config: &GeneratorConfig,
    rep: u64,
    permutations: u64,
) -> Result<(f64, f64)> {
    let gen_seed = repetition_seed(config.seed, rep, 0);
    let generated = (0..observed.len() as u64)
        .map(|i| generate_indexed(network, config, gen_seed, i).map(|g| degree_sequence(&g.pattern)))
        .collect::<Result<Vec<_>>>()?;
    let mut graph = SequenceGraph::new();
    let test = permutation_test(
        observed,
        &generated,
        permutations,
        repetition_seed(config.seed, rep, 1),
        &mut graph,
    )?;
    Ok((test.observed_statistic, test.p_value))
}

/// Repeat generation and testing `repetitions` times against the observed
/// patterns. Repetition `i` draws only from substreams derived from
/// `(config.seed, i)`.
pub fn evaluate_model(
    observed: &[Pattern],
    network: &Network,
    config: &GeneratorConfig,
    repetitions: u64,
    permutations: u64,
) -> Result<EvaluationReport> {
    let sequences: Vec<DegreeSequence> = observed.iter().map(degree_sequence).collect();
    evaluate_sequences(&sequences, network, config, repetitions, permutations)
}

/// [`evaluate_model`] on observed degree sequences.
pub fn evaluate_sequences(
    observed: &[DegreeSequence],
    network: &Network,
    config: &GeneratorConfig,
    repetitions: u64,
    permutations: u64,
) -> Result<EvaluationReport> {
    if observed.is_empty() {
        return Err(Error::EmptyInput("observed patterns"));
    }
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    config.validate()?;
    let runs = map_indices(repetitions, |rep| repetition(observed, network, config, rep, permutations))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (distances, p_values) = runs.into_iter().unzip();
    EvaluationReport::from_runs(distances, p_values)
}
