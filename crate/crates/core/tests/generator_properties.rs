use std::collections::{BTreeMap, BTreeSet};

use protpat_core::generator::measure_p_one_plus_streaming;
use protpat_core::{
    calibrate_p_one_plus, generate_ensemble, BusPair, GeneratorConfig, Line, Network, ZipfModel,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mesh(rows: usize, cols: usize, multiplicity: u32) -> Network {
    let name = |r: usize, c: usize| format!("R{r}C{c}");
    let mut lines = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                lines.push((BusPair::new(name(r, c - 1), name(r, c)).unwrap(), multiplicity));
            }
            if r > 0 {
                lines.push((BusPair::new(name(r - 1, c), name(r, c)).unwrap(), multiplicity));
            }
        }
    }
    Network::from_lines(lines).unwrap()
}

fn config(s: f64, p_one_plus: f64, p_circuits: f64, seed: u64) -> GeneratorConfig {
    GeneratorConfig::new(ZipfModel::new(s).unwrap(), p_one_plus, p_circuits, seed).unwrap()
}

/// Connectivity by flood fill over line endpoints.
fn connected(lines: &BTreeSet<Line>) -> bool {
    let mut adj: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for l in lines {
        let (a, b) = l.endpoints();
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let Some(&start) = adj.keys().next() else { return false };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in &adj[&x] {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == adj.len()
}

#[test]
fn ensemble_members_are_connected_subgraphs() {
    let net = mesh(8, 8, 1);
    let all: BTreeSet<Line> = net.lines().map(|(_, l)| l).collect();
    for g in generate_ensemble(&net, &config(1.8, 0.3, 0.0, 1), 3000).unwrap() {
        let lines: BTreeSet<Line> = g.pattern.lines().copied().collect();
        assert!(connected(&lines));
        assert!(lines.is_subset(&all));
        assert_eq!(lines.len() as u64, g.achieved_size);
        assert!(g.achieved_size <= g.target_size);
    }
}

#[test]
fn sizes_follow_the_configured_pmf() {
    let net = mesh(10, 10, 1);
    let model = ZipfModel::new(2.5).unwrap();
    let n = 20_000u64;
    let ens = generate_ensemble(&net, &config(2.5, 0.3, 0.0, 2), n).unwrap();
    let mut observed = [0f64; 4];
    for g in &ens {
        observed[(g.achieved_size.min(4) - 1) as usize] += 1.0;
    }
    let mut expected = [0f64; 4];
    for k in 1..=3u64 {
        expected[k as usize - 1] = model.pmf(k).unwrap() * n as f64;
    }
    expected[3] = (1.0 - model.cdf(3)) * n as f64;
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn extra_circuit_rate_matches_p_circuits() {
    let net = mesh(6, 6, 2);
    let ens = generate_ensemble(&net, &config(1.8, 0.5, 0.3, 3), 5000).unwrap();
    let lines: u64 = ens.iter().map(|g| g.achieved_size).sum();
    let extra: u64 = ens.iter().map(|g| g.extra_circuits.len() as u64).sum();
    let rate = extra as f64 / lines as f64;
    let sd = (0.3 * 0.7 / lines as f64).sqrt();
    assert!((rate - 0.3).abs() < 4.0 * sd, "rate {rate}");
}

#[test]
fn measured_attachment_is_monotone_in_p_one_plus() {
    let net = mesh(10, 10, 1);
    let mut last = -1.0;
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let m = measure_p_one_plus_streaming(&net, &config(1.8, p, 0.0, 3), 20_000)
            .unwrap()
            .unwrap()
            .value();
        assert!(m >= last, "p = {p}: {m} < {last}");
        last = m;
    }
}

#[test]
fn calibration_recovers_a_known_probability() {
    let net = mesh(10, 10, 1);
    let base = config(1.8, 0.3, 0.0, 17);
    let target = measure_p_one_plus_streaming(&net, &base, 20_000).unwrap().unwrap().value();
    let cal = calibrate_p_one_plus(&net, &base.with_seed(18), target, 20_000, 0.005).unwrap();
    assert!((cal.p_one_plus - 0.3).abs() < 0.04, "{}", cal.p_one_plus);
    for w in cal.trace.windows(2).skip(1) {
        assert!(w[1].lower >= w[0].lower && w[1].upper <= w[0].upper);
    }
}

#[test]
fn unreachable_target_is_reported() {
    let net = mesh(6, 6, 1);
    let base = config(1.8, 0.3, 0.0, 2);
    let at_zero = measure_p_one_plus_streaming(&net, &base.with_p_one_plus(0.0), 5000)
        .unwrap()
        .unwrap()
        .value();
    let err = calibrate_p_one_plus(&net, &base, at_zero * 0.5, 5000, 0.005).unwrap_err();
    assert!(matches!(err, protpat_core::Error::UnreachableTarget { .. }));
}
