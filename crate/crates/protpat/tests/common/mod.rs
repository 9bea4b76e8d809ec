//! Independent oracles and CLI helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::process::{Command, Output};

use protpat_core::Line;

pub fn protpat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protpat"))
        .args(args)
        .output()
        .expect("run protpat")
}

/// Run and require success.
pub fn protpat_ok(args: &[&str]) {
    let out = protpat(args);
    assert!(
        out.status.success(),
        "protpat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// `key = value` lookup in a report file; the value up to the first space.
pub fn report_value(path: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(path).expect("report");
    text.lines()
        .find_map(|l| {
            let (k, v) = l.split_once('=')?;
            (k.trim() == key).then(|| v.trim().split(' ').next().unwrap_or("").to_string())
        })
        .unwrap_or_else(|| panic!("{key} missing from {}", path.display()))
}

/// Every file in `dir` with its contents, sorted by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Connectivity by flood fill over line endpoints.
pub fn connected(lines: &BTreeSet<Line>) -> bool {
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

/// Erdos-Gallai plus the connectivity count.
pub fn oracle_valid(d: &[u32]) -> bool {
    if d.is_empty() || d.contains(&0) {
        return false;
    }
    let mut d = d.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let n = d.len() as u64;
    let sum: u64 = d.iter().map(|&x| x as u64).sum();
    if sum % 2 == 1 || sum < 2 * (n - 1) {
        return false;
    }
    (1..=d.len()).all(|k| {
        let left: u64 = d[..k].iter().map(|&x| x as u64).sum();
        let right = (k as u64) * (k as u64 - 1) + d[k..].iter().map(|&x| (x as u64).min(k as u64)).sum::<u64>();
        left <= right
    })
}

fn partitions(total: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if total == 0 {
        out.push(prefix.clone());
        return;
    }
    for part in (1..=max.min(total)).rev() {
        prefix.push(part);
        partitions(total - part, part, prefix, out);
        prefix.pop();
    }
}

/// Every valid sequence with at most `max_lines` lines.
pub fn oracle_nodes(max_lines: u32) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    for lines in 1..=max_lines {
        let mut parts = Vec::new();
        partitions(2 * lines, lines, &mut Vec::new(), &mut parts);
        out.extend(parts.into_iter().filter(|p| oracle_valid(p)));
    }
    out
}

pub fn lines_of(d: &[u32]) -> u32 {
    d.iter().sum::<u32>() / 2
}

/// Single-line additions between nodes, in both directions: increment two
/// entries, at least one of them an existing bus.
pub fn oracle_graph(nodes: &BTreeSet<Vec<u32>>) -> BTreeMap<Vec<u32>, BTreeSet<Vec<u32>>> {
    let mut adj: BTreeMap<Vec<u32>, BTreeSet<Vec<u32>>> =
        nodes.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
    for a in nodes {
        let mut padded = a.clone();
        padded.push(0);
        for i in 0..a.len() {
            for j in i + 1..padded.len() {
                let mut b = padded.clone();
                b[i] += 1;
                b[j] += 1;
                b.retain(|&x| x > 0);
                b.sort_unstable_by(|x, y| y.cmp(x));
                if nodes.contains(&b) {
                    adj.get_mut(a).unwrap().insert(b.clone());
                    adj.get_mut(&b).unwrap().insert(a.clone());
                }
            }
        }
    }
    adj
}

pub fn oracle_bfs(adj: &BTreeMap<Vec<u32>, BTreeSet<Vec<u32>>>, from: &[u32]) -> BTreeMap<Vec<u32>, u32> {
    let mut dist = BTreeMap::from([(from.to_vec(), 0u32)]);
    let mut queue = VecDeque::from([from.to_vec()]);
    while let Some(x) = queue.pop_front() {
        let dx = dist[&x];
        for y in &adj[&x] {
            if !dist.contains_key(y) {
                dist.insert(y.clone(), dx + 1);
                queue.push_back(y.clone());
            }
        }
    }
    dist
}

fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Transport optimum by enumerating every basis of `m + n - 1` cells.
pub fn oracle_transport(p: &[f64], q: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (p.len(), q.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let size = m + n - 1;
    let mut best = f64::INFINITY;
    let mut choose: Vec<usize> = (0..size).collect();
    loop {
        let mut a = vec![vec![0.0f64; size + 1]; size];
        for (var, &idx) in choose.iter().enumerate() {
            let (i, j) = cells[idx];
            a[i][var] = 1.0;
            if j < n - 1 {
                a[m + j][var] = 1.0;
            }
        }
        for i in 0..m {
            a[i][size] = p[i];
        }
        for j in 0..n - 1 {
            a[m + j][size] = q[j];
        }
        if let Some(x) = gauss(a) {
            let last: f64 = choose.iter().zip(&x).filter(|(&idx, _)| cells[idx].1 == n - 1).map(|(_, v)| v).sum();
            if x.iter().all(|&v| v >= -1e-12) && (last - q[n - 1]).abs() < 1e-9 {
                best = best.min(choose.iter().zip(&x).map(|(&idx, v)| v * cost[idx]).sum());
            }
        }
        // next combination
        let k = choose.len();
        let Some(i) = (0..k).rev().find(|&i| choose[i] < cells.len() - k + i) else { break };
        choose[i] += 1;
        for j in i + 1..k {
            choose[j] = choose[j - 1] + 1;
        }
    }
    best
}
