//! Exact transportation simplex (northwest-corner start, MODI pricing).

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub(crate) struct Solution {
    pub objective: f64,
    /// Row-major `supply.len() x demand.len()` flows.
    pub flow: Vec<f64>,
}

/// Degenerate pivots in a row before switching to smallest-index pricing.
const DEGENERATE_STREAK: usize = 32;

/// Minimize `sum x_ij c_ij` subject to row sums = `supply`, column sums =
/// `demand`, `x >= 0`. `cost` is row-major.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Solution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::Infeasible("empty marginal".into()));
    }
    if cost.len() != m * n {
        return Err(Error::Infeasible("cost matrix shape mismatch".into()));
    }
    if supply.iter().chain(demand).any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::Infeasible("negative or non-finite mass".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * total_s.max(1.0) {
        return Err(Error::Infeasible(format!(
            "supply {total_s} does not match demand {total_d}"
        )));
    }

    let mut flow = vec![0.0; m * n];
    let mut basic = vec![false; m * n];
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);

    // northwest corner: m + n - 1 cells forming a spanning tree
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    // absorb rounding so the last cell closes exactly
    d[n - 1] += total_s - total_d;
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(0.0);
        flow[i * n + j] = x;
        basic[i * n + j] = true;
        basis.push((i, j));
        s[i] -= x;
        d[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }

    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let tol = 1e-12 * scale;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut streak = 0usize;
    let max_iter = 50 * (m + n) * (m + n) + 1000;

    for _ in 0..max_iter {
        potentials(&basis, cost, n, &mut u, &mut v);

        let mut entering = None;
        let mut best = -tol;
        for r in 0..m {
            for c in 0..n {
                if basic[r * n + c] {
                    continue;
                }
                let reduced = cost[r * n + c] - u[r] - v[c];
                if reduced < best {
                    best = reduced;
                    entering = Some((r, c));
                    if streak > DEGENERATE_STREAK {
                        break;
                    }
                }
            }
            if streak > DEGENERATE_STREAK && entering.is_some() {
                break;
            }
        }
        let Some((er, ec)) = entering else {
            let objective = flow.iter().zip(cost).map(|(x, c)| x * c).sum();
            return Ok(Solution { objective, flow });
        };

        let path = tree_path(&basis, m, n, er, ec);
        // path cells alternate -, +, -, ... starting next to the entering cell
        let mut theta = f64::INFINITY;
        let mut leaving = 0;
        for (k, &(r, c)) in path.iter().enumerate().step_by(2) {
            let x = flow[r * n + c];
            if x < theta || (x == theta && (r, c) < path[leaving]) {
                theta = x;
                leaving = k;
            }
        }
        let theta = theta.max(0.0);
        streak = if theta <= tol { streak + 1 } else { 0 };
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[r * n + c] = (flow[r * n + c] - theta).max(0.0);
            } else {
                flow[r * n + c] += theta;
            }
        }
        flow[er * n + ec] = theta;
        let (lr, lc) = path[leaving];
        flow[lr * n + lc] = 0.0;
        basic[lr * n + lc] = false;
        basic[er * n + ec] = true;
        let pos = basis
            .iter()
            .position(|&cell| cell == (lr, lc))
            .expect("leaving cell is basic");
        basis[pos] = (er, ec);
    }
    Err(Error::Infeasible("transportation simplex did not converge".into()))
}

/// Solve `u_r + v_c = cost` on basic cells with `u_0 = 0`.
fn potentials(basis: &[(usize, usize)], cost: &[f64], n: usize, u: &mut [f64], v: &mut [f64]) {
    let m = u.len();
    let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut col_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(r, c) in basis {
        row_cells[r].push(c);
        col_cells[c].push(r);
    }
    let mut row_done = vec![false; m];
    let mut col_done = vec![false; n];
    // rows are nodes 0..m, columns m..m+n
    let mut queue = VecDeque::from([0usize]);
    u[0] = 0.0;
    row_done[0] = true;
    while let Some(node) = queue.pop_front() {
        if node < m {
            for &c in &row_cells[node] {
                if !col_done[c] {
                    v[c] = cost[node * n + c] - u[node];
                    col_done[c] = true;
                    queue.push_back(m + c);
                }
            }
        } else {
            let c = node - m;
            for &r in &col_cells[c] {
                if !row_done[r] {
                    u[r] = cost[r * n + c] - v[c];
                    row_done[r] = true;
                    queue.push_back(r);
                }
            }
        }
    }
}

/// Basic cells on the tree path from row `er` to column `ec`, in order
/// starting at the cell sharing row `er`.
fn tree_path(
    basis: &[(usize, usize)],
    m: usize,
    n: usize,
    er: usize,
    ec: usize,
) -> Vec<(usize, usize)> {
    let mut adj: Vec<Vec<(usize, (usize, usize))>> = vec![Vec::new(); m + n];
    for &(r, c) in basis {
        adj[r].push((m + c, (r, c)));
        adj[m + c].push((r, (r, c)));
    }
    let mut parent: Vec<Option<(usize, (usize, usize))>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    let mut queue = VecDeque::from([er]);
    seen[er] = true;
    let target = m + ec;
    while let Some(node) = queue.pop_front() {
        if node == target {
            break;
        }
        for &(next, cell) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, cell));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = target;
    while node != er {
        let (prev, cell) = parent[node].expect("basis is a spanning tree");
        path.push(cell);
        node = prev;
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_marginals(sol: &Solution, a: &[f64], b: &[f64]) {
        let n = b.len();
        for (i, &ai) in a.iter().enumerate() {
            let row: f64 = (0..n).map(|j| sol.flow[i * n + j]).sum();
            assert!((row - ai).abs() < 1e-9);
        }
        for (j, &bj) in b.iter().enumerate() {
            let col: f64 = (0..a.len()).map(|i| sol.flow[i * n + j]).sum();
            assert!((col - bj).abs() < 1e-9);
        }
        assert!(sol.flow.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn textbook_instance() {
        // 3x4 balanced problem, optimum 743 (classic MODI example)
        let a = [7.0, 9.0, 18.0];
        let b = [5.0, 8.0, 7.0, 14.0];
        let c = [
            19.0, 30.0, 50.0, 10.0, //
            70.0, 30.0, 40.0, 60.0, //
            40.0, 8.0, 70.0, 20.0,
        ];
        let sol = solve(&a, &b, &c).unwrap();
        check_marginals(&sol, &a, &b);
        assert!((sol.objective - 743.0).abs() < 1e-9);
    }

    #[test]
    fn identity_costs_zero() {
        let a = [0.2, 0.3, 0.5];
        let c = [0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
        let sol = solve(&a, &a, &c).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        check_marginals(&sol, &a, &a);
    }

    #[test]
    fn zero_mass_rows_are_fine() {
        let a = [0.0, 1.0, 0.0];
        let b = [0.5, 0.0, 0.5];
        let c = [0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        check_marginals(&sol, &a, &b);
    }

    #[test]
    fn unbalanced_is_infeasible() {
        assert!(solve(&[1.0], &[0.5], &[0.0]).is_err());
        assert!(solve(&[-1.0, 2.0], &[1.0], &[0.0, 0.0]).is_err());
    }
}
