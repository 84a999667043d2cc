//! Primal network simplex for the dense transportation problem.
//!
//! Rows are supply nodes, columns demand nodes, and every (row, column) pair
//! is an arc. A basis is a spanning tree of `m + n - 1` cells; the initial
//! tree comes from the north-west corner rule. Entering cells are chosen by
//! block search over reduced costs; after a long run of degenerate pivots the
//! solver switches to Bland's smallest-index rule, which cannot cycle.

use std::collections::VecDeque;

/// Relative optimality tolerance on reduced costs.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

/// Optimal basic solution: `(row, col, flow)` for every basic cell with
/// positive flow, plus the objective value.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub flows: Vec<(usize, usize, f64)>,
    pub value: f64,
    pub pivots: usize,
}

struct Solver<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    cells: Vec<Cell>,
    /// Basic cell ids incident to each node; rows are `0..m`, columns `m..m+n`.
    adj: Vec<Vec<usize>>,
    /// Cell id of the basic cell `(row, col)` or `usize::MAX`.
    basic: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
    parent: Vec<usize>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
    block: usize,
    cursor: usize,
    tol: f64,
}

/// Solves `min sum c_ij x_ij` subject to row sums `supply` and column sums
/// `demand`; `cost` is row-major `supply.len() x demand.len()`.
///
/// Both marginals must be non-negative with equal totals (up to rounding).
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> TransportSolution {
    let (m, n) = (supply.len(), demand.len());
    assert_eq!(cost.len(), m * n, "cost matrix shape");
    assert!(m > 0 && n > 0, "empty marginal");
    let cmax = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let mut s = Solver {
        m,
        n,
        cost,
        cells: Vec::with_capacity(m + n),
        adj: vec![Vec::new(); m + n],
        basic: vec![usize::MAX; m * n],
        u: vec![0.0; m],
        v: vec![0.0; n],
        parent: vec![usize::MAX; m + n],
        parent_cell: vec![usize::MAX; m + n],
        depth: vec![0; m + n],
        block: ((m * n) as f64).sqrt().ceil().max(16.0) as usize,
        cursor: 0,
        tol: OPTIMALITY_TOLERANCE * cmax.max(f64::MIN_POSITIVE),
    };
    s.north_west(supply, demand);
    let pivots = s.run();
    let mut flows: Vec<(usize, usize, f64)> = s
        .cells
        .iter()
        .filter(|c| c.flow > 0.0)
        .map(|c| (c.row, c.col, c.flow))
        .collect();
    flows.sort_by_key(|&(i, j, _)| (i, j));
    let value = flows.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum();
    TransportSolution {
        flows,
        value,
        pivots,
    }
}

impl Solver<'_> {
    fn add_cell(&mut self, row: usize, col: usize, flow: f64) -> usize {
        let id = self.cells.len();
        self.cells.push(Cell { row, col, flow });
        self.adj[row].push(id);
        self.adj[self.m + col].push(id);
        self.basic[row * self.n + col] = id;
        id
    }

    fn north_west(&mut self, supply: &[f64], demand: &[f64]) {
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (supply[0], demand[0]);
        loop {
            let f = ra.min(rb).max(0.0);
            self.add_cell(i, j, f);
            if i == self.m - 1 && j == self.n - 1 {
                break;
            }
            if (ra <= rb && i < self.m - 1) || j == self.n - 1 {
                rb -= f;
                i += 1;
                ra = supply[i];
            } else {
                ra -= f;
                j += 1;
                rb = demand[j];
            }
        }
    }

    /// Recomputes potentials and the rooted tree (root: row 0) by BFS.
    fn refresh_tree(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::with_capacity(m + n);
        seen[0] = true;
        self.u[0] = 0.0;
        self.parent[0] = usize::MAX;
        self.parent_cell[0] = usize::MAX;
        self.depth[0] = 0;
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for k in 0..self.adj[node].len() {
                let id = self.adj[node][k];
                let c = self.cells[id];
                let other = if node < m { m + c.col } else { c.row };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                let cij = self.cost[c.row * n + c.col];
                if other >= m {
                    self.v[other - m] = cij - self.u[node];
                } else {
                    self.u[other] = cij - self.v[node - m];
                }
                self.parent[other] = node;
                self.parent_cell[other] = id;
                self.depth[other] = self.depth[node] + 1;
                queue.push_back(other);
            }
        }
    }

    #[inline]
    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j] - self.u[i] - self.v[j]
    }

    /// Block search: scans blocks of cells from a rotating cursor and returns
    /// the most negative reduced cost within the first block that has one.
    fn enter_block(&mut self) -> Option<(usize, usize)> {
        let total = self.m * self.n;
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + self.block).min(total);
            for _ in scanned..end {
                let k = self.cursor;
                self.cursor = if k + 1 == total { 0 } else { k + 1 };
                if self.basic[k] != usize::MAX {
                    continue;
                }
                let r = self.reduced(k / self.n, k % self.n);
                if r < -self.tol && best.is_none_or(|(_, b)| r < b) {
                    best = Some((k, r));
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        best.map(|(k, _)| (k / self.n, k % self.n))
    }

    /// Bland's rule: the non-basic cell of smallest index with negative
    /// reduced cost.
    fn enter_bland(&self) -> Option<(usize, usize)> {
        (0..self.m * self.n)
            .find(|&k| self.basic[k] == usize::MAX && self.reduced(k / self.n, k % self.n) < -self.tol)
            .map(|k| (k / self.n, k % self.n))
    }

    /// Cells of the tree path from column node of `col` to row node `row`,
    /// ordered from the column end.
    fn cycle_path(&self, row: usize, col: usize) -> Vec<usize> {
        let mut a = self.m + col;
        let mut b = row;
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while self.depth[a] > self.depth[b] {
            from_a.push(self.parent_cell[a]);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            from_b.push(self.parent_cell[b]);
            b = self.parent[b];
        }
        while a != b {
            from_a.push(self.parent_cell[a]);
            a = self.parent[a];
            from_b.push(self.parent_cell[b]);
            b = self.parent[b];
        }
        from_a.extend(from_b.into_iter().rev());
        from_a
    }

    fn run(&mut self) -> usize {
        let limit_degenerate = 50 * (self.m + self.n) + 1000;
        let mut degenerate_run = 0;
        let mut bland = false;
        let mut pivots = 0;
        loop {
            self.refresh_tree();
            let entering = if bland {
                self.enter_bland()
            } else {
                self.enter_block()
            };
            let Some((ei, ej)) = entering else {
                return pivots;
            };
            let path = self.cycle_path(ei, ej);
            // Cells at even positions of the path lose flow.
            let mut theta = f64::INFINITY;
            let mut leave = usize::MAX;
            for (pos, &id) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    let c = self.cells[id];
                    let better = c.flow < theta
                        || (bland
                            && c.flow == theta
                            && c.row * self.n + c.col
                                < self.cells[leave].row * self.n + self.cells[leave].col);
                    if better {
                        theta = c.flow;
                        leave = id;
                    }
                }
            }
            for (pos, &id) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.cells[id].flow -= theta;
                } else {
                    self.cells[id].flow += theta;
                }
            }
            self.cells[leave].flow = 0.0;
            self.replace_cell(leave, ei, ej, theta);
            pivots += 1;
            if theta > 0.0 {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
                if degenerate_run > limit_degenerate {
                    bland = true;
                }
            }
        }
    }

    /// Swaps the leaving cell out of the basis and the entering cell in,
    /// reusing the leaving cell's slot.
    fn replace_cell(&mut self, leave: usize, row: usize, col: usize, flow: f64) {
        let old = self.cells[leave];
        let m = self.m;
        self.basic[old.row * self.n + old.col] = usize::MAX;
        self.adj[old.row].retain(|&id| id != leave);
        self.adj[m + old.col].retain(|&id| id != leave);
        self.cells[leave] = Cell { row, col, flow };
        self.adj[row].push(leave);
        self.adj[m + col].push(leave);
        self.basic[row * self.n + col] = leave;
    }
}
