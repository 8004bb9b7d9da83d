//! Linear assignment.
//!
//! The dense solver is Jonker–Volgenant: column reduction with reduction
//! transfer, two rounds of augmenting row reduction, then shortest augmenting
//! paths for the remaining free rows. Large instances first try shortest
//! augmenting paths on a sparse graph of cheap candidate edges, then certify
//! the result with a dual-feasibility scan of the full matrix; edges that
//! violate it join the graph and the solve repeats. Both paths are exact for
//! any finite cost matrix.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Optimal assignment of a square cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

const NONE: usize = usize::MAX;

/// Below this size the dense solver is always used.
const SPARSE_MIN_N: usize = 256;
/// Candidate edges per row (and per column) in the first sparse round.
const SPARSE_K: usize = 12;
const SPARSE_ROUNDS: usize = 30;

/// Minimizes `Σ_i cost[i][σ(i)]` over permutations `σ`.
///
/// `cost` is row-major `n × n`.
pub fn solve(n: usize, cost: &[f64]) -> Assignment {
    solve_warm(n, cost, None).0
}

/// Matching and column potentials of a previous large solve.
#[derive(Debug, Clone)]
pub struct WarmStart {
    row_to_col: Vec<usize>,
    v: Vec<f64>,
}

/// [`solve`] seeded with the solution of a nearby instance of the same size.
///
/// The result is exact regardless of the hint; a good hint only saves work.
/// Also returns the state to pass to the next call, or `None` when the
/// dense solver was used.
pub fn solve_warm(n: usize, cost: &[f64], warm: Option<&WarmStart>) -> (Assignment, Option<WarmStart>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    if n >= SPARSE_MIN_N {
        let seeded = warm.filter(|w| w.row_to_col.len() == n).and_then(|w| sparse::solve_from(n, cost, w, SPARSE_K, SPARSE_ROUNDS));
        if let Some((a, w)) = seeded.or_else(|| sparse::solve(n, cost, SPARSE_K, SPARSE_ROUNDS)) {
            return (a, Some(w));
        }
    }
    (solve_dense(n, cost), None)
}

/// Dense Jonker–Volgenant, `O(n³)` worst case.
pub fn solve_dense(n: usize, cost: &[f64]) -> Assignment {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    if n == 0 {
        return Assignment { row_to_col: vec![], cost: 0.0 };
    }
    if n == 1 {
        return Assignment { row_to_col: vec![0], cost: cost[0] };
    }
    let mut solver = Solver {
        n,
        cost,
        x: vec![NONE; n],
        y: vec![NONE; n],
        v: vec![f64::INFINITY; n],
    };
    let mut free_rows = solver.column_reduction();
    for _ in 0..2 {
        if free_rows.is_empty() {
            break;
        }
        free_rows = solver.augmenting_row_reduction(free_rows);
    }
    if !free_rows.is_empty() {
        solver.augment(&free_rows);
    }
    let total = (0..n).map(|i| cost[i * n + solver.x[i]]).sum();
    Assignment { row_to_col: solver.x, cost: total }
}

struct Solver<'a> {
    n: usize,
    cost: &'a [f64],
    /// row -> column
    x: Vec<usize>,
    /// column -> row
    y: Vec<usize>,
    /// column duals
    v: Vec<f64>,
}

impl Solver<'_> {
    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    fn column_reduction(&mut self) -> Vec<usize> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let c = self.c(i, j);
                if c < self.v[j] {
                    self.v[j] = c;
                    self.y[j] = i;
                }
            }
        }
        let mut unique = vec![true; n];
        for j in (0..n).rev() {
            let i = self.y[j];
            if self.x[i] == NONE {
                self.x[i] = j;
            } else {
                unique[i] = false;
                self.y[j] = NONE;
            }
        }
        let mut free = Vec::new();
        for i in 0..n {
            if self.x[i] == NONE {
                free.push(i);
            } else if unique[i] {
                // reduction transfer
                let j = self.x[i];
                let mut min = f64::INFINITY;
                for j2 in 0..n {
                    if j2 != j {
                        min = min.min(self.c(i, j2) - self.v[j2]);
                    }
                }
                self.v[j] -= min;
            }
        }
        free
    }

    fn augmenting_row_reduction(&mut self, mut free: Vec<usize>) -> Vec<usize> {
        let n = self.n;
        let n_free = free.len();
        let mut current = 0;
        let mut new_free = 0;
        let mut rr_cnt = 0usize;
        while current < n_free {
            rr_cnt += 1;
            let free_i = free[current];
            current += 1;
            // two smallest reduced costs of the row
            let mut j1 = 0;
            let mut u1 = self.c(free_i, 0) - self.v[0];
            let mut j2 = NONE;
            let mut u2 = f64::INFINITY;
            for j in 1..n {
                let h = self.c(free_i, j) - self.v[j];
                if h < u2 {
                    if h >= u1 {
                        u2 = h;
                        j2 = j;
                    } else {
                        u2 = u1;
                        u1 = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = self.y[j1];
            let v1_new = self.v[j1] - (u2 - u1);
            let v1_lowers = v1_new < self.v[j1];
            if rr_cnt < current * n {
                if v1_lowers {
                    self.v[j1] = v1_new;
                } else if i0 != NONE && j2 != NONE {
                    j1 = j2;
                    i0 = self.y[j2];
                }
                if i0 != NONE {
                    if v1_lowers {
                        current -= 1;
                        free[current] = i0;
                    } else {
                        free[new_free] = i0;
                        new_free += 1;
                    }
                }
            } else if i0 != NONE {
                free[new_free] = i0;
                new_free += 1;
            }
            self.x[free_i] = j1;
            self.y[j1] = free_i;
        }
        free.truncate(new_free);
        free
    }

    fn augment(&mut self, free: &[usize]) {
        let n = self.n;
        let mut pred = vec![0usize; n];
        let mut cols = vec![0usize; n];
        let mut d = vec![0.0; n];
        for &free_i in free {
            let mut j = self.shortest_path(free_i, &mut pred, &mut cols, &mut d);
            loop {
                let i = pred[j];
                self.y[j] = i;
                std::mem::swap(&mut j, &mut self.x[i]);
                if i == free_i {
                    break;
                }
            }
        }
    }

    /// Dijkstra over reduced costs from `start`; returns the reached free column
    /// and updates the column duals of the scanned set.
    fn shortest_path(&mut self, start: usize, pred: &mut [usize], cols: &mut [usize], d: &mut [f64]) -> usize {
        let n = self.n;
        for j in 0..n {
            cols[j] = j;
            pred[j] = start;
            d[j] = self.c(start, j) - self.v[j];
        }
        let mut lo = 0;
        let mut hi = 0;
        let mut n_ready = 0;
        let mut final_j = NONE;
        while final_j == NONE {
            if lo == hi {
                n_ready = lo;
                hi = find_min_block(lo, d, cols);
                for &j in &cols[lo..hi] {
                    if self.y[j] == NONE {
                        final_j = j;
                    }
                }
            }
            if final_j == NONE {
                final_j = self.scan(&mut lo, &mut hi, d, cols, pred);
            }
        }
        let mind = d[final_j];
        for &j in &cols[..n_ready] {
            self.v[j] += d[j] - mind;
        }
        final_j
    }

    fn scan(&self, lo: &mut usize, hi: &mut usize, d: &mut [f64], cols: &mut [usize], pred: &mut [usize]) -> usize {
        let n = self.n;
        while *lo != *hi {
            let j = cols[*lo];
            *lo += 1;
            let i = self.y[j];
            let mind = d[j];
            let h = self.c(i, j) - self.v[j] - mind;
            for k in *hi..n {
                let j = cols[k];
                let reduced = self.c(i, j) - self.v[j] - h;
                if reduced < d[j] {
                    d[j] = reduced;
                    pred[j] = i;
                    if reduced == mind {
                        if self.y[j] == NONE {
                            return j;
                        }
                        cols[k] = cols[*hi];
                        cols[*hi] = j;
                        *hi += 1;
                    }
                }
            }
        }
        NONE
    }
}

/// Moves the columns with minimal `d` among `cols[lo..]` into `cols[lo..hi]`.
fn find_min_block(lo: usize, d: &[f64], cols: &mut [usize]) -> usize {
    let n = cols.len();
    let mut hi = lo + 1;
    let mut mind = d[cols[lo]];
    for k in hi..n {
        let j = cols[k];
        if d[j] <= mind {
            if d[j] < mind {
                hi = lo;
                mind = d[j];
            }
            cols[k] = cols[hi];
            cols[hi] = j;
            hi += 1;
        }
    }
    hi
}

mod sparse {
    //! Successive shortest paths with row and column potentials on a sparse
    //! candidate graph.
    //!
    //! Reduced costs `c_ij − u_i − v_j` stay nonnegative on candidate edges and
    //! vanish on matched ones. Once every row is matched, the same inequality
    //! over all `n²` pairs certifies global optimality by LP duality.

    use super::*;

    #[derive(PartialEq)]
    struct Entry(f64, usize);

    impl Eq for Entry {}

    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    impl Ord for Entry {
        // min-heap on distance, ties by column for determinism
        fn cmp(&self, other: &Self) -> Ordering {
            other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
        }
    }

    /// `k` cheapest columns per row, plus the `k` cheapest rows per column.
    fn candidates(n: usize, cost: &[f64], k: usize) -> Vec<Vec<usize>> {
        let k = k.min(n);
        let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut idx: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            idx.clear();
            idx.extend(0..n);
            idx.select_nth_unstable_by(k - 1, |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            adj.push(idx[..k].to_vec());
        }
        let mut col = vec![0.0; n];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = cost[i * n + j];
            }
            idx.clear();
            idx.extend(0..n);
            idx.select_nth_unstable_by(k - 1, |&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            for &i in &idx[..k] {
                adj[i].push(j);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    struct State {
        u: Vec<f64>,
        v: Vec<f64>,
        row_to_col: Vec<usize>,
        col_to_row: Vec<usize>,
    }

    impl State {
        /// Lowers `u_i` until every candidate edge of the unmatched row `i`
        /// has nonnegative reduced cost.
        fn reset_row(&mut self, i: usize, row: &[f64], adj: &[usize]) {
            self.u[i] = adj.iter().map(|&j| row[j] - self.v[j]).fold(f64::INFINITY, f64::min);
        }

        fn unmatch(&mut self, i: usize) {
            let j = std::mem::replace(&mut self.row_to_col[i], NONE);
            if j != NONE {
                self.col_to_row[j] = NONE;
            }
        }
    }

    struct Search {
        dist: Vec<f64>,
        pred: Vec<usize>,
        done: Vec<bool>,
        touched: Vec<usize>,
        finalized: Vec<usize>,
        heap: BinaryHeap<Entry>,
    }

    impl Search {
        fn new(n: usize) -> Self {
            Self {
                dist: vec![f64::INFINITY; n],
                pred: vec![NONE; n],
                done: vec![false; n],
                touched: Vec::new(),
                finalized: Vec::new(),
                heap: BinaryHeap::new(),
            }
        }

        fn reset(&mut self) {
            for &j in &self.touched {
                self.dist[j] = f64::INFINITY;
                self.pred[j] = NONE;
                self.done[j] = false;
            }
            self.touched.clear();
            self.finalized.clear();
            self.heap.clear();
        }

        fn relax(&mut self, i: usize, di: f64, row: &[f64], adj: &[usize], st: &State) {
            for &j in adj {
                if self.done[j] {
                    continue;
                }
                let nd = di + (row[j] - st.u[i] - st.v[j]).max(0.0);
                if nd < self.dist[j] {
                    if self.dist[j] == f64::INFINITY {
                        self.touched.push(j);
                    }
                    self.dist[j] = nd;
                    self.pred[j] = i;
                    self.heap.push(Entry(nd, j));
                }
            }
        }

        /// Shortest augmenting path from the free row `s`; returns the free
        /// column it ends in, or `None` when no free column is reachable.
        fn run(&mut self, s: usize, n: usize, cost: &[f64], adj: &[Vec<usize>], st: &State) -> Option<usize> {
            self.reset();
            self.relax(s, 0.0, &cost[s * n..(s + 1) * n], &adj[s], st);
            while let Some(Entry(d, j)) = self.heap.pop() {
                if self.done[j] || d > self.dist[j] {
                    continue;
                }
                self.done[j] = true;
                self.finalized.push(j);
                let i = st.col_to_row[j];
                if i == NONE {
                    return Some(j);
                }
                self.relax(i, d, &cost[i * n..(i + 1) * n], &adj[i], st);
            }
            None
        }
    }

    /// Matches every free row on the candidate graph, keeping reduced costs
    /// nonnegative on candidate edges and zero on matched ones.
    ///
    /// A row with no augmenting path gains edges to its `k` cheapest free
    /// columns; each of them is an augmenting path on its own.
    fn match_free_rows(n: usize, cost: &[f64], adj: &mut [Vec<usize>], k: usize, st: &mut State, search: &mut Search) {
        let mut queue: Vec<usize> = (0..n).rev().filter(|&i| st.row_to_col[i] == NONE).collect();
        while let Some(s) = queue.pop() {
            let Some(sink) = search.run(s, n, cost, adj, st) else {
                let row = &cost[s * n..(s + 1) * n];
                let mut free: Vec<usize> = (0..n).filter(|&j| st.col_to_row[j] == NONE).collect();
                let k = k.min(free.len());
                free.select_nth_unstable_by(k - 1, |&a, &b| (row[a] - st.v[a]).total_cmp(&(row[b] - st.v[b])).then(a.cmp(&b)));
                adj[s].extend_from_slice(&free[..k]);
                adj[s].sort_unstable();
                adj[s].dedup();
                st.reset_row(s, row, &adj[s]);
                queue.push(s);
                continue;
            };
            let total = search.dist[sink];
            st.u[s] += total;
            for &j in &search.finalized {
                let shift = total - search.dist[j];
                st.v[j] -= shift;
                let i = st.col_to_row[j];
                if i != NONE {
                    st.u[i] += shift;
                }
            }
            let mut j = sink;
            loop {
                let i = search.pred[j];
                st.col_to_row[j] = i;
                let prev = std::mem::replace(&mut st.row_to_col[i], j);
                if i == s {
                    break;
                }
                j = prev;
            }
        }
    }

    /// Exact assignment starting from the `k`-nearest candidate graph, or
    /// `None` to request the dense solver.
    pub(super) fn solve(n: usize, cost: &[f64], k: usize, rounds: usize) -> Option<(Assignment, WarmStart)> {
        let adj = candidates(n, cost, k);
        let mut st = State { u: vec![0.0; n], v: vec![0.0; n], row_to_col: vec![NONE; n], col_to_row: vec![NONE; n] };
        for i in 0..n {
            st.reset_row(i, &cost[i * n..(i + 1) * n], &adj[i]);
        }
        refine(n, cost, k, rounds, adj, st)
    }

    /// Rounds allowed for the cheap warm start before the candidate graph is built.
    const QUICK_ROUNDS: usize = 2;

    /// Starts from a previous matching and column potentials.
    ///
    /// First each row keeps only its matched edge, made tight by its
    /// potential, and the certification scan adds what the new costs require.
    /// That is enough when little has moved. Otherwise the start is the
    /// candidate graph plus the previous matched edges: a row keeps its match
    /// when no candidate edge undercuts it, and other rows start free.
    pub(super) fn solve_from(n: usize, cost: &[f64], warm: &WarmStart, k: usize, rounds: usize) -> Option<(Assignment, WarmStart)> {
        let mut col_to_row = vec![NONE; n];
        for (i, &j) in warm.row_to_col.iter().enumerate() {
            if j >= n || col_to_row[j] != NONE {
                return None;
            }
            col_to_row[j] = i;
        }
        let u = (0..n).map(|i| cost[i * n + warm.row_to_col[i]] - warm.v[warm.row_to_col[i]]).collect();
        let st = State { u, v: warm.v.clone(), row_to_col: warm.row_to_col.clone(), col_to_row: col_to_row.clone() };
        let adj = warm.row_to_col.iter().map(|&j| vec![j]).collect();
        if let Some(done) = refine(n, cost, k, QUICK_ROUNDS, adj, st) {
            return Some(done);
        }

        let mut adj = candidates(n, cost, k);
        let mut st = State { u: vec![0.0; n], v: warm.v.clone(), row_to_col: warm.row_to_col.clone(), col_to_row };
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            let j = warm.row_to_col[i];
            if let Err(pos) = adj[i].binary_search(&j) {
                adj[i].insert(pos, j);
            }
            st.reset_row(i, row, &adj[i]);
            if row[j] - st.u[i] - st.v[j] > 0.0 {
                st.unmatch(i);
            }
        }
        refine(n, cost, k, rounds, adj, st)
    }

    /// Matches free rows, then checks every pair for dual feasibility. Rows
    /// with violating pairs gain their most violated edges, are unmatched and
    /// matched again from the current potentials.
    fn refine(n: usize, cost: &[f64], k: usize, rounds: usize, mut adj: Vec<Vec<usize>>, mut st: State) -> Option<(Assignment, WarmStart)> {
        let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let tol = 1e-12 * scale;
        let mut search = Search::new(n);
        let mut violators: Vec<(f64, usize)> = Vec::new();
        for _ in 0..rounds {
            match_free_rows(n, cost, &mut adj, k, &mut st, &mut search);
            let mut clean = true;
            for i in 0..n {
                let row = &cost[i * n..(i + 1) * n];
                violators.clear();
                violators.extend((0..n).map(|j| (row[j] - st.u[i] - st.v[j], j)).filter(|&(r, _)| r < -tol));
                if violators.is_empty() {
                    continue;
                }
                clean = false;
                // the most violated edges first; the rest wait for the next round
                let keep = violators.len().min(2 * k);
                violators.select_nth_unstable_by(keep - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                adj[i].extend(violators[..keep].iter().map(|&(_, j)| j));
                adj[i].sort_unstable();
                adj[i].dedup();
                st.unmatch(i);
                st.reset_row(i, row, &adj[i]);
            }
            if clean {
                let total = (0..n).map(|i| cost[i * n + st.row_to_col[i]]).sum();
                let warm = WarmStart { row_to_col: st.row_to_col.clone(), v: st.v };
                return Some((Assignment { row_to_col: st.row_to_col, cost: total }, warm));
            }
            if adj.iter().map(Vec::len).sum::<usize>() > n * n / 4 {
                return None;
            }
        }
        None
    }
}
