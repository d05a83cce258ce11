//! s/t graphs and a Boykov–Kolmogorov max-flow solver over `f64` capacities.
//!
//! The solver grows search trees from both terminals and reuses them across
//! augmentations; orphaned subtrees are re-adopted using the distance and
//! timestamp heuristics of the original algorithm. Residual capacities at or
//! below [`SATURATION_EPS`] count as saturated.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const SATURATION_EPS: f64 = 1e-12;

/// Capacitated graph with a source and a sink terminal.
///
/// Each node has at most one terminal arc, stored as a signed capacity:
/// positive for `s → p`, negative for `p → t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct STGraph {
    terminal: Vec<f64>,
    arcs: Vec<(usize, usize, f64, f64)>,
}

impl STGraph {
    pub fn new(n: usize) -> Self {
        Self {
            terminal: vec![0.0; n],
            arcs: Vec::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.terminal.len()
    }

    /// Sets the terminal arc of `p`: `s → p` when `cap > 0`, `p → t` with
    /// capacity `-cap` when `cap < 0`, none when zero.
    pub fn set_terminal(&mut self, p: usize, cap: f64) -> Result<()> {
        if p >= self.n_nodes() || !cap.is_finite() {
            return Err(Error::InvalidInput(format!("bad terminal arc ({p}, {cap})")));
        }
        self.terminal[p] = cap;
        Ok(())
    }

    /// Adds arcs `p → q` and `q → p` with the given capacities.
    pub fn add_edge(&mut self, p: usize, q: usize, cap_pq: f64, cap_qp: f64) -> Result<()> {
        let n = self.n_nodes();
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        if p >= n || q >= n || p == q || !ok(cap_pq) || !ok(cap_qp) {
            return Err(Error::InvalidInput(format!("bad arc pair ({p}, {q}, {cap_pq}, {cap_qp})")));
        }
        self.arcs.push((p, q, cap_pq, cap_qp));
        Ok(())
    }

    pub fn source_cap(&self, p: usize) -> f64 {
        self.terminal[p].max(0.0)
    }

    pub fn sink_cap(&self, p: usize) -> f64 {
        (-self.terminal[p]).max(0.0)
    }

    /// `(p, q, cap p→q, cap q→p)` in insertion order.
    pub fn arcs(&self) -> &[(usize, usize, f64, f64)] {
        &self.arcs
    }

    /// Capacity of the cut whose source side is `source_side` (a node mask).
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let terminals: f64 = (0..self.n_nodes())
            .map(|p| {
                if source_side[p] {
                    self.sink_cap(p)
                } else {
                    self.source_cap(p)
                }
            })
            .sum();
        let internal: f64 = self
            .arcs
            .iter()
            .map(|&(p, q, c_pq, c_qp)| match (source_side[p], source_side[q]) {
                (true, false) => c_pq,
                (false, true) => c_qp,
                _ => 0.0,
            })
            .sum();
        terminals + internal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub flow_value: f64,
    /// Nodes reachable from the source in the final residual graph, ascending.
    pub source_side: Vec<usize>,
}

const NO_PARENT: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;
const ORPHAN: usize = usize::MAX - 2;
const INF_DIST: usize = usize::MAX;

struct Solver {
    first: Vec<usize>,
    head: Vec<usize>,
    sister: Vec<usize>,
    r_cap: Vec<f64>,
    tr_cap: Vec<f64>,
    parent: Vec<usize>,
    is_sink: Vec<bool>,
    ts: Vec<u64>,
    dist: Vec<usize>,
    in_active: Vec<bool>,
    active: VecDeque<usize>,
    orphans: VecDeque<usize>,
    time: u64,
    flow: f64,
}

impl Solver {
    fn new(g: &STGraph) -> Self {
        let n = g.n_nodes();
        let mut degree = vec![0usize; n + 1];
        for &(p, q, _, _) in &g.arcs {
            degree[p] += 1;
            degree[q] += 1;
        }
        let mut first = vec![0usize; n + 1];
        for i in 0..n {
            first[i + 1] = first[i] + degree[i];
        }
        let n_arcs = first[n];
        let mut fill = first.clone();
        let mut head = vec![0; n_arcs];
        let mut sister = vec![0; n_arcs];
        let mut r_cap = vec![0.0; n_arcs];
        for &(p, q, c_pq, c_qp) in &g.arcs {
            let a = fill[p];
            let b = fill[q];
            fill[p] += 1;
            fill[q] += 1;
            head[a] = q;
            head[b] = p;
            sister[a] = b;
            sister[b] = a;
            r_cap[a] = c_pq;
            r_cap[b] = c_qp;
        }
        Self {
            first,
            head,
            sister,
            r_cap,
            tr_cap: g.terminal.clone(),
            parent: vec![NO_PARENT; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            in_active: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        }
    }

    fn set_active(&mut self, i: usize) {
        if !self.in_active[i] {
            self.in_active[i] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.in_active[i] = false;
            if self.parent[i] != NO_PARENT {
                return Some(i);
            }
        }
        None
    }

    fn set_orphan_front(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_front(i);
    }

    fn set_orphan_rear(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_back(i);
    }

    fn tail(&self, a: usize) -> usize {
        self.head[self.sister[a]]
    }

    fn augment(&mut self, middle: usize) {
        let mut bottleneck = self.r_cap[middle];
        let mut i = self.tail(middle);
        loop {
            let pa = self.parent[i];
            if pa == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[self.sister[pa]]);
            i = self.head[pa];
        }
        bottleneck = bottleneck.min(self.tr_cap[i]);
        let mut i = self.head[middle];
        loop {
            let pa = self.parent[i];
            if pa == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[pa]);
            i = self.head[pa];
        }
        bottleneck = bottleneck.min(-self.tr_cap[i]);

        let sm = self.sister[middle];
        self.r_cap[sm] += bottleneck;
        self.r_cap[middle] -= bottleneck;

        let mut i = self.tail(middle);
        loop {
            let pa = self.parent[i];
            if pa == TERMINAL {
                break;
            }
            let down = self.sister[pa];
            self.r_cap[pa] += bottleneck;
            self.r_cap[down] -= bottleneck;
            let next = self.head[pa];
            if self.r_cap[down] <= SATURATION_EPS {
                self.set_orphan_front(i);
            }
            i = next;
        }
        self.tr_cap[i] -= bottleneck;
        if self.tr_cap[i] <= SATURATION_EPS {
            self.set_orphan_front(i);
        }

        let mut i = self.head[middle];
        loop {
            let pa = self.parent[i];
            if pa == TERMINAL {
                break;
            }
            let up = self.sister[pa];
            self.r_cap[up] += bottleneck;
            self.r_cap[pa] -= bottleneck;
            let next = self.head[pa];
            if self.r_cap[pa] <= SATURATION_EPS {
                self.set_orphan_front(i);
            }
            i = next;
        }
        self.tr_cap[i] += bottleneck;
        if self.tr_cap[i] >= -SATURATION_EPS {
            self.set_orphan_front(i);
        }

        self.flow += bottleneck;
    }

    /// Distance from `j` to its terminal through valid parents, or `INF_DIST`
    /// when the path ends at an orphan. Marks the visited path with the
    /// current timestamp.
    fn origin_distance(&mut self, j: usize) -> usize {
        let mut d = 0usize;
        let mut k = j;
        loop {
            if self.ts[k] == self.time {
                d += self.dist[k];
                break;
            }
            let pa = self.parent[k];
            d += 1;
            if pa == TERMINAL {
                self.ts[k] = self.time;
                self.dist[k] = 1;
                break;
            }
            if pa == ORPHAN {
                return INF_DIST;
            }
            k = self.head[pa];
        }
        let mut k = j;
        let mut dd = d;
        while self.ts[k] != self.time {
            self.ts[k] = self.time;
            self.dist[k] = dd;
            dd -= 1;
            k = self.head[self.parent[k]];
        }
        d
    }

    fn process_orphan(&mut self, i: usize) {
        let sink_tree = self.is_sink[i];
        let mut d_min = INF_DIST;
        let mut best = NO_PARENT;
        for a0 in self.first[i]..self.first[i + 1] {
            // residual must point toward i in the source tree, away from i in
            // the sink tree
            let residual = if sink_tree {
                self.r_cap[a0]
            } else {
                self.r_cap[self.sister[a0]]
            };
            if residual <= SATURATION_EPS {
                continue;
            }
            let j = self.head[a0];
            if self.is_sink[j] != sink_tree || self.parent[j] == NO_PARENT {
                continue;
            }
            let d = self.origin_distance(j);
            if d < d_min {
                d_min = d;
                best = a0;
            }
        }
        if best != NO_PARENT {
            self.parent[i] = best;
            self.ts[i] = self.time;
            self.dist[i] = d_min + 1;
            return;
        }
        for a0 in self.first[i]..self.first[i + 1] {
            let j = self.head[a0];
            let pa = self.parent[j];
            if self.is_sink[j] != sink_tree || pa == NO_PARENT {
                continue;
            }
            let residual = if sink_tree {
                self.r_cap[a0]
            } else {
                self.r_cap[self.sister[a0]]
            };
            if residual > SATURATION_EPS {
                self.set_active(j);
            }
            if pa != TERMINAL && pa != ORPHAN && self.head[pa] == i {
                self.set_orphan_rear(j);
            }
        }
        self.parent[i] = NO_PARENT;
    }

    fn run(&mut self) {
        let n = self.tr_cap.len();
        for i in 0..n {
            if self.tr_cap[i] > SATURATION_EPS {
                self.is_sink[i] = false;
            } else if self.tr_cap[i] < -SATURATION_EPS {
                self.is_sink[i] = true;
            } else {
                continue;
            }
            self.parent[i] = TERMINAL;
            self.ts[i] = 0;
            self.dist[i] = 1;
            self.set_active(i);
        }

        let mut current: Option<usize> = None;
        loop {
            let i = match current.take() {
                Some(i) => {
                    self.in_active[i] = false;
                    (self.parent[i] != NO_PARENT).then_some(i)
                }
                None => None,
            };
            let i = match i.or_else(|| self.next_active()) {
                Some(i) => i,
                None => break,
            };

            let mut found = NO_PARENT;
            if !self.is_sink[i] {
                for a in self.first[i]..self.first[i + 1] {
                    if self.r_cap[a] <= SATURATION_EPS {
                        continue;
                    }
                    let j = self.head[a];
                    if self.parent[j] == NO_PARENT {
                        self.is_sink[j] = false;
                        self.parent[j] = self.sister[a];
                        self.ts[j] = self.ts[i];
                        self.dist[j] = self.dist[i] + 1;
                        self.set_active(j);
                    } else if self.is_sink[j] {
                        found = a;
                        break;
                    } else if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                        self.parent[j] = self.sister[a];
                        self.ts[j] = self.ts[i];
                        self.dist[j] = self.dist[i] + 1;
                    }
                }
            } else {
                for a in self.first[i]..self.first[i + 1] {
                    let back = self.sister[a];
                    if self.r_cap[back] <= SATURATION_EPS {
                        continue;
                    }
                    let j = self.head[a];
                    if self.parent[j] == NO_PARENT {
                        self.is_sink[j] = true;
                        self.parent[j] = back;
                        self.ts[j] = self.ts[i];
                        self.dist[j] = self.dist[i] + 1;
                        self.set_active(j);
                    } else if !self.is_sink[j] {
                        found = back;
                        break;
                    } else if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                        self.parent[j] = back;
                        self.ts[j] = self.ts[i];
                        self.dist[j] = self.dist[i] + 1;
                    }
                }
            }

            self.time += 1;
            if found != NO_PARENT {
                self.in_active[i] = true;
                current = Some(i);
                self.augment(found);
                while let Some(o) = self.orphans.pop_front() {
                    self.process_orphan(o);
                }
            }
        }
    }

    fn source_side(&self) -> Vec<bool> {
        let n = self.tr_cap.len();
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| self.tr_cap[i] > SATURATION_EPS).collect();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(i) = stack.pop() {
            for a in self.first[i]..self.first[i + 1] {
                let j = self.head[a];
                if !seen[j] && self.r_cap[a] > SATURATION_EPS {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }
}

/// Maximum s/t flow and the minimal minimum cut.
pub fn max_flow_min_cut(g: &STGraph) -> MinCut {
    let mut solver = Solver::new(g);
    solver.run();
    let side = solver.source_side();
    MinCut {
        flow_value: solver.flow,
        source_side: (0..side.len()).filter(|&i| side[i]).collect(),
    }
}
