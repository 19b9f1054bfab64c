//! Exact s-t max flow (Dinic) on integer capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct FlowGraph {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<i64>,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        FlowGraph { adj: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds arc `u -> v` with capacity `cap` and reverse arc with `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64, rev_cap: i64) {
        debug_assert!(cap >= 0 && rev_cap >= 0);
        let e = self.to.len() as u32;
        self.to.push(v as u32);
        self.cap.push(cap);
        self.to.push(u as u32);
        self.cap.push(rev_cap);
        self.adj[u].push(e);
        self.adj[v].push(e + 1);
    }

    fn levels(&self, s: usize, level: &mut [i32]) {
        level.fill(-1);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Pushes the maximum flow from `s` to `t`, leaving the residual graph.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let nodes = self.node_count();
        let mut level = vec![-1i32; nodes];
        let mut next = vec![0usize; nodes];
        let mut path: Vec<u32> = Vec::new();
        let mut flow = 0i64;
        loop {
            self.levels(s, &mut level);
            if level[t] < 0 {
                return flow;
            }
            next.fill(0);
            path.clear();
            let mut u = s;
            loop {
                if u == t {
                    let push = path.iter().map(|&e| self.cap[e as usize]).min().unwrap();
                    for &e in &path {
                        self.cap[e as usize] -= push;
                        self.cap[(e ^ 1) as usize] += push;
                    }
                    flow += push;
                    path.clear();
                    u = s;
                    continue;
                }
                let mut advanced = false;
                while next[u] < self.adj[u].len() {
                    let e = self.adj[u][next[u]];
                    let v = self.to[e as usize] as usize;
                    if self.cap[e as usize] > 0 && level[v] == level[u] + 1 {
                        path.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    next[u] += 1;
                }
                if advanced {
                    continue;
                }
                if u == s {
                    break;
                }
                // Dead end: retire the node and retreat one arc.
                level[u] = -1;
                let e = path.pop().unwrap();
                u = self.to[(e ^ 1) as usize] as usize;
                next[u] += 1;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}
