//! Integer minimum cuts by highest-label push-relabel with global relabeling
//! and the gap heuristic, on a compressed adjacency layout. Only the first
//! (preflow) phase runs; canonical cuts come from residual reachability to
//! the sink, on the reversed network when the smallest source side is wanted.

use std::collections::VecDeque;

pub struct GraphBuilder {
    nodes: usize,
    edges: Vec<(u32, u32, i64)>,
}

impl GraphBuilder {
    pub fn new(nodes: usize) -> Self {
        GraphBuilder { nodes, edges: Vec::new() }
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        GraphBuilder {
            nodes,
            edges: Vec::with_capacity(edges),
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.nodes += 1;
        self.nodes - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        debug_assert!(cap >= 0 && from < self.nodes && to < self.nodes);
        if cap > 0 && from != to {
            self.edges.push((from as u32, to as u32, cap));
        }
    }

    pub fn edges(&self) -> &[(u32, u32, i64)] {
        &self.edges
    }

    /// Rewrites every arc whose capacity is `marker` to `value`.
    pub fn replace_capacity(&mut self, marker: i64, value: i64) {
        for e in &mut self.edges {
            if e.2 == marker {
                e.2 = value;
            }
        }
    }

    pub fn build(self) -> FlowNetwork {
        FlowNetwork::from_edges(self.nodes, self.edges.into_iter())
    }

    /// Same network with every arc reversed.
    pub fn build_reversed(self) -> FlowNetwork {
        FlowNetwork::from_edges(self.nodes, self.edges.into_iter().map(|(u, v, c)| (v, u, c)))
    }

    /// Minimum `s`–`t` cut value and its source side, either the smallest or
    /// the largest among all minimum cuts.
    pub fn min_cut(self, s: usize, t: usize, side: CutSide) -> (i64, Vec<bool>) {
        match side {
            CutSide::Largest => {
                let mut net = self.build();
                let flow = net.max_preflow(s, t);
                (flow, net.sink_coreachable(t).into_iter().map(|v| !v).collect())
            }
            // the smallest source side is the largest sink side, i.e. the
            // largest source side of the reversed network with roles swapped
            CutSide::Smallest => {
                let mut net = self.build_reversed();
                let flow = net.max_preflow(t, s);
                (flow, net.sink_coreachable(s))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutSide {
    Smallest,
    Largest,
}

const NIL: u32 = u32::MAX;

/// Residual network. Capacities are updated in place by [`FlowNetwork::max_preflow`].
pub struct FlowNetwork {
    start: Vec<u32>,
    to: Vec<u32>,
    rev: Vec<u32>,
    cap: Vec<i64>,
}

/// Highest-label push-relabel state: heights, excesses, current arcs, a
/// stack of active nodes per height and a doubly linked list of all nodes
/// per height for the gap heuristic.
struct PushRelabel {
    n: u32,
    height: Vec<u32>,
    excess: Vec<i64>,
    cur: Vec<u32>,
    active: Vec<Vec<u32>>,
    next: Vec<u32>,
    prev: Vec<u32>,
    head: Vec<u32>,
    max_active: usize,
    max_height: usize,
}

impl PushRelabel {
    fn list_insert(&mut self, v: u32, h: u32) {
        let hd = self.head[h as usize];
        self.next[v as usize] = hd;
        self.prev[v as usize] = NIL;
        if hd != NIL {
            self.prev[hd as usize] = v;
        }
        self.head[h as usize] = v;
        self.max_height = self.max_height.max(h as usize);
    }

    fn list_remove(&mut self, v: u32, h: u32) {
        let (p, nx) = (self.prev[v as usize], self.next[v as usize]);
        if p != NIL {
            self.next[p as usize] = nx;
        } else {
            self.head[h as usize] = nx;
        }
        if nx != NIL {
            self.prev[nx as usize] = p;
        }
    }

    fn activate(&mut self, v: u32) {
        let h = self.height[v as usize];
        if h < self.n {
            self.active[h as usize].push(v);
            self.max_active = self.max_active.max(h as usize);
        }
    }
}

impl FlowNetwork {
    fn from_edges(n: usize, edges: impl Iterator<Item = (u32, u32, i64)> + Clone) -> Self {
        let mut start = vec![0u32; n + 1];
        for (u, v, _) in edges.clone() {
            start[u as usize + 1] += 1;
            start[v as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let m = start[n] as usize;
        let mut fill = start.clone();
        let mut to = vec![0u32; m];
        let mut rev = vec![0u32; m];
        let mut cap = vec![0i64; m];
        for (u, v, c) in edges {
            let a = fill[u as usize];
            fill[u as usize] += 1;
            let b = fill[v as usize];
            fill[v as usize] += 1;
            to[a as usize] = v;
            cap[a as usize] = c;
            rev[a as usize] = b;
            to[b as usize] = u;
            rev[b as usize] = a;
        }
        FlowNetwork { start, to, rev, cap }
    }

    pub fn node_count(&self) -> usize {
        self.start.len() - 1
    }

    fn arcs(&self, u: usize) -> std::ops::Range<usize> {
        self.start[u] as usize..self.start[u + 1] as usize
    }

    /// Exact distances to `t` in the residual network; unreachable nodes get `n`.
    fn global_relabel(&self, st: &mut PushRelabel, s: usize, t: usize) {
        let n = st.n;
        st.height.fill(n);
        st.head.fill(NIL);
        for b in st.active.iter_mut() {
            b.clear();
        }
        st.max_active = 0;
        st.max_height = 0;
        st.height[t] = 0;
        let mut queue = VecDeque::from([t as u32]);
        while let Some(v) = queue.pop_front() {
            let hv = st.height[v as usize];
            for b in self.arcs(v as usize) {
                let u = self.to[b] as usize;
                if u != s && st.height[u] == n && self.cap[self.rev[b] as usize] > 0 {
                    st.height[u] = hv + 1;
                    queue.push_back(u as u32);
                }
            }
        }
        for v in 0..n {
            let h = st.height[v as usize];
            st.cur[v as usize] = self.start[v as usize];
            if h < n && v as usize != t {
                st.list_insert(v, h);
                if st.excess[v as usize] > 0 {
                    st.activate(v);
                }
            }
        }
    }

    /// Maximum preflow from `s` to `t` (the first phase of push-relabel).
    /// Its value is the maximum flow value, and [`FlowNetwork::sink_coreachable`]
    /// afterwards gives the sink side of the minimum cut with the largest
    /// source side. The sum of finite capacities must fit `i64`.
    pub fn max_preflow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.node_count();
        let mut st = PushRelabel {
            n: n as u32,
            height: vec![0; n],
            excess: vec![0; n],
            cur: vec![0; n],
            active: vec![Vec::new(); n],
            next: vec![NIL; n],
            prev: vec![NIL; n],
            head: vec![NIL; n + 1],
            max_active: 0,
            max_height: 0,
        };
        for a in self.arcs(s) {
            let c = self.cap[a];
            if c > 0 {
                let v = self.to[a] as usize;
                self.cap[a] = 0;
                self.cap[self.rev[a] as usize] += c;
                st.excess[v] += c;
            }
        }
        self.global_relabel(&mut st, s, t);
        let relabel_budget = 6 * n + self.to.len() / 2;
        let mut work = 0usize;

        loop {
            while st.max_active > 0 && st.active[st.max_active].is_empty() {
                st.max_active -= 1;
            }
            let Some(u) = st.active[st.max_active].pop() else { break };
            let u = u as usize;
            let hu = st.height[u];
            if u == t || u == s || st.excess[u] == 0 || hu as usize != st.max_active || hu >= st.n {
                continue;
            }
            // discharge u
            let end = self.start[u + 1];
            while st.excess[u] > 0 {
                if st.cur[u] == end {
                    // relabel
                    work += (end - self.start[u]) as usize + 12;
                    let old = st.height[u];
                    let mut lowest = st.n;
                    for a in self.arcs(u) {
                        if self.cap[a] > 0 {
                            lowest = lowest.min(st.height[self.to[a] as usize] + 1);
                        }
                    }
                    st.list_remove(u as u32, old);
                    if st.head[old as usize] == NIL {
                        // gap: nothing at this height, so nothing above can reach t
                        for h in old as usize + 1..=st.max_height {
                            let mut v = st.head[h];
                            while v != NIL {
                                st.height[v as usize] = st.n;
                                v = st.next[v as usize];
                            }
                            st.head[h] = NIL;
                        }
                        st.max_height = old.saturating_sub(1) as usize;
                        st.height[u] = st.n;
                        break;
                    }
                    if lowest >= st.n {
                        st.height[u] = st.n;
                        break;
                    }
                    st.height[u] = lowest;
                    st.list_insert(u as u32, lowest);
                    st.cur[u] = self.start[u];
                    continue;
                }
                let a = st.cur[u] as usize;
                let v = self.to[a] as usize;
                if self.cap[a] > 0 && st.height[u] == st.height[v] + 1 {
                    let delta = st.excess[u].min(self.cap[a]);
                    self.cap[a] -= delta;
                    self.cap[self.rev[a] as usize] += delta;
                    st.excess[u] -= delta;
                    if st.excess[v] == 0 && v != t && v != s {
                        st.excess[v] = delta;
                        st.activate(v as u32);
                    } else {
                        st.excess[v] += delta;
                    }
                    if st.excess[u] > 0 {
                        st.cur[u] += 1;
                    }
                } else {
                    st.cur[u] += 1;
                }
            }
            if st.excess[u] > 0 && st.height[u] < st.n {
                st.activate(u as u32);
            }
            if work > relabel_budget {
                work = 0;
                self.global_relabel(&mut st, s, t);
            }
        }
        st.excess[t]
    }

    /// Nodes reachable from `s` in the residual network. Only meaningful
    /// after a complete flow, not a preflow.
    pub fn source_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for a in self.arcs(u) {
                let v = self.to[a] as usize;
                if self.cap[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes from which `t` is reachable in the residual network.
    pub fn sink_coreachable(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            // an arc u -> v with residual capacity is the reverse of the arc stored at v
            for b in self.arcs(v) {
                let u = self.to[b] as usize;
                let a = self.rev[b] as usize;
                if self.cap[a] > 0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classic_example() {
        // CLRS figure: max flow 23
        let mut b = GraphBuilder::new(6);
        for &(u, v, c) in &[
            (0, 1, 16),
            (0, 2, 13),
            (1, 2, 10),
            (2, 1, 4),
            (1, 3, 12),
            (3, 2, 9),
            (2, 4, 14),
            (4, 3, 7),
            (3, 5, 20),
            (4, 5, 4),
        ] {
            b.add_edge(u, v, c);
        }
        let mut net = b.build();
        assert_eq!(net.max_preflow(0, 5), 23);
        let snk = net.sink_coreachable(5);
        assert!(!snk[0] && snk[5]);
    }

    fn brute_min_cut(n: usize, edges: &[(usize, usize, i64)]) -> i64 {
        let mut best = i64::MAX;
        for mask in 0u32..(1 << (n - 2)) {
            let side = |v: usize| v == 0 || (v != n - 1 && mask >> (v - 1) & 1 == 1);
            let c = edges
                .iter()
                .filter(|&&(u, v, _)| side(u) && !side(v))
                .map(|e| e.2)
                .sum();
            best = best.min(c);
        }
        best
    }

    #[test]
    fn random_graphs_match_enumerated_cuts_and_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(2..9);
            let m = rng.gen_range(0..20);
            let edges: Vec<_> = (0..m)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..10)))
                .collect();
            let build = || {
                let mut b = GraphBuilder::new(n);
                for &(u, v, c) in &edges {
                    b.add_edge(u, v, c);
                }
                b
            };
            let cut = |side: &dyn Fn(usize) -> bool| -> i64 {
                edges
                    .iter()
                    .filter(|&&(u, v, _)| side(u) && !side(v))
                    .map(|e| e.2)
                    .sum()
            };
            let best = brute_min_cut(n, &edges);
            let (f_small, small) = build().min_cut(0, n - 1, CutSide::Smallest);
            let (f_large, large) = build().min_cut(0, n - 1, CutSide::Largest);
            assert_eq!((f_small, f_large), (best, best));
            assert_eq!(cut(&|v| small[v]), best);
            assert_eq!(cut(&|v| large[v]), best);
            assert!(small[0] && !small[n - 1] && large[0] && !large[n - 1]);
            // extremal among all minimum cuts
            for mask in 0u32..(1 << (n - 2)) {
                let side = |v: usize| v == 0 || (v != n - 1 && mask >> (v - 1) & 1 == 1);
                if cut(&side) == best {
                    assert!((0..n).all(|v| !small[v] || side(v)));
                    assert!((0..n).all(|v| !side(v) || large[v]));
                }
            }
        }
    }
}
