//! Maximum spanning arborescences (Chu-Liu/Edmonds).

use std::collections::BTreeMap;

use super::ProjectError;

/// Weight added from the root to nodes no arc reaches.
pub const EPSILON: f64 = 1e-6;

/// Candidate arcs over a sentence of `n` tokens; node 0 is the virtual root.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedDigraph {
    pub n: usize,
    /// `(head, dep) -> weight`
    pub arcs: BTreeMap<(usize, usize), f64>,
}

impl WeightedDigraph {
    pub fn new(n: usize) -> Self {
        WeightedDigraph { n, arcs: BTreeMap::new() }
    }

    /// Add `weight` to the arc `head -> dep`. Self-arcs, arcs into the root
    /// and out-of-range nodes are ignored.
    pub fn add(&mut self, head: usize, dep: usize, weight: f64) {
        if head == dep || dep == 0 || dep > self.n || head > self.n {
            return;
        }
        *self.arcs.entry((head, dep)).or_insert(0.0) += weight;
    }

    pub fn weight(&self, head: usize, dep: usize) -> Option<f64> {
        self.arcs.get(&(head, dep)).copied()
    }

    /// Root arcs of weight [`EPSILON`] for nodes otherwise unreachable from
    /// 0, added one at a time from the leftmost such node.
    pub fn with_reachability(&self) -> WeightedDigraph {
        let mut g = self.clone();
        loop {
            let mut reached = vec![false; g.n + 1];
            reached[0] = true;
            let mut stack = vec![0];
            while let Some(h) = stack.pop() {
                for (&(head, dep), _) in g.arcs.range((h, 0)..(h + 1, 0)) {
                    debug_assert_eq!(head, h);
                    if !reached[dep] {
                        reached[dep] = true;
                        stack.push(dep);
                    }
                }
            }
            match (1..=g.n).find(|&d| !reached[d]) {
                Some(d) => {
                    g.arcs.insert((0, d), EPSILON);
                }
                None => return g,
            }
        }
    }

    fn matrix(&self) -> Vec<Vec<Option<f64>>> {
        let mut m = vec![vec![None; self.n + 1]; self.n + 1];
        for (&(h, d), &w) in &self.arcs {
            m[h][d] = Some(w);
        }
        m
    }
}

/// Maximum-weight spanning arborescence rooted at 0. Returns `heads` with
/// `heads[d - 1]` the head of node `d`. The root may take several
/// dependents. Ties go to the leftmost head.
pub fn decode_mst(g: &WeightedDigraph) -> Result<Vec<usize>, ProjectError> {
    if g.n == 0 {
        return Err(ProjectError::EmptyGraph);
    }
    let g = g.with_reachability();
    let heads = chu_liu_edmonds(&g.matrix());
    Ok(heads[1..].to_vec())
}

/// Like [`decode_mst`] but with exactly one dependent of the root, as a
/// dependency tree requires. Missing arcs between tokens are treated as
/// weight [`EPSILON`] so every token can be the root's single dependent;
/// the best tree over all choices wins, ties to the leftmost root.
pub fn decode_single_root(g: &WeightedDigraph) -> Result<Vec<usize>, ProjectError> {
    if g.n == 0 {
        return Err(ProjectError::EmptyGraph);
    }
    let n = g.n;
    let mut base = g.matrix();
    for (h, row) in base.iter_mut().enumerate().skip(1) {
        for (d, cell) in row.iter_mut().enumerate().skip(1) {
            if h != d && cell.is_none() {
                *cell = Some(EPSILON);
            }
        }
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 1..=n {
        let mut m = base.clone();
        for d in 1..=n {
            m[0][d] = if d == r { Some(g.weight(0, r).unwrap_or(EPSILON)) } else { None };
        }
        let heads = chu_liu_edmonds(&m);
        let total: f64 = (1..=n).map(|d| m[heads[d]][d].unwrap_or(0.0)).sum();
        if best.as_ref().is_none_or(|(w, _)| total > *w) {
            best = Some((total, heads));
        }
    }
    Ok(best.map(|(_, h)| h[1..].to_vec()).unwrap_or_default())
}

/// Sum of arc weights for a head vector (missing arcs count as 0).
pub fn tree_weight(g: &WeightedDigraph, heads: &[usize]) -> f64 {
    heads
        .iter()
        .enumerate()
        .map(|(i, &h)| g.weight(h, i + 1).unwrap_or(0.0))
        .sum()
}

/// Dense Chu-Liu/Edmonds over `m[head][dep]`. Every non-root node must have
/// at least one incoming arc. Returns heads indexed by node (entry 0 unused).
fn chu_liu_edmonds(m: &[Vec<Option<f64>>]) -> Vec<usize> {
    let size = m.len();
    let mut best = vec![0usize; size];
    for d in 1..size {
        let mut choice: Option<(usize, f64)> = None;
        for (h, row) in m.iter().enumerate() {
            if h == d {
                continue;
            }
            if let Some(w) = row[d] {
                if choice.is_none_or(|(_, bw)| w > bw) {
                    choice = Some((h, w));
                }
            }
        }
        best[d] = choice.expect("node without incoming arcs").0;
    }
    let Some(cycle) = find_cycle(&best) else {
        return best;
    };
    let in_cycle: Vec<bool> = (0..size).map(|v| cycle.contains(&v)).collect();

    // Contract the cycle into one node placed after the surviving nodes.
    let outside: Vec<usize> = (0..size).filter(|&v| !in_cycle[v]).collect();
    let mut new_id = vec![usize::MAX; size];
    for (i, &v) in outside.iter().enumerate() {
        new_id[v] = i;
    }
    let c = outside.len();
    let mut sub = vec![vec![None; c + 1]; c + 1];
    // For each outside head: the cycle node it enters through.
    let mut entry_via = vec![usize::MAX; size];
    // For each outside dependent: the cycle node it leaves from.
    let mut exit_via = vec![usize::MAX; size];
    for &u in &outside {
        for &v in &outside {
            if u != v {
                sub[new_id[u]][new_id[v]] = m[u][v];
            }
        }
        for &v in &cycle {
            if let Some(w) = m[u][v] {
                let adjusted = w - m[best[v]][v].unwrap();
                let cell: &mut Option<f64> = &mut sub[new_id[u]][c];
                if cell.is_none_or(|cw| adjusted > cw) {
                    *cell = Some(adjusted);
                    entry_via[u] = v;
                }
            }
        }
        if u != 0 {
            for &h in &cycle {
                if let Some(w) = m[h][u] {
                    let cell: &mut Option<f64> = &mut sub[c][new_id[u]];
                    if cell.is_none_or(|cw| w > cw) {
                        *cell = Some(w);
                        exit_via[u] = h;
                    }
                }
            }
        }
    }
    let sub_heads = chu_liu_edmonds(&sub);

    let mut heads = best.clone();
    for &v in outside.iter().skip(1) {
        let h = sub_heads[new_id[v]];
        heads[v] = if h == c { exit_via[v] } else { outside[h] };
    }
    let entering_head = outside[sub_heads[c]];
    heads[entry_via[entering_head]] = entering_head;
    heads
}

/// Some cycle of the head function (nodes in ascending order), if any.
fn find_cycle(heads: &[usize]) -> Option<Vec<usize>> {
    let size = heads.len();
    let mut color = vec![0u8; size];
    color[0] = 2;
    for start in 1..size {
        let mut path = Vec::new();
        let mut v = start;
        while color[v] == 0 {
            color[v] = 1;
            path.push(v);
            v = heads[v];
        }
        if color[v] == 1 {
            let pos = path.iter().position(|&x| x == v).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            return Some(cycle);
        }
        for p in path {
            color[p] = 2;
        }
    }
    None
}
