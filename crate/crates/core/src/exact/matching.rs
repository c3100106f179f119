//! Maximum bipartite matching (Hopcroft-Karp) and the minimum vertex cover
//! read off a maximum matching.

use std::collections::VecDeque;

const FREE: usize = usize::MAX;

/// Bipartite graph with `left` and `right` vertex counts and adjacency
/// lists from left to right.
#[derive(Clone, Debug, Default)]
pub struct Bipartite {
    pub left: usize,
    pub right: usize,
    pub adj: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    /// `mate_left[u]` is the right partner of `u`, or `None`.
    pub mate_left: Vec<Option<usize>>,
    pub mate_right: Vec<Option<usize>>,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexCover {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl VertexCover {
    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Bipartite {
    pub fn new(left: usize, right: usize) -> Bipartite {
        Bipartite { left, right, adj: vec![Vec::new(); left] }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u < self.left && v < self.right);
        self.adj[u].push(v);
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn max_matching(&self) -> Matching {
        let mut ml = vec![FREE; self.left];
        let mut mr = vec![FREE; self.right];
        let mut dist = vec![0usize; self.left];
        let mut size = 0;
        while self.layer(&ml, &mr, &mut dist) {
            let mut it = vec![0usize; self.left];
            for u in 0..self.left {
                if ml[u] == FREE && self.augment(u, &mut ml, &mut mr, &mut dist, &mut it) {
                    size += 1;
                }
            }
        }
        let wrap = |v: Vec<usize>| v.into_iter().map(|x| (x != FREE).then_some(x)).collect();
        Matching { mate_left: wrap(ml), mate_right: wrap(mr), size }
    }

    /// BFS layering from free left vertices; true if some free right vertex is reachable.
    fn layer(&self, ml: &[usize], mr: &[usize], dist: &mut [usize]) -> bool {
        let mut queue = VecDeque::new();
        for u in 0..self.left {
            if ml[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = FREE;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                let w = mr[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == FREE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        found
    }

    fn augment(
        &self,
        u: usize,
        ml: &mut [usize],
        mr: &mut [usize],
        dist: &mut [usize],
        it: &mut [usize],
    ) -> bool {
        while it[u] < self.adj[u].len() {
            let v = self.adj[u][it[u]];
            it[u] += 1;
            let w = mr[v];
            if w == FREE || (dist[w] == dist[u] + 1 && self.augment(w, ml, mr, dist, it)) {
                ml[u] = v;
                mr[v] = u;
                return true;
            }
        }
        dist[u] = FREE;
        false
    }

    /// Minimum vertex cover from a maximum matching: with `Z` the vertices
    /// reachable from free left vertices by alternating paths, the cover is
    /// `(L \ Z) ∪ (R ∩ Z)`.
    pub fn min_vertex_cover(&self, m: &Matching) -> VertexCover {
        let mut seen_l = vec![false; self.left];
        let mut seen_r = vec![false; self.right];
        let mut queue: VecDeque<usize> =
            (0..self.left).filter(|&u| m.mate_left[u].is_none()).collect();
        for &u in &queue {
            seen_l[u] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if m.mate_left[u] == Some(v) || seen_r[v] {
                    continue;
                }
                seen_r[v] = true;
                if let Some(w) = m.mate_right[v] {
                    if !seen_l[w] {
                        seen_l[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        VertexCover {
            left: (0..self.left).filter(|&u| !seen_l[u]).collect(),
            right: (0..self.right).filter(|&v| seen_r[v]).collect(),
        }
    }

    pub fn is_cover(&self, c: &VertexCover) -> bool {
        let mut in_l = vec![false; self.left];
        let mut in_r = vec![false; self.right];
        c.left.iter().for_each(|&u| in_l[u] = true);
        c.right.iter().for_each(|&v| in_r[v] = true);
        (0..self.left).all(|u| in_l[u] || self.adj[u].iter().all(|&v| in_r[v]))
    }

    pub fn is_matching(&self, m: &Matching) -> bool {
        let mut count = 0;
        for (u, mate) in m.mate_left.iter().enumerate() {
            if let Some(v) = *mate {
                if m.mate_right[v] != Some(u) || !self.adj[u].contains(&v) {
                    return false;
                }
                count += 1;
            }
        }
        count == m.size && m.mate_right.iter().flatten().count() == m.size
    }
}
