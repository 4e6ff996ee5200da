//! Graph ingestion, shortest-path distance matrices, spanning-tree
//! extraction, the ancestor-closure weighting transform, and the fixture
//! generators used throughout the test suites.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HypError, Result};
use crate::scalar::Scalar;

/// Undirected graph with positive edge weights. Node labels map to dense
/// indices in first-appearance order; adjacency lists keep input edge order
/// so traversals are reproducible.
#[derive(Clone, Debug)]
pub struct Graph<S> {
    labels: Vec<String>,
    label_idx: HashMap<String, usize>,
    edges: Vec<(usize, usize, S)>,
    adj: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Graph { labels: Vec::new(), label_idx: HashMap::new(), edges: Vec::new(), adj: Vec::new() }
    }

    pub fn node(&mut self, label: &str) -> usize {
        if let Some(&i) = self.label_idx.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.label_idx.insert(label.to_string(), i);
        self.adj.push(Vec::new());
        i
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: S) -> Result<()> {
        if u == v {
            return Err(HypError::Invalid(format!("self-loop at node {}", self.labels[u])));
        }
        if w <= S::zero() {
            return Err(HypError::Invalid(format!("nonpositive edge weight {w}")));
        }
        self.adj[u].push((v, w.clone()));
        self.adj[v].push((u, w.clone()));
        self.edges.push((u, v, w));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, S)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, S)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn label(&self, u: usize) -> &str {
        &self.labels[u]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.label_idx.get(label).copied()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.edges.iter().all(|(_, _, w)| *w == S::one())
    }

    /// Rewrites this graph with the same topology over a new scalar type.
    pub fn map_scalar<T: Scalar>(&self) -> Graph<T> {
        let mut g = Graph::new();
        for l in &self.labels {
            g.node(l);
        }
        for (u, v, w) in &self.edges {
            g.add_edge(*u, *v, T::from_f64(w.to_f64())).expect("valid edge");
        }
        g
    }
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Parses the tab-separated edge-list format: `u<TAB>v` or `u<TAB>v<TAB>w`,
/// `#` starts a comment line. Weights default to 1.
pub fn load_edge_list<S: Scalar>(text: &str) -> Result<Graph<S>> {
    let mut g = Graph::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split('\t').map(|f| f.trim()).collect();
        let err = |msg: String| HypError::Parse { line: lineno + 1, msg };
        if fields.len() < 2 || fields.len() > 3 {
            return Err(err(format!("expected 2 or 3 tab-separated fields, got {}", fields.len())));
        }
        if fields[0] == fields[1] {
            return Err(err(format!("self-loop on node {:?}", fields[0])));
        }
        let w = if fields.len() == 3 {
            S::parse_decimal(fields[2]).ok_or_else(|| err(format!("bad weight {:?}", fields[2])))?
        } else {
            S::one()
        };
        if w <= S::zero() {
            return Err(err(format!("nonpositive weight {}", w)));
        }
        let u = g.node(fields[0]);
        let v = g.node(fields[1]);
        g.add_edge(u, v, w).map_err(|e| err(e.to_string()))?;
    }
    Ok(g)
}

/// Serializes a graph back to the edge-list format.
pub fn to_edge_list<S: Scalar>(g: &Graph<S>) -> String {
    let mut out = String::new();
    for (u, v, w) in g.edges() {
        if *w == S::one() {
            out.push_str(&format!("{}\t{}\n", g.label(*u), g.label(*v)));
        } else {
            out.push_str(&format!("{}\t{}\t{}\n", g.label(*u), g.label(*v), w.format_sci()));
        }
    }
    out
}

/// Rooted spanning tree with parent/children arrays.
#[derive(Clone, Debug)]
pub struct WeightedTree<S> {
    graph: Graph<S>,
    root: usize,
    parent: Vec<Option<usize>>,
    parent_weight: Vec<S>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    bfs_order: Vec<usize>,
}

impl<S: Scalar> WeightedTree<S> {
    /// Roots an existing tree-shaped graph (connected, n-1 edges).
    pub fn from_tree_graph(graph: Graph<S>, root: usize) -> Result<Self> {
        if graph.n() == 0 {
            return Err(HypError::Invalid("empty graph".into()));
        }
        if graph.edge_count() != graph.n() - 1 {
            return Err(HypError::Invalid(format!(
                "not a tree: {} nodes but {} edges",
                graph.n(),
                graph.edge_count()
            )));
        }
        let n = graph.n();
        let mut parent = vec![None; n];
        let mut parent_weight = vec![S::zero(); n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0usize; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for (v, w) in graph.neighbors(u) {
                if !seen[*v] {
                    seen[*v] = true;
                    parent[*v] = Some(u);
                    parent_weight[*v] = w.clone();
                    children[u].push(*v);
                    depth[*v] = depth[u] + 1;
                    queue.push_back(*v);
                }
            }
        }
        if order.len() != n {
            let missing = (0..n).find(|&i| !seen[i]).unwrap();
            return Err(HypError::Disconnected(
                graph.label(root).to_string(),
                graph.label(missing).to_string(),
            ));
        }
        Ok(WeightedTree { graph, root, parent, parent_weight, children, depth, bfs_order: order })
    }

    pub fn graph(&self) -> &Graph<S> {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    /// Weight of the edge to the parent; zero for the root.
    pub fn parent_weight(&self, u: usize) -> &S {
        &self.parent_weight[u]
    }

    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    pub fn depth(&self, u: usize) -> usize {
        self.depth[u]
    }

    pub fn bfs_order(&self) -> &[usize] {
        &self.bfs_order
    }

    pub fn is_ancestor(&self, anc: usize, node: usize) -> bool {
        let mut cur = Some(node);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    /// Weighted length of the longest path (tree diameter).
    pub fn longest_path(&self) -> S {
        // two-sweep: farthest from root, then farthest from that node
        let far = |src: usize| -> (usize, S) {
            let dist = tree_distances(self, src);
            let mut best = (src, S::zero());
            for (i, d) in dist.iter().enumerate() {
                if *d > best.1 {
                    best = (i, d.clone());
                }
            }
            best
        };
        let (a, _) = far(self.root);
        far(a).1
    }
}

fn tree_distances<S: Scalar>(t: &WeightedTree<S>, src: usize) -> Vec<S> {
    let n = t.n();
    let mut dist = vec![S::zero(); n];
    let mut seen = vec![false; n];
    let mut stack = vec![src];
    seen[src] = true;
    while let Some(u) = stack.pop() {
        for (v, w) in t.graph.neighbors(u) {
            if !seen[*v] {
                seen[*v] = true;
                dist[*v] = dist[u].clone() + w;
                stack.push(*v);
            }
        }
    }
    dist
}

/// Symmetric nonnegative distance matrix with an optional observation mask.
#[derive(Clone, Debug)]
pub struct DistanceMatrix<S> {
    n: usize,
    vals: Vec<S>,
    mask: Option<Vec<bool>>,
    labels: Vec<String>,
}

impl<S: Scalar> DistanceMatrix<S> {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        let vals = (0..n * n).map(|_| S::zero()).collect();
        DistanceMatrix { n, vals, mask: None, labels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.vals[i * self.n + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: S) {
        self.vals[i * self.n + j] = v.clone();
        self.vals[j * self.n + i] = v;
    }

    pub fn fully_observed(&self) -> bool {
        self.mask.as_ref().map_or(true, |m| m.iter().all(|&b| b))
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[i * self.n + j])
    }

    pub fn set_mask(&mut self, mask: Vec<bool>) {
        assert_eq!(mask.len(), self.n * self.n);
        self.mask = Some(mask);
    }

    /// Observed unordered pairs (i < j).
    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.is_observed(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn observed_count(&self) -> usize {
        self.observed_pairs().len()
    }

    /// TSV serialization: header row of labels, then one row of values per
    /// node. Unobserved entries are empty fields.
    pub fn to_tsv(&self) -> String {
        let mut out = self.labels.join("\t");
        out.push('\n');
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    if self.is_observed(i, j) {
                        self.get(i, j).format_sci()
                    } else {
                        String::new()
                    }
                })
                .collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| HypError::Parse { line: 1, msg: "empty distance matrix file".into() })?;
        let labels: Vec<String> = header.split('\t').map(|s| s.trim().to_string()).collect();
        let n = labels.len();
        let mut m = DistanceMatrix::zeros(labels);
        let mut mask = vec![false; n * n];
        let mut rows = 0;
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != n {
                return Err(HypError::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} fields, got {}", n, fields.len()),
                });
            }
            for (j, f) in fields.iter().enumerate() {
                let f = f.trim();
                if f.is_empty() {
                    continue;
                }
                let v = S::parse_decimal(f).ok_or_else(|| HypError::Parse {
                    line: lineno + 1,
                    msg: format!("bad value {:?}", f),
                })?;
                m.vals[rows * n + j] = v;
                mask[rows * n + j] = true;
            }
            rows += 1;
        }
        if rows != n {
            return Err(HypError::Parse {
                line: rows + 1,
                msg: format!("expected {} data rows, got {}", n, rows),
            });
        }
        for i in 0..n {
            mask[i * n + i] = true;
        }
        if !mask.iter().all(|&b| b) {
            m.set_mask(mask);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if !self.get(i, i).is_zero() {
                return Err(HypError::Invalid(format!("nonzero diagonal at {}", self.labels[i])));
            }
            for j in 0..self.n {
                if self.is_observed(i, j) != self.is_observed(j, i) {
                    return Err(HypError::Invalid("asymmetric observation mask".into()));
                }
                if self.is_observed(i, j) {
                    let (a, b) = (self.get(i, j), self.get(j, i));
                    if a != b {
                        return Err(HypError::Invalid(format!(
                            "asymmetric entries at ({}, {}): {} vs {}",
                            self.labels[i], self.labels[j], a, b
                        )));
                    }
                    if a.is_negative() || !a.is_finite() {
                        return Err(HypError::Invalid(format!(
                            "invalid distance {} at ({}, {})",
                            a, self.labels[i], self.labels[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn num_threads() -> usize {
    std::env::var("HYPEMBED_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get()))
}

/// Exact graph metric: BFS for unit weights, Dijkstra otherwise. Per-source
/// searches run on a small thread pool capped by `HYPEMBED_THREADS`.
pub fn shortest_path_matrix<S: Scalar>(g: &Graph<S>) -> Result<DistanceMatrix<S>> {
    let n = g.n();
    if n == 0 {
        return Err(HypError::Invalid("empty graph".into()));
    }
    let unit = g.has_unit_weights();
    let threads = num_threads().min(n).max(1);
    let mp_bits = crate::scalar::mp_precision();

    let mut rows: Vec<Option<Vec<S>>> = vec![None; n];
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for c in 0..threads {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n);
            if lo >= hi {
                continue;
            }
            handles.push(scope.spawn(move || {
                crate::scalar::set_mp_precision(mp_bits);
                (lo..hi)
                    .map(|src| if unit { bfs_row(g, src) } else { dijkstra_row(g, src) })
                    .collect::<Vec<_>>()
            }));
        }
        let mut c = 0;
        for h in handles {
            let lo = c * chunk;
            for (off, row) in h.join().expect("search worker").into_iter().enumerate() {
                rows[lo + off] = Some(row);
            }
            c += 1;
        }
    });

    let mut m = DistanceMatrix::zeros(g.labels().to_vec());
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.expect("all rows computed");
        for (j, d) in row.into_iter().enumerate() {
            if !d.is_finite() {
                return Err(HypError::Disconnected(g.label(i).to_string(), g.label(j).to_string()));
            }
            m.vals[i * n + j] = d;
        }
    }
    Ok(m)
}

fn bfs_row<S: Scalar>(g: &Graph<S>, src: usize) -> Vec<S> {
    let n = g.n();
    let mut dist: Vec<Option<usize>> = vec![None; n];
    dist[src] = Some(0);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for (v, _) in g.neighbors(u) {
            if dist[*v].is_none() {
                dist[*v] = Some(dist[u].unwrap() + 1);
                queue.push_back(*v);
            }
        }
    }
    dist.into_iter()
        .map(|d| d.map_or_else(|| S::from_f64(f64::INFINITY), S::from_usize))
        .collect()
}

struct HeapItem<S> {
    dist: S,
    node: usize,
}

impl<S: Scalar> PartialEq for HeapItem<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl<S: Scalar> Eq for HeapItem<S> {}
impl<S: Scalar> Ord for HeapItem<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on distance via reversed comparison; ties by node index
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("finite distances")
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl<S: Scalar> PartialOrd for HeapItem<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra_row<S: Scalar>(g: &Graph<S>, src: usize) -> Vec<S> {
    let n = g.n();
    let inf = S::from_f64(f64::INFINITY);
    let mut dist: Vec<S> = vec![inf.clone(); n];
    let mut done = vec![false; n];
    dist[src] = S::zero();
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(HeapItem { dist: S::zero(), node: src });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for (v, w) in g.neighbors(u) {
            let cand = d.clone() + w;
            if cand < dist[*v] {
                dist[*v] = cand.clone();
                heap.push(HeapItem { dist: cand, node: *v });
            }
        }
    }
    dist
}

/// BFS spanning tree rooted at `root`; neighbor order follows input edge
/// order, so the result is deterministic. Edge weights are inherited.
pub fn bfs_tree<S: Scalar>(g: &Graph<S>, root: usize) -> Result<WeightedTree<S>> {
    let n = g.n();
    if n == 0 {
        return Err(HypError::Invalid("empty graph".into()));
    }
    let mut tree_graph = Graph::new();
    for l in g.labels() {
        tree_graph.node(l);
    }
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(root);
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for (v, w) in g.neighbors(u) {
            if !seen[*v] {
                seen[*v] = true;
                reached += 1;
                tree_graph.add_edge(u, *v, w.clone())?;
                queue.push_back(*v);
            }
        }
    }
    if reached != n {
        let missing = (0..n).find(|&i| !seen[i]).unwrap();
        return Err(HypError::Disconnected(g.label(root).to_string(), g.label(missing).to_string()));
    }
    WeightedTree::from_tree_graph(tree_graph, root)
}

/// Ancestor-closure weighting: the edge from a depth-`s` node to its child
/// gets weight `base^s` (base 2 by default), which makes every node strictly
/// closer to each of its ancestors than to any non-ancestor.
pub fn closure_weights<S: Scalar>(t: &WeightedTree<S>, base: f64) -> Result<WeightedTree<S>> {
    let mut g = Graph::new();
    for l in t.graph().labels() {
        g.node(l);
    }
    let b = S::from_f64(base);
    for &u in t.bfs_order() {
        for &c in t.children(u) {
            g.add_edge(u, c, b.powi(t.depth(u) as u32))?;
        }
    }
    WeightedTree::from_tree_graph(g, t.root())
}

/// Masks a distance matrix down to all graph edges plus a seeded sample of
/// non-edges at `ratio` non-edges per edge. Requests beyond the available
/// non-edges observe everything.
pub fn sample_matrix<S: Scalar>(
    d: &DistanceMatrix<S>,
    g: &Graph<S>,
    nonedge_ratio: f64,
    seed: u64,
) -> Result<DistanceMatrix<S>> {
    if nonedge_ratio <= 0.0 {
        return Err(HypError::Invalid("nonedge ratio must be positive".into()));
    }
    let n = d.n();
    if g.n() != n {
        return Err(HypError::Invalid("graph and matrix size mismatch".into()));
    }
    let mut is_edge = vec![false; n * n];
    for (u, v, _) in g.edges() {
        is_edge[u * n + v] = true;
        is_edge[v * n + u] = true;
    }
    let mut nonedges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !is_edge[i * n + j] {
                nonedges.push((i, j));
            }
        }
    }
    let want = (nonedge_ratio * g.edge_count() as f64).floor() as usize;
    let keep = want.min(nonedges.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    nonedges.shuffle(&mut rng);

    let mut mask = vec![false; n * n];
    for i in 0..n {
        mask[i * n + i] = true;
    }
    for (i, row) in is_edge.chunks(n).enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e {
                mask[i * n + j] = true;
            }
        }
    }
    for &(i, j) in nonedges.iter().take(keep) {
        mask[i * n + j] = true;
        mask[j * n + i] = true;
    }
    let mut out = d.clone();
    out.set_mask(mask);
    Ok(out)
}

/// Deterministic fixture generators.
#[derive(Clone, Copy, Debug)]
pub enum FixtureKind {
    /// Full `b`-ary tree of the given depth.
    BalancedTree { branching: usize, depth: usize },
    /// Root with `deg_max` chains of `m` nodes each (the precision
    /// lower-bound family).
    ChainStar { deg_max: usize, chain_len: usize },
    Path { n: usize },
    /// Hub plus `n - 1` leaves.
    Star { n: usize },
    /// Steiner transform of the complete graph on `n` nodes: a hub joined to
    /// every node with weight 1/2, so all pairwise distances equal 1.
    SteinerStar { n: usize },
}

pub fn gen_fixture<S: Scalar>(kind: FixtureKind) -> Result<Graph<S>> {
    let mut g = Graph::new();
    match kind {
        FixtureKind::BalancedTree { branching, depth } => {
            if branching < 1 {
                return Err(HypError::Invalid("branching must be at least 1".into()));
            }
            g.node("0");
            let mut frontier = vec![0usize];
            let mut next_id = 1usize;
            for _ in 0..depth {
                let mut next = Vec::new();
                for &p in &frontier {
                    for _ in 0..branching {
                        let c = g.node(&next_id.to_string());
                        next_id += 1;
                        g.add_edge(p, c, S::one())?;
                        next.push(c);
                    }
                }
                frontier = next;
            }
        }
        FixtureKind::ChainStar { deg_max, chain_len } => {
            if deg_max < 1 || chain_len < 1 {
                return Err(HypError::Invalid("chain_star needs deg_max >= 1 and m >= 1".into()));
            }
            let root = g.node("0");
            let mut next_id = 1usize;
            for _ in 0..deg_max {
                let mut prev = root;
                for _ in 0..chain_len {
                    let c = g.node(&next_id.to_string());
                    next_id += 1;
                    g.add_edge(prev, c, S::one())?;
                    prev = c;
                }
            }
        }
        FixtureKind::Path { n } => {
            if n < 2 {
                return Err(HypError::Invalid("path needs at least 2 nodes".into()));
            }
            for i in 0..n {
                g.node(&i.to_string());
            }
            for i in 0..n - 1 {
                g.add_edge(i, i + 1, S::one())?;
            }
        }
        FixtureKind::Star { n } => {
            if n < 2 {
                return Err(HypError::Invalid("star needs at least 2 nodes".into()));
            }
            for i in 0..n {
                g.node(&i.to_string());
            }
            for i in 1..n {
                g.add_edge(0, i, S::one())?;
            }
        }
        FixtureKind::SteinerStar { n } => {
            if n < 2 {
                return Err(HypError::Invalid("steiner star needs at least 2 nodes".into()));
            }
            for i in 0..n {
                g.node(&i.to_string());
            }
            let hub = g.node("steiner");
            let half = S::from_f64(0.5);
            for i in 0..n {
                g.add_edge(hub, i, half.clone())?;
            }
        }
    }
    Ok(g)
}
