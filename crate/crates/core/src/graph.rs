//! Undirected simple graphs and their text formats.
//!
//! Node ids are dense and 0-based once a graph is built. Loaders that renumber
//! nodes (TU datasets, Cora, LCC extraction) keep the original ids in an
//! optional relabeling table, see [`Graph::original_ids`].

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use ndarray::Array2;

use crate::energy::SignalMatrix;
use crate::error::{Error, Result};

/// Undirected simple graph: no self-loops, no multi-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    /// Canonical unordered pairs `(i, j)` with `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    original_ids: Option<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from endpoint pairs. Duplicate pairs (in either
    /// orientation) collapse to a single edge.
    pub fn from_edges<I>(n_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a node outside [0, {n_nodes})"
                )));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n_nodes];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let degrees = neighbors.iter().map(Vec::len).collect();
        Ok(Graph {
            n_nodes,
            edges,
            neighbors,
            degrees,
            original_ids: None,
        })
    }

    pub fn complete(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Graph::from_edges(n, pairs).expect("complete graph is valid")
    }

    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path graph is valid")
    }

    /// Cycle on `n >= 3` nodes.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a simple cycle needs at least 3 nodes");
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle graph is valid")
    }

    /// Star with one hub (node 0) and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("star graph is valid")
    }

    /// The four-node triangle with a pendant edge on node 0; degrees `[3, 2, 2, 1]`.
    pub fn triangle_with_pendant() -> Self {
        Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)]).expect("valid")
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n_nodes && self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Original node ids when this graph was renumbered at ingestion.
    pub fn original_ids(&self) -> Option<&[usize]> {
        self.original_ids.as_deref()
    }

    pub fn with_original_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.n_nodes {
            return Err(Error::Validation(format!(
                "relabeling table has {} entries for {} nodes",
                ids.len(),
                self.n_nodes
            )));
        }
        self.original_ids = Some(ids);
        Ok(self)
    }

    /// Stable fingerprint of the structure (node count and edge set).
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.n_nodes.hash(&mut h);
        self.edges.hash(&mut h);
        h.finish()
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n_nodes, self.n_nodes));
        for &(i, j) in &self.edges {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        a
    }

    pub fn degree_matrix(&self) -> Array2<f64> {
        Array2::from_diag(&ndarray::Array1::from_iter(
            self.degrees.iter().map(|&d| d as f64),
        ))
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n_nodes];
        let mut out = Vec::new();
        for start in 0..self.n_nodes {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes > 0 && self.components().len() == 1
    }

    pub fn is_regular(&self) -> bool {
        match (self.degrees.iter().min(), self.degrees.iter().max()) {
            (Some(lo), Some(hi)) => lo == hi,
            _ => true,
        }
    }

    /// Two-colouring test over every component.
    pub fn is_bipartite(&self) -> bool {
        let mut colour: Vec<Option<bool>> = vec![None; self.n_nodes];
        for start in 0..self.n_nodes {
            if colour[start].is_some() {
                continue;
            }
            colour[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                let cu = colour[u].unwrap();
                for &v in &self.neighbors[u] {
                    match colour[v] {
                        None => {
                            colour[v] = Some(!cu);
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => return false,
                        Some(_) => {}
                    }
                }
            }
        }
        true
    }

    /// Subgraph induced by `nodes`; new ids follow ascending original order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let index: HashMap<usize, usize> =
            sorted.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let pairs = self.edges.iter().filter_map(|&(i, j)| {
            Some((*index.get(&i)?, *index.get(&j)?))
        });
        let sub = Graph::from_edges(sorted.len(), pairs.collect::<Vec<_>>())?;
        let ids = match &self.original_ids {
            Some(orig) => sorted.iter().map(|&i| orig[i]).collect(),
            None => sorted.clone(),
        };
        sub.with_original_ids(ids)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub connected: bool,
    pub regular: bool,
    pub bipartite: bool,
    pub avg_degree: f64,
    /// Population variance of the degree sequence.
    pub degree_variance: f64,
    pub min_degree: usize,
    pub max_degree: usize,
}

pub fn stats(g: &Graph) -> GraphStats {
    let n = g.n_nodes();
    let (avg, var) = if n == 0 {
        (0.0, 0.0)
    } else {
        let avg = 2.0 * g.n_edges() as f64 / n as f64;
        let var = g
            .degrees()
            .iter()
            .map(|&d| (d as f64 - avg).powi(2))
            .sum::<f64>()
            / n as f64;
        (avg, var)
    };
    let regular = g.is_regular();
    GraphStats {
        n_nodes: n,
        n_edges: g.n_edges(),
        connected: g.is_connected(),
        regular,
        bipartite: g.is_bipartite(),
        avg_degree: avg,
        degree_variance: if regular { 0.0 } else { var },
        min_degree: g.degrees().iter().copied().min().unwrap_or(0),
        max_degree: g.degrees().iter().copied().max().unwrap_or(0),
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses the whitespace edge-list format: optional `n <count>` header,
/// then one `i j` pair per line, `#` comments allowed.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(raw) {
            continue;
        }
        let line = raw.split('#').next().unwrap_or("").trim();
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let parse = |tok: &str| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected a non-negative integer, found {tok:?}"),
            })
        };
        match tokens.as_slice() {
            ["n", count] => {
                if declared.is_some() || !pairs.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "node-count header must come first and only once".into(),
                    });
                }
                declared = Some(parse(count)?);
            }
            [a, b] => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a == b {
                    return Err(Error::Validation(format!(
                        "self-loop on node {a} (line {line_no})"
                    )));
                }
                pairs.push((a, b));
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected \"i j\" or \"n <count>\", found {line:?}"),
                })
            }
        }
    }
    let n = match declared {
        Some(n) => n,
        None => pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0),
    };
    Graph::from_edges(n, pairs)
}

/// Canonical edge-list text: header then `i j` with `i < j`, sorted.
pub fn serialize_edge_list(g: &Graph) -> String {
    let mut out = format!("n {}\n", g.n_nodes());
    for &(i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

fn parse_tu_pair(line: &str, line_no: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected \"i, j\", found {line:?}"),
        });
    }
    let mut ids = [0usize; 2];
    for (slot, tok) in ids.iter_mut().zip(&parts) {
        let v: usize = tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad node id {tok:?}"),
        })?;
        if v == 0 {
            return Err(Error::Format(format!(
                "line {line_no}: TU node ids are 1-based, found 0"
            )));
        }
        *slot = v - 1;
    }
    Ok((ids[0], ids[1]))
}

/// Splits a TU-format dataset (`DS_A.txt`, `DS_graph_indicator.txt`,
/// optional `DS_node_attributes.txt`) into per-graph pieces, in ascending
/// graph-id order. Node ids are re-based to 0 inside each graph.
pub fn load_tu_dataset(
    adjacency_text: &str,
    indicator_text: &str,
    node_attr_text: Option<&str>,
) -> Result<Vec<(Graph, Option<SignalMatrix>)>> {
    let mut membership = Vec::new();
    for (idx, raw) in indicator_text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let gid: usize = raw.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad graph id {:?}", raw.trim()),
        })?;
        membership.push(gid);
    }
    let total = membership.len();

    // graph id -> global node ids in order
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &gid) in membership.iter().enumerate() {
        members.entry(gid).or_default().push(node);
    }
    let mut local = vec![0usize; total];
    for nodes in members.values() {
        for (li, &node) in nodes.iter().enumerate() {
            local[node] = li;
        }
    }

    let mut edges: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (idx, raw) in adjacency_text.lines().enumerate() {
        if is_skippable(raw) {
            continue;
        }
        let (a, b) = parse_tu_pair(raw.trim(), idx + 1)?;
        if a >= total || b >= total {
            return Err(Error::Format(format!(
                "line {}: edge ({}, {}) references a node beyond the {total} indicator entries",
                idx + 1,
                a + 1,
                b + 1
            )));
        }
        if membership[a] != membership[b] {
            return Err(Error::Format(format!(
                "line {}: edge ({}, {}) crosses graphs {} and {}",
                idx + 1,
                a + 1,
                b + 1,
                membership[a],
                membership[b]
            )));
        }
        edges
            .entry(membership[a])
            .or_default()
            .push((local[a], local[b]));
    }

    let attributes = match node_attr_text {
        None => None,
        Some(text) => {
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for (idx, raw) in text.lines().enumerate() {
                if raw.trim().is_empty() {
                    continue;
                }
                let row = raw
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<f64>().map_err(|_| Error::Parse {
                            line: idx + 1,
                            message: format!("bad attribute value {:?}", t.trim()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(Error::Format(format!(
                            "line {}: {} attributes, expected {}",
                            idx + 1,
                            row.len(),
                            first.len()
                        )));
                    }
                }
                rows.push(row);
            }
            if rows.len() != total {
                return Err(Error::Format(format!(
                    "{} attribute rows for {total} nodes",
                    rows.len()
                )));
            }
            Some(rows)
        }
    };

    let mut out = Vec::with_capacity(members.len());
    for (gid, nodes) in &members {
        let pairs = edges.remove(gid).unwrap_or_default();
        let graph = Graph::from_edges(nodes.len(), pairs)?.with_original_ids(nodes.clone())?;
        let x = match &attributes {
            None => None,
            Some(rows) => {
                let width = rows.first().map_or(0, Vec::len);
                let mut m = Array2::zeros((nodes.len(), width));
                for (li, &node) in nodes.iter().enumerate() {
                    for (c, &v) in rows[node].iter().enumerate() {
                        m[[li, c]] = v;
                    }
                }
                Some(SignalMatrix::new(m)?)
            }
        };
        out.push((graph, x));
    }
    Ok(out)
}

/// Cora-style citation data: graph, binary bag-of-words features, labels.
#[derive(Debug, Clone)]
pub struct CitationData {
    pub graph: Graph,
    pub features: SignalMatrix,
    pub labels: Vec<String>,
    pub node_ids: Vec<String>,
}

/// Parses the two-file citation format. `content` rows are
/// `<node_id> <feature>... <label>`; `cites` rows are `<cited> <citing>`.
/// Citations are symmetrised; self-citations are dropped. The relabeling
/// table records each node's row index in `content`.
pub fn load_citation_dataset(content: &str, cites: &str) -> Result<CitationData> {
    let mut node_ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut index = HashMap::new();
    for (idx, raw) in content.lines().enumerate() {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected id, features and label".into(),
            });
        }
        let feats = tokens[1..tokens.len() - 1]
            .iter()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("bad feature value {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != feats.len() {
                return Err(Error::Format(format!(
                    "line {}: {} features, expected {}",
                    idx + 1,
                    feats.len(),
                    first.len()
                )));
            }
        }
        if index.insert(tokens[0].to_string(), rows.len()).is_some() {
            return Err(Error::Format(format!(
                "line {}: duplicate node id {}",
                idx + 1,
                tokens[0]
            )));
        }
        node_ids.push(tokens[0].to_string());
        labels.push(tokens[tokens.len() - 1].to_string());
        rows.push(feats);
    }

    let mut pairs = Vec::new();
    for (idx, raw) in cites.lines().enumerate() {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected \"cited citing\"".into(),
            });
        }
        let lookup = |t: &str| {
            index.get(t).copied().ok_or_else(|| {
                Error::Format(format!("line {}: unknown node id {t}", idx + 1))
            })
        };
        let (a, b) = (lookup(tokens[0])?, lookup(tokens[1])?);
        if a != b {
            pairs.push((a, b));
        }
    }

    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let mut x = Array2::zeros((n, width));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    let graph = Graph::from_edges(n, pairs)?.with_original_ids((0..n).collect())?;
    Ok(CitationData {
        graph,
        features: SignalMatrix::new(x)?,
        labels,
        node_ids,
    })
}

/// Subgraph induced by the largest connected component. Ties go to the
/// component with the smallest node id. Rows of `x` are filtered to match.
pub fn largest_connected_component(
    g: &Graph,
    x: Option<&SignalMatrix>,
) -> Result<(Graph, Option<SignalMatrix>)> {
    if g.n_nodes() == 0 {
        return Err(Error::Validation("empty graph has no components".into()));
    }
    if let Some(x) = x {
        if x.n_rows() != g.n_nodes() {
            return Err(Error::domain(format!(
                "signal has {} rows for {} nodes",
                x.n_rows(),
                g.n_nodes()
            )));
        }
    }
    let comps = g.components();
    // max_by_key keeps the last maximum; iterate reversed so the first wins.
    let best = comps
        .iter()
        .rev()
        .max_by_key(|c| c.len())
        .expect("non-empty graph has a component");
    let sub = g.induced_subgraph(best)?;
    let sub_x = match x {
        None => None,
        Some(x) => Some(SignalMatrix::new(
            x.values().select(ndarray::Axis(0), best),
        )?),
    };
    Ok((sub, sub_x))
}
