#![allow(dead_code)]

use oversmooth::rng::seeded;
use oversmooth::Graph;
use rand::Rng;

/// Random spanning tree on `n` nodes plus each remaining pair with probability `p`.
pub fn random_connected(seed: u64, n: usize, p: f64) -> Graph {
    let mut r = seeded(seed);
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((r.random_range(0..i), i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// First graph from consecutive seeds that is connected, non-regular and non-bipartite.
pub fn random_generic(seed: u64, n: usize, p: f64) -> Graph {
    (0..1000)
        .map(|s| random_connected(seed.wrapping_add(s), n, p))
        .find(|g| !g.is_regular() && !g.is_bipartite())
        .expect("a generic graph within 1000 draws")
}

pub fn complete_bipartite(a: usize, b: usize) -> Graph {
    let edges = (0..a).flat_map(|i| (0..b).map(move |j| (i, a + j)));
    Graph::from_edges(a + b, edges).unwrap()
}

pub fn petersen() -> Graph {
    let outer = (0..5).map(|i| (i, (i + 1) % 5));
    let spokes = (0..5).map(|i| (i, i + 5));
    let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
    Graph::from_edges(10, outer.chain(spokes).chain(inner)).unwrap()
}

/// 3-dimensional hypercube.
pub fn cube() -> Graph {
    let edges = (0..8usize).flat_map(|i| {
        (0..3).filter_map(move |b| {
            let j = i ^ (1 << b);
            (i < j).then_some((i, j))
        })
    });
    Graph::from_edges(8, edges).unwrap()
}

pub fn regular_corpus() -> Vec<Graph> {
    let mut out: Vec<Graph> = (2..=8).map(Graph::complete).collect();
    out.extend((3..=10).map(Graph::cycle));
    out.push(complete_bipartite(3, 3));
    out.push(petersen());
    out.push(cube());
    out
}

pub fn non_regular_corpus() -> Vec<Graph> {
    let mut out = vec![
        Graph::triangle_with_pendant(),
        Graph::path(3),
        Graph::path(6),
        Graph::star(4),
        complete_bipartite(2, 3),
    ];
    out.extend((0..10).map(|s| random_connected(100 + s, 5 + s as usize, 0.3)).filter(|g| !g.is_regular()));
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Nodes `i ≠ j` with `N(i) \ {j} = N(j) \ {i}`.
pub fn has_twins(g: &Graph) -> bool {
    let n = g.n_nodes();
    (0..n).any(|i| {
        (i + 1..n).any(|j| {
            let a: Vec<_> = g.neighbors(i).iter().filter(|&&v| v != j).collect();
            let b: Vec<_> = g.neighbors(j).iter().filter(|&&v| v != i).collect();
            a == b
        })
    })
}

pub fn diamond() -> Graph {
    Graph::from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]).unwrap()
}
