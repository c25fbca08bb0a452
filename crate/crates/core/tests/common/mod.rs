#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qgraph::linalg::{c64, CMatrix};
use qgraph::space::{Element, QuantumSpace};
use qgraph::superop::SuperOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// A space with random positive definite densities, rescaled to satisfy the
/// 1-form condition.
pub fn random_space(blocks: &[usize], rng: &mut ChaCha8Rng) -> Arc<QuantumSpace> {
    let rho = blocks
        .iter()
        .map(|&n| {
            let g = random_matrix(n, n, rng);
            &g * g.adjoint() + CMatrix::identity(n, n).scale(0.3)
        })
        .collect();
    QuantumSpace::new(blocks, Some(rho), true).unwrap()
}

/// Block shapes up to `(3, 2, 1)`.
pub fn random_blocks(rng: &mut ChaCha8Rng) -> Vec<usize> {
    const SHAPES: [&[usize]; 8] = [&[2], &[3], &[1, 1], &[2, 1], &[1, 2], &[3, 1], &[2, 2], &[3, 2, 1]];
    SHAPES[rng.random_range(0..SHAPES.len())].to_vec()
}

pub fn random_element(space: &QuantumSpace, rng: &mut ChaCha8Rng) -> Element {
    let blocks = space.blocks().iter().map(|&n| random_matrix(n, n, rng)).collect();
    Element::new(space, blocks).unwrap()
}

pub fn random_map(space: &Arc<QuantumSpace>, rng: &mut ChaCha8Rng) -> SuperOperator {
    let n = space.dim();
    SuperOperator::new(space.clone(), random_matrix(n, n, rng)).unwrap()
}

pub fn erdos_renyi(n: usize, p: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                adj[(i, j)] = 1.0;
                adj[(j, i)] = 1.0;
            }
        }
    }
    adj
}

pub fn random_digraph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i != j && rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

fn reach(adj: &DMatrix<f64>, start: usize, transpose: bool) -> Vec<bool> {
    let n = adj.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            let edge = if transpose { adj[(v, u)] } else { adj[(u, v)] };
            if edge != 0.0 && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Connected components of an undirected graph by breadth-first search.
pub fn bfs_components(adj: &DMatrix<f64>) -> usize {
    let n = adj.nrows();
    let mut label = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if !label[s] {
            count += 1;
            for (v, r) in reach(adj, s, false).into_iter().enumerate() {
                label[v] |= r;
            }
        }
    }
    count
}

pub fn strongly_connected(adj: &DMatrix<f64>) -> bool {
    reach(adj, 0, false).into_iter().all(|b| b) && reach(adj, 0, true).into_iter().all(|b| b)
}

/// A proper 2-colouring of an undirected graph, if one exists.
pub fn two_colouring(adj: &DMatrix<f64>) -> Option<Vec<u8>> {
    let n = adj.nrows();
    let mut colour = vec![u8::MAX; n];
    for s in 0..n {
        if colour[s] != u8::MAX {
            continue;
        }
        colour[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if adj[(u, v)] == 0.0 {
                    continue;
                }
                if colour[v] == u8::MAX {
                    colour[v] = 1 - colour[u];
                    queue.push_back(v);
                } else if colour[v] == colour[u] {
                    return None;
                }
            }
        }
    }
    Some(colour)
}

pub fn cycle(n: usize) -> DMatrix<f64> {
    circulant(n, &[1])
}

/// Circulant graph on `Z_n` with connection set `±s`.
pub fn circulant(n: usize, steps: &[usize]) -> DMatrix<f64> {
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for &s in steps {
            adj[(i, (i + s) % n)] = 1.0;
            adj[((i + s) % n, i)] = 1.0;
        }
    }
    adj
}

/// Connected bipartite graph with parts `0..a` and `a..a+b`: a random
/// spanning tree across the parts plus random extra cross edges.
pub fn random_bipartite(a: usize, b: usize, p: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = a + b;
    let mut rest: Vec<usize> = (1..a).chain(a + 1..n).collect();
    for i in (1..rest.len()).rev() {
        rest.swap(i, rng.random_range(0..=i));
    }
    let mut adj = DMatrix::zeros(n, n);
    adj[(0, a)] = 1.0;
    adj[(a, 0)] = 1.0;
    let mut placed = vec![0, a];
    for v in rest {
        let opposite: Vec<usize> = placed.iter().cloned().filter(|&u| (u < a) != (v < a)).collect();
        let u = opposite[rng.random_range(0..opposite.len())];
        adj[(u, v)] = 1.0;
        adj[(v, u)] = 1.0;
        placed.push(v);
    }
    for i in 0..a {
        for j in a..n {
            if rng.random::<f64>() < p {
                adj[(i, j)] = 1.0;
                adj[(j, i)] = 1.0;
            }
        }
    }
    adj
}

/// Connected graph made of an odd cycle of length `2k + 1` with random
/// pendant trees attached.
pub fn random_odd_girth(k: usize, extra: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let c = 2 * k + 1;
    let n = c + extra;
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..c {
        adj[(i, (i + 1) % c)] = 1.0;
        adj[((i + 1) % c, i)] = 1.0;
    }
    for v in c..n {
        let u = rng.random_range(0..v);
        adj[(u, v)] = 1.0;
        adj[(v, u)] = 1.0;
    }
    adj
}
