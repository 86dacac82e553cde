//! Shared fixtures for the integration tests: random GKM graphs in two
//! variables, random structure-algebra modules, and brute-force oracles
//! that do not go through the engine's linear algebra.
#![allow(dead_code)]

use msheaf::graph::{Edge, MomentGraph, VertexSet};
use msheaf::module::AmbientModule;
use msheaf::poly::{int, Polynomial, Scalar};
use msheaf::zmod::ZModule;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const DIRECTIONS: [[i64; 2]; 10] = [
    [1, 0],
    [0, 1],
    [1, 1],
    [1, -1],
    [1, 2],
    [2, 1],
    [1, -2],
    [2, -1],
    [1, 3],
    [3, 1],
];

fn proportional(a: &[i64; 2], b: &[i64; 2]) -> bool {
    a[0] * b[1] == a[1] * b[0]
}

/// A connected-or-not GKM graph on `2..=max_vertices` vertices in two
/// variables; every edge `i - j` with `i < j` is also the relation `i < j`.
pub fn random_gkm_graph(rng: &mut TestRng, max_vertices: usize) -> MomentGraph {
    let n = rng.gen_range(2..=max_vertices);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut at: Vec<Vec<[i64; 2]>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if !rng.gen_bool(0.55) {
                continue;
            }
            let mut dirs = DIRECTIONS.to_vec();
            dirs.shuffle(rng);
            let free = dirs
                .into_iter()
                .find(|d| at[i].iter().chain(&at[j]).all(|e| !proportional(d, e)));
            if let Some(d) = free {
                let scale = if rng.gen_bool(0.2) { -1 } else { 1 };
                at[i].push(d);
                at[j].push(d);
                edges.push(Edge {
                    u: i,
                    v: j,
                    label: vec![int(scale * d[0]), int(scale * d[1])],
                });
            }
        }
    }
    let g = MomentGraph::from_directed_edges(2, names, edges);
    g.ensure_valid().expect("random graph is valid");
    assert!(g.is_gkm().is_ok());
    g
}

/// A homogeneous polynomial of the given polynomial degree in two variables.
pub fn random_poly(rng: &mut TestRng, k: u32) -> Polynomial {
    let terms = (0..=k).map(|i| (vec![i, k - i], int(rng.gen_range(-2..=2))));
    Polynomial::from_terms(2, terms).unwrap()
}

/// The structure-algebra span of one to three random generators of degree
/// 0 or 2, in rank one coordinates at every vertex.
pub fn random_zmodule(rng: &mut TestRng, g: &MomentGraph, cap: i32) -> ZModule {
    let n = g.vertex_count();
    let blocks: Vec<AmbientModule> = (0..n).map(|_| AmbientModule::free(2, &[0])).collect();
    let count = rng.gen_range(1..=3);
    let mut gens = Vec::new();
    while gens.len() < count {
        let k = rng.gen_range(0..=1u32);
        let t: Vec<Polynomial> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.25) {
                    Polynomial::zero(2)
                } else {
                    random_poly(rng, k)
                }
            })
            .collect();
        if t.iter().any(|p| !p.is_zero()) {
            gens.push((t, 2 * k as i32));
        }
    }
    ZModule::z_span(g, &g.all_vertices(), blocks, &gens, cap).unwrap()
}

/// Rank of a dense rational matrix by plain Gaussian elimination.
pub fn rank(mut rows: Vec<Vec<Scalar>>) -> usize {
    let mut r = 0;
    let cols = rows.first().map_or(0, Vec::len);
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|i| !rows[*i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &pivot;
                for j in c..cols {
                    let t = &f * &rows[r][j];
                    rows[i][j] -= t;
                }
            }
        }
        r += 1;
    }
    r
}

fn pow(a: &Scalar, e: u32) -> Scalar {
    (0..e).fold(Scalar::one(), |acc, _| acc * a)
}

/// Dimension in degree `d` of the sections of the structure sheaf of a
/// two-variable graph over `set`: tuples of binary forms of degree `d/2`
/// whose differences along each edge vanish on the kernel of the label.
pub fn brute_structure_sections(g: &MomentGraph, set: &VertexSet, d: i32) -> usize {
    assert_eq!(g.dim(), 2);
    let k = (d / 2) as u32;
    let verts: Vec<usize> = set.iter().copied().collect();
    let width = (k + 1) as usize;
    let unknowns = verts.len() * width;
    let mut rows = Vec::new();
    for e in g.edges() {
        let (Some(pu), Some(pv)) = (
            verts.iter().position(|x| *x == e.u),
            verts.iter().position(|x| *x == e.v),
        ) else {
            continue;
        };
        // evaluate at (-b, a), a point spanning the kernel of a x1 + b x2
        let (a, b) = (e.label[0].clone(), e.label[1].clone());
        let mut row = vec![Scalar::zero(); unknowns];
        for i in 0..=k {
            let value = pow(&-b.clone(), i) * pow(&a, k - i);
            row[pu * width + i as usize] += value.clone();
            row[pv * width + i as usize] -= value;
        }
        rows.push(row);
    }
    unknowns - rank(rows)
}

/// Hilbert function of `S[-s]` in two variables at degree `d`.
pub fn free_dim(s: i32, d: i32) -> usize {
    if d < s {
        0
    } else {
        ((d - s) / 2 + 1) as usize
    }
}
