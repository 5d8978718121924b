//! Deterministic fixture generators shared by the integration suites.
#![allow(dead_code)]

use layercut::crossing::{compute_crossings, Drawing};
use layercut::geometry::{intersection_graph, BallSet};
use layercut::{Instance, Partition};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Instance on `edges` with vertex entries in `[v_lo, v_hi)` and edge
/// entries in `[e_lo, e_hi)`.
pub fn with_potentials(
    rng: &mut ChaCha8Rng,
    q: usize,
    n: usize,
    edges: Vec<(usize, usize)>,
    (v_lo, v_hi): (f64, f64),
    (e_lo, e_hi): (f64, f64),
) -> Instance {
    let vertex = (0..n).map(|_| uniform_vec(rng, q, v_lo, v_hi)).collect();
    let tables = (0..edges.len())
        .map(|_| uniform_vec(rng, q * q, e_lo, e_hi))
        .collect();
    Instance::new(q, false, n, edges, vertex, tables).unwrap()
}

pub fn random_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                // random orientation exercises both table layouts
                edges.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
            }
        }
    }
    edges
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Instance {
    let p = rng.gen_range(0.2..0.7);
    let edges = random_edges(rng, n, p);
    with_potentials(rng, q, n, edges, (0.0, 1.0), (0.0, 1.0))
}

pub fn random_partition(rng: &mut ChaCha8Rng, m: usize) -> Partition {
    Partition::new(
        (0..m)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..=1.0);
                (a, 1.0 - a)
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.6)).collect()
}

/// `w × h` grid, row-major ids.
pub fn grid_edges(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = r * w + c;
            if c + 1 < w {
                edges.push((v, v + 1));
            }
            if r + 1 < h {
                edges.push((v, v + w));
            }
        }
    }
    edges
}

/// Planar graph: a grid with a random subset of one diagonal per cell and
/// a few grid edges removed.
pub fn planar_edges(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = grid_edges(w, h)
        .into_iter()
        .filter(|_| rng.gen_bool(0.9))
        .collect();
    for r in 0..h.saturating_sub(1) {
        for c in 0..w.saturating_sub(1) {
            let v = r * w + c;
            match rng.gen_range(0..3) {
                0 => edges.push((v, v + w + 1)),
                1 => edges.push((v + 1, v + w)),
                _ => {}
            }
        }
    }
    edges
}

/// Twenty planar max-sum fixtures with `n <= 16`, `q = 2`.
pub fn planar_fixtures() -> Vec<Instance> {
    let shapes = [
        (2, 2),
        (2, 3),
        (3, 3),
        (3, 4),
        (4, 4),
        (2, 5),
        (2, 8),
        (3, 5),
        (4, 3),
        (1, 7),
    ];
    (0..20)
        .map(|i| {
            let mut r = rng(1000 + i as u64);
            let (w, h) = shapes[i % shapes.len()];
            let edges = if i % 2 == 0 {
                grid_edges(w, h)
            } else {
                planar_edges(&mut r, w, h)
            };
            with_potentials(&mut r, 2, w * h, edges, (0.0, 1.0), (0.0, 1.0))
        })
        .collect()
}

/// Twenty min-sum fixtures whose folded functions are balanced with
/// `alpha* <= 2`: vertex entries in `[2, 3]`, edge entries in `[0, 0.5]`,
/// degree at most 4 under the uniform split.
pub fn balanced_fixtures() -> Vec<Instance> {
    let shapes = [
        (2, 2),
        (2, 3),
        (3, 3),
        (3, 4),
        (2, 6),
        (4, 3),
        (1, 5),
        (2, 5),
    ];
    (0..20)
        .map(|i| {
            let mut r = rng(2000 + i as u64);
            let (w, h) = shapes[i % shapes.len()];
            let edges: Vec<_> = grid_edges(w, h)
                .into_iter()
                .filter(|_| r.gen_bool(0.85))
                .collect();
            with_potentials(&mut r, 2, w * h, edges, (2.0, 3.0), (0.0, 0.5))
        })
        .collect()
}

pub struct DiskFixture {
    pub balls: BallSet,
    pub inst: Instance,
}

/// Ten unit-disk fixtures with `n <= 12` centers in a `3 × 3` box.
pub fn disk_fixtures() -> Vec<DiskFixture> {
    (0..10)
        .map(|i| {
            let mut r = rng(3000 + i as u64);
            let n = r.gen_range(6..=12);
            let centers = (0..n)
                .map(|_| vec![r.gen_range(0.0..3.0), r.gen_range(0.0..3.0)])
                .collect();
            let balls = BallSet::new(2, centers, vec![1.0; n]).unwrap();
            let edges = intersection_graph(&balls).edges().to_vec();
            let inst = with_potentials(&mut r, 2, n, edges, (0.0, 1.0), (0.0, 1.0));
            DiskFixture { balls, inst }
        })
        .collect()
}

pub struct DrawingFixture {
    pub name: String,
    pub inst: Instance,
    pub drawing: Drawing,
}

pub fn convex_k4() -> DrawingFixture {
    let coords = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let edges = vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)];
    let drawing = compute_crossings(&coords, &edges).unwrap();
    let inst = layercut::problems::encode_maxcut(
        4,
        &edges.iter().map(|&(u, v)| (u, v, 1.0)).collect::<Vec<_>>(),
    )
    .unwrap();
    DrawingFixture {
        name: "convex K4".into(),
        inst,
        drawing,
    }
}

/// Perturbed grid drawings with random diagonals and two long chords,
/// kept when every edge has at most 4 crossings.
pub fn near_planar_fixtures() -> Vec<DrawingFixture> {
    let mut out = Vec::new();
    let mut seed = 4000;
    while out.len() < 5 {
        seed += 1;
        let mut r = rng(seed);
        let (w, h) = [(3, 3), (3, 4), (4, 3), (2, 5), (2, 6)][out.len()];
        let n = w * h;
        let coords: Vec<[f64; 2]> = (0..n)
            .map(|v| {
                let (x, y) = ((v % w) as f64, (v / w) as f64);
                [x + r.gen_range(-0.2..0.2), y + r.gen_range(-0.2..0.2)]
            })
            .collect();
        let mut edges = planar_edges(&mut r, w, h);
        let mut pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        pairs.shuffle(&mut r);
        let chords: Vec<_> = pairs
            .into_iter()
            .filter(|&(u, v)| !edges.contains(&(u, v)) && !edges.contains(&(v, u)))
            .take(2)
            .collect();
        edges.extend(chords);
        let Ok(drawing) = compute_crossings(&coords, &edges) else {
            continue;
        };
        if drawing.phi(edges.len()) > 4 {
            continue;
        }
        let inst = with_potentials(&mut r, 2, n, edges, (0.0, 1.0), (0.0, 1.0));
        out.push(DrawingFixture {
            name: format!("near-planar seed {seed}"),
            inst,
            drawing,
        });
    }
    out
}
