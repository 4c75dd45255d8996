//! Independent cluster and crossing oracles shared by the test targets.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use contact_lattice::percolation::{label_clusters, CrossDirection, Rect};
use contact_lattice::{Configuration, Geometry};

pub fn random_config(rng: &mut ChaCha8Rng, w: usize, h: usize, p: f64) -> Configuration {
    let vals: Vec<i8> = (0..w * h)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p {
                1
            } else if u < p + (1.0 - p) / 2.0 {
                0
            } else {
                -1
            }
        })
        .collect();
    Configuration::from_values(Geometry::torus(w, h).unwrap(), &vals).unwrap()
}

/// Breadth-first labelling on the torus from coordinates alone.
pub fn bfs_labels(c: &Configuration) -> Vec<Option<usize>> {
    let (w, h) = (c.geometry().width(), c.geometry().height());
    let occ = |x: usize, y: usize| c.at(x, y).value() == 1;
    let mut label = vec![None; w * h];
    let mut next = 0;
    for sy in 0..h {
        for sx in 0..w {
            if !occ(sx, sy) || label[sy * w + sx].is_some() {
                continue;
            }
            let mut q = VecDeque::from([(sx, sy)]);
            label[sy * w + sx] = Some(next);
            while let Some((x, y)) = q.pop_front() {
                for (nx, ny) in [((x + 1) % w, y), ((x + w - 1) % w, y), (x, (y + 1) % h), (x, (y + h - 1) % h)] {
                    if occ(nx, ny) && label[ny * w + nx].is_none() {
                        label[ny * w + nx] = Some(next);
                        q.push_back((nx, ny));
                    }
                }
            }
            next += 1;
        }
    }
    label
}

/// Union-find over the window cells with two virtual terminals.
pub fn uf_crossing(c: &Configuration, r: Rect, dir: CrossDirection) -> bool {
    let (w, h) = (c.geometry().width(), c.geometry().height());
    let (cols, rows) = (r.m + 1, r.n + 1);
    let n = cols * rows;
    let (src, dst) = (n, n + 1);
    let mut parent: Vec<usize> = (0..n + 2).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        p[ra] = rb;
    };
    let occ = |i: usize, j: usize| c.at((r.x0 + i) % w, (r.y0 + j) % h).value() == 1;
    for j in 0..rows {
        for i in 0..cols {
            if !occ(i, j) {
                continue;
            }
            let k = j * cols + i;
            if i + 1 < cols && occ(i + 1, j) {
                union(&mut parent, k, k + 1);
            }
            if j + 1 < rows && occ(i, j + 1) {
                union(&mut parent, k, k + cols);
            }
            let (first, last) = match dir {
                CrossDirection::Horizontal => (i == 0, i == cols - 1),
                CrossDirection::Vertical => (j == 0, j == rows - 1),
            };
            if first {
                union(&mut parent, k, src);
            }
            if last {
                union(&mut parent, k, dst);
            }
        }
    }
    find(&mut parent, src) == find(&mut parent, dst)
}

/// Same partition of occupied sites, same sizes and same origin cluster size.
pub fn partition_agrees(c: &Configuration) -> bool {
    let report = label_clusters(c);
    let bfs = bfs_labels(c);
    let mut map: HashMap<u32, usize> = HashMap::new();
    let mut inverse: HashMap<usize, u32> = HashMap::new();
    for (a, b) in report.labels.iter().zip(&bfs) {
        match (a, b) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                if *map.entry(*a).or_insert(*b) != *b || *inverse.entry(*b).or_insert(*a) != *a {
                    return false;
                }
            }
            _ => return false,
        }
    }
    let mut sizes = report.sizes.clone();
    let mut bfs_sizes: Vec<usize> = (0..inverse.len())
        .map(|l| bfs.iter().filter(|&&x| x == Some(l)).count())
        .collect();
    sizes.sort_unstable();
    bfs_sizes.sort_unstable();
    let origin = bfs[0].map_or(0, |l| bfs.iter().filter(|&&x| x == Some(l)).count());
    sizes == bfs_sizes && report.origin_size == origin
}
