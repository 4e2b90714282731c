//! Random generators and brute-force oracles shared by the test targets.
//!
//! The oracles deliberately avoid the library's own algorithms: joints are
//! products of raw mechanism entries, marginals are plain sums, ancestry and
//! d-separation enumerate paths directly.
#![allow(dead_code)]

use ctk_core::stoch::{flatten, unflatten};
use ctk_core::{CausalStructure, FinSpace, StochCausalModel, StochMatrix, VariableSubset};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// A DAG on `n` vertices whose declaration order is a random shuffle of a
/// topological order, so canonical index order is not always topological.
pub fn random_dag(rng: &mut TestRng, n: usize, density: f64) -> CausalStructure {
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(rng);
    let mut arrows = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                arrows.push((topo[i], topo[j]));
            }
        }
    }
    CausalStructure::from_indices((0..n).map(|v| format!("V{v}")).collect(), &arrows).unwrap()
}

pub fn random_structure(rng: &mut TestRng, max_n: usize) -> CausalStructure {
    let n = rng.gen_range(1..=max_n);
    let density = rng.gen_range(0.0..=1.0);
    random_dag(rng, n, density)
}

/// A probability vector; with `sparse`, some entries are exactly zero.
pub fn random_distribution(rng: &mut TestRng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> =
            (0..n).map(|_| if sparse && rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.iter().map(|x| x / total).collect();
        }
    }
}

pub fn random_model(rng: &mut TestRng, g: &CausalStructure, max_card: usize, sparse: bool) -> StochCausalModel {
    let spaces: Vec<FinSpace> =
        (0..g.len()).map(|v| FinSpace::indexed(g.name(v), rng.gen_range(1..=max_card)).unwrap()).collect();
    let tables: Vec<Vec<Vec<f64>>> = (0..g.len())
        .map(|v| {
            let configs: usize = g.parents(v).unwrap().iter().map(|&p| spaces[p].size()).product();
            (0..configs).map(|_| random_distribution(rng, spaces[v].size(), sparse)).collect()
        })
        .collect();
    StochCausalModel::from_tables(g.clone(), spaces, &tables).unwrap()
}

pub fn random_subset(rng: &mut TestRng, n: usize, p: f64) -> VariableSubset {
    (0..n).filter(|_| rng.gen_bool(p)).collect()
}

pub fn sizes(m: &StochCausalModel) -> Vec<usize> {
    m.spaces().iter().map(FinSpace::size).collect()
}

/// `P(x) = Π_v mechanism_v(x_v | x_pa(v))`, straight from the tables.
pub fn brute_joint(m: &StochCausalModel) -> Vec<f64> {
    let g = m.structure();
    let sz = sizes(m);
    let total: usize = sz.iter().product();
    (0..total)
        .map(|flat| {
            let x = unflatten(&sz, flat);
            (0..g.len())
                .map(|v| {
                    let pa = g.parents(v).unwrap();
                    let psz: Vec<usize> = pa.iter().map(|&p| sz[p]).collect();
                    let px: Vec<usize> = pa.iter().map(|&p| x[p]).collect();
                    m.mechanism(v).get(x[v], flatten(&psz, &px))
                })
                .product()
        })
        .collect()
}

/// Sums `joint` (over factors of sizes `sz`) onto the factors in `keep`, in that order.
pub fn brute_marginal(joint: &[f64], sz: &[usize], keep: &[usize]) -> Vec<f64> {
    let ksz: Vec<usize> = keep.iter().map(|&k| sz[k]).collect();
    let mut out = vec![0.0; ksz.iter().product()];
    for (flat, &p) in joint.iter().enumerate() {
        let x = unflatten(sz, flat);
        let kx: Vec<usize> = keep.iter().map(|&k| x[k]).collect();
        out[flatten(&ksz, &kx)] += p;
    }
    out
}

/// Checks `P(x,y,z) P(z) = P(x,z) P(y,z)` everywhere; no division needed.
pub fn brute_cond_independent(joint: &[f64], sz: &[usize], x: &[usize], y: &[usize], z: &[usize], tol: f64) -> bool {
    let cat = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
    let xyz = cat(&cat(x, y), z);
    let (pxyz, pz, pxz, pyz) = (
        brute_marginal(joint, sz, &xyz),
        brute_marginal(joint, sz, z),
        brute_marginal(joint, sz, &cat(x, z)),
        brute_marginal(joint, sz, &cat(y, z)),
    );
    let s = |idx: &[usize]| idx.iter().map(|&i| sz[i]).collect::<Vec<_>>();
    let (sx, sy, sz_) = (s(x), s(y), s(z));
    let (nx, ny, nz) = (sx.iter().product::<usize>(), sy.iter().product::<usize>(), sz_.iter().product::<usize>());
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let lhs = pxyz[(i * ny + j) * nz + k] * pz[k];
                let rhs = pxz[i * nz + k] * pyz[j * nz + k];
                if (lhs - rhs).abs() > tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Ancestry by depth-first search over arrows (at least one arrow).
pub fn brute_is_ancestor(g: &CausalStructure, u: usize, v: usize) -> bool {
    let mut stack = vec![u];
    let mut seen = vec![false; g.len()];
    while let Some(a) = stack.pop() {
        for &(s, t) in g.arrows() {
            if s == a && !seen[t] {
                if t == v {
                    return true;
                }
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    false
}

fn descendants_or_self(g: &CausalStructure, w: usize) -> Vec<usize> {
    (0..g.len()).filter(|&d| d == w || brute_is_ancestor(g, w, d)).collect()
}

/// Whether some simple undirected path from `u` to `t` is unblocked by `s`.
pub fn brute_connected(g: &CausalStructure, u: usize, t: usize, s: &[usize]) -> bool {
    let adjacent = |a: usize, b: usize| g.arrows().contains(&(a, b)) || g.arrows().contains(&(b, a));
    fn walk(
        g: &CausalStructure,
        path: &mut Vec<usize>,
        t: usize,
        s: &[usize],
        adjacent: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if last == t {
            return path.windows(3).all(|w| {
                let collider = g.arrows().contains(&(w[0], w[1])) && g.arrows().contains(&(w[2], w[1]));
                if collider {
                    descendants_or_self(g, w[1]).iter().any(|d| s.contains(d))
                } else {
                    !s.contains(&w[1])
                }
            });
        }
        for next in 0..g.len() {
            if adjacent(last, next) && !path.contains(&next) {
                path.push(next);
                if walk(g, path, t, s, adjacent) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    walk(g, &mut vec![u], t, s, &adjacent)
}

/// The brute-force verdict for sets: separated iff no pair is connected.
pub fn brute_d_separated(g: &CausalStructure, u: &VariableSubset, t: &VariableSubset, s: &VariableSubset) -> bool {
    u.iter().all(|a| t.iter().all(|b| !brute_connected(g, a, b, s.as_slice())))
}

/// A column-stochastic matrix between indexed spaces.
pub fn random_stochastic(rng: &mut TestRng, n: usize, m: usize, sparse: bool) -> StochMatrix {
    let cols: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(rng, m, sparse)).collect();
    StochMatrix::from_columns(
        vec![FinSpace::indexed("X", n).unwrap()],
        vec![FinSpace::indexed("Y", m).unwrap()],
        &cols,
    )
    .unwrap()
}

pub fn random_function(rng: &mut TestRng, n: usize, m: usize) -> StochMatrix {
    let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
    StochMatrix::from_function(vec![FinSpace::indexed("X", n).unwrap()], vec![FinSpace::indexed("Y", m).unwrap()], &f)
        .unwrap()
}

/// Every function `[n] -> [m]` as a value table.
pub fn all_functions(n: usize, m: usize) -> Vec<Vec<usize>> {
    (0..m.pow(n as u32)).map(|k| unflatten(&vec![m; n], k)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A diagram whose domain is exactly the multiset `dom`: every input is fed
/// to an identity, copy, discard or mechanism, and root mechanisms may be
/// added. Output width is kept at most `max_width` where possible.
pub fn random_layer(rng: &mut TestRng, g: &CausalStructure, dom: &[usize], max_width: usize) -> ctk_core::Diagram {
    use ctk_core::{Diagram, TheoryObject};
    let mut remaining = dom.to_vec();
    let mut pieces = Vec::new();
    let mut width = 0;
    let roots: Vec<usize> = (0..g.len()).filter(|&v| g.parents(v).unwrap().is_empty()).collect();
    if !roots.is_empty() && (dom.is_empty() || rng.gen_bool(0.3)) {
        pieces.push(Diagram::mechanism(g, *roots.choose(rng).unwrap()).unwrap());
        width += 1;
    }
    while !remaining.is_empty() {
        let fits = |v: usize, rem: &[usize]| {
            let mut rem = rem.to_vec();
            g.parents(v).unwrap().iter().all(|p| match rem.iter().position(|r| r == p) {
                Some(i) => {
                    rem.swap_remove(i);
                    true
                }
                None => false,
            })
        };
        let candidates: Vec<usize> =
            (0..g.len()).filter(|&v| !g.parents(v).unwrap().is_empty() && fits(v, &remaining)).collect();
        if !candidates.is_empty() && rng.gen_bool(0.5) {
            let v = *candidates.choose(rng).unwrap();
            for p in g.parents(v).unwrap() {
                let i = remaining.iter().position(|r| r == p).unwrap();
                remaining.swap_remove(i);
            }
            pieces.push(Diagram::mechanism(g, v).unwrap());
            width += 1;
            continue;
        }
        let l = remaining.swap_remove(rng.gen_range(0..remaining.len()));
        let room = width + remaining.len() + 2 <= max_width;
        let piece = match rng.gen_range(0..3) {
            0 if room => Diagram::copy(l),
            1 => Diagram::discard(l),
            _ => Diagram::identity(&TheoryObject::atom(l)),
        };
        width += piece.cod_labels().len();
        pieces.push(piece);
    }
    pieces.shuffle(rng);
    pieces.iter().fold(Diagram::identity(&TheoryObject::unit()), |acc, p| Diagram::par(&acc, p))
}

/// A random composite of one to three layers on a random small domain.
pub fn random_diagram(rng: &mut TestRng, g: &CausalStructure, max_width: usize) -> ctk_core::Diagram {
    let dom: Vec<usize> = {
        let mut d: Vec<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..g.len())).collect();
        d.sort_unstable();
        d
    };
    let mut d = random_layer(rng, g, &dom, max_width);
    for _ in 0..rng.gen_range(0..=2) {
        let next = random_layer(rng, g, &d.cod_labels().to_vec(), max_width);
        d = ctk_core::Diagram::seq(&d, &next).unwrap();
    }
    d
}

/// Entry `i` is the old position that lands at `i` after a stable sort.
pub fn stable_sort_permutation(labels: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| labels[i]);
    idx
}
