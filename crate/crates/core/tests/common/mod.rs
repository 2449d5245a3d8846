//! Brute-force reference computations used as oracles by the integration
//! tests. Nothing here calls the crate's inference, conditioning or
//! divergence code; models are read only through their CPT entries.

#![allow(dead_code)]

use std::collections::BTreeMap;

use causal_cloud::{CausalModel, FunctionalModel, Table};

pub type World = BTreeMap<String, usize>;

/// Every assignment of `cards`, last index fastest.
pub fn odometer(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s);
                    p
                })
            })
            .collect();
    }
    out
}

fn cpt_entry(t: &Table, x: usize, given: &[usize]) -> f64 {
    let mut g = 0;
    for (v, &s) in t.given().iter().zip(given) {
        g = g * v.cardinality() + s;
    }
    t.values()[g * t.scope()[0].cardinality() + x]
}

/// Variables ordered so parents come first, found by repeated passes.
pub fn parent_first_order(m: &CausalModel) -> Vec<String> {
    let mut done: Vec<String> = Vec::new();
    while done.len() < m.names().len() {
        for n in m.names() {
            if done.iter().any(|d| d == n) {
                continue;
            }
            let parents = m.cpt(n).unwrap().given_names();
            if parents.iter().all(|p| done.iter().any(|d| d == p)) {
                done.push(n.to_string());
            }
        }
    }
    done
}

/// Exogenous variables of an FCM: backgrounds plus observed variables with
/// no parents at all.
pub fn exogenous(f: &FunctionalModel) -> Vec<String> {
    f.base()
        .names()
        .into_iter()
        .filter(|n| f.background().contains(*n) || f.base().cpt(n).unwrap().given().is_empty())
        .map(String::from)
        .collect()
}

/// Solve the structural equations for exogenous values `u`, with `do_`
/// overriding mechanisms.
pub fn solve(f: &FunctionalModel, u: &World, do_: &World) -> World {
    let m = f.base();
    let mut w = World::new();
    for n in parent_first_order(m) {
        let value = if let Some(&v) = do_.get(&n) {
            v
        } else if let Some(&v) = u.get(&n) {
            v
        } else {
            let t = m.cpt(&n).unwrap();
            let pa: Vec<usize> = t.given_names().iter().map(|p| w[*p]).collect();
            (0..t.scope()[0].cardinality()).find(|&x| cpt_entry(t, x, &pa) == 1.0).unwrap()
        };
        w.insert(n, value);
    }
    w
}

/// All exogenous configurations with their prior probability.
pub fn exogenous_worlds(f: &FunctionalModel) -> Vec<(World, f64)> {
    let ex = exogenous(f);
    let cards: Vec<usize> = ex.iter().map(|n| f.base().variable(n).unwrap().cardinality()).collect();
    odometer(&cards)
        .into_iter()
        .map(|vals| {
            let u: World = ex.iter().cloned().zip(vals).collect();
            let p = ex
                .iter()
                .map(|n| cpt_entry(f.base().cpt(n).unwrap(), u[n], &[]))
                .product();
            (u, p)
        })
        .collect()
}

fn matches(w: &World, e: &World) -> bool {
    e.iter().all(|(k, v)| w[k] == *v)
}

fn flat_index(f: &FunctionalModel, w: &World, names: &[String]) -> usize {
    names
        .iter()
        .fold(0, |acc, n| acc * f.base().variable(n).unwrap().cardinality() + w[n])
}

fn size(f: &FunctionalModel, names: &[String]) -> usize {
    names.iter().map(|n| f.base().variable(n).unwrap().cardinality()).product()
}

/// Literal structural counterfactual:
/// `Σ_u [Y(x', u) = y] p(u) [E(u) = e] / Σ_u p(u) [E(u) = e]`.
pub fn literal_counterfactual(f: &FunctionalModel, do_: &World, targets: &[String], e: &World) -> Option<Vec<f64>> {
    let mut out = vec![0.0; size(f, targets)];
    let mut mass = 0.0;
    for (u, p) in exogenous_worlds(f) {
        if p == 0.0 || !matches(&solve(f, &u, &World::new()), e) {
            continue;
        }
        mass += p;
        out[flat_index(f, &solve(f, &u, do_), targets)] += p;
    }
    (mass > 0.0).then(|| out.into_iter().map(|v| v / mass).collect())
}

/// Roots of the observed graph (no observed parents).
pub fn cgm_roots(f: &FunctionalModel) -> Vec<String> {
    f.observed()
        .into_iter()
        .filter(|n| {
            f.base()
                .cpt(n)
                .unwrap()
                .given_names()
                .iter()
                .all(|p| f.background().contains(*p))
        })
        .map(String::from)
        .collect()
}

/// Root-conditioned approximation `Σ_w p(y | do x', w) p(w | e)`, with both
/// factors obtained by enumerating exogenous worlds.
pub fn literal_approx(f: &FunctionalModel, w_vars: &[String], do_: &World, targets: &[String], e: &World) -> Option<Vec<f64>> {
    let nw = size(f, w_vars);
    let ny = size(f, targets);
    let mut p_w_e = vec![0.0; nw];
    let mut p_wy_do = vec![0.0; nw * ny];
    let mut p_w = vec![0.0; nw];
    for (u, p) in exogenous_worlds(f) {
        let factual = solve(f, &u, &World::new());
        let wi = flat_index(f, &factual, w_vars);
        p_w[wi] += p;
        if matches(&factual, e) {
            p_w_e[wi] += p;
        }
        let cf = solve(f, &u, do_);
        p_wy_do[wi * ny + flat_index(f, &cf, targets)] += p;
    }
    let mass: f64 = p_w_e.iter().sum();
    if mass == 0.0 {
        return None;
    }
    let mut out = vec![0.0; ny];
    for wi in 0..nw {
        if p_w_e[wi] == 0.0 {
            continue;
        }
        for yi in 0..ny {
            out[yi] += p_w_e[wi] / mass * p_wy_do[wi * ny + yi] / p_w[wi];
        }
    }
    Some(out)
}

pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).log2())
        .sum()
}

pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Joint of the observed variables `names` by world enumeration, as a map
/// from state vectors to probabilities.
pub fn observed_joint(f: &FunctionalModel, names: &[String]) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    for (u, p) in exogenous_worlds(f) {
        if p == 0.0 {
            continue;
        }
        let w = solve(f, &u, &World::new());
        *out.entry(names.iter().map(|n| w[n]).collect()).or_insert(0.0) += p;
    }
    out
}

/// `H(A | B)` from a sparse joint over `names`.
pub fn conditional_entropy_bits(joint: &BTreeMap<Vec<usize>, f64>, names: &[String], a: &[String], b: &[String]) -> f64 {
    let project = |keep: &[String]| {
        let idx: Vec<usize> = keep.iter().map(|k| names.iter().position(|n| n == k).unwrap()).collect();
        let mut m: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (k, p) in joint {
            *m.entry(idx.iter().map(|&i| k[i]).collect()).or_insert(0.0) += p;
        }
        m.into_values().collect::<Vec<f64>>()
    };
    let ab: Vec<String> = a.iter().chain(b).cloned().collect();
    entropy_bits(&project(&ab)) - entropy_bits(&project(b))
}

/// Joint over all variables of a CGM by the chain rule.
pub fn chain_rule_joint(m: &CausalModel) -> Vec<f64> {
    let cards: Vec<usize> = m.variables().iter().map(|v| v.cardinality()).collect();
    let names = m.names();
    odometer(&cards)
        .into_iter()
        .map(|idx| {
            names
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let t = m.cpt(n).unwrap();
                    let pa: Vec<usize> = t
                        .given_names()
                        .iter()
                        .map(|p| idx[names.iter().position(|q| q == p).unwrap()])
                        .collect();
                    cpt_entry(t, idx[i], &pa)
                })
                .product()
        })
        .collect()
}

/// Whether some simple undirected path from `a` to `b` is active given `z`.
pub fn path_connected(edges: &[(usize, usize)], a: usize, b: usize, z: &[usize]) -> bool {
    let adj = |u: usize| -> Vec<usize> {
        edges
            .iter()
            .filter_map(|&(p, c)| if p == u { Some(c) } else if c == u { Some(p) } else { None })
            .collect()
    };
    let descendants = |u: usize| -> Vec<usize> {
        let mut out = vec![u];
        let mut i = 0;
        while i < out.len() {
            for &(p, c) in edges {
                if p == out[i] && !out.contains(&c) {
                    out.push(c);
                }
            }
            i += 1;
        }
        out
    };
    let is_edge = |p: usize, c: usize| edges.contains(&(p, c));
    fn walk(
        path: &mut Vec<usize>,
        b: usize,
        adj: &dyn Fn(usize) -> Vec<usize>,
        active: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if last == b {
            return active(path);
        }
        for next in adj(last) {
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            let found = walk(path, b, adj, active);
            path.pop();
            if found {
                return true;
            }
        }
        false
    }
    let active = |path: &[usize]| {
        path.windows(3).all(|w| {
            let collider = is_edge(w[0], w[1]) && is_edge(w[2], w[1]);
            if collider {
                descendants(w[1]).iter().any(|d| z.contains(d))
            } else {
                !z.contains(&w[1])
            }
        })
    };
    walk(&mut vec![a], b, &adj, &active)
}
