//! Directed acyclic graphs over named variables: reachability, d-separation
//! and back-door admissibility.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

pub type NodeSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Parents in edge-declaration order.
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    /// Build a DAG; rejects duplicate nodes, edges with undeclared endpoints,
    /// self-loops, repeated edges and directed cycles.
    pub fn new<N, E, S>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = S>,
        S: Into<String>,
        E: IntoIterator<Item = (S, S)>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Duplicate { kind: "node", name: n.clone() });
            }
        }
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        for (p, c) in edges {
            let (p, c): (String, String) = (p.into(), c.into());
            let pi = *index.get(&p).ok_or_else(|| Error::UnknownVariable(p.clone()))?;
            let ci = *index.get(&c).ok_or_else(|| Error::UnknownVariable(c.clone()))?;
            if pi == ci {
                return Err(Error::Cycle(p));
            }
            if parents[ci].contains(&pi) {
                return Err(Error::Duplicate { kind: "edge", name: format!("{p}->{c}") });
            }
            parents[ci].push(pi);
            children[pi].push(ci);
        }
        let dag = Dag { nodes, index, parents, children };
        dag.topological_indices()?;
        Ok(dag)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((self.nodes[p].as_str(), self.nodes[c].as_str()));
            }
        }
        out
    }

    pub(crate) fn idx(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.idx(n)).collect()
    }

    fn names(&self, set: impl IntoIterator<Item = usize>) -> NodeSet {
        set.into_iter().map(|i| self.nodes[i].clone()).collect()
    }

    /// Parents of `x` in edge-declaration order.
    pub fn parents(&self, x: &str) -> Result<Vec<&str>> {
        let i = self.idx(x)?;
        Ok(self.parents[i].iter().map(|&p| self.nodes[p].as_str()).collect())
    }

    pub fn children(&self, x: &str) -> Result<Vec<&str>> {
        let i = self.idx(x)?;
        Ok(self.children[i].iter().map(|&c| self.nodes[c].as_str()).collect())
    }

    pub fn roots(&self) -> NodeSet {
        self.names((0..self.len()).filter(|&i| self.parents[i].is_empty()))
    }

    fn closure(&self, start: Vec<usize>, next: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = start;
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(next[v].iter().copied().filter(|&w| !seen[w]));
            }
        }
        seen
    }

    /// All nodes with a directed path into `xs`, including `xs` themselves.
    pub fn ancestors(&self, xs: &[&str]) -> Result<NodeSet> {
        let mask = self.closure(self.indices(xs)?, &self.parents);
        Ok(self.names((0..self.len()).filter(|&i| mask[i])))
    }

    /// All nodes reachable from `xs` by directed paths, including `xs`.
    pub fn descendants(&self, xs: &[&str]) -> Result<NodeSet> {
        let mask = self.closure(self.indices(xs)?, &self.children);
        Ok(self.names((0..self.len()).filter(|&i| mask[i])))
    }

    /// True if some directed path of length ≥ 1 leads from a member of
    /// `from` to a member of `to`.
    pub fn has_directed_path(&self, from: &[&str], to: &[&str]) -> Result<bool> {
        let starts: Vec<usize> = self
            .indices(from)?
            .into_iter()
            .flat_map(|i| self.children[i].iter().copied())
            .collect();
        let mask = self.closure(starts, &self.children);
        Ok(self.indices(to)?.into_iter().any(|t| mask[t]))
    }

    fn topological_indices(&self) -> Result<Vec<usize>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        // Ready set keyed by name: lexicographic tie-breaking.
        let mut ready: BTreeSet<(&str, usize)> = (0..self.len())
            .filter(|&i| indegree[i] == 0)
            .map(|i| (self.nodes[i].as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(first) = ready.pop_first() {
            let v = first.1;
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert((self.nodes[c].as_str(), c));
                }
            }
        }
        if order.len() != self.len() {
            let stuck = (0..self.len()).find(|&i| indegree[i] > 0).unwrap_or(0);
            return Err(Error::Cycle(self.nodes[stuck].clone()));
        }
        Ok(order)
    }

    /// Kahn's algorithm with lexicographic tie-breaking on node names.
    pub fn topological_order(&self) -> Vec<&str> {
        self.topological_indices()
            .expect("acyclicity is checked at construction")
            .into_iter()
            .map(|i| self.nodes[i].as_str())
            .collect()
    }

    /// d-separation of `a` and `b` given `z`, by the reachability
    /// ("Bayes-ball") traversal over (node, direction) pairs.
    pub fn d_separated(&self, a: &[&str], b: &[&str], z: &[&str]) -> Result<bool> {
        let (ai, bi, zi) = (self.indices(a)?, self.indices(b)?, self.indices(z)?);
        for (x, y) in [(&ai, &bi), (&ai, &zi), (&bi, &zi)] {
            if let Some(&o) = x.iter().find(|i| y.contains(i)) {
                return Err(Error::OverlappingSets(self.nodes[o].clone()));
            }
        }
        let reach = self.active_reach(&ai, &zi);
        Ok(bi.iter().all(|&t| !reach[t]))
    }

    /// Nodes connected to `sources` by an active trail given `z`.
    fn active_reach(&self, sources: &[usize], z: &[usize]) -> Vec<bool> {
        let n = self.len();
        let mut observed = vec![false; n];
        z.iter().for_each(|&i| observed[i] = true);
        // Nodes that are in z or have a descendant in z.
        let anc_z = self.closure(z.to_vec(), &self.parents);

        const UP: usize = 0; // arrived from a child
        const DOWN: usize = 1; // arrived from a parent
        let mut visited = vec![[false; 2]; n];
        let mut reachable = vec![false; n];
        let mut queue: VecDeque<(usize, usize)> = sources.iter().map(|&s| (s, UP)).collect();
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !observed[v] {
                reachable[v] = true;
            }
            if dir == UP && !observed[v] {
                queue.extend(self.parents[v].iter().map(|&p| (p, UP)));
                queue.extend(self.children[v].iter().map(|&c| (c, DOWN)));
            } else if dir == DOWN {
                if !observed[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, DOWN)));
                }
                if anc_z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, UP)));
                }
            }
        }
        reachable
    }

    /// Copy of the graph with every edge out of `x` removed.
    fn without_outgoing(&self, x: usize) -> Dag {
        let mut g = self.clone();
        for &c in &self.children[x] {
            g.parents[c].retain(|&p| p != x);
        }
        g.children[x].clear();
        g
    }

    /// Back-door criterion: no member of `z` descends from `x`, and `z`
    /// blocks every path between `x` and `y` that starts with an edge into `x`.
    pub fn backdoor_admissible(&self, x: &str, y: &str, z: &[&str]) -> Result<bool> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        if xi == yi {
            return Err(Error::OverlappingSets(x.to_string()));
        }
        let zi = self.indices(z)?;
        if zi.contains(&xi) || zi.contains(&yi) {
            return Err(Error::OverlappingSets(
                if zi.contains(&xi) { x } else { y }.to_string(),
            ));
        }
        let desc = self.closure(vec![xi], &self.children);
        if zi.iter().any(|&i| desc[i]) {
            return Ok(false);
        }
        let reach = self.without_outgoing(xi).active_reach(&[xi], &zi);
        Ok(!reach[yi])
    }

    /// Smallest back-door admissible subset of `observable` (ties broken by
    /// lexicographic order of the sorted member names), or `None`.
    ///
    /// Exhaustive over subsets, so exponential in `observable.len()`.
    pub fn find_backdoor_set(&self, x: &str, y: &str, observable: &[&str]) -> Result<Option<NodeSet>> {
        self.idx(x)?;
        self.idx(y)?;
        let mut pool: Vec<&str> = observable.iter().copied().filter(|n| *n != x && *n != y).collect();
        pool.sort_unstable();
        pool.dedup();
        self.indices(&pool)?;
        for size in 0..=pool.len() {
            let mut found = None;
            for_each_combination(pool.len(), size, |combo| {
                if found.is_some() {
                    return;
                }
                let set: Vec<&str> = combo.iter().map(|&i| pool[i]).collect();
                if let Ok(true) = self.backdoor_admissible(x, y, &set) {
                    found = Some(set.iter().map(|s| s.to_string()).collect());
                }
            });
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// k-subsets of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        f(&combo);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if combo[i] < n - k + i {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// The latency system diagram: H → R, H → S, R → L, S → L.
pub fn latency_diagram() -> Dag {
    Dag::new(["H", "R", "S", "L"], [("H", "R"), ("H", "S"), ("R", "L"), ("S", "L")])
        .expect("static diagram")
}

/// The two-client spot-market diagram (contexts C, D; demands; policies;
/// purchases; provider outcome Z).
pub fn auction_diagram() -> Dag {
    Dag::new(
        ["C", "D", "W_1", "W_2", "X_0", "X_1", "X_2", "pi_1", "pi_2", "Y_1", "Y_2", "Z"],
        [
            ("C", "W_1"),
            ("C", "W_2"),
            ("C", "X_0"),
            ("D", "W_1"),
            ("D", "W_2"),
            ("D", "X_0"),
            ("W_1", "X_1"),
            ("W_2", "X_2"),
            ("X_1", "Y_1"),
            ("pi_1", "Y_1"),
            ("X_2", "Y_2"),
            ("pi_2", "Y_2"),
            ("Y_1", "Z"),
            ("Y_2", "Z"),
            ("X_0", "Z"),
        ],
    )
    .expect("static diagram")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> NodeSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rejects_cycles_and_unknown_nodes() {
        assert!(matches!(Dag::new(["A", "B"], [("A", "B"), ("B", "A")]), Err(Error::Cycle(_))));
        assert!(matches!(Dag::new(["A"], [("A", "B")]), Err(Error::UnknownVariable(_))));
        assert!(matches!(Dag::new(["A"], [("A", "A")]), Err(Error::Cycle(_))));
    }

    #[test]
    fn parents_on_fixed_diagrams() {
        let g1 = latency_diagram();
        assert_eq!(g1.parents("L").unwrap(), vec!["R", "S"]);
        assert!(g1.parents("H").unwrap().is_empty());
        let g2 = auction_diagram();
        let pz: NodeSet = g2.parents("Z").unwrap().into_iter().map(String::from).collect();
        assert_eq!(pz, set(&["Y_1", "Y_2", "X_0"]));
        assert!(g1.parents("Q").is_err());
    }

    #[test]
    fn ancestors_examples() {
        let g1 = latency_diagram();
        assert_eq!(g1.ancestors(&["L"]).unwrap(), set(&["H", "R", "S", "L"]));
        assert_eq!(g1.ancestors(&["H"]).unwrap(), set(&["H"]));
        let g2 = auction_diagram();
        assert_eq!(g2.ancestors(&["Z"]).unwrap().len(), 12);
    }

    #[test]
    fn d_separation_examples() {
        let g1 = latency_diagram();
        assert!(g1.d_separated(&["R"], &["S"], &["H"]).unwrap());
        assert!(!g1.d_separated(&["R"], &["S"], &["H", "L"]).unwrap());
        assert!(!g1.d_separated(&["R"], &["S"], &[]).unwrap());
        let g2 = auction_diagram();
        assert!(g2.d_separated(&["Z"], &["C"], &["X_0", "X_1", "X_2"]).unwrap());
        assert!(g1.d_separated(&["R"], &["R"], &[]).is_err());
    }

    #[test]
    fn backdoor_examples() {
        let g1 = latency_diagram();
        assert!(g1.backdoor_admissible("S", "L", &["R"]).unwrap());
        assert!(!g1.backdoor_admissible("S", "L", &[]).unwrap());
        assert!(g1.backdoor_admissible("S", "L", &["H"]).unwrap());
        assert_eq!(g1.find_backdoor_set("S", "L", &["R"]).unwrap(), Some(set(&["R"])));
        assert_eq!(g1.find_backdoor_set("S", "L", &[]).unwrap(), None);
        // H has no back-door paths.
        assert_eq!(g1.find_backdoor_set("H", "L", &["R", "S"]).unwrap(), Some(NodeSet::new()));
        // Both {H} and {R} work; H sorts first at size one.
        assert_eq!(g1.find_backdoor_set("S", "L", &["R", "H"]).unwrap(), Some(set(&["H"])));
    }

    #[test]
    fn descendant_in_adjustment_set_is_inadmissible() {
        let g = Dag::new(["X", "M", "Y"], [("X", "M"), ("M", "Y")]).unwrap();
        assert!(!g.backdoor_admissible("X", "Y", &["M"]).unwrap());
        assert!(g.backdoor_admissible("X", "Y", &[]).unwrap());
    }

    #[test]
    fn topological_order_is_lexicographic() {
        let g = Dag::new(["b", "a", "c"], [("b", "c")]).unwrap();
        assert_eq!(g.topological_order(), vec!["a", "b", "c"]);
    }

    #[test]
    fn combinations() {
        let mut out = Vec::new();
        for_each_combination(4, 2, |c| out.push(c.to_vec()));
        assert_eq!(out.len(), 6);
        assert_eq!(out[0], vec![0, 1]);
        assert_eq!(out[5], vec![2, 3]);
        let mut n = 0;
        for_each_combination(3, 0, |_| n += 1);
        assert_eq!(n, 1);
    }
}
