//! Directed acyclic causal structures.
//!
//! A [`CausalStructure`] is an immutable DAG over named variables. The
//! canonical index of a variable is its position in the declaration order,
//! and every ordered view of parents (and therefore every mechanism's input
//! port order) follows that index.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// A finite directed acyclic graph of variables and direct-cause arrows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalStructure {
    names: Vec<String>,
    arrows: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// A duplicate-free, sorted set of vertex indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariableSubset(Vec<usize>);

impl VariableSubset {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        VariableSubset(set.into_iter().collect())
    }

    pub fn empty() -> Self {
        VariableSubset(Vec::new())
    }

    pub fn singleton(v: usize) -> Self {
        VariableSubset(vec![v])
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_disjoint(&self, other: &VariableSubset) -> bool {
        self.iter().all(|v| !other.contains(v))
    }

    pub fn intersection(&self, other: &VariableSubset) -> VariableSubset {
        VariableSubset(self.iter().filter(|v| other.contains(*v)).collect())
    }

    pub fn union(&self, other: &VariableSubset) -> VariableSubset {
        VariableSubset::new(self.iter().chain(other.iter()))
    }
}

impl FromIterator<usize> for VariableSubset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VariableSubset::new(iter)
    }
}

/// The subgraph `G_{w -> w'}` used to build the causal conditional `[w'||w]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningSubgraph {
    /// Arrows of the subgraph, sorted.
    pub arrows: Vec<(usize, usize)>,
    /// Vertices of the subgraph: arrow endpoints together with `w` and `w'`.
    pub vertices: VariableSubset,
    /// Number of subgraph arrows leaving each vertex, indexed like `vertices`.
    out_degree: BTreeMap<usize, usize>,
}

impl ReasoningSubgraph {
    /// `k_v`: the number of subgraph arrows with source `v` (0 outside the subgraph).
    pub fn out_degree(&self, v: usize) -> usize {
        self.out_degree.get(&v).copied().unwrap_or(0)
    }

    /// Children of `v` inside the subgraph, ascending.
    pub fn children(&self, v: usize) -> Vec<usize> {
        self.arrows.iter().filter(|(s, _)| *s == v).map(|&(_, t)| t).collect()
    }

    /// Parents of `v` inside the subgraph, ascending.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self.arrows.iter().filter(|(_, t)| *t == v).map(|&(s, _)| s).collect();
        p.sort_unstable();
        p
    }
}

impl CausalStructure {
    /// Builds a structure from vertex names and name-pair arrows.
    pub fn build<S: AsRef<str>>(names: &[S], arrows: &[(S, S)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(name.clone()));
            }
        }
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()));
        let mut pairs = Vec::with_capacity(arrows.len());
        for (s, t) in arrows {
            pairs.push((lookup(s.as_ref())?, lookup(t.as_ref())?));
        }
        Self::from_indices(names, &pairs)
    }

    /// Builds a structure from vertex names and index-pair arrows.
    pub fn from_indices(names: Vec<String>, arrows: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        let mut seen = BTreeSet::new();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateVertex(name.clone()));
            }
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(s, t) in arrows {
            for idx in [s, t] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            if s == t {
                return Err(Error::SelfLoop(names[s].clone()));
            }
            if !seen.insert((s, t)) {
                return Err(Error::DuplicateArrow(names[s].clone(), names[t].clone()));
            }
            parents[t].push(s);
            children[s].push(t);
        }
        parents.iter_mut().for_each(|p| p.sort_unstable());
        children.iter_mut().for_each(|c| c.sort_unstable());
        let structure = CausalStructure { names, arrows: seen.into_iter().collect(), parents, children };
        if let Some(cycle) = structure.find_cycle() {
            return Err(Error::CycleDetected(cycle.into_iter().map(|v| structure.names[v].clone()).collect()));
        }
        Ok(structure)
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();
        fn dfs(g: &CausalStructure, v: usize, state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
            state[v] = 1;
            stack.push(v);
            for &c in &g.children[v] {
                if state[c] == 1 {
                    let start = stack.iter().position(|&x| x == c).unwrap();
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(c);
                    return Some(cycle);
                }
                if state[c] == 0 {
                    if let Some(cycle) = dfs(g, c, state, stack) {
                        return Some(cycle);
                    }
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }
        (0..n).find_map(|v| if state[v] == 0 { dfs(self, v, &mut state, &mut stack) } else { None })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// All arrows as sorted `(source, target)` index pairs.
    pub fn arrows(&self) -> &[(usize, usize)] {
        &self.arrows
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    /// Resolves a list of names into a subset.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<VariableSubset> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect::<Result<Vec<_>>>().map(VariableSubset::new)
    }

    pub fn all_vertices(&self) -> VariableSubset {
        VariableSubset::new(0..self.len())
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: v, len: self.len() })
        }
    }

    fn check_subset(&self, s: &VariableSubset) -> Result<()> {
        s.iter().try_for_each(|v| self.check(v))
    }

    /// Parents of `v` in ascending canonical order.
    pub fn parents(&self, v: usize) -> Result<&[usize]> {
        self.check(v)?;
        Ok(&self.parents[v])
    }

    /// Children of `v` in ascending canonical order.
    pub fn children(&self, v: usize) -> Result<&[usize]> {
        self.check(v)?;
        Ok(&self.children[v])
    }

    /// Topological order, always choosing the smallest available index next.
    pub fn ancestral_ordering(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..self.len()).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), self.len());
        order
    }

    /// Vertices reachable from `v` by one or more arrows.
    pub fn descendants(&self, v: usize) -> Result<VariableSubset> {
        self.check(v)?;
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.children[v].iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            if seen.insert(u) {
                queue.extend(self.children[u].iter().copied());
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Vertices with a directed path of one or more arrows into some member of `set`.
    pub fn ancestors_of_set(&self, set: &VariableSubset) -> Result<VariableSubset> {
        self.check_subset(set)?;
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = set.iter().flat_map(|v| self.parents[v].iter().copied()).collect();
        while let Some(u) = queue.pop_front() {
            if seen.insert(u) {
                queue.extend(self.parents[u].iter().copied());
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Strict ancestry: true iff a directed path of at least one arrow runs from `u` to `v`.
    pub fn is_ancestor(&self, u: usize, v: usize) -> Result<bool> {
        self.check(v)?;
        Ok(self.descendants(u)?.contains(v))
    }

    /// Whether `s` d-separates `u` from `t`, by reachability over (vertex, direction) states.
    pub fn d_separated(&self, u: &VariableSubset, t: &VariableSubset, s: &VariableSubset) -> Result<bool> {
        for set in [u, t, s] {
            self.check_subset(set)?;
        }
        if !u.is_disjoint(t) || !u.is_disjoint(s) || !t.is_disjoint(s) {
            return Err(Error::SubsetsNotDisjoint);
        }
        // Vertices that are in S or have a descendant in S; colliders here are open.
        let opens_collider = s.union(&self.ancestors_of_set(s)?);

        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
        enum Dir {
            FromChild,
            FromParent,
        }
        let mut visited = BTreeSet::new();
        let mut queue: VecDeque<(usize, Dir)> = u.iter().map(|x| (x, Dir::FromChild)).collect();
        while let Some((y, dir)) = queue.pop_front() {
            if !visited.insert((y, dir)) {
                continue;
            }
            let observed = s.contains(y);
            if !observed && t.contains(y) {
                return Ok(false);
            }
            match dir {
                Dir::FromChild if !observed => {
                    queue.extend(self.parents[y].iter().map(|&p| (p, Dir::FromChild)));
                    queue.extend(self.children[y].iter().map(|&c| (c, Dir::FromParent)));
                }
                Dir::FromChild => {}
                Dir::FromParent => {
                    if !observed {
                        queue.extend(self.children[y].iter().map(|&c| (c, Dir::FromParent)));
                    }
                    if opens_collider.contains(y) {
                        queue.extend(self.parents[y].iter().map(|&p| (p, Dir::FromChild)));
                    }
                }
            }
        }
        Ok(true)
    }

    /// Finds an undirected simple path from `u` to `t` that `s` does not block,
    /// by exhaustive enumeration. Exponential in the worst case; intended for
    /// small graphs and for reporting a witness path.
    pub fn find_active_path(
        &self,
        u: &VariableSubset,
        t: &VariableSubset,
        s: &VariableSubset,
    ) -> Result<Option<Vec<usize>>> {
        for set in [u, t, s] {
            self.check_subset(set)?;
        }
        if !u.is_disjoint(t) || !u.is_disjoint(s) || !t.is_disjoint(s) {
            return Err(Error::SubsetsNotDisjoint);
        }
        let neighbours: Vec<Vec<usize>> = (0..self.len())
            .map(|v| {
                let mut n: Vec<usize> = self.parents[v].iter().chain(&self.children[v]).copied().collect();
                n.sort_unstable();
                n
            })
            .collect();
        let descendants: Vec<VariableSubset> = (0..self.len()).map(|v| self.descendants(v).unwrap()).collect();
        let has_arrow = |a: usize, b: usize| self.children[a].binary_search(&b).is_ok();
        let blocked_at = |prev: usize, mid: usize, next: usize| {
            if has_arrow(prev, mid) && has_arrow(next, mid) {
                !s.contains(mid) && !descendants[mid].iter().any(|d| s.contains(d))
            } else {
                s.contains(mid)
            }
        };

        fn extend(
            path: &mut Vec<usize>,
            on_path: &mut [bool],
            neighbours: &[Vec<usize>],
            t: &VariableSubset,
            blocked_at: &dyn Fn(usize, usize, usize) -> bool,
        ) -> bool {
            let last = *path.last().unwrap();
            for &next in &neighbours[last] {
                if on_path[next] {
                    continue;
                }
                if path.len() >= 2 && blocked_at(path[path.len() - 2], last, next) {
                    continue;
                }
                path.push(next);
                if t.contains(next) {
                    return true;
                }
                on_path[next] = true;
                if extend(path, on_path, neighbours, t, blocked_at) {
                    return true;
                }
                on_path[next] = false;
                path.pop();
            }
            false
        }

        for start in u.iter() {
            let mut path = vec![start];
            let mut on_path = vec![false; self.len()];
            on_path[start] = true;
            if extend(&mut path, &mut on_path, &neighbours, t, &blocked_at) {
                return Ok(Some(path));
            }
        }
        Ok(None)
    }

    /// The smallest subgraph containing `w`, `w'` and every path ending in `w'`
    /// that does not pass through `w`.
    pub fn reasoning_subgraph(&self, w: &VariableSubset, w_prime: &VariableSubset) -> Result<ReasoningSubgraph> {
        self.check_subset(w)?;
        self.check_subset(w_prime)?;
        let overlap = w.intersection(w_prime);
        if !overlap.is_empty() {
            return Err(Error::OverlappingSubsets(overlap.iter().map(|v| self.names[v].clone()).collect()));
        }
        // reaches[v]: v is in w', or v is outside w and has a child that reaches.
        let mut reaches = vec![false; self.len()];
        for &v in self.ancestral_ordering().iter().rev() {
            reaches[v] = w_prime.contains(v) || (!w.contains(v) && self.children[v].iter().any(|&c| reaches[c]));
        }
        let arrows: Vec<(usize, usize)> = self.arrows.iter().copied().filter(|&(_, t)| reaches[t]).collect();
        let vertices = VariableSubset::new(w.iter().chain(w_prime.iter()).chain(arrows.iter().flat_map(|&(s, t)| [s, t])));
        let mut out_degree: BTreeMap<usize, usize> = vertices.iter().map(|v| (v, 0)).collect();
        for &(s, _) in &arrows {
            *out_degree.get_mut(&s).unwrap() += 1;
        }
        Ok(ReasoningSubgraph { arrows, vertices, out_degree })
    }

    /// Formats a subset as space-separated names.
    pub fn format_subset(&self, s: &VariableSubset) -> String {
        s.iter().map(|v| self.names[v].as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for CausalStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(", "))?;
        for &(s, t) in &self.arrows {
            write!(f, " {}->{}", self.names[s], self.names[t])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn food() -> CausalStructure {
        CausalStructure::build(&["A", "B", "C"], &[("A", "C"), ("B", "C")]).unwrap()
    }

    pub(crate) fn six() -> CausalStructure {
        CausalStructure::build(
            &["A", "B", "C", "D", "E", "F"],
            &[("A", "B"), ("A", "C"), ("B", "C"), ("C", "D"), ("C", "E"), ("D", "E"), ("E", "F")],
        )
        .unwrap()
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            CausalStructure::build(&["X", "Y"], &[("X", "Y"), ("Y", "X")]).unwrap_err(),
            Error::CycleDetected(vec!["X".into(), "Y".into(), "X".into()])
        );
        assert_eq!(CausalStructure::build(&["X", "X"], &[]).unwrap_err(), Error::DuplicateVertex("X".into()));
        assert_eq!(CausalStructure::build(&["X"], &[("X", "X")]).unwrap_err(), Error::SelfLoop("X".into()));
        assert_eq!(CausalStructure::build(&["X"], &[("X", "Q")]).unwrap_err(), Error::UnknownVertex("Q".into()));
        assert_eq!(
            CausalStructure::build(&["X", "Y"], &[("X", "Y"), ("X", "Y")]).unwrap_err(),
            Error::DuplicateArrow("X".into(), "Y".into())
        );
        let single = CausalStructure::build(&["X"], &[] as &[(&str, &str)]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.arrows().is_empty());
    }

    #[test]
    fn parents_in_canonical_order() {
        let g = food();
        assert_eq!(g.parents(2).unwrap(), &[0, 1]);
        assert_eq!(g.parents(0).unwrap(), &[] as &[usize]);
        assert_eq!(six().parents(4).unwrap(), &[2, 3]);
        assert_eq!(g.parents(7).unwrap_err(), Error::IndexOutOfRange { index: 7, len: 3 });
    }

    #[test]
    fn ancestral_orderings() {
        assert_eq!(food().ancestral_ordering(), vec![0, 1, 2]);
        let chain = CausalStructure::build(&["A", "B", "C"], &[("C", "B"), ("B", "A")]).unwrap();
        assert_eq!(chain.ancestral_ordering(), vec![2, 1, 0]);
        let g = six();
        let order = g.ancestral_ordering();
        assert_eq!(order, vec![0, 1, 2, 3, 4, 5]);
        let pos: Vec<usize> = (0..6).map(|v| order.iter().position(|&x| x == v).unwrap()).collect();
        assert!(g.arrows().iter().all(|&(s, t)| pos[s] < pos[t]));
    }

    #[test]
    fn ancestry_is_strict() {
        let g = six();
        assert!(g.is_ancestor(1, 4).unwrap());
        assert!(!g.is_ancestor(3, 3).unwrap());
        assert!(!food().is_ancestor(0, 1).unwrap());
        assert!(!g.is_ancestor(5, 0).unwrap());
    }

    #[test]
    fn d_separation_examples() {
        let g = food();
        let a = VariableSubset::singleton(0);
        let b = VariableSubset::singleton(1);
        let c = VariableSubset::singleton(2);
        assert!(g.d_separated(&a, &b, &VariableSubset::empty()).unwrap());
        assert!(!g.d_separated(&a, &b, &c).unwrap());
        assert_eq!(g.find_active_path(&a, &b, &c).unwrap(), Some(vec![0, 2, 1]));

        let chain = CausalStructure::build(&["X", "Y", "Z"], &[("X", "Y"), ("Y", "Z")]).unwrap();
        let (x, y, z) = (VariableSubset::singleton(0), VariableSubset::singleton(1), VariableSubset::singleton(2));
        assert!(chain.d_separated(&x, &z, &y).unwrap());
        assert!(!chain.d_separated(&x, &z, &VariableSubset::empty()).unwrap());
        assert_eq!(chain.d_separated(&x, &x, &y).unwrap_err(), Error::SubsetsNotDisjoint);
    }

    #[test]
    fn collider_opened_by_descendant() {
        let g = CausalStructure::build(&["A", "B", "C", "D"], &[("A", "C"), ("B", "C"), ("C", "D")]).unwrap();
        let (a, b, d) = (VariableSubset::singleton(0), VariableSubset::singleton(1), VariableSubset::singleton(3));
        assert!(!g.d_separated(&a, &b, &d).unwrap());
        assert!(g.find_active_path(&a, &b, &d).unwrap().is_some());
    }

    #[test]
    fn reasoning_subgraph_example() {
        let g = six();
        let w = g.subset(&["B"]).unwrap();
        let wp = g.subset(&["D", "E"]).unwrap();
        let sub = g.reasoning_subgraph(&w, &wp).unwrap();
        assert_eq!(sub.vertices, g.subset(&["A", "B", "C", "D", "E"]).unwrap());
        assert_eq!(sub.arrows, vec![(0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]);
        let k: Vec<usize> = (0..5).map(|v| sub.out_degree(v)).collect();
        assert_eq!(k, vec![1, 1, 2, 1, 0]);
        for v in sub.vertices.iter().filter(|&v| !w.contains(v)) {
            assert_eq!(sub.parents(v), g.parents(v).unwrap());
        }
    }

    #[test]
    fn reasoning_subgraph_degenerate_cases() {
        let g = six();
        let w = g.subset(&["A", "C"]).unwrap();
        let sub = g.reasoning_subgraph(&w, &VariableSubset::empty()).unwrap();
        assert!(sub.arrows.is_empty());
        assert_eq!(sub.vertices, w);
        assert!(sub.vertices.iter().all(|v| sub.out_degree(v) == 0));

        let full = g.reasoning_subgraph(&VariableSubset::empty(), &g.all_vertices()).unwrap();
        assert_eq!(full.arrows, g.arrows());
        for v in 0..g.len() {
            assert_eq!(full.out_degree(v), g.children(v).unwrap().len());
        }

        let err = g.reasoning_subgraph(&w, &g.subset(&["C"]).unwrap()).unwrap_err();
        assert_eq!(err, Error::OverlappingSubsets(vec!["C".into()]));
    }
}
