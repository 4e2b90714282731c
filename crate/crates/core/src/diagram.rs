//! Morphisms of the causal theory as open, acyclic port graphs.
//!
//! Objects of the theory are multisets of variables, so a [`Diagram`] keeps
//! its boundary as a label list sorted by variable index (ties in slot
//! creation order). There is no swap generator; wires are matched by label.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::structure::{CausalStructure, VariableSubset};

/// An object of the causal theory: a multiplicity for each variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TheoryObject(BTreeMap<usize, usize>);

impl TheoryObject {
    /// The monoidal unit.
    pub fn unit() -> Self {
        TheoryObject(BTreeMap::new())
    }

    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        let mut m = BTreeMap::new();
        for v in labels {
            *m.entry(v).or_insert(0) += 1;
        }
        TheoryObject(m)
    }

    pub fn atom(v: usize) -> Self {
        Self::from_labels([v])
    }

    pub fn multiplicity(&self, v: usize) -> usize {
        self.0.get(&v).copied().unwrap_or(0)
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    /// Labels with repetition, ascending.
    pub fn labels(&self) -> Vec<usize> {
        self.0.iter().flat_map(|(&v, &n)| std::iter::repeat_n(v, n)).collect()
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn display(&self, g: &CausalStructure) -> String {
        if self.is_unit() {
            return "∅".to_string();
        }
        self.labels().iter().map(|&v| g.name(v)).collect::<Vec<_>>().join(" ")
    }
}

impl From<&VariableSubset> for TheoryObject {
    fn from(s: &VariableSubset) -> Self {
        TheoryObject::from_labels(s.iter())
    }
}

impl fmt::Display for TheoryObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.labels().iter().map(|v| format!("#{v}")).collect();
        if labels.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "{}", labels.join(" "))
        }
    }
}

/// Generator kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoxKind {
    Mechanism(usize),
    Copy(usize),
    Discard(usize),
}

impl BoxKind {
    pub fn variable(self) -> usize {
        match self {
            BoxKind::Mechanism(v) | BoxKind::Copy(v) | BoxKind::Discard(v) => v,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            BoxKind::Mechanism(_) => "mechanism",
            BoxKind::Copy(_) => "copy",
            BoxKind::Discard(_) => "discard",
        }
    }
}

/// A generator instance with its port types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramBox {
    pub kind: BoxKind,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl DiagramBox {
    fn new(kind: BoxKind, inputs: Vec<usize>) -> Self {
        let outputs = match kind {
            BoxKind::Mechanism(v) => vec![v],
            BoxKind::Copy(v) => vec![v, v],
            BoxKind::Discard(_) => vec![],
        };
        DiagramBox { kind, inputs, outputs }
    }
}

/// Where a wire starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    /// Boundary input slot.
    Input(usize),
    Port { node: usize, port: usize },
}

/// Where a wire ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    /// Boundary output slot.
    Output(usize),
    Port { node: usize, port: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wire {
    pub label: usize,
    pub source: Source,
    pub target: Target,
}

/// A morphism of the causal theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    boxes: Vec<DiagramBox>,
    wires: Vec<Wire>,
    dom: Vec<usize>,
    cod: Vec<usize>,
}

/// Permutation that stably sorts `labels`; entry `i` is the old position now at `i`.
fn stable_sort_permutation(labels: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| labels[i]);
    idx
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

impl Diagram {
    pub fn identity(w: &TheoryObject) -> Self {
        let labels = w.labels();
        let wires = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| Wire { label, source: Source::Input(i), target: Target::Output(i) })
            .collect();
        Diagram { boxes: Vec::new(), wires, dom: labels.clone(), cod: labels }
    }

    fn single(b: DiagramBox) -> Self {
        let mut wires = Vec::new();
        for (i, &label) in b.inputs.iter().enumerate() {
            wires.push(Wire { label, source: Source::Input(i), target: Target::Port { node: 0, port: i } });
        }
        for (j, &label) in b.outputs.iter().enumerate() {
            wires.push(Wire { label, source: Source::Port { node: 0, port: j }, target: Target::Output(j) });
        }
        let d = Diagram { dom: b.inputs.clone(), cod: b.outputs.clone(), boxes: vec![b], wires };
        debug_assert!(d.check().is_ok());
        d
    }

    /// The causal mechanism `[v|pa(v)]`, inputs in canonical parent order.
    pub fn mechanism(g: &CausalStructure, v: usize) -> Result<Self> {
        let parents = g.parents(v)?.to_vec();
        Ok(Self::single(DiagramBox::new(BoxKind::Mechanism(v), parents)))
    }

    pub fn copy(v: usize) -> Self {
        Self::single(DiagramBox::new(BoxKind::Copy(v), vec![v]))
    }

    pub fn discard(v: usize) -> Self {
        Self::single(DiagramBox::new(BoxKind::Discard(v), vec![v]))
    }

    pub fn boxes(&self) -> &[DiagramBox] {
        &self.boxes
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    /// Labels of the boundary input slots, ascending.
    pub fn dom_labels(&self) -> &[usize] {
        &self.dom
    }

    /// Labels of the boundary output slots, ascending.
    pub fn cod_labels(&self) -> &[usize] {
        &self.cod
    }

    pub fn dom(&self) -> TheoryObject {
        TheoryObject::from_labels(self.dom.iter().copied())
    }

    pub fn cod(&self) -> TheoryObject {
        TheoryObject::from_labels(self.cod.iter().copied())
    }

    /// Number of boxes of each kind.
    pub fn census(&self) -> BTreeMap<BoxKind, usize> {
        let mut m = BTreeMap::new();
        for b in &self.boxes {
            *m.entry(b.kind).or_insert(0) += 1;
        }
        m
    }

    pub fn wire_into(&self, target: Target) -> Option<&Wire> {
        self.wires.iter().find(|w| w.target == target)
    }

    pub fn wire_from(&self, source: Source) -> Option<&Wire> {
        self.wires.iter().find(|w| w.source == source)
    }

    /// Sequential composition: `f` then `g`.
    pub fn seq(f: &Diagram, g: &Diagram) -> Result<Diagram> {
        if f.cod != g.dom {
            return Err(Error::CodomainMismatch { codomain: f.cod().to_string(), domain: g.dom().to_string() });
        }
        let offset = f.boxes.len();
        let shift_source = |s: Source| match s {
            Source::Port { node, port } => Source::Port { node: node + offset, port },
            s => s,
        };
        let shift_target = |t: Target| match t {
            Target::Port { node, port } => Target::Port { node: node + offset, port },
            t => t,
        };
        let mut wires: Vec<Wire> = f.wires.iter().filter(|w| !matches!(w.target, Target::Output(_))).copied().collect();
        for j in 0..f.cod.len() {
            let fw = f.wire_into(Target::Output(j)).expect("validated diagram");
            let gw = g.wire_from(Source::Input(j)).expect("validated diagram");
            wires.push(Wire { label: fw.label, source: fw.source, target: shift_target(gw.target) });
        }
        wires.extend(
            g.wires
                .iter()
                .filter(|w| !matches!(w.source, Source::Input(_)))
                .map(|w| Wire { label: w.label, source: shift_source(w.source), target: shift_target(w.target) }),
        );
        let mut boxes = f.boxes.clone();
        boxes.extend(g.boxes.iter().cloned());
        let d = Diagram { boxes, wires, dom: f.dom.clone(), cod: g.cod.clone() };
        d.check()?;
        Ok(d)
    }

    /// Parallel composition. Boundary slots are re-sorted by label, `f`'s first within a label.
    pub fn par(f: &Diagram, g: &Diagram) -> Diagram {
        let (nb, ni, no) = (f.boxes.len(), f.dom.len(), f.cod.len());
        let dom_cat: Vec<usize> = f.dom.iter().chain(&g.dom).copied().collect();
        let cod_cat: Vec<usize> = f.cod.iter().chain(&g.cod).copied().collect();
        let dom_perm = stable_sort_permutation(&dom_cat);
        let cod_perm = stable_sort_permutation(&cod_cat);
        let dom_inv = inverse(&dom_perm);
        let cod_inv = inverse(&cod_perm);

        let mut wires = f.wires.clone();
        wires.extend(g.wires.iter().map(|w| Wire {
            label: w.label,
            source: match w.source {
                Source::Input(i) => Source::Input(i + ni),
                Source::Port { node, port } => Source::Port { node: node + nb, port },
            },
            target: match w.target {
                Target::Output(j) => Target::Output(j + no),
                Target::Port { node, port } => Target::Port { node: node + nb, port },
            },
        }));
        for w in &mut wires {
            if let Source::Input(i) = w.source {
                w.source = Source::Input(dom_inv[i]);
            }
            if let Target::Output(j) = w.target {
                w.target = Target::Output(cod_inv[j]);
            }
        }
        let mut boxes = f.boxes.clone();
        boxes.extend(g.boxes.iter().cloned());
        let d = Diagram {
            boxes,
            wires,
            dom: dom_perm.iter().map(|&i| dom_cat[i]).collect(),
            cod: cod_perm.iter().map(|&i| cod_cat[i]).collect(),
        };
        debug_assert!(d.check().is_ok());
        d
    }

    /// Checks every structural invariant: port typing, one producer and one
    /// consumer per wire, sorted boundary, acyclicity.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedDiagram(msg));
        if self.dom.windows(2).any(|p| p[0] > p[1]) || self.cod.windows(2).any(|p| p[0] > p[1]) {
            return bad("boundary labels are not sorted".into());
        }
        let mut in_used = vec![false; self.dom.len()];
        let mut out_used = vec![false; self.cod.len()];
        let mut port_in: Vec<Vec<bool>> = self.boxes.iter().map(|b| vec![false; b.inputs.len()]).collect();
        let mut port_out: Vec<Vec<bool>> = self.boxes.iter().map(|b| vec![false; b.outputs.len()]).collect();
        for b in &self.boxes {
            let expected = DiagramBox::new(b.kind, b.inputs.clone());
            if expected.outputs != b.outputs {
                return bad(format!("box {:?} has wrong output types", b.kind));
            }
            match b.kind {
                BoxKind::Copy(v) | BoxKind::Discard(v) if b.inputs != [v] => {
                    return bad(format!("box {:?} has wrong input types", b.kind))
                }
                _ => {}
            }
        }
        for (k, w) in self.wires.iter().enumerate() {
            let src_label = match w.source {
                Source::Input(i) => {
                    if i >= self.dom.len() || std::mem::replace(&mut in_used[i], true) {
                        return bad(format!("wire {k}: input slot {i} invalid or reused"));
                    }
                    self.dom[i]
                }
                Source::Port { node, port } => {
                    let Some(b) = self.boxes.get(node).filter(|b| port < b.outputs.len()) else {
                        return bad(format!("wire {k}: no output port {port} on box {node}"));
                    };
                    if std::mem::replace(&mut port_out[node][port], true) {
                        return bad(format!("wire {k}: output port reused"));
                    }
                    b.outputs[port]
                }
            };
            let dst_label = match w.target {
                Target::Output(j) => {
                    if j >= self.cod.len() || std::mem::replace(&mut out_used[j], true) {
                        return bad(format!("wire {k}: output slot {j} invalid or reused"));
                    }
                    self.cod[j]
                }
                Target::Port { node, port } => {
                    let Some(b) = self.boxes.get(node).filter(|b| port < b.inputs.len()) else {
                        return bad(format!("wire {k}: no input port {port} on box {node}"));
                    };
                    if std::mem::replace(&mut port_in[node][port], true) {
                        return bad(format!("wire {k}: input port reused"));
                    }
                    b.inputs[port]
                }
            };
            if src_label != w.label || dst_label != w.label {
                return bad(format!("wire {k}: label mismatch"));
            }
        }
        if in_used.iter().chain(&out_used).chain(port_in.iter().flatten()).chain(port_out.iter().flatten()).any(|u| !u)
        {
            return bad("dangling port or boundary slot".into());
        }
        if self.box_layers().is_none() {
            return bad("box dependency graph has a cycle".into());
        }
        Ok(())
    }

    /// Topological depth of every box (0 = fed only by the boundary), or
    /// `None` when the box graph is cyclic.
    pub fn box_layers(&self) -> Option<Vec<usize>> {
        let n = self.boxes.len();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for w in &self.wires {
            if let (Source::Port { node: a, .. }, Target::Port { node: b, .. }) = (w.source, w.target) {
                preds[b].push(a);
                succs[a].push(b);
                indegree[b] += 1;
            }
        }
        let mut layer = vec![0usize; n];
        let mut ready: Vec<usize> = (0..n).filter(|&b| indegree[b] == 0).collect();
        let mut done = 0;
        while let Some(b) = ready.pop() {
            done += 1;
            layer[b] = preds[b].iter().map(|&p| layer[p] + 1).max().unwrap_or(0);
            for &s in &succs[b] {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.push(s);
                }
            }
        }
        (done == n).then_some(layer)
    }

    /// True iff some boundary input is connected to some boundary output
    /// through wires and boxes, ignoring direction.
    pub fn is_inferential(&self) -> bool {
        // Elements: input slots, output slots, boxes.
        let (ni, no) = (self.dom.len(), self.cod.len());
        let mut parent: Vec<usize> = (0..ni + no + self.boxes.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        for w in &self.wires {
            let a = match w.source {
                Source::Input(i) => i,
                Source::Port { node, .. } => ni + no + node,
            };
            let b = match w.target {
                Target::Output(j) => ni + j,
                Target::Port { node, .. } => ni + no + node,
            };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let inputs: Vec<usize> = (0..ni).map(|i| find(&mut parent, i)).collect();
        (0..no).any(|j| {
            let r = find(&mut parent, ni + j);
            inputs.contains(&r)
        })
    }

    /// Equality modulo the comonoid relations (counitality, coassociativity,
    /// cocommutativity) and reordering of same-label boundary slots.
    pub fn equivalent(&self, other: &Diagram) -> bool {
        if self.dom != other.dom || self.cod != other.cod {
            return false;
        }
        NormalForm::of(self).isomorphic(&NormalForm::of(other))
    }

    /// The causal conditional `[w'||w]`.
    pub fn causal_conditional(g: &CausalStructure, w: &VariableSubset, w_prime: &VariableSubset) -> Result<Diagram> {
        let sub = g.reasoning_subgraph(w, w_prime)?;
        let dom: Vec<usize> = w.iter().collect();
        let cod: Vec<usize> = w_prime.iter().collect();
        let mut boxes: Vec<DiagramBox> = Vec::new();
        let mut wires: Vec<Wire> = Vec::new();

        let mut mech_node: BTreeMap<usize, usize> = BTreeMap::new();
        for v in g.ancestral_ordering().into_iter().filter(|&v| sub.vertices.contains(v) && !w.contains(v)) {
            mech_node.insert(v, boxes.len());
            boxes.push(DiagramBox::new(BoxKind::Mechanism(v), g.parents(v)?.to_vec()));
        }

        for v in g.ancestral_ordering().into_iter().filter(|&v| sub.vertices.contains(v)) {
            let source = match dom.iter().position(|&x| x == v) {
                Some(slot) => Source::Input(slot),
                None => Source::Port { node: mech_node[&v], port: 0 },
            };
            let mut consumers: Vec<Target> = sub
                .children(v)
                .into_iter()
                .map(|c| {
                    let port = g.parents(c).unwrap().iter().position(|&p| p == v).unwrap();
                    Target::Port { node: mech_node[&c], port }
                })
                .collect();
            if let Some(slot) = cod.iter().position(|&x| x == v) {
                consumers.push(Target::Output(slot));
            }
            fan_out(&mut boxes, &mut wires, v, source, &consumers);
        }

        let d = Diagram { boxes, wires, dom, cod };
        d.check()?;
        Ok(d)
    }

    /// The prior `[w]`: the causal conditional with empty domain.
    pub fn prior(g: &CausalStructure, w: &VariableSubset) -> Result<Diagram> {
        Self::causal_conditional(g, &VariableSubset::empty(), w)
    }
}

/// Routes `source` to every consumer through a chain of copies, or into a
/// discard when there are no consumers.
fn fan_out(boxes: &mut Vec<DiagramBox>, wires: &mut Vec<Wire>, v: usize, source: Source, consumers: &[Target]) {
    match consumers {
        [] => {
            let node = boxes.len();
            boxes.push(DiagramBox::new(BoxKind::Discard(v), vec![v]));
            wires.push(Wire { label: v, source, target: Target::Port { node, port: 0 } });
        }
        [only] => wires.push(Wire { label: v, source, target: *only }),
        [first, rest @ ..] => {
            let node = boxes.len();
            boxes.push(DiagramBox::new(BoxKind::Copy(v), vec![v]));
            wires.push(Wire { label: v, source, target: Target::Port { node, port: 0 } });
            wires.push(Wire { label: v, source: Source::Port { node, port: 0 }, target: *first });
            fan_out(boxes, wires, v, Source::Port { node, port: 1 }, rest);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NfKind {
    Mechanism(usize),
    /// Flattened copy tree; arity is the number of references to it.
    Fanout(usize),
    Discard(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NfSource {
    Input(usize),
    Node(usize),
}

#[derive(Debug, Clone)]
struct NfNode {
    kind: NfKind,
    inputs: Vec<NfSource>,
}

/// A diagram with copy chains flattened into fan-outs and counits absorbed.
#[derive(Debug, Clone)]
struct NormalForm {
    dom: Vec<usize>,
    nodes: Vec<NfNode>,
    outputs: Vec<(usize, NfSource)>,
}

impl NormalForm {
    fn of(d: &Diagram) -> NormalForm {
        // Every box has at most one output port except copies, whose two
        // outputs become indistinguishable references to the same fan-out.
        let source_of = |t: Target| -> NfSource {
            match d.wire_into(t).expect("validated diagram").source {
                Source::Input(i) => NfSource::Input(i),
                Source::Port { node, .. } => NfSource::Node(node),
            }
        };
        let mut nodes: Vec<Option<NfNode>> = d
            .boxes
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let kind = match b.kind {
                    BoxKind::Mechanism(v) => NfKind::Mechanism(v),
                    BoxKind::Copy(v) => NfKind::Fanout(v),
                    BoxKind::Discard(v) => NfKind::Discard(v),
                };
                let inputs = (0..b.inputs.len()).map(|p| source_of(Target::Port { node: k, port: p })).collect();
                Some(NfNode { kind, inputs })
            })
            .collect();
        let mut outputs: Vec<(usize, NfSource)> =
            (0..d.cod.len()).map(|j| (d.cod[j], source_of(Target::Output(j)))).collect();

        fn redirect(nodes: &mut [Option<NfNode>], outputs: &mut [(usize, NfSource)], from: NfSource, to: NfSource) {
            for n in nodes.iter_mut().flatten() {
                for s in &mut n.inputs {
                    if *s == from {
                        *s = to;
                    }
                }
            }
            for (_, s) in outputs.iter_mut() {
                if *s == from {
                    *s = to;
                }
            }
        }
        fn references(nodes: &[Option<NfNode>], outputs: &[(usize, NfSource)], k: usize) -> usize {
            let target = NfSource::Node(k);
            nodes.iter().flatten().flat_map(|n| &n.inputs).filter(|&&s| s == target).count()
                + outputs.iter().filter(|(_, s)| *s == target).count()
        }

        loop {
            let mut changed = false;
            for k in 0..nodes.len() {
                let Some(node) = nodes[k].clone() else { continue };
                let feeding_fanout = match node.inputs.first() {
                    Some(&NfSource::Node(p)) => matches!(nodes[p].as_ref().map(|n| n.kind), Some(NfKind::Fanout(_))),
                    _ => false,
                };
                match node.kind {
                    NfKind::Fanout(v) => {
                        let refs = references(&nodes, &outputs, k);
                        if feeding_fanout || refs <= 1 {
                            // Coassociativity merges into the parent fan-out; arity one is the identity.
                            nodes[k] = None;
                            if refs == 0 {
                                nodes[k] = Some(NfNode { kind: NfKind::Discard(v), inputs: node.inputs });
                            } else {
                                redirect(&mut nodes, &mut outputs, NfSource::Node(k), node.inputs[0]);
                            }
                            changed = true;
                        }
                    }
                    NfKind::Discard(_) if feeding_fanout => {
                        // Counitality: a discarded branch of a fan-out disappears.
                        nodes[k] = None;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }

        // Compact node ids.
        let live: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].is_some()).collect();
        let remap: BTreeMap<usize, usize> = live.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let fix = |s: NfSource| match s {
            NfSource::Node(k) => NfSource::Node(remap[&k]),
            s => s,
        };
        let nodes: Vec<NfNode> = live
            .iter()
            .map(|&k| {
                let n = nodes[k].as_ref().unwrap();
                NfNode { kind: n.kind, inputs: n.inputs.iter().map(|&s| fix(s)).collect() }
            })
            .collect();
        let outputs = outputs.into_iter().map(|(l, s)| (l, fix(s))).collect();
        NormalForm { dom: d.dom.clone(), nodes, outputs }
    }

    fn arity(&self, k: usize) -> usize {
        let target = NfSource::Node(k);
        self.nodes.iter().flat_map(|n| &n.inputs).filter(|&&s| s == target).count()
            + self.outputs.iter().filter(|(_, s)| *s == target).count()
    }

    fn topological(&self) -> Vec<usize> {
        let mut order = Vec::new();
        let mut placed = vec![false; self.nodes.len()];
        while order.len() < self.nodes.len() {
            for k in 0..self.nodes.len() {
                if !placed[k]
                    && self.nodes[k].inputs.iter().all(|s| match s {
                        NfSource::Node(p) => placed[*p],
                        NfSource::Input(_) => true,
                    })
                {
                    placed[k] = true;
                    order.push(k);
                }
            }
        }
        order
    }

    fn isomorphic(&self, other: &NormalForm) -> bool {
        if self.nodes.len() != other.nodes.len() || self.dom != other.dom {
            return false;
        }
        let sig = |nf: &NormalForm, k: usize| (nf.nodes[k].kind, nf.nodes[k].inputs.len(), nf.arity(k));
        let mut mine: Vec<_> = (0..self.nodes.len()).map(|k| sig(self, k)).collect();
        let mut theirs: Vec<_> = (0..other.nodes.len()).map(|k| sig(other, k)).collect();
        mine.sort();
        theirs.sort();
        if mine != theirs {
            return false;
        }

        struct Search<'a> {
            a: &'a NormalForm,
            b: &'a NormalForm,
            order: Vec<usize>,
            node_map: Vec<Option<usize>>,
            node_used: Vec<bool>,
            input_map: Vec<Option<usize>>,
            input_used: Vec<bool>,
        }
        impl Search<'_> {
            fn run(&mut self, depth: usize) -> bool {
                if depth == self.order.len() {
                    return self.outputs_match();
                }
                let ka = self.order[depth];
                let na = &self.a.nodes[ka];
                for kb in 0..self.b.nodes.len() {
                    if self.node_used[kb] {
                        continue;
                    }
                    let nb = &self.b.nodes[kb];
                    if nb.kind != na.kind || nb.inputs.len() != na.inputs.len() || self.b.arity(kb) != self.a.arity(ka) {
                        continue;
                    }
                    let mut newly_mapped = Vec::new();
                    let mut ok = true;
                    for (sa, sb) in na.inputs.iter().zip(&nb.inputs) {
                        match (*sa, *sb) {
                            (NfSource::Node(pa), NfSource::Node(pb)) => {
                                if self.node_map[pa] != Some(pb) {
                                    ok = false;
                                }
                            }
                            (NfSource::Input(ia), NfSource::Input(ib)) => match self.input_map[ia] {
                                Some(m) if m == ib => {}
                                Some(_) => ok = false,
                                None => {
                                    if self.input_used[ib] || self.a.dom[ia] != self.b.dom[ib] {
                                        ok = false;
                                    } else {
                                        self.input_map[ia] = Some(ib);
                                        self.input_used[ib] = true;
                                        newly_mapped.push(ia);
                                    }
                                }
                            },
                            _ => ok = false,
                        }
                        if !ok {
                            break;
                        }
                    }
                    if ok {
                        self.node_map[ka] = Some(kb);
                        self.node_used[kb] = true;
                        if self.run(depth + 1) {
                            return true;
                        }
                        self.node_map[ka] = None;
                        self.node_used[kb] = false;
                    }
                    for ia in newly_mapped {
                        let ib = self.input_map[ia].take().unwrap();
                        self.input_used[ib] = false;
                    }
                }
                false
            }

            fn outputs_match(&self) -> bool {
                // Direct input-to-output wires only need to agree per label.
                let key_a = |&(l, s): &(usize, NfSource)| match s {
                    NfSource::Node(k) => (l, Some(self.node_map[k].unwrap())),
                    NfSource::Input(_) => (l, None),
                };
                let key_b = |&(l, s): &(usize, NfSource)| match s {
                    NfSource::Node(k) => (l, Some(k)),
                    NfSource::Input(_) => (l, None),
                };
                let mut oa: Vec<_> = self.a.outputs.iter().map(key_a).collect();
                let mut ob: Vec<_> = self.b.outputs.iter().map(key_b).collect();
                oa.sort();
                ob.sort();
                oa == ob
            }
        }

        let mut search = Search {
            a: self,
            b: other,
            order: self.topological(),
            node_map: vec![None; self.nodes.len()],
            node_used: vec![false; other.nodes.len()],
            input_map: vec![None; self.dom.len()],
            input_used: vec![false; other.dom.len()],
        };
        search.run(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn food() -> CausalStructure {
        CausalStructure::build(&["A", "B", "C"], &[("A", "C"), ("B", "C")]).unwrap()
    }

    fn six() -> CausalStructure {
        CausalStructure::build(
            &["A", "B", "C", "D", "E", "F"],
            &[("A", "B"), ("A", "C"), ("B", "C"), ("C", "D"), ("C", "E"), ("D", "E"), ("E", "F")],
        )
        .unwrap()
    }

    fn mediator() -> CausalStructure {
        CausalStructure::build(&["T", "B", "R"], &[("T", "B"), ("T", "R"), ("B", "R")]).unwrap()
    }

    #[test]
    fn identities() {
        let empty = Diagram::identity(&TheoryObject::unit());
        assert!(empty.boxes().is_empty() && empty.wires().is_empty());
        assert!(empty.dom().is_unit());
        let v = Diagram::identity(&TheoryObject::atom(3));
        assert_eq!(v.wires().len(), 1);
        assert_eq!(v.wires()[0].label, 3);
        let vv = Diagram::identity(&TheoryObject::from_labels([3, 3]));
        assert_eq!(vv.wires().len(), 2);
        assert_eq!(vv.cod().multiplicity(3), 2);
    }

    #[test]
    fn generators() {
        let g = food();
        let c = Diagram::mechanism(&g, 2).unwrap();
        assert_eq!(c.dom(), TheoryObject::from_labels([0, 1]));
        assert_eq!(c.cod(), TheoryObject::atom(2));
        let a = Diagram::mechanism(&g, 0).unwrap();
        assert!(a.dom().is_unit());
        let d = Diagram::discard(1);
        assert!(d.cod().is_unit());
        assert_eq!(d.dom(), TheoryObject::atom(1));
        assert!(Diagram::mechanism(&g, 9).is_err());
    }

    #[test]
    fn seq_and_par_laws() {
        let g = food();
        let c = Diagram::mechanism(&g, 2).unwrap();
        let left = Diagram::seq(&Diagram::identity(&c.dom()), &c).unwrap();
        assert!(left.equivalent(&c));
        assert!(Diagram::par(&c, &Diagram::identity(&TheoryObject::unit())).equivalent(&c));

        let counit = Diagram::seq(
            &Diagram::copy(1),
            &Diagram::par(&Diagram::identity(&TheoryObject::atom(1)), &Diagram::discard(1)),
        )
        .unwrap();
        assert!(counit.equivalent(&Diagram::identity(&TheoryObject::atom(1))));

        let uv = Diagram::par(&Diagram::identity(&TheoryObject::atom(1)), &Diagram::identity(&TheoryObject::atom(0)));
        assert!(uv.equivalent(&Diagram::identity(&TheoryObject::from_labels([0, 1]))));
        assert_eq!(uv.dom_labels(), &[0, 1]);

        let dd = Diagram::par(&Diagram::discard(1), &Diagram::discard(1));
        assert_eq!(dd.dom(), TheoryObject::from_labels([1, 1]));
        assert!(dd.cod().is_unit());

        let err = Diagram::seq(&Diagram::mechanism(&g, 0).unwrap(), &c).unwrap_err();
        assert!(matches!(err, Error::CodomainMismatch { .. }));
    }

    #[test]
    fn copy_is_coassociative_and_cocommutative() {
        let id = Diagram::identity(&TheoryObject::atom(0));
        let left = Diagram::seq(&Diagram::copy(0), &Diagram::par(&Diagram::copy(0), &id)).unwrap();
        let right = Diagram::seq(&Diagram::copy(0), &Diagram::par(&id, &Diagram::copy(0))).unwrap();
        assert!(left.equivalent(&right));
        assert!(!left.equivalent(&Diagram::copy(0)));

        let g = food();
        let a_then_copy = Diagram::seq(&Diagram::mechanism(&g, 0).unwrap(), &Diagram::copy(0)).unwrap();
        let two_a = Diagram::par(&Diagram::mechanism(&g, 0).unwrap(), &Diagram::mechanism(&g, 0).unwrap());
        assert!(!a_then_copy.equivalent(&two_a));
    }

    #[test]
    fn inferential_maps() {
        let g = food();
        assert!(Diagram::identity(&TheoryObject::atom(0)).is_inferential());
        let split = Diagram::par(&Diagram::discard(2), &Diagram::mechanism(&g, 0).unwrap());
        assert_eq!(split.dom(), TheoryObject::atom(2));
        assert_eq!(split.cod(), TheoryObject::atom(0));
        assert!(!split.is_inferential());

        let g6 = six();
        let d = Diagram::causal_conditional(&g6, &g6.subset(&["B"]).unwrap(), &g6.subset(&["D", "E"]).unwrap()).unwrap();
        assert!(d.is_inferential());
    }

    #[test]
    fn conditional_de_given_b() {
        let g = six();
        let d = Diagram::causal_conditional(&g, &g.subset(&["B"]).unwrap(), &g.subset(&["D", "E"]).unwrap()).unwrap();
        let census = d.census();
        let expected: BTreeMap<BoxKind, usize> = [
            (BoxKind::Mechanism(0), 1),
            (BoxKind::Mechanism(2), 1),
            (BoxKind::Mechanism(3), 1),
            (BoxKind::Mechanism(4), 1),
            (BoxKind::Copy(2), 1),
            (BoxKind::Copy(3), 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(census, expected);
        assert_eq!(d.dom(), TheoryObject::atom(1));
        assert_eq!(d.cod(), TheoryObject::from_labels([3, 4]));
        // B enters C|AB directly at port 1.
        let b_wire = d.wire_from(Source::Input(0)).unwrap();
        let Target::Port { node, port } = b_wire.target else { panic!("B should feed a box") };
        assert_eq!(d.boxes()[node].kind, BoxKind::Mechanism(2));
        assert_eq!(port, 1);
    }

    #[test]
    fn mediator_r_given_t() {
        let g = mediator();
        let d = Diagram::causal_conditional(&g, &g.subset(&["T"]).unwrap(), &g.subset(&["R"]).unwrap()).unwrap();
        let census = d.census();
        assert_eq!(census.get(&BoxKind::Copy(0)), Some(&1));
        assert_eq!(census.get(&BoxKind::Mechanism(1)), Some(&1));
        assert_eq!(census.get(&BoxKind::Mechanism(2)), Some(&1));
        assert_eq!(census.len(), 3);

        // Same diagram assembled by hand: copy T, one branch through B|T, both into R|TB.
        let t = TheoryObject::atom(0);
        let by_hand = Diagram::seq(
            &Diagram::seq(&Diagram::copy(0), &Diagram::par(&Diagram::identity(&t), &Diagram::mechanism(&g, 1).unwrap()))
                .unwrap(),
            &Diagram::mechanism(&g, 2).unwrap(),
        )
        .unwrap();
        assert!(d.equivalent(&by_hand));
    }

    #[test]
    fn priors() {
        let g = food();
        let p = Diagram::prior(&g, &g.all_vertices()).unwrap();
        let census = p.census();
        assert_eq!(census.get(&BoxKind::Copy(0)), Some(&1));
        assert_eq!(census.get(&BoxKind::Copy(1)), Some(&1));
        assert_eq!(census.get(&BoxKind::Copy(2)), None);
        assert_eq!(census.iter().filter(|(k, _)| matches!(k, BoxKind::Mechanism(_))).count(), 3);
        assert!(p.dom().is_unit());

        let empty = Diagram::prior(&g, &VariableSubset::empty()).unwrap();
        assert!(empty.boxes().is_empty());

        let root = Diagram::prior(&g, &VariableSubset::singleton(0)).unwrap();
        assert!(root.equivalent(&Diagram::mechanism(&g, 0).unwrap()));

        let iso = CausalStructure::build(&["V"], &[] as &[(&str, &str)]).unwrap();
        let only = Diagram::causal_conditional(&iso, &VariableSubset::empty(), &VariableSubset::singleton(0)).unwrap();
        assert_eq!(only.boxes().len(), 1);
    }

    #[test]
    fn conditional_discards_unused_given() {
        let g = food();
        // [A||B]: B has no path to A, so it is discarded.
        let d = Diagram::causal_conditional(&g, &VariableSubset::singleton(1), &VariableSubset::singleton(0)).unwrap();
        assert_eq!(d.census().get(&BoxKind::Discard(1)), Some(&1));
        assert!(!d.is_inferential());
    }

    #[test]
    fn malformed_diagrams_rejected() {
        let mut d = Diagram::copy(0);
        d.wires.pop();
        assert!(d.check().is_err());
    }
}
