//! Models of a causal theory: stochastic, relational and deterministic.
//!
//! A model fixes an outcome space per variable and a matrix per causal
//! mechanism; evaluating a [`Diagram`] then yields a matrix. Evaluation is
//! layered: boxes are processed in topological strata, and explicit
//! codomain permutations route wires so that each box's inputs lead the
//! current bundle. Between strata the bundle is put back in canonical order
//! (ascending variable index, then wire creation order).

use std::collections::BTreeMap;

use crate::diagram::{BoxKind, Diagram, Source, Target};
use crate::error::{Error, Result};
use crate::stoch::{
    product_size, unflatten, BoolMatrix, FinSpace, JointDistribution, Kernel, StochMatrix, TOLERANCE,
};
use crate::structure::{CausalStructure, VariableSubset};

/// Evaluates `d` in any backend, given the space of each variable and a
/// matrix for each mechanism.
pub fn evaluate_in<K: Kernel>(
    d: &Diagram,
    g: &CausalStructure,
    spaces: &[FinSpace],
    mechanism: impl Fn(usize) -> K,
) -> Result<K> {
    for b in d.boxes() {
        let v = b.kind.variable();
        if v >= g.len() {
            return Err(Error::ModelMismatch(format!("diagram uses variable #{v}, model has {}", g.len())));
        }
        if let BoxKind::Mechanism(_) = b.kind {
            if g.parents(v)? != b.inputs.as_slice() {
                return Err(Error::ModelMismatch(format!("mechanism for `{}` has foreign input types", g.name(v))));
            }
        }
    }
    if let Some(&v) = d.dom_labels().iter().chain(d.cod_labels()).find(|&&v| v >= g.len()) {
        return Err(Error::ModelMismatch(format!("boundary uses variable #{v}, model has {}", g.len())));
    }
    let wire_id = |pred: &dyn Fn(&crate::diagram::Wire) -> bool| -> usize {
        d.wires().iter().position(pred).expect("validated diagram")
    };
    let label_of = |w: usize| d.wires()[w].label;
    let spaces_of = |bundle: &[usize]| -> Vec<FinSpace> { bundle.iter().map(|&w| spaces[label_of(w)].clone()).collect() };

    let mut bundle: Vec<usize> =
        (0..d.dom_labels().len()).map(|i| wire_id(&|w| w.source == Source::Input(i))).collect();
    let mut current = K::identity(&spaces_of(&bundle));

    let layers = d.box_layers().ok_or_else(|| Error::MalformedDiagram("cyclic".into()))?;
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (b, &layer) in layers.iter().enumerate() {
        strata.entry(layer).or_default().push(b);
    }

    for boxes in strata.values() {
        for &b in boxes {
            let gen = &d.boxes()[b];
            let inputs: Vec<usize> = (0..gen.inputs.len())
                .map(|p| wire_id(&|w| w.target == Target::Port { node: b, port: p }))
                .collect();
            let mut perm: Vec<usize> =
                inputs.iter().map(|wi| bundle.iter().position(|x| x == wi).expect("input is live")).collect();
            let rest: Vec<usize> = (0..bundle.len()).filter(|i| !perm.contains(i)).collect();
            perm.extend(rest);
            current = current.permute_codomain(&perm)?;
            let rest: Vec<usize> = perm[inputs.len()..].iter().map(|&i| bundle[i]).collect();
            let op = match gen.kind {
                BoxKind::Mechanism(v) => mechanism(v),
                BoxKind::Copy(v) => K::copy(&spaces[v]),
                BoxKind::Discard(v) => K::discard(&spaces[v]),
            };
            current = current.apply_leading(&op)?;
            bundle = (0..gen.outputs.len())
                .map(|p| wire_id(&|w| w.source == Source::Port { node: b, port: p }))
                .chain(rest)
                .collect();
        }
        let mut perm: Vec<usize> = (0..bundle.len()).collect();
        perm.sort_by_key(|&i| (label_of(bundle[i]), bundle[i]));
        current = current.permute_codomain(&perm)?;
        bundle = perm.iter().map(|&i| bundle[i]).collect();
    }

    let targets: Vec<usize> =
        (0..d.cod_labels().len()).map(|j| wire_id(&|w| w.target == Target::Output(j))).collect();
    let perm: Vec<usize> =
        targets.iter().map(|t| bundle.iter().position(|x| x == t).expect("output wire is live")).collect();
    current.permute_codomain(&perm)
}

fn check_spaces(g: &CausalStructure, spaces: Vec<FinSpace>) -> Result<Vec<FinSpace>> {
    if spaces.len() != g.len() {
        return Err(Error::ModelMismatch(format!("{} spaces for {} variables", spaces.len(), g.len())));
    }
    Ok(spaces.iter().enumerate().map(|(v, s)| s.renamed(g.name(v))).collect())
}

fn parent_spaces(g: &CausalStructure, spaces: &[FinSpace], v: usize) -> Vec<FinSpace> {
    g.parents(v).expect("valid vertex").iter().map(|&p| spaces[p].clone()).collect()
}

/// A model of the causal theory in finite stochastic maps.
#[derive(Debug, Clone, PartialEq)]
pub struct StochCausalModel {
    structure: CausalStructure,
    spaces: Vec<FinSpace>,
    mechanisms: Vec<StochMatrix>,
}

impl StochCausalModel {
    /// Spaces are renamed after their variables; each mechanism must map the
    /// product of the parents' spaces (canonical order) to its variable's space.
    pub fn new(structure: CausalStructure, spaces: Vec<FinSpace>, mechanisms: Vec<StochMatrix>) -> Result<Self> {
        let spaces = check_spaces(&structure, spaces)?;
        if mechanisms.len() != structure.len() {
            return Err(Error::ModelMismatch(format!("{} mechanisms for {} variables", mechanisms.len(), structure.len())));
        }
        let mechanisms = mechanisms
            .iter()
            .enumerate()
            .map(|(v, m)| {
                m.relabel(parent_spaces(&structure, &spaces, v), vec![spaces[v].clone()]).map_err(|_| {
                    Error::ModelMismatch(format!("mechanism for `{}` has the wrong shape", structure.name(v)))
                })
            })
            .collect::<Result<_>>()?;
        Ok(StochCausalModel { structure, spaces, mechanisms })
    }

    /// Builds mechanisms from tables with one probability row per parent
    /// configuration (row-major over parents, last parent fastest).
    pub fn from_tables(structure: CausalStructure, spaces: Vec<FinSpace>, tables: &[Vec<Vec<f64>>]) -> Result<Self> {
        let spaces = check_spaces(&structure, spaces)?;
        if tables.len() != structure.len() {
            return Err(Error::ModelMismatch(format!("{} tables for {} variables", tables.len(), structure.len())));
        }
        let mechanisms = tables
            .iter()
            .enumerate()
            .map(|(v, t)| StochMatrix::from_columns(parent_spaces(&structure, &spaces, v), vec![spaces[v].clone()], t))
            .collect::<Result<_>>()?;
        Ok(StochCausalModel { structure, spaces, mechanisms })
    }

    pub fn structure(&self) -> &CausalStructure {
        &self.structure
    }

    pub fn spaces(&self) -> &[FinSpace] {
        &self.spaces
    }

    pub fn space(&self, v: usize) -> &FinSpace {
        &self.spaces[v]
    }

    pub fn mechanism(&self, v: usize) -> &StochMatrix {
        &self.mechanisms[v]
    }

    pub fn mechanisms(&self) -> &[StochMatrix] {
        &self.mechanisms
    }

    /// Mechanism tables as rows per parent configuration.
    pub fn tables(&self) -> Vec<Vec<Vec<f64>>> {
        self.mechanisms.iter().map(|m| (0..m.cols()).map(|c| m.column(c)).collect()).collect()
    }

    pub fn evaluate(&self, d: &Diagram) -> Result<StochMatrix> {
        evaluate_in(d, &self.structure, &self.spaces, |v| self.mechanisms[v].clone())
    }

    /// The joint distribution over all variables in canonical order.
    pub fn joint_prior(&self) -> Result<JointDistribution> {
        self.marginal_prior(&self.structure.all_vertices())
    }

    /// The prior `[w]`, as a distribution over `w` in canonical order.
    pub fn marginal_prior(&self, w: &VariableSubset) -> Result<JointDistribution> {
        let d = Diagram::prior(&self.structure, w)?;
        JointDistribution::from_state(&self.evaluate(&d)?)
    }

    /// The causal conditional `[w'||w]` evaluated as a matrix.
    pub fn causal_conditional(&self, w: &VariableSubset, w_prime: &VariableSubset) -> Result<StochMatrix> {
        self.evaluate(&Diagram::causal_conditional(&self.structure, w, w_prime)?)
    }

    /// The trivial model: every variable has space `s` and every mechanism
    /// ignores its parents and returns `dist`.
    pub fn trivial(structure: &CausalStructure, s: &FinSpace, dist: &[f64]) -> Result<Self> {
        if dist.len() != s.size() {
            return Err(Error::NotADistribution(format!("{} values for {} outcomes", dist.len(), s.size())));
        }
        if dist.iter().any(|&p| !(-TOLERANCE..=1.0 + TOLERANCE).contains(&p)) || (dist.iter().sum::<f64>() - 1.0).abs() > TOLERANCE {
            return Err(Error::NotADistribution(format!("{dist:?}")));
        }
        let spaces = vec![s.clone(); structure.len()];
        let tables: Vec<Vec<Vec<f64>>> = (0..structure.len())
            .map(|v| {
                let configs: usize = structure.parents(v).unwrap().iter().map(|_| s.size()).product();
                vec![dist.to_vec(); configs]
            })
            .collect();
        Self::from_tables(structure.clone(), spaces, &tables)
    }

    /// The terminal model: the trivial model on the one-point space.
    pub fn terminal(structure: &CausalStructure) -> Self {
        Self::trivial(structure, &FinSpace::point("*"), &[1.0]).expect("point mass is a distribution")
    }

    /// The possibilistic shadow: each mechanism replaced by its support.
    pub fn support(&self) -> RelCausalModel {
        RelCausalModel {
            structure: self.structure.clone(),
            spaces: self.spaces.clone(),
            mechanisms: self.mechanisms.iter().map(BoolMatrix::support_of).collect(),
        }
    }
}

/// A model of the causal theory in sets and relations.
#[derive(Debug, Clone, PartialEq)]
pub struct RelCausalModel {
    structure: CausalStructure,
    spaces: Vec<FinSpace>,
    mechanisms: Vec<BoolMatrix>,
}

impl RelCausalModel {
    pub fn new(structure: CausalStructure, spaces: Vec<FinSpace>, mechanisms: Vec<BoolMatrix>) -> Result<Self> {
        let spaces = check_spaces(&structure, spaces)?;
        if mechanisms.len() != structure.len() {
            return Err(Error::ModelMismatch(format!("{} mechanisms for {} variables", mechanisms.len(), structure.len())));
        }
        let mechanisms = mechanisms
            .into_iter()
            .enumerate()
            .map(|(v, m)| {
                BoolMatrix::new(parent_spaces(&structure, &spaces, v), vec![spaces[v].clone()], m.data().clone()).map_err(
                    |_| Error::ModelMismatch(format!("mechanism for `{}` has the wrong shape", structure.name(v))),
                )
            })
            .collect::<Result<_>>()?;
        Ok(RelCausalModel { structure, spaces, mechanisms })
    }

    pub fn structure(&self) -> &CausalStructure {
        &self.structure
    }

    pub fn spaces(&self) -> &[FinSpace] {
        &self.spaces
    }

    pub fn evaluate(&self, d: &Diagram) -> Result<BoolMatrix> {
        evaluate_in(d, &self.structure, &self.spaces, |v| self.mechanisms[v].clone())
    }
}

/// A deterministic model: every mechanism is a function of its parents.
#[derive(Debug, Clone, PartialEq)]
pub struct SetCausalModel {
    structure: CausalStructure,
    spaces: Vec<FinSpace>,
    /// Outcome index per parent configuration (row-major, last parent fastest).
    functions: Vec<Vec<usize>>,
}

impl SetCausalModel {
    pub fn new(structure: CausalStructure, spaces: Vec<FinSpace>, functions: Vec<Vec<usize>>) -> Result<Self> {
        let spaces = check_spaces(&structure, spaces)?;
        if functions.len() != structure.len() {
            return Err(Error::ModelMismatch(format!("{} functions for {} variables", functions.len(), structure.len())));
        }
        for (v, f) in functions.iter().enumerate() {
            let configs = product_size(&parent_spaces(&structure, &spaces, v));
            if f.len() != configs || f.iter().any(|&y| y >= spaces[v].size()) {
                return Err(Error::ModelMismatch(format!("function for `{}` is not total", structure.name(v))));
            }
        }
        Ok(SetCausalModel { structure, spaces, functions })
    }

    pub fn structure(&self) -> &CausalStructure {
        &self.structure
    }

    pub fn function(&self, v: usize) -> &[usize] {
        &self.functions[v]
    }

    /// The stochastic model of induced 0/1 matrices.
    pub fn induced(&self) -> StochCausalModel {
        let mechanisms = self
            .functions
            .iter()
            .enumerate()
            .map(|(v, f)| {
                StochMatrix::from_function(parent_spaces(&self.structure, &self.spaces, v), vec![self.spaces[v].clone()], f)
                    .expect("validated function")
            })
            .collect();
        StochCausalModel { structure: self.structure.clone(), spaces: self.spaces.clone(), mechanisms }
    }

    /// Evaluates through the induced matrices; the result is always deterministic.
    pub fn evaluate(&self, d: &Diagram) -> Result<StochMatrix> {
        let m = self.induced().evaluate(d)?;
        assert!(m.is_deterministic(), "deterministic mechanisms produced a non-deterministic map");
        Ok(m)
    }
}

/// Outcome of a compatibility check between a structure and a joint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    pub compatible: bool,
    /// `P(v | pa(v))` for every variable, computed from the joint.
    pub conditionals: Vec<StochMatrix>,
    /// The first outcome tuple whose probability differs from the product of conditionals.
    pub offending: Option<Vec<usize>>,
    pub max_deviation: f64,
}

fn check_alignment(g: &CausalStructure, p: &JointDistribution) -> Result<()> {
    let names: Vec<&str> = p.factors().iter().map(FinSpace::name).collect();
    if names != g.names().iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::FactorMismatch(format!("factors {names:?} vs variables {:?}", g.names())));
    }
    Ok(())
}

/// Tests whether `p` factorizes as the product of its parent-conditionals
/// along `g`, pointwise within `tol`. Tuples whose parent configuration for
/// some variable has zero mass are skipped.
pub fn check_compatibility(g: &CausalStructure, p: &JointDistribution, tol: f64) -> Result<Compatibility> {
    check_alignment(g, p)?;
    let mut conditionals = Vec::with_capacity(g.len());
    let mut zero_cols = Vec::with_capacity(g.len());
    for v in 0..g.len() {
        let c = p.conditional(&[v], g.parents(v)?)?;
        conditionals.push(c.matrix);
        zero_cols.push(c.zero_mass_columns);
    }
    let sizes: Vec<usize> = p.factors().iter().map(FinSpace::size).collect();
    let mut offending = None;
    let mut max_deviation = 0.0f64;
    'tuples: for (flat, &px) in p.probs().iter().enumerate() {
        let x = unflatten(&sizes, flat);
        let mut product = 1.0;
        for v in 0..g.len() {
            let pa = g.parents(v)?;
            let col = pa.iter().fold(0, |acc, &u| acc * sizes[u] + x[u]);
            if zero_cols[v].contains(&col) {
                continue 'tuples;
            }
            product *= conditionals[v].get(x[v], col);
        }
        let dev = (product - px).abs();
        max_deviation = max_deviation.max(dev);
        if dev > tol && offending.is_none() {
            offending = Some(x);
        }
    }
    Ok(Compatibility { compatible: offending.is_none(), conditionals, offending, max_deviation })
}

/// Each variable is independent of its non-parent predecessors in the
/// ancestral ordering, given its parents.
pub fn ordered_markov_condition(g: &CausalStructure, p: &JointDistribution, tol: f64) -> Result<bool> {
    check_alignment(g, p)?;
    let order = g.ancestral_ordering();
    for (i, &v) in order.iter().enumerate() {
        let pa = g.parents(v)?;
        let rest: Vec<usize> = order[..i].iter().copied().filter(|u| !pa.contains(u)).collect();
        if !p.cond_independent(&[v], &rest, pa, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Each variable is independent of its non-descendants given its parents.
pub fn parental_markov_condition(g: &CausalStructure, p: &JointDistribution, tol: f64) -> Result<bool> {
    check_alignment(g, p)?;
    for v in 0..g.len() {
        let pa = g.parents(v)?;
        let desc = g.descendants(v)?;
        let rest: Vec<usize> = (0..g.len()).filter(|&u| u != v && !desc.contains(u) && !pa.contains(&u)).collect();
        if !p.cond_independent(&[v], &rest, pa, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-variable maps between two stochastic models over the same structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMorphism {
    source: StochCausalModel,
    target: StochCausalModel,
    components: Vec<StochMatrix>,
}

/// Result of checking the naturality conditions of a [`ModelMorphism`].
#[derive(Debug, Clone, PartialEq)]
pub enum MorphismVerdict {
    Valid,
    NotDeterministic { variable: usize },
    /// `α_v ∘ P[v|pa] ≠ Q[v|pa] ∘ α_pa` by `deviation` (max entrywise).
    SquareFails { variable: usize, deviation: f64 },
}

impl MorphismVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, MorphismVerdict::Valid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphismKind {
    /// Both an embedding and a coarse graining.
    Isomorphism,
    Embedding,
    CoarseGraining,
    General,
}

/// A valid morphism split into a coarse graining followed by an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: MorphismKind,
    pub intermediate: StochCausalModel,
    pub coarse: ModelMorphism,
    pub embedding: ModelMorphism,
}

impl ModelMorphism {
    pub fn new(source: StochCausalModel, target: StochCausalModel, components: Vec<StochMatrix>) -> Result<Self> {
        if source.structure != target.structure {
            return Err(Error::StructureMismatch);
        }
        if components.len() != source.structure.len() {
            return Err(Error::InvalidMorphism(format!("{} components for {} variables", components.len(), source.structure.len())));
        }
        let components = components
            .iter()
            .enumerate()
            .map(|(v, c)| {
                c.relabel(vec![source.spaces[v].clone()], vec![target.spaces[v].clone()]).map_err(|_| {
                    Error::InvalidMorphism(format!("component for `{}` has the wrong shape", source.structure.name(v)))
                })
            })
            .collect::<Result<_>>()?;
        Ok(ModelMorphism { source, target, components })
    }

    /// Components induced by outcome-index functions.
    pub fn from_maps(source: StochCausalModel, target: StochCausalModel, maps: &[Vec<usize>]) -> Result<Self> {
        if source.structure != target.structure {
            return Err(Error::StructureMismatch);
        }
        if maps.len() != source.structure.len() {
            return Err(Error::InvalidMorphism(format!("{} maps for {} variables", maps.len(), source.structure.len())));
        }
        let components = maps
            .iter()
            .enumerate()
            .map(|(v, f)| StochMatrix::from_function(vec![source.spaces[v].clone()], vec![target.spaces[v].clone()], f))
            .collect::<Result<_>>()?;
        Ok(ModelMorphism { source, target, components })
    }

    /// The identity morphism on `m`.
    pub fn identity(m: &StochCausalModel) -> Self {
        let components = m.spaces.iter().map(|s| StochMatrix::identity(std::slice::from_ref(s))).collect();
        ModelMorphism { source: m.clone(), target: m.clone(), components }
    }

    /// The unique morphism into the terminal model.
    pub fn to_terminal(m: &StochCausalModel) -> Self {
        let maps: Vec<Vec<usize>> = m.spaces.iter().map(|s| vec![0; s.size()]).collect();
        Self::from_maps(m.clone(), StochCausalModel::terminal(&m.structure), &maps).expect("shapes agree")
    }

    pub fn source(&self) -> &StochCausalModel {
        &self.source
    }

    pub fn target(&self) -> &StochCausalModel {
        &self.target
    }

    pub fn component(&self, v: usize) -> &StochMatrix {
        &self.components[v]
    }

    /// `α_w`: the tensor of components over `w`, in the given order.
    pub fn component_on(&self, w: &[usize]) -> StochMatrix {
        w.iter().fold(StochMatrix::identity(&[]), |acc, &u| acc.tensor(&self.components[u]))
    }

    /// Checks determinism and every mechanism naturality square within `tol`.
    pub fn validate(&self, tol: f64) -> MorphismVerdict {
        if let Some(variable) = self.components.iter().position(|c| !c.is_deterministic()) {
            return MorphismVerdict::NotDeterministic { variable };
        }
        self.first_failing_square(tol).map_or(MorphismVerdict::Valid, |(variable, deviation)| {
            MorphismVerdict::SquareFails { variable, deviation }
        })
    }

    /// The first variable whose mechanism square fails, ignoring determinism.
    pub fn first_failing_square(&self, tol: f64) -> Option<(usize, f64)> {
        let g = &self.source.structure;
        (0..g.len()).find_map(|v| {
            let pa = g.parents(v).unwrap();
            let lhs = self.components[v].compose(&self.source.mechanisms[v]).unwrap();
            let rhs = self.target.mechanisms[v].compose(&self.component_on(pa)).unwrap();
            let dev = lhs.max_abs_diff(&rhs).unwrap();
            (dev > tol).then_some((v, dev))
        })
    }

    /// Factors a valid morphism through the model induced on the images.
    pub fn classify(&self, tol: f64) -> Result<Classification> {
        match self.validate(tol) {
            MorphismVerdict::Valid => {}
            other => return Err(Error::InvalidMorphism(format!("{other:?}"))),
        }
        let g = &self.source.structure;
        let mut coarse = Vec::with_capacity(g.len());
        let mut embed = Vec::with_capacity(g.len());
        for c in &self.components {
            let (k, e) = c.factor_deterministic()?;
            coarse.push(k);
            embed.push(e);
        }
        let spaces: Vec<FinSpace> = coarse.iter().enumerate().map(|(v, k)| k.cod()[0].renamed(g.name(v))).collect();

        // M[v|pa](y) = γ_v ∘ P[v|pa](x) for any x with γ_pa(x) = y.
        let mut mechanisms = Vec::with_capacity(g.len());
        for v in 0..g.len() {
            let pa = g.parents(v)?;
            let gamma_pa = pa.iter().fold(StochMatrix::identity(&[]), |acc, &u| acc.tensor(&coarse[u]));
            let gamma_pa = gamma_pa.as_function().expect("deterministic");
            let pushed = coarse[v].compose(&self.source.mechanisms[v])?;
            let n_configs: usize = pa.iter().map(|&u| spaces[u].size()).product();
            let columns: Vec<Vec<f64>> = (0..n_configs)
                .map(|y| {
                    let x = gamma_pa.iter().position(|&z| z == y).expect("coarse graining is onto");
                    pushed.column(x)
                })
                .collect();
            let dom = pa.iter().map(|&u| spaces[u].clone()).collect();
            mechanisms.push(StochMatrix::from_columns(dom, vec![spaces[v].clone()], &columns)?);
        }
        let intermediate = StochCausalModel::new(g.clone(), spaces, mechanisms)?;
        let coarse = ModelMorphism::new(self.source.clone(), intermediate.clone(), coarse)?;
        let embedding = ModelMorphism::new(intermediate.clone(), self.target.clone(), embed)?;

        let injective = self.components.iter().all(StochMatrix::is_injective);
        let surjective = self.components.iter().all(StochMatrix::is_surjective);
        let kind = match (injective, surjective) {
            (true, true) => MorphismKind::Isomorphism,
            (true, false) => MorphismKind::Embedding,
            (false, true) => MorphismKind::CoarseGraining,
            (false, false) => MorphismKind::General,
        };
        Ok(Classification { kind, intermediate, coarse, embedding })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::TheoryObject;

    fn bin(name: &str) -> FinSpace {
        FinSpace::new(name, [name.to_lowercase(), format!("¬{}", name.to_lowercase())]).unwrap()
    }

    fn food_model() -> StochCausalModel {
        let g = CausalStructure::build(&["A", "B", "C"], &[("A", "C"), ("B", "C")]).unwrap();
        StochCausalModel::from_tables(
            g,
            vec![bin("A"), bin("B"), bin("C")],
            &[
                vec![vec![0.6, 0.4]],
                vec![vec![0.4, 0.6]],
                vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.375, 0.625], vec![0.0, 1.0]],
            ],
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn food_joint_prior() {
        let m = food_model();
        let joint = m.joint_prior().unwrap();
        assert!(close(joint.probs(), &[0.24, 0.0, 0.18, 0.18, 0.06, 0.10, 0.0, 0.24], TOLERANCE));
        let c = m.marginal_prior(&VariableSubset::singleton(2)).unwrap();
        assert!(close(c.probs(), &[0.48, 0.52], TOLERANCE));
        let ab = m.marginal_prior(&VariableSubset::new([0, 1])).unwrap();
        assert!(close(ab.probs(), &[0.24, 0.36, 0.16, 0.24], TOLERANCE));
    }

    #[test]
    fn identity_evaluates_to_identity() {
        let m = food_model();
        let w = TheoryObject::from_labels([0, 2]);
        let e = m.evaluate(&Diagram::identity(&w)).unwrap();
        assert!(e.approx_eq(&StochMatrix::identity(&[m.space(0).clone(), m.space(2).clone()]), 0.0));
    }

    #[test]
    fn foreign_diagram_rejected() {
        let m = food_model();
        let other = CausalStructure::build(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        let d = Diagram::mechanism(&other, 2).unwrap();
        assert!(matches!(m.evaluate(&d), Err(Error::ModelMismatch(_))));
        let d = Diagram::copy(7);
        assert!(matches!(m.evaluate(&d), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn compatibility_checks() {
        let m = food_model();
        let joint = m.joint_prior().unwrap();
        let verdict = check_compatibility(m.structure(), &joint, TOLERANCE).unwrap();
        assert!(verdict.compatible);
        assert!(ordered_markov_condition(m.structure(), &joint, TOLERANCE).unwrap());
        assert!(parental_markov_condition(m.structure(), &joint, TOLERANCE).unwrap());

        let edgeless = CausalStructure::build(&["A", "B", "C"], &[] as &[(&str, &str)]).unwrap();
        let verdict = check_compatibility(&edgeless, &joint, TOLERANCE).unwrap();
        assert!(!verdict.compatible);
        // P(a,b,c) = 0.24 but P(a)P(b)P(c) = 0.6 * 0.4 * 0.48.
        assert_eq!(verdict.offending, Some(vec![0, 0, 0]));

        let complete = CausalStructure::build(&["A", "B", "C"], &[("A", "B"), ("A", "C"), ("B", "C")]).unwrap();
        assert!(check_compatibility(&complete, &joint, TOLERANCE).unwrap().compatible);

        let renamed = CausalStructure::build(&["X", "B", "C"], &[] as &[(&str, &str)]).unwrap();
        assert!(matches!(check_compatibility(&renamed, &joint, TOLERANCE), Err(Error::FactorMismatch(_))));
    }

    #[test]
    fn trivial_and_terminal_models() {
        let g = CausalStructure::build(&["A", "B"], &[("A", "B")]).unwrap();
        let coin = StochCausalModel::trivial(&g, &bin("S"), &[0.5, 0.5]).unwrap();
        assert!(close(coin.joint_prior().unwrap().probs(), &[0.25; 4], TOLERANCE));
        assert!(StochCausalModel::trivial(&g, &bin("S"), &[0.5, 0.6]).is_err());

        let t = StochCausalModel::terminal(&g);
        assert_eq!(t.joint_prior().unwrap().probs(), &[1.0]);
        assert!(t.mechanisms().iter().all(|m| m.data().iter().all(|&x| x == 1.0)));
        let to_t = ModelMorphism::to_terminal(&coin);
        assert!(to_t.validate(TOLERANCE).is_valid());
        assert_eq!(to_t.classify(TOLERANCE).unwrap().kind, MorphismKind::CoarseGraining);
    }

    #[test]
    fn morphism_checks() {
        let g = CausalStructure::build(&["A", "B"], &[("A", "B")]).unwrap();
        let coin = StochCausalModel::trivial(&g, &bin("S"), &[0.5, 0.5]).unwrap();
        let id = ModelMorphism::identity(&coin);
        assert!(id.validate(TOLERANCE).is_valid());
        assert_eq!(id.classify(TOLERANCE).unwrap().kind, MorphismKind::Isomorphism);

        let swap = ModelMorphism::from_maps(coin.clone(), coin.clone(), &[vec![1, 0], vec![1, 0]]).unwrap();
        assert!(swap.validate(TOLERANCE).is_valid());

        let biased = StochCausalModel::trivial(&g, &bin("S"), &[0.3, 0.7]).unwrap();
        for f in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let phi = ModelMorphism::from_maps(coin.clone(), biased.clone(), &[f.to_vec(), f.to_vec()]).unwrap();
            assert!(matches!(phi.validate(TOLERANCE), MorphismVerdict::SquareFails { variable: 0, .. }));
            assert!(phi.classify(TOLERANCE).is_err());
        }

        let mixing = StochMatrix::from_rows(vec![bin("S")], vec![bin("S")], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let phi = ModelMorphism::new(coin.clone(), coin.clone(), vec![mixing.clone(), mixing]).unwrap();
        assert_eq!(phi.validate(TOLERANCE), MorphismVerdict::NotDeterministic { variable: 0 });

        let other = StochCausalModel::terminal(&CausalStructure::build(&["A"], &[] as &[(&str, &str)]).unwrap());
        assert_eq!(ModelMorphism::from_maps(coin, other, &[vec![0, 0]]).unwrap_err(), Error::StructureMismatch);
    }

    #[test]
    fn embedding_into_padded_model() {
        // Target has an extra zero-mass outcome for A that B's mechanism treats arbitrarily.
        let g = CausalStructure::build(&["A", "B"], &[("A", "B")]).unwrap();
        let p = StochCausalModel::from_tables(
            g.clone(),
            vec![bin("A"), bin("B")],
            &[vec![vec![0.3, 0.7]], vec![vec![0.9, 0.1], vec![0.2, 0.8]]],
        )
        .unwrap();
        let a3 = FinSpace::new("A", ["a", "¬a", "a?"]).unwrap();
        let q = StochCausalModel::from_tables(
            g,
            vec![a3, bin("B")],
            &[vec![vec![0.3, 0.7, 0.0]], vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.5, 0.5]]],
        )
        .unwrap();
        let phi = ModelMorphism::from_maps(p.clone(), q.clone(), &[vec![0, 1], vec![0, 1]]).unwrap();
        assert!(phi.validate(TOLERANCE).is_valid());
        let class = phi.classify(TOLERANCE).unwrap();
        assert_eq!(class.kind, MorphismKind::Embedding);
        assert!(class.coarse.validate(TOLERANCE).is_valid());
        assert!(class.embedding.validate(TOLERANCE).is_valid());
        let pushed = phi.component_on(&[0, 1]).compose(&p.joint_prior().unwrap().as_state()).unwrap();
        assert!(close(&pushed.column(0), q.joint_prior().unwrap().probs(), TOLERANCE));
    }

    #[test]
    fn set_and_rel_models() {
        let g = CausalStructure::build(&["X", "Y"], &[("X", "Y")]).unwrap();
        let s = SetCausalModel::new(g.clone(), vec![FinSpace::indexed("X", 3).unwrap(), bin("Y")], vec![vec![2], vec![0, 1, 1]])
            .unwrap();
        let prior = s.evaluate(&Diagram::prior(&g, &VariableSubset::singleton(0)).unwrap()).unwrap();
        assert_eq!(prior.column(0), vec![0.0, 0.0, 1.0]);
        let joint = s.evaluate(&Diagram::prior(&g, &g.all_vertices()).unwrap()).unwrap();
        assert_eq!(joint.as_function(), Some(vec![5]));
        assert!(SetCausalModel::new(g.clone(), vec![bin("X"), bin("Y")], vec![vec![2], vec![0, 1]]).is_err());

        let rel = food_model().support();
        let d = Diagram::prior(rel.structure(), &rel.structure().all_vertices()).unwrap();
        let support = rel.evaluate(&d).unwrap();
        let got: Vec<bool> = (0..8).map(|i| support.get(i, 0)).collect();
        assert_eq!(got, vec![true, false, true, true, true, true, false, true]);
    }
}
