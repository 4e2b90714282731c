//! Finite stochastic-map semantics and its boolean (relational) counterpart.
//!
//! Matrices are dense, rows indexed by codomain outcomes and columns by
//! domain outcomes. Products of spaces are laid out row-major in factor
//! order (last factor varies fastest), which is also the Kronecker layout.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Tolerance for stochastic invariants and comparisons with known values.
pub const TOLERANCE: f64 = 1e-9;

/// A finite outcome space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinSpace {
    name: String,
    outcomes: Vec<String>,
}

impl FinSpace {
    pub fn new<S: Into<String>, L: Into<String>>(name: S, outcomes: impl IntoIterator<Item = L>) -> Result<Self> {
        let name = name.into();
        let outcomes: Vec<String> = outcomes.into_iter().map(Into::into).collect();
        if outcomes.is_empty() {
            return Err(Error::InvalidSpace(format!("`{name}` has no outcomes")));
        }
        for (i, o) in outcomes.iter().enumerate() {
            if outcomes[..i].contains(o) {
                return Err(Error::InvalidSpace(format!("`{name}` repeats outcome `{o}`")));
            }
        }
        Ok(FinSpace { name, outcomes })
    }

    /// A space with outcomes `0..n` rendered as decimal labels.
    pub fn indexed(name: impl Into<String>, n: usize) -> Result<Self> {
        Self::new(name, (0..n).map(|i| i.to_string()))
    }

    /// The one-point space.
    pub fn point(name: impl Into<String>) -> Self {
        FinSpace { name: name.into(), outcomes: vec!["*".into()] }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn size(&self) -> usize {
        self.outcomes.len()
    }

    pub fn index_of(&self, outcome: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == outcome)
    }

    pub fn renamed(&self, name: impl Into<String>) -> FinSpace {
        FinSpace { name: name.into(), outcomes: self.outcomes.clone() }
    }
}

/// Number of outcomes of an ordered product of spaces.
pub fn product_size(spaces: &[FinSpace]) -> usize {
    spaces.iter().map(FinSpace::size).product()
}

/// Outcome labels of an ordered product, comma-joined, in layout order.
pub fn product_labels(spaces: &[FinSpace]) -> Vec<String> {
    (0..product_size(spaces))
        .map(|flat| {
            let idx = unflatten(&sizes(spaces), flat);
            spaces.iter().zip(idx).map(|(s, i)| s.outcomes[i].as_str()).collect::<Vec<_>>().join(",")
        })
        .collect()
}

pub(crate) fn sizes(spaces: &[FinSpace]) -> Vec<usize> {
    spaces.iter().map(FinSpace::size).collect()
}

/// Mixed-radix decomposition, last digit fastest.
pub fn unflatten(sizes: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        idx[k] = flat % sizes[k];
        flat /= sizes[k];
    }
    idx
}

pub fn flatten(sizes: &[usize], idx: &[usize]) -> usize {
    sizes.iter().zip(idx).fold(0, |acc, (&s, &i)| acc * s + i)
}

/// For a factor permutation (output factor `i` is input factor `perm[i]`),
/// maps every old flat index to its new flat index.
fn reindex(spaces: &[FinSpace], perm: &[usize]) -> Vec<usize> {
    let old = sizes(spaces);
    let new: Vec<usize> = perm.iter().map(|&p| old[p]).collect();
    (0..product_size(spaces))
        .map(|flat| {
            let idx = unflatten(&old, flat);
            let permuted: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
            flatten(&new, &permuted)
        })
        .collect()
}

fn check_permutation(n: usize, perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::ShapeMismatch(format!("{perm:?} is not a permutation of {n} factors")));
    }
    Ok(())
}

fn describe(spaces: &[FinSpace]) -> String {
    if spaces.is_empty() {
        return "I".into();
    }
    spaces.iter().map(|s| format!("{}[{}]", s.name, s.size())).collect::<Vec<_>>().join("⊗")
}

/// Operations shared by the stochastic and the relational backends; the
/// diagram evaluator is written against this trait.
pub trait Kernel: Clone + Sized {
    fn identity(spaces: &[FinSpace]) -> Self;
    fn copy(space: &FinSpace) -> Self;
    fn discard(space: &FinSpace) -> Self;
    fn dom(&self) -> &[FinSpace];
    fn cod(&self) -> &[FinSpace];
    /// `self ∘ before`.
    fn compose(&self, before: &Self) -> Result<Self>;
    fn tensor(&self, other: &Self) -> Self;
    /// `permutation(cod, perm) ∘ self`, computed by reindexing rows.
    fn permute_codomain(&self, perm: &[usize]) -> Result<Self>;
    /// `(op ⊗ id) ∘ self`, where `op`'s domain is the leading factors of `self`'s codomain.
    fn apply_leading(&self, op: &Self) -> Result<Self>;
}

fn leading_split(cod: &[FinSpace], op_dom: &[FinSpace]) -> Result<usize> {
    let k = op_dom.len();
    if cod.len() < k || &cod[..k] != op_dom {
        return Err(Error::ShapeMismatch(format!("{} is not a prefix of {}", describe(op_dom), describe(cod))));
    }
    Ok(product_size(&cod[k..]))
}

/// A column-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochMatrix {
    dom: Vec<FinSpace>,
    cod: Vec<FinSpace>,
    data: Array2<f64>,
}

impl StochMatrix {
    /// Validates shape, entry range and column sums.
    pub fn new(dom: Vec<FinSpace>, cod: Vec<FinSpace>, data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = (product_size(&cod), product_size(&dom));
        if data.dim() != (rows, cols) {
            return Err(Error::ShapeMismatch(format!(
                "data is {:?} but {} -> {} needs ({rows}, {cols})",
                data.dim(),
                describe(&dom),
                describe(&cod)
            )));
        }
        for (j, col) in data.axis_iter(Axis(1)).enumerate() {
            if let Some(x) = col.iter().find(|&&x| !(-TOLERANCE..=1.0 + TOLERANCE).contains(&x)) {
                return Err(Error::NotStochastic(format!("entry {x} in column {j} is outside [0, 1]")));
            }
            let total: f64 = col.sum();
            if (total - 1.0).abs() > TOLERANCE {
                return Err(Error::NotStochastic(format!("column {j} sums to {total}")));
            }
        }
        Ok(StochMatrix { dom, cod, data })
    }

    /// Builds from a list of columns, one per domain outcome.
    pub fn from_columns(dom: Vec<FinSpace>, cod: Vec<FinSpace>, columns: &[Vec<f64>]) -> Result<Self> {
        let rows = product_size(&cod);
        if columns.len() != product_size(&dom) || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::ShapeMismatch(format!("columns do not fit {} -> {}", describe(&dom), describe(&cod))));
        }
        let data = Array2::from_shape_fn((rows, columns.len()), |(i, j)| columns[j][i]);
        Self::new(dom, cod, data)
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(dom: Vec<FinSpace>, cod: Vec<FinSpace>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = product_size(&dom);
        if rows.len() != product_size(&cod) || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch(format!("rows do not fit {} -> {}", describe(&dom), describe(&cod))));
        }
        let data = Array2::from_shape_fn((rows.len(), cols), |(i, j)| rows[i][j]);
        Self::new(dom, cod, data)
    }

    /// A probability vector as a matrix out of the one-point product.
    pub fn state(cod: Vec<FinSpace>, probs: &[f64]) -> Result<Self> {
        Self::from_columns(vec![], cod, &[probs.to_vec()])
    }

    /// The deterministic matrix induced by a function on flat outcome indices.
    pub fn from_function(dom: Vec<FinSpace>, cod: Vec<FinSpace>, f: &[usize]) -> Result<Self> {
        let (rows, cols) = (product_size(&cod), product_size(&dom));
        if f.len() != cols || f.iter().any(|&y| y >= rows) {
            return Err(Error::ShapeMismatch(format!("function table does not fit {} -> {}", describe(&dom), describe(&cod))));
        }
        let mut data = Array2::zeros((rows, cols));
        for (x, &y) in f.iter().enumerate() {
            data[(y, x)] = 1.0;
        }
        Ok(StochMatrix { dom, cod, data })
    }

    /// The factor-reordering matrix: output factor `i` is input factor `perm[i]`.
    pub fn permutation(spaces: &[FinSpace], perm: &[usize]) -> Result<Self> {
        check_permutation(spaces.len(), perm)?;
        let cod: Vec<FinSpace> = perm.iter().map(|&p| spaces[p].clone()).collect();
        Self::from_function(spaces.to_vec(), cod, &reindex(spaces, perm))
    }

    pub fn dom(&self) -> &[FinSpace] {
        &self.dom
    }

    pub fn cod(&self) -> &[FinSpace] {
        &self.cod
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.data.column(col).to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    /// Same entries, new space descriptions of equal shape.
    pub fn relabel(&self, dom: Vec<FinSpace>, cod: Vec<FinSpace>) -> Result<Self> {
        if sizes(&dom) != sizes(&self.dom) || sizes(&cod) != sizes(&self.cod) {
            return Err(Error::ShapeMismatch("relabelled spaces change the shape".into()));
        }
        Ok(StochMatrix { dom, cod, data: self.data.clone() })
    }

    /// Largest absolute entrywise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &StochMatrix) -> Option<f64> {
        (self.data.dim() == other.data.dim())
            .then(|| self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &StochMatrix, tol: f64) -> bool {
        self.max_abs_diff(other).is_some_and(|d| d <= tol)
    }

    /// Every entry is 0 or 1 within tolerance.
    pub fn is_deterministic(&self) -> bool {
        self.data.iter().all(|&x| x.abs() <= TOLERANCE || (x - 1.0).abs() <= TOLERANCE)
    }

    /// For a deterministic matrix, the row holding the 1 in each column.
    pub fn as_function(&self) -> Option<Vec<usize>> {
        if !self.is_deterministic() {
            return None;
        }
        Some(
            self.data
                .axis_iter(Axis(1))
                .map(|col| col.iter().position(|&x| (x - 1.0).abs() <= TOLERANCE).expect("column sums to one"))
                .collect(),
        )
    }

    /// Whether the copy square `copy ∘ K = (K ⊗ K) ∘ copy` commutes within `tol`.
    pub fn commutes_with_copy(&self, tol: f64) -> bool {
        if self.dom.len() != 1 || self.cod.len() != 1 {
            let dom = FinSpace::indexed("dom", self.cols()).unwrap();
            let cod = FinSpace::indexed("cod", self.rows()).unwrap();
            return self.relabel(vec![dom], vec![cod]).unwrap().commutes_with_copy(tol);
        }
        let lhs = Self::copy(&self.cod[0]).compose(self).unwrap();
        let rhs = self.tensor(self).compose(&Self::copy(&self.dom[0])).unwrap();
        lhs.approx_eq(&rhs, tol)
    }

    /// The stochastic inverse, which exists exactly for permutation matrices.
    pub fn stochastic_inverse(&self) -> Option<StochMatrix> {
        if self.rows() != self.cols() {
            return None;
        }
        let f = self.as_function()?;
        let mut hit = vec![false; self.rows()];
        if f.iter().any(|&y| std::mem::replace(&mut hit[y], true)) {
            return None;
        }
        let mut inv = vec![0; f.len()];
        for (x, &y) in f.iter().enumerate() {
            inv[y] = x;
        }
        Some(Self::from_function(self.cod.clone(), self.dom.clone(), &inv).unwrap())
    }

    /// Splits a deterministic matrix as `embed ∘ coarse`, where `coarse` is
    /// onto the image (outcomes in first-occurrence order) and `embed` is
    /// the inclusion of the image.
    pub fn factor_deterministic(&self) -> Result<(StochMatrix, StochMatrix)> {
        let f = self.as_function().ok_or(Error::NotDeterministic)?;
        let mut image: Vec<usize> = Vec::new();
        for &y in &f {
            if !image.contains(&y) {
                image.push(y);
            }
        }
        let labels = product_labels(&self.cod);
        let name = format!("im({})", self.cod.iter().map(FinSpace::name).collect::<Vec<_>>().join(","));
        let mid = FinSpace::new(name, image.iter().map(|&y| labels[y].clone()))?;
        let coarse_f: Vec<usize> = f.iter().map(|y| image.iter().position(|z| z == y).unwrap()).collect();
        let coarse = Self::from_function(self.dom.clone(), vec![mid.clone()], &coarse_f)?;
        let embed = Self::from_function(vec![mid], self.cod.clone(), &image)?;
        Ok((coarse, embed))
    }

    /// Deterministic with every codomain outcome hit.
    pub fn is_surjective(&self) -> bool {
        self.as_function().is_some_and(|f| (0..self.rows()).all(|y| f.contains(&y)))
    }

    /// Deterministic with no codomain outcome hit twice.
    pub fn is_injective(&self) -> bool {
        self.as_function().is_some_and(|f| {
            let mut hit = vec![false; self.rows()];
            f.iter().all(|&y| !std::mem::replace(&mut hit[y], true))
        })
    }
}

impl Kernel for StochMatrix {
    fn identity(spaces: &[FinSpace]) -> Self {
        let n = product_size(spaces);
        StochMatrix { dom: spaces.to_vec(), cod: spaces.to_vec(), data: Array2::eye(n) }
    }

    fn copy(space: &FinSpace) -> Self {
        let n = space.size();
        let f: Vec<usize> = (0..n).map(|x| x * n + x).collect();
        Self::from_function(vec![space.clone()], vec![space.clone(), space.clone()], &f).unwrap()
    }

    fn discard(space: &FinSpace) -> Self {
        Self::from_function(vec![space.clone()], vec![], &vec![0; space.size()]).unwrap()
    }

    fn dom(&self) -> &[FinSpace] {
        &self.dom
    }

    fn cod(&self) -> &[FinSpace] {
        &self.cod
    }

    fn compose(&self, before: &Self) -> Result<Self> {
        if self.dom != before.cod {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {} after {}",
                describe(&self.dom),
                describe(&before.cod)
            )));
        }
        Ok(StochMatrix { dom: before.dom.clone(), cod: self.cod.clone(), data: self.data.dot(&before.data) })
    }

    fn tensor(&self, other: &Self) -> Self {
        StochMatrix {
            dom: self.dom.iter().chain(&other.dom).cloned().collect(),
            cod: self.cod.iter().chain(&other.cod).cloned().collect(),
            data: ndarray::linalg::kron(&self.data, &other.data),
        }
    }

    fn permute_codomain(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(self.cod.len(), perm)?;
        let map = reindex(&self.cod, perm);
        let mut data = Array2::zeros(self.data.dim());
        for (old, &new) in map.iter().enumerate() {
            data.row_mut(new).assign(&self.data.row(old));
        }
        Ok(StochMatrix { dom: self.dom.clone(), cod: perm.iter().map(|&p| self.cod[p].clone()).collect(), data })
    }

    fn apply_leading(&self, op: &Self) -> Result<Self> {
        let rest = leading_split(&self.cod, &op.dom)?;
        let cols = self.cols();
        let lead = product_size(&op.dom);
        let reshaped = self
            .data
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((lead, rest * cols))
            .expect("size checked");
        let out = op.data.dot(&reshaped);
        let rows = op.rows() * rest;
        let data = out.into_shape_with_order((rows, cols)).expect("size checked");
        let cod = op.cod.iter().chain(&self.cod[op.dom.len()..]).cloned().collect();
        Ok(StochMatrix { dom: self.dom.clone(), cod, data })
    }
}

/// A relation between finite spaces as a boolean matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    dom: Vec<FinSpace>,
    cod: Vec<FinSpace>,
    data: Array2<bool>,
}

fn bool_product(a: &Array2<bool>, b: &Array2<bool>) -> Array2<bool> {
    let (n, k) = a.dim();
    let m = b.ncols();
    Array2::from_shape_fn((n, m), |(i, j)| (0..k).any(|l| a[(i, l)] && b[(l, j)]))
}

impl BoolMatrix {
    pub fn new(dom: Vec<FinSpace>, cod: Vec<FinSpace>, data: Array2<bool>) -> Result<Self> {
        if data.dim() != (product_size(&cod), product_size(&dom)) {
            return Err(Error::ShapeMismatch(format!("data does not fit {} -> {}", describe(&dom), describe(&cod))));
        }
        Ok(BoolMatrix { dom, cod, data })
    }

    /// The relation relating each domain outcome to every codomain outcome.
    pub fn total(dom: Vec<FinSpace>, cod: Vec<FinSpace>) -> Self {
        let data = Array2::from_elem((product_size(&cod), product_size(&dom)), true);
        BoolMatrix { dom, cod, data }
    }

    /// The graph of a function on flat outcome indices.
    pub fn from_function(dom: Vec<FinSpace>, cod: Vec<FinSpace>, f: &[usize]) -> Result<Self> {
        let (rows, cols) = (product_size(&cod), product_size(&dom));
        if f.len() != cols || f.iter().any(|&y| y >= rows) {
            return Err(Error::ShapeMismatch("function table does not fit".into()));
        }
        let mut data = Array2::from_elem((rows, cols), false);
        for (x, &y) in f.iter().enumerate() {
            data[(y, x)] = true;
        }
        Ok(BoolMatrix { dom, cod, data })
    }

    /// The support of a stochastic matrix.
    pub fn support_of(m: &StochMatrix) -> Self {
        BoolMatrix { dom: m.dom.clone(), cod: m.cod.clone(), data: m.data.mapv(|x| x > TOLERANCE) }
    }

    pub fn data(&self) -> &Array2<bool> {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[(row, col)]
    }
}

impl Kernel for BoolMatrix {
    fn identity(spaces: &[FinSpace]) -> Self {
        let n = product_size(spaces);
        BoolMatrix { dom: spaces.to_vec(), cod: spaces.to_vec(), data: Array2::from_shape_fn((n, n), |(i, j)| i == j) }
    }

    fn copy(space: &FinSpace) -> Self {
        let n = space.size();
        let f: Vec<usize> = (0..n).map(|x| x * n + x).collect();
        Self::from_function(vec![space.clone()], vec![space.clone(), space.clone()], &f).unwrap()
    }

    fn discard(space: &FinSpace) -> Self {
        Self::total(vec![space.clone()], vec![])
    }

    fn dom(&self) -> &[FinSpace] {
        &self.dom
    }

    fn cod(&self) -> &[FinSpace] {
        &self.cod
    }

    fn compose(&self, before: &Self) -> Result<Self> {
        if self.dom != before.cod {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {} after {}",
                describe(&self.dom),
                describe(&before.cod)
            )));
        }
        Ok(BoolMatrix { dom: before.dom.clone(), cod: self.cod.clone(), data: bool_product(&self.data, &before.data) })
    }

    fn tensor(&self, other: &Self) -> Self {
        let (r2, c2) = other.data.dim();
        let (r1, c1) = self.data.dim();
        let data =
            Array2::from_shape_fn((r1 * r2, c1 * c2), |(i, j)| self.data[(i / r2, j / c2)] && other.data[(i % r2, j % c2)]);
        BoolMatrix {
            dom: self.dom.iter().chain(&other.dom).cloned().collect(),
            cod: self.cod.iter().chain(&other.cod).cloned().collect(),
            data,
        }
    }

    fn permute_codomain(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(self.cod.len(), perm)?;
        let map = reindex(&self.cod, perm);
        let mut data = Array2::from_elem(self.data.dim(), false);
        for (old, &new) in map.iter().enumerate() {
            data.row_mut(new).assign(&self.data.row(old));
        }
        Ok(BoolMatrix { dom: self.dom.clone(), cod: perm.iter().map(|&p| self.cod[p].clone()).collect(), data })
    }

    fn apply_leading(&self, op: &Self) -> Result<Self> {
        let rest = leading_split(&self.cod, &op.dom)?;
        let cols = self.data.ncols();
        let lead = product_size(&op.dom);
        let reshaped = self
            .data
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((lead, rest * cols))
            .expect("size checked");
        let out = bool_product(&op.data, &reshaped);
        let rows = op.data.nrows() * rest;
        let data = out.into_shape_with_order((rows, cols)).expect("size checked");
        let cod = op.cod.iter().chain(&self.cod[op.dom.len()..]).cloned().collect();
        Ok(BoolMatrix { dom: self.dom.clone(), cod, data })
    }
}

/// Boolean matrix product `l ∘ k`.
pub fn bool_compose(l: &BoolMatrix, k: &BoolMatrix) -> Result<BoolMatrix> {
    l.compose(k)
}

/// Boolean Kronecker product.
pub fn bool_tensor(k: &BoolMatrix, l: &BoolMatrix) -> BoolMatrix {
    k.tensor(l)
}

/// Result of conditioning a joint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub matrix: StochMatrix,
    /// Given-outcome columns with zero mass, filled with the uniform distribution.
    pub zero_mass_columns: Vec<usize>,
}

/// Which equivalent formulation of conditional independence to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndependenceCriterion {
    /// `P(x,y|z) = P(x|z) P(y|z)`.
    Product,
    /// `P(x|y,z) = P(x|z)`.
    DropSecond,
    /// `P(y|x,z) = P(y|z)`.
    DropFirst,
}

/// A probability distribution over an ordered product of spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    factors: Vec<FinSpace>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(factors: Vec<FinSpace>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != product_size(&factors) {
            return Err(Error::ShapeMismatch(format!(
                "{} probabilities for {} outcomes",
                probs.len(),
                product_size(&factors)
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| p < -TOLERANCE || p.is_nan()) {
            return Err(Error::NotADistribution(format!("negative or NaN value {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(Error::NotADistribution(format!("total mass {total}")));
        }
        Ok(JointDistribution { factors, probs })
    }

    /// Reads a state `I -> X` as a distribution on `X`.
    pub fn from_state(m: &StochMatrix) -> Result<Self> {
        if !m.dom.is_empty() {
            return Err(Error::ShapeMismatch("a joint distribution needs an empty domain".into()));
        }
        Self::new(m.cod.clone(), m.column(0))
    }

    pub fn as_state(&self) -> StochMatrix {
        StochMatrix::state(self.factors.clone(), &self.probs).expect("validated distribution")
    }

    pub fn factors(&self) -> &[FinSpace] {
        &self.factors
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.factors.iter().position(|f| f.name == name).ok_or_else(|| Error::UnknownFactor(name.to_string()))
    }

    /// Probability of one outcome tuple.
    pub fn prob(&self, outcome: &[usize]) -> f64 {
        self.probs[flatten(&sizes(&self.factors), outcome)]
    }

    pub fn approx_eq(&self, other: &JointDistribution, tol: f64) -> bool {
        self.factors == other.factors && self.probs.iter().zip(&other.probs).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn check_factors(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.factors.len()) {
            Some(i) => Err(Error::UnknownFactor(format!("#{i}"))),
            None => Ok(()),
        }
    }

    /// Mass table over the factors `keep`, in the order given.
    fn table(&self, keep: &[usize]) -> Vec<f64> {
        let all = sizes(&self.factors);
        let kept: Vec<usize> = keep.iter().map(|&i| all[i]).collect();
        let mut out = vec![0.0; kept.iter().product()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let idx = unflatten(&all, flat);
            let sub: Vec<usize> = keep.iter().map(|&i| idx[i]).collect();
            out[flatten(&kept, &sub)] += p;
        }
        out
    }

    /// Marginal on `keep` (sorted, duplicates dropped), by summation.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointDistribution> {
        self.check_factors(keep)?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let probs = self.table(&keep);
        Ok(JointDistribution { factors: keep.iter().map(|&i| self.factors[i].clone()).collect(), probs })
    }

    /// Marginal on `keep`, computed by composing with identities on kept
    /// factors and discards on the rest.
    pub fn marginalize_by_discard(&self, keep: &[usize]) -> Result<JointDistribution> {
        self.check_factors(keep)?;
        let projection = self.factors.iter().enumerate().fold(StochMatrix::identity(&[]), |acc, (i, f)| {
            let piece = if keep.contains(&i) { StochMatrix::identity(std::slice::from_ref(f)) } else { StochMatrix::discard(f) };
            acc.tensor(&piece)
        });
        Self::from_state(&projection.compose(&self.as_state())?)
    }

    /// `P(targets | givens)` as a matrix from the given factors to the target
    /// factors, both in the order supplied.
    pub fn conditional(&self, targets: &[usize], givens: &[usize]) -> Result<Conditional> {
        self.check_factors(targets)?;
        self.check_factors(givens)?;
        if targets.iter().any(|t| givens.contains(t)) {
            return Err(Error::DisjointnessViolated);
        }
        let joint_idx: Vec<usize> = givens.iter().chain(targets).copied().collect();
        let table = self.table(&joint_idx);
        let n_t: usize = targets.iter().map(|&i| self.factors[i].size()).product();
        let n_g: usize = givens.iter().map(|&i| self.factors[i].size()).product();
        let mut columns = Vec::with_capacity(n_g);
        let mut zero_mass_columns = Vec::new();
        for g in 0..n_g {
            let col = &table[g * n_t..(g + 1) * n_t];
            let mass: f64 = col.iter().sum();
            if mass > 0.0 {
                columns.push(col.iter().map(|p| p / mass).collect());
            } else {
                zero_mass_columns.push(g);
                columns.push(vec![1.0 / n_t as f64; n_t]);
            }
        }
        let space = |idx: &[usize]| idx.iter().map(|&i| self.factors[i].clone()).collect::<Vec<_>>();
        let matrix = StochMatrix::from_columns(space(givens), space(targets), &columns)?;
        Ok(Conditional { matrix, zero_mass_columns })
    }

    /// Whether `P` is the product of its marginals on `side` and on the remaining factors.
    pub fn independent(&self, side: &[usize], tol: f64) -> Result<bool> {
        self.check_factors(side)?;
        let mut left = side.to_vec();
        left.sort_unstable();
        left.dedup();
        let right: Vec<usize> = (0..self.factors.len()).filter(|i| !left.contains(i)).collect();
        let pl = self.table(&left);
        let pr = self.table(&right);
        let all = sizes(&self.factors);
        let ls: Vec<usize> = left.iter().map(|&i| all[i]).collect();
        let rs: Vec<usize> = right.iter().map(|&i| all[i]).collect();
        Ok(self.probs.iter().enumerate().all(|(flat, &p)| {
            let idx = unflatten(&all, flat);
            let l: Vec<usize> = left.iter().map(|&i| idx[i]).collect();
            let r: Vec<usize> = right.iter().map(|&i| idx[i]).collect();
            (p - pl[flatten(&ls, &l)] * pr[flatten(&rs, &r)]).abs() <= tol
        }))
    }

    /// Whether `X ⊥ Y | Z` under the product criterion.
    pub fn cond_independent(&self, x: &[usize], y: &[usize], z: &[usize], tol: f64) -> Result<bool> {
        self.cond_independent_with(x, y, z, tol, IndependenceCriterion::Product)
    }

    /// Whether `X ⊥ Y | Z`, checked on every `z` (or `(y,z)`, `(x,z)`) of positive mass.
    pub fn cond_independent_with(
        &self,
        x: &[usize],
        y: &[usize],
        z: &[usize],
        tol: f64,
        criterion: IndependenceCriterion,
    ) -> Result<bool> {
        for s in [x, y, z] {
            self.check_factors(s)?;
        }
        let disjoint = |a: &[usize], b: &[usize]| a.iter().all(|i| !b.contains(i));
        if !disjoint(x, y) || !disjoint(x, z) || !disjoint(y, z) {
            return Err(Error::DisjointnessViolated);
        }
        if x.is_empty() || y.is_empty() {
            return Ok(true);
        }
        let all = sizes(&self.factors);
        let n = |s: &[usize]| s.iter().map(|&i| all[i]).product::<usize>();
        let (nx, ny, nz) = (n(x), n(y), n(z));
        // Index order: z slowest, then x, then y.
        let xyz: Vec<usize> = z.iter().chain(x).chain(y).copied().collect();
        let t_xyz = self.table(&xyz);
        let t_xz = self.table(&z.iter().chain(x).copied().collect::<Vec<_>>());
        let t_yz = self.table(&z.iter().chain(y).copied().collect::<Vec<_>>());
        let t_z = self.table(z);
        for iz in 0..nz {
            let pz = t_z[iz];
            for ix in 0..nx {
                for iy in 0..ny {
                    let pxyz = t_xyz[(iz * nx + ix) * ny + iy];
                    let pxz = t_xz[iz * nx + ix];
                    let pyz = t_yz[iz * ny + iy];
                    let holds = match criterion {
                        IndependenceCriterion::Product => {
                            pz <= 0.0 || (pxyz / pz - (pxz / pz) * (pyz / pz)).abs() <= tol
                        }
                        IndependenceCriterion::DropSecond => pyz <= 0.0 || (pxyz / pyz - pxz / pz).abs() <= tol,
                        IndependenceCriterion::DropFirst => pxz <= 0.0 || (pxyz / pxz - pyz / pz).abs() <= tol,
                    };
                    if !holds {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}
