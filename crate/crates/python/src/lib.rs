use std::collections::BTreeMap;
use std::path::Path;

use ctk_core::formats::{self, render_matrix, ModelFile};
use ctk_core::model::{self as core_model, MorphismKind, MorphismVerdict};
use ctk_core::{demos, dot, Error, Expression, TOLERANCE};
use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

create_exception!(ctk, CtkError, PyValueError);

fn err(e: Error) -> PyErr {
    match e {
        Error::UnknownVertex(name) | Error::UnknownFactor(name) => PyKeyError::new_err(name),
        other => CtkError::new_err(other.to_string()),
    }
}

/// A directed acyclic causal structure.
#[pyclass(frozen, skip_from_py_object, module = "ctk")]
#[derive(Clone)]
struct CausalStructure {
    inner: ctk_core::CausalStructure,
}

impl CausalStructure {
    fn subset(&self, names: &[String]) -> PyResult<ctk_core::VariableSubset> {
        self.inner.subset(names).map_err(err)
    }

    fn names(&self, vs: impl IntoIterator<Item = usize>) -> Vec<String> {
        vs.into_iter().map(|v| self.inner.name(v).to_string()).collect()
    }
}

#[pymethods]
impl CausalStructure {
    #[new]
    fn new(variables: Vec<String>, arrows: Vec<(String, String)>) -> PyResult<Self> {
        Ok(CausalStructure { inner: ctk_core::CausalStructure::build(&variables, &arrows).map_err(err)? })
    }

    /// Loads a structure file, or the structure of a model file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(CausalStructure { inner: formats::load_structure_of(Path::new(path)).map_err(err)? })
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn arrows(&self) -> Vec<(String, String)> {
        self.inner.arrows().iter().map(|&(s, t)| (self.inner.name(s).to_string(), self.inner.name(t).to_string())).collect()
    }

    fn parents(&self, name: &str) -> PyResult<Vec<String>> {
        let v = self.inner.index_of(name).map_err(err)?;
        Ok(self.names(self.inner.parents(v).map_err(err)?.iter().copied()))
    }

    fn ancestral_ordering(&self) -> Vec<String> {
        self.names(self.inner.ancestral_ordering())
    }

    fn is_ancestor(&self, u: &str, v: &str) -> PyResult<bool> {
        let (u, v) = (self.inner.index_of(u).map_err(err)?, self.inner.index_of(v).map_err(err)?);
        self.inner.is_ancestor(u, v).map_err(err)
    }

    #[pyo3(signature = (u, t, given = Vec::new()))]
    fn d_separated(&self, u: Vec<String>, t: Vec<String>, given: Vec<String>) -> PyResult<bool> {
        self.inner.d_separated(&self.subset(&u)?, &self.subset(&t)?, &self.subset(&given)?).map_err(err)
    }

    /// An unblocked path from `u` to `t`, or None when they are d-separated.
    #[pyo3(signature = (u, t, given = Vec::new()))]
    fn active_path(&self, u: Vec<String>, t: Vec<String>, given: Vec<String>) -> PyResult<Option<Vec<String>>> {
        let path = self.inner.find_active_path(&self.subset(&u)?, &self.subset(&t)?, &self.subset(&given)?).map_err(err)?;
        Ok(path.map(|p| self.names(p)))
    }

    #[pyo3(signature = (targets, given = Vec::new()))]
    fn causal_conditional(&self, targets: Vec<String>, given: Vec<String>) -> PyResult<Diagram> {
        let d = ctk_core::Diagram::causal_conditional(&self.inner, &self.subset(&given)?, &self.subset(&targets)?)
            .map_err(err)?;
        Ok(Diagram { inner: d, structure: self.inner.clone() })
    }

    /// Parses `[D E || B]` or `id(A B)`.
    fn diagram(&self, expression: &str) -> PyResult<Diagram> {
        let e: Expression = expression.parse().map_err(err)?;
        Ok(Diagram { inner: e.to_diagram(&self.inner).map_err(err)?, structure: self.inner.clone() })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("CausalStructure({})", self.inner)
    }
}

/// A morphism of the causal theory, drawn as a string diagram.
#[pyclass(frozen, skip_from_py_object, module = "ctk")]
#[derive(Clone)]
struct Diagram {
    inner: ctk_core::Diagram,
    structure: ctk_core::CausalStructure,
}

#[pymethods]
impl Diagram {
    #[getter]
    fn dom(&self) -> Vec<String> {
        self.inner.dom_labels().iter().map(|&v| self.structure.name(v).to_string()).collect()
    }

    #[getter]
    fn cod(&self) -> Vec<String> {
        self.inner.cod_labels().iter().map(|&v| self.structure.name(v).to_string()).collect()
    }

    /// Box counts keyed by `(kind, variable)`.
    fn census(&self) -> BTreeMap<(String, String), usize> {
        self.inner
            .census()
            .into_iter()
            .map(|(k, n)| ((k.tag().to_string(), self.structure.name(k.variable()).to_string()), n))
            .collect()
    }

    fn is_inferential(&self) -> bool {
        self.inner.is_inferential()
    }

    fn equivalent(&self, other: &Diagram) -> bool {
        self.structure == other.structure && self.inner.equivalent(&other.inner)
    }

    fn then(&self, other: &Diagram) -> PyResult<Diagram> {
        Ok(Diagram { inner: ctk_core::Diagram::seq(&self.inner, &other.inner).map_err(err)?, structure: self.structure.clone() })
    }

    fn tensor(&self, other: &Diagram) -> Diagram {
        Diagram { inner: ctk_core::Diagram::par(&self.inner, &other.inner), structure: self.structure.clone() }
    }

    #[pyo3(signature = (title = "diagram"))]
    fn to_dot(&self, title: &str) -> String {
        dot::to_dot(&self.inner, &self.structure, title)
    }

    fn __repr__(&self) -> String {
        format!("Diagram({} -> {}, {} boxes)", self.dom().join(" "), self.cod().join(" "), self.inner.boxes().len())
    }
}

/// A column-stochastic matrix: rows are codomain outcomes, columns domain outcomes.
#[pyclass(frozen, module = "ctk")]
struct Matrix {
    inner: ctk_core::StochMatrix,
}

#[pymethods]
impl Matrix {
    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    #[getter]
    fn row_labels(&self) -> Vec<String> {
        ctk_core::stoch::product_labels(self.inner.cod())
    }

    #[getter]
    fn column_labels(&self) -> Vec<String> {
        ctk_core::stoch::product_labels(self.inner.dom())
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    fn __str__(&self) -> String {
        render_matrix(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Matrix({:?})", self.inner.to_rows())
    }
}

/// A stochastic causal model.
#[pyclass(frozen, module = "ctk")]
struct Model {
    inner: core_model::StochCausalModel,
}

impl Model {
    fn subset(&self, names: &[String]) -> PyResult<ctk_core::VariableSubset> {
        self.inner.structure().subset(names).map_err(err)
    }
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Model { inner: formats::load_model(Path::new(path)).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ModelFile::from_json_str(text).map_err(err)?;
        Ok(Model { inner: file.to_model(Path::new(".")).map_err(err)? })
    }

    /// One of the bundled examples: food, simpson-mediator, simpson-confounder.
    #[staticmethod]
    fn demo(name: &str) -> PyResult<Self> {
        Ok(Model { inner: demos::model(name).map_err(err)? })
    }

    fn to_json(&self) -> String {
        ModelFile::from_model(&self.inner).to_json()
    }

    #[getter]
    fn structure(&self) -> CausalStructure {
        CausalStructure { inner: self.inner.structure().clone() }
    }

    fn outcomes(&self, name: &str) -> PyResult<Vec<String>> {
        let v = self.inner.structure().index_of(name).map_err(err)?;
        Ok(self.inner.space(v).outcomes().to_vec())
    }

    fn evaluate(&self, diagram: &Diagram) -> PyResult<Matrix> {
        if &diagram.structure != self.inner.structure() {
            return Err(CtkError::new_err("diagram is over a different structure"));
        }
        Ok(Matrix { inner: self.inner.evaluate(&diagram.inner).map_err(err)? })
    }

    #[pyo3(signature = (targets, given = Vec::new()))]
    fn causal_conditional(&self, targets: Vec<String>, given: Vec<String>) -> PyResult<Matrix> {
        Ok(Matrix { inner: self.inner.causal_conditional(&self.subset(&given)?, &self.subset(&targets)?).map_err(err)? })
    }

    /// `P(targets | given)` computed from the joint prior, in the order given.
    #[pyo3(signature = (targets, given = Vec::new()))]
    fn conditional_from_joint(&self, targets: Vec<String>, given: Vec<String>) -> PyResult<Matrix> {
        let g = self.inner.structure();
        let idx = |ns: &[String]| ns.iter().map(|n| g.index_of(n)).collect::<Result<Vec<_>, _>>().map_err(err);
        let joint = self.inner.joint_prior().map_err(err)?;
        Ok(Matrix { inner: joint.conditional(&idx(&targets)?, &idx(&given)?).map_err(err)?.matrix })
    }

    fn joint_prior(&self) -> PyResult<Matrix> {
        Ok(Matrix { inner: self.inner.joint_prior().map_err(err)?.as_state() })
    }

    fn marginal_prior(&self, names: Vec<String>) -> PyResult<Matrix> {
        Ok(Matrix { inner: self.inner.marginal_prior(&self.subset(&names)?).map_err(err)?.as_state() })
    }

    /// Whether this model's joint prior is compatible with `structure`.
    #[pyo3(signature = (structure = None, tolerance = TOLERANCE))]
    fn is_compatible_with(&self, structure: Option<&CausalStructure>, tolerance: f64) -> PyResult<bool> {
        let g = structure.map_or_else(|| self.inner.structure().clone(), |s| s.inner.clone());
        let joint = self.inner.joint_prior().map_err(err)?;
        Ok(core_model::check_compatibility(&g, &joint, tolerance).map_err(err)?.compatible)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.structure())
    }
}

/// Loads a morphism file and reports `(valid, kind or failure)`.
#[pyfunction]
#[pyo3(signature = (path, tolerance = TOLERANCE))]
fn check_morphism(path: &str, tolerance: f64) -> PyResult<(bool, String)> {
    let phi = formats::load_morphism(Path::new(path)).map_err(err)?;
    let g = phi.source().structure();
    Ok(match phi.validate(tolerance) {
        MorphismVerdict::Valid => {
            let kind = match phi.classify(tolerance).map_err(err)?.kind {
                MorphismKind::Isomorphism => "isomorphism",
                MorphismKind::Embedding => "embedding",
                MorphismKind::CoarseGraining => "coarse graining",
                MorphismKind::General => "general",
            };
            (true, kind.to_string())
        }
        MorphismVerdict::NotDeterministic { variable } => (false, format!("`{}` is not deterministic", g.name(variable))),
        MorphismVerdict::SquareFails { variable, deviation } => {
            (false, format!("square for `{}` fails by {deviation:.6}", g.name(variable)))
        }
    })
}

/// Runs a bundled example; returns whether every value matched and the report text.
#[pyfunction]
#[pyo3(signature = (name, tolerance = TOLERANCE))]
fn run_demo(name: &str, tolerance: f64) -> PyResult<(bool, String)> {
    let report = demos::run(name, tolerance).map_err(err)?;
    Ok((report.passed(), report.to_string()))
}

#[pymodule]
fn ctk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CtkError", m.py().get_type::<CtkError>())?;
    m.add("TOLERANCE", TOLERANCE)?;
    m.add("DEMOS", demos::NAMES.to_vec())?;
    m.add_class::<CausalStructure>()?;
    m.add_class::<Diagram>()?;
    m.add_class::<Matrix>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(check_morphism, m)?)?;
    m.add_function(wrap_pyfunction!(run_demo, m)?)?;
    Ok(())
}
