//! JSON file formats and plain-text matrix rendering.
//!
//! Mechanism tables hold one probability row per parent configuration,
//! row-major over the parents in canonical order (last parent fastest).
//! Joint tables are flat, row-major over the listed variables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{ModelMorphism, StochCausalModel};
use crate::stoch::{product_labels, unflatten, FinSpace, JointDistribution, StochMatrix, TOLERANCE};
use crate::structure::CausalStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub variables: Vec<String>,
    pub arrows: Vec<(String, String)>,
}

/// Either a path (relative to the referring file) or an inline document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reference<T> {
    Path(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub structure: Reference<StructureFile>,
    pub outcomes: IndexMap<String, Vec<String>>,
    pub mechanisms: IndexMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismFile {
    pub source: Reference<ModelFile>,
    pub target: Reference<ModelFile>,
    /// Per variable, source outcome label to target outcome label.
    pub maps: IndexMap<String, IndexMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub variables: IndexMap<String, Vec<String>>,
    pub probabilities: Vec<f64>,
}

/// Any of the supported documents, told apart by their keys.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Structure(StructureFile),
    Model(ModelFile),
    Morphism(MorphismFile),
    Joint(JointFile),
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

fn read_value(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e))
}

fn from_value<T: DeserializeOwned>(path: &Path, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| parse_error(path, e))
}

pub fn read_document(path: &Path) -> Result<Document> {
    let v = read_value(path)?;
    let has = |k: &str| v.get(k).is_some();
    if has("mechanisms") {
        Ok(Document::Model(from_value(path, v)?))
    } else if has("maps") {
        Ok(Document::Morphism(from_value(path, v)?))
    } else if has("probabilities") {
        Ok(Document::Joint(from_value(path, v)?))
    } else if has("arrows") {
        Ok(Document::Structure(from_value(path, v)?))
    } else {
        Err(parse_error(path, "not a structure, model, morphism or joint file"))
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl StructureFile {
    pub fn from_structure(g: &CausalStructure) -> Self {
        StructureFile {
            variables: g.names().to_vec(),
            arrows: g.arrows().iter().map(|&(s, t)| (g.name(s).to_string(), g.name(t).to_string())).collect(),
        }
    }

    pub fn to_structure(&self) -> Result<CausalStructure> {
        CausalStructure::build(&self.variables, &self.arrows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

impl Reference<StructureFile> {
    pub fn resolve(&self, base: &Path) -> Result<CausalStructure> {
        match self {
            Reference::Inline(s) => s.to_structure(),
            Reference::Path(p) => load_structure(&base.join(p)),
        }
    }
}

impl Reference<ModelFile> {
    pub fn resolve(&self, base: &Path) -> Result<StochCausalModel> {
        match self {
            Reference::Inline(m) => m.to_model(base),
            Reference::Path(p) => load_model(&base.join(p)),
        }
    }
}

fn keys_match<V>(g: &CausalStructure, map: &IndexMap<String, V>, what: &str) -> Result<()> {
    if let Some(k) = map.keys().find(|k| g.index_of(k).is_err()) {
        return Err(Error::UnknownVertex(k.clone()));
    }
    if let Some(v) = g.names().iter().find(|v| !map.contains_key(*v)) {
        return Err(Error::ModelMismatch(format!("no {what} for `{v}`")));
    }
    Ok(())
}

impl ModelFile {
    pub fn from_model(m: &StochCausalModel) -> Self {
        let g = m.structure();
        let tables = m.tables();
        ModelFile {
            structure: Reference::Inline(StructureFile::from_structure(g)),
            outcomes: (0..g.len()).map(|v| (g.name(v).to_string(), m.space(v).outcomes().to_vec())).collect(),
            mechanisms: tables.into_iter().enumerate().map(|(v, t)| (g.name(v).to_string(), t)).collect(),
        }
    }

    /// Builds the model; `base` resolves a structure given by path.
    pub fn to_model(&self, base: &Path) -> Result<StochCausalModel> {
        let g = self.structure.resolve(base)?;
        keys_match(&g, &self.outcomes, "outcomes")?;
        keys_match(&g, &self.mechanisms, "mechanism table")?;
        let spaces: Vec<FinSpace> =
            g.names().iter().map(|v| FinSpace::new(v.as_str(), self.outcomes[v].iter().cloned())).collect::<Result<_>>()?;
        let mut tables = Vec::with_capacity(g.len());
        for (v, name) in g.names().iter().enumerate() {
            let pa: Vec<FinSpace> = g.parents(v)?.iter().map(|&p| spaces[p].clone()).collect();
            let configs = product_labels(&pa);
            let rows = &self.mechanisms[name];
            if rows.len() != configs.len() {
                return Err(Error::ShapeMismatch(format!(
                    "mechanism `{name}` has {} rows, its parents have {} configurations",
                    rows.len(),
                    configs.len()
                )));
            }
            for (i, row) in rows.iter().enumerate() {
                let at = if pa.is_empty() { String::new() } else { format!(" ({})", configs[i]) };
                if row.len() != spaces[v].size() {
                    return Err(Error::ShapeMismatch(format!(
                        "mechanism `{name}` row {i}{at} has {} entries for {} outcomes",
                        row.len(),
                        spaces[v].size()
                    )));
                }
                let total: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > TOLERANCE {
                    return Err(Error::NotStochastic(format!("mechanism `{name}` row {i}{at} sums to {total}")));
                }
            }
            tables.push(rows.clone());
        }
        StochCausalModel::from_tables(g, spaces, &tables)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl JointFile {
    pub fn from_joint(p: &JointDistribution) -> Self {
        JointFile {
            variables: p.factors().iter().map(|f| (f.name().to_string(), f.outcomes().to_vec())).collect(),
            probabilities: p.probs().to_vec(),
        }
    }

    pub fn to_joint(&self) -> Result<JointDistribution> {
        let factors =
            self.variables.iter().map(|(name, outcomes)| FinSpace::new(name.as_str(), outcomes.iter().cloned())).collect::<Result<_>>()?;
        JointDistribution::new(factors, self.probabilities.clone())
    }
}

impl MorphismFile {
    pub fn to_morphism(&self, base: &Path) -> Result<ModelMorphism> {
        let source = self.source.resolve(base)?;
        let target = self.target.resolve(base)?;
        if source.structure() != target.structure() {
            return Err(Error::StructureMismatch);
        }
        let g = source.structure();
        keys_match(g, &self.maps, "outcome map")?;
        let maps = (0..g.len())
            .map(|v| {
                let map = &self.maps[g.name(v)];
                let (from, to) = (source.space(v), target.space(v));
                if let Some(k) = map.keys().find(|k| from.index_of(k).is_none()) {
                    return Err(Error::InvalidMorphism(format!("`{k}` is not an outcome of `{}`", g.name(v))));
                }
                from.outcomes()
                    .iter()
                    .map(|x| {
                        let y = map.get(x).ok_or_else(|| {
                            Error::InvalidMorphism(format!("map for `{}` does not cover `{x}`", g.name(v)))
                        })?;
                        to.index_of(y).ok_or_else(|| {
                            Error::InvalidMorphism(format!("`{y}` is not an outcome of target `{}`", g.name(v)))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ModelMorphism::from_maps(source, target, &maps)
    }
}

pub fn load_structure(path: &Path) -> Result<CausalStructure> {
    from_value::<StructureFile>(path, read_value(path)?)?.to_structure()
}

pub fn load_model(path: &Path) -> Result<StochCausalModel> {
    from_value::<ModelFile>(path, read_value(path)?)?.to_model(&base_dir(path))
}

pub fn load_morphism(path: &Path) -> Result<ModelMorphism> {
    from_value::<MorphismFile>(path, read_value(path)?)?.to_morphism(&base_dir(path))
}

pub fn load_joint(path: &Path) -> Result<JointDistribution> {
    from_value::<JointFile>(path, read_value(path)?)?.to_joint()
}

/// A structure file, or the structure of a model file.
pub fn load_structure_of(path: &Path) -> Result<CausalStructure> {
    match read_document(path)? {
        Document::Structure(s) => s.to_structure(),
        Document::Model(m) => Ok(m.to_model(&base_dir(path))?.structure().clone()),
        _ => Err(parse_error(path, "expected a structure or model file")),
    }
}

/// A joint file, or the joint prior of a model file.
pub fn load_distribution(path: &Path) -> Result<JointDistribution> {
    match read_document(path)? {
        Document::Joint(j) => j.to_joint(),
        Document::Model(m) => m.to_model(&base_dir(path))?.joint_prior(),
        _ => Err(parse_error(path, "expected a joint or model file")),
    }
}

fn names(spaces: &[FinSpace]) -> String {
    spaces.iter().map(FinSpace::name).collect::<Vec<_>>().join(",")
}

/// Rows are codomain outcomes, columns domain outcomes, six decimals.
pub fn render_matrix(m: &StochMatrix) -> String {
    let corner = if m.dom().is_empty() { names(m.cod()) } else { format!("{} \\ {}", names(m.cod()), names(m.dom())) };
    let col_labels = if m.dom().is_empty() { vec!["P".to_string()] } else { product_labels(m.dom()) };
    let row_labels = product_labels(m.cod());
    let first = row_labels.iter().map(|l| l.chars().count()).chain([corner.chars().count()]).max().unwrap_or(0);
    let width = col_labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(8);

    let mut out = format!("{corner:<first$}");
    for l in &col_labels {
        write!(out, "  {l:>width$}").unwrap();
    }
    out.push('\n');
    for (i, l) in row_labels.iter().enumerate() {
        write!(out, "{l:<first$}").unwrap();
        for j in 0..m.cols() {
            write!(out, "  {:>width$.6}", m.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Formats an outcome tuple of `spaces` as `A=a, B=b`.
pub fn describe_tuple(spaces: &[FinSpace], idx: &[usize]) -> String {
    spaces.iter().zip(idx).map(|(s, &i)| format!("{}={}", s.name(), s.outcomes()[i])).collect::<Vec<_>>().join(", ")
}

/// Formats the flat outcome `flat` of `spaces`.
pub fn describe_flat(spaces: &[FinSpace], flat: usize) -> String {
    let sizes: Vec<usize> = spaces.iter().map(FinSpace::size).collect();
    describe_tuple(spaces, &unflatten(&sizes, flat))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOOD: &str = include_str!("../data/food.json");

    #[test]
    fn model_round_trip() {
        let file: ModelFile = serde_json::from_str(FOOD).unwrap();
        let m = file.to_model(Path::new(".")).unwrap();
        let again: ModelFile = serde_json::from_str(&ModelFile::from_model(&m).to_json()).unwrap();
        assert_eq!(again.to_model(Path::new(".")).unwrap(), m);
    }

    #[test]
    fn bad_row_is_named() {
        let mut file: ModelFile = serde_json::from_str(FOOD).unwrap();
        file.mechanisms["C"][1] = vec![0.5, 0.4];
        let err = file.to_model(Path::new(".")).unwrap_err();
        assert_eq!(err, Error::NotStochastic("mechanism `C` row 1 (a,¬b) sums to 0.9".into()));
        file.mechanisms.shift_remove("B");
        assert!(matches!(file.to_model(Path::new(".")), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn matrix_layout() {
        let a = FinSpace::new("T", ["t", "¬t"]).unwrap();
        let r = FinSpace::new("R", ["r", "¬r"]).unwrap();
        let m = StochMatrix::from_rows(vec![a], vec![r], &[vec![0.39, 0.42], vec![0.61, 0.58]]).unwrap();
        let text = render_matrix(&m);
        assert_eq!(text, "R \\ T         t        ¬t\nr      0.390000  0.420000\n¬r     0.610000  0.580000\n");
    }
}
