//! Bundled worked examples with their known values.

use std::fmt;
use std::path::Path;

use crate::diagram::{Diagram, TheoryObject};
use crate::error::{Error, Result};
use crate::formats::{render_matrix, ModelFile};
use crate::model::{check_compatibility, StochCausalModel};
use crate::stoch::StochMatrix;
use crate::structure::{CausalStructure, VariableSubset};

pub const NAMES: [&str; 3] = ["food", "simpson-mediator", "simpson-confounder"];

/// The JSON model file of a bundled demo.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "food" => Some(include_str!("../data/food.json")),
        "simpson-mediator" => Some(include_str!("../data/simpson-mediator.json")),
        "simpson-confounder" => Some(include_str!("../data/simpson-confounder.json")),
        _ => None,
    }
}

pub fn model(name: &str) -> Result<StochCausalModel> {
    let text = source(name).ok_or_else(|| Error::Parse(format!("no demo named `{name}`")))?;
    ModelFile::from_json_str(text)?.to_model(Path::new("."))
}

/// One compared quantity.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub rendered: String,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "demo {}", self.name)?;
        for c in &self.checks {
            writeln!(f)?;
            writeln!(f, "{}", c.label)?;
            write!(f, "{}", c.rendered)?;
            writeln!(f, "{} (max deviation {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.deviation)?;
        }
        writeln!(f)?;
        write!(f, "{}", if self.passed() { "all checks passed" } else { "some checks FAILED" })
    }
}

fn compare(label: &str, actual: &StochMatrix, expected: &[Vec<f64>], tol: f64) -> Check {
    let rows = actual.to_rows();
    let deviation = if rows.len() == expected.len() && rows.iter().zip(expected).all(|(a, e)| a.len() == e.len()) {
        rows.iter().flatten().zip(expected.iter().flatten()).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Check { label: label.to_string(), rendered: render_matrix(actual), deviation, pass: deviation <= tol }
}

fn column(v: &[f64]) -> Vec<Vec<f64>> {
    v.iter().map(|&x| vec![x]).collect()
}

/// `[R|T B] ∘ (id_T ⊗ ([B|T] ∘ [T]))`: treatment still drives recovery
/// directly, but the mediator follows its population distribution.
pub fn nullified_mediator(g: &CausalStructure) -> Result<Diagram> {
    let (t, b, r) = (g.index_of("T")?, g.index_of("B")?, g.index_of("R")?);
    let b_prior = Diagram::seq(&Diagram::mechanism(g, t)?, &Diagram::mechanism(g, b)?)?;
    let inputs = Diagram::par(&Diagram::identity(&TheoryObject::atom(t)), &b_prior);
    Diagram::seq(&inputs, &Diagram::mechanism(g, r)?)
}

pub fn run(name: &str, tol: f64) -> Result<Report> {
    let m = model(name)?;
    let g = m.structure().clone();
    let idx = |n: &str| g.index_of(n);
    let mut checks = Vec::new();
    match name {
        "food" => {
            let (a, b, c) = (idx("A")?, idx("B")?, idx("C")?);
            let joint = m.joint_prior()?;
            let prior = |w: &[usize]| -> Result<StochMatrix> { Ok(m.marginal_prior(&VariableSubset::new(w.iter().copied()))?.as_state()) };
            checks.push(compare("P_A", &prior(&[a])?, &column(&[0.6, 0.4]), tol));
            checks.push(compare("P_B", &prior(&[b])?, &column(&[0.4, 0.6]), tol));
            checks.push(compare("P_AB", &prior(&[a, b])?, &column(&[0.24, 0.36, 0.16, 0.24]), tol));
            checks.push(compare(
                "P_C|AB (from the joint)",
                &joint.conditional(&[c], &[a, b])?.matrix,
                &[vec![1.0, 0.5, 0.375, 0.0], vec![0.0, 0.5, 0.625, 1.0]],
                tol,
            ));
            let ab_c = joint.conditional(&[a, b], &[c])?.matrix;
            let at_c = StochMatrix::state(ab_c.cod().to_vec(), &ab_c.column(0))?;
            checks.push(compare("P_AB|C at C=c", &at_c, &column(&[0.5, 0.375, 0.125, 0.0]), tol));
            checks.push(compare(
                "joint P_ABC",
                &joint.as_state(),
                &column(&[0.24, 0.0, 0.18, 0.18, 0.06, 0.10, 0.0, 0.24]),
                tol,
            ));
            let verdict = check_compatibility(&g, &joint, tol)?;
            checks.push(Check {
                label: format!("compatibility with {g}"),
                rendered: format!("{}\n", if verdict.compatible { "compatible" } else { "incompatible" }),
                deviation: verdict.max_deviation,
                pass: verdict.compatible,
            });
        }
        "simpson-mediator" => {
            let (t, r) = (idx("T")?, idx("R")?);
            let rt = m.causal_conditional(&VariableSubset::singleton(t), &VariableSubset::singleton(r))?;
            checks.push(compare("[R||T]", &rt, &[vec![0.39, 0.42], vec![0.61, 0.58]], tol));
            let nullified = m.evaluate(&nullified_mediator(&g)?)?;
            checks.push(compare("[R|T B] with B at its population rate", &nullified, &[vec![0.51, 0.34], vec![0.49, 0.66]], tol));
        }
        "simpson-confounder" => {
            let (t, r) = (idx("T")?, idx("R")?);
            let rt = m.causal_conditional(&VariableSubset::singleton(t), &VariableSubset::singleton(r))?;
            checks.push(compare("[R||T]", &rt, &[vec![0.51, 0.34], vec![0.49, 0.66]], tol));
        }
        _ => unreachable!("model() rejects unknown names"),
    }
    Ok(Report { name: name.to_string(), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::TOLERANCE;

    #[test]
    fn all_demos_pass() {
        for name in NAMES {
            let report = run(name, TOLERANCE).unwrap();
            assert!(report.passed(), "{report}");
        }
        assert!(run("nope", TOLERANCE).is_err());
    }

    #[test]
    fn nullified_shape() {
        let g = model("simpson-mediator").unwrap().structure().clone();
        let d = nullified_mediator(&g).unwrap();
        assert_eq!(d.dom_labels(), &[0]);
        assert_eq!(d.cod_labels(), &[2]);
        assert_eq!(d.census().len(), 3);
    }
}
