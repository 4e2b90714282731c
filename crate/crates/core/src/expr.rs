//! Textual diagram expressions.
//!
//! `[D E || B]` is the causal conditional of `D E` given `B`; an empty right
//! side (`[A ||]`) is a prior. `id(A B)` is an identity and `id()` the unit.
//! Names are separated by whitespace or commas.

use crate::diagram::{Diagram, TheoryObject};
use crate::error::{Error, Result};
use crate::structure::{CausalStructure, VariableSubset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expression {
    Conditional { targets: Vec<String>, givens: Vec<String> },
    Identity(Vec<String>),
}

fn names(s: &str) -> Result<Vec<String>> {
    let out: Vec<String> = s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(String::from).collect();
    if let Some(bad) = out.iter().find(|t| t.contains(['[', ']', '|', '(', ')'])) {
        return Err(Error::Expression(format!("bad name `{bad}`")));
    }
    Ok(out)
}

impl std::str::FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("id(").and_then(|r| r.strip_suffix(')')) {
            return Ok(Expression::Identity(names(inner)?));
        }
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::Expression(format!("expected `[targets || givens]` or `id(...)`, got `{s}`")))?;
        let (left, right) =
            inner.split_once("||").ok_or_else(|| Error::Expression(format!("missing `||` in `{s}`")))?;
        let targets = names(left)?;
        if targets.is_empty() {
            return Err(Error::Expression(format!("no targets in `{s}`")));
        }
        Ok(Expression::Conditional { targets, givens: names(right)? })
    }
}

fn subset(g: &CausalStructure, names: &[String]) -> Result<VariableSubset> {
    let w = g.subset(names)?;
    if w.len() != names.len() {
        return Err(Error::Expression(format!("repeated name in {names:?}")));
    }
    Ok(w)
}

impl Expression {
    pub fn to_diagram(&self, g: &CausalStructure) -> Result<Diagram> {
        match self {
            Expression::Conditional { targets, givens } => {
                Diagram::causal_conditional(g, &subset(g, givens)?, &subset(g, targets)?)
            }
            Expression::Identity(ns) => {
                let labels = ns.iter().map(|n| g.index_of(n)).collect::<Result<Vec<_>>>()?;
                Ok(Diagram::identity(&TheoryObject::from_labels(labels)))
            }
        }
    }
}
