use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ctk_core::formats::{self, describe_flat, describe_tuple, render_matrix, ModelFile};
use ctk_core::model::{check_compatibility, MorphismKind, MorphismVerdict};
use ctk_core::{demos, dot, CausalStructure, Error, Expression, FinSpace, VariableSubset, TOLERANCE};

#[derive(Parser)]
#[command(name = "ctk", version, about = "Causal conditionals, compatibility checks and model morphisms over DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    /// Evaluate the causal conditional diagram.
    Diagram,
    /// Condition the joint prior.
    Joint,
}

#[derive(Subcommand)]
enum Command {
    /// Check a structure (or model) file and print its ancestral ordering.
    Validate {
        structure: PathBuf,
        /// Also load and check a model file.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Decide whether U and T are d-separated by S.
    Dsep {
        structure: PathBuf,
        u: String,
        t: String,
        #[arg(long, default_value = "")]
        given: String,
        /// Print an unblocked path when one exists.
        #[arg(long)]
        path: bool,
    },
    /// Print the conditional of TARGETS given --given.
    Conditional {
        model: PathBuf,
        targets: String,
        #[arg(long, default_value = "")]
        given: String,
        #[arg(long, value_enum, default_value_t = SourceKind::Diagram)]
        source: SourceKind,
    },
    /// Check whether a joint distribution (or a model's joint prior) is compatible with a structure.
    CheckCompat { structure: PathBuf, data: PathBuf },
    /// Validate and classify a model morphism.
    CheckMorphism { morphism: PathBuf },
    /// Print an expression such as "[D E || B]" as a DOT graph.
    Render { file: PathBuf, expression: String },
    /// Run a bundled example and compare it with its known values.
    Demo {
        #[arg(value_parser = demos::NAMES)]
        name: String,
        /// Print the bundled model file instead.
        #[arg(long)]
        print_model: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Expectation(String),
    Io(String),
    Invariant(String),
    Name(String),
    Expression(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Expectation(_) => 1,
            Failure::Io(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Name(_) => 4,
            Failure::Expression(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Expectation(m) | Failure::Io(m) | Failure::Invariant(m) | Failure::Name(m) | Failure::Expression(m) => m,
        }
    }
}

/// Errors while reading input files.
fn load<T>(r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io { .. } | Error::Parse(_) => Failure::Io(e.to_string()),
        _ => Failure::Invariant(e.to_string()),
    })
}

/// Errors caused by command-line arguments.
fn arg<T>(r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::UnknownVertex(_) | Error::UnknownFactor(_) => Failure::Name(e.to_string()),
        Error::OverlappingSubsets(_) | Error::SubsetsNotDisjoint | Error::DisjointnessViolated | Error::Expression(_) => {
            Failure::Expression(e.to_string())
        }
        _ => Failure::Invariant(e.to_string()),
    })
}

fn tolerance() -> Result<f64, Failure> {
    match std::env::var("CTK_TOLERANCE") {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
            _ => Err(Failure::Io(format!("CTK_TOLERANCE must be a non-negative number, got `{s}`"))),
        },
        Err(_) => Ok(TOLERANCE),
    }
}

fn name_list(s: &str) -> Vec<String> {
    s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(String::from).collect()
}

fn subset(g: &CausalStructure, s: &str) -> Result<VariableSubset, Failure> {
    arg(g.subset(&name_list(s)))
}

fn format_path(g: &CausalStructure, path: &[usize]) -> String {
    let mut out = g.name(path[0]).to_string();
    for w in path.windows(2) {
        let arrow = if g.arrows().contains(&(w[0], w[1])) { " -> " } else { " <- " };
        out.push_str(arrow);
        out.push_str(g.name(w[1]));
    }
    out
}

fn validate(structure: &Path, model: Option<&Path>) -> Result<(), Failure> {
    let g = load(formats::load_structure_of(structure))?;
    let order: Vec<&str> = g.ancestral_ordering().into_iter().map(|v| g.name(v)).collect();
    println!("valid; order {}", order.join(","));
    println!("vertices: {}", g.len());
    let arrows: Vec<String> = g.arrows().iter().map(|&(s, t)| format!("{}->{}", g.name(s), g.name(t))).collect();
    println!("arrows: {} ({})", arrows.len(), arrows.join(", "));
    if let Some(path) = model {
        let m = load(formats::load_model(path))?;
        if m.structure() != &g {
            return Err(Failure::Invariant(format!("model {} is over a different structure", path.display())));
        }
        let sizes: Vec<String> = (0..g.len()).map(|v| format!("{}:{}", g.name(v), m.space(v).size())).collect();
        println!("model: valid; outcomes {}", sizes.join(" "));
    }
    Ok(())
}

fn dsep(structure: &Path, u: &str, t: &str, given: &str, show_path: bool) -> Result<(), Failure> {
    let g = load(formats::load_structure_of(structure))?;
    let (u, t, s) = (subset(&g, u)?, subset(&g, t)?, subset(&g, given)?);
    let separated = arg(g.d_separated(&u, &t, &s))?;
    let show = |w: &VariableSubset| if w.is_empty() { "∅".to_string() } else { g.format_subset(w) };
    let label = format!("{} and {} given {}", show(&u), show(&t), show(&s));
    if separated {
        println!("separated: {label}");
    } else {
        println!("not separated: {label}");
        if show_path {
            if let Some(p) = arg(g.find_active_path(&u, &t, &s))? {
                println!("path: {}", format_path(&g, &p));
            }
        }
    }
    Ok(())
}

fn conditional(model: &Path, targets: &str, given: &str, source: SourceKind) -> Result<(), Failure> {
    let m = load(formats::load_model(model))?;
    let g = m.structure();
    let (w_prime, w) = (subset(g, targets)?, subset(g, given)?);
    if w_prime.is_empty() {
        return Err(Failure::Expression("no target variables".into()));
    }
    let title = format!("[{} || {}]", names_of(g, &w_prime), names_of(g, &w));
    match source {
        SourceKind::Diagram => {
            let matrix = arg(m.causal_conditional(&w, &w_prime))?;
            println!("{title} from the causal conditional diagram");
            print!("{}", render_matrix(&matrix));
        }
        SourceKind::Joint => {
            let joint = load(m.joint_prior())?;
            let c = arg(joint.conditional(w_prime.as_slice(), w.as_slice()))?;
            println!("{title} from the joint prior");
            print!("{}", render_matrix(&c.matrix));
            for col in c.zero_mass_columns {
                println!("note: {} has zero mass; its column is uniform", describe_flat(c.matrix.dom(), col));
            }
        }
    }
    Ok(())
}

fn names_of(g: &CausalStructure, w: &VariableSubset) -> String {
    w.iter().map(|v| g.name(v)).collect::<Vec<_>>().join(" ")
}

fn check_compat(structure: &Path, data: &Path) -> Result<(), Failure> {
    let tol = tolerance()?;
    let g = load(formats::load_structure_of(structure))?;
    let p = load(formats::load_distribution(data))?;
    let verdict = load(check_compatibility(&g, &p, tol))?;
    if verdict.compatible {
        println!("compatible with {g} (max deviation {:.1e})", verdict.max_deviation);
        for (v, c) in verdict.conditionals.iter().enumerate() {
            println!();
            let pa: Vec<&str> = g.parents(v).unwrap().iter().map(|&u| g.name(u)).collect();
            if pa.is_empty() {
                println!("P({})", g.name(v));
            } else {
                println!("P({} | {})", g.name(v), pa.join(" "));
            }
            print!("{}", render_matrix(c));
        }
    } else {
        let x = verdict.offending.expect("incompatible verdicts carry a tuple");
        let sizes: Vec<usize> = p.factors().iter().map(FinSpace::size).collect();
        let product: f64 = (0..g.len())
            .map(|v| {
                let pa = g.parents(v).unwrap();
                let col = pa.iter().fold(0, |acc, &u| acc * sizes[u] + x[u]);
                verdict.conditionals[v].get(x[v], col)
            })
            .product();
        println!("incompatible with {g}");
        println!(
            "offending tuple: {} (P = {:.6}, product of conditionals = {:.6})",
            describe_tuple(p.factors(), &x),
            p.prob(&x),
            product
        );
    }
    Ok(())
}

fn check_morphism(path: &Path) -> Result<(), Failure> {
    let tol = tolerance()?;
    let phi = load(formats::load_morphism(path))?;
    let g = phi.source().structure();
    match phi.validate(tol) {
        MorphismVerdict::Valid => {}
        MorphismVerdict::NotDeterministic { variable } => {
            println!("invalid: component for `{}` is not deterministic", g.name(variable));
            return Ok(());
        }
        MorphismVerdict::SquareFails { variable, deviation } => {
            let what = if g.parents(variable).unwrap().is_empty() { "prior triangle" } else { "mechanism square" };
            println!("invalid: {what} for `{}` fails (max deviation {deviation:.6})", g.name(variable));
            return Ok(());
        }
    }
    let class = load(phi.classify(tol))?;
    let kind = match class.kind {
        MorphismKind::Isomorphism => "isomorphism",
        MorphismKind::Embedding => "embedding",
        MorphismKind::CoarseGraining => "coarse graining",
        MorphismKind::General => "general (coarse graining then embedding)",
    };
    println!("valid");
    println!("kind: {kind}");
    println!("factorization:");
    for v in 0..g.len() {
        let show = |s: &FinSpace| format!("{{{}}}", s.outcomes().join(","));
        println!(
            "  {}: {} -> {} -> {}",
            g.name(v),
            show(phi.source().space(v)),
            show(class.intermediate.space(v)),
            show(phi.target().space(v))
        );
    }
    Ok(())
}

fn render(file: &Path, expression: &str) -> Result<(), Failure> {
    let g = load(formats::load_structure_of(file))?;
    let expr: Expression = arg(expression.parse())?;
    let d = arg(expr.to_diagram(&g))?;
    print!("{}", dot::to_dot(&d, &g, expression.trim()));
    Ok(())
}

fn demo(name: &str, print_model: bool) -> Result<(), Failure> {
    if print_model {
        let m = load(demos::model(name))?;
        println!("{}", ModelFile::from_model(&m).to_json());
        return Ok(());
    }
    let report = load(demos::run(name, tolerance()?))?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Expectation(format!("demo {name} missed an expected value")))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { structure, model } => validate(&structure, model.as_deref()),
        Command::Dsep { structure, u, t, given, path } => dsep(&structure, &u, &t, &given, path),
        Command::Conditional { model, targets, given, source } => conditional(&model, &targets, &given, source),
        Command::CheckCompat { structure, data } => check_compat(&structure, &data),
        Command::CheckMorphism { morphism } => check_morphism(&morphism),
        Command::Render { file, expression } => render(&file, &expression),
        Command::Demo { name, print_model } => demo(&name, print_model),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
