//! Analysis pattern sheets and the catalog that holds them.
//!
//! Each sheet has three parts: an interface (symbol, name, classification,
//! context, problem, strength), a realization (process and model solution)
//! and relationships. `requires` edges are hard: they must resolve inside
//! the catalog and they order the analysis stages. `uses` edges are soft
//! references that may point outside the catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::report::ReportTemplateId;

pub const DIAGNOSIS: &str = "DiagnosisSID";
pub const IDENTIFICATION: &str = "RecenseBesomsSID";
pub const ASSOC_STRATEGIC_TACTICAL: &str = "AssocieButStra-ButTact";
pub const ASSOC_TACTICAL_INFORMATIONAL: &str = "AssocieButTact-ButInfo";
pub const FORMALIZATION: &str = "FormaliseButInfo";

/// The five analysis patterns, in dependency order.
pub const BUILTIN_SYMBOLS: [&str; 5] = [
    DIAGNOSIS,
    IDENTIFICATION,
    ASSOC_STRATEGIC_TACTICAL,
    ASSOC_TACTICAL_INFORMATIONAL,
    FORMALIZATION,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub symbol: String,
    pub name: String,
    pub classification: Vec<String>,
    pub context: String,
    pub problem: String,
    pub strength: String,
    pub process_solution: Vec<String>,
    pub model_solution: ReportTemplateId,
    pub uses: Vec<String>,
    pub requires: Vec<String>,
}

impl Pattern {
    pub fn classification_label(&self) -> String {
        self.classification.join(" ^ ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    pub name: String,
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("C001: malformed catalog at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("C002: pattern `{symbol}` is defined more than once")]
    DuplicateSymbol { symbol: String },
    #[error("C003: pattern `{symbol}` requires unknown pattern `{missing}`")]
    UnresolvedRequires { symbol: String, missing: String },
    #[error("C004: requires cycle {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

impl CatalogError {
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::Malformed { .. } => "C001",
            CatalogError::DuplicateSymbol { .. } => "C002",
            CatalogError::UnresolvedRequires { .. } => "C003",
            CatalogError::Cycle(_) => "C004",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("requires cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
}

impl Catalog {
    /// Builds a catalog, enforcing symbol uniqueness, `requires`
    /// resolution and acyclicity.
    pub fn new(name: impl Into<String>, patterns: Vec<Pattern>) -> Result<Catalog, CatalogError> {
        let catalog = Catalog {
            name: name.into(),
            patterns,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut seen = BTreeSet::new();
        for p in &self.patterns {
            check_fields(p)?;
            if !seen.insert(p.symbol.as_str()) {
                return Err(CatalogError::DuplicateSymbol {
                    symbol: p.symbol.clone(),
                });
            }
        }
        for p in &self.patterns {
            if let Some(missing) = p.requires.iter().find(|r| !seen.contains(r.as_str())) {
                return Err(CatalogError::UnresolvedRequires {
                    symbol: p.symbol.clone(),
                    missing: missing.clone(),
                });
            }
        }
        let all: Vec<&str> = self.patterns.iter().map(|p| p.symbol.as_str()).collect();
        match resolve_order(self, &all) {
            Err(ResolveError::CycleDetected(cycle)) => Err(CatalogError::Cycle(cycle)),
            _ => Ok(()),
        }
    }

    pub fn get(&self, symbol: &str) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.symbol == symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|p| p.symbol.as_str())
    }
}

fn check_fields(p: &Pattern) -> Result<(), CatalogError> {
    let malformed = |message: String| CatalogError::Malformed { line: 0, message };
    if !is_symbol(&p.symbol) {
        return Err(malformed(format!("invalid pattern symbol `{}`", p.symbol)));
    }
    for label in &p.classification {
        if label.is_empty() || label.contains('/') || label.trim() != label {
            return Err(malformed(format!(
                "invalid classification label `{label}` in `{}`",
                p.symbol
            )));
        }
    }
    for symbol in p.uses.iter().chain(&p.requires) {
        if !is_symbol(symbol) {
            return Err(malformed(format!(
                "invalid related symbol `{symbol}` in `{}`",
                p.symbol
            )));
        }
    }
    Ok(())
}

fn is_symbol(s: &str) -> bool {
    !s.is_empty() && !s.contains(',') && !s.chars().any(char::is_whitespace)
}

#[allow(clippy::too_many_arguments)]
fn pattern(
    symbol: &str,
    name: &str,
    classification: &[&str],
    context: &str,
    problem: &str,
    strength: &str,
    process_solution: &[&str],
    model_solution: ReportTemplateId,
    uses: &[&str],
    requires: &[&str],
) -> Pattern {
    let owned = |items: &[&str]| items.iter().map(|s| s.to_string()).collect();
    Pattern {
        symbol: symbol.into(),
        name: name.into(),
        classification: owned(classification),
        context: context.into(),
        problem: problem.into(),
        strength: strength.into(),
        process_solution: owned(process_solution),
        model_solution,
        uses: owned(uses),
        requires: owned(requires),
    }
}

/// The five requirements-analysis patterns.
pub fn builtin_catalog() -> Catalog {
    const CLASSIFY: &str =
        "Classify the goals into three types: strategic, tactical and informational";
    const ASSOC_ST: &str =
        "Associate each strategic goal to all the tactical goals attached to it in a predefined context";
    const ASSOC_TI: &str =
        "Select each tactical goal and associate it to all the informational goals attached to it in a predefined context";
    let patterns = vec![
        pattern(
            DIAGNOSIS,
            "Diagnosis of business organization",
            &["DIS", "Analysis", "Product", "Process"],
            "This pattern is reused in the definition of business organization.",
            "Guide the discovery of an organization's activities and contexts associated with them.",
            "This pattern details the steps to determine the contexts associated with the activities of the organization.",
            &[
                "Define the business of the organization",
                "Determine the activities defining the business",
                "List the contexts associated with each activity",
            ],
            ReportTemplateId::Diagnosis,
            &["AnalyseDIS"],
            &[],
        ),
        pattern(
            IDENTIFICATION,
            "Identification of business requirements",
            &["SID", "Analysis", "Process", "Product"],
            "This pattern is reused in a new collection of a DIS's business requirements.",
            "To guide the collection of a DIS's business requirements.",
            "This pattern describes how to identify a DIS's business requirements.",
            &[
                "Define the actors of the organization",
                "Identify the requirements of each actor as goals",
                "Establish the use case model of the DIS requirements",
            ],
            ReportTemplateId::Usecase,
            &[],
            &[DIAGNOSIS],
        ),
        pattern(
            ASSOC_STRATEGIC_TACTICAL,
            "Association of the strategic goals to the tactical goals",
            &["SID", "Analysis", "Product"],
            "This pattern is reused in the Association of the strategic goals to tactical goals.",
            "To guide the treatment of business goals and associated strategic goals to tactical goals.",
            "This pattern describes how to assemble the tactical goals associated with each strategic goal.",
            &[CLASSIFY, ASSOC_ST],
            ReportTemplateId::AssocSt,
            &[DIAGNOSIS],
            &[IDENTIFICATION],
        ),
        pattern(
            ASSOC_TACTICAL_INFORMATIONAL,
            "Association of the tactical goals to the informational goals",
            &["SID", "Analysis", "Product"],
            "This pattern is reused when associating the tactical goals to informational goals.",
            "To guide the treatment of business goals and the association of the tactical to informational goals.",
            "This pattern describes how to assemble informational goals associated with each tactical goal.",
            &[
                CLASSIFY,
                ASSOC_ST,
                "Select a strategic goal together with each of its tactical goals",
                ASSOC_TI,
            ],
            ReportTemplateId::AssocTi,
            &[DIAGNOSIS],
            &[IDENTIFICATION, ASSOC_STRATEGIC_TACTICAL],
        ),
        pattern(
            FORMALIZATION,
            "Formalization of informational goals",
            &["SID", "Analysis", "Product"],
            "This pattern is reused when analyzing informational goals: extracting facts and dimensions.",
            "To guide the extraction of facts and dimensions after the formalization informational purposes.",
            "This pattern describes how to formalize informational goals associated with each tactical goal which is in turn associated with a strategic goal in a predefined context.",
            &[
                CLASSIFY,
                ASSOC_ST,
                "Select a strategic goal together with each of its tactical goals",
                ASSOC_TI,
                "Formalize each informational goal by a verb, fact parameters and dimension parameters",
            ],
            ReportTemplateId::Formalization,
            &[DIAGNOSIS],
            &[
                IDENTIFICATION,
                ASSOC_STRATEGIC_TACTICAL,
                ASSOC_TACTICAL_INFORMATIONAL,
            ],
        ),
    ];
    Catalog::new("DIS business requirements analysis", patterns)
        .expect("built-in catalog is well-formed")
}

/// The transitive `requires`-closure of `targets`, dependencies first,
/// ties broken by symbol.
pub fn resolve_order<S: AsRef<str>>(
    catalog: &Catalog,
    targets: &[S],
) -> Result<Vec<String>, ResolveError> {
    let lookup: BTreeMap<&str, &Pattern> = catalog
        .patterns
        .iter()
        .map(|p| (p.symbol.as_str(), p))
        .collect();

    let mut closure: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = targets.iter().map(AsRef::as_ref).collect();
    while let Some(symbol) = stack.pop() {
        let pattern = lookup
            .get(symbol)
            .ok_or_else(|| ResolveError::UnknownPattern(symbol.to_owned()))?;
        if closure.insert(pattern.symbol.as_str()) {
            stack.extend(pattern.requires.iter().map(String::as_str));
        }
    }

    let deps: BTreeMap<&str, BTreeSet<&str>> = closure
        .iter()
        .map(|&s| (s, lookup[s].requires.iter().map(String::as_str).collect()))
        .collect();
    let mut pending: BTreeMap<&str, usize> = deps.iter().map(|(&s, d)| (s, d.len())).collect();
    let mut ready: BTreeSet<&str> = pending
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(&s, _)| s)
        .collect();
    let mut order = Vec::with_capacity(closure.len());
    while let Some(symbol) = ready.pop_first() {
        pending.remove(symbol);
        order.push(symbol.to_owned());
        for (&dependent, requires) in &deps {
            if requires.contains(symbol) {
                if let Some(n) = pending.get_mut(dependent) {
                    *n -= 1;
                    if *n == 0 {
                        ready.insert(dependent);
                    }
                }
            }
        }
    }
    if !pending.is_empty() {
        return Err(ResolveError::CycleDetected(find_cycle(&deps, &pending)));
    }
    Ok(order)
}

fn find_cycle(deps: &BTreeMap<&str, BTreeSet<&str>>, stuck: &BTreeMap<&str, usize>) -> Vec<String> {
    // Every stuck node has a stuck dependency, so walking stuck edges must
    // revisit a node.
    let start = *stuck.keys().next().expect("non-empty");
    let mut path: Vec<&str> = vec![start];
    loop {
        let current = *path.last().expect("non-empty");
        let next = deps[current]
            .iter()
            .copied()
            .find(|d| stuck.contains_key(d))
            .expect("stuck node has a stuck dependency");
        if let Some(pos) = path.iter().position(|&s| s == next) {
            let mut cycle: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
            cycle.push(next.to_owned());
            return cycle;
        }
        path.push(next);
    }
}

/// Comparable form of a classification path: labels lowercased, `SID`
/// read as `DIS`, and the run of `Product`/`Process` labels after
/// `Analysis` merged into one order-free component.
pub fn normalize_classification<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut labels = labels
        .iter()
        .map(|l| match l.as_ref().trim().to_lowercase() {
            l if l == "sid" => "dis".to_owned(),
            l => l,
        })
        .peekable();
    while let Some(label) = labels.next() {
        let after_analysis = label == "analysis";
        out.push(label);
        if after_analysis {
            let mut run = BTreeSet::new();
            while let Some(next) = labels.next_if(|l| l == "product" || l == "process") {
                run.insert(next);
            }
            if !run.is_empty() {
                out.push(run.into_iter().collect::<Vec<_>>().join("+"));
            }
        }
    }
    out
}

/// Patterns whose normalized classification starts with the normalized
/// prefix, ordered by symbol.
pub fn query<'a, S: AsRef<str>>(catalog: &'a Catalog, prefix: &[S]) -> Vec<&'a Pattern> {
    let prefix = normalize_classification(prefix);
    let mut hits: Vec<&Pattern> = catalog
        .patterns
        .iter()
        .filter(|p| normalize_classification(&p.classification).starts_with(&prefix))
        .collect();
    hits.sort_by(|a, b| a.symbol.cmp(&b.symbol));
    hits
}

const FIELDS: [&str; 10] = [
    "symbol",
    "name",
    "classification",
    "context",
    "problem",
    "strength",
    "process_solution",
    "model_solution",
    "uses",
    "requires",
];

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(value: &str, line: usize) -> Result<String, CatalogError> {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(CatalogError::Malformed {
                    line,
                    message: format!(
                        "invalid escape `\\{}`",
                        other.map(String::from).unwrap_or_default()
                    ),
                })
            }
        }
    }
    Ok(out)
}

fn write_field(out: &mut String, key: &str, value: &str) {
    if value.is_empty() {
        let _ = writeln!(out, "{key}:");
    } else {
        let _ = writeln!(out, "{key}: {}", escape(value));
    }
}

/// Serializes a catalog to its text form.
pub fn save_catalog(catalog: &Catalog) -> String {
    let mut out = String::new();
    write_field(&mut out, "catalog", &catalog.name);
    for p in &catalog.patterns {
        out.push_str("---\n");
        write_field(&mut out, "symbol", &p.symbol);
        write_field(&mut out, "name", &p.name);
        write_field(&mut out, "classification", &p.classification.join("/"));
        write_field(&mut out, "context", &p.context);
        write_field(&mut out, "problem", &p.problem);
        write_field(&mut out, "strength", &p.strength);
        out.push_str("process_solution:\n");
        for (i, step) in p.process_solution.iter().enumerate() {
            let _ = writeln!(out, "  {}. {}", i + 1, escape(step));
        }
        write_field(&mut out, "model_solution", p.model_solution.as_str());
        write_field(&mut out, "uses", &p.uses.join(", "));
        write_field(&mut out, "requires", &p.requires.join(", "));
    }
    out
}

struct Section<'a> {
    start: usize,
    lines: Vec<(usize, &'a str)>,
}

/// Parses and validates a catalog file.
pub fn load_catalog(text: &str) -> Result<Catalog, CatalogError> {
    let mut sections = vec![Section {
        start: 1,
        lines: Vec::new(),
    }];
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim() == "---" {
            sections.push(Section {
                start: line_no,
                lines: Vec::new(),
            });
        } else if !line.trim().is_empty() && !line.trim_start().starts_with('#') {
            sections
                .last_mut()
                .expect("non-empty")
                .lines
                .push((line_no, line));
        }
    }

    let mut sections = sections.into_iter();
    let header = sections.next().expect("header section");
    let name = match header.lines.as_slice() {
        [(line, text)] => match split_key(text, *line)? {
            ("catalog", value) => unescape(value, *line)?,
            (key, _) => {
                return Err(CatalogError::Malformed {
                    line: *line,
                    message: format!("expected `catalog:` header, found `{key}`"),
                })
            }
        },
        [] => {
            return Err(CatalogError::Malformed {
                line: header.start,
                message: "missing `catalog:` header".into(),
            })
        }
        [_, (line, _), ..] => {
            return Err(CatalogError::Malformed {
                line: *line,
                message: "unexpected line in catalog header".into(),
            })
        }
    };

    let mut patterns: Vec<Pattern> = Vec::new();
    for section in sections {
        let pattern = parse_pattern(&section)?;
        check_fields(&pattern).map_err(|e| match e {
            CatalogError::Malformed { message, .. } => CatalogError::Malformed {
                line: section.start,
                message,
            },
            other => other,
        })?;
        patterns.push(pattern);
    }
    let catalog = Catalog { name, patterns };
    catalog.validate()?;
    Ok(catalog)
}

fn split_key(line: &str, line_no: usize) -> Result<(&str, &str), CatalogError> {
    let (key, value) = line
        .split_once(':')
        .ok_or_else(|| CatalogError::Malformed {
            line: line_no,
            message: "expected `key: value`".into(),
        })?;
    let value = value.strip_prefix(' ').unwrap_or(value);
    Ok((key.trim(), value))
}

fn split_list(value: &str, sep: char) -> Vec<String> {
    if value.trim().is_empty() {
        return Vec::new();
    }
    value.split(sep).map(|s| s.trim().to_owned()).collect()
}

fn parse_pattern(section: &Section<'_>) -> Result<Pattern, CatalogError> {
    let mut fields: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    let mut steps: Option<Vec<String>> = None;
    let mut lines = section.lines.iter().peekable();
    while let Some(&(line_no, line)) = lines.next() {
        let malformed = |message: String| CatalogError::Malformed {
            line: line_no,
            message,
        };
        if line.starts_with(char::is_whitespace) {
            return Err(malformed("unexpected indented line".into()));
        }
        let (key, value) = split_key(line, line_no)?;
        let Some(&key) = FIELDS.iter().find(|&&f| f == key) else {
            return Err(malformed(format!("unknown field `{key}`")));
        };
        if fields.contains_key(key) || (key == "process_solution" && steps.is_some()) {
            return Err(malformed(format!("field `{key}` given twice")));
        }
        if key == "process_solution" {
            if !value.trim().is_empty() {
                return Err(malformed("process_solution takes numbered lines".into()));
            }
            let mut list = Vec::new();
            while let Some(&&(step_line, step)) = lines.peek() {
                if !step.starts_with(char::is_whitespace) {
                    break;
                }
                lines.next();
                let (number, text) =
                    step.trim_start()
                        .split_once(". ")
                        .ok_or_else(|| CatalogError::Malformed {
                            line: step_line,
                            message: "expected a numbered step `N. text`".into(),
                        })?;
                if number.parse::<usize>().ok() != Some(list.len() + 1) {
                    return Err(CatalogError::Malformed {
                        line: step_line,
                        message: format!(
                            "expected step number {}, found `{number}`",
                            list.len() + 1
                        ),
                    });
                }
                list.push(unescape(text, step_line)?);
            }
            steps = Some(list);
            continue;
        }
        fields.insert(key, (line_no, unescape(value, line_no)?));
    }

    let mut take = |key: &str| -> Result<(usize, String), CatalogError> {
        fields.remove(key).ok_or_else(|| CatalogError::Malformed {
            line: section.start,
            message: format!("missing field `{key}`"),
        })
    };
    let (_, symbol) = take("symbol")?;
    let (_, name) = take("name")?;
    let (_, classification) = take("classification")?;
    let (_, context) = take("context")?;
    let (_, problem) = take("problem")?;
    let (_, strength) = take("strength")?;
    let (model_line, model_solution) = take("model_solution")?;
    let (_, uses) = take("uses")?;
    let (_, requires) = take("requires")?;
    let process_solution = steps.ok_or_else(|| CatalogError::Malformed {
        line: section.start,
        message: "missing field `process_solution`".into(),
    })?;
    let model_solution =
        ReportTemplateId::parse(model_solution.trim()).ok_or_else(|| CatalogError::Malformed {
            line: model_line,
            message: format!("unknown model_solution template `{model_solution}`"),
        })?;
    Ok(Pattern {
        symbol: symbol.trim().to_owned(),
        name,
        classification: split_list(&classification, '/'),
        context,
        problem,
        strength,
        process_solution,
        model_solution,
        uses: split_list(&uses, ','),
        requires: split_list(&requires, ','),
    })
}
