//! Text renderings of the analysis model documents and pattern sheets.

use std::fmt::{self, Write as _};

use crate::catalog::Pattern;
use crate::pipeline::{
    AssociationTable, DiagnosisDocument, FormalizationTable, PipelineResult, UseCaseModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportTemplateId {
    Diagnosis,
    Usecase,
    AssocSt,
    AssocTi,
    Formalization,
    PatternSheet,
}

impl ReportTemplateId {
    pub const ALL: [ReportTemplateId; 6] = [
        ReportTemplateId::Diagnosis,
        ReportTemplateId::Usecase,
        ReportTemplateId::AssocSt,
        ReportTemplateId::AssocTi,
        ReportTemplateId::Formalization,
        ReportTemplateId::PatternSheet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportTemplateId::Diagnosis => "diagnosis",
            ReportTemplateId::Usecase => "usecase",
            ReportTemplateId::AssocSt => "assoc_st",
            ReportTemplateId::AssocTi => "assoc_ti",
            ReportTemplateId::Formalization => "formalization",
            ReportTemplateId::PatternSheet => "pattern_sheet",
        }
    }

    pub fn parse(s: &str) -> Option<ReportTemplateId> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportTemplateId::Usecase => "dot",
            _ => "md",
        }
    }
}

impl fmt::Display for ReportTemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Escapes text for a Markdown table cell.
pub fn cell(text: &str) -> String {
    text.replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace(['\r', '\n'], " ")
}

fn row(out: &mut String, cells: &[String]) {
    out.push('|');
    for c in cells {
        let _ = write!(out, " {c} |");
    }
    out.push('\n');
}

fn separator(out: &mut String, columns: usize) {
    out.push('|');
    for _ in 0..columns {
        out.push_str(" --- |");
    }
    out.push('\n');
}

fn list(items: &[String]) -> String {
    items.iter().map(|i| cell(i)).collect::<Vec<_>>().join(", ")
}

/// The business row followed by one row per activity and its contexts.
pub fn render_diagnosis(doc: &DiagnosisDocument) -> String {
    let mut out = String::from("# Diagnosis of the organization\n\n");
    row(&mut out, &[cell(&doc.business), "Contexts".into()]);
    separator(&mut out, 2);
    for activity in &doc.activities {
        row(&mut out, &[cell(&activity.name), list(&activity.contexts)]);
    }
    out
}

fn scope_header(out: &mut String, table: &AssociationTable) {
    let _ = writeln!(out, "- Activity: {}", cell(&table.activity));
    let _ = writeln!(out, "- Context: {}", cell(&table.context));
    if let Some(strategic) = &table.strategic_goal {
        let _ = writeln!(out, "- Strategic goal: {}", cell(strategic));
    }
    out.push('\n');
}

fn render_association(title: &str, tables: &[AssociationTable]) -> String {
    if tables.is_empty() {
        return String::new();
    }
    let mut out = format!("# {title}\n");
    for table in tables {
        out.push('\n');
        scope_header(&mut out, table);
        if table.rows.is_empty() {
            out.push_str("(no goals to associate)\n");
            continue;
        }
        let parents: Vec<String> = table.rows.iter().map(|r| cell(&r.parent)).collect();
        let children: Vec<String> = table.rows.iter().map(|r| list(&r.children)).collect();
        row(&mut out, &parents);
        separator(&mut out, parents.len());
        row(&mut out, &children);
    }
    out
}

/// One table per context: a column per strategic goal, its tactical
/// goals beneath.
pub fn render_assoc_st(tables: &[AssociationTable]) -> String {
    render_association("Association of strategic goals to tactical goals", tables)
}

/// One table per context and strategic goal: a column per tactical goal,
/// its informational goals beneath.
pub fn render_assoc_ti(tables: &[AssociationTable]) -> String {
    render_association(
        "Association of tactical goals to informational goals",
        tables,
    )
}

/// Verb / fact parameters / dimension parameters, one block per tactical
/// goal.
pub fn render_formalization(tables: &[FormalizationTable]) -> String {
    if tables.is_empty() {
        return String::new();
    }
    let mut out = String::from("# Formalization of informational goals\n");
    for table in tables {
        out.push('\n');
        let _ = writeln!(out, "- Activity: {}", cell(&table.activity));
        let _ = writeln!(out, "- Context: {}", cell(&table.context));
        let _ = writeln!(out, "- Strategic goal: {}", cell(&table.strategic_goal));
        let _ = writeln!(out, "- Tactical goal: {}", cell(&table.tactical_goal));
        out.push('\n');
        row(
            &mut out,
            &[
                "Verb".into(),
                "Fact parameters".into(),
                "Dimension parameters".into(),
            ],
        );
        separator(&mut out, 3);
        for r in &table.rows {
            row(
                &mut out,
                &[
                    cell(&r.verb),
                    list(&r.fact_params),
                    list(&r.dimension_params),
                ],
            );
        }
    }
    out
}

/// The formalization tables flattened to CSV, one record per
/// informational goal.
pub fn render_formalization_csv(tables: &[FormalizationTable]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    writer
        .write_record([
            "activity",
            "context",
            "strategic_goal",
            "tactical_goal",
            "informational_goal",
            "verb",
            "fact_parameters",
            "dimension_parameters",
        ])
        .expect("in-memory write");
    for table in tables {
        for r in &table.rows {
            writer
                .write_record([
                    table.activity.as_str(),
                    &table.context,
                    &table.strategic_goal,
                    &table.tactical_goal,
                    &r.goal_id,
                    &r.verb,
                    &r.fact_params.join(", "),
                    &r.dimension_params.join(", "),
                ])
                .expect("in-memory write");
        }
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("input was UTF-8")
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Actors as boxes, goals as ellipses, one edge per ownership.
pub fn render_usecase(ucm: &UseCaseModel) -> String {
    let mut out = String::from("digraph usecases {\n");
    for (actor, kind) in &ucm.actors {
        let _ = writeln!(
            out,
            "  {} [shape=box, label={}];",
            dot_id(&format!("actor:{actor}")),
            dot_id(&format!("{actor} ({kind})"))
        );
    }
    let goals: std::collections::BTreeSet<&str> =
        ucm.edges.iter().map(|(_, g)| g.as_str()).collect();
    for goal in goals {
        let _ = writeln!(
            out,
            "  {} [shape=ellipse, label={}];",
            dot_id(&format!("goal:{goal}")),
            dot_id(goal)
        );
    }
    for (actor, goal) in &ucm.edges {
        let _ = writeln!(
            out,
            "  {} -> {};",
            dot_id(&format!("actor:{actor}")),
            dot_id(&format!("goal:{goal}"))
        );
    }
    out.push_str("}\n");
    out
}

fn or_dash(text: String) -> String {
    if text.is_empty() {
        "—".into()
    } else {
        text
    }
}

/// The three-part sheet of a pattern: interface, realization, relationship.
pub fn render_pattern_sheet(pattern: &Pattern) -> String {
    let mut out = format!("# {}\n\n", cell(&pattern.name));
    row(&mut out, &["Part".into(), "Rubric".into(), "Fields".into()]);
    separator(&mut out, 3);
    let steps = pattern
        .process_solution
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, cell(s)))
        .collect::<Vec<_>>()
        .join("<br>");
    let rubrics: [(&str, &str, String); 10] = [
        ("Interface", "Symbol", cell(&pattern.symbol)),
        ("", "Name", cell(&pattern.name)),
        ("", "Classification", cell(&pattern.classification_label())),
        ("", "Context", cell(&pattern.context)),
        ("", "Problem", cell(&pattern.problem)),
        ("", "Strength", cell(&pattern.strength)),
        ("Realization", "Process Solution", steps),
        (
            "",
            "Model Solution",
            pattern.model_solution.as_str().to_owned(),
        ),
        ("Relationship", "Uses", list(&pattern.uses)),
        ("", "Requires", list(&pattern.requires)),
    ];
    for (part, rubric, value) in rubrics {
        row(&mut out, &[part.into(), rubric.into(), or_dash(value)]);
    }
    out
}

/// Renders the model document of a template from a pipeline run, or
/// `None` when the producing stage did not complete.
pub fn render_model(template: ReportTemplateId, result: &PipelineResult) -> Option<String> {
    match template {
        ReportTemplateId::Diagnosis => result.diagnosis.as_ref().map(render_diagnosis),
        ReportTemplateId::Usecase => result.use_cases.as_ref().map(render_usecase),
        ReportTemplateId::AssocSt => result.assoc_st.as_deref().map(render_assoc_st),
        ReportTemplateId::AssocTi => result.assoc_ti.as_deref().map(render_assoc_ti),
        ReportTemplateId::Formalization => {
            result.formalization.as_deref().map(render_formalization)
        }
        ReportTemplateId::PatternSheet => None,
    }
}
