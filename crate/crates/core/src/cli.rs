//! The `disreqc` command line.
//!
//! Exit codes: 0 success (warnings allowed), 1 validation errors, 2 parse
//! errors, 3 usage, I/O or catalog errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{self, builtin_catalog, Catalog, ASSOC_TACTICAL_INFORMATIONAL, FORMALIZATION};
use crate::dsl::{self, ParseDiagnostic};
use crate::model::{GoalKind, RequirementsModel, Severity};
use crate::pipeline::{self, PipelineOptions, PipelineResult, ValidationFinding};
use crate::report::{self, ReportTemplateId};
use crate::schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Validation = 1,
    Parse = 2,
    Usage = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "disreqc",
    version,
    about = "Analyze DIS requirements and generate star schemas"
)]
struct Cli {
    /// Pattern catalog file replacing the built-in catalog.
    #[arg(long, global = true, env = "DISREQC_CATALOG")]
    catalog: Option<PathBuf>,
    /// Treat warnings as errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a requirements document.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Generate star schemas.
    Schema {
        file: PathBuf,
        #[arg(long, value_enum, required = true)]
        emit: Vec<EmitFormat>,
        /// Output directory; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render analysis model documents.
    Report {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelChoice::All)]
        model: ModelChoice,
        /// Output directory; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the pattern catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Print the chain from an informational goal up to the business.
    Trace { file: PathBuf, goal: String },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// List pattern symbols and names.
    List,
    /// Print a pattern sheet.
    Show { symbol: String },
    /// Print the patterns required by the given ones, dependencies first.
    Order { symbols: Vec<String> },
    /// List patterns whose classification starts with the given labels.
    Query { labels: Vec<String> },
    /// Print the catalog in its file format.
    Dump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum EmitFormat {
    Sql,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Diagnosis,
    Usecase,
    #[value(name = "assoc_st")]
    AssocSt,
    #[value(name = "assoc_ti")]
    AssocTi,
    Formalization,
    #[value(name = "formalization_csv")]
    FormalizationCsv,
    All,
}

/// One diagnostic line of `check` output.
#[derive(Debug, Serialize)]
struct Record {
    severity: Severity,
    code: String,
    subject: String,
    stage: String,
    message: String,
    line: Option<usize>,
    column: Option<usize>,
}

impl Record {
    fn from_parse(d: &ParseDiagnostic) -> Record {
        Record {
            severity: d.severity,
            code: d.code.to_string(),
            subject: String::new(),
            stage: "parse".into(),
            message: d.message.clone(),
            line: Some(d.location.line),
            column: Some(d.location.column),
        }
    }

    fn from_finding(f: &ValidationFinding) -> Record {
        Record {
            severity: f.severity,
            code: f.code.to_string(),
            subject: f.subject.to_string(),
            stage: f.stage.clone(),
            message: f.message.clone(),
            line: f.location.map(|l| l.line),
            column: f.location.map(|l| l.column),
        }
    }

    fn from_catalog(e: &catalog::CatalogError) -> Record {
        let line = match e {
            catalog::CatalogError::Malformed { line, .. } if *line > 0 => Some(*line),
            _ => None,
        };
        Record {
            severity: Severity::Error,
            code: e.code().into(),
            subject: String::new(),
            stage: "catalog".into(),
            message: e
                .to_string()
                .trim_start_matches(&format!("{}: ", e.code()))
                .to_owned(),
            line,
            column: None,
        }
    }

    fn text(&self, file: &Path) -> String {
        let location = match (self.line, self.column) {
            (Some(l), Some(c)) => format!("{}:{l}:{c}", file.display()),
            (Some(l), None) => format!("{}:{l}", file.display()),
            _ => file.display().to_string(),
        };
        let subject = if self.subject.is_empty() {
            String::new()
        } else {
            format!(" {}", self.subject)
        };
        format!(
            "{location}: {}[{}]{subject} ({}): {}",
            self.severity, self.code, self.stage, self.message
        )
    }

    fn write(&self, format: Format, file: &Path, w: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Text => writeln!(w, "{}", self.text(file)),
            Format::Jsonl => writeln!(
                w,
                "{}",
                serde_json::to_string(self).expect("record serializes")
            ),
        }
    }
}

/// Terminal failure of a command, already reported.
struct Exit(ExitStatus);

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, status: ExitStatus, message: impl std::fmt::Display) -> Exit {
        let _ = writeln!(self.err, "error: {message}");
        Exit(status)
    }
}

/// Runs the CLI with explicit arguments and output streams, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    ExitStatus::Success
                }
                _ => {
                    let _ = write!(err, "{e}");
                    ExitStatus::Usage
                }
            };
            return status.code();
        }
    };
    let mut io = Io { out, err };
    let status = match dispatch(&cli, &mut io) {
        Ok(status) => status,
        Err(Exit(status)) => status,
    };
    let _ = io.out.flush();
    status.code()
}

fn dispatch(cli: &Cli, io: &mut Io<'_>) -> Result<ExitStatus, Exit> {
    match &cli.command {
        Command::Check { file, format } => cmd_check(cli, io, file, *format),
        Command::Schema { file, emit, out } => cmd_schema(cli, io, file, emit, out.as_deref()),
        Command::Report { file, model, out } => cmd_report(cli, io, file, *model, out.as_deref()),
        Command::Catalog { action } => cmd_catalog(cli, io, action),
        Command::Trace { file, goal } => cmd_trace(cli, io, file, goal),
    }
}

fn load_catalog(cli: &Cli) -> Result<Catalog, (PathBuf, Result<catalog::CatalogError, io::Error>)> {
    let Some(path) = &cli.catalog else {
        return Ok(builtin_catalog());
    };
    let text = fs::read_to_string(path).map_err(|e| (path.clone(), Err(e)))?;
    catalog::load_catalog(&text).map_err(|e| (path.clone(), Ok(e)))
}

fn catalog_or_exit(cli: &Cli, io: &mut Io<'_>) -> Result<Catalog, Exit> {
    load_catalog(cli).map_err(|(path, e)| match e {
        Ok(e) => {
            let record = Record::from_catalog(&e);
            let _ = record.write(Format::Text, &path, io.err);
            Exit(ExitStatus::Usage)
        }
        Err(e) => io.fail(
            ExitStatus::Usage,
            format!("cannot read {}: {e}", path.display()),
        ),
    })
}

fn read_file(io: &mut Io<'_>, file: &Path) -> Result<String, Exit> {
    fs::read_to_string(file).map_err(|e| {
        io.fail(
            ExitStatus::Usage,
            format!("cannot read {}: {e}", file.display()),
        )
    })
}

fn parse_or_exit(io: &mut Io<'_>, file: &Path) -> Result<RequirementsModel, Exit> {
    let text = read_file(io, file)?;
    dsl::parse_file(&file.display().to_string(), &text).map_err(|diags| {
        for d in &diags {
            let _ = Record::from_parse(d).write(Format::Text, file, io.err);
        }
        Exit(ExitStatus::Parse)
    })
}

fn pipeline_or_exit(
    cli: &Cli,
    io: &mut Io<'_>,
    model: &RequirementsModel,
    catalog: &Catalog,
) -> Result<PipelineResult, Exit> {
    pipeline::run_pipeline_with(model, catalog, PipelineOptions { strict: cli.strict }).map_err(
        |e| {
            io.fail(
                ExitStatus::Usage,
                format!("catalog cannot drive the analysis: {e}"),
            )
        },
    )
}

fn report_findings(io: &mut Io<'_>, file: &Path, result: &PipelineResult) {
    for f in &result.findings {
        let _ = Record::from_finding(f).write(Format::Text, file, io.err);
    }
}

fn cmd_check(cli: &Cli, io: &mut Io<'_>, file: &Path, format: Format) -> Result<ExitStatus, Exit> {
    let catalog = match load_catalog(cli) {
        Ok(c) => c,
        Err((path, Ok(e))) => {
            let _ = Record::from_catalog(&e).write(format, &path, io.out);
            return Ok(ExitStatus::Usage);
        }
        Err((path, Err(e))) => {
            return Err(io.fail(
                ExitStatus::Usage,
                format!("cannot read {}: {e}", path.display()),
            ))
        }
    };
    let text = read_file(io, file)?;
    let model = match dsl::parse_file(&file.display().to_string(), &text) {
        Ok(model) => model,
        Err(diags) => {
            for d in &diags {
                let _ = Record::from_parse(d).write(format, file, io.out);
            }
            if format == Format::Text {
                let _ = writeln!(io.out, "{} error(s), 0 warning(s)", diags.len());
            }
            return Ok(ExitStatus::Parse);
        }
    };
    let result = pipeline_or_exit(cli, io, &model, &catalog)?;
    for f in &result.findings {
        let _ = Record::from_finding(f).write(format, file, io.out);
    }
    if format == Format::Text {
        let _ = writeln!(
            io.out,
            "{} error(s), {} warning(s)",
            result.errors().count(),
            result.warnings().count()
        );
    }
    Ok(if result.has_errors() {
        ExitStatus::Validation
    } else {
        ExitStatus::Success
    })
}

fn stem(file: &Path) -> String {
    file.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

/// Writes every file or none: all contents go to temporary files in the
/// target directory first, then each is renamed into place.
fn write_all(dir: &Path, files: &[(String, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, content) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(content.as_bytes())?;
        tmp.flush()?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| e.error)?;
        written.push(target);
    }
    Ok(written)
}

fn deliver(
    io: &mut Io<'_>,
    out_dir: Option<&Path>,
    files: Vec<(String, String)>,
) -> Result<(), Exit> {
    match out_dir {
        Some(dir) => {
            let written = write_all(dir, &files).map_err(|e| {
                io.fail(
                    ExitStatus::Usage,
                    format!("cannot write to {}: {e}", dir.display()),
                )
            })?;
            for path in written {
                let _ = writeln!(io.err, "wrote {}", path.display());
            }
        }
        None => {
            for (i, (_, content)) in files.iter().enumerate() {
                if i > 0 {
                    let _ = writeln!(io.out);
                }
                let _ = io.out.write_all(content.as_bytes());
            }
        }
    }
    Ok(())
}

fn cmd_schema(
    cli: &Cli,
    io: &mut Io<'_>,
    file: &Path,
    emit: &[EmitFormat],
    out_dir: Option<&Path>,
) -> Result<ExitStatus, Exit> {
    let catalog = catalog_or_exit(cli, io)?;
    let model = parse_or_exit(io, file)?;
    let result = pipeline_or_exit(cli, io, &model, &catalog)?;
    report_findings(io, file, &result);
    if result.has_errors() || !result.succeeded(FORMALIZATION) {
        return Err(io.fail(
            ExitStatus::Validation,
            "the analysis has errors; no schema written",
        ));
    }
    let schemas =
        schema::build_star_schemas(&model).map_err(|e| io.fail(ExitStatus::Validation, e))?;
    let mut formats = emit.to_vec();
    formats.sort();
    formats.dedup();
    let stem = stem(file);
    let files = formats
        .into_iter()
        .map(|format| match format {
            EmitFormat::Sql => (format!("{stem}.sql"), schema::emit_sql(&schemas)),
            EmitFormat::Json => (format!("{stem}.json"), schema::emit_json(&schemas)),
            EmitFormat::Dot => (format!("{stem}.dot"), schema::emit_dot(&schemas)),
        })
        .collect();
    deliver(io, out_dir, files)?;
    Ok(ExitStatus::Success)
}

fn cmd_report(
    cli: &Cli,
    io: &mut Io<'_>,
    file: &Path,
    choice: ModelChoice,
    out_dir: Option<&Path>,
) -> Result<ExitStatus, Exit> {
    let catalog = catalog_or_exit(cli, io)?;
    let model = parse_or_exit(io, file)?;
    let result = pipeline_or_exit(cli, io, &model, &catalog)?;
    report_findings(io, file, &result);
    let templates: Vec<ReportTemplateId> = match choice {
        ModelChoice::Diagnosis => vec![ReportTemplateId::Diagnosis],
        ModelChoice::Usecase => vec![ReportTemplateId::Usecase],
        ModelChoice::AssocSt => vec![ReportTemplateId::AssocSt],
        ModelChoice::AssocTi => vec![ReportTemplateId::AssocTi],
        ModelChoice::Formalization | ModelChoice::FormalizationCsv => {
            vec![ReportTemplateId::Formalization]
        }
        ModelChoice::All => vec![
            ReportTemplateId::Diagnosis,
            ReportTemplateId::Usecase,
            ReportTemplateId::AssocSt,
            ReportTemplateId::AssocTi,
            ReportTemplateId::Formalization,
        ],
    };
    let stem = stem(file);
    let mut files = Vec::new();
    for template in templates {
        let producer = catalog
            .patterns
            .iter()
            .find(|p| p.model_solution == template)
            .map(|p| p.symbol.as_str())
            .unwrap_or("?");
        let rendered = if choice == ModelChoice::FormalizationCsv {
            result
                .formalization
                .as_deref()
                .map(report::render_formalization_csv)
                .map(|text| (format!("{stem}.formalization.csv"), text))
        } else {
            report::render_model(template, &result)
                .map(|text| (format!("{stem}.{template}.{}", template.extension()), text))
        };
        match rendered {
            Some(file) => files.push(file),
            None => {
                return Err(io.fail(
                    ExitStatus::Validation,
                    format!("report `{template}` needs stage {producer}, which did not complete"),
                ))
            }
        }
    }
    deliver(io, out_dir, files)?;
    Ok(ExitStatus::Success)
}

fn cmd_catalog(cli: &Cli, io: &mut Io<'_>, action: &CatalogAction) -> Result<ExitStatus, Exit> {
    let catalog = catalog_or_exit(cli, io)?;
    match action {
        CatalogAction::List => {
            for p in &catalog.patterns {
                let _ = writeln!(io.out, "{}\t{}", p.symbol, p.name);
            }
        }
        CatalogAction::Show { symbol } => {
            let pattern = catalog
                .get(symbol)
                .ok_or_else(|| io.fail(ExitStatus::Usage, format!("unknown pattern `{symbol}`")))?;
            let _ = io
                .out
                .write_all(report::render_pattern_sheet(pattern).as_bytes());
        }
        CatalogAction::Order { symbols } => {
            let order = catalog::resolve_order(&catalog, symbols)
                .map_err(|e| io.fail(ExitStatus::Usage, e))?;
            for symbol in order {
                let _ = writeln!(io.out, "{symbol}");
            }
        }
        CatalogAction::Query { labels } => {
            for p in catalog::query(&catalog, labels) {
                let _ = writeln!(io.out, "{}\t{}", p.symbol, p.classification_label());
            }
        }
        CatalogAction::Dump => {
            let _ = io.out.write_all(catalog::save_catalog(&catalog).as_bytes());
        }
    }
    Ok(ExitStatus::Success)
}

fn cmd_trace(cli: &Cli, io: &mut Io<'_>, file: &Path, goal_id: &str) -> Result<ExitStatus, Exit> {
    let catalog = catalog_or_exit(cli, io)?;
    let model = parse_or_exit(io, file)?;
    let goal = model
        .find_goal(goal_id)
        .map_err(|e| io.fail(ExitStatus::Usage, e))?;
    if goal.kind != GoalKind::Informational {
        return Err(io.fail(
            ExitStatus::Validation,
            format!(
                "goal `{goal_id}` is {}, only informational goals can be traced",
                goal.kind
            ),
        ));
    }
    let result = pipeline_or_exit(cli, io, &model, &catalog)?;
    if !result.succeeded(ASSOC_TACTICAL_INFORMATIONAL) {
        report_findings(io, file, &result);
        return Err(io.fail(
            ExitStatus::Validation,
            format!("tracing needs stage {ASSOC_TACTICAL_INFORMATIONAL}, which did not complete"),
        ));
    }
    let chain = model
        .trace(goal_id)
        .map_err(|e| io.fail(ExitStatus::Validation, e))?;
    for (label, value) in chain.links() {
        let _ = writeln!(io.out, "{label}: {value}");
    }
    Ok(ExitStatus::Success)
}
