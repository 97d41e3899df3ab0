//! The `.dis` requirements language.
//!
//! ```text
//! document       := business_block actor_decl* goal_decl*
//! business_block := "business" STRING "{" activity* "}"
//! activity       := "activity" STRING "{" ("context" STRING)* "}"
//! actor_decl     := "actor" ("strategic"|"tactical"|"system") STRING
//! goal_decl      := "goal" ("strategic"|"tactical"|"informational") IDENT STRING
//!                   "actor" STRING "activity" STRING "context" STRING
//!                   ("refines" IDENT)? formalization?
//! formalization  := "{" "verb" STRING "fact" IDENT ("," IDENT)*
//!                   "dimension" (IDENT ("," IDENT)*)? "}"
//! ```
//!
//! `#` starts a comment running to the end of the line. Strings are
//! double-quoted; `\"` and `\\` are the only escapes. Keywords are reserved.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::{
    Activity, Actor, ActorKind, BusinessDiagnosis, ElementRef, FormalizationBlock, Goal, GoalKind,
    RequirementsModel, Severity, SourceLocation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ParseCode {
    /// Lexical error.
    P001,
    /// Syntax error.
    P002,
    /// Duplicate declaration.
    P003,
}

impl fmt::Display for ParseCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub code: ParseCode,
    pub message: String,
    pub location: SourceLocation,
}

impl ParseDiagnostic {
    fn error(code: ParseCode, message: impl Into<String>, location: SourceLocation) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            location,
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}[{}]: {}",
            self.location, self.severity, self.code, self.message
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Keyword {
    Business,
    Activity,
    Context,
    Actor,
    Goal,
    Strategic,
    Tactical,
    System,
    Informational,
    Refines,
    Verb,
    Fact,
    Dimension,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        Some(match word {
            "business" => Keyword::Business,
            "activity" => Keyword::Activity,
            "context" => Keyword::Context,
            "actor" => Keyword::Actor,
            "goal" => Keyword::Goal,
            "strategic" => Keyword::Strategic,
            "tactical" => Keyword::Tactical,
            "system" => Keyword::System,
            "informational" => Keyword::Informational,
            "refines" => Keyword::Refines,
            "verb" => Keyword::Verb,
            "fact" => Keyword::Fact,
            "dimension" => Keyword::Dimension,
            _ => return None,
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            Keyword::Business => "business",
            Keyword::Activity => "activity",
            Keyword::Context => "context",
            Keyword::Actor => "actor",
            Keyword::Goal => "goal",
            Keyword::Strategic => "strategic",
            Keyword::Tactical => "tactical",
            Keyword::System => "system",
            Keyword::Informational => "informational",
            Keyword::Refines => "refines",
            Keyword::Verb => "verb",
            Keyword::Fact => "fact",
            Keyword::Dimension => "dimension",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    Comma,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Str(s) => write!(f, "string {}", quote(s)),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    location: SourceLocation,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
    diagnostics: Vec<ParseDiagnostic>,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
            diagnostics: Vec::new(),
        }
    }

    fn location(&self) -> SourceLocation {
        SourceLocation {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn tokenize(mut self) -> (Vec<Token>, Vec<ParseDiagnostic>) {
        let mut tokens = Vec::new();
        loop {
            let location = self.location();
            let Some(&c) = self.chars.peek() else {
                tokens.push(Token {
                    kind: TokenKind::Eof,
                    location,
                });
                break;
            };
            let kind = match c {
                c if c.is_whitespace() => {
                    self.bump();
                    continue;
                }
                '#' => {
                    while self.chars.peek().is_some_and(|&c| c != '\n') {
                        self.bump();
                    }
                    continue;
                }
                '{' => {
                    self.bump();
                    TokenKind::LBrace
                }
                '}' => {
                    self.bump();
                    TokenKind::RBrace
                }
                ',' => {
                    self.bump();
                    TokenKind::Comma
                }
                '"' => match self.string(location) {
                    Some(s) => TokenKind::Str(s),
                    None => continue,
                },
                c if c.is_ascii_alphabetic() => {
                    let mut word = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            word.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    match Keyword::from_word(&word) {
                        Some(k) => TokenKind::Keyword(k),
                        None => TokenKind::Ident(word),
                    }
                }
                other => {
                    self.bump();
                    self.diagnostics.push(ParseDiagnostic::error(
                        ParseCode::P001,
                        format!("unexpected character {other:?}"),
                        location,
                    ));
                    continue;
                }
            };
            tokens.push(Token { kind, location });
        }
        (tokens, self.diagnostics)
    }

    /// Lexes a string literal; the opening quote is still pending.
    fn string(&mut self, start: SourceLocation) -> Option<String> {
        self.bump();
        let mut value = String::new();
        let mut valid = true;
        loop {
            let here = self.location();
            match self.chars.peek().copied() {
                None | Some('\n') => {
                    self.diagnostics.push(ParseDiagnostic::error(
                        ParseCode::P001,
                        "unterminated string literal",
                        start,
                    ));
                    return None;
                }
                Some('"') => {
                    self.bump();
                    return valid.then_some(value);
                }
                Some('\\') => {
                    self.bump();
                    match self.chars.peek().copied() {
                        Some(c @ ('"' | '\\')) => {
                            self.bump();
                            value.push(c);
                        }
                        Some(c) if c != '\n' => {
                            self.bump();
                            valid = false;
                            self.diagnostics.push(ParseDiagnostic::error(
                                ParseCode::P001,
                                format!("invalid escape sequence `\\{c}`"),
                                here,
                            ));
                        }
                        _ => {}
                    }
                }
                Some(c) => {
                    self.bump();
                    value.push(c);
                }
            }
        }
    }
}

struct Syntax(ParseDiagnostic);

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diagnostics: Vec<ParseDiagnostic>,
    model: RequirementsModel,
    goal_ids: BTreeSet<String>,
}

type PResult<T> = Result<T, Syntax>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if token.kind != TokenKind::Eof {
            self.pos += 1;
        }
        token
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        let token = self.peek();
        Err(Syntax(ParseDiagnostic::error(
            ParseCode::P002,
            format!("expected {expected}, found {}", token.kind),
            token.location,
        )))
    }

    fn at_keyword(&self, keyword: Keyword) -> bool {
        self.peek().kind == TokenKind::Keyword(keyword)
    }

    fn keyword(&mut self, keyword: Keyword) -> PResult<SourceLocation> {
        if self.at_keyword(keyword) {
            Ok(self.advance().location)
        } else {
            self.unexpected(&format!("`{}`", keyword.as_str()))
        }
    }

    fn punct(&mut self, kind: TokenKind) -> PResult<SourceLocation> {
        if self.peek().kind == kind {
            Ok(self.advance().location)
        } else {
            self.unexpected(&kind.to_string())
        }
    }

    fn string(&mut self) -> PResult<String> {
        if let TokenKind::Str(s) = &self.peek().kind {
            let s = s.clone();
            self.advance();
            Ok(s)
        } else {
            self.unexpected("a string")
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if let TokenKind::Ident(s) = &self.peek().kind {
            let s = s.clone();
            self.advance();
            Ok(s)
        } else {
            self.unexpected("an identifier")
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut names = vec![self.ident()?];
        while self.peek().kind == TokenKind::Comma {
            self.advance();
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn duplicate(&mut self, what: String, location: SourceLocation) {
        self.diagnostics.push(ParseDiagnostic::error(
            ParseCode::P003,
            format!("duplicate declaration of {what}"),
            location,
        ));
    }

    fn document(&mut self) -> PResult<()> {
        let diagnosis = self.business_block()?;
        self.model.diagnosis = diagnosis;
        loop {
            match &self.peek().kind {
                TokenKind::Keyword(Keyword::Business) => {
                    let location = self.peek().location;
                    self.business_block()?;
                    self.duplicate("the business block".into(), location);
                }
                TokenKind::Keyword(Keyword::Actor) if self.model.goals.is_empty() => {
                    self.actor_decl()?
                }
                TokenKind::Keyword(Keyword::Goal) => self.goal_decl()?,
                TokenKind::Eof => return Ok(()),
                _ if self.model.goals.is_empty() => {
                    return self.unexpected("`actor`, `goal` or end of input")
                }
                _ => return self.unexpected("`goal` or end of input"),
            }
        }
    }

    fn business_block(&mut self) -> PResult<BusinessDiagnosis> {
        let location = self.keyword(Keyword::Business)?;
        self.model.source_map.record(ElementRef::Business, location);
        let business_name = self.string()?;
        self.punct(TokenKind::LBrace)?;
        let mut activities: Vec<Activity> = Vec::new();
        while self.at_keyword(Keyword::Activity) {
            let location = self.advance().location;
            let name = self.string()?;
            self.punct(TokenKind::LBrace)?;
            let mut contexts: Vec<String> = Vec::new();
            while self.at_keyword(Keyword::Context) {
                let ctx_location = self.advance().location;
                let context = self.string()?;
                if contexts.contains(&context) {
                    self.duplicate(
                        format!("context {} in activity {}", quote(&context), quote(&name)),
                        ctx_location,
                    );
                } else {
                    self.model.source_map.record(
                        ElementRef::Context {
                            activity: name.clone(),
                            context: context.clone(),
                        },
                        ctx_location,
                    );
                    contexts.push(context);
                }
            }
            self.punct(TokenKind::RBrace)?;
            if activities.iter().any(|a| a.name == name) {
                self.duplicate(format!("activity {}", quote(&name)), location);
            } else {
                self.model
                    .source_map
                    .record(ElementRef::Activity(name.clone()), location);
                activities.push(Activity { name, contexts });
            }
        }
        if !self.at_keyword(Keyword::Activity) && self.peek().kind != TokenKind::RBrace {
            return self.unexpected("`activity` or `}`");
        }
        self.punct(TokenKind::RBrace)?;
        Ok(BusinessDiagnosis {
            business_name,
            activities,
        })
    }

    fn actor_decl(&mut self) -> PResult<()> {
        let location = self.keyword(Keyword::Actor)?;
        let kind = match self.peek().kind {
            TokenKind::Keyword(Keyword::Strategic) => ActorKind::Strategic,
            TokenKind::Keyword(Keyword::Tactical) => ActorKind::Tactical,
            TokenKind::Keyword(Keyword::System) => ActorKind::System,
            _ => return self.unexpected("`strategic`, `tactical` or `system`"),
        };
        self.advance();
        let name = self.string()?;
        if self.model.actor(&name).is_some() {
            self.duplicate(format!("actor {}", quote(&name)), location);
        } else {
            self.model
                .source_map
                .record(ElementRef::Actor(name.clone()), location);
            self.model.actors.push(Actor { name, kind });
        }
        Ok(())
    }

    fn goal_decl(&mut self) -> PResult<()> {
        let location = self.keyword(Keyword::Goal)?;
        let kind = match self.peek().kind {
            TokenKind::Keyword(Keyword::Strategic) => GoalKind::Strategic,
            TokenKind::Keyword(Keyword::Tactical) => GoalKind::Tactical,
            TokenKind::Keyword(Keyword::Informational) => GoalKind::Informational,
            _ => return self.unexpected("`strategic`, `tactical` or `informational`"),
        };
        self.advance();
        let id = self.ident()?;
        let statement = self.string()?;
        self.keyword(Keyword::Actor)?;
        let actor = self.string()?;
        self.keyword(Keyword::Activity)?;
        let activity = self.string()?;
        self.keyword(Keyword::Context)?;
        let context = self.string()?;
        let parent = if self.at_keyword(Keyword::Refines) {
            self.advance();
            Some(self.ident()?)
        } else {
            None
        };
        let formalization = if self.peek().kind == TokenKind::LBrace {
            if kind != GoalKind::Informational {
                let token = self.peek();
                return Err(Syntax(ParseDiagnostic::error(
                    ParseCode::P002,
                    format!(
                        "only informational goals take a formalization block, `{id}` is {kind}"
                    ),
                    token.location,
                )));
            }
            Some(self.formalization()?)
        } else {
            None
        };
        if !self.goal_ids.insert(id.clone()) {
            self.duplicate(format!("goal `{id}`"), location);
            return Ok(());
        }
        self.model
            .source_map
            .record(ElementRef::Goal(id.clone()), location);
        self.model.goals.push(Goal {
            id,
            kind,
            statement,
            actor,
            activity,
            context,
            parent,
            formalization,
        });
        Ok(())
    }

    fn formalization(&mut self) -> PResult<FormalizationBlock> {
        self.punct(TokenKind::LBrace)?;
        self.keyword(Keyword::Verb)?;
        let verb = self.string()?;
        self.keyword(Keyword::Fact)?;
        let fact_params = self.ident_list()?;
        self.keyword(Keyword::Dimension)?;
        let dimension_params = if matches!(self.peek().kind, TokenKind::Ident(_)) {
            self.ident_list()?
        } else {
            Vec::new()
        };
        if self.peek().kind != TokenKind::RBrace {
            return self.unexpected("`,` or `}`");
        }
        self.advance();
        Ok(FormalizationBlock {
            verb,
            fact_params,
            dimension_params,
        })
    }
}

/// Parses a requirements document.
///
/// Returns every diagnostic found: all lexical errors, or the first syntax
/// error together with any duplicate declarations seen before it.
pub fn parse(text: &str) -> Result<RequirementsModel, Vec<ParseDiagnostic>> {
    let (tokens, lex_errors) = Lexer::new(text).tokenize();
    if !lex_errors.is_empty() {
        return Err(lex_errors);
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        diagnostics: Vec::new(),
        model: RequirementsModel::default(),
        goal_ids: BTreeSet::new(),
    };
    if let Err(Syntax(d)) = parser.document() {
        parser.diagnostics.push(d);
    }
    if parser.diagnostics.is_empty() {
        Ok(parser.model)
    } else {
        parser.diagnostics.sort_by_key(|d| d.location);
        Err(parser.diagnostics)
    }
}

/// Parses a document and records `file` in the model's source map.
pub fn parse_file(file: &str, text: &str) -> Result<RequirementsModel, Vec<ParseDiagnostic>> {
    let mut model = parse(text)?;
    model.source_map.file = Some(file.to_owned());
    Ok(model)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Canonical text for a model: business, then actors sorted by (kind,
/// name), then goals sorted by id.
pub fn emit(model: &RequirementsModel) -> String {
    let mut out = String::new();
    let diagnosis = &model.diagnosis;
    out.push_str(&format!(
        "business {} {{\n",
        quote(&diagnosis.business_name)
    ));
    for activity in &diagnosis.activities {
        if activity.contexts.is_empty() {
            out.push_str(&format!("  activity {} {{ }}\n", quote(&activity.name)));
            continue;
        }
        out.push_str(&format!("  activity {} {{\n", quote(&activity.name)));
        for context in &activity.contexts {
            out.push_str(&format!("    context {}\n", quote(context)));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");

    let mut actors: Vec<&Actor> = model.actors.iter().collect();
    actors.sort_by(|a, b| (a.kind, &a.name).cmp(&(b.kind, &b.name)));
    if !actors.is_empty() {
        out.push('\n');
    }
    for actor in actors {
        out.push_str(&format!("actor {} {}\n", actor.kind, quote(&actor.name)));
    }

    let mut goals: Vec<&Goal> = model.goals.iter().collect();
    goals.sort_by(|a, b| a.id.cmp(&b.id));
    for goal in goals {
        out.push('\n');
        out.push_str(&format!(
            "goal {} {} {}\n  actor {} activity {} context {}",
            goal.kind,
            goal.id,
            quote(&goal.statement),
            quote(&goal.actor),
            quote(&goal.activity),
            quote(&goal.context),
        ));
        if let Some(parent) = &goal.parent {
            out.push_str(&format!(" refines {parent}"));
        }
        if let Some(block) = &goal.formalization {
            out.push_str(" {\n");
            out.push_str(&format!("    verb {}\n", quote(&block.verb)));
            out.push_str(&format!("    fact {}\n", block.fact_params.join(", ")));
            if block.dimension_params.is_empty() {
                out.push_str("    dimension\n");
            } else {
                out.push_str(&format!(
                    "    dimension {}\n",
                    block.dimension_params.join(", ")
                ));
            }
            out.push_str("  }");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(text: &str) -> Vec<ParseCode> {
        parse(text).unwrap_err().iter().map(|d| d.code).collect()
    }

    #[test]
    fn minimal_document() {
        let m = parse(r#"business "B" { }"#).unwrap();
        assert_eq!(m.diagnosis.business_name, "B");
        assert!(m.diagnosis.activities.is_empty());
        assert!(m.actors.is_empty() && m.goals.is_empty());
        assert_eq!(parse(&emit(&m)).unwrap(), m);
    }

    #[test]
    fn missing_closing_brace_reports_end_of_input() {
        let text = "business \"B\" {\n  activity \"A\" { context \"C\" }\n";
        let diags = parse(text).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, ParseCode::P002);
        assert!(
            diags[0].message.contains("end of input"),
            "{}",
            diags[0].message
        );
        assert_eq!(diags[0].location, SourceLocation { line: 3, column: 1 });
    }

    #[test]
    fn lexical_errors() {
        assert_eq!(codes("business \"B\" { } @"), [ParseCode::P001]);
        assert_eq!(codes("business \"B { }"), [ParseCode::P001]);
        assert_eq!(codes(r#"business "a\nb" { }"#), [ParseCode::P001]);
        assert_eq!(
            codes("business \"B\" { } actor tactical \"x\ny\""),
            [ParseCode::P001, ParseCode::P001]
        );
    }

    #[test]
    fn escapes_round_trip() {
        let m = parse(r#"business "say \"hi\" \\ ok" { }"#).unwrap();
        assert_eq!(m.diagnosis.business_name, r#"say "hi" \ ok"#);
        assert_eq!(parse(&emit(&m)).unwrap(), m);
    }

    #[test]
    fn duplicates_are_p003() {
        assert_eq!(
            codes(r#"business "B" { } business "C" { }"#),
            [ParseCode::P003]
        );
        assert_eq!(
            codes(r#"business "B" { activity "A" { } activity "A" { } }"#),
            [ParseCode::P003]
        );
        assert_eq!(
            codes(r#"business "B" { activity "A" { context "c" context "c" } }"#),
            [ParseCode::P003]
        );
        assert_eq!(
            codes(r#"business "B" { } actor tactical "x" actor system "x""#),
            [ParseCode::P003]
        );
    }

    #[test]
    fn keywords_are_reserved() {
        let text = r#"business "B" { } goal strategic fact "s" actor "a" activity "A" context "C""#;
        assert_eq!(codes(text), [ParseCode::P002]);
    }

    #[test]
    fn formalization_only_on_informational() {
        let text = r#"business "B" { }
goal tactical t "s" actor "a" activity "A" context "C" { verb "v" fact x dimension }"#;
        let diags = parse(text).unwrap_err();
        assert_eq!(diags[0].code, ParseCode::P002);
        assert!(diags[0].message.contains("informational"));
    }

    #[test]
    fn actors_after_goals_rejected() {
        let text = r#"business "B" { }
goal strategic s "s" actor "a" activity "A" context "C"
actor strategic "a""#;
        assert_eq!(codes(text), [ParseCode::P002]);
    }

    #[test]
    fn empty_dimension_list_parses() {
        let text = r#"business "B" { }
goal informational i "s" actor "a" activity "A" context "C" refines t {
  verb "count" fact n dimension
}"#;
        let m = parse(text).unwrap();
        let block = m.goals[0].formalization.as_ref().unwrap();
        assert_eq!(block.fact_params, ["n"]);
        assert!(block.dimension_params.is_empty());
        assert_eq!(parse(&emit(&m)).unwrap(), m);
    }

    #[test]
    fn crlf_accepted() {
        let m =
            parse("business \"B\" {\r\n  activity \"A\" {\r\n    context \"C\"\r\n  }\r\n}\r\n")
                .unwrap();
        assert_eq!(m.diagnosis.activities[0].contexts, ["C"]);
        assert!(!emit(&m).contains('\r'));
    }

    #[test]
    fn source_map_covers_declarations() {
        let text =
            "business \"B\" {\n  activity \"A\" { context \"C\" }\n}\nactor tactical \"t\"\n";
        let m = parse(text).unwrap();
        assert_eq!(
            m.source_map.get(&ElementRef::Actor("t".into())),
            Some(SourceLocation { line: 4, column: 1 })
        );
        assert_eq!(
            m.source_map.get(&ElementRef::Activity("A".into())),
            Some(SourceLocation { line: 2, column: 3 })
        );
        assert_eq!(m.source_map.len(), 4);
    }

    #[test]
    fn empty_input_is_p002() {
        assert_eq!(codes(""), [ParseCode::P002]);
        assert_eq!(codes("# only a comment\n"), [ParseCode::P002]);
    }
}
