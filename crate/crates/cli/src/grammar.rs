//! Spec documents: `group kind { key = value; ... }` items plus an optional
//! `params { ... }` item carrying command parameters.

use std::fmt::Write as _;

use constgen::catalog::{CustomShape, GroupSpec, IntAffine};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("semantic error: {0}")]
    Semantic(String),
}

pub type Result<T> = std::result::Result<T, ParseError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Auto,
    Fixed(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    pub max_index: u32,
    pub precision: Precision,
    pub budget: usize,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Params {
        Params {
            max_index: 2,
            precision: Precision::Auto,
            budget: constgen::pgroup::DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SpecDocument {
    pub groups: Vec<GroupSpec>,
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i128),
    Matrix(Vec<Vec<i64>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i128),
    Sym(char),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            let err = |message: String| ParseError::Syntax { line, col, message };
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), line, col));
            } else if c.is_ascii_digit() || c == '-' {
                let mut s = String::new();
                s.push(c);
                self.bump();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                let v = s.parse().map_err(|_| err(format!("invalid integer {s:?}")))?;
                out.push((Tok::Int(v), line, col));
            } else if "{}=;[],".contains(c) {
                self.bump();
                out.push((Tok::Sym(c), line, col));
            } else {
                return Err(err(format!("unexpected character {c:?}")));
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, col) = self.toks.get(self.pos).map_or(self.end, |t| (t.1, t.2));
        Err(ParseError::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected '{c}'"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    fn int(&mut self) -> Result<i128> {
        match self.peek() {
            Some(&Tok::Int(v)) => {
                self.pos += 1;
                Ok(v)
            }
            _ => self.error("expected integer"),
        }
    }

    fn entry(&mut self) -> Result<i64> {
        let v = self.int()?;
        i64::try_from(v).or_else(|_| {
            self.pos -= 1;
            self.error("matrix entry out of range")
        })
    }

    fn int_list(&mut self) -> Result<Vec<i64>> {
        self.expect_sym('[')?;
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::Sym(']')) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.entry()?);
            match self.peek() {
                Some(Tok::Sym(',')) => self.pos += 1,
                Some(Tok::Sym(']')) => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return self.error("expected ',' or ']'"),
            }
        }
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek() {
            Some(Tok::Int(_)) => Ok(Value::Int(self.int()?)),
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let mut rows = Vec::new();
                if self.peek() == Some(&Tok::Sym(']')) {
                    self.pos += 1;
                    return Ok(Value::Matrix(rows));
                }
                loop {
                    rows.push(self.int_list()?);
                    match self.peek() {
                        Some(Tok::Sym(',')) => self.pos += 1,
                        Some(Tok::Sym(']')) => {
                            self.pos += 1;
                            return Ok(Value::Matrix(rows));
                        }
                        _ => return self.error("expected ',' or ']'"),
                    }
                }
            }
            _ => self.error("expected integer or matrix"),
        }
    }

    /// `{ (key = value ;)* }`
    fn body(&mut self) -> Result<Vec<(String, Value)>> {
        self.expect_sym('{')?;
        let mut out = Vec::new();
        while self.peek() != Some(&Tok::Sym('}')) {
            if self.peek().is_none() {
                return self.error("unterminated block");
            }
            let key = self.ident("key")?;
            self.expect_sym('=')?;
            let value = self.value()?;
            self.expect_sym(';')?;
            out.push((key, value));
        }
        self.pos += 1;
        Ok(out)
    }
}

struct Fields {
    kind: String,
    entries: Vec<(String, Value)>,
}

impl Fields {
    fn check_keys(&self, allowed: &[&str], repeatable: &[&str]) -> Result<()> {
        for (i, (k, _)) in self.entries.iter().enumerate() {
            if !allowed.contains(&k.as_str()) {
                return Err(ParseError::Semantic(format!("unknown key {k:?} for {}", self.kind)));
            }
            if !repeatable.contains(&k.as_str()) && self.entries[..i].iter().any(|(j, _)| j == k) {
                return Err(ParseError::Semantic(format!("duplicate key {k:?} in {}", self.kind)));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn int(&self, key: &str) -> Result<i128> {
        match self.get(key) {
            Some(Value::Int(v)) => Ok(*v),
            Some(_) => Err(ParseError::Semantic(format!("{key} must be an integer"))),
            None => Err(ParseError::Semantic(format!("{} needs {key}", self.kind))),
        }
    }

    /// Integer key narrowed to the field type.
    fn narrow<T: TryFrom<i128>>(&self, key: &str) -> Result<T> {
        T::try_from(self.int(key)?)
            .map_err(|_| ParseError::Semantic(format!("{key} is out of range")))
    }

    fn matrix(&self, key: &str) -> Result<Vec<Vec<i64>>> {
        match self.get(key) {
            Some(Value::Matrix(m)) => Ok(m.clone()),
            Some(_) => Err(ParseError::Semantic(format!("{key} must be a matrix"))),
            None => Err(ParseError::Semantic(format!("{} needs {key}", self.kind))),
        }
    }
}

fn group_of(f: &Fields) -> Result<GroupSpec> {
    let spec = match f.kind.as_str() {
        "abelian" => {
            f.check_keys(&["p", "rank"], &[])?;
            GroupSpec::Abelian {
                p: f.narrow("p")?,
                d: f.narrow("rank")?,
            }
        }
        "scalar" => {
            f.check_keys(&["p", "rank", "lambda"], &[])?;
            GroupSpec::ScalarSplit {
                p: f.narrow("p")?,
                d: f.narrow("rank")?,
                lambda: f.narrow("lambda")?,
            }
        }
        "matrix" => {
            f.check_keys(&["p", "action"], &[])?;
            GroupSpec::MatrixSplit {
                p: f.narrow("p")?,
                action: f.matrix("action")?,
            }
        }
        "maxclass3" => {
            f.check_keys(&[], &[])?;
            GroupSpec::MaxClass3
        }
        "torsion" => {
            f.check_keys(&["p", "rank", "lambda"], &[])?;
            GroupSpec::TorsionScalar {
                p: f.narrow("p")?,
                rank: f.narrow("rank")?,
                lambda: f.narrow("lambda")?,
            }
        }
        "affine" => {
            f.check_keys(&["p", "dim", "gen"], &["gen"])?;
            let dim: usize = f.narrow("dim")?;
            let generators = f
                .entries
                .iter()
                .filter(|(k, _)| k == "gen")
                .map(|(_, v)| match v {
                    Value::Matrix(m) => IntAffine::from_homogeneous(m).ok_or_else(|| {
                        ParseError::Semantic("gen must be a homogeneous (dim+1)-square matrix".into())
                    }),
                    Value::Int(_) => Err(ParseError::Semantic("gen must be a matrix".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            GroupSpec::CustomAffine {
                p: f.narrow("p")?,
                dim,
                generators,
                shape: CustomShape::Opaque,
            }
        }
        other => return Err(ParseError::Semantic(format!("unknown group kind {other:?}"))),
    };
    spec.validate().map_err(|e| ParseError::Semantic(e.to_string()))?;
    Ok(spec)
}

fn params_of(f: &Fields) -> Result<Params> {
    f.check_keys(&["max_index", "precision", "budget", "seed"], &[])?;
    let mut p = Params::default();
    if f.get("max_index").is_some() {
        p.max_index = f.narrow("max_index")?;
    }
    if f.get("precision").is_some() {
        p.precision = Precision::Fixed(f.narrow("precision")?);
    }
    if f.get("budget").is_some() {
        p.budget = f.narrow("budget")?;
    }
    if f.get("seed").is_some() {
        p.seed = f.narrow("seed")?;
    }
    Ok(p)
}

const KINDS: [&str; 6] = ["abelian", "scalar", "matrix", "maxclass3", "torsion", "affine"];

pub fn parse_spec(text: &str) -> Result<SpecDocument> {
    let lexer = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let toks = lexer.tokens()?;
    let lines: Vec<&str> = text.split('\n').collect();
    let end = (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1);
    let mut parser = Parser { toks, pos: 0, end };
    let mut doc = SpecDocument::default();
    let mut saw_params = false;
    while parser.peek().is_some() {
        let head = parser.ident("'group' or 'params'")?;
        match head.as_str() {
            "group" => {
                let at = parser.pos;
                let kind = parser.ident("group kind")?;
                if !KINDS.contains(&kind.as_str()) {
                    parser.pos = at;
                    return parser.error(format!("unknown group kind {kind:?}"));
                }
                let entries = parser.body()?;
                doc.groups.push(group_of(&Fields { kind, entries })?);
            }
            "params" => {
                if saw_params {
                    return Err(ParseError::Semantic("duplicate params block".into()));
                }
                saw_params = true;
                let entries = parser.body()?;
                doc.params = params_of(&Fields {
                    kind: "params".into(),
                    entries,
                })?;
            }
            _ => {
                parser.pos -= 1;
                return parser.error("expected 'group' or 'params'");
            }
        }
    }
    Ok(doc)
}

fn matrix_text(m: &[Vec<i64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(i64::to_string).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Canonical text of one group; mutant shapes print as plain affine groups.
pub fn print_group(spec: &GroupSpec) -> String {
    match spec {
        GroupSpec::Abelian { p, d } => format!("group abelian {{ p = {p}; rank = {d}; }}"),
        GroupSpec::ScalarSplit { p, d, lambda } => {
            format!("group scalar {{ p = {p}; rank = {d}; lambda = {lambda}; }}")
        }
        GroupSpec::MatrixSplit { p, action } => {
            format!("group matrix {{ p = {p}; action = {}; }}", matrix_text(action))
        }
        GroupSpec::MaxClass3 => "group maxclass3 { }".into(),
        GroupSpec::TorsionScalar { p, rank, lambda } => {
            format!("group torsion {{ p = {p}; rank = {rank}; lambda = {lambda}; }}")
        }
        GroupSpec::CustomAffine {
            p, dim, generators, ..
        } => {
            let mut s = format!("group affine {{ p = {p}; dim = {dim};");
            for g in generators {
                write!(s, " gen = {};", matrix_text(&g.homogeneous())).unwrap();
            }
            s.push_str(" }");
            s
        }
    }
}

pub fn print(doc: &SpecDocument) -> String {
    let mut s = String::new();
    if doc.params != Params::default() {
        let p = &doc.params;
        write!(s, "params {{ max_index = {}; ", p.max_index).unwrap();
        if let Precision::Fixed(k) = p.precision {
            write!(s, "precision = {k}; ").unwrap();
        }
        writeln!(s, "budget = {}; seed = {}; }}", p.budget, p.seed).unwrap();
    }
    for g in &doc.groups {
        s.push_str(&print_group(g));
        s.push('\n');
    }
    s
}

/// A bare integer matrix such as `[[0, 1], [1, 0]]`.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<i64>>> {
    let lexer = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let toks = lexer.tokens()?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: (1, text.chars().count() + 1),
    };
    let v = parser.value()?;
    if parser.peek().is_some() {
        return parser.error("trailing input");
    }
    match v {
        Value::Matrix(m) => Ok(m),
        Value::Int(_) => Err(ParseError::Semantic("expected a matrix".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use constgen::catalog::{mutant, MutantKind};

    #[test]
    fn scalar_example() {
        let doc = parse_spec("group scalar { p=3; rank=2; lambda=4; }").unwrap();
        assert_eq!(
            doc.groups,
            vec![GroupSpec::ScalarSplit {
                p: 3,
                d: 2,
                lambda: 4
            }]
        );
        assert_eq!(
            doc.groups[0].scalar_form(),
            Some(constgen::padic::ScalarForm::Plus(1))
        );
    }

    #[test]
    fn maxclass_example() {
        let doc = parse_spec("group maxclass3 {}").unwrap();
        assert_eq!(doc.groups, vec![GroupSpec::MaxClass3]);
    }

    #[test]
    fn malformed_reports_position() {
        let err = parse_spec("group scalar { p=2; rank=2; lambda=5; s... }").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, col: 40, .. }), "{err:?}");
        let err = parse_spec("group abelian {\n  p = 3\n  rank = 2; }").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, col: 3, .. }), "{err:?}");
    }

    #[test]
    fn semantic_errors() {
        for text in [
            "group abelian { p = 4; rank = 2; }",
            "group scalar { p = 2; rank = 2; lambda = 6; }",
            "group scalar { p = 3; rank = 2; lambda = 2; }",
            "group abelian { p = 3; }",
            "group abelian { p = 3; rank = 2; rank = 3; }",
            "group abelian { p = 3; rank = 2; colour = 1; }",
            "group affine { p = 2; dim = 1; gen = [[1, 0], [1, 1]]; }",
        ] {
            assert!(matches!(parse_spec(text), Err(ParseError::Semantic(_))), "{text}");
        }
        assert!(matches!(parse_spec("group cyclic { }"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn round_trip() {
        let text = "params { max_index = 3; precision = 5; budget = 1000; seed = 9; }\n\
                    group abelian { p = 5; rank = 2; }\n\
                    group matrix { p = 5; action = [[1, 5], [0, 1]]; }\n\
                    group affine { p = 2; dim = 2; gen = [[-1, 0, 0], [0, -1, 0], [0, 0, 1]]; gen = [[1, 0, 1], [0, 1, 0], [0, 0, 1]]; }\n";
        let doc = parse_spec(text).unwrap();
        assert_eq!(print(&doc), text);
        assert_eq!(parse_spec(&print(&doc)).unwrap(), doc);
    }

    #[test]
    fn mutants_print_as_affine() {
        let m = mutant(MutantKind::TorsionMinusOne, 2).unwrap();
        let doc = parse_spec(&print_group(&m)).unwrap();
        let (GroupSpec::CustomAffine { generators: a, .. }, GroupSpec::CustomAffine { generators: b, .. }) =
            (&doc.groups[0], &m)
        else {
            panic!("not affine");
        };
        assert_eq!(a, b);
    }

    #[test]
    fn bare_matrix() {
        assert_eq!(parse_matrix("[[0, 1], [1, 0]]").unwrap(), vec![vec![0, 1], vec![1, 0]]);
        assert!(parse_matrix("[[0, 1] [1, 0]]").is_err());
    }
}
