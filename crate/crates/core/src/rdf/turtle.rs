//! Deterministic Turtle writer and the matching reader.
//!
//! The writer sorts subjects, predicates within a subject and objects within
//! a predicate, so byte-identical input graphs produce byte-identical files.
//! The reader accepts exactly the profile the writer emits (prefixed names,
//! IRIs, typed and plain literals, predicate and object lists) plus blank
//! node labels for input tolerance.

use std::collections::BTreeMap;

use super::{Iri, Literal, RdfGraph, Subject, Term, Triple, XSD_STRING};

/// Well-known prefixes are emitted first, in this order, before any
/// module-specific base prefix.
const PREFIX_ORDER: [&str; 9] = [
    "cap", "vdi3682", "vdi2206", "isa88", "din61360", "opcua", "rdf", "rdfs", "xsd",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("turtle syntax error at line {line}: {message}")]
pub struct TurtleError {
    pub line: usize,
    pub message: String,
}

impl TurtleError {
    fn new(line: usize, message: impl Into<String>) -> TurtleError {
        TurtleError {
            line,
            message: message.into(),
        }
    }
}

pub fn serialize(graph: &RdfGraph) -> String {
    let mut out = String::new();
    let mut ordered: Vec<(&str, &str)> = Vec::new();
    for name in PREFIX_ORDER {
        if let Some(ns) = graph.prefixes().get(name) {
            ordered.push((name, ns));
        }
    }
    for (name, ns) in graph.prefixes() {
        if !PREFIX_ORDER.contains(&name.as_str()) {
            ordered.push((name, ns));
        }
    }
    for (name, ns) in &ordered {
        out.push_str(&format!("@prefix {name}: <{ns}> .\n"));
    }

    // subject -> predicate -> rendered objects
    let mut by_subject: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    for triple in graph.iter() {
        let subject = render_subject(graph, &triple.subject);
        let predicate = render_predicate(graph, &triple.predicate);
        by_subject
            .entry(subject)
            .or_default()
            .entry(predicate)
            .or_default()
            .push(render_term(graph, &triple.object));
    }

    for (subject, predicates) in &by_subject {
        out.push('\n');
        out.push_str(subject);
        let indent = " ".repeat(subject.chars().count() + 1);
        let mut first = true;
        for (predicate, objects) in predicates {
            let mut objects = objects.clone();
            objects.sort();
            objects.dedup();
            if first {
                out.push(' ');
                first = false;
            } else {
                out.push_str(" ;\n");
                out.push_str(&indent);
            }
            out.push_str(predicate);
            out.push(' ');
            out.push_str(&objects.join(" , "));
        }
        out.push_str(" .\n");
    }
    out
}

fn render_subject(graph: &RdfGraph, subject: &Subject) -> String {
    match subject {
        Subject::Iri(iri) => render_iri(graph, iri),
        Subject::Blank(label) => format!("_:{label}"),
    }
}

fn render_predicate(graph: &RdfGraph, predicate: &Iri) -> String {
    if predicate.as_str() == crate::vocab::rdf::TYPE {
        "a".to_string()
    } else {
        render_iri(graph, predicate)
    }
}

fn render_term(graph: &RdfGraph, term: &Term) -> String {
    match term {
        Term::Iri(iri) => render_iri(graph, iri),
        Term::Blank(label) => format!("_:{label}"),
        Term::Literal(lit) => render_literal(graph, lit),
    }
}

fn render_literal(graph: &RdfGraph, lit: &Literal) -> String {
    let quoted = format!("\"{}\"", escape_literal(&lit.lexical));
    if lit.datatype.as_str() == XSD_STRING {
        quoted
    } else {
        format!("{quoted}^^{}", render_iri(graph, &lit.datatype))
    }
}

fn render_iri(graph: &RdfGraph, iri: &Iri) -> String {
    for (prefix, ns) in graph.prefixes() {
        if let Some(local) = iri.as_str().strip_prefix(ns.as_str()) {
            if is_safe_local(local) {
                return format!("{prefix}:{local}");
            }
        }
    }
    format!("<{}>", iri.as_str())
}

/// Conservative PN_LOCAL subset: what our IRI templates can produce.
fn is_safe_local(local: &str) -> bool {
    if local.is_empty() || local.ends_with('.') {
        return false;
    }
    let mut chars = local.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

pub fn parse(text: &str) -> Result<RdfGraph, TurtleError> {
    Parser::new(text).run()
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    line: usize,
    graph: RdfGraph,
    prefixes: BTreeMap<String, String>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        Parser {
            input: text.as_bytes(),
            pos: 0,
            line: 1,
            graph: RdfGraph::new(),
            prefixes: BTreeMap::new(),
        }
    }

    fn run(mut self) -> Result<RdfGraph, TurtleError> {
        loop {
            self.skip_ws();
            if self.at_end() {
                break;
            }
            if self.peek_str("@prefix") {
                self.parse_prefix()?;
            } else {
                self.parse_statement()?;
            }
        }
        for (prefix, ns) in &self.prefixes {
            // Input prefixes cannot conflict with themselves.
            let _ = self.graph.register_prefix(prefix, ns);
        }
        Ok(self.graph)
    }

    fn parse_prefix(&mut self) -> Result<(), TurtleError> {
        self.expect_str("@prefix")?;
        self.skip_ws();
        let name = self.take_while(|c| c != b':');
        self.expect(b':')?;
        self.skip_ws();
        let ns = self.parse_iri_ref()?;
        self.skip_ws();
        self.expect(b'.')?;
        self.prefixes.insert(name, ns);
        Ok(())
    }

    fn parse_statement(&mut self) -> Result<(), TurtleError> {
        let subject = match self.parse_term()? {
            Term::Iri(iri) => Subject::Iri(iri),
            Term::Blank(label) => Subject::Blank(label),
            Term::Literal(_) => {
                return Err(TurtleError::new(self.line, "literal as subject"));
            }
        };
        loop {
            self.skip_ws();
            let predicate = self.parse_predicate()?;
            loop {
                self.skip_ws();
                let object = self.parse_term()?;
                self.graph.add(Triple::new(
                    subject.clone(),
                    predicate.clone(),
                    object,
                ));
                self.skip_ws();
                if self.peek() == Some(b',') {
                    self.advance();
                } else {
                    break;
                }
            }
            match self.peek() {
                Some(b';') => {
                    self.advance();
                    self.skip_ws();
                    // tolerate a trailing ';' before '.'
                    if self.peek() == Some(b'.') {
                        self.advance();
                        return Ok(());
                    }
                }
                Some(b'.') => {
                    self.advance();
                    return Ok(());
                }
                other => {
                    return Err(TurtleError::new(
                        self.line,
                        format!("expected ';' or '.', found {:?}", other.map(char::from)),
                    ));
                }
            }
        }
    }

    fn parse_predicate(&mut self) -> Result<Iri, TurtleError> {
        if self.peek() == Some(b'a')
            && matches!(self.peek_at(1), None | Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r'))
        {
            self.advance();
            return Ok(Iri::new(crate::vocab::rdf::TYPE).unwrap());
        }
        match self.parse_term()? {
            Term::Iri(iri) => Ok(iri),
            _ => Err(TurtleError::new(self.line, "predicate must be an IRI")),
        }
    }

    fn parse_term(&mut self) -> Result<Term, TurtleError> {
        match self.peek() {
            Some(b'<') => {
                let iri = self.parse_iri_ref()?;
                Iri::new(iri)
                    .map(Term::Iri)
                    .map_err(|e| TurtleError::new(self.line, e.to_string()))
            }
            Some(b'"') => self.parse_literal(),
            Some(b'_') => {
                self.expect(b'_')?;
                self.expect(b':')?;
                let label = self.take_while(is_name_byte);
                if label.is_empty() {
                    return Err(TurtleError::new(self.line, "empty blank node label"));
                }
                Ok(Term::Blank(label))
            }
            Some(_) => {
                let prefix = self.take_while(|c| is_name_byte(c) && c != b':');
                self.expect(b':')?;
                let local = self.take_while(is_name_byte);
                let ns = self.prefixes.get(&prefix).ok_or_else(|| {
                    TurtleError::new(self.line, format!("undefined prefix {prefix:?}"))
                })?;
                Iri::new(format!("{ns}{local}"))
                    .map(Term::Iri)
                    .map_err(|e| TurtleError::new(self.line, e.to_string()))
            }
            None => Err(TurtleError::new(self.line, "unexpected end of input")),
        }
    }

    fn parse_literal(&mut self) -> Result<Term, TurtleError> {
        self.expect(b'"')?;
        let mut lexical = String::new();
        loop {
            match self.next_char()? {
                '"' => break,
                '\\' => match self.next_char()? {
                    '\\' => lexical.push('\\'),
                    '"' => lexical.push('"'),
                    'n' => lexical.push('\n'),
                    'r' => lexical.push('\r'),
                    't' => lexical.push('\t'),
                    other => {
                        return Err(TurtleError::new(
                            self.line,
                            format!("unsupported escape \\{other}"),
                        ));
                    }
                },
                '\n' => return Err(TurtleError::new(self.line, "newline in literal")),
                other => lexical.push(other),
            }
        }
        let datatype = if self.peek_str("^^") {
            self.pos += 2;
            match self.parse_term()? {
                Term::Iri(iri) => iri,
                _ => return Err(TurtleError::new(self.line, "datatype must be an IRI")),
            }
        } else {
            Iri::new(XSD_STRING).unwrap()
        };
        Ok(Term::Literal(Literal { lexical, datatype }))
    }

    fn parse_iri_ref(&mut self) -> Result<String, TurtleError> {
        self.expect(b'<')?;
        let mut iri = String::new();
        loop {
            match self.next_char()? {
                '>' => break,
                c if c.is_whitespace() => {
                    return Err(TurtleError::new(self.line, "whitespace inside IRI"));
                }
                c => iri.push(c),
            }
        }
        Ok(iri)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(b'\n') => {
                    self.line += 1;
                    self.advance();
                }
                Some(c) if c.is_ascii_whitespace() => self.advance(),
                Some(b'#') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.advance();
                    }
                }
                _ => break,
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if pred(c) {
                self.advance();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.input[start..self.pos]).into_owned()
    }

    fn next_char(&mut self) -> Result<char, TurtleError> {
        let rest = std::str::from_utf8(&self.input[self.pos..])
            .map_err(|_| TurtleError::new(self.line, "invalid UTF-8"))?;
        let c = rest
            .chars()
            .next()
            .ok_or_else(|| TurtleError::new(self.line, "unexpected end of input"))?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
        }
        Ok(c)
    }

    fn expect(&mut self, byte: u8) -> Result<(), TurtleError> {
        if self.peek() == Some(byte) {
            self.advance();
            Ok(())
        } else {
            Err(TurtleError::new(
                self.line,
                format!(
                    "expected {:?}, found {:?}",
                    char::from(byte),
                    self.peek().map(char::from)
                ),
            ))
        }
    }

    fn expect_str(&mut self, s: &str) -> Result<(), TurtleError> {
        if self.peek_str(s) {
            self.pos += s.len();
            Ok(())
        } else {
            Err(TurtleError::new(self.line, format!("expected {s:?}")))
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.input.get(self.pos + offset).copied()
    }

    fn peek_str(&self, s: &str) -> bool {
        self.input[self.pos..].starts_with(s.as_bytes())
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn at_end(&self) -> bool {
        self.pos >= self.input.len()
    }
}

fn is_name_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.' || !c.is_ascii()
}
