//! Lexer, syntax tree and recursive-descent parser for `.bsm` files.

use std::fmt;

use super::Diagnostic;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A name with the position it was written at. Equality ignores the
/// position, so re-parsed models compare equal.
#[derive(Debug, Clone, Eq)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

impl Name {
    pub fn new(text: impl Into<String>) -> Self {
        Name {
            text: text.into(),
            pos: Pos::default(),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Bare word or quoted string; `quoted` only matters for keywords.
    Word { text: String, quoted: bool },
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    DoubleColon,
    Eq,
    Arrow,
    Less,
    Tensor,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word { text, quoted: false } => write!(f, "`{text}`"),
            Tok::Word { text, quoted: true } => write!(f, "\"{text}\""),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::DoubleColon => f.write_str("`::`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Less => f.write_str("`<`"),
            Tok::Tensor => f.write_str("`⊗`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || "_-./'+^?!~@$%".contains(c)
}

/// Whether `s` can be written without quotes.
pub fn is_plain(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_word_char)
}

pub fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i).copied() {
                    None | Some('\n') => {
                        return Err(Diagnostic::new(pos.line, pos.column, "unterminated string"))
                    }
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, '"');
                        break;
                    }
                    Some('\\') => {
                        let e = chars.get(i + 1).copied();
                        match e {
                            Some(e @ ('"' | '\\')) => {
                                s.push(e);
                                advance(&mut i, &mut line, &mut col, '\\');
                                advance(&mut i, &mut line, &mut col, e);
                            }
                            Some('n') => {
                                s.push('\n');
                                advance(&mut i, &mut line, &mut col, '\\');
                                advance(&mut i, &mut line, &mut col, 'n');
                            }
                            _ => {
                                return Err(Diagnostic::new(line, col, "unknown escape in string"))
                            }
                        }
                    }
                    Some(ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
            }
            out.push((Tok::Word { text: s, quoted: true }, pos));
            continue;
        }
        let (tok, len) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            (':', Some(':')) => (Tok::DoubleColon, 2),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            ('=', _) => (Tok::Eq, 1),
            ('<', _) => (Tok::Less, 1),
            ('⊗', _) => (Tok::Tensor, 1),
            _ if is_word_char(c) => {
                let mut s = String::new();
                while let Some(&ch) = chars.get(i) {
                    if !is_word_char(ch) || (ch == '-' && chars.get(i + 1) == Some(&'>')) {
                        break;
                    }
                    s.push(ch);
                    advance(&mut i, &mut line, &mut col, ch);
                }
                out.push((Tok::Word { text: s, quoted: false }, pos));
                continue;
            }
            _ => {
                return Err(Diagnostic::new(
                    line,
                    col,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        for _ in 0..len {
            let ch = chars[i];
            advance(&mut i, &mut line, &mut col, ch);
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemDef {
    /// Explicit table: each row is `label -> (value per component)`.
    Table {
        over: Vec<Name>,
        rows: Vec<(String, Vec<String>)>,
    },
    Tensor(Vec<Name>),
    Components(Vec<Name>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImplDef {
    Map(Vec<(String, String)>),
    /// The implementation found by matching snapshots.
    Derive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuaranteeDef {
    Consistency { system: Name, set: Vec<String> },
    WeakAvailability(Name),
    StrongAvailability(Name),
    PartitionTolerance(Name, Name),
    Explicit { system: Name, family: Vec<Vec<String>> },
    All(Vec<Name>),
    /// The four CAP guarantees of a `cap` declaration.
    Cap(Name),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioDecl {
    pub timestamps: Vec<String>,
    pub values: Vec<String>,
    pub initial: Option<String>,
    pub max_length: usize,
    pub allow: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapDecl {
    pub sigma1: Name,
    pub sigma2: Name,
    pub consistent: Vec<String>,
    pub r: Name,
    pub s: Name,
    pub anchors: Option<Vec<String>>,
    pub pairing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclKind {
    Component {
        labels: Vec<String>,
        order: Option<Vec<(String, String)>>,
    },
    System(SystemDef),
    Impl {
        from: Name,
        to: Name,
        def: ImplDef,
    },
    Valuation(Vec<(Name, String, Vec<String>)>),
    Formula(String),
    Relation {
        on: Name,
        pairs: Vec<(String, String)>,
    },
    Guarantee(GuaranteeDef),
    Universe {
        systems: Vec<Name>,
        depth: usize,
    },
    Scenario(ScenarioDecl),
    Cap(CapDecl),
    Timed {
        observer: Name,
        sigma: Name,
        rho: Name,
    },
}

impl DeclKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            DeclKind::Component { .. } => "component",
            DeclKind::System(_) => "system",
            DeclKind::Impl { .. } => "impl",
            DeclKind::Valuation(_) => "valuation",
            DeclKind::Formula(_) => "formula",
            DeclKind::Relation { .. } => "relation",
            DeclKind::Guarantee(_) => "guarantee",
            DeclKind::Universe { .. } => "universe",
            DeclKind::Scenario(_) => "scenario",
            DeclKind::Cap(_) => "cap",
            DeclKind::Timed { .. } => "timed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: Name,
    pub kind: DeclKind,
    /// Position of the position-dependent parts (formula text, scenario
    /// atoms); not part of equality through `Name`.
    pub body_pos: BodyPos,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BodyPos(pub Pos);

impl PartialEq for BodyPos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for BodyPos {}

pub const KEYWORDS: [&str; 11] = [
    "component",
    "system",
    "impl",
    "valuation",
    "formula",
    "relation",
    "guarantee",
    "universe",
    "scenario",
    "cap",
    "timed",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let p = self.pos();
        Err(Diagnostic::new(p.line, p.column, msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn word(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Word { .. } => match self.bump().0 {
                Tok::Word { text, .. } => Ok(text),
                _ => unreachable!(),
            },
            _ => self.unexpected(what),
        }
    }

    fn name(&mut self, what: &str) -> PResult<Name> {
        let pos = self.pos();
        match self.peek() {
            Tok::Word { quoted: false, .. } => Ok(Name {
                text: self.word(what)?,
                pos,
            }),
            _ => self.unexpected(what),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word { text, quoted: false } if text == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    /// `open item (, item)* [,] close`, possibly empty.
    fn list<T>(
        &mut self,
        open: Tok,
        close: Tok,
        mut item: impl FnMut(&mut Self) -> PResult<T>,
    ) -> PResult<Vec<T>> {
        self.expect(open)?;
        let mut out = Vec::new();
        while *self.peek() != close {
            out.push(item(self)?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(close)?;
        Ok(out)
    }

    fn labels(&mut self) -> PResult<Vec<String>> {
        self.list(Tok::LBrace, Tok::RBrace, |p| p.word("a behaviour label"))
    }

    fn names(&mut self, open: Tok, close: Tok, what: &str) -> PResult<Vec<Name>> {
        self.list(open, close, |p| p.name(what))
    }

    fn pair(&mut self) -> PResult<(String, String)> {
        let a = self.word("a behaviour label")?;
        self.expect(Tok::Arrow)?;
        let b = self.word("a behaviour label")?;
        Ok((a, b))
    }

    fn number(&mut self, what: &str) -> PResult<usize> {
        let pos = self.pos();
        let w = self.word(what)?;
        w.parse()
            .map_err(|_| Diagnostic::new(pos.line, pos.column, format!("expected {what}, found `{w}`")))
    }

    fn decl(&mut self) -> PResult<Decl> {
        let kw_pos = self.pos();
        let kw = match self.peek() {
            Tok::Word { text, quoted: false } if KEYWORDS.contains(&text.as_str()) => text.clone(),
            _ => return self.unexpected("a declaration keyword"),
        };
        self.bump();
        let name = self.name("a declaration name")?;
        let mut body_pos = BodyPos(kw_pos);
        let kind = match kw.as_str() {
            "component" => {
                let labels = self.labels()?;
                let order = if self.is_keyword("order") {
                    self.bump();
                    Some(self.list(Tok::LBrace, Tok::RBrace, |p| {
                        let a = p.word("a behaviour label")?;
                        p.expect(Tok::Less)?;
                        let b = p.word("a behaviour label")?;
                        Ok((a, b))
                    })?)
                } else {
                    None
                };
                DeclKind::Component { labels, order }
            }
            "system" => DeclKind::System(self.system_def()?),
            "impl" => {
                self.expect(Tok::Colon)?;
                let from = self.name("a system name")?;
                self.expect(Tok::Arrow)?;
                let to = self.name("a system name")?;
                let def = if self.is_keyword("derive") {
                    self.bump();
                    ImplDef::Derive
                } else {
                    ImplDef::Map(self.list(Tok::LBrace, Tok::RBrace, Self::pair)?)
                };
                DeclKind::Impl { from, to, def }
            }
            "valuation" => DeclKind::Valuation(self.list(Tok::LBrace, Tok::RBrace, |p| {
                let comp = p.name("a component name")?;
                p.expect(Tok::DoubleColon)?;
                let var = p.word("a variable name")?;
                p.expect(Tok::Eq)?;
                Ok((comp, var, p.labels()?))
            })?),
            "formula" => {
                self.expect(Tok::Eq)?;
                body_pos = BodyPos(self.pos());
                match self.peek() {
                    Tok::Word { quoted: true, .. } => DeclKind::Formula(self.word("")?),
                    _ => return self.unexpected("a quoted formula"),
                }
            }
            "relation" => {
                self.keyword("on")?;
                let on = self.name("a system name")?;
                let pairs = self.list(Tok::LBrace, Tok::RBrace, Self::pair)?;
                DeclKind::Relation { on, pairs }
            }
            "guarantee" => {
                self.expect(Tok::Eq)?;
                DeclKind::Guarantee(self.guarantee_def()?)
            }
            "universe" => {
                let systems = self.names(Tok::LBrace, Tok::RBrace, "a system name")?;
                let depth = if self.is_keyword("depth") {
                    self.bump();
                    self.number("a depth")?
                } else {
                    0
                };
                DeclKind::Universe { systems, depth }
            }
            "scenario" => {
                body_pos = BodyPos(self.pos());
                DeclKind::Scenario(self.scenario()?)
            }
            "cap" => DeclKind::Cap(self.cap()?),
            "timed" => {
                self.expect(Tok::LBrace)?;
                self.keyword("observer")?;
                let observer = self.name("a component name")?;
                self.keyword("sigma")?;
                let sigma = self.name("an implementation name")?;
                self.keyword("rho")?;
                let rho = self.name("an implementation name")?;
                self.expect(Tok::RBrace)?;
                DeclKind::Timed {
                    observer,
                    sigma,
                    rho,
                }
            }
            _ => unreachable!(),
        };
        Ok(Decl {
            name,
            kind,
            body_pos,
        })
    }

    fn system_def(&mut self) -> PResult<SystemDef> {
        if self.is_keyword("over") {
            self.bump();
            let over = self.names(Tok::LParen, Tok::RParen, "a component name")?;
            let rows = self.list(Tok::LBrace, Tok::RBrace, |p| {
                let label = p.word("a behaviour label")?;
                p.expect(Tok::Arrow)?;
                let values = p.list(Tok::LParen, Tok::RParen, |p| p.word("a behaviour label"))?;
                Ok((label, values))
            })?;
            return Ok(SystemDef::Table { over, rows });
        }
        self.expect(Tok::Eq)?;
        if self.is_keyword("components") {
            self.bump();
            return Ok(SystemDef::Components(self.names(
                Tok::LParen,
                Tok::RParen,
                "a component name",
            )?));
        }
        let mut parts = vec![self.name("a system name")?];
        while self.eat(&Tok::Tensor) {
            parts.push(self.name("a system name")?);
        }
        if parts.len() < 2 {
            return self.unexpected("`⊗`");
        }
        Ok(SystemDef::Tensor(parts))
    }

    fn guarantee_def(&mut self) -> PResult<GuaranteeDef> {
        let pos = self.pos();
        let kind = self.word("a guarantee kind")?;
        let args = self.names(Tok::LParen, Tok::RParen, "a declaration name")?;
        let arity = |n: usize, p: &Self| -> PResult<()> {
            if args.len() != n {
                return Err(Diagnostic::new(
                    pos.line,
                    pos.column,
                    format!("`{kind}` takes {n} argument(s), got {}", args.len()),
                ));
            }
            let _ = p;
            Ok(())
        };
        Ok(match kind.as_str() {
            "consistency" => {
                arity(1, self)?;
                GuaranteeDef::Consistency {
                    system: args[0].clone(),
                    set: self.labels()?,
                }
            }
            "weak_availability" => {
                arity(1, self)?;
                GuaranteeDef::WeakAvailability(args[0].clone())
            }
            "strong_availability" => {
                arity(1, self)?;
                GuaranteeDef::StrongAvailability(args[0].clone())
            }
            "partition_tolerance" => {
                arity(2, self)?;
                GuaranteeDef::PartitionTolerance(args[0].clone(), args[1].clone())
            }
            "explicit" => {
                arity(1, self)?;
                GuaranteeDef::Explicit {
                    system: args[0].clone(),
                    family: self.list(Tok::LBrace, Tok::RBrace, Self::labels)?,
                }
            }
            "all" => GuaranteeDef::All(args),
            "cap" => {
                arity(1, self)?;
                GuaranteeDef::Cap(args[0].clone())
            }
            _ => {
                return Err(Diagnostic::new(
                    pos.line,
                    pos.column,
                    format!("unknown guarantee kind `{kind}`"),
                ))
            }
        })
    }

    fn words_until_field(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.word("a value")?];
        while self.eat(&Tok::Comma) {
            out.push(self.word("a value")?);
        }
        Ok(out)
    }

    fn scenario(&mut self) -> PResult<ScenarioDecl> {
        self.expect(Tok::LBrace)?;
        let (mut timestamps, mut values, mut initial, mut max_length, mut allow) =
            (None, None, None, None, None);
        while *self.peek() != Tok::RBrace {
            let pos = self.pos();
            let field = self.word("a scenario field")?;
            let dup = |seen: bool| -> PResult<()> {
                if seen {
                    return Err(Diagnostic::new(pos.line, pos.column, format!("`{field}` is set twice")));
                }
                Ok(())
            };
            match field.as_str() {
                "timestamps" => {
                    dup(timestamps.is_some())?;
                    timestamps = Some(self.words_until_field()?);
                }
                "values" => {
                    dup(values.is_some())?;
                    values = Some(self.words_until_field()?);
                }
                "initial" => {
                    dup(initial.is_some())?;
                    initial = Some(self.word("a value")?);
                }
                "max_length" => {
                    dup(max_length.is_some())?;
                    max_length = Some(self.number("a length")?);
                }
                "allow" => {
                    dup(allow.is_some())?;
                    allow = Some(self.words_until_field()?);
                }
                _ => {
                    return Err(Diagnostic::new(
                        pos.line,
                        pos.column,
                        format!("unknown scenario field `{field}`"),
                    ))
                }
            }
        }
        let end = self.expect(Tok::RBrace)?;
        let missing = |f: &str| Diagnostic::new(end.line, end.column, format!("scenario lacks `{f}`"));
        Ok(ScenarioDecl {
            timestamps: timestamps.ok_or_else(|| missing("timestamps"))?,
            values: values.ok_or_else(|| missing("values"))?,
            initial,
            max_length: max_length.ok_or_else(|| missing("max_length"))?,
            allow,
        })
    }

    fn cap(&mut self) -> PResult<CapDecl> {
        self.expect(Tok::LBrace)?;
        self.keyword("sigma1")?;
        let sigma1 = self.name("an implementation name")?;
        self.keyword("sigma2")?;
        let sigma2 = self.name("an implementation name")?;
        self.keyword("consistent")?;
        let consistent = self.labels()?;
        self.keyword("r")?;
        let r = self.name("a relation name")?;
        self.keyword("s")?;
        let s = self.name("a relation name")?;
        let anchors = if self.is_keyword("anchors") {
            self.bump();
            Some(self.labels()?)
        } else {
            None
        };
        let pairing = if self.is_keyword("pairing") {
            self.bump();
            Some(self.word("a pairing")?)
        } else {
            None
        };
        self.expect(Tok::RBrace)?;
        Ok(CapDecl {
            sigma1,
            sigma2,
            consistent,
            r,
            s,
            anchors,
            pairing,
        })
    }

    /// Skips to the next top-level declaration keyword.
    fn recover(&mut self) {
        self.bump();
        while *self.peek() != Tok::Eof {
            if KEYWORDS.iter().any(|k| self.is_keyword(k)) && self.toks[self.at].1.column == 1 {
                return;
            }
            self.bump();
        }
    }
}

/// Parses declarations; syntax errors are collected, resuming at the next
/// declaration keyword that starts a line.
pub fn parse_decls(text: &str) -> Result<Vec<Decl>, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, at: 0 };
    let mut decls = Vec::new();
    let mut diags = Vec::new();
    while *p.peek() != Tok::Eof {
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(d) => {
                diags.push(d);
                p.recover();
            }
        }
    }
    if diags.is_empty() {
        Ok(decls)
    } else {
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_arrows_inside_words() {
        let toks = lex("a->b -5 \"x y\" c::p ⊗").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|(t, _)| t).collect();
        assert_eq!(kinds[1], Tok::Arrow);
        assert_eq!(
            kinds[3],
            Tok::Word {
                text: "-5".into(),
                quoted: false
            }
        );
        assert_eq!(kinds[6], Tok::DoubleColon);
        assert_eq!(kinds[8], Tok::Tensor);
    }

    #[test]
    fn diagnostics_carry_positions() {
        let err = parse_decls("component c { a, b }\nsystem f over (c) { x -> (a }\n").unwrap_err();
        assert_eq!((err[0].line, err[0].column), (2, 29));
        let err = parse_decls("component c { a\n").unwrap_err();
        assert_eq!(err[0].line, 2);
    }

    #[test]
    fn recovers_at_the_next_declaration() {
        let err = parse_decls("component c a\ncomponent d {}\nformula p = x\nformula q = \"true\"").unwrap_err();
        assert_eq!(err.len(), 2);
        assert_eq!(err[1].line, 3);
    }
}
