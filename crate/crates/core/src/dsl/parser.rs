use std::collections::BTreeMap;

use super::lexer::{lex, Tok, Token};
use super::{decode, Document, ErrorCode, ParseError, SourceSpan, Spans};
use crate::deontic::{ActionPattern, DeonticRule, RuleOrigin, Scope, Stereotype};
use crate::ids::{AspectId, ContextId, EntityId, RoleType, RuleId, WarrantId};
use crate::metamodel::{EntityKind, Model, Warrant, WarrantScope};
use crate::patterns::{build_context, template, Instantiation, TemplateName};
use crate::verb::Verb;

#[derive(Debug, Clone)]
struct Name {
    text: String,
    span: SourceSpan,
}

#[derive(Debug)]
struct ContextStmt {
    id: Name,
    template: TemplateName,
    embodier: Name,
    binds: Vec<(Name, Vec<Name>)>,
    params: Vec<(Name, String)>,
}

#[derive(Debug)]
struct RuleStmt {
    stereotype: Stereotype,
    id: Name,
    scope: String,
    verb: Option<Verb>,
    target: Option<String>,
    template: Option<TemplateName>,
    derogates: Option<Name>,
    deadline: Option<Name>,
}

#[derive(Debug)]
struct WarrantStmt {
    id: Name,
    issuer: Name,
    grantee: Name,
    scope: WarrantScope,
    context: Option<Name>,
    expiry: Option<u64>,
}

#[derive(Debug, Default)]
struct Ast {
    entities: Vec<(Name, EntityKind)>,
    aspects: Vec<(Name, Name)>,
    owns: Vec<(Name, Name)>,
    contexts: Vec<ContextStmt>,
    rules: Vec<RuleStmt>,
    warrants: Vec<WarrantStmt>,
}

const KINDS: [EntityKind; 6] = [
    EntityKind::Inert,
    EntityKind::Actor,
    EntityKind::SentientActor,
    EntityKind::NaturalPerson,
    EntityKind::LegalPerson,
    EntityKind::JudicialAuthority,
];

const STATEMENTS: [&str; 9] = [
    "entity",
    "aspect",
    "owns",
    "context",
    "forbiddance",
    "allowance",
    "obligation",
    "exemption",
    "warrant",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        let expected: Vec<String> = expected.iter().map(|s| (*s).to_owned()).collect();
        let message = format!("expected {}, found {}", expected.join(" or "), describe(&t.tok));
        ParseError::syntax(t.span.clone(), expected, &t.tok.text(), message)
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w == word)
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        if self.at_word(word) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{word}`")]))
        }
    }

    fn punct(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{}`", tok.label())]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Name, ParseError> {
        match &self.peek().tok {
            Tok::Word(w) => {
                let name = Name {
                    text: w.clone(),
                    span: self.peek().span.clone(),
                };
                self.bump();
                Ok(name)
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn int(&mut self, what: &str) -> Result<(u64, SourceSpan), ParseError> {
        match self.peek().tok {
            Tok::Int(n) => {
                let span = self.peek().span.clone();
                self.bump();
                Ok((n, span))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn one_of<T: Copy>(&mut self, what: &str, choices: &[(&str, T)]) -> Result<T, ParseError> {
        if let Tok::Word(w) = &self.peek().tok {
            if let Some((_, v)) = choices.iter().find(|(name, _)| name == w) {
                let v = *v;
                self.bump();
                return Ok(v);
            }
        }
        let names: Vec<String> = choices.iter().map(|(n, _)| format!("`{n}`")).collect();
        let t = self.peek();
        let message = format!("expected {what}, found {}", describe(&t.tok));
        Err(ParseError::syntax(t.span.clone(), names, &t.tok.text(), message))
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected(&["end of line"])),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn template(&mut self) -> Result<TemplateName, ParseError> {
        let choices: Vec<(&str, TemplateName)> = TemplateName::ALL.iter().map(|t| (t.as_str(), *t)).collect();
        self.one_of("a template name", &choices)
    }

    fn model(&mut self) -> Result<Ast, ParseError> {
        let mut ast = Ast::default();
        loop {
            self.skip_newlines();
            let word = match &self.peek().tok {
                Tok::Eof => return Ok(ast),
                Tok::Word(w) if STATEMENTS.contains(&w.as_str()) => w.clone(),
                _ => {
                    let expected: Vec<String> = STATEMENTS.iter().map(|s| format!("`{s}`")).collect();
                    let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
                    return Err(self.unexpected(&refs));
                }
            };
            self.bump();
            match word.as_str() {
                "entity" => {
                    let id = self.ident("an entity id")?;
                    self.punct(Tok::Colon)?;
                    let choices: Vec<(&str, EntityKind)> = KINDS.iter().map(|k| (k.as_str(), *k)).collect();
                    let kind = self.one_of("an entity kind", &choices)?;
                    ast.entities.push((id, kind));
                }
                "aspect" => {
                    let id = self.ident("an aspect id")?;
                    self.keyword("of")?;
                    let entity = self.ident("an entity id")?;
                    ast.aspects.push((id, entity));
                }
                "owns" => {
                    let owner = self.ident("an owner entity id")?;
                    let owned = self.ident("an owned entity id")?;
                    ast.owns.push((owner, owned));
                }
                "context" => {
                    let stmt = self.context()?;
                    ast.contexts.push(stmt);
                }
                "warrant" => {
                    let stmt = self.warrant()?;
                    ast.warrants.push(stmt);
                }
                stereo => {
                    let stereotype: Stereotype = stereo.parse().expect("statement keyword");
                    let stmt = self.rule(stereotype)?;
                    ast.rules.push(stmt);
                }
            }
            self.end_of_statement()?;
        }
    }

    fn context(&mut self) -> Result<ContextStmt, ParseError> {
        let id = self.ident("a context id")?;
        self.punct(Tok::Colon)?;
        let template = self.template()?;
        self.keyword("embodied-by")?;
        let embodier = self.ident("an entity id")?;
        self.punct(Tok::LBrace)?;
        let mut stmt = ContextStmt {
            id,
            template,
            embodier,
            binds: Vec::new(),
            params: Vec::new(),
        };
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::RBrace {
                self.bump();
                return Ok(stmt);
            }
            if self.at_word("role") {
                self.bump();
                let role_type = self.ident("a role type")?;
                let mut aspects = vec![self.ident("an aspect id")?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    aspects.push(self.ident("an aspect id")?);
                }
                stmt.binds.push((role_type, aspects));
            } else if self.at_word("param") {
                self.bump();
                let key = self.ident("a parameter key")?;
                self.punct(Tok::Equals)?;
                let mut parts = vec![self.value()?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    parts.push(self.value()?);
                }
                stmt.params.push((key, parts.join(",")));
            } else {
                return Err(self.unexpected(&["`role`", "`param`", "`}`"]));
            }
            match self.peek().tok {
                Tok::Newline | Tok::RBrace => {}
                _ => return Err(self.unexpected(&["end of line", "`,`", "`}`"])),
            }
        }
    }

    fn value(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Word(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            Tok::Int(n) => {
                let n = *n;
                self.bump();
                Ok(n.to_string())
            }
            _ => Err(self.unexpected(&["a parameter value"])),
        }
    }

    fn rule(&mut self, stereotype: Stereotype) -> Result<RuleStmt, ParseError> {
        let id = self.ident("a rule id")?;
        self.keyword("on")?;
        let scope = self.ident("a role type or entity kind")?.text;
        self.punct(Tok::Colon)?;
        let verb = match &self.peek().tok {
            Tok::Star => {
                self.bump();
                None
            }
            Tok::Word(w) => match w.parse::<Verb>() {
                Ok(v) => {
                    self.bump();
                    Some(v)
                }
                Err(_) => {
                    let t = self.peek();
                    return Err(ParseError::syntax(
                        t.span.clone(),
                        vec!["a verb".into(), "`*`".into()],
                        w,
                        format!("unknown verb `{w}`"),
                    ));
                }
            },
            _ => return Err(self.unexpected(&["a verb", "`*`"])),
        };
        let mut stmt = RuleStmt {
            stereotype,
            id,
            scope,
            verb,
            target: None,
            template: None,
            derogates: None,
            deadline: None,
        };
        if self.at_word("target") {
            self.bump();
            stmt.target = Some(self.ident("a role type")?.text);
        }
        if self.at_word("in") {
            self.bump();
            stmt.template = Some(self.template()?);
        }
        if self.at_word("derogates") {
            self.bump();
            stmt.derogates = Some(self.ident("a rule id")?);
        }
        if self.at_word("deadline") {
            self.bump();
            let (n, span) = self.int("an integer deadline")?;
            stmt.deadline = Some(Name {
                text: n.to_string(),
                span,
            });
        }
        Ok(stmt)
    }

    fn warrant(&mut self) -> Result<WarrantStmt, ParseError> {
        let id = self.ident("a warrant id")?;
        self.keyword("from")?;
        let issuer = self.ident("an issuer entity id")?;
        self.keyword("to")?;
        let grantee = self.ident("a grantee entity id")?;
        self.keyword("scope")?;
        let choices: Vec<(&str, WarrantScope)> = WarrantScope::ALL.iter().map(|s| (s.as_str(), *s)).collect();
        let scope = self.one_of("a warrant scope", &choices)?;
        let mut stmt = WarrantStmt {
            id,
            issuer,
            grantee,
            scope,
            context: None,
            expiry: None,
        };
        if self.at_word("in") {
            self.bump();
            stmt.context = Some(self.ident("a context id")?);
        }
        if self.at_word("expires") {
            self.bump();
            stmt.expiry = Some(self.int("an integer expiry")?.0);
        }
        Ok(stmt)
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Newline | Tok::Eof => tok.label(),
        other => format!("`{}`", other.label()),
    }
}

fn duplicate(namespace: &str, name: &Name) -> ParseError {
    ParseError::at(
        ErrorCode::DuplicateId,
        &name.span,
        &name.text,
        format!("{namespace} `{}` is already declared", name.text),
    )
}

fn unknown(code: ErrorCode, namespace: &str, name: &Name) -> ParseError {
    ParseError::at(
        code,
        &name.span,
        &name.text,
        format!("unknown {namespace} `{}`", name.text),
    )
}

fn bind(ast: Ast, file: &str) -> Result<Document, ParseError> {
    let mut model = Model::new();
    let mut spans = Spans::default();

    for (id, kind) in &ast.entities {
        if spans.entities.contains_key(&id.text) {
            return Err(duplicate("entity", id));
        }
        model.tamper().insert_entity(EntityId::new(&id.text), *kind);
        spans.entities.insert(id.text.clone(), id.span.clone());
    }
    let entity = |name: &Name, model: &Model| {
        let id = EntityId::new(&name.text);
        match model.entity(&id) {
            Some(_) => Ok(id),
            None => Err(unknown(ErrorCode::UnknownEntity, "entity", name)),
        }
    };

    for (id, of) in &ast.aspects {
        let owner = entity(of, &model)?;
        if spans.aspects.contains_key(&id.text) {
            return Err(duplicate("aspect", id));
        }
        model
            .display_aspect_as(&owner, AspectId::new(&id.text), "")
            .map_err(|_| duplicate("aspect", id))?;
        spans.aspects.insert(id.text.clone(), id.span.clone());
    }

    for (owner, owned) in &ast.owns {
        let owner = entity(owner, &model)?;
        let owned = entity(owned, &model)?;
        model.tamper().add_ownership(&owner, &owned);
    }

    for ctx in &ast.contexts {
        if spans.contexts.contains_key(&ctx.id.text) {
            return Err(duplicate("context", &ctx.id));
        }
        let embodier = entity(&ctx.embodier, &model)?;
        if let Some(existing) = model.entity(&embodier).and_then(|e| e.embodies.clone()) {
            return Err(ParseError::at(
                ErrorCode::AlreadyEmbodied,
                &ctx.embodier.span,
                &ctx.embodier.text,
                format!("`{embodier}` already embodies `{existing}`"),
            ));
        }
        let t = template(ctx.template);
        let mut inst = Instantiation::new(ctx.id.text.as_str(), ctx.template, embodier);
        for (role_type, aspects) in &ctx.binds {
            if ctx.template != TemplateName::Generic && t.role(&role_type.text).is_none() {
                return Err(ParseError::at(
                    ErrorCode::UnknownRoleType,
                    &role_type.span,
                    &role_type.text,
                    format!("{} has no role type `{}`", ctx.template, role_type.text),
                ));
            }
            let mut ids = Vec::new();
            for a in aspects {
                let id = AspectId::new(&a.text);
                if model.aspect(&id).is_none() {
                    return Err(unknown(ErrorCode::UnknownAspect, "aspect", a));
                }
                ids.push(id);
            }
            inst.bindings.push((RoleType::new(&role_type.text), ids));
        }
        let mut params = BTreeMap::new();
        for (key, value) in &ctx.params {
            if params.insert(key.text.clone(), value.clone()).is_some() {
                return Err(duplicate("parameter", key));
            }
        }
        inst.params = params;
        build_context(&mut model, &inst).map_err(|_| duplicate("context", &ctx.id))?;
        spans.contexts.insert(ctx.id.text.clone(), ctx.id.span.clone());
    }

    for r in &ast.rules {
        let id = RuleId::new(&r.id.text);
        if model.rules().contains(&id) {
            return Err(duplicate("rule", &r.id));
        }
        if let Some(deadline) = &r.deadline {
            if r.stereotype != Stereotype::Obligation {
                return Err(ParseError::at(
                    ErrorCode::DeadlineOnNonObligation,
                    &deadline.span,
                    &deadline.text,
                    format!(
                        "only obligations take a deadline; `{}` is a {}",
                        r.id.text, r.stereotype
                    ),
                ));
            }
        }
        let mut pattern = ActionPattern::new(r.verb, Scope::parse(&r.scope));
        if let Some(target) = &r.target {
            pattern = pattern.target(target);
        }
        if let Some(t) = r.template {
            pattern = pattern.within(t);
        }
        let mut rule = DeonticRule::new(id, r.stereotype, pattern).with_origin(RuleOrigin::User);
        rule.derogates = r.derogates.as_ref().map(|d| RuleId::new(&d.text));
        rule.deadline = r.deadline.as_ref().map(|d| d.text.parse().expect("lexed integer"));
        model.tamper().insert_rule(rule);
        spans.rules.insert(r.id.text.clone(), r.id.span.clone());
    }
    for r in &ast.rules {
        if let Some(target) = &r.derogates {
            if !model.rules().contains(&RuleId::new(&target.text)) {
                return Err(unknown(ErrorCode::UnknownRule, "rule", target));
            }
        }
    }

    for w in &ast.warrants {
        if spans.warrants.contains_key(&w.id.text) {
            return Err(duplicate("warrant", &w.id));
        }
        let issuer = entity(&w.issuer, &model)?;
        let grantee = entity(&w.grantee, &model)?;
        let context = match &w.context {
            Some(c) => {
                let id = ContextId::new(&c.text);
                if model.context(&id).is_none() {
                    return Err(unknown(ErrorCode::UnknownContext, "context", c));
                }
                Some(id)
            }
            None => None,
        };
        model.tamper().insert_warrant(Warrant {
            id: WarrantId::new(&w.id.text),
            issuer,
            grantee,
            scope: w.scope,
            context,
            expiry: w.expiry,
        });
        spans.warrants.insert(w.id.text.clone(), w.id.span.clone());
    }

    Ok(Document {
        file: file.to_owned(),
        model,
        spans,
    })
}

/// Parses model source and binds its ids.
pub fn parse_document(text: &str, file: &str) -> Result<Document, ParseError> {
    let tokens = lex(text, file)?;
    let ast = Parser { tokens, pos: 0 }.model()?;
    bind(ast, file)
}

/// Parses model source read as raw bytes.
pub fn parse_model_bytes(bytes: &[u8], file: &str) -> Result<Document, ParseError> {
    parse_document(decode(bytes, file)?, file)
}

pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    parse_document(text, "<input>").map(|d| d.model)
}
