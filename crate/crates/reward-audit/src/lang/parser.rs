//! Recursive-descent parsers for `.rspec` and `.scn` documents.

use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex, Tok, Token};
use super::{ParseError, SpecDocument};
use crate::expr::{BinOp, CmpOp, Expr};
use crate::model::{
    Accrual, AttributeDef, AttributeKind, DesignProvenance, EpisodeConfig, FeatureDecl, RewardSpec,
    TerminalEvent, TimeLimit,
};
use crate::trajectory::{EventPlacement, EventSpec, NominalSpeed, ScenarioSpec};

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn new(text: &str) -> Result<Cursor, ParseError> {
        Ok(Cursor {
            tokens: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.next();
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        match self.peek().tok {
            Tok::Newline => {
                self.next();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.err("end of line")),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, u32, u32), ParseError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                let t = self.next();
                Ok((s, t.line, t.col))
            }
            _ => Err(self.err("identifier")),
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == word => {
                self.next();
                Ok(())
            }
            _ => Err(self.err(&format!("`{word}`"))),
        }
    }

    fn expect_tok(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    /// A scalar number with optional leading minus sign.
    fn expect_number(&mut self) -> Result<f64, ParseError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.peek().tok {
            Tok::Number(v) => {
                self.next();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.err("number")),
        }
    }

    fn expect_bool(&mut self) -> Result<bool, ParseError> {
        let (word, line, col) = self.expect_ident()?;
        match word.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(ParseError::Syntax {
                line,
                col,
                expected: format!("expected `true` or `false`, found `{other}`"),
            }),
        }
    }

    /// Comma-separated identifier list, possibly empty, ending at newline.
    fn ident_list(&mut self) -> Result<Vec<(String, u32, u32)>, ParseError> {
        let mut out = Vec::new();
        if matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
            return Ok(out);
        }
        loop {
            out.push(self.expect_ident()?);
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

fn parse_expr(c: &mut Cursor) -> Result<Expr, ParseError> {
    parse_additive(c)
}

fn parse_additive(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = parse_multiplicative(c)?;
    loop {
        let op = match c.peek().tok {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            _ => return Ok(lhs),
        };
        c.next();
        let rhs = parse_multiplicative(c)?;
        lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
    }
}

fn parse_multiplicative(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = parse_unary(c)?;
    loop {
        let op = match c.peek().tok {
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return Ok(lhs),
        };
        c.next();
        let rhs = parse_unary(c)?;
        lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
    }
}

fn parse_unary(c: &mut Cursor) -> Result<Expr, ParseError> {
    if c.peek().tok == Tok::Minus {
        c.next();
        let inner = parse_unary(c)?;
        // canonical form: a negated literal is a negative constant
        return Ok(match inner {
            Expr::Const(v) => Expr::Const(-v),
            other => Expr::Neg(Box::new(other)),
        });
    }
    parse_atom(c)
}

fn parse_atom(c: &mut Cursor) -> Result<Expr, ParseError> {
    match c.peek().tok.clone() {
        Tok::Number(v) => {
            c.next();
            Ok(Expr::Const(v))
        }
        Tok::LParen => {
            c.next();
            let inner = parse_expr(c)?;
            c.expect_tok(Tok::RParen, "`)`")?;
            Ok(inner)
        }
        Tok::Ident(name) => {
            let t = c.next();
            if c.peek().tok != Tok::LParen {
                return Ok(Expr::Feature(name));
            }
            c.next(); // (
            let expr = match name.as_str() {
                "min" | "max" => {
                    let a = parse_expr(c)?;
                    c.expect_tok(Tok::Comma, "`,`")?;
                    let b = parse_expr(c)?;
                    if name == "min" {
                        Expr::Min(Box::new(a), Box::new(b))
                    } else {
                        Expr::Max(Box::new(a), Box::new(b))
                    }
                }
                "abs" => Expr::Abs(Box::new(parse_expr(c)?)),
                "clip" => {
                    let x = parse_expr(c)?;
                    c.expect_tok(Tok::Comma, "`,`")?;
                    let lo = parse_expr(c)?;
                    c.expect_tok(Tok::Comma, "`,`")?;
                    let hi = parse_expr(c)?;
                    Expr::Clip {
                        x: Box::new(x),
                        lo: Box::new(lo),
                        hi: Box::new(hi),
                    }
                }
                "cond" => {
                    let lhs = parse_expr(c)?;
                    let op = match c.peek().tok {
                        Tok::Lt => CmpOp::Lt,
                        Tok::Le => CmpOp::Le,
                        Tok::Eq => CmpOp::Eq,
                        Tok::Ge => CmpOp::Ge,
                        Tok::Gt => CmpOp::Gt,
                        _ => return Err(c.err("comparison operator")),
                    };
                    c.next();
                    let rhs = parse_expr(c)?;
                    c.expect_tok(Tok::Comma, "`,`")?;
                    let then = parse_expr(c)?;
                    c.expect_tok(Tok::Comma, "`,`")?;
                    let otherwise = parse_expr(c)?;
                    Expr::Cond {
                        op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                        then: Box::new(then),
                        otherwise: Box::new(otherwise),
                    }
                }
                other => {
                    return Err(ParseError::Syntax {
                        line: t.line,
                        col: t.col,
                        expected: format!(
                            "one of min/max/abs/clip/cond, found unknown function `{other}`"
                        ),
                    })
                }
            };
            c.expect_tok(Tok::RParen, "`)`")?;
            Ok(expr)
        }
        _ => Err(c.err("expression")),
    }
}

// ---------------------------------------------------------------------------
// Key/value scaffolding
// ---------------------------------------------------------------------------

/// Tracks keys seen within one block so duplicates are rejected.
struct SeenKeys {
    block: String,
    seen: BTreeSet<String>,
}

impl SeenKeys {
    fn new(block: &str) -> SeenKeys {
        SeenKeys {
            block: block.to_string(),
            seen: BTreeSet::new(),
        }
    }

    fn check(&mut self, key: &str, line: u32, col: u32) -> Result<(), ParseError> {
        if !self.seen.insert(key.to_string()) {
            return Err(ParseError::DuplicateKey {
                line,
                col,
                key: key.to_string(),
                block: self.block.clone(),
            });
        }
        Ok(())
    }
}

fn unknown_key(key: &str, block: &str, line: u32, col: u32) -> ParseError {
    ParseError::UnknownKey {
        line,
        col,
        key: key.to_string(),
        block: block.to_string(),
    }
}

fn open_block(c: &mut Cursor) -> Result<(), ParseError> {
    c.expect_tok(Tok::LBrace, "`{`")?;
    c.expect_newline()?;
    Ok(())
}

/// Iterates `key = ...` lines until the closing brace.
fn for_each_block_line(
    c: &mut Cursor,
    mut f: impl FnMut(&mut Cursor, String, u32, u32) -> Result<(), ParseError>,
) -> Result<(), ParseError> {
    loop {
        c.skip_newlines();
        if c.peek().tok == Tok::RBrace {
            c.next();
            c.expect_newline()?;
            return Ok(());
        }
        let (key, line, col) = c.expect_ident()?;
        c.expect_tok(Tok::Eq, "`=`")?;
        f(c, key, line, col)?;
        c.expect_newline()?;
    }
}

// ---------------------------------------------------------------------------
// Reward spec documents
// ---------------------------------------------------------------------------

/// Parses a `.rspec` document into a [`SpecDocument`].
pub fn parse_spec_document(text: &str) -> Result<SpecDocument, ParseError> {
    let mut c = Cursor::new(text)?;
    let mut locations = BTreeMap::new();

    c.skip_newlines();
    let header = c.peek().clone();
    c.expect_keyword("reward_spec")?;
    let (id, _, _) = c.expect_ident()?;
    locations.insert("reward_spec".to_string(), (header.line, header.col));
    c.expect_newline()?;

    let mut source = None;
    let mut provenance = DesignProvenance::Unstated;
    let mut declared_shaping = BTreeSet::new();
    let mut episode: Option<EpisodeConfig> = None;
    let mut features: BTreeMap<String, FeatureDecl> = BTreeMap::new();
    let mut attributes: Vec<AttributeDef> = Vec::new();
    let mut terminal_rules: BTreeMap<TerminalEvent, Expr> = BTreeMap::new();
    // expression position per construct, for feature-resolution errors
    let mut expr_sites: Vec<(String, u32, u32, Expr)> = Vec::new();
    let mut meta_seen = SeenKeys::new("document");

    loop {
        c.skip_newlines();
        let t = c.peek().clone();
        match t.tok {
            Tok::Eof => break,
            Tok::Ident(word) => match word.as_str() {
                "episode" => {
                    if episode.is_some() {
                        return Err(ParseError::DuplicateKey {
                            line: t.line,
                            col: t.col,
                            key: "episode".to_string(),
                            block: "document".to_string(),
                        });
                    }
                    c.next();
                    locations.insert("episode".to_string(), (t.line, t.col));
                    episode = Some(parse_episode_block(&mut c)?);
                }
                "features" => {
                    c.next();
                    locations.insert("features".to_string(), (t.line, t.col));
                    parse_features_block(&mut c, &mut features)?;
                }
                "attribute" => {
                    c.next();
                    let (attr_id, aline, acol) = c.expect_ident()?;
                    locations.insert(format!("attribute {attr_id}"), (aline, acol));
                    let attr = parse_attribute_block(&mut c, &attr_id)?;
                    expr_sites.push((
                        format!("attribute {attr_id}"),
                        aline,
                        acol,
                        attr.expr.clone(),
                    ));
                    attributes.push(attr);
                }
                "terminal" => {
                    c.next();
                    let (kind_word, kline, kcol) = c.expect_ident()?;
                    let event = TerminalEvent::parse(&kind_word).ok_or(ParseError::Syntax {
                        line: kline,
                        col: kcol,
                        expected: format!("terminal event kind, found `{kind_word}`"),
                    })?;
                    if terminal_rules.contains_key(&event) {
                        return Err(ParseError::DuplicateTerminalRule {
                            line: kline,
                            col: kcol,
                            event: event.as_str().to_string(),
                        });
                    }
                    locations.insert(format!("terminal {event}"), (kline, kcol));
                    let expr = parse_terminal_block(&mut c)?;
                    expr_sites.push((format!("terminal {event}"), kline, kcol, expr.clone()));
                    terminal_rules.insert(event, expr);
                }
                _ => {
                    // top-level metadata pair
                    let (key, line, col) = c.expect_ident()?;
                    meta_seen.check(&key, line, col)?;
                    c.expect_tok(Tok::Eq, "`=`")?;
                    match key.as_str() {
                        "format_version" => {
                            let v = c.expect_number()?;
                            if v != 1.0 {
                                return Err(ParseError::Syntax {
                                    line,
                                    col,
                                    expected: format!("format_version 1, found {v}"),
                                });
                            }
                        }
                        "source" => match c.peek().tok.clone() {
                            Tok::Str(s) => {
                                c.next();
                                source = Some(s);
                            }
                            _ => return Err(c.err("quoted string")),
                        },
                        "provenance" => {
                            let (word, wline, wcol) = c.expect_ident()?;
                            provenance =
                                DesignProvenance::parse(&word).ok_or(ParseError::Syntax {
                                    line: wline,
                                    col: wcol,
                                    expected: format!(
                                        "one of principled/trial_and_error/unstated, found `{word}`"
                                    ),
                                })?;
                        }
                        "declared_shaping" => {
                            for (name, _, _) in c.ident_list()? {
                                declared_shaping.insert(name);
                            }
                        }
                        _ => return Err(unknown_key(key.as_str(), "document", line, col)),
                    }
                    c.expect_newline()?;
                }
            },
            _ => return Err(c.err("block or key")),
        }
    }

    // Resolve feature references against the declared schema.
    for (site, line, col, expr) in &expr_sites {
        let mut used = Vec::new();
        expr.features(&mut used);
        for name in used {
            if !features.contains_key(&name) {
                return Err(ParseError::UnknownFeature {
                    line: *line,
                    col: *col,
                    name,
                    site: site.clone(),
                });
            }
        }
        check_static_clip(expr, *line, *col)?;
    }
    for attr in &attributes {
        if let Accrual::OnEvent(kind) = &attr.accrual {
            let mass = format!("{kind}_events");
            if !features.contains_key(&mass) {
                let (line, col) = locations
                    .get(&format!("attribute {}", attr.id))
                    .copied()
                    .unwrap_or((0, 0));
                return Err(ParseError::UnknownFeature {
                    line,
                    col,
                    name: mass,
                    site: format!("attribute {}", attr.id),
                });
            }
        }
    }

    let spec = RewardSpec {
        id,
        source,
        per_step_attributes: attributes,
        terminal_rules,
        episode: episode.unwrap_or(EpisodeConfig {
            reward_step_s: None,
            decision_step_s: None,
            discount: None,
            episodic: true,
            time_limit: TimeLimit::Unstated,
            termination_criteria: BTreeSet::new(),
        }),
        design_provenance: provenance,
        declared_shaping_ids: declared_shaping,
        features,
    };

    Ok(SpecDocument {
        raw: text.to_string(),
        spec,
        locations,
    })
}

/// Rejects clip nodes whose constant bounds are inverted.
fn check_static_clip(expr: &Expr, line: u32, col: u32) -> Result<(), ParseError> {
    let mut findings = Vec::new();
    crate::model::collect_invalid_clips(expr, &mut findings);
    if let Some((lo, hi)) = findings.first() {
        return Err(ParseError::InvalidClipBounds {
            line,
            col,
            lo: *lo,
            hi: *hi,
        });
    }
    Ok(())
}

fn parse_episode_block(c: &mut Cursor) -> Result<EpisodeConfig, ParseError> {
    open_block(c)?;
    let mut seen = SeenKeys::new("episode");
    let mut config = EpisodeConfig {
        reward_step_s: None,
        decision_step_s: None,
        discount: None,
        episodic: true,
        time_limit: TimeLimit::Unstated,
        termination_criteria: BTreeSet::new(),
    };
    for_each_block_line(c, |c, key, line, col| {
        seen.check(&key, line, col)?;
        match key.as_str() {
            "reward_step_s" => config.reward_step_s = Some(c.expect_number()?),
            "decision_step_s" => config.decision_step_s = Some(c.expect_number()?),
            "discount" => config.discount = Some(c.expect_number()?),
            "episodic" => config.episodic = c.expect_bool()?,
            "time_limit_s" => {
                config.time_limit = match c.peek().tok.clone() {
                    Tok::Ident(word) if word == "route_dependent" => {
                        c.next();
                        TimeLimit::RouteDependent
                    }
                    Tok::Ident(word) if word == "none" => {
                        c.next();
                        TimeLimit::StatedNone
                    }
                    _ => TimeLimit::Seconds(c.expect_number()?),
                };
            }
            "termination" => {
                for (word, wline, wcol) in c.ident_list()? {
                    let event = TerminalEvent::parse(&word).ok_or(ParseError::Syntax {
                        line: wline,
                        col: wcol,
                        expected: format!("terminal event kind, found `{word}`"),
                    })?;
                    config.termination_criteria.insert(event);
                }
            }
            other => return Err(unknown_key(other, "episode", line, col)),
        }
        Ok(())
    })?;
    Ok(config)
}

fn parse_features_block(
    c: &mut Cursor,
    features: &mut BTreeMap<String, FeatureDecl>,
) -> Result<(), ParseError> {
    open_block(c)?;
    for_each_block_line(c, |c, name, line, col| {
        if features.contains_key(&name) {
            return Err(ParseError::DuplicateKey {
                line,
                col,
                key: name,
                block: "features".to_string(),
            });
        }
        let (unit, _, _) = c.expect_ident()?;
        let default = if matches!(&c.peek().tok, Tok::Ident(w) if w == "default") {
            c.next();
            Some(c.expect_number()?)
        } else {
            None
        };
        features.insert(name, FeatureDecl { unit, default });
        Ok(())
    })
}

fn parse_attribute_block(c: &mut Cursor, id: &str) -> Result<AttributeDef, ParseError> {
    let header = c.peek().clone();
    open_block(c)?;
    let mut seen = SeenKeys::new(&format!("attribute {id}"));
    let mut weight = None;
    let mut expr = None;
    let mut kind = AttributeKind::Ambiguous;
    let mut tags = BTreeSet::new();
    let mut accrual = Accrual::PerRewardStep;
    for_each_block_line(c, |c, key, line, col| {
        seen.check(&key, line, col)?;
        match key.as_str() {
            "weight" => weight = Some(c.expect_number()?),
            "expr" => expr = Some(parse_expr(c)?),
            "kind" => {
                let (word, wline, wcol) = c.expect_ident()?;
                kind = AttributeKind::parse(&word).ok_or(ParseError::Syntax {
                    line: wline,
                    col: wcol,
                    expected: format!("one of outcome/shaping/ambiguous, found `{word}`"),
                })?;
            }
            "tags" => {
                for (word, wline, wcol) in c.ident_list()? {
                    let tag =
                        crate::model::OutcomeTag::parse(&word).ok_or(ParseError::UnknownTag {
                            line: wline,
                            col: wcol,
                            tag: word,
                        })?;
                    tags.insert(tag);
                }
            }
            "accrual" => {
                let (word, wline, wcol) = c.expect_ident()?;
                accrual = match word.as_str() {
                    "per_reward_step" => Accrual::PerRewardStep,
                    "per_decision_step" => Accrual::PerDecisionStep,
                    "on_event" => {
                        c.expect_tok(Tok::LParen, "`(`")?;
                        let (kind_word, _, _) = c.expect_ident()?;
                        c.expect_tok(Tok::RParen, "`)`")?;
                        Accrual::OnEvent(kind_word)
                    }
                    other => {
                        return Err(ParseError::Syntax {
                            line: wline,
                            col: wcol,
                            expected: format!(
                                "one of per_reward_step/per_decision_step/on_event(kind), found `{other}`"
                            ),
                        })
                    }
                };
            }
            other => return Err(unknown_key(other, &format!("attribute {id}"), line, col)),
        }
        Ok(())
    })?;
    let weight = weight.ok_or(ParseError::MissingKey {
        line: header.line,
        col: header.col,
        key: "weight".to_string(),
        block: format!("attribute {id}"),
    })?;
    let expr = expr.ok_or(ParseError::MissingKey {
        line: header.line,
        col: header.col,
        key: "expr".to_string(),
        block: format!("attribute {id}"),
    })?;
    Ok(AttributeDef {
        id: id.to_string(),
        weight,
        expr,
        kind,
        outcome_tags: tags,
        accrual,
    })
}

fn parse_terminal_block(c: &mut Cursor) -> Result<Expr, ParseError> {
    let header = c.peek().clone();
    open_block(c)?;
    let mut seen = SeenKeys::new("terminal");
    let mut expr = None;
    for_each_block_line(c, |c, key, line, col| {
        seen.check(&key, line, col)?;
        match key.as_str() {
            "expr" => expr = Some(parse_expr(c)?),
            other => return Err(unknown_key(other, "terminal", line, col)),
        }
        Ok(())
    })?;
    expr.ok_or(ParseError::MissingKey {
        line: header.line,
        col: header.col,
        key: "expr".to_string(),
        block: "terminal".to_string(),
    })
}

// ---------------------------------------------------------------------------
// Scenario documents
// ---------------------------------------------------------------------------

fn invalid(line: u32, col: u32, message: String) -> ParseError {
    ParseError::InvalidValue { line, col, message }
}

/// Parses a `.scn` document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ParseError> {
    let mut c = Cursor::new(text)?;
    c.skip_newlines();
    c.expect_keyword("scenario")?;
    let (id, _, _) = c.expect_ident()?;
    c.expect_newline()?;

    let mut path_length_km: Option<f64> = None;
    let mut speed = NominalSpeed::Unspecified;
    let mut success_time_s = None;
    let mut time_limit_s = None;
    let mut idle_cutoff_s = None;
    let mut overlap_s = 0.0;
    let mut events: Vec<EventSpec> = Vec::new();
    let mut features = BTreeMap::new();
    let mut baselines = Vec::new();

    loop {
        c.skip_newlines();
        let t = c.peek().clone();
        match t.tok {
            Tok::Eof => break,
            Tok::Ident(word) => match word.as_str() {
                "params" => {
                    c.next();
                    open_block(&mut c)?;
                    let mut seen = SeenKeys::new("params");
                    for_each_block_line(&mut c, |c, key, line, col| {
                        seen.check(&key, line, col)?;
                        match key.as_str() {
                            "path_length_km" => {
                                let v = c.expect_number()?;
                                if v < 0.0 {
                                    return Err(invalid(
                                        line,
                                        col,
                                        format!("path_length_km must be >= 0, got {v}"),
                                    ));
                                }
                                path_length_km = Some(v);
                            }
                            "speed_mps" | "speed_kmh" => {
                                if !matches!(speed, NominalSpeed::Unspecified) {
                                    return Err(invalid(
                                        line,
                                        col,
                                        "speed given twice (speed_mps and speed_kmh)".to_string(),
                                    ));
                                }
                                let v = c.expect_number()?;
                                if v < 0.0 {
                                    return Err(invalid(
                                        line,
                                        col,
                                        format!("speed must be >= 0, got {v}"),
                                    ));
                                }
                                speed = if key == "speed_mps" {
                                    NominalSpeed::Mps(v)
                                } else {
                                    NominalSpeed::Kmh(v)
                                };
                            }
                            "success_time_s" => {
                                let v = c.expect_number()?;
                                if v <= 0.0 {
                                    return Err(invalid(
                                        line,
                                        col,
                                        format!("success_time_s must be > 0, got {v}"),
                                    ));
                                }
                                success_time_s = Some(v);
                            }
                            "time_limit_s" => {
                                let v = c.expect_number()?;
                                if v <= 0.0 {
                                    return Err(invalid(
                                        line,
                                        col,
                                        format!("time_limit_s must be > 0, got {v}"),
                                    ));
                                }
                                time_limit_s = Some(v);
                            }
                            "idle_cutoff_s" => {
                                let v = c.expect_number()?;
                                if v < 0.0 {
                                    return Err(invalid(
                                        line,
                                        col,
                                        format!("idle_cutoff_s must be >= 0, got {v}"),
                                    ));
                                }
                                idle_cutoff_s = Some(v);
                            }
                            "overlap_s" => {
                                let v = c.expect_number()?;
                                if v < 0.0 {
                                    return Err(invalid(
                                        line,
                                        col,
                                        format!("overlap_s must be >= 0, got {v}"),
                                    ));
                                }
                                overlap_s = v;
                            }
                            other => return Err(unknown_key(other, "params", line, col)),
                        }
                        Ok(())
                    })?;
                }
                "event" => {
                    c.next();
                    let (kind, kline, kcol) = c.expect_ident()?;
                    open_block(&mut c)?;
                    let mut placement: Option<EventPlacement> = None;
                    for_each_block_line(&mut c, |c, key, line, col| {
                        if placement.is_some() {
                            return Err(invalid(
                                line,
                                col,
                                "event block takes exactly one placement key".to_string(),
                            ));
                        }
                        let v = c.expect_number()?;
                        if v < 0.0 {
                            return Err(invalid(
                                line,
                                col,
                                format!("event amounts must be >= 0, got {v}"),
                            ));
                        }
                        placement = Some(match key.as_str() {
                            "rate_per_km" => EventPlacement::RatePerKm(v),
                            "count" => EventPlacement::CountPerEpisode(v),
                            "once" => EventPlacement::Once(v),
                            "pre_collision" => EventPlacement::PreCollision(v),
                            other => {
                                return Err(unknown_key(other, &format!("event {kind}"), line, col))
                            }
                        });
                        Ok(())
                    })?;
                    let placement = placement.ok_or(ParseError::MissingKey {
                        line: kline,
                        col: kcol,
                        key: "rate_per_km|count|once|pre_collision".to_string(),
                        block: format!("event {kind}"),
                    })?;
                    events.push(EventSpec { kind, placement });
                }
                "features" => {
                    c.next();
                    open_block(&mut c)?;
                    for_each_block_line(&mut c, |c, name, line, col| {
                        if features.contains_key(&name) {
                            return Err(ParseError::DuplicateKey {
                                line,
                                col,
                                key: name,
                                block: "features".to_string(),
                            });
                        }
                        features.insert(name, c.expect_number()?);
                        Ok(())
                    })?;
                }
                "baselines" => {
                    c.next();
                    parse_baselines_block(&mut c, &mut baselines)?;
                }
                other => {
                    return Err(ParseError::UnknownKey {
                        line: t.line,
                        col: t.col,
                        key: other.to_string(),
                        block: "scenario".to_string(),
                    })
                }
            },
            _ => return Err(c.err("block")),
        }
    }

    let path_length_km = path_length_km.ok_or(ParseError::MissingKey {
        line: 1,
        col: 1,
        key: "path_length_km".to_string(),
        block: "params".to_string(),
    })?;

    Ok(ScenarioSpec {
        id,
        path_length_km,
        speed,
        success_time_s,
        time_limit_s,
        idle_cutoff_s,
        overlap_s,
        events,
        features,
        baselines,
    })
}

fn parse_baselines_block(c: &mut Cursor, out: &mut Vec<(String, f64)>) -> Result<(), ParseError> {
    open_block(c)?;
    let mut seen = SeenKeys::new("baselines");
    for_each_block_line(c, |c, key, line, col| {
        seen.check(&key, line, col)?;
        let v = c.expect_number()?;
        if v <= 0.0 || !v.is_finite() {
            return Err(invalid(
                line,
                col,
                format!("baseline km per collision must be a positive finite number, got {v}"),
            ));
        }
        out.push((key, v));
        Ok(())
    })
}

/// Parses a standalone baseline-override config (a bare `baselines { ... }`
/// block in `.scn` style).
pub fn parse_baselines(text: &str) -> Result<Vec<(String, f64)>, ParseError> {
    let mut c = Cursor::new(text)?;
    c.skip_newlines();
    c.expect_keyword("baselines")?;
    let mut out = Vec::new();
    parse_baselines_block(&mut c, &mut out)?;
    c.skip_newlines();
    if c.peek().tok != Tok::Eof {
        return Err(c.err("end of input"));
    }
    Ok(out)
}
