use super::{decode, ErrorCode, ParseError, SourceSpan};
use crate::engine::Event;
use crate::verb::Verb;

struct Word {
    text: String,
    span: SourceSpan,
}

/// Splits one trace line into words. Double quotes group a word and accept
/// `\"` and `\\` escapes; `#` outside quotes starts a comment.
fn words(line: &str, line_no: usize, file: &str) -> Result<Vec<Word>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let start = i;
        let mut text = String::new();
        if c == '"' {
            i += 1;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ParseError::syntax(
                            SourceSpan::new(file, line_no, start + 1, 1),
                            vec!["closing `\"`".into()],
                            "\"",
                            "unterminated quoted argument".into(),
                        ));
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => match chars.get(i + 1) {
                        Some(&e @ ('"' | '\\')) => {
                            text.push(e);
                            i += 2;
                        }
                        _ => {
                            return Err(ParseError::syntax(
                                SourceSpan::new(file, line_no, i + 1, 1),
                                vec!["`\\\"`".into(), "`\\\\`".into()],
                                "\\",
                                "unsupported escape in quoted argument".into(),
                            ));
                        }
                    },
                    Some(&other) => {
                        text.push(other);
                        i += 1;
                    }
                }
            }
        } else {
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '#' && chars[i] != '"' {
                text.push(chars[i]);
                i += 1;
            }
        }
        out.push(Word {
            text,
            span: SourceSpan::new(file, line_no, start + 1, i - start),
        });
    }
    Ok(out)
}

fn parse_line(line: &str, line_no: usize, file: &str, expected_seq: u64) -> Result<Option<Event>, ParseError> {
    let mut ws = words(line, line_no, file)?;
    if ws.is_empty() {
        return Ok(None);
    }
    // The sequence number may be written `3:` or `3 :`.
    let head = ws.remove(0);
    let (digits, colon_attached) = match head.text.strip_suffix(':') {
        Some(d) => (d.to_owned(), true),
        None => (head.text.clone(), false),
    };
    let seq_span = SourceSpan {
        length: digits.chars().count().max(1),
        ..head.span.clone()
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(ParseError::syntax(
            head.span.clone(),
            vec!["a sequence number".into()],
            &head.text,
            format!("expected a sequence number, found `{}`", head.text),
        ));
    }
    let seq: u64 = digits.parse().map_err(|_| {
        ParseError::syntax(
            seq_span.clone(),
            vec!["a sequence number".into()],
            &digits,
            "sequence number out of range".into(),
        )
    })?;
    if !colon_attached {
        match ws.first() {
            Some(w) if w.text == ":" => {
                ws.remove(0);
            }
            Some(w) => {
                return Err(ParseError::syntax(
                    w.span.clone(),
                    vec!["`:`".into()],
                    &w.text,
                    format!("expected `:`, found `{}`", w.text),
                ));
            }
            None => {
                let span = SourceSpan::new(file, line_no, line.chars().count() + 1, 0);
                return Err(ParseError::syntax(
                    span,
                    vec!["`:`".into()],
                    "",
                    "expected `:`, found end of line".into(),
                ));
            }
        }
    }
    if seq != expected_seq {
        return Err(ParseError::at(
            ErrorCode::Sequence,
            &seq_span,
            &digits,
            format!("expected event {expected_seq}, found {seq}"),
        ));
    }
    let end_span = || SourceSpan::new(file, line_no, line.chars().count() + 1, 0);
    if ws.is_empty() {
        return Err(ParseError::syntax(
            end_span(),
            vec!["an actor".into()],
            "",
            "expected an actor, found end of line".into(),
        ));
    }
    let actor = ws.remove(0);
    if ws.is_empty() {
        return Err(ParseError::syntax(
            end_span(),
            vec!["a verb".into()],
            "",
            "expected a verb, found end of line".into(),
        ));
    }
    let verb_word = ws.remove(0);
    let verb: Verb = verb_word.text.parse().map_err(|_| {
        ParseError::at(
            ErrorCode::UnknownVerb,
            &verb_word.span,
            &verb_word.text,
            format!("unknown verb `{}`", verb_word.text),
        )
    })?;
    let (min, max) = verb.arity();
    let n = ws.len();
    if n < min || max.is_some_and(|m| n > m) {
        let range = match max {
            Some(m) if m == min => format!("{min}"),
            Some(m) => format!("{min} to {m}"),
            None => format!("at least {min}"),
        };
        return Err(ParseError::at(
            ErrorCode::Arity,
            &verb_word.span,
            &verb_word.text,
            format!("`{verb}` takes {range} argument(s), found {n}"),
        ));
    }
    Ok(Some(Event {
        seq,
        actor: actor.text,
        verb,
        args: ws.into_iter().map(|w| w.text).collect(),
    }))
}

/// Parses a trace. Each non-blank line is `SEQ ":" ACTOR VERB {ARG}` and
/// sequence numbers start at 1 and increase by 1.
pub fn parse_trace(text: &str, file: &str) -> Result<Vec<Event>, ParseError> {
    let mut events = Vec::new();
    for (index, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(event) = parse_line(line, index + 1, file, events.len() as u64 + 1)? {
            events.push(event);
        }
    }
    Ok(events)
}

pub fn parse_trace_bytes(bytes: &[u8], file: &str) -> Result<Vec<Event>, ParseError> {
    parse_trace(decode(bytes, file)?, file)
}

fn quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && !arg
            .chars()
            .any(|c| c.is_whitespace() || c == '"' || c == '#' || c == '\\');
    if plain {
        return arg.to_owned();
    }
    let mut out = String::from("\"");
    for c in arg.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Canonical trace text, one event per line.
pub fn render_trace(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&format!("{}: {} {}", e.seq, quote(&e.actor), e.verb));
        for a in &e.args {
            out.push(' ');
            out.push_str(&quote(a));
        }
        out.push('\n');
    }
    out
}
