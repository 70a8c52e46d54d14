use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Int(u64),
    Colon,
    Comma,
    Equals,
    Star,
    LBrace,
    RBrace,
    Newline,
    Eof,
}

impl Tok {
    /// Source text of the token; empty for line and input ends.
    pub(crate) fn text(&self) -> String {
        match self {
            Tok::Newline | Tok::Eof => String::new(),
            other => other.label(),
        }
    }

    pub(crate) fn label(&self) -> String {
        match self {
            Tok::Word(w) => w.clone(),
            Tok::Int(n) => n.to_string(),
            Tok::Colon => ":".into(),
            Tok::Comma => ",".into(),
            Tok::Equals => "=".into(),
            Tok::Star => "*".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits model source into tokens. `#` starts a comment that runs to the
/// end of the line; CRLF and LF both end a line.
pub(crate) fn lex(source: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (index, raw) in source.split('\n').enumerate() {
        let line_no = index + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let single = |tok| Token {
                tok,
                span: SourceSpan::new(file, line_no, col, 1),
            };
            match c {
                ' ' | '\t' => i += 1,
                '#' => break,
                ':' => {
                    out.push(single(Tok::Colon));
                    i += 1;
                }
                ',' => {
                    out.push(single(Tok::Comma));
                    i += 1;
                }
                '=' => {
                    out.push(single(Tok::Equals));
                    i += 1;
                }
                '*' => {
                    out.push(single(Tok::Star));
                    i += 1;
                }
                '{' => {
                    out.push(single(Tok::LBrace));
                    i += 1;
                }
                '}' => {
                    out.push(single(Tok::RBrace));
                    i += 1;
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    let span = SourceSpan::new(file, line_no, start + 1, i - start);
                    let n = text.parse::<u64>().map_err(|_| {
                        ParseError::syntax(
                            span.clone(),
                            vec!["integer".into()],
                            &text,
                            format!("integer `{text}` is out of range"),
                        )
                    })?;
                    out.push(Token { tok: Tok::Int(n), span });
                }
                c if c.is_ascii_alphabetic() => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    out.push(Token {
                        tok: Tok::Word(text),
                        span: SourceSpan::new(file, line_no, start + 1, i - start),
                    });
                }
                other => {
                    return Err(ParseError::syntax(
                        SourceSpan::new(file, line_no, col, 1),
                        vec!["identifier".into(), "keyword".into(), "punctuation".into()],
                        &other.to_string(),
                        format!("unexpected character `{other}`"),
                    ));
                }
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            span: SourceSpan::new(file, line_no, chars.len() + 1, 0),
        });
    }
    let last = out
        .last()
        .map(|t| t.span.clone())
        .unwrap_or_else(|| SourceSpan::new(file, 1, 1, 0));
    out.push(Token {
        tok: Tok::Eof,
        span: last,
    });
    Ok(out)
}
