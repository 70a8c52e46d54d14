mod common;

use proptest::prelude::*;

use common::{figure_source, FIGURES};
use westin_core::dsl::{self, ErrorCode};
use westin_core::engine::Event;
use westin_core::Verb;

#[test]
fn figures_round_trip_through_the_renderer() {
    for name in FIGURES {
        let model = common::figure_model(name);
        let text = dsl::render_model(&model);
        let again = dsl::parse_model(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(again, model, "{name}");
        assert_eq!(dsl::render_model(&again), text, "{name}");
    }
}

#[test]
fn figure_traces_round_trip() {
    for name in FIGURES {
        let events = common::figure_trace(name);
        let text = dsl::render_trace(&events);
        assert_eq!(dsl::parse_trace(&text, name).unwrap(), events, "{name}");
    }
}

#[test]
fn unknown_references_point_at_the_reference() {
    let cases = [
        ("aspect a1 of ghost", ErrorCode::UnknownEntity, "ghost"),
        ("entity x : Inert\nowns ghost x", ErrorCode::UnknownEntity, "ghost"),
        (
            "entity x : LegalPerson\ncontext c : Generic embodied-by x {\n  role Agent ghost\n}",
            ErrorCode::UnknownAspect,
            "ghost",
        ),
        (
            "allowance a on Agent : observe derogates ghost",
            ErrorCode::UnknownRule,
            "ghost",
        ),
        (
            "entity j : JudicialAuthority\nwarrant w from j to j scope resolve in ghost",
            ErrorCode::UnknownContext,
            "ghost",
        ),
        ("entity x : Inert\nentity x : Inert", ErrorCode::DuplicateId, "x"),
        (
            "forbiddance f on Agent : observe deadline 3",
            ErrorCode::DeadlineOnNonObligation,
            "3",
        ),
        (
            "entity x : LegalPerson\ncontext c : Secluded embodied-by x {\n  role Stranger a\n}",
            ErrorCode::UnknownRoleType,
            "Stranger",
        ),
    ];
    for (src, code, found) in cases {
        let err = dsl::parse_document(src, "m.wmodel").unwrap_err();
        assert_eq!(err.code, code, "{src}");
        assert_eq!(err.span.slice(src), Some(found), "{src}");
        assert_eq!(err.found, found, "{src}");
        assert_eq!(err.span.file, "m.wmodel");
    }
}

#[test]
fn syntax_errors_list_what_was_expected() {
    let err = dsl::parse_model("entity alice NaturalPerson").unwrap_err();
    assert_eq!(err.code, ErrorCode::Syntax);
    assert_eq!((err.span.line, err.span.column), (1, 14));
    assert!(err.expected.iter().any(|e| e.contains(':')), "{:?}", err.expected);
}

#[test]
fn trace_errors_carry_codes() {
    assert_eq!(
        dsl::parse_trace("1: a fly", "t").unwrap_err().code,
        ErrorCode::UnknownVerb
    );
    assert_eq!(
        dsl::parse_trace("1: a appeal now", "t").unwrap_err().code,
        ErrorCode::Arity
    );
    assert_eq!(
        dsl::parse_trace("2: a appeal", "t").unwrap_err().code,
        ErrorCode::Sequence
    );
    assert_eq!(
        dsl::parse_trace_bytes(b"1: a \xff", "t").unwrap_err().code,
        ErrorCode::InvalidUtf8
    );
}

#[test]
fn quoted_arguments_survive_rendering() {
    let events = vec![Event::new(1, "r", Verb::Publish, &["say \"hi\" # not a comment \\ ok"])];
    let text = dsl::render_trace(&events);
    assert_eq!(dsl::parse_trace(&text, "t").unwrap(), events);
}

#[test]
fn lints_on_figures_are_stable() {
    for name in FIGURES {
        let doc = dsl::parse_document(&figure_source(name, "wmodel"), name).unwrap();
        for l in dsl::lint(&doc) {
            assert!(l.span.slice(&figure_source(name, "wmodel")).is_some(), "{name}: {l}");
        }
    }
}

/// Replaces the `n`th identifier reference in a figure with an unknown name.
fn break_reference(src: &str, n: usize) -> Option<(String, usize, usize)> {
    let mut seen = 0;
    for (line_no, line) in src.lines().enumerate() {
        let t = line.trim_start();
        let words: Vec<&str> = t.split_whitespace().collect();
        let slot = match words.first() {
            Some(&"aspect") if words.len() == 4 => Some(3),
            Some(&"owns") if words.len() == 3 => Some(2),
            _ => None,
        };
        let Some(slot) = slot else { continue };
        if seen == n {
            let target = words[slot];
            let col = line.rfind(target)?;
            let mut out: Vec<String> = src.lines().map(str::to_owned).collect();
            out[line_no] = format!("{}zz{}", &line[..col], &line[col + target.len()..]);
            return Some((out.join("\n"), line_no + 1, col + 1));
        }
        seen += 1;
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parsing_arbitrary_bytes_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        match dsl::parse_model_bytes(&bytes, "fuzz") {
            Ok(_) => {}
            Err(e) => {
                if let Ok(text) = std::str::from_utf8(&bytes) {
                    let slice = e.span.slice(text);
                    prop_assert!(slice.is_some(), "span {} outside input", e.span);
                    prop_assert!(slice.unwrap().contains(&e.found), "found {:?} not under span", e.found);
                }
            }
        }
        let _ = dsl::parse_trace_bytes(&bytes, "fuzz");
    }

    #[test]
    fn parsing_near_miss_text_never_panics(text in "(entity|aspect|owns|context|warrant|allowance|role|param|[a-z]{1,4}|[:,={}*#\"]|[0-9]{1,3}| |\n){0,40}") {
        if let Err(e) = dsl::parse_model(&text) {
            let slice = e.span.slice(&text);
            prop_assert!(slice.is_some_and(|s| s.contains(&e.found)), "{} / {:?}", e.span, e.found);
        }
        if let Err(e) = dsl::parse_trace(&text, "t") {
            prop_assert!(e.span.slice(&text).is_some());
        }
    }

    #[test]
    fn broken_references_are_located(figure in 0..FIGURES.len(), n in 0usize..12) {
        let src = figure_source(FIGURES[figure], "wmodel");
        if let Some((broken, line, col)) = break_reference(&src, n) {
            let err = dsl::parse_document(&broken, "m").unwrap_err();
            prop_assert_eq!(err.code, ErrorCode::UnknownEntity);
            prop_assert_eq!((err.span.line, err.span.column), (line, col));
            prop_assert!(err.span.slice(&broken).unwrap().starts_with("zz"));
        }
    }
}
