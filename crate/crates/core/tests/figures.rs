//! Golden reports for the figure models. `WESTIN_BLESS=1` rewrites them.

mod common;

use common::{figure_model, figure_report, figures_dir, FIGURES};

#[test]
fn figure_models_check_clean() {
    for name in FIGURES {
        let violations = westin_core::check(&figure_model(name));
        assert!(violations.is_empty(), "{name}: {violations:?}");
    }
}

#[test]
fn figure_reports_match_goldens() {
    let bless = std::env::var_os("WESTIN_BLESS").is_some_and(|v| v == "1");
    for name in FIGURES {
        let actual = figure_report(name).to_json();
        let path = figures_dir().join(format!("{name}.json"));
        if bless {
            std::fs::write(&path, &actual).unwrap();
            continue;
        }
        let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(actual == expected, "{name}: report differs from {}", path.display());
    }
}

#[test]
fn figure_reports_round_trip_through_json() {
    for name in FIGURES {
        let report = figure_report(name);
        let back = westin_core::engine::RunReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back.events.len(), report.events.len());
        assert_eq!(back.to_json(), report.to_json(), "{name}");
    }
}
