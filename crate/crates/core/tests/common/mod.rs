#![allow(dead_code)]

use std::path::PathBuf;

use westin_core::dsl;
use westin_core::engine::{self, EngineConfig, Event, RunReport};
use westin_core::Model;

pub const FIGURES: [&str; 5] = ["foundations", "solitude", "intimacy", "publicsphere", "confidence"];

pub fn figures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("figures")
}

pub fn figure_source(name: &str, ext: &str) -> String {
    let path = figures_dir().join(format!("{name}.{ext}"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn figure_model(name: &str) -> Model {
    dsl::parse_model_bytes(figure_source(name, "wmodel").as_bytes(), name)
        .unwrap_or_else(|e| panic!("{name}: {e}"))
        .model
}

pub fn figure_trace(name: &str) -> Vec<Event> {
    dsl::parse_trace(&figure_source(name, "wtrace"), name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn figure_report(name: &str) -> RunReport {
    engine::run(figure_model(name), &figure_trace(name), EngineConfig::default())
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Small model that passes the full check. Each mutation in the acceptance
/// suite breaks exactly one constraint of it.
pub const FIXTURE: &str = "\
entity alice : NaturalPerson
entity bob : NaturalPerson
entity circle : SentientActor
entity court : JudicialAuthority
owns alice circle
aspect a1 of alice
aspect a2 of alice
aspect b1 of bob
aspect c1 of court
context friends : Secluded embodied-by circle {
  role Intimate a1, b1
  param max_intimates = 4
}
context bench : Generic embodied-by court {
  role Governor c1
  param cap_Governor = observe
}
forbiddance f1 on Intimate : observe in Secluded
allowance al1 on Intimate : observe target Intimate in Secluded derogates f1
warrant w1 from court to court scope resolve in friends expires 100
";

pub fn fixture() -> Model {
    dsl::parse_model(FIXTURE).expect("fixture parses")
}

pub mod oracle;
pub mod traces;
