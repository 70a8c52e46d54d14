//! Verb-aware random traces. A raw event is a handful of numbers; it is
//! turned into a concrete event against the model as it stands at that
//! step, so later events can name roles and contexts created earlier.

use proptest::collection::vec;
use proptest::prelude::*;

use westin_core::engine::{EngineState, Event};
use westin_core::{EntityKind, Model, TemplateName, Verb};

pub type RawEvent = (u8, u16, Vec<u16>);

const ROLE_TYPES: &[&str] = &[
    "Isolate",
    "Intruder",
    "Guarantor",
    "Governor",
    "Intimate",
    "Secret",
    "PublicFigure",
    "Anon",
    "Society",
    "Truster",
    "Trustee",
    "Asset",
    "Customer",
    "Vendor",
    "Traveller",
    "Agent",
];
const TOKENS: &[&str] = &["t1", "t2", "consent-1", "proof-7"];
const CONTENT: &[&str] = &["hello", "an obscene rant", "news of the day"];
const PARAMS: &[&str] = &[
    "max_intimates=3",
    "mode=legal",
    "linkability=unlinkable",
    "authentication=prove-on-match",
    "cap_Agent=observe,surveil",
];
const SCOPES: &[&str] = &["surveil", "compel", "resolve"];

/// Extra user rules appended to a figure so that obligations fire.
const DUTIES: &[&str] = &[
    "",
    "obligation gen-duty on Intimate : observe deadline 2",
    "obligation gen-duty on PublicFigure : publish deadline 1",
    "obligation gen-duty on Trustee : access-asset deadline 3",
    "obligation gen-duty on Customer : observe",
    "obligation gen-duty on Intruder : observe deadline 0",
];

#[derive(Clone, Copy)]
enum Slot {
    Ent,
    Asp,
    Role,
    Ctx,
    Target,
    SameAsActor,
    NewEnt,
    NewAsp,
    NewCtx,
    NewWarrant,
    Warrant,
    Kind,
    Template,
    RoleType,
    Scope,
    Token,
    Content,
    Binding,
    Param,
    Int,
}

use Slot::*;

fn shape(verb: Verb) -> (Slot, &'static [Slot], &'static [Slot]) {
    match verb {
        Verb::CreateEntity => (Ent, &[NewEnt, Kind], &[Ent]),
        Verb::DisplayAspect => (Ent, &[NewAsp], &[Content]),
        Verb::Enact => (Asp, &[Ctx, RoleType], &[]),
        Verb::Relinquish => (Role, &[SameAsActor], &[]),
        Verb::Instantiate => (Ent, &[NewCtx, Template, Ent], &[Binding, Binding, Param]),
        Verb::DestroyContext => (Ent, &[Ctx], &[]),
        Verb::Introspect | Verb::Appeal => (Role, &[], &[]),
        Verb::Intrude | Verb::Observe | Verb::Surveil | Verb::Compel | Verb::AccessAsset => (Role, &[Target], &[]),
        Verb::Control => (Role, &[Target], &[Token]),
        Verb::ClaimSolitude => (Asp, &[Ctx, NewCtx], &[]),
        Verb::Invite => (Role, &[Asp, Token], &[]),
        Verb::Join => (Asp, &[Ctx], &[Token]),
        Verb::DepositSecret => (Role, &[Ent], &[]),
        Verb::Reveal => (Role, &[Target], &[Role]),
        Verb::CreateAnon => (Role, &[], &[Token]),
        Verb::Publish => (Role, &[Content], &[]),
        Verb::Sanction => (Role, &[Role], &[]),
        Verb::AuthenticateAnonym => (Asp, &[Role], &[Token]),
        Verb::Disclose => (Role, &[Role, Target], &[Token]),
        Verb::ResolveEntity => (Ent, &[Asp], &[Warrant]),
        Verb::GrantWarrant => (Ent, &[NewWarrant, Ent, Scope], &[Ctx, Int]),
    }
}

struct Pools {
    entities: Vec<String>,
    aspects: Vec<String>,
    roles: Vec<String>,
    contexts: Vec<String>,
    warrants: Vec<String>,
}

impl Pools {
    fn of(model: &Model) -> Self {
        Self {
            entities: model.entities().map(|e| e.id.to_string()).collect(),
            aspects: model.aspects().map(|a| a.id.to_string()).collect(),
            roles: model.roles().map(|r| r.id.to_string()).collect(),
            contexts: model.contexts().map(|c| c.id.to_string()).collect(),
            warrants: model.warrants().map(|w| w.id.to_string()).collect(),
        }
    }
}

fn from(list: &[String], n: u16, fallback: &str) -> String {
    if list.is_empty() {
        fallback.to_owned()
    } else {
        list[usize::from(n) % list.len()].clone()
    }
}

fn word(list: &[&str], n: u16) -> String {
    list[usize::from(n) % list.len()].to_owned()
}

fn fill(slot: Slot, n: u16, actor: &str, p: &Pools) -> String {
    // One draw in sixteen names something of the wrong sort.
    if n % 16 == 15 {
        let mut any: Vec<String> = p.entities.clone();
        any.extend(p.aspects.iter().cloned());
        any.extend(p.roles.iter().cloned());
        return from(&any, n / 16, "nobody");
    }
    let k = n / 16;
    match slot {
        Ent => from(&p.entities, k, "nobody"),
        Asp => from(&p.aspects, k, "nothing"),
        Role => from(&p.roles, k, "no.Role.1"),
        Ctx => from(&p.contexts, k, "nowhere"),
        Target => match k % 3 {
            0 => from(&p.roles, k / 3, "no.Role.1"),
            1 => from(&p.aspects, k / 3, "nothing"),
            _ => from(&p.entities, k / 3, "nobody"),
        },
        SameAsActor => {
            if k.is_multiple_of(4) {
                from(&p.roles, k / 4, "no.Role.1")
            } else {
                actor.to_owned()
            }
        }
        NewEnt => format!("ne{}", k % 5),
        NewAsp => format!("na{}", k % 5),
        NewCtx => format!("nc{}", k % 4),
        NewWarrant => format!("nw{}", k % 4),
        Warrant => from(&p.warrants, k, "nw0"),
        Kind => EntityKind::ALL[usize::from(k) % EntityKind::ALL.len()]
            .as_str()
            .to_owned(),
        Template => TemplateName::ALL[usize::from(k) % TemplateName::ALL.len()]
            .as_str()
            .to_owned(),
        RoleType => word(ROLE_TYPES, k),
        Scope => word(SCOPES, k),
        Token => word(TOKENS, k),
        Content => word(CONTENT, k),
        Binding => {
            let first = from(&p.aspects, k, "nothing");
            let value = if k.is_multiple_of(3) {
                format!("{first},{}", from(&p.aspects, k / 3 + 1, "nothing"))
            } else {
                first
            };
            format!("{}={value}", word(ROLE_TYPES, k / 7))
        }
        Param => word(PARAMS, k),
        Int => (k % 20).to_string(),
    }
}

/// Concrete event number `seq` for `raw` against the current model.
pub fn materialize(model: &Model, seq: u64, raw: &RawEvent) -> Event {
    let (v, a, args) = raw;
    let verb = Verb::ALL[usize::from(*v) % Verb::ALL.len()];
    let (actor_slot, required, optional) = shape(verb);
    let pools = Pools::of(model);
    let actor = fill(actor_slot, *a, "", &pools);
    let extra = usize::from(args.last().copied().unwrap_or(0)) % (optional.len() + 1);
    let mut out = Vec::new();
    for (i, slot) in required.iter().chain(optional.iter().take(extra)).enumerate() {
        out.push(fill(*slot, args.get(i).copied().unwrap_or(0), &actor, &pools));
    }
    let refs: Vec<&str> = out.iter().map(String::as_str).collect();
    Event::new(seq, &actor, verb, &refs)
}

/// A figure index, an optional extra duty and a list of raw events.
pub fn scenario() -> impl Strategy<Value = (usize, usize, Vec<RawEvent>)> {
    (
        0..super::FIGURES.len(),
        0..DUTIES.len(),
        vec((any::<u8>(), any::<u16>(), vec(any::<u16>(), 6)), 0..24),
    )
}

/// The figure model with the chosen duty appended.
pub fn scenario_model(figure: usize, duty: usize) -> Model {
    let name = super::FIGURES[figure];
    let mut text = super::figure_source(name, "wmodel");
    text.push('\n');
    text.push_str(DUTIES[duty]);
    text.push('\n');
    westin_core::dsl::parse_model(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Steps through `raw`, materializing each event just before it runs.
/// `inspect` sees the model before the step and the state after it.
pub fn drive(
    state: &mut EngineState,
    raw: &[RawEvent],
    mut inspect: impl FnMut(&Model, &Event, &EngineState) -> Result<(), String>,
) -> Result<Vec<Event>, String> {
    let mut events = Vec::new();
    for (i, r) in raw.iter().enumerate() {
        let event = materialize(&state.model, i as u64 + 1, r);
        let before = state.model.clone();
        state.step(&event).map_err(|e| e.to_string())?;
        inspect(&before, &event, state).map_err(|m| format!("after `{}`: {m}", render(&event)))?;
        events.push(event);
    }
    Ok(events)
}

pub fn render(event: &Event) -> String {
    westin_core::dsl::render_trace(std::slice::from_ref(event))
        .trim_end()
        .to_owned()
}
