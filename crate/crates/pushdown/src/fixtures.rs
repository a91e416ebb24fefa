//! The bundled example tasks, compiled in.

use crate::dsl::{parse, typecheck, PipelineTask};

pub const TOP2: &str = include_str!("../../../fixtures/top2.pdsl");
pub const DISCOUNT: &str = include_str!("../../../fixtures/discount.pdsl");
pub const COUNT: &str = include_str!("../../../fixtures/count.pdsl");
pub const EVENT_AGG: &str = include_str!("../../../fixtures/event_agg.pdsl");
pub const RETURN_PRICE: &str = include_str!("../../../fixtures/return_price.pdsl");

pub const ALL: &[(&str, &str)] = &[
    ("top2", TOP2),
    ("discount", DISCOUNT),
    ("count", COUNT),
    ("event_agg", EVENT_AGG),
    ("return_price", RETURN_PRICE),
];

/// Parse and typecheck a bundled task by name.
pub fn load(name: &str) -> PipelineTask {
    let (_, src) = ALL.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no fixture {name}"));
    typecheck(&parse(src).expect("fixture parses")).expect("fixture typechecks").with_name(name)
}
