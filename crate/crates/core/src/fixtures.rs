//! The bundled example system at every refinement level.

use crate::io::{parse_architecture, parse_measures, Mode};
use crate::model::{Architecture, Measures};

pub const SYSTEM_S_L0: &str = include_str!("../fixtures/system_s_l0.json");
pub const SYSTEM_S_L1: &str = include_str!("../fixtures/system_s_l1.json");
pub const SYSTEM_S_L2: &str = include_str!("../fixtures/system_s_l2.json");
pub const SYSTEM_S_L3: &str = include_str!("../fixtures/system_s_l3.json");
pub const SYSTEM_S_MEASURES: &str = include_str!("../fixtures/system_s_measures.json");

fn load(text: &str) -> Architecture {
    parse_architecture(text.as_bytes(), Mode::Strict)
        .expect("bundled fixture is valid")
        .value
}

pub fn system_s_l0() -> Architecture {
    load(SYSTEM_S_L0)
}

/// Elementary decomposition of [`system_s_l0`] with measures applied.
pub fn system_s_l1() -> Architecture {
    load(SYSTEM_S_L1)
}

pub fn system_s_l2() -> Architecture {
    load(SYSTEM_S_L2)
}

pub fn system_s_l3() -> Architecture {
    load(SYSTEM_S_L3)
}

pub fn system_s_measures() -> Measures {
    parse_measures(SYSTEM_S_MEASURES.as_bytes()).expect("bundled measures are valid")
}
