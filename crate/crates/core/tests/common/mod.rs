#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;
use std::sync::Arc;

use evince_core::agents::{DebateScript, ScriptedAgent, Side};
use evince_core::protocol::{DebateConfig, DebateRunner, DebateTranscript, StanceAssignment};
use evince_core::store::load_debate_script;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn reference_debate() -> DebateScript {
    load_debate_script(&fixture("reference_debate.json")).unwrap()
}

pub fn replay(script: &DebateScript, cfg: DebateConfig) -> DebateTranscript {
    let mut a = ScriptedAgent::from_script(script, Side::A);
    let mut b = ScriptedAgent::from_script(script, Side::B);
    let stances = StanceAssignment {
        a: script.stances.a.clone(),
        b: script.stances.b.clone(),
    };
    DebateRunner::new(cfg, Arc::new(script.scale.clone()))
        .run(&script.subject, stances, &mut a, &mut b)
        .unwrap()
}
