//! Hand-encoded strategies bundled with the crate, one program per file
//! under `corpus/`. Names follow `<model>_gen<N>[_sK]`; the `_sK` entries
//! are further examples beyond the headline pair for each model.

use thiserror::Error;

use super::{parse_strategy, DslError, StrategyProgram};

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        const SOURCES: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../corpus/", $name, ".dsl")))),*
        ];
        pub const CORPUS_NAMES: &[&str] = &[$($name),*];
    };
}

corpus!(
    "claude_gen1",
    "claude_gen10",
    "gemini_gen1",
    "gemini_gen10",
    "gpt4o_gen1",
    "gpt4o_gen10",
    "claude_gen1_s1",
    "claude_gen10_s1",
    "claude_gen1_s2",
    "claude_gen10_s2",
    "gpt4o_gen1_s1",
    "gpt4o_gen10_s1",
    "gpt4o_gen10_s2",
);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("corpus entry `{name}` is corrupt: {source}")]
    Corrupt { name: String, source: DslError },
    #[error("no corpus entry named `{0}`")]
    Unknown(String),
}

pub fn corpus_load() -> Result<Vec<(String, StrategyProgram)>, CorpusError> {
    SOURCES
        .iter()
        .map(|(name, src)| {
            parse_strategy(src)
                .map(|p| (name.to_string(), p))
                .map_err(|source| CorpusError::Corrupt {
                    name: name.to_string(),
                    source,
                })
        })
        .collect()
}

pub fn corpus_program(name: &str) -> Result<StrategyProgram, CorpusError> {
    let (_, src) = SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CorpusError::Unknown(name.to_string()))?;
    parse_strategy(src).map_err(|source| CorpusError::Corrupt {
        name: name.to_string(),
        source,
    })
}
