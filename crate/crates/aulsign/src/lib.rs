//! Translation between spoken-language text and Formal SignWriting (FSW).
//!
//! The pipeline is retrieval-augmented: every sign in the training lexicon
//! carries a short textual description (its *canonical form*), so translating
//! in either direction becomes a text-to-text problem over a pseudo-language
//! of descriptions. For spoken input we retrieve similar training sentences
//! and candidate descriptions, prompt a text-generation provider to decompose
//! the sentence into descriptions, then map each description back to a
//! concrete sign. For sign input we convert the signs to their descriptions
//! and prompt for the spoken sentence.
//!
//! Modules are layered bottom-up: [`fsw`] defines the notation itself,
//! [`lexicon`] builds the description vocabulary, [`corpus`] handles parallel
//! data, [`embedding`] and [`retrieval`] provide nearest-neighbour search,
//! [`prompting`], [`generation`] and [`mapper`] implement the two translation
//! directions, and [`pipeline`] ties them together. [`metrics`] scores
//! system output and [`cli`] exposes everything as a command-line tool.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod fsw;
pub mod generation;
mod http;
pub mod lexicon;
pub mod mapper;
pub mod metrics;
pub mod pipeline;
pub mod prompting;
pub mod retrieval;
#[cfg(test)]
pub(crate) mod testhttp;
pub mod text;

use serde::{Deserialize, Serialize};

/// Translation direction handled by the pipeline and the evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Spoken-language text in, sign sequence out.
    #[serde(rename = "text2sign")]
    Text2Sign,
    /// Sign sequence in, spoken-language text out.
    #[serde(rename = "sign2text")]
    Sign2Text,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Text2Sign => "text2sign",
            Direction::Sign2Text => "sign2text",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text2sign" | "text-to-sign" => Ok(Direction::Text2Sign),
            "sign2text" | "sign-to-text" => Ok(Direction::Sign2Text),
            other => Err(format!(
                "unknown direction {other:?}, expected text2sign or sign2text"
            )),
        }
    }
}
