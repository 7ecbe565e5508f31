//! Prompt construction for both translation directions, and parsing of the
//! generated decomposition back into segments.
//!
//! Prompts are built from fixed sections in a fixed order so that byte-equal
//! inputs always produce byte-equal prompts (scripted providers key on a
//! prompt hash). The spoken-to-sign prompt has five sections: task
//! instruction, numbered rules, candidate descriptions, retrieved examples,
//! and the input with an output-format directive. The sign-to-spoken prompt
//! omits the candidate section.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::CanonicalToken;
use crate::retrieval::RetrievedContext;
use crate::text::{join_segments, SEGMENT_SEPARATOR};
use crate::Direction;

/// Bumped whenever any fixed prompt text changes; recorded in traces and
/// the version string so cached runs can be told apart.
pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("rule set is empty")]
    EmptyRules,
    #[error("generated output contains no segments")]
    EmptyDecomposition,
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Prompt language, which selects the default rule set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    It,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::En => "en",
            Language::It => "it",
        })
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::En),
            "it" | "italian" | "italiano" => Ok(Language::It),
            other => Err(format!("unknown language {other:?}, expected en or it")),
        }
    }
}

/// The decomposition rules shown in every prompt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    language: Language,
    rules: Vec<String>,
}

impl RuleSet {
    /// The built-in rules for a language.
    pub fn default_for(language: Language) -> RuleSet {
        let text = match language {
            Language::En => include_str!("../resources/rules_en.txt"),
            Language::It => include_str!("../resources/rules_it.txt"),
        };
        RuleSet::parse(language, text).expect("built-in rule files are non-empty")
    }

    /// Reads rules from a UTF-8 file, one rule per line. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_file(language: Language, path: &Path) -> Result<RuleSet, PromptError> {
        RuleSet::parse(language, &std::fs::read_to_string(path)?)
    }

    pub fn parse(language: Language, text: &str) -> Result<RuleSet, PromptError> {
        let rules: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        if rules.is_empty() {
            return Err(PromptError::EmptyRules);
        }
        Ok(RuleSet { language, rules })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn rules(&self) -> &[String] {
        &self.rules
    }
}

/// A fully rendered prompt plus the bookkeeping the pipeline traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub direction: Direction,
    pub system_text: String,
    pub user_text: String,
    /// Examples actually included (after any budget truncation).
    pub example_count: usize,
    /// Candidates actually included.
    pub candidate_count: usize,
    pub template_version: String,
}

const TEXT2SIGN_SYSTEM: &str = "You translate spoken-language sentences into ordered sequences \
of sign descriptions drawn from a fixed vocabulary.";
const SIGN2TEXT_SYSTEM: &str = "You translate ordered sequences of sign descriptions into \
natural spoken-language sentences.";

const TEXT2SIGN_TASK: &str = "Task: rewrite the input sentence as a sequence of sign \
descriptions, following the rules below.";
const SIGN2TEXT_TASK: &str = "Task: rewrite the input sequence of sign descriptions as one \
spoken-language sentence, following the rules below.";

const TEXT2SIGN_DIRECTIVE: &str = "Answer with the sign descriptions in order, separated by \
\" | \", and nothing else.";
const SIGN2TEXT_DIRECTIVE: &str = "Answer with the spoken-language sentence and nothing else.";

/// Builds the spoken-to-sign prompt. When `byte_budget` is given and the
/// rendered user text exceeds it, lowest-ranked candidates are dropped
/// first, then lowest-ranked examples, until the prompt fits or nothing is
/// left to drop.
pub fn build_text2sign_prompt(
    input: &str,
    context: &RetrievedContext,
    rules: &RuleSet,
    byte_budget: Option<usize>,
) -> Result<PromptSpec, PromptError> {
    if rules.rules().is_empty() {
        return Err(PromptError::EmptyRules);
    }
    let render = |examples: usize, candidates: usize| {
        let mut out = String::new();
        out.push_str(TEXT2SIGN_TASK);
        out.push_str("\n\nRules:\n");
        push_rules(&mut out, rules);
        out.push_str("\nCandidate descriptions:\n");
        if candidates == 0 {
            out.push_str("(none)\n");
        } else {
            for c in &context.candidates[..candidates] {
                out.push_str(&c.canonical);
                out.push('\n');
            }
        }
        out.push_str("\nExamples:\n");
        push_examples(&mut out, context, examples, Direction::Text2Sign);
        out.push_str(&format!("\nInput: {input}\n{TEXT2SIGN_DIRECTIVE}"));
        out
    };
    let (example_count, candidate_count, user_text) = fit_budget(
        context.examples.len(),
        context.candidates.len(),
        byte_budget,
        render,
    );
    Ok(PromptSpec {
        direction: Direction::Text2Sign,
        system_text: TEXT2SIGN_SYSTEM.to_string(),
        user_text,
        example_count,
        candidate_count,
        template_version: TEMPLATE_VERSION.to_string(),
    })
}

/// Builds the sign-to-spoken prompt over a canonical token sequence. Same
/// sections as the spoken-to-sign prompt minus the candidate block; the
/// budget rule only has examples to drop.
pub fn build_sign2text_prompt(
    tokens: &[CanonicalToken],
    context: &RetrievedContext,
    rules: &RuleSet,
    byte_budget: Option<usize>,
) -> Result<PromptSpec, PromptError> {
    if rules.rules().is_empty() {
        return Err(PromptError::EmptyRules);
    }
    let input_line = join_segments(tokens.iter().map(CanonicalToken::as_str));
    let render = |examples: usize, _candidates: usize| {
        let mut out = String::new();
        out.push_str(SIGN2TEXT_TASK);
        out.push_str("\n\nRules:\n");
        push_rules(&mut out, rules);
        out.push_str("\nExamples:\n");
        push_examples(&mut out, context, examples, Direction::Sign2Text);
        out.push_str(&format!("\nInput: {input_line}\n{SIGN2TEXT_DIRECTIVE}"));
        out
    };
    let (example_count, _, user_text) = fit_budget(context.examples.len(), 0, byte_budget, render);
    Ok(PromptSpec {
        direction: Direction::Sign2Text,
        system_text: SIGN2TEXT_SYSTEM.to_string(),
        user_text,
        example_count,
        candidate_count: 0,
        template_version: TEMPLATE_VERSION.to_string(),
    })
}

fn push_rules(out: &mut String, rules: &RuleSet) {
    for (i, rule) in rules.rules().iter().enumerate() {
        out.push_str(&format!("{}. {rule}\n", i + 1));
    }
}

fn push_examples(out: &mut String, context: &RetrievedContext, count: usize, dir: Direction) {
    if count == 0 {
        out.push_str("(none)\n");
        return;
    }
    for e in &context.examples[..count] {
        match dir {
            Direction::Text2Sign => {
                out.push_str(&format!(
                    "Input: {}\nOutput: {}\n",
                    e.spoken, e.canonical_line
                ));
            }
            Direction::Sign2Text => {
                out.push_str(&format!(
                    "Input: {}\nOutput: {}\n",
                    e.canonical_line, e.spoken
                ));
            }
        }
    }
}

/// Shrinks candidate and example counts until the rendered text fits the
/// budget. Returns the final counts and text.
fn fit_budget<F>(
    mut examples: usize,
    mut candidates: usize,
    byte_budget: Option<usize>,
    render: F,
) -> (usize, usize, String)
where
    F: Fn(usize, usize) -> String,
{
    let mut text = render(examples, candidates);
    if let Some(budget) = byte_budget {
        while text.len() > budget {
            if candidates > 0 {
                candidates -= 1;
            } else if examples > 0 {
                examples -= 1;
            } else {
                break;
            }
            text = render(examples, candidates);
        }
    }
    (examples, candidates, text)
}

/// Splits generated output into description segments.
///
/// Tolerant of the failure shapes the provider is allowed to produce: a
/// leading `Output:` label, line breaks instead of (or in addition to) the
/// separator, dangling separators, and blank segments are all cleaned up.
/// Interior segment text is preserved byte for byte.
pub fn parse_decomposition(output: &str) -> Result<Vec<String>, PromptError> {
    let mut text = output.trim();
    for label in ["Output:", "output:", "OUTPUT:"] {
        if let Some(rest) = text.strip_prefix(label) {
            text = rest.trim_start();
            break;
        }
    }
    let mut segments = Vec::new();
    for line in text.lines() {
        for raw in line.split(SEGMENT_SEPARATOR) {
            // A separator at the edge of a line leaves a bare pipe behind.
            let cleaned = raw.trim().trim_matches('|');
            let cleaned = cleaned.trim();
            if !cleaned.is_empty() {
                segments.push(cleaned.to_string());
            }
        }
    }
    if segments.is_empty() {
        return Err(PromptError::EmptyDecomposition);
    }
    Ok(segments)
}
