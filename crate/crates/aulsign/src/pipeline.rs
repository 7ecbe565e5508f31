//! End-to-end orchestration of both translation directions, with a full
//! per-translation trace.
//!
//! A `Pipeline` owns immutable resources (vocabulary, retriever, rules,
//! generator) and is safe to share across threads; every translation
//! records what was retrieved, the exact prompt, the raw model output, and
//! every mapping decision, so a run can be audited or replayed offline.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsw::{parse_sequence, FswError, SignSequence};
use crate::generation::{GenError, GenExchange, Generator};
use crate::lexicon::{CanonicalToken, Lexicon};
use crate::mapper::{emit_fsw, map_sequence, MapperError, MappingOutcome};
use crate::prompting::{
    build_sign2text_prompt, build_text2sign_prompt, parse_decomposition, PromptError, PromptSpec,
    RuleSet,
};
use crate::retrieval::{RetrievalError, RetrievedContext, Retriever};
use crate::Direction;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input: empty input")]
    EmptyInput,
    #[error("input: {0}")]
    Input(#[from] FswError),
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("prompting: {0}")]
    Prompting(PromptError),
    #[error("generation: {0}")]
    Generation(#[from] GenError),
    #[error("decomposition: {0}")]
    Decomposition(PromptError),
    #[error("mapping: {0}")]
    Mapping(#[from] MapperError),
}

/// Knobs that vary between runs; retrieval depth lives on the retriever.
#[derive(Clone, Copy, Debug, Default)]
pub struct PipelineConfig {
    /// Cosine floor below which a mapped description is dropped instead of
    /// matched. Off by default: the argmax always picks something.
    pub min_similarity: Option<f32>,
    /// Upper bound on prompt size in bytes; candidates, then examples, are
    /// shed to fit.
    pub byte_budget: Option<usize>,
}

/// Complete record of one translation, sufficient to replay it through a
/// scripted generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TranslationTrace {
    pub direction: Direction,
    pub input: String,
    /// (corpus item id, cosine score), best first.
    pub retrieved_examples: Vec<(String, f32)>,
    /// (canonical form, cosine score), best first; empty for sign input.
    pub retrieved_candidates: Vec<(String, f32)>,
    pub prompt: PromptSpec,
    pub gen: GenExchange,
    /// For spoken input: the parsed model decomposition. For sign input:
    /// the canonical sequence derived from the input signs.
    pub decomposition: Vec<String>,
    /// Empty for sign input.
    pub mappings: Vec<MappingOutcome>,
    /// Positions in `mappings` that produced no sign.
    pub skipped: Vec<usize>,
    pub output: String,
    pub timings_ms: BTreeMap<String, u64>,
}

pub struct Pipeline {
    lexicon: Arc<Lexicon>,
    retriever: Retriever,
    rules: RuleSet,
    generator: Box<dyn Generator>,
    config: PipelineConfig,
}

struct StageClock {
    timings: BTreeMap<String, u64>,
    started: Instant,
}

impl StageClock {
    fn start() -> Self {
        StageClock {
            timings: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings
            .insert(stage.to_string(), (now - self.started).as_millis() as u64);
        self.started = now;
    }
}

impl Pipeline {
    pub fn new(
        lexicon: Arc<Lexicon>,
        retriever: Retriever,
        rules: RuleSet,
        generator: Box<dyn Generator>,
        config: PipelineConfig,
    ) -> Self {
        Pipeline {
            lexicon,
            retriever,
            rules,
            generator,
            config,
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn retriever(&self) -> &Retriever {
        &self.retriever
    }

    /// Spoken sentence to sign sequence. The returned sequence is
    /// normalized, and every sign in it is the representative of some
    /// vocabulary entry.
    pub fn spoken_to_sign(
        &self,
        input: &str,
    ) -> Result<(SignSequence, TranslationTrace), PipelineError> {
        if input.trim().is_empty() {
            return Err(PipelineError::EmptyInput);
        }
        let mut clock = StageClock::start();

        let context = self.retriever.for_spoken(input)?;
        clock.lap("retrieval");

        let prompt = build_text2sign_prompt(input, &context, &self.rules, self.config.byte_budget)
            .map_err(PipelineError::Prompting)?;
        clock.lap("prompting");

        let exchange = self.generator.generate(&prompt)?;
        clock.lap("generation");

        let decomposition =
            parse_decomposition(&exchange.raw_output).map_err(PipelineError::Decomposition)?;
        let embedder = self.retriever.embedder();
        let mappings = map_sequence(
            &decomposition,
            self.retriever.canonical_index(),
            &self.lexicon,
            &*embedder,
            self.config.min_similarity,
        )?;
        let (signs, skipped) = emit_fsw(&mappings, &self.lexicon)?;
        clock.lap("mapping");

        let output_signs = signs.normalized();
        let output = output_signs.to_string();
        let trace = TranslationTrace {
            direction: Direction::Text2Sign,
            input: input.to_string(),
            retrieved_examples: example_pairs(&context),
            retrieved_candidates: candidate_pairs(&context),
            prompt,
            gen: exchange,
            decomposition,
            mappings,
            skipped,
            output,
            timings_ms: clock.timings,
        };
        Ok((output_signs, trace))
    }

    /// Sign sequence to spoken sentence. Unknown signs still take part in
    /// the prompt as the `<unk>` token, so positional information survives.
    pub fn sign_to_spoken(&self, input: &str) -> Result<(String, TranslationTrace), PipelineError> {
        if input.trim().is_empty() {
            return Err(PipelineError::EmptyInput);
        }
        let mut clock = StageClock::start();

        let signs = parse_sequence(input)?;
        let tokens: Vec<CanonicalToken> = signs
            .0
            .iter()
            .map(|sign| self.lexicon.token_for_sign(sign))
            .collect();
        clock.lap("lookup");

        let context = self.retriever.for_canonicals(&tokens)?;
        clock.lap("retrieval");

        let prompt =
            build_sign2text_prompt(&tokens, &context, &self.rules, self.config.byte_budget)
                .map_err(PipelineError::Prompting)?;
        clock.lap("prompting");

        let exchange = self.generator.generate(&prompt)?;
        clock.lap("generation");

        let output = exchange.raw_output.trim().to_string();
        let trace = TranslationTrace {
            direction: Direction::Sign2Text,
            input: input.to_string(),
            retrieved_examples: example_pairs(&context),
            retrieved_candidates: Vec::new(),
            prompt,
            gen: exchange,
            decomposition: tokens.iter().map(|t| t.as_str().to_string()).collect(),
            mappings: Vec::new(),
            skipped: Vec::new(),
            output: output.clone(),
            timings_ms: clock.timings,
        };
        Ok((output, trace))
    }

    /// Direction-dispatched translation; sign output is serialized.
    pub fn translate(
        &self,
        direction: Direction,
        input: &str,
    ) -> Result<(String, TranslationTrace), PipelineError> {
        match direction {
            Direction::Text2Sign => self
                .spoken_to_sign(input)
                .map(|(seq, trace)| (seq.to_string(), trace)),
            Direction::Sign2Text => self.sign_to_spoken(input),
        }
    }

    /// Translates a batch with at most `jobs` concurrent items. Results
    /// come back in input order; each item fails independently.
    pub fn translate_batch(
        &self,
        direction: Direction,
        inputs: &[String],
        jobs: usize,
    ) -> Vec<Result<(String, TranslationTrace), PipelineError>> {
        let jobs = jobs.max(1);
        if jobs == 1 || inputs.len() <= 1 {
            return inputs
                .iter()
                .map(|input| self.translate(direction, input))
                .collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| {
                inputs
                    .par_iter()
                    .map(|input| self.translate(direction, input))
                    .collect()
            }),
            Err(_) => inputs
                .iter()
                .map(|input| self.translate(direction, input))
                .collect(),
        }
    }
}

fn example_pairs(context: &RetrievedContext) -> Vec<(String, f32)> {
    context
        .examples
        .iter()
        .map(|e| (e.id.clone(), e.score))
        .collect()
}

fn candidate_pairs(context: &RetrievedContext) -> Vec<(String, f32)> {
    context
        .candidates
        .iter()
        .map(|c| (c.canonical.clone(), c.score))
        .collect()
}
