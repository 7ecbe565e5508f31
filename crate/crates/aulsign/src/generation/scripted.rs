//! Generation provider that replays recorded responses keyed by prompt
//! fingerprint. Fully offline and deterministic: the backbone of the test
//! suite and of reproducible golden runs.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{prompt_fingerprint, GenError, GenExchange, Generator};
use crate::prompting::PromptSpec;

/// One scripted response: the fingerprint of the prompt it answers
/// (see [`prompt_fingerprint`]) and the text to return.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub prompt_sha256: String,
    pub response: String,
}

#[derive(Debug)]
pub struct ScriptedGenerator {
    responses: HashMap<String, String>,
}

impl ScriptedGenerator {
    pub fn from_entries(entries: impl IntoIterator<Item = ScriptEntry>) -> ScriptedGenerator {
        ScriptedGenerator {
            responses: entries
                .into_iter()
                .map(|e| (e.prompt_sha256, e.response))
                .collect(),
        }
    }

    /// Builds a script from already-known (prompt, response) pairs.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a PromptSpec, &'a str)>,
    ) -> ScriptedGenerator {
        ScriptedGenerator::from_entries(pairs.into_iter().map(|(p, r)| ScriptEntry {
            prompt_sha256: prompt_fingerprint(p),
            response: r.to_string(),
        }))
    }

    /// Loads a JSONL script file, one [`ScriptEntry`] per line. A repeated
    /// fingerprint keeps the last response.
    pub fn from_path(path: &Path) -> Result<ScriptedGenerator, GenError> {
        let mut responses = HashMap::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry =
                serde_json::from_str(&line).map_err(|e| GenError::Corrupt {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            responses.insert(entry.prompt_sha256, entry.response);
        }
        Ok(ScriptedGenerator { responses })
    }

    /// Writes entries as a JSONL script file readable by
    /// [`ScriptedGenerator::from_path`].
    pub fn write_script(path: &Path, entries: &[ScriptEntry]) -> Result<(), GenError> {
        let mut w = BufWriter::new(File::create(path)?);
        for entry in entries {
            serde_json::to_writer(&mut w, entry).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Generator for ScriptedGenerator {
    fn provider_id(&self) -> String {
        "scripted".to_string()
    }

    fn generate(&self, prompt: &PromptSpec) -> Result<GenExchange, GenError> {
        let started = Instant::now();
        let fingerprint = prompt_fingerprint(prompt);
        let response = self
            .responses
            .get(&fingerprint)
            .ok_or(GenError::ScriptMiss { fingerprint })?;
        Ok(GenExchange {
            prompt: prompt.clone(),
            raw_output: response.clone(),
            provider_id: self.provider_id(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Direction;

    fn prompt(user: &str) -> PromptSpec {
        PromptSpec {
            direction: Direction::Text2Sign,
            system_text: "system".to_string(),
            user_text: user.to_string(),
            example_count: 0,
            candidate_count: 0,
            template_version: "v1".to_string(),
        }
    }

    #[test]
    fn replays_known_prompts_and_misses_unknown_ones() {
        let p = prompt("translate this");
        let gen = ScriptedGenerator::from_pairs([(&p, "a | b")]);
        let exchange = gen.generate(&p).unwrap();
        assert_eq!(exchange.raw_output, "a | b");
        assert_eq!(exchange.provider_id, "scripted");
        assert_eq!(exchange.prompt, p);

        let err = gen.generate(&prompt("something else")).unwrap_err();
        match err {
            GenError::ScriptMiss { fingerprint } => assert_eq!(fingerprint.len(), 64),
            other => panic!("expected ScriptMiss, got {other}"),
        }
    }

    #[test]
    fn script_file_round_trip() {
        let p1 = prompt("one");
        let p2 = prompt("two");
        let entries = vec![
            ScriptEntry {
                prompt_sha256: super::prompt_fingerprint(&p1),
                response: "first".to_string(),
            },
            ScriptEntry {
                prompt_sha256: super::prompt_fingerprint(&p2),
                response: "second".to_string(),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.jsonl");
        ScriptedGenerator::write_script(&path, &entries).unwrap();
        let gen = ScriptedGenerator::from_path(&path).unwrap();
        assert_eq!(gen.len(), 2);
        assert_eq!(gen.generate(&p1).unwrap().raw_output, "first");
        assert_eq!(gen.generate(&p2).unwrap().raw_output, "second");
    }

    #[test]
    fn corrupt_script_lines_are_reported_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.jsonl");
        std::fs::write(
            &path,
            "{\"prompt_sha256\":\"x\",\"response\":\"y\"}\nnot json\n",
        )
        .unwrap();
        match ScriptedGenerator::from_path(&path).unwrap_err() {
            GenError::Corrupt { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Corrupt, got {other}"),
        }
    }
}
