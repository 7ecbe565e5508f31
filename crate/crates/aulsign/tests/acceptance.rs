//! Acceptance gate. Each test covers one numbered criterion end to end and
//! prints one `ACCEPTANCE <n> PASS` line when it holds. Everything here is
//! offline and deterministic; criterion 10 checks the surface of the live
//! harness without calling any remote provider.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use aulsign::embedding::{cosine_similarity, Embedder, HashingEmbedder, SearchHit, VectorIndex};
use aulsign::fsw::{self, parse_sequence, parse_sign, Sign};
use aulsign::lexicon::{Lexicon, RawSignRecord};
use aulsign::mapper::{map_description, MatchMethod};
use aulsign::metrics::{corpus_bleu, corpus_chrf2, mae_xy, symbol_f1};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// criterion 1: serialization round trips
// ---------------------------------------------------------------------------

/// Builds a random well-formed sign directly from the textual grammar,
/// independent of the parser's own types.
fn grammar_sign_text(rng: &mut ChaCha8Rng) -> String {
    let symbol = |rng: &mut ChaCha8Rng, base: u16| {
        format!(
            "S{base:03x}{}{:x}",
            rng.gen_range(0u8..=5),
            rng.gen_range(0u8..=15)
        )
    };
    let coord = |rng: &mut ChaCha8Rng| {
        format!(
            "{:03}x{:03}",
            rng.gen_range(250..=749),
            rng.gen_range(250..=749)
        )
    };
    if rng.gen_bool(0.1) {
        let base = rng.gen_range(0x387u16..=0x38b);
        return format!("{}{}", symbol(rng, base), coord(rng));
    }
    let mut out = String::new();
    if rng.gen_bool(0.4) {
        out.push('A');
        for _ in 0..rng.gen_range(1..=3) {
            let base = rng.gen_range(0x100u16..=0x38b);
            out.push_str(&symbol(rng, base));
        }
    }
    out.push(['B', 'L', 'M', 'R'][rng.gen_range(0..4)]);
    out.push_str(&coord(rng));
    for _ in 0..rng.gen_range(0..=6) {
        let base = rng.gen_range(0x100u16..=0x38b);
        out.push_str(&symbol(rng, base));
        out.push_str(&coord(rng));
    }
    out
}

#[test]
fn acceptance_01_sign_round_trip() {
    let mut rng = rng(0x01);
    let start = Instant::now();
    for i in 0..10_000 {
        let text = grammar_sign_text(&mut rng);
        let sign = parse_sign(&text).unwrap_or_else(|e| panic!("sign {i} {text:?}: {e}"));
        assert_eq!(
            sign.to_string(),
            text,
            "serialize(parse(s)) != s for {text:?}"
        );
        let reparsed = parse_sign(&sign.to_string()).expect("serialized form parses");
        assert_eq!(reparsed, sign, "parse(serialize(x)) != x for {text:?}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: 10000 signs round-trip both ways in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// criterion 2: equivalence key invariance
// ---------------------------------------------------------------------------

fn permute_and_perturb(sign: &Sign, rng: &mut ChaCha8Rng) -> Sign {
    let coord = |rng: &mut ChaCha8Rng| {
        fsw::Coord::new(rng.gen_range(250..=749), rng.gen_range(250..=749)).unwrap()
    };
    match sign {
        Sign::Punctuation(p) => Sign::Punctuation(fsw::PositionedSymbol {
            key: p.key,
            coord: coord(rng),
        }),
        Sign::Boxed(b) => {
            let mut prefix = b.prefix.clone();
            prefix.shuffle(rng);
            let mut symbols: Vec<fsw::PositionedSymbol> = b
                .symbols
                .iter()
                .map(|s| fsw::PositionedSymbol {
                    key: s.key,
                    coord: coord(rng),
                })
                .collect();
            symbols.shuffle(rng);
            Sign::Boxed(fsw::BoxedSign {
                prefix,
                box_marker: b.box_marker,
                max_coord: coord(rng),
                symbols,
            })
        }
    }
}

#[test]
fn acceptance_02_equivalence_invariance() {
    let mut rng = rng(0x02);
    let mut multiset_by_key: HashMap<String, Vec<String>> = HashMap::new();
    for i in 0..1_000 {
        let sign = fsw::sample::sign(&mut rng);
        let key = sign.equivalence_key();
        let mutated = permute_and_perturb(&sign, &mut rng);
        assert_eq!(
            mutated.equivalence_key(),
            key,
            "sign {i}: key changed under permutation/perturbation"
        );

        let mut multiset: Vec<String> = sign.symbol_keys().iter().map(|k| k.to_string()).collect();
        multiset.sort();
        let key_text = key.key_texts().join(" ");
        match multiset_by_key.entry(key_text) {
            std::collections::hash_map::Entry::Occupied(slot) => {
                assert_eq!(
                    slot.get(),
                    &multiset,
                    "two signs share a key but differ in symbol multiset"
                );
            }
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(multiset);
            }
        }
    }
    let distinct_multisets: HashSet<&Vec<String>> = multiset_by_key.values().collect();
    assert_eq!(
        distinct_multisets.len(),
        multiset_by_key.len(),
        "distinct multisets collided on one key"
    );
    println!(
        "ACCEPTANCE 2 PASS: 1000 signs keep their key under mutation, {} distinct classes injective",
        multiset_by_key.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 3: lexicon build determinism
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_lexicon_determinism() {
    let mut rng = rng(0x03);
    let phrases = [
        "flat hand",
        "open palm",
        "closed fist",
        "index up",
        "two fingers",
        "thumb out",
        "circle face",
        "arrow left",
        "contact star",
        "wrist bend",
    ];
    let mut records = Vec::new();
    for class in 0..40 {
        let base_sign = fsw::sample::sign(&mut rng);
        for variant in 0..rng.gen_range(3..=8) {
            let sign = if variant == 0 {
                base_sign.clone()
            } else {
                permute_and_perturb(&base_sign, &mut rng)
            };
            let mut descriptions = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                descriptions.push(phrases[rng.gen_range(0..phrases.len())].to_string());
            }
            records.push(RawSignRecord {
                fsw: sign.to_string(),
                descriptions,
                source_id: format!("r{class}-{variant}"),
                canonical: None,
            });
        }
    }

    let dir = TempDir::new().unwrap();
    let mut reference: Option<Vec<u8>> = None;
    for permutation in 0..20 {
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rng);
        let lexicon = Lexicon::build(&shuffled, 3).unwrap();

        let canonicals = lexicon.canonical_texts();
        let unique: HashSet<&&str> = canonicals.iter().collect();
        assert_eq!(unique.len(), canonicals.len(), "duplicate canonical form");

        let path = dir.path().join(format!("lexicon-{permutation}.jsonl"));
        lexicon.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        match &reference {
            None => reference = Some(bytes),
            Some(first) => assert_eq!(
                &bytes, first,
                "permutation {permutation} produced different bytes"
            ),
        }
    }
    println!(
        "ACCEPTANCE 3 PASS: 20 input permutations, byte-identical lexicons, canonicals unique"
    );
}

// ---------------------------------------------------------------------------
// criterion 4: retrieval against a naive full scan
// ---------------------------------------------------------------------------

/// Selection-sort style ranking: repeatedly take the best remaining row,
/// score descending, earlier insertion position on ties.
fn naive_top_k(
    embedder: &HashingEmbedder,
    texts: &[String],
    query: &aulsign::embedding::Embedding,
    k: usize,
) -> Vec<SearchHit> {
    let scores: Vec<f32> = texts
        .iter()
        .map(|t| cosine_similarity(query, &embedder.embed(t).unwrap()).unwrap())
        .collect();
    let mut used = vec![false; texts.len()];
    let mut out = Vec::new();
    for _ in 0..k.min(texts.len()) {
        let mut best: Option<usize> = None;
        for (i, &score) in scores.iter().enumerate() {
            if used[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if score > scores[b] => Some(i),
                Some(b) => Some(b),
            };
        }
        let b = best.unwrap();
        used[b] = true;
        out.push(SearchHit {
            position: b,
            text: texts[b].clone(),
            score: scores[b],
        });
    }
    out
}

#[test]
fn acceptance_04_retrieval_matches_naive_scan() {
    let words = [
        "river", "stone", "light", "garden", "window", "teacher", "morning", "bridge", "music",
        "paper", "yellow", "winter", "basket", "candle", "market", "harbor",
    ];
    let embedder = HashingEmbedder::new(64).unwrap();
    let mut rng = rng(0x04);
    let sentence = |rng: &mut ChaCha8Rng| {
        (0..rng.gen_range(1..=6))
            .map(|_| words[rng.gen_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    for case in 0..1_000 {
        let n = rng.gen_range(1..=30);
        let texts: Vec<String> = (0..n).map(|_| sentence(&mut rng)).collect();
        let index = VectorIndex::build(&embedder, texts.clone()).unwrap();
        let query = embedder.embed(&sentence(&mut rng)).unwrap();
        let k = rng.gen_range(1..=n + 2);
        let got = index.top_k(&query, k).unwrap();
        let want = naive_top_k(&embedder, &texts, &query, k);
        assert_eq!(got, want, "case {case}: ranking diverged (n={n}, k={k})");
    }
    println!("ACCEPTANCE 4 PASS: 1000 random (index, query, k) instances match the naive scan");
}

// ---------------------------------------------------------------------------
// criterion 5: mapper against a naive argmax
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_mapper_matches_naive_argmax() {
    let words = [
        "forest", "letter", "silver", "meadow", "copper", "lantern", "orchard", "saddle", "barrel",
        "willow", "summer", "anchor", "button", "cradle", "pillow", "marble", "violet", "timber",
        "kettle", "sparrow", "clover", "magnet", "ribbon", "tunnel", "velvet", "walnut", "whisper",
        "zephyr", "quartz", "ember", "raven", "tulip", "cobble", "drift", "fable", "gleam",
        "hollow", "ivory", "jigsaw", "krill", "lagoon", "mosaic", "nectar", "oasis", "prism",
        "quiver", "raft", "shale", "thistle", "umber", "vapor",
    ];
    let mut records = Vec::new();
    for i in 0..50 {
        records.push(RawSignRecord {
            fsw: format!(
                "M{}x{}S{:03x}{}{:x}{}x{}",
                510 + i,
                520 + i,
                0x101 + i,
                i % 6,
                (i * 3) % 16,
                480 + i,
                470 + i
            ),
            descriptions: vec![format!("{} {}", words[i], words[i + 1])],
            source_id: format!("v{i}"),
            canonical: None,
        });
    }
    let lexicon = Lexicon::build(&records, 3).unwrap();
    let canonicals: Vec<String> = lexicon
        .canonical_texts()
        .into_iter()
        .map(str::to_string)
        .collect();
    assert_eq!(canonicals.len(), 50);

    let embedder = HashingEmbedder::new(256).unwrap();
    let index = VectorIndex::build(&embedder, canonicals.clone()).unwrap();

    let mut rng = rng(0x05);
    for case in 0..500 {
        // Three or more words: a canonical form here is always two words,
        // so random pseudo text can never hit the exact path.
        let pseudo = (0..rng.gen_range(3..=6))
            .map(|_| words[rng.gen_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" ");
        let query = embedder.embed(&pseudo).unwrap();
        let mut want = 0usize;
        let mut want_score = f32::MIN;
        for (i, canonical) in canonicals.iter().enumerate() {
            let score = cosine_similarity(&query, &embedder.embed(canonical).unwrap()).unwrap();
            if score > want_score {
                want = i;
                want_score = score;
            }
        }
        let got = map_description(&pseudo, &index, &lexicon, &embedder, None).unwrap();
        assert_eq!(got.method, MatchMethod::Embedding, "case {case}");
        assert_eq!(
            got.canonical.as_deref(),
            Some(canonicals[want].as_str()),
            "case {case}: {pseudo:?}"
        );
        assert_eq!(got.score, want_score, "case {case}");
    }

    for canonical in &canonicals {
        let planted = format!("  {}  ", canonical.to_uppercase());
        let got = map_description(&planted, &index, &lexicon, &embedder, None).unwrap();
        assert_eq!(got.method, MatchMethod::Exact, "planted {canonical:?}");
        assert_eq!(got.canonical.as_deref(), Some(canonical.as_str()));
        assert_eq!(got.score, 1.0);
    }
    println!("ACCEPTANCE 5 PASS: 500 pseudo texts match the argmax oracle, 50/50 exact duplicates short-circuit");
}

// ---------------------------------------------------------------------------
// criterion 6: metric oracles
// ---------------------------------------------------------------------------

type MetricFixture = (&'static str, Vec<String>, Vec<String>, f64, f64);

#[test]
fn acceptance_06_metric_oracles() {
    // Pinned corpus scores, computed once with the community scorer and
    // frozen. Tolerance 1e-4.
    let sign_a = "M518x529S14c20481x471";
    let sign_b = "M518x518S10011482x483";
    let sign_c = "M522x525S11541498x475";
    let sign_d = "M520x520S22a04495x495";
    let sign_e = "M525x535S2ff00482x483";
    let sign_f = "M510x515S10e00490x485";
    let fixtures: [MetricFixture; 3] = [
        (
            "english",
            vec![
                "the cat sat on the warm mat near the door".into(),
                "a small dog barked at the mail carrier this morning".into(),
                "children played quietly in the shaded park after lunch".into(),
            ],
            vec![
                "the cat sat on the mat near the door".into(),
                "a small dog barked loudly at the mail carrier today".into(),
                "the children played in the shaded park after lunch".into(),
            ],
            61.8518422505,
            76.0444453591,
        ),
        (
            "sign tokens",
            vec![
                [sign_a, sign_b, sign_c, sign_d].join(" "),
                [sign_a, sign_f, sign_d, sign_e].join(" "),
                [sign_e, sign_a, sign_f, sign_d, sign_b].join(" "),
            ],
            vec![
                [sign_a, sign_b, sign_c, sign_d].join(" "),
                [sign_a, sign_f, sign_e, sign_d].join(" "),
                [sign_e, sign_a, sign_f, sign_b].join(" "),
            ],
            53.1187890453,
            92.3362815260,
        ),
        (
            "smoothing path",
            vec![
                "alpha beta gamma delta epsilon".into(),
                "one two three four".into(),
                "red green blue".into(),
            ],
            vec![
                "alpha beta delta gamma epsilon".into(),
                "one two three five".into(),
                "blue green red".into(),
            ],
            30.3526714473,
            72.3678179557,
        ),
    ];
    for (name, refs, hyps, want_bleu, want_chrf) in &fixtures {
        let bleu = corpus_bleu(refs, hyps).unwrap();
        let chrf = corpus_chrf2(refs, hyps).unwrap();
        assert!(
            (bleu - want_bleu).abs() < 1e-4,
            "{name}: BLEU {bleu} != {want_bleu}"
        );
        assert!(
            (chrf - want_chrf).abs() < 1e-4,
            "{name}: ChrF2 {chrf} != {want_chrf}"
        );
    }

    // Hand-enumerated symbol F1 cases, exact.
    let seq = |text: &str| parse_sequence(text).unwrap();
    let f1_cases: [(&str, &str, f64); 10] = [
        // identical symbol, geometry differs
        ("M500x500S10011480x480", "M510x510S10011490x490", 1.0),
        // both empty
        ("", "", 1.0),
        // one side empty
        ("", "M500x500S10011480x480", 0.0),
        ("M500x500S10011480x480", "", 0.0),
        // disjoint
        ("M500x500S10011480x480", "M500x500S14c20480x480", 0.0),
        // one of two shared
        (
            "M500x500S10011480x480S14c20490x490",
            "M500x500S10011480x480S20500490x490",
            0.5,
        ),
        // multiset clipping: gold twice, pred once
        (
            "M500x500S10011480x480S10011490x490S14c20500x500",
            "M500x500S10011480x480",
            0.5,
        ),
        // pred duplicates a single gold symbol
        (
            "M500x500S10011480x480",
            "M500x500S10011480x480S10011490x490",
            2.0 / 3.0,
        ),
        // temporal prefix symbols count like positioned ones
        (
            "AS10011M500x500S14c20480x480",
            "M500x500S10011480x480S14c20490x490",
            1.0,
        ),
        // the multiset pools symbols across the whole sequence
        (
            "M500x500S10011480x480 M500x500S14c20480x480",
            "M500x500S10011480x480S14c20490x490",
            1.0,
        ),
    ];
    for (gold, pred, want) in &f1_cases {
        let score = symbol_f1(&seq(gold), &seq(pred));
        assert_eq!(score.f1, *want, "F1({gold:?}, {pred:?})");
    }
    let spot = symbol_f1(
        &seq("M500x500S10011480x480"),
        &seq("M500x500S10011480x480S10011490x490"),
    );
    assert_eq!(spot.precision, 0.5);
    assert_eq!(spot.recall, 1.0);
    assert_eq!(spot.matched_symbols, 1);

    // Hand-computed coordinate MAE cases, exact.
    let case1 = mae_xy(&seq("M500x500S10011480x480"), &seq("M500x500S10011480x480"));
    assert_eq!((case1.mae_x(), case1.mae_y()), (Some(0.0), Some(0.0)));
    assert_eq!(case1.pairs, 1);

    let case2 = mae_xy(&seq("M500x500S10011500x500"), &seq("M500x500S10011510x490"));
    assert_eq!((case2.mae_x(), case2.mae_y()), (Some(10.0), Some(10.0)));

    let case3 = mae_xy(
        &seq("M500x500S10011500x500 M500x500S14c20500x500"),
        &seq("M500x500S10011505x500 M500x500S14c20515x520"),
    );
    assert_eq!((case3.mae_x(), case3.mae_y()), (Some(10.0), Some(10.0)));
    assert_eq!(case3.pairs, 2);

    // extra pred symbol is truncated away, only the aligned pair counts
    let case4 = mae_xy(
        &seq("M600x600S10011500x500S14c20600x600"),
        &seq("M600x600S10011510x490"),
    );
    assert_eq!((case4.mae_x(), case4.mae_y()), (Some(10.0), Some(10.0)));
    assert_eq!(case4.pairs, 1);

    let case5 = mae_xy(&seq("M500x500S10011480x480"), &seq(""));
    assert_eq!((case5.mae_x(), case5.mae_y()), (None, None));
    assert_eq!(case5.pairs, 0);

    println!("ACCEPTANCE 6 PASS: 3 pinned corpora within 1e-4, 10 F1 and 5 MAE hand cases exact");
}

// ---------------------------------------------------------------------------
// shared command-line fixtures for criteria 7-10
// ---------------------------------------------------------------------------

fn aulsign(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_aulsign"))
        .args(args)
        .output()
        .expect("spawn aulsign");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const FIXTURE_WORDS: [&str; 30] = [
    "river", "stone", "light", "garden", "window", "teacher", "morning", "bridge", "music",
    "paper", "yellow", "winter", "basket", "candle", "market", "harbor", "forest", "letter",
    "silver", "meadow", "copper", "lantern", "orchard", "saddle", "barrel", "willow", "summer",
    "anchor", "button", "cradle",
];

fn fixture_class_fsw(i: usize) -> String {
    format!(
        "M{}x{}S{:03x}{}{:x}{}x{}",
        510 + i,
        520 + i,
        0x100 + i * 7,
        i % 6,
        (i * 3) % 16,
        480 + (i % 40),
        470 + ((i * 2) % 50)
    )
}

fn fixture_class_desc(i: usize) -> String {
    format!("{} {}", FIXTURE_WORDS[i % 30], FIXTURE_WORDS[(i + 9) % 30])
}

struct CliFixture {
    dir: TempDir,
    lexicon: Lexicon,
    /// id -> (spoken, fsw)
    items: BTreeMap<String, (String, String)>,
}

impl CliFixture {
    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }

    /// Gold sign-to-description decomposition of one corpus item, segments
    /// joined the way the generator is expected to answer.
    fn gold_decomposition(&self, id: &str) -> String {
        let (_, fsw) = &self.items[id];
        parse_sequence(fsw)
            .unwrap()
            .signs()
            .iter()
            .map(|sign| self.lexicon.token_for_sign(sign).to_string())
            .collect::<Vec<_>>()
            .join(" | ")
    }

    fn gold_spoken(&self, id: &str) -> String {
        self.items[&id.to_string()].0.clone()
    }
}

/// Writes a sign vocabulary and a corpus whose gold signs are exactly the
/// lexicon representatives. `signs_per_item` of 4+ keeps 4-gram counts
/// positive so a perfect run can reach BLEU 100.
fn build_cli_fixture(prefix: &str, n_items: usize, signs_per_item: usize) -> CliFixture {
    let dir = TempDir::new().unwrap();
    let classes = 24usize;

    let mut signs_body = String::new();
    for i in 0..classes {
        signs_body.push_str(
            &serde_json::json!({
                "fsw": fixture_class_fsw(i),
                "descriptions": [fixture_class_desc(i)],
                "source_id": format!("s{i}"),
            })
            .to_string(),
        );
        signs_body.push('\n');
    }
    let signs_path = dir.path().join("signs.jsonl");
    fs::write(&signs_path, signs_body).unwrap();

    let lexicon_path = dir.path().join("lexicon.jsonl");
    let (ok, _, stderr) = aulsign(&[
        "build-lexicon",
        signs_path.to_str().unwrap(),
        "-o",
        lexicon_path.to_str().unwrap(),
    ]);
    assert!(ok, "build-lexicon failed: {stderr}");
    let lexicon = Lexicon::load(&lexicon_path).unwrap();

    let mut items = BTreeMap::new();
    let mut corpus_body = String::new();
    for j in 0..n_items {
        let id = format!("{prefix}{j}");
        let fsw = (0..signs_per_item)
            .map(|s| fixture_class_fsw((j + s * 5) % classes))
            .collect::<Vec<_>>()
            .join(" ");
        let spoken = format!(
            "the {} meets the {} near the old {}",
            FIXTURE_WORDS[j % 30],
            FIXTURE_WORDS[(j + 4) % 30],
            FIXTURE_WORDS[(j + 13) % 30]
        );
        corpus_body
            .push_str(&serde_json::json!({ "id": id, "spoken": spoken, "fsw": fsw }).to_string());
        corpus_body.push('\n');
        items.insert(id, (spoken, fsw));
    }
    fs::write(dir.path().join("corpus.jsonl"), corpus_body).unwrap();

    CliFixture {
        dir,
        lexicon,
        items,
    }
}

/// Extracts `(item id, prompt fingerprint)` pairs from scripted-miss
/// failure lines on standard error.
fn harvest_fingerprints(stderr: &str) -> Vec<(String, String)> {
    stderr
        .lines()
        .filter_map(|line| {
            let (left, fp) = line.split_once(": generation: no scripted response for prompt ")?;
            let id = left.rsplit(", ").next().unwrap_or(left);
            Some((id.to_string(), fp.trim().to_string()))
        })
        .collect()
}

fn write_script(path: &Path, entries: &BTreeMap<String, String>) {
    let mut body = String::new();
    body.push_str(&serde_json::json!({ "prompt_sha256": "0", "response": "unused" }).to_string());
    body.push('\n');
    for (fingerprint, response) in entries {
        body.push_str(
            &serde_json::json!({ "prompt_sha256": fingerprint, "response": response }).to_string(),
        );
        body.push('\n');
    }
    fs::write(path, body).unwrap();
}

/// Runs translate twice: a harvest pass that collects prompt fingerprints
/// from the scripted misses, then a real pass answering each prompt with
/// `respond(id)`. Returns the predictions path.
fn scripted_translate(
    fixture: &CliFixture,
    direction: &str,
    run_name: &str,
    respond: impl Fn(&str) -> String,
) -> String {
    let script = fixture.path(&format!("{run_name}-script.jsonl"));
    write_script(Path::new(&script), &BTreeMap::new());
    let base = [
        "translate",
        "-d",
        direction,
        "-i",
        &fixture.path("corpus.jsonl"),
        "--lexicon",
        &fixture.path("lexicon.jsonl"),
        "--corpus",
        &fixture.path("corpus.jsonl"),
        "--script",
        &script,
    ];

    let harvest_dir = fixture.path(&format!("{run_name}-harvest"));
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["-o", &harvest_dir]);
    let (ok, _, stderr) = aulsign(&args);
    assert!(!ok, "harvest pass unexpectedly succeeded");
    let mut entries = BTreeMap::new();
    for (id, fingerprint) in harvest_fingerprints(&stderr) {
        entries.insert(fingerprint, respond(&id));
    }
    assert_eq!(entries.len(), fixture.items.len(), "one prompt per item");
    write_script(Path::new(&script), &entries);

    let run_dir = fixture.path(run_name);
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["-o", &run_dir]);
    let (ok, _, stderr) = aulsign(&args);
    assert!(ok, "golden pass failed: {stderr}");
    format!("{run_dir}/predictions.jsonl")
}

fn evaluate_json(fixture: &CliFixture, direction: &str, predictions: &str) -> serde_json::Value {
    let (ok, stdout, stderr) = aulsign(&[
        "evaluate",
        "--gold",
        &fixture.path("corpus.jsonl"),
        "--pred",
        predictions,
        "-d",
        direction,
        "--json",
    ]);
    assert!(ok, "evaluate failed: {stderr}");
    serde_json::from_str(&stdout).unwrap()
}

// ---------------------------------------------------------------------------
// criterion 7: offline golden run through the binary
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_offline_golden_run() {
    let start = Instant::now();
    let fixture = build_cli_fixture("g", 8, 4);

    let predictions = scripted_translate(&fixture, "text2sign", "t2s", |id| {
        fixture.gold_decomposition(id)
    });
    let report = evaluate_json(&fixture, "text2sign", &predictions);
    assert_eq!(report["mean_f1"].as_f64().unwrap(), 1.0);
    assert!(
        (report["bleu"].as_f64().unwrap() - 100.0).abs() < 1e-9,
        "{report}"
    );
    assert!(
        (report["chrf2"].as_f64().unwrap() - 100.0).abs() < 1e-9,
        "{report}"
    );
    assert_eq!(report["mae_x"].as_f64().unwrap(), 0.0);
    assert_eq!(report["mae_y"].as_f64().unwrap(), 0.0);

    let predictions =
        scripted_translate(&fixture, "sign2text", "s2t", |id| fixture.gold_spoken(id));
    let report = evaluate_json(&fixture, "sign2text", &predictions);
    assert!(
        (report["bleu"].as_f64().unwrap() - 100.0).abs() < 1e-9,
        "{report}"
    );
    assert!(
        (report["chrf2"].as_f64().unwrap() - 100.0).abs() < 1e-9,
        "{report}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!("ACCEPTANCE 7 PASS: golden text2sign F1 1.0 / BLEU 100 / ChrF2 100 / MAE 0, sign2text 100/100 in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// criterion 8: degradation strictly lowers the scores
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_degradation_lowers_scores() {
    let fixture = build_cli_fixture("d", 20, 5);

    let golden = scripted_translate(&fixture, "text2sign", "gold", |id| {
        fixture.gold_decomposition(id)
    });
    let golden_report = evaluate_json(&fixture, "text2sign", &golden);

    // same run with the last description dropped from every decomposition
    let degraded = scripted_translate(&fixture, "text2sign", "degraded", |id| {
        let full = fixture.gold_decomposition(id);
        full.rsplit_once(" | ").unwrap().0.to_string()
    });
    let degraded_report = evaluate_json(&fixture, "text2sign", &degraded);

    let golden_f1 = golden_report["mean_f1"].as_f64().unwrap();
    let degraded_f1 = degraded_report["mean_f1"].as_f64().unwrap();
    let golden_bleu = golden_report["bleu"].as_f64().unwrap();
    let degraded_bleu = degraded_report["bleu"].as_f64().unwrap();
    assert!(
        degraded_f1 < golden_f1,
        "F1 did not drop: {degraded_f1} vs {golden_f1}"
    );
    assert!(
        degraded_bleu < golden_bleu,
        "BLEU did not drop: {degraded_bleu} vs {golden_bleu}"
    );
    println!(
        "ACCEPTANCE 8 PASS: dropping one description per sentence lowers F1 {golden_f1:.4} -> {degraded_f1:.4}, BLEU {golden_bleu:.2} -> {degraded_bleu:.2}"
    );
}

// ---------------------------------------------------------------------------
// criterion 9: seeded sampling protocol
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_seeded_split_protocol() {
    let fixture = build_cli_fixture("p", 4, 4);

    // 320 rows, 20 of them with a sign outside the vocabulary so the
    // filtered pool is exactly 300.
    let mut corpus_body = String::new();
    for j in 0..320 {
        let fsw = if j % 16 == 15 {
            format!("{} M600x600S30015500x500", fixture_class_fsw(j % 24))
        } else {
            (0..1 + j % 3)
                .map(|s| fixture_class_fsw((j + s * 7) % 24))
                .collect::<Vec<_>>()
                .join(" ")
        };
        corpus_body.push_str(
            &serde_json::json!({
                "id": format!("row{j}"),
                "spoken": format!("sentence number {j}"),
                "fsw": fsw,
            })
            .to_string(),
        );
        corpus_body.push('\n');
    }
    let pool_path = fixture.path("pool.jsonl");
    fs::write(&pool_path, corpus_body).unwrap();

    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for seed in 1..=10u64 {
        let split = format!("sampled:115:{seed}");
        let mut per_seed: Vec<Vec<u8>> = Vec::new();
        for round in 0..2 {
            let out_path = fixture.path(&format!("sampled-{seed}-{round}.jsonl"));
            let (ok, _, stderr) = aulsign(&[
                "preprocess",
                &pool_path,
                "--lexicon",
                &fixture.path("lexicon.jsonl"),
                "--split",
                &split,
                "-o",
                &out_path,
            ]);
            assert!(ok, "seed {seed} round {round}: {stderr}");
            let bytes = fs::read(&out_path).unwrap();
            assert_eq!(
                bytes.iter().filter(|b| **b == b'\n').count(),
                115,
                "seed {seed}: wrong subset size"
            );
            per_seed.push(bytes);
        }
        assert_eq!(per_seed[0], per_seed[1], "seed {seed} not reproducible");
        outputs.push(per_seed.pop().unwrap());
    }
    let distinct: HashSet<&Vec<u8>> = outputs.iter().collect();
    assert!(distinct.len() > 1, "all seeds drew the same subset");
    println!("ACCEPTANCE 9 PASS: 10 seeds draw 115-sentence subsets, each byte-reproducible");
}

// ---------------------------------------------------------------------------
// criterion 10: reproduction harness surface
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_reproduction_harness() {
    // Reference values print without any inputs or credentials.
    let (ok, stdout, _) = aulsign(&["reproduce", "--print-reference"]);
    assert!(ok);
    for needle in [
        "0.37",
        "18.79",
        "53.91",
        "25.52",
        "30.95",
        "26.59",
        "40.76",
        "no tolerance",
    ] {
        assert!(
            stdout.contains(needle),
            "reference output misses {needle:?}: {stdout}"
        );
    }

    // The experiment loop itself runs offline against a scripted generator:
    // two seeded runs over a small pool, reports per seed plus aggregate.
    let fixture = build_cli_fixture("e", 5, 4);
    let mut train_body = String::new();
    for j in 0..20 {
        let fsw = (0..1 + j % 3)
            .map(|s| fixture_class_fsw((j + s * 7) % 24))
            .collect::<Vec<_>>()
            .join(" ");
        train_body.push_str(
            &serde_json::json!({
                "id": format!("t{j}"),
                "spoken": format!("training sentence {j} about the {}", FIXTURE_WORDS[j % 30]),
                "fsw": fsw,
            })
            .to_string(),
        );
        train_body.push('\n');
    }
    let train_path = fixture.path("train.jsonl");
    fs::write(&train_path, train_body).unwrap();

    let script_path = fixture.path("reproduce-script.jsonl");
    let out_dir = fixture.path("reproduce-out");
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    write_script(Path::new(&script_path), &entries);

    let mut final_stdout = String::new();
    let mut converged = false;
    for _ in 0..6 {
        let (ok, stdout, stderr) = aulsign(&[
            "reproduce",
            "--signs",
            &fixture.path("signs.jsonl"),
            "--train",
            &train_path,
            "--test",
            &fixture.path("corpus.jsonl"),
            "--samples",
            "6",
            "--seeds",
            "1,2",
            "--script",
            &script_path,
            "-o",
            &out_dir,
        ]);
        if ok {
            final_stdout = stdout;
            converged = true;
            break;
        }
        let harvested = harvest_fingerprints(&stderr);
        assert!(
            !harvested.is_empty(),
            "failed without new prompts: {stderr}"
        );
        for (id, fingerprint) in harvested {
            entries.insert(fingerprint, fixture.gold_decomposition(&id));
        }
        write_script(Path::new(&script_path), &entries);
    }
    assert!(converged, "scripted reproduction never converged");
    assert!(final_stdout.contains("seed 1:"), "{final_stdout}");
    assert!(final_stdout.contains("seed 2:"), "{final_stdout}");
    assert!(
        final_stdout.contains("aggregate over 2 runs"),
        "{final_stdout}"
    );
    assert!(final_stdout.contains("18.79"), "{final_stdout}");
    assert!(Path::new(&out_dir).join("report-seed-1.json").exists());
    assert!(Path::new(&out_dir)
        .join("predictions-seed-2.jsonl")
        .exists());
    println!("ACCEPTANCE 10 PASS: harness prints reference values and the seeded loop runs scripted end to end");
}
