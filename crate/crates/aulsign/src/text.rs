//! Small text utilities shared across the crate.

/// Token standing in for a sign whose description vocabulary entry is
/// unknown. Reserved: the vocabulary builder never assigns this text to a
/// real entry.
pub const UNKNOWN_TOKEN: &str = "<unk>";

/// Separator between description segments when a sequence of descriptions is
/// rendered as one line (retrieval queries, prompt examples, model output).
pub const SEGMENT_SEPARATOR: &str = " | ";

/// Lowercases and collapses all runs of whitespace to single spaces,
/// trimming the ends. Used wherever two pieces of free text must compare
/// equal regardless of casing or spacing.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for (i, word) in s.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Joins description segments with [`SEGMENT_SEPARATOR`].
pub fn join_segments<I, S>(segments: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for (i, seg) in segments.into_iter().enumerate() {
        if i > 0 {
            out.push_str(SEGMENT_SEPARATOR);
        }
        out.push_str(seg.as_ref());
    }
    out
}
