//! Formal SignWriting (FSW) notation: types, parsing, serialization,
//! normalization and the symbol-level equivalence relation.
//!
//! An FSW *symbol key* is `S` followed by a three-digit hex base, a fill
//! digit and a rotation digit, e.g. `S10011`. A *sign* is either a boxed
//! cluster (`M518x529S10011482x483...`, optionally preceded by a temporal
//! prefix `A` + symbol keys) or a bare punctuation symbol with its
//! coordinate. Signs in a sequence are separated by single spaces.
//!
//! Two signs are *equivalent* when they contain the same multiset of symbol
//! keys, regardless of coordinates, box marker or symbol order. The lexicon
//! is built over these equivalence classes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Lowest valid symbol base.
pub const BASE_MIN: u16 = 0x100;
/// Highest valid symbol base.
pub const BASE_MAX: u16 = 0x38b;
/// Punctuation bases: symbols in this range may stand alone without a box.
pub const PUNCTUATION_BASE_MIN: u16 = 0x387;
/// Upper end of the punctuation base range (equals [`BASE_MAX`]).
pub const PUNCTUATION_BASE_MAX: u16 = 0x38b;
/// Highest valid fill digit.
pub const FILL_MAX: u8 = 5;
/// Highest valid rotation digit.
pub const ROTATION_MAX: u8 = 15;
/// Lowest valid coordinate component.
pub const COORD_MIN: u16 = 250;
/// Highest valid coordinate component.
pub const COORD_MAX: u16 = 749;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FswError {
    #[error("malformed symbol key {text:?}: {reason}")]
    MalformedSymbol { text: String, reason: &'static str },
    #[error(
        "symbol base {base:#05x} outside [{:#05x}, {:#05x}]",
        BASE_MIN,
        BASE_MAX
    )]
    BaseOutOfRange { base: u16 },
    #[error("symbol fill digit {fill} exceeds {}", FILL_MAX)]
    FillOutOfRange { fill: u8 },
    #[error("symbol rotation digit {rotation:#x} exceeds {:#x}", ROTATION_MAX)]
    RotationOutOfRange { rotation: u8 },
    #[error("coordinate component {value} outside [{}, {}]", COORD_MIN, COORD_MAX)]
    CoordinateOutOfRange { value: u16 },
    #[error("malformed coordinate {text:?}: expected three digits, 'x', three digits")]
    MalformedCoordinate { text: String },
    #[error("malformed sign {text:?}: {reason}")]
    MalformedSign { text: String, reason: &'static str },
    #[error("trailing input {rest:?} after a complete sign")]
    TrailingGarbage { rest: String },
    #[error("sign {index}: {source}")]
    AtSign { index: usize, source: Box<FswError> },
}

type Result<T> = std::result::Result<T, FswError>;

/// Identity of a symbol independent of its placement: base, fill, rotation.
///
/// Ordering is lexicographic on (base, fill, rotation), which coincides with
/// the lexicographic order of the canonical text form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolKey {
    pub base: u16,
    pub fill: u8,
    pub rotation: u8,
}

impl SymbolKey {
    pub fn new(base: u16, fill: u8, rotation: u8) -> Result<Self> {
        if !(BASE_MIN..=BASE_MAX).contains(&base) {
            return Err(FswError::BaseOutOfRange { base });
        }
        if fill > FILL_MAX {
            return Err(FswError::FillOutOfRange { fill });
        }
        if rotation > ROTATION_MAX {
            return Err(FswError::RotationOutOfRange { rotation });
        }
        Ok(SymbolKey {
            base,
            fill,
            rotation,
        })
    }

    /// True when the symbol may stand alone as a punctuation sign.
    pub fn is_punctuation(self) -> bool {
        (PUNCTUATION_BASE_MIN..=PUNCTUATION_BASE_MAX).contains(&self.base)
    }
}

impl fmt::Display for SymbolKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{:03x}{}{:x}", self.base, self.fill, self.rotation)
    }
}

impl FromStr for SymbolKey {
    type Err = FswError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        let key = p.symbol_key()?;
        if !p.at_end() {
            return Err(FswError::MalformedSymbol {
                text: s.to_string(),
                reason: "unexpected characters after the rotation digit",
            });
        }
        Ok(key)
    }
}

/// A position on the SignWriting canvas. Both components lie in
/// [[`COORD_MIN`], [`COORD_MAX`]].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub x: u16,
    pub y: u16,
}

impl Coord {
    pub fn new(x: u16, y: u16) -> Result<Self> {
        for value in [x, y] {
            if !(COORD_MIN..=COORD_MAX).contains(&value) {
                return Err(FswError::CoordinateOutOfRange { value });
            }
        }
        Ok(Coord { x, y })
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03}x{:03}", self.x, self.y)
    }
}

/// A symbol placed on the canvas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PositionedSymbol {
    pub key: SymbolKey,
    pub coord: Coord,
}

impl fmt::Display for PositionedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.key, self.coord)
    }
}

/// Box marker of a boxed sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoxMarker {
    B,
    L,
    M,
    R,
}

impl BoxMarker {
    pub fn as_char(self) -> char {
        match self {
            BoxMarker::B => 'B',
            BoxMarker::L => 'L',
            BoxMarker::M => 'M',
            BoxMarker::R => 'R',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'B' => Some(BoxMarker::B),
            'L' => Some(BoxMarker::L),
            'M' => Some(BoxMarker::M),
            'R' => Some(BoxMarker::R),
            _ => None,
        }
    }
}

impl fmt::Display for BoxMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A sign with a box: optional temporal prefix, box marker, the maximum
/// coordinate of the cluster, and the positioned symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxedSign {
    pub prefix: Vec<SymbolKey>,
    pub box_marker: BoxMarker,
    pub max_coord: Coord,
    pub symbols: Vec<PositionedSymbol>,
}

/// One sign: either a boxed cluster or a standalone punctuation symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Boxed(BoxedSign),
    Punctuation(PositionedSymbol),
}

impl Sign {
    /// All symbol keys of the sign: temporal prefix keys first, then the
    /// keys of the positioned symbols, in stored order.
    pub fn symbol_keys(&self) -> Vec<SymbolKey> {
        match self {
            Sign::Boxed(b) => b
                .prefix
                .iter()
                .copied()
                .chain(b.symbols.iter().map(|s| s.key))
                .collect(),
            Sign::Punctuation(p) => vec![p.key],
        }
    }

    /// The positioned symbols of the sign, in stored order.
    pub fn positioned_symbols(&self) -> &[PositionedSymbol] {
        match self {
            Sign::Boxed(b) => &b.symbols,
            Sign::Punctuation(p) => std::slice::from_ref(p),
        }
    }

    /// Canonical ordering: temporal prefix keys sorted, positioned symbols
    /// sorted by their serialized token text. Coordinates, box marker and
    /// symbol multiset are untouched, so the result is equivalent to the
    /// input and normalizing twice changes nothing.
    pub fn normalized(&self) -> Sign {
        match self {
            Sign::Boxed(b) => {
                let mut prefix = b.prefix.clone();
                prefix.sort_unstable();
                let mut symbols = b.symbols.clone();
                // (key, coord) order equals serialized text order: the key
                // text is fixed-width and coordinates are always three
                // digits per component.
                symbols.sort_unstable();
                Sign::Boxed(BoxedSign {
                    prefix,
                    box_marker: b.box_marker,
                    max_coord: b.max_coord,
                    symbols,
                })
            }
            Sign::Punctuation(p) => Sign::Punctuation(*p),
        }
    }

    /// The sorted multiset of symbol keys, used to decide sign equivalence.
    pub fn equivalence_key(&self) -> EquivalenceKey {
        let mut keys = self.symbol_keys();
        keys.sort_unstable();
        EquivalenceKey(keys)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Boxed(b) => {
                if !b.prefix.is_empty() {
                    write!(f, "A")?;
                    for key in &b.prefix {
                        write!(f, "{key}")?;
                    }
                }
                write!(f, "{}{}", b.box_marker, b.max_coord)?;
                for s in &b.symbols {
                    write!(f, "{}{}", s.key, s.coord)?;
                }
                Ok(())
            }
            Sign::Punctuation(p) => write!(f, "{}{}", p.key, p.coord),
        }
    }
}

impl FromStr for Sign {
    type Err = FswError;

    fn from_str(s: &str) -> Result<Self> {
        parse_sign(s)
    }
}

/// Sorted multiset of symbol keys identifying a sign equivalence class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EquivalenceKey(Vec<SymbolKey>);

impl EquivalenceKey {
    pub fn keys(&self) -> &[SymbolKey] {
        &self.0
    }

    /// Canonical text forms of the keys, e.g. `["S10011", "S20500"]`.
    pub fn key_texts(&self) -> Vec<String> {
        self.0.iter().map(|k| k.to_string()).collect()
    }

    /// Rebuilds a key from canonical text forms, re-sorting defensively.
    pub fn from_key_texts<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        let mut keys = Vec::with_capacity(texts.len());
        for t in texts {
            keys.push(t.as_ref().parse::<SymbolKey>()?);
        }
        keys.sort_unstable();
        Ok(EquivalenceKey(keys))
    }
}

impl fmt::Display for EquivalenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, key) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{key}")?;
        }
        Ok(())
    }
}

/// A whitespace-separated sequence of signs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SignSequence(pub Vec<Sign>);

impl SignSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn normalized(&self) -> SignSequence {
        SignSequence(self.0.iter().map(Sign::normalized).collect())
    }

    /// Canonical key texts of every symbol in the sequence, one entry per
    /// symbol occurrence (a multiset flattened across signs).
    pub fn all_key_texts(&self) -> Vec<String> {
        self.0
            .iter()
            .flat_map(|s| s.symbol_keys())
            .map(|k| k.to_string())
            .collect()
    }
}

impl fmt::Display for SignSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, sign) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
        }
        Ok(())
    }
}

impl FromStr for SignSequence {
    type Err = FswError;

    fn from_str(s: &str) -> Result<Self> {
        parse_sequence(s)
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn rest(&self) -> String {
        let pos = self.pos.min(self.bytes.len());
        String::from_utf8_lossy(&self.bytes[pos..]).into_owned()
    }

    fn slice_lossy(&self, start: usize, end: usize) -> String {
        let end = end.min(self.bytes.len());
        String::from_utf8_lossy(&self.bytes[start.min(end)..end]).into_owned()
    }

    fn malformed_sign(&self, reason: &'static str) -> FswError {
        FswError::MalformedSign {
            text: self.text.to_string(),
            reason,
        }
    }

    /// Advances over `n` bytes if available and aligned with character
    /// boundaries; otherwise leaves the position untouched.
    fn take(&mut self, n: usize) -> Option<&'a str> {
        let end = self.pos.checked_add(n)?;
        if end > self.bytes.len() || !self.text.is_char_boundary(end) {
            return None;
        }
        let slice = &self.text[self.pos..end];
        self.pos = end;
        Some(slice)
    }

    /// `S` + three hex digits + fill digit + hex rotation digit. The slice is
    /// validated character by character so that a short or non-hex token is a
    /// malformed symbol while hex digits outside the allowed ranges map to
    /// the dedicated range errors.
    fn symbol_key(&mut self) -> Result<SymbolKey> {
        let start = self.pos;
        let malformed = |p: &Parser<'a>, reason| FswError::MalformedSymbol {
            text: p.slice_lossy(start, start + 6),
            reason,
        };
        match self.take(1) {
            Some("S") => {}
            _ => {
                self.pos = start;
                return Err(malformed(self, "expected leading 'S'"));
            }
        }
        let body = match self.take(5) {
            Some(b) => b,
            None => {
                self.pos = start;
                return Err(malformed(self, "truncated symbol key"));
            }
        };
        let digits: Vec<u8> = body.bytes().collect();
        for &d in &digits {
            if !d.is_ascii_hexdigit() || d.is_ascii_uppercase() {
                self.pos = start;
                return Err(malformed(self, "expected five lowercase hex digits"));
            }
        }
        let hex = |d: u8| -> u16 {
            match d {
                b'0'..=b'9' => (d - b'0') as u16,
                _ => (d - b'a') as u16 + 10,
            }
        };
        let base = hex(digits[0]) * 256 + hex(digits[1]) * 16 + hex(digits[2]);
        let fill = hex(digits[3]) as u8;
        let rotation = hex(digits[4]) as u8;
        SymbolKey::new(base, fill, rotation).inspect_err(|_e| {
            self.pos = start;
        })
    }

    /// Three decimal digits, `x`, three decimal digits.
    fn coord(&mut self) -> Result<Coord> {
        let start = self.pos;
        let text = match self.take(7) {
            Some(t) => t,
            None => {
                let text = self.rest();
                self.pos = start;
                return Err(FswError::MalformedCoordinate { text });
            }
        };
        let b = text.as_bytes();
        let well_formed = b[3] == b'x'
            && b[..3].iter().all(u8::is_ascii_digit)
            && b[4..].iter().all(u8::is_ascii_digit);
        if !well_formed {
            self.pos = start;
            return Err(FswError::MalformedCoordinate {
                text: text.to_string(),
            });
        }
        let num = |s: &str| s.parse::<u16>().expect("three ascii digits");
        Coord::new(num(&text[..3]), num(&text[4..])).inspect_err(|_e| {
            self.pos = start;
        })
    }

    fn sign(&mut self) -> Result<Sign> {
        match self.peek() {
            Some(b'A') => {
                self.pos += 1;
                let mut prefix = Vec::new();
                while self.peek() == Some(b'S') {
                    prefix.push(self.symbol_key()?);
                }
                if prefix.is_empty() {
                    return Err(self.malformed_sign("temporal prefix 'A' without symbols"));
                }
                self.boxed(prefix)
            }
            Some(c) if BoxMarker::from_char(c as char).is_some() => self.boxed(Vec::new()),
            Some(b'S') => {
                let symbol = self.symbol_key()?;
                let coord = self.coord()?;
                if !symbol.is_punctuation() {
                    return Err(self.malformed_sign(
                        "only punctuation symbols may stand alone without a box marker",
                    ));
                }
                Ok(Sign::Punctuation(PositionedSymbol { key: symbol, coord }))
            }
            _ => Err(self.malformed_sign(
                "expected temporal prefix 'A', box marker B/L/M/R, or punctuation symbol",
            )),
        }
    }

    fn boxed(&mut self, prefix: Vec<SymbolKey>) -> Result<Sign> {
        let box_marker = match self.peek().and_then(|c| BoxMarker::from_char(c as char)) {
            Some(m) => {
                self.pos += 1;
                m
            }
            None => return Err(self.malformed_sign("expected box marker B/L/M/R")),
        };
        let max_coord = self.coord()?;
        let mut symbols = Vec::new();
        while self.peek() == Some(b'S') {
            let key = self.symbol_key()?;
            let coord = self.coord()?;
            symbols.push(PositionedSymbol { key, coord });
        }
        Ok(Sign::Boxed(BoxedSign {
            prefix,
            box_marker,
            max_coord,
            symbols,
        }))
    }
}

/// Parses exactly one sign. Leading or trailing characters (including
/// whitespace) are rejected.
pub fn parse_sign(token: &str) -> Result<Sign> {
    let mut p = Parser::new(token);
    let sign = p.sign()?;
    if !p.at_end() {
        return Err(FswError::TrailingGarbage { rest: p.rest() });
    }
    Ok(sign)
}

/// Parses a whitespace-separated sequence of signs. Errors carry the
/// zero-based index of the offending token. The empty string parses to the
/// empty sequence.
pub fn parse_sequence(text: &str) -> Result<SignSequence> {
    let mut signs = Vec::new();
    for (index, token) in text.split_whitespace().enumerate() {
        let sign = parse_sign(token).map_err(|e| FswError::AtSign {
            index,
            source: Box::new(e),
        })?;
        signs.push(sign);
    }
    Ok(SignSequence(signs))
}

/// Serializes a sequence, signs separated by single spaces.
pub fn serialize_sequence(seq: &SignSequence) -> String {
    seq.to_string()
}

/// Random generators for fixtures and fuzzing. Output is always
/// grammatically valid; distribution is arbitrary and not meant to imitate
/// real signing.
pub mod sample {
    use super::*;

    pub fn symbol_key<R: Rng>(rng: &mut R) -> SymbolKey {
        SymbolKey {
            base: rng.gen_range(BASE_MIN..=BASE_MAX),
            fill: rng.gen_range(0..=FILL_MAX),
            rotation: rng.gen_range(0..=ROTATION_MAX),
        }
    }

    pub fn coord<R: Rng>(rng: &mut R) -> Coord {
        Coord {
            x: rng.gen_range(COORD_MIN..=COORD_MAX),
            y: rng.gen_range(COORD_MIN..=COORD_MAX),
        }
    }

    pub fn positioned_symbol<R: Rng>(rng: &mut R) -> PositionedSymbol {
        PositionedSymbol {
            key: symbol_key(rng),
            coord: coord(rng),
        }
    }

    pub fn sign<R: Rng>(rng: &mut R) -> Sign {
        if rng.gen_ratio(1, 10) {
            let base = rng.gen_range(PUNCTUATION_BASE_MIN..=PUNCTUATION_BASE_MAX);
            let key = SymbolKey {
                base,
                fill: rng.gen_range(0..=FILL_MAX),
                rotation: rng.gen_range(0..=ROTATION_MAX),
            };
            return Sign::Punctuation(PositionedSymbol {
                key,
                coord: coord(rng),
            });
        }
        let prefix = if rng.gen_ratio(1, 4) {
            (0..rng.gen_range(1..=3)).map(|_| symbol_key(rng)).collect()
        } else {
            Vec::new()
        };
        let box_marker =
            [BoxMarker::B, BoxMarker::L, BoxMarker::M, BoxMarker::R][rng.gen_range(0..4)];
        let symbols = (0..rng.gen_range(0..=6))
            .map(|_| positioned_symbol(rng))
            .collect();
        Sign::Boxed(BoxedSign {
            prefix,
            box_marker,
            max_coord: coord(rng),
            symbols,
        })
    }

    pub fn sequence<R: Rng>(rng: &mut R, max_signs: usize) -> SignSequence {
        let n = rng.gen_range(1..=max_signs.max(1));
        SignSequence((0..n).map(|_| sign(rng)).collect())
    }
}
