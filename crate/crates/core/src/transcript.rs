//! Conversation transcripts: parsing, normalization, role-tagged rendering,
//! sentence splitting and turn windows.
//!
//! A *word* throughout this crate is a maximal run of non-whitespace
//! characters.

use std::fmt;
use std::io::BufRead;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: unknown speaker label {label:?}")]
    UnknownSpeaker { line: usize, label: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeakerRole {
    Doctor,
    Patient,
    Other,
}

impl SpeakerRole {
    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "doctor" => Some(Self::Doctor),
            "patient" => Some(Self::Patient),
            "other" => Some(Self::Other),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Doctor => "doctor",
            Self::Patient => "patient",
            Self::Other => "other",
        }
    }

    /// Bracketed tag used when rendering a turn, e.g. `[doctor]`.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Doctor => "[doctor]",
            Self::Patient => "[patient]",
            Self::Other => "[other]",
        }
    }
}

impl fmt::Display for SpeakerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Replaces newlines and tabs with spaces and collapses whitespace runs.
pub fn normalize_text(text: &str) -> String {
    normalize_counting(text).0
}

/// Normalized text and its word count in one pass.
fn normalize_counting(text: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut words = 0;
    for w in text.split_whitespace() {
        if words > 0 {
            out.push(' ');
        }
        out.push_str(w);
        words += 1;
    }
    (out, words)
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    speaker: SpeakerRole,
    text: String,
    word_count: usize,
}

impl Turn {
    pub fn new(speaker: SpeakerRole, text: &str) -> Self {
        let (text, word_count) = normalize_counting(text);
        Self {
            speaker,
            text,
            word_count,
        }
    }

    pub fn speaker(&self) -> SpeakerRole {
        self.speaker
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn word_count(&self) -> usize {
        self.word_count
    }

    fn render_into(&self, out: &mut String) {
        out.push_str(self.speaker.tag());
        if !self.text.is_empty() {
            out.push(' ');
            out.push_str(&self.text);
        }
    }
}

/// An ordered, non-empty list of speaker-annotated turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    id: String,
    turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(id: impl Into<String>, turns: Vec<Turn>) -> Result<Self, String> {
        let id = id.into();
        if id.is_empty() {
            return Err("conversation id is empty".into());
        }
        if turns.is_empty() {
            return Err(format!("conversation {id:?} has no turns"));
        }
        Ok(Self { id, turns })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.turns.iter().map(Turn::word_count).sum()
    }

    pub fn words_in(&self, range: Range<usize>) -> usize {
        self.turns[range].iter().map(Turn::word_count).sum()
    }

    /// Renders the whole conversation with role tags.
    pub fn serialize_with_roles(&self) -> String {
        render_turns(&self.turns)
    }

    pub fn render_range(&self, range: Range<usize>) -> String {
        render_turns(&self.turns[range])
    }

    /// One line of the transcript JSONL schema (no trailing newline).
    pub fn to_jsonl(&self) -> String {
        let record = RawConversation {
            id: self.id.clone(),
            turns: self
                .turns
                .iter()
                .map(|t| RawTurn {
                    speaker: t.speaker.as_str().to_string(),
                    text: t.text.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&record).expect("conversation serializes")
    }
}

/// `[doctor] hello [patient] hi`: one tag per turn, single-space joined.
pub fn render_turns(turns: &[Turn]) -> String {
    let mut out = String::new();
    for (i, turn) in turns.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        turn.render_into(&mut out);
    }
    out
}

#[derive(Serialize, Deserialize)]
struct RawTurn {
    speaker: String,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct RawConversation {
    id: String,
    turns: Vec<RawTurn>,
}

/// Parses transcript JSONL. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn parse_transcripts<R: BufRead>(reader: R) -> Result<Vec<Conversation>, TranscriptError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawConversation =
            serde_json::from_str(&line).map_err(|source| TranscriptError::Json {
                line: line_no,
                source,
            })?;
        let turns = raw
            .turns
            .iter()
            .map(|t| {
                SpeakerRole::parse(&t.speaker)
                    .map(|role| Turn::new(role, &t.text))
                    .ok_or_else(|| TranscriptError::UnknownSpeaker {
                        line: line_no,
                        label: t.speaker.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let conv =
            Conversation::new(raw.id, turns).map_err(|message| TranscriptError::Invalid {
                line: line_no,
                message,
            })?;
        out.push(conv);
    }
    Ok(out)
}

pub fn parse_transcripts_str(text: &str) -> Result<Vec<Conversation>, TranscriptError> {
    parse_transcripts(text.as_bytes())
}

/// Ordered sentences of one summary paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentenceList(pub Vec<String>);

impl SentenceList {
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Words ending in a period that never close a sentence. Compared
/// case-insensitively.
pub const ABBREVIATIONS: &[&str] = &["Dr.", "Mr.", "Mrs.", "Ms.", "mg.", "p.o."];

fn is_abbreviation(word: &str) -> bool {
    ABBREVIATIONS.iter().any(|a| a.eq_ignore_ascii_case(word))
}

fn closes_sentence(word: &str, next: &str) -> bool {
    let ends_with_terminal = word.ends_with(['.', '!', '?']);
    let next_opens = next
        .chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit());
    ends_with_terminal && next_opens && !is_abbreviation(word)
}

/// Rule-based sentence splitter: a boundary follows `.`, `!` or `?` when
/// the next word starts with an uppercase letter or a digit and the word is
/// not a listed abbreviation.
pub fn split_sentences(paragraph: &str) -> SentenceList {
    let words: Vec<&str> = paragraph.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for (i, word) in words.iter().enumerate() {
        current.push(word);
        let boundary = match words.get(i + 1) {
            Some(next) => closes_sentence(word, next),
            None => true,
        };
        if boundary {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    SentenceList(sentences)
}

/// Sliding windows of `width` turns, `stride` apart, over `n_turns` turns.
///
/// Windows are half-open turn ranges. When the last full window does not
/// reach the final turn, a shorter trailing window ending at the final turn
/// is appended.
pub fn window_ranges(n_turns: usize, width: usize, stride: usize) -> Vec<Range<usize>> {
    assert!(width >= 1 && stride >= 1, "width and stride must be >= 1");
    if n_turns == 0 {
        return Vec::new();
    }
    if n_turns <= width {
        #[allow(clippy::single_range_in_vec_init)]
        return vec![0..n_turns];
    }
    let mut windows = Vec::new();
    let mut start = 0;
    while start + width <= n_turns {
        windows.push(start..start + width);
        start += stride;
    }
    let last_end = windows.last().map_or(0, |w| w.end);
    if last_end < n_turns {
        let tail_start = if start < n_turns {
            start
        } else {
            // stride > width left a gap; keep the tail within one width
            last_end.max(n_turns - width)
        };
        windows.push(tail_start..n_turns);
    }
    windows
}

pub fn window_turns(conv: &Conversation, width: usize, stride: usize) -> Vec<Range<usize>> {
    window_ranges(conv.len(), width, stride)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(turns: &[(SpeakerRole, &str)]) -> Conversation {
        Conversation::new("c1", turns.iter().map(|(r, t)| Turn::new(*r, t)).collect()).unwrap()
    }

    #[test]
    fn parses_minimal_record() {
        let input = r#"{"id":"a","turns":[{"speaker":"doctor","text":"hello"},{"speaker":"patient","text":"hi there"}]}"#;
        let convs = parse_transcripts_str(input).unwrap();
        assert_eq!(convs.len(), 1);
        assert_eq!(convs[0].len(), 2);
        assert_eq!(convs[0].word_count(), 3);
    }

    #[test]
    fn newlines_and_tabs_become_spaces() {
        let input = r#"{"id":"a","turns":[{"speaker":"doctor","text":"how\nare\tyou"}]}"#;
        let convs = parse_transcripts_str(input).unwrap();
        assert_eq!(convs[0].turns()[0].text(), "how are you");
        assert_eq!(convs[0].turns()[0].word_count(), 3);
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_transcripts_str("").unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"id\":\"a\",\"turns\":[{\"speaker\":\"doctor\",\"text\":\"x\"}]}\n{oops";
        match parse_transcripts_str(input) {
            Err(TranscriptError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_speaker_is_rejected() {
        let input = r#"{"id":"a","turns":[{"speaker":"nurse","text":"x"}]}"#;
        assert!(matches!(
            parse_transcripts_str(input),
            Err(TranscriptError::UnknownSpeaker { line: 1, .. })
        ));
    }

    #[test]
    fn empty_turns_rejected() {
        let input = r#"{"id":"a","turns":[]}"#;
        assert!(matches!(
            parse_transcripts_str(input),
            Err(TranscriptError::Invalid { line: 1, .. })
        ));
    }

    #[test]
    fn role_rendering() {
        let c = conv(&[(SpeakerRole::Doctor, "hello"), (SpeakerRole::Patient, "hi")]);
        assert_eq!(c.serialize_with_roles(), "[doctor] hello [patient] hi");
        let c = conv(&[(SpeakerRole::Other, "background noise")]);
        assert_eq!(c.serialize_with_roles(), "[other] background noise");
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(
            split_sentences("She denies fever. She has cough.").0,
            vec!["She denies fever.", "She has cough."]
        );
        assert_eq!(split_sentences("Dr. Smith saw her.").len(), 1);
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("Takes 5 mg. Daily at night. Stop? 2 days ago!").0,
            vec!["Takes 5 mg. Daily at night.", "Stop?", "2 days ago!"]
        );
        // lowercase continuation is not a boundary
        assert_eq!(split_sentences("pain vs. discomfort.").len(), 1);
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_ranges(10, 8, 1), vec![0..8, 1..9, 2..10]);
        assert_eq!(window_ranges(20, 8, 4), vec![0..8, 4..12, 8..16, 12..20]);
        assert_eq!(window_ranges(5, 8, 4), vec![0..5]);
        assert_eq!(window_ranges(9, 8, 4), vec![0..8, 4..9]);
        assert_eq!(
            window_ranges(20, 2, 5),
            vec![0..2, 5..7, 10..12, 15..17, 18..20]
        );
    }
}
