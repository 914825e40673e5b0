//! Seeded synthetic corpora for demos, tests and benchmarks.
//!
//! Conversations are built from topic segments: the doctor asks about one
//! symptom at a time and the patient answers. References summarize a random
//! subset of the discussed symptoms, so concept metrics and target
//! selection have something to work with.

use std::fs;
use std::io::{self, BufWriter};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Splits;
use crate::metrics::{ConceptEntry, Lexicon};
use crate::records::{write_jsonl, ReferenceLine, SummaryRecord};
use crate::transcript::{Conversation, SpeakerRole, Turn};

const SYMPTOMS: &[(&str, &[&str])] = &[
    ("cough", &["cough", "coughing"]),
    ("fever", &["fever", "fevers"]),
    ("headache", &["headache", "headaches"]),
    ("nausea", &["nausea", "nauseous"]),
    ("vomiting", &["vomiting", "throwing up"]),
    ("chest pain", &["chest pain"]),
    (
        "shortness of breath",
        &["shortness of breath", "short of breath"],
    ),
    ("fatigue", &["fatigue", "tiredness"]),
    ("dizziness", &["dizziness", "dizzy spells"]),
    ("sore throat", &["sore throat"]),
    ("back pain", &["back pain"]),
    ("rash", &["rash"]),
    ("abdominal pain", &["abdominal pain", "stomach pain"]),
    ("diarrhea", &["diarrhea"]),
    ("chills", &["chills"]),
    ("runny nose", &["runny nose"]),
    ("joint pain", &["joint pain"]),
    ("palpitations", &["palpitations"]),
    ("insomnia", &["insomnia", "trouble sleeping"]),
    ("weight loss", &["weight loss"]),
];

const MEDICATIONS: &[&str] = &[
    "ibuprofen",
    "acetaminophen",
    "lisinopril",
    "metformin",
    "albuterol",
];
const DURATIONS: &[&str] = &[
    "two days",
    "three days",
    "a week",
    "two weeks",
    "a month",
    "several months",
];
const SEVERITIES: &[&str] = &["mild", "moderate", "severe", "constant", "intermittent"];

/// Symptom and medication lexicon matching the generated text.
pub fn demo_lexicon() -> Lexicon {
    let mut entries: Vec<ConceptEntry> = SYMPTOMS
        .iter()
        .enumerate()
        .map(|(i, (canonical, surfaces))| ConceptEntry {
            id: format!("S{:03}", i + 1),
            canonical: canonical.to_string(),
            surfaces: surfaces.iter().map(|s| s.to_string()).collect(),
            category: Some("symptom".into()),
        })
        .collect();
    entries.extend(MEDICATIONS.iter().enumerate().map(|(i, m)| ConceptEntry {
        id: format!("M{:03}", i + 1),
        canonical: m.to_string(),
        surfaces: vec![m.to_string()],
        category: Some("medication".into()),
    }));
    Lexicon::new(entries).expect("demo lexicon is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub conversations: usize,
    /// Exact share (rounded) of conversations drawn from `long_words`.
    pub long_fraction: f64,
    pub long_words: (usize, usize),
    pub short_words: (usize, usize),
    pub references: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            conversations: 40,
            long_fraction: 0.65,
            long_words: (700, 3500),
            short_words: (150, 450),
            references: (1, 5),
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub conversations: Vec<Conversation>,
    pub references: Vec<SummaryRecord>,
    pub lexicon: Lexicon,
}

struct Topic {
    symptom: usize,
    duration: &'static str,
    severity: &'static str,
    medication: &'static str,
    denied: usize,
}

fn surface(rng: &mut ChaCha8Rng, symptom: usize) -> &'static str {
    SYMPTOMS[symptom].1.choose(rng).expect("non-empty")
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn doctor_sentence(rng: &mut ChaCha8Rng, t: &Topic) -> String {
    let s = surface(rng, t.symptom);
    let other = surface(rng, t.denied);
    match rng.random_range(0..6) {
        0 => format!("Can you tell me more about the {s}?"),
        1 => format!("How long have you had the {s}?"),
        2 => format!("Is the {s} getting worse or better?"),
        3 => format!("Did you take anything for the {s}?"),
        4 => format!("Any {other} along with it?"),
        _ => "Okay, I see.".to_string(),
    }
}

fn patient_sentence(rng: &mut ChaCha8Rng, t: &Topic) -> String {
    let s = surface(rng, t.symptom);
    let other = surface(rng, t.denied);
    match rng.random_range(0..6) {
        0 => format!("I have had {s} for about {}.", t.duration),
        1 => format!("The {s} is {} and started {} ago.", t.severity, t.duration),
        2 => format!("I took {} but the {s} did not improve.", t.medication),
        3 => format!("No, I do not have any {other}."),
        4 => "It gets worse at night.".to_string(),
        _ => "Yes, that is right.".to_string(),
    }
}

fn reference_sentence(rng: &mut ChaCha8Rng, t: &Topic) -> String {
    let s = SYMPTOMS[t.symptom].0;
    match rng.random_range(0..4) {
        0 => format!("The patient reports {s} for {}.", t.duration),
        1 => format!(
            "She has {} {s} that started {} ago.",
            t.severity, t.duration
        ),
        2 => format!("She took {} for the {s} without relief.", t.medication),
        _ => format!("She endorses {s} and denies {}.", SYMPTOMS[t.denied].0),
    }
}

fn random_topic(rng: &mut ChaCha8Rng) -> Topic {
    let symptom = rng.random_range(0..SYMPTOMS.len());
    let mut denied = rng.random_range(0..SYMPTOMS.len() - 1);
    if denied >= symptom {
        denied += 1;
    }
    Topic {
        symptom,
        duration: DURATIONS.choose(rng).expect("non-empty"),
        severity: SEVERITIES.choose(rng).expect("non-empty"),
        medication: MEDICATIONS.choose(rng).expect("non-empty"),
        denied,
    }
}

fn conversation(
    rng: &mut ChaCha8Rng,
    id: String,
    target_words: usize,
) -> (Conversation, Vec<Topic>) {
    let mut turns = Vec::new();
    let mut topics = Vec::new();
    let mut words = 0;
    turns.push(Turn::new(
        SpeakerRole::Doctor,
        "Hi, what brings you in today?",
    ));
    words += 6;
    while words < target_words {
        let topic = random_topic(rng);
        let segment_turns = rng.random_range(6..=12);
        for k in 0..segment_turns {
            let doctor = k % 2 == 0;
            let n = rng.random_range(1..=3);
            let text = (0..n)
                .map(|_| {
                    if doctor {
                        doctor_sentence(rng, &topic)
                    } else {
                        patient_sentence(rng, &topic)
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            let role = if doctor {
                SpeakerRole::Doctor
            } else {
                SpeakerRole::Patient
            };
            let turn = Turn::new(role, &text);
            words += turn.word_count();
            turns.push(turn);
            if words >= target_words {
                break;
            }
        }
        topics.push(topic);
    }
    (Conversation::new(id, turns).expect("non-empty"), topics)
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.conversations;
    let n_long = (cfg.long_fraction * n as f64).round() as usize;
    let mut is_long: Vec<bool> = (0..n).map(|i| i < n_long.min(n)).collect();
    is_long.shuffle(&mut rng);

    let mut conversations = Vec::with_capacity(n);
    let mut references = Vec::new();
    for (i, long) in is_long.into_iter().enumerate() {
        let (lo, hi) = if long {
            cfg.long_words
        } else {
            cfg.short_words
        };
        let target = rng.random_range(lo..=hi.max(lo));
        let id = format!("syn-{i:04}");
        let (conv, topics) = conversation(&mut rng, id.clone(), target);
        let (rlo, rhi) = cfg.references;
        let n_refs = rng.random_range(rlo.max(1)..=rhi.max(rlo.max(1)));
        for a in 0..n_refs {
            let mut sentences = Vec::new();
            for t in &topics {
                if sentences.len() < 8 && rng.random_bool(0.7) {
                    sentences.push(reference_sentence(&mut rng, t));
                }
            }
            if sentences.is_empty() {
                sentences.push(capitalize(&format!(
                    "{} was discussed.",
                    SYMPTOMS[topics[0].symptom].0
                )));
            }
            references.push(SummaryRecord::new(
                &id,
                format!("a{}", a + 1),
                &sentences.join(" "),
            ));
        }
        conversations.push(conv);
    }
    SyntheticCorpus {
        conversations,
        references,
        lexicon: demo_lexicon(),
    }
}

impl SyntheticCorpus {
    pub fn ids(&self) -> Vec<String> {
        self.conversations
            .iter()
            .map(|c| c.id().to_string())
            .collect()
    }

    /// Writes `conversations.jsonl`, `references.jsonl`, `lexicon.json` and
    /// `splits.json` (60/20/20, seeded).
    pub fn write(&self, dir: &Path, seed: u64) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut convs = String::new();
        for c in &self.conversations {
            convs.push_str(&c.to_jsonl());
            convs.push('\n');
        }
        fs::write(dir.join("conversations.jsonl"), convs)?;
        let lines: Vec<ReferenceLine> = self.references.iter().map(ReferenceLine::from).collect();
        write_jsonl(
            BufWriter::new(fs::File::create(dir.join("references.jsonl"))?),
            &lines,
        )?;
        fs::write(dir.join("lexicon.json"), self.lexicon.to_json() + "\n")?;
        let n = self.conversations.len();
        let train = n * 6 / 10;
        let dev = n * 2 / 10;
        let splits = Splits::from_sizes(&self.ids(), train, dev, seed).expect("sizes fit");
        fs::write(
            dir.join("splits.json"),
            serde_json::to_string_pretty(&splits).expect("serializes") + "\n",
        )?;
        Ok(())
    }
}
