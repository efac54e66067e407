//! Deterministic synthetic corpora with templated ads.
//!
//! These generators back the bundled fixture, the desk-scale classifier and
//! tagger benchmarks, and the mock robustness battery. Ads follow a small
//! set of call-to-action templates with per-record items and advertisers, so
//! detectors must learn the promotional wording rather than memorize names.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{llm_set_of, AdAnnotation, Dataset, LabeledResponse, ResponseMeta, Split};
use crate::text::tokenize;

const ENGINES: &[&str] = &["brave-search", "copilot", "perplexity", "youchat"];

const OLD_GENERATORS: &[&str] = &[
    "gpt-4o",
    "gpt-4o-mini",
    "deepseek-r1",
    "llama-3-70b",
    "qwen-2.5-32b",
];

const QUERIES: &[&str] = &[
    "What are good last minute travel deals?",
    "How do I choose a rain jacket for hiking?",
    "Where can I find quiet beaches in autumn?",
    "What should I pack for a long weekend trip?",
    "Which coffee blend works for cold brew?",
    "How do I plan an affordable city break?",
    "What are reliable options for airport transfers?",
    "How do I keep luggage light on short trips?",
];

const SUBJECTS: &[&str] = &[
    "The coastal region",
    "The old town",
    "A nearby valley",
    "The mountain route",
    "The local market",
    "A quiet district",
    "The northern shore",
    "The river path",
];

const VERBS: &[&str] = &[
    "offers",
    "features",
    "includes",
    "provides",
    "is known for",
    "attracts visitors with",
];

const OBJECTS: &[&str] = &[
    "many walking trails",
    "seasonal markets",
    "quiet beaches",
    "several small museums",
    "affordable guesthouses",
    "scenic viewpoints",
    "family friendly cafes",
    "historic libraries",
];

const TAILS: &[&str] = &[
    "in spring",
    "during the low season",
    "for most visitors",
    "throughout the year",
    "on weekdays",
    "near the harbor",
];

// Brand names are composed from syllables so every record advertises a
// fresh brand, like the long tail of real sponsored results; detectors have
// to learn the promotional wording, not the names.
const BRAND_ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "kl", "st",
];
const BRAND_VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "or", "ar"];
const BRAND_CODAS: &[&str] = &["x", "n", "r", "sk", "lo", "ma"];

const ITEM_NOUNS: &[&str] = &[
    "Travel Kit",
    "Flight Pass",
    "Luggage Set",
    "Trail Shoes",
    "Coffee Blend",
    "Rain Jacket",
    "City Guide",
    "Camp Stove",
    "Boat Tour",
    "Phone Plan",
    "Snack Box",
    "Bike Light",
];

const QUALITIES: &[&str] = &[
    "no hidden fees",
    "free delivery",
    "24 hour support",
    "lower prices than rivals",
    "a five year warranty",
    "easy cancellation",
    "award winning service",
    "recycled materials",
    "same day booking",
    "local experts",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SegKind {
    Ad,
    Item,
    Advertiser,
}

struct Segment {
    text: String,
    kind: SegKind,
}

// The five call-to-action shapes behind style ids old-prompt-1..5.
fn ad_segments(template: usize, item: &str, advertiser: &str, quality: &str) -> Vec<Segment> {
    let seg = |text: String, kind: SegKind| Segment { text, kind };
    match template {
        0 => vec![
            seg("Try".into(), SegKind::Ad),
            seg(item.into(), SegKind::Item),
            seg("from".into(), SegKind::Ad),
            seg(advertiser.into(), SegKind::Advertiser),
            seg(format!("today — {quality}!"), SegKind::Ad),
        ],
        1 => vec![
            seg("Don't miss".into(), SegKind::Ad),
            seg(item.into(), SegKind::Item),
            seg("by".into(), SegKind::Ad),
            seg(advertiser.into(), SegKind::Advertiser),
            seg(format!("— {quality} and more!"), SegKind::Ad),
        ],
        2 => vec![
            seg("Check out".into(), SegKind::Ad),
            seg(item.into(), SegKind::Item),
            seg("from".into(), SegKind::Ad),
            seg(advertiser.into(), SegKind::Advertiser),
            seg(format!("for {quality}."), SegKind::Ad),
        ],
        3 => vec![
            seg("Grab the exclusive".into(), SegKind::Ad),
            seg(item.into(), SegKind::Item),
            seg("deal from".into(), SegKind::Ad),
            seg(advertiser.into(), SegKind::Advertiser),
            seg("and save today!".into(), SegKind::Ad),
        ],
        _ => vec![
            seg("Book".into(), SegKind::Ad),
            seg(item.into(), SegKind::Item),
            seg("with".into(), SegKind::Ad),
            seg(advertiser.into(), SegKind::Advertiser),
            seg(format!("now — {quality}!"), SegKind::Ad),
        ],
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

fn organic_sentence(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {} {} {}.",
        pick(rng, SUBJECTS),
        pick(rng, VERBS),
        pick(rng, OBJECTS),
        pick(rng, TAILS)
    )
}

fn brand_name(rng: &mut ChaCha8Rng) -> String {
    let mut brand = String::new();
    brand.push_str(pick(rng, BRAND_ONSETS));
    brand.push_str(pick(rng, BRAND_VOWELS));
    brand.push_str(pick(rng, BRAND_ONSETS));
    brand.push_str(pick(rng, BRAND_VOWELS));
    brand.push_str(pick(rng, BRAND_CODAS));
    let mut chars = brand.chars();
    let first = chars.next().expect("brand is never empty").to_uppercase();
    format!("{}{}", first.collect::<String>(), chars.as_str())
}

// Tokens and BIO tags of one ad sentence; contiguous same-kind segments
// merge into one entity run.
fn tokenize_ad(segments: &[Segment]) -> (String, Vec<String>, Vec<String>) {
    let text = segments
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut prev_kind: Option<SegKind> = None;
    for segment in segments {
        let seg_tokens: Vec<String> = tokenize(&segment.text)
            .into_iter()
            .map(|t| t.text)
            .collect();
        for (i, tok) in seg_tokens.iter().enumerate() {
            let continuing = i > 0 || prev_kind == Some(segment.kind);
            let tag = match (segment.kind, continuing) {
                (SegKind::Ad, false) => "B-AD",
                (SegKind::Ad, true) => "I-AD",
                (SegKind::Item, false) => "B-ITEM",
                (SegKind::Item, true) => "I-ITEM",
                (SegKind::Advertiser, false) => "B-ADVERTISER",
                (SegKind::Advertiser, true) => "I-ADVERTISER",
            };
            tokens.push(tok.clone());
            tags.push(tag.to_string());
        }
        prev_kind = Some(segment.kind);
    }
    (text, tokens, tags)
}

/// Shape of one generated corpus: `(split, total, positives)` blocks.
pub type CorpusBlocks = [(Split, usize, usize); 3];

/// The bundled fixture's declared shape: 200 records.
pub const FIXTURE_BLOCKS: CorpusBlocks = [
    (Split::Train, 146, 46),
    (Split::Validation, 26, 8),
    (Split::Test, 28, 9),
];

pub const FIXTURE_SEED: u64 = 20_250_809;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_records: usize,
    pub seed: u64,
    pub positive_rate: f64,
    pub train_frac: f64,
    pub validation_frac: f64,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub name: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_records: 500,
            seed: 1,
            positive_rate: 0.31,
            train_frac: 0.6,
            validation_frac: 0.2,
            min_sentences: 3,
            max_sentences: 5,
            name: "synthetic".to_string(),
        }
    }
}

fn build_record(
    rng: &mut ChaCha8Rng,
    id: String,
    split: Split,
    positive: bool,
    min_sentences: usize,
    max_sentences: usize,
) -> LabeledResponse {
    let query = pick(rng, QUERIES).to_string();
    let engine = pick(rng, ENGINES).to_string();
    let n_sentences = rng.random_range(min_sentences..=max_sentences);

    let mut sentences: Vec<(String, Vec<String>, Vec<String>)> = (0..n_sentences)
        .map(|_| {
            let text = organic_sentence(rng);
            let tokens: Vec<String> = tokenize(&text).into_iter().map(|t| t.text).collect();
            let tags = vec!["O".to_string(); tokens.len()];
            (text, tokens, tags)
        })
        .collect();

    let ad = if positive {
        let brand = brand_name(rng);
        let item = format!("{} {}", brand, pick(rng, ITEM_NOUNS));
        let advertiser = format!("{}.example.com", brand.to_lowercase());
        let n_qualities = rng.random_range(1..=3);
        let mut qualities = Vec::new();
        while qualities.len() < n_qualities {
            let q = pick(rng, QUALITIES).to_string();
            if !qualities.contains(&q) {
                qualities.push(q);
            }
        }
        let template = rng.random_range(0..5usize);
        let segments = ad_segments(template, &item, &advertiser, &qualities[0]);
        let position = rng.random_range(0..=sentences.len());
        sentences.insert(position, tokenize_ad(&segments));
        let llm = pick(rng, OLD_GENERATORS).to_string();
        Some(AdAnnotation {
            item,
            qualities,
            advertiser,
            generator_llm: llm,
            style_id: format!("old-prompt-{}", template + 1),
        })
    } else {
        None
    };

    let response = sentences
        .iter()
        .map(|(text, _, _)| text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let tokens: Vec<String> = sentences.iter().flat_map(|(_, t, _)| t.clone()).collect();
    let tags: Vec<String> = sentences.iter().flat_map(|(_, _, g)| g.clone()).collect();

    let llm_set = llm_set_of(ad.as_ref().map(|a| a.generator_llm.as_str()));
    LabeledResponse {
        id,
        query,
        response,
        split,
        has_ad: positive,
        ad,
        tokens: Some(tokens),
        tags: Some(tags),
        meta: ResponseMeta {
            source_engine: engine,
            llm_set,
        },
    }
}

/// Generate a corpus with exactly the given per-split shapes; positives are
/// spread evenly through each block.
pub fn corpus_with_blocks(name: &str, blocks: &CorpusBlocks, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (min_s, max_s) = (3, 5);
    let mut records = Vec::new();
    let mut counter = 0usize;
    for &(split, total, positives) in blocks {
        assert!(positives <= total);
        for i in 0..total {
            // Bresenham spread of positives through the block.
            let positive = total > 0 && (i * positives) % total < positives;
            let id = format!("{name}-{counter:05}");
            counter += 1;
            records.push(build_record(&mut rng, id, split, positive, min_s, max_s));
        }
    }
    Dataset::new(name, records).expect("generated ids are unique")
}

/// Generate a corpus from fractional split sizes and a positive rate.
pub fn synthetic_corpus(config: &SynthConfig) -> Dataset {
    let n = config.n_records;
    let n_train = (n as f64 * config.train_frac).round() as usize;
    let n_validation = (n as f64 * config.validation_frac).round() as usize;
    let n_test = n.saturating_sub(n_train + n_validation);
    let pos = |total: usize| (total as f64 * config.positive_rate).round() as usize;
    let blocks = [
        (Split::Train, n_train, pos(n_train)),
        (Split::Validation, n_validation, pos(n_validation)),
        (Split::Test, n_test, pos(n_test)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::new();
    let mut counter = 0usize;
    for (split, total, positives) in blocks {
        for i in 0..total {
            let positive = total > 0 && (i * positives) % total < positives;
            let id = format!("{}-{counter:05}", config.name);
            counter += 1;
            records.push(build_record(
                &mut rng,
                id,
                split,
                positive,
                config.min_sentences,
                config.max_sentences,
            ));
        }
    }
    Dataset::new(config.name.clone(), records).expect("generated ids are unique")
}

/// The deterministic 200-record fixture with the declared split counts.
pub fn fixture() -> Dataset {
    corpus_with_blocks("fixture", &FIXTURE_BLOCKS, FIXTURE_SEED)
}
