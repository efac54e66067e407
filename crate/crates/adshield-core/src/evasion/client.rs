//! The LLM client contract and its deterministic mock.
//!
//! `send(prompt, llm_id, params) -> text` is all the generation pipeline
//! needs; hosted APIs are wrapped behind this trait elsewhere. The mock
//! parses the structured prompt sections back out and composes a restyled
//! response without any network, so variant construction is fully
//! reproducible.

#[derive(Debug, Clone, thiserror::Error)]
pub enum ClientError {
    /// Worth retrying (rate limits, timeouts, 5xx).
    #[error("transient client failure: {0}")]
    Transient(String),
    /// Retrying cannot help (bad request, auth).
    #[error("permanent client failure: {0}")]
    Permanent(String),
}

/// Sampling and retry knobs for one generation run.
#[derive(Debug, Clone)]
pub struct GenParams {
    pub temperature: f64,
    /// Retries use exponential backoff up to this many attempts.
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            temperature: 0.7,
            max_attempts: 5,
            backoff_base_ms: 500,
        }
    }
}

pub trait LlmClient {
    fn send(&self, prompt: &str, llm_id: &str, params: &GenParams) -> Result<String, ClientError>;

    /// Deterministic clients get reproducible request logs (no wall-clock
    /// timestamps).
    fn deterministic(&self) -> bool {
        false
    }
}

/// Failure injection for tests and dry runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockBehavior {
    Succeed,
    FailAlways,
    /// Fail the first `n` attempts of every request, then succeed.
    FailFirstAttempts(u32),
}

/// A pure, style-aware stand-in for a hosted LLM.
///
/// It recognizes which instruction block the prompt carries and appends an
/// ad in that style; "new"-generation LLM ids produce slightly toned-down
/// promotional wording.
#[derive(Debug, Clone)]
pub struct MockLlmClient {
    pub behavior: MockBehavior,
    attempt_counter: std::sync::Arc<std::sync::Mutex<std::collections::HashMap<String, u32>>>,
}

impl Default for MockLlmClient {
    fn default() -> Self {
        Self::new(MockBehavior::Succeed)
    }
}

impl MockLlmClient {
    pub fn new(behavior: MockBehavior) -> Self {
        MockLlmClient {
            behavior,
            attempt_counter: std::sync::Arc::new(std::sync::Mutex::new(
                std::collections::HashMap::new(),
            )),
        }
    }

    fn section<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
        prompt
            .lines()
            .find_map(|line| line.strip_prefix(label))
            .map(str::trim)
    }

    fn response_section(prompt: &str) -> Option<&str> {
        prompt
            .split_once("Response:\n")
            .map(|(_, rest)| rest.trim())
    }

    fn compose(prompt: &str, llm_id: &str) -> Result<String, ClientError> {
        let item = Self::section(prompt, "Item:")
            .ok_or_else(|| ClientError::Permanent("prompt lacks an Item section".into()))?;
        let advertiser = Self::section(prompt, "Advertiser:")
            .ok_or_else(|| ClientError::Permanent("prompt lacks an Advertiser section".into()))?;
        let qualities = Self::section(prompt, "Qualities:").unwrap_or("");
        let response = Self::response_section(prompt)
            .ok_or_else(|| ClientError::Permanent("prompt lacks a Response section".into()))?;
        let first_quality = qualities.split(';').next().unwrap_or("").trim();
        let quality = if first_quality.is_empty() {
            "great value"
        } else {
            first_quality
        };

        // Marker phrases from the bundled templates decide the style; the
        // prompt is flattened first so line wrapping cannot hide a marker.
        let flat = prompt.split_whitespace().collect::<Vec<_>>().join(" ");
        let overt = flat.contains("explicitly and prominently");
        let covert = flat.contains("as one option among");
        let emotional = flat.contains("affective narrative");
        let old_prompt = flat.contains("call-to-action");

        // Covert ads behave like an evading advertiser: they paraphrase,
        // mention only the brand, and avoid the promotional vocabulary that
        // overt ads lean on.
        let brand = item.split_whitespace().next().unwrap_or(item);
        let ad = if old_prompt || (!overt && !covert) {
            format!("Try {item} from {advertiser} today — {quality}!")
        } else if overt && emotional {
            format!(
                "Imagine the pure joy of {item}! {advertiser} brings you {quality} — an amazing, \
                 unbeatable experience. Don't miss this exclusive deal today!"
            )
        } else if overt {
            format!(
                "{item} from {advertiser} offers {quality} at a lower price than competitors — \
                 a top deal with guaranteed savings today!"
            )
        } else if emotional {
            format!(
                "Many visitors recall {brand} fondly and feel at ease with it during the low \
                 season."
            )
        } else {
            format!("The local market also lists the {brand} line throughout the year.")
        };

        let ad = if is_new_generation(llm_id) {
            tone_down(&ad)
        } else {
            ad
        };
        Ok(format!("{response} {ad}"))
    }
}

fn is_new_generation(llm_id: &str) -> bool {
    let lower = llm_id.to_lowercase();
    lower.starts_with("new")
        || [
            "gpt-5-mini",
            "gpt-5-nano",
            "llama-4-scout",
            "llama-4-maverick",
            "gpt-oss-120b",
        ]
        .contains(&lower.as_str())
}

// Newer generators phrase the same ad a little less loudly, which makes
// them somewhat harder to spot without changing the style.
fn tone_down(ad: &str) -> String {
    ad.replace("amazing, unbeatable", "notable, solid")
        .replace("exclusive deal", "special deal")
        .replace("guaranteed savings", "likely savings")
        .replace("pure joy", "quiet joy")
}

impl LlmClient for MockLlmClient {
    fn send(&self, prompt: &str, llm_id: &str, params: &GenParams) -> Result<String, ClientError> {
        let _ = params;
        match self.behavior {
            MockBehavior::Succeed => Self::compose(prompt, llm_id),
            MockBehavior::FailAlways => Err(ClientError::Transient("injected failure".into())),
            MockBehavior::FailFirstAttempts(n) => {
                let mut counter = self.attempt_counter.lock().unwrap();
                let seen = counter.entry(prompt.to_string()).or_insert(0);
                *seen += 1;
                if *seen <= n {
                    Err(ClientError::Transient(format!("injected failure {seen}")))
                } else {
                    Self::compose(prompt, llm_id)
                }
            }
        }
    }

    fn deterministic(&self) -> bool {
        true
    }
}
