//! The advertising-style taxonomy, style-conditioned prompt rendering, and
//! batch regeneration of restyled ad responses through an LLM-client
//! contract with a deterministic mock.
//!
//! Styles combine two dimensions: explicitness (overt ads promote
//! prominently, covert ads mention the item as one option among
//! alternatives) and type of appeal (rational ads cite measurable
//! qualities, emotional ads build an affective narrative).

mod client;
mod generate;

pub use client::{ClientError, GenParams, LlmClient, MockBehavior, MockLlmClient};
pub use generate::{generate_variants, RequestLogEntry, VariantOutcome, VariantSpec};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EvasionError {
    #[error("no template for id {0}")]
    MissingTemplate(String),
    #[error("rendered prompt still contains placeholder {{{0}}}")]
    UnfilledPlaceholder(String),
    #[error("request field {0} must not be empty")]
    EmptyField(&'static str),
    #[error("unknown style id {0}")]
    UnknownStyle(String),
    #[error("cannot read template dir {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Explicitness {
    Overt,
    Covert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Appeal {
    Emotional,
    Rational,
}

/// One cell of the 2x2 style taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdStyle {
    pub explicitness: Explicitness,
    pub appeal: Appeal,
}

impl AdStyle {
    pub const ALL: [AdStyle; 4] = [
        AdStyle {
            explicitness: Explicitness::Overt,
            appeal: Appeal::Emotional,
        },
        AdStyle {
            explicitness: Explicitness::Overt,
            appeal: Appeal::Rational,
        },
        AdStyle {
            explicitness: Explicitness::Covert,
            appeal: Appeal::Emotional,
        },
        AdStyle {
            explicitness: Explicitness::Covert,
            appeal: Appeal::Rational,
        },
    ];

    pub fn id(&self) -> &'static str {
        match (self.explicitness, self.appeal) {
            (Explicitness::Overt, Appeal::Emotional) => "overt-emotional",
            (Explicitness::Overt, Appeal::Rational) => "overt-rational",
            (Explicitness::Covert, Appeal::Emotional) => "covert-emotional",
            (Explicitness::Covert, Appeal::Rational) => "covert-rational",
        }
    }

    pub fn parse(id: &str) -> Result<Self, EvasionError> {
        Self::ALL
            .into_iter()
            .find(|s| s.id() == id)
            .ok_or_else(|| EvasionError::UnknownStyle(id.to_string()))
    }
}

impl fmt::Display for AdStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// All inputs for one restyled-ad generation.
#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub query: String,
    pub response: String,
    pub item: String,
    pub qualities: Vec<String>,
    pub advertiser: String,
    pub style: AdStyle,
    pub llm_id: String,
}

/// A style-specific prompt with every placeholder substituted.
#[derive(Debug, Clone)]
pub struct StyledPrompt {
    pub style: AdStyle,
    pub template_id: String,
    pub rendered: String,
}

/// Named prompt templates with `{placeholder}` syntax, loadable from plain
/// text files so edits need no rebuild.
#[derive(Debug, Clone)]
pub struct TemplatePack {
    templates: BTreeMap<String, String>,
}

pub const BUILTIN_TEMPLATE_IDS: &[&str] = &[
    "covert-emotional",
    "covert-rational",
    "old-prompt-1",
    "overt-emotional",
    "overt-rational",
];

impl TemplatePack {
    /// The templates bundled with the toolkit.
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(
            "overt-emotional".to_string(),
            include_str!("../../templates/overt-emotional.txt").to_string(),
        );
        templates.insert(
            "overt-rational".to_string(),
            include_str!("../../templates/overt-rational.txt").to_string(),
        );
        templates.insert(
            "covert-emotional".to_string(),
            include_str!("../../templates/covert-emotional.txt").to_string(),
        );
        templates.insert(
            "covert-rational".to_string(),
            include_str!("../../templates/covert-rational.txt").to_string(),
        );
        templates.insert(
            "old-prompt-1".to_string(),
            include_str!("../../templates/old-prompt-1.txt").to_string(),
        );
        TemplatePack { templates }
    }

    /// Load every `*.txt` file in a directory; the file stem is the
    /// template id.
    pub fn from_dir(dir: &Path) -> Result<Self, EvasionError> {
        let mut templates = BTreeMap::new();
        let entries = std::fs::read_dir(dir).map_err(|source| EvasionError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for entry in entries {
            let entry = entry.map_err(|source| EvasionError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "txt") {
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let text = std::fs::read_to_string(&path).map_err(|source| EvasionError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                templates.insert(id, text);
            }
        }
        Ok(TemplatePack { templates })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(|s| s.as_str())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }

    pub fn template_text(&self, id: &str) -> Option<&str> {
        self.templates.get(id).map(|s| s.as_str())
    }

    /// Substitute the request into a template by id and verify nothing is
    /// left unfilled.
    pub fn render(
        &self,
        template_id: &str,
        request: &GenerationRequest,
    ) -> Result<String, EvasionError> {
        let template = self
            .templates
            .get(template_id)
            .ok_or_else(|| EvasionError::MissingTemplate(template_id.to_string()))?;

        for (field, value) in [
            ("query", &request.query),
            ("response", &request.response),
            ("item", &request.item),
            ("advertiser", &request.advertiser),
        ] {
            if value.trim().is_empty() {
                return Err(EvasionError::EmptyField(match field {
                    "query" => "query",
                    "response" => "response",
                    "item" => "item",
                    _ => "advertiser",
                }));
            }
        }

        let rendered = template
            .replace("{query}", &request.query)
            .replace("{response}", &request.response)
            .replace("{item}", &request.item)
            .replace("{qualities}", &request.qualities.join("; "))
            .replace("{advertiser}", &request.advertiser);

        if let Some(name) = find_placeholder(&rendered) {
            return Err(EvasionError::UnfilledPlaceholder(name));
        }
        Ok(rendered)
    }
}

// A `{lower_snake}` run left in the rendered text.
fn find_placeholder(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j] == b'_') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'}' && j > i + 1 {
                return Some(text[i + 1..j].to_string());
            }
        }
        i += 1;
    }
    None
}

/// Render the template matching the request's style.
pub fn render_prompt(
    request: &GenerationRequest,
    pack: &TemplatePack,
) -> Result<StyledPrompt, EvasionError> {
    let template_id = request.style.id().to_string();
    let rendered = pack.render(&template_id, request)?;
    Ok(StyledPrompt {
        style: request.style,
        template_id,
        rendered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fun_flights_request(style: AdStyle) -> GenerationRequest {
        GenerationRequest {
            query: "Are there specific destinations that usually have last minute deals?"
                .to_string(),
            response: "Yes, several coastal regions offer frequent last minute packages."
                .to_string(),
            item: "FUN Flights".to_string(),
            qualities: vec![
                "no credit card fees".to_string(),
                "fly from 21 uk airports".to_string(),
            ],
            advertiser: "fun.co.uk".to_string(),
            style,
            llm_id: "mock-old".to_string(),
        }
    }

    #[test]
    fn covert_rational_render_contains_the_shipped_instruction_block() {
        let style = AdStyle::parse("covert-rational").unwrap();
        let prompt = render_prompt(&fun_flights_request(style), &TemplatePack::builtin()).unwrap();
        // The instruction block is everything before the Item line.
        let template = TemplatePack::builtin()
            .template_text("covert-rational")
            .unwrap()
            .to_string();
        let block = template.split("Item:").next().unwrap().to_string();
        assert!(prompt.rendered.starts_with(&block));
        assert!(prompt.rendered.contains("FUN Flights"));
        assert!(prompt.rendered.contains("fun.co.uk"));
        assert!(prompt
            .rendered
            .contains("no credit card fees; fly from 21 uk airports"));
        assert!(find_placeholder(&prompt.rendered).is_none());
    }

    #[test]
    fn empty_item_is_rejected() {
        let mut request = fun_flights_request(AdStyle::ALL[0]);
        request.item = String::new();
        assert!(matches!(
            render_prompt(&request, &TemplatePack::builtin()),
            Err(EvasionError::EmptyField("item"))
        ));
    }

    #[test]
    fn all_four_styles_render_distinct_placeholder_free_prompts() {
        let pack = TemplatePack::builtin();
        let mut rendered = Vec::new();
        for style in AdStyle::ALL {
            let prompt = render_prompt(&fun_flights_request(style), &pack).unwrap();
            assert!(find_placeholder(&prompt.rendered).is_none());
            rendered.push(prompt.rendered);
        }
        for i in 0..rendered.len() {
            for j in (i + 1)..rendered.len() {
                assert_ne!(rendered[i], rendered[j]);
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let pack = TemplatePack::builtin();
        let request = fun_flights_request(AdStyle::ALL[2]);
        let a = render_prompt(&request, &pack).unwrap();
        let b = render_prompt(&request, &pack).unwrap();
        assert_eq!(a.rendered, b.rendered);
    }

    #[test]
    fn missing_template_is_reported() {
        let pack = TemplatePack {
            templates: BTreeMap::new(),
        };
        let request = fun_flights_request(AdStyle::ALL[0]);
        assert!(matches!(
            render_prompt(&request, &pack),
            Err(EvasionError::MissingTemplate(_))
        ));
    }

    #[test]
    fn unfilled_placeholder_is_detected() {
        let mut templates = BTreeMap::new();
        templates.insert(
            "overt-emotional".to_string(),
            "Advertise {item} with {unknown_slot}.".to_string(),
        );
        let pack = TemplatePack { templates };
        let request = fun_flights_request(AdStyle::ALL[0]);
        assert!(matches!(
            render_prompt(&request, &pack),
            Err(EvasionError::UnfilledPlaceholder(p)) if p == "unknown_slot"
        ));
    }

    #[test]
    fn builtin_pack_exposes_the_documented_templates() {
        let pack = TemplatePack::builtin();
        let ids: Vec<&str> = pack.ids().collect();
        assert_eq!(ids, BUILTIN_TEMPLATE_IDS);
        for id in BUILTIN_TEMPLATE_IDS {
            assert!(pack.contains(id));
        }
    }

    #[test]
    fn style_ids_round_trip() {
        for style in AdStyle::ALL {
            assert_eq!(AdStyle::parse(style.id()).unwrap(), style);
        }
        assert!(AdStyle::parse("loud-angry").is_err());
    }
}
