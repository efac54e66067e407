//! Batch regeneration of restyled positives and variant assembly.
//!
//! For each requested (template, llm) pair, one prompt is sent per positive
//! of the reference set; the returned text becomes the new positive and the
//! variant is assembled with the untouched negatives. Requests are retried
//! with exponential backoff; a variant with any failed positive is left
//! without a dataset and carries the full failure list instead.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::corpus::{build_variant_testset, llm_set_of, Dataset, LabeledResponse};
use crate::text::{detokenize, split_sentences};

use super::client::{ClientError, GenParams, LlmClient};
use super::{AdStyle, EvasionError, GenerationRequest, TemplatePack};

/// The response a new ad gets inserted into: the record's text with its
/// tagged ad sentences removed. The ad-generating prompt must carry the
/// organic response so restyled variants do not stack ads. Records without
/// gold tags are passed through unchanged.
pub fn organic_response(record: &LabeledResponse) -> String {
    let (Some(tokens), Some(tags)) = (&record.tokens, &record.tags) else {
        return record.response.clone();
    };
    let mut kept: Vec<&String> = Vec::new();
    for span in split_sentences(tokens) {
        let has_ad_token = tags[span.token_start..span.token_end]
            .iter()
            .any(|t| t != "O");
        if !has_ad_token {
            kept.extend(&tokens[span.token_start..span.token_end]);
        }
    }
    if kept.is_empty() {
        record.response.clone()
    } else {
        detokenize(&kept)
    }
}

/// One requested variant: which template and which generator.
#[derive(Debug, Clone)]
pub struct VariantSpec {
    /// Output name, also used as the dataset name.
    pub name: String,
    pub template_id: String,
    pub llm_id: String,
}

impl VariantSpec {
    pub fn new(template_id: &str, llm_id: &str) -> Self {
        VariantSpec {
            name: format!("{template_id}__{llm_id}"),
            template_id: template_id.to_string(),
            llm_id: llm_id.to_string(),
        }
    }
}

/// One request-log line; `timestamp` is unix seconds, absent for
/// deterministic clients so reruns are byte-identical.
#[derive(Debug, Clone)]
pub struct RequestLogEntry {
    pub timestamp: Option<u64>,
    pub llm_id: String,
    pub template_id: String,
    pub response_id: String,
    pub status: String,
}

impl RequestLogEntry {
    pub fn to_line(&self) -> String {
        let ts = self
            .timestamp
            .map_or_else(|| "-".to_string(), |t| t.to_string());
        format!(
            "ts={ts}\tllm={}\ttemplate={}\tid={}\tstatus={}",
            self.llm_id, self.template_id, self.response_id, self.status
        )
    }
}

/// The outcome for one variant: a dataset when every positive regenerated,
/// otherwise the failure list.
#[derive(Debug)]
pub struct VariantOutcome {
    pub spec: VariantSpec,
    pub dataset: Option<Dataset>,
    pub failures: Vec<(String, String)>,
    pub log: Vec<RequestLogEntry>,
}

impl VariantOutcome {
    pub fn complete(&self) -> bool {
        self.dataset.is_some()
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn send_with_retry(
    client: &dyn LlmClient,
    prompt: &str,
    llm_id: &str,
    params: &GenParams,
) -> Result<String, ClientError> {
    let mut last = ClientError::Transient("no attempts made".into());
    for attempt in 0..params.max_attempts.max(1) {
        match client.send(prompt, llm_id, params) {
            Ok(text) => return Ok(text),
            Err(e @ ClientError::Permanent(_)) => return Err(e),
            Err(e) => {
                last = e;
                if attempt + 1 < params.max_attempts && params.backoff_base_ms > 0 {
                    let delay = params.backoff_base_ms.saturating_mul(1 << attempt.min(6));
                    std::thread::sleep(std::time::Duration::from_millis(delay));
                }
            }
        }
    }
    Err(last)
}

/// Regenerate the reference positives once per spec and assemble variants.
///
/// Requests run in reference order; assembly is deterministic because the
/// variant keeps the reference record order.
pub fn generate_variants(
    reference: &Dataset,
    specs: &[VariantSpec],
    pack: &TemplatePack,
    client: &dyn LlmClient,
    params: &GenParams,
) -> Result<Vec<VariantOutcome>, EvasionError> {
    for spec in specs {
        if !pack.contains(&spec.template_id) {
            return Err(EvasionError::MissingTemplate(spec.template_id.clone()));
        }
    }

    let mut outcomes = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut new_positives: Vec<LabeledResponse> = Vec::new();
        let mut failures: Vec<(String, String)> = Vec::new();
        let mut log: Vec<RequestLogEntry> = Vec::new();

        for record in reference.positives() {
            let ad = record.ad.as_ref().expect("positives carry annotations");
            let style = AdStyle::parse(&spec.template_id).unwrap_or(AdStyle::ALL[0]);
            let request = GenerationRequest {
                query: record.query.clone(),
                response: organic_response(record),
                item: ad.item.clone(),
                qualities: ad.qualities.clone(),
                advertiser: ad.advertiser.clone(),
                style,
                llm_id: spec.llm_id.clone(),
            };
            let rendered = pack.render(&spec.template_id, &request)?;

            let timestamp = (!client.deterministic()).then(now_secs);
            match send_with_retry(client, &rendered, &spec.llm_id, params) {
                Ok(text) if text.trim().is_empty() => {
                    failures.push((record.id.clone(), "empty response".to_string()));
                    log.push(RequestLogEntry {
                        timestamp,
                        llm_id: spec.llm_id.clone(),
                        template_id: spec.template_id.clone(),
                        response_id: record.id.clone(),
                        status: "empty".to_string(),
                    });
                }
                Ok(text) => {
                    let mut new_record = record.clone();
                    new_record.response = text;
                    new_record.tokens = None;
                    new_record.tags = None;
                    if let Some(a) = &mut new_record.ad {
                        a.style_id = spec.template_id.clone();
                        a.generator_llm = spec.llm_id.clone();
                    }
                    new_record.meta.llm_set = llm_set_of(Some(&spec.llm_id));
                    new_positives.push(new_record);
                    log.push(RequestLogEntry {
                        timestamp,
                        llm_id: spec.llm_id.clone(),
                        template_id: spec.template_id.clone(),
                        response_id: record.id.clone(),
                        status: "ok".to_string(),
                    });
                }
                Err(e) => {
                    failures.push((record.id.clone(), e.to_string()));
                    log.push(RequestLogEntry {
                        timestamp,
                        llm_id: spec.llm_id.clone(),
                        template_id: spec.template_id.clone(),
                        response_id: record.id.clone(),
                        status: "failed".to_string(),
                    });
                }
            }
        }

        let dataset = if failures.is_empty() {
            Some(
                build_variant_testset(reference, &new_positives, spec.name.clone())
                    .expect("regenerated positives keep the reference ids"),
            )
        } else {
            None
        };
        outcomes.push(VariantOutcome {
            spec: spec.clone(),
            dataset,
            failures,
            log,
        });
    }
    Ok(outcomes)
}
