use std::fmt::Write as _;
use std::path::PathBuf;

use adshield_core::corpus::{load_corpus, write_corpus};
use adshield_core::evasion::{
    generate_variants, AdStyle, GenParams, LlmClient, MockBehavior, MockLlmClient, TemplatePack,
    VariantSpec,
};
use clap::Args;

use crate::config::Resolver;
use crate::http_client::HttpLlmClient;
use crate::{AppError, ConfigFlag};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Reference test set whose positives get restyled.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Directory for the variant corpus files and the request log.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated style ids, or "all" for the four taxonomy styles.
    #[arg(long)]
    styles: Option<String>,
    /// Comma-separated LLM ids; one variant per (style, llm) pair.
    #[arg(long)]
    llms: Option<String>,
    /// Additionally build old-prompt variants with these LLM ids.
    #[arg(long)]
    old_prompt_llms: Option<String>,
    /// mock | http
    #[arg(long)]
    client: Option<String>,
    /// Chat-completions endpoint for the http client.
    #[arg(long)]
    endpoint: Option<String>,
    /// Directory of custom {placeholder} templates.
    #[arg(long)]
    template_dir: Option<PathBuf>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_attempts: Option<u32>,
    #[arg(long)]
    backoff_ms: Option<u64>,
    #[command(flatten)]
    config: ConfigFlag,
}

pub fn run(args: GenerateArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("generate", args.config.config.as_deref())?;
    let reference_path = resolver.path_required("reference", args.reference)?;
    let output_dir = resolver.path_required("output_dir", args.output_dir)?;
    let styles_raw = resolver.or_default("styles", args.styles, "all".to_string())?;
    let llms = resolver.list_or_default("llms", args.llms, "old,new")?;
    let old_prompt_llms: Vec<String> = resolver
        .optional::<String>("old_prompt_llms", args.old_prompt_llms)?
        .map(|raw| raw.split(',').map(|s| s.trim().to_string()).collect())
        .unwrap_or_default();
    let client_kind = resolver.or_default("client", args.client, "mock".to_string())?;
    let endpoint = resolver.optional::<String>("endpoint", args.endpoint)?;
    let template_dir = resolver.path_optional("template_dir", args.template_dir)?;
    let temperature = resolver.or_default("temperature", args.temperature, 0.7)?;
    let max_attempts = resolver.or_default("max_attempts", args.max_attempts, 5u32)?;
    let backoff_ms = resolver.or_default("backoff_ms", args.backoff_ms, 500u64)?;
    resolver.check_unused()?;

    let styles: Vec<String> = if styles_raw == "all" {
        AdStyle::ALL.iter().map(|s| s.id().to_string()).collect()
    } else {
        styles_raw
            .split(',')
            .map(|s| s.trim().to_string())
            .collect()
    };
    for style in &styles {
        AdStyle::parse(style).map_err(|e| AppError::Usage(e.to_string()))?;
    }

    let mut specs = Vec::new();
    for style in &styles {
        for llm in &llms {
            specs.push(VariantSpec::new(style, llm));
        }
    }
    for llm in &old_prompt_llms {
        specs.push(VariantSpec::new("old-prompt-1", llm));
    }
    if specs.is_empty() {
        return Err(AppError::Usage("no variants requested".into()));
    }

    let pack = match template_dir {
        Some(dir) => TemplatePack::from_dir(&dir)?,
        None => TemplatePack::builtin(),
    };

    let client: Box<dyn LlmClient> = match client_kind.as_str() {
        "mock" => Box::new(MockLlmClient::new(MockBehavior::Succeed)),
        "http" => {
            let endpoint = endpoint.ok_or_else(|| {
                AppError::Usage("--endpoint is required for the http client".into())
            })?;
            Box::new(HttpLlmClient::new(endpoint)?)
        }
        other => {
            return Err(AppError::Usage(format!(
                "unknown client {other:?} (mock|http)"
            )))
        }
    };
    // The mock is deterministic: no backoff sleeps needed between retries.
    let effective_backoff = if client.deterministic() {
        0
    } else {
        backoff_ms
    };
    let params = GenParams {
        temperature,
        max_attempts,
        backoff_base_ms: effective_backoff,
    };

    let reference = load_corpus(&reference_path, true)?;
    if reference.positives().next().is_none() {
        return Err(AppError::Data(format!(
            "{} has no positives to restyle",
            reference_path.display()
        )));
    }

    std::fs::create_dir_all(&output_dir)?;
    let outcomes = generate_variants(&reference, &specs, &pack, client.as_ref(), &params)?;

    let mut log_text = String::new();
    let mut incomplete = Vec::new();
    for outcome in &outcomes {
        for entry in &outcome.log {
            writeln!(log_text, "{}", entry.to_line()).expect("string write cannot fail");
        }
        match &outcome.dataset {
            Some(dataset) => {
                let path = output_dir.join(format!("{}.jsonl", outcome.spec.name));
                write_corpus(dataset, &path)?;
                println!(
                    "wrote variant {} ({} records)",
                    path.display(),
                    dataset.len()
                );
            }
            None => {
                incomplete.push(outcome);
            }
        }
    }
    std::fs::write(output_dir.join("requests.log"), log_text)?;
    resolver.write_sidecar(&output_dir.join("run"))?;

    if !incomplete.is_empty() {
        for outcome in &incomplete {
            eprintln!(
                "variant {} incomplete: {} failures",
                outcome.spec.name,
                outcome.failures.len()
            );
            for (id, reason) in &outcome.failures {
                eprintln!("  {id}: {reason}");
            }
        }
        return Err(AppError::Partial(format!(
            "{} of {} variants incomplete",
            incomplete.len(),
            outcomes.len()
        )));
    }
    Ok(())
}
