//! Textual forms of the pipeline choices accepted on the command line.
//!
//! ```text
//! --oracle      exact | noisy[:RATE | :FP,FN] | remote:URL
//! --translator  template[:ERROR_RATE] | fixture:PATH | remote:URL
//! --engine      builtin | external
//! ```

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use plancritic_core::corpus::{load_pack, load_pack_from, Pack};
use plancritic_core::engine::{OracleChoice, TranslatorChoice};
use plancritic_core::oracle::NoiseProfile;
use plancritic_core::planner::{
    BuiltinPlanner, ExternalPlanner, Planner, DEFAULT_EXTERNAL_TIMEOUT,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptionError {
    #[error("unknown {what} '{value}'")]
    Unknown { what: &'static str, value: String },
    #[error("bad {what} '{value}': {reason}")]
    Invalid {
        what: &'static str,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Setup(String),
}

fn rate(what: &'static str, text: &str) -> Result<f64, OptionError> {
    match text.trim().parse::<f64>() {
        Ok(r) if (0.0..=1.0).contains(&r) => Ok(r),
        _ => Err(OptionError::Invalid {
            what,
            value: text.to_string(),
            reason: "expected a rate in [0, 1]".into(),
        }),
    }
}

pub const DEFAULT_NOISE: f64 = 0.125;

pub fn parse_oracle(
    text: &str,
    seed: u64,
    token_env: &str,
    timeout: Duration,
) -> Result<OracleChoice, OptionError> {
    let (head, rest) = text
        .split_once(':')
        .map_or((text, None), |(h, r)| (h, Some(r)));
    match (head, rest) {
        ("exact", None) => Ok(OracleChoice::Exact),
        ("noisy", None) => Ok(OracleChoice::Noisy(NoiseProfile::symmetric(
            DEFAULT_NOISE,
            seed,
        ))),
        ("noisy", Some(r)) => match r.split_once(',') {
            Some((fp, fneg)) => Ok(OracleChoice::Noisy(NoiseProfile {
                false_positive_rate: rate("oracle noise", fp)?,
                false_negative_rate: rate("oracle noise", fneg)?,
                seed,
            })),
            None => Ok(OracleChoice::Noisy(NoiseProfile::symmetric(
                rate("oracle noise", r)?,
                seed,
            ))),
        },
        ("remote", Some(url)) if !url.is_empty() => Ok(OracleChoice::Remote {
            endpoint: url.to_string(),
            timeout_ms: timeout.as_millis() as u64,
            token_env: Some(token_env.to_string()),
        }),
        _ => Err(OptionError::Unknown {
            what: "oracle",
            value: text.to_string(),
        }),
    }
}

pub fn parse_translator(
    text: &str,
    seed: u64,
    model: &str,
    token_env: &str,
    timeout: Duration,
) -> Result<TranslatorChoice, OptionError> {
    let (head, rest) = text
        .split_once(':')
        .map_or((text, None), |(h, r)| (h, Some(r)));
    match (head, rest) {
        ("template", None) => Ok(TranslatorChoice::Template {
            error_rate: 0.0,
            seed,
        }),
        ("template", Some(r)) => Ok(TranslatorChoice::Template {
            error_rate: rate("translator error rate", r)?,
            seed,
        }),
        ("fixture", Some(path)) if !path.is_empty() => {
            Ok(TranslatorChoice::Fixture { path: path.into() })
        }
        ("remote", Some(url)) if !url.is_empty() => Ok(TranslatorChoice::Remote {
            url: url.to_string(),
            model: model.to_string(),
            token_env: token_env.to_string(),
            timeout_ms: timeout.as_millis() as u64,
        }),
        _ => Err(OptionError::Unknown {
            what: "translator",
            value: text.to_string(),
        }),
    }
}

#[derive(Debug, Clone)]
pub struct PlannerOptions {
    pub engine: String,
    /// Built-in search depth limit.
    pub horizon: usize,
    pub timeout: Option<Duration>,
    /// Whitespace-separated argv template with `{domain}` and `{problem}`.
    pub command: Option<String>,
    pub workers: usize,
}

pub fn build_planner(o: &PlannerOptions) -> Result<Arc<dyn Planner>, OptionError> {
    match o.engine.as_str() {
        "builtin" => Ok(Arc::new(BuiltinPlanner {
            horizon: o.horizon,
            timeout: o.timeout.unwrap_or(Duration::from_secs(30)),
            ..BuiltinPlanner::default()
        })),
        "external" => {
            let command = o.command.as_deref().ok_or_else(|| {
                OptionError::Setup("--engine external needs --planner-cmd".into())
            })?;
            let argv: Vec<String> = command.split_whitespace().map(str::to_string).collect();
            let planner = ExternalPlanner::new(
                argv.first().cloned().unwrap_or_default(),
                argv,
                o.timeout.unwrap_or(DEFAULT_EXTERNAL_TIMEOUT),
                o.workers,
            )
            .map_err(|e| OptionError::Setup(e.to_string()))?;
            Ok(Arc::new(planner))
        }
        other => Err(OptionError::Unknown {
            what: "engine",
            value: other.to_string(),
        }),
    }
}

/// A bundled pack by name, or a pack directory.
pub fn resolve_pack(name_or_dir: &str) -> Result<Pack, OptionError> {
    let path = Path::new(name_or_dir);
    let loaded = if path.is_dir() {
        load_pack_from(path)
    } else {
        load_pack(name_or_dir)
    };
    loaded.map_err(|e| OptionError::Setup(e.to_string()))
}
