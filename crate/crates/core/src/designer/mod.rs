//! Draft and parameter design from structured specs or free text.
//!
//! Free-text requests go to a chat-completion endpoint in two stages, first the
//! draft and then the parameters. Every reply is validated; rejected replies
//! are retried with the violation list, and with fallback enabled an
//! unrecoverable failure drops to a keyword-to-family mapping.

mod client;
mod extract;
mod presets;

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::draft::{generate_pattern, serialize_draft, DraftError, Family, PatternSpec, WeavingDraft, MAX_DRAFT_SIZE};
use crate::params::FabricParams;
use crate::yarn::YarnParams;

pub use client::{ChatBackend, ChatMessage, EndpointConfig, HttpBackend, DEFAULT_API_KEY_ENV};
pub use extract::{validate_repair, DraftIssue, DraftRejection};
pub use presets::{default_params, params_for, FAMILY_NAMES};

const DRAFT_PROMPT: &str = include_str!("../../resources/draft_prompt.txt");
const PARAMS_PROMPT: &str = include_str!("../../resources/params_prompt.txt");
const RETRY_PROMPT: &str = include_str!("../../resources/retry_prompt.txt");

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("unknown weave family {0:?}")]
    UnknownFamily(String),
    #[error(transparent)]
    InvalidSpec(#[from] DraftError),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("design rejected: {0}")]
    Rejected(String),
}

/// Flat parameter overrides. Fields left `None` keep the preset value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roughness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specular: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffuse: Option<f64>,
    /// Applies to both families unless a per-family count is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ply_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_ply_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weft_ply_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ply_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ply_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_twist: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sliding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flyaway: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flyaway_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flyaway_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_tint: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weft_tint: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<u32>,
}

/// Keys accepted in a [`ParamsPatch`] document.
pub const PATCH_KEYS: [&str; 19] = [
    "roughness",
    "specular",
    "diffuse",
    "ply_count",
    "warp_ply_count",
    "weft_ply_count",
    "ply_offset",
    "ply_radius",
    "twist_rate",
    "fiber_twist",
    "u_max",
    "width",
    "k_sliding",
    "flyaway",
    "flyaway_threshold",
    "flyaway_weight",
    "warp_tint",
    "weft_tint",
    "repeat",
];

impl ParamsPatch {
    /// Parses the first JSON object in `text`.
    pub fn extract(text: &str) -> Result<Self, String> {
        let mut last = "no JSON object found".to_string();
        for (idx, _) in text.match_indices('{') {
            let mut stream = serde_json::Deserializer::from_str(&text[idx..]).into_iter::<Value>();
            if let Some(Ok(v @ Value::Object(_))) = stream.next() {
                return serde_json::from_value(v).map_err(|e| e.to_string());
            }
            last = "malformed JSON object".to_string();
        }
        Err(last)
    }

    pub fn apply(&self, base: &FabricParams) -> FabricParams {
        let mut p = base.clone();
        self.apply_yarn(&mut p.warp, self.warp_ply_count.or(self.ply_count));
        self.apply_yarn(&mut p.weft, self.weft_ply_count.or(self.ply_count));
        let sh = &mut p.shading;
        set(&mut sh.roughness, self.roughness);
        set(&mut sh.specular, self.specular);
        set(&mut sh.diffuse, self.diffuse);
        set(&mut p.sliding.k_sliding, self.k_sliding);
        set(&mut p.flyaway.enabled, self.flyaway);
        set(&mut p.flyaway.threshold, self.flyaway_threshold);
        set(&mut p.flyaway.weight, self.flyaway_weight);
        set(&mut p.warp_tint, self.warp_tint);
        set(&mut p.weft_tint, self.weft_tint);
        set(&mut p.repeat, self.repeat);
        p
    }

    fn apply_yarn(&self, y: &mut YarnParams, count: Option<usize>) {
        set(&mut y.u_max, self.u_max);
        set(&mut y.ply_radius, self.ply_radius);
        set(&mut y.twist_rate, self.twist_rate);
        set(&mut y.fiber_twist, self.fiber_twist);
        set(&mut y.width, self.width);
        if let Some(k) = count {
            if k != y.ply_count {
                y.ply_count = k;
                y.phases = None;
            }
        }
        match self.ply_offset {
            Some(r) => y.ply_offset = r,
            None if y.ply_count == 1 => y.ply_offset = 0.0,
            None if y.ply_offset == 0.0 => y.ply_offset = 0.6 * y.ply_radius,
            None => {}
        }
    }
}

#[inline]
fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignRequest {
    Structured { pattern: PatternSpec, overrides: ParamsPatch },
    /// With no endpoint the request is served by the keyword fallback.
    FreeText { prompt: String, endpoint: Option<EndpointConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignOptions {
    /// Retries per stage after the first attempt.
    pub max_retries: usize,
    pub fallback: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { max_retries: 3, fallback: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    RuleBased { family: String },
    ExternalEndpoint { model: String, response_digest: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairEntry {
    pub stage: String,
    pub attempt: usize,
    pub issues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub draft: WeavingDraft,
    pub params: FabricParams,
    pub provenance: Provenance,
    pub repair_log: Vec<RepairEntry>,
}

/// Family named by the first matching keyword in `prompt`, else plain.
pub fn keyword_family(prompt: &str) -> &'static str {
    let p = prompt.to_lowercase();
    const TABLE: [(&str, &[&str]); 4] = [
        ("herringbone", &["herringbone", "chevron"]),
        ("satin", &["satin", "sateen", "charmeuse"]),
        ("basket", &["basket", "hopsack", "oxford", "panama"]),
        ("twill", &["twill", "denim", "gabardine", "serge", "drill"]),
    ];
    for (family, words) in TABLE {
        if words.iter().any(|w| p.contains(w)) {
            return family;
        }
    }
    "plain"
}

fn rule_based(prompt: &str) -> Result<DesignResult, DesignError> {
    let name = keyword_family(prompt);
    let family = Family::by_name(name).ok_or_else(|| DesignError::UnknownFamily(name.into()))?;
    let draft = generate_pattern(&PatternSpec::from(family))?;
    Ok(DesignResult {
        draft,
        params: params_for(&family),
        provenance: Provenance::RuleBased { family: name.into() },
        repair_log: Vec::new(),
    })
}

/// Serves a request, building an HTTP backend when an endpoint is configured.
pub fn design(req: &DesignRequest, opts: &DesignOptions) -> Result<DesignResult, DesignError> {
    match req {
        DesignRequest::FreeText { endpoint: Some(cfg), .. } => {
            let backend = HttpBackend::new(cfg.clone());
            design_with(req, Some(&backend), opts)
        }
        _ => design_with(req, None, opts),
    }
}

/// Serves a request against an explicit backend; free text without a backend
/// goes straight to the keyword fallback.
pub fn design_with(
    req: &DesignRequest,
    backend: Option<&dyn ChatBackend>,
    opts: &DesignOptions,
) -> Result<DesignResult, DesignError> {
    match req {
        DesignRequest::Structured { pattern, overrides } => {
            let draft = generate_pattern(pattern)?;
            let params = overrides.apply(&params_for(&pattern.family));
            params.validate().map_err(|e| DesignError::Rejected(e.to_string()))?;
            Ok(DesignResult {
                draft,
                params,
                provenance: Provenance::RuleBased { family: pattern.family.name().into() },
                repair_log: Vec::new(),
            })
        }
        DesignRequest::FreeText { prompt, .. } => match backend {
            None => rule_based(prompt),
            Some(b) => free_text(prompt, b, opts),
        },
    }
}

fn retry_message(issues: &[String]) -> String {
    let list = serde_json::to_string_pretty(issues).expect("strings serialize");
    RETRY_PROMPT.replace("{{VIOLATIONS}}", &list)
}

fn free_text(prompt: &str, backend: &dyn ChatBackend, opts: &DesignOptions) -> Result<DesignResult, DesignError> {
    let mut log = Vec::new();
    let mut responses: Vec<String> = Vec::new();

    let system = DRAFT_PROMPT.replace("{{MAX}}", &MAX_DRAFT_SIZE.to_string());
    let mut messages = vec![ChatMessage::system(system), ChatMessage::user(prompt)];
    let mut draft = None;
    for attempt in 0..=opts.max_retries {
        let raw = match backend.complete(&messages) {
            Ok(r) => r,
            Err(e) if opts.fallback => {
                let mut out = rule_based(prompt)?;
                log.push(RepairEntry { stage: "draft".into(), attempt, issues: vec![e.to_string()] });
                out.repair_log = log;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        responses.push(raw.clone());
        match validate_repair(&raw) {
            Ok(d) => {
                draft = Some(d);
                break;
            }
            Err(rej) => {
                let issues: Vec<String> = match &rej {
                    DraftRejection::Extraction(_) => vec![rej.to_string()],
                    DraftRejection::Violations(v) => v
                        .iter()
                        .map(|i| serde_json::to_string(i).expect("issue serializes"))
                        .collect(),
                };
                messages.push(ChatMessage::assistant(raw));
                messages.push(ChatMessage::user(retry_message(&issues)));
                log.push(RepairEntry { stage: "draft".into(), attempt, issues });
            }
        }
    }
    let Some(draft) = draft else {
        if opts.fallback {
            let mut out = rule_based(prompt)?;
            out.repair_log = log;
            return Ok(out);
        }
        return Err(DesignError::Rejected(format!(
            "no valid draft after {} attempts",
            opts.max_retries + 1
        )));
    };

    let family = keyword_family(prompt);
    let base = default_params(family)?;
    let system = PARAMS_PROMPT
        .replace("{{KEYS}}", &PATCH_KEYS.join(", "))
        .replace("{{DEFAULTS}}", &base.to_json());
    let user = format!("{prompt}\n\nDraft:\n{}", serialize_draft(&draft));
    let mut messages = vec![ChatMessage::system(system), ChatMessage::user(user)];
    let mut params = None;
    for attempt in 0..=opts.max_retries {
        let raw = match backend.complete(&messages) {
            Ok(r) => r,
            Err(e) if opts.fallback => {
                log.push(RepairEntry { stage: "params".into(), attempt, issues: vec![e.to_string()] });
                break;
            }
            Err(e) => return Err(e),
        };
        responses.push(raw.clone());
        let issues = match ParamsPatch::extract(&raw) {
            Ok(patch) => {
                let p = patch.apply(&base);
                let v = p.violations();
                if v.is_empty() {
                    params = Some(p);
                    break;
                }
                v
            }
            Err(e) => vec![e],
        };
        messages.push(ChatMessage::assistant(raw));
        messages.push(ChatMessage::user(retry_message(&issues)));
        log.push(RepairEntry { stage: "params".into(), attempt, issues });
    }
    let params = match params {
        Some(p) => p,
        None if opts.fallback => base,
        None => {
            return Err(DesignError::Rejected(format!(
                "no valid parameters after {} attempts",
                opts.max_retries + 1
            )))
        }
    };

    Ok(DesignResult {
        draft,
        params,
        provenance: Provenance::ExternalEndpoint {
            model: backend.model().to_string(),
            response_digest: digest(&responses),
        },
        repair_log: log,
    })
}

fn digest(responses: &[String]) -> String {
    let mut h = Sha256::new();
    for r in responses {
        h.update((r.len() as u64).to_le_bytes());
        h.update(r.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Backend that replays a fixed list of replies and records what it was sent.
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<Result<String, String>>>,
    sent: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(replies.into_iter().map(|s| Ok(s.into())))
    }

    /// `Err` entries are reported as endpoint failures.
    pub fn with_results(replies: impl IntoIterator<Item = Result<String, String>>) -> Self {
        Self { replies: Mutex::new(replies.into_iter().collect()), sent: Mutex::new(Vec::new()) }
    }

    /// Message lists received so far.
    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.sent.lock().unwrap().clone()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, DesignError> {
        self.sent.lock().unwrap().push(messages.to_vec());
        match self.replies.lock().unwrap().pop_front() {
            Some(Ok(s)) => Ok(s),
            Some(Err(e)) => Err(DesignError::Endpoint(e)),
            None => Err(DesignError::Endpoint("script exhausted".into())),
        }
    }

    fn model(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draft::validate_draft;
    use proptest::prelude::*;

    fn free(prompt: &str) -> DesignRequest {
        DesignRequest::FreeText { prompt: prompt.into(), endpoint: None }
    }

    #[test]
    fn structured_twill() {
        let req = DesignRequest::Structured {
            pattern: Family::Twill { over: 2, under: 2 }.into(),
            overrides: ParamsPatch::default(),
        };
        let r = design(&req, &DesignOptions::default()).unwrap();
        let oracle: Vec<Vec<u8>> =
            (0..4).map(|i| (0..4).map(|j| (((j + 4 - i) % 4) < 2) as u8).collect()).collect();
        assert_eq!(r.draft.to_rows(), oracle);
        assert_eq!(r.params, default_params("twill").unwrap());
        assert_eq!(r, design(&req, &DesignOptions::default()).unwrap());
    }

    #[test]
    fn structured_override_rejected() {
        let req = DesignRequest::Structured {
            pattern: Family::Plain.into(),
            overrides: ParamsPatch { roughness: Some(2.0), ..Default::default() },
        };
        assert!(matches!(design(&req, &DesignOptions::default()), Err(DesignError::Rejected(_))));
    }

    #[test]
    fn keyword_mapping() {
        assert_eq!(keyword_family("Herringbone twill wool"), "herringbone");
        assert_eq!(keyword_family("a glossy SATIN"), "satin");
        assert_eq!(keyword_family("denim jacket"), "twill");
        assert_eq!(keyword_family("oxford shirt"), "basket");
        assert_eq!(keyword_family("xyz"), "plain");
        let r = design(&free("satin"), &DesignOptions::default()).unwrap();
        assert_eq!(r.params, default_params("satin").unwrap());
        assert_eq!(r.provenance, Provenance::RuleBased { family: "satin".into() });
    }

    #[test]
    fn scripted_satin_and_repair() {
        let satin = generate_pattern(&Family::Satin { size: 8, counter: 3 }.into()).unwrap();
        let good = serde_json::to_string(&satin.to_rows()).unwrap();
        let mock = ScriptedBackend::new([
            "[[1,1],[0,1]]".to_string(),
            format!("Sure: {good}"),
            r#"{"roughness": 0.2, "ply_count": 3}"#.to_string(),
        ]);
        let req = DesignRequest::FreeText { prompt: "silky satin".into(), endpoint: None };
        let r = design_with(&req, Some(&mock), &DesignOptions::default()).unwrap();
        assert_eq!(r.draft, satin);
        assert_eq!(r.params.shading.roughness, 0.2);
        assert_eq!(r.params.warp.ply_count, 3);
        assert!(matches!(r.provenance, Provenance::ExternalEndpoint { .. }));
        assert_eq!(r.repair_log.len(), 1);
        let sent = mock.requests();
        assert_eq!(sent.len(), 3);
        assert!(sent[1].last().unwrap().content.contains("floating_row"));
    }

    #[test]
    fn rejection_without_fallback() {
        let mock = ScriptedBackend::new(["nope"; 4]);
        let opts = DesignOptions { max_retries: 3, fallback: false };
        let r = design_with(&free("plain"), Some(&mock), &opts);
        assert!(matches!(r, Err(DesignError::Rejected(_))));
        assert_eq!(mock.requests().len(), 4);

        let down = ScriptedBackend::with_results([Err("connection refused".to_string())]);
        assert!(matches!(design_with(&free("plain"), Some(&down), &opts), Err(DesignError::Endpoint(_))));
    }

    #[test]
    fn endpoint_failure_falls_back() {
        let down = ScriptedBackend::with_results([Err("timeout".to_string())]);
        let r = design_with(&free("basket"), Some(&down), &DesignOptions::default()).unwrap();
        assert_eq!(r.provenance, Provenance::RuleBased { family: "basket".into() });
        assert_eq!(r.repair_log.len(), 1);
    }

    #[test]
    fn bad_params_fall_back_to_preset() {
        let mock = ScriptedBackend::new(["[[1,0],[0,1]]", "{\"roughness\": 5}", "{\"bogus\": 1}", "{", "x"]);
        let r = design_with(&free("twill"), Some(&mock), &DesignOptions::default()).unwrap();
        assert_eq!(r.params, default_params("twill").unwrap());
        assert_eq!(r.repair_log.len(), 4);
    }

    #[test]
    fn patch_single_ply_resets_offset() {
        let base = default_params("twill").unwrap();
        let p = ParamsPatch { ply_count: Some(1), ..Default::default() }.apply(&base);
        assert!(p.violations().is_empty(), "{:?}", p.violations());
        assert_eq!(p.weft.phases, None);
        let plain = default_params("plain").unwrap();
        let p = ParamsPatch { weft_ply_count: Some(3), ..Default::default() }.apply(&plain);
        assert!(p.violations().is_empty());
        assert_eq!((p.warp.ply_count, p.weft.ply_count), (1, 3));
    }

    #[test]
    fn patch_keys_match_fields() {
        let full = ParamsPatch {
            roughness: Some(0.5),
            specular: Some(0.1),
            diffuse: Some(0.5),
            ply_count: Some(2),
            warp_ply_count: Some(2),
            weft_ply_count: Some(2),
            ply_offset: Some(0.1),
            ply_radius: Some(0.2),
            twist_rate: Some(1.0),
            fiber_twist: Some(0.1),
            u_max: Some(0.5),
            width: Some(0.9),
            k_sliding: Some(0.1),
            flyaway: Some(true),
            flyaway_threshold: Some(0.5),
            flyaway_weight: Some(0.1),
            warp_tint: Some([1.0; 3]),
            weft_tint: Some([1.0; 3]),
            repeat: Some(2),
        };
        let v = serde_json::to_value(&full).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        let mut expected = PATCH_KEYS.to_vec();
        expected.sort();
        assert_eq!(keys, expected);
    }

    fn arb_reply() -> impl Strategy<Value = String> {
        prop_oneof![
            ".*",
            proptest::collection::vec(proptest::collection::vec(0u8..3, 0..18), 0..18)
                .prop_map(|m| serde_json::to_string(&m).unwrap()),
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), 1..6), 1..6)
                .prop_map(|m| format!("draft: {}", serde_json::to_string(&m).unwrap())),
            (-1.0f64..2.0, 0usize..10).prop_map(|(r, k)| format!("{{\"roughness\": {r}, \"ply_count\": {k}}}")),
        ]
    }

    proptest! {
        #[test]
        fn fallback_never_fails(prompt in ".*") {
            let r = design(&free(&prompt), &DesignOptions::default()).unwrap();
            prop_assert!(validate_draft(&r.draft).is_valid());
        }

        #[test]
        fn fuzzed_endpoint_yields_valid_designs(replies in proptest::collection::vec(arb_reply(), 0..10), fallback: bool) {
            let mock = ScriptedBackend::new(replies);
            let opts = DesignOptions { max_retries: 3, fallback };
            match design_with(&free("cloth"), Some(&mock), &opts) {
                Ok(r) => {
                    prop_assert!(validate_draft(&r.draft).is_valid());
                    prop_assert!(r.params.violations().is_empty());
                }
                Err(e) => prop_assert!(!fallback, "{e}"),
            }
        }
    }
}
