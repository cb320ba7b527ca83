//! `.proof` files: a JSON tree whose leaves are the text grammars of
//! programs and expectations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AstMode, Judgement, Payload, ProofNode, Rule};
use crate::error::{Error, Result};
use crate::expectation::parse_expectation;
use crate::syntax::{fmt_rational, parse_prob, parse_program, Parser};
use crate::{Expectation, Rat};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    rule: String,
    #[serde(default, skip_serializing_if = "RawPayload::is_empty")]
    payload: RawPayload,
    #[serde(default)]
    premises: Vec<RawNode>,
    judgement: RawJudgement,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loop_invariant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ast: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<String>,
}

impl RawPayload {
    fn is_empty(&self) -> bool {
        [&self.mid, &self.loop_invariant, &self.pi, &self.frame, &self.a, &self.ast, &self.weight]
            .iter()
            .all(|f| f.is_none())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJudgement {
    pre: String,
    cmd: String,
    post: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    invariant: Option<String>,
}

fn at<T>(path: &str, what: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Input(format!("{path}: {what}: {e}")))
}

fn exp_at(path: &str, what: &str, text: &str) -> Result<Expectation> {
    at(path, what, parse_expectation(text))
}

fn rational(text: &str) -> Result<Rat> {
    let mut p = Parser::new(text)?;
    let q = p.rational()?;
    p.expect_eof()?;
    Ok(q)
}

fn convert(raw: RawNode, path: &str) -> Result<ProofNode> {
    let rule: Rule = at(path, "rule", raw.rule.parse())?;
    if raw.premises.len() != rule.arity() {
        return Err(Error::Input(format!(
            "{path}: rule {rule} takes {} premises, found {}",
            rule.arity(),
            raw.premises.len()
        )));
    }
    let j = raw.judgement;
    let conclusion = Judgement {
        pre: exp_at(path, "pre", &j.pre)?,
        cmd: at(path, "cmd", parse_program(&j.cmd))?,
        post: exp_at(path, "post", &j.post)?,
        invariant: j.invariant.map(|i| exp_at(path, "invariant", &i)).transpose()?,
    };
    let p = raw.payload;
    let opt = |what: &str, v: Option<String>| v.map(|t| exp_at(path, what, &t)).transpose();
    let payload = Payload {
        mid: opt("mid", p.mid)?,
        loop_invariant: opt("loop_invariant", p.loop_invariant)?,
        pi: opt("pi", p.pi)?,
        frame: opt("frame", p.frame)?,
        scalar: p.a.map(|t| at(path, "a", rational(&t))).transpose()?,
        ast: match p.ast.as_deref() {
            None | Some("verify") => AstMode::Verify,
            Some("assert") => AstMode::Assert,
            Some(other) => return Err(Error::Input(format!("{path}: ast must be `verify` or `assert`, not `{other}`"))),
        },
        weight: p.weight.map(|t| at(path, "weight", parse_prob(&t))).transpose()?,
    };
    let premises = raw
        .premises
        .into_iter()
        .enumerate()
        .map(|(i, n)| convert(n, &format!("{path}.{i}")))
        .collect::<Result<_>>()?;
    Ok(ProofNode { rule, payload, premises, conclusion })
}

/// Parses and validates a proof document: known rules, correct premise
/// counts, and well-formed programs and expectations.
pub fn parse_proof(text: &str) -> Result<ProofNode> {
    let raw: RawNode = serde_json::from_str(text).map_err(|e| Error::Input(format!("proof schema: {e}")))?;
    convert(raw, "root")
}

pub fn load_proof(path: &Path) -> Result<ProofNode> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_proof(&text)
}

fn unconvert(n: &ProofNode) -> RawNode {
    let c = &n.conclusion;
    let p = &n.payload;
    let show = |e: &Option<Expectation>| e.as_ref().map(|e| e.to_string());
    RawNode {
        rule: n.rule.name().to_string(),
        payload: RawPayload {
            mid: show(&p.mid),
            loop_invariant: show(&p.loop_invariant),
            pi: show(&p.pi),
            frame: show(&p.frame),
            a: p.scalar.as_ref().map(fmt_rational),
            ast: (p.ast == AstMode::Assert).then(|| "assert".to_string()),
            weight: p.weight.as_ref().map(|w| w.to_string()),
        },
        premises: n.premises.iter().map(unconvert).collect(),
        judgement: RawJudgement {
            pre: c.pre.to_string(),
            cmd: c.cmd.to_string(),
            post: c.post.to_string(),
            invariant: show(&c.invariant),
        },
    }
}

pub fn proof_to_json(n: &ProofNode) -> String {
    serde_json::to_string_pretty(&unconvert(n)).expect("proof trees serialize")
}

pub fn save_proof(n: &ProofNode, path: &Path) -> Result<()> {
    std::fs::write(path, proof_to_json(n) + "\n").map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}
