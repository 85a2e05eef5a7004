//! JSON forms of explanations and lexicons.

use std::path::Path;

use failex_core::explain::{describe_level, Phrase};
use failex_core::{Assignment, BayesNet, Direction, Error as CoreError, ExplanationResult, Lexicon};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_json;
use crate::model::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelJson {
    pub level: usize,
    pub interval: String,
}

/// Parent name to level, kept in parent order.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentJson(pub Vec<(String, LevelJson)>);

impl Serialize for AssignmentJson {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeJson {
    pub var: String,
    pub from: String,
    pub to: String,
    pub direction: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationJson {
    pub schema_version: u32,
    pub failure: AssignmentJson,
    pub solution: AssignmentJson,
    pub p_failure: f64,
    pub p_solution: f64,
    pub depth: usize,
    pub changes: Vec<ChangeJson>,
    pub failure_zero_support: bool,
    pub solution_zero_support: bool,
    pub text: String,
}

pub fn assignment_json(net: &BayesNet, a: &Assignment) -> Result<AssignmentJson> {
    a.iter()
        .map(|(name, level)| {
            let interval = describe_level(net.scheme(), name, level)?;
            Ok((name.to_string(), LevelJson { level, interval }))
        })
        .collect::<Result<Vec<_>>>()
        .map(AssignmentJson)
}

pub fn explanation_json(net: &BayesNet, res: &ExplanationResult, text: &str) -> Result<ExplanationJson> {
    let changes = res
        .changes
        .iter()
        .map(|c| {
            Ok(ChangeJson {
                var: c.variable.clone(),
                from: describe_level(net.scheme(), &c.variable, c.from)?,
                to: describe_level(net.scheme(), &c.variable, c.to)?,
                direction: c.direction.as_str(),
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    Ok(ExplanationJson {
        schema_version: SCHEMA_VERSION,
        failure: assignment_json(net, &res.failure)?,
        solution: assignment_json(net, &res.solution)?,
        p_failure: res.p_failure,
        p_solution: res.p_solution,
        depth: res.depth,
        changes,
        failure_zero_support: res.failure_zero_support,
        solution_zero_support: res.solution_zero_support,
        text: text.to_string(),
    })
}

/// `name=interval` pairs, e.g. for the no-solution report.
pub fn describe_assignment(net: &BayesNet, a: &Assignment) -> Result<String> {
    Ok(assignment_json(net, a)?
        .0
        .into_iter()
        .map(|(n, l)| format!("{n}={}", l.interval))
        .collect::<Vec<_>>()
        .join(", "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhraseJson {
    var: String,
    direction: String,
    text: String,
    locative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconJson {
    schema_version: u32,
    subject: String,
    locative: String,
    no_failure: String,
    phrases: Vec<PhraseJson>,
}

pub fn lexicon_to_json(lex: &Lexicon) -> String {
    let doc = LexiconJson {
        schema_version: SCHEMA_VERSION,
        subject: lex.subject.clone(),
        locative: lex.locative.clone(),
        no_failure: lex.no_failure.clone(),
        phrases: lex
            .phrases
            .iter()
            .map(|p| PhraseJson {
                var: p.variable.clone(),
                direction: p.direction.as_str().to_string(),
                text: p.text.clone(),
                locative: p.locative,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("lexicon serializes");
    s.push('\n');
    s
}

fn lexicon_from_doc(doc: LexiconJson) -> Result<Lexicon> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::input(format!("unsupported lexicon schema_version {}", doc.schema_version)));
    }
    let phrases = doc
        .phrases
        .into_iter()
        .map(|p| {
            let direction = Direction::parse(&p.direction)
                .ok_or_else(|| Error::input(format!("unknown direction `{}` for `{}`", p.direction, p.var)))?;
            Ok(Phrase { variable: p.var, direction, text: p.text, locative: p.locative })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Lexicon { subject: doc.subject, locative: doc.locative, no_failure: doc.no_failure, phrases })
}

pub fn lexicon_from_json(text: &str) -> Result<Lexicon> {
    lexicon_from_doc(serde_json::from_str(text).map_err(|e| Error::input(format!("lexicon JSON: {e}")))?)
}

pub fn read_lexicon(path: &Path) -> Result<Lexicon> {
    lexicon_from_doc(read_json(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_round_trip() {
        let lex = Lexicon::stacking();
        let text = lexicon_to_json(&lex);
        assert_eq!(lexicon_from_json(&text).unwrap(), lex);
        assert!(text.contains("\"too far to the front\""));
    }

    #[test]
    fn shipped_lexicon_matches_default() {
        let text = include_str!("../../../fixtures/lexicon_stacking.json");
        assert_eq!(lexicon_from_json(text).unwrap(), Lexicon::stacking());
    }

    #[test]
    fn bad_direction_rejected() {
        let text = lexicon_to_json(&Lexicon::stacking()).replace("\"decrease\"", "\"down\"");
        assert!(lexicon_from_json(&text).is_err());
    }

    #[test]
    fn assignment_keeps_order() {
        let a = AssignmentJson(vec![
            ("z".into(), LevelJson { level: 1, interval: "(1,2]".into() }),
            ("a".into(), LevelJson { level: 0, interval: "[0,1]".into() }),
        ]);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            r#"{"z":{"level":1,"interval":"(1,2]"},"a":{"level":0,"interval":"[0,1]"}}"#
        );
    }
}
