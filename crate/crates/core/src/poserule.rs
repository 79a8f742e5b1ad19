//! "Person standing in water above the knee" from body keypoints.
//!
//! The rule reads knee-deep water as occlusion: a person whose hips are
//! confidently detected while both knees and both ankles are missing or
//! barely detected is taken to be standing in water above knee height.
//! A geometric alternative (comparing knee y-coordinates against a detected
//! water line) is not implemented.
//!
//! Keypoint documents are JSON:
//!
//! ```json
//! { "people": [ { "left_hip": [x, y, confidence], "right_knee": null, ... } ] }
//! ```
//!
//! Joint names are free-form; the rule reads `left_hip`, `right_hip`,
//! `left_knee`, `right_knee`, `left_ankle` and `right_ankle`. A joint that is
//! absent or `null` counts as not detected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersonKeypoints {
    pub joints: BTreeMap<String, Keypoint>,
}

impl PersonKeypoints {
    pub fn with(mut self, joint: &str, x: f64, y: f64, confidence: f64) -> Self {
        self.joints.insert(joint.to_owned(), Keypoint { x, y, confidence });
        self
    }

    fn confidence(&self, joint: &str) -> Option<f64> {
        self.joints.get(joint).map(|k| k.confidence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRuleConfig {
    pub conf_present: f64,
    pub conf_absent: f64,
}

impl Default for PoseRuleConfig {
    fn default() -> Self {
        Self { conf_present: 0.3, conf_absent: 0.1 }
    }
}

impl PoseRuleConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.conf_present)
            || !unit.contains(&self.conf_absent)
            || self.conf_absent >= self.conf_present
        {
            return Err(Error::arg("pose thresholds need 0 <= conf_absent < conf_present <= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    HipVisible,
    KneesHidden,
    AnklesHidden,
}

impl Clause {
    pub fn as_str(self) -> &'static str {
        match self {
            Clause::HipVisible => "hip_visible",
            Clause::KneesHidden => "knees_hidden",
            Clause::AnklesHidden => "ankles_hidden",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersonVerdict {
    pub person: usize,
    pub above_knee: bool,
    /// Clauses of the rule this person did not satisfy.
    pub failed: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseDecision {
    pub decision: u8,
    pub people: Vec<PersonVerdict>,
}

fn judge(index: usize, p: &PersonKeypoints, cfg: &PoseRuleConfig) -> PersonVerdict {
    let hidden = |joint: &str| p.confidence(joint).is_none_or(|c| c <= cfg.conf_absent);
    let mut failed = Vec::new();
    let hip = ["left_hip", "right_hip"].iter().any(|j| p.confidence(j).is_some_and(|c| c >= cfg.conf_present));
    if !hip {
        failed.push(Clause::HipVisible);
    }
    if !(hidden("left_knee") && hidden("right_knee")) {
        failed.push(Clause::KneesHidden);
    }
    if !(hidden("left_ankle") && hidden("right_ankle")) {
        failed.push(Clause::AnklesHidden);
    }
    PersonVerdict { person: index, above_knee: failed.is_empty(), failed }
}

/// 1 when at least one person satisfies the occlusion rule, with a
/// per-person account of the clauses that failed.
pub fn above_knee_decision(people: &[PersonKeypoints], cfg: &PoseRuleConfig) -> PoseDecision {
    let verdicts: Vec<PersonVerdict> = people.iter().enumerate().map(|(i, p)| judge(i, p, cfg)).collect();
    let decision = u8::from(verdicts.iter().any(|v| v.above_knee));
    PoseDecision { decision, people: verdicts }
}

fn parse_person(index: usize, value: &Value) -> Result<PersonKeypoints> {
    let bad = |msg: String| Error::data(format!("person {index}: {msg}"));
    let obj = value.as_object().ok_or_else(|| bad("expected an object of joints".into()))?;
    let mut person = PersonKeypoints::default();
    for (joint, kp) in obj {
        if kp.is_null() {
            continue;
        }
        let triple = kp
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| bad(format!("joint {joint:?} must be [x, y, confidence] or null")))?;
        let nums: Vec<f64> = triple
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| bad(format!("joint {joint:?} has a non-numeric entry"))))
            .collect::<Result<_>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("joint {joint:?} has non-finite values")));
        }
        if !(0.0..=1.0).contains(&nums[2]) {
            return Err(bad(format!("joint {joint:?} confidence {} outside [0, 1]", nums[2])));
        }
        person.joints.insert(joint.clone(), Keypoint { x: nums[0], y: nums[1], confidence: nums[2] });
    }
    Ok(person)
}

pub fn parse_keypoints(text: &str) -> Result<Vec<PersonKeypoints>> {
    let doc: Value = serde_json::from_str(text)?;
    let people = doc
        .get("people")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::data("keypoint document needs a \"people\" array"))?;
    people.iter().enumerate().map(|(i, p)| parse_person(i, p)).collect()
}

pub fn keypoints_to_json(people: &[PersonKeypoints]) -> String {
    let people: Vec<BTreeMap<&str, [f64; 3]>> =
        people.iter().map(|p| p.joints.iter().map(|(j, k)| (j.as_str(), [k.x, k.y, k.confidence])).collect()).collect();
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "people": people })).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wader() -> PersonKeypoints {
        PersonKeypoints::default().with("left_hip", 10.0, 50.0, 0.9).with("left_knee", 10.0, 80.0, 0.05).with(
            "right_knee",
            20.0,
            80.0,
            0.05,
        )
    }

    #[test]
    fn documented_cases() {
        let cfg = PoseRuleConfig::default();
        assert_eq!(above_knee_decision(&[], &cfg).decision, 0);
        assert_eq!(above_knee_decision(&[wader()], &cfg).decision, 1);
        let standing = PersonKeypoints::default().with("left_hip", 0.0, 0.0, 0.9).with("left_knee", 0.0, 1.0, 0.8);
        let d = above_knee_decision(&[standing], &cfg);
        assert_eq!(d.decision, 0);
        assert_eq!(d.people[0].failed, vec![Clause::KneesHidden]);
    }

    #[test]
    fn rationale_lists_every_failed_clause() {
        let nobody = PersonKeypoints::default().with("left_ankle", 0.0, 0.0, 0.5);
        let d = above_knee_decision(&[nobody], &PoseRuleConfig::default());
        assert_eq!(d.people[0].failed, vec![Clause::HipVisible, Clause::AnklesHidden]);
    }

    #[test]
    fn parse_and_errors() {
        let text = r#"{"people": [{"left_hip": [1, 2, 0.9], "right_knee": null}, {}]}"#;
        let people = parse_keypoints(text).unwrap();
        assert_eq!(people.len(), 2);
        assert_eq!(people[0].joints.len(), 1);
        let err = parse_keypoints(r#"{"people": [{}, {"left_hip": [1, 2]}]}"#).unwrap_err();
        assert!(err.to_string().contains("person 1"), "{err}");
        assert!(parse_keypoints(r#"{"people": [{"left_hip": [1, 2, 1.5]}]}"#).is_err());
        assert!(parse_keypoints(r#"{"persons": []}"#).is_err());
        assert_eq!(parse_keypoints(&keypoints_to_json(&[wader()])).unwrap(), vec![wader()]);
    }

    #[test]
    fn config_validation() {
        assert!(PoseRuleConfig::default().validate().is_ok());
        assert!(PoseRuleConfig { conf_present: 0.1, conf_absent: 0.3 }.validate().is_err());
    }

    fn arb_person() -> impl Strategy<Value = PersonKeypoints> {
        let joints = ["left_hip", "right_hip", "left_knee", "right_knee", "left_ankle", "right_ankle"];
        prop::collection::vec(prop::option::of(0.0f64..=1.0), 6).prop_map(move |confs| {
            let mut p = PersonKeypoints::default();
            for (j, c) in joints.iter().zip(confs) {
                if let Some(c) = c {
                    p = p.with(j, 0.0, 0.0, c);
                }
            }
            p
        })
    }

    proptest! {
        #[test]
        fn lowering_lower_body_confidence_never_unflags(p in arb_person(), factor in 0.0f64..1.0) {
            let cfg = PoseRuleConfig::default();
            let before = above_knee_decision(std::slice::from_ref(&p), &cfg).decision;
            let mut lowered = p;
            for j in ["left_knee", "right_knee", "left_ankle", "right_ankle"] {
                if let Some(k) = lowered.joints.get_mut(j) {
                    k.confidence *= factor;
                }
            }
            let after = above_knee_decision(&[lowered], &cfg).decision;
            prop_assert!(after >= before);
        }

        #[test]
        fn list_decision_is_or(people in prop::collection::vec(arb_person(), 0..6), split in 0usize..6) {
            let cfg = PoseRuleConfig::default();
            let whole = above_knee_decision(&people, &cfg).decision;
            let singles = people.iter().map(|p| above_knee_decision(std::slice::from_ref(p), &cfg).decision).max().unwrap_or(0);
            prop_assert_eq!(whole, singles);
            let cut = split.min(people.len());
            let (a, b) = people.split_at(cut);
            let parts = above_knee_decision(a, &cfg).decision.max(above_knee_decision(b, &cfg).decision);
            prop_assert_eq!(whole, parts);
            let mut rev = people.clone();
            rev.reverse();
            prop_assert_eq!(above_knee_decision(&rev, &cfg).decision, whole);
        }
    }
}
