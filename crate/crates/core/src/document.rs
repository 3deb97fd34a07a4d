//! JSON documents for MDP and Markov reward process instances.
//!
//! Numbers may be given as JSON numbers or as strings (`"0.25"`, `"1/4"`,
//! `"-3e2"`); they are stored exactly and always written back as strings.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, Outcome, RewardKind};
use crate::mrp::{MarkovRewardProcess, MrpReward};
use crate::rational::{self, Rational};

/// Version of the document layout; written to and checked on every document.
pub const SCHEMA_VERSION: u32 = 1;

/// An exact number in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Num(pub Rational);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational::format(&self.0))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a decimal/rational string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                rational::parse(v).map(Num).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(rational::int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(Rational::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                rational::from_f64_decimal(v).map(Num).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub x: String,
    pub a: String,
    pub y: String,
    pub p: Num,
    pub r: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub horizon: usize,
    pub states: Vec<String>,
    /// Action names per state, in state order.
    pub actions: Vec<Vec<String>>,
    pub transitions: Vec<TransitionEntry>,
    pub mu0: Vec<Num>,
    /// Defaults to zero everywhere.
    #[serde(default)]
    pub salvage: Option<Vec<Num>>,
    pub reward_kind: RewardKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardOn {
    State,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateReward {
    pub x: String,
    pub r: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTransition {
    pub x: String,
    pub y: String,
    pub p: Num,
    /// Required when rewards are on transitions, forbidden otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrpDocument {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub horizon: usize,
    pub states: Vec<String>,
    pub transitions: Vec<ChainTransition>,
    pub reward_on: RewardOn,
    /// Per-state rewards when `reward_on` is `state`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<StateReward>>,
    pub mu0: Vec<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salvage: Option<Vec<Num>>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Document(msg.into())
}

/// Deserializes with the path of the offending field in the error.
fn from_json_at<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            parse_err(inner.to_string())
        } else {
            parse_err(format!("{path}: {inner}"))
        }
    })?;
    de.end().map_err(|e| parse_err(e.to_string()))?;
    Ok(value)
}

fn check_schema(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(parse_err(format!(
            "unsupported schema version {v}; this build reads version {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

fn index_of(names: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, s) in names.iter().enumerate() {
        if map.insert(s.clone(), i).is_some() {
            return Err(parse_err(format!("duplicate {what} name `{s}`")));
        }
    }
    Ok(map)
}

fn lookup(map: &HashMap<String, usize>, name: &str, field: &str) -> Result<usize> {
    map.get(name)
        .copied()
        .ok_or_else(|| parse_err(format!("{field}: unknown name `{name}`")))
}

fn nums(v: &[Num]) -> Vec<Rational> {
    v.iter().map(|n| n.0.clone()).collect()
}

fn to_nums(v: &[Rational]) -> Vec<Num> {
    v.iter().cloned().map(Num).collect()
}

impl MdpDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json_at(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn to_mdp(&self) -> Result<FiniteMdp> {
        check_schema(self.schema)?;
        let n = self.states.len();
        let states = index_of(&self.states, "state")?;
        if self.actions.len() != n {
            return Err(parse_err(format!(
                "actions: expected one list per state ({n}), got {}",
                self.actions.len()
            )));
        }
        if self.transitions.is_empty() {
            return Err(parse_err("transitions: list is empty"));
        }
        let action_maps = self
            .actions
            .iter()
            .zip(&self.states)
            .map(|(acts, s)| index_of(acts, &format!("action of state `{s}`")))
            .collect::<Result<Vec<_>>>()?;
        let mut outcomes: Vec<Vec<Vec<Outcome>>> = self
            .actions
            .iter()
            .map(|a| vec![Vec::new(); a.len()])
            .collect();
        for (k, t) in self.transitions.iter().enumerate() {
            let field = format!("transitions[{k}]");
            let x = lookup(&states, &t.x, &format!("{field}.x"))?;
            let a = lookup(&action_maps[x], &t.a, &format!("{field}.a"))?;
            let y = lookup(&states, &t.y, &format!("{field}.y"))?;
            outcomes[x][a].push(Outcome {
                next: y,
                prob: t.p.0.clone(),
                reward: t.r.0.clone(),
            });
        }
        let salvage = match &self.salvage {
            Some(v) => nums(v),
            None => vec![Rational::zero(); n],
        };
        FiniteMdp::new(
            self.horizon,
            self.states.clone(),
            self.actions.clone(),
            outcomes,
            self.reward_kind,
            nums(&self.mu0),
            salvage,
        )
    }

    pub fn from_mdp(mdp: &FiniteMdp) -> Self {
        let mut transitions = Vec::new();
        for x in 0..mdp.num_states() {
            for a in 0..mdp.num_actions(x) {
                for o in mdp.outcomes(x, a) {
                    transitions.push(TransitionEntry {
                        x: mdp.state_name(x).to_string(),
                        a: mdp.action_names(x)[a].clone(),
                        y: mdp.state_name(o.next).to_string(),
                        p: Num(o.prob.clone()),
                        r: Num(o.reward.clone()),
                    });
                }
            }
        }
        Self {
            schema: SCHEMA_VERSION,
            horizon: mdp.horizon(),
            states: mdp.state_names().to_vec(),
            actions: (0..mdp.num_states())
                .map(|x| mdp.action_names(x).to_vec())
                .collect(),
            transitions,
            mu0: to_nums(mdp.mu0()),
            salvage: Some(to_nums(mdp.salvage())),
            reward_kind: mdp.kind(),
        }
    }
}

impl MrpDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json_at(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn to_mrp(&self) -> Result<MarkovRewardProcess> {
        check_schema(self.schema)?;
        let n = self.states.len();
        let states = index_of(&self.states, "state")?;
        if self.transitions.is_empty() {
            return Err(parse_err("transitions: list is empty"));
        }
        let mut kernel = vec![vec![Rational::zero(); n]; n];
        let mut trans_reward = vec![vec![Rational::zero(); n]; n];
        let mut seen = vec![vec![false; n]; n];
        for (k, t) in self.transitions.iter().enumerate() {
            let field = format!("transitions[{k}]");
            let x = lookup(&states, &t.x, &format!("{field}.x"))?;
            let y = lookup(&states, &t.y, &format!("{field}.y"))?;
            if std::mem::replace(&mut seen[x][y], true) {
                return Err(parse_err(format!(
                    "{field}: duplicate transition {} -> {}",
                    t.x, t.y
                )));
            }
            kernel[x][y] = t.p.0.clone();
            match (self.reward_on, &t.r) {
                (RewardOn::Transition, Some(r)) => trans_reward[x][y] = r.0.clone(),
                (RewardOn::Transition, None) => {
                    return Err(parse_err(format!(
                        "{field}.r: required when reward_on is transition"
                    )))
                }
                (RewardOn::State, Some(_)) => {
                    return Err(parse_err(format!(
                        "{field}.r: not allowed when reward_on is state"
                    )))
                }
                (RewardOn::State, None) => {}
            }
        }
        let reward = match self.reward_on {
            RewardOn::Transition => {
                if self.rewards.is_some() {
                    return Err(parse_err(
                        "rewards: not allowed when reward_on is transition",
                    ));
                }
                MrpReward::Transition(trans_reward)
            }
            RewardOn::State => {
                let list = self
                    .rewards
                    .as_ref()
                    .ok_or_else(|| parse_err("rewards: required when reward_on is state"))?;
                let mut r = vec![None; n];
                for (k, e) in list.iter().enumerate() {
                    let x = lookup(&states, &e.x, &format!("rewards[{k}].x"))?;
                    if r[x].replace(e.r.0.clone()).is_some() {
                        return Err(parse_err(format!(
                            "rewards[{k}]: duplicate state `{}`",
                            e.x
                        )));
                    }
                }
                let r = r
                    .into_iter()
                    .enumerate()
                    .map(|(x, v)| {
                        v.ok_or_else(|| {
                            parse_err(format!("rewards: missing state `{}`", self.states[x]))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                MrpReward::State(r)
            }
        };
        MarkovRewardProcess::new(
            self.horizon,
            self.states.clone(),
            kernel,
            reward,
            nums(&self.mu0),
            self.salvage.as_deref().map(nums),
        )
    }

    pub fn from_mrp(mrp: &MarkovRewardProcess) -> Self {
        let names = mrp.state_names();
        let transitions = (0..mrp.num_states())
            .flat_map(|x| {
                mrp.successors(x).map(move |(y, p)| ChainTransition {
                    x: names[x].clone(),
                    y: names[y].clone(),
                    p: Num(p.clone()),
                    r: mrp
                        .is_transition_rewarded()
                        .then(|| Num(mrp.step_reward(x, y).clone())),
                })
            })
            .collect();
        let (reward_on, rewards) = match mrp.reward() {
            MrpReward::Transition(_) => (RewardOn::Transition, None),
            MrpReward::State(r) => (
                RewardOn::State,
                Some(
                    names
                        .iter()
                        .zip(r)
                        .map(|(x, r)| StateReward {
                            x: x.clone(),
                            r: Num(r.clone()),
                        })
                        .collect(),
                ),
            ),
        };
        Self {
            schema: SCHEMA_VERSION,
            horizon: mrp.horizon(),
            states: names.to_vec(),
            transitions,
            reward_on,
            rewards,
            mu0: to_nums(mrp.mu0()),
            salvage: mrp.salvage().map(to_nums),
        }
    }
}

/// Parses either document kind, deciding by the presence of `reward_kind`.
pub enum AnyDocument {
    Mdp(FiniteMdp),
    Mrp(MarkovRewardProcess),
}

pub fn parse_any(text: &str) -> Result<AnyDocument> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    if value.get("reward_kind").is_some() {
        Ok(AnyDocument::Mdp(MdpDocument::from_json(text)?.to_mdp()?))
    } else {
        Ok(AnyDocument::Mrp(MrpDocument::from_json(text)?.to_mrp()?))
    }
}
