use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::semantics::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bounded,
    Unlimited,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Bounded => "bounded",
            Mode::Unlimited => "unlimited",
        })
    }
}

/// Which solver produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteForce,
    DownForest,
    UpForest,
    BalancedDown,
    BalancedUp,
    DownForestUnlimited,
    UpForestUnlimited,
    DagUnlimited,
    MultiForest,
    MultiBalancedTree,
    MultiBalancedForest,
    MultiBruteForce,
    MultiUnlimited,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("method serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// A chosen question set with its worst-case candidate size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub variant: Variant,
    pub mode: Mode,
    /// Budget the plan was asked for; `None` for unlimited plans.
    pub k: Option<usize>,
    pub method: Method,
    /// Additive bound of `wcase` over the true optimum.
    pub slack: u8,
    pub wcase: usize,
    /// Question nodes in ascending index order.
    pub questions: Vec<NodeId>,
}

impl Plan {
    pub(crate) fn bounded(
        variant: Variant,
        k: usize,
        method: Method,
        wcase: usize,
        mut questions: Vec<NodeId>,
    ) -> Plan {
        questions.sort_unstable();
        Plan {
            variant,
            mode: Mode::Bounded,
            k: Some(k),
            method,
            slack: 0,
            wcase,
            questions,
        }
    }

    pub(crate) fn unlimited(
        variant: Variant,
        method: Method,
        wcase: usize,
        mut questions: Vec<NodeId>,
    ) -> Plan {
        questions.sort_unstable();
        Plan {
            variant,
            mode: Mode::Unlimited,
            k: None,
            method,
            slack: 0,
            wcase,
            questions,
        }
    }

    pub fn to_record(&self, dag: &Dag) -> PlanRecord {
        let mut questions: Vec<String> = self
            .questions
            .iter()
            .map(|&q| dag.name(q).to_owned())
            .collect();
        questions.sort();
        PlanRecord {
            variant: self.variant,
            mode: self.mode,
            k: self.k,
            method: self.method,
            slack: self.slack,
            wcase: self.wcase,
            questions,
        }
    }

    pub fn to_json(&self, dag: &Dag) -> String {
        serde_json::to_string_pretty(&self.to_record(dag)).expect("plan serializes")
    }

    pub fn from_json(json: &str, dag: &Dag) -> Result<Plan> {
        let record: PlanRecord = serde_json::from_str(json).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        record.resolve(dag)
    }
}

/// Serialized form of a [`Plan`], with question names sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub variant: Variant,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub method: Method,
    pub slack: u8,
    pub wcase: usize,
    pub questions: Vec<String>,
}

impl PlanRecord {
    pub fn resolve(&self, dag: &Dag) -> Result<Plan> {
        let mut questions = Vec::with_capacity(self.questions.len());
        for name in &self.questions {
            questions.push(
                dag.node(name)
                    .ok_or_else(|| Error::UnknownNode(name.clone()))?,
            );
        }
        questions.sort_unstable();
        questions.dedup();
        Ok(Plan {
            variant: self.variant,
            mode: self.mode,
            k: self.k,
            method: self.method,
            slack: self.slack,
            wcase: self.wcase,
            questions,
        })
    }
}
